"""Registry of every experiment the CLI can run, keyed by its config name."""

from collections.abc import Callable
from dataclasses import dataclass

from . import experiments
from .experiments import RunContext
from .report import ReportRow


@dataclass(frozen=True)
class Experiment:
    name: str
    """Value of ``name`` in the ``[experiment]`` section."""

    run: Callable[[RunContext], list[ReportRow]]
    """Produces the report rows; every row's pass flag counts toward the exit status."""

    summary: str
    """One line for ``gemdiff list-experiments``."""


def _entry(name: str, run: Callable[[RunContext], list[ReportRow]], summary: str) -> tuple[str, Experiment]:
    return name, Experiment(name, run, summary)


EXPERIMENTS: dict[str, Experiment] = dict([
    _entry("wf-stationarity", experiments.wf_stationarity,
           "Wright-Fisher endpoints vs Beta(2a,2b), eigenfunction decay, scale function"),
    _entry("gem-identities", experiments.gem_identities,
           "GEM moments, size-biased ranked weights vs GEM, largest-atom oracle"),
    _entry("generator-consistency", experiments.generator_consistency,
           "coefficient identities and L_n(f o phi) = (Lf) o phi on cylinder polynomials"),
    _entry("coeff-bounds", experiments.coeff_bounds,
           "sum |a_ij| <= 3 and the drift bound at random and near-boundary points"),
    _entry("integration-by-parts", experiments.integration_by_parts,
           "E[Gamma(f,g)] = -E[f Lg] under the stationary law"),
    _entry("variance-decay", experiments.variance_decay,
           "Var(P_t y1) decay rate against the spectral gap"),
    _entry("entropy-decay", experiments.entropy_decay,
           "Ent(P_t f) against the log-Sobolev envelope"),
    _entry("dirichlet-stationarity", experiments.dirichlet_stationarity,
           "measure-valued process moments vs the Dirichlet law, mass conservation"),
    _entry("esf-check", experiments.esf_check,
           "allelic partition frequencies vs the Ewens sampling formula"),
    _entry("functional-bounds", experiments.functional_bounds,
           "static Poincare and log-Sobolev checks, reported constants"),
    _entry("gem-reversibility", experiments.gem_reversibility,
           "paired reversibility estimators for the GEM process"),
])

__all__ = ["EXPERIMENTS", "Experiment"]
