"""Simulation and certification toolkit for constrained spin dynamics,
noisy consensus processes, and their combinatorial certificates on
expander-like planar patches and regular trees."""

from kcmlab.graphs import (
    Graph,
    build_hyperbolic,
    build_tree,
    phi_e_formula,
    alpha_lower,
    compute_jbar,
    brute_force_boundary_ratio,
    expansion_report,
    is_bipartite,
)
from kcmlab.classify import (
    classify,
    tree_inputs,
    hyperbolic_inputs,
    hyperbolic_case_table,
)
from kcmlab.randomness import RandomField
from kcmlab.dynamics import (
    Process,
    Configuration,
    bernoulli,
    ALL_ONE,
    run_discrete,
    run_fa,
    run_fa_coupled,
)
from kcmlab.history import (
    Point,
    extract_history,
    validate_history,
    presence_probability_audit,
    peierls_bound,
)
from kcmlab.toom import (
    build_dependence_bp,
    build_dependence_tree,
    polar_bp,
    polar_tree,
    edge_speeds,
    find_present_cycle,
    certify_cycle,
)
from kcmlab.clusters import (
    zero_cluster,
    tail_table,
    fit_decay,
    wilson,
)
from kcmlab.experiments import (
    ExperimentSpec,
    run_experiment,
)

__all__ = [
    "Graph",
    "build_hyperbolic",
    "build_tree",
    "phi_e_formula",
    "alpha_lower",
    "compute_jbar",
    "brute_force_boundary_ratio",
    "expansion_report",
    "is_bipartite",
    "classify",
    "tree_inputs",
    "hyperbolic_inputs",
    "hyperbolic_case_table",
    "RandomField",
    "Process",
    "Configuration",
    "bernoulli",
    "ALL_ONE",
    "run_discrete",
    "run_fa",
    "run_fa_coupled",
    "Point",
    "extract_history",
    "validate_history",
    "presence_probability_audit",
    "peierls_bound",
    "build_dependence_bp",
    "build_dependence_tree",
    "polar_bp",
    "polar_tree",
    "edge_speeds",
    "find_present_cycle",
    "certify_cycle",
    "zero_cluster",
    "tail_table",
    "fit_decay",
    "wilson",
    "ExperimentSpec",
    "run_experiment",
]
