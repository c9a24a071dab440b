"""Branching-measure geometry on supercritical tree boundaries.

The package computes, for a supercritical offspring law, the constants and
verdicts that describe how gauge functions measure the tree boundary under
the natural branching measure: the exponential-moment boundary of the
martingale limit, threshold functionals, the integrated-tail dichotomy, and
a Monte Carlo harness validating the underlying size-biased ray structure.
"""

__version__ = "0.1.0"

from .offspring import (  # noqa: F401
    CustomLaw,
    ExplicitFinite,
    GeometricShifted,
    GeometricTail,
    OffspringLaw,
    PowerTail,
    analytic_metadata,
    extinction_prob,
    law_from_config,
    pgf_eval,
    pgf_inverse_iterate,
    pgf_iterate,
    sierpinski_law,
    tilde_law,
)
from .tails import (  # noqa: F401
    KFunction,
    TailFunction,
    asymp_equiv_diagnostic,
    dominated_variation_test,
    empirical_tail,
    k_eval,
    k_function,
    series_classifier,
)
from .tree import (  # noqa: F401
    SimTree,
    cutset_conservation_check,
    mu_ball,
    sample_w,
    simulate_population,
    simulate_tree,
    truncated_weight,
)
from .spine import (  # noqa: F401
    sample_rho_y_increment,
    sample_size_biased_count,
    sample_y_path,
    sample_y_paths,
    rho_y_tail,
)
from .constants import (  # noqa: F401
    ConstantEstimate,
    c_phi_series_threshold,
    sigma_inverse_iteration,
    tau_estimate,
    threshold_functional,
    xi_r_bracket,
)
from .gauge import (  # noqa: F401
    GaugeFunction,
    GFunction,
    Verdict,
    classify,
    g_delta_condition,
    g_membership,
    phi_membership,
)
