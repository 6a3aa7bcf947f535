"""Edge-reinforced and Dirichlet-environment random walks on Galton-Watson
trees: special functions, regime classification, conductance population
dynamics, Monte Carlo speed evaluation, and exact reversal-identity oracles.
"""

from .branching import OffspringDistribution, TruncatedTree, sample_tree
from .conductance import (
    BetaPopulation,
    beta_truncated,
    beta_truncated_all,
    estimate_C,
    sample_beta_population,
    tail_exponent,
)
from .criteria import (
    RegimeReport,
    classify_speed,
    classify_transience,
    compute_r,
    neg_moment_A,
    transience_by_minimization,
)
from .dirichlet import (
    EnvTree,
    WeightedDigraph,
    dirichlet_moment,
    errw_path_probability,
    sample_dirichlet,
    sample_env_tree,
    two_path_product,
)
from .exceptions import (
    DivergentMomentError,
    InsufficientDataError,
    InvalidPathError,
    UnstableRatioError,
    UnsupportedRegimeError,
    VertexCapError,
)
from .specfun import ParamSet, hyper_F, hyper_F_array, hyper_G, phi
from .speed import evaluate_speed, evaluate_speed_errw_half, evaluate_speed_symmetric
from .walk import (
    Trajectory,
    detect_epochs,
    simulate_errw,
    simulate_errw_lazy,
    simulate_rwde,
    simulate_rwde_lazy,
    speed_direct,
    speed_regen,
)

__version__ = "0.1.0"
