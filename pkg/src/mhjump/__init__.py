"""Metropolis-Hastings jump processes: exact-thinning simulation of the
classical and accelerated dynamics and their mixtures, a reference
integrator for the common diffusion limit, the finite-state minimal-distance
geometry of the generator family, and the numerical verification harness."""

__version__ = "0.1.0"

from .errors import ConfigurationError, DomainBoxError, DominationError, QuadratureError
from .targets import (
    BoxedQuadratic,
    GaussianProposal,
    LogCoshWell,
    SeparableTargetPotential,
    SmoothedDoubleWell,
    TargetPotential,
    make_potential,
)
from .kernels import (
    DominatingKernel,
    GeneratorKind,
    build_dominating_kernel,
    rate_density,
    thinning_accept_logprob,
    total_rate_bound,
)
from .jump import (
    JumpPath,
    ObservedEnsemble,
    first_jump_displacements,
    path_stream,
    simulate_ensemble,
    simulate_path,
)
from .langevin import SdeConfig, em_step, ou_exact_marginal, simulate_langevin
from .finite import (
    FiniteChain,
    d_mu,
    half_space_masses,
    load_chain,
    make_m1,
    make_m2,
    mix,
    random_chain,
    random_reversible,
    save_chain,
)
from .verify import (
    compare_ensembles,
    folded_normal_moment,
    generator_convergence_probe,
    generator_moment,
    moment_report,
    s_bound_check,
    stationarity_chisquare,
)
from .ensembles import read_binary, read_csv, write_binary, write_csv
