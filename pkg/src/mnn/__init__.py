"""Matrix recovery under a convolution-modified nuclear norm.

The package recovers a smooth low-rank matrix x from corrupted or
partially observed data by minimizing ||D(x)||_*, the nuclear norm of x
after a per-column circular 2-D convolution D, combined with an l1 or
masked least-squares data term. See the module docstrings for details:

* tensors: containers, unfold/fold, masks, MNNT and CSV file I/O
* operators: circulant convolution operators and their spectra
* norms: nuclear and transformed norms, prox maps, subgradients
* solvers: subgradient and ADMM solvers for robust PCA and completion
* synth: seeded synthetic low-rank stacks, outliers, and masks
* experiments: metrics, phase-transition sweeps, restoration harness
* cli: the `mnn` command-line tool
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateInputError,
    DegenerateKernelError,
    DimensionError,
    DivergenceError,
    FormatError,
    InnerSolveError,
    MnnError,
    NumericsError,
    TruncationError,
)
from .experiments import (
    DESK_MC_RATIO_VALUES,
    DESK_R_VALUES,
    DESK_RPCA_RATIO_VALUES,
    MetricsRow,
    PhaseGrid,
    monotone_row_fraction,
    psnr,
    rel_error,
    run_phase_diagram,
    run_restoration,
    ssim,
    success,
    write_metrics_csv,
    write_phase_csv,
    write_trace_csv,
)
from .norms import (
    IncoherenceReport,
    SvdFactors,
    incoherence,
    mnn,
    mnn_subgradient,
    norm_sandwich,
    nuclear_norm,
    soft_threshold,
    svd_thin,
    svt,
)
from .operators import ConvOperator, Kernel2D, builtin_kernel, kernel_from_csv, normalize
from .solvers import (
    McSolution,
    RpcaSolution,
    SolveReport,
    SolverConfig,
    default_lambda,
    default_mu,
    mc_admm,
    mc_subgradient,
    objective_j1,
    objective_j2,
    rpca_admm,
    rpca_subgradient,
    solve_mc,
    solve_rpca,
)
from .synth import (
    GenConfig,
    component_seed,
    gen_lowrank_smooth,
    gen_mask,
    gen_mc_instance,
    gen_regions,
    gen_rpca_instance,
    gen_sparse_corruption,
    trial_seed,
)
from .tensors import (
    apply_mask,
    as_matrix,
    as_stack,
    fold3,
    read_matrix_csv,
    read_tensor,
    unfold3,
    write_matrix_csv,
    write_tensor,
)
