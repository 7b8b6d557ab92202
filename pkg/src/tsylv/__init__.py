"""Sylvester tensor equations ``A * X + sign * X * B = C`` under the T-product."""
from .block_krylov import (
    BlockArnoldiState,
    bas_solve,
    tbas_cycle,
    tbas_restarted,
    tubal_block_arnoldi,
)
from .errors import (
    BadMagic,
    BadVersion,
    BlockBreakdown,
    ConvergenceFailure,
    DimensionMismatch,
    DimensionTooSmall,
    MaxRestartsExceeded,
    NonFiniteValue,
    SingularPencil,
    SingularProjection,
    SingularTube,
    SymmetryViolation,
    TensorError,
    TruncatedFile,
    ZeroSeed,
)
from .factorizations import (
    SchurFactors,
    TubalQRFactors,
    t_back_substitution,
    t_bartels_stewart,
    t_schur,
    tubal_qr,
)
from .io import read_tt3d, write_tt3d
from .krylov import (
    GivensLeastSquares,
    GlobalArnoldiState,
    SylvesterOperator,
    restarted_solve,
    t_arnoldi,
    tfom_cycle,
    tgmres_cycle,
)
from .report import SolveReport
from .tensor import (
    BlockLayout,
    SpectralTensor,
    TProduct,
    basis_combine,
    bcirc,
    block_compose,
    block_selector,
    block_slice,
    fft_mode3,
    fold,
    fro_norm,
    identity,
    ifft_mode3,
    inner,
    normalization1,
    t_diamond,
    t_product,
    t_product_reference,
    t_transpose,
    tube_inverse,
    tubal_rank,
    unfold,
    unit_tube,
)

__version__ = "0.1.0"
