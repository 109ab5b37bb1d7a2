from .base import (
    DAUBECHIES_REGULARITY,
    FemSpec,
    KLTrigSpec,
    Kernel,
    MaternSpec,
    WaveletSpec,
    make_kernel,
    mirror_upper,
    nominal_smoothness,
    spec_from_json,
    spec_to_json,
)
from .matern import MaternKernel, matern_bessel, matern_closed_form, matern_correlation
from .kl_trig import KLTrigKernel
from .wavelet import (
    CascadeError,
    DAUBECHIES_FILTERS,
    WaveletKernel,
    WaveletTable,
    build_wavelet_table,
    validate_filter,
)
from .fem import (
    FemAssembly,
    FemKernel,
    element_mass,
    element_stiffness,
    fem_assemble,
    fem_basis_matrix,
    fem_eigendecompose,
)
