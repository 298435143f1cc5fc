from ._combinatorics import (
    SpectrumEntry,
    card_r_formula,
    dim_d,
    enumerate_r,
    f_closed,
    f_interval,
    omega_std,
    perturbed_width_spectrum,
)
from ._curves import TracedCurve, rp2_mass_from_trace, trace_level_set
from ._ellipsoid import (
    EllipsoidParams,
    GeodesicState,
    LengthVector,
    calibrate,
    gamma_length,
    geodesic_integrate,
    jacobian_fd,
    length_vector,
)
from ._integral_geometry import (
    bezout_audit,
    crofton_length_sphere,
    mass_rp2,
    sup_mass_scan,
)
from ._main import rp2_widths
from ._poly import (
    ProbeQuadric,
    SweepPolynomial,
    build_basis,
    count_circle_roots,
    evaluate,
    restrict_to_circle,
)
