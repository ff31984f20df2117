"""Epsilon-capacity, capacity-cost and finite-blocklength bounds for mixed channels."""

from .blocklength import (
    ConverseRate,
    FeinsteinBound,
    FeinsteinRate,
    TypeCapError,
    band_mass,
    chebyshev_floor,
    enumerate_types,
    feinstein_error_bound,
    feinstein_max_rate,
    metaconverse_error_lower_bound,
    metaconverse_rate_bound,
)
from .capacity import (
    CapacityResult,
    EnumerationCapError,
    Method,
    SolverError,
    StepFunction,
    WellOrderedCertificate,
    a_of,
    compound_capacity,
    curve_breakpoints,
    epsilon_capacity,
    epsilon_capacity_curve,
    epsilon_capacity_grid_oracle,
    f_w,
    feasible_minimal_subsets,
    is_well_ordered,
    well_ordered_capacity,
)
from .channel import (
    Distribution,
    Dmc,
    InfoDensityTable,
    MixedChannel,
    component_capacity,
    component_informations,
    divergences,
    info_density_table,
    information_density_variance_bound,
    mutual_information,
)
from .cost import (
    CostCurve,
    CostReport,
    capacity_cost_curve,
    cost_constrained_capacity,
    find_gamma_star,
    verify_cost_properties,
)
from .hypothesis import HypTestPair, np_alpha, np_beta
from .maxmin import MaxMinResult, dual_upper_bound, max_min_information
from .spectrum import (
    AtomCapError,
    Spectrum,
    SumSpectrum,
    d_s,
    d_s_lazy,
    llr_spectrum,
    spectrum_cdf,
    spectrum_n,
    type_spectrum,
)

__version__ = "0.1.0"
