from app.analysis.averages import (
    half_period_symmetry_residual,
    regret,
    regret_bound,
    time_average,
    time_average_utility,
    utility_series,
)
from app.analysis.invariants import (
    DriftReport,
    coupling_functional,
    fenchel_coupling,
    gda_energy,
    invariant_drift,
    kl_divergence,
    kl_sum,
)
from app.analysis.recurrence import RecurrenceEvent, min_distance_after, recurrence_scan, sup_distances
from app.analysis.volume import divergence_trace, volume_ratio
