"""Two-timescale channel estimation for RIS-aided multi-user MIMO.

A simulation library and CLI covering the full pilot pipeline: dual-link
pilots and coordinate-descent recovery of the quasi-static BS-RIS channel,
uplink least-squares recovery of the mobile channels, a full-pilot cascaded
LS baseline, and Monte Carlo NMSE / pilot-overhead reporting.
"""

from .config import (
    LinkBudget,
    RandomStream,
    SystemConfig,
    derive_link_budget,
    derive_stream,
    load_config,
    validate,
    with_sinr_db,
    with_snr_db,
    write_config,
)
from .channels import (
    CascadedChannel,
    ChannelRealization,
    cascade,
    gauge_transform,
    sample_channels,
)
from .duallink import (
    DualLinkObservation,
    ProductEstimates,
    ReflectionSchedule,
    build_reflection_schedule,
    decorrelate_products,
    simulate_dual_link,
)
from .quasistatic import (
    BsRisEstimate,
    ColumnSubproblem,
    ConvergenceTrace,
    estimate_bs_ris,
    initialize_column,
    objective,
    refine_coefficient,
)
from .mobile import (
    MeasurementMatrix,
    MobileEstimate,
    RankDeficiencyError,
    UplinkObservation,
    UplinkPilotPlan,
    assemble_measurement_matrix,
    despread,
    estimate_mobile,
    generate_pilot_plan,
    ls_estimate,
    simulate_uplink_frame,
)
from .metrics import (
    MetricsReport,
    OverheadReport,
    nmse_cascaded,
    nmse_direct,
    nmse_sign_aligned,
    pilot_overhead,
)
from .baseline import CascadedEstimate, estimate_cascaded_ls
from .harness import ExperimentSpec, run_experiment

__version__ = "0.1.0"
