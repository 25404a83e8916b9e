"""Staircase-of-saddles landscape, descent experiments, and theory checks."""

from .landscape import (
    BlockGeometry,
    BufferBranch,
    DerivedConstants,
    Landscape,
    LandscapeParams,
    OutsideDomainError,
    Point,
    RegionId,
    RegionKind,
    OUTSIDE,
    block_geometry,
    classify,
    derive_constants,
    floor_to_multiple,
    hermite_cubic,
    quintic_blend,
    ramp_profile,
)
from .descent import (
    Event,
    GdConfig,
    Iterate,
    NoiseConfig,
    Outcome,
    Trajectory,
    gd_step,
    init_sample,
    project_to_domain,
    run,
    sgd_step,
)
from .analysis import (
    EscapeRecord,
    GrowthSummary,
    InsufficientDataError,
    SegmentationError,
    StallInfo,
    StreamObserver,
    TheoryCheck,
    TheoryReport,
    check_buffer_bound,
    check_containment,
    check_escape_recurrence,
    detect_stall,
    first_final_entry,
    growth_summary,
    segment,
    segment_from_orders,
    theory_report,
)
from .checks import (
    CheckReport,
    fd_gradient,
    global_minimum_check,
    gradient_check,
    lipschitz_probe,
    lipschitz_report,
    run_all_checks,
    seam_scan,
    stationary_check,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
