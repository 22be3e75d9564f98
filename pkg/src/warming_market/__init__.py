"""Market clearing for a warming-capped auction of emission and sequestration contracts."""

__version__ = "0.1.0"

from .auction import (  # noqa: E402
    Activity,
    AuctionConfig,
    Bid,
    CapSchedule,
    ClearingResult,
    Kind,
    ModelError,
    Status,
    Tolerances,
    assemble_model,
    clear,
    price_table,
    revenue_eq6,
    revenue_net,
    verify_certificate,
)
from .kernels import WarmingKernel  # noqa: E402
from .scenario import Scenario, run_auction, sweep_first_constrained_year  # noqa: E402

__all__ = [
    "Activity",
    "AuctionConfig",
    "Bid",
    "CapSchedule",
    "ClearingResult",
    "Kind",
    "ModelError",
    "Scenario",
    "Status",
    "Tolerances",
    "WarmingKernel",
    "__version__",
    "assemble_model",
    "clear",
    "price_table",
    "revenue_eq6",
    "revenue_net",
    "run_auction",
    "sweep_first_constrained_year",
    "verify_certificate",
]
