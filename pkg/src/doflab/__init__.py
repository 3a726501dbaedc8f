"""Cell association, zero-forcing plans, and per-user DoF accounting for
locally connected interference networks."""

from .association import CellAssociation, ValidationResult
from .errors import (
    ContractViolationError,
    FormulaDomainError,
    InstanceTooSmallError,
    SearchLimitExceededError,
    StructuralError,
)
from .schemes import (
    SchemeBundle,
    SessionValue,
    build_downlink_scheme,
    build_joint_scheme,
    build_uplink_scheme,
    gamma_d,
    tau_avg_lower,
    tau_d_zf,
    tau_u_zf,
    tau_wyner,
)
from .topology import DOWNLINK, SESSIONS, UPLINK, Topology
from .verify import (
    Diagnostics,
    DofReport,
    DownlinkPlan,
    UplinkPlan,
    Violation,
    check_downlink,
    check_uplink,
    ordering_violations,
    set_budget_bound,
)

__all__ = [
    "CellAssociation",
    "ValidationResult",
    "Topology",
    "UPLINK",
    "DOWNLINK",
    "SESSIONS",
    "SchemeBundle",
    "SessionValue",
    "build_downlink_scheme",
    "build_uplink_scheme",
    "build_joint_scheme",
    "tau_d_zf",
    "tau_u_zf",
    "gamma_d",
    "tau_avg_lower",
    "tau_wyner",
    "UplinkPlan",
    "DownlinkPlan",
    "DofReport",
    "Diagnostics",
    "Violation",
    "check_uplink",
    "check_downlink",
    "ordering_violations",
    "set_budget_bound",
    "StructuralError",
    "FormulaDomainError",
    "InstanceTooSmallError",
    "SearchLimitExceededError",
    "ContractViolationError",
]

__version__ = "0.1.0"
