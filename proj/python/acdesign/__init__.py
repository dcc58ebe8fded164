"""Locally optimal designs for active-controlled dose-finding studies.

Designs are lists of ``(dose, weight)`` pairs; the control arm uses the dose ``"C"``.
"""

from ._acdesign import (
    ControlModel,
    DomainError,
    DrugModel,
    InfeasibleGeometry,
    NoTargetDose,
    NotEstimable,
    Unsupported,
    ValidationError,
    ac_efficiency,
    ac_optimal,
    d_efficiency,
    d_optimal,
    psi_ac,
    round_design,
    solve,
    target_dose,
    verify,
)

__all__ = [
    "ControlModel",
    "DomainError",
    "DrugModel",
    "InfeasibleGeometry",
    "NoTargetDose",
    "NotEstimable",
    "Unsupported",
    "ValidationError",
    "ac_efficiency",
    "ac_optimal",
    "d_efficiency",
    "d_optimal",
    "psi_ac",
    "round_design",
    "solve",
    "target_dose",
    "verify",
]
