"""Borel-Cantelli experiments for Gibbs measures on shifts of finite type and hyperbolic toral maps."""

__version__ = "0.1.0"

from .errors import GbcError, NumericError, ValidationError  # noqa: E402
from .gibbs import (  # noqa: E402
    MarkovGibbs,
    Potential,
    bernoulli,
    build_markov_gibbs,
    correlation,
    cylinder_measure,
    joint_measure,
    parry,
)
from .sequences import CylinderSequence, derive_sequence, expected_hits  # noqa: E402
from .shift import Cylinder, Interval, check_transitive, full_shift, golden_mean, shift_cylinder  # noqa: E402
from .sp import sp_ratio, sp_verdict  # noqa: E402

__all__ = [
    "GbcError",
    "NumericError",
    "ValidationError",
    "MarkovGibbs",
    "Potential",
    "bernoulli",
    "build_markov_gibbs",
    "correlation",
    "cylinder_measure",
    "joint_measure",
    "parry",
    "CylinderSequence",
    "derive_sequence",
    "expected_hits",
    "Cylinder",
    "Interval",
    "check_transitive",
    "full_shift",
    "golden_mean",
    "shift_cylinder",
    "sp_ratio",
    "sp_verdict",
]
