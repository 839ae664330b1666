"""Source broadcast over a two-user erasure broadcast channel with feedback."""

from .bounds import DemandPair, HybridParams, w_plus, w_star
from .channel import ChannelParams, SlotOutcome
from .errors import (
    ErasureCastError,
    Infeasible,
    InconsistentSystem,
    JointMassViolation,
    OrderViolation,
    RangeViolation,
    RuntimeExceeded,
    UnknownIndex,
    ValidationError,
)
from .gf2 import CoefficientSchedule, EquationBank
from .onesided import run_onesided
from .report import SchemeReport, SourceBlock
from .universal import run_universal

__version__ = "0.1.0"
