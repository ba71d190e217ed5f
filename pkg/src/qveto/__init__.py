"""Single-qudit anonymous veto (dining cryptographers) protocol simulator."""

from .errors import (
    Inconclusive,
    InsufficientData,
    NotSifted,
    ProtocolAbort,
    RejectedInput,
    ReportWriteError,
)
from .mub import MubFamily, StateId, build_mub_family, identify_state, u_generator, v_generator
from .physical import VisibilityModel, apply_visibility, calibrate_visibility
from .protocol import ProtocolConfig, Transcript, VotingOutcome, run_trusted_protocol, run_untrusted_protocol
from .qudit import (
    BasisSet,
    DiagonalUnitary,
    OutcomeDistribution,
    QuditState,
    SeededRng,
    apply_diagonal,
    born_probabilities,
    compose_diagonals,
    equal_up_to_global_phase,
    inner_product,
    power_of_diagonal,
    sample_outcome,
)

__version__ = "0.1.0"
