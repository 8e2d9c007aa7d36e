"""Pulse shaping and verification tools for 1-D molecular diffusion channels."""

__version__ = "0.1.0"

from .channel import (
    ChannelParams,
    TimeGrid,
    binned_response,
    capture_cdf,
    hitting_concentration,
    impulse_response,
    peak_time,
    transfer_function,
)
from .errors import CoarseStepWarning, DomainError, NumericalFailure, PreconditionError, ValidityWarning
from .laplace import InversionConfig, InversionMethod, QuadratureConfig, forward_numeric, invert, invert_grid
from .shaping import (
    CompositePulse,
    ShapedEmission,
    invert_channel_pulse,
    poison_transmit_laplace,
    realize_emission,
    shaped_response,
    window_poison_response,
    windowed_composite,
)
from .simulate import (
    BERReport,
    LinkConfig,
    Pulse,
    WalkConfig,
    empirical_cdf,
    first_passage_sample,
    isi_tail_ratio,
    simulate_link,
)
