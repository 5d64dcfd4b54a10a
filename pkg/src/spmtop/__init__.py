"""Sequential posterior-matching feedback codes for the binary symmetric channel.

Variable-length coding with noiseless feedback: the k message bits are sent
verbatim, then a threshold partition of the grouped posterior list drives
each extra channel use, and a short random-walk confirmation phase decides
when to stop.  Includes closed-form blocklength bounds, a Monte Carlo
harness, and a compiled trial kernel that is bit-compatible with the pure
Python implementation.
"""

from .bounds import (
    BoundReport,
    arbitrary_dist_bound,
    bound_report,
    fallback_probability,
    sead_bound,
    systematic_binomial_bound,
    thm1_bound,
    yang_bound,
)
from .channel import BscChannel, draw_message, fork_stream, message_stream
from .codec import (
    Group,
    GroupList,
    MessageLocator,
    Partition,
    TrialRecord,
    confirmation_run,
    default_max_uses,
    encoder_bit,
    init_systematic,
    partition_top,
    systematic_posteriors,
    update_merge,
)
from .core import (
    BinomTable,
    ChannelParams,
    SpmTopError,
    TypeIndex,
    binary_entropy,
    binom_table,
    channel_params,
    confirmation_steps,
    log_odds_threshold,
    pack_bits,
    rank_message,
    unpack_bits,
    unrank_message,
)
from .engine import HAVE_KERNEL, resolve_backend, run_trial
from .harness import SimStats, default_gamma, emit_report, monte_carlo

__version__ = "0.1.0"

__all__ = [
    "BinomTable",
    "BoundReport",
    "BscChannel",
    "ChannelParams",
    "Group",
    "GroupList",
    "HAVE_KERNEL",
    "MessageLocator",
    "Partition",
    "SimStats",
    "SpmTopError",
    "TrialRecord",
    "TypeIndex",
    "arbitrary_dist_bound",
    "binary_entropy",
    "binom_table",
    "bound_report",
    "channel_params",
    "confirmation_run",
    "confirmation_steps",
    "default_gamma",
    "default_max_uses",
    "draw_message",
    "emit_report",
    "encoder_bit",
    "fallback_probability",
    "fork_stream",
    "init_systematic",
    "log_odds_threshold",
    "message_stream",
    "monte_carlo",
    "pack_bits",
    "partition_top",
    "rank_message",
    "resolve_backend",
    "run_trial",
    "sead_bound",
    "systematic_binomial_bound",
    "systematic_posteriors",
    "thm1_bound",
    "unpack_bits",
    "unrank_message",
    "update_merge",
    "yang_bound",
]
