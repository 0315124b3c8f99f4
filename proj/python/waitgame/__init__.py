"""Relay-data analytics and the block-delay consensus simulator."""

from ._core import (
    MalformedTree,
    RunMetrics,
    SimConfig,
    __version__,
    attestation_share,
    base_reward,
    er_graph,
    flag_reward,
    ghost_head,
    integer_sqrt,
    reorg_vulnerable,
    run_simulation,
    sweep,
)

__all__ = [
    "MalformedTree",
    "RunMetrics",
    "SimConfig",
    "__version__",
    "attestation_share",
    "base_reward",
    "er_graph",
    "flag_reward",
    "ghost_head",
    "integer_sqrt",
    "reorg_vulnerable",
    "run_simulation",
    "sweep",
]
