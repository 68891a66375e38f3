"""Time-stepped distributed simulation with adaptive entity migration.

Thin wrapper over the C++ engine: run a configuration, read traces back, render
the report charts and decode wire frames.
"""

from ._core import (
    PROTOCOL_VERSION,
    ConfigError,
    FrameDecodeError,
    decode_frame,
    encode_bye,
    load_trace,
    render_report,
    run,
)

__all__ = [
    "PROTOCOL_VERSION",
    "ConfigError",
    "FrameDecodeError",
    "decode_frame",
    "encode_bye",
    "load_trace",
    "render_report",
    "run",
    "digests",
]


def digests(result):
    """Per-step digest strings of a run() or load_trace() result."""
    return [row["digest"] for row in result["steps"]]
