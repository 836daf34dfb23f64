"""Support classification of graph nodes against a hardware op set."""

from __future__ import annotations

from typing import Mapping

from .ir import OP_TAGS, ExecutionGraph, GraphError, OpKind

CROSSBAR_NATIVE = "crossbar_native"
DLC_NATIVE = "dlc_native"
IDENTITY_REWRITE = "identity_rewrite"
TRANSFORM_CANDIDATE = "transform_candidate"
SUPPORT_CLASSES = (CROSSBAR_NATIVE, DLC_NATIVE, IDENTITY_REWRITE, TRANSFORM_CANDIDATE)

CROSSBAR_OPS = frozenset({"matmul", "bias_add"})
# the NEON microarchitecture carries one tanh unit and a multiplier; affine/clamp
# are the peripheral scale/shift/saturate steps emitted by rewrites
DEFAULT_DLC_OPS = frozenset({"tanh", "mul_elementwise", "identity", "affine", "clamp"})


def classify_op(op: OpKind | str, supported_dlc_ops=DEFAULT_DLC_OPS) -> str:
    tag = op.tag if isinstance(op, OpKind) else op
    if tag not in OP_TAGS:
        raise GraphError(f"unknown op kind {tag!r}")
    if tag in CROSSBAR_OPS:
        return CROSSBAR_NATIVE
    if tag in supported_dlc_ops:
        return DLC_NATIVE
    if tag == "sigmoid" and "tanh" in supported_dlc_ops:
        return IDENTITY_REWRITE
    return TRANSFORM_CANDIDATE


def classify_nodes(g: ExecutionGraph, hw=None) -> Mapping[str, str]:
    """Map every node id to its support class.

    ``hw`` is any object with a ``supported_dlc_ops`` attribute (normally a
    :class:`neonpim.mapping.hardware.HardwareConfig`); ``None`` uses the defaults.
    """
    supported = frozenset(getattr(hw, "supported_dlc_ops", DEFAULT_DLC_OPS))
    return {nid: classify_op(g[nid].op, supported) for nid in g.order}
