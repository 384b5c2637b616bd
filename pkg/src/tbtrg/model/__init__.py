"""TB net model: structure, symbolic states and the firing rule."""

from .firing import (
    Binding,
    InfeasibleFiring,
    candidate_bindings,
    enabled_bindings,
    fire,
    fire_raw,
    successors,
)
from .net import NOW, Net, Place, TimeExpr, Transition, make_net
from .state import (
    ANON,
    PlaceTokens,
    SymbolicState,
    decode_state,
    encode_state,
    includes,
    make_marking,
    normalize,
    state_digest,
)

__all__ = [
    "ANON",
    "Binding",
    "InfeasibleFiring",
    "NOW",
    "Net",
    "Place",
    "PlaceTokens",
    "SymbolicState",
    "TimeExpr",
    "Transition",
    "candidate_bindings",
    "decode_state",
    "enabled_bindings",
    "encode_state",
    "fire",
    "fire_raw",
    "includes",
    "make_marking",
    "make_net",
    "normalize",
    "state_digest",
    "successors",
]
