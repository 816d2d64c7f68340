"""Message sequence chart analysis toolkit."""

from .core import (
    Action,
    Linearization,
    Msc,
    MscError,
    RelationGraph,
    concatenate,
    enumerate_linearizations,
    happens_before,
    prefix,
    recv,
    send,
    to_dot,
    validate,
)
from .classify import ClassReport, classify, linearize, check_linearization
from .io import load_msc, parse_msc, serialize_msc

__all__ = [
    "Action",
    "ClassReport",
    "Linearization",
    "Msc",
    "MscError",
    "RelationGraph",
    "classify",
    "check_linearization",
    "concatenate",
    "enumerate_linearizations",
    "happens_before",
    "linearize",
    "load_msc",
    "parse_msc",
    "prefix",
    "recv",
    "send",
    "serialize_msc",
    "to_dot",
    "validate",
]

__version__ = "0.1.0"
