"""Line-oriented netlist dialect: values, parsing and elaboration."""

from .elaborate import elaborate
from .parser import NetlistDocument, parse, serialize
from .values import parse_value

__all__ = ["NetlistDocument", "elaborate", "parse", "parse_value", "serialize"]
