"""Parsing of unit-suffixed config quantities into SI values."""

from __future__ import annotations

import math
import re

from .constants import MU_B, MU_N

__all__ = ["UnitError", "parse_quantity", "UNITS"]


class UnitError(ValueError):
    pass


UNITS = {
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3, "um": 1e-6, "nm": 1e-9, "pm": 1e-12,
               "angstrom": 1e-10, "A": 1e-10},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, "ps": 1e-12},
    "frequency": {"Hz": 1.0, "kHz": 1e3, "MHz": 1e6, "GHz": 1e9},
    # angular frequencies; plain frequency units are multiplied by 2 pi
    "angular_frequency": {"rad/s": 1.0, "krad/s": 1e3, "Mrad/s": 1e6, "Grad/s": 1e9,
                          "Hz": 2 * math.pi, "kHz": 2e3 * math.pi, "MHz": 2e6 * math.pi,
                          "GHz": 2e9 * math.pi},
    "angle": {"rad": 1.0, "deg": math.pi / 180},
    "fraction": {"": 1.0, "ppm": 1e-6, "ppb": 1e-9, "percent": 1e-2, "%": 1e-2},
    "field": {"T": 1.0, "mT": 1e-3, "uT": 1e-6, "G": 1e-4},
    "temperature": {"K": 1.0, "mK": 1e-3},
    "density": {"m^-3": 1.0, "cm^-3": 1e6},
    "moment": {"J/T": 1.0, "muN": MU_N, "muB": MU_B},
}

_NUM = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


def parse_quantity(value, kind: str) -> float:
    """Convert ``"33 ns"``-style strings (or bare numbers for fractions) to SI.

    Bare numbers are accepted only where the quantity is dimensionless.
    """
    table = UNITS[kind]
    if isinstance(value, bool):
        raise UnitError(f"expected a {kind} quantity, got a boolean")
    if isinstance(value, (int, float)):
        if "" in table:
            return float(value)
        raise UnitError(f"{kind} value {value!r} needs a unit ({', '.join(sorted(table))})")
    if not isinstance(value, str):
        raise UnitError(f"expected a {kind} quantity string, got {type(value).__name__}")
    m = _NUM.match(value)
    if not m:
        raise UnitError(f"cannot parse {kind} quantity {value!r}")
    number, unit = m.groups()
    if unit not in table:
        raise UnitError(f"unknown {kind} unit {unit!r} in {value!r}; expected one of {sorted(table)}")
    return float(number) * table[unit]
