"""Scalp layouts: 10-20 electrode positions projected onto the unit disc.

A layout maps channel names to (u, v) head-plane coordinates (azimuthal-
equidistant projection, u to the right ear, v toward the nose).  The package
ships tables for the standard 32-channel and 14-channel montages; external
layouts load from JSON files of the same shape:

    {"name": "...", "electrodes": [{"name": "Cz", "u": 0.0, "v": 0.0}, ...]}
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .validation import SpecError

BUILTIN_LAYOUTS = ("montage32", "montage14")


@dataclass(frozen=True)
class ScalpLayout:
    name: str
    entries: dict[str, tuple[float, float]]

    def __post_init__(self):
        for ch, (u, v) in self.entries.items():
            if u * u + v * v > 1.0 + 1e-12:
                raise SpecError(f"layout {self.name}: {ch} at ({u}, {v}) outside unit disc")

    def position(self, channel):
        try:
            return self.entries[channel]
        except KeyError:
            raise SpecError(
                f"channel {channel!r} not in layout {self.name!r}"
            ) from None

    def positions(self, channels):
        """(u, v) pairs for the given channel order; unknown names raise."""
        return [self.position(c) for c in channels]

    def __len__(self):
        return len(self.entries)


def _from_dict(raw) -> ScalpLayout:
    entries = {}
    for e in raw["electrodes"]:
        name = str(e["name"])
        if name in entries:
            raise SpecError(f"layout {raw.get('name')}: duplicate electrode {name!r}")
        entries[name] = (float(e["u"]), float(e["v"]))
    return ScalpLayout(name=str(raw["name"]), entries=entries)


def load_layout(ref) -> ScalpLayout:
    """Load a layout by builtin name ('montage32', 'montage14') or file path."""
    ref = str(ref)
    if ref in BUILTIN_LAYOUTS:
        src = resources.files("affectlab.resources").joinpath(f"{ref}.json")
        with src.open() as f:
            return _from_dict(json.load(f))
    path = Path(ref)
    if not path.is_file():
        raise SpecError(f"layout {ref!r}: not a builtin name or readable file")
    return _from_dict(json.loads(path.read_text()))
