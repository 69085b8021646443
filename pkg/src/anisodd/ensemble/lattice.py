"""Host lattices: parsing, site density and random occupation around a centre.

File format (plain text, ``#`` comments, lengths in angstrom)::

    # lattice vectors as rows, Cartesian components in the lab frame
    vector  10.41  0.0  0.0
    vector  0.0  6.72  0.0
    vector  -2.73  0.0  12.19
    # label and fractional coordinates
    site  Y1  0.0358  0.2573  0.4667
    site  Y2  ...

Exactly three ``vector`` lines are required; ``site`` lines may repeat labels
(symmetry-equivalent positions share a label).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

__all__ = [
    "Lattice",
    "LatticeError",
    "load_lattice",
    "parse_lattice",
    "cell_vectors",
    "site_density",
]

ANGSTROM = 1e-10


class LatticeError(ValueError):
    pass


def cell_vectors(a: float, b: float, c: float, alpha: float = 90.0, beta: float = 90.0, gamma: float = 90.0):
    """Lattice vectors (rows, same unit as a, b, c) from cell constants in degrees.

    ``a`` lies along x and ``b`` in the xy plane.
    """
    al, be, ga = (math.radians(x) for x in (alpha, beta, gamma))
    va = np.array([a, 0.0, 0.0])
    vb = np.array([b * math.cos(ga), b * math.sin(ga), 0.0])
    cx = c * math.cos(be)
    cy = c * (math.cos(al) - math.cos(be) * math.cos(ga)) / math.sin(ga)
    cz = math.sqrt(max(c * c - cx * cx - cy * cy, 0.0))
    return np.array([va, vb, [cx, cy, cz]])


def site_density(a, b, c, alpha=90.0, beta=90.0, gamma=90.0, sites_per_cell: float = 1.0) -> float:
    """Number density (per unit length cubed) of a site occurring ``sites_per_cell`` times."""
    vol = abs(np.linalg.det(cell_vectors(a, b, c, alpha, beta, gamma)))
    return sites_per_cell / vol


@dataclass(frozen=True)
class Lattice:
    vectors: np.ndarray  # (3, 3) rows, metres
    frac: np.ndarray  # (m, 3)
    labels: tuple

    @property
    def volume(self) -> float:
        return float(abs(np.linalg.det(self.vectors)))

    def density(self, label: Optional[str] = None) -> float:
        """Site density (m^-3), optionally restricted to one label."""
        m = len(self.labels) if label is None else sum(1 for s in self.labels if s == label)
        return m / self.volume

    def basis(self, label: Optional[str] = None) -> np.ndarray:
        """Cartesian basis positions (m) within one cell."""
        sel = np.array([label is None or s == label for s in self.labels])
        return (self.frac[sel] % 1.0) @ self.vectors

    def rotated(self, R) -> "Lattice":
        """Same lattice with Cartesian vectors mapped by ``R``."""
        return Lattice(self.vectors @ np.asarray(R, dtype=float).T, self.frac, self.labels)

    def sites_within(self, radius: float, centre_label: Optional[str] = None, label: Optional[str] = None):
        """All site positions (relative to a ``centre_label`` site) inside ``radius``.

        The centre site itself is excluded.
        """
        centre = self.basis(centre_label)[0]
        basis = self.basis(label) - centre
        inv = np.linalg.inv(self.vectors)
        # bound the cell-index range by the reciprocal row norms
        span = np.ceil(radius * np.linalg.norm(inv, axis=0)).astype(int) + 1
        grids = np.meshgrid(*(np.arange(-s, s + 1) for s in span), indexing="ij")
        cells = np.stack([g.ravel() for g in grids], axis=1) @ self.vectors
        pos = (cells[:, None, :] + basis[None, :, :]).reshape(-1, 3)
        d = np.linalg.norm(pos, axis=1)
        keep = (d <= radius) & (d > 1e-3 * ANGSTROM)
        return pos[keep]

    def random_sites(self, rng: np.random.Generator, count: int, radius: float,
                     centre_label: Optional[str] = None, label: Optional[str] = None):
        """Draw ``count`` distinct-with-high-probability sites uniformly inside ``radius``.

        Used for sparse species where enumerating every site is wasteful:
        a uniform point in the sphere picks a cell, a random basis site is
        attached, and points falling outside the sphere are redrawn.
        """
        centre = self.basis(centre_label)[0]
        basis = self.basis(label) - centre
        inv = np.linalg.inv(self.vectors)
        out = np.empty((0, 3))
        while len(out) < count:
            k = 2 * (count - len(out)) + 8
            u = rng.standard_normal((k, 3))
            u *= (radius * rng.random(k) ** (1 / 3) / np.linalg.norm(u, axis=1))[:, None]
            cell = np.floor(u @ inv) @ self.vectors
            pos = cell + basis[rng.integers(len(basis), size=k)]
            d = np.linalg.norm(pos, axis=1)
            pos = pos[(d <= radius) & (d > 1e-3 * ANGSTROM)]
            out = np.concatenate([out, pos])
        return out[:count]


def parse_lattice(text: str, source: str = "<string>") -> Lattice:
    vectors, frac, labels = [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "vector" and len(parts) == 4:
                vectors.append([float(x) for x in parts[1:]])
            elif parts[0] == "site" and len(parts) == 5:
                labels.append(parts[1])
                frac.append([float(x) for x in parts[2:]])
            else:
                raise ValueError
        except ValueError:
            raise LatticeError(f"{source}:{lineno}: cannot parse {raw.strip()!r}") from None
    if len(vectors) != 3:
        raise LatticeError(f"{source}: expected 3 'vector' lines, found {len(vectors)}")
    if not frac:
        raise LatticeError(f"{source}: no 'site' lines")
    v = np.array(vectors) * ANGSTROM
    if abs(np.linalg.det(v)) < 1e-40:
        raise LatticeError(f"{source}: lattice vectors are degenerate")
    return Lattice(v, np.array(frac), tuple(labels))


def load_lattice(path) -> Lattice:
    p = Path(path)
    if not p.is_file():
        raise LatticeError(f"lattice file not found: {p}")
    return parse_lattice(p.read_text(), str(p))
