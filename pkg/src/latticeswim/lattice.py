"""Obstacle lattices: rigid circular posts on a triangular grid.

Posts are immovable circles anchored to the floor.  A regular lattice
places them on an equilateral triangular grid (row pitch spacing*sqrt(3)/2,
alternate rows offset by spacing/2); a perturbed lattice displaces each
post by an isotropic Gaussian offset, rejection-sampled so posts never
overlap and stay inside the bounds.
"""

import math
from dataclasses import dataclass

import numpy as np


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class Lattice:
    """Immutable post field.

    bounds is (xmin, ymin, xmax, ymax) in meters; every post disc lies
    fully inside it.  min_surface_gap is the clearance margin enforced
    between post surfaces (perturbation rejects closer pairs).
    """

    post_centers: np.ndarray  # (P, 2)
    post_radius: float
    bounds: tuple[float, float, float, float]
    spacing: float
    perturbation_sigma: float = 0.0
    seed: int = 0
    min_surface_gap: float = 0.06

    def __post_init__(self):
        c = np.asarray(self.post_centers, dtype=np.float64).reshape(-1, 2)
        object.__setattr__(self, "post_centers", c)
        if self.post_radius <= 0:
            raise LatticeError("post_radius must be positive")
        xmin, ymin, xmax, ymax = self.bounds
        if xmin >= xmax or ymin >= ymax:
            raise LatticeError("bounds must be a nonempty rectangle")

    @property
    def n_posts(self) -> int:
        return len(self.post_centers)


def build_regular_lattice(spacing: float, radius: float,
                          bounds: tuple[float, float, float, float] = (-1.0, -1.0, 1.0, 1.0),
                          min_surface_gap: float = 0.06) -> Lattice:
    """Equilateral triangular grid of posts filling the bounds.

    The grid is centered on the bounds rectangle; only posts whose full
    disc fits inside the bounds are kept.  Interior posts end up with six
    nearest neighbors exactly one spacing away.
    """
    if spacing <= 2.0 * radius:
        raise LatticeError(
            f"spacing {spacing} must exceed post diameter {2 * radius}")
    xmin, ymin, xmax, ymax = bounds
    cx, cy = 0.5 * (xmin + xmax), 0.5 * (ymin + ymax)
    pitch = spacing * math.sqrt(3.0) / 2.0
    half_w = 0.5 * (xmax - xmin) - radius
    half_h = 0.5 * (ymax - ymin) - radius
    jmax = int(math.floor(half_h / pitch))
    centers = []
    for j in range(-jmax, jmax + 1):
        y = cy + j * pitch
        off = 0.5 * spacing if (j % 2) else 0.0
        imax = int(math.floor((half_w + off) / spacing)) + 1
        for i in range(-imax, imax + 1):
            x = cx + i * spacing + off
            if abs(x - cx) <= half_w and abs(y - cy) <= half_h:
                centers.append((x, y))
    return Lattice(np.array(centers, dtype=np.float64), radius, bounds,
                   spacing, 0.0, 0, min_surface_gap)


def build_perturbed_lattice(base: Lattice, sigma: float, seed: int) -> Lattice:
    """Displace each post by an isotropic Gaussian offset of std sigma.

    Posts are placed sequentially; each draw is rejected (and resampled)
    until the post stays inside the bounds and keeps at least
    min_surface_gap of clearance to every post already placed.
    Deterministic given the seed.
    """
    if sigma < 0:
        raise LatticeError("sigma must be >= 0")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    xmin, ymin, xmax, ymax = base.bounds
    r = base.post_radius
    min_d2 = (2.0 * r + base.min_surface_gap) ** 2
    placed = np.empty_like(base.post_centers)
    for k, (bx, by) in enumerate(base.post_centers):
        for attempt in range(10**4):
            dx, dy = rng.normal(0.0, sigma, size=2) if sigma > 0 else (0.0, 0.0)
            x, y = bx + dx, by + dy
            if not (xmin + r <= x <= xmax - r and ymin + r <= y <= ymax - r):
                continue
            d2 = (placed[:k, 0] - x) ** 2 + (placed[:k, 1] - y) ** 2
            if k and d2.min() < min_d2:
                continue
            placed[k] = (x, y)
            break
        else:
            raise LatticeError(
                f"could not place perturbed post {k} after 1e4 attempts")
    return Lattice(placed, r, base.bounds, base.spacing, sigma, seed,
                   base.min_surface_gap)


def query_clearance(point: tuple[float, float], lat: Lattice) -> float:
    """Distance from point to the nearest post surface (< 0 inside a post)."""
    if lat.n_posts == 0:
        raise LatticeError("clearance query on an empty lattice")
    d = np.hypot(lat.post_centers[:, 0] - point[0],
                 lat.post_centers[:, 1] - point[1])
    return float(d.min() - lat.post_radius)


def save_lattice(lat: Lattice, path):
    """Write the text form: header `radius spacing seed sigma`, then `x y` rows."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{float(lat.post_radius)!r} {float(lat.spacing)!r} {lat.seed} "
                f"{float(lat.perturbation_sigma)!r}\n")
        for x, y in lat.post_centers:
            f.write(f"{float(x)!r} {float(y)!r}\n")


def load_lattice(path, bounds: tuple[float, float, float, float] | None = None,
                 min_surface_gap: float = 0.06) -> Lattice:
    """Read the text form written by save_lattice.

    The file does not carry bounds; pass them explicitly or the bounding
    box of the posts (padded by one radius) is used.
    """
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln.strip() for ln in f if ln.strip()]
    if not lines:
        raise LatticeError(f"empty lattice file {path}")
    head = lines[0].split()
    if len(head) != 4:
        raise LatticeError("lattice header must be: radius spacing seed sigma")
    radius, spacing, sigma = float(head[0]), float(head[1]), float(head[3])
    seed = int(head[2])
    centers = np.array([[float(v) for v in ln.split()] for ln in lines[1:]],
                       dtype=np.float64).reshape(-1, 2)
    if bounds is None:
        if len(centers) == 0:
            raise LatticeError("lattice file has no posts and no bounds given")
        xmin, ymin = centers.min(axis=0) - radius
        xmax, ymax = centers.max(axis=0) + radius
        bounds = (float(xmin), float(ymin), float(xmax), float(ymax))
    return Lattice(centers, radius, bounds, spacing, sigma, seed,
                   min_surface_gap)


def empty_lattice(bounds: tuple[float, float, float, float] = (-1.0, -1.0, 1.0, 1.0),
                  radius: float = 0.045, spacing: float = 0.25) -> Lattice:
    """Open water: no posts, bounds only (used for traversal bookkeeping)."""
    return Lattice(np.zeros((0, 2)), radius, bounds, spacing)
