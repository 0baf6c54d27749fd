"""One-dimensional reference process: ordered grid, fixed-order linear
interpolation with linear extrapolation, and the monotone transform.

The interpolation plan is precomputed once per (grid, query set) pair and
reused across MCMC iterations; applying it is a pure gather plus affine
combination with no searching.  Queries outside the grid hull reuse the
slope of the adjacent boundary segment.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, EmptyGrid, LengthMismatch

DEFAULT_GRID_SIZE = 50

# Degeneracy guard for the linear transform variant (constant input).
LINEAR_EPS = 1e-12


@dataclass(frozen=True)
class RefGrid:
    """Strictly increasing grid of reference locations in [0, 1]."""

    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1 or x.shape[0] < 2:
            raise EmptyGrid(f"grid needs at least 2 nodes, got shape {x.shape}")
        if np.any(np.diff(x) <= 0.0):
            raise EmptyGrid("grid nodes must be strictly increasing")
        object.__setattr__(self, "x", x)

    @property
    def size(self) -> int:
        return self.x.shape[0]

    @classmethod
    def uniform(cls, n_g: int = DEFAULT_GRID_SIZE) -> "RefGrid":
        return cls(np.linspace(0.0, 1.0, n_g))


@dataclass(frozen=True)
class InterpPlan:
    """Precomputed query-to-segment mapping for one query set.

    `segment[k]` is the left grid node of the segment query k falls in
    (boundary segments are reused out of range); `weight[k]` is the affine
    coordinate within that segment and lies outside [0, 1] when
    extrapolating.
    """

    segment: np.ndarray
    weight: np.ndarray
    n_grid: int

    @property
    def query_count(self) -> int:
        return self.segment.shape[0]


def fo_approx_init(grid: RefGrid, queries) -> InterpPlan:
    """Build the fixed-order interpolation plan for a query set."""
    q = np.atleast_1d(np.asarray(queries, dtype=float))
    x = grid.x
    seg = np.searchsorted(x, q, side="right") - 1
    np.clip(seg, 0, grid.size - 2, out=seg)
    w = (q - x[seg]) / (x[seg + 1] - x[seg])
    return InterpPlan(segment=seg, weight=w, n_grid=grid.size)


def fo_approx(plan: InterpPlan, f_g) -> np.ndarray:
    """Apply a plan to grid ordinates: f[seg] + w * (f[seg+1] - f[seg]).

    This form is monotone in the weight under IEEE rounding, so
    nondecreasing ordinates yield nondecreasing outputs exactly.
    """
    f = np.asarray(f_g, dtype=float)
    if f.shape[0] != plan.n_grid:
        raise LengthMismatch(f"ordinates length {f.shape[0]} != grid size {plan.n_grid}")
    left = f[plan.segment]
    out = left + plan.weight * (f[plan.segment + 1] - left)
    # Hits on the right end of a segment (only the last grid node maps to
    # weight 1) must return that node's ordinate bit-for-bit.
    at_right = plan.weight == 1.0
    if np.any(at_right):
        out[at_right] = f[plan.segment[at_right] + 1]
    return out


def mono_transform(z_g) -> np.ndarray:
    """Exponentiate, cumulatively sum, normalize to [0, 1].

    Output is strictly increasing with endpoints exactly 0 and 1; the
    denominator cannot vanish because every increment is positive.
    """
    z = np.asarray(z_g, dtype=float)
    if z.shape[0] < 2:
        raise EmptyGrid("monotone transform needs at least 2 grid values")
    z2 = np.cumsum(np.exp(z))
    return (z2 - z2[0]) / (z2[-1] - z2[0])


def mono_transform_linear(z_g) -> np.ndarray:
    """Linear variant: subtract the minimum instead of exponentiating.

    Output is nondecreasing (flat where the minimum repeats).  Raises
    DegenerateInput for constant input, where the normalizer vanishes.
    """
    z = np.asarray(z_g, dtype=float)
    if z.shape[0] < 2:
        raise EmptyGrid("monotone transform needs at least 2 grid values")
    z2 = np.cumsum(z - np.min(z))
    rng = z2[-1] - z2[0]
    if rng < LINEAR_EPS:
        raise DegenerateInput("constant grid values: monotone image undefined")
    return (z2 - z2[0]) / rng


_TRANSFORMS = {"exp": mono_transform, "linear": mono_transform_linear}


def monoref(queries, grid: RefGrid, z_g, variant: str = "exp", plan: InterpPlan | None = None):
    """Monotone latent values at arbitrary query points.

    Composition of the monotone transform on the grid with fixed-order
    interpolation; pass a precomputed `plan` (built from the same grid and
    queries) to skip the per-call indexing.
    """
    if plan is None:
        plan = fo_approx_init(grid, queries)
    return fo_approx(plan, _TRANSFORMS[variant](z_g))
