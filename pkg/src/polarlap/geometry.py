"""Polarization (two-point rearrangement) algebra on rasterized planar sets.

Sets are boolean cell indicators over a uniform square grid.  A
grid-compatible polarizer reduces to an integer reflection of cell/node
indices, so every set identity in this module is evaluated as exact boolean
algebra; no floating-point geometry enters the rearrangement loops.

Half-unit frame used internally: cell (ix, iy) carries integer coordinates
(2*ix+1, 2*iy+1) and node (ix, iy) carries (2*ix, 2*iy), both measured in
units of spacing/2 from the grid origin.  Compatible reflections act on
these integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy import ndimage

from .errors import (
    DegeneratePolarizer,
    IncompatiblePolarizer,
    MalformedDomain,
    NotAdmissible,
    OutOfBounds,
    PoolViolation,
)

DIRICHLET = "dirichlet"
NEUMANN = "neumann"

_SQRT2 = math.sqrt(2.0)
_NORMAL_TOL = 1e-9
_LINE_TOL = 1e-9

_CONN4 = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


# ---------------------------------------------------------------------------
# grid and raster sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid:
    """Uniform square-cell grid; cells (ix, iy) with 0 <= ix < nx, 0 <= iy < ny."""

    origin: tuple[float, float]
    spacing: float
    nx: int
    ny: int

    def __post_init__(self):
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "spacing", float(self.spacing))
        if not self.spacing > 0.0:
            raise ValueError("grid spacing must be positive")
        if self.nx < 2 or self.ny < 2:
            raise ValueError("grid must have at least 2x2 cells")

    @property
    def shape(self) -> tuple[int, int]:
        """Mask layout (ny, nx); index masks as mask[iy, ix]."""
        return (self.ny, self.nx)

    @property
    def node_shape(self) -> tuple[int, int]:
        return (self.ny + 1, self.nx + 1)

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        d = self.spacing
        x = self.origin[0] + (np.arange(self.nx) + 0.5) * d
        y = self.origin[1] + (np.arange(self.ny) + 0.5) * d
        return np.meshgrid(x, y)

    def node_coords(self) -> tuple[np.ndarray, np.ndarray]:
        d = self.spacing
        x = self.origin[0] + np.arange(self.nx + 1) * d
        y = self.origin[1] + np.arange(self.ny + 1) * d
        return np.meshgrid(x, y)

    def bbox(self) -> tuple[float, float, float, float]:
        ox, oy = self.origin
        return (ox, oy, ox + self.nx * self.spacing, oy + self.ny * self.spacing)


@dataclass(frozen=True)
class RasterSet:
    """Boolean indicator of a planar set: cell membership by cell-center test."""

    grid: Grid
    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool)
        if m.shape != self.grid.shape:
            raise ValueError(f"mask shape {m.shape} != grid shape {self.grid.shape}")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    def count(self) -> int:
        return int(self.mask.sum())

    def is_empty(self) -> bool:
        return not self.mask.any()

    def same_cells(self, other: "RasterSet") -> bool:
        return self.grid == other.grid and bool(np.array_equal(self.mask, other.mask))

    def is_subset(self, other: "RasterSet") -> bool:
        return bool(np.all(~self.mask | other.mask))

    def union(self, other: "RasterSet") -> "RasterSet":
        return RasterSet(self.grid, self.mask | other.mask)

    def intersect(self, other: "RasterSet") -> "RasterSet":
        return RasterSet(self.grid, self.mask & other.mask)

    def minus(self, other: "RasterSet") -> "RasterSet":
        return RasterSet(self.grid, self.mask & ~other.mask)

    def complement(self) -> "RasterSet":
        """Complement within the grid window."""
        return RasterSet(self.grid, ~self.mask)


def empty_raster(grid: Grid) -> RasterSet:
    return RasterSet(grid, np.zeros(grid.shape, dtype=bool))


def full_raster(grid: Grid) -> RasterSet:
    return RasterSet(grid, np.ones(grid.shape, dtype=bool))


# ---------------------------------------------------------------------------
# polarizers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Polarizer:
    """Open affine half-space H = {x : x . normal < offset}, |normal| = 1."""

    normal: tuple[float, float]
    offset: float

    def __post_init__(self):
        n = (float(self.normal[0]), float(self.normal[1]))
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))
        if abs(math.hypot(*n) - 1.0) > 1e-12:
            raise ValueError("polarizer normal must be a unit vector (within 1e-12)")

    def reflect(self, x) -> np.ndarray:
        """Mirror image of x across the boundary line of H (any unit normal)."""
        x = np.asarray(x, dtype=float)
        n = np.array(self.normal)
        return x - 2.0 * (x @ n - self.offset) * n

    def signed_distance(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(x @ np.array(self.normal) - self.offset)

    def contains(self, x) -> bool:
        """Strict open-half-space membership."""
        return self.signed_distance(x) < 0.0

    def grid_compatible(self, grid: Grid) -> bool:
        try:
            _reduce(self, grid)
        except IncompatiblePolarizer:
            return False
        return True


@dataclass(frozen=True)
class _Reduced:
    """Integer form of a compatible polarizer on a given grid.

    kind picks the linear functional on half-unit coordinates (U, V) of
    cells/nodes; H is the side {coord > t} when greater else {coord < t}.
    """

    kind: str  # "x" | "y" | "sum" | "diff"
    t: int
    greater: bool


# (unit normal, kind, greater, t_float(offset, grid))
_REDUCTIONS = (
    ((1.0, 0.0), "x", False, lambda s, g: 2.0 * (s - g.origin[0]) / g.spacing),
    ((-1.0, 0.0), "x", True, lambda s, g: 2.0 * (-s - g.origin[0]) / g.spacing),
    ((0.0, 1.0), "y", False, lambda s, g: 2.0 * (s - g.origin[1]) / g.spacing),
    ((0.0, -1.0), "y", True, lambda s, g: 2.0 * (-s - g.origin[1]) / g.spacing),
    ((1.0 / _SQRT2, 1.0 / _SQRT2), "sum", False,
     lambda s, g: 2.0 * (_SQRT2 * s - g.origin[0] - g.origin[1]) / g.spacing),
    ((-1.0 / _SQRT2, -1.0 / _SQRT2), "sum", True,
     lambda s, g: 2.0 * (-_SQRT2 * s - g.origin[0] - g.origin[1]) / g.spacing),
    ((1.0 / _SQRT2, -1.0 / _SQRT2), "diff", False,
     lambda s, g: 2.0 * (_SQRT2 * s - g.origin[0] + g.origin[1]) / g.spacing),
    ((-1.0 / _SQRT2, 1.0 / _SQRT2), "diff", True,
     lambda s, g: 2.0 * (-_SQRT2 * s - g.origin[0] + g.origin[1]) / g.spacing),
)


def _reduce(H: Polarizer, grid: Grid) -> _Reduced:
    nx_, ny_ = H.normal
    for (cx, cy), kind, greater, t_of in _REDUCTIONS:
        if abs(nx_ - cx) <= _NORMAL_TOL and abs(ny_ - cy) <= _NORMAL_TOL:
            tf = t_of(H.offset, grid)
            t = round(tf)
            if abs(tf - t) > _LINE_TOL:
                raise IncompatiblePolarizer(
                    f"line position {tf} is not aligned to half-cell units")
            if kind in ("sum", "diff") and t % 2 != 0:
                raise IncompatiblePolarizer(
                    "diagonal reflection line must pass through grid nodes")
            return _Reduced(kind, int(t), greater)
    raise IncompatiblePolarizer(
        f"normal {H.normal} is not axis-aligned or at 45 degrees")


def _offset_from_t(kind: str, greater: bool, t: int, grid: Grid) -> float:
    """Inverse of the t_float maps; used to report sweep positions."""
    ox, oy = grid.origin
    d = grid.spacing
    if kind == "x":
        v = ox + 0.5 * t * d
        return -v if greater else v
    if kind == "y":
        v = oy + 0.5 * t * d
        return -v if greater else v
    if kind == "sum":
        v = (ox + oy + 0.5 * t * d) / _SQRT2
        return -v if greater else v
    v = (ox - oy + 0.5 * t * d) / _SQRT2
    return -v if greater else v


def _cell_coord(kind: str, grid: Grid) -> np.ndarray:
    u = 2 * np.arange(grid.nx) + 1
    v = 2 * np.arange(grid.ny) + 1
    if kind == "x":
        return np.broadcast_to(u[None, :], grid.shape)
    if kind == "y":
        return np.broadcast_to(v[:, None], grid.shape)
    if kind == "sum":
        return u[None, :] + v[:, None]
    return u[None, :] - v[:, None]


def _node_coord(kind: str, grid: Grid) -> np.ndarray:
    u = 2 * np.arange(grid.nx + 1)
    v = 2 * np.arange(grid.ny + 1)
    if kind == "x":
        return np.broadcast_to(u[None, :], grid.node_shape)
    if kind == "y":
        return np.broadcast_to(v[:, None], grid.node_shape)
    if kind == "sum":
        return u[None, :] + v[:, None]
    return u[None, :] - v[:, None]


def _index_reflection(red: _Reduced, nx: int, ny: int, cells: bool):
    """Reflected (jx, jy) index arrays plus validity mask for cells or nodes."""
    if cells:
        ix = np.arange(nx)[None, :]
        iy = np.arange(ny)[:, None]
    else:
        nx, ny = nx + 1, ny + 1
        ix = np.arange(nx)[None, :]
        iy = np.arange(ny)[:, None]
    half = red.t // 2
    if red.kind == "x":
        jx = (red.t - 1 - ix) if cells else (red.t - ix)
        jy = iy + 0 * ix
        jx = jx + 0 * iy
    elif red.kind == "y":
        jy = (red.t - 1 - iy) if cells else (red.t - iy)
        jx = ix + 0 * iy
        jy = jy + 0 * ix
    elif red.kind == "sum":
        if cells:
            jx = half - 1 - iy + 0 * ix
            jy = half - 1 - ix + 0 * iy
        else:
            jx = half - iy + 0 * ix
            jy = half - ix + 0 * iy
    else:  # diff
        jx = iy + half + 0 * ix
        jy = ix - half + 0 * iy
    valid = (jx >= 0) & (jx < nx) & (jy >= 0) & (jy < ny)
    return jx, jy, valid


def _cell_tables(H: Polarizer, A_grid: Grid):
    """Reduction plus all per-cell arrays needed by the set operations."""
    red = _reduce(H, A_grid)
    coord = _cell_coord(red.kind, A_grid)
    in_h = (coord > red.t) if red.greater else (coord < red.t)
    on_line = coord == red.t
    jx, jy, valid = _index_reflection(red, A_grid.nx, A_grid.ny, cells=True)
    return red, in_h, on_line, jx, jy, valid


def _gather(mask: np.ndarray, jx, jy, valid) -> np.ndarray:
    """mask value at the reflected index; False where the image leaves the window."""
    out = np.zeros_like(mask)
    jxc = np.clip(jx, 0, mask.shape[1] - 1)
    jyc = np.clip(jy, 0, mask.shape[0] - 1)
    np.copyto(out, mask[jyc, jxc], where=valid)
    return out


# ---------------------------------------------------------------------------
# point reflection and set polarization
# ---------------------------------------------------------------------------


def reflect_point(H: Polarizer, x) -> np.ndarray:
    """Mirror x across the boundary line of H."""
    return H.reflect(x)


def polarize_set(H: Polarizer, A: RasterSet) -> RasterSet:
    """Two-point rearrangement pushing A into H.

    Cellwise evaluation of [(A | sA) & H] | [A & sA] where sA is the
    reflected set.  Raises OutOfBounds when an active cell would be
    rearranged outside the grid window (result not representable).
    """
    red, in_h, on_line, jx, jy, valid = _cell_tables(H, A.grid)
    m = A.mask
    mref = _gather(m, jx, jy, valid)
    strict_comp = ~in_h & ~on_line
    if np.any(m & strict_comp & ~valid):
        raise OutOfBounds("polarization escapes the grid window")
    out = (in_h & (m | mref)) | (m & mref)
    return RasterSet(A.grid, out)


def dual_polarize_set(H: Polarizer, A: RasterSet) -> RasterSet:
    """Companion rearrangement pushing A into the complement of H."""
    red, in_h, on_line, jx, jy, valid = _cell_tables(H, A.grid)
    m = A.mask
    mref = _gather(m, jx, jy, valid)
    if np.any(m & in_h & ~valid):
        raise OutOfBounds("dual polarization escapes the grid window")
    out = (~in_h & (m | mref)) | (m & mref)
    return RasterSet(A.grid, out)


def is_polarization_invariant(H: Polarizer, A: RasterSet) -> bool:
    """Subset test sigma(A) & H <= A, equivalent to polarize_set(H, A) == A.

    Reflections landing outside the window count as points of sigma(A)
    that are not in A, so no escape handling is needed here.
    """
    red, in_h, on_line, jx, jy, valid = _cell_tables(H, A.grid)
    m = A.mask
    mref = _gather(m, jx, jy, valid)
    src = m & ~in_h & ~on_line  # active cells whose mirror lies in open H
    viol = src & (~valid | ~mref)
    return not bool(viol.any())


def is_dual_polarization_invariant(H: Polarizer, A: RasterSet) -> bool:
    """Subset test sigma(A) & H^c <= A, equivalent to dual_polarize_set(H, A) == A."""
    red, in_h, on_line, jx, jy, valid = _cell_tables(H, A.grid)
    m = A.mask
    mref = _gather(m, jx, jy, valid)
    src = m & in_h
    viol = src & (~valid | ~mref)
    return not bool(viol.any())


def reflect_set(H: Polarizer, A: RasterSet) -> RasterSet:
    """Mirror image of the raster; raises OutOfBounds if it leaves the window."""
    red, in_h, on_line, jx, jy, valid = _cell_tables(H, A.grid)
    if np.any(A.mask & ~valid):
        raise OutOfBounds("reflected set leaves the grid window")
    return RasterSet(A.grid, _gather(A.mask, jx, jy, valid))


def is_reflection_symmetric(H: Polarizer, A: RasterSet) -> bool:
    """True iff sigma_H(A) = A cellwise (images outside the window count)."""
    red, in_h, on_line, jx, jy, valid = _cell_tables(H, A.grid)
    m = A.mask
    if np.any(m & ~valid):
        return False
    return bool(np.array_equal(_gather(m, jx, jy, valid), m))


def witness_sets(H: Polarizer, omega: RasterSet) -> tuple[RasterSet, RasterSet]:
    """Invariance witnesses A_H = s(O) & O^c & H and B_H = O & s(O^c) & H.

    A_H is nonempty iff the polarization moves omega; B_H is nonempty iff
    the polarization differs from the reflected set.
    """
    red, in_h, on_line, jx, jy, valid = _cell_tables(H, omega.grid)
    m = omega.mask
    mref = _gather(m, jx, jy, valid)
    if np.any(m & ~in_h & ~on_line & ~valid):
        raise OutOfBounds("witness set A_H has members outside the grid window")
    a_h = in_h & ~m & mref
    b_h = in_h & m & ~mref
    return RasterSet(omega.grid, a_h), RasterSet(omega.grid, b_h)


# ---------------------------------------------------------------------------
# symmetry predicates
# ---------------------------------------------------------------------------

_AXIS_NORMALS = {
    "x": (1.0, 0.0),
    "y": (0.0, 1.0),
    "diag": (1.0 / _SQRT2, 1.0 / _SQRT2),
    "antidiag": (1.0 / _SQRT2, -1.0 / _SQRT2),
}


def axis_polarizer(axis: str, offset: float) -> Polarizer:
    """Half-space {x . n < offset} for the named unit normal n."""
    if axis not in _AXIS_NORMALS:
        raise ValueError(f"axis must be one of {sorted(_AXIS_NORMALS)}, got {axis!r}")
    return Polarizer(_AXIS_NORMALS[axis], offset)


def _invariant_reduced(red: _Reduced, A: RasterSet) -> bool:
    coord = _cell_coord(red.kind, A.grid)
    in_h = (coord > red.t) if red.greater else (coord < red.t)
    on_line = coord == red.t
    jx, jy, valid = _index_reflection(red, A.grid.nx, A.grid.ny, cells=True)
    m = A.mask
    mref = _gather(m, jx, jy, valid)
    src = m & ~in_h & ~on_line
    return not bool((src & (~valid | ~mref)).any())


def _dual_invariant_reduced(red: _Reduced, A: RasterSet) -> bool:
    coord = _cell_coord(red.kind, A.grid)
    in_h = (coord > red.t) if red.greater else (coord < red.t)
    jx, jy, valid = _index_reflection(red, A.grid.nx, A.grid.ny, cells=True)
    m = A.mask
    mref = _gather(m, jx, jy, valid)
    src = m & in_h
    return not bool((src & (~valid | ~mref)).any())


def steiner_diagnostics(A: RasterSet, axis: str, offset: float):
    """(is_steiner_symmetric, violating_offset_or_None).

    Sweeps every grid-compatible parallel line inside the window: the set
    must be invariant under polarization toward the line from above the
    pivot and under dual polarization from below (finitely many exact
    tests).
    """
    H0 = axis_polarizer(axis, offset)
    red0 = _reduce(H0, A.grid)
    coord = _cell_coord(red0.kind, A.grid)
    lo, hi = int(coord.min()) - 2, int(coord.max()) + 2
    step = 2 if red0.kind in ("sum", "diff") else 1
    start = lo + (red0.t - lo) % step
    for t in range(start, hi + 1, step):
        red = _Reduced(red0.kind, t, red0.greater)
        # offsets on the H side of the pivot use the primal test, the other
        # side the dual test; orientation flips for 'greater' polarizers
        above = (t <= red0.t) if red0.greater else (t >= red0.t)
        below = (t >= red0.t) if red0.greater else (t <= red0.t)
        ok = True
        if above and not _invariant_reduced(red, A):
            ok = False
        if ok and below and not _dual_invariant_reduced(red, A):
            ok = False
        if not ok:
            return False, _offset_from_t(red0.kind, red0.greater, t, A.grid)
    return True, None


def is_steiner_symmetric(A: RasterSet, axis: str, offset: float) -> bool:
    """True iff every line section orthogonal to the axis is a centered run."""
    ok, _ = steiner_diagnostics(A, axis, offset)
    return ok


def directionally_convex(A: RasterSet, axis: str) -> bool:
    """Every line of cells parallel to the named direction is one contiguous run."""
    if axis not in _AXIS_NORMALS:
        raise ValueError(f"axis must be one of {sorted(_AXIS_NORMALS)}")
    m = A.mask
    if axis == "x":
        lines = [m[iy, :] for iy in range(m.shape[0])]
    elif axis == "y":
        lines = [m[:, ix] for ix in range(m.shape[1])]
    else:
        k = 1 if axis == "diag" else -1
        lines = [np.diagonal(m[::k] if k < 0 else m, offset=off)
                 for off in range(-m.shape[0] + 1, m.shape[1])]
    for line in lines:
        idx = np.flatnonzero(line)
        if idx.size and idx[-1] - idx[0] + 1 != idx.size:
            return False
    return True


def is_foliated_schwarz(A: RasterSet, a, eta, pool: Sequence[Polarizer]) -> bool:
    """Necessary test for foliated Schwarz symmetry about the ray a + R+ eta.

    Checks P^H(A) == sigma_H(A) cellwise for every polarizer in the pool.
    The pool is finite, so this is a necessary condition only.
    """
    a = np.asarray(a, dtype=float)
    eta = np.asarray(eta, dtype=float)
    for H in pool:
        n = np.array(H.normal)
        if abs(float(a @ n) - H.offset) > 1e-9:
            raise PoolViolation("anchor point is not on the polarizer boundary")
        if float(eta @ n) >= -1e-12:
            raise PoolViolation("axis ray is not inside the open half-space")
        red, in_h, on_line, jx, jy, valid = _cell_tables(H, A.grid)
        m = A.mask
        mref = _gather(m, jx, jy, valid)
        dual = (~in_h & (m | mref)) | (m & mref)
        if not np.array_equal(dual, mref):
            return False
        # reflections of active cells escaping the window on the open-H side
        # belong to sigma(A) but not to the dual polarization
        if np.any(m & ~in_h & ~on_line & ~valid):
            return False
    return True


def fss_polarizer_pool(a, eta, grid: Grid, max_pool: int = 8) -> list[Polarizer]:
    """Grid-compatible polarizers with a on the boundary and a + R+ eta inside.

    In the plane at most three of the eight compatible normals satisfy the
    ray condition for an axis-aligned eta, so pools are typically smaller
    than max_pool.
    """
    a = np.asarray(a, dtype=float)
    eta = np.asarray(eta, dtype=float)
    pool = []
    for (cx, cy), _, _, _ in _REDUCTIONS:
        n = np.array([cx, cy])
        if float(eta @ n) >= -1e-12:
            continue
        H = Polarizer((cx, cy), float(a @ n))
        if H.grid_compatible(grid):
            pool.append(H)
        if len(pool) >= max_pool:
            break
    return pool


def default_polarizer_pool(grid: Grid) -> list[Polarizer]:
    """Polarizers whose reflection maps the grid window onto itself.

    These are the center lines (both orientations) plus, for square grids,
    the two main diagonals; the induced cell map is a permutation of the
    window, so every set identity is exactly testable against them.
    """
    ox, oy = grid.origin
    d = grid.spacing
    cx = ox + 0.5 * grid.nx * d
    cy = oy + 0.5 * grid.ny * d
    pool = [
        Polarizer((1.0, 0.0), cx),
        Polarizer((-1.0, 0.0), -cx),
        Polarizer((0.0, 1.0), cy),
        Polarizer((0.0, -1.0), -cy),
    ]
    if grid.nx == grid.ny:
        anti = ox + oy + grid.nx * d  # x + y on the anti-diagonal
        main = ox - oy                # x - y on the main diagonal
        pool += [
            Polarizer((1.0 / _SQRT2, 1.0 / _SQRT2), anti / _SQRT2),
            Polarizer((-1.0 / _SQRT2, -1.0 / _SQRT2), -anti / _SQRT2),
            Polarizer((1.0 / _SQRT2, -1.0 / _SQRT2), main / _SQRT2),
            Polarizer((-1.0 / _SQRT2, 1.0 / _SQRT2), -main / _SQRT2),
        ]
    return pool


# ---------------------------------------------------------------------------
# rotation polarizer and obstacle motions
# ---------------------------------------------------------------------------


def _rotation_matrix(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def rotation_polarizer(a, eta, s: float, t: float) -> Polarizer:
    """Half-space whose reflection carries the rotated ray at angle acos(t)
    onto the ray at angle acos(s), anchored at a with a + R+ eta inside.
    """
    if not (-1.0 <= s <= 1.0 and -1.0 <= t <= 1.0):
        raise ValueError("rotation parameters must lie in [-1, 1]")
    if s == t:
        raise DegeneratePolarizer("rotation angles coincide; normal vanishes")
    a = np.asarray(a, dtype=float)
    eta = np.asarray(eta, dtype=float)
    rs = _rotation_matrix(math.acos(s)) @ eta
    rt = _rotation_matrix(math.acos(t)) @ eta
    h = rs - rt
    if s > t:
        h = -h  # orient so that eta . h < 0, putting the reference ray in H
    norm = float(np.hypot(*h))
    if norm < 1e-15:
        raise DegeneratePolarizer("rotation angles coincide; normal vanishes")
    n = h / norm
    return Polarizer((float(n[0]), float(n[1])), float(a @ n))


# ---------------------------------------------------------------------------
# shape specifications and rasterization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Disk:
    center: tuple[float, float]
    radius: float
    closed: bool = False

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("disk radius must be positive")


@dataclass(frozen=True)
class Rectangle:
    lo: tuple[float, float]
    hi: tuple[float, float]
    closed: bool = False

    def __post_init__(self):
        lo = (min(self.lo[0], self.hi[0]), min(self.lo[1], self.hi[1]))
        hi = (max(self.lo[0], self.hi[0]), max(self.lo[1], self.hi[1]))
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if not (hi[0] > lo[0] and hi[1] > lo[1]):
            raise ValueError("rectangle must have positive extent")


@dataclass(frozen=True)
class Rhombus:
    """|x - cx| + |y - cy| <= 2 * half_diagonal (or < when open)."""

    center: tuple[float, float]
    half_diagonal: float
    closed: bool = False

    def __post_init__(self):
        if not self.half_diagonal > 0:
            raise ValueError("rhombus half-diagonal must be positive")


@dataclass(frozen=True)
class Ellipse:
    center: tuple[float, float]
    semi_axes: tuple[float, float]
    angle: float = 0.0
    closed: bool = False

    def __post_init__(self):
        if not (self.semi_axes[0] > 0 and self.semi_axes[1] > 0):
            raise ValueError("ellipse semi-axes must be positive")


@dataclass(frozen=True)
class UnionShape:
    members: tuple

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ValueError("union shape needs at least one member")


ShapeSpec = Union[Disk, Rectangle, Rhombus, Ellipse, UnionShape]


def shape_membership(shape: ShapeSpec, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Pointwise membership; closed shapes use <=, open use <."""
    if isinstance(shape, Disk):
        q = (X - shape.center[0]) ** 2 + (Y - shape.center[1]) ** 2
        r2 = shape.radius ** 2
        return q <= r2 if shape.closed else q < r2
    if isinstance(shape, Rectangle):
        (x0, y0), (x1, y1) = shape.lo, shape.hi
        if shape.closed:
            return (X >= x0) & (X <= x1) & (Y >= y0) & (Y <= y1)
        return (X > x0) & (X < x1) & (Y > y0) & (Y < y1)
    if isinstance(shape, Rhombus):
        q = np.abs(X - shape.center[0]) + np.abs(Y - shape.center[1])
        lim = 2.0 * shape.half_diagonal
        return q <= lim if shape.closed else q < lim
    if isinstance(shape, Ellipse):
        c, s = math.cos(shape.angle), math.sin(shape.angle)
        dx, dy = X - shape.center[0], Y - shape.center[1]
        u = (c * dx + s * dy) / shape.semi_axes[0]
        v = (-s * dx + c * dy) / shape.semi_axes[1]
        q = u * u + v * v
        return q <= 1.0 if shape.closed else q < 1.0
    if isinstance(shape, UnionShape):
        out = shape_membership(shape.members[0], X, Y)
        for member in shape.members[1:]:
            out = out | shape_membership(member, X, Y)
        return out
    raise TypeError(f"unknown shape {type(shape).__name__}")


def shape_bbox(shape: ShapeSpec) -> tuple[float, float, float, float]:
    if isinstance(shape, Disk):
        (cx, cy), r = shape.center, shape.radius
        return (cx - r, cy - r, cx + r, cy + r)
    if isinstance(shape, Rectangle):
        return (*shape.lo, *shape.hi)
    if isinstance(shape, Rhombus):
        (cx, cy), w = shape.center, 2.0 * shape.half_diagonal
        return (cx - w, cy - w, cx + w, cy + w)
    if isinstance(shape, Ellipse):
        a, b = shape.semi_axes
        c, s = math.cos(shape.angle), math.sin(shape.angle)
        hx = math.hypot(a * c, b * s)
        hy = math.hypot(a * s, b * c)
        (cx, cy) = shape.center
        return (cx - hx, cy - hy, cx + hx, cy + hy)
    if isinstance(shape, UnionShape):
        boxes = [shape_bbox(m) for m in shape.members]
        return (min(b[0] for b in boxes), min(b[1] for b in boxes),
                max(b[2] for b in boxes), max(b[3] for b in boxes))
    raise TypeError(f"unknown shape {type(shape).__name__}")


def rasterize(shape: ShapeSpec, grid: Grid) -> RasterSet:
    """Cell-center sampling of the shape; deterministic."""
    bx0, by0, bx1, by1 = shape_bbox(shape)
    gx0, gy0, gx1, gy1 = grid.bbox()
    tol = 1e-9 * grid.spacing
    if bx0 < gx0 - tol or by0 < gy0 - tol or bx1 > gx1 + tol or by1 > gy1 + tol:
        raise OutOfBounds("shape bounding box exceeds the grid window")
    X, Y = grid.cell_centers()
    return RasterSet(grid, shape_membership(shape, X, Y))


def translated_obstacle(shape: ShapeSpec, h, s: float) -> ShapeSpec:
    """Shape shifted by s * h."""
    h = np.asarray(h, dtype=float)
    dx, dy = float(s * h[0]), float(s * h[1])

    def shift(sp):
        if isinstance(sp, Disk):
            return Disk((sp.center[0] + dx, sp.center[1] + dy), sp.radius, sp.closed)
        if isinstance(sp, Rectangle):
            return Rectangle((sp.lo[0] + dx, sp.lo[1] + dy),
                             (sp.hi[0] + dx, sp.hi[1] + dy), sp.closed)
        if isinstance(sp, Rhombus):
            return Rhombus((sp.center[0] + dx, sp.center[1] + dy),
                           sp.half_diagonal, sp.closed)
        if isinstance(sp, Ellipse):
            return Ellipse((sp.center[0] + dx, sp.center[1] + dy),
                           sp.semi_axes, sp.angle, sp.closed)
        if isinstance(sp, UnionShape):
            return UnionShape(tuple(shift(m) for m in sp.members))
        raise TypeError(f"unknown shape {type(sp).__name__}")

    return shift(shape)


def rotated_obstacle(shape: ShapeSpec, a, eta, s: float) -> ShapeSpec:
    """Shape conjugated by the in-plane rotation about a with angle acos(s).

    The rotation turns counter-clockwise starting from the direction eta.
    Disks and ellipses transform exactly; rectangles and rhombi are only
    accepted at the identity rotation (s = 1).
    """
    if not -1.0 <= s <= 1.0:
        raise ValueError("rotation parameter must lie in [-1, 1]")
    theta = math.acos(s)
    a = np.asarray(a, dtype=float)
    R = _rotation_matrix(theta)

    def rot_point(p):
        q = a + R @ (np.asarray(p, dtype=float) - a)
        return (float(q[0]), float(q[1]))

    def rot(sp):
        if isinstance(sp, Disk):
            return Disk(rot_point(sp.center), sp.radius, sp.closed)
        if isinstance(sp, Ellipse):
            return Ellipse(rot_point(sp.center), sp.semi_axes,
                           sp.angle + theta, sp.closed)
        if isinstance(sp, UnionShape):
            return UnionShape(tuple(rot(m) for m in sp.members))
        if isinstance(sp, (Rectangle, Rhombus)):
            if abs(theta) <= 1e-12:
                return sp
            raise ValueError(
                f"{type(sp).__name__} cannot represent a rotated pose; "
                "use an ellipse or a union of disks")
        raise TypeError(f"unknown shape {type(sp).__name__}")

    return rot(shape)


# ---------------------------------------------------------------------------
# connectivity
# ---------------------------------------------------------------------------


def connected_components(A: RasterSet) -> tuple[int, np.ndarray]:
    """4-connectivity components; labels 1..count in scan order, 0 outside."""
    raw, n = ndimage.label(A.mask, structure=_CONN4)
    if n == 0:
        return 0, raw
    flat = raw.ravel()
    order = flat[flat > 0]
    _, first = np.unique(order, return_index=True)
    remap = np.zeros(n + 1, dtype=raw.dtype)
    for new, old in enumerate(order[np.sort(first)], start=1):
        remap[old] = new
    return int(n), remap[raw]


def _dilate4(mask: np.ndarray) -> np.ndarray:
    out = mask.copy()
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    return out


# ---------------------------------------------------------------------------
# punctured domains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PuncturedDomain:
    """Outer raster set minus closed obstacle rasters, with boundary labels.

    bc_obstacles optionally overrides bc_inner per obstacle (needed for the
    rotation scenarios where one hole is Neumann and another Dirichlet);
    bc_inner remains the label for holes without an override, including
    pockets of the outer set.
    """

    outer: RasterSet
    obstacles: tuple
    bc_outer: str = DIRICHLET
    bc_inner: str = DIRICHLET
    bc_obstacles: Optional[tuple] = None
    allow_pure_neumann: bool = False

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        if self.bc_obstacles is None:
            object.__setattr__(self, "bc_obstacles",
                               tuple(self.bc_inner for _ in self.obstacles))
        else:
            object.__setattr__(self, "bc_obstacles", tuple(self.bc_obstacles))
        for bc in (self.bc_outer, self.bc_inner, *self.bc_obstacles):
            if bc not in (DIRICHLET, NEUMANN):
                raise ValueError(f"boundary label must be dirichlet or neumann, got {bc!r}")
        if len(self.bc_obstacles) != len(self.obstacles):
            raise ValueError("bc_obstacles length must match obstacles")
        self._validate()

    def _validate(self):
        g = self.outer.grid
        outer = self.outer.mask
        if not outer.any():
            raise MalformedDomain("outer set is empty")
        for k, ob in enumerate(self.obstacles):
            if ob.grid != g:
                raise MalformedDomain("obstacle grid differs from outer grid")
            if ob.is_empty():
                raise MalformedDomain(f"obstacle {k} is empty")
            if not np.all(~_dilate4(ob.mask) | outer):
                raise MalformedDomain(
                    f"obstacle {k} is not separated from the outer boundary "
                    "by a free cell ring")
        for i in range(len(self.obstacles)):
            di = _dilate4(self.obstacles[i].mask)
            for j in range(i + 1, len(self.obstacles)):
                if np.any(di & self.obstacles[j].mask):
                    raise MalformedDomain(
                        f"obstacles {i} and {j} share a cell or an edge")
        free = self.free().mask
        if not free.any():
            raise MalformedDomain("no free cells remain")
        n, _ = connected_components(RasterSet(g, free))
        if n != 1:
            raise MalformedDomain(f"free region has {n} components, expected 1")
        if not self.allow_pure_neumann and not self._has_dirichlet():
            raise MalformedDomain(
                "no Dirichlet boundary family; pass allow_pure_neumann=True "
                "to request the pure-Neumann problem")

    def _has_dirichlet(self) -> bool:
        if self.bc_outer == DIRICHLET:
            return True
        if any(bc == DIRICHLET for bc in self.bc_obstacles):
            return True
        return self.bc_inner == DIRICHLET and self._n_pockets() > 0

    def _n_pockets(self) -> int:
        comp = np.pad(~self.outer.mask, 1, constant_values=True)
        labels, n = ndimage.label(comp, structure=_CONN4)
        unbounded = labels[0, 0]
        covered = set()
        for ob in self.obstacles:
            covered.update(np.unique(labels[1:-1, 1:-1][ob.mask]).tolist())
        bounded = set(range(1, n + 1)) - {unbounded}
        return len(bounded - covered)

    @property
    def grid(self) -> Grid:
        return self.outer.grid

    def obstacle_union(self) -> RasterSet:
        m = np.zeros(self.grid.shape, dtype=bool)
        for ob in self.obstacles:
            m |= ob.mask
        return RasterSet(self.grid, m)

    def free(self) -> RasterSet:
        return RasterSet(self.grid, self.outer.mask & ~self.obstacle_union().mask)


def polarize_punctured(H: Polarizer, D: PuncturedDomain) -> PuncturedDomain:
    """Polarize the outer set and dual-polarize the obstacle union.

    Requires the reflected obstacle cells to stay inside the outer set
    (admissible polarizer); the rearranged obstacle union is re-split into
    edge-connected components carrying their source boundary labels.
    """
    grid = D.grid
    red, in_h, on_line, jx, jy, valid = _cell_tables(H, grid)
    union = D.obstacle_union().mask
    if union.any():
        src = union & valid
        if np.any(union & ~valid):
            raise NotAdmissible("reflected obstacle leaves the grid window")
        dest_ok = np.zeros_like(union)
        jxc = np.clip(jx, 0, grid.nx - 1)
        jyc = np.clip(jy, 0, grid.ny - 1)
        np.copyto(dest_ok, D.outer.mask[jyc, jxc], where=valid)
        if np.any(union & ~dest_ok):
            raise NotAdmissible("reflected obstacle leaves the outer set")

    outer_new = polarize_set(H, D.outer)

    labels = np.full(grid.shape, -1, dtype=np.int32)
    for k, ob in enumerate(D.obstacles):
        labels[ob.mask] = k
    mref = _gather(union, jx, jy, valid)
    lref = _gather(labels + 1, jx, jy, valid) - 1  # -1 stays -1 outside
    out = (~in_h & (union | mref)) | (union & mref)
    lab_out = np.full(grid.shape, -1, dtype=np.int32)
    lab_out[out & union] = labels[out & union]
    moved = out & ~union
    lab_out[moved] = lref[moved]

    n, comp = connected_components(RasterSet(grid, out))
    new_obstacles = []
    new_bcs = []
    for c in range(1, n + 1):
        sel = comp == c
        srcs = np.unique(lab_out[sel])
        bcs = {D.bc_obstacles[k] for k in srcs}
        if len(bcs) != 1:
            raise MalformedDomain(
                "dual polarization merged obstacles with different boundary labels")
        new_obstacles.append(RasterSet(grid, sel))
        new_bcs.append(bcs.pop())

    return PuncturedDomain(outer_new, tuple(new_obstacles), D.bc_outer,
                           D.bc_inner, tuple(new_bcs), D.allow_pure_neumann)
