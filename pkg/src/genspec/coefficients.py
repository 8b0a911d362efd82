"""Diagonal coefficient tensors K(x) = diag(kappa_1(x), .., kappa_d(x)).

Every field evaluates vectorised: ``field(x)`` with ``x`` of shape (..., d)
returns an array of the same shape holding the d diagonal entries.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .mesh import BoxDomain, StructuredGrid

# lattice used for the ellipticity check at construction
_CHECK_POINTS_PER_AXIS = 17


def _vec(values, d: int, name: str) -> tuple[float, ...]:
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.size == 1:
        arr = np.repeat(arr, d)
    if arr.shape != (d,):
        raise ValueError(f"{name} must have {d} entries, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class DiagonalTensorField:
    domain: BoxDomain

    kind = "abstract"

    @property
    def d(self) -> int:
        return self.domain.d

    def __post_init__(self):
        self._check_ellipticity()

    def _evaluate(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.d:
            raise ValueError(f"expected points of dimension {self.d}, got shape {x.shape}")
        if not np.all(self.domain.contains(x)):
            raise ValueError("evaluation point outside the domain")
        return self._evaluate(x)

    def eval(self, x) -> np.ndarray:
        return self(x)

    def extreme_candidates(self) -> np.ndarray:
        """Points where the field is known to attain extreme values."""
        return np.empty((0, self.d))

    def extra_values(self) -> np.ndarray:
        """Coefficient values attained on sets of positive measure, listed exactly."""
        return np.empty((0, self.d))

    def scaled(self, factor: float) -> "DiagonalTensorField":
        raise NotImplementedError

    def describe(self) -> dict:
        raise NotImplementedError

    def _check_ellipticity(self):
        axes = [np.linspace(a, b, _CHECK_POINTS_PER_AXIS) for a, b in zip(self.domain.lo, self.domain.hi)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        pts = np.concatenate([pts, self.extreme_candidates()])
        vals = np.concatenate([self._evaluate(pts).ravel(), self.extra_values().ravel()])
        if not np.all(np.isfinite(vals)) or vals.min() <= 0.0:
            raise ValueError(
                f"{self.kind} field is not uniformly elliptic: sampled minimum {vals.min():.6g} <= 0"
            )


@dataclass(frozen=True)
class Constant(DiagonalTensorField):
    values: tuple[float, ...] = ()

    kind = "constant"

    def __post_init__(self):
        object.__setattr__(self, "values", _vec(self.values, self.d, "field.values"))
        super().__post_init__()

    def _evaluate(self, x):
        return np.broadcast_to(np.asarray(self.values), x.shape).copy()

    def extra_values(self):
        return np.asarray([self.values])

    def scaled(self, factor):
        return replace(self, values=tuple(factor * v for v in self.values))

    def describe(self):
        return {"kind": self.kind, "values": list(self.values)}


@dataclass(frozen=True)
class AxisAffine(DiagonalTensorField):
    """kappa_i(x) = values[i] + slope[i] * x[axis[i]]."""

    values: tuple[float, ...] = ()
    slope: tuple[float, ...] = ()
    axis: tuple[int, ...] = ()

    kind = "axis_affine"

    def __post_init__(self):
        d = self.d
        object.__setattr__(self, "values", _vec(self.values, d, "field.values"))
        object.__setattr__(self, "slope", _vec(self.slope, d, "field.slope"))
        axis = tuple(int(a) for a in np.atleast_1d(self.axis)) or (0,)
        if len(axis) == 1:
            axis = axis * d
        if len(axis) != d or any(a < 0 or a >= d for a in axis):
            raise ValueError(f"field.axis must hold {d} axis numbers in [0, {d})")
        object.__setattr__(self, "axis", axis)
        super().__post_init__()

    def _evaluate(self, x):
        out = np.empty(x.shape)
        for i in range(self.d):
            out[..., i] = self.values[i] + self.slope[i] * x[..., self.axis[i]]
        return out

    def extreme_candidates(self):
        corners = np.array(np.meshgrid(*zip(self.domain.lo, self.domain.hi), indexing="ij"))
        return corners.reshape(self.d, -1).T

    def scaled(self, factor):
        return replace(
            self,
            values=tuple(factor * v for v in self.values),
            slope=tuple(factor * s for s in self.slope),
        )

    def describe(self):
        return {
            "kind": self.kind,
            "values": list(self.values),
            "slope": list(self.slope),
            "axis": list(self.axis),
        }


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    values: tuple[float, ...]


@dataclass(frozen=True)
class PiecewiseConstant(DiagonalTensorField):
    """Background value plus closed axis-aligned boxes; the first listed box wins on overlaps."""

    background: tuple[float, ...] = ()
    boxes: tuple[Box, ...] = ()

    kind = "piecewise_constant"

    def __post_init__(self):
        d = self.d
        object.__setattr__(self, "background", _vec(self.background, d, "field.background"))
        boxes = []
        for n, b in enumerate(self.boxes):
            if not isinstance(b, Box):
                b = Box(b["lo"], b["hi"], b["values"])
            lo = _vec(b.lo, d, f"field.boxes[{n}].lo")
            hi = _vec(b.hi, d, f"field.boxes[{n}].hi")
            if not all(a < c for a, c in zip(lo, hi)):
                raise ValueError(f"field.boxes[{n}] requires lo < hi on every axis")
            boxes.append(Box(lo, hi, _vec(b.values, d, f"field.boxes[{n}].values")))
        object.__setattr__(self, "boxes", tuple(boxes))
        super().__post_init__()

    def _evaluate(self, x):
        out = np.broadcast_to(np.asarray(self.background), x.shape).copy()
        assigned = np.zeros(x.shape[:-1], dtype=bool)
        for b in self.boxes:
            inside = np.all((x >= np.asarray(b.lo)) & (x <= np.asarray(b.hi)), axis=-1) & ~assigned
            out[inside] = b.values
            assigned |= inside
        return out

    def _intersects(self, b: Box) -> bool:
        return all(bl <= dh and bh >= dl for bl, bh, dl, dh in zip(b.lo, b.hi, self.domain.lo, self.domain.hi))

    def extra_values(self):
        vals = [b.values for b in self.boxes if self._intersects(b)]
        covered = any(
            all(bl <= dl and bh >= dh for bl, bh, dl, dh in zip(b.lo, b.hi, self.domain.lo, self.domain.hi))
            for b in self.boxes
        )
        if not covered:
            vals.insert(0, self.background)
        return np.asarray(vals).reshape(-1, self.d)

    def scaled(self, factor):
        return replace(
            self,
            background=tuple(factor * v for v in self.background),
            boxes=tuple(Box(b.lo, b.hi, tuple(factor * v for v in b.values)) for b in self.boxes),
        )

    def describe(self):
        return {
            "kind": self.kind,
            "background": list(self.background),
            "boxes": [{"lo": list(b.lo), "hi": list(b.hi), "values": list(b.values)} for b in self.boxes],
        }


@dataclass(frozen=True)
class SmoothRadial(DiagonalTensorField):
    """kappa_i(x) = values[i] + amplitude[i] * exp(-|x - center|^2 / width^2)."""

    values: tuple[float, ...] = ()
    amplitude: tuple[float, ...] = ()
    center: tuple[float, ...] = ()
    width: float = 1.0

    kind = "smooth_radial"

    def __post_init__(self):
        d = self.d
        object.__setattr__(self, "values", _vec(self.values, d, "field.values"))
        object.__setattr__(self, "amplitude", _vec(self.amplitude, d, "field.amplitude"))
        object.__setattr__(self, "center", _vec(self.center, d, "field.center"))
        if not float(self.width) > 0:
            raise ValueError("field.width must be positive")
        object.__setattr__(self, "width", float(self.width))
        super().__post_init__()

    def _evaluate(self, x):
        r2 = np.sum((x - np.asarray(self.center)) ** 2, axis=-1)
        g = np.exp(-r2 / self.width**2)
        return np.asarray(self.values) + np.asarray(self.amplitude) * g[..., None]

    def extreme_candidates(self):
        # the bump peaks at the center, or at the nearest point of the box
        nearest = np.clip(self.center, self.domain.lo, self.domain.hi)
        corners = np.array(np.meshgrid(*zip(self.domain.lo, self.domain.hi), indexing="ij"))
        return np.vstack([nearest[None, :], corners.reshape(self.d, -1).T])

    def scaled(self, factor):
        return replace(
            self,
            values=tuple(factor * v for v in self.values),
            amplitude=tuple(factor * a for a in self.amplitude),
        )

    def describe(self):
        return {
            "kind": self.kind,
            "values": list(self.values),
            "amplitude": list(self.amplitude),
            "center": list(self.center),
            "width": self.width,
        }


FIELD_KINDS = {
    cls.kind: cls for cls in (Constant, AxisAffine, PiecewiseConstant, SmoothRadial)
}


@dataclass(frozen=True)
class HullEstimate:
    lo: float
    hi: float
    samples_used: int

    def __post_init__(self):
        if not (np.isfinite(self.lo) and np.isfinite(self.hi) and 0 < self.lo <= self.hi):
            raise ValueError(f"invalid hull [{self.lo}, {self.hi}]")

    def contains(self, value, tol: float = 0.0):
        value = np.asarray(value)
        return (value >= self.lo - tol) & (value <= self.hi + tol)

    def to_dict(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "samples_used": self.samples_used}


def _lattice(grid: StructuredGrid, factor: int) -> np.ndarray:
    axes = [
        grid.domain.lo[k] + np.arange(factor * grid.cells[k] + 1) * (grid.spacing[k] / factor)
        for k in range(grid.d)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    # guard the last point against rounding past hi
    return np.clip(pts, grid.domain.lo, grid.domain.hi)


def estimate_hull(
    field: DiagonalTensorField,
    grid: StructuredGrid,
    oversample: int = 2,
    extra_points: np.ndarray | None = None,
) -> HullEstimate:
    """Sampled interval [min_i inf kappa_i, max_i sup kappa_i] over the closed domain.

    Scans grid nodes, cell centroids, every refined lattice with factor
    2..oversample (cumulative, so a larger factor never drops samples), the
    field's own extreme candidates, exact piecewise values and any
    ``extra_points`` (typically the quadrature points used in assembly).
    """
    oversample = max(int(oversample), 1)
    lo, hi, used = np.inf, -np.inf, 0

    def scan(values):
        nonlocal lo, hi, used
        if values.size:
            lo = min(lo, float(values.min()))
            hi = max(hi, float(values.max()))
            used += values.shape[0]

    scan(field(grid.all_node_points()))
    scan(field(grid.cell_centroids()))
    for m in range(2, oversample + 1):
        scan(field(_lattice(grid, m)))
    cand = field.extreme_candidates()
    if cand.size:
        scan(field(cand))
    scan(field.extra_values())
    if extra_points is not None:
        scan(field(np.asarray(extra_points).reshape(-1, field.d)))
    return HullEstimate(lo, hi, used)
