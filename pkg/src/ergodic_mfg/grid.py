"""Cell-centered tensor grids on a truncated box, fields and finite differences.

Operators are sparse matrices acting on row-major flattened cell values.
Two boundary modes are supported: ``periodic`` wraps indices, ``no-flux``
uses even reflection across the walls (ghost ``j < 0`` maps to ``-j-1``).
Scalar Neumann data and vanishing normal fluxes both follow from that choice
because the divergence is defined as the negative transpose of the gradient.
"""

from __future__ import annotations

import functools
import io
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInputError

__all__ = [
    "Domain",
    "Field",
    "VectorField",
    "FlowPair",
    "integrate",
    "lp_norm",
    "gradient",
    "divergence",
    "laplacian",
    "fp_residual",
    "gradient_operators",
    "laplacian_operator",
    "resample",
    "write_field",
    "read_field",
]

BOUNDARIES = ("periodic", "no-flux")

# centered first/second derivative stencils (offsets, weights) by order
_FIRST = {
    2: ((-1, 1), (-0.5, 0.5)),
    4: ((-2, -1, 1, 2), (1 / 12, -8 / 12, 8 / 12, -1 / 12)),
}
_SECOND = {
    2: ((-1, 0, 1), (1.0, -2.0, 1.0)),
    4: ((-2, -1, 0, 1, 2), (-1 / 12, 16 / 12, -30 / 12, 16 / 12, -1 / 12)),
}


@dataclass(frozen=True)
class Domain:
    dim: int
    half_width: float
    points_per_axis: int
    boundary: str = "no-flux"

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise InvalidInputError(f"dim must be 1 or 2, got {self.dim}")
        R = float(self.half_width)
        if not (math.isfinite(R) and R > 0):
            raise InvalidInputError(f"half_width must be positive, got {self.half_width}")
        object.__setattr__(self, "half_width", R)
        if int(self.points_per_axis) != self.points_per_axis or self.points_per_axis < 16:
            raise InvalidInputError("points_per_axis must be an integer >= 16")
        object.__setattr__(self, "points_per_axis", int(self.points_per_axis))
        if self.boundary not in BOUNDARIES:
            raise InvalidInputError(f"boundary must be one of {BOUNDARIES}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def shape(self):
        return (self.points_per_axis,) * self.dim

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing ** self.dim

    @property
    def centers(self) -> np.ndarray:
        """Cell centers along one axis."""
        h = self.spacing
        return -self.half_width + (np.arange(self.points_per_axis) + 0.5) * h

    @property
    def mesh(self):
        return np.meshgrid(*([self.centers] * self.dim), indexing="ij")

    @property
    def points(self) -> np.ndarray:
        """Cell centers with components on the last axis."""
        return np.stack(self.mesh, axis=-1)

    @property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(x ** 2 for x in self.mesh))

    @property
    def center_index(self) -> int:
        """Flat index of the cell holding the normalization point of u."""
        c = self.points_per_axis // 2
        return int(np.ravel_multi_index((c,) * self.dim, self.shape))

    def dilated(self, t: float) -> "Domain":
        """Domain of x -> f(t x): coordinates shrink by 1/t."""
        return Domain(self.dim, self.half_width / t, self.points_per_axis, self.boundary)


def _check_values(values, shape, what):
    a = np.array(values, dtype=float)
    if a.shape != shape:
        raise InvalidInputError(f"{what} values have shape {a.shape}, expected {shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{what} values must be finite")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Field:
    domain: Domain
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _check_values(self.values, self.domain.shape, "field"))

    @classmethod
    def from_function(cls, domain, fn):
        return cls(domain, fn(*domain.mesh))

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def with_values(self, values) -> "Field":
        return Field(self.domain, values)

    def dilate(self, t: float, scale: float = 1.0) -> "Field":
        """The field x -> scale * f(t x) by metadata rescaling."""
        return Field(self.domain.dilated(t), scale * self.values)


@dataclass(frozen=True, eq=False)
class VectorField:
    domain: Domain
    values: np.ndarray

    def __post_init__(self):
        shape = (self.domain.dim,) + self.domain.shape
        object.__setattr__(self, "values", _check_values(self.values, shape, "vector field"))

    @property
    def pointwise(self) -> np.ndarray:
        """Values with components on the last axis."""
        return np.moveaxis(self.values, 0, -1)

    def dilate(self, t: float, scale: float = 1.0) -> "VectorField":
        return VectorField(self.domain.dilated(t), scale * self.values)


@dataclass(frozen=True, eq=False)
class FlowPair:
    m: Field
    w: VectorField

    def __post_init__(self):
        if self.m.domain != self.w.domain:
            raise InvalidInputError("m and w must live on the same domain")

    @property
    def domain(self) -> Domain:
        return self.m.domain

    def is_admissible(self, tol: float, order: int = 2) -> bool:
        return (np.all(self.m.values >= 0) and integrate(self.m) > 0
                and fp_residual(self, order) <= tol)


def integrate(f) -> float:
    """Midpoint rule; exact for cell-wise constants."""
    return float(f.domain.cell_volume * np.sum(f.values))


def lp_norm(f: Field, p: float) -> float:
    if p < 1:
        raise InvalidInputError("p must be >= 1")
    return float((f.domain.cell_volume * np.sum(np.abs(f.values) ** p)) ** (1.0 / p))


def _axis_matrix(N, offsets, weights, boundary):
    rows, cols, vals = [], [], []
    idx = np.arange(N)
    for off, wt in zip(offsets, weights):
        j = idx + off
        if boundary == "periodic":
            j = j % N
        else:
            j = np.where(j < 0, -j - 1, j)
            j = np.where(j >= N, 2 * N - j - 1, j)
        rows.append(idx)
        cols.append(j)
        vals.append(np.full(N, wt))
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N, N))
    return A.tocsr()


def _check_order(order):
    if order not in _FIRST:
        raise InvalidInputError(f"stencil order must be 2 or 4, got {order}")


def _lift(A, axis, dim, N):
    if dim == 1:
        return A.tocsr()
    eye = sp.identity(N, format="csr")
    return (sp.kron(A, eye) if axis == 0 else sp.kron(eye, A)).tocsr()


@functools.lru_cache(maxsize=32)
def gradient_operators(domain: Domain, order: int = 2):
    """Tuple of per-axis centered difference matrices."""
    _check_order(order)
    N, h = domain.points_per_axis, domain.spacing
    offs, wts = _FIRST[order]
    g1 = _axis_matrix(N, offs, np.asarray(wts) / h, domain.boundary)
    return tuple(_lift(g1, d, domain.dim, N) for d in range(domain.dim))


@functools.lru_cache(maxsize=32)
def laplacian_operator(domain: Domain, order: int = 2):
    _check_order(order)
    N, h = domain.points_per_axis, domain.spacing
    offs, wts = _SECOND[order]
    l1 = _axis_matrix(N, offs, np.asarray(wts) / h ** 2, domain.boundary)
    out = _lift(l1, 0, domain.dim, N)
    for d in range(1, domain.dim):
        out = out + _lift(l1, d, domain.dim, N)
    return out.tocsr()


def gradient(f: Field, order: int = 2) -> VectorField:
    G = gradient_operators(f.domain, order)
    vals = np.stack([(g @ f.flat).reshape(f.domain.shape) for g in G])
    return VectorField(f.domain, vals)


def divergence(v: VectorField, order: int = 2) -> Field:
    """Negative adjoint of the gradient, so summation by parts is exact."""
    G = gradient_operators(v.domain, order)
    n = v.domain.size
    acc = np.zeros(n)
    for d, g in enumerate(G):
        acc -= g.T @ v.values[d].reshape(n)
    return Field(v.domain, acc.reshape(v.domain.shape))


def laplacian(f: Field, order: int = 2) -> Field:
    L = laplacian_operator(f.domain, order)
    return Field(f.domain, (L @ f.flat).reshape(f.domain.shape))


def fp_residual(pair: FlowPair, order: int = 2) -> float:
    """Discrete L2 norm of lap(m) - div(w)."""
    r = laplacian(pair.m, order).values - divergence(pair.w, order).values
    return float(math.sqrt(pair.domain.cell_volume * np.sum(r ** 2)))


def resample(f: Field, domain: Domain) -> Field:
    """Cubic interpolation onto another grid (used for warm starts only)."""
    from scipy.interpolate import RegularGridInterpolator

    if f.domain == domain:
        return f
    axes = [f.domain.centers] * f.domain.dim
    interp = RegularGridInterpolator(axes, f.values, method="cubic",
                                     bounds_error=False, fill_value=None)
    return Field(domain, interp(domain.points))


# --- checkpoint IO -------------------------------------------------------------

def write_field(path, field) -> None:
    """Write a Field or VectorField in the bit-exact ``.fld`` format."""
    kind = "vector" if isinstance(field, VectorField) else "scalar"
    d = field.domain
    header = (f"dim {d.dim}\nhalf_width {d.half_width!r}\n"
              f"points_per_axis {d.points_per_axis}\nboundary {d.boundary}\nkind {kind}\n")
    data = np.ascontiguousarray(field.values, dtype="<f8").tobytes(order="C")
    Path(path).write_bytes(header.encode("ascii") + data)


def read_field(path):
    raw = Path(path).read_bytes()
    buf = io.BytesIO(raw)
    meta = {}
    for key in ("dim", "half_width", "points_per_axis", "boundary", "kind"):
        line = buf.readline().decode("ascii").rstrip("\n")
        name, _, value = line.partition(" ")
        if name != key:
            raise InvalidInputError(f"malformed .fld header: expected {key!r}, got {line!r}")
        meta[key] = value
    domain = Domain(int(meta["dim"]), float(meta["half_width"]),
                    int(meta["points_per_axis"]), meta["boundary"])
    vals = np.frombuffer(buf.read(), dtype="<f8").astype(float)
    if meta["kind"] == "scalar":
        return Field(domain, vals.reshape(domain.shape))
    if meta["kind"] == "vector":
        return VectorField(domain, vals.reshape((domain.dim,) + domain.shape))
    raise InvalidInputError(f"unknown field kind {meta['kind']!r}")
