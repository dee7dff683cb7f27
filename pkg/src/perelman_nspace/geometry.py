"""Model closed manifolds evolving by the backward Ricci flow.

Two representations are supported:

* ``flat_torus``: a periodic tensor grid.  The metric is the identity in
  coordinates for all times (Ric = 0, so the flow is static) and spatial
  calculus is done spectrally with FFTs.
* ``round_sphere``: the homogeneous metric a(tau) * g_{S^n}.  Every field is
  spatially constant, so derivatives vanish and integrals reduce to
  value * total volume.

Tensor components are expressed in the frame in which the reference metric
(flat metric, unit round metric) is the identity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, TimeRangeError, UnsupportedRepresentationError

FLAT_TORUS = "flat_torus"
ROUND_SPHERE = "round_sphere"


def unit_sphere_volume(n):
    """Volume of the unit round sphere S^n in R^{n+1}."""
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


@dataclass(frozen=True)
class Grid:
    n: int
    points_per_dim: int
    periods: tuple = None

    def __post_init__(self):
        if self.n < 1:
            raise ConfigurationError(f"grid dimension must be >= 1, got {self.n}")
        if self.points_per_dim < 8 or self.points_per_dim % 2:
            raise ConfigurationError(
                f"points_per_dim must be even and >= 8, got {self.points_per_dim}"
            )
        periods = self.periods
        if periods is None:
            periods = (2.0 * math.pi,) * self.n
        periods = tuple(float(p) for p in periods)
        if len(periods) != self.n or any(p <= 0 for p in periods):
            raise ConfigurationError(f"need {self.n} positive periods, got {periods}")
        object.__setattr__(self, "periods", periods)

    @property
    def shape(self):
        return (self.points_per_dim,) * self.n

    @property
    def cell_volume(self):
        return math.prod(p / self.points_per_dim for p in self.periods)

    @property
    def total_volume(self):
        return math.prod(self.periods)

    def coordinates(self):
        """Tuple of n coordinate arrays with the grid shape (``ij`` indexing)."""
        axes = [np.arange(self.points_per_dim) * (p / self.points_per_dim) for p in self.periods]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def wavenumbers(self):
        """Angular wavenumbers per axis, each broadcastable against the grid."""
        out = []
        for axis, period in enumerate(self.periods):
            k = 2.0 * math.pi * np.fft.fftfreq(self.points_per_dim, d=period / self.points_per_dim)
            shape = [1] * self.n
            shape[axis] = self.points_per_dim
            out.append(k.reshape(shape))
        return out

    def first_derivative_wavenumbers(self):
        # The Nyquist mode has no well-defined odd derivative on an even grid.
        out = []
        for k in self.wavenumbers():
            k = k.copy()
            k.flat[self.points_per_dim // 2] = 0.0
            out.append(k)
        return out


@dataclass(frozen=True)
class FlowSolution:
    """Closed-form solution of d/dtau g = 2 Ric on [tau_min, T].

    ``sphere_rate`` is da/dtau for the round sphere; it defaults to the value
    2(n-1) that solves the flow.  Other values build deliberately broken
    families for negative controls.
    """

    kind: str
    n: int
    T: float
    tau_min: float = None
    sphere_a0: float = 0.0
    grid: Grid = None
    sphere_rate: float = None

    def __post_init__(self):
        if self.kind not in (FLAT_TORUS, ROUND_SPHERE):
            raise ConfigurationError(f"unknown flow kind {self.kind!r}")
        if self.T <= 0:
            raise ConfigurationError(f"horizon T must be positive, got {self.T}")
        if self.tau_min is None:
            object.__setattr__(self, "tau_min", 0.05 * self.T)
        if not 0 < self.tau_min < self.T:
            raise ConfigurationError(f"need 0 < tau_min < T, got tau_min={self.tau_min}, T={self.T}")
        if self.kind == FLAT_TORUS:
            if self.grid is None:
                raise ConfigurationError("flat_torus needs a grid")
            if self.grid.n != self.n:
                raise ConfigurationError("grid dimension does not match flow dimension")
        else:
            if self.n < 2:
                raise ConfigurationError("round_sphere needs n >= 2")
            if self.sphere_a0 < 0:
                raise ConfigurationError("sphere_a0 must be nonnegative")
            if self.sphere_rate is None:
                object.__setattr__(self, "sphere_rate", 2.0 * (self.n - 1))
            if self.sphere_a0 + self.sphere_rate * self.tau_min <= 0:
                raise ConfigurationError("sphere scale a(tau) must be positive on [tau_min, T]")

    @classmethod
    def flat_torus(cls, n=1, T=2.0, points_per_dim=64, periods=None, tau_min=None):
        return cls(FLAT_TORUS, n, T, tau_min=tau_min, grid=Grid(n, points_per_dim, periods))

    @classmethod
    def round_sphere(cls, n=2, T=2.0, a0=0.0, tau_min=None):
        return cls(ROUND_SPHERE, n, T, tau_min=tau_min, sphere_a0=a0)

    @property
    def homogeneous(self):
        return self.kind == ROUND_SPHERE

    @property
    def field_shape(self):
        return () if self.homogeneous else self.grid.shape

    def check_tau(self, tau):
        t = np.asarray(tau, dtype=float)
        # tiny slack so that Newton iterates landing exactly on an endpoint pass
        slack = 1e-12 * self.T
        if np.any(t < self.tau_min - slack) or np.any(t > self.T + slack) or not np.all(np.isfinite(t)):
            lo, hi = float(np.min(t)), float(np.max(t))
            raise TimeRangeError(
                f"tau range [{lo:.6g}, {hi:.6g}] outside [{self.tau_min:.6g}, {self.T:.6g}]"
            )

    # closed-form pieces; no range checks so validators may step just outside
    def scale(self, tau):
        """a(tau) for the sphere, 1 for the torus."""
        if self.homogeneous:
            return self.sphere_a0 + self.sphere_rate * np.asarray(tau, dtype=float)
        return np.ones_like(np.asarray(tau, dtype=float))

    def scalar_curvature_value(self, tau):
        if self.homogeneous:
            return self.n * (self.n - 1) / self.scale(tau)
        return np.zeros_like(np.asarray(tau, dtype=float))

    def scalar_curvature_dtau(self, tau):
        if self.homogeneous:
            a = self.scale(tau)
            return -self.n * (self.n - 1) * self.sphere_rate / a**2
        return np.zeros_like(np.asarray(tau, dtype=float))

    def volume(self, tau):
        if self.homogeneous:
            return unit_sphere_volume(self.n) * self.scale(tau) ** (self.n / 2)
        return self.grid.total_volume * np.ones_like(np.asarray(tau, dtype=float))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Real samples of a function on M at time ``tau``.

    A 0-d ``values`` array is the spatially constant representation.
    """

    values: np.ndarray
    tau: float
    flow: FlowSolution

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim and v.shape != self.flow.field_shape:
            raise ConfigurationError(f"field shape {v.shape} does not match {self.flow.field_shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def is_constant(self):
        return self.values.ndim == 0

    def full(self):
        """Values broadcast to the grid (or the scalar itself when homogeneous)."""
        return np.broadcast_to(self.values, self.flow.field_shape)

    def with_values(self, values):
        return ScalarField(values, self.tau, self.flow)


@dataclass(frozen=True, eq=False)
class TensorField:
    """Symmetric n x n matrices per grid point, or a single one when constant."""

    values: np.ndarray
    tau: float
    flow: FlowSolution

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        n = self.flow.n
        if v.shape[-2:] != (n, n):
            raise ConfigurationError(f"tensor components must end in ({n}, {n}), got {v.shape}")
        # exact symmetry by construction
        v = 0.5 * (v + np.swapaxes(v, -1, -2))
        object.__setattr__(self, "values", v)

    @property
    def is_constant(self):
        return self.values.ndim == 2


def _spectral(flow):
    if flow.kind != FLAT_TORUS:
        raise UnsupportedRepresentationError(
            "non-constant fields are only supported on the flat torus"
        )
    return flow.grid


def metric_at(flow, tau):
    flow.check_tau(tau)
    return TensorField(float(flow.scale(tau)) * np.eye(flow.n), tau, flow)


def ricci_at(flow, tau):
    flow.check_tau(tau)
    # Ric of a * g_{S^n} is (n-1) g_{S^n}; scale invariant
    c = float(flow.n - 1) if flow.homogeneous else 0.0
    return TensorField(c * np.eye(flow.n), tau, flow)


def scalar_curvature(flow, tau):
    flow.check_tau(tau)
    return ScalarField(np.asarray(flow.scalar_curvature_value(tau), dtype=float), tau, flow)


def gradient(field):
    """List of n coordinate partial derivatives."""
    if field.is_constant:
        return [np.zeros(()) for _ in range(field.flow.n)]
    grid = _spectral(field.flow)
    spec = np.fft.fftn(field.values)
    return [np.fft.ifftn(1j * k * spec).real for k in grid.first_derivative_wavenumbers()]


def laplacian(field):
    if field.is_constant:
        return field.with_values(np.zeros(()))
    grid = _spectral(field.flow)
    k2 = sum(k**2 for k in grid.wavenumbers())
    return field.with_values(np.fft.ifftn(-k2 * np.fft.fftn(field.values)).real)


def gradient_sq(field):
    if field.is_constant:
        return field.with_values(np.zeros(()))
    # flat metric: |grad f|^2 is the plain sum of squares
    return field.with_values(sum(d**2 for d in gradient(field)))


def hessian(field):
    n = field.flow.n
    if field.is_constant:
        return TensorField(np.zeros((n, n)), field.tau, field.flow)
    grid = _spectral(field.flow)
    spec = np.fft.fftn(field.values)
    full_k = grid.wavenumbers()
    odd_k = grid.first_derivative_wavenumbers()
    out = np.empty(field.values.shape + (n, n))
    for i in range(n):
        for j in range(i, n):
            mult = -full_k[i] ** 2 if i == j else -odd_k[i] * odd_k[j]
            d = np.fft.ifftn(mult * spec).real
            out[..., i, j] = d
            out[..., j, i] = d
    return TensorField(out, field.tau, field.flow)


def integrate(field, tau=None):
    """Integral over (M, g(tau)).  ``tau`` defaults to the field's own time."""
    tau = field.tau if tau is None else tau
    flow = field.flow
    if flow.homogeneous:
        if not field.is_constant:
            raise UnsupportedRepresentationError("sphere fields must be spatially constant")
        return float(field.values) * float(flow.volume(tau))
    if field.is_constant:
        return float(field.values) * flow.grid.total_volume
    # periodic trapezoid rule; np.sum has a fixed reduction order
    return float(np.sum(field.values)) * flow.grid.cell_volume


def validate_backward_flow(flow, tau_samples, tol=None):
    """Sup over samples of |d/dtau g - 2 Ric| in a g-orthonormal frame.

    The tau-derivative is a centered difference with step 1e-5 * tau.
    """
    taus = np.atleast_1d(np.asarray(tau_samples, dtype=float))
    flow.check_tau(taus)
    n = flow.n
    ric = float(n - 1) if flow.homogeneous else 0.0
    worst = 0.0
    for tau in taus:
        h = 1e-5 * tau
        g = float(flow.scale(tau)) * np.eye(n)
        dg = (float(flow.scale(tau + h)) - float(flow.scale(tau - h))) / (2 * h) * np.eye(n)
        defect = dg - 2.0 * ric * np.eye(n)
        chol = np.linalg.cholesky(g)
        inv = np.linalg.inv(chol)
        ortho = inv @ defect @ inv.T
        worst = max(worst, float(np.max(np.abs(ortho))))
    if tol is not None and worst > tol:
        raise ConfigurationError(f"backward Ricci flow residual {worst:.3e} exceeds {tol:.3e}")
    return worst
