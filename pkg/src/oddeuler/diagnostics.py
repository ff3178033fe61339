"""Diagnostics: the corner integral, velocity residual brackets, growth fits.

Everything here is a pure computation over immutable field snapshots.  The
central object is the corner integral

    I(x) = (4/pi) * integral over [2 x1, 1] x [2 x2, 1] of y1 y2 |y|^-4 w(y)

whose size (~ |log delta| for plateau data) drives the hyperbolic stretching
near the origin.  The velocity of an odd-odd vorticity field decomposes as

    u_j(x) = (-1)^j (I(x) + B_j(x)) x_j

which defines the residuals B_j; the bracket bounding |B_j| is the smaller of
a geometric log factor and a gradient factor, both computed here.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, fields as dc_fields

import numpy as np

from .errors import DomainError, FitError
from .fields import SpectralField, SubdomainBox, derivative, sine_synth, sup_norm_on

__all__ = [
    "KeyIntegralResult",
    "BjResidual",
    "GrowthFit",
    "DiagnosticsRecord",
    "DiagnosticsSeries",
    "key_integral",
    "bj_residual",
    "gradient_sup",
    "hessian_sup",
    "logsum_drift",
    "growth_fit",
    "axis_derivative_residual",
]


# ---------------------------------------------------------------------------
# Corner integral
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KeyIntegralResult:
    value: float
    error_estimate: float
    region: SubdomainBox
    cells: int = 0

    def __post_init__(self):
        if self.error_estimate < 0:
            raise ValueError("error estimate must be nonnegative")


def _leggauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w          # mapped to [0, 1]


_GAUSS_CACHE: dict = {}


def _gauss_nodes(n):
    if n not in _GAUSS_CACHE:
        _GAUSS_CACHE[n] = _leggauss(n)
    return _GAUSS_CACHE[n]


def _cell_quad(f, a1, b1, a2, b2, n):
    """Tensor-Gauss rule; ``f`` maps 1D node vectors to the grid of values."""
    t, w = _gauss_nodes(n)
    y1 = a1 + (b1 - a1) * t
    y2 = a2 + (b2 - a2) * t
    return (b1 - a1) * (b2 - a2) * np.einsum("i,j,ij->", w, w, f(y1, y2))


def key_integral(omega, x, tol: float = 1e-10, order: int = 10,
                 max_cells: int = 40000) -> KeyIntegralResult:
    """Adaptive evaluation of (4/pi) * int_{[2x1,1]x[2x2,1]} y1 y2 |y|^-4 w dy.

    ``omega`` may be a SpectralField (evaluated spectrally, exact for
    band-limited fields) or any vectorized callable of (y1, y2).  Refinement
    is a quadtree driven by the discrepancy between a cell's tensor-Gauss
    value and the sum over its four children, which concentrates cells near
    the corner (2x1, 2x2) where the kernel peaks.
    """
    x = np.asarray(x, dtype=float).reshape(2)
    if not (0 < x[0] <= 0.5 and 0 < x[1] <= 0.5):
        raise DomainError(f"point {x} outside (0, 1/2]^2")
    a1, a2 = 2.0 * x[0], 2.0 * x[1]
    if a1 >= 1.0 or a2 >= 1.0:
        raise DomainError(f"empty corner region for x={x}")
    region = SubdomainBox(a1, 1.0, a2, 1.0)

    if isinstance(omega, SpectralField):
        def w_grid(y1, y2):
            return omega.eval_grid(y1, y2)
    else:
        def w_grid(y1, y2):
            return omega(y1[:, None], y2[None, :])

    def integrand(y1, y2):
        Y1, Y2 = y1[:, None], y2[None, :]
        return Y1 * Y2 / (Y1 * Y1 + Y2 * Y2) ** 2 * w_grid(y1, y2)

    def children(c):
        ca1, cb1, ca2, cb2 = c
        m1, m2 = 0.5 * (ca1 + cb1), 0.5 * (ca2 + cb2)
        return [(ca1, m1, ca2, m2), (m1, cb1, ca2, m2),
                (ca1, m1, m2, cb2), (m1, cb1, m2, cb2)]

    # per-cell error from order escalation on the same cell (disjoint node
    # sets), which cannot agree by accident the way parent-vs-children can;
    # two mandatory subdivision levels guard the smooth-looking first pass
    total, err, ncells = 0.0, 0.0, 0
    min_depth, max_depth = 2, 30
    stack = [((a1, 1.0, a2, 1.0), 0)]
    while stack:
        cell, depth = stack.pop()
        val = _cell_quad(integrand, *cell, order)
        chk = _cell_quad(integrand, *cell, order + 6)
        disc = abs(val - chk)
        area_frac = (cell[1] - cell[0]) * (cell[3] - cell[2]) / \
                    ((1 - a1) * (1 - a2))
        ncells += 1
        converged = depth >= min_depth and disc <= tol * max(area_frac, 1e-3)
        if converged or depth >= max_depth or ncells >= max_cells:
            total += chk
            err += disc
        else:
            stack.extend((k, depth + 1) for k in children(cell))
    scale = 4.0 / np.pi
    return KeyIntegralResult(scale * total, scale * err, region, ncells)


# ---------------------------------------------------------------------------
# Velocity residuals
# ---------------------------------------------------------------------------

def gradient_sup(omega: SpectralField, box: SubdomainBox,
                 samples: int = 128) -> tuple:
    """(sup of |grad w| over the box, its location), by two-level sampling."""
    d1 = derivative(omega, axis=1)
    d2 = derivative(omega, axis=2)

    def mag_max(x1lo, x1hi, x2lo, x2hi, n):
        s1 = np.linspace(x1lo, x1hi, n)
        s2 = np.linspace(x2lo, x2hi, n)
        m = np.hypot(d1.eval_grid(s1, s2), d2.eval_grid(s1, s2))
        i, j = np.unravel_index(np.argmax(m), m.shape)
        return m[i, j], s1[i], s2[j]

    v, p1, p2 = mag_max(box.a1, box.b1, box.a2, box.b2, samples)
    h1 = (box.b1 - box.a1) / (samples - 1)
    h2 = (box.b2 - box.a2) / (samples - 1)
    v2, q1, q2 = mag_max(max(box.a1, p1 - h1), min(box.b1, p1 + h1),
                         max(box.a2, p2 - h2), min(box.b2, p2 + h2),
                         4 * samples)
    return (v2, (q1, q2)) if v2 >= v else (v, (p1, p2))


def hessian_sup(omega: SpectralField, box: SubdomainBox,
                samples: int = 96) -> tuple:
    """Max over the box of the max-abs second derivative (all three entries)."""
    best, loc = 0.0, (box.a1, box.a2)
    for axes in ((1, 1), (1, 2), (2, 2)):
        d = derivative(derivative(omega, axis=axes[0]), axis=axes[1])
        v, p = sup_norm_on(d, box, samples=samples)
        if v > best:
            best, loc = v, p
    return best, loc


@dataclass(frozen=True)
class BjResidual:
    j: int
    B_value: float
    bracket: float
    min_branch_used: str          # "log" | "gradient"
    M: float                      # gradient sup on the restricted box
    log_branch: float
    gradient_branch: float
    key: KeyIntegralResult

    def __post_init__(self):
        if self.j not in (1, 2):
            raise ValueError("j must be 1 or 2")
        if self.bracket <= 0 or self.M < 0:
            raise ValueError("invalid bracket/M")


def bj_residual(omega: SpectralField, u, x, j: int,
                tol: float = 1e-10) -> BjResidual:
    """Residual B_j(x) = (-1)^j u_j(x) / x_j  -  I(x), with its bound bracket.

    The bracket is min{log(1 + x_other/x_j),  x_other * M / sup|w|} where M is
    the gradient sup over [0, 2 x_other]^2; both branches are reported.
    """
    x = np.asarray(x, dtype=float).reshape(2)
    if x[j - 1] == 0.0:
        raise DomainError("B_j undefined on the axis x_j = 0")
    key = key_integral(omega, x, tol=tol)
    uj = float(u.at(x)[0][j - 1])
    B = (-1) ** j * uj / x[j - 1] - key.value

    other = x[2 - j]              # x2 for j=1, x1 for j=2
    log_branch = float(np.log1p(other / x[j - 1]))
    side = min(2.0 * other, 1.0)
    M, _ = gradient_sup(omega, SubdomainBox(0.0, side, 0.0, side))
    sup_w, _ = sup_norm_on(omega, SubdomainBox(0, 1, 0, 1), samples=128)
    grad_branch = other * M / sup_w if sup_w > 0 else np.inf
    branch = "log" if log_branch <= grad_branch else "gradient"
    return BjResidual(j, B, min(log_branch, grad_branch), branch, M,
                      log_branch, grad_branch, key)


# ---------------------------------------------------------------------------
# Trajectory functionals
# ---------------------------------------------------------------------------

def logsum_drift(X, U):
    """d/dt [log X1 + log X2] = u1/X1 + u2/X2 along a trajectory.

    ``X`` and ``U`` are (n, 2) arrays of positions and velocities at matched
    times.  Returns (series, parts) where parts is the (n, 2) array of the
    two summands u_j / X_j — bounded sum versus individually large parts is
    the interesting contrast.
    """
    X = np.asarray(X, dtype=float).reshape(-1, 2)
    U = np.asarray(U, dtype=float).reshape(-1, 2)
    if X.shape != U.shape:
        raise ValueError("positions and velocities must align")
    if np.any(X <= 1e-300):
        raise DomainError("trajectory coordinate underflow (X_j <= 0)")
    parts = U / X
    return parts.sum(axis=1), parts


@dataclass(frozen=True)
class GrowthFit:
    t0: float
    t1: float
    rate: float
    r_squared: float
    quantity: str

    def __post_init__(self):
        if not self.t0 < self.t1:
            raise ValueError("empty fit window")


def growth_fit(t, values, quantity: str = "grad_sup",
               window=None, min_samples: int = 10) -> GrowthFit:
    """Least-squares exponential-rate fit: log(values) ~ rate * t + const."""
    t = np.asarray(t, dtype=float)
    v = np.asarray(values, dtype=float)
    if window is not None:
        keep = (t >= window[0]) & (t <= window[1])
        t, v = t[keep], v[keep]
    if t.size < min_samples:
        raise FitError(f"need >= {min_samples} samples in window, have {t.size}")
    if np.any(v <= 0):
        raise FitError("nonpositive samples cannot be log-fitted")
    y = np.log(v)
    (rate, c0), res = np.polyfit(t, y, 1), None
    fitted = rate * t + c0
    ss_res = float(np.sum((y - fitted) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 and ss_res <= 1e-24 else \
        (1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0)
    return GrowthFit(float(t[0]), float(t[-1]), float(rate), r2, quantity)


def axis_derivative_residual(omega: SpectralField, samples: int = 1024) -> float:
    """sup over x2 of |d/dx1 w(0, x2)| — the transported axis invariant.

    On the axis x1 = 0 the x1-derivative of the sine series reduces to the
    single cosine trace  pi * sum_k1 k1 c[k1, k2] sin(pi k2 x2); for data
    built from sin^3(pi x1) near the axis this vanishes identically and stays
    zero under exact dynamics, so the residual measures numerical error.
    """
    c = omega.coeffs
    k1 = np.arange(1, c.shape[0] + 1)
    g = np.pi * (k1 @ c)                  # sine coefficients in x2
    n = max(samples, 2 * c.shape[1])
    return float(np.abs(sine_synth(g, n)).max())


# ---------------------------------------------------------------------------
# Records and series
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiagnosticsRecord:
    """One per-time row of the diagnostics series (CSV column order below)."""

    t: float
    grad_sup: float
    grad_loc_1: float
    grad_loc_2: float
    hessian_sup: float
    key_value: float
    key_error: float
    b1: float
    b2: float
    log_sum: float                 # log X1 + log X2
    omega_at_X: float
    energy: float
    enstrophy: float
    sup_omega: float
    area_above_half: float
    axis_residual: float

    def __post_init__(self):
        # coerce to plain floats so repr-based CSV cells stay parseable
        for f in dc_fields(self):
            object.__setattr__(self, f.name, float(getattr(self, f.name)))
        vals = [getattr(self, f.name) for f in dc_fields(self)]
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("diagnostics record contains non-finite entries")


_COLUMNS = [f.name for f in dc_fields(DiagnosticsRecord)]


@dataclass
class DiagnosticsSeries:
    records: list = field(default_factory=list)

    def append(self, rec: DiagnosticsRecord):
        if self.records and rec.t <= self.records[-1].t:
            raise ValueError("timestamps must be strictly increasing")
        self.records.append(rec)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(_COLUMNS)
            for r in self.records:
                w.writerow([repr(getattr(r, c)) for c in _COLUMNS])

    @classmethod
    def read_csv(cls, path):
        out = cls()
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or rows[0] != _COLUMNS:
            raise ValueError(f"unrecognized diagnostics CSV schema in {path}")
        for row in rows[1:]:
            out.append(DiagnosticsRecord(*[float(v) for v in row]))
        return out

    def write_summary(self, path, extra: dict | None = None):
        data = {"n_records": len(self.records),
                "t_span": [self.records[0].t, self.records[-1].t]
                if self.records else None}
        if extra:
            data.update(extra)
        with open(path, "w") as fh:
            json.dump(data, fh, indent=2)
