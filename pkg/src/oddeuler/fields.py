"""Scalar fields on the torus (2T)^2 = [-1,1)^2 with per-axis parity.

The symmetry class of interest is odd-odd: fields of the form

    f(x) = sum_{k1,k2 >= 1} c[k1,k2] sin(pi k1 x1) sin(pi k2 x2),

which are 2-periodic and odd in each variable, hence vanish identically on
both coordinate axes and on the lines x_i = 1.  Differentiation moves a field
between four parity classes (sine or cosine expansion per axis), so parity is
carried as a type tag on the coefficient array.

Everything is referred to the fundamental quadrant [0,1]^2.  Nodal data lives
on the uniform grid (i/N, j/N); fast conversions use DST-I / DCT-I.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as spfft

from .errors import DomainError, ResolutionError, SymmetryError

ODD = "odd"
EVEN = "even"

__all__ = [
    "ODD",
    "EVEN",
    "SpectralField",
    "GridField",
    "SubdomainBox",
    "to_grid",
    "to_spectral",
    "derivative",
    "sup_norm_on",
    "l2_norm",
    "save_snapshot",
    "load_snapshot",
]


# ---------------------------------------------------------------------------
# 1D fast transforms between coefficients and closed-grid samples (nodes
# i/N, i = 0..N).  Conventions verified against direct sums in the tests.
# ---------------------------------------------------------------------------

def sine_synth(coeffs: np.ndarray, N: int, axis: int = -1) -> np.ndarray:
    """Values of sum_k c_k sin(pi k x) at x = i/N, i = 0..N.

    ``coeffs`` holds k = 1..K along ``axis`` with K <= N-1.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    K = coeffs.shape[axis]
    if K > N - 1:
        raise ResolutionError(f"sine cutoff {K} not representable on N={N} grid")
    pad = [(0, 0)] * coeffs.ndim
    pad[axis] = (0, (N - 1) - K)
    interior = spfft.dst(np.pad(coeffs, pad), type=1, axis=axis) / 2.0
    pad = [(0, 0)] * coeffs.ndim
    pad[axis] = (1, 1)
    return np.pad(interior, pad)  # endpoints are exact zeros


def sine_analyze(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Coefficients c_k (k = 1..N-1) from closed-grid samples at i/N, i=0..N."""
    values = np.asarray(values, dtype=float)
    N = values.shape[axis] - 1
    interior = np.take(values, range(1, N), axis=axis)
    return spfft.dst(interior, type=1, axis=axis) / N


def cosine_synth(coeffs: np.ndarray, N: int, axis: int = -1) -> np.ndarray:
    """Values of sum_{k=0} a_k cos(pi k x) at x = i/N, i = 0..N.

    ``coeffs`` holds k = 0..K along ``axis`` with K <= N.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    K = coeffs.shape[axis] - 1
    if K > N:
        raise ResolutionError(f"cosine cutoff {K} not representable on N={N} grid")
    pad = [(0, 0)] * coeffs.ndim
    pad[axis] = (0, N - K)
    x = np.pad(coeffs, pad)
    sl = [slice(None)] * x.ndim
    sl[axis] = slice(1, N)
    x[tuple(sl)] /= 2.0
    return spfft.dct(x, type=1, axis=axis)


def cosine_analyze(values: np.ndarray, axis: int = -1) -> np.ndarray:
    """Coefficients a_k (k = 0..N) from closed-grid samples at i/N, i=0..N."""
    values = np.asarray(values, dtype=float)
    N = values.shape[axis] - 1
    out = spfft.dct(values, type=1, axis=axis) / N
    for end in (0, N):
        sl = [slice(None)] * out.ndim
        sl[axis] = end
        out[tuple(sl)] /= 2.0
    return out


def _synth(coeffs: np.ndarray, parity: str, N: int, axis: int) -> np.ndarray:
    if parity == ODD:
        return sine_synth(coeffs, N, axis=axis)
    return cosine_synth(coeffs, N, axis=axis)


def _analyze(values: np.ndarray, parity: str, axis: int) -> np.ndarray:
    if parity == ODD:
        return sine_analyze(values, axis=axis)
    return cosine_analyze(values, axis=axis)


def _basis_matrix(x: np.ndarray, parity: str, n_coeffs: int) -> np.ndarray:
    """Matrix B[p, k] of basis values at points x (sine: k=1.., cosine: k=0..)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if parity == ODD:
        k = np.arange(1, n_coeffs + 1)
        return np.sin(np.pi * np.outer(x, k))
    k = np.arange(0, n_coeffs)
    return np.cos(np.pi * np.outer(x, k))


# ---------------------------------------------------------------------------
# Spectral fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralField:
    """Band-limited field with per-axis parity tags.

    ``coeffs[k1_idx, k2_idx]`` multiplies the tensor basis function along each
    axis: sine axes index k = 1..K (array length K), cosine axes index
    k = 0..K (array length K+1).  Instances are immutable value objects.
    """

    coeffs: np.ndarray
    parity: tuple[str, str] = (ODD, ODD)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 2:
            raise ValueError("coeffs must be a 2D array")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if any(p not in (ODD, EVEN) for p in self.parity):
            raise ValueError(f"bad parity tag {self.parity}")

    @property
    def cutoff(self) -> int:
        """Largest wavenumber present along any axis."""
        return max(self._kmax(0), self._kmax(1))

    def _kmax(self, axis: int) -> int:
        n = self.coeffs.shape[axis]
        return n if self.parity[axis] == ODD else n - 1

    @property
    def is_odd_odd(self) -> bool:
        return self.parity == (ODD, ODD)

    # -- evaluation ---------------------------------------------------------

    def eval_grid(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        """Evaluate on the tensor mesh x1 (x) x2 by direct trigonometric sums."""
        b1 = _basis_matrix(x1, self.parity[0], self.coeffs.shape[0])
        b2 = _basis_matrix(x2, self.parity[1], self.coeffs.shape[1])
        return b1 @ self.coeffs @ b2.T

    def eval_points(self, pts: np.ndarray) -> np.ndarray:
        """Evaluate at an (P, 2) array of points (or a single point)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        b1 = _basis_matrix(pts[:, 0], self.parity[0], self.coeffs.shape[0])
        b2 = _basis_matrix(pts[:, 1], self.parity[1], self.coeffs.shape[1])
        out = np.einsum("pi,ij,pj->p", b1, self.coeffs, b2)
        return out if out.size > 1 else float(out[0])

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        if x1.ndim == 0 and x2.ndim == 0:
            return self.eval_points(np.array([[float(x1), float(x2)]]))
        pts = np.stack(np.broadcast_arrays(x1, x2), axis=-1).reshape(-1, 2)
        return np.asarray(self.eval_points(pts)).reshape(np.broadcast(x1, x2).shape)

    def sample_closed(self, N: int) -> np.ndarray:
        """Fast synthesis on the closed (N+1) x (N+1) quadrant grid."""
        v = _synth(self.coeffs, self.parity[0], N, axis=0)
        return _synth(v, self.parity[1], N, axis=1)

    # -- algebra ------------------------------------------------------------

    def scaled(self, factor: float) -> "SpectralField":
        return SpectralField(self.coeffs * factor, self.parity)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        if self.parity != other.parity or self.coeffs.shape != other.coeffs.shape:
            raise ValueError("parity/shape mismatch")
        return SpectralField(self.coeffs + other.coeffs, self.parity)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self + other.scaled(-1.0)

    def derivative(self, axis: int, order: int = 1) -> "SpectralField":
        return derivative(self, axis, order)


@dataclass(frozen=True)
class GridField:
    """Nodal samples of an odd-odd field at (i/N, j/N), i,j = 0..N-1."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("values must be a square 2D array")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    def check_boundary(self, tol: float = 0.0):
        worst = max(np.abs(self.values[0, :]).max(), np.abs(self.values[:, 0]).max())
        if worst > tol:
            raise SymmetryError(f"nonzero boundary row (max {worst:.3e})")


@dataclass(frozen=True)
class SubdomainBox:
    """Corner-aligned rectangle [a1,b1] x [a2,b2] inside the quadrant."""

    a1: float
    b1: float
    a2: float
    b2: float

    def __post_init__(self):
        ok = 0.0 <= self.a1 <= self.b1 <= 1.0 and 0.0 <= self.a2 <= self.b2 <= 1.0
        if not ok:
            raise DomainError(f"box {self} not inside [0,1]^2")

    @classmethod
    def square(cls, side: float) -> "SubdomainBox":
        return cls(0.0, side, 0.0, side)


# ---------------------------------------------------------------------------
# Conversions
# ---------------------------------------------------------------------------

def to_grid(f: SpectralField, N: int) -> GridField:
    """Sample an odd-odd spectral field on the N x N quadrant grid."""
    if not f.is_odd_odd:
        raise SymmetryError("GridField is defined for odd-odd fields only")
    if N < 2 * f.cutoff:
        raise ResolutionError(f"N={N} < 2*cutoff={2 * f.cutoff}")
    return GridField(f.sample_closed(N)[:N, :N])


def to_spectral(g: GridField, cutoff: int | None = None,
                boundary_tol: float = 0.0, return_residual: bool = False):
    """Invert :func:`to_grid` on the resolvable band k = 1..N-1.

    Coefficients beyond ``cutoff`` are discarded; the discarded l2 fraction is
    returned when ``return_residual`` is set.
    """
    g.check_boundary(boundary_tol)
    N = g.N
    closed = np.zeros((N + 1, N + 1))
    closed[:N, :N] = g.values  # x_i = 1 rows vanish for odd 2-periodic fields
    c = sine_analyze(sine_analyze(closed, axis=0), axis=1)
    K = N - 1 if cutoff is None else min(cutoff, N - 1)
    total = float(np.sum(c * c))
    kept = c[:K, :K]
    f = SpectralField(kept, (ODD, ODD))
    if not return_residual:
        return f
    lost = total - float(np.sum(kept * kept))
    residual = np.sqrt(max(lost, 0.0) / total) if total > 0 else 0.0
    return f, residual


_DERIV = {ODD: EVEN, EVEN: ODD}


def derivative(f: SpectralField, axis: int, order: int = 1) -> SpectralField:
    """Exact spectral differentiation; flips the parity tag on ``axis``."""
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if axis not in (1, 2):
        raise ValueError("axis must be 1 or 2")
    ax = axis - 1
    out = f
    for _ in range(order):
        out = _ddx(out, ax)
    return out


def _ddx(f: SpectralField, ax: int) -> SpectralField:
    c = f.coeffs
    p = f.parity[ax]
    if p == ODD:
        K = c.shape[ax]
        k = np.arange(1, K + 1)
        shape = (K, 1) if ax == 0 else (1, K)
        scaled = np.pi * k.reshape(shape) * c
        pad = [(0, 0), (0, 0)]
        pad[ax] = (1, 0)  # new k=0 cosine slot is empty
        new = np.pad(scaled, pad)
    else:
        K = c.shape[ax] - 1
        k = np.arange(1, K + 1)
        trimmed = np.take(c, range(1, K + 1), axis=ax)  # k=0 term drops
        shape = (K, 1) if ax == 0 else (1, K)
        new = -np.pi * k.reshape(shape) * trimmed
    parity = list(f.parity)
    parity[ax] = _DERIV[p]
    return SpectralField(new, tuple(parity))


# ---------------------------------------------------------------------------
# Norms
# ---------------------------------------------------------------------------

def _mode_weights(f: SpectralField) -> np.ndarray:
    """Per-mode value of int over the torus of the squared basis function."""
    w1 = np.ones(f.coeffs.shape[0])
    w2 = np.ones(f.coeffs.shape[1])
    if f.parity[0] == EVEN:
        w1[0] = 2.0
    if f.parity[1] == EVEN:
        w2[0] = 2.0
    return np.outer(w1, w2)


def l2_norm(f: SpectralField) -> float:
    """L2 norm over the full torus [-1,1)^2."""
    return float(np.sqrt(np.sum(f.coeffs ** 2 * _mode_weights(f))))


def sup_norm_on(f: SpectralField, box: SubdomainBox,
                samples: int | None = None, refine: bool = True):
    """Max of |f| over ``box`` with local refinement around the best node.

    Returns ``(value, (x1, x2))``.  A zero field reports the lower-left
    corner by convention.
    """
    if samples is None:
        samples = int(min(max(64, 3 * f.cutoff * max(box.b1 - box.a1,
                                                     box.b2 - box.a2)), 2048))
    x1 = np.linspace(box.a1, box.b1, samples + 1)
    x2 = np.linspace(box.a2, box.b2, samples + 1)
    vals = np.abs(f.eval_grid(x1, x2))
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    best = float(vals[i, j])
    loc = (float(x1[i]), float(x2[j]))
    if best == 0.0:
        return 0.0, (box.a1, box.a2)
    if refine:
        from scipy.optimize import minimize
        h1 = (box.b1 - box.a1) / samples
        h2 = (box.b2 - box.a2) / samples

        def neg_abs(p):
            q1 = min(max(p[0], box.a1), box.b1)
            q2 = min(max(p[1], box.a2), box.b2)
            return -abs(f.eval_points(np.array([[q1, q2]])))

        res = minimize(neg_abs, np.array(loc), method="Nelder-Mead",
                       options={"xatol": 1e-12, "fatol": 1e-14,
                                "maxiter": 200})
        p = res.x
        q = (min(max(p[0], box.a1), box.b1), min(max(p[1], box.a2), box.b2))
        v = -res.fun
        # refinement is confined to the one-cell neighbourhood of the node
        if v > best and abs(q[0] - loc[0]) <= 1.5 * h1 and abs(q[1] - loc[1]) <= 1.5 * h2:
            best, loc = float(v), (float(q[0]), float(q[1]))
    return best, loc


# ---------------------------------------------------------------------------
# Snapshot files.  Layout (npz): values = closed-grid samples (N+1, N+1),
# coeffs, parity (2 strings), n, time.  Documented in the README and stable.
# ---------------------------------------------------------------------------

def save_snapshot(path, f: SpectralField, N: int, time: float = 0.0):
    np.savez(path, values=f.sample_closed(N), coeffs=f.coeffs,
             parity=np.array(list(f.parity)), n=N, time=time)


def load_snapshot(path):
    """Return (field, N, time)."""
    with np.load(path, allow_pickle=False) as z:
        parity = tuple(str(p) for p in z["parity"])
        f = SpectralField(z["coeffs"], parity)
        return f, int(z["n"]), float(z["time"])
