"""The two initial-vorticity families used by the growth scenarios.

Both data are odd in x1 and x2, take values in [0,1] on the quadrant, and
equal 1 on all but an O(delta) fraction of [0,1]^2 (the "plateau", which is
what makes the corner integral of size |log delta|).  Near the origin they
carry the prescribed local profile:

  part_i :  (r/sqrt 2)^{1+alpha} sin(2 phi) in polar coordinates - C^{1,alpha}
            at the origin, smooth elsewhere.
  part_ii:  sin^3(pi x1) sin(pi x2) on the strip min(x1, x2) <= delta/4 -
            globally smooth.

The profiles are joined to the plateau by partitions of unity built from the
standard exp(-1/t) smooth step, so every constructed property is auditable in
closed form.  Geometry of the blends (all widths scale with delta):

  part_i :  profile exact on r <= delta/sqrt2, blended over the annulus
            [delta/sqrt2, delta]; axis ramps of width delta/4, far-edge ramps
            of width delta/8.
  part_ii:  strip formula exact for min coordinate <= delta/4, blended over
            [delta/4, 3 delta/8]; far-edge ramps of width delta/8, giving the
            plateau [3 delta/8, 1 - delta/8]^2 of area (1 - delta/2)^2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .fields import GridField, SpectralField, sine_analyze

__all__ = [
    "InitialDataSpec",
    "InitialDatum",
    "build_part_i",
    "build_part_ii",
    "build",
    "spectral_projection",
    "audit",
]


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, strictly monotone between."""
    t = np.asarray(t, dtype=float)
    a = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
    b = np.where(t < 1, np.exp(-1.0 / np.maximum(1 - t, 1e-300)), 0.0)
    return a / (a + b + np.finfo(float).tiny * (a + b == 0))


@dataclass(frozen=True)
class InitialDataSpec:
    """Parameters of a datum; widths below are derived, all O(delta)."""

    kind: str = "part_i"          # part_i | part_ii | custom
    alpha: float = 0.5            # Hoelder exponent (part_i / custom)
    delta: float = 0.05           # plateau deficit, in (0, 1/10)
    amplitude: float = 1.0        # overall scale (custom)
    base_kind: str = "part_i"     # profile used by the custom kind

    def __post_init__(self):
        if self.kind not in ("part_i", "part_ii", "custom"):
            raise ParameterError(f"unknown kind {self.kind!r}")
        if not (0.0 < self.delta < 0.1):
            raise ParameterError(f"delta={self.delta} outside (0, 1/10)")
        if self.effective_kind == "part_i" and not (0.0 < self.alpha < 1.0):
            raise ParameterError(f"alpha={self.alpha} outside (0, 1)")
        if self.amplitude <= 0:
            raise ParameterError("amplitude must be positive")

    @property
    def effective_kind(self) -> str:
        return self.base_kind if self.kind == "custom" else self.kind

    # blend geometry -------------------------------------------------------

    @property
    def axis_ramp(self) -> float:
        d = self.delta
        return d / 4 if self.effective_kind == "part_i" else 3 * d / 8

    @property
    def edge_ramp(self) -> float:
        return self.delta / 8

    @property
    def profile_radius(self) -> float:
        """part_i: polar profile is exact inside this radius."""
        return self.delta / np.sqrt(2.0)

    @property
    def strip_width(self) -> float:
        """part_ii: sin^3 formula is exact where min(x1,x2) <= this."""
        return self.delta / 4

    @property
    def blend_end(self) -> float:
        """part_ii: blend completes at min(x1,x2) == this."""
        return 3 * self.delta / 8

    @property
    def plateau_lower_bound(self) -> float:
        """Guaranteed plateau area fraction of the quadrant."""
        d = self.delta
        if self.effective_kind == "part_i":
            return (1 - self.axis_ramp - self.edge_ramp) ** 2 - np.pi * d * d / 4
        return (1 - self.blend_end - self.edge_ramp) ** 2


def _edge_ramp_factor(s, m, w):
    """Rises 0 -> 1 on [0, m], equals 1 on [m, 1-w], falls to 0 on [1-w, 1]."""
    return smooth_step(s / m) * smooth_step((1.0 - s) / w)


def _part_i_quadrant(spec: InitialDataSpec, x1, x2):
    d, a = spec.delta, spec.alpha
    r = np.hypot(x1, x2)
    # (r/sqrt2)^{1+alpha} sin(2 phi) = 2 x1 x2 r^{alpha-1} / 2^{(1+alpha)/2}
    with np.errstate(divide="ignore", invalid="ignore"):
        prof = 2.0 * x1 * x2 * np.where(r > 0, r, 1.0) ** (a - 1.0) / 2 ** ((1 + a) / 2)
    prof = np.where(r > 0, prof, 0.0)
    base = (_edge_ramp_factor(x1, spec.axis_ramp, spec.edge_ramp)
            * _edge_ramp_factor(x2, spec.axis_ramp, spec.edge_ramp))
    r0 = spec.profile_radius
    chi = smooth_step((r - r0) / (d - r0))
    return (1.0 - chi) * prof + chi * base


def _part_ii_quadrant(spec: InitialDataSpec, x1, x2):
    strip = np.sin(np.pi * x1) ** 3 * np.sin(np.pi * x2)
    base = (_edge_ramp_factor(x1, spec.axis_ramp, spec.edge_ramp)
            * _edge_ramp_factor(x2, spec.axis_ramp, spec.edge_ramp))
    lo, hi = spec.strip_width, spec.blend_end
    chi = smooth_step((x1 - lo) / (hi - lo)) * smooth_step((x2 - lo) / (hi - lo))
    return strip + chi * (base - strip)


@dataclass(frozen=True)
class InitialDatum:
    """Closed-form evaluator on the full torus (2T)^2, vectorized."""

    spec: InitialDataSpec

    def __call__(self, x1, x2):
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        # reduce to the fundamental period, then to the quadrant by oddness
        p1 = np.mod(x1 + 1.0, 2.0) - 1.0
        p2 = np.mod(x2 + 1.0, 2.0) - 1.0
        s = np.sign(p1) * np.sign(p2)
        q = (_part_i_quadrant if self.spec.effective_kind == "part_i"
             else _part_ii_quadrant)(self.spec, np.abs(p1), np.abs(p2))
        return self.spec.amplitude * s * q

    def eval_grid(self, x1, x2):
        return self(np.asarray(x1)[:, None], np.asarray(x2)[None, :])

    def to_grid(self, N: int) -> GridField:
        x = np.arange(N) / N
        return GridField(self.eval_grid(x, x))


def build_part_i(spec: InitialDataSpec) -> InitialDatum:
    if spec.effective_kind != "part_i":
        raise ParameterError("spec is not a part_i datum")
    return InitialDatum(spec)


def build_part_ii(spec: InitialDataSpec) -> InitialDatum:
    if spec.effective_kind != "part_ii":
        raise ParameterError("spec is not a part_ii datum")
    return InitialDatum(spec)


def build(spec: InitialDataSpec) -> InitialDatum:
    return (build_part_i if spec.effective_kind == "part_i" else build_part_ii)(spec)


def spectral_projection(datum, cutoff: int, oversample: int = 2,
                        return_error: bool = False):
    """Band-limited sine projection of a closed-form datum.

    Sampling happens on an oversampled grid so that discarded high modes do
    not alias into the kept band; the reported error is the sup of
    |datum - projection| on an independent probe grid.
    """
    M = oversample * (cutoff + 1)
    x = np.arange(M + 1) / M
    closed = datum.eval_grid(x, x)
    c = sine_analyze(sine_analyze(closed, axis=0), axis=1)[:cutoff, :cutoff]
    f = SpectralField(c)
    if not return_error:
        return f
    xp = (np.arange(2 * M) + 0.5) / (2 * M)
    err = float(np.abs(datum.eval_grid(xp, xp) - f.eval_grid(xp, xp)).max())
    return f, err


# ---------------------------------------------------------------------------
# Audit
# ---------------------------------------------------------------------------

def audit(datum: InitialDatum, grid_n: int = 2048, probes: int = 100,
          seed: int = 0) -> dict:
    """Machine-readable report on the constructed properties of a datum.

    Any failed check here is a constructor bug, not a modelling choice.
    """
    spec = datum.spec
    rng = np.random.default_rng(seed)
    x = (np.arange(grid_n) + 0.5) / grid_n
    vals = datum.eval_grid(x, x)
    amp = spec.amplitude

    pts = rng.uniform(0.0, 1.0, size=(probes, 2))
    odd_res = float(np.abs(datum(-pts[:, 0], pts[:, 1])
                           + datum(pts[:, 0], pts[:, 1])).max())

    plateau = float(np.mean(vals >= amp * (1 - 1e-12)))

    if spec.effective_kind == "part_i":
        r = rng.uniform(0, spec.delta / 2, probes)
        phi = rng.uniform(0, np.pi / 2, probes)
        want = amp * (r / np.sqrt(2)) ** (1 + spec.alpha) * np.sin(2 * phi)
        got = datum(r * np.cos(phi), r * np.sin(phi))
        seam_lo, seam_hi = spec.profile_radius, spec.delta
        seam_pts = np.stack([np.cos(phi), np.sin(phi)], -1) * seam_lo
    else:
        s = rng.uniform(0, 1, probes)
        t = rng.uniform(0, spec.strip_width, probes)
        want = amp * np.sin(np.pi * t) ** 3 * np.sin(np.pi * s)
        got = datum(t, s)
        seam_pts = np.stack([np.full(probes, spec.strip_width), s], -1)
    profile_dev = float(np.abs(got - want).max())

    # two-sided gradient probe across the blend seam: Richardson-extrapolated
    # one-sided derivatives taken *at* the seam, so stencil truncation does
    # not masquerade as a jump
    def one_sided(sign, h):
        s1, s2 = seam_pts[:, 0], seam_pts[:, 1]
        return sign * (-3 * datum(s1, s2) + 4 * datum(s1 + sign * h, s2)
                       - datum(s1 + 2 * sign * h, s2)) / (2 * h)

    h = 4e-6
    g_in = (4 * one_sided(-1.0, h / 2) - one_sided(-1.0, h)) / 3
    g_out = (4 * one_sided(+1.0, h / 2) - one_sided(+1.0, h)) / 3
    seam_jump = float(np.abs(g_in - g_out).max())

    return {
        "kind": spec.kind,
        "delta": spec.delta,
        "alpha": spec.alpha,
        "oddness_residual": odd_res,
        "plateau_measure": plateau,
        "plateau_required": 1.0 - spec.delta,
        "corner_profile_deviation": profile_dev,
        "seam_gradient_jump": seam_jump,
        "sup_norm": float(np.abs(vals).max()),
        "min_on_quadrant": float(vals.min()),
        "passed": bool(odd_res <= 1e-13 * amp
                       and plateau >= 1.0 - spec.delta
                       and profile_dev <= 1e-10
                       and seam_jump <= 1e-8
                       and vals.min() >= 0.0
                       and abs(float(np.abs(vals).max()) - amp) <= 1e-12 * amp),
    }


def write_audit(report: dict, path):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2)
