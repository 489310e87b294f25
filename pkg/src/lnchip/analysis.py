"""Fringe and HOM-dip fitting, visibility and accidental subtraction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .detection import PAIRS, CountRecord, dip_kernel
from .phasematch import SpdcSpectrum


class FitError(RuntimeError):
    pass


class DegenerateDataError(FitError):
    pass


class NoDipError(FitError):
    pass


def visibility(r_max: float, r_min: float) -> float:
    """(R_max - R_min) / (R_max + R_min)."""
    if r_max < r_min:
        raise ValueError("R_max must not be below R_min")
    if r_min < 0:
        raise ValueError("rates must be non-negative")
    if r_max + r_min == 0:
        raise ValueError("R_max and R_min are both zero")
    return (r_max - r_min) / (r_max + r_min)


@dataclass(frozen=True)
class Corrected:
    value: float
    sigma: float
    floored: bool = False


def subtract_accidentals(raw: CountRecord) -> dict[str, Corrected]:
    """Raw minus estimated accidentals, floored at zero; sigma = sqrt(C_raw + A)."""
    out = {}
    for key in PAIRS:
        c = float(raw.coincidences[key])
        a = float(raw.estimated_accidentals[key])
        diff = c - a
        out[key] = Corrected(max(diff, 0.0), math.sqrt(c + a), diff < 0)
    return out


def poisson_sigma(counts) -> np.ndarray:
    return np.sqrt(np.maximum(np.asarray(counts, dtype=float), 1.0))


def _prepare(x, y, sigma, min_points):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    s = poisson_sigma(y) if sigma is None else np.asarray(sigma, dtype=float)
    if not (x.shape == y.shape == s.shape) or x.ndim != 1:
        raise ValueError("x, counts and sigma must be 1-D arrays of equal length")
    if len(x) < min_points:
        raise ValueError(f"need at least {min_points} points, got {len(x)}")
    if np.any(s <= 0):
        raise ValueError("sigma must be positive")
    if np.ptp(y) == 0:
        raise DegenerateDataError("counts are constant")
    return x, y, s


def _covariance(jac: np.ndarray) -> np.ndarray:
    jtj = jac.T @ jac
    try:
        return np.linalg.inv(jtj)
    except np.linalg.LinAlgError:
        return np.full_like(jtj, np.inf)


@dataclass(frozen=True)
class FringeFit:
    """C(U) = B [1 + V cos(pi (U - U_offset) / V_pi)]; period = 2 V_pi."""

    baseline: float
    visibility: float
    v_pi: float
    u_offset: float
    errors: dict
    chi2: float
    ndf: int
    visibility_raw: float = 0.0

    @property
    def period(self) -> float:
        return 2 * self.v_pi

    @property
    def amplitude(self) -> float:
        return self.baseline * self.visibility_raw

    def predict(self, u) -> np.ndarray:
        return _fringe_model([self.baseline, self.visibility_raw, self.v_pi, self.u_offset],
                             np.asarray(u, dtype=float))

    def report(self) -> dict:
        return {
            "model": "B*(1+V*cos(pi*(U-U_offset)/V_pi))",
            "params": {
                "baseline": self.baseline, "amplitude": self.amplitude,
                "visibility": self.visibility, "v_pi": self.v_pi,
                "period": self.period, "u_offset": self.u_offset,
            },
            "errors": dict(self.errors),
            "chi2": self.chi2,
            "ndf": self.ndf,
            "convention_flags": {"visibility": "ratio", "u_offset_interval": "[-V_pi, V_pi)"},
        }


def _fringe_model(p, u):
    b, v, vpi, u0 = p
    return b * (1 + v * np.cos(np.pi * (u - u0) / vpi))


def _scan_frequency(u, y, s):
    """Weighted linear least squares a + b cos(wU) + c sin(wU) over a frequency grid."""
    span = np.ptp(u)
    steps = np.diff(np.unique(u))
    w_lo = 2 * np.pi / (2 * span)
    w_hi = np.pi / max(np.min(steps), 1e-12)
    omegas = np.linspace(w_lo, w_hi, 4000)
    wt = 1.0 / s ** 2
    cos = np.cos(np.outer(omegas, u))
    sin = np.sin(np.outer(omegas, u))
    one = np.broadcast_to(np.ones_like(u), cos.shape)
    basis = np.stack([one, cos, sin], axis=1)  # (n_omega, 3, n)
    normal = np.einsum("kin,kjn,n->kij", basis, basis, wt)
    rhs = np.einsum("kin,n->ki", basis, wt * y)
    ok = np.abs(np.linalg.det(normal)) > 1e-12 * np.abs(normal[:, 0, 0]) ** 3
    coef = np.zeros_like(rhs)
    coef[ok] = np.linalg.solve(normal[ok], rhs[ok][..., None])[..., 0]
    chi2 = np.where(ok, np.sum(wt * y * y) - np.einsum("ki,ki->k", coef, rhs), np.inf)
    best = int(np.argmin(chi2))
    return omegas[best], coef[best]


def _wrap(u0, vpi):
    return (u0 + vpi) % (2 * vpi) - vpi


def fit_fringe(u: Sequence[float], counts: Sequence[float], sigma=None) -> FringeFit:
    """Weighted damped least-squares sinusoid fit with a 4-start phase search.

    A linear scan over trial frequencies seeds the period; four Levenberg-
    Marquardt starts spaced a quarter period apart are refined and the lowest
    chi^2 wins (ties go to the lower U_offset).
    """
    u, y, s = _prepare(u, counts, sigma, 6)
    w, (a, b, c) = _scan_frequency(u, y, s)
    amp = math.hypot(b, c)
    vpi0 = math.pi / w
    u00 = math.atan2(c, b) / w
    v0 = amp / a if a != 0 else 0.5

    def resid(p):
        return (_fringe_model(p, u) - y) / s

    def jac(p):
        b, v, vpi, u0 = p
        th = np.pi * (u - u0) / vpi
        sin, cos = np.sin(th), np.cos(th)
        cols = [1 + v * cos, b * cos, b * v * sin * th / vpi, b * v * sin * np.pi / vpi]
        return np.column_stack(cols) / s[:, None]

    candidates = []
    for k in range(4):
        p0 = [a, v0, vpi0, u00 + k * vpi0 / 2]
        res = least_squares(resid, p0, jac=jac, method="lm", xtol=1e-10, ftol=1e-10, gtol=1e-10,
                            max_nfev=1000)
        if res.status <= 0 or not np.all(np.isfinite(res.x)):
            continue
        bb, vv, vpi, u0 = res.x
        vpi = abs(vpi)
        if vv < 0:
            vv, u0 = -vv, u0 + vpi
        u0 = _wrap(u0, vpi)
        p = np.array([bb, vv, vpi, u0])
        r = resid(p)
        candidates.append((float(r @ r), u0, p, jac(p)))
    if not candidates:
        raise FitError("fringe fit did not converge")
    chi_min = min(c[0] for c in candidates)
    tied = [c for c in candidates if c[0] <= chi_min * (1 + 1e-9) + 1e-15]
    chi2, _, p, jac = min(tied, key=lambda c: c[1])
    cov = _covariance(jac)
    err = np.sqrt(np.abs(np.diag(cov)))
    bb, vv, vpi, u0 = (float(x) for x in p)
    if 2 * vpi > 2 * np.ptp(u):
        raise FitError("fitted period exceeds twice the scanned range")
    errors = {
        "baseline": float(err[0]), "visibility": float(err[1]), "v_pi": float(err[2]),
        "period": float(2 * err[2]), "u_offset": float(err[3]),
        "amplitude": float(math.sqrt(max((vv * err[0]) ** 2 + (bb * err[1]) ** 2
                                         + 2 * bb * vv * cov[0, 1], 0.0))),
    }
    return FringeFit(bb, min(max(vv, 0.0), 1.0), vpi, u0, errors, chi2, len(u) - 4, vv)


@dataclass(frozen=True)
class DipFit:
    """C(tau) = B [1 - A K((tau - center) * w_ref / width)], width = dip FWHM."""

    baseline: float
    depth: float
    center: float
    width: float
    visibility: float
    visibility_depth: float
    errors: dict
    chi2: float
    ndf: int
    kernel: str
    _model: Callable = field(repr=False, compare=False, default=None)

    def predict(self, tau) -> np.ndarray:
        return self._model(np.asarray(tau, dtype=float))

    def report(self) -> dict:
        return {
            "model": "B*(1-A*K((tau-center)/width))",
            "params": {
                "baseline": self.baseline, "depth": self.depth, "center": self.center,
                "width": self.width, "visibility": self.visibility,
                "visibility_depth": self.visibility_depth,
            },
            "errors": dict(self.errors),
            "chi2": self.chi2,
            "ndf": self.ndf,
            "convention_flags": {"visibility": "ratio", "alternate": "depth=(Rmax-Rmin)/Rmax",
                                 "kernel": self.kernel},
        }


def _kernel_from_spectrum(spectrum: SpdcSpectrum):
    probe = np.linspace(0, 20, 4001)
    k = dip_kernel(spectrum, probe)
    below = np.nonzero(k < 0.5)[0]
    if len(below) == 0:
        raise FitError("spectral kernel has no half-maximum within 20 ps")
    i = below[0]
    half = probe[i - 1] + (0.5 - k[i - 1]) * (probe[i] - probe[i - 1]) / (k[i] - k[i - 1])
    return (lambda t: dip_kernel(spectrum, t)), 2 * half


def _gaussian_kernel():
    return (lambda t: np.exp(-4 * np.log(2) * np.asarray(t) ** 2)), 1.0


def fit_hom_dip(
    delays: Sequence[float],
    counts: Sequence[float],
    sigma=None,
    spectrum: SpdcSpectrum | None = None,
) -> DipFit:
    """Fit a HOM dip with the spectrum's own interference kernel (Gaussian fallback).

    Visibility follows the (R_max - R_min)/(R_max + R_min) convention over the
    fitted curve; ``visibility_depth`` is the (R_max - R_min)/R_max alternative.
    """
    x, y, s = _prepare(delays, counts, sigma, 8)
    kern, w_ref = _kernel_from_spectrum(spectrum) if spectrum is not None else _gaussian_kernel()
    kind = "spectrum" if spectrum is not None else "gaussian"

    def model(p, t):
        b, a, t0, w = p
        return b * (1 - a * kern((t - t0) * w_ref / w))

    def resid(p):
        return (model(p, x) - y) / s

    order = np.argsort(y)
    b0 = float(np.mean(y[order[-max(len(y) // 3, 1):]]))
    i_min = int(np.argmin(y))
    a0 = min(max(1 - y[i_min] / b0, 0.05), 1.0) if b0 > 0 else 0.5
    if spectrum is not None:
        w0 = w_ref
    else:
        low = x[y < b0 * (1 - a0 / 2)]
        w0 = float(np.ptp(low)) if len(low) > 1 else float(np.ptp(x)) / 10
        w0 = max(w0, 1e-3 * float(np.ptp(x)))
    p0 = [b0, a0, float(x[i_min]), w0]
    res = least_squares(resid, p0, method="lm", xtol=1e-12, ftol=1e-12, gtol=1e-12, max_nfev=2000)
    if res.status <= 0 or not np.all(np.isfinite(res.x)):
        raise FitError("dip fit did not converge")
    p = res.x.copy()
    p[3] = abs(p[3])
    cov = _covariance(res.jac)
    err = np.sqrt(np.abs(np.diag(cov)))
    b, a, t0, w = (float(v) for v in p)
    near = np.sum(np.abs(x - t0) <= w)
    if not (a > 0 and np.isfinite(err[1]) and a > 3 * err[1]) or near < 2:
        raise NoDipError("no dip detected")

    grid = np.union1d(np.linspace(x.min(), x.max(), 2001), [t0])

    def vis(params):
        curve = model(params, grid)
        hi, lo = float(curve.max()), max(float(curve.min()), 0.0)
        return (hi - lo) / (hi + lo), (hi - lo) / hi

    v_ratio, v_depth = vis(p)
    grads = []
    for i in range(4):
        h = 1e-6 * max(abs(p[i]), 1e-3)
        up, dn = p.copy(), p.copy()
        up[i] += h
        dn[i] -= h
        grads.append((np.array(vis(up)) - np.array(vis(dn))) / (2 * h))
    g = np.array(grads)
    v_err = np.sqrt(np.abs(np.einsum("ik,ij,jk->k", g, cov, g)))
    errors = {"baseline": float(err[0]), "depth": float(err[1]), "center": float(err[2]),
              "width": float(err[3]), "visibility": float(v_err[0]), "visibility_depth": float(v_err[1])}
    chi2 = float(res.fun @ res.fun)
    return DipFit(b, a, t0, w, min(max(v_ratio, 0.0), 1.0), min(max(v_depth, 0.0), 1.0), errors,
                  chi2, len(x) - 4, kind, lambda t: model(p, t))
