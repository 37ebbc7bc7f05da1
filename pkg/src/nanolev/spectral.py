"""Welch PSD estimation, Lorentzian oscillator fits and peak finding."""
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, signal, special

from .errors import FitFailed, NoPeakInBand

DEFAULT_SEGMENT = 1 << 17


@dataclass
class Psd:
    frequencies: np.ndarray
    values: np.ndarray
    n_averages: int
    window: str = "hann"

    @property
    def df(self):
        return self.frequencies[1] - self.frequencies[0]

    def band(self, f_lo, f_hi):
        sel = (self.frequencies >= f_lo) & (self.frequencies <= f_hi)
        return self.frequencies[sel], self.values[sel]

    def integral(self, f_lo=0.0, f_hi=np.inf):
        _, v = self.band(f_lo, f_hi)
        return float(np.sum(v) * self.df)


@dataclass
class LorentzianFit:
    """Damped-oscillator peak; rates are angular, ``area`` integrates over f."""

    omega0: float
    gamma: float
    area: float
    background: float
    covariance: np.ndarray = field(default_factory=lambda: np.full((4, 4), np.nan))
    band: tuple = (0.0, 0.0)

    @property
    def stderr(self):
        return np.sqrt(np.abs(np.diag(self.covariance)))

    @property
    def f0(self):
        return self.omega0 / (2 * np.pi)

    def __call__(self, f):
        return lorentzian(f, self.omega0, self.gamma, self.area, self.background)


def lorentzian(f, omega0, gamma, area, background):
    """Oscillator PSD whose peak integrates to ``area`` over ordinary frequency."""
    w = 2 * np.pi * np.asarray(f, dtype=float)
    return 4.0 * area * omega0**2 * gamma / ((w**2 - omega0**2) ** 2 + gamma**2 * w**2) + background


def nearest_pow2(n):
    return 1 << int(round(np.log2(n)))


def welch(series, dt, segment_length=None, overlap=0.5, window="hann"):
    """One-sided PSD in ordinary frequency, normalized to the series variance."""
    x = np.asarray(series, dtype=float)
    if segment_length is None:
        segment_length = min(DEFAULT_SEGMENT, 1 << int(np.floor(np.log2(max(len(x), 1)))))
    if segment_length > len(x) or segment_length < 8:
        raise ValueError("series too short for the requested segment length")
    if not 0 <= overlap <= 0.9:
        raise ValueError("overlap must lie in [0, 0.9]")
    noverlap = int(round(overlap * segment_length))
    f, p = signal.welch(
        x, fs=1.0 / dt, window=window, nperseg=segment_length, noverlap=noverlap,
        detrend="constant", return_onesided=True, scaling="density", average="mean",
    )
    n_avg = 1 + (len(x) - segment_length) // (segment_length - noverlap)
    return Psd(f, p, n_avg, window)


def _initial_guess(f, s):
    background = float(np.percentile(s, 10))
    i = int(np.argmax(s))
    height = s[i] - background
    half = background + height / 2.0
    lo = i
    while lo > 0 and s[lo] > half:
        lo -= 1
    hi = i
    while hi < len(s) - 1 and s[hi] > half:
        hi += 1
    fwhm = max(f[hi] - f[lo], f[1] - f[0])
    f0 = f[i]
    area = np.pi / 2.0 * height * fwhm
    return np.log([f0, 2 * np.pi * fwhm, area, max(background, 1e-300)])


def _log_residuals(p, f, log_s):
    f0, gamma, area, bg = np.exp(p)
    return np.log(lorentzian(f, 2 * np.pi * f0, gamma, area, bg)) - log_s


def fit_lorentzian(psd: Psd, band, min_contrast=3.0, integrate_residual=True):
    """Least-squares fit of one oscillator peak inside ``band = (f_lo, f_hi)`` Hz.

    The fit runs in log space with Nelder-Mead; the Welch log-bias for the
    number of averages is removed first. The covariance is the usual
    Gauss-Newton estimate from the residual scatter.
    """
    f, s = psd.band(*band)
    if len(f) < 8:
        raise NoPeakInBand(f"band {band} holds only {len(f)} bins")
    if np.any(s <= 0):
        raise NoPeakInBand("non-positive PSD values in band")
    # E[log chi2_nu / nu] = psi(nu/2) - log(nu/2)
    nu = 2.0 * max(psd.n_averages, 1)
    log_bias = special.digamma(nu / 2.0) - np.log(nu / 2.0) if psd.n_averages > 1 else 0.0
    log_s = np.log(s) - log_bias

    p0 = _initial_guess(f, s)
    if np.exp(p0[2]) <= 0 or s.max() < min_contrast * np.exp(p0[3]):
        raise NoPeakInBand(f"no peak above background in band {band}")

    def cost(p):
        r = _log_residuals(p, f, log_s)
        return float(r @ r)

    p = p0
    res = None
    for _ in range(4):
        res = optimize.minimize(
            cost, p, method="Nelder-Mead",
            options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 40000, "maxfev": 40000,
                     "adaptive": True},
        )
        if np.allclose(res.x, p, rtol=0, atol=1e-8):
            break
        p = res.x
    p = res.x
    f0, gamma, area, bg = np.exp(p)
    if not (np.all(np.isfinite(p)) and band[0] <= f0 <= band[1]):
        raise FitFailed(f"fit did not converge inside band {band}", best_residual=res.fun)

    natural = np.array([2 * np.pi * f0, gamma, area, bg])
    # Jacobian in relative (log) parameters, then rescaled to natural units
    J = np.empty((len(f), 4))
    h = 1e-6
    for j in range(4):
        up, dn = p.copy(), p.copy()
        up[j] += h
        dn[j] -= h
        J[:, j] = (_log_residuals(up, f, log_s) - _log_residuals(dn, f, log_s)) / (2 * h)
    dof = max(len(f) - 4, 1)
    s2 = res.fun / dof
    try:
        cov = s2 * np.linalg.pinv(J.T @ J) * np.outer(natural, natural)
    except np.linalg.LinAlgError:
        cov = np.full((4, 4), np.inf)
    # band-integrated misfit keeps the area equal to the peak integral when
    # the line is not exactly Lorentzian
    if integrate_residual:
        area += float(np.sum(s - lorentzian(f, *natural)) * psd.df)
    return LorentzianFit(natural[0], gamma, area, bg, cov, tuple(band))


def find_peaks(psd: Psd, min_prominence):
    """Local maxima with prominence above ``min_prominence``, sorted by frequency.

    Returns a list of ``(frequency, height, prominence)`` tuples.
    """
    idx, props = signal.find_peaks(psd.values, prominence=min_prominence)
    return [
        (float(psd.frequencies[i]), float(psd.values[i]), float(pr))
        for i, pr in zip(idx, props["prominences"])
    ]


def floor_level(psd: Psd, f_lo, f_hi):
    """Robust white-floor estimate (band median corrected for chi-square skew)."""
    from scipy.stats import chi2

    _, v = psd.band(f_lo, f_hi)
    if len(v) == 0:
        raise ValueError("empty band")
    nu = 2 * max(psd.n_averages, 1)
    return float(np.median(v) / (chi2.median(nu) / nu))


def floor_scatter(psd: Psd, f_lo, f_hi):
    _, v = psd.band(f_lo, f_hi)
    q75, q25 = np.percentile(v, [75, 25])
    return float((q75 - q25) / 1.349)
