"""Resonance location and lineshape fits for channel-probability scans."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit


@dataclass(frozen=True)
class ResonanceFit:
    found: bool
    center: float = float("nan")
    width: float = float("nan")
    height: float = float("nan")
    baseline: float = float("nan")
    kind: str = "none"            # lorentzian | fano | none
    rmse: float = float("nan")
    q: float = float("nan")       # Fano asymmetry when kind == "fano"


def lorentzian(x, amp, center, width, base):
    hw = 0.5 * width
    return base + amp * hw**2 / ((x - center) ** 2 + hw**2)


def fano(x, amp, center, width, q, base):
    hw = 0.5 * width
    eps = (x - center) / hw
    return base + amp * (q + eps) ** 2 / (1.0 + eps**2)


def find_resonance(energies, values, min_points: int = 7) -> ResonanceFit:
    """Fit a peak in values(energies); Fano fallback for asymmetric shapes.

    Returns found=False (never raises) when the data are monotone or
    hold no interior extremum that rises meaningfully above both ends.
    """
    x = np.asarray(energies, dtype=float)
    y = np.asarray(values, dtype=float)
    ok = np.isfinite(x) & np.isfinite(y)
    x, y = x[ok], y[ok]
    if x.size < min_points:
        return ResonanceFit(found=False)
    order = np.argsort(x)
    x, y = x[order], y[order]

    i = int(np.argmax(y))
    span = y.max() - y.min()
    if i == 0 or i == x.size - 1 or span <= 0:
        return ResonanceFit(found=False)
    edge = max(y[0], y[-1])
    if y[i] - edge < 0.1 * span:
        return ResonanceFit(found=False)

    base0 = float(np.median(y))
    amp0 = float(y[i] - base0)
    # initial width: distance to half maximum
    above = y > base0 + 0.5 * amp0
    w0 = max(x[above].max() - x[above].min(), x[1] - x[0]) if above.sum() > 1 \
        else float(x[1] - x[0])
    fits = []
    try:
        p, _ = curve_fit(lorentzian, x, y, p0=[amp0, x[i], w0, base0], maxfev=20000)
        r = float(np.sqrt(np.mean((lorentzian(x, *p) - y) ** 2)))
        if p[2] > 0 and x[0] <= p[1] <= x[-1]:
            fits.append(("lorentzian", p, r))
    except RuntimeError:
        pass
    try:
        p, _ = curve_fit(fano, x, y, p0=[amp0, x[i], w0, 1.0, base0], maxfev=20000)
        r = float(np.sqrt(np.mean((fano(x, *p) - y) ** 2)))
        if abs(p[2]) > 0 and x[0] <= p[1] <= x[-1]:
            fits.append(("fano", p, r))
    except RuntimeError:
        pass
    if not fits:
        # fall back to the raw maximum
        return ResonanceFit(found=True, center=float(x[i]), width=float(w0),
                            height=float(y[i]), baseline=base0, kind="none",
                            rmse=float("nan"))
    fits.sort(key=lambda f: f[2])
    kind, p, r = fits[0]
    if kind == "lorentzian":
        return ResonanceFit(found=True, center=float(p[1]), width=float(abs(p[2])),
                            height=float(p[0] + p[3]), baseline=float(p[3]),
                            kind=kind, rmse=r)
    return ResonanceFit(found=True, center=float(p[1]), width=float(abs(p[2])),
                        height=float(np.max(fano(x, *p))), baseline=float(p[4]),
                        kind=kind, rmse=r, q=float(p[3]))
