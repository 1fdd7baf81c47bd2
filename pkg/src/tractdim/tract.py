"""Logarithmic-tract geometry: locating tracts, the inverse map phi, rescaling.

A tract of a handle f at radius R is an unbounded component of
f^{-1}({|w| > R}).  On each tract f = exp o tau with tau = log f conformal
onto a right half-plane region, and phi = tau^{-1} is evaluated either in
closed form (exponential and composite families) or by predictor-corrector
continuation on the wrapped residual log f(z) - xi (Koenigs family).
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from . import linearizer as lz
from .errors import ContinuationStall, NoTractFound, ZeroDenominator

MIN_OFFSET = 0.05  # Re xi floor; phi extends only continuously to the boundary
_NEWTON_TOL = 1e-11
_NEWTON_MAXIT = 50
_TWO_PI = 2 * np.pi


def _wrap_imag(w):
    """Reduce the imaginary part to (-pi, pi] — residuals live on the cylinder."""
    return complex(w.real, (w.imag + np.pi) % _TWO_PI - np.pi)


def _halton(n, base):
    out = np.zeros(n)
    for i in range(n):
        f, x, k = 1.0, 0.0, i + 1
        while k > 0:
            f /= base
            x += f * (k % base)
            k //= base
        out[i] = x
    return out


@dataclass
class TractBranch:
    """One tract with its inverse map.

    closed_phi/closed_dphi hold analytic formulas when the family admits
    them; otherwise phi is continued numerically from cached anchors.
    """

    handle: object
    base_point: complex
    base_log: complex
    closed_phi: object = None
    closed_dphi: object = None
    _anchors: list = field(default_factory=list)
    _scales: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self._anchors:
            self._anchors.append((self.base_log, self.base_point))


@dataclass
class TractAtlas:
    function: object
    radius: float
    tracts: list


@dataclass
class RescaledBoundary:
    T: float
    scale: float
    polyline: list


# ---------------------------------------------------------------------------
# Tract location


def _closed_branches_exp_power(handle, R):
    f = handle.payload
    d, lam = f.d, f.lam
    # f(z) = e^xi  <=>  z^d = xi - log lam; one tract per d-th root sector
    shift = cmath.log(lam)
    branches = []
    for j in range(d):
        rot = cmath.exp(2j * np.pi * j / d)

        def phi(xi, rot=rot):
            return rot * (np.asarray(xi, dtype=complex) - shift) ** (1.0 / d)

        def dphi(xi, rot=rot):
            return rot * (np.asarray(xi, dtype=complex) - shift) ** (1.0 / d - 1.0) / d

        base_log = max(2.0 * np.log(R), 4.0)
        branches.append(
            TractBranch(handle, phi(base_log), complex(base_log), phi, dphi)
        )
    return branches


def _closed_branches_composite(handle, R):
    inner = handle.payload.inner
    inner_atlas = find_tracts(inner, R)
    branches = []
    for ib in inner_atlas.tracts:
        def phi(xi, ib=ib):
            return np.log(phi_eval(ib, xi))

        def dphi(xi, ib=ib):
            z = phi_eval(ib, xi)
            return phi_derivative(ib, xi) / z

        base_log = ib.base_log
        branches.append(
            TractBranch(handle, phi(base_log), complex(base_log), phi, dphi)
        )
    return branches


def _log_f_and_q(handle, z):
    """(log f(z) up to 2 pi i, logarithmic derivative f'/f) without overflow.

    Accepts scalars or arrays.
    """
    if handle.variant == "ExpPower":
        f = handle.payload
        z = np.asarray(z, dtype=complex) if not np.isscalar(z) else complex(z)
        return cmath.log(f.lam) + z**f.d, f.d * z ** (f.d - 1)
    if handle.variant == "Koenigs":
        # handle-level z is the linearizer's own variable; kappa is inside L
        return lz.linearizer_log_eval(handle.payload, z)
    if handle.variant == "CompositeExp":
        ez = np.exp(np.asarray(z, dtype=complex)) if not np.isscalar(z) else cmath.exp(z)
        lf, q = _log_f_and_q(handle.payload.inner, ez)
        return lf, q * ez
    raise ValueError("unknown variant %r" % handle.variant)


def phi_refine(branch, xi, z_guess):
    """Vectorized Newton polish of phi at an array of xi given nearby guesses.

    Used by quadrature refinement where interleaved nodes inherit
    interpolated guesses from the coarser level; the wrapped residual keeps
    each point on its own 2 pi i sheet.
    """
    xi = np.asarray(xi, dtype=complex)
    z = np.asarray(z_guess, dtype=complex).copy()
    for _ in range(_NEWTON_MAXIT):
        lf, q = _log_f_and_q(branch.handle, z)
        res = lf - xi
        res = np.real(res) + 1j * ((np.imag(res) + np.pi) % _TWO_PI - np.pi)
        done = np.abs(res) < _NEWTON_TOL * (1.0 + np.abs(xi))
        if done.all():
            break
        step = res / q
        cap = 2.0 * np.maximum(np.abs(z), 1.0)
        big = np.abs(step) > cap
        step = np.where(big, step * (cap / np.where(big, np.abs(step), 1.0)), step)
        z = np.where(done, z, z - step)
    else:
        raise ContinuationStall("batched refinement did not converge")
    return z, 1.0 / q


def _sampled_branches(handle, R, max_rho=1e12):
    threshold = np.log(R) + 1.0  # base points must satisfy |f| > R e
    n_angles = 720
    angles = np.linspace(0.0, _TWO_PI, n_angles, endpoint=False)
    rho = 1.0
    while rho <= max_rho:
        logmod = np.empty(n_angles)
        for i, a in enumerate(angles):
            lf, _ = _log_f_and_q(handle, rho * np.exp(1j * a))
            logmod[i] = lf.real
        mask = logmod > threshold
        if mask.any():
            break
        rho *= 1.5
    if rho > max_rho:
        raise NoTractFound("no escape at |f| > R e within the search annulus")
    # contiguous angular clusters, wrapping around
    idx = np.flatnonzero(mask)
    breaks = np.flatnonzero(np.diff(idx) > 1)
    runs = np.split(idx, breaks + 1)
    if len(runs) > 1 and runs[0][0] == 0 and runs[-1][-1] == n_angles - 1:
        runs[0] = np.concatenate([runs[-1] - n_angles, runs[0]])
        runs.pop()
    branches = []
    for run in runs:
        center = angles[run[len(run) // 2] % n_angles]
        z_b = rho * np.exp(1j * center)
        lf, _ = _log_f_and_q(handle, z_b)
        branches.append(TractBranch(handle, complex(z_b), _wrap_imag(lf)))
    return branches


def find_tracts(handle, R, max_rho=1e12):
    """Atlas of tracts at radius R, one TractBranch per located component."""
    if R < max(1.0, handle.singular_radius):
        raise ValueError("R below the singular radius")
    if handle.variant == "ExpPower":
        tracts = _closed_branches_exp_power(handle, R)
    elif handle.variant == "CompositeExp":
        tracts = _closed_branches_composite(handle, R)
    else:
        tracts = _sampled_branches(handle, R, max_rho)
    return TractAtlas(handle, float(R), tracts)


# ---------------------------------------------------------------------------
# phi evaluation


def _newton(handle, z, xi, cap):
    for _ in range(_NEWTON_MAXIT):
        lf, q = _log_f_and_q(handle, z)
        res = _wrap_imag(lf - xi)
        if abs(res) < _NEWTON_TOL * (1.0 + abs(xi)):
            return z, True
        if abs(q) < 1e-300:
            raise ZeroDenominator("vanishing f'/f during correction")
        step = res / q
        if abs(step) > cap:
            step *= cap / abs(step)
        z = z - step
    return z, False


def phi_eval(branch, xi):
    """z in the tract with log f(z) = xi, by continuation from cached anchors."""
    if np.min(np.real(xi)) < MIN_OFFSET:
        raise ValueError("Re xi below the minimum offset %g" % MIN_OFFSET)
    if branch.closed_phi is not None:
        return branch.closed_phi(xi)
    xi = complex(xi)  # continuation path is scalar
    anchor_xi, z = min(branch._anchors, key=lambda a: abs(a[0] - xi))
    z = _continue_to(branch, anchor_xi, z, xi)
    if len(branch._anchors) < 4096:
        branch._anchors.append((xi, z))
    return z


def _continue_to(branch, current, z, xi):
    """Walk z = phi(current) to phi(xi) with trust-region predictor steps.

    Step sizes grow geometrically while the winding guard accepts and halve
    when it rejects, so affine-like tracts take O(log) steps per decade while
    curved geometry self-limits.
    """
    trust = getattr(branch, "_trust", None)
    if trust is None:
        trust = 0.4 * max(current.real, 1.0)
    while current != xi:
        remaining = xi - current
        max_step = max(trust, 1e-12)
        while True:
            step = remaining
            if abs(step) > max_step:
                step *= max_step / abs(step)
            target = current + step
            _, q = _log_f_and_q(branch.handle, z)
            if abs(q) < 1e-300:
                raise ZeroDenominator("vanishing f'/f on continuation path")
            z_pred = z + step / q  # tangent predictor: dz/dxi = 1/(log f)'
            cap = 2.0 * max(abs(z_pred), 1.0)
            z_new, ok = _newton(branch.handle, z_pred, target, cap)
            if ok:
                # adjacent 2 pi i sheets sit ~ 2 pi |phi'| away; a correction
                # larger than a third of that means the predictor may have
                # hopped windings
                _, q_new = _log_f_and_q(branch.handle, z_new)
                sheet = _TWO_PI / max(abs(q_new), 1e-300)
                if abs(z_new - z_pred) <= 0.3 * sheet or abs(step) < 1e-10:
                    trust = max_step * 1.5
                    break
            max_step /= 2
            trust = max_step
            if max_step < 1e-12:
                raise ContinuationStall("step underflow near xi = %s" % xi)
        current, z = target, z_new
    branch._trust = trust
    return z


def phi_path(branch, xis):
    """phi and phi' along an ordered sequence of nearby xi values.

    Sequential continuation carrying state from node to node; much cheaper
    than independent phi_eval calls for quadrature contours.
    """
    xis = [complex(x) for x in xis]
    if branch.closed_phi is not None:
        arr = np.asarray(xis)
        return np.asarray(branch.closed_phi(arr)), np.asarray(branch.closed_dphi(arr))
    zs = np.empty(len(xis), dtype=complex)
    ds = np.empty(len(xis), dtype=complex)
    z = phi_eval(branch, xis[0])
    current = xis[0]
    for i, xi in enumerate(xis):
        z = _continue_to(branch, current, z, xi)
        current = xi
        _, q = _log_f_and_q(branch.handle, z)
        zs[i] = z
        ds[i] = 1.0 / q
    return zs, ds


def phi_derivative(branch, xi):
    """phi'(xi) = 1 / (log f)'(phi(xi)), the exact chain rule for f o phi = exp."""
    if branch.closed_dphi is not None:
        return branch.closed_dphi(xi)
    z = phi_eval(branch, complex(xi))
    _, q = _log_f_and_q(branch.handle, z)
    if abs(q) < 1e-300:
        raise ZeroDenominator("vanishing f'/f at phi(xi)")
    return 1.0 / q


def tract_scale(branch, T):
    """|phi(T)|, the normalization of Eq-style rescaling; cached per T."""
    key = float(T)
    if key not in branch._scales:
        branch._scales[key] = abs(phi_eval(branch, complex(key)))
    return branch._scales[key]


def rescaled_map(branch, T, xi):
    """phi_T(xi) = phi(T xi) / |phi(T)|; satisfies |phi_T(1)| = 1."""
    if T < 1:
        raise ValueError("T must be >= 1")
    return phi_eval(branch, T * complex(xi)) / tract_scale(branch, T)


# ---------------------------------------------------------------------------
# Boundary traces and diagnostics


def _rectangle_path(n_points, eps=MIN_OFFSET):
    """Uniform closed path around [eps, 4] x [-4, 4] in parameter space."""
    corners = [eps - 4j, 4 - 4j, 4 + 4j, eps + 4j, eps - 4j]
    lengths = [abs(corners[i + 1] - corners[i]) for i in range(4)]
    per = sum(lengths)
    pts = []
    for i in range(4):
        m = max(2, int(round(n_points * lengths[i] / per)))
        for s in np.linspace(0.0, 1.0, m, endpoint=False):
            pts.append(corners[i] + s * (corners[i + 1] - corners[i]))
    return pts


def trace_boundary(branch, T, n_points=512):
    if n_points < 64:
        raise ValueError("n_points must be >= 64")
    path = _rectangle_path(n_points)
    scale = tract_scale(branch, T)
    poly = [phi_eval(branch, T * xi) / scale for xi in path]
    poly.append(poly[0])
    return RescaledBoundary(float(T), scale, poly)


def _sample_annulus_qt(T, samples, inner_frac=0.125):
    """Deterministic low-discrepancy sample of Q_T minus Q_{T/8}.

    Drawn in normalized (xi/T) coordinates with a fixed normalized floor so
    the sample scales exactly with T: reported ratios are bitwise
    T-independent for scale-invariant phi.
    """
    h2, h3 = _halton(4 * samples, 2), _halton(4 * samples, 3)
    re_n = MIN_OFFSET + (4 - MIN_OFFSET) * h2
    im_n = (2 * h3 - 1) * 4
    keep = ~((re_n < 4 * inner_frac) & (np.abs(im_n) < 4 * inner_frac))
    return T * (re_n + 1j * im_n)[keep][:samples]


def check_condition_42(branch, T, samples=400):
    """max/min of |phi| over Q_T minus Q_{T/8}; bounded ratios across a T-grid
    certify the geometric condition used for distortion control."""
    if samples < 100:
        raise ValueError("samples must be >= 100")
    mods = [abs(phi_eval(branch, xi)) for xi in _sample_annulus_qt(T, samples)]
    return max(mods) / min(mods)


def estimate_holder(branch, T, pairs=2000):
    """Envelope fit of log|g(z1)-g(z2)| vs log|z1-z2| for g = phi(T .)
    normalized by |g'(1)| = T |phi'(T)|; returns (alpha_hat, H_hat)."""
    if pairs < 1000:
        raise ValueError("pairs must be >= 1000")
    h2, h3 = _halton(pairs, 2), _halton(pairs, 3)
    h5, h7 = _halton(pairs, 5), _halton(pairs, 7)
    z1 = (MIN_OFFSET + (4 - MIN_OFFSET) * h2) + 1j * (8 * h3 - 4)
    # half independent pairs, half correlated across a geometric range of
    # separations so every distance bin sees near-boundary geometry
    half = pairs // 2
    sep = 4.0 * 2.0 ** (-12.0 * h5[half:])
    z2 = np.empty(pairs, dtype=complex)
    z2[:half] = (MIN_OFFSET + (4 - MIN_OFFSET) * h5[:half]) + 1j * (8 * h7[:half] - 4)
    z2[half:] = z1[half:] + sep * np.exp(2j * np.pi * h7[half:])
    inside = (z2.real >= MIN_OFFSET) & (z2.real <= 4) & (np.abs(z2.imag) <= 4)
    z1, z2 = z1[inside], z2[inside]
    norm = T * abs(phi_derivative(branch, complex(T)))
    xs, ys = [], []
    for a, b in zip(z1, z2):
        if a == b:
            continue  # degenerate pair carries no slope information
        ga = phi_eval(branch, T * a)
        gb = phi_eval(branch, T * b)
        gap = abs(ga - gb) / norm
        if gap == 0:
            continue
        xs.append(np.log(abs(a - b)))
        ys.append(np.log(gap))
    xs, ys = np.asarray(xs), np.asarray(ys)
    bins = np.linspace(xs.min(), xs.max() + 1e-9, 13)
    ex, ey = [], []
    for i in range(12):
        sel = (xs >= bins[i]) & (xs < bins[i + 1])
        if sel.any():
            ex.append(0.5 * (bins[i] + bins[i + 1]))
            ey.append(ys[sel].max())
    slope, intercept = np.polyfit(ex, ey, 1)
    # a conformal map cannot beat Lipschitz at small scales; trim fit noise
    return float(min(slope, 1.0)), float(np.exp(intercept))


def el_violations(branch, T=16.0, samples=10000):
    """Count of sampled xi violating |phi'(xi)/phi(xi)| <= 4 pi / Re xi."""
    h2, h3 = _halton(samples, 2), _halton(samples, 3)
    re = MIN_OFFSET + (4 * T - MIN_OFFSET) * h2
    im = (2 * h3 - 1) * 4 * T
    bad = 0
    for xi in re + 1j * im:
        ratio = abs(phi_derivative(branch, xi) / phi_eval(branch, xi))
        if ratio > 4 * np.pi / xi.real * (1 + 1e-9):
            bad += 1
    return bad
