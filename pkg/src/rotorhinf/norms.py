"""H-infinity norm of continuous-time LTI systems."""

import numpy as np

from .riccati import IMAG_AXIS_RTOL


def sigma_max(sys, omega):
    """Largest singular value of the frequency response at each ``omega``."""
    resp = sys.freqresp(omega)
    return np.array([np.linalg.svd(G, compute_uv=False)[0] if G.size else 0.0
                     for G in resp])


def default_frequency_grid(sys, n_points=400):
    poles = sys.poles()
    mags = np.abs(poles[np.abs(poles) > 0])
    lo = np.log10(mags.min()) - 2 if mags.size else -3
    hi = np.log10(mags.max()) + 2 if mags.size else 3
    grid = np.logspace(lo, hi, n_points)
    resonances = np.abs(poles.imag[np.abs(poles.imag) > 0])
    return np.unique(np.concatenate([[0.0], grid, resonances]))


def _crossing_peak(sys, gamma):
    """Largest sigma_max found near candidate crossings of level ``gamma``.

    Candidate frequencies are the imaginary parts of near-imaginary
    Hamiltonian eigenvalues; each is verified by evaluating the response
    there and at the midpoints between candidates (and DC), so spurious
    candidates cannot raise the lower bound.
    """
    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    m = D.shape[1]
    R = gamma**2 * np.eye(m) - D.T @ D
    Rinv = np.linalg.inv(R)
    Ah = A + B @ Rinv @ D.T @ C
    H = np.block([
        [Ah, B @ Rinv @ B.T],
        [-C.T @ (np.eye(D.shape[0]) + D @ Rinv @ D.T) @ C, -Ah.T],
    ])
    eigs = np.linalg.eigvals(H)
    scale = max(np.linalg.norm(H, "fro"), 1.0)
    near = np.abs(eigs.real) <= max(IMAG_AXIS_RTOL, 1e-6) * scale
    if not np.any(near):
        return 0.0
    w = np.unique(np.abs(eigs.imag[near]))
    w = np.concatenate([[0.0], w])
    probes = np.concatenate([w, 0.5 * (w[1:] + w[:-1]), 2.0 * w[-1:]])
    return float(sigma_max(sys, probes).max())


def hinf_norm(sys, tol=1e-6, max_iter=200):
    """H-infinity norm by bisection with the Hamiltonian crossing test.

    The lower bound starts from a frequency sweep and is tightened with
    verified crossing frequencies found at each trial level.  The returned
    value is the final upper bound, so it is never below any probed
    singular value.  Returns ``inf`` when ``sys`` is not asymptotically
    stable.
    """
    if sys.n_states and sys.spectral_abscissa() >= 0:
        return np.inf
    if sys.D.size == 0:
        return 0.0
    sigma_d = np.linalg.svd(sys.D, compute_uv=False)[0]
    if sys.n_states == 0:
        return float(sigma_d)
    lo = max(sigma_d, sigma_max(sys, default_frequency_grid(sys)).max())
    if lo == 0.0:
        return 0.0
    hi = 2.0 * lo
    while (peak := _crossing_peak(sys, hi)) > hi:
        lo, hi = peak, 2.0 * peak
    for _ in range(max_iter):
        if hi - lo <= tol * lo:
            break
        mid = 0.5 * (lo + hi)
        peak = _crossing_peak(sys, mid)
        if peak > mid:
            lo = min(peak, hi)
        else:
            hi = mid
    return float(hi)
