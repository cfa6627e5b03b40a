"""Pure-NumPy swing-equation kernel.

Fallback for :mod:`lyapstab._swing_core`; both expose the same ``rk4_swing``
signature so the selector in :mod:`lyapstab._core` can swap them freely.
"""

import numpy as np


def _accel(delta, omega, minv, damp, pm, emf, G, B):
    """Rotor acceleration of every machine at the given state.

    Electrical power uses the reduced-network form
    ``Pe_i = E_i * sum_j E_j (G_ij cos(d_i - d_j) + B_ij sin(d_i - d_j))``,
    expanded through the angle-difference identities so no (n, n) temporary
    is formed.  Machines with ``minv == 0`` (infinite inertia) never move.
    """
    c = np.cos(delta)
    s = np.sin(delta)
    ec = emf * c
    es = emf * s
    pe = emf * (c * (G @ ec) + s * (G @ es) + s * (B @ ec) - c * (B @ es))
    return (pm - pe - damp * omega) * minv


def rk4_swing(delta, omega, minv, damp, pm, emf, G, B, h, n_blocks, substeps,
              out_delta, out_omega):
    """Integrate the classical swing equations with fixed-step RK4.

    ``delta`` and ``omega`` are modified in place and hold the final state.
    After every ``substeps`` internal steps of size ``h`` the state is written
    to the next row of ``out_delta`` / ``out_omega`` (``n_blocks`` rows total).

    Returns -1 if every recorded state is finite, otherwise the index of the
    first non-finite record; rows before that index are valid.
    """
    half = 0.5 * h
    sixth = h / 6.0
    for block in range(n_blocks):
        for _ in range(substeps):
            k1w = _accel(delta, omega, minv, damp, pm, emf, G, B)
            d2 = delta + half * omega
            w2 = omega + half * k1w
            k2w = _accel(d2, w2, minv, damp, pm, emf, G, B)
            d3 = delta + half * w2
            w3 = omega + half * k2w
            k3w = _accel(d3, w3, minv, damp, pm, emf, G, B)
            d4 = delta + h * w3
            w4 = omega + h * k3w
            k4w = _accel(d4, w4, minv, damp, pm, emf, G, B)
            delta += sixth * (omega + 2.0 * w2 + 2.0 * w3 + w4)
            omega += sixth * (k1w + 2.0 * k2w + 2.0 * k3w + k4w)
        out_delta[block] = delta
        out_omega[block] = omega
        if not (np.isfinite(delta).all() and np.isfinite(omega).all()):
            return block
    return -1
