"""Hot loops: independent-set tables and split-step state propagation.

Every kernel has a numba implementation and a pure-numpy implementation with
identical semantics. The numba path is used when numba imports cleanly and the
environment variable ``LDAQC_DISABLE_NUMBA`` is unset (or ``0``); otherwise
the numpy path is bound to the public names. Both paths stay importable as
``*_numba`` / ``*_numpy`` so the benchmark and the tests can compare them.
"""
from __future__ import annotations

import os

import numpy as np

_flag = os.environ.get("LDAQC_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _flag not in ("", "0", "false", "no")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED


# ---------------------------------------------------------------- numpy path
#
# Propagation model. One split step is the operator sequence
#
#     X(angle_0) D_0 X(angle_1) D_1 ... D_{m-1} X(angle_m)
#
# applied left to right in time (X(angle_0) acts first), where
#
#     X(theta) = exp(-i theta sum_q X_q)
#     D_j      = exp(-i tau_j (scale_j * sum_q f_q n_q + V))
#
# and V is the (diagonal) interaction energy. exp(-i tau_j V) only depends on
# tau_j, which takes a handful of distinct values, so it is precomputed in
# ``v_phases[stage[j]]``. The remaining factor is a product of single-qubit
# phases and is fused with the following X rotation into one 2x2 per qubit.


def independent_table_numpy(adj: np.ndarray, n: int) -> np.ndarray:
    """Boolean table over all 2**n vertex masks: True where the mask is independent.

    Built by doubling: masks whose highest set bit is ``v`` are independent iff
    the lower part is independent and does not touch ``adj[v]``.
    """
    table = np.zeros(1 << n, dtype=np.bool_)
    table[0] = True
    for v in range(n):
        size = 1 << v
        low = np.arange(size, dtype=np.int64)
        table[size : 2 * size] = table[:size] & ((low & int(adj[v])) == 0)
    return table


def _qubit_gate_numpy(psi: np.ndarray, q: int, g00, g01, g10, g11) -> None:
    view = psi.reshape(-1, 2, 1 << q)
    a = view[:, 0, :].copy()
    b = view[:, 1, :].copy()
    view[:, 0, :] = g00 * a + g01 * b
    view[:, 1, :] = g10 * a + g11 * b


def apply_x_rotation_numpy(psi: np.ndarray, n: int, theta: float) -> None:
    """In place: psi <- exp(-i theta sum_q X_q) psi."""
    if theta == 0.0:
        return
    c, s = np.cos(theta), np.sin(theta)
    for q in range(n):
        _qubit_gate_numpy(psi, q, c, -1j * s, -1j * s, c)


def propagate_numpy(psi, n, factors, v_phases, stage, x_angles, scales, taus) -> None:
    """Apply the split-step sequence described above, in place."""
    apply_x_rotation_numpy(psi, n, float(x_angles[0]))
    for j in range(taus.shape[0]):
        psi *= v_phases[stage[j]]
        theta = float(x_angles[j + 1])
        c, s = np.cos(theta), np.sin(theta)
        for q in range(n):
            p = np.exp(-1j * taus[j] * scales[j] * factors[q])
            _qubit_gate_numpy(psi, q, c, -1j * s * p, -1j * s, c * p)


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:

    @njit(cache=True)
    def independent_table_numba(adj, n):
        table = np.zeros(1 << n, dtype=np.bool_)
        table[0] = True
        for m in range(1, 1 << n):
            low = m & -m
            v = 0
            while (low >> v) != 1:
                v += 1
            table[m] = table[m ^ low] and (adj[v] & m) == 0
        return table

    @njit(cache=True)
    def _qubit_gate_nb(psi, q, g00, g01, g10, g11):
        dim = psi.shape[0]
        bit = 1 << q
        for base in range(0, dim, 2 * bit):
            for i in range(base, base + bit):
                a = psi[i]
                b = psi[i + bit]
                psi[i] = g00 * a + g01 * b
                psi[i + bit] = g10 * a + g11 * b

    @njit(cache=True)
    def apply_x_rotation_numba(psi, n, theta):
        if theta != 0.0:
            c = complex(np.cos(theta), 0.0)
            ms = complex(0.0, -np.sin(theta))
            for q in range(n):
                _qubit_gate_nb(psi, q, c, ms, ms, c)

    @njit(cache=True)
    def propagate_numba(psi, n, factors, v_phases, stage, x_angles, scales, taus):
        dim = psi.shape[0]
        apply_x_rotation_numba(psi, n, x_angles[0])
        for j in range(taus.shape[0]):
            row = v_phases[stage[j]]
            for i in range(dim):
                psi[i] *= row[i]
            c = complex(np.cos(x_angles[j + 1]), 0.0)
            ms = complex(0.0, -np.sin(x_angles[j + 1]))
            for q in range(n):
                ph = -taus[j] * scales[j] * factors[q]
                p = complex(np.cos(ph), np.sin(ph))
                _qubit_gate_nb(psi, q, c, ms * p, ms, c * p)

else:  # pragma: no cover
    independent_table_numba = independent_table_numpy
    apply_x_rotation_numba = apply_x_rotation_numpy
    propagate_numba = propagate_numpy


if USE_NUMBA:
    independent_table = independent_table_numba
    apply_x_rotation = apply_x_rotation_numba
    propagate = propagate_numba
else:
    independent_table = independent_table_numpy
    apply_x_rotation = apply_x_rotation_numpy
    propagate = propagate_numpy


def popcounts(n: int) -> np.ndarray:
    """Number of set bits for every mask in ``range(2**n)``."""
    counts = np.zeros(1 << n, dtype=np.int64)
    for v in range(n):
        counts[1 << v : 2 << v] = counts[: 1 << v] + 1
    return counts


def occupations(n: int) -> np.ndarray:
    """(2**n, n) 0/1 matrix; row ``m`` holds the bits of mask ``m``."""
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n, dtype=np.int64)[None, :]) & 1).astype(np.float64)
