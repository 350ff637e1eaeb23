"""Lanczos propagator psi -> exp(-i H dt) psi for Hermitian H given as a matvec.

The Krylov dimension grows until the residual indicator drops below the
per-step tolerance; when the maximum dimension is not enough the interval is
split into substeps, starting from an estimate based on ||H psi|| and
doubling until every substep converges.  For large vectors the basis is not
stored: a second Lanczos pass recurs the basis vectors while accumulating
the result (memory stays at a few state vectors at the cost of one extra
matvec sweep).
"""

from __future__ import annotations

import numpy as np


__all__ = ["StepControllerError", "expm_apply"]

#: store the Krylov basis only when n * m stays below this many complex entries
_STORE_LIMIT = 8_000_000


class StepControllerError(RuntimeError):
    """Raised when adaptive bisection cannot meet the per-step tolerance."""


def _lanczos(matvec, psi, m_max, store):
    """Run the three-term recurrence; returns (alphas, betas, V or None, k).

    betas[j] is the coupling from vector j to j+1; the recurrence stops early
    on happy breakdown (betas[k-1] ~ 0), in which case the Krylov space is
    exact and k < m_max.
    """
    n = psi.size
    alphas = []
    betas = []
    v_prev = None
    v = psi
    V = [psi] if store else None
    for j in range(m_max):
        w = matvec(v)
        a = np.vdot(v, w).real
        alphas.append(a)
        w = w - a * v
        if v_prev is not None:
            w = w - betas[-1] * v_prev
        b = np.linalg.norm(w)
        if b < 1e-13 * max(1.0, abs(a)) or j == m_max - 1:
            if b >= 1e-13 * max(1.0, abs(a)):
                betas.append(b)
            return np.array(alphas), np.array(betas), V, len(alphas)
        betas.append(b)
        v_prev = v
        v = w / b
        if store:
            V.append(v)
    return np.array(alphas), np.array(betas), V, len(alphas)


def _small_expm(alphas, betas, k, dt):
    """First column of exp(-i dt T) for the k x k tridiagonal T."""
    T = np.diag(alphas[:k])
    if k > 1:
        off = np.asarray(betas[: k - 1])
        T += np.diag(off, 1) + np.diag(off, -1)
    evals, evecs = np.linalg.eigh(T)
    phases = np.exp(-1j * dt * evals)
    return evecs @ (phases * evecs[0].conj())


def _try_step(matvec, psi, dt, tol, m_max):
    """One Krylov step; returns (result or None, converged flag)."""
    n = psi.size
    m_cap = min(m_max, n)
    store = n * m_cap <= _STORE_LIMIT
    alphas, betas, V, k = _lanczos(matvec, psi, m_cap, store)
    exact = len(betas) < k  # happy breakdown: Krylov space closed
    y = _small_expm(alphas, betas, k, dt)
    if not exact:
        err = abs(betas[k - 1] * y[k - 1]) * min(1.0, abs(dt) * betas[k - 1])
        if err > tol:
            return None, False
    if store:
        out = np.zeros_like(psi)
        for yj, vj in zip(y, V):
            out += yj * vj
        return out, True
    # second pass: regenerate the basis vectors and accumulate
    out = y[0] * psi
    v_prev = None
    v = psi
    for j in range(k - 1):
        w = matvec(v)
        w = w - alphas[j] * v
        if v_prev is not None:
            w = w - betas[j - 1] * v_prev
        v_prev = v
        v = w / betas[j]
        out += y[j + 1] * v
    return out, True


def expm_apply(matvec, psi, dt, tol=1e-10, m_max=40):
    """exp(-i H dt) psi with adaptive Krylov dimension and substepping.

    The substep count starts from the local energy scale ||H psi|| and
    doubles until every substep meets its share of the tolerance (floored
    near machine precision so the controller always terminates).
    """
    if dt == 0.0:
        return psi.copy()
    scale = np.linalg.norm(matvec(psi))
    n_sub = max(1, int(np.ceil(abs(dt) * scale / max(1.0, 0.5 * m_max))))
    while n_sub <= 2 ** 24:
        step_tol = max(tol / n_sub, 5e-14)
        cur = psi
        ok = True
        for _ in range(n_sub):
            cur, converged = _try_step(matvec, cur, dt / n_sub, step_tol, m_max)
            if not converged:
                ok = False
                break
        if ok:
            return cur
        n_sub *= 2
    raise StepControllerError(
        f"could not meet tolerance {tol:.1e} over dt={dt:.3e} even with "
        f"2^24 substeps; the Hamiltonian norm may be inconsistent with the grid")
