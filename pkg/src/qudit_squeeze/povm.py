"""Six-effect qutrit POVM measuring two anticommutator quadratures at once.

The targets are Q_yz = {J_y, J_z} and Q_zx = {J_z, J_x} on a spin-1 system
(basis |+1>, |0>, |-1>).  Four auxiliary unit vectors provide the projector
differences Q_yz = |phi_2><phi_2| - |phi_1><phi_1| and
Q_zx = |phi_4><phi_4| - |phi_3><phi_3|, and the six effects

    E_1..4 = |phi_k><phi_k| / 2,   E_5 = |+1><+1| / 2,   E_6 = |-1><-1| / 2

sum to the identity.  Expectations follow as <Q_yz> = 2(p_2 - p_1) and
<Q_zx> = 2(p_4 - p_3).

Physically the POVM is realized by an isometry V into an eight-level space
(F=1 triplet plus F=2 quintet), completed to a unitary U = W U_A: U_A is a
set of three equal-m two-level pulses (areas pi/2, pi, pi/2, phases 0), W a
fixed rotation inside the F=2 manifold.  Projective readout in the physical
Zeeman basis then induces exactly the six effects; |1,0> and |2,+2> stay
dark and serve as leakage monitors.

Note on signs: the in-plane readout SLDs of the |0> reference satisfy
l_x = +Q_yz but l_y = -Q_zx (an anticommutator identity, independent of
basis ordering), so the second reconstructed quadrature estimates -<l_y>.
Both carry the same information; the sign cancels in any squeezing figure.

Basis ordering of the eight-level space: F=1 (+1, 0, -1) then F=2
(-2, -1, 0, +1, +2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import anticommutator, spin_operators

__all__ = [
    "PovmSet",
    "NaimarkModel",
    "OutcomeStats",
    "build_effects",
    "reconstruct",
    "reconstruct_from_stats",
    "build_naimark",
    "simulate_readout",
    "dark_channel_occupation",
]

#: eight-level basis labels in storage order
BASIS_LABELS = ("1,+1", "1,0", "1,-1", "2,-2", "2,-1", "2,0", "2,+1", "2,+2")

#: physical outcome feeding each effect E_1..E_6
EFFECT_OUTCOMES = ("2,-2", "2,-1", "2,0", "2,+1", "1,+1", "1,-1")

DARK_OUTCOMES = ("1,0", "2,+2")


@dataclass(frozen=True)
class PovmSet:
    effects: tuple        # six 3x3 PSD matrices summing to the identity
    target_x: np.ndarray  # {J_y, J_z}
    target_y: np.ndarray  # {J_z, J_x}
    aux_states: tuple     # |phi_1..4>


@dataclass(frozen=True)
class NaimarkModel:
    isometry: np.ndarray   # V, 8x3
    unitary: np.ndarray    # U = W U_A, 8x8
    pulse_unitary: np.ndarray   # U_A
    manifold_unitary: np.ndarray  # W
    pulse_area_scale: float


@dataclass(frozen=True)
class OutcomeStats:
    probabilities: np.ndarray  # (8,) over BASIS_LABELS
    effect_probs: np.ndarray   # (6,) p_1..p_6
    shots: int | None


def _aux_states():
    s2 = np.sqrt(2.0)
    phi1 = np.array([1.0, -1j * s2, 1.0]) / 2
    phi2 = np.array([1.0, 1j * s2, 1.0]) / 2
    phi3 = np.array([-1.0, s2, 1.0], dtype=complex) / 2
    phi4 = np.array([1.0, s2, -1.0], dtype=complex) / 2
    return phi1, phi2, phi3, phi4


def build_effects():
    """The six effects plus their target observables."""
    phis = _aux_states()
    effects = [np.outer(p, p.conj()) / 2 for p in phis]
    e5 = np.zeros((3, 3), dtype=complex)
    e5[0, 0] = 0.5
    e6 = np.zeros((3, 3), dtype=complex)
    e6[2, 2] = 0.5
    effects += [e5, e6]
    jx, jy, jz = spin_operators(3)
    return PovmSet(effects=tuple(effects),
                   target_x=anticommutator(jy, jz),
                   target_y=anticommutator(jz, jx),
                   aux_states=phis)


def _check_density(rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (3, 3):
        raise ValueError(f"expected a 3x3 density matrix, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-9:
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-9:
        raise ValueError("density matrix trace deviates from 1")
    if np.linalg.eigvalsh(rho).min() < -1e-9:
        raise ValueError("density matrix has a negative eigenvalue")
    return rho


def reconstruct(rho, povm):
    """(<{J_y,J_z}>, <{J_z,J_x}>) from the six outcome probabilities."""
    rho = _check_density(rho)
    p = np.array([np.trace(rho @ E).real for E in povm.effects])
    return 2.0 * (p[1] - p[0]), 2.0 * (p[3] - p[2])


def _ket8(i):
    v = np.zeros(8, dtype=complex)
    v[i] = 1.0
    return v


_IDX = {label: i for i, label in enumerate(BASIS_LABELS)}


def build_naimark(pulse_area_scale=1.0):
    """Synthesize the Naimark model U = W U_A whose F=1 restriction is V.

    pulse_area_scale multiplies all three pulse areas; values other than 1
    model a calibration error and feed the dark-channel leakage diagnostic
    (the synthesis-residual check is skipped then, since U no longer embeds
    the ideal isometry).
    """
    phi1, phi2, phi3, phi4 = _aux_states()
    V = np.zeros((8, 3), dtype=complex)
    for label, phi in (("2,-2", phi1), ("2,-1", phi2), ("2,0", phi3), ("2,+1", phi4)):
        V += np.outer(_ket8(_IDX[label]), phi.conj())
    V += np.outer(_ket8(_IDX["1,+1"]), np.array([1, 0, 0]).conj())
    V += np.outer(_ket8(_IDX["1,-1"]), np.array([0, 0, 1]).conj())
    V /= np.sqrt(2.0)

    UA = np.eye(8, dtype=complex)
    pulses = (("1,+1", "2,+1", np.pi / 2), ("1,0", "2,0", np.pi), ("1,-1", "2,-1", np.pi / 2))
    for lo, hi, area in pulses:
        th = pulse_area_scale * area / 2
        i1, i2 = _IDX[lo], _IDX[hi]
        R = np.eye(8, dtype=complex)
        R[i1, i1] = R[i2, i2] = np.cos(th)
        R[i1, i2] = R[i2, i1] = -1j * np.sin(th)
        UA = R @ UA

    f2 = [_IDX[l] for l in ("2,-2", "2,-1", "2,0", "2,+1")]
    chi_p = (_ket8(f2[0]) + _ket8(f2[1]) - _ket8(f2[2]) + _ket8(f2[3])) / 2
    chi_0 = (1j * _ket8(f2[0]) - 1j * _ket8(f2[1]) + _ket8(f2[2]) + _ket8(f2[3])) / 2
    chi_m = (_ket8(f2[0]) + _ket8(f2[1]) + _ket8(f2[2]) - _ket8(f2[3])) / 2
    chi_d = (-1j * _ket8(f2[0]) + 1j * _ket8(f2[1]) + _ket8(f2[2]) + _ket8(f2[3])) / 2

    # W acts only inside F=2: three essential images plus the example
    # completion (|2,-2> -> |chi_d>, |2,+2> fixed) pin down all columns;
    # a final Gram-Schmidt sweep in column order removes numerical residue
    # and would deterministically fill any column left unspecified.
    w_cols = {}
    for lbl in ("1,+1", "1,0", "1,-1"):
        w_cols[_IDX[lbl]] = _ket8(_IDX[lbl])
    w_cols[_IDX["2,+1"]] = 1j * chi_p
    w_cols[_IDX["2,0"]] = 1j * chi_0
    w_cols[_IDX["2,-1"]] = 1j * chi_m
    w_cols[_IDX["2,-2"]] = chi_d
    w_cols[_IDX["2,+2"]] = _ket8(_IDX["2,+2"])
    cols = []
    for i in sorted(w_cols):
        v = w_cols[i]
        for c in cols:
            v = v - c * np.vdot(c, v)
        cols.append(v / np.linalg.norm(v))
    W = np.stack(cols, axis=1)

    U = W @ UA
    if pulse_area_scale == 1.0:
        resid = np.max(np.abs(U[:, :3] - V))
        if resid > 1e-10:
            raise RuntimeError(f"Naimark synthesis residual {resid:.2e} exceeds 1e-10")
    return NaimarkModel(isometry=V, unitary=U, pulse_unitary=UA,
                        manifold_unitary=W, pulse_area_scale=pulse_area_scale)


def _embed(rho):
    big = np.zeros((8, 8), dtype=complex)
    big[:3, :3] = rho
    return big


def simulate_readout(rho, model, shots=None, seed=None):
    """Outcome statistics of the physical-basis measurement after U.

    Exact mode (shots=None) returns the Born probabilities; shot mode draws
    a multinomial sample with the given RNG seed and returns frequencies.
    """
    rho = _check_density(rho)
    big = model.unitary @ _embed(rho) @ model.unitary.conj().T
    p = np.clip(np.diag(big).real, 0.0, None)
    p = p / p.sum()
    if shots is not None:
        rng = np.random.default_rng(seed)
        counts = rng.multinomial(shots, p)
        p = counts / shots
    effect_probs = np.array([p[_IDX[l]] for l in EFFECT_OUTCOMES])
    return OutcomeStats(probabilities=p, effect_probs=effect_probs,
                        shots=None if shots is None else int(shots))


def reconstruct_from_stats(stats):
    """(<Q_yz>, <Q_zx>) from physical outcome statistics."""
    p = stats.effect_probs
    return 2.0 * (p[1] - p[0]), 2.0 * (p[3] - p[2])


def dark_channel_occupation(rho, model):
    """Total probability in the ideally dark channels |1,0> and |2,+2>."""
    stats = simulate_readout(rho, model)
    return float(sum(stats.probabilities[_IDX[l]] for l in DARK_OUTCOMES))
