import numpy as np
import pytest
from scipy.linalg import expm

from qudit_squeeze.algebra import gellmann_basis, spin_operators, structure_constants
from qudit_squeeze.dynamics import DenseSpace, HamiltonianSpec, build_hamiltonian, evolve
from qudit_squeeze.gdtwa import (
    GdtwaConfig,
    _compile_moments,
    _reduce,
    meanfield_rhs,
    mix64,
    run_gdtwa,
    sample_initial,
)
from qudit_squeeze.qfim import SensingTask
from qudit_squeeze.readout import build_readout

PHI0 = np.array([0, 1, 0], dtype=complex)


@pytest.fixture(scope="module")
def inplane():
    task = SensingTask.from_axes(3, "xy")
    return build_readout(PHI0, task)


def exact_product_moments(phi, readout, N):
    sx, sy, _ = spin_operators(3)
    ops = [readout.slds[0], readout.slds[1], sx, sy]
    mean = np.array([(phi.conj() @ o @ phi).real for o in ops]) * N
    sym2 = np.empty((4, 4))
    for a in range(4):
        for b in range(4):
            s1 = (phi.conj() @ (ops[a] @ ops[b] + ops[b] @ ops[a]) @ phi).real / 2
            ma = (phi.conj() @ ops[a] @ phi).real
            mb = (phi.conj() @ ops[b] @ phi).real
            sym2[a, b] = N * s1 + N * (N - 1) * ma * mb
    cov = sym2 - np.outer(mean, mean)
    G = N * np.array([[(phi.conj() @ readout.transduction[i][b] @ phi).real
                       for b in range(2)] for i in range(2)])
    return cov, G


def test_mix64_distinct_and_stable():
    seeds = {mix64(12345, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert mix64(12345, 0) == mix64(12345, 0)
    assert mix64(12345, 1) != mix64(12346, 1)


def test_sampling_first_moments(inplane):
    basis = gellmann_basis(3)
    v = sample_initial(PHI0, 2, 40000, 7, basis)
    exact = np.array([(PHI0.conj() @ lam @ PHI0).real for lam in basis.generators])
    means = v.mean(axis=(0, 1))
    # three standard errors; eigenvalue spread of every generator is <= 2
    assert np.max(np.abs(means - exact)) <= 3 * 2 / np.sqrt(2 * 40000)


def test_sampling_deterministic_components(inplane):
    # |0> is an eigenstate of both diagonal generators: zero variance
    basis = gellmann_basis(3)
    v = sample_initial(PHI0, 1, 500, 11, basis)
    h1 = v[:, 0, basis.index_diag(1)]
    h2 = v[:, 0, basis.index_diag(2)]
    assert np.ptp(h1) == 0.0
    np.testing.assert_allclose(h1[0], -1.0, atol=1e-12)
    assert np.ptp(h2) == 0.0
    np.testing.assert_allclose(h2[0], 1 / np.sqrt(3), atol=1e-12)


def test_sampling_reproducible(inplane):
    basis = gellmann_basis(3)
    a = sample_initial(PHI0, 3, 50, 99, basis)
    b = sample_initial(PHI0, 3, 50, 99, basis)
    np.testing.assert_array_equal(a, b)


def test_t0_moment_estimates_match_exact(inplane):
    basis = gellmann_basis(3)
    plan = _compile_moments(inplane, basis)
    N, n = 6, 20000
    v = sample_initial(PHI0, N, n, 13, basis)
    A, M, G, sz = _reduce(v, plan, N)
    cov_hat = M.mean(axis=0) - np.outer(A.mean(axis=0), A.mean(axis=0))
    cov_ex, g_ex = exact_product_moments(PHI0, inplane, N)
    assert np.max(np.abs(cov_hat - cov_ex)) <= 0.3  # ~3 sigma at this n
    assert np.max(np.abs(G.mean(axis=0) - g_ex)) <= 0.3
    assert np.max(np.abs(sz)) <= 1e-12  # sum_j <s_z> is exactly zero per point


def test_convergence_rate_one_over_sqrt_n(inplane):
    basis = gellmann_basis(3)
    plan = _compile_moments(inplane, basis)
    N = 8
    cov_ex, g_ex = exact_product_moments(PHI0, inplane, N)
    rms = {}
    for n in (1000, 4000, 16000):
        sq = []
        for seed in range(16):
            v = sample_initial(PHI0, N, n, 1000 + seed, basis)
            A, M, G, _ = _reduce(v, plan, N)
            cov_hat = M.mean(axis=0) - np.outer(A.mean(axis=0), A.mean(axis=0))
            err = np.sqrt(np.sum((cov_hat - cov_ex) ** 2)
                          + np.sum((G.mean(axis=0) - g_ex) ** 2))
            sq.append(err ** 2)
        rms[n] = float(np.sqrt(np.mean(sq)))
    assert 2 / 1.5 <= rms[1000] / rms[4000] <= 2 * 1.5
    assert 2 / 1.5 <= rms[4000] / rms[16000] <= 2 * 1.5


def test_meanfield_onsite_exact_single_site():
    # pure -V0 s_z^2 on one site: per-trajectory flow equals the exact
    # single-site Schroedinger evolution of the generator expectations
    d = 3
    basis = gellmann_basis(d)
    structure = structure_constants(basis)
    spec = HamiltonianSpec.xy(0.0, 0.0, 1.7)  # J0 = 0: on-site term only
    rng = np.random.default_rng(3)
    z = rng.normal(size=d) + 1j * rng.normal(size=d)
    z /= np.linalg.norm(z)
    v = np.array([[(z.conj() @ lam @ z).real for lam in basis.generators]])
    _, _, sz = spin_operators(d)
    H = -1.7 * (sz @ sz)
    dt, steps = 1e-4, 2000
    for _ in range(steps):
        k1 = meanfield_rhs(v, spec, structure, basis)
        k2 = meanfield_rhs(v + dt / 2 * k1, spec, structure, basis)
        k3 = meanfield_rhs(v + dt / 2 * k2, spec, structure, basis)
        k4 = meanfield_rhs(v + dt * k3, spec, structure, basis)
        v = v + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    zt = expm(-1j * H * dt * steps) @ z
    exact = np.array([(zt.conj() @ lam @ zt).real for lam in basis.generators])
    np.testing.assert_allclose(v[0], exact, atol=1e-8)


def test_meanfield_rhs_zero_couplings():
    spec = HamiltonianSpec.xy(0.0, 0.0, 0.0)
    v = sample_initial(PHI0, 4, 3, 5)
    dv = meanfield_rhs(v, spec)
    np.testing.assert_allclose(dv, np.zeros_like(dv), atol=0)


def test_constant_record_without_dynamics(inplane):
    spec = HamiltonianSpec.xy(0.0, 0.0, 0.0)
    cfg = GdtwaConfig(n_traj=1, master_seed=4, dt=1e-2,
                      t_out=(0.05, 0.1, 0.2), validate_dt=False, jackknife=False)
    res = run_gdtwa(cfg, spec, PHI0, inplane, N=4)
    base = res.records[0]
    for r in res.records[1:]:
        np.testing.assert_allclose(r.C, base.C, atol=1e-12)
        np.testing.assert_allclose(r.G, base.G, atol=1e-12)
        assert abs(r.xi2 - base.xi2) <= 1e-9


def test_two_site_tracks_dense_oracle(inplane):
    # gamma = 0 pair: trajectory means vs the exact N=2 simulation stay
    # within the jackknife bands at short times
    spec = HamiltonianSpec.xy(1.0, 0.0, 2.0)
    t_out = (0.05, 0.1, 0.15, 0.2)
    cfg = GdtwaConfig(n_traj=3000, master_seed=21, dt=1e-3, t_out=t_out,
                      validate_dt=False)
    res = run_gdtwa(cfg, spec, PHI0, inplane, N=2)
    space = DenseSpace(2, 3)
    H = build_hamiltonian(spec, space, inplane)
    snaps = evolve(space.product_state(PHI0), H, t_out)
    from qudit_squeeze.readout import xi2_kappa_scan

    for r, s in zip(res.records, snaps):
        _, exact = xi2_kappa_scan(s, inplane)
        assert abs(r.xi2 - exact) <= 3 * r.xi2_err


def test_sz_conserved_along_trajectories(inplane):
    spec = HamiltonianSpec.xy(1.0, 0.7, 2.0)
    cfg = GdtwaConfig(n_traj=200, master_seed=31, dt=1e-3,
                      t_out=(0.05, 0.15, 0.3), validate_dt=False)
    res = run_gdtwa(cfg, spec, PHI0, inplane, N=6)
    assert np.max(np.abs(res.sz_mean - res.sz_mean[0])) <= 1e-10


def test_determinism_identical_runs(inplane):
    spec = HamiltonianSpec.xy(1.0, 0.5, 2.0)
    cfg = GdtwaConfig(n_traj=150, master_seed=8, dt=1e-3, t_out=(0.05, 0.1),
                      validate_dt=False)
    r1 = run_gdtwa(cfg, spec, PHI0, inplane, N=5)
    r2 = run_gdtwa(cfg, spec, PHI0, inplane, N=5)
    for a, b in zip(r1.records, r2.records):
        assert a.xi2 == b.xi2 and a.xi2_err == b.xi2_err
        np.testing.assert_array_equal(a.C, b.C)


def test_dt_rejection(inplane):
    # a grotesquely large step must fail the halving check
    spec = HamiltonianSpec.xy(1.0, 0.0, 2.0)
    cfg = GdtwaConfig(n_traj=60, master_seed=2, dt=0.1, t_out=(0.3,),
                      probe_traj=60)
    with pytest.raises(ValueError, match="rejected"):
        run_gdtwa(cfg, spec, PHI0, inplane, N=8)


def test_off_grid_output_time_rejected(inplane):
    spec = HamiltonianSpec.xy(1.0, 0.0, 2.0)
    cfg = GdtwaConfig(n_traj=10, master_seed=2, dt=1e-3, t_out=(0.0005,),
                      validate_dt=False)
    with pytest.raises(ValueError, match="step grid"):
        run_gdtwa(cfg, spec, PHI0, inplane, N=2)


def test_squeezing_dip_short_chain(inplane):
    # gamma = 0.5, V0/J0 = 2: xi^2 drops below 1 well before J0 t = 0.2
    spec = HamiltonianSpec.xy(1.0, 0.5, 2.0)
    cfg = GdtwaConfig(n_traj=400, master_seed=14, dt=1e-3,
                      t_out=(0.05, 0.1, 0.15), validate_dt=False)
    res = run_gdtwa(cfg, spec, PHI0, inplane, N=16)
    assert min(r.xi2 for r in res.records) < 1.0


def test_trajectory_count_guard():
    with pytest.raises(ValueError):
        GdtwaConfig(n_traj=0, master_seed=1, dt=1e-3, t_out=(0.1,))
    with pytest.raises(ValueError):
        GdtwaConfig(n_traj=10, master_seed=1, dt=-1e-3, t_out=(0.1,))
    with pytest.raises(ValueError):
        GdtwaConfig(n_traj=10, master_seed=1, dt=1e-3, t_out=(0.1,),
                    integrator="Euler")
