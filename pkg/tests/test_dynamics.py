import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from ldaqc import _kernels
from ldaqc.detuning import difference_all, engineer_detunings, get_family, homogeneous_profile, profile_at
from ldaqc.dynamics import (
    HamiltonianModel,
    IntegratorConfig,
    IntegratorError,
    PulseSchedule,
    assemble_hamiltonian,
    default_c6,
    evolve,
    final_band_spectrum,
    minimal_gap,
    sin2_integral,
    trajectory,
    trapezoid_envelope,
    trapezoid_integral,
)
from ldaqc.graph import build_kings_graph, degree_order, from_edge_list
from ldaqc.metrics import blockade_violation, success_probability
from ldaqc.mis import enumerate_independent_sets

from conftest import graphs, kings_corpus


def dense_oracle(model, schedule, rtol=1e-10, atol=1e-12):
    """Reference evolution with an adaptive Runge-Kutta solver on the dense H(t)."""
    dim = 1 << model.n
    psi0 = np.zeros(dim, complex)
    psi0[0] = 1.0

    def rhs(t, y):
        return -1j * (assemble_hamiltonian(model, schedule, t) @ y)

    sol = solve_ivp(rhs, (0.0, schedule.t_f), psi0, method="DOP853", rtol=rtol, atol=atol)
    return sol.y[:, -1]


def single_atom(t_f, delta0=10.0, shape="sin2"):
    g = from_edge_list(1, [])
    model = HamiltonianModel(g, u_edge=1.0)
    sched = PulseSchedule(t_f, 1.0, delta0, np.ones(1), "traditional", shape)
    return model, sched


def test_hamiltonian_is_hermitian_and_matches_terms(p3):
    model = HamiltonianModel(p3, u_edge=7.0)
    sched = PulseSchedule(10.0, 1.3, 4.0, np.array([0.5, 0.2, 0.5]))
    for t in [0.0, 2.5, 5.0, 9.0]:
        h = assemble_hamiltonian(model, sched, t, dense=True)
        assert np.allclose(h, h.conj().T)
        om = float(sched.omega(t))
        det = sched.detunings(t)
        for m in range(8):
            bits = [(m >> i) & 1 for i in range(3)]
            want = -sum(det[i] * bits[i] for i in range(3)) + 7.0 * (bits[0] * bits[1] + bits[1] * bits[2])
            assert h[m, m] == pytest.approx(want)
            for q in range(3):
                assert h[m ^ (1 << q), m] == pytest.approx(om)


def test_midpoint_operator(p4):
    model = HamiltonianModel(p4, u_edge=5.0)
    sched = PulseSchedule(8.0, 2.0, 4.0, np.ones(4))
    h = assemble_hamiltonian(model, sched, 4.0, dense=True)
    # zero detuning at t_f / 2, peak Rabi coupling
    assert np.allclose(np.diag(h), [5.0 * bin(m & (m >> 1)).count("1") for m in range(16)])
    assert h[1, 0] == pytest.approx(2.0)


def test_envelope_antiderivatives():
    t = np.linspace(0, 7.0, 301)
    from scipy.integrate import cumulative_trapezoid

    for env, anti in [
        (lambda x: np.sin(np.pi * x / 7.0) ** 2 * 1.5, lambda x: sin2_integral(x, 7.0, 1.5)),
        (lambda x: trapezoid_envelope(x, 7.0, 1.5), lambda x: trapezoid_integral(x, 7.0, 1.5)),
    ]:
        fine = np.linspace(0, 7.0, 70001)
        num = cumulative_trapezoid(env(fine), fine, initial=0.0)
        assert np.allclose(np.interp(t, fine, num), anti(t), atol=1e-6)


def test_single_atom_rap():
    model, sched = single_atom(20 * math.pi)
    psi = evolve(model, sched).state
    ref = dense_oracle(model, sched)
    assert abs(psi[1]) ** 2 > 0.99
    assert abs(abs(psi[1]) ** 2 - abs(ref[1]) ** 2) < 1e-8


@pytest.mark.parametrize("method", ["bm6", "yoshida4", "strang"])
def test_against_dense_oracle(p4, method):
    model = HamiltonianModel(p4, u_edge=12.0)
    prof = engineer_detunings(p4, "linear", delta0=6.0)
    sched = PulseSchedule.from_profile(prof, 6.0, 1.0)
    ref = dense_oracle(model, sched)
    dt, tol = {"bm6": (0.02, 1e-6), "yoshida4": (0.01, 1e-5), "strang": (0.002, 1e-4)}[method]
    psi = evolve(model, sched, IntegratorConfig(dt=dt, method=method)).state
    assert np.abs(psi - ref).max() < tol


def test_convergence_order(p3):
    model = HamiltonianModel(p3, u_edge=8.0)
    sched = PulseSchedule(5.0, 1.0, 5.0, np.array([0.7, 0.3, 0.7]))
    ref = dense_oracle(model, sched, rtol=1e-12, atol=1e-14)
    err = [np.abs(evolve(model, sched, IntegratorConfig(dt=dt)).state - ref).max() for dt in (0.1, 0.05)]
    assert err[0] / err[1] > 10.0  # fourth order gives ~16


def test_zero_rabi_is_phase_only(p3):
    model = HamiltonianModel(p3, u_edge=3.0)
    sched = PulseSchedule(4.0, 1.0, 5.0, np.ones(3))
    rng = np.random.default_rng(0)
    psi0 = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi0 /= np.linalg.norm(psi0)
    # all X angles zero: only diagonal phases survive
    weight, inter = model.diagonals(sched.factors)
    psi = psi0.copy()
    taus = np.array([0.5, 0.25])
    scales = np.array([1.0, -2.0])
    v_phases = np.exp(-1j * taus[:, None] * inter[None, :])
    _kernels.propagate(psi, 3, sched.factors, v_phases, np.array([0, 1]), np.zeros(3), scales, taus)
    phase = np.exp(-1j * (taus.sum() * inter + (taus * scales).sum() * weight))
    assert np.allclose(psi, psi0 * phase, atol=1e-14)
    assert np.allclose(np.abs(psi), np.abs(psi0))


def test_p3_long_sweep_finds_mis(p3):
    model = HamiltonianModel(p3, u_edge=2 * math.pi * 8)
    cat = enumerate_independent_sets(p3)
    sched = PulseSchedule.traditional(3, 40 * math.pi)
    res = evolve(model, sched)
    assert success_probability(res.state, cat) > 0.99
    assert res.norm_drift <= 1e-6


def test_unit_factors_match_traditional(p4):
    model = HamiltonianModel(p4, u_edge=30.0)
    ones = profile_at(p4, "linear", 0.0, 10.0)
    a = evolve(model, PulseSchedule.from_profile(ones, 10 * math.pi, 1.0, "local_degree")).state
    b = evolve(model, PulseSchedule.traditional(4, 10 * math.pi, delta0=10.0)).state
    cat = enumerate_independent_sets(p4)
    assert abs(success_probability(a, cat) - success_probability(b, cat)) <= 1e-9


def test_norm_guard(p3):
    model = HamiltonianModel(p3, u_edge=3.0)
    sched = PulseSchedule(1.0, 1.0, 2.0, np.ones(3))
    with pytest.raises(IntegratorError):
        evolve(model, sched, IntegratorConfig(norm_tol=-1.0))


def test_samples_end_at_final_state(p3):
    model = HamiltonianModel(p3, u_edge=10.0)
    sched = PulseSchedule(3.0, 1.0, 4.0, np.ones(3))
    res = evolve(model, sched, n_samples=4)
    assert len(res.samples) == 4 and res.sample_times[-1] == pytest.approx(3.0)
    assert np.array_equal(res.samples[-1], res.state)
    rows = trajectory(model, sched, enumerate_independent_sets(p3), n_samples=5)
    assert len(rows) == 5 and all(r["gap"] > 0 for r in rows)


def test_blockade_leakage_small_corpus():
    for g in kings_corpus(6, 3, 3, 0.2, seed0=3):
        prof = engineer_detunings(g, "linear")
        model = HamiltonianModel(g, c6=default_c6())
        cat = enumerate_independent_sets(g)
        for proto in ("traditional", "local_degree"):
            psi = evolve(model, PulseSchedule.from_profile(prof, 10 * math.pi, 1.0, proto)).state
            assert blockade_violation(psi, cat) <= 0.05


def test_band_spectrum_consistency(p4):
    cat = enumerate_independent_sets(p4)
    prof = engineer_detunings(p4, "linear", delta0=10.0)
    spec = final_band_spectrum(cat, prof)
    assert spec.bands_separated
    model = HamiltonianModel(p4, u_edge=50.0)
    sched = PulseSchedule.from_profile(prof, 10.0, 1.0)
    h = assemble_hamiltonian(model, sched, 10.0, dense=True)
    for k, masks in cat.by_size.items():
        assert np.allclose(np.diag(h)[masks], spec.bands[k])
    # homogeneous factors: bands are flat and equally spaced
    flat = final_band_spectrum(cat, homogeneous_profile(4, 2.0))
    for k, e in flat.bands.items():
        assert np.allclose(e, -k)


@given(graphs(min_n=2, max_n=10), st.floats(0.0, 1.0))
@settings(max_examples=100, deadline=None)
def test_band_separation_implied_by_energy_condition(g, u):
    # D_k bounds the band gap over all vertex subsets, so D_k > 0 forces
    # separation of the IS bands; the converse need not hold
    fam = get_family("linear")
    order = degree_order(g)
    a = u * fam.a_max(max(g.degrees))
    cat = enumerate_independent_sets(g)
    if np.all(difference_all(order, fam, a) > 0):
        assert final_band_spectrum(cat, profile_at(g, fam, a, 1.0)).bands_separated


def test_engineered_profiles_separate_bands():
    for g in kings_corpus(20, 4, 4, 0.3, seed0=100):
        cat = enumerate_independent_sets(g)
        assert final_band_spectrum(cat, engineer_detunings(g, "linear")).bands_separated


def test_single_atom_gap_closed_form():
    model, sched = single_atom(10.0, delta0=6.0)
    res = minimal_gap(model, sched, n_points=101)
    # min over t of sqrt(4 Omega^2 + Delta^2); Delta = 0 at t_f/2 where Omega = 1
    t = np.linspace(0, 10.0, 200001)
    closed = np.sqrt(4 * sched.omega(t) ** 2 + sched.sweep(t) ** 2)
    assert res.delta_min == pytest.approx(closed.min(), abs=1e-6)


def test_full_and_blockade_gaps_agree():
    g = build_kings_graph(3, 3, 0.3, 42)
    cat = enumerate_independent_sets(g)
    prof = engineer_detunings(g, "linear")
    model = HamiltonianModel(g, c6=default_c6(factor=200.0))
    sched = PulseSchedule.from_profile(prof, 20 * math.pi, 1.0)
    full = minimal_gap(model, sched, 60, manifold=cat.mis_count, space="full")
    block = minimal_gap(model, sched, 60, manifold=cat.mis_count, space="blockade", masks=cat.all_masks())
    assert full.delta_min == pytest.approx(block.delta_min, rel=0.05)


def test_caps_and_validation(p3):
    with pytest.raises(ValueError):
        HamiltonianModel(p3)
    with pytest.raises(ValueError):
        HamiltonianModel(p3, c6=1.0)
    with pytest.raises(ValueError):
        PulseSchedule(0.0, 1.0, 1.0, np.ones(3))
    with pytest.raises(ValueError):
        IntegratorConfig(method="euler")
    big = from_edge_list(15, [])
    with pytest.raises(ValueError):
        evolve(HamiltonianModel(big, u_edge=1.0), PulseSchedule(1.0, 1.0, 1.0, np.ones(15)))


def test_step_cap_handles_strong_interactions(p3):
    # U * dt would be 8 rad at the nominal step; the cap keeps it at 1
    model = HamiltonianModel(p3, u_edge=400.0)
    sched = PulseSchedule(6.0, 1.0, 6.0, np.array([0.8, 0.4, 0.8]))
    ref = dense_oracle(model, sched)
    capped = evolve(model, sched).state
    uncapped = evolve(model, sched, IntegratorConfig(max_phase=math.inf)).state
    assert np.abs(capped - ref).max() < 1e-6
    assert np.abs(uncapped - ref).max() > 10 * np.abs(capped - ref).max()
