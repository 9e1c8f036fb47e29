import numpy as np
import pytest

from mswf import errors, grid, packets, potentials as pots, propagator as prop
from mswf.packets import GaussianBase, PacketSpec

SPEC = grid.GridSpec(1, 512, 20.0)


def rel_l2(a, b):
    num = np.sqrt(np.sum(np.abs(a.values - b.values) ** 2) * a.spec.cell_volume)
    return num / b.l2_norm()


def test_scalar_potential_families():
    x = np.array([[1.0], [3.0]])
    V = prop.ScalarPotentialModel("soft-power", mu=1.0, amplitude=0.3)
    np.testing.assert_allclose(V(0.0, x), 0.3 * np.sqrt(1 + x[:, 0] ** 2))
    q = prop.ScalarPotentialModel("quadratic-test")
    np.testing.assert_allclose(q(0.0, x), 0.5 * x[:, 0] ** 2)
    assert V.conforming and not q.conforming
    with pytest.raises(errors.InputError):
        prop.ScalarPotentialModel("soft-power", mu=2.0)


def test_scalar_derivatives():
    V = prop.ScalarPotentialModel("soft-power", mu=1.0, amplitude=0.3)
    x = np.array([[0.7]])
    h = 1e-6
    fd = (V(0.0, x + h) - V(0.0, x - h)) / (2 * h)
    assert V.derivative(0.0, x, (1,))[0] == pytest.approx(fd[0], abs=1e-8)
    q = prop.ScalarPotentialModel("quadratic-test")
    assert q.derivative(0.0, x, (2,))[0] == 1.0
    assert q.derivative(0.0, x, (3,))[0] == 0.0


def test_free_gaussian_closed_form():
    u0 = grid.gaussian_data(SPEC)
    u1 = prop.evolve(pots.zero_model(1), None, u0, 0.0, 1.0,
                     prop.EvolveConfig(dt=1e-3))
    x = SPEC.axis(0)
    exact = (1 + 1j) ** (-0.5) * np.exp(-x ** 2 / (2 * (1 + 1j)))
    assert np.max(np.abs(u1.values - exact)) <= 1e-6


def test_free_evolution_equals_packet_evolution():
    u0 = grid.gaussian_data(SPEC, width=1.3, momentum=0.5)
    via_solver = prop.evolve(pots.zero_model(1), None, u0, 0.0, 0.7,
                             prop.EvolveConfig(dt=1e-2))
    via_packets = packets.free_evolve_packet(u0, 0.7)
    assert np.max(np.abs(via_solver.values - via_packets.values)) <= 1e-10


def test_uniform_potential_gauge_identity():
    # a = const c: u(t) = exp(icx) * free_evolve(exp(-icy) u0)
    c = 0.8
    model = pots.VectorPotentialModel(
        "custom-sampled", 1,
        custom_a=lambda t, x: np.full_like(x, c),
        custom_jacobian=lambda t, x: np.zeros(x.shape[:-1] + (1, 1)),
        custom_conforming=True)
    u0 = grid.gaussian_data(SPEC)
    t = 0.5
    u1 = prop.evolve(model, None, u0, 0.0, t, prop.EvolveConfig(dt=1e-3))
    x = SPEC.axis(0)
    w0 = grid.GridFunction(SPEC, u0.values * np.exp(-1j * c * x))
    exact = np.exp(1j * c * x) * packets.free_evolve_packet(w0, t).values
    assert np.max(np.abs(u1.values - exact)) <= 1e-6


L2_CASES = [
    ("zero", pots.zero_model(1), SPEC, 1e-3),
    ("soft-power", pots.soft_power_model(1, 0.5), SPEC, 5e-3),
    ("rotational", pots.rotational_model(0.5), grid.GridSpec(2, 256, 6.0), 1e-2),
    ("constant-field", pots.constant_field_model(1.0), grid.GridSpec(2, 256, 6.0), 1e-2),
]


@pytest.mark.parametrize("name,model,spec,dt", L2_CASES, ids=[c[0] for c in L2_CASES])
def test_l2_conservation(name, model, spec, dt):
    u0 = grid.gaussian_data(spec)
    u1 = prop.evolve(model, None, u0, 0.0, 1.0, prop.EvolveConfig(dt=dt))
    assert abs(u1.l2_norm() - u0.l2_norm()) / u0.l2_norm() <= 1e-6


def test_l2_conservation_with_scalar():
    u0 = grid.gaussian_data(SPEC)
    V = prop.ScalarPotentialModel("soft-power", mu=1.0, amplitude=0.3)
    u1 = prop.evolve(pots.zero_model(1), V, u0, 0.0, 1.0, prop.EvolveConfig(dt=1e-3))
    assert abs(u1.l2_norm() - u0.l2_norm()) / u0.l2_norm() <= 1e-6


def test_order_two_selfconvergence():
    spec = grid.GridSpec(1, 1024, 20.0)
    u0 = grid.gaussian_data(spec)
    model = pots.soft_power_model(1, 0.5, amplitude=1.0)
    T = 0.5

    def run(dt):
        return prop.evolve(model, None, u0, 0.0, T, prop.EvolveConfig(dt=dt))

    ref = run(T / 128)  # dt/8 reference
    e1 = np.max(np.abs(run(T / 16).values - ref.values))
    e2 = np.max(np.abs(run(T / 32).values - ref.values))
    assert 3.0 <= e1 / e2 <= 5.5


def test_reference_solver_agrees():
    spec = grid.GridSpec(1, 128, 12.0)
    u0 = grid.gaussian_data(spec)
    model = pots.soft_power_model(1, 0.5, amplitude=0.5, modulation="sin")
    split = prop.evolve(model, None, u0, 0.0, 0.4, prop.EvolveConfig(dt=1e-3))
    dense = prop.evolve(model, None, u0, 0.0, 0.4,
                        prop.EvolveConfig(dt=1e-3, method="reference-midpoint"))
    assert np.max(np.abs(split.values - dense.values)) <= 1e-4
    assert abs(dense.l2_norm() - u0.l2_norm()) <= 1e-10


def test_reference_solver_size_guard():
    u0 = grid.gaussian_data(grid.GridSpec(1, 1024, 20.0))
    with pytest.raises(errors.GuardError):
        prop.evolve(pots.zero_model(1), None, u0, 0.0, 0.1,
                    prop.EvolveConfig(dt=1e-2, method="reference-midpoint"))


def test_harmonic_coherent_state_returns():
    spec = grid.GridSpec(1, 512, 12.0)
    u0 = grid.gaussian_data(spec, center=2.0)
    V = prop.ScalarPotentialModel("quadratic-test")
    u1 = prop.evolve(pots.zero_model(1), V, u0, 0.0, 2 * np.pi,
                     prop.EvolveConfig(dt=2e-3))
    x = spec.axis(0)
    center = float(np.sum(x * np.abs(u1.values) ** 2)
                   / np.sum(np.abs(u1.values) ** 2))
    assert abs(center - 2.0) <= 1e-3


def test_cfl_guard():
    u0 = grid.gaussian_data(grid.GridSpec(2, 256, 6.0))
    model = pots.constant_field_model(10.0)  # |a| up to ~42 near the corner
    with pytest.raises(errors.CflError):
        prop.evolve(model, None, u0, 0.0, 0.5, prop.EvolveConfig(dt=0.1))


def test_boundary_mass_guard():
    spec = grid.GridSpec(1, 256, 5.0)
    u0 = grid.gaussian_data(spec, width=0.1)  # spreads past the box quickly
    with pytest.raises(errors.BoundaryMassError):
        prop.evolve(pots.zero_model(1), None, u0, 0.0, 2.0,
                    prop.EvolveConfig(dt=1e-2))


def test_probe_callback_sees_each_step():
    u0 = grid.gaussian_data(SPEC)
    seen = []
    prop.evolve(pots.zero_model(1), None, u0, 0.0, 0.1,
                prop.EvolveConfig(dt=0.025), probe=lambda t, f: seen.append(t))
    assert len(seen) == 4
    assert seen[-1] == pytest.approx(0.1)


# ---------------------------------------------------------------------------
# transport identity, leading term


def test_leading_term_time_zero_reduces_to_wpt():
    u0 = grid.gaussian_data(SPEC)
    ps = PacketSpec(GaussianBase(1.0), b=0.125, lam=4.0)
    p = ((0.5,), (1.2,))
    lhs = prop.evolved_wpt_leading(pots.zero_model(1), u0, ps, 0.0, p)
    rhs = packets.wpt(u0, ps.window(1), p)
    assert abs(lhs - rhs) <= 1e-12


def test_leading_term_exact_for_free_motion():
    u0 = grid.gaussian_data(SPEC)
    model = pots.zero_model(1)
    t = 1.0
    u1 = prop.evolve(model, None, u0, 0.0, t, prop.EvolveConfig(dt=1e-3))
    ps = PacketSpec(GaussianBase(1.0), b=0.125, lam=4.0)
    p = ((0.5,), (1.2,))
    lhs = packets.wpt(u1, ps.window(1).evolved(t), p)
    rhs = prop.evolved_wpt_leading(model, u0, ps, t, p)
    assert abs(lhs - rhs) <= 1e-6


def test_leading_term_exact_for_gradient_free_potential():
    # remainder carries potential derivatives, so a uniform a(t) is exact
    model = pots.VectorPotentialModel(
        "custom-sampled", 1,
        custom_a=lambda t, x: np.full_like(x, 0.8 * np.sin(t) + 0.3),
        custom_jacobian=lambda t, x: np.zeros(x.shape[:-1] + (1, 1)),
        custom_conforming=True)
    u0 = grid.gaussian_data(SPEC)
    t = 0.4
    u1 = prop.evolve(model, None, u0, 0.0, t, prop.EvolveConfig(dt=2.5e-4))
    ps = PacketSpec(GaussianBase(1.0), b=0.125, lam=4.0)
    p = ((0.3,), (1.1,))
    lhs = packets.wpt(u1, ps.window(1).evolved(t), p)
    rhs = prop.evolved_wpt_leading(model, u0, ps, t, p, tol=1e-12)
    assert abs(lhs - rhs) <= 1e-6


def test_leading_term_discrepancy_shrinks_along_scaled_points():
    # the remainder is lower order along escaping scaled phase points
    spec = grid.GridSpec(1, 1024, 20.0)
    u0 = grid.gaussian_data(spec, width=0.2)
    model = pots.soft_power_model(1, 0.5, amplitude=0.5)
    b = packets.theorem_scaling_exponent(0.5)
    t = 0.5
    u1 = prop.evolve(model, None, u0, 0.0, t, prop.EvolveConfig(dt=5e-4))
    disc = []
    for lam in (16.0, 64.0, 256.0):
        ps = PacketSpec(GaussianBase(1.0), b=b, lam=lam)
        p = ((0.0,), (lam * 0.1,))
        lhs = packets.wpt(u1, ps.window(1).evolved(t), p)
        rhs = prop.evolved_wpt_leading(model, u0, ps, t, p, tol=1e-11)
        disc.append(abs(lhs - rhs))
    assert disc[0] > disc[1] > disc[2]


def test_leading_term_relative_remainder_bounded_at_fixed_frequency():
    # at a fixed frequency the remainder does not vanish with the dilation,
    # but it stays a small bounded fraction of the transform
    spec = grid.GridSpec(1, 1024, 20.0)
    u0 = grid.gaussian_data(spec)
    model = pots.soft_power_model(1, 0.5, amplitude=0.5)
    t = 0.25
    u1 = prop.evolve(model, None, u0, 0.0, t, prop.EvolveConfig(dt=5e-4))
    for lam in (16.0, 256.0):
        ps = PacketSpec(GaussianBase(1.0), b=0.0625, lam=lam)
        p = ((0.3,), (1.2,))
        lhs = packets.wpt(u1, ps.window(1).evolved(t), p)
        rhs = prop.evolved_wpt_leading(model, u0, ps, t, p, tol=1e-11)
        assert abs(lhs - rhs) / abs(lhs) <= 0.02
