import numpy as np
import pytest

from mswf import errors, potentials as pots


def central_difference_jacobian(model, t, x, h=1e-5):
    """Independent 2nd-order stencil used as the oracle for analytic Jacobians."""
    n = model.n
    J = np.empty((n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        J[:, k] = (pots.eval_a(model, t, x + e) - pots.eval_a(model, t, x - e)) / (2 * h)
    return J


def test_zero_family():
    model = pots.zero_model(3)
    x = np.array([1.0, -2.0, 0.5])
    assert np.all(pots.eval_a(model, 0.3, x) == 0)
    assert np.all(pots.jacobian_a(model, 0.3, x) == 0)
    assert np.all(pots.magnetic_field(model, 0.3, x) == 0)


def test_soft_power_at_origin():
    model = pots.soft_power_model(2, 0.5)
    # <0> = 1, so every component equals the modulation value
    np.testing.assert_allclose(pots.eval_a(model, 0.0, np.zeros(2)), [1.0, 1.0])


def test_constant_field_gauge():
    model = pots.constant_field_model(1.0)
    np.testing.assert_allclose(pots.eval_a(model, 0.0, np.array([1.0, 0.0])),
                               [0.0, 0.5])
    J = pots.jacobian_a(model, 0.0, np.array([2.0, -3.0]))
    np.testing.assert_allclose(J, [[0.0, -0.5], [0.5, 0.0]])
    B = pots.magnetic_field(model, 0.0, np.array([7.0, 1.0]))
    np.testing.assert_allclose(B, [[0.0, 1.0], [-1.0, 0.0]])


@pytest.mark.parametrize("model", [
    pots.soft_power_model(2, 0.5),
    pots.soft_power_model(2, 0.5, amplitude=(0.7, 1.3), modulation="sin"),
    pots.rotational_model(0.5, modulation="cosbump"),
    pots.constant_field_model(2.0),
])
def test_jacobian_matches_central_difference(model):
    for x in (np.array([1.0, 2.0]), np.array([-0.3, 0.1]), np.array([5.0, -4.0])):
        J = pots.jacobian_a(model, 0.7, x)
        J_fd = central_difference_jacobian(model, 0.7, x)
        assert np.max(np.abs(J - J_fd)) <= 1e-7


def test_jacobian_rows_are_component_gradients():
    # relative agreement with finite differences over |x| <= 100
    model = pots.soft_power_model(2, 0.5, amplitude=(1.0, 0.5))
    for r in (1.0, 10.0, 100.0):
        x = r * np.array([0.6, -0.8])
        J = pots.jacobian_a(model, 0.2, x)
        J_fd = central_difference_jacobian(model, 0.2, x, h=1e-5 * max(1.0, r))
        scale = max(np.max(np.abs(J)), 1e-12)
        assert np.max(np.abs(J - J_fd)) / scale <= 1e-6


def test_magnetic_field_antisymmetry():
    for model in (pots.rotational_model(0.5), pots.constant_field_model(1.5),
                  pots.soft_power_model(2, 0.3)):
        for x in (np.array([0.1, 0.2]), np.array([3.0, -1.0])):
            B = pots.magnetic_field(model, 0.4, x)
            assert np.max(np.abs(B + B.T)) == 0.0


def test_rotational_field_decays():
    model = pots.rotational_model(0.5, modulation="sin")
    t = 0.5
    b10 = np.abs(pots.magnetic_field(model, t, np.array([10.0, 0.0]))[0, 1])
    b100 = np.abs(pots.magnetic_field(model, t, np.array([100.0, 0.0]))[0, 1])
    expected = (pots.bracket(np.array([100.0, 0.0])) /
                pots.bracket(np.array([10.0, 0.0]))) ** (0.5 - 1.0)
    assert b100 / b10 == pytest.approx(expected, rel=0.25)


def test_divergence_closed_forms():
    x = np.array([0.7, -1.2])
    soft = pots.soft_power_model(2, 0.5, amplitude=(1.0, 2.0))
    h = 1e-6
    num = sum((pots.eval_a(soft, 0.0, x + h * e)[i] -
               pots.eval_a(soft, 0.0, x - h * e)[i]) / (2 * h)
              for i, e in enumerate(np.eye(2)))
    assert pots.divergence_a(soft, 0.0, x) == pytest.approx(num, abs=1e-8)
    assert pots.divergence_a(pots.rotational_model(0.5), 0.0, x) == 0.0
    assert pots.divergence_a(pots.constant_field_model(1.0), 0.0, x) == 0.0


def test_derivative_a_against_nested_differences():
    model = pots.soft_power_model(2, 0.5)
    x = np.array([[1.0, 2.0]])
    h = 1e-4
    for alpha in ((1, 0), (0, 2), (1, 1), (2, 1)):
        val = pots.derivative_a(model, 0.0, x, 0, alpha)[0]
        # reduce one order by a central difference of the analytic lower order
        axis = next(i for i, c in enumerate(alpha) if c > 0)
        lower = list(alpha)
        lower[axis] -= 1
        e = np.zeros(2)
        e[axis] = h
        fd = (pots.derivative_a(model, 0.0, x + e, 0, tuple(lower))[0]
              - pots.derivative_a(model, 0.0, x - e, 0, tuple(lower))[0]) / (2 * h)
        assert val == pytest.approx(fd, rel=1e-6, abs=1e-8)


def test_verify_decay_soft_power_conforms():
    model = pots.soft_power_model(2, 0.5)
    report = pots.verify_decay(model, 0.5, 3, (10.0, 100.0, 1000.0))
    assert report.conforming
    # bounded by twice the first-shell value
    for per_shell in report.shell_sups.values():
        assert all(v <= 2.0 * per_shell[0] + 1e-15 for v in per_shell[1:])


def test_verify_decay_constant_field_fails():
    model = pots.constant_field_model(1.0)
    report = pots.verify_decay(model, 0.9, 1, (10.0, 100.0, 1000.0))
    assert not report.conforming
    # the order-0 ratio grows roughly like <x>^0.1 between shells
    order0 = report.shell_sups[(0, 0)]
    assert order0[1] / order0[0] > 1.2


def test_verify_decay_zero_trivial():
    report = pots.verify_decay(pots.zero_model(1), 0.5, 3, (10.0, 100.0))
    assert report.conforming
    assert all(v == 0.0 for vals in report.shell_sups.values() for v in vals)


def test_conforming_flags():
    assert pots.soft_power_model(1, 0.5).conforming
    assert pots.rotational_model(0.0).conforming
    assert not pots.constant_field_model(1.0).conforming
    with pytest.raises(errors.InputError):
        pots.soft_power_model(1, 1.0)  # rho < 1 required


def test_json_roundtrip():
    model = pots.rotational_model(0.5, amplitude=0.7, modulation="sin")
    again = pots.model_from_json(pots.model_to_json(model))
    assert again.family == model.family
    assert again.rho == model.rho
    assert again.amplitude == model.amplitude
    inline = pots.model_from_json('{"family": "soft-power", "n": 1, "rho": 0.25}')
    assert inline.rho == 0.25


def test_custom_model_finite_difference_fallback():
    model = pots.VectorPotentialModel(
        "custom-sampled", 1, custom_a=lambda t, x: np.sin(x),
        custom_conforming=False)
    x = np.array([0.7])
    J = pots.jacobian_a(model, 0.0, x)
    assert J[0, 0] == pytest.approx(np.cos(0.7), abs=1e-10)


def test_reference_fields_decay():
    # physical field profiles used for documentation-level decay checks
    x3 = np.array([[0.0, 0.0, 10.0], [0.0, 0.0, 100.0]])
    vals = pots.circular_current_field(x3)[:, 2]
    assert vals[1] / vals[0] == pytest.approx(1e-2, rel=0.05)
    x2 = np.array([[10.0, 0.0], [100.0, 0.0]])
    mags = np.linalg.norm(pots.line_current_field(x2), axis=-1)
    assert mags[1] / mags[0] == pytest.approx(0.1, rel=0.05)


def test_dimension_mismatch_rejected():
    with pytest.raises(errors.InputError):
        pots.eval_a(pots.zero_model(2), 0.0, np.zeros(3))


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_verify_decay_reports_nonfinite_point():
    model = pots.VectorPotentialModel(
        "custom-sampled", 1,
        custom_a=lambda t, x: 1.0 / (x - 10.0),  # pole on the sample shell
        custom_conforming=True)
    with pytest.raises(errors.NumericError):
        pots.verify_decay(model, 0.5, 0, (10.0, 100.0), samples_per_radius=2)


def test_model_from_json_file(tmp_path):
    path = tmp_path / "model.json"
    path.write_text('{"family": "rotational", "n": 2, "rho": 0.5, '
                    '"modulation": "sin"}')
    model = pots.model_from_json(str(path))
    assert model.family == "rotational" and model.rho == 0.5
