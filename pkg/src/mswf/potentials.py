"""Vector-potential families with analytic derivatives and decay checks.

Built-in families are chosen so that growth of every spatial derivative is
controlled by a power of the regularized distance <x> = sqrt(1 + |x|^2):

  zero            a = 0
  soft-power      a_j = amp_j g(t) <x>^rho                (rho < 1 conforming)
  rotational      a = amp g(t) <x>^(rho-1) (x2, -x1)      (n = 2, rho < 1)
  constant-field  a = (B0/2) (-x2, x1)                    (n = 2, grows linearly,
                                                           deliberately non-conforming)
  custom-sampled  user callable, finite-difference derivatives

`verify_decay` measures sup |d^alpha a_j| <x>^(|alpha|-rho) on radius shells
and reports whether the sampled bound stays flat as the shells grow.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from pathlib import Path

import numpy as np

from .errors import InputError, NumericError

FAMILIES = ("zero", "soft-power", "rotational", "constant-field", "custom-sampled")

MODULATIONS = {
    "one": lambda t: np.ones_like(np.asarray(t, dtype=float)) if np.ndim(t) else 1.0,
    "sin": np.sin,
    "cosbump": lambda t: 0.5 * (1.0 + np.cos(t)),
}


def bracket(x: np.ndarray) -> np.ndarray:
    """<x> = sqrt(1 + |x|^2) over the last axis."""
    x = np.asarray(x, dtype=float)
    return np.sqrt(1.0 + np.sum(x * x, axis=-1))


def bracket_power_derivative(sigma: float, x: np.ndarray, alpha) -> np.ndarray:
    """d^alpha <x>^sigma for |alpha| <= 3, vectorized over batch points.

    x has shape (..., n); alpha is a per-axis multi-index.
    """
    x = np.asarray(x, dtype=float)
    idx = []
    for axis, count in enumerate(alpha):
        idx.extend([axis] * int(count))
    order = len(idx)
    if order > 3:
        raise InputError("analytic derivatives implemented for |alpha| <= 3")
    b2 = 1.0 + np.sum(x * x, axis=-1)

    def P(s):
        return b2 ** (s / 2.0)

    if order == 0:
        return P(sigma)
    if order == 1:
        (i,) = idx
        return sigma * x[..., i] * P(sigma - 2)
    if order == 2:
        i, j = idx
        out = sigma * (sigma - 2) * x[..., i] * x[..., j] * P(sigma - 4)
        if i == j:
            out = out + sigma * P(sigma - 2)
        return out
    i, j, k = idx
    out = sigma * (sigma - 2) * (sigma - 4) * x[..., i] * x[..., j] * x[..., k] * P(sigma - 6)
    sym = 0.0
    if i == j:
        sym = sym + x[..., k]
    if i == k:
        sym = sym + x[..., j]
    if j == k:
        sym = sym + x[..., i]
    return out + sigma * (sigma - 2) * sym * P(sigma - 4)


@dataclass(frozen=True)
class VectorPotentialModel:
    """Immutable description of a time-dependent vector potential a(t, x)."""

    family: str
    n: int
    rho: float = 0.0
    amplitude: tuple = ()
    modulation: str = "one"
    b0: float = 1.0
    custom_a: object = None
    custom_jacobian: object = None
    custom_conforming: bool = False

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InputError(f"unknown family '{self.family}' (have {FAMILIES})")
        if self.n < 1:
            raise InputError("dimension must be >= 1")
        if self.family in ("rotational", "constant-field") and self.n != 2:
            raise InputError(f"family '{self.family}' is two-dimensional")
        if self.modulation not in MODULATIONS:
            raise InputError(f"unknown modulation '{self.modulation}'")
        if self.family in ("soft-power", "rotational") and not self.rho < 1.0:
            raise InputError("soft-power/rotational families require rho < 1")
        if self.family == "custom-sampled" and self.custom_a is None:
            raise InputError("custom-sampled family needs a callable")
        amp = self.amplitude
        if not amp:
            amp = (1.0,) * (1 if self.family == "rotational" else self.n)
        elif np.isscalar(amp):
            amp = (float(amp),) * (1 if self.family == "rotational" else self.n)
        else:
            amp = tuple(float(v) for v in amp)
        object.__setattr__(self, "amplitude", amp)

    @property
    def conforming(self) -> bool:
        """Whether the family satisfies the <x>^(rho-|alpha|) derivative bounds."""
        if self.family in ("zero", "soft-power", "rotational"):
            return True
        if self.family == "custom-sampled":
            return bool(self.custom_conforming)
        return False  # constant-field grows linearly

    def g(self, t):
        return MODULATIONS[self.modulation](t)


def zero_model(n: int) -> VectorPotentialModel:
    return VectorPotentialModel("zero", n)


def soft_power_model(n: int, rho: float, amplitude=1.0, modulation="one") -> VectorPotentialModel:
    return VectorPotentialModel("soft-power", n, rho=rho, amplitude=amplitude,
                                modulation=modulation)


def rotational_model(rho: float, amplitude=1.0, modulation="one") -> VectorPotentialModel:
    return VectorPotentialModel("rotational", 2, rho=rho, amplitude=amplitude,
                                modulation=modulation)


def constant_field_model(b0: float = 1.0) -> VectorPotentialModel:
    return VectorPotentialModel("constant-field", 2, b0=b0)


def model_from_json(source) -> VectorPotentialModel:
    """Build a model from a JSON object, file path, or inline JSON string."""
    if isinstance(source, (str, Path)):
        text = str(source)
        if text.lstrip().startswith("{"):
            obj = json.loads(text)
        else:
            obj = json.loads(Path(text).read_text())
    else:
        obj = dict(source)
    family = obj.get("family")
    if family == "custom-sampled":
        raise InputError("custom-sampled models cannot be built from JSON")
    kwargs = {}
    for key in ("rho", "b0"):
        if key in obj:
            kwargs[key] = float(obj[key])
    if "modulation" in obj:
        kwargs["modulation"] = obj["modulation"]
    if "amplitude" in obj:
        kwargs["amplitude"] = obj["amplitude"]
    return VectorPotentialModel(family, int(obj["n"]), **kwargs)


def model_to_json(model: VectorPotentialModel) -> dict:
    return {
        "family": model.family,
        "n": model.n,
        "rho": model.rho,
        "modulation": model.modulation,
        "amplitude": list(model.amplitude),
        "b0": model.b0,
    }


# ---------------------------------------------------------------------------
# evaluation


def _check_point(model: VectorPotentialModel, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (model.n,):
        raise InputError(f"point dimension {x.shape[-1:]} != model dimension {model.n}")
    return x


def eval_a(model: VectorPotentialModel, t: float, x) -> np.ndarray:
    """Vector potential values; batched over leading axes of x."""
    x = _check_point(model, x)
    g = model.g(t)
    if model.family == "zero":
        return np.zeros_like(x)
    if model.family == "soft-power":
        p = bracket(x) ** model.rho
        return np.asarray(model.amplitude) * g * p[..., None]
    if model.family == "rotational":
        p = bracket(x) ** (model.rho - 1.0)
        perp = np.stack([x[..., 1], -x[..., 0]], axis=-1)
        return model.amplitude[0] * g * p[..., None] * perp
    if model.family == "constant-field":
        return 0.5 * model.b0 * np.stack([-x[..., 1], x[..., 0]], axis=-1)
    out = np.asarray(model.custom_a(t, x), dtype=float)
    if out.shape != x.shape:
        raise NumericError("custom potential returned wrong shape")
    return out


def jacobian_a(model: VectorPotentialModel, t: float, x) -> np.ndarray:
    """Matrix with entry (j, k) = d a_j / d x_k; batched over leading axes."""
    x = _check_point(model, x)
    g = model.g(t)
    batch = x.shape[:-1]
    n = model.n
    if model.family == "zero":
        return np.zeros(batch + (n, n))
    if model.family == "soft-power":
        pm2 = bracket(x) ** (model.rho - 2.0)
        amp = np.asarray(model.amplitude)
        return model.rho * g * amp[..., :, None] * x[..., None, :] * pm2[..., None, None]
    if model.family == "rotational":
        x1, x2 = x[..., 0], x[..., 1]
        pm1 = bracket(x) ** (model.rho - 1.0)
        pm3 = bracket(x) ** (model.rho - 3.0)
        c = model.amplitude[0] * g
        J = np.empty(batch + (2, 2))
        J[..., 0, 0] = c * (model.rho - 1.0) * x1 * x2 * pm3
        J[..., 0, 1] = c * ((model.rho - 1.0) * x2 * x2 * pm3 + pm1)
        J[..., 1, 0] = -c * ((model.rho - 1.0) * x1 * x1 * pm3 + pm1)
        J[..., 1, 1] = -c * (model.rho - 1.0) * x1 * x2 * pm3
        return J
    if model.family == "constant-field":
        J = np.zeros(batch + (2, 2))
        J[..., 0, 1] = -0.5 * model.b0
        J[..., 1, 0] = 0.5 * model.b0
        return J
    if model.custom_jacobian is not None:
        return np.asarray(model.custom_jacobian(t, x), dtype=float)
    return _fd_jacobian(model, t, x)


def _fd_jacobian(model: VectorPotentialModel, t: float, x: np.ndarray) -> np.ndarray:
    """4th-order central differences, step scaled with |x| to keep relative accuracy."""
    n = model.n
    batch = x.shape[:-1]
    h = 1e-4 * np.maximum(1.0, np.sqrt(np.sum(x * x, axis=-1)))
    J = np.empty(batch + (n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = 1.0
        hk = h[..., None]
        fp2 = eval_a(model, t, x + 2 * hk * e)
        fp1 = eval_a(model, t, x + hk * e)
        fm1 = eval_a(model, t, x - hk * e)
        fm2 = eval_a(model, t, x - 2 * hk * e)
        J[..., :, k] = (-fp2 + 8 * fp1 - 8 * fm1 + fm2) / (12.0 * hk)
    return J


def divergence_a(model: VectorPotentialModel, t: float, x) -> np.ndarray:
    """div a; closed forms where available (rotational and constant-field are 0)."""
    x = _check_point(model, x)
    batch = x.shape[:-1]
    if model.family in ("zero", "rotational", "constant-field"):
        return np.zeros(batch)
    if model.family == "soft-power":
        pm2 = bracket(x) ** (model.rho - 2.0)
        amp = np.asarray(model.amplitude)
        return model.rho * model.g(t) * np.sum(amp * x, axis=-1) * pm2
    J = jacobian_a(model, t, x)
    return np.trace(J, axis1=-2, axis2=-1)


def magnetic_field(model: VectorPotentialModel, t: float, x) -> np.ndarray:
    """Antisymmetrized Jacobian B_jk = d_j a_k - d_k a_j, exact by construction."""
    J = jacobian_a(model, t, x)
    return np.swapaxes(J, -1, -2) - J


def derivative_a(model: VectorPotentialModel, t: float, x, j: int, alpha) -> np.ndarray:
    """d^alpha a_j for |alpha| <= 3; analytic for built-in families."""
    x = _check_point(model, x)
    alpha = tuple(int(c) for c in alpha)
    if len(alpha) != model.n:
        raise InputError("multi-index length must equal the dimension")
    order = sum(alpha)
    g = model.g(t)
    if model.family == "zero":
        return np.zeros(x.shape[:-1])
    if model.family == "soft-power":
        return model.amplitude[j] * g * bracket_power_derivative(model.rho, x, alpha)
    if model.family == "rotational":
        # a_0 = c <x>^(rho-1) x_1 ; a_1 = -c <x>^(rho-1) x_0  (0-based axes)
        c = model.amplitude[0] * g
        lin_axis = 1 if j == 0 else 0
        sgn = 1.0 if j == 0 else -1.0
        term = x[..., lin_axis] * bracket_power_derivative(model.rho - 1.0, x, alpha)
        if alpha[lin_axis] > 0:
            lowered = list(alpha)
            lowered[lin_axis] -= 1
            term = term + alpha[lin_axis] * bracket_power_derivative(
                model.rho - 1.0, x, tuple(lowered))
        return sgn * c * term
    if model.family == "constant-field":
        if order == 0:
            return eval_a(model, t, x)[..., j]
        if order == 1:
            J = jacobian_a(model, t, x)
            k = alpha.index(1)
            return J[..., j, k]
        return np.zeros(x.shape[:-1])
    return _fd_derivative(model, t, x, j, alpha)


def _fd_derivative(model, t, x, j, alpha) -> np.ndarray:
    """Nested central differences for custom models (noisy beyond order 2)."""
    order = sum(alpha)
    if order == 0:
        return eval_a(model, t, x)[..., j]
    axis = next(i for i, c in enumerate(alpha) if c > 0)
    lowered = list(alpha)
    lowered[axis] -= 1
    h = 1e-3 * np.maximum(1.0, np.sqrt(np.sum(x * x, axis=-1)))[..., None]
    e = np.zeros(model.n)
    e[axis] = 1.0
    fp = _fd_derivative(model, t, x + h * e, j, tuple(lowered))
    fm = _fd_derivative(model, t, x - h * e, j, tuple(lowered))
    return (fp - fm) / (2.0 * h[..., 0])


# ---------------------------------------------------------------------------
# decay verification


def multi_indices(n: int, max_order: int):
    """All per-axis multi-indices with 0 <= |alpha| <= max_order."""
    out = [(0,) * n]
    for order in range(1, max_order + 1):
        for combo in combinations_with_replacement(range(n), order):
            alpha = [0] * n
            for axis in combo:
                alpha[axis] += 1
            out.append(tuple(alpha))
    return out


def shell_points(n: int, radius: float, count: int) -> np.ndarray:
    """Deterministic points on the sphere |x| = radius."""
    if n == 1:
        return np.array([[radius], [-radius]])
    if n == 2:
        angles = 2.0 * np.pi * np.arange(count) / count
        return radius * np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    k = np.arange(count)
    golden = np.pi * (3.0 - np.sqrt(5.0))
    z = 1.0 - 2.0 * (k + 0.5) / count
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = golden * k
    return radius * np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


@dataclass
class DecayVerification:
    """Sampled sup of |d^alpha a_j| <x>^(|alpha|-rho) per shell and multi-index."""

    rho: float
    radii: tuple
    shell_sups: dict        # alpha -> list of per-shell sups
    conforming: bool
    worst_ratio: float      # largest shell-to-shell growth factor observed
    slack: float = 1.1


def verify_decay(model: VectorPotentialModel, rho: float, max_order: int,
                 radii, samples_per_radius: int = 16,
                 times=(0.0, 0.5, 1.3, 2.7)) -> DecayVerification:
    """Empirical check of the derivative decay bounds at exponent rho.

    Conforming verdict: beyond the first shell, the per-shell sup of the
    weighted derivative magnitude never grows by more than 10 percent.
    """
    if max_order > 3:
        raise InputError("verify_decay supports max_order <= 3")
    radii = [float(r) for r in radii]
    if any(r <= 0 for r in radii) or any(b <= a for a, b in zip(radii, radii[1:])):
        raise InputError("radii must be positive and increasing")
    sups: dict = {}
    for alpha in multi_indices(model.n, max_order):
        weight_power = sum(alpha) - rho
        per_shell = []
        for r in radii:
            pts = shell_points(model.n, r, samples_per_radius)
            w = bracket(pts) ** weight_power
            worst = 0.0
            for t in times:
                for j in range(model.n):
                    vals = derivative_a(model, t, pts, j, alpha)
                    if not np.all(np.isfinite(vals)):
                        bad = pts[~np.isfinite(vals)][0]
                        raise NumericError(
                            f"non-finite derivative d^{alpha} a_{j} at t={t}, x={bad}")
                    worst = max(worst, float(np.max(np.abs(vals) * w)))
            per_shell.append(worst)
        sups[alpha] = per_shell
    slack = 1.1
    worst_ratio = 0.0
    conforming = True
    for per_shell in sups.values():
        for a, b in zip(per_shell, per_shell[1:]):
            if a == 0.0 and b == 0.0:
                continue
            ratio = np.inf if a == 0.0 else b / a
            worst_ratio = max(worst_ratio, ratio)
            if ratio > slack:
                conforming = False
    return DecayVerification(rho=rho, radii=tuple(radii), shell_sups=sups,
                             conforming=conforming, worst_ratio=worst_ratio, slack=slack)


# ---------------------------------------------------------------------------
# reference magnetic fields (documentation and decay tests only; no gauge is
# reconstructed for them)


def circular_current_field(x) -> np.ndarray:
    """Field along the axis of a circular loop: (0, 0, 1/(1 + x3^2)) in R^3."""
    x = np.asarray(x, dtype=float)
    out = np.zeros(x.shape[:-1] + (3,))
    out[..., 2] = 1.0 / (1.0 + x[..., 2] ** 2)
    return out


def line_current_field(x) -> np.ndarray:
    """Planar field of a straight wire, regularized at the origin: <x>^-2 (x2, -x1)."""
    x = np.asarray(x, dtype=float)
    b2 = 1.0 + np.sum(x * x, axis=-1)
    return np.stack([x[..., 1], -x[..., 0]], axis=-1) / b2[..., None]
