"""Three-dimensional continuous dynamical systems and trajectory encoding.

Each system is a first-order ODE ds/dt = f(s) on R^3 with an analytic
Jacobian. Trajectories are integrated with classic fixed-step RK4; the
feature encoder maps a scalar feature to an initial condition, evolves it,
and samples the trajectory on a uniform grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "BlowUpError",
    "SystemParams",
    "Trajectory",
    "EncodingConfig",
    "lorenz",
    "rossler",
    "aizawa",
    "nose_hoover",
    "sprott_c",
    "chua",
    "mixed_oscillator",
    "linear_diag",
    "derivative",
    "jacobian",
    "divergence",
    "rk4_step",
    "integrate",
    "encode_feature",
    "default_init_map",
    "SYSTEM_IDS",
    "DEFAULT_GUARD",
]

# Coordinates above this magnitude abort integration: expansive trajectories
# are legitimately huge, so this is an error, never a clamp.
DEFAULT_GUARD = 1e12


class BlowUpError(ValueError):
    """Trajectory left the numerically trustworthy region."""

    def __init__(self, message: str, t: float | None = None, context: str = ""):
        self.t = t
        self.context = context
        suffix = f" at t={t:.6g}" if t is not None else ""
        suffix += f" ({context})" if context else ""
        super().__init__(message + suffix)


# Integer ids shared with the compiled backend; order is load-bearing.
SYSTEM_IDS = {
    "lorenz": 0,
    "rossler": 1,
    "aizawa": 2,
    "nose_hoover": 3,
    "sprott_c": 4,
    "chua": 5,
    "mixed_oscillator": 6,
    "linear_diag": 7,
}

_PARAM_NAMES = {
    "lorenz": ("sigma", "rho", "beta"),
    "rossler": ("a", "b", "c"),
    "aizawa": ("alpha", "beta", "gamma", "delta", "epsilon", "zeta"),
    "nose_hoover": ("alpha",),
    "sprott_c": ("a",),
    "chua": ("alpha", "beta", "gamma", "m0", "m1"),
    "mixed_oscillator": ("alpha", "beta", "delta", "gamma", "omega"),
    "linear_diag": ("a", "b", "c"),
}


@dataclass(frozen=True)
class SystemParams:
    """A system variant plus its real parameter vector."""

    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in SYSTEM_IDS:
            raise ValueError(f"unknown system kind {self.kind!r}")
        expected = len(_PARAM_NAMES[self.kind])
        if len(self.params) != expected:
            raise ValueError(
                f"{self.kind} takes {expected} parameters, got {len(self.params)}"
            )
        if not all(math.isfinite(p) for p in self.params):
            raise ValueError(f"non-finite parameter in {self.params}")

    @property
    def system_id(self) -> int:
        return SYSTEM_IDS[self.kind]

    def param(self, name: str) -> float:
        return self.params[_PARAM_NAMES[self.kind].index(name)]

    def describe(self) -> str:
        pairs = ", ".join(
            f"{n}={v:g}" for n, v in zip(_PARAM_NAMES[self.kind], self.params)
        )
        return f"{self.kind}({pairs})"


def lorenz(sigma: float = 10.0, rho: float = 28.0, beta: float = 2.667) -> SystemParams:
    return SystemParams("lorenz", (sigma, rho, beta))


def rossler(a: float = 0.2, b: float = 0.2, c: float = 5.7) -> SystemParams:
    return SystemParams("rossler", (a, b, c))


def aizawa(
    alpha: float = 0.95,
    beta: float = 0.7,
    gamma: float = 0.6,
    delta: float = 3.5,
    epsilon: float = 0.25,
    zeta: float = 0.1,
) -> SystemParams:
    return SystemParams("aizawa", (alpha, beta, gamma, delta, epsilon, zeta))


def nose_hoover(alpha: float = 1.0) -> SystemParams:
    return SystemParams("nose_hoover", (alpha,))


def sprott_c(a: float = 3.0) -> SystemParams:
    return SystemParams("sprott_c", (a,))


def chua(
    alpha: float = 15.6,
    beta: float = 28.58,
    gamma: float = 0.0,
    m0: float = -1.143,
    m1: float = -0.714,
) -> SystemParams:
    return SystemParams("chua", (alpha, beta, gamma, m0, m1))


def mixed_oscillator(
    delta: float,
    alpha: float = 2.0,
    beta: float = 0.1,
    gamma: float = 0.1,
    omega: float = 1.0,
) -> SystemParams:
    """Duffing-style oscillator whose dissipation is set by ``delta``."""
    return SystemParams("mixed_oscillator", (alpha, beta, delta, gamma, omega))


def linear_diag(a: float, b: float, c: float) -> SystemParams:
    """Decoupled linear flow ds/dt = diag(a, b, c) s (test/oracle system)."""
    return SystemParams("linear_diag", (a, b, c))


def _check_state(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    if s.shape != (3,):
        raise ValueError(f"state must have shape (3,), got {s.shape}")
    if not np.all(np.isfinite(s)):
        raise BlowUpError("non-finite state")
    return s


def derivative(sys: SystemParams, s: Sequence[float]) -> np.ndarray:
    """Right-hand side f(s) of the system's ODE."""
    x, y, z = _check_state(s)
    p = sys.params
    kind = sys.kind
    if kind == "lorenz":
        sg, rho, b = p
        return np.array([sg * (y - x), x * (rho - z) - y, x * y - b * z])
    if kind == "rossler":
        a, b, c = p
        return np.array([-y - z, x + a * y, b + z * (x - c)])
    if kind == "aizawa":
        al, be, ga, de, ep, ze = p
        return np.array(
            [
                (z - be) * x - de * y,
                de * x + (z - be) * y,
                ga + al * z - z * z * z / 3.0 - (x * x + y * y) * (1.0 + ep * z)
                + ze * z * x * x * x,
            ]
        )
    if kind == "nose_hoover":
        (al,) = p
        return np.array([y, -x - y * z, y * y - al])
    if kind == "sprott_c":
        (a,) = p
        return np.array([y * z, x - y, 1.0 - a * x * x])
    if kind == "chua":
        al, be, ga, m0, m1 = p
        hx = m1 * x + 0.5 * (m0 - m1) * (abs(x + 1.0) - abs(x - 1.0))
        return np.array([al * (y - x - hx), x - y + z, -be * y - ga * z])
    if kind == "mixed_oscillator":
        al, be, de, ga, om = p
        return np.array(
            [y, -al * x - be * x * x * x - de * y + ga * z, -om * x - de * z + ga * x * y]
        )
    if kind == "linear_diag":
        a, b, c = p
        return np.array([a * x, b * y, c * z])
    raise AssertionError(kind)


def jacobian(sys: SystemParams, s: Sequence[float]) -> np.ndarray:
    """Analytic Jacobian df_i/ds_j evaluated at ``s``."""
    x, y, z = _check_state(s)
    p = sys.params
    kind = sys.kind
    if kind == "lorenz":
        sg, rho, b = p
        return np.array([[-sg, sg, 0.0], [rho - z, -1.0, -x], [y, x, -b]])
    if kind == "rossler":
        a, b, c = p
        return np.array([[0.0, -1.0, -1.0], [1.0, a, 0.0], [z, 0.0, x - c]])
    if kind == "aizawa":
        al, be, ga, de, ep, ze = p
        return np.array(
            [
                [z - be, -de, x],
                [de, z - be, y],
                [
                    -2.0 * x * (1.0 + ep * z) + 3.0 * ze * z * x * x,
                    -2.0 * y * (1.0 + ep * z),
                    al - z * z - ep * (x * x + y * y) + ze * x * x * x,
                ],
            ]
        )
    if kind == "nose_hoover":
        return np.array([[0.0, 1.0, 0.0], [-1.0, -z, -y], [0.0, 2.0 * y, 0.0]])
    if kind == "sprott_c":
        (a,) = p
        return np.array([[0.0, z, y], [1.0, -1.0, 0.0], [-2.0 * a * x, 0.0, 0.0]])
    if kind == "chua":
        al, be, ga, m0, m1 = p
        # Kink at |x| = 1 takes the inner slope m0 (measure-zero event).
        hp = m0 if abs(x) <= 1.0 else m1
        return np.array(
            [[al * (-1.0 - hp), al, 0.0], [1.0, -1.0, 1.0], [0.0, -be, -ga]]
        )
    if kind == "mixed_oscillator":
        al, be, de, ga, om = p
        return np.array(
            [
                [0.0, 1.0, 0.0],
                [-al - 3.0 * be * x * x, -de, ga],
                [-om + ga * y, ga * x, -de],
            ]
        )
    if kind == "linear_diag":
        a, b, c = p
        return np.diag([a, b, c])
    raise AssertionError(kind)


def divergence(sys: SystemParams, s: Sequence[float]) -> float:
    """trace of the Jacobian at ``s`` (flow divergence), in closed form."""
    x, y, z = _check_state(s)
    p = sys.params
    kind = sys.kind
    if kind == "lorenz":
        sg, _, b = p
        return -(sg + 1.0 + b)
    if kind == "rossler":
        a, _, c = p
        return a + x - c
    if kind == "aizawa":
        al, be, _, _, ep, ze = p
        return 2.0 * (z - be) + al - z * z - ep * (x * x + y * y) + ze * x * x * x
    if kind == "nose_hoover":
        return -z
    if kind == "sprott_c":
        return -1.0
    if kind == "chua":
        al, _, ga, m0, m1 = p
        hp = m0 if abs(x) <= 1.0 else m1
        return -al * (1.0 + hp) - 1.0 - ga
    if kind == "mixed_oscillator":
        de = p[2]
        return -2.0 * de
    if kind == "linear_diag":
        return float(sum(p))
    raise AssertionError(kind)


@dataclass
class Trajectory:
    """Time-ordered states of one system run."""

    times: np.ndarray
    states: np.ndarray
    system: SystemParams

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.states = np.asarray(self.states, dtype=np.float64)
        if len(self.times) < 1 or self.states.shape != (len(self.times), 3):
            raise ValueError("trajectory needs matching times and (n, 3) states")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)


def default_init_map(feature: float) -> tuple[float, float, float]:
    """Feature -> initial condition (x, 0.2 x, -x), applied to every system."""
    return (feature, 0.2 * feature, -feature)


@dataclass(frozen=True)
class EncodingConfig:
    """How a scalar feature is evolved and sampled into a trajectory."""

    t_max: float = 8.0
    n_steps: int = 5
    h: float = 0.01
    include_t0: bool = False
    init_map: Callable[[float], tuple[float, float, float]] = field(
        default=default_init_map
    )

    def __post_init__(self):
        if not (self.t_max > 0):
            raise ValueError("t_max must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if not (0 < self.h <= self.t_max / self.n_steps):
            raise ValueError("need 0 < h <= t_max / n_steps")

    @property
    def sample_dt(self) -> float:
        return self.t_max / self.n_steps

    @property
    def substeps(self) -> int:
        """RK4 substeps per sample interval (h shrunk to land on the grid)."""
        return max(1, math.ceil(round(self.sample_dt / self.h, 9)))

    def key(self) -> tuple:
        init = (
            "default"
            if self.init_map is default_init_map
            else getattr(self.init_map, "__name__", repr(self.init_map))
        )
        return (self.t_max, self.n_steps, self.h, self.include_t0, init)


def rk4_step(sys: SystemParams, s: Sequence[float], h: float) -> np.ndarray:
    """One classic RK4 update s -> s + (h/6)(k1 + 2 k2 + 2 k3 + k4)."""
    if not (h > 0):
        raise ValueError("h must be positive")
    s = _check_state(s)
    k1 = derivative(sys, s)
    k2 = derivative(sys, s + 0.5 * h * k1)
    k3 = derivative(sys, s + 0.5 * h * k2)
    k4 = derivative(sys, s + h * k3)
    out = s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise BlowUpError("trajectory blow-up", context=sys.describe())
    return out


def integrate(
    sys: SystemParams,
    s0: Sequence[float],
    h: float,
    steps: int,
    guard: float = DEFAULT_GUARD,
) -> Trajectory:
    """Integrate ``steps`` RK4 steps from ``s0``; returns steps+1 states."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    from . import backends

    s0 = _check_state(s0)
    states, ok_steps = backends.integrate_states(
        sys.system_id, np.asarray(sys.params, dtype=np.float64), s0, h, steps, guard
    )
    if ok_steps < steps:
        raise BlowUpError(
            "trajectory blow-up", t=(ok_steps + 1) * h, context=sys.describe()
        )
    times = h * np.arange(steps + 1)
    return Trajectory(times=times, states=states, system=sys)


def encode_feature(
    sys: SystemParams,
    feature: float,
    cfg: EncodingConfig,
    guard: float = DEFAULT_GUARD,
) -> np.ndarray:
    """Evolve one feature and sample its trajectory on the encoding grid.

    Returns an (n_steps, 3) array of states at times k * (t_max / n_steps),
    k = 1..n_steps, or (n_steps + 1, 3) including t=0 when configured.
    """
    if not math.isfinite(feature):
        raise ValueError(f"feature must be finite, got {feature}")
    out = encode_features(sys, np.array([feature]), cfg, guard)
    return out[0]


def encode_features(
    sys: SystemParams,
    features: np.ndarray,
    cfg: EncodingConfig,
    guard: float = DEFAULT_GUARD,
) -> np.ndarray:
    """Vectorized ``encode_feature`` over a batch: returns [n, samples, 3]."""
    from . import backends

    features = np.asarray(features, dtype=np.float64).ravel()
    if not np.all(np.isfinite(features)):
        raise ValueError("features must be finite")
    s0 = np.array([cfg.init_map(f) for f in features], dtype=np.float64)
    substeps = cfg.substeps
    h_eff = cfg.sample_dt / substeps
    states, ok = backends.traj_batch(
        sys.system_id,
        np.asarray(sys.params, dtype=np.float64),
        s0,
        h_eff,
        substeps,
        cfg.n_steps,
        cfg.include_t0,
        guard,
    )
    if not np.all(ok):
        idx = int(np.argmin(ok))
        raise BlowUpError(
            "trajectory blow-up",
            context=f"feature={features[idx]:g}, {sys.describe()}",
        )
    return states
