"""Network-parametrized codewords and the training loop that minimizes ``L_tot``.

Parameter vector layout (68 reals)::

    [W1 (5x3), b1 (5), W2 (5x5), b2 (5), W3 (2x5), b3 (2) | f11, f12, f21 as re/im pairs]

The network maps scaled inputs ``(beta_k / beta_max, u, k / M)`` to
``(Re c_k, Im c_k)``; ``f22`` is derived so that ``det f = 1`` exactly.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import autodiff as ad
from .algebra import (
    SQRT_2PI,
    CodewordSpec,
    FMatrix,
    _overlap_exponent,
    grid_alpha,
    kernel_matrix,
    stabilizer_expectation_q,
    two_photon_param,
)
from .autodiff import CVar, Var, ceinsum
from .loss import MONOMIALS, LossWeights, default_grid
from .monomials import Monomial
from .noise import pair_coefficient_table

LAYERS = (3, 5, 5, 2)
N_MLP = sum(a * b + b for a, b in zip(LAYERS[:-1], LAYERS[1:]))  # 62
N_F = 6
N_PARAMS = N_MLP + N_F


class NonFiniteLossError(FloatingPointError):
    def __init__(self, step, last_finite):
        super().__init__(f"loss became non-finite at step {step}")
        self.step = step
        self.last_finite = last_finite


# -- parameters ---------------------------------------------------------------------


def init_params(seed: int) -> np.ndarray:
    """Uniform(+-1/sqrt(fan_in)) network weights; f starts at the identity."""
    rng = np.random.default_rng(seed)
    parts = []
    for fan_in, fan_out in zip(LAYERS[:-1], LAYERS[1:]):
        bound = 1 / math.sqrt(fan_in)
        parts.append(rng.uniform(-bound, bound, fan_in * fan_out))
        parts.append(rng.uniform(-bound, bound, fan_out))
    parts.append(np.array([1.0, 0, 0, 0, 0, 0]))
    return np.concatenate(parts)


def _unpack_mlp(theta):
    out, pos = [], 0
    for fan_in, fan_out in zip(LAYERS[:-1], LAYERS[1:]):
        W = theta[pos : pos + fan_in * fan_out]
        pos += fan_in * fan_out
        b = theta[pos : pos + fan_out]
        pos += fan_out
        out.append((W, b, (fan_out, fan_in)))
    return out


def network_inputs(M: int, r: float) -> np.ndarray:
    """Rows ``(beta_k / beta_max, u, k / M)`` for u = 0 then u = 1, k = -M..M."""
    k = np.arange(-M, M + 1)
    betas = [two_photon_param(grid_alpha(u, M), r).real for u in (0, 1)]
    bmax = max(np.abs(b).max() for b in betas) or 1.0
    rows = [np.stack([betas[u] / bmax, np.full(k.shape, u, float), k / max(M, 1)], axis=1) for u in (0, 1)]
    return np.concatenate(rows)


def mlp_forward(theta, X):
    """Network output for inputs ``X``; works on arrays and on ``Var`` graphs alike."""
    h = X
    layers = _unpack_mlp(theta)
    for i, (W, b, shape) in enumerate(layers):
        Wm = ad.reshape(W, shape) if isinstance(W, Var) else W.reshape(shape)
        z = ad.matmul(h, ad.transpose(Wm)) + b if isinstance(Wm, Var) else h @ Wm.T + b
        if i < len(layers) - 1:
            z = ad.tanh(z) if isinstance(z, Var) else np.tanh(z)
        h = z
    return h


def mlp_coefficients(theta: np.ndarray, M: int, r: float, real: bool = False) -> tuple[CodewordSpec, CodewordSpec]:
    out = mlp_forward(np.asarray(theta, float)[:N_MLP], network_inputs(M, r))
    c = out[:, 0] + (0 if real else 1j) * out[:, 1]
    D = 2 * M + 1
    return CodewordSpec(0, M, r, c[:D]), CodewordSpec(1, M, r, c[D:])


@dataclass(frozen=True)
class FParams:
    values: tuple  # re/im of f11, f12, f21

    def __post_init__(self):
        if len(self.values) != N_F:
            raise ValueError("FParams needs six reals")
        if math.hypot(self.values[0], self.values[1]) < 1e-6:
            raise ValueError("|f11| too small to derive f22")

    def to_matrix(self) -> FMatrix:
        v = self.values
        return FMatrix.from_free(complex(v[0], v[1]), complex(v[2], v[3]), complex(v[4], v[5]))


# -- differentiable loss ----------------------------------------------------------------


@dataclass
class StepLoss:
    l_tot: float
    l_er_bar: float
    l_er_bar_exact: float
    l_eg: float
    l_st: float


class LossModel:
    """Precomputed kernels turning ``L_tot`` into a function of the 68 parameters."""

    def __init__(self, M: int, r: float, weights: LossWeights | None = None, real: bool = False):
        self.M, self.r, self.real = M, r, real
        self.weights = weights or LossWeights()
        self.D = 2 * M + 1
        self.X = network_inputs(M, r)
        # K[u][v] has shape (monomial, k, l)
        self.K = [[np.stack([kernel_matrix(u, v, M, r, m) for m in MONOMIALS]) for v in (0, 1)] for u in (0, 1)]
        _, self.P = pair_coefficient_table(self.weights.grid)
        self.i_identity = MONOMIALS.index(Monomial.I)
        self.beta = [two_photon_param(grid_alpha(u, M), r) for u in (0, 1)]
        shift = SQRT_2PI * math.exp(r)
        self.Ksp = [np.exp(_overlap_exponent(b[:, None], (b + shift)[None, :])) for b in self.beta]
        self.Omega = [_overlap_exponent(b[:, None], b[None, :]) for b in self.beta]
        thr_r = r if self.weights.threshold_r is None else self.weights.threshold_r
        self.threshold = stabilizer_expectation_q(thr_r)

    # coefficient vectors
    def _coeffs(self, theta):
        out = mlp_forward(theta[:N_MLP] if isinstance(theta, Var) else theta[:N_MLP], self.X)
        re = out[:, 0]
        im = 0.0 if self.real else out[:, 1]
        c = CVar(re, np.zeros(2 * self.D) if self.real else im)
        return c[: self.D], c[self.D :]

    def _exp_linear_expect(self, mu, nu, c, u, norm):
        lam, lam1 = math.cosh(self.r), math.sinh(self.r)
        mup = mu * lam + nu * lam1
        nup = nu * lam + mu * lam1
        b = self.beta[u].real
        # exponent[k, l] = Omega + mu' b_k - nu' b_l - mu' nu' / 2   (b real)
        expo = CVar.const(self.Omega[u]) + mup * b[:, None] - nup * b[None, :] - mup * nup * 0.5
        E = expo.exp()
        return ceinsum("k,k->", c.conj(), ceinsum("kl,l->k", E, c)) / norm

    def evaluate(self, theta):
        """``(l_tot, parts)`` where ``l_tot`` is a graph node when ``theta`` is a ``Var``."""
        c0, c1 = self._coeffs(theta)
        cs = (c0, c1)
        raw = {}
        for u in (0, 1):
            for v in (0, 1):
                y = ceinsum("mkl,l->mk", self.K[u][v], cs[v])
                raw[u, v] = ceinsum("k,mk->m", cs[u].conj(), y)
        norms = [raw[u, u][self.i_identity].re for u in (0, 1)]
        scale = {(u, v): ad.sqrt(norms[u] * norms[v]) if isinstance(norms[u], Var) else math.sqrt(norms[u] * norms[v]) for u in (0, 1) for v in (0, 1)}
        vals = {k: raw[k] / scale[k] for k in raw}
        diff = vals[1, 1] - vals[0, 0]
        eps = ceinsum("sjim,m->sji", self.P, diff)
        zeta = ceinsum("sjim,m->sji", self.P, vals[0, 1])
        delta = vals[0, 1][self.i_identity]
        per_point = _sum_abs(eps) + _sum_abs(zeta) + _abs(delta)
        l_er_bar = _mean(per_point)
        exact = float(np.mean(np.abs(eps.value).sum(axis=(1, 2)) + np.abs(zeta.value).sum(axis=(1, 2)) + abs(delta.value)))

        # eigenstate threshold on Re<S_p>
        l_eg = 0.0
        for u in (0, 1):
            sp = ceinsum("k,k->", cs[u].conj(), ceinsum("kl,l->k", self.Ksp[u], cs[u])).re / norms[u]
            gap_ = self.threshold - sp
            l_eg = l_eg + (ad.relu(gap_) if isinstance(gap_, Var) else max(0.0, gap_))

        # stabilizer approximation from f
        f = theta[N_MLP:]
        f11 = CVar(f[0], f[1])
        f12 = CVar(f[2], f[3])
        f21 = CVar(f[4], f[5])
        f22 = (f12 * f21 + 1.0) / f11
        s = SQRT_2PI
        ops = {
            "Sq": ((f11 * 1j - f12) * s, (f11 * (-1j) - f12) * s),
            "Sp": ((f21 * (-1j) + f22) * s, (f21 * 1j + f22) * s),
        }
        l_st = 0.0
        for u in (0, 1):
            for mu, nu in ops.values():
                val = self._exp_linear_expect(mu, nu, cs[u], u, norms[u])
                l_st = l_st + (1 - val).abs2()
                # S^dag S = exp((|mu|^2 - |nu|^2)/2) * exp((mu - nu*) a^dag - (nu - mu*) a)
                pref = _rexp((mu.abs2() - nu.abs2()) * 0.5)
                val2 = self._exp_linear_expect(mu - nu.conj(), nu - mu.conj(), cs[u], u, norms[u]) * pref
                l_st = l_st + (1 - val2).abs2()

        w = self.weights
        tot = (1 - w.eta1 - w.eta2) * l_er_bar + w.eta1 * l_st + w.eta2 * l_eg
        parts = StepLoss(float(_v(tot)), float(_v(l_er_bar)), exact, float(_v(l_eg)), float(_v(l_st)))
        return tot, parts

    def value_and_grad(self, theta: np.ndarray):
        x = Var(np.asarray(theta, float))
        tot, parts = self.evaluate(x)
        tot.backward()
        return parts, x.grad

    def value(self, theta: np.ndarray) -> StepLoss:
        return self.evaluate(np.asarray(theta, float))[1]


def _v(x):
    return x.value if isinstance(x, Var) else x


def _abs(z: CVar):
    if isinstance(z.re, Var) or isinstance(z.im, Var):
        return z.abs_smooth()
    return np.abs(z.value)


def _sum_abs(z: CVar):
    a = _abs(z)
    if isinstance(a, Var):
        return ad.vsum(ad.vsum(a, 2), 1)
    return np.abs(z.value).sum(axis=(1, 2))


def _mean(x):
    return ad.mean(x) if isinstance(x, Var) else float(np.mean(x))


def _rexp(x):
    return CVar(ad.exp(x) if isinstance(x, Var) else np.exp(x), 0.0)


# -- optimizer ---------------------------------------------------------------------------


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n):
        return cls(np.zeros(n), np.zeros(n), 0)


def adam_step(params, grad, state: AdamState, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One bias-corrected Adam update; returns (new_params, new_state)."""
    if grad.shape != state.m.shape:
        raise ValueError("gradient and state dimensions differ")
    t = state.t + 1
    m = beta1 * state.m + (1 - beta1) * grad
    v = beta2 * state.v + (1 - beta2) * grad * grad
    mhat = m / (1 - beta1**t)
    vhat = v / (1 - beta2**t)
    return params - lr * mhat / (np.sqrt(vhat) + eps), AdamState(m, v, t)


def cosine_warm_restarts(step: int, T0: int, T_mult: int, lr_max: float, eta_min: float) -> float:
    if T0 < 1 or T_mult < 1:
        raise ValueError("need T0 >= 1 and T_mult >= 1")
    t_cur, T_i = step, T0
    if T_mult == 1:
        t_cur = step % T0
    else:
        while t_cur >= T_i:
            t_cur -= T_i
            T_i *= T_mult
    return eta_min + (lr_max - eta_min) * (1 + math.cos(math.pi * t_cur / T_i)) / 2


@dataclass
class TrainConfig:
    M: int = 3
    r: float = 1.1
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    T0: int = 500
    T_mult: int = 2
    eta_min: float = 1e-6
    steps: int = 30000
    eta1: float = 0.02
    eta2: float = 0.02
    grid_points: int = 6
    grid_max: float = 0.005
    seed: int = 0
    real_coefficients: bool = False

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")

    def weights(self) -> LossWeights:
        return LossWeights(self.eta1, self.eta2, default_grid(self.grid_points, self.grid_max))


@dataclass
class TrainResult:
    params: np.ndarray
    best_loss: StepLoss
    history: list = field(default_factory=list)  # (step, lr, StepLoss)
    config: TrainConfig | None = None

    @property
    def f_params(self) -> FParams:
        return FParams(tuple(float(x) for x in self.params[N_MLP:]))

    def codes(self):
        return mlp_coefficients(self.params, self.config.M, self.config.r, self.config.real_coefficients)


def train(config: TrainConfig, callback=None, init=None) -> TrainResult:
    """Adam with cosine warm restarts on the joint network + f parameters.

    Keeps the parameters with the lowest ``l_tot`` seen; aborts with
    ``NonFiniteLossError`` on a non-finite loss or gradient.
    """
    model = LossModel(config.M, config.r, config.weights(), real=config.real_coefficients)
    theta = init_params(config.seed) if init is None else np.array(init, float)
    state = AdamState.zeros(N_PARAMS)
    best_theta, best = theta.copy(), None
    history = []
    for step in range(config.steps):
        parts, grad = model.value_and_grad(theta)
        if not (math.isfinite(parts.l_tot) and np.all(np.isfinite(grad))):
            raise NonFiniteLossError(step, best_theta)
        if best is None or parts.l_tot < best.l_tot:
            best, best_theta = parts, theta.copy()
        lr = cosine_warm_restarts(step, config.T0, config.T_mult, config.learning_rate, config.eta_min)
        history.append((step, lr, parts))
        if callback is not None:
            callback(step, lr, parts)
        theta, state = adam_step(theta, grad, state, lr, config.beta1, config.beta2, config.adam_eps)
    if best is None or config.steps == 0:
        best, best_theta = model.value(theta), theta
    else:
        final = model.value(theta)
        if math.isfinite(final.l_tot) and final.l_tot < best.l_tot:
            best, best_theta = final, theta.copy()
    return TrainResult(best_theta, best, history, config)


def real_constrained_train(config: TrainConfig, callback=None) -> TrainResult:
    cfg = TrainConfig(**{**asdict(config), "real_coefficients": True})
    return train(cfg, callback)


# -- checkpoints ----------------------------------------------------------------------------


def checkpoint_dict(result: TrainResult) -> dict:
    c0, c1 = result.codes()
    f = result.f_params.to_matrix()
    b = result.best_loss
    return {
        "architecture": list(LAYERS),
        "weights": [float(x) for x in result.params[:N_MLP]],
        "f_params": [float(x) for x in result.params[N_MLP:]],
        "f_matrix": [[z.real, z.imag] for z in (f.f11, f.f12, f.f21, f.f22)],
        "train_config": asdict(result.config),
        "derived_coefficients": {
            "c0": [[z.real, z.imag] for z in c0.coeffs],
            "c1": [[z.real, z.imag] for z in c1.coeffs],
        },
        "loss_history_summary": {
            "steps": len(result.history),
            "best_l_tot": b.l_tot,
            "best_l_er_bar": b.l_er_bar,
            "best_l_er_bar_exact": b.l_er_bar_exact,
            "best_l_eg": b.l_eg,
            "best_l_st": b.l_st,
        },
    }


def save_checkpoint(result: TrainResult, path) -> str:
    """Write the checkpoint JSON; returns its SHA-256 digest."""
    text = json.dumps(checkpoint_dict(result), indent=1, sort_keys=True)
    with open(path, "w") as fh:
        fh.write(text)
    return hashlib.sha256(text.encode()).hexdigest()


def load_checkpoint(path) -> dict:
    with open(path) as fh:
        data = json.load(fh)
    missing = {"architecture", "weights", "f_params", "train_config", "derived_coefficients"} - set(data)
    if missing:
        raise ValueError(f"checkpoint lacks fields {sorted(missing)}")
    if list(data["architecture"]) != list(LAYERS):
        raise ValueError(f"unexpected architecture {data['architecture']}")
    return data


def codes_from_checkpoint(data: dict) -> tuple[CodewordSpec, CodewordSpec, FMatrix]:
    cfg = data["train_config"]
    M, r = int(cfg["M"]), float(cfg["r"])
    c0 = [complex(a, b) for a, b in data["derived_coefficients"]["c0"]]
    c1 = [complex(a, b) for a, b in data["derived_coefficients"]["c1"]]
    f = FParams(tuple(data["f_params"])).to_matrix()
    return CodewordSpec(0, M, r, c0), CodewordSpec(1, M, r, c1), f
