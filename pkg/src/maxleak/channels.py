"""Leakage models: the complement toy channel and ``Y = f(X) + sigma * N(0, 1)``."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import CapabilityError, DomainError, ValidationError
from .info import DiscreteChannel

_trapezoid = getattr(np, "trapezoid", None) or np.trapz

#: Largest acceptable Gaussian tail mass outside the integration range.
TAIL_TOL = 1e-12


def toy_complement_channel(M: int) -> DiscreteChannel:
    return DiscreteChannel.complement(M)


def hamming_weights(nbits: int) -> np.ndarray:
    x = np.arange(2**nbits)
    return np.array([bin(v).count("1") for v in x], dtype=float)


@dataclass(frozen=True, eq=False)
class GaussianLeakageModel:
    leak_table: np.ndarray
    sigma: float

    def __post_init__(self):
        f = np.array(self.leak_table, dtype=np.float64).ravel()
        if f.size < 1 or not np.all(np.isfinite(f)):
            raise ValidationError("leak table must be a nonempty finite vector")
        if not self.sigma > 0 or not math.isfinite(self.sigma):
            raise ValidationError(f"sigma must be positive, got {self.sigma}")
        f.setflags(write=False)
        object.__setattr__(self, "leak_table", f)
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def M(self) -> int:
        return self.leak_table.size

    @classmethod
    def hamming(cls, nbits: int, sigma: float) -> "GaussianLeakageModel":
        return cls(hamming_weights(nbits), sigma)

    @classmethod
    def identity(cls, M: int, sigma: float) -> "GaussianLeakageModel":
        return cls(np.arange(M, dtype=float), sigma)

    @classmethod
    def parse(cls, text: str) -> "GaussianLeakageModel":
        """``hw:<nbits>:<sigma>``, ``identity:<M>:<sigma>``, or ``{"leak": [...], "sigma": s}``."""
        text = text.strip()
        try:
            if text.startswith("hw:"):
                _, n, s = text.split(":")
                return cls.hamming(int(n), float(s))
            if text.startswith("identity:"):
                _, n, s = text.split(":")
                return cls.identity(int(n), float(s))
            obj = json.loads(text)
            extra = set(obj) - {"leak", "sigma"}
            if extra:
                raise ValidationError(f"unknown model fields {sorted(extra)}")
            return cls(obj["leak"], float(obj["sigma"]))
        except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"malformed model literal {text!r}") from exc

    def likelihoods(self, y) -> np.ndarray:
        """Rows ``exp(-(y - f(x))^2 / (2 sigma^2))`` rescaled so each row's max is 1."""
        y = np.asarray(y, dtype=float)[..., None]
        z = (y - self.leak_table) / self.sigma
        e = -0.5 * z * z
        return np.exp(e - e.max(axis=-1, keepdims=True))


@dataclass(frozen=True)
class QuadratureSpec:
    n_sigma: float = 12.0
    nodes: int = 20001

    def __post_init__(self):
        if self.nodes < 3 or self.nodes % 2 == 0:
            raise ValidationError("node count must be odd and >= 3")
        if not self.n_sigma > 0:
            raise ValidationError("integration range must be positive")

    def grid(self, model: GaussianLeakageModel) -> np.ndarray:
        tail = 2.0 * ndtr(-self.n_sigma)
        if tail > TAIL_TOL:
            raise CapabilityError(
                f"range of +-{self.n_sigma} sigma leaves tail mass {tail:.3g} > {TAIL_TOL:g}; "
                "increase n_sigma"
            )
        f = model.leak_table
        return np.linspace(f.min() - self.n_sigma * model.sigma,
                           f.max() + self.n_sigma * model.sigma, self.nodes)


def _max_density_integral(model: GaussianLeakageModel, quad: QuadratureSpec) -> float:
    """``int max_x phi_sigma(y - f(x)) dy`` by the trapezoidal rule plus exact tails."""
    y = quad.grid(model)
    vals = np.unique(model.leak_table)
    s = model.sigma
    # the nearest leak value gives the max density
    if len(vals) > 1:
        idx = np.clip(np.searchsorted(vals, y), 1, len(vals) - 1)
        left, right = vals[idx - 1], vals[idx]
        nearest = np.where(np.abs(y - left) <= np.abs(y - right), left, right)
    else:
        nearest = np.full_like(y, vals[0])
    z = (y - nearest) / s
    dens = np.exp(-0.5 * z * z) / (s * math.sqrt(2 * math.pi))
    body = float(_trapezoid(dens, y))
    # beyond the grid the max is the outermost Gaussian
    tails = 2.0 * ndtr(-quad.n_sigma)
    return body + tails


def gaussian_max_information(model: GaussianLeakageModel, quad: QuadratureSpec | None = None) -> float:
    """Maximal leakage ``log int max_x p(y|x) dy`` (nats)."""
    quad = quad or QuadratureSpec()
    return max(0.0, math.log(_max_density_integral(model, quad)))


def gaussian_max_information_exact(model: GaussianLeakageModel) -> float:
    """Closed form of the same integral: Gaussian mass of each Voronoi cell of the leak values."""
    vals = np.unique(model.leak_table)
    edges = np.concatenate([[-np.inf], 0.5 * (vals[1:] + vals[:-1]), [np.inf]])
    s = model.sigma
    mass = ndtr((edges[1:] - vals) / s) - ndtr((edges[:-1] - vals) / s)
    return max(0.0, math.log(float(mass.sum())))


def gaussian_conditional_min_entropy(model: GaussianLeakageModel, quad: QuadratureSpec | None = None) -> float:
    """``-log P_s(X|Y)`` for uniform X, by integrating ``max_x p(x|y) p(y)``."""
    quad = quad or QuadratureSpec()
    M = model.M
    y = quad.grid(model)
    s = model.sigma
    z = (y[:, None] - model.leak_table[None, :]) / s
    e = -0.5 * z * z
    top = e.max(axis=1)
    w = np.exp(e - top[:, None])
    py = w.sum(axis=1) * np.exp(top) / (M * s * math.sqrt(2 * math.pi))
    post_max = 1.0 / w.sum(axis=1)
    integrand = post_max * py
    ps = float(_trapezoid(integrand, y)) + 2.0 * ndtr(-quad.n_sigma) / M
    return -math.log(ps)


def gaussian_mutual_information(model: GaussianLeakageModel, quad: QuadratureSpec | None = None) -> float:
    """``I(X;Y)`` in nats for uniform X, as ``h(Y) - h(Y|X)`` on the quadrature grid."""
    quad = quad or QuadratureSpec()
    y = quad.grid(model)
    s = model.sigma
    z = (y[:, None] - model.leak_table[None, :]) / s
    e = -0.5 * z * z
    top = e.max(axis=1)
    log_py = top + np.log(np.exp(e - top[:, None]).mean(axis=1)) - math.log(s * math.sqrt(2 * math.pi))
    py = np.exp(log_py)
    h_y = -float(_trapezoid(py * log_py, y))
    h_y_given_x = 0.5 * math.log(2 * math.pi * math.e * s * s)
    return max(0.0, h_y - h_y_given_x)


def gaussian_report(model: GaussianLeakageModel, quad: QuadratureSpec | None = None) -> dict:
    """Single-share measures in bits, plus the high-noise hypothesis check."""
    quad = quad or QuadratureSpec()
    holds, worst_y, worst = hypothesis_check(model, quad)
    h = gaussian_conditional_min_entropy(model, quad)
    return {
        "M": model.M,
        "sigma": model.sigma,
        "i_inf_bits": gaussian_max_information(model, quad) / math.log(2),
        "i_inf_exact_bits": gaussian_max_information_exact(model) / math.log(2),
        "h_inf_cond_bits": h / math.log(2),
        "log_M_minus_h_inf_cond_bits": (math.log(model.M) - h) / math.log(2),
        "mi_bits": gaussian_mutual_information(model, quad) / math.log(2),
        "high_noise_hypothesis": bool(holds),
        "posterior_max_worst": float(worst),
        "posterior_max_worst_y": float(worst_y),
    }


def posterior_max(model: GaussianLeakageModel, y) -> np.ndarray:
    w = model.likelihoods(y)
    return w.max(axis=-1) / w.sum(axis=-1)


def hypothesis_check(model: GaussianLeakageModel, quad: QuadratureSpec | None = None,
                     M: int | None = None) -> tuple[bool, float, float]:
    """Check ``max_x p(x|y) <= 1/(M-1)`` for every y under a uniform prior.

    Beyond the extreme leak values the posterior of the extreme class is
    monotone in y, so the supremum there is its limit ``1/#argmax``; the
    interior is scanned on the quadrature grid.  Returns
    ``(holds, worst_y, worst_value)``.
    """
    quad = quad or QuadratureSpec()
    M = model.M if M is None else M
    if M < 2:
        raise DomainError("M must be >= 2")
    f = model.leak_table
    thr = 1.0 / (M - 1) + 1e-12
    y = quad.grid(model)
    inner = np.concatenate([y[(y >= f.min()) & (y <= f.max())], [f.min(), f.max()]])
    pm = posterior_max(model, inner)
    i = int(np.argmax(pm))
    worst_y, worst = float(inner[i]), float(pm[i])
    for lim_y, cnt in ((math.inf, np.sum(f == f.max())), (-math.inf, np.sum(f == f.min()))):
        val = 1.0 / cnt
        if val > worst:
            worst_y, worst = lim_y, val
    return bool(worst <= thr), float(worst_y), float(worst)


def discrete_hypothesis_check(c: DiscreteChannel) -> tuple[bool, int, float]:
    """Same check for a discrete channel under a uniform prior."""
    M = c.n_inputs
    col = c.rows.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        post = np.where(col > 0, c.rows.max(axis=0) / col, 0.0)
    j = int(np.argmax(post))
    return bool(post[j] <= 1.0 / (M - 1) + 1e-12), j, float(post[j])


def _philox_uniform(seed: int, counter: int) -> float:
    bg = np.random.Philox(key=int(seed), counter=int(counter))
    raw = int(bg.random_raw())
    return ((raw >> 11) + 0.5) * 2.0**-53


def sample_trace(model: GaussianLeakageModel, x: int, rng_seed: int, counter: int) -> float:
    """One trace ``f(x) + sigma * z`` where z depends only on ``(rng_seed, counter)``."""
    if not 0 <= int(x) < model.M:
        raise DomainError(f"input {x} out of range")
    z = float(ndtri(_philox_uniform(rng_seed, counter)))
    return float(model.leak_table[int(x)] + model.sigma * z)


def share_models(models: Sequence[GaussianLeakageModel] | GaussianLeakageModel, d: int) -> list:
    if isinstance(models, GaussianLeakageModel):
        return [models] * (d + 1)
    models = list(models)
    if len(models) != d + 1:
        raise ValidationError(f"{len(models)} share models for d + 1 = {d + 1} shares")
    return models
