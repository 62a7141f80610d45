"""Information measures on finite channels (all values in nats).

Conventions: a channel is a row-stochastic matrix ``W[x, y] = p(y|x)``;
a joint model pairs a prior on X with a channel.  Conditional measures
take a prior on Z plus one joint model per value of Z.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import CapabilityError, DomainError, ValidationError
from .pmf import Pmf, min_entropy, renyi_entropy, shannon_entropy

#: Largest number of entries allowed in a product channel.
PRODUCT_GUARD = 10**7


@dataclass(frozen=True, eq=False)
class DiscreteChannel:
    rows: np.ndarray

    def __post_init__(self):
        W = np.array(self.rows, dtype=np.float64)
        if W.ndim != 2 or W.shape[0] == 0 or W.shape[1] == 0:
            raise ValidationError("channel must be a nonempty 2-D matrix")
        if not np.all(np.isfinite(W)) or np.any(W < 0):
            raise ValidationError("channel entries must be finite and nonnegative")
        bad = np.abs(W.sum(axis=1) - 1.0) > 1e-9
        if bad.any():
            raise ValidationError(f"channel rows {np.flatnonzero(bad).tolist()} do not sum to 1")
        W.setflags(write=False)
        object.__setattr__(self, "rows", W)

    @property
    def n_inputs(self) -> int:
        return self.rows.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.rows.shape[1]

    @classmethod
    def identity(cls, M: int) -> "DiscreteChannel":
        return cls(np.eye(M))

    @classmethod
    def bsc(cls, eps: float) -> "DiscreteChannel":
        if not 0 <= eps <= 1:
            raise DomainError(f"crossover probability {eps} outside [0, 1]")
        return cls([[1 - eps, eps], [eps, 1 - eps]])

    @classmethod
    def complement(cls, M: int) -> "DiscreteChannel":
        """Output uniform over every symbol except the input."""
        if M < 2:
            raise DomainError("complement channel needs M >= 2")
        return cls((np.ones((M, M)) - np.eye(M)) / (M - 1))

    @classmethod
    def parse(cls, text: str) -> "DiscreteChannel":
        """``bsc:<eps>``, ``complement:<M>``, ``identity:<M>`` or a JSON matrix."""
        text = text.strip()
        kind, _, arg = text.partition(":")
        try:
            if kind == "bsc":
                return cls.bsc(float(arg))
            if kind == "complement":
                return cls.complement(int(arg))
            if kind == "identity":
                return cls.identity(int(arg))
            return cls(json.loads(text))
        except (ValueError, json.JSONDecodeError) as exc:
            if isinstance(exc, DomainError):
                raise
            raise ValidationError(f"malformed channel literal {text!r}") from exc


@dataclass(frozen=True, eq=False)
class JointFinite:
    prior: Pmf
    channel: DiscreteChannel

    def __post_init__(self):
        if not isinstance(self.prior, Pmf):
            object.__setattr__(self, "prior", Pmf(self.prior))
        if len(self.prior) != self.channel.n_inputs:
            raise ValidationError(
                f"prior has {len(self.prior)} symbols but channel has {self.channel.n_inputs} inputs"
            )

    @property
    def joint(self) -> np.ndarray:
        """``P[x, y] = p(x) p(y|x)``."""
        return self.prior.masses[:, None] * self.channel.rows


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not alpha > 0 or alpha == 1.0:
        raise DomainError("alpha must lie in (0,1) or (1,inf); alpha=1 is mutual_information")
    return alpha


def _col_power_norms(P: np.ndarray, alpha: float) -> np.ndarray:
    """Column-wise ``(sum_x P[x, y]**alpha)**(1/alpha)``, stable for large alpha."""
    top = P.max(axis=0)
    safe = np.where(top > 0, top, 1.0)
    with np.errstate(divide="ignore"):
        s = np.sum((P / safe) ** alpha, axis=0)
    return np.where(top > 0, top * s ** (1.0 / alpha), 0.0)


def arimoto_conditional_entropy(j: JointFinite, alpha: float) -> float:
    alpha = _check_alpha(alpha)
    if math.isinf(alpha):
        return conditional_min_entropy(j)
    s = float(np.sum(_col_power_norms(j.joint, alpha)))
    return alpha / (1.0 - alpha) * math.log(s)


def conditional_min_entropy(j: JointFinite) -> float:
    """``-log P_s(X|Y)`` for the MAP guess of X from Y."""
    return -math.log(float(np.sum(j.joint.max(axis=0))))


def mutual_information(j: JointFinite) -> float:
    P = j.joint
    py = P.sum(axis=0)
    px = j.prior.masses
    mask = P > 0
    ratio = P[mask] / (px[:, None] * py[None, :])[mask]
    return float(np.sum(P[mask] * np.log(ratio)))


def _sibson_sum(prior: np.ndarray, W: np.ndarray, alpha: float) -> float:
    # E_Y <p_{X|Y} || p_X>_alpha = sum_y (sum_x p(x) p(y|x)^alpha)^(1/alpha)
    keep = prior > 0
    p = prior[keep]
    Wk = W[keep]
    top = Wk.max(axis=0)
    safe = np.where(top > 0, top, 1.0)
    inner = np.sum(p[:, None] * (Wk / safe) ** alpha, axis=0)
    return float(np.sum(np.where(top > 0, top * inner ** (1.0 / alpha), 0.0)))


def sibson_information(j: JointFinite, alpha: float) -> float:
    alpha = _check_alpha(alpha)
    if math.isinf(alpha):
        return max_information(j.channel, j.prior.support)
    s = _sibson_sum(j.prior.masses, j.channel.rows, alpha)
    return alpha / (alpha - 1.0) * math.log(s)


def max_information(c: DiscreteChannel, support: Sequence[int] | None = None) -> float:
    """Maximal leakage ``log sum_y max_{x in support} p(y|x)``.

    Depends on the input distribution only through its support, which
    defaults to all inputs.
    """
    rows = c.rows if support is None else c.rows[sorted(set(int(s) for s in support))]
    if rows.shape[0] == 0:
        raise DomainError("max_information needs a nonempty support")
    return math.log(float(np.sum(rows.max(axis=0))))


def _per_z_terms(z_prior: Pmf, per_z: Sequence[JointFinite]) -> np.ndarray:
    if len(per_z) != len(z_prior):
        raise ValidationError(f"{len(per_z)} conditional models for {len(z_prior)} values of Z")
    return np.array([float(np.sum(j.channel.rows[j.prior.support].max(axis=0))) for j in per_z])


def conditional_max_information(z_prior: Pmf, per_z: Sequence[JointFinite]) -> float:
    """``log E_Z sum_y max_{x: p(x|z) > 0} p(y|x,z)`` (averaged over Z)."""
    terms = _per_z_terms(z_prior, per_z)
    return math.log(float(np.dot(z_prior.masses, terms)))


def conditional_maximal_leakage(z_prior: Pmf, per_z: Sequence[JointFinite]) -> float:
    """Variant taking the maximum over Z (with positive probability) instead of the average."""
    terms = _per_z_terms(z_prior, per_z)
    return math.log(float(terms[z_prior.masses > 0].max()))


def conditional_sibson_information(z_prior: Pmf, per_z: Sequence[JointFinite], alpha: float) -> float:
    alpha = _check_alpha(alpha)
    if math.isinf(alpha):
        return conditional_max_information(z_prior, per_z)
    if len(per_z) != len(z_prior):
        raise ValidationError(f"{len(per_z)} conditional models for {len(z_prior)} values of Z")
    s = sum(w * _sibson_sum(j.prior.masses, j.channel.rows, alpha)
            for w, j in zip(z_prior.masses, per_z) if w > 0)
    return alpha / (alpha - 1.0) * math.log(s)


def binary_alpha_divergence(p: float, q: float, alpha: float) -> float:
    """Binary divergence ``d_alpha(p||q)``; ``alpha = inf`` gives the limit order."""
    if not (0 <= p <= 1 and 0 <= q <= 1):
        raise DomainError("p and q must lie in [0, 1]")
    alpha = float(alpha)
    if math.isinf(alpha) and alpha > 0:
        best = 0.0
        for a, b in ((p, q), (1 - p, 1 - q)):
            if b > 0:
                best = max(best, a / b)
            elif a > 0:
                return math.inf
        return math.log(best)
    alpha = _check_alpha(alpha)
    total = 0.0
    for a, b in ((p, q), (1 - p, 1 - q)):
        if a == 0:
            continue
        if b == 0:
            if alpha > 1:
                return math.inf
            continue
        total += math.exp(alpha * math.log(a) + (1 - alpha) * math.log(b))
    if total == 0:
        return math.inf
    return max(0.0, math.log(total) / (alpha - 1.0))


def fano_success_ceiling(i_alpha: float, alpha: float, M: int,
                         tol: float = 1e-12, max_iter: int = 200) -> float:
    """Largest success probability compatible with ``d_alpha(P_s || 1/M) <= i_alpha``."""
    if i_alpha < 0 or M < 2:
        raise DomainError("need i_alpha >= 0 and M >= 2")
    lo, hi = 1.0 / M, 1.0
    if i_alpha == 0:
        # the divergence vanishes only at P_s = 1/M; bisection would stall near sqrt(eps)
        return lo
    if binary_alpha_divergence(hi, lo, alpha) <= i_alpha:
        return 1.0
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if binary_alpha_divergence(mid, 1.0 / M, alpha) <= i_alpha:
            lo = mid
        else:
            hi = mid
    return lo


def product_channel(c: DiscreteChannel, m: int, guard: int = PRODUCT_GUARD) -> DiscreteChannel:
    """``m``-fold memoryless extension of ``c`` (inputs and outputs in lexicographic order)."""
    if m < 1:
        raise DomainError("m must be >= 1")
    size = (c.n_inputs * c.n_outputs) ** m
    if size > guard:
        raise CapabilityError(f"product channel would have {size} entries (guard {guard})")
    W = c.rows
    out = W
    for _ in range(m - 1):
        out = np.kron(out, W)
    return DiscreteChannel(out)


def measures_report(pmf: Pmf | None = None, channel: DiscreteChannel | None = None,
                    prior: Pmf | None = None, alphas: Sequence[float] = (0.5, 2.0, math.inf)) -> dict:
    """Entropies of ``pmf`` and leakages of ``channel`` (under ``prior``, default uniform), in bits."""
    ln2 = math.log(2.0)
    out: dict = {}
    if pmf is not None:
        out["h_inf_bits"] = min_entropy(pmf) / ln2
        out["h_shannon_bits"] = shannon_entropy(pmf) / ln2
        for a in alphas:
            out[f"h_alpha_{a:g}_bits"] = renyi_entropy(pmf, a) / ln2
    if channel is not None:
        prior = Pmf.uniform(channel.n_inputs) if prior is None else prior
        j = JointFinite(prior, channel)
        out["i_inf_bits"] = max_information(channel, prior.support) / ln2
        out["h_inf_cond_bits"] = conditional_min_entropy(j) / ln2
        out["mi_bits"] = mutual_information(j) / ln2
        for a in alphas:
            out[f"i_alpha_{a:g}_bits"] = sibson_information(j, a) / ln2
            out[f"h_alpha_{a:g}_cond_bits"] = arimoto_conditional_entropy(j, a) / ln2
    if not out:
        raise DomainError("need a pmf or a channel")
    return out


__all__ = [
    "DiscreteChannel", "JointFinite", "renyi_entropy", "arimoto_conditional_entropy",
    "conditional_min_entropy", "mutual_information", "sibson_information", "max_information",
    "conditional_max_information", "conditional_maximal_leakage", "conditional_sibson_information",
    "binary_alpha_divergence", "fano_success_ceiling", "product_channel", "measures_report",
]
