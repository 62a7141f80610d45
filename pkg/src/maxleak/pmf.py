"""Probability mass functions on finite alphabets.

Entropies are returned in nats; use :func:`to_bits` at display time.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError, ValidationError
from .group import FiniteAbelianGroup

TOL = 1e-9
LN2 = math.log(2.0)


def to_bits(nats: float) -> float:
    return nats / LN2


def floor_inv(p: float) -> int:
    """``floor(1/p)`` with a small guard so that e.g. ``p = 0.25`` gives 4."""
    return int(math.floor(1.0 / p + 1e-12))


@dataclass(frozen=True, eq=False)
class Pmf:
    masses: np.ndarray
    tolerance: float = field(default=TOL)

    def __post_init__(self):
        m = np.array(self.masses, dtype=np.float64).ravel()
        if m.size == 0:
            raise ValidationError("pmf must have at least one mass")
        if not np.all(np.isfinite(m)) or np.any(m < 0):
            raise ValidationError("pmf masses must be finite and nonnegative")
        if abs(m.sum() - 1.0) > self.tolerance:
            raise ValidationError(f"pmf masses sum to {m.sum():.12g}, not 1")
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)

    @classmethod
    def uniform(cls, M: int) -> "Pmf":
        if M < 1:
            raise ValidationError(f"uniform pmf needs size >= 1, got {M}")
        return cls(np.full(M, 1.0 / M))

    @classmethod
    def point(cls, M: int, index: int = 0) -> "Pmf":
        m = np.zeros(M)
        m[index] = 1.0
        return cls(m)

    @classmethod
    def sparse(cls, M: int, entries: dict) -> "Pmf":
        m = np.zeros(M)
        for k, v in entries.items():
            i = int(k)
            if not 0 <= i < M:
                raise ValidationError(f"sparse index {i} out of range for size {M}")
            m[i] = float(v)
        return cls(m)

    @classmethod
    def parse(cls, text: str, size: int | None = None) -> "Pmf":
        """Parse a JSON array, a sparse JSON object, or ``uniform:<M>``.

        A sparse object maps indices to masses; an optional ``"size"`` key
        fixes the length (default: largest index + 1).
        """
        text = text.strip()
        try:
            if text.startswith("uniform:"):
                return cls.uniform(int(text.split(":", 1)[1]))
            obj = json.loads(text)
            if isinstance(obj, dict):
                obj = dict(obj)
                n = obj.pop("size", size)
                n = int(n) if n is not None else max(int(k) for k in obj) + 1
                return cls.sparse(n, obj)
            if isinstance(obj, list):
                if size is not None and len(obj) != size:
                    raise ValidationError(f"pmf has {len(obj)} masses, expected {size}")
                return cls(np.array(obj, dtype=float))
        except ValidationError:
            raise
        except (ValueError, TypeError) as exc:
            raise ValidationError(f"malformed pmf literal {text!r}") from exc
        raise ValidationError(f"malformed pmf literal {text!r}")

    def __len__(self):
        return self.masses.size

    def __getitem__(self, i):
        return self.masses[i]

    def __repr__(self):
        return f"Pmf({np.array2string(self.masses, precision=6, separator=', ')})"

    @property
    def max_mass(self) -> float:
        return float(self.masses.max())

    @property
    def support(self) -> list[int]:
        return [int(i) for i in np.flatnonzero(self.masses > 0)]

    def padded(self, n: int) -> np.ndarray:
        out = np.zeros(max(n, len(self)))
        out[: len(self)] = self.masses
        return out


def _as_pmf(p) -> Pmf:
    return p if isinstance(p, Pmf) else Pmf(p)


def min_entropy(p) -> float:
    return -math.log(_as_pmf(p).max_mass)


def _log_power_sum(x: np.ndarray, alpha: float) -> float:
    """log(sum x**alpha) over the positive entries, stable for large alpha."""
    x = x[x > 0]
    top = x.max()
    return alpha * math.log(top) + math.log(np.sum((x / top) ** alpha))


def renyi_entropy(p, alpha: float) -> float:
    """Rényi entropy of order ``alpha`` (alpha > 0, alpha != 1)."""
    alpha = float(alpha)
    if not alpha > 0 or alpha == 1.0:
        raise DomainError("renyi_entropy needs alpha in (0,1) or (1,inf); use shannon_entropy or min_entropy")
    if math.isinf(alpha):
        return min_entropy(p)
    return _log_power_sum(_as_pmf(p).masses, alpha) / (1.0 - alpha)


def shannon_entropy(p) -> float:
    m = _as_pmf(p).masses
    m = m[m > 0]
    return float(-np.sum(m * np.log(m)))


def statistical_ordering(p) -> Pmf:
    p = _as_pmf(p)
    return Pmf(np.sort(p.masses)[::-1], p.tolerance)


class Majorization(enum.Enum):
    P_PREC_Q = "p < q"  # q majorizes p
    Q_PREC_P = "q < p"
    EQUAL = "equal"
    INCOMPARABLE = "incomparable"


def majorizes(p, q, tol: float = TOL) -> Majorization:
    """Compare two pmfs in the majorization order via ordered cumulative sums."""
    a, b = np.asarray(_as_pmf(p).masses), np.asarray(_as_pmf(q).masses)
    n = max(a.size, b.size)
    P = np.cumsum(np.sort(np.pad(a, (0, n - a.size)))[::-1])
    Q = np.cumsum(np.sort(np.pad(b, (0, n - b.size)))[::-1])
    p_le = bool(np.all(P <= Q + tol))
    q_le = bool(np.all(Q <= P + tol))
    if p_le and q_le:
        return Majorization.EQUAL
    if p_le:
        return Majorization.P_PREC_Q
    if q_le:
        return Majorization.Q_PREC_P
    return Majorization.INCOMPARABLE


def flat_top(p: float, M: int) -> Pmf:
    """The pmf ``(p, ..., p, 1 - k p, 0, ..., 0)`` with ``k = floor(1/p)``."""
    if not (1.0 / M - 1e-12 <= p <= 1.0 + 1e-12):
        raise DomainError(f"flat_top needs 1/M <= p <= 1 (M={M}, p={p})")
    k = min(floor_inv(p), M)
    m = np.zeros(M)
    m[:k] = p
    if k < M:
        m[k] = max(0.0, 1.0 - k * p)
    return Pmf(m)


def convolve(a, b, grp: FiniteAbelianGroup) -> Pmf:
    """Distribution of ``X_a + X_b`` for independent ``X_a ~ a``, ``X_b ~ b`` on ``grp``."""
    a, b = _as_pmf(a), _as_pmf(b)
    M = grp.order
    if len(a) != M or len(b) != M:
        raise ValidationError(f"pmf sizes {len(a)}, {len(b)} do not match group order {M}")
    out = kernels.group_convolve(a.masses, b.masses, grp.add_table)
    return Pmf(out)


def iterate_convolution(p0, grp: FiniteAbelianGroup, d_max: int) -> list[Pmf]:
    """``[p_0, p_1, ..., p_dmax]`` with ``p_{d+1} = p_d * p_0``."""
    if d_max < 0:
        raise DomainError("d_max must be >= 0")
    seq = [_as_pmf(p0)]
    for _ in range(d_max):
        seq.append(convolve(seq[-1], seq[0], grp))
    return seq
