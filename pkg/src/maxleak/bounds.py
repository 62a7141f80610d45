"""Min-entropy versions of Mrs. Gerber's lemma and the resulting attack bounds.

Probabilities are on the ``exp(-H_inf)`` scale.  Leakages passed as
``*_bits`` are in bits, everything else is in nats.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .errors import DomainError
from .pmf import LN2, floor_inv

_EPS = 1e-12


def _check_p(p: float, M: int) -> float:
    p = float(p)
    if not (1.0 / M - _EPS <= p <= 1.0 + _EPS):
        raise DomainError(f"p = {p} outside [1/M, 1] for M = {M}")
    return p


def _clamp(x: float, M: int) -> float:
    return min(1.0, max(1.0 / M, x))


@dataclass(frozen=True)
class ShareLeakage:
    """Per-share guessing probabilities ``p_i = exp(-H_inf(X_i|Y_i))`` on a group of order M."""

    p_values: tuple[float, ...]
    M: int

    def __post_init__(self):
        if self.M < 2:
            raise DomainError("M must be >= 2")
        if len(self.p_values) == 0:
            raise DomainError("need at least one share")
        ps = tuple(_check_p(p, self.M) for p in self.p_values)
        object.__setattr__(self, "p_values", ps)

    @property
    def d(self) -> int:
        return len(self.p_values) - 1

    @property
    def sorted(self) -> tuple[float, ...]:
        return tuple(sorted(self.p_values))

    @property
    def k(self) -> int:
        return floor_inv(self.sorted[0])

    @property
    def r(self) -> int:
        k = self.k
        return max(i for i, p in enumerate(self.sorted) if p <= 1.0 / k + _EPS)

    def _product(self) -> float:
        k, r = self.k, self.r
        out = 1.0
        for p in self.sorted[: r + 1]:
            out *= (k + 1) * p - 1.0
        return out


def mgl_two(p: float, q: float, M: int) -> float:
    """Optimal bound on ``exp(-H_inf(X_0 + X_1 | Y))`` from the two share values."""
    p, q = _check_p(p, M), _check_p(q, M)
    k = max(floor_inv(p), floor_inv(q))
    lo, hi = 1.0 / (k + 1), 1.0 / k
    if lo - _EPS <= p <= hi + _EPS and lo - _EPS <= q <= hi + _EPS:
        raw = k * p * q + (1 - k * p) * (1 - k * q)
    else:
        raw = min(p, q)
    return _clamp(raw, M)


def mgl_multi_raw(s: ShareLeakage) -> float:
    k, r = s.k, s.r
    return 1.0 / (k + 1) + k**r / (k + 1) * s._product()


def mgl_multi(s: ShareLeakage) -> float:
    """Bound on ``exp(-H_inf(X|Y))`` for d+1 shares obtained by iterating the two-share bound."""
    return _clamp(mgl_multi_raw(s), s.M)


def mgl_refined_raw(s: ShareLeakage) -> tuple[float, str]:
    k, r = s.k, s.r
    parity = "even" if r % 2 == 0 else "odd"
    coeff = 1.0 if parity == "even" else float(k)
    return 1.0 / (k + 1) + coeff / (k + 1) * s._product(), parity


def mgl_refined(s: ShareLeakage) -> tuple[float, str]:
    """Refined bound (unconditional pmfs, or conditional ones in the high-noise regime).

    Returns the bound and the parity of ``r`` that selected the formula.
    When ``2 <= k`` divides M and ``r >= 2`` the value can sit below the true
    peak: shares flat on cosets of an order-k subgroup keep their sum on a
    coset (see :func:`refined_bound_at_risk`).
    """
    raw, parity = mgl_refined_raw(s)
    return _clamp(raw, s.M), parity


def refined_bound_at_risk(s: ShareLeakage) -> bool:
    """True when an order-k subgroup exists and at least three shares lie below 1/k.

    Abelian groups have a subgroup of every order dividing M, so this only
    depends on M.  There the refined bound has known counterexamples.
    """
    return s.k >= 2 and s.M % s.k == 0 and s.r >= 2


def asymptotic_constant(M: int, d: int, refined: bool = False) -> float:
    """High-noise constant relating the masked leakage to the product of share leakages (bits)."""
    if M < 2 or d < 0:
        raise DomainError("need M >= 2 and d >= 0")
    if not refined:
        return (M - 1) ** d * LN2**d
    return LN2**d if d % 2 == 0 else (M - 1) * LN2**d


def leakage_from_entropy_bound(h_bound: float, M: int) -> float:
    """Maximal leakage bound ``log M - H`` for a uniform sensitive variable."""
    if not (-_EPS <= h_bound <= math.log(M) + _EPS):
        raise DomainError(f"entropy bound {h_bound} outside [0, log M]")
    return max(0.0, math.log(M) - h_bound)


def success_bound_corollary(m: int, i_inf_total: float, M: int) -> float:
    """``min(1, exp(m I_inf(X;Y)) / M)`` with the leakage in nats."""
    if m < 0 or i_inf_total < 0:
        raise DomainError("need m >= 0 and a nonnegative leakage")
    expo = m * i_inf_total - math.log(M)
    return 1.0 if expo >= 0 else math.exp(expo)


def success_bound_approx(m: int, share_leakages_bits: Sequence[float], M: int,
                         refined: bool = False) -> float:
    """First-order expansion of :func:`success_bound_corollary` near ``P_s = 1/M``.

    The masked leakage is approximated by ``C_d * prod(I_i)`` in bits; the
    extra ``ln 2`` converts it to the natural-log exponent.
    """
    if m < 0 or any(x < 0 for x in share_leakages_bits):
        raise DomainError("need m >= 0 and nonnegative leakages")
    d = len(share_leakages_bits) - 1
    c = asymptotic_constant(M, d, refined)
    return min(1.0, 1.0 / M + m * LN2 * c / M * math.prod(share_leakages_bits))


def prior_art_constant(M: int, d: int) -> float:
    return math.sqrt(M - 1) * (2 * LN2) ** ((d + 1) / 2) / M


def success_bound_prior_art(m: int, mi_bits: Sequence[float], M: int) -> float:
    """Mutual-information bound ``1/M + sqrt(m) A_d sqrt(prod I(X_i;Y_i))``, capped at 1."""
    if m < 0 or any(x < 0 for x in mi_bits):
        raise DomainError("need m >= 0 and nonnegative mutual informations")
    d = len(mi_bits) - 1
    return min(1.0, 1.0 / M + math.sqrt(m) * prior_art_constant(M, d) * math.sqrt(math.prod(mi_bits)))


@dataclass
class BoundReport:
    M: int
    d: int
    m: int
    p_values: list[float]
    k: int
    r: int
    subgroup_order_k_plus_1_exists: bool
    refined_conditionally_valid: bool
    refined_at_risk: bool
    bound_thm5: float
    bound_thm5_raw: float
    h_thm5_bits: float
    bound_thm7: float
    bound_thm7_raw: float
    h_thm7_bits: float
    thm7_parity: str
    bound_two: float | None
    i_inf_bound_bits: float
    share_leakages_bits: list[float]
    ps_cor1: float
    ps_cor1_approx: float
    mi_bits: list[float] | None = None
    ps_prop1: float | None = None
    csv_columns: tuple = field(default=(
        "M", "d", "m", "k", "r", "bound_thm5", "bound_thm7",
        "i_inf_bound_bits", "ps_cor1", "ps_prop1"), repr=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("csv_columns")
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    def csv_row(self) -> dict:
        return {c: getattr(self, c) for c in self.csv_columns}

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(self.csv_columns), lineterminator="\n")
        if header:
            w.writeheader()
        w.writerow({k: _fmt(v) for k, v in self.csv_row().items()})
        return buf.getvalue()


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.12g}"
    return v


def bound_report(p_values: Sequence[float], M: int, m: int = 1,
                 mi_bits: Sequence[float] | None = None,
                 refined_valid: bool = False) -> BoundReport:
    """Evaluate every bound for one set of share values.

    ``refined_valid`` records whether the refined bound may be used for the
    leakage (unconditional shares, or the high-noise hypothesis checked).
    """
    s = ShareLeakage(tuple(p_values), M)
    b5_raw = mgl_multi_raw(s)
    b5 = _clamp(b5_raw, M)
    b7_raw, parity = mgl_refined_raw(s)
    b7 = _clamp(b7_raw, M)
    at_risk = refined_bound_at_risk(s)
    best = min(b5, b7) if refined_valid and not at_risk else b5
    i_inf = leakage_from_entropy_bound(-math.log(best), M)
    shares_bits = [max(0.0, math.log2(M * p)) for p in s.p_values]
    prop1 = None
    if mi_bits is not None:
        if len(mi_bits) != len(s.p_values):
            raise DomainError(f"{len(mi_bits)} mutual informations for {len(s.p_values)} shares")
        prop1 = success_bound_prior_art(m, mi_bits, M)
    return BoundReport(
        M=M, d=s.d, m=m, p_values=list(s.p_values), k=s.k, r=s.r,
        subgroup_order_k_plus_1_exists=(M % (s.k + 1) == 0),
        refined_conditionally_valid=refined_valid,
        refined_at_risk=at_risk,
        bound_thm5=b5, bound_thm5_raw=b5_raw, h_thm5_bits=-math.log2(b5),
        bound_thm7=b7, bound_thm7_raw=b7_raw, h_thm7_bits=-math.log2(b7), thm7_parity=parity,
        bound_two=mgl_two(*s.p_values, M) if s.d == 1 else None,
        i_inf_bound_bits=i_inf / LN2,
        share_leakages_bits=shares_bits,
        ps_cor1=success_bound_corollary(m, i_inf, M),
        ps_cor1_approx=success_bound_approx(m, shares_bits, M, refined=refined_valid and not at_risk),
        mi_bits=None if mi_bits is None else list(mi_bits),
        ps_prop1=prop1,
    )
