"""Ground truth for the bounds: exhaustive MAP evaluation, Monte-Carlo attacks,
adversarial search over share distributions, and the figure tables.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtri

from . import bounds, kernels
from .channels import (GaussianLeakageModel, QuadratureSpec, discrete_hypothesis_check,
                       gaussian_conditional_min_entropy, gaussian_mutual_information,
                       hypothesis_check)
from .errors import CapabilityError, DomainError, ValidationError
from .group import FiniteAbelianGroup
from .info import (DiscreteChannel, JointFinite, conditional_min_entropy,
                   max_information, mutual_information)
from .pmf import Pmf, convolve, flat_top, floor_inv, iterate_convolution

#: Maximum number of (t^m, y^m, k) terms enumerated by :func:`exact_map_success`.
ENUMERATION_GUARD = 10**8

Z95 = 1.959963984540054


@dataclass(frozen=True, eq=False)
class MaskedSetup:
    """Key K and text T on a group, sensitive X = combine(K, T) split into d+1 shares.

    ``share_channels`` holds one leakage channel per share (a single channel
    is reused for every share).  ``combine`` is an ``M x M`` table
    ``combine[k, t]``; the default is ``k + t``.
    """

    group: FiniteAbelianGroup
    d: int
    share_channels: Sequence
    combine: np.ndarray | None = None

    def __post_init__(self):
        if self.d < 0:
            raise DomainError("masking order d must be >= 0")
        ch = self.share_channels
        if isinstance(ch, (DiscreteChannel, GaussianLeakageModel)):
            ch = [ch] * (self.d + 1)
        ch = list(ch)
        if len(ch) != self.d + 1:
            raise ValidationError(f"{len(ch)} share channels for {self.d + 1} shares")
        M = self.group.order
        kinds = {type(c) for c in ch}
        if len(kinds) != 1 or not kinds <= {DiscreteChannel, GaussianLeakageModel}:
            raise ValidationError("share channels must all be discrete or all Gaussian")
        for c in ch:
            n_in = c.n_inputs if isinstance(c, DiscreteChannel) else c.M
            if n_in != M:
                raise ValidationError(f"share channel has {n_in} inputs, group has order {M}")
        object.__setattr__(self, "share_channels", tuple(ch))
        C = self.group.add_table if self.combine is None else np.asarray(self.combine, dtype=np.intp)
        if C.shape != (M, M):
            raise ValidationError("combine table must be M x M")
        if any(sorted(C[:, t]) != list(range(M)) for t in range(M)):
            raise ValidationError("combine(., t) must be a bijection for every t (X uniform)")
        object.__setattr__(self, "combine", C)

    @property
    def M(self) -> int:
        return self.group.order

    @property
    def discrete(self) -> bool:
        return isinstance(self.share_channels[0], DiscreteChannel)


def leakage_channel(setup: MaskedSetup) -> DiscreteChannel:
    """Channel from X to the vector of share traces, shares marginalised out.

    Output symbols enumerate ``(y_0, ..., y_d)`` lexicographically.
    """
    if not setup.discrete:
        raise DomainError("leakage_channel needs discrete share channels")
    M, d = setup.M, setup.d
    chans = setup.share_channels
    sizes = [c.n_outputs for c in chans]
    ys = np.array(list(itertools.product(*[range(n) for n in sizes])), dtype=np.intp)
    acc = chans[0].rows[:, ys[:, 0]].T.copy()
    for i in range(1, d + 1):
        Li = chans[i].rows[:, ys[:, i]].T
        acc = kernels.batch_group_convolve(acc, Li, setup.group.sub_table)
    return DiscreteChannel(acc.T / M**d)


@dataclass
class ExactMapResult:
    ps: float
    i_inf_conditional: float
    i_inf_joint: float
    i_inf_single: float
    m: int


def exact_map_success(setup: MaskedSetup, m: int, guard: int = ENUMERATION_GUARD) -> ExactMapResult:
    """Exact MAP success probability of recovering K from (T^m, Y^m) by enumeration.

    Also returns the conditional max-information of K and Y^m given T^m
    (averaged over T^m), the joint max-information of (K, T^m) and Y^m,
    and the single-trace maximal leakage of X.
    """
    M = setup.M
    W = leakage_channel(setup)
    i_single = max_information(W)
    if m == 0:
        return ExactMapResult(1.0 / M, 0.0, 0.0, i_single, 0)
    if m < 0:
        raise DomainError("m must be >= 0")
    ny = W.n_outputs
    size = (M * ny) ** m * M
    if size > guard:
        raise CapabilityError(f"exact enumeration needs {size} terms (guard {guard})")
    rows = W.rows
    C = setup.combine
    uniform = list(range(M))
    ps_terms, cond_terms = [], []
    joint_max = np.zeros(ny**m)
    for ts in itertools.product(range(M), repeat=m):
        L = rows[C[:, ts[0]]]
        for t in ts[1:]:
            L = (L[:, :, None] * rows[C[:, t]][:, None, :]).reshape(M, -1)
        # MAP decision: lowest key index wins ties
        khat = np.argmax(L, axis=0)
        ps_terms.append(math.fsum(L[khat, np.arange(L.shape[1])]) / M)
        cond_terms.append(math.exp(max_information(DiscreteChannel(L), uniform)))
        joint_max = np.maximum(joint_max, L.max(axis=0))
    n_t = M**m
    ps = math.fsum(ps_terms) / n_t
    i_cond = math.log(math.fsum(cond_terms) / n_t)
    i_joint = math.log(math.fsum(joint_max))
    return ExactMapResult(ps, i_cond, i_joint, i_single, m)


def wilson_interval(successes: int, trials: int, z: float = Z95) -> tuple[float, float]:
    if trials <= 0:
        raise DomainError("trials must be >= 1")
    ph = successes / trials
    den = 1 + z * z / trials
    centre = (ph + z * z / (2 * trials)) / den
    half = z * math.sqrt(ph * (1 - ph) / trials + z * z / (4 * trials * trials)) / den
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return lo, hi


@dataclass
class AttackResult:
    m: int
    trials: int
    successes: int
    ps: float
    ci_low: float
    ci_high: float
    bound: float | None = None
    exact_ps: float | None = None

    @property
    def ci_half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)

    def consistent_with_bound(self) -> bool:
        """True unless the empirical rate significantly exceeds the bound."""
        return self.bound is None or self.ci_low <= self.bound


def _trial_uniforms(seed: int, trial: int, n: int) -> np.ndarray:
    # counter-based stream: the trial index occupies the high counter words
    bg = np.random.Philox(key=int(seed), counter=int(trial) << 128)
    raw = bg.random_raw(n).astype(np.uint64)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def _share_likelihoods(ch, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Sample a trace for each share value in ``x`` and return likelihood rows over inputs."""
    if isinstance(ch, GaussianLeakageModel):
        y = ch.leak_table[x] + ch.sigma * ndtri(u)
        return ch.likelihoods(y)
    cdf = np.cumsum(ch.rows, axis=1)
    y = np.minimum((u[:, None] >= cdf[x]).sum(axis=1), ch.n_outputs - 1)
    return ch.rows[:, y].T


def _simulate_block(setup: MaskedSetup, m: int, start: int, stop: int, seed: int) -> int:
    M, d = setup.M, setup.d
    n = stop - start
    if n <= 0:
        return 0
    per_trace = 2 * d + 2
    U = np.stack([_trial_uniforms(seed, t, 1 + m * per_trace) for t in range(start, stop)])
    key = np.minimum((U[:, 0] * M).astype(np.intp), M - 1)
    add, neg, C = setup.group.add_table, setup.group.neg_table, setup.combine
    scores = np.zeros((n, M))
    rows_idx = np.arange(n)[:, None]
    for j in range(m):
        base = 1 + j * per_trace
        t = np.minimum((U[:, base] * M).astype(np.intp), M - 1)
        x = C[key, t]
        masks = [np.minimum((U[:, base + 1 + i] * M).astype(np.intp), M - 1) for i in range(d)]
        x0 = x
        for s in masks:
            x0 = add[x0, neg[s]]
        shares = [x0] + masks
        noise = U[:, base + 1 + d: base + 2 + 2 * d]
        W = _share_likelihoods(setup.share_channels[0], shares[0], noise[:, 0])
        for i in range(1, d + 1):
            Li = _share_likelihoods(setup.share_channels[i], shares[i], noise[:, i])
            W = kernels.batch_group_convolve(W, Li, setup.group.sub_table)
        W = W / W.max(axis=1, keepdims=True)
        with np.errstate(divide="ignore"):
            scores += np.log(W[rows_idx, C[:, t].T])
    khat = np.argmax(scores, axis=1)
    return int(np.sum(khat == key))


def monte_carlo_attack(setup: MaskedSetup, m: int, trials: int, seed: int,
                       workers: int = 1, bound: float | None = None) -> AttackResult:
    """Empirical success rate of the exact MAP attack with ``m`` traces.

    Trial ``i`` draws all its randomness from a counter-based stream keyed by
    ``(seed, i)``, so the result does not depend on ``workers``.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    if m < 0:
        raise DomainError("m must be >= 0")
    if workers < 1:
        raise DomainError("workers must be >= 1")
    edges = np.linspace(0, trials, workers + 1).astype(int)
    blocks = [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            futs = [ex.submit(_simulate_block, setup, m, a, b, seed) for a, b in blocks]
            successes = sum(f.result() for f in futs)
    else:
        successes = sum(_simulate_block(setup, m, a, b, seed) for a, b in blocks)
    lo, hi = wilson_interval(successes, trials)
    exact = None
    if setup.discrete:
        try:
            exact = exact_map_success(setup, m).ps
        except CapabilityError:
            pass
    return AttackResult(m, trials, successes, successes / trials, lo, hi, bound, exact)


def share_guessing_probabilities(setup: MaskedSetup, quad: QuadratureSpec | None = None) -> list[float]:
    """``exp(-H_inf(X_i|Y_i))`` for each share under a uniform share value."""
    out = []
    M = setup.M
    for ch in setup.share_channels:
        if isinstance(ch, GaussianLeakageModel):
            h = gaussian_conditional_min_entropy(ch, quad)
        else:
            h = conditional_min_entropy(JointFinite(Pmf.uniform(M), ch))
        out.append(min(1.0, max(1.0 / M, math.exp(-h))))
    return out


def share_mutual_informations_bits(setup: MaskedSetup, quad: QuadratureSpec | None = None) -> list[float]:
    out = []
    for ch in setup.share_channels:
        if isinstance(ch, GaussianLeakageModel):
            mi = gaussian_mutual_information(ch, quad)
        else:
            mi = mutual_information(JointFinite(Pmf.uniform(setup.M), ch))
        out.append(mi / math.log(2))
    return out


def refined_bound_applies(setup: MaskedSetup, quad: QuadratureSpec | None = None) -> bool:
    """True when every share channel passes the high-noise posterior check."""
    for ch in setup.share_channels:
        if isinstance(ch, GaussianLeakageModel):
            ok = hypothesis_check(ch, quad, setup.M)[0]
        else:
            ok = discrete_hypothesis_check(ch)[0]
        if not ok:
            return False
    return True


def setup_bound_report(setup: MaskedSetup, m: int = 1, quad: QuadratureSpec | None = None):
    """:func:`bounds.bound_report` with share values derived from the share channels."""
    return bounds.bound_report(share_guessing_probabilities(setup, quad), setup.M, m,
                               mi_bits=share_mutual_informations_bits(setup, quad),
                               refined_valid=refined_bound_applies(setup, quad))


def masked_success_bound(setup: MaskedSetup, m: int, refined_valid: bool = False,
                         quad: QuadratureSpec | None = None) -> float:
    """Upper bound on P_s from the share leakages: min-entropy lemma, then the linear bound."""
    ps = share_guessing_probabilities(setup, quad)
    s = bounds.ShareLeakage(tuple(ps), setup.M)
    b = bounds.mgl_multi(s)
    if refined_valid and not bounds.refined_bound_at_risk(s):
        b = min(b, bounds.mgl_refined(s)[0])
    i_inf = bounds.leakage_from_entropy_bound(-math.log(b), setup.M)
    return bounds.success_bound_corollary(m, i_inf, setup.M)


# -- adversarial search ---------------------------------------------------

@dataclass
class ExtremalResult:
    max_peak: float
    a: Pmf
    b: Pmf
    bound: float
    evaluations: int = 0
    structured_peak: float = field(default=float("nan"))


def _cap_project(v: np.ndarray, p: float, peak: int) -> np.ndarray:
    """Nonnegative vector with ``v[peak] = p``, other entries <= p, total 1."""
    M = v.size
    out = np.clip(v.astype(float), 0, None)
    # water-filling: scale the free part to the remaining mass, cap at p, repeat
    capped = np.zeros(M, bool)
    capped[peak] = True
    out[peak] = p
    for _ in range(M + 1):
        free = ~capped
        if not free.any():
            break
        need = 1.0 - out[capped].sum()
        s = out[free].sum()
        if s <= 0:
            out[free] = need / free.sum()
        else:
            out[free] *= need / s
        over = free & (out > p)
        if not over.any():
            break
        out[over] = p
        capped |= over
    return out


def _peak(a: np.ndarray, b: np.ndarray, grp: FiniteAbelianGroup) -> float:
    return float(kernels.group_convolve(a, b, grp.add_table).max())


def extremal_search_two(p: float, q: float, grp: FiniteAbelianGroup, grid: int = 8,
                        iid: bool = False, rounds: int = 400, seed: int = 0) -> ExtremalResult:
    """Search for share pmfs with max masses ``p`` and ``q`` whose sum has the largest peak.

    Flat-top candidates come first (aligned placements, cosets of subgroups
    of order ``k+1``, random placements); the best is then refined by random
    perturbations that move mass in quanta of ``(1-mass)/grid`` while
    keeping both maxima fixed.  With ``iid=True`` the two shares share one
    pmf (requires ``p == q``).
    """
    M = grp.order
    if grid < 2:
        raise DomainError("grid must be >= 2")
    if iid and abs(p - q) > 1e-15:
        raise DomainError("iid search needs p == q")
    bound = bounds.mgl_two(p, q, M)
    rng = np.random.default_rng(seed)
    fp, fq = flat_top(p, M).masses, flat_top(q, M).masses
    neg = grp.neg_table
    cands = []

    def place(f, order):
        out = np.zeros(M)
        out[np.asarray(order)] = f
        return out

    k = max(floor_inv(p), floor_inv(q))
    if grp.has_subgroup_of_order(k + 1) and M <= 256:
        H, _ = grp.coset_support_witness([0], k + 1)
        order = sorted(H) + [g for g in range(M) if g not in H]
        a = place(fp, order)
        cands.append((a, place(fq, order)))
        if not iid:
            cands.append((a, place(fq, neg[np.array(order)])))
    ident = np.arange(M)
    if not iid:
        # aligned placement: b's i-th largest mass sits at minus a's i-th largest position
        cands.append((place(fp, ident), place(fq, neg[ident])))
    for _ in range(4 * grid):
        perm = rng.permutation(M)
        a = place(fp, perm)
        cands.append((a, a if iid else place(fq, rng.permutation(M))))
    evals = 0
    best_val, best = -1.0, None
    for a, b in cands:
        if iid:
            b = a
        v = _peak(a, b, grp)
        evals += 1
        if v > best_val:
            best_val, best = v, (a, b)
    structured = best_val

    def perturb(v, mass, peak):
        w = v.copy()
        others = [i for i in range(M) if i != peak]
        if len(others) < 2:
            return w
        i, j = rng.choice(others, 2, replace=False)
        delta = min(w[i], (1.0 - mass) / grid * rng.random())
        w[i] -= delta
        w[j] += delta
        if w[j] > mass:
            return v
        return w

    starts = [best]
    for _ in range(grid):
        pa = int(rng.integers(M))
        a = _cap_project(rng.dirichlet(np.full(M, 0.3)), p, pa)
        b = a if iid else _cap_project(rng.dirichlet(np.full(M, 0.3)), q, int(rng.integers(M)))
        starts.append((a, b))
    for a, b in starts:
        pa, pb = int(np.argmax(a)), int(np.argmax(b))
        cur = _peak(a, b, grp)
        evals += 1
        for _ in range(rounds):
            if iid or rng.random() < 0.5:
                a2 = perturb(a, p, pa)
                b2 = a2 if iid else b
            else:
                a2, b2 = a, perturb(b, q, pb)
            v = _peak(a2, b2, grp)
            evals += 1
            if v >= cur:
                a, b, cur = a2, b2, v
        if cur > best_val:
            best_val, best = cur, (a, b)
    return ExtremalResult(best_val, Pmf(best[0]), Pmf(best[1]), bound, evals, structured)


# -- figure tables --------------------------------------------------------

FIGURES = {
    "z14": ("14", {0: 0.8, 7: 0.2}, 14),
    "z13": ("13", {0: 0.8, 7: 0.2}, 14),
    "z5": ("5", [0.25, 0.25, 0.25, 0.25, 0.0], 5),
}


def figure_series(grp: FiniteAbelianGroup | str, p0, d_max: int) -> list[dict]:
    """Peak of the (d+1)-fold i.i.d. sum next to both bounds evaluated on ``max(p0)``."""
    if isinstance(grp, str):
        grp = FiniteAbelianGroup.parse(grp)
    M = grp.order
    if isinstance(p0, dict):
        p0 = Pmf.sparse(M, p0)
    elif not isinstance(p0, Pmf):
        p0 = Pmf(p0)
    p = p0.max_mass
    rows = []
    for d, pd in enumerate(iterate_convolution(p0, grp, d_max)):
        s = bounds.ShareLeakage((p,) * (d + 1), M)
        rows.append({
            "d": d,
            "max_mass": pd.max_mass,
            "bound_thm5": bounds.mgl_multi(s),
            "bound_thm7": bounds.mgl_refined(s)[0],
        })
    return rows


def reference_figure(which: str, d_max: int | None = None) -> list[dict]:
    if which not in FIGURES:
        raise DomainError(f"unknown figure {which!r}; choose from {sorted(FIGURES)}")
    g, p0, default_d = FIGURES[which]
    return figure_series(g, p0, default_d if d_max is None else d_max)


DEFAULT_M_VALUES = tuple(int(round(10 ** (e / 4))) for e in range(0, 25))


def compare_series(d: int, M: int = 256, m_values: Sequence[int] = DEFAULT_M_VALUES) -> list[dict]:
    """Both success bounds versus m for the complement toy channel on every share.

    The toy channel satisfies the high-noise hypothesis exactly, so the
    refined bound and its constant are used.
    """
    ch = DiscreteChannel.complement(M)
    holds, _, _ = discrete_hypothesis_check(ch)
    share_bits = math.log2(M / (M - 1))
    p_share = math.exp(-conditional_min_entropy(JointFinite(Pmf.uniform(M), ch)))
    s = bounds.ShareLeakage((p_share,) * (d + 1), M)
    b = bounds.mgl_multi(s)
    if holds:
        b = min(b, bounds.mgl_refined(s)[0])
    i_inf = bounds.leakage_from_entropy_bound(-math.log(b), M)
    rows = []
    for m in m_values:
        rows.append({
            "m": int(m),
            "ps_cor1": bounds.success_bound_corollary(m, i_inf, M),
            "ps_cor1_approx": bounds.success_bound_approx(m, [share_bits] * (d + 1), M, refined=holds),
            "ps_prop1": bounds.success_bound_prior_art(m, [share_bits] * (d + 1), M),
        })
    return rows
