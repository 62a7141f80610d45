"""Finite Abelian groups presented as direct products of cyclic groups.

Elements are plain ``int`` indices in ``[0, M)``; the coordinate tuple
``(c_1, ..., c_t)`` with ``0 <= c_j < n_j`` is encoded in mixed radix with
the first coordinate most significant.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import prod

import numpy as np

from .errors import CapabilityError, DomainError, ValidationError

#: Largest group order for which subgroup queries enumerate elements.
ENUMERATION_GUARD = 256


@dataclass(frozen=True)
class FiniteAbelianGroup:
    cyclic_orders: tuple[int, ...]

    def __post_init__(self):
        orders = tuple(int(n) for n in self.cyclic_orders)
        if not orders or any(n < 2 for n in orders):
            raise ValidationError(f"cyclic orders must all be >= 2, got {self.cyclic_orders!r}")
        object.__setattr__(self, "cyclic_orders", orders)

    @classmethod
    def parse(cls, spec: str) -> "FiniteAbelianGroup":
        """Parse ``"14"`` or ``"2,2,2,2"`` into a group."""
        try:
            orders = tuple(int(tok) for tok in str(spec).split(","))
        except ValueError as exc:
            raise ValidationError(f"bad group spec {spec!r}") from exc
        return cls(orders)

    @classmethod
    def cyclic(cls, n: int) -> "FiniteAbelianGroup":
        return cls((n,))

    @property
    def order(self) -> int:
        return prod(self.cyclic_orders)

    def __len__(self):
        return self.order

    def __str__(self):
        return " x ".join(f"Z_{n}" for n in self.cyclic_orders)

    # -- encoding -------------------------------------------------------
    @cached_property
    def _coords(self) -> np.ndarray:
        idx = np.arange(self.order)
        cols = []
        for n in reversed(self.cyclic_orders):
            cols.append(idx % n)
            idx = idx // n
        return np.stack(cols[::-1], axis=1)

    @cached_property
    def _radix(self) -> np.ndarray:
        weights = [1]
        for n in reversed(self.cyclic_orders[1:]):
            weights.append(weights[-1] * n)
        return np.array(weights[::-1])

    def encode(self, coords) -> int:
        coords = tuple(int(c) for c in coords)
        if len(coords) != len(self.cyclic_orders) or any(
            not 0 <= c < n for c, n in zip(coords, self.cyclic_orders)
        ):
            raise DomainError(f"coordinates {coords} invalid for {self}")
        return int(np.dot(coords, self._radix))

    def decode(self, g: int) -> tuple[int, ...]:
        return tuple(int(c) for c in self._coords[self._check(g)])

    def _check(self, g) -> int:
        g = int(g)
        if not 0 <= g < self.order:
            raise DomainError(f"element index {g} out of range for group of order {self.order}")
        return g

    # -- arithmetic -----------------------------------------------------
    @cached_property
    def add_table(self) -> np.ndarray:
        """Cayley table: ``add_table[g, h]`` is the index of ``g + h``."""
        c = self._coords
        n = np.array(self.cyclic_orders)
        s = (c[:, None, :] + c[None, :, :]) % n
        tab = (s @ self._radix).astype(np.intp)
        tab.setflags(write=False)
        return tab

    @cached_property
    def neg_table(self) -> np.ndarray:
        n = np.array(self.cyclic_orders)
        tab = ((-self._coords) % n) @ self._radix
        return tab.astype(np.intp)

    @cached_property
    def sub_table(self) -> np.ndarray:
        """``sub_table[g, h]`` is the index of ``g - h``."""
        return self.add_table[:, self.neg_table]

    def add(self, g: int, h: int) -> int:
        return int(self.add_table[self._check(g), self._check(h)])

    def neg(self, g: int) -> int:
        return int(self.neg_table[self._check(g)])

    def sub(self, g: int, h: int) -> int:
        return self.add(g, self.neg(h))

    @property
    def identity(self) -> int:
        return 0

    def element_order(self, g: int) -> int:
        coords = self.decode(g)
        out = 1
        for c, n in zip(coords, self.cyclic_orders):
            k = n // np.gcd(c, n)
            out = out * k // np.gcd(out, k)
        return int(out)

    # -- subgroups ------------------------------------------------------
    def generated_subgroup(self, gens) -> frozenset[int]:
        """Smallest subgroup containing ``gens`` (closure under addition)."""
        self._guard()
        members = {0}
        frontier = [0]
        gens = [self._check(g) for g in gens]
        tab = self.add_table
        while frontier:
            nxt = []
            for h in frontier:
                for g in gens:
                    s = int(tab[h, g])
                    if s not in members:
                        members.add(s)
                        nxt.append(s)
            frontier = nxt
        return frozenset(members)

    def is_subgroup(self, elems) -> bool:
        elems = set(int(e) for e in elems)
        if 0 not in elems:
            return False
        tab = self.add_table
        neg = self.neg_table
        return all(int(neg[g]) in elems for g in elems) and all(
            int(tab[g, h]) in elems for g in elems for h in elems
        )

    def _guard(self):
        if self.order > ENUMERATION_GUARD:
            raise CapabilityError(
                f"group order {self.order} exceeds enumeration guard {ENUMERATION_GUARD}"
            )

    def coset_support_witness(self, support, target_order: int):
        """Find a subgroup ``H`` with ``|H| = target_order`` and ``c`` with ``support ⊆ c + H``.

        Returns ``(H, c)`` with ``H`` a frozenset of indices and ``c`` the
        smallest element of the coset, or ``None`` when no such pair exists.
        Raises :class:`CapabilityError` above the enumeration guard.
        """
        self._guard()
        support = sorted({self._check(s) for s in support})
        target_order = int(target_order)
        if target_order < 1 or self.order % target_order or len(support) > target_order:
            return None
        base = support[0] if support else 0
        gens = [self.sub(s, base) for s in support]
        H = self.generated_subgroup(gens)
        if target_order % len(H):
            return None
        # Abelian: a subgroup of order target containing H always exists when
        # |H| divides target and target divides M; grow H one element at a time.
        for g in range(self.order):
            if len(H) == target_order:
                break
            if g in H:
                continue
            J = self.generated_subgroup(gens + [g])
            if target_order % len(J) == 0:
                H = J
                gens.append(g)
        if len(H) != target_order:  # pragma: no cover - excluded by the argument above
            return None
        coset = [self.add(base, h) for h in H]
        return frozenset(H), min(coset)

    def has_subgroup_of_order(self, n: int) -> bool:
        # Finite Abelian groups have subgroups of every order dividing M.
        return n >= 1 and self.order % n == 0
