"""Finite group families with deterministic element indexing.

Every group enumerates its elements as indices 0..order-1 with index 0 the
identity. Indexing is deterministic per family (lexicographic for
permutations, row-major mixed radix for vectors, matrices and products) so
that certificates are reproducible byte for byte.

Composition convention for permutations: (f*g)(x) = f(g(x)), i.e. the right
factor acts first. All families follow the analogous convention.

Multiplication is vectorized over numpy index arrays. Groups at or below the
table cap memoize a full multiplication table; larger groups stay lazy and
compute products family by family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import sympy

from .errors import ResourceError, StructuralError
from .limits import cap

_MAX_ORDER = 1 << 62  # element indices must fit in int64


def _as_idx(a):
    return np.asarray(a, dtype=np.int64)


class FiniteGroup:
    """Base class: immutable after construction, safe to share."""

    order: int
    descriptor: str

    def __init__(self, order: int, descriptor: str):
        if order < 1:
            raise StructuralError(f"group order must be positive, got {order}")
        if order > _MAX_ORDER:
            raise ResourceError(f"group order {order} exceeds index range")
        self.order = order
        self.descriptor = descriptor
        self._table = None
        self._inv_table = None
        self._abelian = None

    # Family-specific vectorized implementations.
    def _mul_impl(self, a, b):
        raise NotImplementedError

    def _inv_impl(self, a):
        raise NotImplementedError

    def element_name(self, i: int) -> str:
        return str(i)

    # Public vectorized ops. Broadcast like numpy ufuncs.
    def mul_vec(self, a, b):
        a, b = _as_idx(a), _as_idx(b)
        if self._table is not None:
            return self._table[a, b]
        if self.order <= cap("TABLE_CAP"):
            return self.table()[a, b]
        a, b = np.broadcast_arrays(a, b)
        return self._mul_impl(a, b)

    def inv_vec(self, a):
        a = _as_idx(a)
        if self.order <= cap("TABLE_CAP"):
            if self._inv_table is None:
                self._inv_table = self._inv_impl(np.arange(self.order))
            return self._inv_table[a]
        return self._inv_impl(a)

    def mul(self, a: int, b: int) -> int:
        self._check_index(a)
        self._check_index(b)
        return int(self.mul_vec(a, b))

    def inv(self, a: int) -> int:
        self._check_index(a)
        return int(self.inv_vec(a))

    def pow(self, g: int, e: int) -> int:
        """g composed with itself e times; e is reduced mod the group order."""
        self._check_index(g)
        e = int(e) % self.order  # valid: order(g) divides |G|
        acc, base = 0, g
        while e:
            if e & 1:
                acc = int(self.mul_vec(acc, base))
            base = int(self.mul_vec(base, base))
            e >>= 1
        return acc

    def pow_vec(self, gs, e: int):
        gs = _as_idx(gs)
        e = int(e) % self.order
        acc = np.zeros_like(gs)
        base = gs.copy()
        while e:
            if e & 1:
                acc = self.mul_vec(acc, base)
            base = self.mul_vec(base, base)
            e >>= 1
        return acc

    def power_matrix(self):
        """P with P[t, g] = g^t for t, g in [0, order); rows built iteratively."""
        n = self.order
        if n * n > 256_000_000:
            raise ResourceError(f"power matrix for order {n} too large")
        out = np.empty((n, n), dtype=np.int64)
        out[0] = 0
        gs = np.arange(n, dtype=np.int64)
        for t in range(1, n):
            out[t] = self.mul_vec(out[t - 1], gs)
        return out

    def table(self):
        """Full multiplication table; only for orders at or below the table cap."""
        if self._table is None:
            n = self.order
            if n > cap("TABLE_CAP"):
                raise ResourceError(
                    f"order {n} exceeds the multiplication table cap {cap('TABLE_CAP')}"
                )
            i = np.repeat(np.arange(n, dtype=np.int64), n)
            j = np.tile(np.arange(n, dtype=np.int64), n)
            self._table = self._mul_impl(i, j).reshape(n, n)
        return self._table

    def is_abelian(self) -> bool:
        if self._abelian is None:
            n = self.order
            if n > cap("DENSE_VERIFY_CAP"):
                raise ResourceError(f"abelian check capped at {cap('DENSE_VERIFY_CAP')}")
            gs = np.arange(n, dtype=np.int64)
            ok = True
            for g in range(1, n):
                if not np.array_equal(self.mul_vec(g, gs), self.mul_vec(gs, g)):
                    ok = False
                    break
            self._abelian = ok
        return self._abelian

    def element(self, i: int) -> "Element":
        self._check_index(i)
        return Element(self, int(i))

    def _check_index(self, i):
        if not 0 <= int(i) < self.order:
            raise StructuralError(f"index {i} out of range for {self.descriptor}")

    def __repr__(self):
        return f"<{type(self).__name__} {self.descriptor} order={self.order}>"

    def __eq__(self, other):
        return isinstance(other, FiniteGroup) and self is other

    def __hash__(self):
        return id(self)


@dataclass(frozen=True)
class Element:
    """Thin wrapper tying an index to its owning group."""

    group: FiniteGroup
    index: int

    def __mul__(self, other: "Element") -> "Element":
        if other.group is not self.group:
            raise StructuralError(
                f"elements of {self.group.descriptor} and {other.group.descriptor} never mix"
            )
        return Element(self.group, self.group.mul(self.index, other.index))

    def inverse(self) -> "Element":
        return Element(self.group, self.group.inv(self.index))

    def __pow__(self, e: int) -> "Element":
        return Element(self.group, self.group.pow(self.index, e))

    def __repr__(self):
        return f"{self.group.element_name(self.index)}"


class CyclicGroup(FiniteGroup):
    """Z_m, index = residue."""

    def __init__(self, m: int):
        super().__init__(m, f"cyclic:{m}")
        self.modulus = m

    def _mul_impl(self, a, b):
        return (a + b) % self.modulus

    def _inv_impl(self, a):
        return (-a) % self.modulus


class AbelianVectorGroup(FiniteGroup):
    """Z_m^n, index = row-major mixed radix (first coordinate most significant)."""

    def __init__(self, m: int, n: int):
        if m < 1 or n < 1:
            raise StructuralError(f"vec:{m}:{n} needs m, n >= 1")
        order = m**n
        super().__init__(order, f"vec:{m}:{n}")
        self.modulus = m
        self.dim = n
        self._weights = m ** np.arange(n - 1, -1, -1, dtype=np.int64)

    def decode(self, a):
        """Index array -> digit matrix of shape (..., n)."""
        a = _as_idx(a)
        digits = np.empty(a.shape + (self.dim,), dtype=np.int64)
        rem = a.copy()
        for i in range(self.dim - 1, -1, -1):
            digits[..., i] = rem % self.modulus
            rem //= self.modulus
        return digits

    def encode(self, digits):
        digits = _as_idx(digits)
        return digits @ self._weights

    def _mul_impl(self, a, b):
        return self.encode((self.decode(a) + self.decode(b)) % self.modulus)

    def _inv_impl(self, a):
        return self.encode((-self.decode(a)) % self.modulus)

    def element_name(self, i):
        return str(tuple(int(d) for d in self.decode(i)))


class DirectProductGroup(FiniteGroup):
    """G_1 x ... x G_r, index = mixed radix over factor orders, first factor most significant."""

    def __init__(self, factors):
        factors = list(factors)
        if not factors:
            raise StructuralError("product needs at least one factor")
        order = 1
        for f in factors:
            order *= f.order
        desc = "prod(" + ",".join(f.descriptor for f in factors) + ")"
        super().__init__(order, desc)
        self.factors = factors

    def decode(self, a):
        a = _as_idx(a)
        parts = []
        rem = a.copy()
        for f in reversed(self.factors):
            parts.append(rem % f.order)
            rem //= f.order
        return list(reversed(parts))

    def encode(self, parts):
        acc = np.zeros_like(_as_idx(parts[0]))
        for f, part in zip(self.factors, parts):
            acc = acc * f.order + _as_idx(part)
        return acc

    def _mul_impl(self, a, b):
        pa, pb = self.decode(a), self.decode(b)
        return self.encode([f.mul_vec(x, y) for f, x, y in zip(self.factors, pa, pb)])

    def _inv_impl(self, a):
        return self.encode([f.inv_vec(x) for f, x in zip(self.factors, self.decode(a))])

    def element_name(self, i):
        parts = self.decode(np.asarray(i))
        return "(" + ", ".join(
            f.element_name(int(p)) for f, p in zip(self.factors, parts)
        ) + ")"


class SymmetricGroup(FiniteGroup):
    """S_k on {0..k-1}, elements enumerated in lexicographic one-line order."""

    _MAX_K = 9

    def __init__(self, k: int):
        if k < 1:
            raise StructuralError(f"sym:{k} needs k >= 1")
        if k > self._MAX_K:
            raise ResourceError(f"symmetric group capped at k = {self._MAX_K}")
        super().__init__(math.factorial(k), f"sym:{k}")
        self.k = k
        import itertools

        self._perms = np.array(
            list(itertools.permutations(range(k))), dtype=np.int64
        )
        self._fact = np.array(
            [math.factorial(k - 1 - i) for i in range(k)], dtype=np.int64
        )

    def _rank(self, perms):
        # Lehmer code: rank = sum_i #{j > i : pi_j < pi_i} * (k-1-i)!
        flat = perms.reshape(-1, self.k)
        out = np.empty(len(flat), dtype=np.int64)
        for lo in range(0, len(flat), 65536):
            chunk = flat[lo : lo + 65536]
            smaller = (chunk[:, :, None] > chunk[:, None, :]) & (
                np.arange(self.k)[:, None] < np.arange(self.k)[None, :]
            )
            out[lo : lo + len(chunk)] = smaller.sum(axis=2) @ self._fact
        return out.reshape(perms.shape[:-1])

    def _mul_impl(self, a, b):
        # (a*b)(x) = a(b(x))
        pa, pb = self._perms[a], self._perms[b]
        return self._rank(np.take_along_axis(pa, pb, axis=-1))

    def _inv_impl(self, a):
        return self._rank(np.argsort(self._perms[a], axis=-1))

    def element_name(self, i):
        return str(tuple(int(x) for x in self._perms[i]))


class DihedralGroup(FiniteGroup):
    """D_k of order 2k: r^j s^f with index f*k + j; s r = r^{-1} s."""

    def __init__(self, k: int):
        if k < 1:
            raise StructuralError(f"dihedral:{k} needs k >= 1")
        super().__init__(2 * k, f"dihedral:{k}")
        self.k = k

    def _split(self, a):
        return a % self.k, a // self.k

    def _mul_impl(self, a, b):
        k = self.k
        j1, f1 = self._split(a)
        j2, f2 = self._split(b)
        sign = 1 - 2 * f1
        return ((j1 + sign * j2) % k) + k * ((f1 + f2) % 2)

    def _inv_impl(self, a):
        k = self.k
        j, f = self._split(a)
        return np.where(f == 0, (-j) % k, a)

    def element_name(self, i):
        j, f = int(i) % self.k, int(i) // self.k
        rot = f"r^{j}" if j else "e"
        return rot if f == 0 else (f"s r^{j}" if j else "s")


class UnitriangularGroup(FiniteGroup):
    """Upper unitriangular n x n matrices over F_p; index = row-major mixed radix
    over the n(n-1)/2 above-diagonal entries."""

    def __init__(self, p: int, n: int):
        if not sympy.isprime(p):
            raise StructuralError(f"ut:{p}:{n} needs prime p")
        if n < 2:
            raise StructuralError(f"ut:{p}:{n} needs n >= 2")
        self.p = p
        self.n = n
        self._positions = [(i, j) for i in range(n) for j in range(i + 1, n)]
        m = len(self._positions)
        order = p**m
        if order > _MAX_ORDER:
            raise ResourceError(f"ut:{p}:{n} order {order} exceeds index range")
        super().__init__(order, f"ut:{p}:{n}")
        self._weights = p ** np.arange(m - 1, -1, -1, dtype=np.int64)

    def decode(self, a):
        """Index array -> batch of n x n matrices."""
        a = _as_idx(a)
        m = len(self._positions)
        digits = np.empty(a.shape + (m,), dtype=np.int64)
        rem = a.copy()
        for i in range(m - 1, -1, -1):
            digits[..., i] = rem % self.p
            rem //= self.p
        mats = np.zeros(a.shape + (self.n, self.n), dtype=np.int64)
        idx = np.arange(self.n)
        mats[..., idx, idx] = 1
        for t, (i, j) in enumerate(self._positions):
            mats[..., i, j] = digits[..., t]
        return mats

    def encode(self, mats):
        mats = _as_idx(mats)
        digits = np.stack(
            [mats[..., i, j] for (i, j) in self._positions], axis=-1
        )
        return digits @ self._weights

    def _mul_impl(self, a, b):
        return self.encode(np.matmul(self.decode(a), self.decode(b)) % self.p)

    def _inv_impl(self, a):
        mats = self.decode(a)
        eye = np.zeros_like(mats)
        idx = np.arange(self.n)
        eye[..., idx, idx] = 1
        nil = mats - eye  # strictly upper, nilpotent
        inv = eye.copy()
        for _ in range(self.n - 1):
            inv = (eye - np.matmul(nil, inv)) % self.p
        return self.encode(inv)

    def element_name(self, i):
        return str([[int(x) for x in row] for row in self.decode(np.asarray(i))])


class SubgroupGroup(FiniteGroup):
    """A subgroup of `parent` on its own indices, sorted by parent index."""

    def __init__(self, parent: FiniteGroup, elements):
        elements = np.unique(_as_idx(elements))
        if elements[0] != 0:
            raise StructuralError("subgroup must contain the identity")
        prods = parent.mul_vec(elements[:, None], elements[None, :])
        if not np.isin(prods, elements).all():
            raise StructuralError("element list is not closed under multiplication")
        super().__init__(
            len(elements), f"subgroup-of({parent.descriptor};{len(elements)})"
        )
        self.parent = parent
        self.elements = elements
        self._pos = np.full(parent.order, -1, dtype=np.int64)
        self._pos[elements] = np.arange(len(elements))

    def _mul_impl(self, a, b):
        return self._pos[self.parent.mul_vec(self.elements[a], self.elements[b])]

    def _inv_impl(self, a):
        return self._pos[self.parent.inv_vec(self.elements[a])]

    def element_name(self, i):
        return self.parent.element_name(int(self.elements[i]))


class QuotientGroup(FiniteGroup):
    """G/N on coset indices; cosets ordered by their minimal parent element index."""

    def __init__(self, parent: FiniteGroup, normal_elements):
        normal_elements = np.unique(_as_idx(normal_elements))
        if not is_normal(parent, normal_elements):
            raise StructuralError("quotient requires a normal subgroup")
        n = parent.order
        # minimal element of each coset xN
        gs = np.arange(n, dtype=np.int64)
        coset_min = parent.mul_vec(gs[:, None], normal_elements[None, :]).min(axis=1)
        reps = np.unique(coset_min)  # sorted; identity coset (rep 0) first
        coset_of = np.searchsorted(reps, coset_min)
        super().__init__(
            len(reps), f"quotient-of({parent.descriptor};{len(normal_elements)})"
        )
        self.parent = parent
        self.normal_elements = normal_elements
        self.reps = reps
        self.coset_of = coset_of  # parent index -> quotient index

    def _mul_impl(self, a, b):
        return self.coset_of[self.parent.mul_vec(self.reps[a], self.reps[b])]

    def _inv_impl(self, a):
        return self.coset_of[self.parent.inv_vec(self.reps[a])]

    def element_name(self, i):
        return f"[{self.parent.element_name(int(self.reps[i]))}]"


@dataclass
class SubgroupChain:
    """A descending chain of subgroups of `group`, each given as a sorted index array."""

    group: FiniteGroup
    chain: list = field(default_factory=list)
    solvable: bool = False

    @property
    def length(self) -> int:
        return len(self.chain) - 1


def parse_group(descriptor: str) -> FiniteGroup:
    """Parse the group descriptor grammar: cyclic:m, vec:m:n, sym:k, dihedral:k,
    ut:p:n, prod(a,b,...)."""
    desc = descriptor.strip()
    if desc.startswith("prod(") and desc.endswith(")"):
        inner = desc[5:-1]
        parts, depth, start = [], 0, 0
        for i, ch in enumerate(inner):
            if ch == "(":
                depth += 1
            elif ch == ")":
                depth -= 1
            elif ch == "," and depth == 0:
                parts.append(inner[start:i])
                start = i + 1
        parts.append(inner[start:])
        if any(not p.strip() for p in parts):
            raise StructuralError(f"malformed product descriptor {descriptor!r}")
        return DirectProductGroup([parse_group(p) for p in parts])
    bits = desc.split(":")
    kind, args = bits[0], bits[1:]
    try:
        nums = [int(x) for x in args]
    except ValueError:
        raise StructuralError(f"non-integer parameter in descriptor {descriptor!r}")
    if kind == "cyclic" and len(nums) == 1:
        return CyclicGroup(nums[0])
    if kind == "vec" and len(nums) == 2:
        return AbelianVectorGroup(nums[0], nums[1])
    if kind == "sym" and len(nums) == 1:
        return SymmetricGroup(nums[0])
    if kind == "dihedral" and len(nums) == 1:
        return DihedralGroup(nums[0])
    if kind == "ut" and len(nums) == 2:
        return UnitriangularGroup(nums[0], nums[1])
    raise StructuralError(f"unknown group descriptor {descriptor!r}")


def subgroup_closure(G: FiniteGroup, generators) -> np.ndarray:
    """Sorted element indices of the subgroup generated by `generators`."""
    cur = np.unique(np.concatenate([[0], _as_idx(generators).ravel()]))
    while True:
        prods = np.unique(G.mul_vec(cur[:, None], cur[None, :]))
        if len(prods) == len(cur):
            return cur
        cur = prods


def derived_subgroup(G: FiniteGroup, elements) -> np.ndarray:
    """[H, H] for the subgroup H given by `elements`, as sorted G-indices."""
    h = _as_idx(elements)
    hi = G.inv_vec(h)
    # commutators a^-1 b^-1 a b over all pairs, chunked over a
    comms = []
    chunk = max(1, 4_000_000 // max(1, len(h)))
    for lo in range(0, len(h), chunk):
        a, ai = h[lo : lo + chunk, None], hi[lo : lo + chunk, None]
        left = G.mul_vec(ai, hi[None, :])
        right = G.mul_vec(a, h[None, :])
        comms.append(np.unique(G.mul_vec(left, right)))
    return subgroup_closure(G, np.unique(np.concatenate(comms)))


def derived_series(G: FiniteGroup) -> SubgroupChain:
    """G > [G,G] > ... until the chain stabilizes; solvable iff it reaches 1."""
    chain = [np.arange(G.order, dtype=np.int64)]
    while True:
        nxt = derived_subgroup(G, chain[-1])
        if len(nxt) == len(chain[-1]):
            break
        chain.append(nxt)
        if len(nxt) == 1:
            break
    return SubgroupChain(group=G, chain=chain, solvable=len(chain[-1]) == 1)


def is_subgroup(G: FiniteGroup, elements) -> bool:
    h = np.unique(_as_idx(elements))
    if len(h) == 0 or h[0] != 0:
        return False
    prods = G.mul_vec(h[:, None], h[None, :])
    return bool(np.isin(prods, h).all())


def is_normal(G: FiniteGroup, elements) -> bool:
    h = np.unique(_as_idx(elements))
    if not is_subgroup(G, h):
        raise StructuralError("not a subgroup")
    gs = np.arange(G.order, dtype=np.int64)
    conj = G.mul_vec(G.mul_vec(gs[:, None], h[None, :]), G.inv_vec(gs)[:, None])
    return bool(np.isin(conj, h).all())


def transversal(G: FiniteGroup, normal_elements) -> np.ndarray:
    """One representative per coset of N (the minimal element index), sorted so the
    identity (representing N itself) comes first."""
    h = np.unique(_as_idx(normal_elements))
    if not is_normal(G, h):
        raise StructuralError("transversal requires a normal subgroup")
    gs = np.arange(G.order, dtype=np.int64)
    coset_min = G.mul_vec(gs[:, None], h[None, :]).min(axis=1)
    return np.unique(coset_min)


def quotient_group(G: FiniteGroup, normal_elements) -> QuotientGroup:
    return QuotientGroup(G, normal_elements)


def elementary_abelian_structure(G: FiniteGroup):
    """(p, t, basis indices) if G is isomorphic to Z_p^t, else None."""
    n = G.order
    if n == 1 or not G.is_abelian():
        return None
    factors = sympy.factorint(n)
    if len(factors) != 1:
        return None
    (p, t), = factors.items()
    gs = np.arange(n, dtype=np.int64)
    if np.any(G.pow_vec(gs, p) != 0):
        return None
    basis, span = [], np.array([0], dtype=np.int64)
    for x in range(1, n):
        if len(basis) == t:
            break
        if x in span:
            continue
        basis.append(x)
        powers = np.array([G.pow(x, e) for e in range(p)], dtype=np.int64)
        span = np.unique(G.mul_vec(span[:, None], powers[None, :]))
    assert len(basis) == t and len(span) == n
    return p, t, basis
