"""Sparse multi-qudit states over a group-element basis.

A register is an ordered list of named sites sharing one finite group; a
state is a sparse map from basis keys (one element index per site) to
complex amplitudes, stored as an integer key matrix plus an amplitude
vector so that gates vectorize.  States are values: every operation
returns a new state and never mutates its input.  Stored states are kept
canonical — keys unique and lexicographically sorted, amplitudes pruned
below 1e-14.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .groups import FiniteGroup, Irrep

__all__ = [
    "PRUNE_TOL",
    "DENSE_CAP",
    "RDM_CAP",
    "Register",
    "SparseState",
    "LocalOp",
    "group_basis_state",
    "trivial_irrep_state",
    "rep_basis_state",
    "apply_local",
    "apply_xl",
    "apply_xr",
    "apply_t",
    "apply_zrep",
    "apply_cmult",
    "inner_product",
    "residual_norm",
    "fidelity",
    "project_site",
    "tensor",
    "rep_basis_order",
    "basis_matrix_to_rep",
    "change_basis",
    "reduced_density_matrix",
    "schmidt_data",
    "site_marginal",
    "random_state",
    "dump_state",
    "load_state",
]

PRUNE_TOL = 1e-14
DENSE_CAP = 2**20
RDM_CAP = 4096


@dataclass(frozen=True)
class Register:
    group: FiniteGroup
    sites: tuple

    def __post_init__(self) -> None:
        if len(set(self.sites)) != len(self.sites):
            raise ValueError("register sites must be unique")

    def axis(self, site) -> int:
        try:
            return self.sites.index(site)
        except ValueError:
            raise KeyError(f"site {site!r} not in register")

    def drop(self, site) -> "Register":
        return Register(self.group, tuple(s for s in self.sites if s != site))

    @property
    def width(self) -> int:
        return len(self.sites)

    @property
    def dimension(self) -> int:
        return self.group.order ** len(self.sites)


def _canonicalize(keys: np.ndarray, amps: np.ndarray, order: int):
    """Sort rows lexicographically, merge duplicates, prune tiny amplitudes.

    Returns (keys, amps, codes) where ``codes`` is the sorted packed-int64
    row encoding when it was computed (None on the wide lexsort path)."""
    m, n = keys.shape
    if m == 0:
        return keys.reshape(0, n), amps.reshape(0), None
    if n == 0:
        total = amps.sum()
        if abs(total) <= PRUNE_TOL:
            return keys.reshape(0, 0), amps[:0], None
        return np.zeros((1, 0), dtype=keys.dtype), np.array([total]), None
    # pack into int64 codes when they fit; fall back to column lexsort
    if n * np.log2(order) < 62:
        codes = _pack(keys, order)
        perm = np.argsort(codes, kind="stable")
        codes = codes[perm]
        boundary = np.empty(len(codes), dtype=bool)
        boundary[0] = True
        np.not_equal(codes[1:], codes[:-1], out=boundary[1:])
    else:
        codes = None
        perm = np.lexsort(keys.T[::-1])
        sk = keys[perm]
        boundary = np.empty(m, dtype=bool)
        boundary[0] = True
        np.any(sk[1:] != sk[:-1], axis=1, out=boundary[1:])
    keys = keys[perm]
    amps = amps[perm]
    starts = np.flatnonzero(boundary)
    merged = np.add.reduceat(amps, starts)
    keys = keys[starts]
    keep = np.abs(merged) > PRUNE_TOL
    if codes is not None:
        codes = codes[starts][keep]
    return np.ascontiguousarray(keys[keep]), merged[keep], codes


class SparseState:
    """Immutable sparse state vector.  ``keys`` is (m, width) int16,
    ``amps`` is (m,) complex128; rows are unique and sorted."""

    __slots__ = ("register", "keys", "amps", "_codes")

    def __init__(self, register: Register, keys: np.ndarray, amps: np.ndarray,
                 canonical: bool = False):
        keys = np.asarray(keys, dtype=np.int16).reshape(-1, register.width)
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        if keys.shape[0] != amps.shape[0]:
            raise ValueError("keys/amps length mismatch")
        codes = None
        if not canonical:
            keys, amps, codes = _canonicalize(keys, amps, register.group.order)
        object.__setattr__(self, "register", register)
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "amps", amps)
        object.__setattr__(self, "_codes", codes)

    def __setattr__(self, *a):  # pragma: no cover - guard
        raise AttributeError("SparseState is immutable")

    @classmethod
    def from_dict(cls, register: Register, entries: Mapping[tuple, complex]) -> "SparseState":
        if not entries:
            return cls.zero(register)
        keys = np.array([list(k) for k in entries], dtype=np.int16)
        amps = np.array(list(entries.values()), dtype=complex)
        return cls(register, keys, amps)

    @classmethod
    def zero(cls, register: Register) -> "SparseState":
        return cls(register,
                   np.zeros((0, register.width), dtype=np.int16),
                   np.zeros(0, dtype=complex), canonical=True)

    # --- Inspection ---

    def __len__(self) -> int:
        return self.keys.shape[0]

    def items(self) -> Iterator[tuple[tuple, complex]]:
        for row, a in zip(self.keys, self.amps):
            yield tuple(int(x) for x in row), complex(a)

    def to_dict(self) -> dict:
        return dict(self.items())

    def amplitude(self, key: Sequence[int]) -> complex:
        row = np.asarray(key, dtype=np.int16)
        hit = np.flatnonzero(np.all(self.keys == row, axis=1))
        return complex(self.amps[hit[0]]) if hit.size else 0.0

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def packed_codes(self):
        """Sorted packed-int64 row codes, cached; None when the register is
        too wide for a 62-bit packing."""
        if self._codes is None:
            order = self.register.group.order
            if self.register.width * np.log2(order) >= 62:
                return None
            object.__setattr__(self, "_codes", _pack(self.keys, order))
        return self._codes

    def normalized(self) -> "SparseState":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero state")
        out = SparseState(self.register, self.keys, self.amps / n, canonical=True)
        object.__setattr__(out, "_codes", self._codes)
        return out

    def scaled(self, c: complex) -> "SparseState":
        out = SparseState(self.register, self.keys, self.amps * c, canonical=abs(c) > 0)
        if abs(c) > 0:
            object.__setattr__(out, "_codes", self._codes)
        return out

    def add(self, other: "SparseState") -> "SparseState":
        _check_same_register(self, other)
        return SparseState(
            self.register,
            np.concatenate([self.keys, other.keys]),
            np.concatenate([self.amps, other.amps]),
        )

    def dense(self) -> np.ndarray:
        """Dense vector in row-major site order; guarded by DENSE_CAP."""
        dim = self.register.dimension
        if dim > DENSE_CAP:
            raise ValueError(f"dense dimension {dim} exceeds cap {DENSE_CAP}")
        vec = np.zeros(dim, dtype=complex)
        vec[self.packed_codes()] = self.amps
        return vec


def _check_same_register(a: SparseState, b: SparseState) -> None:
    if a.register.sites != b.register.sites or a.register.group.name != b.register.group.name:
        raise ValueError("states live on different registers")


def _pack(keys: np.ndarray, order: int) -> np.ndarray:
    codes = np.zeros(keys.shape[0], dtype=np.int64)
    for c in range(keys.shape[1]):
        codes *= order
        codes += keys[:, c]
    return codes


# --- Constructors ---


def group_basis_state(register: Register, key: Sequence[int]) -> SparseState:
    key = tuple(int(k) for k in key)
    if len(key) != register.width or any(not 0 <= k < register.group.order for k in key):
        raise ValueError(f"invalid basis key {key}")
    return SparseState.from_dict(register, {key: 1.0})


def trivial_irrep_state(register: Register) -> SparseState:
    """Equal superposition over every basis key: one copy of the
    uniform one-site state on each register site."""
    n = register.group.order
    w = register.width
    keys = np.indices((n,) * w, dtype=np.int16).reshape(w, -1).T if w else np.zeros((1, 0), np.int16)
    amps = np.full(keys.shape[0], n ** (-w / 2), dtype=complex)
    return SparseState(register, keys, amps, canonical=w > 0)


def rep_basis_state(register: Register, site, irrep: Irrep, i: int, j: int) -> SparseState:
    """sum_g sqrt(d/|G|) [irrep(g)]_{ij} |g> at ``site`` (register must be
    the single-site register of that site)."""
    if register.width != 1 or register.sites[0] != site:
        raise ValueError("rep_basis_state builds single-site registers")
    if not (0 <= i < irrep.dim and 0 <= j < irrep.dim):
        raise ValueError("matrix indices out of range")
    n = register.group.order
    keys = np.arange(n, dtype=np.int16).reshape(n, 1)
    amps = np.sqrt(irrep.dim / n) * irrep.matrices[:, i, j]
    return SparseState(register, keys, amps)


def tensor(a: SparseState, b: SparseState) -> SparseState:
    if a.register.group.name != b.register.group.name:
        raise ValueError("tensor factors must share the group")
    reg = Register(a.register.group, a.register.sites + b.register.sites)
    ka = np.repeat(a.keys, len(b), axis=0)
    kb = np.tile(b.keys, (len(a), 1))
    keys = np.concatenate([ka, kb], axis=1)
    amps = np.repeat(a.amps, len(b)) * np.tile(b.amps, len(a))
    return SparseState(reg, keys, amps)


def random_state(register: Register, rng: np.random.Generator,
                 n_keys: int = 200) -> SparseState:
    """Seeded random sparse state: up to ``n_keys`` distinct random keys (the
    whole basis if smaller) with standard-normal complex amplitudes."""
    n = register.group.order
    w = register.width
    if w * np.log2(n) <= 20 and register.dimension <= 4 * n_keys:
        dim = register.dimension
        count = min(n_keys, dim)
        codes = rng.permutation(dim)[:count].astype(np.int64)
        keys = np.zeros((count, w), dtype=np.int16)
        rem = codes
        for c in range(w - 1, -1, -1):
            keys[:, c] = rem % n
            rem //= n
    else:
        keys = np.unique(
            rng.integers(0, n, size=(2 * n_keys, w)).astype(np.int16), axis=0
        )[:n_keys]
    amps = rng.normal(size=len(keys)) + 1j * rng.normal(size=len(keys))
    return SparseState(register, keys, amps).normalized()


# --- Local operators (one site) ---


@dataclass(frozen=True)
class LocalOp:
    """kind in {"xl", "xr", "t", "zrep"}.

    xl(g): |h> -> |gh>.  xr(g): |h> -> |h g^-1>.  t(g): projector on |g>.
    zrep(irrep, i, j): diagonal phase/weight [irrep(h)]_{ij}.
    """

    kind: str
    site: object
    g: int = 0
    irrep: Irrep | None = None
    i: int = 0
    j: int = 0


def apply_xl(state: SparseState, site, g: int) -> SparseState:
    G = state.register.group
    c = state.register.axis(site)
    keys = state.keys.copy()
    keys[:, c] = G.table[g, keys[:, c]]
    return SparseState(state.register, keys, state.amps.copy())


def apply_xr(state: SparseState, site, g: int) -> SparseState:
    G = state.register.group
    c = state.register.axis(site)
    keys = state.keys.copy()
    keys[:, c] = G.table[keys[:, c], G.inverse[g]]
    return SparseState(state.register, keys, state.amps.copy())


def apply_t(state: SparseState, site, g: int) -> SparseState:
    c = state.register.axis(site)
    mask = state.keys[:, c] == g
    return SparseState(state.register, state.keys[mask], state.amps[mask],
                       canonical=True)


def apply_zrep(state: SparseState, site, irrep: Irrep, i: int, j: int) -> SparseState:
    c = state.register.axis(site)
    weights = irrep.matrices[state.keys[:, c], i, j]
    return SparseState(state.register, state.keys.copy(), state.amps * weights)


def apply_local(state: SparseState, op: LocalOp) -> SparseState:
    if op.kind == "xl":
        return apply_xl(state, op.site, op.g)
    if op.kind == "xr":
        return apply_xr(state, op.site, op.g)
    if op.kind == "t":
        return apply_t(state, op.site, op.g)
    if op.kind == "zrep":
        assert op.irrep is not None
        return apply_zrep(state, op.site, op.irrep, op.i, op.j)
    raise ValueError(f"unknown local op kind {op.kind!r}")


def apply_cmult(state: SparseState, control, target, sense: str) -> SparseState:
    """Controlled multiplication.  sense "left": |g>|h> -> |g>|gh>;
    sense "right": |g>|h> -> |g>|h g^-1>.  Control site is unchanged."""
    if control == target:
        raise ValueError("control and target must differ")
    G = state.register.group
    cc = state.register.axis(control)
    ct = state.register.axis(target)
    keys = state.keys.copy()
    if sense == "left":
        keys[:, ct] = G.table[keys[:, cc], keys[:, ct]]
    elif sense == "right":
        keys[:, ct] = G.table[keys[:, ct], G.inverse[keys[:, cc]]]
    else:
        raise ValueError(f"unknown sense {sense!r}")
    return SparseState(state.register, keys, state.amps.copy())


# --- Inner products and projections ---


def inner_product(a: SparseState, b: SparseState) -> complex:
    """<a|b> (conjugate-linear in the first argument)."""
    _check_same_register(a, b)
    if len(a) == 0 or len(b) == 0:
        return 0.0
    ca, cb = a.packed_codes(), b.packed_codes()
    if ca is not None:
        ia = np.searchsorted(ca, cb)
        ia = np.clip(ia, 0, len(ca) - 1)
        hit = ca[ia] == cb
        return complex(np.sum(np.conj(a.amps[ia[hit]]) * b.amps[hit]))
    da = a.to_dict()
    return complex(sum(np.conj(da.get(k, 0.0)) * v for k, v in b.items()))


def residual_norm(a: SparseState, b: SparseState) -> float:
    """||a - b|| computed amplitude-wise on the canonical forms.

    Equivalent to ``a.add(b.scaled(-1)).norm()`` but without re-sorting the
    concatenation, and exact: amplitudes subtract key by key, so residuals
    far below the state norm stay resolvable."""
    _check_same_register(a, b)
    if len(a) == 0:
        return b.norm()
    if len(b) == 0:
        return a.norm()
    ca, cb = a.packed_codes(), b.packed_codes()
    if ca is None:
        return a.add(b.scaled(-1.0)).norm()
    ia = np.clip(np.searchsorted(ca, cb), 0, len(ca) - 1)
    hit = ca[ia] == cb
    total = np.sum(np.abs(b.amps[hit] - a.amps[ia[hit]]) ** 2)
    total += np.sum(np.abs(b.amps[~hit]) ** 2)
    only_a = np.ones(len(ca), dtype=bool)
    only_a[ia[hit]] = False
    total += np.sum(np.abs(a.amps[only_a]) ** 2)
    return float(np.sqrt(total))


def fidelity(a: SparseState, b: SparseState) -> float:
    """|<a|b>|^2 / (<a|a><b|b>): phase- and scale-insensitive."""
    na, nb = a.norm(), b.norm()
    if na == 0 or nb == 0:
        raise ValueError("fidelity of a zero-norm state is undefined")
    return float(abs(inner_product(a, b)) ** 2 / (na**2 * nb**2))


def project_site(state: SparseState, site, vec: np.ndarray) -> SparseState:
    """Contract <vec| with ``site`` and drop it from the register.

    Returns the unnormalized partial inner product: the caller decides
    whether the (possibly zero) result is an error.
    """
    G = state.register.group
    vec = np.asarray(vec, dtype=complex).reshape(G.order)
    c = state.register.axis(site)
    amps = state.amps * np.conj(vec)[state.keys[:, c]]
    keys = np.delete(state.keys, c, axis=1)
    return SparseState(state.register.drop(site), keys, amps)


# --- Basis change ---


def rep_basis_order(G: FiniteGroup) -> tuple[tuple[str, int, int], ...]:
    """The fixed enumeration (irrep label, i, j) of the representation basis:
    catalog irrep order, indices row-major.  Its length is |G|."""
    out = []
    for r in G.irreps:
        for i in range(r.dim):
            for j in range(r.dim):
                out.append((r.label, i, j))
    return tuple(out)


def basis_matrix_to_rep(G: FiniteGroup) -> np.ndarray:
    """Unitary U with U[r, g] = sqrt(d/|G|) conj([irrep(g)]_ij) mapping
    group-basis coefficients to representation-basis coefficients, rows
    ordered by rep_basis_order."""
    rows = []
    for r in G.irreps:
        block = np.sqrt(r.dim / G.order) * np.conj(r.matrices)  # (n, d, d)
        rows.append(block.transpose(1, 2, 0).reshape(r.dim * r.dim, G.order))
    return np.concatenate(rows, axis=0)


def change_basis(state: SparseState, site, direction: str) -> np.ndarray:
    """Dense coefficient table of a single-site state in the other basis.

    direction "to_rep": group -> representation coefficients (ordered by
    rep_basis_order); "to_group": the inverse transform applied to a vector
    of representation coefficients stored in a single-site state is not
    representable sparsely per-key, so this accepts only single-site
    registers and returns the dense table either way.
    """
    if state.register.width != 1 or state.register.sites[0] != site:
        raise ValueError("change_basis operates on single-site registers")
    U = basis_matrix_to_rep(state.register.group)
    v = state.dense()
    if direction == "to_rep":
        return U @ v
    if direction == "to_group":
        return U.conj().T @ v
    raise ValueError(f"unknown direction {direction!r}")


# --- Reduced density matrices and Schmidt data ---


def _split_axes(register: Register, kept) -> tuple[list[int], list[int]]:
    kept = list(kept)
    axes_a = [register.axis(s) for s in kept]
    axes_b = [i for i in range(register.width) if i not in axes_a]
    return axes_a, axes_b


def _bipartition_matrix(state: SparseState, part_a) -> np.ndarray:
    """Dense (dim_A, #distinct B keys) coefficient matrix."""
    order = state.register.group.order
    axes_a, axes_b = _split_axes(state.register, part_a)
    if not axes_a:
        raise ValueError("bipartition part must be nonempty")
    dim_a = order ** len(axes_a)
    if dim_a > RDM_CAP:
        raise ValueError(f"kept dimension {dim_a} exceeds cap {RDM_CAP}")
    codes_a = _pack(state.keys[:, axes_a], order)
    if axes_b:
        codes_b = _pack(state.keys[:, axes_b], order)
        uniq, col = np.unique(codes_b, return_inverse=True)
        m = np.zeros((dim_a, len(uniq)), dtype=complex)
    else:
        col = np.zeros(len(state.amps), dtype=int)
        m = np.zeros((dim_a, 1), dtype=complex)
    np.add.at(m, (codes_a, col), state.amps)
    return m


def reduced_density_matrix(state: SparseState, kept_sites) -> np.ndarray:
    """Density matrix of ``kept_sites`` (row-major in their register order),
    normalized to unit trace."""
    m = _bipartition_matrix(state, kept_sites)
    rho = m @ m.conj().T
    tr = np.trace(rho).real
    if tr <= 0:
        raise ValueError("zero-norm state has no density matrix")
    return rho / tr


def schmidt_data(state: SparseState, part_a, threshold: float = 1e-10):
    """(schmidt values, rank, entropy in bits) across the bipartition
    (part_a | rest), for the normalized state."""
    m = _bipartition_matrix(state, part_a)
    n = np.linalg.norm(m)
    if n == 0:
        raise ValueError("zero-norm state has no Schmidt decomposition")
    vals = np.linalg.svd(m / n, compute_uv=False)
    rank = int(np.sum(vals > threshold))
    probs = vals[:rank] ** 2
    entropy = float(-np.sum(probs * np.log2(probs))) if rank else 0.0
    return vals, rank, entropy


def site_marginal(state: SparseState, site) -> np.ndarray:
    """Born probabilities of group-basis outcomes at ``site``."""
    c = state.register.axis(site)
    n2 = state.norm() ** 2
    if n2 == 0:
        raise ValueError("zero-norm state has no outcome distribution")
    w = np.abs(state.amps) ** 2
    return np.bincount(state.keys[:, c], weights=w,
                       minlength=state.register.group.order) / n2


# --- Dump format ---


def dump_state(state: SparseState) -> dict:
    """JSON-shaped dump: amplitudes as (element-label tuple, re, im), sorted
    lexicographically by the label tuple.  Floats serialize with Python's
    shortest round-trip repr (<= 17 significant digits, exact round trip)."""
    G = state.register.group
    rows = [
        ([G.labels[x] for x in key], float(a.real), float(a.imag))
        for key, a in state.items()
    ]
    rows.sort(key=lambda r: r[0])
    return {
        "group": G.name,
        "sites": [str(s) for s in state.register.sites],
        "amplitudes": [[labels, re, im] for labels, re, im in rows],
    }


def load_state(obj: dict, G: FiniteGroup) -> SparseState:
    if obj["group"] != G.name:
        raise ValueError(f"dump is for group {obj['group']}, not {G.name}")
    reg = Register(G, tuple(obj["sites"]))
    entries = {}
    for labels, re, im in obj["amplitudes"]:
        key = tuple(G.element(lab) for lab in labels)
        entries[key] = complex(re, im)
    return SparseState.from_dict(reg, entries)
