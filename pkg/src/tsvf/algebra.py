"""Dense complex state and operator algebra on finite tensor-product spaces.

Index convention: site 0 is the most significant digit of the flattened
index, i.e. the flattened amplitude vector is ``np.kron(f0, f1, ..., fN-1)``.

Nothing in this module normalizes a state behind the caller's back.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Mapping, Sequence

import numpy as np

# Practical cap on dense global objects (kets and matrices).
MAX_TOTAL_DIMENSION = 2**20

_RESERVED = set(".|,:=@;[]# \t")


class SpaceMismatchError(ValueError):
    """Objects defined on different product spaces were combined."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.complex128)
    arr.setflags(write=False)
    return arr


def _check_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite entries")


@dataclass(frozen=True)
class LocalSpace:
    """One site: an ordered basis with distinct labels.

    ``kind == "fock"`` marks an occupation-number basis ``|0>, ..., |d-1>``.
    """

    labels: tuple[str, ...]
    kind: str = "generic"

    def __post_init__(self):
        labels = tuple(str(x) for x in self.labels)
        object.__setattr__(self, "labels", labels)
        if len(labels) < 1:
            raise ValueError("a local space needs at least one basis state")
        if len(set(labels)) != len(labels):
            raise ValueError(f"basis labels must be distinct, got {labels}")
        for lab in labels:
            if not lab or set(lab) & _RESERVED:
                raise ValueError(f"invalid basis label {lab!r}")
        if self.kind not in ("generic", "fock"):
            raise ValueError(f"unknown local space kind {self.kind!r}")

    @property
    def dimension(self) -> int:
        return len(self.labels)

    @classmethod
    def qubit(cls, labels: Sequence[str] = ("L", "R")) -> "LocalSpace":
        if len(labels) != 2:
            raise ValueError("a two-level site needs exactly two labels")
        return cls(tuple(labels))

    @classmethod
    def fock(cls, max_occupation: int = 1) -> "LocalSpace":
        if max_occupation < 1:
            raise ValueError("a Fock mode needs max occupation >= 1")
        return cls(tuple(str(k) for k in range(max_occupation + 1)), kind="fock")

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown basis label {label!r}; expected one of {self.labels}") from None

    def basis(self, label: str) -> np.ndarray:
        v = np.zeros(self.dimension, dtype=np.complex128)
        v[self.index(label)] = 1.0
        return v

    def projector(self, label: str) -> np.ndarray:
        v = self.basis(label)
        return np.outer(v, v.conj())


@dataclass(frozen=True)
class ProductSpace:
    sites: tuple[LocalSpace, ...]

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(self.sites))
        if not self.sites:
            raise ValueError("a product space needs at least one site")

    @classmethod
    def uniform(cls, site: LocalSpace, n: int) -> "ProductSpace":
        return cls((site,) * n)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dimension for s in self.sites)

    @property
    def total_dimension(self) -> int:
        return int(np.prod(self.dims))

    def check_site(self, site: int) -> None:
        if not 0 <= site < self.n_sites:
            raise IndexError(f"site index {site} out of range for {self.n_sites} sites")

    def index_of(self, labels: Sequence[str]) -> int:
        if len(labels) != self.n_sites:
            raise ValueError(f"expected {self.n_sites} labels, got {len(labels)}")
        idx = 0
        for site, lab in zip(self.sites, labels):
            idx = idx * site.dimension + site.index(lab)
        return idx

    def labels_of(self, index: int) -> tuple[str, ...]:
        if not 0 <= index < self.total_dimension:
            raise IndexError(index)
        out = []
        for site in reversed(self.sites):
            index, r = divmod(index, site.dimension)
            out.append(site.labels[r])
        return tuple(reversed(out))


@dataclass(frozen=True, eq=False)
class Ket:
    """Unnormalized state vector on a product space."""

    space: ProductSpace
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.shape != (self.space.total_dimension,):
            raise ValueError(
                f"ket length {amps.size} does not match space dimension {self.space.total_dimension}"
            )
        _check_finite(amps, "ket")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis(cls, space: ProductSpace, labels: Sequence[str]) -> "Ket":
        v = np.zeros(space.total_dimension, dtype=np.complex128)
        v[space.index_of(labels)] = 1.0
        return cls(space, v)

    @classmethod
    def from_labels(cls, space: ProductSpace, amplitudes: Mapping[Sequence[str], complex]) -> "Ket":
        v = np.zeros(space.total_dimension, dtype=np.complex128)
        for labels, amp in amplitudes.items():
            v[space.index_of(labels)] += amp
        return cls(space, v)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per site."""
        return self.amplitudes.reshape(self.space.dims)

    def __add__(self, other: "Ket") -> "Ket":
        _same_space(self, other)
        return Ket(self.space, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "Ket") -> "Ket":
        _same_space(self, other)
        return Ket(self.space, self.amplitudes - other.amplitudes)

    def __mul__(self, c: complex) -> "Ket":
        return Ket(self.space, complex(c) * self.amplitudes)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class LinearOp:
    """Dense operator on a product space; Hermiticity is a query, not a promise."""

    space: ProductSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.space.total_dimension > MAX_TOTAL_DIMENSION:
            raise ValueError(f"dense operator above the cap of {MAX_TOTAL_DIMENSION}")
        mat = _frozen(self.matrix)
        d = self.space.total_dimension
        if mat.shape != (d, d):
            raise ValueError(f"operator shape {mat.shape} does not match space dimension {d}")
        _check_finite(mat, "operator")
        object.__setattr__(self, "matrix", mat)

    def is_hermitian(self, atol: float = 1e-10) -> bool:
        return bool(np.allclose(self.matrix, self.matrix.conj().T, atol=atol, rtol=0))

    def dense(self) -> "LinearOp":
        return self

    def apply(self, ket: Ket) -> Ket:
        return apply(self, ket)

    def __matmul__(self, other: "LinearOp") -> "LinearOp":
        return compose(self, other)

    def __add__(self, other: "LinearOp") -> "LinearOp":
        return add(self, other)

    def __sub__(self, other: "LinearOp") -> "LinearOp":
        return add(self, scale(-1.0, other))

    def __mul__(self, c: complex) -> "LinearOp":
        return scale(c, self)

    __rmul__ = __mul__

    @property
    def H(self) -> "LinearOp":
        return adjoint(self)


@dataclass(frozen=True, eq=False)
class LocalProduct:
    """``coefficient * prod_site factor[site]``, identity elsewhere.

    Applied directly to the reshaped ket, so it never materializes the
    global matrix. ``dense()`` gives the equivalent :class:`LinearOp`.
    """

    space: ProductSpace
    factors: tuple[tuple[int, np.ndarray], ...] = field(repr=False)
    coefficient: complex = 1.0

    def __post_init__(self):
        items = dict(self.factors.items()) if isinstance(self.factors, Mapping) else dict(self.factors)
        out = []
        for site in sorted(items):
            self.space.check_site(site)
            mat = _frozen(items[site])
            d = self.space.sites[site].dimension
            if mat.shape != (d, d):
                raise ValueError(f"factor on site {site} has shape {mat.shape}, expected {(d, d)}")
            _check_finite(mat, "factor")
            out.append((site, mat))
        object.__setattr__(self, "factors", tuple(out))
        object.__setattr__(self, "coefficient", complex(self.coefficient))

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self.factors)

    def apply(self, ket: Ket) -> Ket:
        _same_space(self, ket)
        return apply_local(dict(self.factors), ket, self.coefficient)

    def dense(self) -> LinearOp:
        mats = [np.eye(d, dtype=np.complex128) for d in self.space.dims]
        for site, m in self.factors:
            mats[site] = m
        return LinearOp(self.space, self.coefficient * reduce(np.kron, mats))

    def adjoint(self) -> "LocalProduct":
        return LocalProduct(
            self.space,
            tuple((s, m.conj().T) for s, m in self.factors),
            self.coefficient.conjugate(),
        )

    def is_hermitian(self, atol: float = 1e-10) -> bool:
        return self.dense().is_hermitian(atol)

    def __matmul__(self, other: "LocalProduct") -> "LocalProduct":
        if not isinstance(other, LocalProduct):
            return compose(self.dense(), other)
        _same_space(self, other)
        merged = dict(self.factors)
        for site, m in other.factors:
            merged[site] = merged[site] @ m if site in merged else m
        return LocalProduct(self.space, tuple(merged.items()), self.coefficient * other.coefficient)


Operator = LinearOp | LocalProduct


def _same_space(a, b) -> None:
    if a.space != b.space:
        raise SpaceMismatchError("operands live on different product spaces")


def local_ket(site: LocalSpace, amplitudes: Sequence[complex]) -> Ket:
    return Ket(ProductSpace((site,)), np.asarray(amplitudes, dtype=np.complex128))


def tensor_ket(factors: Sequence[Ket], space: ProductSpace | None = None) -> Ket:
    """Product state of single-site kets, site order = factor order."""
    if not factors:
        raise ValueError("need at least one factor")
    sites = []
    for f in factors:
        if f.space.n_sites != 1:
            raise ValueError("tensor_ket factors must each live on a single site")
        sites.append(f.space.sites[0])
    built = ProductSpace(tuple(sites))
    if space is not None:
        if space.dims != built.dims:
            raise SpaceMismatchError(f"factor dimensions {built.dims} do not match space {space.dims}")
        built = space
    if built.total_dimension > MAX_TOTAL_DIMENSION:
        raise ValueError(f"state above the dense cap of {MAX_TOTAL_DIMENSION}")
    amps = reduce(np.kron, [f.amplitudes for f in factors])
    return Ket(built, amps)


def identity(space: ProductSpace) -> LinearOp:
    return LinearOp(space, np.eye(space.total_dimension, dtype=np.complex128))


def embed_local(op: np.ndarray, site_index: int, space: ProductSpace) -> LinearOp:
    space.check_site(site_index)
    op = np.asarray(op, dtype=np.complex128)
    d = space.sites[site_index].dimension
    if op.shape != (d, d):
        raise ValueError(f"local operator shape {op.shape} does not match site dimension {d}")
    left = int(np.prod(space.dims[:site_index]))
    right = int(np.prod(space.dims[site_index + 1:]))
    mat = np.kron(np.kron(np.eye(left), op), np.eye(right))
    return LinearOp(space, mat)


def compose(a: LinearOp, b: LinearOp) -> LinearOp:
    """Matrix product ``a @ b`` (b acts first)."""
    _same_space(a, b)
    return LinearOp(a.space, a.dense().matrix @ b.dense().matrix)


def add(a: LinearOp, b: LinearOp) -> LinearOp:
    _same_space(a, b)
    return LinearOp(a.space, a.dense().matrix + b.dense().matrix)


def scale(c: complex, a: LinearOp) -> LinearOp:
    return LinearOp(a.space, complex(c) * a.dense().matrix)


def adjoint(a: Operator) -> Operator:
    if isinstance(a, LocalProduct):
        return a.adjoint()
    return LinearOp(a.space, a.matrix.conj().T)


def inner(bra_of: Ket, ket: Ket) -> complex:
    """``<bra_of|ket>``; the first argument is conjugated."""
    _same_space(bra_of, ket)
    return complex(np.vdot(bra_of.amplitudes, ket.amplitudes))


def apply(op: Operator, ket: Ket) -> Ket:
    _same_space(op, ket)
    if isinstance(op, LocalProduct):
        return op.apply(ket)
    return Ket(ket.space, op.matrix @ ket.amplitudes)


def apply_local(factors: Mapping[int, np.ndarray], ket: Ket, coefficient: complex = 1.0) -> Ket:
    """Apply single-site matrices without building the global operator."""
    psi = ket.tensor()
    for site, m in factors.items():
        ket.space.check_site(site)
        # contract the site axis, then move the new axis back into place
        psi = np.moveaxis(np.tensordot(m, psi, axes=([1], [site])), 0, site)
    return Ket(ket.space, coefficient * psi.reshape(-1))


def fock_annihilation_local(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(np.complex128)


def fock_annihilation(mode: int, space: ProductSpace) -> LocalProduct:
    """Truncated ladder operator ``a|n> = sqrt(n)|n-1>`` on one Fock site."""
    space.check_site(mode)
    site = space.sites[mode]
    if site.kind != "fock":
        raise ValueError(f"site {mode} is not a Fock mode")
    return LocalProduct(space, ((mode, fock_annihilation_local(site.dimension)),))


def fock_creation(mode: int, space: ProductSpace) -> LocalProduct:
    return fock_annihilation(mode, space).adjoint()


def product(ops: Iterable[LocalProduct]) -> LocalProduct:
    return reduce(lambda a, b: a @ b, ops)
