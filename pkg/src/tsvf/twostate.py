"""Two-state (pre- and post-selected) ensembles: weak values and ABL rule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .algebra import Ket, LinearOp, LocalProduct, Operator, SpaceMismatchError, apply, inner

ADMISSIBILITY_THRESHOLD = 1e-12
EIGENVALUE_GAP = 1e-9
DICHOTOMIC_TOLERANCE = 1e-9


class InadmissibleTwoStateError(ValueError):
    """Pre- and post-selected states are (numerically) orthogonal."""

    def __init__(self, overlap: complex, relative: float):
        self.overlap = overlap
        self.relative = relative
        super().__init__(
            f"pre- and post-selection are orthogonal: |<Phi|Psi>| = {abs(overlap):.3e} "
            f"({relative:.3e} relative to |Phi||Psi|, threshold {ADMISSIBILITY_THRESHOLD:g})"
        )


class IncompatibleMeasurementError(ValueError):
    """Every ABL numerator vanishes for the requested decomposition."""


class NotDichotomicError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TwoState:
    """Pair ``(pre, post)``; ``post`` is the ket whose conjugate is ``<Phi|``."""

    pre: Ket
    post: Ket
    label: str = ""
    overlap: complex = field(init=False)

    def __post_init__(self):
        if self.pre.space != self.post.space:
            raise SpaceMismatchError("pre- and post-selected states live on different spaces")
        ov = inner(self.post, self.pre)
        scale_ = self.pre.norm() * self.post.norm()
        rel = abs(ov) / scale_ if scale_ > 0 else 0.0
        if scale_ == 0 or rel < ADMISSIBILITY_THRESHOLD:
            raise InadmissibleTwoStateError(ov, rel)
        object.__setattr__(self, "overlap", ov)

    @property
    def space(self):
        return self.pre.space

    def amplitude(self, a: Operator) -> complex:
        """``<Phi|A|Psi>``."""
        return inner(self.post, apply(a, self.pre))

    def weak_value(self, a: Operator) -> complex:
        return weak_value(self, a)


def weak_value(ts: TwoState, a: Operator) -> complex:
    """``<Phi|A|Psi> / <Phi|Psi>``.

    ``a`` may be a dense :class:`LinearOp` or a :class:`LocalProduct`; the
    latter is applied site by site.
    """
    wv = ts.amplitude(a) / ts.overlap
    if not np.isfinite(wv):
        raise ValueError(f"non-finite weak value {wv}")
    return complex(wv)


def scale(ts: TwoState, c_pre: complex, c_post: complex) -> TwoState:
    if c_pre == 0 or c_post == 0:
        raise ValueError("scaling a selected state by zero is not allowed")
    return TwoState(ts.pre * c_pre, ts.post * c_post, label=ts.label)


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: tuple[float, ...]
    projectors: tuple[LinearOp, ...]

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", tuple(float(x) for x in self.eigenvalues))
        object.__setattr__(self, "projectors", tuple(self.projectors))
        self.validate()

    def validate(self, atol: float = 1e-10) -> None:
        if len(self.eigenvalues) != len(self.projectors) or not self.projectors:
            raise ValueError("need one projector per eigenvalue")
        ev = np.array(self.eigenvalues)
        if len(set(ev)) != len(ev):
            raise ValueError("eigenvalues must be pairwise distinct")
        space = self.projectors[0].space
        total = np.zeros_like(self.projectors[0].matrix)
        for i, p in enumerate(self.projectors):
            if p.space != space:
                raise SpaceMismatchError("projectors live on different spaces")
            m = p.matrix
            if not np.allclose(m, m.conj().T, atol=atol, rtol=0):
                raise ValueError(f"projector {i} is not Hermitian")
            if not np.allclose(m @ m, m, atol=atol, rtol=0):
                raise ValueError(f"projector {i} is not idempotent")
            for j in range(i):
                if not np.allclose(m @ self.projectors[j].matrix, 0, atol=atol):
                    raise ValueError(f"projectors {j} and {i} are not orthogonal")
            total = total + m
        if not np.allclose(total, np.eye(total.shape[0]), atol=atol, rtol=0):
            raise ValueError("projectors do not resolve the identity")

    @property
    def space(self):
        return self.projectors[0].space

    @classmethod
    def from_operator(cls, a: Operator, gap: float = EIGENVALUE_GAP) -> "SpectralDecomposition":
        """Hermitian eigendecomposition with eigenvalues merged when closer than ``gap``."""
        dense = a.dense()
        if not dense.is_hermitian():
            raise ValueError("spectral decomposition requires a Hermitian operator")
        m = dense.matrix
        vals, vecs = np.linalg.eigh(0.5 * (m + m.conj().T))
        clusters: list[list[int]] = [[0]]
        for k in range(1, len(vals)):
            if vals[k] - vals[clusters[-1][-1]] <= gap:
                clusters[-1].append(k)
            else:
                clusters.append([k])
        eigenvalues, projectors = [], []
        for idx in clusters:
            v = vecs[:, idx]
            lam = float(np.mean(vals[idx]))
            if abs(lam - round(lam)) <= gap:
                lam = float(round(lam)) + 0.0
            eigenvalues.append(lam)
            projectors.append(LinearOp(dense.space, v @ v.conj().T))
        return cls(tuple(eigenvalues), tuple(projectors))


def abl_probabilities(ts: TwoState, spec: SpectralDecomposition) -> np.ndarray:
    """ABL rule: ``P(j) = |<Phi|P_j|Psi>|^2 / sum_k |<Phi|P_k|Psi>|^2``."""
    if spec.space != ts.space:
        raise SpaceMismatchError("decomposition and two-state live on different spaces")
    num = np.array([abs(ts.amplitude(p)) ** 2 for p in spec.projectors])
    total = num.sum()
    if not total > 0:
        raise IncompatibleMeasurementError(
            "all ABL numerators vanish: the measurement is incompatible with the selections"
        )
    return num / total


def dichotomic_certainty(
    ts: TwoState, a: Operator, tol: float = DICHOTOMIC_TOLERANCE
) -> float | None:
    """Eigenvalue certain to be found by a strong measurement, if any.

    For a two-valued Hermitian ``a`` whose weak value coincides with one of its
    eigenvalues, the ABL probability of that eigenvalue is 1. Only this
    direction is implemented; otherwise ``None``.
    """
    spec = SpectralDecomposition.from_operator(a)
    if len(spec.eigenvalues) != 2:
        raise NotDichotomicError(
            f"operator has {len(spec.eigenvalues)} distinct eigenvalues, expected 2"
        )
    wv = weak_value(ts, a)
    for k, lam in enumerate(spec.eigenvalues):
        if abs(wv - lam) < tol:
            # a near-degenerate spectrum can match within tol without ABL certainty
            if abl_probabilities(ts, spec)[k] >= 1 - tol:
                return lam
    return None
