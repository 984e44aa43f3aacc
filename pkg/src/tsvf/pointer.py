"""Gaussian-pointer model of a weak measurement followed by post-selection.

An impulsive coupling ``exp(-i g A p)`` to a pointer prepared in

    phi(x) = (2 pi sigma^2)^(-1/4) exp(-x^2 / (4 sigma^2))

(so ``|phi|^2`` is a normal density of standard deviation ``sigma``) leaves,
after post-selection, the unnormalized pointer wavefunction

    psi(x) = sum_j <Phi|P_j|Psi> phi(x - g a_j)

for the spectral decomposition ``A = sum_j a_j P_j``. The mean of the
normalized ``|psi|^2`` is ``g Re<A>_w + O(g^3)``.
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .algebra import Operator
from .twostate import SpectralDecomposition, TwoState, weak_value

BLOCK_SIZE = 1 << 16
MASS_TOLERANCE = 1e-9


class GridResolutionError(ValueError):
    """The sampling grid misses more than the allowed fraction of the mass."""


@dataclass(frozen=True)
class GaussianPointer:
    """Pointer of width ``sigma`` coupled with strength ``g``.

    ``half_width`` and ``resolution`` default to ``12 sigma + |g| max|a|`` and
    ``sigma / 200``; both are validated once the eigenvalues are known.
    """

    coupling: float
    width: float = 1.0
    half_width: float | None = None
    resolution: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.coupling) or self.coupling == 0:
            raise ValueError("coupling g must be finite and nonzero")
        if not self.width > 0:
            raise ValueError("pointer width sigma must be positive")

    def grid_for(self, max_abs_eigenvalue: float) -> tuple[float, float]:
        s, g = self.width, abs(self.coupling)
        w = 12 * s + g * max_abs_eigenvalue if self.half_width is None else self.half_width
        dx = s / 200 if self.resolution is None else self.resolution
        if not dx < s / 10:
            raise ValueError(f"grid resolution {dx} must be finer than sigma/10 = {s / 10}")
        need = max(8 * s, g * max_abs_eigenvalue + 8 * s)
        if w < need:
            raise ValueError(f"grid half-width {w} must be at least {need}")
        return float(w), float(dx)


def _phi(x: np.ndarray, sigma: float) -> np.ndarray:
    return (2 * np.pi * sigma**2) ** -0.25 * np.exp(-(x**2) / (4 * sigma**2))


@dataclass(frozen=True, eq=False)
class PointerMixture:
    """Superposition of shifted Gaussians left on the pointer after post-selection."""

    shifts: np.ndarray
    amplitudes: np.ndarray
    width: float
    half_width: float
    resolution: float
    coupling: float
    eigenvalues: tuple[float, ...] = ()
    # |Phi|^2 |Psi|^2, turns the integrated weight into a probability
    norm_scale: float = 1.0

    def __post_init__(self):
        s = np.array(self.shifts, dtype=float)
        c = np.array(self.amplitudes, dtype=np.complex128)
        if s.shape != c.shape or s.ndim != 1 or s.size == 0:
            raise ValueError("need matching, non-empty shift and amplitude lists")
        if not np.any(c != 0):
            raise ValueError("every mixture amplitude vanishes")
        s.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "shifts", s)
        object.__setattr__(self, "amplitudes", c)
        if not self.weight() > 0:
            raise ValueError("post-selected pointer weight is not positive")

    def wavefunction(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return sum(c * _phi(x - s, self.width) for s, c in zip(self.shifts, self.amplitudes))

    def density(self, x) -> np.ndarray:
        return np.abs(self.wavefunction(x)) ** 2

    def _overlaps(self) -> tuple[np.ndarray, np.ndarray]:
        d = self.shifts[:, None] - self.shifts[None, :]
        gram = np.exp(-(d**2) / (8 * self.width**2))
        cc = self.amplitudes.conj()[:, None] * self.amplitudes[None, :]
        return cc, gram

    def weight(self) -> float:
        """``int |psi|^2 dx`` in closed form."""
        cc, gram = self._overlaps()
        return float(np.real(np.sum(cc * gram)))

    @property
    def post_selection_weight(self) -> float:
        return self.weight() / self.norm_scale

    def analytic_mean(self) -> float:
        cc, gram = self._overlaps()
        mid = 0.5 * (self.shifts[:, None] + self.shifts[None, :])
        return float(np.real(np.sum(cc * gram * mid))) / self.weight()

    def exact_mean(self) -> float:
        """Mean of the normalized density by adaptive quadrature (no sampling)."""
        pts = sorted(set(float(s) for s in self.shifts))
        lo, hi = -self.half_width, self.half_width
        kw = dict(points=pts, limit=400, epsabs=1e-15, epsrel=1e-13)
        m0 = integrate.quad(lambda x: self.density(x), lo, hi, **kw)[0]
        m1 = integrate.quad(lambda x: x * self.density(x), lo, hi, **kw)[0]
        return m1 / m0

    def grid(self) -> tuple[np.ndarray, np.ndarray]:
        n = int(np.ceil(2 * self.half_width / self.resolution))
        x = np.linspace(-self.half_width, self.half_width, n + 1)
        return x, self.density(x)


def couple(ts: TwoState, a: Operator, pointer: GaussianPointer) -> PointerMixture:
    if not a.is_hermitian():
        raise ValueError("pointer coupling needs a Hermitian observable")
    spec = SpectralDecomposition.from_operator(a)
    ev = np.array(spec.eigenvalues)
    amps = np.array([ts.amplitude(p) for p in spec.projectors])
    w, dx = pointer.grid_for(float(np.max(np.abs(ev))))
    return PointerMixture(
        shifts=pointer.coupling * ev,
        amplitudes=amps,
        width=pointer.width,
        half_width=w,
        resolution=dx,
        coupling=pointer.coupling,
        eigenvalues=spec.eigenvalues,
        norm_scale=(ts.pre.norm() * ts.post.norm()) ** 2,
    )


@dataclass(frozen=True, eq=False)
class MeasurementRecord:
    readings: np.ndarray = field(repr=False)
    requested_samples: int
    seed: int
    post_selection_weight: float
    coupling: float
    width: float
    scenario_id: str = ""
    observable: str = ""

    def __post_init__(self):
        r = np.array(self.readings, dtype=float)
        r.setflags(write=False)
        object.__setattr__(self, "readings", r)
        if r.size != self.requested_samples:
            raise ValueError("reading count does not match the requested samples")

    def to_csv(self) -> str:
        out = io.StringIO()
        for key, val in (
            ("scenario", self.scenario_id),
            ("observable", self.observable),
            ("seed", self.seed),
            ("g", repr(float(self.coupling))),
            ("sigma", repr(float(self.width))),
            ("samples", self.requested_samples),
            ("post_selection_weight", repr(float(self.post_selection_weight))),
        ):
            out.write(f"# {key}={val}\n")
        out.write("reading\n")
        out.writelines(f"{x!r}\n" for x in self.readings.tolist())
        return out.getvalue()


def _block_draws(cdf: np.ndarray, x: np.ndarray, seed: int, stream: int, block: int, size: int) -> np.ndarray:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(stream, block))
    u = np.random.Generator(np.random.PCG64(ss)).random(size)
    k = np.clip(np.searchsorted(cdf, u, side="right") - 1, 0, len(cdf) - 2)
    lo, hi = cdf[k], cdf[k + 1]
    frac = np.where(hi > lo, (u - lo) / np.where(hi > lo, hi - lo, 1.0), 0.5)
    return x[k] + frac * (x[k + 1] - x[k])


def sample(
    mix: PointerMixture,
    n: int,
    seed: int,
    *,
    stream: int = 0,
    workers: int | None = None,
    scenario_id: str = "",
    observable: str = "",
) -> MeasurementRecord:
    """``n`` post-selected readings by inverse CDF on the uniform grid.

    Draws come in fixed blocks, each with its own ``SeedSequence`` substream, so
    the record is bit-identical for any ``workers``.
    """
    n = int(n)
    if n < 0:
        raise ValueError("sample count must be non-negative")
    x, dens = mix.grid()
    mass = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(x))])
    total = mix.weight()
    if abs(mass[-1] / total - 1) > MASS_TOLERANCE:
        raise GridResolutionError(
            f"grid on [-{mix.half_width}, {mix.half_width}] with step {mix.resolution} captures "
            f"{mass[-1] / total:.12f} of the pointer mass"
        )
    cdf = mass / mass[-1]
    blocks = [(b, min(BLOCK_SIZE, n - b * BLOCK_SIZE)) for b in range(-(-n // BLOCK_SIZE))]
    draw = lambda bs: _block_draws(cdf, x, seed, stream, *bs)
    if workers and workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(draw, blocks))
    else:
        parts = [draw(bs) for bs in blocks]
    readings = np.concatenate(parts) if parts else np.empty(0)
    return MeasurementRecord(
        readings, n, int(seed), mix.post_selection_weight, mix.coupling, mix.width, scenario_id, observable
    )


def estimate_real_weak_value(rec: MeasurementRecord, g: float | None = None) -> tuple[float, float]:
    """``(mean / g, std / (|g| sqrt n))`` from pointer readings."""
    g = rec.coupling if g is None else g
    if g == 0:
        raise ValueError("coupling g must be nonzero")
    n = rec.readings.size
    if n == 0:
        raise ValueError("cannot estimate from an empty record")
    mean = float(np.mean(rec.readings))
    std = float(np.std(rec.readings, ddof=1)) if n > 1 else float("inf")
    return mean / g, std / (abs(g) * np.sqrt(n))


@dataclass(frozen=True)
class BiasPoint:
    g: float
    estimate: float
    std_error: float
    exact: float  # quadrature mean / g, no sampling

    def __iter__(self):
        return iter((self.g, self.estimate, self.std_error))


def bias_scan(
    ts: TwoState,
    a: Operator,
    pointer: GaussianPointer,
    g_list: Sequence[float],
    n: int,
    seed: int,
) -> list[BiasPoint]:
    """Sampled and quadrature estimates of ``Re<A>_w`` along a decreasing g ladder.

    ``|estimate - Re<A>_w|`` should shrink like ``g^2`` up to statistical error.
    """
    gs = [float(g) for g in g_list]
    if not gs or any(g <= 0 for g in gs) or any(b >= a_ for a_, b in zip(gs, gs[1:])):
        raise ValueError("g_list must be positive and strictly decreasing")
    out = []
    for i, g in enumerate(gs):
        p = GaussianPointer(g, pointer.width, pointer.half_width, pointer.resolution)
        mix = couple(ts, a, p)
        est, err = estimate_real_weak_value(sample(mix, n, seed, stream=i), g)
        out.append(BiasPoint(g, est, err, mix.exact_mean() / g))
    return out


def reference_weak_value(ts: TwoState, a: Operator) -> float:
    return weak_value(ts, a).real
