"""m-point correlation weak values and their hierarchy.

A query assigns a projector label to some sites; unassigned sites carry the
identity. Enumerating every query of order ``m`` over ``k`` labels per site
costs ``C(N, m) * k**m`` weak values, each an ``O(d**N)`` contraction.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .algebra import ProductSpace, apply_local
from .twostate import TwoState

ZERO_TOLERANCE = 1e-10
MAX_DEFAULT_SITES = 14


class IncompleteTableError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ProjectorFamily:
    """Labeled local projectors, one complete orthogonal set per site."""

    name: str
    sites: tuple[tuple[tuple[str, np.ndarray], ...], ...] = field(repr=False)

    def __post_init__(self):
        atol = 1e-10
        frozen = []
        for i, entries in enumerate(self.sites):
            entries = tuple(entries.items()) if isinstance(entries, Mapping) else tuple(entries)
            if not entries:
                raise ValueError(f"site {i} has no projectors")
            labels = [lab for lab, _ in entries]
            if len(set(labels)) != len(labels):
                raise ValueError(f"site {i}: duplicate projector labels {labels}")
            mats = []
            for lab, p in entries:
                p = np.array(p, dtype=np.complex128)
                p.setflags(write=False)
                if p.ndim != 2 or p.shape[0] != p.shape[1]:
                    raise ValueError(f"site {i} label {lab}: projector must be square")
                if not np.allclose(p, p.conj().T, atol=atol) or not np.allclose(p @ p, p, atol=atol):
                    raise ValueError(f"site {i} label {lab}: not an orthogonal projector")
                mats.append((lab, p))
            d = mats[0][1].shape[0]
            for (la, a), (lb, b) in itertools.combinations(mats, 2):
                if a.shape != b.shape or not np.allclose(a @ b, 0, atol=atol):
                    raise ValueError(f"site {i}: projectors {la} and {lb} are not orthogonal")
            if not np.allclose(sum(m for _, m in mats), np.eye(d), atol=atol):
                raise ValueError(f"site {i}: projectors do not sum to the identity")
            frozen.append(tuple(mats))
        object.__setattr__(self, "sites", tuple(frozen))

    @classmethod
    def uniform(cls, name: str, n_sites: int, projectors: Mapping[str, np.ndarray]) -> "ProjectorFamily":
        return cls(name, tuple(tuple(projectors.items()) for _ in range(n_sites)))

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def labels(self, site: int) -> tuple[str, ...]:
        return tuple(lab for lab, _ in self.sites[site])

    def all_labels(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for site in range(self.n_sites):
            seen.update(dict.fromkeys(self.labels(site)))
        return tuple(seen)

    def projector(self, site: int, label: str) -> np.ndarray:
        for lab, p in self.sites[site]:
            if lab == label:
                return p
        raise KeyError(f"site {site} has no projector labeled {label!r}")

    def check_space(self, space: ProductSpace) -> None:
        if self.n_sites != space.n_sites:
            raise ValueError(f"family has {self.n_sites} sites, space has {space.n_sites}")
        for i, d in enumerate(space.dims):
            if self.sites[i][0][1].shape[0] != d:
                raise ValueError(f"family site {i} does not match local dimension {d}")


@dataclass(frozen=True, order=True)
class CorrelationQuery:
    """Sorted ``(site, label)`` pairs; absent sites carry the identity."""

    assignment: tuple[tuple[int, str], ...]

    def __post_init__(self):
        items = tuple(sorted((int(s), str(l)) for s, l in self.assignment))
        sites = [s for s, _ in items]
        if len(set(sites)) != len(sites):
            raise ValueError(f"sites assigned twice in {items}")
        object.__setattr__(self, "assignment", items)

    @classmethod
    def of(cls, mapping: Mapping[int, str] | Iterable[tuple[int, str]] = ()) -> "CorrelationQuery":
        items = mapping.items() if isinstance(mapping, Mapping) else mapping
        return cls(tuple(items))

    @property
    def order(self) -> int:
        return len(self.assignment)

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self.assignment)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(l for _, l in self.assignment)

    def with_site(self, site: int, label: str) -> "CorrelationQuery":
        return CorrelationQuery(self.assignment + ((site, label),))


@dataclass(frozen=True)
class HierarchyReport:
    vanishing_orders: tuple[int, ...]
    emergence_order: int | None
    max_magnitude_at_emergence: float | None
    emergence_value: complex | None = None
    orders_checked: tuple[int, ...] = ()
    note: str = ""

    def to_dict(self) -> dict:
        v = self.emergence_value
        return {
            "vanishing_orders": list(self.vanishing_orders),
            "emergence_order": self.emergence_order,
            "max_magnitude_at_emergence": self.max_magnitude_at_emergence,
            "emergence_value": None if v is None else [v.real, v.imag],
            "orders_checked": list(self.orders_checked),
            "note": self.note,
        }


@dataclass(frozen=True, eq=False)
class CorrelationTable:
    entries: dict[CorrelationQuery, complex] = field(repr=False)
    sites: tuple[int, ...]
    site_labels: dict[int, tuple[str, ...]]
    orders: tuple[int, ...]
    two_state_id: str = ""
    family_id: str = ""
    report: HierarchyReport | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, query: CorrelationQuery | Mapping[int, str]) -> complex:
        if not isinstance(query, CorrelationQuery):
            query = CorrelationQuery.of(query)
        return self.entries[query]

    def __iter__(self):
        return iter(self.entries.items())

    def at_order(self, m: int) -> dict[CorrelationQuery, complex]:
        return {q: v for q, v in self.entries.items() if q.order == m}

    def expected_queries(self, m: int, labels: set[str] | None = None) -> list[CorrelationQuery]:
        return list(_queries(self.sites, self.site_labels, m, labels))

    def restricted_to(self, labels: Iterable[str]) -> "CorrelationTable":
        keep = set(labels)
        site_labels = {s: tuple(l for l in ls if l in keep) for s, ls in self.site_labels.items()}
        entries = {q: v for q, v in self.entries.items() if set(q.labels) <= keep}
        return replace(self, entries=entries, site_labels=site_labels, report=None)


def _queries(sites, site_labels, m, labels=None):
    for subset in itertools.combinations(sites, m):
        choices = [
            [l for l in site_labels[s] if labels is None or l in labels] for s in subset
        ]
        for combo in itertools.product(*choices):
            yield CorrelationQuery(tuple(zip(subset, combo)))


def correlation_value(ts: TwoState, family: ProjectorFamily, query: CorrelationQuery) -> complex:
    """Weak value of the product of the query's embedded projectors."""
    factors = {s: family.projector(s, l) for s, l in query.assignment}
    moved = apply_local(factors, ts.pre)
    return complex(np.vdot(ts.post.amplitudes, moved.amplitudes) / ts.overlap)


def enumerate_correlations(
    ts: TwoState,
    family: ProjectorFamily,
    max_order: int | None = None,
    label_filter: Iterable[str] | None = None,
    *,
    sites: Sequence[int] | None = None,
    min_order: int = 0,
    workers: int | None = None,
) -> CorrelationTable:
    """Every query on ``sites`` with order in ``[min_order, max_order]``.

    Entries are ordered by order, then site subset (lexicographic), then label
    combination in family order. The result does not depend on ``workers``.
    """
    family.check_space(ts.space)
    sites = tuple(range(ts.space.n_sites)) if sites is None else tuple(sorted(set(sites)))
    if not sites:
        raise ValueError("need at least one site")
    for s in sites:
        ts.space.check_site(s)
    if max_order is None:
        if len(sites) > MAX_DEFAULT_SITES:
            raise ValueError(
                f"full enumeration over {len(sites)} sites is above the default cap of "
                f"{MAX_DEFAULT_SITES}; pass max_order explicitly"
            )
        max_order = len(sites)
    if not 0 <= min_order <= max_order <= len(sites):
        raise ValueError(f"orders must satisfy 0 <= {min_order} <= {max_order} <= {len(sites)}")

    keep = None if label_filter is None else set(label_filter)
    site_labels = {}
    for s in sites:
        labs = family.labels(s)
        if keep is not None:
            labs = tuple(l for l in labs if l in keep)
            if not labs:
                raise ValueError(f"label filter {sorted(keep)} leaves site {s} without projectors")
        site_labels[s] = labs

    orders = tuple(range(min_order, max_order + 1))
    queries = [q for m in orders for q in _queries(sites, site_labels, m)]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(lambda q: correlation_value(ts, family, q), queries))
    else:
        values = [correlation_value(ts, family, q) for q in queries]
    return CorrelationTable(
        dict(zip(queries, values)),
        sites=sites,
        site_labels=site_labels,
        orders=orders,
        two_state_id=ts.label,
        family_id=family.name,
    )


def _check_complete(table: CorrelationTable, m: int, labels=None) -> None:
    missing = [q for q in table.expected_queries(m, labels) if q not in table.entries]
    if missing:
        shown = ", ".join(_fmt_query(q) for q in missing[:5])
        more = f" (+{len(missing) - 5} more)" if len(missing) > 5 else ""
        raise IncompleteTableError(f"table is missing order-{m} queries: {shown}{more}")


def _fmt_query(q: CorrelationQuery) -> str:
    return "*".join(f"{l}{s + 1}" for s, l in q.assignment) or "1"


def detect_hierarchy(
    table: CorrelationTable,
    zero_tolerance: float = ZERO_TOLERANCE,
    labels: Iterable[str] | None = None,
) -> HierarchyReport:
    """Classify each order >= 1 as vanishing when every restricted entry is below tolerance."""
    keep = None if labels is None else set(labels)
    orders = sorted(m for m in table.orders if m >= 1)
    if not orders:
        raise IncompleteTableError("table has no entries of order >= 1")
    if orders != list(range(1, orders[-1] + 1)):
        raise IncompleteTableError(f"table orders {orders} are not contiguous from 1")
    vanishing, emergence, mag, value = [], None, None, None
    for m in orders:
        _check_complete(table, m, keep)
        vals = [v for q, v in table.at_order(m).items() if keep is None or set(q.labels) <= keep]
        if not vals:
            raise IncompleteTableError(f"no order-{m} entries carry the labels {sorted(keep)}")
        mags = np.abs(vals)
        if np.all(mags < zero_tolerance):
            vanishing.append(m)
        elif emergence is None:
            emergence = m
            k = int(np.argmax(mags))
            mag, value = float(mags[k]), complex(vals[k])
    return HierarchyReport(tuple(vanishing), emergence, mag, value, tuple(orders))


def marginalize(
    table: CorrelationTable, family: ProjectorFamily, order: int | None = None
) -> CorrelationTable:
    """Order ``m-1`` entries as sums of order ``m`` entries over a dropped site's labels.

    The dropped site for each lower query is the first table site it leaves
    free; completeness of the family makes the choice irrelevant.
    """
    m = max(table.orders) if order is None else order
    if m < 1 or m > len(table.sites):
        raise ValueError(f"cannot marginalize order {m} over {len(table.sites)} sites")
    for s in table.sites:
        if tuple(table.site_labels[s]) != family.labels(s):
            raise IncompleteTableError(
                f"site {s} covers labels {table.site_labels[s]}, need all of {family.labels(s)}"
            )
    _check_complete(table, m)
    out = {}
    for q in _queries(table.sites, table.site_labels, m - 1):
        free = next(s for s in table.sites if s not in q.sites)
        out[q] = complex(sum(table.entries[q.with_site(free, l)] for l in family.labels(free)))
    return CorrelationTable(
        out,
        sites=table.sites,
        site_labels=dict(table.site_labels),
        orders=(m - 1,),
        two_state_id=table.two_state_id,
        family_id=table.family_id,
    )


def restrict_sites(
    ts: TwoState,
    family: ProjectorFamily,
    kept_sites: Iterable[int],
    label_filter: Iterable[str] | None = None,
    zero_tolerance: float = ZERO_TOLERANCE,
) -> CorrelationTable:
    """Enumerate over kept sites only, with the computed hierarchy attached.

    No emergence order is assumed: ``report.note`` flags an emergence order
    other than the number of kept sites.
    """
    kept = tuple(sorted(set(kept_sites)))
    if not kept:
        raise ValueError("kept_sites must be non-empty")
    table = enumerate_correlations(ts, family, label_filter=label_filter, sites=kept)
    report = detect_hierarchy(table, zero_tolerance)
    if report.emergence_order != len(kept):
        found = "no emergence" if report.emergence_order is None else f"emergence at order {report.emergence_order}"
        report = replace(report, note=f"{found} with {len(kept)} kept sites")
    return replace(table, report=report)


@dataclass(frozen=True)
class BottomUpWitness:
    """Two instances whose tables agree below the top order but differ at it."""

    n: int
    c1: complex
    c2: complex
    max_low_order_difference: float
    top_values: tuple[complex, complex]
    top_difference: float
    expected_top_difference: float

    def to_dict(self) -> dict:
        cx = lambda z: [z.real, z.imag]
        return {
            "n": self.n,
            "c1": cx(self.c1),
            "c2": cx(self.c2),
            "max_low_order_difference": self.max_low_order_difference,
            "top_values": [cx(v) for v in self.top_values],
            "top_difference": self.top_difference,
            "expected_top_difference": self.expected_top_difference,
        }


def bottom_up_witness(n: int, c1: complex, c2: complex) -> BottomUpWitness:
    """Compare full-family tables of two n-body instances differing only in C."""
    from .scenarios import n_body

    s1, s2 = n_body(n, c1), n_body(n, c2)
    fam = s1.families["boxes"]
    t1 = enumerate_correlations(s1.two_state, fam, max_order=n - 1)
    t2 = enumerate_correlations(s2.two_state, fam, max_order=n - 1)
    low = max(abs(t1.entries[q] - t2.entries[q]) for q in t1.entries)
    full_l = CorrelationQuery.of({s: "L" for s in range(n)})
    v1 = correlation_value(s1.two_state, fam, full_l)
    v2 = correlation_value(s2.two_state, fam, full_l)
    return BottomUpWitness(
        n, complex(c1), complex(c2), float(low), (v1, v2),
        float(abs(v1 - v2)), float(abs(1 / complex(c1) - 1 / complex(c2))),
    )
