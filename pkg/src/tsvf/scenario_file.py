"""Plain-text scenario files.

Grammar (UTF-8, LF line endings, ``#`` starts a comment line)::

    id = <text>                         header, before any section
    default_family = <name>             optional header

    [space]
    site = <label>, <label>, ...        one line per site, site 1 first
    site = 0, 1 ; fock                  occupation-number site

    [pre]                               amplitudes of |Psi>
    <l1>.<l2>...<lN> = <re>, <im>       unlisted basis states are 0
    [post]                              amplitudes of the ket |Phi>

    [observable <name>]                 either a dense matrix ...
    <row basis> | <col basis> = <re>, <im>
    [observable <name>]                 ... or a product of site factors
    coefficient = <re>, <im>
    @<site> <row label> | <col label> = <re>, <im>

    [family <name>]
    @<site> <projector label> : <row label> | <col label> = <re>, <im>

    [params]
    <name> = <re>, <im>

Sites are 1-based. Whitespace around tokens is ignored. ``serialize_scenario``
writes sections in this order, observables/families/params sorted by name,
floats as ``repr``, and skips zero entries, so output is byte-stable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .algebra import Ket, LinearOp, LocalProduct, LocalSpace, ProductSpace
from .hierarchy import ProjectorFamily
from .scenarios import Scenario
from .twostate import TwoState


class ScenarioFormatError(ValueError):
    def __init__(self, line: int | None, field: str, message: str):
        self.line = line
        self.field = field
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}field {field!r}: {message}")


_SECTION = re.compile(r"^\[\s*([a-z]+)(?:\s+(\S+))?\s*\]$")
_FACTOR = re.compile(r"^@(\d+)\s*([^\s|:]+)\s*\|\s*([^\s|:]+)$")
_FAMILY = re.compile(r"^@(\d+)\s*([^\s|:]+)\s*:\s*([^\s|:]+)\s*\|\s*([^\s|:]+)$")
_DENSE = re.compile(r"^([^\s|]+)\s*\|\s*([^\s|]+)$")


def _num(text: str, line: int, key: str) -> complex:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise ScenarioFormatError(line, key, f"expected '<re>, <im>', got {text!r}")
    try:
        re_, im = float(parts[0]), float(parts[1])
    except ValueError:
        raise ScenarioFormatError(line, key, f"malformed number in {text!r}") from None
    if not (np.isfinite(re_) and np.isfinite(im)):
        raise ScenarioFormatError(line, key, "amplitudes must be finite")
    return complex(re_, im)


@dataclass
class _Section:
    kind: str
    name: str | None
    line: int
    rows: list[tuple[int, str, str]]


def _split(text: str) -> tuple[list[tuple[int, str, str]], list[_Section]]:
    header: list[tuple[int, str, str]] = []
    sections: list[_Section] = []
    for no, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _SECTION.match(line)
        if m:
            sections.append(_Section(m.group(1), m.group(2), no, []))
            continue
        if line.startswith("["):
            raise ScenarioFormatError(no, line, "malformed section header")
        if "=" not in line:
            raise ScenarioFormatError(no, line, "expected 'key = value'")
        key, _, val = line.partition("=")
        row = (no, key.strip(), val.strip())
        (sections[-1].rows if sections else header).append(row)
    return header, sections


def _basis_index(space: ProductSpace, key: str, line: int) -> int:
    labels = [p.strip() for p in key.split(".")]
    if len(labels) != space.n_sites:
        raise ScenarioFormatError(line, key, f"expected {space.n_sites} dot-separated site labels")
    try:
        return space.index_of(labels)
    except KeyError as exc:
        raise ScenarioFormatError(line, key, str(exc.args[0])) from None


def _site(space: ProductSpace, digits: str, line: int, key: str) -> int:
    k = int(digits)
    if not 1 <= k <= space.n_sites:
        raise ScenarioFormatError(line, key, f"site {k} out of range 1..{space.n_sites}")
    return k - 1


def _local(space: ProductSpace, site: int, label: str, line: int, key: str) -> int:
    try:
        return space.sites[site].index(label)
    except KeyError as exc:
        raise ScenarioFormatError(line, key, str(exc.args[0])) from None


def parse_scenario(text: str) -> Scenario:
    header, sections = _split(text)
    meta = {}
    for no, key, val in header:
        if key not in ("id", "default_family"):
            raise ScenarioFormatError(no, key, "unknown header field")
        meta[key] = val
    if "id" not in meta:
        raise ScenarioFormatError(None, "id", "missing scenario id")

    by_kind: dict[str, list[_Section]] = {}
    for sec in sections:
        if sec.kind not in ("space", "pre", "post", "observable", "family", "params"):
            raise ScenarioFormatError(sec.line, sec.kind, "unknown section")
        if sec.kind in ("observable", "family") and not sec.name:
            raise ScenarioFormatError(sec.line, sec.kind, "section needs a name")
        if sec.kind in ("space", "pre", "post", "params"):
            if sec.name:
                raise ScenarioFormatError(sec.line, sec.kind, "section takes no name")
            if sec.kind in by_kind:
                raise ScenarioFormatError(sec.line, sec.kind, "duplicate section")
        by_kind.setdefault(sec.kind, []).append(sec)
    for need in ("space", "pre", "post"):
        if need not in by_kind:
            raise ScenarioFormatError(None, need, "missing section")

    sites = []
    for no, key, val in by_kind["space"][0].rows:
        if key != "site":
            raise ScenarioFormatError(no, key, "expected 'site = ...'")
        labels, _, kind = val.partition(";")
        kind = kind.strip() or "generic"
        try:
            sites.append(LocalSpace(tuple(l.strip() for l in labels.split(",")), kind=kind))
        except ValueError as exc:
            raise ScenarioFormatError(no, key, str(exc)) from None
    if not sites:
        raise ScenarioFormatError(by_kind["space"][0].line, "space", "no sites declared")
    space = ProductSpace(tuple(sites))

    kets = {}
    for kind in ("pre", "post"):
        v = np.zeros(space.total_dimension, dtype=np.complex128)
        seen = set()
        for no, key, val in by_kind[kind][0].rows:
            idx = _basis_index(space, key, no)
            if idx in seen:
                raise ScenarioFormatError(no, key, f"duplicate amplitude in [{kind}]")
            seen.add(idx)
            v[idx] = _num(val, no, key)
        kets[kind] = Ket(space, v)
    ts = TwoState(kets["pre"], kets["post"], meta["id"])

    observables = {}
    for sec in by_kind.get("observable", []):
        if sec.name in observables:
            raise ScenarioFormatError(sec.line, sec.name, "duplicate observable")
        observables[sec.name] = _parse_observable(space, sec)

    families = {}
    for sec in by_kind.get("family", []):
        if sec.name in families:
            raise ScenarioFormatError(sec.line, sec.name, "duplicate family")
        families[sec.name] = _parse_family(space, sec)

    params = {}
    for sec in by_kind.get("params", []):
        for no, key, val in sec.rows:
            params[key] = _num(val, no, key)

    default = meta.get("default_family", "")
    if default and default not in families:
        raise ScenarioFormatError(None, "default_family", f"family {default!r} is not defined")
    return Scenario(meta["id"], space, ts, observables, families, params, default)


def _parse_observable(space: ProductSpace, sec: _Section):
    factor_rows = [r for r in sec.rows if r[1].startswith("@") or r[1] == "coefficient"]
    if factor_rows and len(factor_rows) != len(sec.rows):
        raise ScenarioFormatError(sec.line, sec.name, "mixes dense elements with site factors")
    if factor_rows:
        coeff, factors = 1.0 + 0j, {}
        for no, key, val in sec.rows:
            if key == "coefficient":
                coeff = _num(val, no, key)
                continue
            m = _FACTOR.match(key)
            if not m:
                raise ScenarioFormatError(no, key, "expected '@<site> <row> | <col>'")
            s = _site(space, m.group(1), no, key)
            d = space.sites[s].dimension
            mat = factors.setdefault(s, np.zeros((d, d), dtype=np.complex128))
            mat[_local(space, s, m.group(2), no, key), _local(space, s, m.group(3), no, key)] = _num(val, no, key)
        return LocalProduct(space, tuple(factors.items()), coeff)
    d = space.total_dimension
    mat = np.zeros((d, d), dtype=np.complex128)
    for no, key, val in sec.rows:
        m = _DENSE.match(key)
        if not m:
            raise ScenarioFormatError(no, key, "expected '<row basis> | <col basis>'")
        mat[_basis_index(space, m.group(1), no), _basis_index(space, m.group(2), no)] = _num(val, no, key)
    return LinearOp(space, mat)


def _parse_family(space: ProductSpace, sec: _Section) -> ProjectorFamily:
    per_site: list[dict[str, np.ndarray]] = [{} for _ in space.sites]
    for no, key, val in sec.rows:
        m = _FAMILY.match(key)
        if not m:
            raise ScenarioFormatError(no, key, "expected '@<site> <label> : <row> | <col>'")
        s = _site(space, m.group(1), no, key)
        d = space.sites[s].dimension
        mat = per_site[s].setdefault(m.group(2), np.zeros((d, d), dtype=np.complex128))
        mat[_local(space, s, m.group(3), no, key), _local(space, s, m.group(4), no, key)] = _num(val, no, key)
    try:
        return ProjectorFamily(sec.name, tuple(tuple(d.items()) for d in per_site))
    except ValueError as exc:
        raise ScenarioFormatError(sec.line, sec.name, str(exc)) from None


def _fmt(z: complex) -> str:
    return f"{float(z.real) + 0.0!r}, {float(z.imag) + 0.0!r}"


def _local_elements(site: LocalSpace, mat: np.ndarray):
    nz = [(i, j) for i in range(mat.shape[0]) for j in range(mat.shape[1]) if mat[i, j] != 0]
    # an all-zero factor still needs one line to exist
    for i, j in nz or [(0, 0)]:
        yield site.labels[i], site.labels[j], complex(mat[i, j])


def serialize_scenario(s: Scenario) -> str:
    space = s.space
    lines = ["# tsvf scenario", f"id = {s.id}"]
    if s.default_family:
        lines.append(f"default_family = {s.default_family}")
    lines += ["", "[space]"]
    for site in space.sites:
        tail = " ; fock" if site.kind == "fock" else ""
        lines.append(f"site = {', '.join(site.labels)}{tail}")
    for kind, ket in (("pre", s.two_state.pre), ("post", s.two_state.post)):
        lines += ["", f"[{kind}]"]
        for idx in np.flatnonzero(ket.amplitudes):
            lines.append(f"{'.'.join(space.labels_of(int(idx)))} = {_fmt(ket.amplitudes[idx])}")
    for name in sorted(s.observables):
        op = s.observables[name]
        lines += ["", f"[observable {name}]"]
        if isinstance(op, LocalProduct):
            lines.append(f"coefficient = {_fmt(op.coefficient)}")
            for site_idx, mat in op.factors:
                for r, c, z in _local_elements(space.sites[site_idx], mat):
                    lines.append(f"@{site_idx + 1} {r} | {c} = {_fmt(z)}")
        else:
            rows, cols = np.nonzero(op.matrix)
            for i, j in zip(rows.tolist(), cols.tolist()):
                lines.append(
                    f"{'.'.join(space.labels_of(i))} | {'.'.join(space.labels_of(j))} = {_fmt(op.matrix[i, j])}"
                )
    for name in sorted(s.families):
        fam = s.families[name]
        lines += ["", f"[family {name}]"]
        for site_idx in range(fam.n_sites):
            for lab, mat in fam.sites[site_idx]:
                for r, c, z in _local_elements(space.sites[site_idx], mat):
                    lines.append(f"@{site_idx + 1} {lab} : {r} | {c} = {_fmt(z)}")
    if s.params:
        lines += ["", "[params]"]
        for name in sorted(s.params):
            lines.append(f"{name} = {_fmt(complex(s.params[name]))}")
    return "\n".join(lines) + "\n"


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())
