"""Built-in pre/post-selection scenarios and the observable query language.

Observable queries (whitespace-insensitive, sites 1-based)::

    expr   := factor ("*" factor)*
    factor := NAME              named observable of the scenario
            | "full-" LABEL     LABEL projector on every site
            | "a" SITE          annihilation operator (Fock sites)
            | "ad" SITE         creation operator (Fock sites)
            | LABEL SITE        projector of the default family

A whole expression that names an observable resolves to it directly.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .algebra import (
    MAX_TOTAL_DIMENSION,
    Ket,
    LinearOp,
    LocalProduct,
    LocalSpace,
    Operator,
    ProductSpace,
    compose,
    fock_annihilation,
    fock_creation,
    local_ket,
    tensor_ket,
)
from .hierarchy import ProjectorFamily
from .twostate import TwoState, weak_value

SQRT2 = np.sqrt(2.0)
SQRT3 = np.sqrt(3.0)


@dataclass(frozen=True, eq=False)
class Scenario:
    id: str
    space: ProductSpace
    two_state: TwoState
    observables: dict[str, Operator] = field(default_factory=dict)
    families: dict[str, ProjectorFamily] = field(default_factory=dict)
    params: dict[str, complex] = field(default_factory=dict)
    default_family: str = ""

    def __post_init__(self):
        if self.two_state.space != self.space:
            raise ValueError("two-state does not live on the scenario space")
        for name, op in self.observables.items():
            if op.space != self.space:
                raise ValueError(f"observable {name!r} does not live on the scenario space")
        for name, fam in self.families.items():
            fam.check_space(self.space)
        if self.families and not self.default_family:
            object.__setattr__(self, "default_family", next(iter(self.families)))
        if self.default_family and self.default_family not in self.families:
            raise ValueError(f"default family {self.default_family!r} is not defined")

    @property
    def family(self) -> ProjectorFamily:
        return self.families[self.default_family]

    def weak_value(self, expr: str) -> complex:
        return weak_value(self.two_state, resolve_observable(self, expr))


def _projector_product(space, family, assignment) -> LocalProduct:
    return LocalProduct(space, tuple((s, family.projector(s, lab)) for s, lab in assignment))


def _check_size(space: ProductSpace) -> None:
    if space.total_dimension > MAX_TOTAL_DIMENSION:
        raise ValueError(f"space dimension {space.total_dimension} exceeds the dense cap")


def two_box() -> Scenario:
    """Two particles, each in a left/right box; order-2 correlations only."""
    box = LocalSpace(("L", "R"))
    space = ProductSpace((box, box))
    plus = local_ket(box, [1, 1])
    pre = tensor_ket([plus, plus], space) * 0.5
    post = Ket.from_labels(space, {("L", "L"): 1, ("L", "R"): -1, ("R", "L"): -1}) * (1 / SQRT3)
    fam = ProjectorFamily.uniform("boxes", 2, {"L": box.projector("L"), "R": box.projector("R")})
    obs = {}
    for i in range(2):
        for lab in "LR":
            obs[f"{lab}{i + 1}"] = _projector_product(space, fam, [(i, lab)])
    for a, b in itertools.product("LR", repeat=2):
        obs[a + b] = _projector_product(space, fam, [(0, a), (1, b)])
    return Scenario("two-box", space, TwoState(pre, post, "two-box"), obs, {"boxes": fam})


def hydrogen() -> Scenario:
    """Proton box {A, B} times electron level {gr, ex}."""
    proton = LocalSpace(("A", "B"))
    electron = LocalSpace(("gr", "ex"))
    space = ProductSpace((proton, electron))
    pre = Ket.from_labels(space, {("A", "gr"): 1, ("B", "gr"): 1, ("B", "ex"): 1}) * (1 / SQRT3)
    post = Ket.from_labels(space, {("A", "gr"): 1, ("B", "gr"): 1, ("B", "ex"): -1}) * (1 / SQRT3)
    fam = ProjectorFamily(
        "levels",
        (
            (("A", proton.projector("A")), ("B", proton.projector("B"))),
            (("gr", electron.projector("gr")), ("ex", electron.projector("ex"))),
        ),
    )
    obs = {
        "PiB": _projector_product(space, fam, [(0, "B")]),
        "PiB_gr": _projector_product(space, fam, [(0, "B"), (1, "gr")]),
        "PiB_ex": _projector_product(space, fam, [(0, "B"), (1, "ex")]),
    }
    return Scenario("hydrogen", space, TwoState(pre, post, "hydrogen"), obs, {"levels": fam})


def n_body(n: int = 3, c: complex = 1.0) -> Scenario:
    """N spins, pre ``prod |+x>``, post bra ``2^(N/2) prod <-x| + C prod <-z|``.

    Site basis is ``u`` (sigma_z = +1, left box) and ``d`` (right box).
    """
    n = int(n)
    c = complex(c)
    if n < 2:
        raise ValueError("n_body needs n >= 2")
    if c == 0:
        raise ValueError("C = 0 makes the pre- and post-selected states orthogonal")
    spin = LocalSpace(("u", "d"))
    space = ProductSpace.uniform(spin, n)
    _check_size(space)
    up_x = local_ket(spin, [1 / SQRT2, 1 / SQRT2])
    down_x = local_ket(spin, [1 / SQRT2, -1 / SQRT2])
    down_z = local_ket(spin, [0, 1])
    pre = tensor_ket([up_x] * n, space)
    # the bra's coefficients conjugate into the stored ket
    post = tensor_ket([down_x] * n, space) * 2 ** (n / 2) + tensor_ket([down_z] * n, space) * c.conjugate()
    fam = ProjectorFamily.uniform("boxes", n, {"L": spin.projector("u"), "R": spin.projector("d")})
    obs = {f"full-{lab}": _projector_product(space, fam, [(i, lab) for i in range(n)]) for lab in "LR"}
    label = f"n-body(n={n},c={_fmt_c(c)})"
    return Scenario(
        "n-body", space, TwoState(pre, post, label), obs, {"boxes": fam}, {"N": complex(n), "C": c}
    )


def photon_polarization(n: int = 3) -> Scenario:
    """N photon sites {vac, H, V}; pre ``(prod|H> + |0>)``, post ``(prod|V> + |0>)``.

    Circular projectors ``R``, ``L`` act inside the occupied ``{H, V}`` block;
    ``vac`` completes each site's family.
    """
    n = int(n)
    if n < 1:
        raise ValueError("photon scenario needs n >= 1")
    mode = LocalSpace(("vac", "H", "V"))
    space = ProductSpace.uniform(mode, n)
    _check_size(space)
    vac, h, v = (local_ket(mode, e) for e in np.eye(3))
    pre = (tensor_ket([h] * n, space) + tensor_ket([vac] * n, space)) * (1 / SQRT2)
    post = (tensor_ket([v] * n, space) + tensor_ket([vac] * n, space)) * (1 / SQRT2)
    r = np.array([0, 1, 1j]) / SQRT2
    l = np.array([0, 1, -1j]) / SQRT2
    fam = ProjectorFamily.uniform(
        "circular", n, {"R": np.outer(r, r.conj()), "L": np.outer(l, l.conj()), "vac": mode.projector("vac")}
    )
    obs = {f"full-{lab}": _projector_product(space, fam, [(i, lab) for i in range(n)]) for lab in "RL"}
    return Scenario(
        "photon", space, TwoState(pre, post, f"photon(n={n})"), obs, {"circular": fam}, {"N": complex(n)}
    )


def fock_chain(n: int = 3, max_occupation: int = 1) -> Scenario:
    """n modes; pre ``(|1..1> + |0..0>)/sqrt2``, post ``|0..0>``.

    Observables ``a1*a2*...`` name every product of distinct annihilation
    operators, in increasing mode order.
    """
    n = int(n)
    if n < 1:
        raise ValueError("fock scenario needs n >= 1")
    mode = LocalSpace.fock(max_occupation)
    space = ProductSpace.uniform(mode, n)
    _check_size(space)
    pre = (Ket.basis(space, ["1"] * n) + Ket.basis(space, ["0"] * n)) * (1 / SQRT2)
    post = Ket.basis(space, ["0"] * n)
    fam = ProjectorFamily.uniform("occupation", n, {f"n{k}": mode.projector(str(k)) for k in range(mode.dimension)})
    ladders = [fock_annihilation(k, space) for k in range(n)]
    obs: dict[str, Operator] = {}
    for m in range(1, n + 1):
        for modes in itertools.combinations(range(n), m):
            name = "*".join(f"a{k + 1}" for k in modes)
            obs[name] = reduce(lambda x, y: x @ y, (ladders[k] for k in modes))
    return Scenario(
        "fock", space, TwoState(pre, post, f"fock(n={n})"), obs, {"occupation": fam},
        {"N": complex(n), "max_occupation": complex(max_occupation)},
    )


@dataclass(frozen=True)
class EMEnergyModel:
    """Field of particle i modeled as ``E_i = e_i * Pi_region^(i)``."""

    charges: tuple[float, float] = (1.0, 1.0)
    region: str = "L"


def em_energy(model: EMEnergyModel, scenario: Scenario | None = None) -> tuple[complex, tuple[complex, complex, complex]]:
    """Weak energy density of the probed boxes and its three terms.

    Returns ``(total, (<E1^2>, <E2^2>, 2<E1.E2>))``; ``total`` is computed from
    ``(E1 + E2)^2`` directly, not as the sum of the parts.
    """
    sc = two_box() if scenario is None else scenario
    if sc.space.n_sites != 2:
        raise ValueError("the energy model needs a two-particle scenario")
    fam = sc.family
    e1, e2 = (
        LocalProduct(sc.space, ((i, fam.projector(i, model.region)),), model.charges[i]).dense()
        for i in range(2)
    )
    ts = sc.two_state
    parts = (
        weak_value(ts, compose(e1, e1)),
        weak_value(ts, compose(e2, e2)),
        2 * weak_value(ts, compose(e1, e2)),
    )
    tot = e1 + e2
    return weak_value(ts, compose(tot, tot)), parts


def _fmt_c(c: complex) -> str:
    return f"{c.real:g}{c.imag:+g}i"


BUILTIN_SCENARIOS = {
    "two-box": (two_box, {}),
    "hydrogen": (hydrogen, {}),
    "n-body": (n_body, {"n": 3, "c": 1.0}),
    "photon": (photon_polarization, {"n": 3}),
    "fock": (fock_chain, {"n": 3}),
}


def build(scenario_id: str, **params) -> Scenario:
    try:
        ctor, defaults = BUILTIN_SCENARIOS[scenario_id]
    except KeyError:
        raise KeyError(f"unknown scenario {scenario_id!r}; known: {', '.join(BUILTIN_SCENARIOS)}") from None
    unknown = set(params) - set(defaults)
    if unknown:
        raise TypeError(f"scenario {scenario_id!r} does not take {sorted(unknown)}")
    return ctor(**{**defaults, **params})


class ObservableError(ValueError):
    pass


_LADDER = re.compile(r"^(ad|a)(\d+)$")


def resolve_observable(scenario: Scenario, expr: str) -> Operator:
    text = re.sub(r"\s+", "", expr)
    if not text:
        raise ObservableError("empty observable expression")
    if text in scenario.observables:
        return scenario.observables[text]
    ops = [_resolve_factor(scenario, tok) for tok in text.split("*")]
    if all(isinstance(op, LocalProduct) for op in ops):
        return reduce(lambda x, y: x @ y, ops)
    return reduce(compose, (op.dense() for op in ops))


def _site(scenario: Scenario, digits: str, token: str) -> int:
    k = int(digits)
    if not 1 <= k <= scenario.space.n_sites:
        raise ObservableError(f"site {k} in {token!r} is out of range 1..{scenario.space.n_sites}")
    return k - 1


def _resolve_factor(scenario: Scenario, token: str) -> Operator:
    if not token:
        raise ObservableError("empty factor in observable expression")
    if token in scenario.observables:
        return scenario.observables[token]
    fam = scenario.families.get(scenario.default_family)
    space = scenario.space
    if token.startswith("full-"):
        lab = token[len("full-"):]
        if fam is None or any(lab not in fam.labels(s) for s in range(space.n_sites)):
            raise ObservableError(f"unknown label {lab!r} in {token!r}")
        return _projector_product(space, fam, [(s, lab) for s in range(space.n_sites)])
    m = _LADDER.match(token)
    if m and (fam is None or m.group(1) not in fam.all_labels()):
        site = _site(scenario, m.group(2), token)
        if space.sites[site].kind != "fock":
            raise ObservableError(f"site {site + 1} in {token!r} is not a Fock mode")
        return (fock_creation if m.group(1) == "ad" else fock_annihilation)(site, space)
    if fam is not None:
        # longest label whose remainder is a site number
        for lab in sorted(fam.all_labels(), key=len, reverse=True):
            rest = token[len(lab):]
            if token.startswith(lab) and rest.isdigit():
                site = _site(scenario, rest, token)
                if lab not in fam.labels(site):
                    raise ObservableError(f"site {site + 1} has no projector {lab!r}")
                return _projector_product(space, fam, [(site, lab)])
    raise ObservableError(f"cannot resolve observable factor {token!r}")
