"""JSON documents: schema checks and conversion to and from the core types.

Every document carries ``schema_version``.  ``check_document`` returns
diagnostics as ``(path, message)`` pairs, the path being a JSON pointer
into the offending document.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

from .coarse import CoarseError, CoarseSpace
from .dr import KGraph, graph_from_json
from .grp import (AbelianGroup, ChainError, ChainLevel, FiniteGroup, FreeGroup, GroupError, GroupHandle,
                  QuotientChain, cyclic_two_power_chain, elementary_two_chain, free_abelianized_chain,
                  trivial_chain)
from .pact import PartialActionSpec, parse_partial_action

SCHEMA_VERSION = 1
KINDS = ("group", "chain", "groupoid", "paction", "graph", "kgraph", "coarse", "k0-witness", "report")

BUILTIN_CHAINS = {
    "z-mod-2k": cyclic_two_power_chain,
    "f2-abelianized": free_abelianized_chain,
    "elementary-2": elementary_two_chain,
    "trivial": trivial_chain,
}


class DocumentError(ValueError):
    """A document failed its schema; ``problems`` lists ``(pointer, message)``."""

    def __init__(self, kind: str, problems: list):
        self.kind = kind
        self.problems = problems
        head = "; ".join(f"{p or '/'}: {m}" for p, m in problems[:3])
        super().__init__(f"{kind} document invalid: {head}")


@lru_cache(maxsize=None)
def load_schema(kind: str) -> dict:
    if kind not in KINDS:
        raise KeyError(f"unknown document kind {kind!r}")
    text = resources.files("ample").joinpath("schemas", f"{kind}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def _pointer(parts) -> str:
    return "".join("/" + str(p).replace("~", "~0").replace("/", "~1") for p in parts)


def check_document(kind: str, doc) -> list[tuple[str, str]]:
    schema = load_schema(kind)
    validator = jsonschema.Draft202012Validator(schema)
    errs = sorted(validator.iter_errors(doc), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    return [(_pointer(e.absolute_path), e.message) for e in errs]


def require(kind: str, doc) -> dict:
    problems = check_document(kind, doc)
    if problems:
        raise DocumentError(kind, problems)
    return doc


def canonical(doc) -> str:
    """Sorted keys, no insignificant whitespace, UTF-8 kept as is."""
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


# ------------------------------------------------------------------ groups


def group_to_json(G: GroupHandle) -> dict:
    if isinstance(G, FreeGroup):
        return {"kind": "free", "rank": G.rank, "labels": list(G.labels)}
    if isinstance(G, AbelianGroup):
        return {"kind": "abelian", "moduli": list(G.moduli), "labels": list(G.labels)}
    if isinstance(G, FiniteGroup):
        d = {"kind": "finite", "table": G.table.tolist(), "gens": list(G.gens), "labels": list(G.labels)}
        if G.names is not None:
            d["names"] = list(G.names)
        return d
    raise TypeError(f"cannot serialise {G!r}")


def group_from_json(doc: dict) -> GroupHandle:
    kind = doc["kind"]
    if kind == "free":
        return FreeGroup(doc["rank"], doc.get("labels"))
    if kind == "abelian":
        if "moduli" in doc:
            return AbelianGroup(doc["moduli"], doc.get("labels"))
        return AbelianGroup.free_abelian(doc["rank"], doc.get("labels"))
    if kind == "finite":
        return FiniteGroup(doc["table"], doc.get("gens"), doc.get("labels"), doc.get("names"))
    raise GroupError(f"unknown group kind {kind!r}")


# ------------------------------------------------------------------ chains


def chain_to_json(chain: QuotientChain) -> dict:
    levels = []
    for lev in chain.levels:
        g = group_to_json(lev.group)
        d = {"table": g["table"], "gens": g["gens"], "labels": g["labels"],
             "gen_images": list(lev.gen_images),
             "factor_map": None if lev.factor_map is None else list(lev.factor_map)}
        if "names" in g:
            d["names"] = g["names"]
        levels.append(d)
    return {"schema_version": SCHEMA_VERSION, "name": chain.name, "base": group_to_json(chain.base),
            "faithful_assumed": chain.faithful_assumed, "levels": levels}


def chain_from_json(doc: dict) -> QuotientChain:
    if "builtin" in doc:
        name = doc["builtin"]
        if name not in BUILTIN_CHAINS:
            raise ChainError(f"unknown builtin chain {name!r}; known: {', '.join(sorted(BUILTIN_CHAINS))}")
        return BUILTIN_CHAINS[name](doc["depth"])
    base = group_from_json(doc["base"])
    levels = []
    for lev in doc["levels"]:
        G = FiniteGroup(lev["table"], lev.get("gens"), lev.get("labels"), lev.get("names"))
        phi = lev.get("factor_map")
        levels.append(ChainLevel(G, tuple(lev["gen_images"]), None if phi is None else tuple(phi)))
    return QuotientChain(base, levels, faithful_assumed=doc.get("faithful_assumed", True),
                         name=doc.get("name", ""))


# --------------------------------------------------------- partial actions


def paction_to_json(spec: PartialActionSpec) -> dict:
    return {"schema_version": SCHEMA_VERSION, "group": group_to_json(spec.group), **spec.to_json()}


def paction_from_json(doc: dict) -> PartialActionSpec:
    return parse_partial_action(doc, group_from_json(doc["group"]))


# ------------------------------------------------------ graphs and spaces


def graph_to_json(G: KGraph) -> dict:
    return {"schema_version": SCHEMA_VERSION, **G.to_json()}


def graph_doc(doc: dict) -> KGraph:
    return graph_from_json(doc)


def coarse_to_json(space: CoarseSpace, f=None, group: GroupHandle | None = None) -> dict:
    d = {"schema_version": SCHEMA_VERSION, **space.to_json(), "names": list(space.names)}
    if f is not None:
        d["map"] = {"group": group_to_json(group), "values": [group.format(v) for v in f]}
    return d


def coarse_from_json(doc: dict):
    """Returns ``(space, f, group)``; ``f`` and ``group`` are ``None`` without a map."""
    space = CoarseSpace.from_labels(doc["points"], doc["generators"], doc.get("names"))
    m = doc.get("map")
    if m is None:
        return space, None, None
    group = group_from_json(m["group"])
    if len(m["values"]) != space.n:
        raise CoarseError(f"map has {len(m['values'])} values for {space.n} points")
    return space, [group.parse(v) for v in m["values"]], group
