"""Regenerate the JSON documents in this directory."""

from __future__ import annotations

import json
from pathlib import Path

from ample import coarse, dr, grp, pact
from ample.serial import chain_to_json, coarse_to_json, graph_to_json, paction_to_json

HERE = Path(__file__).resolve().parent


def dump(name: str, doc: dict) -> None:
    (HERE / name).write_text(json.dumps(doc, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")


def main() -> None:
    dump("FIX7.json", paction_to_json(pact.fix7()))
    dump("FIX7-broken.json", paction_to_json(pact.fix7_broken()))
    dump("f2.json", chain_to_json(grp.free_abelianized_chain(3)))
    dump("z-chain.json", chain_to_json(grp.cyclic_two_power_chain(6)))
    dump("elementary.json", {"schema_version": 1, "builtin": "elementary-2", "depth": 2})
    for name, G in [("o2", dr.o_graph(2)), ("o3", dr.o_graph(3)), ("binary", dr.binary_graph()),
                    ("fix6", dr.fix6()), ("two-by-two", dr.two_by_two_kgraph())]:
        dump(f"{name}.json", graph_to_json(G))
    space = coarse.chain_window(8)
    dump("chain-window.json", coarse_to_json(space, [coarse.f2_map(n) for n in range(space.n)], coarse.F2))


if __name__ == "__main__":
    main()
