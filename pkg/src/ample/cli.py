"""Command line front door: ``ample <module> <op> [--flags]``.

Every run produces one JSON report.  Exit codes: 0 pass (or evidence),
1 fail with a witness, 2 inconclusive, 3 input error.  Reports embed the
canonical inputs and the resolved configuration, so ``ample replay`` can
re-execute them without the original files.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field

from . import __version__
from . import coarse as crs
from . import dr, gpd, hls, kzero, pact
from .grp import ChainError, GroupError
from .serial import (DocumentError, canonical, chain_from_json, check_document, coarse_from_json,
                     group_from_json, paction_from_json, require)

EXIT = {"pass": 0, "evidence": 0, "fail": 1, "inconclusive": 2}
INPUT_ERROR = 3
ENV_PREFIX = "AMPLE_BUDGET_"


class ConfigError(ValueError):
    pass


class InputError(ValueError):
    def __init__(self, message, problems=None):
        super().__init__(message)
        self.problems = problems or []


# ------------------------------------------------------------------ config


@dataclass
class Budgets:
    depth: int = 3             # path length L
    truncation: int = 2        # chain level N (or n)
    radius: int = 2            # ball radius l
    search: int = 10_000       # search / step budget

    @classmethod
    def from_dict(cls, d: dict) -> "Budgets":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ConfigError(f"unknown budget keys: {', '.join(unknown)}")
        b = cls(**{k: _nonneg(k, v) for k, v in d.items()})
        return b


def _nonneg(name, v) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        try:
            v = int(str(v), 10)
        except ValueError:
            raise ConfigError(f"budget {name} must be an integer, got {v!r}") from None
    if v < 0:
        raise ConfigError(f"budget {name} must be nonnegative, got {v}")
    return v


@dataclass
class RunConfig:
    module: str
    op: str
    inputs: dict = field(default_factory=dict)      # role -> path
    params: dict = field(default_factory=dict)
    output: str | None = None
    format: str = "text"
    budgets: Budgets = field(default_factory=Budgets)
    tolerance: float = 1e-9

    _KEYS = ("module", "op", "inputs", "params", "output", "format", "budgets", "tolerance")

    def __post_init__(self):
        if self.format not in ("text", "json"):
            raise ConfigError(f"format must be text or json, got {self.format!r}")
        if not (self.tolerance >= 0):
            raise ConfigError("tolerance must be nonnegative")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        unknown = sorted(set(d) - set(cls._KEYS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        d = dict(d)
        d["budgets"] = Budgets.from_dict(d.get("budgets", {}))
        return cls(**d)

    def replay_dict(self) -> dict:
        """What a report needs to re-run: no paths, no output settings."""
        return {"module": self.module, "op": self.op, "params": self.params,
                "budgets": dataclasses.asdict(self.budgets), "tolerance": self.tolerance}


def env_budgets(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for key, val in environ.items():
        if key.startswith(ENV_PREFIX):
            out[key[len(ENV_PREFIX):].lower()] = val
    return out


# ------------------------------------------------------------------ report


@dataclass
class Report:
    kind: str
    verdict: str
    payload: dict
    replay: dict
    input_digest: str
    tool_version: str = __version__
    message: str = ""

    def to_json(self) -> dict:
        d = {"schema_version": 1, "kind": self.kind, "verdict": self.verdict, "payload": self.payload,
             "replay": self.replay, "input_digest": self.input_digest, "tool_version": self.tool_version}
        if self.message:
            d["message"] = self.message
        return d

    def dumps(self) -> str:
        return canonical(self.to_json())

    @property
    def exit_code(self) -> int:
        return EXIT[self.verdict]


def digest(inputs: dict) -> str:
    return hashlib.sha256(canonical(inputs).encode("utf-8")).hexdigest()


def render_text(doc: dict) -> str:
    """Readable view of a JSON report."""
    lines = [f"{doc['kind']}: {doc['verdict'].upper()}"]
    if doc.get("message"):
        lines.append(f"  {doc['message']}")

    def walk(x, indent):
        pad = "  " * indent
        if isinstance(x, dict):
            for k in sorted(x):
                v = x[k]
                if isinstance(v, (dict, list)) and v and not _flat(v):
                    lines.append(f"{pad}{k}:")
                    walk(v, indent + 1)
                else:
                    lines.append(f"{pad}{k}: {canonical(v) if isinstance(v, (dict, list)) else v}")
        elif isinstance(x, list):
            for v in x:
                if isinstance(v, (dict, list)) and not _flat(v):
                    lines.append(f"{pad}-")
                    walk(v, indent + 1)
                else:
                    lines.append(f"{pad}- {canonical(v) if isinstance(v, (dict, list)) else v}")

    walk(doc["payload"], 1)
    lines.append(f"  input digest: {doc['input_digest'][:16]}  version: {doc['tool_version']}")
    return "\n".join(lines)


def _flat(v) -> bool:
    items = v.values() if isinstance(v, dict) else v
    return len(canonical(v)) <= 80 and all(not isinstance(i, (dict, list)) or not i for i in items)


# ---------------------------------------------------------------- handlers

HANDLERS: dict = {}
ROLES: dict = {}


def handler(module: str, op: str, roles=()):
    def deco(fn):
        HANDLERS[(module, op)] = fn
        ROLES[(module, op)] = tuple(roles)
        return fn
    return deco


def _chain(docs):
    try:
        return chain_from_json(require("chain", docs["chain"]))
    except (ChainError, GroupError) as exc:
        raise InputError(f"chain rejected: {exc}") from None


def _graph(docs, role="graph"):
    doc = docs[role]
    kind = "kgraph" if doc.get("k", 1) != 1 or "squares" in doc else "graph"
    require(kind, doc)
    try:
        return dr.graph_from_json(doc)
    except dr.GraphError as exc:
        raise InputError(f"graph rejected: {exc}") from None


def _space(docs):
    try:
        return coarse_from_json(require("coarse", docs["space"]))
    except (crs.CoarseError, GroupError) as exc:
        raise InputError(f"space rejected: {exc}") from None


def _need(params, key):
    if params.get(key) in (None, ""):
        raise InputError(f"missing --{key.replace('_', '-')}")
    return params[key]


def _ints(text) -> list[int]:
    return [int(t) for t in str(text).replace(",", " ").split()]


# -- validate


@handler("validate", "run", roles=("input",))
def _validate(cfg, docs):
    kind = cfg.params["kind"]
    doc = docs["input"]
    require(kind, doc)
    if kind == "group":
        try:
            G = group_from_json(doc)
        except GroupError as exc:
            return "fail", {"error": str(exc)}
        return "pass", {"group": repr(G)}
    if kind == "chain":
        try:
            C = chain_from_json(doc)
        except (ChainError, GroupError) as exc:
            return "fail", {"error": str(exc)}
        return "pass", {"depth": C.depth, "sizes": [lev.group.n for lev in C.levels],
                        "faithful_assumed": C.faithful_assumed}
    if kind == "groupoid":
        try:
            G = gpd.validate_groupoid(doc)
        except gpd.GroupoidError as exc:
            return "fail", {"axiom": exc.axiom, "witness": list(exc.witness), "error": str(exc)}
        return "pass", {"arrows": G.n, "units": G.units.size}
    if kind == "paction":
        try:
            spec = paction_from_json(doc)
        except GroupError as exc:
            raise InputError(str(exc)) from None
        except pact.PartialActionError as exc:
            return "fail", {"axiom": exc.axiom, "witness": {k: str(v) for k, v in exc.witness.items()},
                            "error": str(exc)}
        try:
            pact.validate_partial_action(spec)
        except pact.PartialActionError as exc:
            out = {"axiom": exc.axiom, "witness": _pact_witness(spec, exc.witness), "error": str(exc)}
            if exc.suggestion is not None:
                out["suggestion"] = exc.suggestion.to_json()
            return "fail", out
        return "pass", {"points": len(spec.points), "support": len(spec.maps)}
    if kind in ("graph", "kgraph"):
        try:
            G = dr.graph_from_json(doc)
        except dr.GraphError as exc:
            return "fail", {"error": str(exc), "witness": _plain(exc.witness)}
        return "pass", {"k": G.k, "vertices": G.nv, "edges": G.ne}
    if kind == "coarse":
        try:
            space, f, group = coarse_from_json(doc)
        except crs.CoarseError as exc:
            return "fail", {"error": str(exc), "witness": _plain(exc.witness)}
        out = {"points": space.n, "ulf": space.ulf_profile()}
        if f is not None:
            col = crs.collision(f, group)
            if col is not None:
                return "fail", {**out, "error": "map is not injective",
                                "witness": [space.points[col[0]], space.points[col[1]]]}
        return "pass", out
    if kind == "k0-witness":
        G = dr.graph_from_json(doc["graph"])
        failures = []
        for i, st in enumerate(doc["steps"]):
            try:
                bad = kzero.replay_step(G, kzero.step_from_json(G, st))
            except (dr.GraphError, kzero.K0Error) as exc:
                bad = [str(exc)]
            failures += [{"step": i, "problem": b} for b in bad]
        return ("fail" if failures else "pass"), {"steps": len(doc["steps"]), "failures": failures}
    return "pass", {}


def _pact_witness(spec, w) -> dict:
    G = spec.group
    out = {}
    for k, v in w.items():
        if k in ("gamma", "eta"):
            out[k] = G.format(v)
        elif k == "x":
            out[k] = spec.points[v]
        else:
            out[k] = v
    return out


def _plain(x):
    return json.loads(json.dumps(x, default=str)) if x is not None else None


# -- pact


def _paction(docs):
    try:
        spec = paction_from_json(require("paction", docs["input"]))
        return pact.validate_partial_action(spec)
    except (GroupError, pact.PartialActionError) as exc:
        raise InputError(f"partial action rejected: {exc}") from None


@handler("pact", "roundtrip", roles=("input",))
def _pact_roundtrip(cfg, docs):
    spec = _paction(docs)
    tg = pact.build_transformation_groupoid(spec)
    back = pact.cocycle_to_partial_action(tg.cocycle)
    same = back.spec == spec
    bis = pact.preimage_bisections(tg.cocycle)
    bad = [spec.group.format(g) for g, ok in bis.items() if not ok]
    payload = {"arrows": tg.groupoid.n, "identity": same, "non_bisections": bad,
               "recovered": back.spec.to_json()}
    return ("pass" if same and not bad else "fail"), payload


@handler("pact", "delta", roles=("input",))
def _pact_delta(cfg, docs):
    spec = _paction(docs)
    tg = pact.build_transformation_groupoid(spec)
    G, c = tg.groupoid, tg.cocycle
    a, b = pact.canonical_delta_h(tg)
    H = pact.DeltaCheck.verify(G, a, b)
    K = G.units.tolist()
    pieces = [("all", list(range(G.n)))]
    fibres: dict = {}
    for g, v in enumerate(c.values):
        fibres.setdefault(v, []).append(g)
    pieces += [(spec.group.format(v), fibres[v]) for v in spec.group.sorted(fibres)]
    audits, ok = [], True
    for name, C in pieces:
        aud = H.audit(K, C, cocycle=c)
        ok &= aud.within_bound
        audits.append({"C": name, **aud.to_json(spec.group)})
    return ("pass" if ok else "fail"), {"h_size": int(a.size), "audits": audits}


# -- hls


def _gens(chain):
    base = chain.base
    return [base.gen(i) for i in range(base.ngens)]


@handler("hls", "build", roles=("chain",))
def _hls_build(cfg, docs):
    chain = _chain(docs)
    N = min(cfg.budgets.truncation, chain.depth)
    t = hls.build_hls(chain, N, top=bool(cfg.params.get("top")))
    return "pass", {"N": N, "arrows": t.groupoid.n, "units": int(t.groupoid.units.size),
                    "fibres_are_groups": hls.fibers_are_groups(t), "top": t.top}


@handler("hls", "afs", roles=("chain",))
def _hls_afs(cfg, docs):
    chain = _chain(docs)
    N = min(cfg.budgets.truncation, chain.depth)
    t = hls.build_afs(chain, N)
    principal = hls.is_principal(t.groupoid)
    return ("pass" if principal else "fail"), {"N": N, "arrows": t.groupoid.n,
                                               "units": int(t.groupoid.units.size), "principal": principal}


@handler("hls", "witness", roles=("chain",))
def _hls_witness(cfg, docs):
    chain = _chain(docs)
    n, l = cfg.budgets.truncation, cfg.budgets.radius
    if n > chain.depth:
        raise InputError(f"level {n} exceeds chain depth {chain.depth}")
    cert = hls.delta_violation_witness(chain, _gens(chain), l, n)
    bad = hls.replay_delta_witness(chain, cert)
    payload = {"certificate": cert.to_json(chain), "bound": cert.lower_bound,
               "replay_failures": [list(b) for b in bad]}
    return ("fail" if bad else "evidence"), payload


@handler("hls", "equicont", roles=("chain",))
def _hls_equicont(cfg, docs):
    chain = _chain(docs)
    N = min(cfg.budgets.truncation, chain.depth)
    radius = cfg.budgets.radius
    levels = [int(cfg.params["k"])] if cfg.params.get("k") is not None else list(range(N + 1))
    point = int(cfg.params.get("point") or 0)
    x0 = hls.compatible_point(chain, N, point)
    certs = []
    for k in levels:
        if not 0 <= k <= N:
            raise InputError(f"cover level {k} outside 0..{N}")
        cert = hls.equicontinuity_certificate(chain, N, _gens(chain), radius, x0, hls.level_cover(chain, k))
        d = cert.to_json()
        d.pop("trace")
        certs.append(d)
        if not cert.ok:
            return "fail", {"N": N, "radius": radius, "certificates": certs}
    return "pass", {"N": N, "radius": radius, "certificates": certs}


@handler("hls", "iso", roles=("chain",))
def _hls_iso(cfg, docs):
    chain = _chain(docs)
    N = min(cfg.budgets.truncation, chain.depth)
    try:
        left, right, res = hls.hls_vs_partial_action_iso(chain, N, cfg.budgets.search)
    except (ValueError, KeyError) as exc:
        raise InputError(f"comparison needs an elementary abelian chain: {exc}") from None
    verdict = {"isomorphic": "pass", "not-isomorphic": "fail", "exhausted": "inconclusive"}[res.status]
    return verdict, {"N": N, "arrows": [left.groupoid.n, right.groupoid.n],
                     "result": res.to_json(left.groupoid, right.groupoid)}


# -- dr


@handler("dr", "cylinders", roles=("graph",))
def _dr_cylinders(cfg, docs):
    G = _graph(docs)
    try:
        mu = G.parse_path(_need(cfg.params, "mu"))
        nu = G.parse_path(_need(cfg.params, "nu"))
    except dr.GraphError as exc:
        raise InputError(str(exc)) from None
    meet = dr.cylinder_meet(G, mu, nu)
    diff = dr.cylinder_diff(G, mu, nu)
    P = max(len(mu.edges), len(nu.edges)) + 1
    ok = dr.verify_diff(G, mu, nu, diff, P)
    return ("pass" if ok else "fail"), {"meet": [G.fmt(p) for p in meet], "difference": [G.fmt(p) for p in diff],
                                        "checked_depth": P, "verified": ok}


@handler("dr", "cocycle", roles=("graph",))
def _dr_cocycle(cfg, docs):
    G = _graph(docs)
    L = cfg.budgets.depth
    T = dr.DrTruncation(G, L)
    chk = dr.cocycle_table_check(T, dr.FLambda(G, cfg.budgets.search))
    prop = dr.local_properness_certificate(G, L)
    payload = {"L": L, "bisections": len(T), "homomorphism": chk.homomorphism, "degree_ok": chk.degree_ok,
               "checked_products": chk.checked_products, "capped_products": chk.capped_products,
               "violations": [list(v) for v in chk.violations[:10]],
               "local_properness": dataclasses.asdict(prop)}
    if chk.violations or not chk.degree_ok or prop.failure is not None:
        return "fail", payload
    if chk.undecided or not prop.ok:
        return "inconclusive", payload
    return "pass", payload


@handler("dr", "purity", roles=("graph",))
def _dr_purity(cfg, docs):
    G = _graph(docs)
    rep = dr.purity_check_kgraph(G, cfg.budgets.depth, cfg.budgets.search)
    payload = {"verdict": rep.verdict, "L": rep.L, "bisections": rep.checked, "witness": rep.witness,
               "undecided": rep.undecided[:20], "facts": list(rep.facts)}
    return {"pure": "pass", "pure-up-to-L": "pass", "witness": "fail", "inconclusive": "inconclusive"}[rep.verdict], \
        payload


@handler("dr", "delta", roles=("graph",))
def _dr_delta(cfg, docs):
    G = _graph(docs)
    T = dr.DrTruncation(G, cfg.budgets.depth)
    rep = dr.same_degree_delta_bar_h(T)
    ok = rep.subgroupoid and rep.diagonal
    return ("pass" if ok else "fail"), {"L": cfg.budgets.depth, **rep.to_json()}


# -- coarse


def _with_map(docs):
    space, f, group = _space(docs)
    if f is None:
        raise InputError("this operation needs a map in the coarse document")
    return space, f, group


@handler("coarse", "check", roles=("space",))
def _coarse_check(cfg, docs):
    space, f, group = _space(docs)
    payload = {"points": space.n, "components": len(space.components()), "ulf": space.ulf_profile()}
    if f is None:
        return "pass", payload
    chk = crs.coarse_map_check(f, space, group, cfg.budgets.search)
    payload.update({"labels": chk.labels, "sizes": chk.sizes, "over_budget": chk.over_budget})
    if chk.collision is not None:
        a, b = chk.collision
        payload["collision"] = [space.points[a], space.points[b]]
        return "fail", payload
    return ("inconclusive" if chk.over_budget else "pass"), payload


@handler("coarse", "roundtrip", roles=("space",))
def _coarse_roundtrip(cfg, docs):
    space, f, group = _with_map(docs)
    x0 = int(cfg.params.get("x0") or 0)
    try:
        c = crs.map_to_cocycle(f, space, group)
    except crs.CoarseError as exc:
        return "fail", {"error": str(exc), "witness": _plain(exc.witness)}
    rec = crs.cocycle_to_map(c, x0)
    ok = crs.roundtrip(f, space, group, x0)
    return ("pass" if ok else "fail"), {
        "x0": space.points[x0], "arrows": c.groupoid.n,
        "recovered": {str(space.points[i]): group.format(v) for i, v in sorted(rec.values.items())},
        "missing": [space.points[i] for i in rec.missing], "identity_up_to_translation": ok}


@handler("coarse", "refute", roles=("space?",))
def _coarse_refute(cfg, docs):
    if "space" in docs:
        space, f, group = _with_map(docs)
    else:
        m = int(_need(cfg.params, "m"))
        group = crs.Z
        f = [crs.z_elem(i) for i in range(1, 2 * m + 1)]
    try:
        cert = crs.maximal_refuter(f, group)
    except crs.CoarseError as exc:
        raise InputError(str(exc)) from None
    bad = crs.replay_refuter(f, group, cert)
    return ("fail" if bad else "evidence"), {"certificate": cert.to_json(), "pairs": len(cert.pairs),
                                             "window": len(f), "replay_failures": bad}


@handler("coarse", "profile", roles=())
def _coarse_profile(cfg, docs):
    name = cfg.params.get("cocycle") or "z"
    windows = _ints(cfg.params.get("windows") or "4,8,16")
    if name == "z":
        group, c = crs.Z, crs.z_cocycle
        gammas = [crs.z_elem(0), crs.z_elem(1), crs.z_elem(-1)]
    elif name == "f2":
        group, c = crs.F2, crs.f2_cocycle
        gammas = [group.identity()] + [group.gen(i, s) for i in range(2) for s in (1, -1)]
    else:
        raise InputError(f"unknown cocycle {name!r}; use z or f2")
    if cfg.params.get("gammas"):
        gammas = [group.parse(t) for t in str(cfg.params["gammas"]).split(",")]
    prof = crs.properness_profile(c, group, windows, gammas)
    return "evidence", {"cocycle": name, "windows": prof.windows, "sizes": prof.sizes, "evidence": prof.evidence}


# -- kzero


def _open(G, text):
    try:
        return tuple(G.parse_path(t) for t in str(text).split(",") if t.strip())
    except dr.GraphError as exc:
        raise InputError(str(exc)) from None


@handler("kzero", "oracle", roles=("graph",))
def _k_oracle(cfg, docs):
    G = _graph(docs)
    try:
        K = kzero.snf_oracle(G)
    except kzero.K0Error as exc:
        raise InputError(str(exc)) from None
    loops = kzero.independent_loops_check(G)
    return "pass", {"group": K.describe(), "factors": list(K.factors),
                    "vertex_classes": {v: list(K.class_of_vector([int(i == j) for j in range(G.nv)]))
                                       for i, v in enumerate(G.vertices)},
                    "independent_loops": loops.ok, "loops_failing_at": loops.failing}


@handler("kzero", "witness", roles=("graph",))
def _k_witness(cfg, docs):
    G = _graph(docs)
    op = cfg.params.get("wop") or "neg"
    O = _open(G, _need(cfg.params, "open"))
    K = kzero.snf_oracle(G)
    try:
        if op == "neg":
            res, step = kzero.neg_witness(G, O)
            want = K.neg(K.class_of_vector(kzero.class_vector(G, O)))
        elif op == "add":
            O2 = _open(G, _need(cfg.params, "open2"))
            res, step = kzero.add_witness(G, O, O2)
            want = K.add(K.class_of_vector(kzero.class_vector(G, O)), K.class_of_vector(kzero.class_vector(G, O2)))
        else:
            raise InputError(f"unknown witness op {op!r}; use neg or add")
    except kzero.K0Error as exc:
        return "fail", {"error": str(exc), "witness": _plain(exc.witness)}
    got = K.class_of_vector(kzero.class_vector(G, res))
    bad = kzero.replay_step(G, step)
    cert = {"schema_version": 1, "graph": G.to_json(), "steps": [step.to_json(G)]}
    ok = not bad and got == want
    return ("pass" if ok else "fail"), {"op": op, "result": kzero.fmt_open(G, res), "class": list(got),
                                        "expected_class": list(want), "replay_failures": bad,
                                        "certificate": cert}


@handler("kzero", "realize", roles=("graph",))
def _k_realize(cfg, docs):
    G = _graph(docs)
    K = kzero.snf_oracle(G)
    target = _ints(_need(cfg.params, "target"))
    budget = cfg.params.get("steps")
    try:
        R = kzero.realize_class(G, target, budget=None if budget is None else int(budget), K=K)
    except kzero.K0Error as exc:
        if isinstance(exc.witness, dict) and "budget" in exc.witness:
            return "inconclusive", {"error": str(exc), "target": target}
        raise InputError(str(exc)) from None
    bad = [f for st in R.steps for f in kzero.replay_step(G, st)]
    got = K.class_of_vector(kzero.class_vector(G, R.Y))
    ok = not bad and got == R.target
    return ("pass" if ok else "fail"), {"realization": R.to_json(G), "class": list(got),
                                        "replay_failures": bad, "set": kzero.fmt_open(G, R.Y)}


# ---------------------------------------------------------------- dispatch


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc.msg} at line {exc.lineno}") from None


def execute(cfg: RunConfig, docs: dict) -> Report:
    """Run one operation on already-loaded documents."""
    key = (cfg.module, cfg.op)
    if key not in HANDLERS:
        raise InputError(f"unknown command {cfg.module} {cfg.op}")
    kind = f"{cfg.module}.{cfg.params['kind']}" if cfg.module == "validate" else f"{cfg.module}.{cfg.op}"
    replay = {"argv": [cfg.module, cfg.op], "inputs": docs, "config": cfg.replay_dict()}
    verdict, payload = HANDLERS[key](cfg, docs)
    return Report(kind, verdict, _plain(payload), replay, digest(docs))


def dispatch(cfg: RunConfig) -> tuple[Report | None, int, str]:
    """Load inputs, run, and return ``(report, exit code, error text)``."""
    try:
        docs = {role.rstrip("?"): _load(path) for role, path in cfg.inputs.items() if path}
        for role in ROLES.get((cfg.module, cfg.op), ()):
            if not role.endswith("?") and role not in docs:
                raise InputError(f"missing input --{role}")
        rep = execute(cfg, docs)
    except DocumentError as exc:
        lines = [f"{exc.kind} schema violation:"] + [f"  at {p or '/'}: {m}" for p, m in exc.problems]
        return None, INPUT_ERROR, "\n".join(lines)
    except InputError as exc:
        return None, INPUT_ERROR, str(exc)
    return rep, rep.exit_code, ""


# ------------------------------------------------------------------ replay


def first_difference(a, b, path="") -> tuple | None:
    if type(a) is not type(b):
        return path or "/", a, b
    if isinstance(a, dict):
        for k in sorted(set(a) | set(b)):
            if k not in a or k not in b:
                return f"{path}/{k}", a.get(k), b.get(k)
            d = first_difference(a[k], b[k], f"{path}/{k}")
            if d:
                return d
        return None
    if isinstance(a, list):
        for i, (x, y) in enumerate(zip(a, b)):
            d = first_difference(x, y, f"{path}/{i}")
            if d:
                return d
        if len(a) != len(b):
            return f"{path}/{min(len(a), len(b))}", a[len(b):] or None, b[len(a):] or None
        return None
    return None if a == b else (path or "/", a, b)


def replay_report(doc: dict) -> Report:
    """Re-execute a report from its embedded inputs and compare byte for byte."""
    require("report", doc)
    sec = doc["replay"]
    c = dict(sec["config"])
    cfg = RunConfig.from_dict({**c, "inputs": {}})
    docs = sec["inputs"]
    mismatch = doc["tool_version"] != __version__
    out = {"original_kind": doc["kind"], "original_verdict": doc["verdict"], "version_mismatch": mismatch}
    if digest(docs) != doc["input_digest"]:
        out["divergence"] = {"at": "/input_digest", "expected": doc["input_digest"], "got": digest(docs)}
        return Report("replay", "fail", out, {"argv": ["replay"], "inputs": {"report": doc}, "config": {}},
                      digest({"report": doc}), message="embedded inputs do not match the digest")
    fresh = execute(cfg, docs).to_json()
    old = {k: doc[k] for k in ("kind", "verdict", "payload")}
    new = {k: fresh[k] for k in ("kind", "verdict", "payload")}
    verified = canonical(old) == canonical(new)
    if not verified:
        at, exp, got = first_difference(old, new)
        out["divergence"] = {"at": at, "expected": exp, "got": got}
    msg = "tool version differs from the report; replayed anyway" if mismatch else ""
    return Report("replay", "pass" if verified else "fail", out,
                  {"argv": ["replay"], "inputs": {"report": doc}, "config": {}}, digest({"report": doc}),
                  message=msg)


# -------------------------------------------------------------------- argv


OPS = {
    "pact": {"roundtrip": ("input",), "delta": ("input",)},
    "hls": {op: ("chain",) for op in ("build", "afs", "witness", "equicont", "iso")},
    "dr": {op: ("graph",) for op in ("cylinders", "cocycle", "purity", "delta")},
    "coarse": {"check": ("space",), "roundtrip": ("space",), "refute": ("space",), "profile": ()},
    "kzero": {op: ("graph",) for op in ("oracle", "witness", "realize")},
}

PARAMS = {
    ("hls", "build"): ["top"], ("hls", "equicont"): ["k", "point"],
    ("dr", "cylinders"): ["mu", "nu"],
    ("coarse", "roundtrip"): ["x0"], ("coarse", "refute"): ["m"],
    ("coarse", "profile"): ["cocycle", "windows", "gammas"],
    ("kzero", "witness"): ["wop", "open", "open2"], ("kzero", "realize"): ["target", "steps"],
}

FLAGS = {"wop": "--op"}


def _common(p: argparse.ArgumentParser):
    p.add_argument("--format", choices=["text", "json"], default=None)
    p.add_argument("--output", "-o", help="also write the JSON report here")
    p.add_argument("--config", help="JSON file with budgets, tolerance and format")
    g = p.add_argument_group("budgets")
    g.add_argument("--depth", "--L", dest="depth", type=int, help="path length L")
    g.add_argument("--n", "--N", "--truncation", dest="truncation", type=int, help="chain level")
    g.add_argument("--l", "--radius", dest="radius", type=int, help="ball radius")
    g.add_argument("--budget", dest="search", type=int, help="search budget")
    p.add_argument("--tolerance", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ample", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ample {__version__}")
    mods = parser.add_subparsers(dest="module", required=True)

    v = mods.add_parser("validate", help="check a document against its schema and semantics")
    v.add_argument("kind", choices=["group", "chain", "groupoid", "paction", "graph", "kgraph", "coarse",
                                    "k0-witness", "report"])
    v.add_argument("file")
    _common(v)

    r = mods.add_parser("replay", help="re-execute a report and compare")
    r.add_argument("report")
    _common(r)

    for mod, ops in OPS.items():
        mp = mods.add_parser(mod)
        sub = mp.add_subparsers(dest="op", required=True)
        for op, roles in ops.items():
            sp = sub.add_parser(op)
            for role in roles:
                if role == "input":
                    sp.add_argument("input")
                else:
                    sp.add_argument(f"--{role}", required=(mod, op) != ("coarse", "refute"))
            for name in PARAMS.get((mod, op), []):
                if name == "top":
                    sp.add_argument("--top", action="store_true")
                else:
                    sp.add_argument(FLAGS.get(name, f"--{name}"), dest=name)
            _common(sp)
    return parser


def config_from_args(args, environ=None) -> RunConfig:
    """Defaults, then the config file, then ``AMPLE_BUDGET_*``, then explicit flags."""
    base: dict = {"budgets": {}}
    if args.config:
        extra = _load(args.config)
        if not isinstance(extra, dict):
            raise ConfigError("config file must hold a JSON object")
        allowed = {"budgets", "tolerance", "format"}
        unknown = sorted(set(extra) - allowed)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        base.update({k: v for k, v in extra.items() if k != "budgets"})
        base["budgets"].update(extra.get("budgets", {}))
    base["budgets"].update(env_budgets(environ))
    for name in ("depth", "truncation", "radius", "search"):
        val = getattr(args, name, None)
        if val is not None:
            base["budgets"][name] = val
    if args.tolerance is not None:
        base["tolerance"] = args.tolerance
    if args.format is not None:
        base["format"] = args.format
    module = args.module
    if module == "validate":
        op, inputs, params = "run", {"input": args.file}, {"kind": args.kind}
    else:
        op = args.op
        roles = OPS[module][op]
        inputs = {role: getattr(args, role) for role in roles if getattr(args, role, None)}
        if (module, op) == ("coarse", "refute") and "space" in inputs:
            inputs = {"space?": inputs["space"]}
        params = {}
        for name in PARAMS.get((module, op), []):
            val = getattr(args, name, None)
            if val not in (None, False):
                params[name] = val
    return RunConfig.from_dict({**base, "module": module, "op": op, "inputs": inputs, "params": params,
                                "output": args.output})


def _emit(rep: Report, cfg_format: str, output: str | None, out):
    text = rep.dumps()
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    out.write((text if cfg_format == "json" else render_text(rep.to_json())) + "\n")


def main(argv=None, *, stdout=None, stderr=None, environ=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return INPUT_ERROR if exc.code else 0
    if args.module == "replay":
        try:
            cfg = config_from_args(argparse.Namespace(**{**vars(args), "module": "validate", "kind": "report",
                                                          "file": args.report}), environ)
            rep = replay_report(_load(args.report))
        except (ConfigError, InputError) as exc:
            stderr.write(f"error: {exc}\n")
            return INPUT_ERROR
        except DocumentError as exc:
            stderr.write("\n".join([f"{exc.kind} schema violation:"] +
                                   [f"  at {p or '/'}: {m}" for p, m in exc.problems]) + "\n")
            return INPUT_ERROR
        _emit(rep, cfg.format, args.output, stdout)
        return rep.exit_code
    try:
        cfg = config_from_args(args, environ)
    except (ConfigError, InputError) as exc:
        stderr.write(f"error: {exc}\n")
        return INPUT_ERROR
    rep, code, err = dispatch(cfg)
    if rep is None:
        stderr.write(f"error: {err}\n")
        return code
    _emit(rep, cfg.format, cfg.output, stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())
