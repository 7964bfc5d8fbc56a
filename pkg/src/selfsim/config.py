"""JSON substitution configs and the built-in example library."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ParseError
from .substitution import (Child, Prototile, Substitution, check_primitive, realize_1d,
                           validate_geometry)

BUILTINS = ("table", "ab42", "sym95")


@dataclass
class SubstitutionConfig:
    name: str
    dimension: int
    expansion: object
    prototiles: list
    rules: list
    asserted_nonperiodic: bool = False
    provenance: str = ""
    extra: dict = field(default_factory=dict)

    def to_substitution(self) -> Substitution:
        ids = [p["id"] for p in self.prototiles]
        if len(set(ids)) != len(ids):
            raise ParseError("duplicate prototile ids")
        index = {pid: i for i, pid in enumerate(ids)}
        protos = []
        for p in self.prototiles:
            ext = p.get("extent")
            if not isinstance(ext, list) or len(ext) != self.dimension or not all(isinstance(e, int) for e in ext):
                raise ParseError(f"prototile {p['id']}: extent must be {self.dimension} integers")
            protos.append(Prototile(p["id"], tuple(ext), label=p.get("label", ""), color=p.get("color", "")))
        rules = [None] * len(protos)
        symbolic = False
        for r in self.rules:
            if r.get("parent") not in index:
                raise ParseError(f"rule for unknown parent {r.get('parent')!r}")
            kids = []
            pos = 0
            for c in r.get("children", []):
                if c.get("type") not in index:
                    raise ParseError(f"rule {r['parent']}: unknown child type {c.get('type')!r}")
                t = index[c["type"]]
                off = c.get("offset")
                if off is None:
                    if self.dimension != 1:
                        raise ParseError("offsets may be omitted only in dimension 1")
                    symbolic = True
                    off = [pos]
                pos = off[0] + protos[t].size[0]
                kids.append(Child(t, tuple(off)))
            rules[index[r["parent"]]] = tuple(kids)
        if any(r is None for r in rules):
            raise ParseError("every prototile needs a rule")
        lam = self.expansion
        sub = Substitution(self.dimension, lam if lam is not None else 0, tuple(protos), tuple(rules), self.name)
        if lam is None or symbolic:
            if self.dimension != 1:
                raise ParseError("expansion is required in dimension 2")
            check_primitive(sub)
            sub = realize_1d(sub)
        validate_geometry(sub)
        check_primitive(sub)
        return sub


def config_from_dict(obj: dict) -> SubstitutionConfig:
    try:
        known = {"name", "dimension", "expansion", "prototiles", "rules", "asserted_nonperiodic", "provenance"}
        return SubstitutionConfig(
            name=str(obj["name"]),
            dimension=int(obj["dimension"]),
            expansion=obj.get("expansion"),
            prototiles=list(obj["prototiles"]),
            rules=list(obj["rules"]),
            asserted_nonperiodic=bool(obj.get("asserted_nonperiodic", False)),
            provenance=str(obj.get("provenance", "")),
            extra={k: v for k, v in obj.items() if k not in known},
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed config: {exc!r}") from exc


def load_config(path) -> SubstitutionConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ParseError(f"no such config: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    return config_from_dict(obj)


def parse_config(path) -> Substitution:
    return load_config(path).to_substitution()


def builtin_config(name: str) -> SubstitutionConfig:
    if name not in BUILTINS:
        raise ParseError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}")
    text = resources.files("selfsim").joinpath("builtins", f"{name}.json").read_text()
    return config_from_dict(json.loads(text))


def builtin(name: str) -> Substitution:
    return builtin_config(name).to_substitution()


def _inline(x) -> str:
    return json.dumps(x, separators=(", ", ": "))


def emit_config(cfg: SubstitutionConfig) -> str:
    """Canonical text form: fixed key order, one prototile/child per line."""
    lines = ["{"]
    lines.append(f'  "name": {_inline(cfg.name)},')
    lines.append(f'  "dimension": {cfg.dimension},')
    lines.append(f'  "expansion": {_inline(cfg.expansion)},')
    lines.append('  "prototiles": [')
    for i, p in enumerate(cfg.prototiles):
        comma = "," if i < len(cfg.prototiles) - 1 else ""
        lines.append(f"    {_inline(p)}{comma}")
    lines.append("  ],")
    lines.append('  "rules": [')
    for i, r in enumerate(cfg.rules):
        lines.append(f'    {{"parent": {_inline(r["parent"])}, "children": [')
        kids = r["children"]
        for k, c in enumerate(kids):
            comma = "," if k < len(kids) - 1 else ""
            lines.append(f"      {_inline(c)}{comma}")
        comma = "," if i < len(cfg.rules) - 1 else ""
        lines.append(f"    ]}}{comma}")
    lines.append("  ],")
    for key, val in sorted(cfg.extra.items()):
        lines.append(f"  {_inline(key)}: {_inline(val)},")
    lines.append(f'  "asserted_nonperiodic": {_inline(cfg.asserted_nonperiodic)},')
    lines.append(f'  "provenance": {_inline(cfg.provenance)}')
    lines.append("}")
    return "\n".join(lines) + "\n"
