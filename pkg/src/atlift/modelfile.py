"""Reading and writing model files.

A model file is a JSON document holding a BGA, a free complex over it, a
connection and the cyclic form coefficients.  Coefficients are rational
strings such as ``"-1/3"`` (plain integers are accepted too); floats are
rejected because they are not exact.  Basis elements may be referenced by
index or by name.

    {
      "name": "torus1-rank2",
      "bga": {"basis": [{"name": "1", "p": 0, "q": 0}, ...],
              "unit": "1",
              "product": [[i, j, [[k, "c"], ...]], ...],
              "partial": [[i, [[k, "c"], ...]], ...],
              "delbar":  [[i, [[k, "c"], ...]], ...]},
      "complex": {"degrees": [{"deg": 0, "rank": 2}],
                  "delta": [{"deg": -1, "rows": [["c", ...], ...]}]},
      "connection": {"gamma": [{"deg": 0, "rows": [[[[basis, "c"], ...], ...], ...]}]},
      "form": {"a": "-1", "b": "0"}
    }
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from atlift.bga import BGA, Violation, validate
from atlift.connection import Connection, CyclicForm
from atlift.graded import Rational, fmt, rational
from atlift.homcomplex import FreeComplex, validate_complex

BUNDLED_SUFFIX = ".model"


class ModelError(Exception):
    """A model file problem: ``kind`` is parse, schema or validation."""

    def __init__(self, kind: str, location: str, message: str, violations=None):
        super().__init__(f"{kind} error at {location}: {message}")
        self.kind = kind
        self.location = location
        self.message = message
        self.violations = list(violations or [])


@dataclass
class Model:
    name: str
    sha256: str
    algebra: BGA
    complex: FreeComplex | None
    connection: Connection | None
    form: CyclicForm
    violations: list[Violation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations


# ---------------------------------------------------------------------------
# schema helpers


def _expect(obj, kind, where: str):
    if not isinstance(obj, kind) or (kind is int and isinstance(obj, bool)):
        name = kind.__name__ if isinstance(kind, type) else " or ".join(k.__name__ for k in kind)
        raise ModelError("schema", where, f"expected {name}, got {type(obj).__name__}")
    return obj


def _keys(obj: dict, where: str, required: set[str], optional: set[str] = frozenset()):
    _expect(obj, dict, where)
    missing = sorted(required - obj.keys())
    if missing:
        raise ModelError("schema", where, f"missing field {missing[0]!r}")
    extra = sorted(obj.keys() - required - optional)
    if extra:
        raise ModelError("schema", f"{where}.{extra[0]}", "unexpected field")


def parse_rational(value, where: str) -> Rational:
    if isinstance(value, bool) or not isinstance(value, (int, str)):
        raise ModelError("schema", where, f"coefficient {value!r} must be an integer or a 'p/q' string")
    try:
        return rational(value)
    except (ValueError, TypeError):
        raise ModelError("schema", where, f"malformed rational {value!r}") from None


def _basis_ref(names: dict[str, int], n: int, ref, where: str) -> int:
    if isinstance(ref, bool):
        raise ModelError("schema", where, f"bad basis reference {ref!r}")
    if isinstance(ref, int):
        if not 0 <= ref < n:
            raise ModelError("schema", where, f"basis index {ref} out of range")
        return ref
    if isinstance(ref, str) and ref in names:
        return names[ref]
    raise ModelError("schema", where, f"unknown basis element {ref!r}")


def _terms(names, n, obj, where: str) -> list[tuple[int, Rational]]:
    _expect(obj, list, where)
    out = []
    for t, pair in enumerate(obj):
        w = f"{where}[{t}]"
        if not isinstance(pair, list) or len(pair) != 2:
            raise ModelError("schema", w, "expected [basis, coefficient]")
        out.append((_basis_ref(names, n, pair[0], f"{w}[0]"), parse_rational(pair[1], f"{w}[1]")))
    return out


# ---------------------------------------------------------------------------
# reading


def _parse_bga(doc, label) -> BGA:
    where = "$.bga"
    _keys(doc, where, {"basis", "product"}, {"unit", "partial", "delbar"})
    basis = _expect(doc["basis"], list, f"{where}.basis")
    if not basis:
        raise ModelError("schema", f"{where}.basis", "empty basis")
    names, bidegs = [], []
    for i, b in enumerate(basis):
        w = f"{where}.basis[{i}]"
        _keys(b, w, {"name", "p", "q"})
        names.append(_expect(b["name"], str, f"{w}.name"))
        bidegs.append((_expect(b["p"], int, f"{w}.p"), _expect(b["q"], int, f"{w}.q")))
        if b["p"] < 0 or b["q"] < 0:
            raise ModelError("schema", w, "bidegrees must be non-negative")
    if len(set(names)) != len(names):
        raise ModelError("schema", f"{where}.basis", "basis names must be distinct")
    index = {name: i for i, name in enumerate(names)}
    n = len(names)
    unit = _basis_ref(index, n, doc.get("unit", 0), f"{where}.unit")

    product = {}
    for e, entry in enumerate(_expect(doc["product"], list, f"{where}.product")):
        w = f"{where}.product[{e}]"
        if not isinstance(entry, list) or len(entry) != 3:
            raise ModelError("schema", w, "expected [i, j, terms]")
        i = _basis_ref(index, n, entry[0], f"{w}[0]")
        j = _basis_ref(index, n, entry[1], f"{w}[1]")
        if (i, j) in product:
            raise ModelError("schema", w, f"duplicate product entry ({names[i]},{names[j]})")
        product[(i, j)] = _terms(index, n, entry[2], f"{w}[2]")
    diffs = {}
    for key in ("partial", "delbar"):
        table = {}
        for e, entry in enumerate(_expect(doc.get(key, []), list, f"{where}.{key}")):
            w = f"{where}.{key}[{e}]"
            if not isinstance(entry, list) or len(entry) != 2:
                raise ModelError("schema", w, "expected [i, terms]")
            i = _basis_ref(index, n, entry[0], f"{w}[0]")
            if i in table:
                raise ModelError("schema", w, f"duplicate entry for {names[i]}")
            table[i] = _terms(index, n, entry[1], f"{w}[1]")
        diffs[key] = table
    return BGA(names, bidegs, unit, product, diffs["partial"], diffs["delbar"], label=label)


def _parse_complex(doc, B: BGA) -> FreeComplex:
    where = "$.complex"
    _keys(doc, where, {"degrees"}, {"delta"})
    ranks = {}
    for e, entry in enumerate(_expect(doc["degrees"], list, f"{where}.degrees")):
        w = f"{where}.degrees[{e}]"
        _keys(entry, w, {"deg", "rank"})
        l = _expect(entry["deg"], int, f"{w}.deg")
        r = _expect(entry["rank"], int, f"{w}.rank")
        if r < 0:
            raise ModelError("schema", f"{w}.rank", "rank must be non-negative")
        if l in ranks:
            raise ModelError("schema", w, f"degree {l} listed twice")
        ranks[l] = r
    if not any(ranks.values()):
        raise ModelError("schema", f"{where}.degrees", "the complex has no nonzero module")
    delta = {}
    for e, entry in enumerate(_expect(doc.get("delta", []), list, f"{where}.delta")):
        w = f"{where}.delta[{e}]"
        _keys(entry, w, {"deg", "rows"})
        l = _expect(entry["deg"], int, f"{w}.deg")
        rows = _expect(entry["rows"], list, f"{w}.rows")
        tgt, src = ranks.get(l + 1, 0), ranks.get(l, 0)
        if len(rows) != tgt:
            raise ModelError("schema", f"{w}.rows", f"delta E^{l} -> E^{l + 1} needs {tgt} rows, got {len(rows)}")
        parsed = []
        for i, row in enumerate(rows):
            _expect(row, list, f"{w}.rows[{i}]")
            if len(row) != src:
                raise ModelError("schema", f"{w}.rows[{i}]", f"needs {src} entries, got {len(row)}")
            parsed.append([parse_rational(v, f"{w}.rows[{i}][{j}]") for j, v in enumerate(row)])
        if l in delta:
            raise ModelError("schema", w, f"delta block on E^{l} listed twice")
        delta[l] = parsed
    return FreeComplex(B, ranks, delta, check=False)


def _parse_gamma(doc, cx: FreeComplex):
    where = "$.connection"
    _keys(doc, where, {"gamma"})
    B = cx.base
    index = {name: i for i, name in enumerate(B.names)}
    gamma = {}
    for e, entry in enumerate(_expect(doc["gamma"], list, f"{where}.gamma")):
        w = f"{where}.gamma[{e}]"
        _keys(entry, w, {"deg", "rows"})
        l = _expect(entry["deg"], int, f"{w}.deg")
        r = cx.ranks.get(l, 0)
        rows = _expect(entry["rows"], list, f"{w}.rows")
        if len(rows) != r:
            raise ModelError("schema", f"{w}.rows", f"gamma block on E^{l} needs {r} rows, got {len(rows)}")
        block = []
        for i, row in enumerate(rows):
            _expect(row, list, f"{w}.rows[{i}]")
            if len(row) != r:
                raise ModelError("schema", f"{w}.rows[{i}]", f"needs {r} entries, got {len(row)}")
            block.append([dict(_terms(index, B.dim, v, f"{w}.rows[{i}][{j}]")) for j, v in enumerate(row)])
        if l in gamma:
            raise ModelError("schema", w, f"gamma block on E^{l} listed twice")
        gamma[l] = block
    return gamma


def _connection_violations(cx: FreeComplex, gamma) -> list[Violation]:
    out = []
    B = cx.base
    for l, rows in sorted(gamma.items()):
        for i, row in enumerate(rows):
            for j, entry in enumerate(row):
                bad = {k: c for k, c in entry.items() if c and B.bidegrees[k] != (1, 0)}
                if bad:
                    terms = " + ".join(f"{fmt(c)}*{B.names[k]}" for k, c in sorted(bad.items()))
                    out.append(Violation("gamma-bidegree", f"gamma E^{l} entry ({i},{j})", terms))
    return out


def read_model(text: str, source: str = "<model>") -> Model:
    """Parse and validate; schema problems raise ``ModelError``, axiom
    violations are collected on the returned model."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError("parse", f"{source}:{exc.lineno}:{exc.colno}", exc.msg) from None
    _keys(doc, "$", {"bga", "complex", "connection", "form"}, {"name"})
    name = doc.get("name", Path(source).stem)
    _expect(name, str, "$.name")
    digest = hashlib.sha256(json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()).hexdigest()

    try:
        B = _parse_bga(doc["bga"], name)
    except ModelError:
        raise
    except ValueError as exc:
        raise ModelError("schema", "$.bga", str(exc)) from None
    _keys(doc["form"], "$.form", {"a", "b"})
    F = CyclicForm(parse_rational(doc["form"]["a"], "$.form.a"), parse_rational(doc["form"]["b"], "$.form.b"))

    violations = validate(B)
    try:
        cx = _parse_complex(doc["complex"], B)
    except ModelError:
        raise
    except ValueError as exc:
        raise ModelError("schema", "$.complex", str(exc)) from None
    gamma = _parse_gamma(doc["connection"], cx)
    if violations:
        # complex and connection checks need a valid algebra
        return Model(name, digest, B, None, None, F, violations)
    violations = validate_complex(cx)
    violations += _connection_violations(cx, gamma)
    D = Connection(cx, gamma) if not violations else None
    return Model(name, digest, B, cx, D, F, violations)


def bundled_models() -> list[str]:
    root = resources.files("atlift") / "models"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(BUNDLED_SUFFIX))


def load_model(ref: str) -> Model:
    """A path, or the name of a bundled model (with or without the suffix)."""
    path = Path(ref)
    if path.is_file():
        return read_model(path.read_text(encoding="utf-8"), str(path))
    name = ref if ref.endswith(BUNDLED_SUFFIX) else ref + BUNDLED_SUFFIX
    res = resources.files("atlift") / "models" / name
    if "/" not in ref and res.is_file():
        return read_model(res.read_text(encoding="utf-8"), name)
    raise ModelError("input", ref, "no such model file or bundled model")


def require_valid(model: Model) -> Model:
    if model.violations:
        v = model.violations[0]
        raise ModelError("validation", v.where, f"{v.axiom}: residual {v.residual}", model.violations)
    return model


# ---------------------------------------------------------------------------
# writing


def _q(v: Rational) -> str:
    return fmt(v)


def model_document(name: str, cx: FreeComplex, D: Connection | None, F: CyclicForm) -> dict:
    B = cx.base
    t = B.tables()
    doc_bga = {
        "basis": [{"name": nm, "p": p, "q": q} for nm, (p, q) in zip(B.names, B.bidegrees)],
        "unit": B.names[B.unit],
        "product": [
            [B.names[i], B.names[j], [[B.names[k], _q(c)] for k, c in terms]]
            for (i, j), terms in sorted(t["product"].items())
        ],
    }
    for key in ("partial", "delbar"):
        if t[key]:
            doc_bga[key] = [[B.names[i], [[B.names[k], _q(c)] for k, c in terms]] for i, terms in sorted(t[key].items())]
    degs = sorted(cx.ranks)
    delta = []
    for l in degs:
        if l + 1 not in cx.ranks:
            continue
        rows = []
        for i in range(cx.ranks[l + 1]):
            row = []
            for j in range(cx.ranks[l]):
                coeffs = cx.delta_entries.get((cx.gen(l + 1, i), cx.gen(l, j)), {})
                row.append(_q(coeffs.get(B.unit, 0)))
            rows.append(row)
        if any(v != "0" for row in rows for v in row):
            delta.append({"deg": l, "rows": rows})
    gamma = []
    if D is not None:
        for l in degs:
            r = cx.ranks[l]
            rows = [[[] for _ in range(r)] for _ in range(r)]
            for (k, a, b), v in sorted(D.gamma.terms.items()):
                if cx.gdeg[b] == l:
                    rows[a - cx.offsets[l]][b - cx.offsets[l]].append([B.names[k], _q(v)])
            gamma.append({"deg": l, "rows": rows})
    return {
        "name": name,
        "bga": doc_bga,
        "complex": {"degrees": [{"deg": l, "rank": cx.ranks[l]} for l in degs], "delta": delta},
        "connection": {"gamma": gamma},
        "form": {"a": _q(F.a), "b": _q(F.b)},
    }


def dump_model(doc: dict) -> str:
    """JSON with one table entry per line."""

    def compact(v):
        return json.dumps(v, ensure_ascii=False)

    def block(obj, indent):
        pad = " " * indent
        if isinstance(obj, dict):
            items = [f'{pad} {compact(k)}: {block(v, indent + 1).lstrip()}' for k, v in obj.items()]
            return pad + "{\n" + ",\n".join(items) + "\n" + pad + "}"
        if isinstance(obj, list) and obj and all(isinstance(x, (list, dict)) for x in obj):
            items = [pad + " " + compact(x) for x in obj]
            return pad + "[\n" + ",\n".join(items) + "\n" + pad + "]"
        return pad + compact(obj)

    return block(doc, 0) + "\n"
