"""Line-oriented file formats.

All formats are UTF-8 text, tab separated, with ``#`` comment lines
(used for the metadata header) and blank lines ignored on input.

taxonomy     ``child<TAB>parent``
sheets       ``instance_id<TAB>classifier_id<TAB>class_id<TAB>score``
gold         ``instance_id<TAB>class_id`` (repeat a line for multi-label gold)
params       ``classifier_id<TAB>class_id<TAB>binormal<TAB>mu0<TAB>sigma0<TAB>mu1<TAB>sigma1``
             or ``...<TAB>discrete<TAB>alpha<TAB>beta``
entry set    one class id per line
weights      ``class_id<TAB>weight`` (leak and prior overrides use the same layout)
config       ``key=value`` lines
"""

from __future__ import annotations

import csv
import hashlib
import io as _io
import json
import math
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from . import __version__
from .errors import EmptyInput, InvalidScore, ParseError, ValidationError
from .network import Binormal, Discrete, ObservationParams
from .scores import ScoreSheet
from .taxonomy import Taxonomy, build_taxonomy, check_class_id


def fmt(x: float) -> str:
    return f"{x:.9g}"


def config_digest(config: Mapping) -> str:
    canon = "\n".join(f"{k}={config[k]}" for k in sorted(config))
    return hashlib.sha256(canon.encode()).hexdigest()[:16]


def header_lines(meta: Mapping | None) -> list:
    """``# key: value`` lines, tool version first, then ``meta`` sorted by key."""
    lines = [f"# tool: taxagg {__version__}"]
    for k in sorted(meta or {}):
        lines.append(f"# {k}: {meta[k]}")
    return lines


def _write(path, lines: Iterable[str], meta: Mapping | None):
    text = "\n".join([*header_lines(meta), *lines]) + "\n"
    if path is None or str(path) == "-":
        import sys

        sys.stdout.write(text)
        return
    Path(path).write_text(text, encoding="utf-8")


def _records(path) -> Iterator[tuple[int, list]]:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ParseError("file not found", path=str(path)) from None
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid UTF-8 ({exc.reason})", path=str(path)) from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        yield lineno, line.split("\t")


def read_header(path) -> dict:
    out = {}
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        if not raw.startswith("#"):
            if raw.strip():
                break
            continue
        body = raw[1:].strip()
        if ":" in body:
            k, v = body.split(":", 1)
            out[k.strip()] = v.strip()
    return out


def _fields(path, lineno, fields, n, what):
    if len(fields) != n:
        raise ParseError(f"expected {n} tab-separated fields ({what}), got {len(fields)}", path=str(path), line=lineno)
    for f in fields:
        if not f or f != f.strip():
            raise ParseError(f"empty or padded field in {fields!r}", path=str(path), line=lineno)
    return fields


def _float(path, lineno, text) -> float:
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"not a number: {text!r}", path=str(path), line=lineno) from None


def _id(path, lineno, text) -> str:
    try:
        return check_class_id(text)
    except ValidationError as exc:
        raise ParseError(str(exc), path=str(path), line=lineno) from None


# -- taxonomy ----------------------------------------------------------------


def read_taxonomy(path) -> Taxonomy:
    edges = []
    for lineno, fields in _records(path):
        child, parent = _fields(path, lineno, fields, 2, "child, parent")
        edges.append((_id(path, lineno, child), _id(path, lineno, parent)))
    if not edges:
        raise EmptyInput(f"{path}: no edges")
    return build_taxonomy(edges)


def taxonomy_lines(t: Taxonomy) -> list:
    return [f"{c}\t{p}" for c, p in t.sorted_edges()]


def write_taxonomy(t: Taxonomy, path, meta: Mapping | None = None):
    _write(path, taxonomy_lines(t), meta)


# -- score sheets ------------------------------------------------------------


def read_sheets(path, taxonomy: Taxonomy | None = None) -> list:
    """Parse a sheet file into one :class:`ScoreSheet` per instance.

    Instances keep their first-appearance order.  A repeated
    (instance, classifier, class) triple is a parse error.
    """
    sheets: dict = {}
    for lineno, fields in _records(path):
        iid, j, c, raw = _fields(path, lineno, fields, 4, "instance, classifier, class, score")
        _id(path, lineno, iid)
        _id(path, lineno, j)
        _id(path, lineno, c)
        y = _float(path, lineno, raw)
        if not (0.0 <= y <= 1.0):
            raise InvalidScore(f"{path}:{lineno}: instance {iid!r}, class {c!r}: score {raw} outside [0, 1]")
        entry = sheets.setdefault(iid, {}).setdefault(j, {})
        if c in entry:
            raise ParseError(f"duplicate score for ({iid}, {j}, {c})", path=str(path), line=lineno)
        entry[c] = y
    if not sheets:
        raise EmptyInput(f"{path}: no score records")
    out = [ScoreSheet(iid, entries) for iid, entries in sheets.items()]
    if taxonomy is not None:
        for s in out:
            s.validate(taxonomy)
    return out


def sheet_lines(sheets: Sequence[ScoreSheet]) -> list:
    return [f"{s.instance_id}\t{j}\t{c}\t{fmt(y)}" for s in sheets for j, c, y in s.hooks()]


def write_sheets(sheets: Sequence[ScoreSheet], path, meta: Mapping | None = None):
    _write(path, sheet_lines(sheets), meta)


# -- gold labels ---------------------------------------------------------------


def read_golds(path) -> dict:
    """``instance -> class``; instances listed more than once map to a sorted tuple."""
    multi: dict = {}
    for lineno, fields in _records(path):
        iid, c = _fields(path, lineno, fields, 2, "instance, class")
        multi.setdefault(_id(path, lineno, iid), []).append(_id(path, lineno, c))
    if not multi:
        raise EmptyInput(f"{path}: no gold labels")
    return {i: (cs[0] if len(cs) == 1 else tuple(sorted(set(cs)))) for i, cs in multi.items()}


def gold_lines(golds: Mapping) -> list:
    out = []
    for i in sorted(golds):
        g = golds[i]
        for c in ([g] if isinstance(g, str) else sorted(g)):
            out.append(f"{i}\t{c}")
    return out


def write_golds(golds: Mapping, path, meta: Mapping | None = None):
    _write(path, gold_lines(golds), meta)


# -- observation parameters ----------------------------------------------------


def read_params(path) -> list:
    out = []
    seen = set()
    for lineno, fields in _records(path):
        if len(fields) < 3:
            raise ParseError("expected classifier, class, kind, params...", path=str(path), line=lineno)
        j, c, kind = fields[:3]
        _id(path, lineno, j)
        _id(path, lineno, c)
        vals = [_float(path, lineno, v) for v in fields[3:]]
        try:
            if kind == "binormal":
                _fields(path, lineno, fields, 7, "classifier, class, binormal, mu0, sigma0, mu1, sigma1")
                dist = Binormal(*vals)
            elif kind == "discrete":
                _fields(path, lineno, fields, 5, "classifier, class, discrete, alpha, beta")
                dist = Discrete(*vals)
            else:
                raise ParseError(f"unknown kind {kind!r}", path=str(path), line=lineno)
        except ValidationError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(str(exc), path=str(path), line=lineno) from None
        if (j, c) in seen:
            raise ParseError(f"duplicate parameters for ({j}, {c})", path=str(path), line=lineno)
        seen.add((j, c))
        out.append(ObservationParams(j, c, dist))
    if not out:
        raise EmptyInput(f"{path}: no parameters")
    return out


def param_lines(params: Iterable[ObservationParams]) -> list:
    return [
        "\t".join([p.classifier_id, p.node, p.kind, *map(fmt, p.dist.values())])
        for p in sorted(params, key=lambda p: p.hook)
    ]


def write_params(params: Iterable[ObservationParams], path, meta: Mapping | None = None):
    params = list(params)
    flagged = [f"{p.classifier_id}/{p.node}" for p in sorted(params, key=lambda p: p.hook) if p.flagged]
    meta = dict(meta or {})
    if flagged:
        meta["fallback_hooks"] = ",".join(flagged)
    _write(path, param_lines(params), meta)


# -- small lists ---------------------------------------------------------------


def read_entry_set(path) -> frozenset:
    out = set()
    for lineno, fields in _records(path):
        (c,) = _fields(path, lineno, fields, 1, "class")
        out.add(_id(path, lineno, c))
    return frozenset(out)


def write_entry_set(entry_set: Iterable[str], path, meta: Mapping | None = None):
    _write(path, sorted(entry_set), meta)


def read_weights(path) -> dict:
    out = {}
    for lineno, fields in _records(path):
        c, w = _fields(path, lineno, fields, 2, "class, weight")
        v = _float(path, lineno, w)
        if v < 0 or not math.isfinite(v):
            raise ParseError(f"weight must be finite and non-negative, got {w}", path=str(path), line=lineno)
        out[_id(path, lineno, c)] = v
    return out


def read_probabilities(path) -> dict:
    """``class_id<TAB>value`` with every value in [0, 1] (leak or prior overrides)."""
    out = {}
    for lineno, fields in _records(path):
        c, v = _fields(path, lineno, fields, 2, "class, probability")
        x = _float(path, lineno, v)
        if not 0.0 <= x <= 1.0:
            raise ParseError(f"probability must lie in [0, 1], got {v}", path=str(path), line=lineno)
        out[_id(path, lineno, c)] = x
    return out


def read_config(path) -> dict:
    """Flat ``key=value`` file; keys are normalised to use underscores."""
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ParseError("config file not found", path=str(path)) from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"expected key=value, got {line!r}", path=str(path), line=lineno)
        k, v = line.split("=", 1)
        k = k.strip().replace("-", "_")
        if not k:
            raise ParseError("empty key", path=str(path), line=lineno)
        out[k] = v.strip()
    return out


# -- outputs -------------------------------------------------------------------


def _round(x):
    return None if x is None else float(fmt(x))


def record_to_json(rec) -> str:
    body = {
        "instance_id": rec.instance_id,
        "method": rec.method,
        "terminal": rec.terminal,
        "path": rec.path,
        "paths": rec.paths,
        "scores": {c: _round(v) for c, v in sorted(rec.scores.items())},
    }
    if rec.log_evidence is not None:
        body["log_evidence"] = _round(rec.log_evidence)
    if rec.flagged:
        body["flagged"] = True
    return json.dumps(body, sort_keys=False)


def write_records(records: Sequence, path, meta: Mapping | None = None):
    recs = sorted(records, key=lambda r: r.instance_id)
    _write(path, [record_to_json(r) for r in recs], meta)


def read_records(path) -> list:
    out = []
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not raw.strip() or raw.startswith("#"):
            continue
        try:
            out.append(json.loads(raw))
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON record: {exc.msg}", path=str(path), line=lineno) from None
    return out


def read_predictions(path) -> dict:
    """Terminal class per instance from aggregate output or a two-column TSV."""
    text = Path(path).read_text(encoding="utf-8")
    first = next((ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")), None)
    if first is None:
        raise EmptyInput(f"{path}: no predictions")
    if first.lstrip().startswith("{"):
        return {r["instance_id"]: r["terminal"] for r in read_records(path)}
    out = {}
    for lineno, fields in _records(path):
        iid, c = _fields(path, lineno, fields, 2, "instance, class")
        if iid in out:
            raise ParseError(f"duplicate prediction for {iid!r}", path=str(path), line=lineno)
        out[_id(path, lineno, iid)] = _id(path, lineno, c)
    return out


def eval_report_lines(report) -> list:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["instance_id", "precision", "recall", "f1", "flagged"])
    for iid, p, r, f, flagged in report.per_instance:
        w.writerow([iid, f"{p:.6f}", f"{r:.6f}", f"{f:.6f}", int(flagged)])
    w.writerow(["mean", *(f"{x:.6f}" for x in report.mean), ""])
    w.writerow(["stddev", *(f"{x:.6f}" for x in report.std), ""])
    return buf.getvalue().rstrip("\n").split("\n")


def write_eval_report(report, path, meta: Mapping | None = None):
    _write(path, eval_report_lines(report), meta)


def read_eval_report(path) -> dict:
    rows = {}
    lines = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if ln and not ln.startswith("#")]
    reader = csv.reader(lines)
    next(reader)
    for row in reader:
        rows[row[0]] = tuple(float(x) for x in row[1:4])
    return rows


def write_trace(trace: Sequence[float], path, meta: Mapping | None = None):
    _write(path, ["iteration\tlog_likelihood", *(f"{i}\t{fmt(v)}" for i, v in enumerate(trace))], meta)


def read_trace(path) -> list:
    out = []
    for lineno, fields in _records(path):
        if fields[0] == "iteration":
            continue
        out.append(_float(path, lineno, fields[1]))
    return out
