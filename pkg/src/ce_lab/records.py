"""Line-oriented text files for measurement records, plus JSON/CSV result export.

A record file is a ``key: value`` header, one blank line, then the body::

    format: ce-lab-record
    version: 1
    kind: LRM
    n: 3
    subset: 1,2,3
    ensemble: clifford
    clifford_table: <sha256>
    L: 2
    K: 2
    seed: 7
    creator: ce-lab

    1 c:5,0,17 010 010
    2 c:3,3,1 111 001

LRM body lines are ``l <setting> <z_1> ... <z_K>`` with bitstrings over the
subset (first label leftmost). Settings are ``c:<i1>,...,<is>`` Clifford table
indices or ``h:<8*s floats>`` giving each 2x2 factor row-major as re,im pairs.
SIC files (``kind: SIC``, ``M: <count>``) have one outcome string over the
digits 1-4 per line.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .ensembles import EnsembleKind, clifford_table_hash
from .estimators import EstimateResult
from .measurement import LRMRecord, SICRecord, bitstring, parse_sic_string, sic_string

FORMAT_NAME = "ce-lab-record"
FORMAT_VERSION = 1


class RecordFormatError(ValueError):
    """Malformed record file; ``line`` is the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class RecordVersionError(RecordFormatError):
    pass


class RecordBudgetError(RecordFormatError):
    pass


class RecordSymbolError(RecordFormatError):
    pass


def _fmt_float(x: float) -> str:
    return repr(float(x))


def _header_lines(fields: dict) -> list[str]:
    return [f"{k}: {v}" for k, v in fields.items()]


def serialize_record(record: LRMRecord | SICRecord) -> str:
    header = {"format": FORMAT_NAME, "version": FORMAT_VERSION}
    body = []
    if isinstance(record, LRMRecord):
        header.update(kind="LRM", n=record.n, subset=",".join(map(str, record.subset)),
                      ensemble=record.ensemble.value)
        if record.ensemble is EnsembleKind.CLIFFORD:
            header["clifford_table"] = clifford_table_hash()
        header.update(L=record.L, K=record.K)
        s = record.s
        for l in range(record.L):
            if record.ensemble is EnsembleKind.CLIFFORD:
                setting = "c:" + ",".join(str(int(i)) for i in record.settings[l])
            else:
                m = record.settings[l].reshape(-1)
                setting = "h:" + ",".join(_fmt_float(v) for z in m for v in (z.real, z.imag))
            zs = " ".join(bitstring(z, s) for z in record.outcomes[l])
            body.append(f"{l + 1} {setting} {zs}")
    elif isinstance(record, SICRecord):
        header.update(kind="SIC", n=record.n, subset=",".join(map(str, record.subset)), M=record.M)
        body = [sic_string(q, record.s) for q in record.outcomes]
    else:
        raise TypeError(f"not a record: {type(record).__name__}")
    header["seed"] = "none" if record.seed is None else record.seed
    header["creator"] = record.creator
    return "\n".join(_header_lines(header) + [""] + body) + "\n"


def write_record(record: LRMRecord | SICRecord, path) -> None:
    Path(path).write_text(serialize_record(record))


def _int(value: str, key: str, lineno: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise RecordFormatError(f"{key} must be an integer, got {value!r}", lineno) from None


def parse_record(text: str) -> LRMRecord | SICRecord:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    header: dict[str, tuple[str, int]] = {}
    i = 0
    while i < len(lines) and lines[i] != "":
        key, sep, value = lines[i].partition(":")
        if not sep:
            raise RecordFormatError(f"expected 'key: value' in header, got {lines[i]!r}", i + 1)
        header[key.strip()] = (value.strip(), i + 1)
        i += 1
    if i == len(lines):
        raise RecordFormatError("missing blank line after header", i)
    body = lines[i + 1:]
    body_start = i + 2

    def get(key):
        if key not in header:
            raise RecordFormatError(f"missing header field {key!r}")
        return header[key]

    if get("format")[0] != FORMAT_NAME:
        raise RecordFormatError(f"not a {FORMAT_NAME} file", get("format")[1])
    version, vline = get("version")
    if version != str(FORMAT_VERSION):
        raise RecordVersionError(f"unsupported version {version!r} (expected {FORMAT_VERSION})", vline)
    kind, kline = get("kind")
    n = _int(*get("n")[:1], "n", get("n")[1])
    subset_text, sline = get("subset")
    try:
        subset = tuple(int(x) for x in subset_text.split(","))
    except ValueError:
        raise RecordFormatError(f"bad subset {subset_text!r}", sline) from None
    s = len(subset)
    seed_text = get("seed")[0]
    seed = None if seed_text == "none" else _int(seed_text, "seed", get("seed")[1])
    creator = get("creator")[0]

    try:
        if kind == "LRM":
            return _parse_lrm_body(header, get, body, body_start, n, subset, s, seed, creator)
        if kind == "SIC":
            return _parse_sic_body(get, body, body_start, n, subset, s, seed, creator)
    except RecordFormatError:
        raise
    except ValueError as exc:
        raise RecordFormatError(str(exc)) from None
    raise RecordFormatError(f"unknown record kind {kind!r}", kline)


def _parse_lrm_body(header, get, body, start, n, subset, s, seed, creator) -> LRMRecord:
    ensemble_text, eline = get("ensemble")
    try:
        ensemble = EnsembleKind(ensemble_text)
    except ValueError:
        raise RecordFormatError(f"unknown ensemble {ensemble_text!r}", eline) from None
    if ensemble is EnsembleKind.CLIFFORD:
        digest, hline = get("clifford_table")
        if digest != clifford_table_hash():
            raise RecordFormatError("Clifford table hash does not match this build's table", hline)
    L = _int(get("L")[0], "L", get("L")[1])
    K = _int(get("K")[0], "K", get("K")[1])
    if K < 2:
        raise RecordBudgetError("K must be >= 2", get("K")[1])
    if len(body) != L:
        raise RecordFormatError(f"header says L={L} but body has {len(body)} lines", start + len(body) - 1)
    if ensemble is EnsembleKind.CLIFFORD:
        settings = np.empty((L, s), dtype=np.int64)
    else:
        settings = np.empty((L, s, 2, 2), dtype=complex)
    outcomes = np.empty((L, K), dtype=np.int64)
    for l, line in enumerate(body):
        lineno = start + l
        parts = line.split(" ")
        if len(parts) != K + 2:
            raise RecordFormatError(f"expected {K + 2} fields, got {len(parts)}", lineno)
        if parts[0] != str(l + 1):
            raise RecordFormatError(f"expected setting index {l + 1}, got {parts[0]!r}", lineno)
        tag, _, values = parts[1].partition(":")
        try:
            if ensemble is EnsembleKind.CLIFFORD:
                if tag != "c":
                    raise ValueError
                idx = [int(v) for v in values.split(",")]
                if len(idx) != s:
                    raise ValueError
                if any(not 0 <= v < 24 for v in idx):
                    raise RecordSymbolError("Clifford index out of range 0..23", lineno)
                settings[l] = idx
            else:
                if tag != "h":
                    raise ValueError
                vals = [float(v) for v in values.split(",")]
                if len(vals) != 8 * s:
                    raise ValueError
                arr = np.array(vals).reshape(s, 2, 2, 2)
                settings[l] = arr[..., 0] + 1j * arr[..., 1]
        except RecordSymbolError:
            raise
        except ValueError:
            raise RecordFormatError(f"malformed setting descriptor {parts[1]!r}", lineno) from None
        for k, z in enumerate(parts[2:]):
            if len(z) != s or set(z) - {"0", "1"}:
                raise RecordSymbolError(f"outcome {z!r} is not a {s}-bit string", lineno)
            outcomes[l, k] = int(z, 2)
    return LRMRecord(n, subset, ensemble, settings, outcomes, seed=seed, creator=creator)


def _parse_sic_body(get, body, start, n, subset, s, seed, creator) -> SICRecord:
    M = _int(get("M")[0], "M", get("M")[1])
    if M < 2:
        raise RecordBudgetError("M must be >= 2", get("M")[1])
    if len(body) != M:
        raise RecordFormatError(f"header says M={M} but body has {len(body)} lines", start + len(body) - 1)
    outcomes = np.empty(M, dtype=np.int64)
    for i, line in enumerate(body):
        if len(line) != s or set(line) - set("1234"):
            raise RecordSymbolError(f"SIC outcome {line!r} must be {s} symbols from 1-4", start + i)
        outcomes[i] = parse_sic_string(line)
    return SICRecord(n, subset, outcomes, seed=seed, creator=creator)


def read_record(path) -> LRMRecord | SICRecord:
    return parse_record(Path(path).read_text())


# -- results -------------------------------------------------------------------

def write_result(result: EstimateResult, path, fmt: str = "json", extra: dict | None = None) -> None:
    """JSON: every populated field (plus ``extra``). CSV: one row per batch mean."""
    path = Path(path)
    if fmt == "json":
        data = result.to_dict()
        if extra:
            data.update(extra)
        path.write_text(json.dumps(data, indent=2) + "\n")
    elif fmt == "csv":
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["method", "batch", "batch_mean", "estimate"])
            means = result.batch_means if result.batch_means is not None else [result.estimate]
            for b, v in enumerate(means, 1):
                w.writerow([result.method.value, b, repr(v), repr(result.estimate)])
    else:
        raise ValueError(f"unknown result format {fmt!r}")


def read_result(path) -> EstimateResult:
    data = json.loads(Path(path).read_text())
    known = {f for f in EstimateResult.__dataclass_fields__}
    return EstimateResult.from_dict({k: v for k, v in data.items() if k in known})
