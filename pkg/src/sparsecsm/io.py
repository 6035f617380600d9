"""File formats: text matrices, JSON documents, CSV tables.

Matrix files start with ``cmat <rows> <cols>`` followed by one ``re im``
line per entry in row-major order.  Numbers use Python's shortest
round-trip repr, so reading a file back reproduces every float64 exactly.

Every writer goes through a temporary file and an atomic rename, so a
failing command never leaves a half-written output behind.
"""

import csv
import io as _io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ScenarioError


class MatrixFormatError(ScenarioError):
    pass


def atomic_write_bytes(path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


def format_cmat(M) -> str:
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim == 1:
        M = M[:, None]
    if M.ndim != 2:
        raise ValueError("matrix must be 1-D or 2-D")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix contains non-finite entries")
    rows, cols = M.shape
    lines = [f"cmat {rows} {cols}"]
    flat = M.ravel()
    lines.extend(f"{float(z.real)!r} {float(z.imag)!r}" for z in flat)
    return "\n".join(lines) + "\n"


def write_cmat(path, M):
    atomic_write_text(path, format_cmat(M))


def parse_cmat(text: str, source="<string>"):
    lines = text.splitlines()
    if not lines:
        raise MatrixFormatError(f"{source}: empty matrix file")
    head = lines[0].split()
    if len(head) != 3 or head[0] != "cmat":
        raise MatrixFormatError(f"{source}:1: expected 'cmat <rows> <cols>'")
    try:
        rows, cols = int(head[1]), int(head[2])
    except ValueError:
        raise MatrixFormatError(f"{source}:1: bad dimensions {head[1:]!r}") from None
    if rows < 0 or cols < 0:
        raise MatrixFormatError(f"{source}:1: negative dimensions")
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != rows * cols:
        raise MatrixFormatError(
            f"{source}: expected {rows * cols} entries, found {len(body)}")
    out = np.empty(rows * cols, dtype=np.complex128)
    for k, ln in enumerate(body):
        parts = ln.split()
        try:
            if len(parts) != 2:
                raise ValueError
            re, im = float(parts[0]), float(parts[1])
        except ValueError:
            raise MatrixFormatError(f"{source}:{k + 2}: expected 're im', got {ln!r}") from None
        if not (np.isfinite(re) and np.isfinite(im)):
            raise MatrixFormatError(f"{source}:{k + 2}: non-finite entry")
        out[k] = complex(re, im)
    return out.reshape(rows, cols)


def read_cmat(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MatrixFormatError(f"cannot read {path}: {exc}") from exc
    return parse_cmat(text, str(path))


def dumps_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serialisable: {type(obj).__name__}")


def write_json(path, doc):
    atomic_write_text(path, dumps_json(doc))


def read_json(path):
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def write_csv(path, header, rows):
    buf = _io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                         for v in row])
    atomic_write_text(path, buf.getvalue())
