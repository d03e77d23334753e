"""Serialization of paths, snapshots and run outputs.

JSON floats are written with Python's shortest round-trip representation,
so ``float(repr(x)) == x`` and files reload bit-exactly.  CSV files use
17 significant digits, which is also exact for IEEE doubles.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .loopspace import PathState

SCHEMA = 1


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1, allow_nan=True) + "\n"


def atomic_write_text(path, text):
    """Write to a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj):
    atomic_write_text(path, dumps(obj))


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _fmt(x):
    return "%.17g" % x


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) if isinstance(x, (float, np.floating)) else x for x in row])
    atomic_write_text(path, buf.getvalue())


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    header, body = rows[0], rows[1:]
    return header, np.array([[float(x) for x in r] for r in body]).reshape(len(body), len(header))


# --- paths ------------------------------------------------------------------


def path_to_dict(path: PathState):
    return {
        "nt": path.nt,
        "n": path.n,
        "k": path.k,
        "v_re": np.real(path.v).tolist(),
        "v_im": np.imag(path.v).tolist(),
        "eta": np.asarray(path.eta).tolist(),
    }


def path_from_dict(d) -> PathState:
    try:
        v = np.array(d["v_re"], dtype=float) + 1j * np.array(d["v_im"], dtype=float)
        return PathState(v, np.array(d["eta"], dtype=float))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed path object: {exc}") from exc


def path_csv_header(n, k):
    return (["t"] + [f"re_v{j + 1}" for j in range(n)] + [f"im_v{j + 1}" for j in range(n)]
            + [f"eta{j + 1}" for j in range(k)])


def write_path_csv(path_file, path: PathState):
    rows = np.column_stack([path.t, np.real(path.v), np.imag(path.v), path.eta])
    write_csv(path_file, path_csv_header(path.n, path.k), rows.tolist())


def read_path_csv(path_file) -> PathState:
    header, data = read_csv(path_file)
    if not header or header[0] != "t":
        raise ValueError(f"{path_file}: first column must be t")
    n = sum(1 for h in header if h.startswith("re_v"))
    k = sum(1 for h in header if h.startswith("eta"))
    if len(header) != 1 + 2 * n + k:
        raise ValueError(f"{path_file}: unexpected columns {header}")
    v = data[:, 1:1 + n] + 1j * data[:, 1 + n:1 + 2 * n]
    return PathState(v, data[:, 1 + 2 * n:])


def load_path(path_file) -> PathState:
    p = Path(path_file)
    if p.suffix == ".json":
        d = read_json(p)
        return path_from_dict(d.get("path", d))
    return read_path_csv(p)


# --- flow snapshots ----------------------------------------------------------


def snapshot_dict(state, config_hash, coulomb=None):
    out = {
        "schema": SCHEMA,
        "config_hash": config_hash,
        "s": state.s,
        "step": state.step_index,
        "path": path_to_dict(state.path),
        "energy_accum": state.energy_accum,
        "residual_log": [[s, g] for s, g in state.residual_log],
    }
    if coulomb is not None:
        out["coulomb"] = coulomb
    return out


def state_from_snapshot(d, config_hash=None):
    from .flow.pde import FlowState

    if d.get("schema") != SCHEMA:
        raise ValueError(f"unsupported snapshot schema {d.get('schema')!r}")
    if config_hash is not None and d.get("config_hash") != config_hash:
        raise ValueError("snapshot was written with a different configuration")
    return FlowState(
        path_from_dict(d["path"]),
        float(d["s"]),
        int(d["step"]),
        float(d["energy_accum"]),
        [(float(s), float(g)) for s, g in d["residual_log"]],
    )
