"""Text formats for graphs, matchings, candidate matrices, and configs.

All artifacts are plain line-oriented text so diffs and byte-identity
checks stay trivial.  Writers are fully deterministic; readers are
tolerant about whitespace and edge order but strict about structure, and
raise DataFormatError on malformed content.
"""
from __future__ import annotations

import json
import os

import numpy as np

from .comparison import CandidateMatrix
from .errors import DataFormatError, ParameterError
from .graph import Graph, from_edge_arrays
from .matcher import ORIGIN_NAMES, Matching
from .model import CorrelatedInstance, ModelParams, Permutation
from .signatures import ClassKey

INSTANCE_FILE = "instance.json"
OBS_GRAPH_FILE = "g_pi.el"
REF_GRAPH_FILE = "g_prime.el"


def _data_lines(path):
    try:
        with open(path, "r", encoding="ascii") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if line and not line.startswith("#"):
                    yield lineno, line
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"{path}: not a text file ({exc})") from exc


# ---------------------------------------------------------------------------
# edge lists
# ---------------------------------------------------------------------------


def write_edge_list(g: Graph, path) -> None:
    edges = g.edge_array()
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"{g.n} {len(edges)}\n")
        for u, v in edges:
            fh.write(f"{u} {v}\n")


def read_edge_list(path) -> Graph:
    """Parse `n m` header plus `u v` lines; any order, duplicates allowed."""
    lines = _data_lines(path)
    try:
        _, header = next(lines)
    except StopIteration:
        raise DataFormatError(f"{path}: empty edge list file") from None
    parts = header.split()
    if len(parts) != 2:
        raise DataFormatError(f"{path}: header must be 'n m', got {header!r}")
    try:
        n, m = int(parts[0]), int(parts[1])
    except ValueError:
        raise DataFormatError(f"{path}: non-integer header {header!r}") from None
    us, vs = [], []
    for lineno, line in lines:
        parts = line.split()
        if len(parts) != 2:
            raise DataFormatError(f"{path}:{lineno}: expected 'u v', got {line!r}")
        try:
            us.append(int(parts[0]))
            vs.append(int(parts[1]))
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: non-integer edge {line!r}") from None
    if len(us) != m:
        raise DataFormatError(f"{path}: header claims {m} edges, found {len(us)}")
    try:
        return from_edge_arrays(n, np.array(us, np.int64), np.array(vs, np.int64))
    except ParameterError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# matchings
# ---------------------------------------------------------------------------


def write_matching(matching: Matching, path) -> None:
    """One line per reference vertex: `i_prime i origin`.

    i_prime is the reference-graph label (ascending), i the shuffled-graph
    label it is matched to.
    """
    names = matching.origin_names()
    with open(path, "w", encoding="ascii") as fh:
        fh.write("# columns: i_prime i origin\n")
        for ref in range(matching.n):
            fh.write(f"{ref} {matching.assign[ref]} {names[ref]}\n")


def read_matching(path) -> Matching:
    rows = {}
    name_codes = {name: code for code, name in enumerate(ORIGIN_NAMES)}
    for lineno, line in _data_lines(path):
        parts = line.split()
        if len(parts) not in (2, 3):
            raise DataFormatError(f"{path}:{lineno}: expected 'i_prime i [origin]'")
        try:
            ref, obs = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: non-integer labels") from None
        origin = 1
        if len(parts) == 3:
            if parts[2] not in name_codes:
                raise DataFormatError(f"{path}:{lineno}: unknown origin {parts[2]!r}")
            origin = name_codes[parts[2]]
        if ref in rows:
            raise DataFormatError(f"{path}:{lineno}: duplicate entry for {ref}")
        rows[ref] = (obs, origin)
    n = len(rows)
    if sorted(rows) != list(range(n)):
        raise DataFormatError(f"{path}: reference labels must cover 0..{n - 1}")
    assign = np.array([rows[r][0] for r in range(n)], dtype=np.int64)
    origin = np.array([rows[r][1] for r in range(n)], dtype=np.uint8)
    try:
        return Matching(n=n, assign=assign, origin=origin)
    except ParameterError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# candidate matrices
# ---------------------------------------------------------------------------


def write_candidate_rows(matrix: CandidateMatrix, path) -> None:
    """One line per row: `i: i1 i2 ...` with columns ascending."""
    with open(path, "w", encoding="ascii") as fh:
        for i in range(matrix.n):
            cols = " ".join(str(c) for c in matrix.row(i))
            fh.write(f"{i}:{' ' if cols else ''}{cols}\n")


def read_candidate_rows(path, n: int) -> CandidateMatrix:
    rows = [np.empty(0, np.int64) for _ in range(n)]
    seen = set()
    for lineno, line in _data_lines(path):
        head, _, rest = line.partition(":")
        if not _:
            raise DataFormatError(f"{path}:{lineno}: missing ':' separator")
        try:
            i = int(head)
            cols = np.array([int(t) for t in rest.split()], dtype=np.int64)
        except ValueError:
            raise DataFormatError(f"{path}:{lineno}: non-integer entry") from None
        if i in seen or not 0 <= i < n:
            raise DataFormatError(f"{path}:{lineno}: bad row index {i}")
        if len(cols) and (cols.min() < 0 or cols.max() >= n):
            raise DataFormatError(f"{path}:{lineno}: column out of range")
        seen.add(i)
        rows[i] = np.unique(cols)
    return CandidateMatrix.from_rows(n, rows)


# ---------------------------------------------------------------------------
# signature dumps
# ---------------------------------------------------------------------------


def write_signature_dump(path, entries) -> None:
    """entries: iterable of (vertex, {ClassKey: (f, v)}).

    Keys are rendered as +/- strings; floats use repr so the dump
    round-trips bit-exactly.
    """
    with open(path, "w", encoding="ascii") as fh:
        for vertex, sig in entries:
            fh.write(f"vertex {vertex}\n")
            for key in sorted(sig):
                f, v = sig[key]
                fh.write(f"{key.sign_string()} {f!r} {v!r}\n")


def read_signature_dump(path) -> list:
    out = []
    current = None
    for lineno, line in _data_lines(path):
        parts = line.split()
        if parts[0] == "vertex":
            if len(parts) != 2:
                raise DataFormatError(f"{path}:{lineno}: bad vertex header")
            current = (int(parts[1]), {})
            out.append(current)
            continue
        if current is None:
            raise DataFormatError(f"{path}:{lineno}: entry before any vertex header")
        if len(parts) != 3:
            raise DataFormatError(f"{path}:{lineno}: expected 'signs f v'")
        try:
            key = ClassKey.parse(parts[0])
            current[1][key] = (float(parts[1]), float(parts[2]))
        except (ValueError, ParameterError) as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
    return out


# ---------------------------------------------------------------------------
# instances
# ---------------------------------------------------------------------------


def write_instance(directory, instance: CorrelatedInstance) -> dict:
    """Write instance.json plus the two edge lists; returns the paths."""
    os.makedirs(directory, exist_ok=True)
    paths = {
        "instance": os.path.join(directory, INSTANCE_FILE),
        "obs": os.path.join(directory, OBS_GRAPH_FILE),
        "ref": os.path.join(directory, REF_GRAPH_FILE),
    }
    payload = {
        "n": instance.params.n,
        "p": instance.params.p,
        "alpha": instance.params.alpha,
        "q": instance.params.q,
        "seed": instance.seed,
        "streams": ["parent", "thin-G", "thin-Gprime", "perm", "index-set"],
        "permutation": [int(x) for x in instance.perm.forward],
        "files": {"g_pi": OBS_GRAPH_FILE, "g_prime": REF_GRAPH_FILE},
    }
    with open(paths["instance"], "w", encoding="ascii") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    write_edge_list(instance.g_obs, paths["obs"])
    write_edge_list(instance.g_ref, paths["ref"])
    return paths


def read_instance(directory) -> CorrelatedInstance:
    path = os.path.join(directory, INSTANCE_FILE)
    try:
        with open(path, "r", encoding="ascii") as fh:
            payload = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise DataFormatError(f"{path}: invalid JSON ({exc})") from exc
    try:
        params = ModelParams(n=payload["n"], p=payload["p"], alpha=payload["alpha"])
        perm = Permutation(np.array(payload["permutation"], dtype=np.int64))
        seed = int(payload["seed"])
    except (KeyError, TypeError) as exc:
        raise DataFormatError(f"{path}: missing or malformed field ({exc})") from exc
    except ParameterError as exc:
        raise DataFormatError(f"{path}: {exc}") from exc
    g_obs = read_edge_list(os.path.join(directory, OBS_GRAPH_FILE))
    g_ref = read_edge_list(os.path.join(directory, REF_GRAPH_FILE))
    if g_obs.n != params.n or g_ref.n != params.n:
        raise DataFormatError(f"{directory}: edge lists disagree with instance.json n")
    return CorrelatedInstance(params=params, g_obs=g_obs, g_ref=g_ref,
                              perm=perm, seed=seed)


# ---------------------------------------------------------------------------
# provenance and config
# ---------------------------------------------------------------------------


def write_provenance(path, provenance) -> None:
    """Flat key=value block; list-valued fields join with commas."""
    items = provenance.as_items()
    with open(path, "w", encoding="ascii") as fh:
        for key, value in items:
            fh.write(f"{key}={value}\n")


def read_key_values(path) -> dict:
    out = {}
    for lineno, line in _data_lines(path):
        key, sep, value = line.partition("=")
        if not sep:
            raise DataFormatError(f"{path}:{lineno}: expected key=value")
        key = key.strip()
        if not key:
            raise DataFormatError(f"{path}:{lineno}: empty key")
        if key in out:
            raise DataFormatError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value.strip()
    return out


def read_config(path, allowed) -> dict:
    """key=value config; keys must belong to `allowed`."""
    values = read_key_values(path)
    for key in values:
        if key not in allowed:
            raise ParameterError(f"unknown config key {key!r} in {path}")
    return values
