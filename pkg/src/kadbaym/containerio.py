"""Portable single-file container for contour functions, plus CSV export.

Layout: a fixed magic line, a length-prefixed JSON manifest, then raw
little-endian float64 (re, im) pairs for each dataset at offsets recorded
relative to the start of the data section.  Per group the datasets are

    mat  (ntau+1) d^2 complex,        ret/les  (nt+1)(nt+2)/2 d^2 complex,
    tv   (nt+1)(ntau+1) d^2 complex,

with triangular indexing n(n+1)/2 + j (ret holds C^R(n,j), les holds
C^<(j,n)) and tv flat index n (ntau+1) + m; elements are row-major d x d
blocks.  Write -> read round-trips are bit-exact.
"""

from __future__ import annotations

import json
import os
from typing import Iterable, Mapping

import numpy as np

from .contour import HermMatrix

MAGIC = b"#kbcontour-container v1\n"

__all__ = ["write_container", "write_groups", "read_container", "list_groups",
           "export_csv", "ContainerError"]


class ContainerError(RuntimeError):
    pass


def _dataset_bytes(arr: np.ndarray) -> bytes:
    flat = np.ascontiguousarray(arr, dtype=np.complex128).reshape(-1)
    out = np.empty(2 * flat.size, dtype="<f8")
    out[0::2] = flat.real
    out[1::2] = flat.imag
    return out.tobytes()


def _expected_counts(nt: int, ntau: int, d: int) -> dict:
    ntri = (nt + 1) * (nt + 2) // 2 if nt >= 0 else 0
    return {
        "mat": (ntau + 1) * d * d,
        "ret": ntri * d * d,
        "les": ntri * d * d,
        "tv": (nt + 1) * (ntau + 1) * d * d if nt >= 0 else 0,
    }


def write_groups(path, groups: Mapping[str, HermMatrix]) -> None:
    """Write several named contour functions into one container file."""
    manifest = {"groups": {}}
    blobs: list[bytes] = []
    offset = 0
    for name, C in groups.items():
        entry = {
            "element_size": C.d * C.d,
            "nt": C.nt,
            "ntau": C.ntau,
            "sig": C.sig,
            "size1": C.d,
            "size2": C.d,
            "datasets": {},
        }
        counts = _expected_counts(C.nt, C.ntau, C.d)
        for comp in ("mat", "ret", "les", "tv"):
            arr = getattr(C, comp)
            data = _dataset_bytes(arr)
            entry["datasets"][comp] = {"offset": offset, "count": counts[comp]}
            blobs.append(data)
            offset += len(data)
        manifest["groups"][name] = entry
    header = json.dumps(manifest, indent=None, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(f"{len(header)}\n".encode())
        fh.write(header)
        for blob in blobs:
            fh.write(blob)


def write_container(path, group: str, C: HermMatrix) -> None:
    """Write one contour function under the given group name."""
    write_groups(path, {group: C})


def _read_manifest(fh):
    magic = fh.readline()
    if magic != MAGIC:
        raise ContainerError("not a contour container (bad magic)")
    try:
        hlen = int(fh.readline().strip())
        manifest = json.loads(fh.read(hlen).decode())
    except (ValueError, json.JSONDecodeError) as exc:
        raise ContainerError(f"malformed manifest: {exc}") from exc
    if "groups" not in manifest or not isinstance(manifest["groups"], dict):
        raise ContainerError("malformed manifest: missing groups table")
    return manifest, fh.tell()


def list_groups(path) -> list:
    with open(path, "rb") as fh:
        manifest, _ = _read_manifest(fh)
    return sorted(manifest["groups"])


def read_container(path, group: str = None) -> HermMatrix:
    """Read one group back into a HermMatrix (bit-exact)."""
    with open(path, "rb") as fh:
        manifest, data_start = _read_manifest(fh)
        groups = manifest["groups"]
        if group is None:
            if len(groups) != 1:
                raise ContainerError(f"file holds groups {sorted(groups)}; pick one")
            group = next(iter(groups))
        if group not in groups:
            raise ContainerError(f"no group {group!r} in container")
        g = groups[group]
        for key in ("nt", "ntau", "sig", "size1", "size2", "element_size", "datasets"):
            if key not in g:
                raise ContainerError(f"malformed manifest: group lacks {key!r}")
        nt, ntau, d = int(g["nt"]), int(g["ntau"]), int(g["size1"])
        if int(g["size2"]) != d or int(g["element_size"]) != d * d:
            raise ContainerError("inconsistent element dimensions in manifest")
        C = HermMatrix(nt, ntau, d, int(g["sig"]))
        counts = _expected_counts(nt, ntau, d)
        for comp in ("mat", "ret", "les", "tv"):
            ds = g["datasets"][comp]
            count = int(ds["count"])
            if count != counts[comp]:
                raise ContainerError(
                    f"dataset {comp!r} length {count} does not match header "
                    f"dimensions (expected {counts[comp]})")
            fh.seek(data_start + int(ds["offset"]))
            raw = fh.read(16 * count)
            if len(raw) != 16 * count:
                raise ContainerError(f"dataset {comp!r} truncated")
            pairs = np.frombuffer(raw, dtype="<f8")
            vals = pairs[0::2] + 1j * pairs[1::2]
            target = getattr(C, comp)
            target[:] = vals.reshape(target.shape)
    return C


def export_csv(path, header: Iterable[str], rows) -> None:
    """Comma-separated values with a one-line header and '.' decimals."""
    header = list(header)
    rows = np.atleast_2d(np.asarray(rows))
    if rows.size and rows.shape[1] != len(header):
        raise ValueError(f"{len(header)} column names for rows of width {rows.shape[1]}")
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="ascii") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.16g}" for v in row) + "\n")
    os.replace(tmp, path)


def read_csv(path):
    """Read back a CSV written by export_csv: (header list, float ndarray)."""
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().strip().split(",")
        data = [[float(v) for v in line.strip().split(",")] for line in fh if line.strip()]
    return header, np.asarray(data)
