"""Canonical text serialization of bow data.

Canonical form: JSON with sorted keys, two-space indentation, floats
rendered with 17 significant digits, complex scalars as [re, im] pairs,
matrices as row-major nested arrays, and zero-size matrices as explicit
{"rows": r, "cols": c} records.  parse -> serialize is byte-identical on
canonical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .bowdata import BowDatum
from .errors import ParseError, ShapeMismatch
from .orthosymplectic import PairingDatum
from .topology import TopologicalData, compute_dimensions

FORMAT_BOWFILE = "bowforge.bowfile"
FORMAT_TOPOLOGY = "bowforge.topology"
FORMAT_BOWCOMPLEX = "bowforge.bowcomplex"
VERSION = 1


def _emit(obj, indent: int, out: list) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        keys = sorted(obj)
        for pos, key in enumerate(keys):
            if not isinstance(key, str):
                raise TypeError(f"non-string key {key!r}")
            out.append(f"{pad}  {json.dumps(key)}: ")
            _emit(obj[key], indent + 1, out)
            out.append(",\n" if pos < len(keys) - 1 else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        out.append("[\n")
        for pos, item in enumerate(obj):
            out.append(pad + "  ")
            _emit(item, indent + 1, out)
            out.append(",\n" if pos < len(obj) - 1 else "\n")
        out.append(pad + "]")
    elif isinstance(obj, bool) or obj is None:
        out.append(json.dumps(obj))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        value = float(obj)
        if not np.isfinite(value):
            raise ValueError(f"cannot serialize non-finite float {value!r}")
        out.append(f"{value:.16e}")
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    else:
        raise TypeError(f"cannot serialize {type(obj)}")


def canonical_dumps(document) -> str:
    out: list = []
    _emit(document, 0, out)
    out.append("\n")
    return "".join(out)


def complex_to_doc(value: complex) -> list:
    value = complex(value)
    return [value.real, value.imag]


def complex_from_doc(doc, path: str) -> complex:
    if not (isinstance(doc, list) and len(doc) == 2):
        raise ParseError(f"{path}: complex scalar must be a [re, im] pair, got {doc!r}")
    return complex(float(doc[0]), float(doc[1]))


def matrix_to_doc(m: np.ndarray):
    m = np.asarray(m, dtype=np.complex128)
    if m.size == 0:
        return {"rows": int(m.shape[0]), "cols": int(m.shape[1])}
    return [[complex_to_doc(v) for v in row] for row in m]


def matrix_from_doc(doc, path: str) -> np.ndarray:
    if isinstance(doc, dict):
        try:
            rows, cols = int(doc["rows"]), int(doc["cols"])
        except KeyError as exc:
            raise ParseError(f"{path}: empty matrix record needs rows/cols") from exc
        if rows < 0 or cols < 0 or rows * cols != 0:
            raise ParseError(f"{path}: shape record {doc} must describe a zero-size matrix")
        return np.zeros((rows, cols), dtype=np.complex128)
    if not isinstance(doc, list) or not doc:
        raise ParseError(f"{path}: matrix must be a nested array or a shape record")
    width = None
    data = []
    for r, row in enumerate(doc):
        if not isinstance(row, list):
            raise ParseError(f"{path}[{r}]: matrix row must be an array")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError(f"{path}[{r}]: ragged matrix rows ({len(row)} vs {width})")
        data.append([complex_from_doc(v, f"{path}[{r}][{c}]") for c, v in enumerate(row)])
    return np.array(data, dtype=np.complex128)


def topology_to_doc(t: TopologicalData) -> dict:
    return {
        "n": t.n,
        "k": t.k,
        "ell": float(t.ell),
        "lambda": [float(v) for v in t.lam],
        "m": [int(v) for v in t.m],
        "nd": [int(v) for v in t.nd],
        "m0": int(t.m0),
        "z": [complex_to_doc(v) for v in t.z],
    }


def topology_from_doc(doc, path: str = "topology") -> TopologicalData:
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: expected an object")
    try:
        return TopologicalData(
            n=int(doc["n"]),
            k=int(doc["k"]),
            ell=float(doc["ell"]),
            lam=tuple(float(v) for v in doc["lambda"]),
            m=tuple(int(v) for v in doc["m"]),
            nd=tuple(int(v) for v in doc["nd"]),
            m0=int(doc["m0"]),
            z=tuple(complex_from_doc(v, f"{path}.z[{i}]") for i, v in enumerate(doc["z"])),
        )
    except KeyError as exc:
        raise ParseError(f"{path}: missing field {exc.args[0]!r}") from exc


def pairing_to_doc(p: PairingDatum) -> dict:
    return {
        "flavor": p.flavor,
        "K": [matrix_to_doc(k) for k in p.K],
        "f": [int(v) for v in p.f],
        "transpose_convention": bool(p.transpose_convention),
    }


def pairing_from_doc(doc, path: str = "pairing") -> PairingDatum:
    if not isinstance(doc, dict):
        raise ParseError(f"{path}: expected an object")
    try:
        return PairingDatum(
            flavor=str(doc["flavor"]),
            K=[matrix_from_doc(m, f"{path}.K[{i}]") for i, m in enumerate(doc["K"])],
            f=tuple(int(v) for v in doc["f"]),
            transpose_convention=bool(doc.get("transpose_convention", False)),
        )
    except KeyError as exc:
        raise ParseError(f"{path}: missing field {exc.args[0]!r}") from exc


@dataclass
class BowFile:
    """On-disk bundle: topology, matrices, optional pairing and metadata."""

    topo: TopologicalData
    datum: BowDatum | None = None
    pairing: PairingDatum | None = None
    metadata: dict | None = None
    version: int = VERSION

    def require_datum(self) -> BowDatum:
        if self.datum is None:
            raise ParseError("file carries no bow matrices")
        return self.datum

    def to_document(self) -> dict:
        doc = {
            "format": FORMAT_BOWFILE if self.datum is not None else FORMAT_TOPOLOGY,
            "version": self.version,
            "topology": topology_to_doc(self.topo),
            "metadata": self.metadata,
        }
        if self.datum is not None:
            b = self.datum
            doc["bow"] = {
                "beta": [matrix_to_doc(m) for m in b.beta],
                "A": [matrix_to_doc(m) for m in b.A],
                "alpha": [matrix_to_doc(m) for m in b.alpha],
                "gamma": [matrix_to_doc(m) for m in b.gamma],
                "betaN_interior": [matrix_to_doc(b.betaN[j]) for j in range(1, b.topo.k)],
                "Mxi": [matrix_to_doc(m) for m in b.Mxi],
                "Mpsi": [matrix_to_doc(m) for m in b.Mpsi],
            }
        doc["pairing"] = pairing_to_doc(self.pairing) if self.pairing else None
        return doc


def serialize(bf: BowFile) -> bytes:
    return canonical_dumps(bf.to_document()).encode("utf-8")


def _load_json(data) -> dict:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError(f"syntax error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    return doc


def parse_topology(data) -> TopologicalData:
    doc = _load_json(data)
    if doc.get("format") not in (FORMAT_TOPOLOGY, FORMAT_BOWFILE):
        raise ParseError(f"unexpected format marker {doc.get('format')!r}")
    return topology_from_doc(doc.get("topology"), "topology")


def parse(data) -> BowFile:
    """Parse a bow (or topology-only) file; validates shapes on the way in."""
    doc = _load_json(data)
    fmt = doc.get("format")
    if fmt not in (FORMAT_BOWFILE, FORMAT_TOPOLOGY):
        raise ParseError(f"unexpected format marker {fmt!r}")
    version = doc.get("version")
    if version != VERSION:
        raise ParseError(f"unsupported version {version!r}")
    topo = topology_from_doc(doc.get("topology"), "topology")
    metadata = doc.get("metadata")
    if metadata is not None and not isinstance(metadata, dict):
        raise ParseError("metadata: expected an object or null")

    datum = None
    bow = doc.get("bow")
    if bow is not None:
        if not isinstance(bow, dict):
            raise ParseError("bow: expected an object")

        def mats(name, count):
            seq = bow.get(name)
            if not isinstance(seq, list) or len(seq) != count:
                raise ParseError(f"bow.{name}: expected {count} matrices")
            return [matrix_from_doc(m, f"bow.{name}[{i}]") for i, m in enumerate(seq)]

        n, k = topo.n, topo.k
        try:
            datum = BowDatum.assemble(
                topo,
                beta=mats("beta", n + 1),
                A=mats("A", n),
                alpha=mats("alpha", n),
                gamma=mats("gamma", n),
                betaN_interior=mats("betaN_interior", k - 1),
                Mxi=mats("Mxi", k),
                Mpsi=mats("Mpsi", k),
            )
        except ShapeMismatch as exc:
            raise ShapeMismatch(f"bow: {exc}") from exc

    pairing = None
    if doc.get("pairing") is not None:
        pairing = pairing_from_doc(doc["pairing"], "pairing")
        dims = compute_dimensions(topo)
        if len(pairing.K) != topo.n + 1:
            raise ShapeMismatch(
                f"pairing.K: expected {topo.n + 1} matrices, got {len(pairing.K)}"
            )
        for i, kmat in enumerate(pairing.K):
            want = (dims.d[i], dims.d[topo.n - i])
            if kmat.shape != want:
                raise ShapeMismatch(
                    f"pairing.K[{i}] has shape {kmat.shape}, expected {want}"
                )
    return BowFile(topo=topo, datum=datum, pairing=pairing, metadata=metadata, version=version)
