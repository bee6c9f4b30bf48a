"""Flat parameter vectors with a named shape catalog."""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np

MAGIC = b"WSQP"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class ParamEntry:
    name: str
    shape: Tuple[int, ...]
    offset: int
    kind: str = "weight"  # weight | bias | lstm_bias

    @property
    def size(self) -> int:
        return int(np.prod(self.shape, dtype=np.int64))


class Catalog:
    """Ordered ``(name, shape, offset)`` entries describing a flat vector."""

    def __init__(self, entries: Iterable[ParamEntry] = ()):
        self.entries: List[ParamEntry] = []
        self._index: Dict[str, int] = {}
        self.size = 0
        for e in entries:
            self.add(e.name, e.shape, e.kind)

    def add(self, name: str, shape: Sequence[int], kind: str = "weight") -> ParamEntry:
        if name in self._index:
            raise ValueError(f"duplicate parameter name {name!r}")
        shape = tuple(int(s) for s in shape)
        if any(s < 1 for s in shape):
            raise ValueError(f"parameter {name!r} has an empty dimension: {shape}")
        entry = ParamEntry(name, shape, self.size, kind)
        self._index[name] = len(self.entries)
        self.entries.append(entry)
        self.size += entry.size
        return entry

    def __getitem__(self, name: str) -> ParamEntry:
        return self.entries[self._index[name]]

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, Catalog) and self.entries == other.entries

    def names(self) -> List[str]:
        return [e.name for e in self.entries]

    def locate(self, index: int) -> str:
        """Name of the entry holding flat coordinate ``index``."""
        for e in self.entries:
            if e.offset <= index < e.offset + e.size:
                return e.name
        raise IndexError(index)


class ParamSet:
    """A flat float64 vector plus views shaped by its catalog.

    ``ps[name]`` returns a writable view into ``ps.flat``.
    """

    def __init__(self, catalog: Catalog, flat=None):
        self.catalog = catalog
        if flat is None:
            flat = np.zeros(catalog.size)
        flat = np.ascontiguousarray(flat, dtype=np.float64)
        if flat.shape != (catalog.size,):
            raise ValueError(f"flat vector has length {flat.size}, catalog needs {catalog.size}")
        self.flat = flat

    def __getitem__(self, name: str) -> np.ndarray:
        e = self.catalog[name]
        return self.flat[e.offset : e.offset + e.size].reshape(e.shape)

    def __len__(self) -> int:
        return self.flat.size

    def copy(self) -> "ParamSet":
        return ParamSet(self.catalog, self.flat.copy())

    def zeros_like(self) -> "ParamSet":
        return ParamSet(self.catalog)

    def unpack(self) -> Dict[str, np.ndarray]:
        return {e.name: self[e.name].copy() for e in self.catalog}

    @classmethod
    def pack(cls, catalog: Catalog, arrays: Dict[str, np.ndarray]) -> "ParamSet":
        ps = cls(catalog)
        for e in catalog:
            a = np.asarray(arrays[e.name], dtype=float)
            if a.shape != e.shape:
                raise ValueError(f"{e.name}: expected shape {e.shape}, got {a.shape}")
            ps[e.name][...] = a
        return ps

    def to_bytes(self) -> bytes:
        out = [MAGIC, struct.pack("<HI", FORMAT_VERSION, len(self.catalog))]
        for e in self.catalog:
            name = e.name.encode("utf-8")
            kind = e.kind.encode("utf-8")
            out.append(struct.pack("<H", len(name)) + name)
            out.append(struct.pack("<B", len(kind)) + kind)
            out.append(struct.pack("<B", len(e.shape)) + struct.pack(f"<{len(e.shape)}I", *e.shape))
        out.append(struct.pack("<Q", self.flat.size))
        out.append(self.flat.astype("<f8").tobytes())
        return b"".join(out)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "ParamSet":
        if raw[:4] != MAGIC:
            raise ValueError("not a parameter file (bad magic)")
        version, n = struct.unpack_from("<HI", raw, 4)
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported parameter file version {version}")
        pos = 10
        cat = Catalog()
        for _ in range(n):
            (ln,) = struct.unpack_from("<H", raw, pos)
            pos += 2
            name = raw[pos : pos + ln].decode("utf-8")
            pos += ln
            (lk,) = struct.unpack_from("<B", raw, pos)
            pos += 1
            kind = raw[pos : pos + lk].decode("utf-8")
            pos += lk
            (nd,) = struct.unpack_from("<B", raw, pos)
            pos += 1
            shape = struct.unpack_from(f"<{nd}I", raw, pos)
            pos += 4 * nd
            cat.add(name, shape, kind)
        (count,) = struct.unpack_from("<Q", raw, pos)
        pos += 8
        if count != cat.size:
            raise ValueError("parameter count does not match catalog")
        flat = np.frombuffer(raw, dtype="<f8", count=count, offset=pos).astype(np.float64)
        return cls(cat, flat)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "ParamSet":
        return cls.from_bytes(Path(path).read_bytes())

    def to_text(self) -> str:
        """Lossless text export: one header line and one value line per entry."""
        lines = [f"# waveseq parameters v{FORMAT_VERSION}"]
        for e in self.catalog:
            lines.append(f"{e.name} {e.kind} {'x'.join(map(str, e.shape))}")
            lines.append(" ".join(repr(float(v)) for v in self[e.name].ravel()))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "ParamSet":
        lines = [l for l in text.splitlines() if l and not l.startswith("#")]
        cat = Catalog()
        values = []
        for head, body in zip(lines[::2], lines[1::2]):
            name, kind, shape = head.split()
            cat.add(name, [int(s) for s in shape.split("x")], kind)
            values.extend(float(v) for v in body.split())
        return cls(cat, np.array(values))


def init_params(catalog: Catalog, seed: int, std: float = 0.1, forget_bias: float = 1.0) -> ParamSet:
    """Gaussian weights (mean 0, ``std``), zero biases.

    Entries of kind ``lstm_bias`` get ``forget_bias`` on their first quarter
    (the forget-gate block); pass ``forget_bias=0`` to disable.
    """
    rng = np.random.default_rng(seed)
    ps = ParamSet(catalog)
    for e in catalog:
        if e.kind == "weight":
            ps[e.name][...] = rng.normal(0.0, std, size=e.shape)
        elif e.kind == "lstm_bias":
            ps[e.name][: e.size // 4] = forget_bias
    return ps
