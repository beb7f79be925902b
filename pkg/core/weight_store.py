"""
AMSRW1 weight container - magic line, JSON manifest line, little-endian float32 payload
"""
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Tuple, Union
import numpy as np
import structlog
from pydantic import ValidationError

from config.settings import AppSettings
from core.exceptions import InputFormatError, WeightFormatError
from models.model_spec import ManifestEntry, WeightManifest

logger = structlog.get_logger()

PathLike = Union[str, Path]

PAYLOAD_DTYPE = np.dtype("<f4")

@dataclass(frozen=True)
class WeightStore:
    """Named float32 tensors backed by one contiguous payload"""
    manifest: WeightManifest
    payload: np.ndarray

    def __post_init__(self):
        WeightStore._check_layout(self.manifest, self.payload.size * PAYLOAD_DTYPE.itemsize)

    @staticmethod
    def _check_layout(manifest: WeightManifest, payload_bytes: int):
        """Offsets ascending, non-overlapping and covering the whole payload"""
        cursor = 0
        seen = set()
        for entry in manifest.tensors:
            if entry.name in seen:
                raise WeightFormatError(f"Duplicate tensor name in manifest: {entry.name}")
            seen.add(entry.name)
            if entry.offset != cursor:
                raise WeightFormatError(
                    f"Tensor {entry.name} starts at byte {entry.offset}, expected {cursor}"
                )
            cursor += entry.nbytes
        if cursor != payload_bytes:
            raise WeightFormatError(f"Manifest describes {cursor} payload bytes, container holds {payload_bytes}")

    @classmethod
    def from_tensors(cls, tensors: Iterable[Tuple[str, np.ndarray]]) -> "WeightStore":
        """Pack (name, array) pairs in the given order"""
        entries: List[ManifestEntry] = []
        chunks = []
        offset = 0
        for name, array in tensors:
            arr = np.asarray(array, dtype=PAYLOAD_DTYPE)
            entries.append(ManifestEntry(name=name, shape=list(arr.shape), offset=offset))
            chunks.append(arr.ravel())
            offset += arr.size * PAYLOAD_DTYPE.itemsize
        payload = np.concatenate(chunks) if chunks else np.zeros(0, dtype=PAYLOAD_DTYPE)
        return cls(manifest=WeightManifest(tensors=entries), payload=payload)

    @property
    def names(self) -> List[str]:
        return [entry.name for entry in self.manifest.tensors]

    def entry(self, name: str) -> ManifestEntry:
        for entry in self.manifest.tensors:
            if entry.name == name:
                return entry
        raise KeyError(name)

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def get(self, name: str) -> np.ndarray:
        """Copy of a tensor in its manifest shape"""
        entry = self.entry(name)
        start = entry.offset // PAYLOAD_DTYPE.itemsize
        return self.payload[start:start + entry.numel].astype(np.float32).reshape(entry.shape)

    def to_bytes(self) -> bytes:
        manifest_line = self.manifest.model_dump_json().encode("utf-8")
        return AppSettings.WEIGHT_MAGIC + manifest_line + b"\n" + self.payload.astype(PAYLOAD_DTYPE).tobytes()

def parse_weights(data: bytes) -> WeightStore:
    """Decode an AMSRW1 container"""
    magic = AppSettings.WEIGHT_MAGIC
    if not data.startswith(magic):
        raise WeightFormatError("Bad magic: not an AMSRW1 weight container")

    newline = data.find(b"\n", len(magic))
    if newline < 0:
        raise WeightFormatError("Missing manifest line")
    try:
        manifest = WeightManifest.model_validate(json.loads(data[len(magic):newline].decode("utf-8")))
    except (UnicodeDecodeError, json.JSONDecodeError, ValidationError) as e:
        raise WeightFormatError(f"Unreadable manifest: {e}") from e

    raw = data[newline + 1:]
    if len(raw) % PAYLOAD_DTYPE.itemsize:
        raise WeightFormatError(f"Payload length {len(raw)} is not a multiple of 4")
    WeightStore._check_layout(manifest, len(raw))
    return WeightStore(manifest=manifest, payload=np.frombuffer(raw, dtype=PAYLOAD_DTYPE))

def load_weights(path: PathLike) -> WeightStore:
    """Read and validate an AMSRW1 file"""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        logger.error("Failed to read weights", path=str(path), error=str(e))
        raise InputFormatError(f"Cannot read weights {path}: {e}") from e

    store = parse_weights(data)
    logger.info("Weights loaded", path=str(path), tensors=len(store.names), floats=int(store.payload.size))
    return store

def save_weights(store: WeightStore, path: PathLike):
    Path(path).write_bytes(store.to_bytes())
