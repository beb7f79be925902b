"""
Netpbm image codec - binary PPM (P6) and PGM (P5) readers and writers
"""
from pathlib import Path
from typing import Tuple, Union
import numpy as np
import structlog

from core.exceptions import InputFormatError
from core.tensor_core import Tensor

logger = structlog.get_logger()

PathLike = Union[str, Path]

MAGIC_CHANNELS = {b"P5": 1, b"P6": 3}

def _read_header(data: bytes) -> Tuple[bytes, int, int, int, int]:
    """Parse magic, width, height, maxval; return them with the payload offset"""
    tokens = []
    pos = 0
    while len(tokens) < 4:
        # Skip whitespace and comments between header tokens
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        if pos >= len(data):
            raise InputFormatError("Truncated netpbm header")
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])

    # Exactly one whitespace byte separates maxval from the raster
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise InputFormatError("Missing separator after netpbm maxval")
    pos += 1

    magic = tokens[0]
    if magic not in MAGIC_CHANNELS:
        raise InputFormatError(f"Unsupported netpbm magic {magic!r}; expected P5 or P6")
    try:
        width, height, maxval = (int(tok) for tok in tokens[1:])
    except ValueError:
        raise InputFormatError(f"Malformed netpbm header values: {tokens[1:]}")
    if width < 1 or height < 1:
        raise InputFormatError(f"Image dimensions must be positive, got {width}x{height}")
    if maxval != 255:
        raise InputFormatError(f"Unsupported maxval {maxval}; only 255 is accepted")
    return magic, width, height, maxval, pos

def decode_netpbm(data: bytes) -> np.ndarray:
    """Decode P5/P6 bytes to a (channels, H, W) uint8 array"""
    magic, width, height, _, offset = _read_header(data)
    channels = MAGIC_CHANNELS[magic]
    expected = width * height * channels
    payload = data[offset:offset + expected]
    if len(payload) < expected:
        raise InputFormatError(f"Truncated payload: expected {expected} bytes, got {len(payload)}")
    raster = np.frombuffer(payload, dtype=np.uint8).reshape(height, width, channels)
    return raster.transpose(2, 0, 1)

def quantize(values: np.ndarray) -> np.ndarray:
    """[0, 1] reals to uint8 with round-half-away-from-zero"""
    scaled = np.clip(values.astype(np.float64), 0.0, 1.0) * 255.0
    return np.floor(scaled + 0.5).astype(np.uint8)

def encode_netpbm(raster: np.ndarray) -> bytes:
    """Encode a (1 or 3, H, W) uint8 array as P5/P6"""
    channels, height, width = raster.shape
    if channels not in (1, 3):
        raise InputFormatError(f"Netpbm encoding needs 1 or 3 channels, got {channels}")
    magic = "P5" if channels == 1 else "P6"
    header = f"{magic}\n{width} {height}\n255\n".encode("ascii")
    return header + np.ascontiguousarray(raster.transpose(1, 2, 0)).tobytes()

def load_image(path: PathLike) -> Tensor:
    """Load a P6 or P5 image as a 3-channel tensor in [0, 1]; P5 is promoted to RGB"""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        logger.error("Failed to read image", path=str(path), error=str(e))
        raise InputFormatError(f"Cannot read image {path}: {e}") from e

    raster = decode_netpbm(data)
    if raster.shape[0] == 1:
        raster = np.repeat(raster, 3, axis=0)
    return Tensor(raster.astype(np.float32) / 255.0)

def load_gray(path: PathLike) -> np.ndarray:
    """Load a P5/P6 image as a single (H, W) plane in [0, 1] (RGB inputs use the first channel)"""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        logger.error("Failed to read image", path=str(path), error=str(e))
        raise InputFormatError(f"Cannot read image {path}: {e}") from e
    return decode_netpbm(data)[0].astype(np.float32) / 255.0

def save_image(t: Tensor, path: PathLike):
    """Save a 1- or 3-channel tensor as P5/P6"""
    Path(path).write_bytes(encode_netpbm(quantize(t.data)))

def save_gray(plane: np.ndarray, path: PathLike):
    """Save an (H, W) plane in [0, 1] as P5"""
    Path(path).write_bytes(encode_netpbm(quantize(np.asarray(plane))[None]))
