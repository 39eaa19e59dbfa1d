"""Embedding and OCR providers.

The deterministic stubs let the whole pipeline run offline. The HTTP
clients speak a small JSON contract:

    POST {base}/embed  {"kind": "text"|"image", "payload": str}  -> {"vector": [float, ...]}
    POST {base}/ocr    {"payload": base64 PNG}                   -> {"text": str}

Image payloads are base64-encoded PNG; text payloads are plain UTF-8.
"""

from __future__ import annotations

import base64
import io
import json
import threading
import urllib.error
import urllib.request
import zlib
from abc import ABC, abstractmethod
from collections.abc import Callable, Mapping

import numpy as np
from PIL import Image

from .primitives import UndecodableImage, raster_digest


class EmbeddingUnavailable(RuntimeError):
    pass


class OcrUnavailable(RuntimeError):
    pass


class DimensionMismatch(ValueError):
    pass


def cosine(a, b) -> float:
    """Cosine similarity; 0 when either vector is zero."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    return v / n if n > 0 else v


def to_rgb(raster: np.ndarray) -> np.ndarray:
    """Flatten an HxWxC uint8 raster onto white; returns float RGB in [0, 255]."""
    arr = np.asarray(raster)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.size == 0:
        raise UndecodableImage(f"cannot interpret raster of shape {arr.shape}")
    arr = arr.astype(float)
    c = arr.shape[2]
    if c in (2, 4):
        alpha = arr[:, :, -1:] / 255.0
        color = arr[:, :, :-1]
        arr = color * alpha + 255.0 * (1.0 - alpha)
        c -= 1
    if c == 1:
        arr = np.repeat(arr, 3, axis=2)
    return arr[:, :, :3]


def to_gray(raster: np.ndarray) -> np.ndarray:
    rgb = to_rgb(raster)
    return rgb @ np.array([0.299, 0.587, 0.114])


def png_bytes(raster: np.ndarray) -> bytes:
    arr = np.asarray(raster, dtype=np.uint8)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim == 3 and arr.shape[2] == 2:
        arr = np.concatenate([np.repeat(arr[:, :, :1], 3, axis=2), arr[:, :, 1:]], axis=2)
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


class EmbeddingProvider(ABC):
    """Maps text and rasters into one vector space."""

    dimension: int
    cross_modal: bool = True

    @abstractmethod
    def embed_text(self, s: str) -> np.ndarray: ...

    @abstractmethod
    def embed_image(self, raster: np.ndarray) -> np.ndarray: ...

    def similarity(self, text: str, element) -> float | None:
        """Cosine between a caption candidate and a visual element.

        Returns None when this provider cannot compare the two (no raster,
        or text and image vectors are not comparable).
        """
        if not self.cross_modal or getattr(element, "raster", None) is None:
            return None
        return cosine(self.embed_text(text), self.embed_image(element.raster))


class StubEmbeddingProvider(EmbeddingProvider):
    """Character-trigram text vectors and 16x16 grayscale thumbnail image vectors.

    Both halves are 256-dimensional and L2-normalized, but they live in
    unrelated spaces, so cross-modal similarity is disabled.
    """

    dimension = 256
    cross_modal = False

    def embed_text(self, s: str) -> np.ndarray:
        v = np.zeros(self.dimension)
        padded = f"  {s.lower()} "
        for i in range(len(padded) - 2):
            gram = padded[i:i + 3]
            v[zlib.crc32(gram.encode("utf-8")) % self.dimension] += 1.0
        if not s.strip():
            return np.zeros(self.dimension)
        return _unit(v)

    def embed_image(self, raster: np.ndarray) -> np.ndarray:
        gray = to_gray(raster)
        img = Image.fromarray(np.clip(gray, 0, 255).astype(np.uint8))
        thumb = np.asarray(img.resize((16, 16), Image.Resampling.BILINEAR), dtype=float).ravel()
        # centering makes the negative of an image point the opposite way
        return _unit(thumb - thumb.mean())


class ScriptedSimilarityProvider(StubEmbeddingProvider):
    """Stub embeddings plus a caller-supplied cross-modal similarity function.

    ``fn(text, element)`` returns a cosine in [-1, 1]. Used to inject an
    oracle in place of a real multimodal model.
    """

    cross_modal = True

    def __init__(self, fn: Callable[[str, object], float]):
        self.fn = fn

    def similarity(self, text: str, element) -> float | None:
        return float(np.clip(self.fn(text, element), -1.0, 1.0))


class OcrProvider(ABC):
    @abstractmethod
    def ocr_text(self, raster: np.ndarray) -> str: ...


class StubOcrProvider(OcrProvider):
    """Returns text planted for a raster, looked up by pixel digest."""

    def __init__(self, planted: Mapping[str, str] | None = None):
        self.planted = dict(planted or {})

    def plant(self, raster: np.ndarray, text: str) -> None:
        self.planted[raster_digest(np.asarray(raster, dtype=np.uint8))] = text

    def ocr_text(self, raster: np.ndarray) -> str:
        arr = np.asarray(raster, dtype=np.uint8)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        return self.planted.get(raster_digest(arr), "")


class UnavailableOcrProvider(OcrProvider):
    def ocr_text(self, raster: np.ndarray) -> str:
        raise OcrUnavailable("no OCR engine configured")


class _HttpClient:
    def __init__(self, base_url: str, timeout: float = 10.0, max_inflight: int = 4,
                 error: type[Exception] = RuntimeError):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._slots = threading.BoundedSemaphore(max_inflight)
        self._error = error

    def post(self, path: str, body: dict) -> dict:
        req = urllib.request.Request(
            self.base_url + path,
            data=json.dumps(body).encode("utf-8"),
            headers={"Content-Type": "application/json"},
            method="POST",
        )
        with self._slots:
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    if resp.status != 200:
                        raise self._error(f"{path}: HTTP {resp.status}")
                    return json.loads(resp.read().decode("utf-8"))
            except self._error:
                raise
            except (urllib.error.URLError, TimeoutError, OSError, ValueError) as exc:
                raise self._error(f"{path}: {exc}") from exc


class HttpEmbeddingProvider(EmbeddingProvider):
    """Client for a remote multimodal embedding service."""

    def __init__(self, base_url: str, timeout: float = 10.0, max_inflight: int = 4):
        self._http = _HttpClient(base_url, timeout, max_inflight, EmbeddingUnavailable)
        self.dimension = 0

    def _embed(self, kind: str, payload: str) -> np.ndarray:
        reply = self._http.post("/embed", {"kind": kind, "payload": payload})
        try:
            vec = np.asarray(reply["vector"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise EmbeddingUnavailable(f"bad embedding reply: {exc}") from exc
        if vec.ndim != 1 or vec.size == 0:
            raise EmbeddingUnavailable("embedding reply is not a vector")
        if self.dimension and vec.size != self.dimension:
            raise DimensionMismatch(f"provider switched dimension {self.dimension} -> {vec.size}")
        self.dimension = vec.size
        return _unit(vec)

    def embed_text(self, s: str) -> np.ndarray:
        return self._embed("text", s)

    def embed_image(self, raster: np.ndarray) -> np.ndarray:
        return self._embed("image", base64.b64encode(png_bytes(raster)).decode("ascii"))


class HttpOcrProvider(OcrProvider):
    def __init__(self, base_url: str, timeout: float = 10.0, max_inflight: int = 4):
        self._http = _HttpClient(base_url, timeout, max_inflight, OcrUnavailable)

    def ocr_text(self, raster: np.ndarray) -> str:
        reply = self._http.post("/ocr", {"payload": base64.b64encode(png_bytes(raster)).decode()})
        text = reply.get("text") if isinstance(reply, dict) else None
        if not isinstance(text, str):
            raise OcrUnavailable("OCR reply lacks a text field")
        return text
