"""Embedding providers: image -> fixed-length feature vector.

Two implementations of one contract: a deterministic offline stub (stands in
for a pretrained image network so every pipeline runs without weights), and a
client for an out-of-process sidecar speaking the file-exchange protocol.

Exchange protocol, shared with the sidecar:
  * request: ``<root>/images/<job_id>/NNNNN.png`` plus a job file
    ``<root>/<job_id>.json`` = {"job_id", "images": [relative paths],
    "dim", "model"}; the job file is written last and signals readiness.
  * response: ``<root>/<job_id>.f32`` = little-endian u32 count, u32 dim,
    then count rows of dim float32 values.
  * failure: ``<root>/<job_id>.err`` = JSON {"error", "image"?}.

One job is in flight per exchange directory at a time.
"""

from __future__ import annotations

import json
import struct
import time
import uuid
from pathlib import Path

import numpy as np

from .imaging import EMBED_SIZE, grayscale, write_png
from .validation import SpecError, check_rgb_image

EMBED_DIM = 4096
_PATCH = 16


class SidecarTimeoutError(SpecError):
    pass


class EmbeddingProvider:
    """Contract: ``dim`` fixed per instance; ``embed`` deterministic."""

    dim: int = EMBED_DIM

    def embed(self, image) -> np.ndarray:
        raise NotImplementedError

    def embed_batch(self, images) -> np.ndarray:
        out = np.empty((len(images), self.dim), dtype=np.float64)
        for i, img in enumerate(images):
            out[i] = self.embed(img)
        return out


class StubEmbeddingProvider(EmbeddingProvider):
    """Seeded random-projection embedding.

    224x224x3 input -> 16x16 block means per RGB channel plus a 16x16
    grayscale patch (1024 values in [0,1]) -> fixed Gaussian projection to
    4096 (rows scaled by 1/sqrt(1024)) -> tanh.  Both stages are Lipschitz,
    so nearby images embed nearby; the projection is drawn once per seed.
    """

    def __init__(self, seed=0, dim=EMBED_DIM):
        self.seed = int(seed)
        self.dim = int(dim)
        self._projection = None

    @property
    def projection(self):
        if self._projection is None:
            rng = np.random.default_rng(self.seed)
            n_in = _PATCH * _PATCH * 4
            self._projection = rng.standard_normal((self.dim, n_in)) / np.sqrt(n_in)
        return self._projection

    def patch_vector(self, image):
        img = check_rgb_image(image, size=(EMBED_SIZE, EMBED_SIZE)).astype(np.float64)
        img /= 255.0
        block = EMBED_SIZE // _PATCH
        pooled = img.reshape(_PATCH, block, _PATCH, block, 3).mean(axis=(1, 3))
        return np.concatenate([pooled.ravel(), grayscale(pooled).ravel()])

    def embed(self, image):
        return np.tanh(self.projection @ self.patch_vector(image))


def stub_embed(image, seed=0):
    """One-shot stub embedding (see :class:`StubEmbeddingProvider`)."""
    return StubEmbeddingProvider(seed=seed).embed(image)


# ---------------------------------------------------------------------------
# exchange protocol


def write_response(path, vectors):
    """Write a response file: (count, dim) header + float32 rows."""
    vectors = np.asarray(vectors, dtype="<f4")
    if vectors.ndim != 2:
        vectors = vectors.reshape(0, EMBED_DIM) if vectors.size == 0 else vectors
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "wb") as f:
        f.write(struct.pack("<II", vectors.shape[0], vectors.shape[1]))
        f.write(vectors.tobytes())
    tmp.replace(path)


def read_response(path, expect_count, expect_dim):
    """Parse and validate a response file -> float64 [count x dim]."""
    blob = Path(path).read_bytes()
    if len(blob) < 8:
        raise SpecError(f"malformed response {path}: truncated header")
    count, dim = struct.unpack_from("<II", blob)
    if dim != expect_dim:
        raise SpecError(
            f"dim mismatch in {Path(path).name}: header dim {dim}, expected {expect_dim}"
        )
    if count != expect_count:
        raise SpecError(
            f"malformed response {path}: header count {count}, expected {expect_count}"
        )
    expected_len = 8 + 4 * count * dim
    if len(blob) != expected_len:
        raise SpecError(
            f"malformed response {path}: {len(blob)} bytes, expected {expected_len}"
        )
    rows = np.frombuffer(blob, dtype="<f4", offset=8).reshape(count, dim)
    return rows.astype(np.float64)


def write_job(exchange_root, images, dim=EMBED_DIM, model="generic", job_id=None):
    """Materialise a job (PNGs first, job file last). Returns the job id."""
    root = Path(exchange_root)
    job_id = job_id or uuid.uuid4().hex
    img_dir = root / "images" / job_id
    img_dir.mkdir(parents=True, exist_ok=True)
    rel_paths = []
    for i, img in enumerate(images):
        rel = f"images/{job_id}/{i:05d}.png"
        write_png(root / rel, check_rgb_image(img, size=(EMBED_SIZE, EMBED_SIZE)))
        rel_paths.append(rel)
    job = {"job_id": job_id, "images": rel_paths, "dim": int(dim), "model": str(model)}
    tmp = root / f"{job_id}.json.tmp"
    tmp.write_text(json.dumps(job))
    tmp.replace(root / f"{job_id}.json")
    return job_id


def _cleanup_job(root, job_id):
    import shutil

    for p in (root / f"{job_id}.json", root / f"{job_id}.f32", root / f"{job_id}.err"):
        p.unlink(missing_ok=True)
    shutil.rmtree(root / "images" / job_id, ignore_errors=True)


def sidecar_embed(images, exchange_root, dim=EMBED_DIM, model="generic",
                  timeout_s=300.0, poll_s=0.05):
    """Embed a batch through the sidecar exchange; blocks until the response.

    Raises on timeout, header dim mismatch, or malformed/failed responses.
    An empty batch short-circuits to an empty [0 x dim] result.
    """
    if len(images) == 0:
        return np.empty((0, dim), dtype=np.float64)
    root = Path(exchange_root)
    root.mkdir(parents=True, exist_ok=True)
    job_id = write_job(root, images, dim=dim, model=model)
    resp = root / f"{job_id}.f32"
    errf = root / f"{job_id}.err"
    deadline = time.monotonic() + timeout_s
    try:
        while True:
            if resp.exists():
                return read_response(resp, expect_count=len(images), expect_dim=dim)
            if errf.exists():
                info = json.loads(errf.read_text())
                detail = info.get("error", "unknown failure")
                image = info.get("image")
                suffix = f" (image {image})" if image else ""
                raise SpecError(f"sidecar job {job_id} failed: {detail}{suffix}")
            if time.monotonic() > deadline:
                raise SidecarTimeoutError(
                    f"timeout: no sidecar response for job {job_id} "
                    f"within {timeout_s:.0f} s"
                )
            time.sleep(poll_s)
    finally:
        _cleanup_job(root, job_id)


class SidecarEmbeddingProvider(EmbeddingProvider):
    """EmbeddingProvider backed by the exchange protocol."""

    def __init__(self, exchange_root, dim=EMBED_DIM, model="generic",
                 timeout_s=300.0):
        self.exchange_root = Path(exchange_root)
        self.dim = int(dim)
        self.model = model
        self.timeout_s = timeout_s

    def embed(self, image):
        return self.embed_batch([image])[0]

    def embed_batch(self, images):
        return sidecar_embed(
            images, self.exchange_root, dim=self.dim, model=self.model,
            timeout_s=self.timeout_s,
        )


def serve_stub(exchange_root, seed=0, poll_s=0.05, max_jobs=None, idle_timeout_s=None):
    """Answer exchange jobs with stub embeddings (debug loop).

    Runs until ``max_jobs`` jobs are served or ``idle_timeout_s`` passes with
    no work; both None means run forever.
    """
    from .imaging import read_png

    root = Path(exchange_root)
    root.mkdir(parents=True, exist_ok=True)
    provider = StubEmbeddingProvider(seed=seed)
    served = 0
    last_work = time.monotonic()
    while True:
        jobs = sorted(p for p in root.glob("*.json") if not p.name.endswith(".tmp"))
        if not jobs:
            if max_jobs is not None and served >= max_jobs:
                return served
            if idle_timeout_s is not None and time.monotonic() - last_work > idle_timeout_s:
                return served
            time.sleep(poll_s)
            continue
        job_path = jobs[0]
        job = json.loads(job_path.read_text())
        job_id = job["job_id"]
        try:
            imgs = [read_png(root / rel) for rel in job["images"]]
            vectors = (
                provider.embed_batch(imgs)
                if imgs
                else np.empty((0, int(job["dim"])), dtype=np.float64)
            )
            write_response(root / f"{job_id}.f32", vectors)
        except Exception as e:  # job must fail loudly, never with NaN rows
            (root / f"{job_id}.err").write_text(json.dumps({"error": str(e)}))
        job_path.unlink(missing_ok=True)
        served += 1
        last_work = time.monotonic()
        if max_jobs is not None and served >= max_jobs:
            return served
