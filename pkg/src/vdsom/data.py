"""Seeded observation streams and the IDX image loader.

All randomness goes through ``numpy.random.Generator`` backed by PCG64, seeded
through ``numpy.random.SeedSequence``; both are documented, portable algorithms,
so a given seed yields the same stream on every platform.
"""

import struct
import sys
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

IDX_UBYTE_3D = 0x00000803
NEVER = sys.maxsize

# tag mixed into the seed of held-out evaluation streams
EVAL_TAG = 0xE7A1


class IdxFormatError(ValueError):
    pass


class IdxImages(NamedTuple):
    count: int
    dim: int
    vectors: np.ndarray
    shape: tuple


def make_rng(seed, *tags):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *tags])))


def derive_seed(seed, *tags):
    """Portable 64-bit child seed of ``seed`` for the given integer tags."""
    return int(np.random.SeedSequence([int(seed), *tags]).generate_state(1, np.uint64)[0])


def moons_point(upper, t):
    """Point at parameter ``t`` in ``[0, pi]`` on the upper or lower moon."""
    if upper:
        return np.array([np.cos(t), np.sin(t)])
    return np.array([1.0 - np.cos(t), 0.5 - np.sin(t)])


def sample_moons(rng, noise_std=0.05):
    upper = rng.random() < 0.5
    t = rng.uniform(0.0, np.pi)
    return moons_point(upper, t) + rng.normal(0.0, 1.0, 2) * noise_std


def sample_circles(rng, noise_std=0.05, inner_factor=0.5):
    if not 0 < inner_factor < 1:
        raise ValueError(f"inner_factor must lie in (0, 1), got {inner_factor}")
    radius = 1.0 if rng.random() < 0.5 else inner_factor
    angle = rng.uniform(0.0, 2.0 * np.pi)
    point = radius * np.array([np.cos(angle), np.sin(angle)])
    return point + rng.normal(0.0, 1.0, 2) * noise_std


def parse_idx_images(buf):
    """Parse an unsigned-byte 3D IDX tensor from ``buf``.

    Pixels are scaled to ``[0, 1]`` and each image is flattened row-major.
    """
    if len(buf) < 4:
        raise IdxFormatError(f"truncated header at offset {len(buf)}: need 4 magic bytes")
    (magic,) = struct.unpack_from(">I", buf, 0)
    if magic != IDX_UBYTE_3D:
        raise IdxFormatError(f"unexpected magic 0x{magic:08x} at offset 0")
    if len(buf) < 16:
        raise IdxFormatError(f"truncated header at offset {len(buf)}: need 16 bytes")
    count, rows, cols = struct.unpack_from(">III", buf, 4)
    dim = rows * cols
    size = count * dim
    if size > sys.maxsize:
        raise IdxFormatError(f"dimension overflow at offset 4: {count}x{rows}x{cols}")
    if len(buf) - 16 < size:
        raise IdxFormatError(
            f"truncated data at offset {len(buf)}: expected {size} pixel bytes after offset 16"
        )
    pixels = np.frombuffer(buf, dtype=np.uint8, count=size, offset=16)
    vectors = pixels.reshape(count, dim).astype(float) / 255.0
    return IdxImages(count, dim, vectors, (rows, cols))


def load_idx_images(path):
    with open(path, "rb") as fh:
        return parse_idx_images(fh.read())


def idx_bytes(vectors, rows, cols):
    """Serialize ``[0, 1]`` image vectors back to unsigned-byte IDX."""
    vectors = np.asarray(vectors, dtype=float).reshape(-1, rows * cols)
    pixels = np.floor(vectors * 255.0 + 0.5).clip(0, 255).astype(np.uint8)
    return struct.pack(">IIII", IDX_UBYTE_3D, len(vectors), rows, cols) + pixels.tobytes()


def write_idx_images(path, vectors, rows, cols):
    with open(path, "wb") as fh:
        fh.write(idx_bytes(vectors, rows, cols))


def gaussian_mixture(size, dim=64, components=10, spread=0.1, seed=0):
    """Seeded isotropic Gaussian mixture with centers uniform in the unit cube."""
    rng = make_rng(seed)
    centers = rng.random((components, dim))
    labels = rng.integers(0, components, size)
    return centers[labels] + rng.normal(0.0, spread, (size, dim))


class ObservationStream:
    dim: int

    def next(self):
        raise NotImplementedError

    def take(self, count):
        return np.array([self.next() for _ in range(count)])


class SyntheticStream(ObservationStream):
    def __init__(self, sampler, rng, dim=2, **params):
        self.sampler = sampler
        self.rng = rng
        self.dim = dim
        self.params = params

    def next(self):
        return self.sampler(self.rng, **self.params)


class DatasetStream(ObservationStream):
    """Uniform sampling with replacement from a materialized ``(count, dim)`` array."""

    def __init__(self, vectors, rng):
        self.vectors = np.asarray(vectors, dtype=float)
        if len(self.vectors) == 0:
            raise ValueError("dataset is empty")
        self.rng = rng
        self.dim = self.vectors.shape[1]

    def next(self):
        return self.vectors[self.rng.integers(len(self.vectors))].copy()


class MutateStream(ObservationStream):
    """Emit from ``first`` for steps ``1..switch_step``, then from ``second``."""

    def __init__(self, first, second, switch_step):
        if first.dim != second.dim:
            raise ValueError(f"cannot switch between dims {first.dim} and {second.dim}")
        if switch_step < 0:
            raise ValueError("switch_step must be non-negative")
        self.first = first
        self.second = second
        self.switch_step = switch_step
        self.dim = first.dim
        self.count = 0

    def next(self):
        self.count += 1
        return self.first.next() if self.count <= self.switch_step else self.second.next()


def mutate_stream(first, second, switch_step):
    return MutateStream(first, second, switch_step)


@dataclass(frozen=True)
class StreamSpec:
    """Declarative description of an observation stream.

    ``kind`` is one of ``moons``, ``circles``, ``idx_file``, ``mixture`` or
    ``mutate``. ``limit`` keeps only the first images of an IDX file. The
    ``mixture`` kind is a stand-in high-dimensional dataset
    (``mixture_size`` points, ``mixture_dim`` dims, ``mixture_components``).
    """

    kind: str = "moons"
    seed: int = 0
    noise_std: float = 0.05
    inner_factor: float = 0.5
    path: Optional[str] = None
    limit: Optional[int] = None
    mixture_size: int = 2000
    mixture_dim: int = 64
    mixture_components: int = 10
    switch_step: int = NEVER
    first: Optional["StreamSpec"] = None
    second: Optional["StreamSpec"] = None

    def __post_init__(self):
        if self.kind not in ("moons", "circles", "idx_file", "mixture", "mutate"):
            raise ValueError(f"unknown stream kind {self.kind!r}")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")
        if self.kind == "circles" and not 0 < self.inner_factor < 1:
            raise ValueError("inner_factor must lie in (0, 1)")
        if self.kind == "idx_file" and not self.path:
            raise ValueError("idx_file stream needs a path")
        if self.kind == "mutate" and (self.first is None or self.second is None):
            raise ValueError("mutate stream needs first and second children")


_DATASETS = {}


def dataset_vectors(spec):
    """Materialized data of a file-backed or mixture spec, cached per process."""
    key = (spec.kind, spec.path, spec.limit, spec.seed, spec.mixture_size,
           spec.mixture_dim, spec.mixture_components)
    if key not in _DATASETS:
        if spec.kind == "idx_file":
            vectors = load_idx_images(spec.path).vectors
            if spec.limit is not None:
                vectors = vectors[: spec.limit]
        else:
            vectors = gaussian_mixture(
                spec.mixture_size, spec.mixture_dim, spec.mixture_components, seed=spec.seed
            )
        vectors.flags.writeable = False
        _DATASETS[key] = vectors
    return _DATASETS[key]


def image_shape(spec):
    """``(rows, cols)`` of the observations if they are images, else ``None``."""
    if spec.kind == "idx_file":
        with open(spec.path, "rb") as fh:
            header = fh.read(16)
        if len(header) == 16:
            _, _, rows, cols = struct.unpack(">IIII", header)
            return rows, cols
        return None
    if spec.kind == "mixture":
        side = int(round(np.sqrt(spec.mixture_dim)))
        return (side, side) if side * side == spec.mixture_dim else None
    if spec.kind == "mutate":
        return image_shape(spec.first)
    return None


def open_stream(spec, *tags):
    """Build the stream described by ``spec``.

    Extra integer ``tags`` are mixed into every seed, giving an independent
    stream over the same distribution (used for held-out evaluation batches).
    """
    if spec.kind == "moons":
        return SyntheticStream(sample_moons, make_rng(spec.seed, *tags), noise_std=spec.noise_std)
    if spec.kind == "circles":
        return SyntheticStream(
            sample_circles, make_rng(spec.seed, *tags),
            noise_std=spec.noise_std, inner_factor=spec.inner_factor,
        )
    if spec.kind in ("idx_file", "mixture"):
        # the sampling seed is tagged so it differs from the mixture's own generation seed
        return DatasetStream(dataset_vectors(spec), make_rng(spec.seed, 1, *tags))
    return MutateStream(
        open_stream(spec.first, *tags), open_stream(spec.second, *tags), spec.switch_step
    )


def phase_at(spec, step):
    """Leaf spec whose distribution is sampled at training ``step`` (step 0 = before training)."""
    while spec.kind == "mutate":
        if step <= spec.switch_step:
            spec = spec.first
        else:
            step -= spec.switch_step
            spec = spec.second
    return spec


def eval_batch(spec, size=1024):
    """Fixed held-out batch drawn from the leaf distribution ``spec``."""
    return open_stream(spec, EVAL_TAG).take(size)
