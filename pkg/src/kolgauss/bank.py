"""Persisted ensemble of sigma-free Ornstein-Uhlenbeck paths.

Each sample solves ``dZ_k = -a_k Z_k dt + dW_k`` from ``Z(0) = 0``.  The
paths do not depend on ``sigma``, ``x``, ``B`` or ``u0``, so one bank serves a
whole parameter sweep.  Only the coarse quadrature nodes are stored.

File layout (little-endian)::

    b"KGBANK01"
    u32 version, u32 d, u64 n_samples, u64 n_coarse,
    f64 horizon_T, f64 fine_dt, f64 coarse_dt, u64 seed, u8 mode,
    f64[d] spectrum, u64 payload_checksum
    f64[n_samples, n_coarse + 1, d] payload
"""

from __future__ import annotations

import hashlib
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import BankFormatError, ConfigError, DomainError
from .gaussian_core import GridSpec, ModelSpec, unit_variance

MAGIC = b"KGBANK01"
VERSION = 1
MODES = ("euler", "exact")
_FIXED = struct.Struct("<8sIIQQdddQB")
_CHECKSUM = struct.Struct("<Q")
# stream family tag separating bank noise from reference-solver noise
BANK_STREAM = 0
# bytes of noise held in memory at once while simulating
_BLOCK_BYTES = 64 * 2 ** 20


@dataclass(frozen=True)
class GaussianBank:
    d: int
    n_samples: int
    horizon_T: float
    fine_dt: float
    coarse_dt: float
    spectrum: np.ndarray
    seed: int
    mode: str
    paths: np.ndarray  # (n_samples, n_coarse + 1, d)

    @property
    def n_coarse(self) -> int:
        return self.paths.shape[1] - 1

    @property
    def grid(self) -> GridSpec:
        return GridSpec(self.fine_dt, self.coarse_dt, self.n_coarse)

    def times(self) -> np.ndarray:
        return np.arange(self.n_coarse + 1, dtype=np.float64) * self.coarse_dt

    def checksum(self) -> int:
        return payload_checksum(self.paths)

    def check_compatible(self, model: ModelSpec, grid: GridSpec | None = None) -> None:
        """Raise :class:`ConfigError` naming the first field that disagrees.

        ``sigma``, ``x0``, ``B`` and ``u0`` are free to differ.
        """
        if model.d != self.d:
            raise ConfigError(f"bank/config mismatch in d: bank {self.d}, config {model.d}")
        if not np.array_equal(model.spectrum, self.spectrum):
            raise ConfigError("bank/config mismatch in spectrum")
        if not np.isclose(model.horizon_T, self.horizon_T, rtol=1e-12, atol=0):
            raise ConfigError(f"bank/config mismatch in horizon_T: bank {self.horizon_T}, "
                              f"config {model.horizon_T}")
        if grid is not None:
            for name in ("fine_dt", "coarse_dt", "n_coarse"):
                mine, theirs = getattr(self, name), getattr(grid, name)
                if not np.isclose(mine, theirs, rtol=1e-12, atol=0):
                    raise ConfigError(f"bank/config mismatch in {name}: bank {mine}, config {theirs}")


def payload_checksum(paths: np.ndarray) -> int:
    data = np.ascontiguousarray(paths, dtype="<f8")
    digest = hashlib.blake2b(memoryview(data).cast("B"), digest_size=8).digest()
    return _CHECKSUM.unpack(digest)[0]


def sample_rng(seed: int, family: int, index: int) -> np.random.Generator:
    """Independent stream for one sample (or block), keyed on its index."""
    return np.random.default_rng([int(seed), family, int(index)])


def simulate_bank(model: ModelSpec, grid: GridSpec, n_samples: int, seed: int,
                  mode: str = "euler") -> GaussianBank:
    """Simulate ``n_samples`` sigma-free OU paths and keep the coarse nodes.

    ``mode="euler"`` runs Euler-Maruyama at ``grid.fine_dt``.  ``mode="exact"``
    draws the exact Gaussian transition, which composes without error, so it
    is applied directly on the coarse step.  Sample ``s`` uses its own RNG
    stream derived from ``(seed, s)``; the result is independent of how the
    work is chunked.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown simulation mode {mode!r}; expected one of {MODES}")
    if int(n_samples) != n_samples or n_samples < 1:
        raise ConfigError(f"n_samples must be a positive integer, got {n_samples}")
    if seed < 0 or seed >= 2 ** 64:
        raise ConfigError("seed must be in [0, 2**64)")
    if not np.isclose(grid.horizon, model.horizon_T, rtol=1e-12, atol=0):
        raise ConfigError(f"grid covers [0, {grid.horizon}] but horizon_T={model.horizon_T}")
    a = model.spectrum
    if mode == "euler":
        bad = np.nonzero(a * grid.fine_dt >= 2.0)[0]
        if bad.size:
            k = int(bad[0])
            raise ConfigError(f"Euler step unstable for a_{k + 1}={a[k]:g}: "
                              f"a_k*fine_dt={a[k] * grid.fine_dt:g} >= 2; use mode='exact' "
                              f"or a smaller fine_dt")
        step, stride = grid.fine_dt, grid.steps_per_node
        decay = 1.0 - a * step
        scale = np.full(model.d, np.sqrt(step))
    else:
        step, stride = grid.coarse_dt, 1
        decay = np.exp(-a * step)
        scale = np.sqrt(unit_variance(step, a))
    n_steps = grid.n_coarse * stride
    d = model.d

    paths = np.zeros((n_samples, grid.n_coarse + 1, d))
    block = max(1, _BLOCK_BYTES // (8 * n_steps * d))
    for start in range(0, n_samples, block):
        stop = min(start + block, n_samples)
        noise = np.stack([sample_rng(seed, BANK_STREAM, s).standard_normal((d, n_steps))
                          for s in range(start, stop)])
        for k in range(d):
            z = lfilter([scale[k]], [1.0, -decay[k]], noise[:, k, :], axis=-1)
            paths[start:stop, 1:, k] = z[:, stride - 1::stride]
    paths.setflags(write=False)
    spectrum = np.array(a)
    spectrum.setflags(write=False)
    return GaussianBank(d=d, n_samples=int(n_samples), horizon_T=float(model.horizon_T),
                        fine_dt=float(grid.fine_dt), coarse_dt=float(grid.coarse_dt),
                        spectrum=spectrum, seed=int(seed), mode=mode, paths=paths)


def _header_bytes(bank: GaussianBank, checksum: int) -> bytes:
    fixed = _FIXED.pack(MAGIC, VERSION, bank.d, bank.n_samples, bank.n_coarse,
                        bank.horizon_T, bank.fine_dt, bank.coarse_dt, bank.seed,
                        MODES.index(bank.mode))
    spectrum = np.ascontiguousarray(bank.spectrum, dtype="<f8").tobytes()
    return fixed + spectrum + _CHECKSUM.pack(checksum)


def save_bank(bank: GaussianBank, path) -> None:
    """Write ``bank`` atomically (temporary file then rename)."""
    path = os.fspath(path)
    payload = np.ascontiguousarray(bank.paths, dtype="<f8")
    header = _header_bytes(bank, payload_checksum(payload))
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(os.path.abspath(path)), suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(header)
            fh.write(memoryview(payload).cast("B"))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_header(path) -> dict:
    """Parse and validate the header only; the payload is not touched."""
    with open(path, "rb") as fh:
        raw = fh.read(_FIXED.size)
        if len(raw) < _FIXED.size:
            raise BankFormatError("file too short for a bank header")
        (magic, version, d, n_samples, n_coarse, horizon_T, fine_dt, coarse_dt,
         seed, mode) = _FIXED.unpack(raw)
        if magic != MAGIC:
            raise BankFormatError(f"bad magic bytes {magic!r}")
        if version != VERSION:
            raise BankFormatError(f"unsupported bank version {version}")
        if d < 1 or n_samples < 1 or n_coarse < 1:
            raise BankFormatError("header has non-positive dimensions")
        if mode >= len(MODES):
            raise BankFormatError(f"unknown mode code {mode}")
        tail = fh.read(8 * d + _CHECKSUM.size)
        if len(tail) < 8 * d + _CHECKSUM.size:
            raise BankFormatError("truncated header")
    spectrum = np.frombuffer(tail[:8 * d], dtype="<f8").astype(np.float64)
    (checksum,) = _CHECKSUM.unpack(tail[8 * d:])
    offset = _FIXED.size + 8 * d + _CHECKSUM.size
    expected = offset + 8 * n_samples * (n_coarse + 1) * d
    actual = os.path.getsize(path)
    if actual != expected:
        raise BankFormatError(f"file size {actual} disagrees with header "
                              f"(d={d}, n_samples={n_samples}, n_coarse={n_coarse}: "
                              f"expected {expected} bytes)")
    return dict(d=d, n_samples=n_samples, n_coarse=n_coarse, horizon_T=horizon_T,
                fine_dt=fine_dt, coarse_dt=coarse_dt, seed=seed, mode=MODES[mode],
                spectrum=spectrum, checksum=checksum, offset=offset)


def load_bank(path, mmap: bool = False) -> GaussianBank:
    """Load a bank, verifying header consistency and the payload checksum.

    With ``mmap=True`` the payload stays on disk as a read-only memory map.
    """
    hdr = read_header(path)
    shape = (hdr["n_samples"], hdr["n_coarse"] + 1, hdr["d"])
    if mmap:
        paths = np.memmap(path, dtype="<f8", mode="r", offset=hdr["offset"], shape=shape)
    else:
        with open(path, "rb") as fh:
            fh.seek(hdr["offset"])
            paths = np.fromfile(fh, dtype="<f8").reshape(shape).astype(np.float64, copy=False)
        paths.setflags(write=False)
    if payload_checksum(paths) != hdr["checksum"]:
        raise BankFormatError("payload checksum mismatch")
    spectrum = hdr["spectrum"]
    spectrum.setflags(write=False)
    return GaussianBank(d=hdr["d"], n_samples=hdr["n_samples"], horizon_T=hdr["horizon_T"],
                        fine_dt=hdr["fine_dt"], coarse_dt=hdr["coarse_dt"], spectrum=spectrum,
                        seed=hdr["seed"], mode=hdr["mode"], paths=paths)


def heat_flow(bank: GaussianBank, x) -> np.ndarray:
    """Deterministic part ``exp(t_j A) x`` at every node, shape ``(n_coarse+1, d)``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (bank.d,):
        raise ConfigError(f"x has shape {x.shape}, expected ({bank.d},)")
    return np.exp(-np.outer(bank.times(), bank.spectrum)) * x


def lift_path(bank: GaussianBank, sample_index: int, x, sigma: float, node_j: int) -> np.ndarray:
    """``Z^x(t_j) = exp(t_j A) x + sigma Z(t_j)`` for one sample."""
    if not 0 <= sample_index < bank.n_samples:
        raise DomainError(f"sample_index {sample_index} outside [0, {bank.n_samples})")
    if not 0 <= node_j <= bank.n_coarse:
        raise DomainError(f"node_j {node_j} outside [0, {bank.n_coarse}]")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (bank.d,):
        raise ConfigError(f"x has shape {x.shape}, expected ({bank.d},)")
    t = node_j * bank.coarse_dt
    return np.exp(-t * bank.spectrum) * x + sigma * bank.paths[sample_index, node_j]


def lift_paths(bank: GaussianBank, x, sigma: float, samples=slice(None)) -> np.ndarray:
    """Vectorised :func:`lift_path` over a selection of samples and all nodes."""
    return heat_flow(bank, x) + sigma * np.asarray(bank.paths[samples])
