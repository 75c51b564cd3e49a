"""Run configuration, parameter sweeps with bank reuse, and plot-ready output.

Every ``cmd_*`` function takes a :class:`RunConfig` and writes its files
atomically.  Data files (CSV, JSON summary) are deterministic for a fixed
seed; wall-clock measurements go to separate ``*.timing.*`` files.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import json
import os
import tempfile
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .bank import GaussianBank, load_bank, save_bank, simulate_bank
from .errors import ConfigError
from .gaussian_core import GridSpec, ModelSpec
from .iteration import SeriesResult, solve_series
from .model_zoo import InitialDatum, Nonlinearity
from .reference import ReferenceRun, mc_reference


def _vec_or_scalar(text: str):
    parts = [p for p in str(text).replace(";", ",").split(",") if p.strip()]
    if len(parts) == 1:
        return float(parts[0])
    return tuple(float(p) for p in parts)


def _float_list(text: str):
    return tuple(float(p) for p in str(text).replace(";", ",").split(",") if p.strip())


def _optional_float(text: str):
    return None if str(text).strip().lower() in ("", "none") else float(text)


def _bool(text: str) -> bool:
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass
class RunConfig:
    """All knobs of a run.  Defaults are the reference parameters of the method."""

    d: int = 10
    spectrum: Optional[tuple] = None
    sigma: float = 1.0
    T: float = 1.0
    nonlinearity: str = "sine"
    b: object = 0.0
    ybar: object = 2.0
    p: float = 2.0
    poly_norm: str = "euclidean"
    declared_sup: Optional[float] = None
    datum: str = "threshold"
    H: float = 1.0
    h: object = 1.0
    x0: object = 1.0
    fine_dt: float = 1e-4
    coarse_dt: float = 1e-2
    mode: str = "euler"
    n_samples: int = 100_000
    tol: float = 1e-3
    max_iters: int = 100
    seed: int = 0
    metric: str = "sup_t"
    bank: str = "bank.kgb"
    out: str = "result"
    sigma_list: Optional[tuple] = None
    x_shift: float = 1.0
    with_reference: bool = True
    degrade_tol: float = 0.05

    _PARSERS = {
        "d": int, "spectrum": _float_list, "sigma": float, "T": float, "nonlinearity": str,
        "b": _vec_or_scalar, "ybar": _vec_or_scalar, "p": float, "poly_norm": str,
        "declared_sup": _optional_float, "datum": str, "H": float, "h": _vec_or_scalar,
        "x0": _vec_or_scalar, "fine_dt": float, "coarse_dt": float, "mode": str,
        "n_samples": int, "tol": float, "max_iters": int, "seed": int, "metric": str,
        "bank": str, "out": str, "sigma_list": _float_list, "x_shift": float,
        "with_reference": _bool, "degrade_tol": float,
    }

    def updated(self, **values) -> "RunConfig":
        """Return a copy with string or typed values applied; unknown keys raise."""
        changes = {}
        for key, raw in values.items():
            if key not in self._PARSERS:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                changes[key] = self._PARSERS[key](raw) if isinstance(raw, str) else raw
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from None
        return dataclasses.replace(self, **changes)

    def _vector(self, value, name: str) -> np.ndarray:
        if np.ndim(value) == 0:
            return np.full(self.d, float(value))
        arr = np.asarray(value, dtype=np.float64)
        if arr.shape != (self.d,):
            raise ConfigError(f"{name} has length {arr.size}, expected d={self.d}")
        return arr

    def build_nonlinearity(self) -> Nonlinearity:
        kind = self.nonlinearity
        if kind == "constant":
            return Nonlinearity.constant(self._vector(self.b, "b"))
        if kind == "poly_bounded":
            return Nonlinearity.poly_bounded(self._vector(self.ybar, "ybar"), self.p,
                                             norm=self.poly_norm)
        if kind == "sine_skew":
            return Nonlinearity.sine_skew(self.declared_sup)
        return Nonlinearity(kind, declared_sup=self.declared_sup)

    def build_datum(self) -> InitialDatum:
        if self.datum == "trig":
            return InitialDatum.trig(self._vector(self.h, "h"))
        return InitialDatum(self.datum, H=self.H)

    def model(self) -> ModelSpec:
        return ModelSpec(d=self.d, sigma=self.sigma, horizon_T=self.T,
                         nonlinearity=self.build_nonlinearity(),
                         initial_datum=self.build_datum(),
                         x0=self._vector(self.x0, "x0"), spectrum=self.spectrum)

    def grid(self) -> GridSpec:
        return GridSpec.from_horizon(self.T, self.fine_dt, self.coarse_dt)

    def echo(self) -> dict:
        """Configuration without file locations, for embedding in outputs."""
        out = {}
        for f in dataclasses.fields(self):
            if f.name in ("bank", "out"):
                continue
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        return out


def parse_config_text(text: str, base: RunConfig | None = None) -> RunConfig:
    """Parse flat ``key = value`` lines (``#`` comments allowed)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    return (base or RunConfig()).updated(**dict(parser["run"]))


def load_config(path, base: RunConfig | None = None) -> RunConfig:
    with open(path) as fh:
        return parse_config_text(fh.read(), base)


def moving_average(series, window: int = 5) -> np.ndarray:
    """Centered moving average; windows are truncated at the edges."""
    if window < 1 or window % 2 == 0:
        raise ConfigError(f"window must be a positive odd integer, got {window}")
    x = np.asarray(series, dtype=np.float64)
    half = window // 2
    csum = np.concatenate([[0.0], np.cumsum(x)])
    idx = np.arange(x.size)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, x.size)
    if window == 1:
        return x.copy()
    return (csum[hi] - csum[lo]) / (hi - lo)


# -- file output ------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def _atomic_write(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, columns: dict) -> None:
    names = list(columns)
    n = len(next(iter(columns.values())))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(names)
    for i in range(n):
        writer.writerow([_fmt(columns[c][i]) for c in names])
    _atomic_write(path, buf.getvalue())


def read_csv(path) -> dict:
    """Read a CSV written by :func:`write_csv` back into float arrays."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    names, body = rows[0], rows[1:]
    return {name: np.array([float(r[i]) for r in body]) for i, name in enumerate(names)}


def write_json(path, payload: dict) -> None:
    _atomic_write(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return value


# -- timing ------------------------------------------------------------------

@dataclass
class TimingLedger:
    """Wall-clock seconds per phase; per-point lists become cumulative curves."""

    bank: float = 0.0
    iterations: list = field(default_factory=list)
    reference: list = field(default_factory=list)

    def cumulative_iterations(self) -> np.ndarray:
        return np.cumsum(self.iterations)

    def cumulative_with_bank(self) -> np.ndarray:
        return self.bank + np.cumsum(self.iterations)

    def cumulative_reference(self) -> np.ndarray:
        return np.cumsum(self.reference)


# -- commands ------------------------------------------------------------------

def obtain_bank(config: RunConfig, ledger: TimingLedger | None = None) -> GaussianBank:
    """Load the configured bank, generating and saving it first if absent."""
    if os.path.exists(config.bank):
        bank = load_bank(config.bank)
    else:
        bank = cmd_gen_bank(config, ledger)
    bank.check_compatible(config.model(), config.grid())
    return bank


def cmd_gen_bank(config: RunConfig, ledger: TimingLedger | None = None) -> GaussianBank:
    tick = time.perf_counter()
    bank = simulate_bank(config.model(), config.grid(), config.n_samples, config.seed,
                         config.mode)
    save_bank(bank, config.bank)
    if ledger is not None:
        ledger.bank = time.perf_counter() - tick
    return bank


def series_columns(result: SeriesResult) -> dict:
    n = result.times.size
    return {"t": result.times, "u_iter": result.u, "stderr_iter": result.u_stderr,
            "v_last": result.terms[-1].mean, "n_final": [result.n_final] * n}


def series_summary(result: SeriesResult, config: RunConfig, bank: GaussianBank) -> dict:
    return {
        "n_final": result.n_final,
        "converged": result.converged,
        "metric": result.metric,
        "tol": result.tol,
        "err_history": result.err_history,
        "v_T": [float(v.mean[-1]) for v in result.terms],
        "v_T_stderr": [float(v.stderr[-1]) for v in result.terms],
        "u_T": result.u_T,
        "u_T_stderr": result.u_T_stderr,
        "bank": {"checksum": bank.checksum(), "n_samples": bank.n_samples, "seed": bank.seed,
                 "mode": bank.mode},
        "config": config.echo(),
    }


def cmd_solve(config: RunConfig, bank: GaussianBank | None = None) -> SeriesResult:
    bank = bank if bank is not None else obtain_bank(config)
    model, grid = config.model(), config.grid()
    bank.check_compatible(model, grid)
    result = solve_series(bank, model, grid, tol=config.tol, max_iters=config.max_iters,
                          metric=config.metric)
    write_csv(config.out + ".csv", series_columns(result))
    write_json(config.out + ".json", series_summary(result, config, bank))
    write_json(config.out + ".timing.json",
               {k: _jsonable(v) for k, v in result.timings.items()})
    return result


def cmd_reference(config: RunConfig) -> ReferenceRun:
    run = mc_reference(config.model(), config.grid(), config.n_samples, config.seed)
    write_csv(config.out + ".csv", {"t": run.times, "u_ref": run.estimate.mean,
                                    "stderr_ref": run.estimate.stderr})
    write_json(config.out + ".json", {"u_T": run.u_T, "u_T_stderr": run.u_T_stderr,
                                      "n_samples": run.n_samples, "seed": run.seed,
                                      "fine_dt": run.fine_dt, "config": config.echo()})
    write_json(config.out + ".timing.json", {"reference": run.wall_clock})
    return run


@dataclass
class SigmaSweep:
    sigmas: np.ndarray
    results: list
    references: list
    degraded: np.ndarray
    ledger: TimingLedger


def degradation_flag(result: SeriesResult, ref: ReferenceRun | None, degrade_tol: float) -> bool:
    """True when the series fails to converge, misses the reference by more than
    ``degrade_tol``, or is too noisy to resolve values at that tolerance."""
    if not result.converged or result.u_T_stderr > degrade_tol:
        return True
    if ref is None:
        return False
    return abs(result.u_T - ref.u_T) > degrade_tol


def sweep_sigma(config: RunConfig, bank: GaussianBank | None = None,
                ledger: TimingLedger | None = None) -> SigmaSweep:
    """Solve for each sigma, largest first, against one shared bank."""
    sigmas = np.sort(np.asarray(config.sigma_list or (config.sigma,), dtype=float))[::-1]
    ledger = ledger or TimingLedger()
    if bank is None:
        bank = obtain_bank(config, ledger)
    results, refs, flags = [], [], []
    for s in sigmas:
        cfg = config.updated(sigma=float(s))
        model = cfg.model()
        tick = time.perf_counter()
        res = solve_series(bank, model, cfg.grid(), tol=cfg.tol, max_iters=cfg.max_iters,
                           metric=cfg.metric)
        ledger.iterations.append(time.perf_counter() - tick)
        ref = None
        if cfg.with_reference:
            tick = time.perf_counter()
            ref = mc_reference(model, cfg.grid(), cfg.n_samples, cfg.seed)
            ledger.reference.append(time.perf_counter() - tick)
        results.append(res)
        refs.append(ref)
        flags.append(degradation_flag(res, ref, cfg.degrade_tol))
    return SigmaSweep(sigmas, results, refs, np.array(flags), ledger)


def cmd_sweep_sigma(config: RunConfig) -> SigmaSweep:
    sweep = sweep_sigma(config)
    nan = float("nan")
    cols = {
        "sigma": sweep.sigmas,
        "u_iter": [r.u_T for r in sweep.results],
        "stderr_iter": [r.u_T_stderr for r in sweep.results],
        "n_final": [r.n_final for r in sweep.results],
        "converged": [r.converged for r in sweep.results],
        "u_ref": [ref.u_T if ref else nan for ref in sweep.references],
        "stderr_ref": [ref.u_T_stderr if ref else nan for ref in sweep.references],
        "degraded": sweep.degraded,
    }
    write_csv(config.out + ".csv", cols)
    ledger = sweep.ledger
    n = len(sweep.sigmas)
    timing = {
        "sigma": sweep.sigmas,
        "iteration_time": ledger.iterations,
        "cum_iteration": ledger.cumulative_iterations(),
        "cum_iteration_plus_bank": ledger.cumulative_with_bank(),
        "reference_time": ledger.reference or [nan] * n,
        "cum_reference": ledger.cumulative_reference() if ledger.reference else [nan] * n,
    }
    write_csv(config.out + ".timing.csv", timing)
    return sweep


@dataclass
class XSweep:
    k: np.ndarray
    sign: np.ndarray
    u_shifted: np.ndarray
    u_base: float
    diff: np.ndarray
    stderr_diff: np.ndarray


def sweep_x(config: RunConfig, bank: GaussianBank | None = None) -> XSweep:
    """``u(T, x +- shift e_k) - u(T, x)`` for every k, reusing one bank."""
    bank = bank if bank is not None else obtain_bank(config)
    model, grid = config.model(), config.grid()
    solve = lambda m: solve_series(bank, m, grid, tol=config.tol,  # noqa: E731
                                   max_iters=config.max_iters, metric=config.metric)
    base = solve(model)
    ks, signs, shifted, diffs, errs = [], [], [], [], []
    for k in range(model.d):
        for sign in (1, -1):
            x = model.x0.copy()
            x[k] += sign * config.x_shift
            res = solve(model.replace(x0=x))
            per_sample = res.u_T_samples - base.u_T_samples
            ks.append(k + 1)
            signs.append(sign)
            shifted.append(res.u_T)
            diffs.append(res.u_T - base.u_T)
            errs.append(per_sample.std(ddof=1) / np.sqrt(per_sample.size)
                        if per_sample.size > 1 else float("nan"))
    return XSweep(np.array(ks), np.array(signs), np.array(shifted), base.u_T,
                  np.array(diffs), np.array(errs))


def cmd_sweep_x(config: RunConfig) -> XSweep:
    sweep = sweep_x(config)
    write_csv(config.out + ".csv", {
        "k": sweep.k, "sign": sweep.sign, "u_shifted": sweep.u_shifted,
        "u_base": [sweep.u_base] * sweep.k.size, "diff": sweep.diff,
        "stderr_diff": sweep.stderr_diff,
    })
    return sweep
