"""Command-line front end: flat key=value configs, run modes, CSV/report output.

Modes: ``gft`` (per-frequency solve), ``qrt`` (time-domain reference),
``compare`` (both on one grid, sharing the identical initial condition and
reduced generator, plus a difference report), ``steady`` (stationary state
and populations only) and ``bench`` (wall-clock comparison of the two
methods over a list of truncation levels).
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import PeakSet, find_peaks, integrate
from .green_spectrum import (SolveStrategy, Spectrum, build_pipeline,
                             cavity_spectrum, frequency_grid, qd_spectrum)
from .operators import SystemParams
from .qrt_reference import compare_spectra, qrt_spectrum

_MODES = ("gft", "qrt", "compare", "steady", "bench")
_EMITTERS = ("cavity", "qd")
_BENCH_GRID_STEP = 0.048   # comparison-harness resolution; finer default elsewhere
_DEFAULT_GRID_STEP = 0.01


class ConfigError(ValueError):
    """Malformed configuration text or override."""


def _parse_float(text: str) -> float:
    return float(text)

def _parse_int(text: str) -> int:
    return int(text, 10)

def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(part.strip(), 10) for part in text.split(","))

def _parse_emitter(text: str) -> str:
    if text not in _EMITTERS:
        raise ValueError(f"expected one of {_EMITTERS}")
    return text

def _parse_mode(text: str) -> str:
    if text not in _MODES:
        raise ValueError(f"expected one of {_MODES}")
    return text

def _parse_strategy(text: str) -> SolveStrategy:
    for strategy in SolveStrategy:
        if text == strategy.value:
            return strategy
    raise ValueError(f"expected one of {[s.value for s in SolveStrategy]}")


_PARSERS = {
    "omega_x": _parse_float,
    "delta": _parse_float,
    "g": _parse_float,
    "kappa": _parse_float,
    "gamma": _parse_float,
    "pump": _parse_float,
    "n_exc": _parse_int_list,
    "grid_center": _parse_float,
    "grid_span": _parse_float,
    "grid_step": _parse_float,
    "emitter": _parse_emitter,
    "mode": _parse_mode,
    "strategy": _parse_strategy,
    "dt": _parse_float,
    "t_max": _parse_float,
    "out": str,
}


@dataclass
class RunConfig:
    """Fully-resolved run description (defaults applied, overrides folded in)."""

    omega_x: float = 1000.0
    delta: float = 0.0
    g: float = 1.0
    kappa: float = 2.0
    gamma: float = 0.005
    pump: float = 0.005
    n_exc: tuple[int, ...] = (10,)
    grid_center: float | None = None     # None: centered on the cavity mode
    grid_span: float = 30.0
    grid_step: float | None = None       # None: 0.01, or 0.048 in bench mode
    emitter: str = "cavity"
    mode: str = "gft"
    strategy: SolveStrategy = SolveStrategy.PER_FREQUENCY_FACTORIZATION
    dt: float = 0.01
    t_max: float = 4096.0
    out: str = "qdc"

    def params(self) -> SystemParams:
        return SystemParams(omega_x=self.omega_x, delta=self.delta, g=self.g,
                            kappa=self.kappa, gamma=self.gamma, pump=self.pump)

    def single_n_exc(self) -> int:
        if len(self.n_exc) != 1:
            raise ConfigError(
                f"mode={self.mode} takes a single n_exc, got {list(self.n_exc)}")
        return self.n_exc[0]

    def grid(self) -> np.ndarray:
        center = self.params().omega_a if self.grid_center is None else self.grid_center
        step = self.grid_step
        if step is None:
            step = _BENCH_GRID_STEP if self.mode == "bench" else _DEFAULT_GRID_STEP
        if self.grid_span <= 0 or step <= 0:
            raise ConfigError("grid_span and grid_step must be positive")
        return frequency_grid(center, self.grid_span, step)


def _assign(config: RunConfig, key: str, raw: str, where: str) -> None:
    parser = _PARSERS.get(key)
    if parser is None:
        raise ConfigError(f"{where}: unknown key {key!r}")
    try:
        value = parser(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: invalid value for {key}: {raw!r} ({exc})") from None
    setattr(config, key, value)


def parse_config(text: str) -> RunConfig:
    """Parse flat ``key = value`` text; ``#`` starts a comment, blank lines skipped."""
    config = RunConfig()
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.rstrip()!r}")
        key, _, raw = body.partition("=")
        _assign(config, key.strip(), raw.strip(), f"line {lineno}")
    _validate(config)
    return config


def apply_overrides(config: RunConfig, overrides: list[str]) -> RunConfig:
    """Apply repeatable ``--set key=value`` pairs after file parsing."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set {item!r}: expected key=value")
        key, _, raw = item.partition("=")
        _assign(config, key.strip(), raw.strip(), f"--set {item!r}")
    _validate(config)
    return config


def _validate(config: RunConfig) -> None:
    if not config.n_exc or any(n < 0 for n in config.n_exc):
        raise ConfigError(f"n_exc must be non-negative, got {list(config.n_exc)}")
    if len(config.n_exc) > 1 and config.mode != "bench":
        raise ConfigError(f"mode={config.mode} takes a single n_exc, got {list(config.n_exc)}")
    if config.mode != "steady" and any(n < 1 for n in config.n_exc):
        raise ConfigError("spectra need n_exc >= 1")
    if config.dt <= 0 or config.t_max <= 0:
        raise ConfigError("dt and t_max must be positive")
    config.params()  # raises on negative rates


@dataclass(frozen=True)
class BenchRecord:
    """One timed end-to-end spectrum computation."""

    n_exc: int
    method: str
    wall_seconds: float
    grid_points: int


def _time_once(fn) -> float:
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def bench(config: RunConfig, repeats: int = 3) -> list[BenchRecord]:
    """Time both methods end to end (basis through spectrum) per truncation level.

    Each measurement is repeated ``repeats`` times and the minimum is
    reported, damping scheduler noise.  Both methods use the identical grid.
    """
    params = config.params()
    grid = config.grid()
    records: list[BenchRecord] = []
    spectrum_fn = cavity_spectrum if config.emitter == "cavity" else qd_spectrum
    for n in config.n_exc:
        gft_time = min(_time_once(lambda: spectrum_fn(params, n, grid,
                                                      strategy=config.strategy))
                       for _ in range(repeats))
        qrt_time = min(_time_once(lambda: qrt_spectrum(params, n, grid,
                                                       emitter=config.emitter,
                                                       dt=config.dt, t_max=config.t_max))
                       for _ in range(repeats))
        records.append(BenchRecord(n, "gft", gft_time, len(grid)))
        records.append(BenchRecord(n, "qrt", qrt_time, len(grid)))
    return records


def _format_peaks(peaks: PeakSet) -> str:
    if not len(peaks):
        return "peaks: none\n"
    lines = ["peaks:", f"  {'position_mev':>14} {'height_per_mev':>15} {'fwhm_mev':>10}"]
    for p in peaks:
        lines.append(f"  {p.position:14.6f} {p.height:15.6g} {p.fwhm:10.4f}")
    return "\n".join(lines) + "\n"


def _peaks_csv(peaks: PeakSet, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("position_mev,height_per_mev,fwhm_mev\n")
        for p in peaks:
            fh.write(f"{p.position:.17g},{p.height:.17g},{p.fwhm:.17g}\n")


def _spectrum_report(config: RunConfig, spectrum: Spectrum, pipeline) -> str:
    peaks = find_peaks(spectrum)
    total = integrate(spectrum)
    lines = [
        f"mode: {config.mode}",
        f"emitter: {spectrum.emitter}",
        f"n_exc: {config.single_n_exc()}",
        (f"params: omega_x={config.omega_x:g} delta={config.delta:g} g={config.g:g} "
         f"kappa={config.kappa:g} gamma={config.gamma:g} pump={config.pump:g}"),
        (f"grid: [{spectrum.grid[0]:g}, {spectrum.grid[-1]:g}] meV, "
         f"step {spectrum.step:g}, {len(spectrum.grid)} points"),
        f"n_cavity: {pipeline.n_cavity:.12g}",
        f"n_exciton: {pipeline.n_exciton:.12g}",
        f"normalization: {spectrum.normalization:.12g}",
        f"sum_rule_integral: {total:.6f}",
        _format_peaks(peaks),
    ]
    return "\n".join(lines)


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(text)


def run(config: RunConfig) -> int:
    """Execute one configured run, writing all artifacts; returns the exit status."""
    params = config.params()
    prefix = config.out

    if config.mode == "bench":
        records = bench(config)
        with open(f"{prefix}.bench.csv", "w", encoding="ascii") as fh:
            fh.write("n_exc,method,wall_seconds,grid_points\n")
            for r in records:
                fh.write(f"{r.n_exc},{r.method},{r.wall_seconds:.6f},{r.grid_points}\n")
        lines = ["n_exc    GFT (s)    QRT (s)"]
        by_n = {r.n_exc: {} for r in records}
        for r in records:
            by_n[r.n_exc][r.method] = r.wall_seconds
        for n, t in by_n.items():
            lines.append(f"{n:5d} {t['gft']:10.3f} {t['qrt']:10.3f}")
        report = "\n".join(lines) + "\n"
        _write(f"{prefix}.report.txt", report)
        print(report, end="")
        return 0

    n_exc = config.single_n_exc()
    pipeline = build_pipeline(params, n_exc)

    if config.mode == "steady":
        pipeline.rho_ss.dump_csv(f"{prefix}.steady.csv")
        top = sum(pipeline.rho_ss.entries[i, i].real
                  for i, s in enumerate(pipeline.basis.states)
                  if s.excitation == pipeline.basis.n_exc)
        report = (f"mode: steady\nn_exc: {n_exc}\n"
                  f"n_cavity: {pipeline.n_cavity:.12g}\n"
                  f"n_exciton: {pipeline.n_exciton:.12g}\n"
                  f"trace: {pipeline.rho_ss.trace().real:.12g}\n"
                  f"top_manifold_population: {top:.6g}\n")
        _write(f"{prefix}.report.txt", report)
        print(report, end="")
        return 0

    grid = config.grid()
    spectrum_fn = cavity_spectrum if config.emitter == "cavity" else qd_spectrum

    if config.mode == "gft":
        spectrum = spectrum_fn(params, n_exc, grid, strategy=config.strategy,
                               pipeline=pipeline)
        spectrum.write_csv(f"{prefix}.spectrum.csv")
        _peaks_csv(find_peaks(spectrum), f"{prefix}.peaks.csv")
        report = _spectrum_report(config, spectrum, pipeline)
        _write(f"{prefix}.report.txt", report)
        print(report, end="")
        return 0

    if config.mode == "qrt":
        spectrum = qrt_spectrum(params, n_exc, grid, emitter=config.emitter,
                                dt=config.dt, t_max=config.t_max, pipeline=pipeline)
        spectrum.write_csv(f"{prefix}.spectrum.csv")
        _peaks_csv(find_peaks(spectrum), f"{prefix}.peaks.csv")
        report = _spectrum_report(config, spectrum, pipeline)
        _write(f"{prefix}.report.txt", report)
        print(report, end="")
        return 0

    if config.mode == "compare":
        gft = spectrum_fn(params, n_exc, grid, strategy=config.strategy,
                          pipeline=pipeline)
        qrt = qrt_spectrum(params, n_exc, grid, emitter=config.emitter,
                           dt=config.dt, t_max=config.t_max, pipeline=pipeline)
        error = compare_spectra(gft, qrt)
        gft.write_csv(f"{prefix}.gft.spectrum.csv")
        qrt.write_csv(f"{prefix}.qrt.spectrum.csv")
        with open(f"{prefix}.diff.csv", "w", encoding="ascii") as fh:
            fh.write("omega_mev,abs_diff_per_mev\n")
            for w, d in zip(grid, np.abs(gft.values - qrt.values)):
                fh.write(f"{w:.17g},{d:.17g}\n")
        report = (_spectrum_report(config, gft, pipeline)
                  + f"max_abs_diff: {error.max_abs:.6e}\n"
                  + f"rms_diff: {error.l2:.6e}\n"
                  + f"grid_points: {error.grid_points}\n")
        _write(f"{prefix}.report.txt", report)
        print(report, end="")
        return 0

    raise ConfigError(f"unknown mode {config.mode!r}")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="qdc-spectra",
        description="Emission spectra of a pumped quantum-dot-cavity system: "
                    "per-frequency Green's-function solves and a time-domain "
                    "quantum-regression reference.")
    parser.add_argument("config", help="flat key = value configuration file")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config key (repeatable)")
    args = parser.parse_args(argv)
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = parse_config(fh.read())
        config = apply_overrides(config, args.overrides)
        return run(config)
    except (ConfigError, ValueError, RuntimeError, OSError) as exc:
        print(f"qdc-spectra: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
