"""Scripted experiments on the flux-threaded ring, with CSV/JSON persistence.

Each experiment returns a small report object holding a :class:`SweepTable`
(one :class:`SweepRecord` per solver run) plus experiment-specific
diagnostics.  :func:`write_report` persists the table as CSV, a JSON sidecar
with the full configuration, and two-column plot-data files.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .analytic import (
    RingProblem,
    asymptotic_delta_energy,
    best_uniform_energy,
    canonical_alpha,
    critical_coupling,
    half_flux_record,
    half_flux_state,
    modulus_residual,
    wilczek_rotating_energy,
)
from .solver import (
    SolverConfig,
    StationaryState,
    centroid_angle,
    density_contrast,
    imaginary_time_ground_state,
    real_time_evolve,
)

__all__ = [
    "ORDERING_SLACK",
    "CSV_COLUMNS",
    "SweepRecord",
    "SweepTable",
    "ThresholdResult",
    "AsymptoticReport",
    "ScalingReport",
    "RampReport",
    "HarnessError",
    "solve_points",
    "ground_state_point",
    "analytic_consistency",
    "aligned_profile",
    "fwhm_and_antipode",
    "flux_sweep",
    "threshold_scan",
    "asymptotic_check",
    "lump_scaling_scan",
    "flux_ramp_experiment",
    "write_table",
    "write_plot_data",
    "read_table",
    "parse_range",
]

CSV_COLUMNS = (
    "lambda",
    "alpha",
    "eps_numeric",
    "eps_uniform_best",
    "eps_wilczek",
    "eps_analytic_half_flux",
    "delta_eps",
    "delta_eps_asymptotic",
    "residual",
    "converged",
    "n_points",
    "wall_time_s",
)

CONTRAST_THRESHOLD = 1e-3
# Wilczek branch may sit below the numeric ground state by at most this much
ORDERING_SLACK = 1e-9


class HarnessError(RuntimeError):
    pass


@dataclass
class SweepRecord:
    lam: float
    alpha: float
    eps_numeric: float
    eps_uniform_best: float
    eps_wilczek: float
    eps_analytic_half_flux: Optional[float]
    delta_eps: float
    delta_eps_asymptotic: float
    residual: float
    converged: bool
    n_points: int
    wall_time_s: float = 0.0

    def row(self, include_timing: bool) -> list[str]:
        values = dataclasses.astuple(self)
        out = []
        for name, v in zip(CSV_COLUMNS, values):
            if name == "wall_time_s" and not include_timing:
                out.append("")
            elif v is None:
                out.append("")
            elif isinstance(v, bool):
                out.append("true" if v else "false")
            elif isinstance(v, (int, np.integer)):
                out.append(str(int(v)))
            else:
                out.append(format(float(v), ".17g"))
        return out


@dataclass
class SweepTable:
    metadata: dict
    records: list = field(default_factory=list)

    def __post_init__(self):
        keys = [(r.lam, r.alpha, r.n_points) for r in self.records]
        if len(keys) != len(set(keys)):
            raise HarnessError("duplicate (lambda, alpha, n_points) records")

    def sorted(self) -> "SweepTable":
        return SweepTable(dict(self.metadata), sorted(self.records, key=lambda r: (r.lam, r.alpha, r.n_points)))

    def lookup(self, lam: float, alpha: float) -> SweepRecord:
        for r in self.records:
            if r.lam == lam and r.alpha == alpha:
                return r
        raise KeyError((lam, alpha))

    def converged(self) -> list:
        return [r for r in self.records if r.converged]

    def wilczek_margin(self) -> float:
        """min over converged records of ``eps_wilczek - eps_numeric``."""
        return min(r.eps_wilczek - r.eps_numeric for r in self.converged())

    def to_csv(self, include_timing: bool = False) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.records:
            writer.writerow(r.row(include_timing))
        return buf.getvalue()


def read_table(path) -> list[dict]:
    """Parse a CSV written by :func:`write_table` into typed row dicts."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise HarnessError(f"unexpected CSV header in {path}")
        for raw in reader:
            row = {}
            for k, v in raw.items():
                if v == "":
                    row[k] = None
                elif k == "converged":
                    row[k] = v == "true"
                elif k == "n_points":
                    row[k] = int(v)
                else:
                    row[k] = float(v)
            rows.append(row)
    return rows


def parse_range(text: str) -> list[float]:
    """``start:stop:count`` (inclusive, like linspace) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:count, got {text!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValueError("range count must be >= 1")
        return [float(x) for x in np.linspace(start, stop, count)]
    return [float(x) for x in text.split(",") if x.strip()]


def _config_dict(config: SolverConfig, **params) -> dict:
    d = {"solver": dataclasses.asdict(config)}
    d.update(params)
    return d


def _metadata(config: SolverConfig, experiment: str, include_timing: bool = False, **params) -> dict:
    cfg = _config_dict(config, experiment=experiment, **params)
    digest = hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()
    return {
        "config": cfg,
        "config_hash": digest,
        "seed": config.seed,
        "version": __version__,
        "timestamp_iso8601": _timestamp(include_timing),
    }


def _timestamp(include_timing: bool) -> Optional[str]:
    # artifacts stay byte-reproducible unless wall-clock data is requested
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        return datetime.fromtimestamp(int(epoch), timezone.utc).isoformat()
    if include_timing:
        return datetime.now(timezone.utc).isoformat()
    return None


def _solve_one(args) -> tuple[float, float, StationaryState, float]:
    lam, alpha, config = args
    t0 = time.perf_counter()
    state = imaginary_time_ground_state(RingProblem(lam, alpha), config)
    return lam, alpha, state, time.perf_counter() - t0


def solve_points(points: Sequence[tuple[float, float]], config: SolverConfig, jobs: Optional[int] = None):
    """Ground states for each (lam, alpha); results in the order given.

    Points run in a process pool of ``jobs`` workers (default: all cores);
    with one worker everything runs in-process.
    """
    jobs = jobs or os.cpu_count() or 1
    tasks = [(float(lam), float(alpha), config) for lam, alpha in points]
    if jobs <= 1 or len(tasks) <= 1:
        return [_solve_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_solve_one, tasks))


def _is_half_flux(alpha: float) -> bool:
    return math.isclose(canonical_alpha(alpha), 0.5, abs_tol=1e-12)


def _record(lam, alpha, state, wall, eps0, config, eps_analytic=None) -> SweepRecord:
    if eps_analytic is None and _is_half_flux(alpha):
        eps_analytic = half_flux_record(lam).eps
    return SweepRecord(
        lam=lam,
        alpha=alpha,
        eps_numeric=state.eps,
        eps_uniform_best=best_uniform_energy(lam, alpha),
        eps_wilczek=wilczek_rotating_energy(eps0, alpha),
        eps_analytic_half_flux=eps_analytic,
        delta_eps=state.eps - eps0,
        delta_eps_asymptotic=asymptotic_delta_energy(lam, alpha),
        residual=state.residual,
        converged=state.converged,
        n_points=config.n_points,
        wall_time_s=wall,
    )


def ground_state_point(lam: float, alpha: float, config: SolverConfig = SolverConfig()):
    """Ground state at one (lam, alpha) plus its one-record table.

    The zero-flux state is solved too, for ``delta_eps`` and the Wilczek value.
    """
    points = [(lam, alpha)] if alpha == 0.0 else [(lam, alpha), (lam, 0.0)]
    results = solve_points(points, config, jobs=1)
    _, _, state, wall = results[0]
    eps0 = results[-1][2].eps
    meta = _metadata(config, "ground-state", lam=lam, alpha=alpha)
    return state, SweepTable(meta, [_record(lam, alpha, state, wall, eps0, config)])


def aligned_profile(state_field) -> tuple[np.ndarray, np.ndarray]:
    """Density on the grid, rolled so its maximum sits at phi = pi."""
    dens = state_field.density
    n = dens.size
    shift = n // 2 - int(np.argmax(dens))
    return state_field.grid.nodes, np.roll(dens, shift)


def analytic_consistency(lam: float, n_points: int = 256) -> dict:
    """Self-consistency numbers for the closed-form half-flux state.

    Keys: ``modulus_residual`` (relative), ``norm_error``, ``identity_error``
    (``eps - mu - lam/2 * integral |psi|^4``), plus the record itself.
    """
    rec, twisted = half_flux_state(lam, n_points)
    quartic = twisted.grid.integrate(twisted.density**2)
    return {
        "record": rec,
        "modulus_residual": modulus_residual(rec.modulus, lam),
        "norm_error": twisted.norm() - 1.0,
        "identity_error": rec.eps - rec.mu - 0.5 * lam * quartic,
    }


def flux_sweep(
    lam: float,
    alphas: Sequence[float],
    config: SolverConfig = SolverConfig(),
    jobs: Optional[int] = None,
) -> SweepTable:
    """Numeric ground-state energy across fluxes at fixed coupling.

    The zero-flux ground state is always solved as well; it anchors the
    Wilczek branch ``eps0 + alpha^2 / 2`` and ``delta_eps``.
    """
    alphas = [float(a) for a in alphas]
    if any(a < -1.0 or a > 1.5 for a in alphas):
        raise ValueError("fluxes must lie in [-1, 3/2]")
    points = [(lam, a) for a in sorted(set(alphas) | {0.0})]
    results = solve_points(points, config, jobs)
    eps0 = next(s.eps for _, a, s, _ in results if a == 0.0)
    records = [_record(l, a, s, w, eps0, config) for l, a, s, w in results if a in alphas]
    meta = _metadata(config, "flux-sweep", lam=lam, alphas=alphas)
    return SweepTable(meta, records).sorted()


@dataclass
class ThresholdResult:
    lambda_c_estimate: float
    bracket: tuple
    table: SweepTable
    contrasts: dict  # lambda -> density contrast, every evaluated coupling

    @property
    def error(self) -> float:
        return self.lambda_c_estimate - critical_coupling()


def threshold_scan(
    lambdas: Sequence[float],
    config: SolverConfig = SolverConfig(dtau=1e-2),
    lambda_tol: float = 0.05,
    alphas: Sequence[float] = (0.0,),
) -> ThresholdResult:
    """Locate the lump-formation coupling at zero flux.

    The order parameter is the density contrast of the ground state.  The
    first adjacent pair of ``lambdas`` whose contrasts straddle 1e-3 is
    bisected until narrower than ``lambda_tol``; the estimate is the midpoint.
    """
    if tuple(alphas) != (0.0,):
        raise ValueError("threshold_scan is defined at zero flux only")
    contrasts = {}
    states = {}

    def evaluate(lam):
        _, _, state, wall = _solve_one((lam, 0.0, config))
        states[lam] = (state, wall)
        contrasts[lam] = density_contrast(state.field)
        return contrasts[lam]

    grid = sorted(float(x) for x in lambdas)
    for lam in grid:
        evaluate(lam)
    bracket = None
    for lo, hi in zip(grid, grid[1:]):
        if contrasts[lo] < CONTRAST_THRESHOLD <= contrasts[hi]:
            bracket = (lo, hi)
            break
    if bracket is None:
        raise HarnessError(f"no contrast crossing of {CONTRAST_THRESHOLD} among lambdas {grid}")
    lo, hi = bracket
    while hi - lo > lambda_tol:
        mid = 0.5 * (lo + hi)
        if evaluate(mid) < CONTRAST_THRESHOLD:
            lo = mid
        else:
            hi = mid

    records = []
    for lam in sorted(states):
        state, wall = states[lam]
        records.append(_record(lam, 0.0, state, wall, state.eps, config))
    meta = _metadata(config, "threshold", lambdas=grid, lambda_tol=lambda_tol)
    meta["lambda_c_estimate"] = 0.5 * (lo + hi)
    meta["bracket"] = [lo, hi]
    return ThresholdResult(0.5 * (lo + hi), (lo, hi), SweepTable(meta, records), dict(sorted(contrasts.items())))


@dataclass
class AsymptoticReport:
    """Half-flux minus zero-flux energy against the strong-coupling law."""

    table: SweepTable
    lambdas: list
    delta_measured: list  # analytic eps(1/2) - numeric eps(0)
    delta_numeric: list  # numeric eps(1/2) - numeric eps(0)
    delta_formula: list
    noise_floor: list
    usable: list
    slopes: list  # (lam_a, lam_b, measured d ln|delta| / d lam, formula slope)

    @property
    def ratios(self) -> list:
        return [m / f for m, f in zip(self.delta_measured, self.delta_formula)]


def asymptotic_check(
    lambdas: Sequence[float],
    config: SolverConfig = SolverConfig(residual_tol=1e-11),
    jobs: Optional[int] = None,
) -> AsymptoticReport:
    """Measure ``eps(1/2) - eps(0)`` at strong coupling.

    ``eps(1/2)`` is the closed-form half-flux energy; ``eps(0)`` comes from
    the solver.  The solver's own ``eps(1/2)``, on the same grid and
    tolerances, is kept for a three-way check and sets the noise floor.
    """
    if config.residual_tol > 1e-11:
        raise ValueError("asymptotic_check needs residual_tol <= 1e-11")
    lambdas = sorted(float(x) for x in lambdas)
    results = solve_points([(l, a) for l in lambdas for a in (0.0, 0.5)], config, jobs)
    by_point = {(l, a): (s, w) for l, a, s, w in results}
    records, measured, numeric, formula, floor, usable = [], [], [], [], [], []
    for lam in lambdas:
        s0, w0 = by_point[(lam, 0.0)]
        s1, w1 = by_point[(lam, 0.5)]
        eps_half = half_flux_record(lam).eps
        records.append(_record(lam, 0.0, s0, w0, s0.eps, config))
        rec = _record(lam, 0.5, s1, w1, s0.eps, config, eps_analytic=eps_half)
        rec.delta_eps = eps_half - s0.eps
        records.append(rec)
        measured.append(eps_half - s0.eps)
        numeric.append(s1.eps - s0.eps)
        formula.append(asymptotic_delta_energy(lam, 0.5))
        noise = max(abs(s1.eps - eps_half), 1e-14 * abs(eps_half))
        floor.append(noise)
        usable.append(s0.converged and s1.converged and abs(measured[-1]) >= 10 * noise)
    slopes = []
    for i in range(len(lambdas) - 1):
        a, b = lambdas[i], lambdas[i + 1]
        if usable[i] and usable[i + 1]:
            s = (math.log(abs(measured[i + 1])) - math.log(abs(measured[i]))) / (b - a)
            f = (math.log(abs(formula[i + 1])) - math.log(abs(formula[i]))) / (b - a)
            slopes.append((a, b, s, f))
    meta = _metadata(config, "asymptotic", lambdas=lambdas)
    return AsymptoticReport(SweepTable(meta, records), lambdas, measured, numeric, formula, floor, usable, slopes)


@dataclass
class ScalingReport:
    table: SweepTable
    lambdas: list
    n_points: list
    fwhm: list
    antipode: list
    resolved: list
    fwhm_ratios: dict  # lam -> fwhm(2 lam) / fwhm(lam)
    slope: float  # fit of ln|psi_antipode| - ln(lam)/2 against lam
    intercept: float
    raw_slope: float  # fit of ln|psi_antipode| against lam alone


def _upsample(amplitudes: np.ndarray, factor: int) -> np.ndarray:
    """Trigonometric interpolation onto a grid ``factor`` times finer."""
    n = amplitudes.size
    spec = np.fft.fft(amplitudes)
    m = n * factor
    fine = np.zeros(m, dtype=complex)
    half = n // 2
    fine[:half] = spec[:half]
    fine[-half:] = spec[-half:]
    return np.fft.ifft(fine) * factor


def _evaluate_at(amplitudes: np.ndarray, phi: float) -> complex:
    n = amplitudes.size
    spec = np.fft.fft(amplitudes) / n
    modes = np.fft.fftfreq(n, d=1.0 / n)
    # the Nyquist mode is split symmetrically so real fields stay real
    weights = np.where(np.abs(modes) == n // 2, 0.5, 1.0)
    val = np.sum(weights * spec * np.exp(1j * modes * phi))
    nyq = spec[modes == -(n // 2)][0]
    return complex(val + 0.5 * nyq * np.exp(1j * (n // 2) * phi))


def fwhm_and_antipode(state_field) -> tuple[float, float, float]:
    """(FWHM of the density, |psi| at the antipode of the peak, peak angle)."""
    amps = state_field.amplitudes
    n = amps.size
    factor = 32
    fine = _upsample(amps, factor)
    dens = np.abs(fine) ** 2
    spacing = 2 * np.pi / (n * factor)
    peak = int(np.argmax(dens))
    half = 0.5 * dens[peak]
    dens = np.roll(dens, -peak)  # peak at index 0

    def crossing(direction):
        idx = np.arange(dens.size) if direction > 0 else (-np.arange(dens.size)) % dens.size
        vals = dens[idx]
        j = int(np.argmax(vals < half))
        # linear interpolation between samples j-1 and j
        frac = (vals[j - 1] - half) / (vals[j - 1] - vals[j])
        return (j - 1 + frac) * spacing

    width = crossing(1) + crossing(-1)
    phi_peak = centroid_angle(state_field)
    if math.isnan(phi_peak):
        phi_peak = peak * spacing
    antipode = abs(_evaluate_at(amps, phi_peak + math.pi))
    return width, antipode, phi_peak


def _grid_for(lam: float, base: int) -> int:
    # FWHM of the sech^2 lump is about 3.53 / lam; keep 8 samples across it,
    # and use N = 1024 above lam = 8
    n = base
    while 3.53 / lam < 8 * 2 * math.pi / n:
        n *= 2
    if lam > 8:
        n = max(n, 1024)
    return n


def lump_scaling_scan(
    lambdas: Sequence[float],
    config: SolverConfig = SolverConfig(),
    alpha: float = 0.0,
) -> ScalingReport:
    """Width and antipode amplitude of the zero-flux lump against coupling."""
    if alpha != 0.0:
        raise ValueError("lump_scaling_scan is defined at zero flux only")
    lambdas = sorted(float(x) for x in lambdas)
    records, widths, antis, ns, resolved = [], [], [], [], []
    for lam in lambdas:
        n = _grid_for(lam, config.n_points)
        cfg = config.with_(n_points=n)
        _, _, state, wall = _solve_one((lam, 0.0, cfg))
        width, anti, _ = fwhm_and_antipode(state.field)
        records.append(_record(lam, 0.0, state, wall, state.eps, cfg))
        widths.append(width)
        antis.append(anti)
        ns.append(n)
        resolved.append(state.converged and width >= 8 * 2 * math.pi / n)
    ratios = {}
    for lam, w in zip(lambdas, widths):
        for lam2, w2 in zip(lambdas, widths):
            if math.isclose(lam2, 2 * lam):
                ratios[lam] = w2 / w
    use = [i for i, ok in enumerate(resolved) if ok]
    lam_arr = np.array([lambdas[i] for i in use])
    ln_a = np.log(np.array([antis[i] for i in use]))
    if lam_arr.size >= 2:
        slope, intercept = np.polyfit(lam_arr, ln_a - 0.5 * np.log(lam_arr), 1)
        raw_slope = np.polyfit(lam_arr, ln_a, 1)[0]
    else:
        slope = intercept = raw_slope = math.nan
    table = SweepTable(_metadata(config, "scaling", lambdas=lambdas, n_points=ns), records)
    return ScalingReport(table, lambdas, ns, widths, antis, resolved, ratios,
                         float(slope), float(intercept), float(raw_slope))


@dataclass
class RampReport:
    lam: float
    alpha_final: float
    t_ramp: float
    times: np.ndarray
    alpha: np.ndarray
    centroid: np.ndarray  # unwrapped
    angular_momentum: np.ndarray  # canonical <-i d/dphi>
    kinetic_momentum: np.ndarray  # <-i d/dphi - alpha>, the drift velocity
    contrast: np.ndarray
    omega_fit: float
    fit_window: tuple
    metadata: dict

    @property
    def omega_expected(self) -> float:
        # canonical momentum is conserved, so the lump drifts at 0 - alpha
        return -self.alpha_final


def flux_ramp_experiment(
    lam: float,
    alpha_final: float,
    t_ramp: float = 1.0,
    config: SolverConfig = SolverConfig(),
    t_final: float = 10.0,
    fit_window: tuple = (5.0, 10.0),
    sample_every: int = 50,
) -> RampReport:
    """Ramp the flux linearly from 0 to ``alpha_final`` over ``t_ramp``, then hold.

    Starts from the zero-flux lump.  The post-ramp angular velocity is the
    least-squares slope of the unwrapped centroid angle over ``fit_window``.
    """
    if not lam > critical_coupling():
        raise ValueError("flux ramp needs a lump: lam must exceed pi/2")
    if abs(alpha_final) > 0.5:
        raise ValueError("|alpha_final| must not exceed 1/2")
    ground = imaginary_time_ground_state(RingProblem(lam, 0.0), config)
    c0 = density_contrast(ground.field)

    def schedule(t):
        return alpha_final * min(t / t_ramp, 1.0) if t_ramp > 0 else alpha_final

    traj = real_time_evolve(ground.field, RingProblem(lam, 0.0), t_final, config,
                            flux_schedule=schedule, sample_every=sample_every)
    if np.min(traj.contrast) < 0.5 * c0:
        raise HarnessError(f"lump dissolved during the ramp (contrast {np.min(traj.contrast):.3g} from {c0:.3g})")
    centroid = np.unwrap(traj.centroid)
    window = (traj.times >= fit_window[0]) & (traj.times <= fit_window[1])
    omega = float(np.polyfit(traj.times[window], centroid[window], 1)[0])
    meta = _metadata(config, "ramp", lam=lam, alpha_final=alpha_final, t_ramp=t_ramp,
                     t_final=t_final, fit_window=list(fit_window))
    return RampReport(lam, alpha_final, t_ramp, traj.times, traj.alpha, centroid,
                      traj.angular_momentum, traj.kinetic_momentum, traj.contrast,
                      omega, tuple(fit_window), meta)


def write_table(table: SweepTable, out_dir, stem: str, include_timing: bool = False) -> tuple[Path, Path]:
    """Write ``<stem>.csv`` and the ``<stem>.json`` sidecar; returns both paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{stem}.csv"
    json_path = out / f"{stem}.json"
    with open(csv_path, "w", newline="") as fh:
        fh.write(table.to_csv(include_timing))
    meta = dict(table.metadata)
    if include_timing and meta.get("timestamp_iso8601") is None:
        meta["timestamp_iso8601"] = _timestamp(True)
    with open(json_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, json_path


def write_plot_data(path, x, y, header: Optional[str] = None) -> Path:
    """Two whitespace-separated columns, one curve per file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        if header:
            fh.write(f"# {header}\n")
        for a, b in zip(x, y):
            fh.write(f"{float(a):.17g} {float(b):.17g}\n")
    return path
