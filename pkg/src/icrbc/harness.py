"""Monte Carlo campaigns, DoF slope estimation and CSV exports."""

from __future__ import annotations

import csv
import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import dof
from .channel import enumerate_synergistic_patterns, icr_pattern, relabel
from .errors import IcrError
from .scheme import TrialDiagnostics, run_icr

log = logging.getLogger(__name__)

_MASK64 = (1 << 64) - 1

TABLE2 = (
    ((1, 0, 0), (1, 0, 0), ""),
    ((0, 1, 0), (0, 1, 0), ""),
    ((0, 0, 1), (0, 0, 1), ""),
    (("1/3", "1/3", "1/3"), ("1/3", "1/3", "1/3"), "Time sharing"),
    (("2/5", "1/5", "1/5"), ("3/5", "3/5", "3/5"), "ICR"),
    (("1/5", "2/5", "1/5"), ("3/5", "3/5", "3/5"), "ICR"),
    (("1/5", "1/5", "2/5"), ("3/5", "3/5", "3/5"), "ICR"),
    ((1, 1, 1), (1, 1, 1), "Conventional"),
)

FIG4_GAMMA = (Fraction(2, 5), Fraction(1, 5), Fraction(1, 5))


@dataclass
class ExperimentConfig:
    K: int = 3
    trials: int = 1000
    seed: int = 0
    snr_exponents: tuple[int, ...] = (30, 35, 40, 45, 50)
    noise: bool = False
    output_path: str | None = None
    power: float = 1.0
    jobs: int = 1

    def __post_init__(self):
        self.snr_exponents = tuple(int(e) for e in self.snr_exponents)
        if self.K < 2:
            raise ValueError("K must be at least 2")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if any(b <= a for a, b in zip(self.snr_exponents, self.snr_exponents[1:])):
            raise ValueError("snr exponents must be strictly increasing")
        if self.power <= 0:
            raise ValueError("power must be positive")

    @classmethod
    def from_json(cls, path, **overrides) -> "ExperimentConfig":
        data = json.loads(Path(path).read_text())
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**data)


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def trial_seed(seed: int, index: int) -> int:
    """Seed of trial ``index``; independent of the order trials run in."""
    return (seed ^ _splitmix64(index)) & _MASK64


def _run_trial(args) -> TrialDiagnostics:
    K, seed, power = args
    try:
        return run_icr(K, seed, power).diagnostics
    except IcrError as exc:
        return TrialDiagnostics(
            K=K, seed=seed, slots=2 * K - 1, symbols=K * K, min_singular_value=[],
            decode_max_error=float("inf"), success=False, structural_ok=False,
            structural_residual=float("inf"), failure=f"{type(exc).__name__}: {exc}")


def _map(fn, items, jobs: int):
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items, chunksize=16))
    return [fn(x) for x in items]


@dataclass
class DecodeSummary:
    K: int
    trials: int
    successes: int
    success_rate: float
    max_decode_error: float
    structural_failures: int
    min_singular_value: dict
    records: list[TrialDiagnostics] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("records")
        return out


def monte_carlo_decode(config: ExperimentConfig) -> DecodeSummary:
    """Run noiseless trials and report how many decode every symbol."""
    if config.noise:
        raise ValueError("decodability campaigns run noiseless")
    args = [(config.K, trial_seed(config.seed, n), config.power) for n in range(config.trials)]
    records = _map(_run_trial, args, config.jobs)
    successes = sum(r.success for r in records)
    sv = np.array([min(r.min_singular_value) for r in records if r.min_singular_value])
    if sv.size:
        q = np.quantile(sv, [0.0, 0.01, 0.5, 1.0])
        sv_stats = {"min": q[0], "p01": q[1], "median": q[2], "max": q[3]}
    else:
        sv_stats = {"min": float("nan"), "p01": float("nan"),
                    "median": float("nan"), "max": float("nan")}
    summary = DecodeSummary(
        K=config.K, trials=config.trials, successes=successes,
        success_rate=successes / config.trials,
        max_decode_error=max(r.decode_max_error for r in records),
        structural_failures=sum(not r.structural_ok for r in records),
        min_singular_value={k: float(f"{v:.12g}") for k, v in sv_stats.items()},
        records=records)
    if successes < config.trials:
        log.warning("K=%d: %d of %d trials failed", config.K,
                    config.trials - successes, config.trials)
    return summary


@dataclass
class SlopeEstimate:
    K: int
    slope: float
    intercept: float
    r_squared: float
    snr_exponents: tuple[int, ...]
    sum_rates: tuple[float, ...]

    @property
    def target(self) -> Fraction:
        return dof.achievable_dof(self.K)

    @property
    def relative_error(self) -> float:
        return abs(self.slope / float(self.target) - 1.0)

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "slope": _g12(self.slope),
            "intercept": _g12(self.intercept),
            "r_squared": _g12(self.r_squared),
            "target": str(self.target),
            "relative_error": _g12(self.relative_error),
            "points": [{"snr_exp": e, "sum_rate": _g12(r)}
                       for e, r in zip(self.snr_exponents, self.sum_rates)],
        }


def _g12(x: float) -> float:
    return float(f"{x:.12g}")


def _slope_trial(args) -> list[float]:
    K, seed, exponents = args
    rates = []
    for e in exponents:
        run = run_icr(K, seed, 2.0 ** e, noise=True)
        rates.append(run.system.sum_rate() / (2 * K - 1))
    return rates


def dof_slope_estimate(config: ExperimentConfig) -> SlopeEstimate:
    """Fit sum rate per channel use against log2 P.

    Every SNR point reuses the same ``trials`` channel draws. The slope of
    the least-squares line estimates the total DoF.
    """
    exps = config.snr_exponents
    if len(exps) < 3:
        raise ValueError("slope estimation needs at least three SNR points")
    args = [(config.K, trial_seed(config.seed, n), exps) for n in range(config.trials)]
    per_trial = np.array(_map(_slope_trial, args, config.jobs))
    rates = per_trial.mean(axis=0)
    x = np.asarray(exps, dtype=float)
    slope, intercept = np.polyfit(x, rates, 1)
    fitted = slope * x + intercept
    ss_tot = float(np.sum((rates - rates.mean()) ** 2))
    ss_res = float(np.sum((rates - fitted) ** 2))
    r2 = 1.0 if ss_tot == 0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return SlopeEstimate(K=config.K, slope=float(slope), intercept=float(intercept),
                         r_squared=r2, snr_exponents=exps,
                         sum_rates=tuple(float(r) for r in rates))


# -- exports ----------------------------------------------------------------

def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, (Fraction, int)):
        return dof.format_fraction(x)
    return f"{x:.12g}"


def _write_csv(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def figure_rows(figure: str, kmax: int = 10, gammas=FIG4_GAMMA):
    """Header and rows of one figure's data table."""
    if figure == "fig2":
        header = ["K", "icr_dof", "mat_dof"]
        rows = [(K, dof.achievable_dof(K), dof.mat_dof(K)) for K in range(1, kmax + 1)]
    elif figure == "fig3":
        header = ["K", "achievable", "upper_bound_at_scheme_gammas", "upper_bound_gamma_1"]
        rows = [(K, dof.achievable_dof(K),
                 dof.upper_bound_total(dof.RegionSpec(dof.scheme_gammas(K))),
                 dof.upper_bound_total(dof.RegionSpec((1,) * K)))
                for K in range(1, kmax + 1)]
    elif figure == "fig4":
        header = ["kind", "d1", "d2", "d3"]
        rows = [("vertex",) + tuple(v) for v in dof.region_vertices(*gammas)]
        rows.append(("achieved", Fraction(3, 5), Fraction(3, 5), Fraction(3, 5)))
        rows.append(("lp_optimum",) + tuple(dof.dof_region_lp(*gammas)))
    else:
        raise ValueError(f"unknown figure {figure!r}; expected fig2, fig3 or fig4")
    return header, rows


def export_figure_data(figure: str, path, kmax: int = 10, gammas=FIG4_GAMMA) -> Path:
    if kmax < 1:
        raise ValueError("kmax must be positive")
    header, rows = figure_rows(figure, kmax, gammas)
    return _write_csv(path, header, rows)


def grouped_pattern_rows() -> list[tuple[str, str]]:
    """(phase-1, phase-2) pairs: the 3-user scheme pattern under every relabeling."""
    base = icr_pattern(3)
    out = []
    for perm in itertools.permutations(range(3)):
        text = str(relabel(base, perm)).split(",")
        out.append((",".join(text[:3]), ",".join(text[3:])))
    return out


def export_tables(directory) -> tuple[Path, Path]:
    """Write ``table1.csv`` (grouped and expanded patterns) and ``table2.csv``."""
    directory = Path(directory)
    rows = [("grouped", p1, p2, "") for p1, p2 in grouped_pattern_rows()]
    for p in enumerate_synergistic_patterns(3):
        text = str(p).split(",")
        rows.append(("expanded", ",".join(text[:3]), ",".join(text[3:]), str(p)))
    t1 = _write_csv(directory / "table1.csv", ["kind", "phase1", "phase2", "pattern"], rows)
    t2 = _write_csv(directory / "table2.csv",
                    ["gamma1", "gamma2", "gamma3", "d1", "d2", "d3", "scheme"],
                    [tuple(Fraction(x) for x in g) + tuple(Fraction(x) for x in d) + (label,)
                     for g, d, label in TABLE2])
    return t1, t2
