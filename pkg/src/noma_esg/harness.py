"""Experiment orchestration: configs, SNR calibration, Monte Carlo, CSV.

A :class:`ExperimentConfig` describes one curve: a scenario kind, a
geometry, and a single swept variable.  :func:`run_scenario` evaluates
the NOMA and OMA sum-rates of that scenario on random drops, attaches the
matching closed-form ESG and returns an :class:`EsgReport`.

Every trial draws from its own stream keyed by ``(seed, point, trial)``,
so results do not depend on the number of worker threads.
"""

import csv
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import analytic, multicell, receivers
from .channel import CellGeometry, RngStream, converged_table, drop_users, mean_gain
from .receivers import ConfigurationError, Grouping, PowerAllocation, SingularGroupError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

__all__ = [
    "ExperimentConfig",
    "EsgRow",
    "EsgReport",
    "PointSpec",
    "CSV_COLUMNS",
    "PRESETS",
    "dbm_to_watt",
    "snr_calibrate",
    "snr_sum_db",
    "load_config",
    "resolve_point",
    "simulate_point",
    "analytic_point",
    "run_scenario",
    "run_analytic",
    "figure_preset",
    "emit_csv",
    "read_csv",
]

KINDS = ("SISO", "MIMO_ZF", "MIMO_MRC", "MIMO_BEST", "MMIMO")
SWEEPS = ("K", "M", "snr_db", "p_total_dbm")
CSV_COLUMNS = (
    "sweep_name",
    "sweep_value",
    "scheme_pair",
    "noma_sim",
    "oma_sim",
    "esg_sim",
    "esg_analytic",
    "ci_halfwidth",
    "trials",
    "seed",
)
SCHEME_PAIRS = {
    "SISO": "SIC/FDMA-SUD",
    "MIMO_ZF": "MMSE-SIC/FDMA-ZF",
    "MIMO_MRC": "MMSE-SIC/FDMA-MRC",
    "MMIMO": "MRC-SIC/mMIMO-OMA",
}


def dbm_to_watt(dbm):
    return 10.0 ** ((dbm - 30.0) / 10.0)


def snr_calibrate(geom, m, table, target_snr_db, n0):
    """Total power giving the requested average received sum SNR.

    The SNR is normalized per receive antenna, so ``m`` does not change
    the result; it is accepted for symmetry with the other calls.
    """
    if not np.isfinite(target_snr_db):
        raise ValueError(f"target SNR must be finite, got {target_snr_db!r}")
    return 10.0 ** (target_snr_db / 10.0) * n0 / mean_gain(geom, 1, table)


def snr_sum_db(geom, table, p_max, n0):
    """Average received sum SNR in dB for a given total power."""
    return 10.0 * math.log10(p_max * mean_gain(geom, 1, table) / n0)


@dataclass(frozen=True)
class ExperimentConfig:
    """One curve of an experiment.

    Radii are in meters, powers in dBm and densities per square km.
    When ``delta`` is set, M follows K as ``ceil(delta K)`` (or K follows
    M as ``M / delta`` when M is swept); when ``varsigma`` is set, W is
    ``ceil(varsigma M)``.  For the multi-cell deployment K defaults to the
    density-derived cell population.
    """

    name: str = "experiment"
    kind: str = "SISO"
    deployment: str = "single"
    d0_m: float = 50.0
    d_outer_m: float = 200.0
    alpha: float = 3.76
    k_users: int = 0
    m_antennas: int = 1
    w_group: int = 1
    delta: float = 0.0
    varsigma: float = 0.0
    sweep_name: str = "snr_db"
    sweep_values: tuple = (0.0,)
    snr_sum_db: float = float("nan")
    p_total_dbm: float = float("nan")
    n0_dbm: float = -80.0
    trials: int = 2000
    seed: int = 0
    n_terms: int = 100
    d1_m: float = 5000.0
    rho_per_km2: float = 1000.0
    normalize: str = "sum"
    include_iui: bool = False
    out_path: str = ""

    def __post_init__(self):
        object.__setattr__(self, "sweep_values", tuple(float(v) for v in self.sweep_values))
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.deployment not in ("single", "multi"):
            raise ConfigurationError(f"deployment must be 'single' or 'multi', got {self.deployment!r}")
        if self.sweep_name not in SWEEPS:
            raise ConfigurationError(f"unknown sweep {self.sweep_name!r}; expected one of {SWEEPS}")
        if not self.sweep_values:
            raise ConfigurationError("sweep_values is empty")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if self.normalize not in ("sum", "user", "antenna"):
            raise ConfigurationError(f"unknown normalization {self.normalize!r}")
        if self.k_users < 0 or self.m_antennas < 1 or self.w_group < 1:
            raise ConfigurationError("need k_users >= 0, m_antennas >= 1, w_group >= 1")
        power_given = [
            self.sweep_name in ("snr_db", "p_total_dbm"),
            not math.isnan(self.snr_sum_db),
            not math.isnan(self.p_total_dbm),
        ]
        if sum(power_given) != 1:
            raise ConfigurationError(
                "set exactly one power reference: an snr_db/p_total_dbm sweep, snr_sum_db or p_total_dbm"
            )
        if self.deployment == "single" and (
            self.sweep_name == "p_total_dbm" or not math.isnan(self.p_total_dbm)
        ):
            raise ConfigurationError("p_total_dbm applies to the multi-cell deployment only")
        if self.deployment == "single" and self.k_users == 0 and not (
            self.sweep_name == "K" or (self.sweep_name == "M" and self.delta > 0)
        ):
            raise ConfigurationError("k_users is required for the single-cell deployment")
        # fail early on divisibility and shape problems
        for v in self.sweep_values:
            resolve_point(self, v)

    def with_(self, **kw):
        return replace(self, **kw)

    @property
    def geom(self):
        return CellGeometry(self.d0_m, self.d_outer_m, self.alpha)


_FIELD_NAMES = {f.name for f in fields(ExperimentConfig)}


def load_config(path, **overrides):
    """Read an :class:`ExperimentConfig` from a flat TOML file.

    Unknown keys raise :class:`ConfigurationError`.
    """
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"malformed config {path}: {exc}") from exc
    unknown = sorted(set(data) - _FIELD_NAMES)
    if unknown:
        raise ConfigurationError(f"unknown config keys in {path}: {', '.join(unknown)}")
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigurationError(f"config must be flat; tables found: {', '.join(nested)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigurationError(str(exc)) from exc


@dataclass(frozen=True)
class PointSpec:
    """Fully resolved parameters of one sweep point."""

    kind: str
    geom: CellGeometry
    k: int
    m: int
    w: int
    p_max: float
    n0: float
    layout: object = None
    include_iui: bool = False

    @property
    def scenario(self):
        return analytic.Scenario(self.geom, self.k, self.m, self.w, self.p_max, self.n0)


def _check_shape(kind, k, m, w):
    if k < 1:
        raise ConfigurationError(f"K must be >= 1, got {k}")
    if kind == "MIMO_ZF" and k % m:
        raise ConfigurationError(f"FDMA-ZF needs K divisible by M, got K={k}, M={m}")
    if kind == "MMIMO" and w > m:
        raise ConfigurationError(f"group size W={w} exceeds M={m}")


def resolve_point(cfg, value):
    """Map a sweep value to concrete K, M, W, power and noise."""
    k, m, w = cfg.k_users, cfg.m_antennas, cfg.w_group
    snr_db, p_total_dbm = cfg.snr_sum_db, cfg.p_total_dbm
    if cfg.sweep_name == "K":
        k = int(round(value))
    elif cfg.sweep_name == "M":
        m = int(round(value))
        if cfg.delta > 0:
            k = int(round(m / cfg.delta))
    elif cfg.sweep_name == "snr_db":
        snr_db = value
    else:
        p_total_dbm = value
    layout = None
    if cfg.deployment == "multi":
        layout = multicell.MulticellLayout.from_density(
            cfg.d_outer_m, cfg.d1_m, cfg.rho_per_km2, 0.0, cfg.alpha
        )
        if k == 0:
            k = layout.k_per_cell
    if cfg.delta > 0 and cfg.sweep_name != "M":
        m = math.ceil(cfg.delta * k - 1e-9)
    if cfg.varsigma > 0:
        w = max(1, math.ceil(cfg.varsigma * m - 1e-9))
    if cfg.kind != "MMIMO":
        w = 1
    _check_shape(cfg.kind, k, m, w)
    geom = cfg.geom
    n0 = dbm_to_watt(cfg.n0_dbm)
    if not math.isnan(snr_db):
        p_max = snr_calibrate(geom, m, converged_table(geom, cfg.n_terms), snr_db, n0)
        if layout is not None:
            layout = layout.with_cell_power(p_max)
    else:
        layout = replace(layout, p_max_total=dbm_to_watt(p_total_dbm))
        p_max = layout.p_max_cell
    return PointSpec(cfg.kind, geom, k, m, w, p_max, n0, layout, cfg.include_iui)


def _best_oma(point, table):
    """FDMA-ZF or FDMA-MRC, whichever has the higher ergodic rate."""
    sc = point.scenario
    if point.layout is not None:
        sc = sc.with_(n0=sc.n0 + multicell.ici_power(point.layout))
    if point.k % point.m:
        return "MIMO_MRC"
    zf = analytic.ergodic_mimo_oma_zf(sc, table)
    mrc = analytic.ergodic_mimo_oma_mrc(sc, table)
    return "MIMO_ZF" if zf >= mrc else "MIMO_MRC"


def _effective_kind(point, table):
    return _best_oma(point, table) if point.kind == "MIMO_BEST" else point.kind


def _trial_rates(point, kind, stream):
    gen = stream.generator()
    n0 = point.n0
    if point.layout is not None:
        n0 = n0 + multicell.sample_ici_power(point.layout, gen)
    pa = PowerAllocation.equal(point.k, point.p_max)
    while True:
        draw, _ = drop_users(point.geom, point.k, point.m, gen).sorted_by_gain()
        try:
            if kind == "SISO":
                noma = receivers.sic_rates_siso(draw, pa, n0)
                oma = receivers.oma_rates_siso(draw, pa, Grouping.singletons(point.k), n0)
            elif kind == "MIMO_ZF":
                noma = receivers.mmse_sic_rates(draw, pa, n0)
                grouping = Grouping.random(point.k, point.m, gen)
                oma = receivers.fdma_zf_rates(draw, pa, grouping, n0)
            elif kind == "MIMO_MRC":
                noma = receivers.mmse_sic_rates(draw, pa, n0)
                oma = receivers.fdma_mrc_rates(draw, pa, n0)
            else:
                noma = receivers.mrc_sic_rates(draw, pa, n0)
                grouping = Grouping.random(point.k, point.w, gen)
                oma = receivers.mmimo_oma_rates(
                    draw, pa, grouping, n0, include_iui=point.include_iui, strict=True
                )
        except SingularGroupError:
            continue  # probability-zero event: redraw from the same stream
        return noma.sum, oma.sum


def simulate_point(point, trials, seed, point_index=0, threads=1, kind=None):
    """Per-trial (noma, oma) sum-rates, in trial order, shape (trials, 2)."""
    kind = kind or _effective_kind(point, None)
    streams = [RngStream(seed, (point_index, t)) for t in range(trials)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(lambda s: _trial_rates(point, kind, s), streams))
    else:
        out = [_trial_rates(point, kind, s) for s in streams]
    return np.array(out, dtype=float).reshape(trials, 2)


def analytic_point(point, kind=None, table=None):
    """Closed-form (noma, oma) sum-rates at a resolved point."""
    if table is None:
        table = converged_table(point.geom)
    kind = kind or _effective_kind(point, table)
    sc = point.scenario
    if point.layout is not None:
        sc = sc.with_(p_max=point.layout.p_max_cell, n0=sc.n0 + multicell.ici_power(point.layout))
    if kind == "SISO":
        return analytic.ergodic_siso_noma(sc, table), analytic.ergodic_siso_oma(sc, table)
    if kind == "MIMO_ZF":
        return analytic.ergodic_mimo_noma(sc, table), analytic.ergodic_mimo_oma_zf(sc, table)
    if kind == "MIMO_MRC":
        return analytic.ergodic_mimo_noma(sc, table), analytic.ergodic_mimo_oma_mrc(sc, table)
    return analytic.ergodic_mmimo_noma(sc, table), analytic.ergodic_mmimo_oma(sc, table)


@dataclass(frozen=True)
class EsgRow:
    sweep_name: str
    sweep_value: float
    scheme_pair: str
    noma_sim: float
    oma_sim: float
    esg_sim: float
    esg_analytic: float
    ci_halfwidth: float
    trials: int
    seed: int


@dataclass
class EsgReport:
    rows: list = field(default_factory=list)
    name: str = ""

    def by_value(self, value):
        for row in self.rows:
            if row.sweep_value == value:
                return row
        raise KeyError(value)


def _norm(cfg, point):
    if cfg.normalize == "user":
        return point.k
    if cfg.normalize == "antenna":
        return point.m
    return 1


def _pair_label(kind, deployment):
    label = SCHEME_PAIRS[kind]
    return label + ("/multi" if deployment == "multi" else "")


def run_scenario(cfg, threads=1, simulate=True):
    """Monte Carlo (and closed-form) ESG for every sweep point of ``cfg``.

    With ``simulate=False`` only the closed forms are evaluated and the
    simulation columns are NaN with ``trials = 0``.
    """
    table = converged_table(cfg.geom, cfg.n_terms)
    report = EsgReport(name=cfg.name)
    order = sorted(range(len(cfg.sweep_values)), key=lambda i: cfg.sweep_values[i])
    for idx in order:
        value = cfg.sweep_values[idx]
        point = resolve_point(cfg, value)
        kind = _effective_kind(point, table)
        scale = _norm(cfg, point)
        noma_a, oma_a = analytic_point(point, kind, table)
        if simulate:
            rates = simulate_point(point, cfg.trials, cfg.seed, idx, threads, kind) / scale
            esg = rates[:, 0] - rates[:, 1]
            ci = 1.96 * esg.std(ddof=1) / math.sqrt(cfg.trials) if cfg.trials > 1 else 0.0
            noma_s, oma_s, esg_s, trials = rates[:, 0].mean(), rates[:, 1].mean(), esg.mean(), cfg.trials
        else:
            noma_s = oma_s = esg_s = ci = float("nan")
            trials = 0
        report.rows.append(
            EsgRow(
                cfg.sweep_name,
                float(value),
                _pair_label(kind, cfg.deployment),
                float(noma_s),
                float(oma_s),
                float(esg_s),
                float((noma_a - oma_a) / scale),
                float(ci),
                int(trials),
                int(cfg.seed),
            )
        )
    return report


def run_analytic(cfg):
    return run_scenario(cfg, simulate=False)


_SNR_GRID = tuple(float(s) for s in range(0, 41, 5))
_K_GRID = (2.0, 4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0)
_P_GRID = tuple(float(p) for p in range(20, 61, 5))
_ETAS = (1, 4, 10)


def _d(eta):
    return 50.0 * eta


def _fig2(kind, **kw):
    grid = _K_GRID if kind != "MIMO_ZF" else tuple(k for k in _K_GRID if k % 4 == 0)
    return [
        ExperimentConfig(
            name=f"{kind.lower()}_eta10_snr{snr}",
            kind=kind,
            d_outer_m=500.0,
            sweep_name="K",
            sweep_values=grid,
            snr_sum_db=float(snr),
            **kw,
        )
        for snr in (0, 10, 20)
    ]


def _fig3(kind, etas=_ETAS, ms=(1,), **kw):
    return [
        ExperimentConfig(
            name=f"{kind.lower()}_eta{eta}_m{m}",
            kind=kind,
            d_outer_m=_d(eta),
            k_users=256,
            m_antennas=m,
            sweep_name="snr_db",
            sweep_values=_SNR_GRID,
            **kw,
        )
        for eta in etas
        for m in ms
    ]


def _fig7(kind, etas=_ETAS, **kw):
    out = []
    for eta in etas:
        cfg_kw = dict(kw)
        if kind == "MIMO_ZF":
            # FDMA-ZF needs whole groups: round the density-based K down to a multiple of M
            k = multicell.MulticellLayout.from_density(_d(eta), 5000.0, 1000.0, 0.0).k_per_cell
            cfg_kw["k_users"] = k - k % cfg_kw.get("m_antennas", 1)
        out.append(
            ExperimentConfig(
                name=f"{kind.lower()}_multi_eta{eta}",
                kind=kind,
                deployment="multi",
                d_outer_m=_d(eta),
                sweep_name="p_total_dbm",
                sweep_values=_P_GRID,
                **cfg_kw,
            )
        )
    return out


def _table4():
    rows = (
        ("siso", "SISO", dict()),
        ("mimo", "MIMO_ZF", dict(m_antennas=4)),
        ("mmimo", "MMIMO", dict(delta=0.5, varsigma=1 / 16, normalize="user")),
    )
    out = []
    for label, kind, kw in rows:
        for deployment in ("single", "multi"):
            for snr in (0.0, 10.0):
                out.append(
                    ExperimentConfig(
                        name=f"table4_{label}_{deployment}_{int(snr)}db",
                        kind=kind,
                        deployment=deployment,
                        d_outer_m=200.0,
                        k_users=256,
                        sweep_name="snr_db",
                        sweep_values=(snr,),
                        **kw,
                    )
                )
    return out


PRESETS = {
    "fig2a": lambda: _fig2("SISO"),
    "fig2b": lambda: _fig2("MIMO_ZF", m_antennas=4),
    "fig2c": lambda: _fig2("MMIMO", delta=0.5, varsigma=1 / 16, normalize="user"),
    "fig3a": lambda: _fig3("SISO"),
    "fig3b": lambda: _fig3("MIMO_ZF", ms=(4,)),
    "fig3c": lambda: _fig3("MIMO_MRC", ms=(2, 4)),
    "fig3d": lambda: _fig3("MMIMO", ms=(128,), w_group=8, normalize="user"),
    "fig4a": lambda: [
        ExperimentConfig(
            name=f"mimo_zf_eta{eta}_snr40",
            kind="MIMO_ZF",
            d_outer_m=_d(eta),
            k_users=256,
            sweep_name="M",
            sweep_values=(1.0, 2.0, 4.0, 8.0),
            snr_sum_db=40.0,
        )
        for eta in _ETAS
    ],
    "fig4b": lambda: [
        ExperimentConfig(
            name=f"mimo_mrc_eta10_snr{snr}",
            kind="MIMO_MRC",
            d_outer_m=500.0,
            k_users=256,
            sweep_name="M",
            sweep_values=tuple(float(m) for m in range(1, 9)),
            snr_sum_db=float(snr),
        )
        for snr in (0, 10, 20)
    ],
    "fig4c": lambda: [
        ExperimentConfig(
            name=f"mmimo_eta{eta}_snr40",
            kind="MMIMO",
            d_outer_m=_d(eta),
            delta=0.5,
            varsigma=1 / 16,
            sweep_name="M",
            sweep_values=(32.0, 64.0, 96.0, 128.0),
            snr_sum_db=40.0,
            normalize="user",
        )
        for eta in _ETAS
    ],
    "fig7a": lambda: _fig7("SISO"),
    "fig7b": lambda: _fig7("MIMO_ZF", m_antennas=4),
    "fig7c": lambda: _fig7("MIMO_MRC", m_antennas=4),
    "fig7d": lambda: _fig7("MMIMO", etas=(4, 10), delta=0.5, varsigma=1 / 16, normalize="user"),
    "table4": _table4,
}


def figure_preset(name):
    """Configs reproducing one figure or table of results."""
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None


def emit_csv(report, path):
    """Write ``report`` with one row per sweep point, floats in full precision."""
    path = Path(path)
    try:
        if path.parent != Path("."):
            path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in report.rows:
                writer.writerow(
                    [
                        row.sweep_name,
                        repr(float(row.sweep_value)),
                        row.scheme_pair,
                        repr(float(row.noma_sim)),
                        repr(float(row.oma_sim)),
                        repr(float(row.esg_sim)),
                        repr(float(row.esg_analytic)),
                        repr(float(row.ci_halfwidth)),
                        str(int(row.trials)),
                        str(int(row.seed)),
                    ]
                )
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def read_csv(path):
    """Parse a file written by :func:`emit_csv`."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header!r}")
        rows = [
            EsgRow(r[0], float(r[1]), r[2], *(float(v) for v in r[3:8]), int(r[8]), int(r[9]))
            for r in reader
        ]
    return EsgReport(rows, path.stem)
