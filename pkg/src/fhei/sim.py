"""Experiment configuration, channel sampling, Monte-Carlo drivers and CSV output.

Config files are JSON. Every key is optional; missing keys take the defaults
below, which describe the reference object-detection setting. Example::

    {"mode": "fig4b", "seed": 7, "trials": 200, "M_range": [2, 10],
     "scenario": {"E_bar": 5.0, "Q_range": [1.5e9, 4.5e9]},
     "solver": {"refine_last_step": true}}
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from fhei.baselines import channel_inversion_compute_only, constant_quality, joint_grid_oracle
from fhei.cost import Scenario, Solution
from fhei.errors import FHEIError, ParseError, ValidationError
from fhei.link import RadioParams, dbm_per_hz_to_watts
from fhei.profile import NetCostModel, load_model
from fhei.solver import SolverSettings, alternate

log = logging.getLogger(__name__)

MODES = ("fig4a", "fig4b", "single", "oracle")
FIXED_G_U = (0.05, 1.32, 1.95, 4.63, 3.43)
FIXED_G_D = (5.17, 1.66, 1.51, 0.62, 1.14)

METHODS = {
    "fhei": alternate,
    "constant_quality": constant_quality,
    "channel_inversion": channel_inversion_compute_only,
}
METHOD_ORDER = ("fhei", "constant_quality", "channel_inversion", "joint_grid_oracle")


@dataclass(frozen=True)
class ScenarioTemplate:
    P_U: float = 0.1
    P_D: float = 1.0
    N0_dbm_per_hz: float = -174.0
    sigma: float = 0.01
    W_U: float = 20e6
    W_D: float = 160e6
    F: float = 20e12
    Q_range: tuple[float, float] = (1.5e9, 4.5e9)
    # fixed per-mobile caps; when None each scenario draws Q_m uniformly from Q_range
    Q: tuple[float, ...] | None = None
    I: float = 100e3
    d_min: float = 2.8e6
    d_max: float = 6e6
    E_bar: float = 5.0
    T_bar: float = 15.0
    psi: float = 1e-28
    eta: float = 1.01
    net: NetCostModel = field(default_factory=NetCostModel)
    # path of a fitted model file; replaces `net` when set
    net_model: str | None = None

    def radio(self) -> RadioParams:
        return RadioParams(W_U=self.W_U, W_D=self.W_D, P_U=self.P_U, P_D=self.P_D, N0=dbm_per_hz_to_watts(self.N0_dbm_per_hz))

    def cost_model(self) -> NetCostModel:
        return load_model(self.net_model) if self.net_model else self.net

    def draw_Q(self, rng: np.random.Generator, M: int) -> np.ndarray:
        if self.Q is not None:
            return np.array(self.Q, dtype=float)
        lo, hi = self.Q_range
        return rng.uniform(lo, hi, size=M)

    def build(self, g_U, g_D, Q) -> Scenario:
        return Scenario.from_gains(
            g_U, g_D, Q,
            radio=self.radio(),
            net=self.cost_model(),
            I=self.I, F=self.F, d_min=self.d_min, d_max=self.d_max,
            E_bar=self.E_bar, T_bar=self.T_bar, sigma=self.sigma, psi=self.psi, eta=self.eta,
        )


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "single"
    M: int = 5
    M_range: tuple[int, int] = (2, 10)
    trials: int = 1
    seed: int = 0
    gamma_shape: float = 3.0
    gamma_scale: float = 1.0 / 3.0
    g_U: tuple[float, ...] | None = None
    g_D: tuple[float, ...] | None = None
    output: str | None = None
    verbose: bool = False
    oracle_points: int = 40
    scenario: ScenarioTemplate = field(default_factory=ScenarioTemplate)
    solver: SolverSettings = field(default_factory=SolverSettings)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    def validate(self) -> "ExperimentConfig":
        _validate(self)
        return self


def _fail(field_name, message):
    raise ValidationError(message, field_name)


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.mode not in MODES:
        _fail("mode", f"must be one of {', '.join(MODES)}")
    if cfg.trials < 1:
        _fail("trials", "must be >= 1")
    if cfg.M < 1:
        _fail("M", "must be >= 1")
    lo, hi = cfg.M_range
    if not 1 <= lo <= hi:
        _fail("M_range", "must be a non-empty range of positive mobile counts")
    if not (cfg.gamma_shape > 0 and cfg.gamma_scale > 0):
        _fail("gamma_shape" if cfg.gamma_shape <= 0 else "gamma_scale", "gamma parameters must be positive")
    if (cfg.g_U is None) != (cfg.g_D is None):
        _fail("g_U" if cfg.g_U is None else "g_D", "g_U and g_D must be given together")
    if cfg.g_U is not None:
        if len(cfg.g_U) != len(cfg.g_D):
            _fail("g_D", "g_U and g_D differ in length")
        if any(g < 0 for g in cfg.g_U + cfg.g_D):
            _fail("g_U", "gains must be non-negative")
    if cfg.mode == "oracle" and cfg.M > 2:
        _fail("M", "oracle mode supports at most two mobiles")
    if cfg.oracle_points < 2:
        _fail("oracle_points", "must be >= 2")
    s = cfg.scenario
    if not s.d_min <= s.d_max:
        _fail("scenario.d_min", "d_min must not exceed d_max")
    for name in ("P_U", "P_D", "W_U", "W_D", "F", "E_bar", "T_bar", "d_min"):
        if not getattr(s, name) > 0:
            _fail(f"scenario.{name}", "must be strictly positive")
    for name in ("sigma", "psi", "I"):
        if getattr(s, name) < 0:
            _fail(f"scenario.{name}", "must be non-negative")
    if not s.eta > 1:
        _fail("scenario.eta", "must exceed 1")
    qlo, qhi = s.Q_range
    if not 0 < qlo <= qhi:
        _fail("scenario.Q_range", "must satisfy 0 < lo <= hi")
    if s.Q is not None and any(q <= 0 for q in s.Q):
        _fail("scenario.Q", "caps must be strictly positive")
    if s.net_model is not None and not Path(s.net_model).is_file():
        _fail("scenario.net_model", f"no such model file: {s.net_model}")


def _tuple_or_none(value, cast=float):
    return None if value is None else tuple(cast(v) for v in value)


def _build(cls, raw: Mapping, prefix: str, converters: Mapping = {}):
    if not isinstance(raw, Mapping):
        raise ValidationError("must be an object", prefix.rstrip(".") or None)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ValidationError("unknown key", prefix + unknown[0])
    kwargs = {}
    for key, value in raw.items():
        try:
            kwargs[key] = converters[key](value) if key in converters else value
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"bad value {value!r}: {exc}", prefix + key) from exc
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc), prefix.rstrip(".") or None) from exc


def config_from_dict(raw: Mapping) -> ExperimentConfig:
    scen_conv = {
        "Q_range": lambda v: (float(v[0]), float(v[1])),
        "Q": _tuple_or_none,
        "net": lambda v: _build(NetCostModel, v, "scenario.net.", {"scale_sizes": _tuple_or_none}),
    }
    top_conv = {
        "M_range": lambda v: (int(v[0]), int(v[1])),
        "g_U": _tuple_or_none,
        "g_D": _tuple_or_none,
        "scenario": lambda v: _build(ScenarioTemplate, v, "scenario.", scen_conv),
        "solver": lambda v: _build(SolverSettings, v, "solver."),
    }
    return _build(ExperimentConfig, raw, "", top_conv).validate()


def load_config(path: str | Path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from exc
    if not isinstance(raw, dict):
        raise ParseError("top level must be a JSON object", line=1)
    return config_from_dict(raw)


def dump_config(config: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2) + "\n")


def flatten(d: Mapping, prefix: str = "") -> dict[str, object]:
    out = {}
    for key, value in d.items():
        if isinstance(value, Mapping):
            out.update(flatten(value, f"{prefix}{key}."))
        else:
            out[prefix + key] = value
    return out


# -- sampling -------------------------------------------------------------------


def sample_channels(seed, M: int, shape: float = 3.0, scale: float = 1.0 / 3.0):
    """Independent gamma-distributed uplink and downlink gains, ``(g_U, g_D)``."""
    if not (shape > 0 and scale > 0):
        raise ValueError("gamma shape and scale must be positive")
    g = np.random.default_rng(seed).gamma(shape, scale, size=(2, M))
    return g[0], g[1]


def trial_scenario(config: ExperimentConfig, M: int, trial: int) -> Scenario:
    """Scenario of Monte-Carlo trial ``trial`` at ``M`` mobiles; depends only on (seed, M, trial)."""
    g_U, g_D = sample_channels((config.seed, M, trial), M, config.gamma_shape, config.gamma_scale)
    Q = config.scenario.draw_Q(np.random.default_rng((config.seed, M, trial, 1)), M)
    return config.scenario.build(g_U, g_D, Q)


def fixed_scenario(config: ExperimentConfig) -> Scenario:
    """Scenario with the configured gains (fixed gains in fig4a mode), or sampled ones."""
    if config.g_U is not None:
        g_U, g_D = config.g_U, config.g_D
    elif config.mode == "fig4a":
        g_U, g_D = FIXED_G_U, FIXED_G_D
    else:
        return trial_scenario(config, config.M, 0)
    Q = config.scenario.draw_Q(np.random.default_rng((config.seed, len(g_U), 0, 1)), len(g_U))
    return config.scenario.build(g_U, g_D, Q)


# -- result rows ------------------------------------------------------------------

BASE_COLUMNS = ("trial", "M", "method", "mobile", "d", "quality", "sum_quality", "mean_latency", "mean_energy", "feasible")
DETAIL_COLUMNS = ("g_U", "g_D", "Q", "d_all", "alpha", "beta", "f", "q")


@dataclass
class ResultRow:
    trial: int
    M: int
    method: str
    mobile: int  # -1 on whole-system rows
    d: float  # bytes; total over mobiles on whole-system rows
    quality: float
    sum_quality: float
    mean_latency: float
    mean_energy: float
    feasible: bool
    detail: dict[str, str] = field(default_factory=dict)


def _fmt(x: float) -> str:
    return f"{x:.17e}"


def _vec(xs) -> str:
    return ";".join(_fmt(float(x)) for x in xs)


def parse_vec(text: str) -> np.ndarray:
    return np.array([float(x) for x in text.split(";")]) if text else np.array([])


def _detail(scenario: Scenario, sol: Solution | None) -> dict[str, str]:
    out = {"g_U": _vec(scenario.g_U), "g_D": _vec(scenario.g_D), "Q": _vec(scenario.Q)}
    if sol is not None:
        out.update(
            d_all=_vec(sol.d), alpha=_vec(sol.alloc.alpha), beta=_vec(sol.alloc.beta),
            f=_vec(sol.alloc.f), q=_vec(sol.alloc.q),
        )
    return {k: out.get(k, "") for k in DETAIL_COLUMNS}


def solution_rows(trial, scenario, method, sol, per_mobile, verbose) -> list[ResultRow]:
    M = scenario.M
    detail = _detail(scenario, sol) if verbose else {}
    if sol is None:
        n = range(M) if per_mobile else [-1]
        nan = math.nan
        return [ResultRow(trial, M, method, m, nan, nan, nan, nan, nan, False, dict(detail)) for m in n]
    common = (sol.sum_quality, sol.mean_latency, sol.mean_energy, True)
    if per_mobile:
        return [
            ResultRow(trial, M, method, m, float(sol.d[m]), float(sol.quality[m]), *common, dict(detail))
            for m in range(M)
        ]
    return [ResultRow(trial, M, method, -1, float(sol.d.sum()), sol.sum_quality, *common, detail)]


def run_method(method: str, scenario: Scenario, config: ExperimentConfig) -> Solution | None:
    try:
        if method == "joint_grid_oracle":
            return joint_grid_oracle(scenario, config.oracle_points)
        return METHODS[method](scenario, config.solver)
    except FHEIError as exc:
        log.info("%s infeasible at M=%d: %s", method, scenario.M, exc)
        return None


def _sort_key(row: ResultRow):
    return (row.M, row.trial, METHOD_ORDER.index(row.method), row.mobile)


def run_single(config: ExperimentConfig, scenario: Scenario | None = None) -> list[ResultRow]:
    """Every method on one scenario, one row per (method, mobile)."""
    scenario = scenario or fixed_scenario(config)
    methods = list(METHODS)
    if scenario.M <= 2:
        methods.append("joint_grid_oracle")
    rows = []
    for method in methods:
        sol = run_method(method, scenario, config)
        rows += solution_rows(0, scenario, method, sol, True, config.verbose)
    return sorted(rows, key=_sort_key)


def run_fig4a(config: ExperimentConfig) -> list[ResultRow]:
    """Per-mobile allocation under the five fixed gains."""
    if config.g_U is not None and len(config.g_U) != 5:
        raise ValidationError("fig4a uses five mobiles", "g_U")
    return run_single(replace(config, mode="fig4a", M=5))


def _fig4b_trial(config: ExperimentConfig, M: int, trial: int) -> list[ResultRow]:
    scenario = trial_scenario(config, M, trial)
    rows = []
    for method in METHODS:
        rows += solution_rows(trial, scenario, method, run_method(method, scenario, config), False, config.verbose)
    return rows


def run_fig4b(config: ExperimentConfig, jobs: int = 1) -> list[ResultRow]:
    """Sum quality per (M, trial, method) over the configured range of mobile counts."""
    tasks = [(M, t) for M in range(config.M_range[0], config.M_range[1] + 1) for t in range(config.trials)]
    rows: list[ResultRow] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_fig4b_trial, config, M, t) for M, t in tasks]
            for fut in futures:
                rows += fut.result()
    else:
        for M, t in tasks:
            rows += _fig4b_trial(config, M, t)
    return sorted(rows, key=_sort_key)


def run_oracle(config: ExperimentConfig) -> list[ResultRow]:
    """FHEI against the joint grid oracle on ``trials`` random instances (M <= 2)."""
    rows = []
    for t in range(config.trials):
        scenario = fixed_scenario(config) if config.g_U is not None else trial_scenario(config, config.M, t)
        for method in ("fhei", "joint_grid_oracle"):
            rows += solution_rows(t, scenario, method, run_method(method, scenario, config), False, config.verbose)
    return sorted(rows, key=_sort_key)


@dataclass
class SummaryRow:
    M: int
    method: str
    mean_sum_quality: float
    mean_gap_to_fhei: float  # paired over trials where both are feasible
    n_feasible: int
    n_infeasible: int


def summarize(rows: Iterable[ResultRow]) -> list[SummaryRow]:
    by_key: dict[tuple[int, str], dict[int, float]] = {}
    infeasible: dict[tuple[int, str], int] = {}
    for row in rows:
        key = (row.M, row.method)
        by_key.setdefault(key, {})
        infeasible.setdefault(key, 0)
        if row.feasible:
            by_key[key][row.trial] = row.sum_quality
        else:
            infeasible[key] += 1
    out = []
    for (M, method), values in sorted(by_key.items(), key=lambda kv: (kv[0][0], METHOD_ORDER.index(kv[0][1]))):
        ref = by_key.get((M, "fhei"), {})
        paired = [ref[t] - v for t, v in values.items() if t in ref]
        out.append(
            SummaryRow(
                M, method,
                float(np.mean(list(values.values()))) if values else math.nan,
                float(np.mean(paired)) if paired else math.nan,
                len(values), infeasible[(M, method)],
            )
        )
    return out


# -- CSV ---------------------------------------------------------------------------


def _comment_block(comments: Mapping[str, object]) -> list[str]:
    return [f"# {key} = {json.dumps(value)}" for key, value in comments.items()]


def resolved_comments(config: ExperimentConfig) -> dict[str, object]:
    """Flattened resolved config plus the derived noise density, for the CSV header block."""
    out = flatten(config.to_dict())
    out["scenario.N0_w_per_hz"] = dbm_per_hz_to_watts(config.scenario.N0_dbm_per_hz)
    out.pop("output", None)
    return out


def emit_csv(rows: Sequence[ResultRow], path: str | Path, comments: Mapping[str, object] = {}) -> None:
    """Write ``rows`` with a ``# key = value`` comment block ahead of the header."""
    if not rows:
        raise ValueError("no rows to write")
    verbose = any(row.detail for row in rows)
    columns = BASE_COLUMNS + (DETAIL_COLUMNS if verbose else ())
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for line in _comment_block(comments):
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            values = [row.trial, row.M, row.method, row.mobile]
            values += [_fmt(x) for x in (row.d, row.quality, row.sum_quality, row.mean_latency, row.mean_energy)]
            values.append("true" if row.feasible else "false")
            if verbose:
                values += [row.detail.get(c, "") for c in DETAIL_COLUMNS]
            writer.writerow(values)


def emit_summary_csv(summary: Sequence[SummaryRow], path: str | Path, comments: Mapping[str, object] = {}) -> None:
    if not summary:
        raise ValueError("no rows to write")
    path = Path(path)
    with path.open("w", newline="") as fh:
        for line in _comment_block(comments):
            fh.write(line + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([f.name for f in fields(SummaryRow)])
        for s in summary:
            writer.writerow([s.M, s.method, _fmt(s.mean_sum_quality), _fmt(s.mean_gap_to_fhei), s.n_feasible, s.n_infeasible])


def read_csv(path: str | Path) -> tuple[dict[str, object], list[ResultRow]]:
    """Inverse of :func:`emit_csv`; returns ``(comments, rows)``."""
    comments: dict[str, object] = {}
    body = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(" = ")
            comments[key] = json.loads(value)
        else:
            body.append(line)
    rows = []
    for rec in csv.DictReader(body):
        rows.append(
            ResultRow(
                trial=int(rec["trial"]), M=int(rec["M"]), method=rec["method"], mobile=int(rec["mobile"]),
                d=float(rec["d"]), quality=float(rec["quality"]), sum_quality=float(rec["sum_quality"]),
                mean_latency=float(rec["mean_latency"]), mean_energy=float(rec["mean_energy"]),
                feasible=rec["feasible"] == "true",
                detail={c: rec[c] for c in DETAIL_COLUMNS if c in rec},
            )
        )
    return comments, rows


PERTURBED_FIELDS = ("P_U", "sigma", "W_U", "W_D", "F", "I", "E_bar", "T_bar", "psi")
PERTURBED_NET_FIELDS = ("L0", "c1", "c2")


def perturbed_scenario(
    rng: np.random.Generator, M: int, spread: float = 2.0, template: ScenarioTemplate | None = None
) -> Scenario:
    """Random instance with every scalar parameter scaled log-uniformly within [1/spread, spread].

    ``d_min`` and ``d_max`` share one factor so their order is kept; gains are
    gamma(3, 1/3) and caps are drawn from the (scaled) Q range.
    """
    template = template or ScenarioTemplate()

    def factor():
        return float(np.exp(rng.uniform(-np.log(spread), np.log(spread))))

    changes = {name: getattr(template, name) * factor() for name in PERTURBED_FIELDS}
    net = template.net
    net = replace(net, **{name: getattr(net, name) * factor() for name in PERTURBED_NET_FIELDS})
    fd = factor()
    fq = factor()
    t = replace(
        template,
        **changes,
        net=net,
        d_min=template.d_min * fd,
        d_max=template.d_max * fd,
        Q_range=(template.Q_range[0] * fq, template.Q_range[1] * fq),
    )
    g = rng.gamma(3.0, 1.0 / 3.0, size=(2, M))
    return t.build(g[0], g[1], t.draw_Q(rng, M))
