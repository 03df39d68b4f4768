"""Flat key/value experiment configs, the three experiment kinds and their
CSV tables."""

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .channel import ChannelSampleSet, FadingConfig
from .optimizer import SolverConfig, SolveResult, solve
from .power import Constraints, Regime
from .rate import PowerPolicy, SystemParams, exact_rate_mc, rate_lower_bound
from .sensing import SensingSpec, branch_probs

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "parse_config_text",
    "load_config",
    "db_to_linear",
    "linear_to_db",
    "SOLVE_COLUMNS",
    "BOUND_COLUMNS",
    "Table",
    "run_solve",
    "run_sweep",
    "run_validate_bound",
    "run",
]


class ConfigError(ValueError):
    """Bad configuration key or value."""


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value) if value > 0 else -math.inf


_FLOAT_KEYS = {
    # system
    "noise_power", "primary_power", "frame_len", "sense_len", "circuit_power", "symbol_rate",
    # sensing
    "p_detect", "p_false_alarm", "prior_idle", "prior_busy",
    # constraints
    "p_avg", "q_avg", "p_peak_idle", "p_peak_busy", "p_limit",
    # fading
    "mean_gain_h", "mean_gain_g",
    # solver
    "tolerance", "step_size", "alpha_init", "lambda_init", "nu_init",
    # bound validation
    "gain_h", "power_min", "power_max",
}
_INT_KEYS = {"n_samples", "seed", "max_outer_iters", "max_inner_iters", "n_mc", "n_points",
             "workers"}
_STR_KEYS = {"kind", "regime", "step_rule", "sweep_param", "sweep_values"}
_POWER_KEYS = {"noise_power", "primary_power", "circuit_power", "p_avg", "q_avg",
               "p_peak_idle", "p_peak_busy", "p_limit", "mean_gain_h", "mean_gain_g",
               "gain_h", "power_min", "power_max"}
_KINDS = ("solve", "sweep", "validate_bound")

DEFAULTS = {
    "kind": "solve",
    "regime": "avg",
    "p_detect": 0.8,
    "p_false_alarm": 0.1,
    "prior_idle": 0.4,
    "prior_busy": 0.6,
    "noise_power": 0.2,
    "primary_power": 1.0,
    "frame_len": 100.0,
    "sense_len": 10.0,
    "circuit_power": 0.1,
    "symbol_rate": 1.0,
    "p_limit": db_to_linear(-4.0),
    "q_avg": db_to_linear(-8.0),
    "mean_gain_h": 1.0,
    "mean_gain_g": 1.0,
    "n_samples": 10_000,
    "seed": 42,
    "tolerance": 1e-4,
    "step_size": 0.1,
    "step_rule": "scaled",
    "max_outer_iters": 50,
    "max_inner_iters": 5000,
    "alpha_init": 0.0,
    "lambda_init": 0.0,
    "nu_init": 0.0,
    "gain_h": 1.0,
    "n_mc": 2_000_000,
    "power_min": 1e-2,
    "power_max": 1e2,
    "n_points": 20,
    "workers": 1,
}

SOLVE_COLUMNS = ("Pd", "Pf", "P_limit_db", "Q_avg_db", "regime", "ee", "rate",
                 "avg_tx_power", "avg_interference", "converged", "p_idle_mean",
                 "p_busy_mean")
BOUND_COLUMNS = ("power", "rate_lb", "rate_exact", "rate_exact_stderr", "ee_lb", "ee_exact")


def known_keys():
    base = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS
    return base | {k + "_db" for k in _POWER_KEYS}


def _coerce(key, raw):
    name = key[:-3] if key.endswith("_db") and key[:-3] in _POWER_KEYS else key
    try:
        if name in _INT_KEYS:
            value = int(float(raw)) if isinstance(raw, str) and "e" in raw.lower() else int(raw)
            return name, value
        if name in _FLOAT_KEYS:
            value = float(raw)
            return name, db_to_linear(value) if name != key else value
        if name in _STR_KEYS:
            return name, str(raw).strip()
    except (TypeError, ValueError):
        raise ConfigError(f"invalid value for {key!r}: {raw!r}") from None
    raise ConfigError(f"unknown config key {key!r}")


def parse_config_text(text: str) -> Dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment; blank lines ignored."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def load_config(path) -> Dict[str, str]:
    with open(path) as fh:
        return parse_config_text(fh.read())


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob of an experiment as one flat record.

    Built with :meth:`from_mapping`, which accepts string or numeric values
    and the ``<power key>_db`` spelling of any power quantity. ``p_limit``
    sets ``p_avg`` (average regime) or both peaks (peak regime) unless those
    are given explicitly.
    """

    values: tuple  # sorted (key, value) pairs, canonical linear units
    raw: tuple     # sorted (key, value) pairs exactly as supplied

    @classmethod
    def from_mapping(cls, mapping) -> "ExperimentConfig":
        values = dict(DEFAULTS)
        seen = {}
        for key, raw in mapping.items():
            name, value = _coerce(str(key).strip(), raw)
            if name in seen:
                raise ConfigError(f"{key!r} conflicts with {seen[name]!r}")
            seen[name] = key
            values[name] = value
        cfg = cls(values=tuple(sorted(values.items())),
                  raw=tuple(sorted((str(k), str(v)) for k, v in mapping.items())))
        cfg._validate()
        return cfg

    def __getitem__(self, key):
        return dict(self.values)[key]

    def get(self, key, default=None):
        return dict(self.values).get(key, default)

    def with_value(self, key, value) -> "ExperimentConfig":
        raw = dict(self.raw)
        base = key[:-3] if key.endswith("_db") else key
        for k in (base, base + "_db"):
            raw.pop(k, None)
        raw[key] = value
        return ExperimentConfig.from_mapping(raw)

    def _validate(self):
        v = dict(self.values)
        if v["kind"] not in _KINDS:
            raise ConfigError(f"kind must be one of {_KINDS}, got {v['kind']!r}")
        if v["regime"] not in ("avg", "peak"):
            raise ConfigError(f"regime must be 'avg' or 'peak', got {v['regime']!r}")
        if v["kind"] == "sweep":
            if "sweep_param" not in v or "sweep_values" not in v:
                raise ConfigError("a sweep needs sweep_param and sweep_values")
            param = v["sweep_param"]
            base = param[:-3] if param.endswith("_db") else param
            if base not in _FLOAT_KEYS or (param != base and base not in _POWER_KEYS):
                raise ConfigError(f"sweep_param must name a real scalar key, got {param!r}")
            self.sweep_values()
        try:
            self.system_params()
            self.sensing_spec()
            self.constraints()
            self.fading_config()
            self.solver_config()
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None

    def sweep_values(self) -> List[float]:
        text = dict(self.values).get("sweep_values", "")
        try:
            vals = [float(x) for x in text.replace(";", ",").split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"sweep_values must be comma-separated numbers: {text!r}") from None
        if not vals:
            raise ConfigError("sweep_values is empty")
        return vals

    def system_params(self) -> SystemParams:
        v = dict(self.values)
        return SystemParams(v["noise_power"], v["primary_power"], v["frame_len"],
                            v["sense_len"], v["circuit_power"], v["symbol_rate"])

    def sensing_spec(self) -> SensingSpec:
        v = dict(self.values)
        return SensingSpec(v["p_detect"], v["p_false_alarm"], v["prior_idle"], v["prior_busy"])

    def constraints(self) -> Constraints:
        v = dict(self.values)
        if v["regime"] == "avg":
            return Constraints.average(v.get("p_avg", v["p_limit"]), v["q_avg"])
        return Constraints.peak(v.get("p_peak_idle", v["p_limit"]), v["q_avg"],
                                v.get("p_peak_busy", v["p_limit"]))

    def fading_config(self) -> FadingConfig:
        v = dict(self.values)
        return FadingConfig(v["mean_gain_h"], v["mean_gain_g"], v["n_samples"], v["seed"])

    def solver_config(self) -> SolverConfig:
        v = dict(self.values)
        return SolverConfig(v["tolerance"], v["step_size"], v["max_outer_iters"],
                            v["max_inner_iters"], v["alpha_init"], v["lambda_init"],
                            v["nu_init"], v["step_rule"])


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return repr(float(x))


def _fmt_db(x) -> str:
    db = linear_to_db(x)
    return "-inf" if db == -math.inf else f"{db:.6g}"


@dataclass
class Table:
    """CSV-ready result: metadata lines, header and rows of preformatted cells."""

    columns: Sequence[str]
    rows: List[List[str]]
    meta: List[str]
    results: Optional[list] = None

    @property
    def all_converged(self) -> bool:
        if "converged" not in self.columns:
            return True
        i = list(self.columns).index("converged")
        return all(row[i] == "true" for row in self.rows)

    def column(self, name) -> List[str]:
        i = list(self.columns).index(name)
        return [row[i] for row in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        for line in self.meta:
            buf.write(f"# {line}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def write(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def _meta(cfg: ExperimentConfig):
    lines = [f"seed = {cfg['seed']}"]
    lines += [f"config {k} = {v}" for k, v in cfg.raw if k != "workers"]
    return lines


def _solve_row(cfg: ExperimentConfig, result: SolveResult):
    spec = cfg.sensing_spec()
    cons = cfg.constraints()
    bd = result.breakdown
    return [_fmt(spec.p_detect), _fmt(spec.p_false_alarm), _fmt_db(cons.transmit_limit),
            _fmt_db(cons.q_avg), cons.regime.value, _fmt(result.ee_opt), _fmt(bd.rate),
            _fmt(bd.avg_tx_power), _fmt(bd.avg_interference), _fmt(result.converged),
            _fmt(result.mean_p_idle), _fmt(result.mean_p_busy)]


def _solve_config(cfg: ExperimentConfig) -> SolveResult:
    return solve(cfg.system_params(), cfg.sensing_spec(), cfg.constraints(),
                 cfg.fading_config(), cfg.solver_config())


def run_solve(cfg: ExperimentConfig) -> Table:
    """One solve; the table holds a single row and ``results[0]`` is the
    :class:`SolveResult` (its trace is exported with ``write_trace_csv``)."""
    result = _solve_config(cfg)
    return Table(SOLVE_COLUMNS, [_solve_row(cfg, result)], _meta(cfg), [result])


def run_sweep(cfg: ExperimentConfig, workers: Optional[int] = None) -> Table:
    """Independent solves for each sweep value, rows in sweep order."""
    param = cfg["sweep_param"]
    points = [cfg.with_value(param, value) for value in cfg.sweep_values()]
    workers = cfg["workers"] if workers is None else workers
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(points))) as pool:
            results = list(pool.map(_solve_config, points))
    else:
        results = [_solve_config(p) for p in points]
    rows = [[_fmt(value)] + _solve_row(p, r)
            for value, p, r in zip(cfg.sweep_values(), points, results)]
    meta = _meta(cfg) + [f"sweep_param = {param}"]
    return Table((param,) + SOLVE_COLUMNS, rows, meta, results)


def run_validate_bound(cfg: ExperimentConfig) -> Table:
    """Lower-bound vs Monte Carlo exact rate at a fixed link gain, sweeping a
    common power ``P0 = P1`` over a geometric grid."""
    params = cfg.system_params()
    probs = branch_probs(cfg.sensing_spec())
    gain_h = cfg["gain_h"]
    single = ChannelSampleSet.single(gain_h)
    powers = np.geomspace(cfg["power_min"], cfg["power_max"], cfg["n_points"])
    seeds = np.random.SeedSequence(int(cfg["seed"])).generate_state(len(powers), dtype=np.uint64)
    rows = []
    for p, seed in zip(powers.tolist(), seeds.tolist()):
        lb = rate_lower_bound(params, probs, single, PowerPolicy.constant(1, p))
        est = exact_rate_mc(params, probs, gain_h, p, p, cfg["n_mc"], int(seed))
        total = p + params.circuit_power
        rows.append([_fmt(p), _fmt(lb), _fmt(est.value), _fmt(est.stderr),
                     _fmt(lb / total), _fmt(est.value / total)])
    return Table(BOUND_COLUMNS, rows, _meta(cfg))


def run(cfg: ExperimentConfig) -> Table:
    kind = cfg["kind"]
    if kind == "solve":
        return run_solve(cfg)
    if kind == "sweep":
        return run_sweep(cfg)
    return run_validate_bound(cfg)
