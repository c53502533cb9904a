"""Experiment registry: JSON configs in, CSV tables out.

A config is a JSON object::

    {"schema_version": 1, "experiment": "kld-vs-alpha", "seed": 0,
     "output": "kld.csv", "params": {...}}

``params`` is merged over the experiment's defaults. Grids accept a list of
values or ``{"start": a, "stop": b, "num": n}`` (inclusive linspace).
"""

from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .attack import (
    ChannelMatrix,
    ExistenceConditionError,
    SingularChannelError,
    blind_fraction,
    min_feasible_alpha,
    noisy_channel_attack,
    optimal_attack,
    symmetric_attack,
)
from .fusion import NetworkConfig, simulate_detection, simulate_estimation
from .metrics import DetectionScenario, EstimationScenario, detection_kld, estimation_fisher
from .model import GaussianObservationModel, make_uniform_quantizer
from .reputation import (
    EstimationFusion,
    TypeConditionalModel,
    UniformPrior,
    asymptotic_threshold,
    deviation_moments,
    midpoint_threshold,
    run_identification,
)

SCHEMA_VERSION = 1

__all__ = [
    "SCHEMA_VERSION",
    "EXPERIMENTS",
    "ConfigError",
    "ResultTable",
    "load_config",
    "validate",
    "run",
    "format_number",
]


class ConfigError(ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("; ".join(self.diagnostics))


def format_number(x) -> str:
    """Shortest round-trip text for a CSV cell."""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


@dataclass
class ResultTable:
    columns: list
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"row has {len(values)} values, table has {len(self.columns)} columns")
        self.rows.append(values)

    def column(self, name) -> np.ndarray:
        k = self.columns.index(name)
        return np.array([r[k] for r in self.rows], dtype=float)

    def to_csv(self) -> str:
        out = io.StringIO()
        for key, value in self.metadata.items():
            text = value if isinstance(value, str) else json.dumps(value, sort_keys=True)
            out.write(f"# {key}: {text}\n")
        out.write(",".join(self.columns) + "\n")
        for row in self.rows:
            out.write(",".join(format_number(v) for v in row) + "\n")
        return out.getvalue()

    def write(self, path):
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


# --------------------------------------------------------------------------
# parameter helpers


def _grid(spec) -> list:
    if isinstance(spec, dict):
        return [float(v) for v in np.linspace(spec["start"], spec["stop"], int(spec["num"]))]
    if isinstance(spec, (int, float)):
        return [float(spec)]
    return [float(v) for v in spec]


class _Checker:
    def __init__(self, params):
        self.params = params
        self.diagnostics = []

    def error(self, path, msg):
        self.diagnostics.append(f"params.{path}: {msg}")

    def number(self, name, lo=None, hi=None, lo_open=False, integer=False):
        v = self.params.get(name)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            self.error(name, f"expected a number, got {v!r}")
            return None
        if integer and int(v) != v:
            self.error(name, f"expected an integer, got {v!r}")
            return None
        if lo is not None and (v < lo or (lo_open and v == lo)):
            self.error(name, f"{v!r} must be {'>' if lo_open else '>='} {lo}")
        if hi is not None and v > hi:
            self.error(name, f"{v!r} must be <= {hi}")
        return v

    def ints(self, name, lo):
        v = self.params.get(name)
        vals = v if isinstance(v, list) else [v]
        if not vals:
            self.error(name, "must be non-empty")
            return []
        for k, x in enumerate(vals):
            if isinstance(x, bool) or not isinstance(x, int) or x < lo:
                self.error(f"{name}[{k}]" if isinstance(v, list) else name, f"expected an integer >= {lo}, got {x!r}")
        return [x for x in vals if isinstance(x, int) and not isinstance(x, bool)]

    def grid(self, name, lo=None, hi=None, lo_open=False):
        spec = self.params.get(name)
        try:
            g = _grid(spec)
        except (TypeError, KeyError, ValueError):
            self.error(name, f"expected a list of numbers or {{start, stop, num}}, got {spec!r}")
            return []
        if not g:
            self.error(name, "grid must be non-empty")
        for k, x in enumerate(g):
            if not math.isfinite(x):
                self.error(f"{name}[{k}]", f"{x!r} is not finite")
            elif lo is not None and (x < lo or (lo_open and x == lo)):
                self.error(f"{name}[{k}]", f"{x!r} must be {'>' if lo_open else '>='} {lo}")
            elif hi is not None and x > hi:
                self.error(f"{name}[{k}]", f"{x!r} must be <= {hi}")
        return g

    def flip_p(self, name, Ms):
        v = self.params.get(name)
        if v == "worst-case":
            return
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.error(name, f"expected a number or \"worst-case\", got {v!r}")
            return
        if v < 0:
            self.error(name, f"{v!r} must be >= 0")
        for M in Ms:
            if M >= 2 and v > 1.0 / (M - 1) + 1e-15:
                self.error(name, f"{v!r} exceeds the bound 1/(M-1) = {1.0 / (M - 1):.6g} for M = {M}")

    def priors(self, name="priors"):
        v = self.params.get(name)
        ok = (
            isinstance(v, list) and len(v) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) and x >= 0 for x in v)
            and abs(sum(v) - 1.0) <= 1e-12
        )
        if not ok:
            self.error(name, f"expected two nonnegative probabilities summing to 1, got {v!r}")

    def choice(self, name, options):
        v = self.params.get(name)
        if v not in options:
            self.error(name, f"expected one of {sorted(map(str, options))}, got {v!r}")


def _flip(M, p):
    return optimal_attack(M) if p == "worst-case" else symmetric_attack(M, p)


def _p_value(M, p):
    return 1.0 / (M - 1) if p == "worst-case" else float(p)


def _alpha_grid(params, M):
    g = _grid(params["alpha"])
    if params.get("include_blind_points", False):
        g = sorted(set(g) | {blind_fraction(M)})
    return g


# --------------------------------------------------------------------------
# experiments


@dataclass(frozen=True)
class Experiment:
    name: str
    target: str
    description: str
    defaults: dict
    check: object
    build: object


def _check_alpha_blind_table(c):
    c.ints("bits", 1)


def _run_alpha_blind_table(params, seed):
    t = ResultTable(["bits", "M", "alpha_blind"])
    for b in params["bits"]:
        M = 2**b
        t.add(b, M, blind_fraction(M))
    return t


def _check_kld(c):
    Ms = c.ints("M", 2)
    c.number("A", lo=0, lo_open=True)
    c.number("mu", lo=0, lo_open=True)
    c.number("sigma", lo=0, lo_open=True)
    c.grid("alpha", 0.0, 1.0)
    c.flip_p("p", Ms)


def _run_kld(params, seed):
    t = ResultTable(["M", "alpha", "p", "D_FC"])
    for M in params["M"]:
        q = make_uniform_quantizer(M, params["A"])
        s = DetectionScenario.gaussian(q, mu=params["mu"], sigma=params["sigma"])
        P = _flip(M, params["p"])
        for a in _alpha_grid(params, M):
            t.add(M, a, _p_value(M, params["p"]), detection_kld(s, P, a))
    return t


def _check_fi(c):
    Ms = c.ints("M", 2)
    c.number("A", lo=0, lo_open=True)
    c.grid("sigma", 0.0, lo_open=True)
    c.grid("theta")
    c.grid("alpha", 0.0, 1.0)
    c.flip_p("p", Ms)


def _run_fi(params, seed):
    t = ResultTable(["theta", "sigma", "M", "alpha", "p", "J_FC"])
    for theta in _grid(params["theta"]):
        for sigma in _grid(params["sigma"]):
            for M in params["M"]:
                q = make_uniform_quantizer(M, params["A"])
                s = EstimationScenario.gaussian(q, sigma=sigma, theta=theta)
                P = _flip(M, params["p"])
                for a in _alpha_grid(params, M):
                    t.add(theta, sigma, M, a, _p_value(M, params["p"]), estimation_fisher(s, P, a))
    return t


def _check_eta(c):
    c.ints("M", 2)
    N = c.number("N", lo=2, integer=True)
    c.number("A", lo=0, lo_open=True)
    c.number("sigma", lo=0, lo_open=True)
    c.number("xi", lo=0, hi=1, lo_open=True)
    if c.params.get("xi") == 1:
        c.error("xi", "must be < 1")
    c.number("T", lo=1, integer=True)
    c.number("num", lo=3, integer=True)
    c.choice("divisor", ["N", "M"])
    pr = c.params.get("prior")
    if not (isinstance(pr, list) and len(pr) == 2 and all(isinstance(x, (int, float)) for x in pr) and pr[1] > pr[0]):
        c.error("prior", f"expected [lo, hi] with hi > lo, got {pr!r}")


def _eta_alpha_max(M, N):
    # pi_BH = N alpha / (N - 1) must stay a probability
    return min(blind_fraction(M), (N - 1) / N)


def _run_eta(params, seed):
    t = ResultTable(["M", "alpha", "mu_H", "sigma_H", "eta"])
    N, T, xi = params["N"], params["T"], params["xi"]
    fusion = EstimationFusion(params["divisor"])
    model = GaussianObservationModel.location(params["sigma"])
    prior = UniformPrior(*params["prior"])
    for M in params["M"]:
        q = make_uniform_quantizer(M, params["A"])
        P = optimal_attack(M)
        for a in np.linspace(0.0, _eta_alpha_max(M, N), params["num"]):
            m = TypeConditionalModel(N, float(a), P, q, model, prior)
            mu, var = deviation_moments(m, fusion)
            t.add(M, float(a), mu, math.sqrt(var / T), asymptotic_threshold(m, fusion, xi, T))
    return t


def _check_identification(c):
    Ms = c.ints("M", 2)
    c.number("N", lo=1, integer=True)
    c.number("alpha", 0.0, 1.0)
    c.number("A", lo=0, lo_open=True)
    c.number("mu", lo=0, lo_open=True)
    c.number("sigma", lo=0, lo_open=True)
    c.priors()
    c.number("T", lo=1, integer=True)
    c.number("seeds", lo=1, integer=True)
    c.flip_p("p", Ms)
    eta = c.params.get("eta")
    if eta != "midpoint":
        c.number("eta", lo=0, lo_open=True)


def identification_curves(params, seed):
    """Seed-averaged identification series per M: ``{M: (eta, identified, honest, byzantine)}``."""
    out = {}
    for M in params["M"]:
        q = make_uniform_quantizer(M, params["A"])
        s = DetectionScenario.gaussian(q, mu=params["mu"], sigma=params["sigma"], priors=params["priors"])
        P = _flip(M, params["p"])
        series = []
        for k in range(params["seeds"]):
            cfg = NetworkConfig(params["N"], params["alpha"], P, q, seed + k)
            eta = midpoint_threshold(s, cfg) if params["eta"] == "midpoint" else params["eta"]
            series.append(run_identification(s, cfg, eta, params["T"]))
        out[M] = (
            series[0].eta,
            np.mean([x.identified for x in series], axis=0),
            np.mean([x.honest_mislabel for x in series], axis=0),
            np.mean([x.byzantine_mislabel for x in series], axis=0),
        )
    return out


def _run_identification(params, seed):
    t = ResultTable(["M", "t", "eta", "identified", "honest_mislabel", "byzantine_mislabel"])
    for M, (eta, ident, hon, byz) in identification_curves(params, seed).items():
        for step in range(params["T"]):
            t.add(M, step + 1, eta, float(ident[step]), float(hon[step]), float(byz[step]))
    return t


def _check_noisy(c):
    chans = c.params.get("channels")
    if not isinstance(chans, list) or not chans:
        c.error("channels", "expected a non-empty list of square matrices")
        return
    for k, Q in enumerate(chans):
        try:
            ChannelMatrix(Q)
        except (ValueError, TypeError) as exc:
            c.error(f"channels[{k}]", str(exc))


def _run_noisy(params, seed):
    t = ResultTable(["channel", "M", "alpha_blind", "feasible", "min_feasible_alpha", "row", "col", "p"])
    for k, Q in enumerate(params["channels"]):
        Q = ChannelMatrix(Q)
        try:
            sol = noisy_channel_attack(Q)
        except (ExistenceConditionError, SingularChannelError):
            t.add(k, Q.M, math.nan, False, math.nan, 0, 0, math.nan)
            continue
        lo = min_feasible_alpha(Q)
        for r in range(Q.M):
            for col in range(Q.M):
                t.add(k, Q.M, sol.alpha_blind, sol.feasible, lo, r + 1, col + 1, float(sol.matrix[r, col]))
    return t


def _check_detection_error(c):
    Ms = c.ints("M", 2)
    c.ints("N", 1)
    c.grid("alpha", 0.0, 1.0)
    c.number("A", lo=0, lo_open=True)
    c.number("mu", lo=0, lo_open=True)
    c.number("sigma", lo=0, lo_open=True)
    c.priors()
    c.number("trials", lo=1, integer=True)
    c.flip_p("p", Ms)
    if not isinstance(c.params.get("attack_aware"), bool):
        c.error("attack_aware", "expected true or false")


def _run_detection_error(params, seed):
    t = ResultTable(["M", "N", "alpha", "p_miss", "p_false_alarm", "p_error", "p_error_lo", "p_error_hi"])
    for M in params["M"]:
        q = make_uniform_quantizer(M, params["A"])
        s = DetectionScenario.gaussian(q, mu=params["mu"], sigma=params["sigma"], priors=params["priors"])
        P = _flip(M, params["p"])
        for N in params["N"]:
            for a in _grid(params["alpha"]):
                cfg = NetworkConfig(N, a, P, q, seed)
                r = simulate_detection(s, cfg, params["trials"], attack_aware=params["attack_aware"])
                t.add(M, N, a, r.p_miss, r.p_false_alarm, r.p_error, *r.ci_error)
    return t


def _check_estimation_mse(c):
    Ms = c.ints("M", 2)
    c.ints("N", 1)
    c.grid("alpha", 0.0, 1.0)
    c.number("A", lo=0, lo_open=True)
    c.number("sigma", lo=0, lo_open=True)
    c.number("theta")
    c.number("trials", lo=2, integer=True)
    c.flip_p("p", Ms)
    c.choice("divisor", ["N", "M"])


def _run_estimation_mse(params, seed):
    t = ResultTable(["M", "N", "alpha", "mse", "stderr", "mean_estimate"])
    for M in params["M"]:
        q = make_uniform_quantizer(M, params["A"])
        s = EstimationScenario.gaussian(q, sigma=params["sigma"], theta=params["theta"])
        P = _flip(M, params["p"])
        for N in params["N"]:
            for a in _grid(params["alpha"]):
                cfg = NetworkConfig(N, a, P, q, seed)
                r = simulate_estimation(s, cfg, params["trials"], divisor=params["divisor"])
                t.add(M, N, a, r.mse, r.stderr, r.mean_estimate)
    return t


_ALPHA_01 = {"start": 0.0, "stop": 1.0, "num": 101}

EXPERIMENTS = {
    e.name: e
    for e in [
        Experiment(
            "alpha-blind-table", "Table I", "blinding fraction versus quantization bits",
            {"bits": [1, 2, 3, 4, 5, 6, 7, 8]},
            _check_alpha_blind_table, _run_alpha_blind_table,
        ),
        Experiment(
            "kld-vs-alpha", "Fig. 3", "per-sensor KLD at the FC versus alpha (nats)",
            {"M": [2, 4, 8, 16], "A": 2.0, "mu": 1.0, "sigma": 1.0, "alpha": _ALPHA_01,
             "p": "worst-case", "include_blind_points": True},
            _check_kld, _run_kld,
        ),
        Experiment(
            "fi-vs-alpha", "Fig. 4", "per-sensor conditional Fisher information versus alpha",
            {"M": [2, 4, 8, 16], "A": 2.0, "sigma": [1.0, 0.01], "theta": [0.0, 1.0], "alpha": _ALPHA_01,
             "p": "worst-case", "include_blind_points": True},
            _check_fi, _run_fi,
        ),
        Experiment(
            "eta-vs-alpha", "Fig. 5", "asymptotic tagging threshold versus alpha",
            {"M": [2, 3, 4, 5, 6, 7], "N": 5, "A": 2.0, "sigma": 1.0, "xi": 0.01, "T": 1,
             "num": 50, "divisor": "M", "prior": [0.0, 1.0]},
            _check_eta, _run_eta,
        ),
        Experiment(
            "identification", "Figs. 6-8", "seed-averaged Byzantine identification over time",
            {"M": [2, 4, 8, 16], "N": 100, "alpha": 0.2, "A": 2.0, "mu": 1.0, "sigma": 1.0,
             "priors": [0.5, 0.5], "T": 300, "seeds": 20, "p": "worst-case", "eta": "midpoint"},
            _check_identification, _run_identification,
        ),
        Experiment(
            "noisy-channel", "Appendix A (no figure)", "blinding attack through a noisy FC channel",
            {"channels": [[[1.0, 0.0], [0.0, 1.0]], [[0.9, 0.1], [0.1, 0.9]], [[0.8, 0.2], [0.3, 0.7]]]},
            _check_noisy, _run_noisy,
        ),
        Experiment(
            "detection-error", "Fig. 3 (operational counterpart)", "Monte Carlo error rates of MAP fusion under attack",
            {"M": [2, 4], "N": [10, 50, 100], "alpha": [0.0, 0.2, 0.4], "A": 2.0, "mu": 1.0,
             "sigma": 1.0, "priors": [0.5, 0.5], "trials": 10000, "p": "worst-case", "attack_aware": False},
            _check_detection_error, _run_detection_error,
        ),
        Experiment(
            "estimation-mse", "Fig. 4 (operational counterpart)", "Monte Carlo MSE of centroid fusion",
            {"M": [2, 16], "N": [100], "alpha": [0.0, 0.2, 0.4], "A": 2.0, "sigma": 1.0, "theta": 1.0,
             "trials": 2000, "p": "worst-case", "divisor": "N"},
            _check_estimation_mse, _run_estimation_mse,
        ),
    ]
}


# --------------------------------------------------------------------------
# config handling


def load_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"<document>: invalid JSON: {exc}"]) from exc


def _resolved(config: dict):
    exp = EXPERIMENTS[config["experiment"]]
    params = dict(exp.defaults)
    params.update(config.get("params", {}))
    return exp, params


def validate(config) -> list:
    """All constraint violations of ``config``; empty when it is runnable."""
    diags = []
    if not isinstance(config, dict):
        return ["<document>: expected a JSON object"]
    allowed = {"schema_version", "experiment", "seed", "output", "params"}
    for key in sorted(set(config) - allowed):
        diags.append(f"{key}: unknown field")
    if config.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        diags.append(f"schema_version: unsupported version {config.get('schema_version')!r}, expected {SCHEMA_VERSION}")
    name = config.get("experiment")
    if name not in EXPERIMENTS:
        diags.append(f"experiment: unknown id {name!r}; expected one of {sorted(EXPERIMENTS)}")
        return diags
    seed = config.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        diags.append(f"seed: expected a 64-bit unsigned integer, got {seed!r}")
    if "output" in config and not isinstance(config["output"], str):
        diags.append("output: expected a file path string")
    params = config.get("params", {})
    if not isinstance(params, dict):
        diags.append("params: expected an object")
        return diags
    exp, merged = _resolved(config)
    for key in sorted(set(params) - set(exp.defaults)):
        diags.append(f"params.{key}: unknown parameter for {name}")
    checker = _Checker(merged)
    exp.check(checker)
    return diags + checker.diagnostics


def run(config: dict, seed: int | None = None) -> ResultTable:
    diags = validate(config)
    if diags:
        raise ConfigError(diags)
    exp, params = _resolved(config)
    seed = config.get("seed", 0) if seed is None else seed
    table = exp.build(params, seed)
    table.metadata = {
        "experiment": exp.name,
        "target": exp.target,
        "description": exp.description,
        "seed": str(seed),
        "version": __version__,
        "params": params,
    }
    return table
