"""Command line front door: `auctionlab <command> [--config PATH] [--seed N] [--out PATH]`.

Each command reads a JSON config whose keys are checked against a fixed
schema, fills defaults, runs, and writes CSV or JSON to --out or stdout.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from typing import Any

import numpy as np

from .acceptance import CANONICAL, CRITERIA, Context, run
from .dist import dist_from_spec
from .errors import AcceptanceFailure, AuctionLabError, ConfigInvalid
from .game import TwoStageProcess, critical_alpha, nash_report, best_response
from .mech import compare_all
from .seller import erm_theorem5_experiment, summarize_erm

SEED_ENV = "AUCTIONLAB_SEED"
UNIFORM = {"family": "uniform", "params": {"low": 0.0, "high": 1.0}}

BEST_RESPONSE_COLUMNS = ("phase1_reserve", "alpha", "x0_star", "x1_star", "u1", "u2", "u_total", "m1", "m2")
ERM_COLUMNS = ("n", "trial", "eps", "delta", "delta1", "x_hat", "x_max", "c_n", "bound", "hit")
MECHANISM_COLUMNS = ("mechanism", "u_truthful", "u_threshold", "uplift_abs", "uplift_rel")


def fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def write_csv(columns, rows, trailer: list[str] = ()) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    for line in trailer:
        buf.write(line + "\n")
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(type(o).__name__)


def write_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


# config schemas

def _law_spec(spec) -> dict:
    """Normalize a distribution spec by a parse and serialize pass."""
    return dist_from_spec(spec).to_spec()


def _reserve_spec(spec):
    if spec is None or spec == "none":
        return "none"
    return _law_spec(spec)


def _as_int(v, name: str, minimum: int = 0) -> int:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v or v < minimum:
        raise ConfigInvalid(f"{name} must be an integer >= {minimum}, got {v!r}")
    return int(v)


def _as_float(v, name: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigInvalid(f"{name} must be a number, got {v!r}")
    return float(v)


class Config:
    """Strict JSON-backed record: unknown keys are rejected, defaults filled."""

    @classmethod
    def from_dict(cls, d: dict) -> "Config":
        if not isinstance(d, dict):
            raise ConfigInvalid(f"config must be a JSON object, got {type(d).__name__}")
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigInvalid(f"unknown config keys for {cls.__name__}: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigInvalid(str(exc)) from exc

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BestResponseConfig(Config):
    value_law: dict = field(default_factory=lambda: dict(UNIFORM))
    competition: dict | None = None
    phase1_reserves: list = field(default_factory=lambda: ["none", dict(UNIFORM)])
    alphas: list = field(default_factory=lambda: [round(a, 12) for a in np.linspace(0, 1, 11)])
    search_grid: int = 200

    def __post_init__(self):
        self.value_law = _law_spec(self.value_law)
        self.competition = None if self.competition is None else _law_spec(self.competition)
        if not isinstance(self.phase1_reserves, list) or not self.phase1_reserves:
            raise ConfigInvalid("phase1_reserves must be a nonempty list")
        self.phase1_reserves = [_reserve_spec(h) for h in self.phase1_reserves]
        if not isinstance(self.alphas, list) or not self.alphas:
            raise ConfigInvalid("alphas must be a nonempty list")
        self.alphas = [_as_float(a, "alpha") for a in self.alphas]
        if any(not 0 <= a <= 1 for a in self.alphas):
            raise ConfigInvalid("alphas must lie in [0, 1]")
        self.search_grid = _as_int(self.search_grid, "search_grid", 2)


@dataclass
class NashConfig(Config):
    value_law: dict = field(default_factory=lambda: dict(UNIFORM))
    k: list = field(default_factory=lambda: [2, 3, 4, 5])

    def __post_init__(self):
        self.value_law = _law_spec(self.value_law)
        ks = self.k if isinstance(self.k, list) else [self.k]
        if not ks:
            raise ConfigInvalid("k must be nonempty")
        self.k = [_as_int(k, "k", 2) for k in ks]


@dataclass
class PhaseConfig(Config):
    value_law: dict = field(default_factory=lambda: dict(UNIFORM))
    competition: dict | None = None

    def __post_init__(self):
        self.value_law = _law_spec(self.value_law)
        self.competition = None if self.competition is None else _law_spec(self.competition)


@dataclass
class ErmConfig(Config):
    value_law: dict = field(default_factory=lambda: dict(UNIFORM))
    r: float = 0.5
    eta: float = 0.1
    n_grid: list = field(default_factory=lambda: [1000, 10000, 100000])
    delta: float = 0.05
    trials: int = 200
    seed: int | None = None
    eps_override: float | None = None

    def __post_init__(self):
        self.value_law = _law_spec(self.value_law)
        self.r = _as_float(self.r, "r")
        self.eta = _as_float(self.eta, "eta")
        if not isinstance(self.n_grid, list) or not self.n_grid:
            raise ConfigInvalid("n_grid must be a nonempty list")
        self.n_grid = [_as_int(n, "n", 1) for n in self.n_grid]
        self.delta = _as_float(self.delta, "delta")
        if not 0 < self.delta < 1:
            raise ConfigInvalid("delta must lie in (0, 1)")
        self.trials = _as_int(self.trials, "trials", 1)
        self.seed = None if self.seed is None else _as_int(self.seed, "seed")
        self.eps_override = None if self.eps_override is None else _as_float(self.eps_override, "eps_override")


@dataclass
class MechanismsConfig(Config):
    value_law: dict = field(default_factory=lambda: dict(UNIFORM))
    k: int = 2
    threshold: bool = True

    def __post_init__(self):
        self.value_law = _law_spec(self.value_law)
        self.k = _as_int(self.k, "k", 2)
        if not isinstance(self.threshold, bool):
            raise ConfigInvalid("threshold must be true or false")


@dataclass
class VerifyConfig(Config):
    only: list | None = None
    tol_scale: float = 1.0
    n_mc: int = 10**6
    seed: int | None = None
    canonical: list = field(default_factory=lambda: list(CANONICAL))

    def __post_init__(self):
        if self.only is not None:
            if not isinstance(self.only, list):
                raise ConfigInvalid("only must be a list of criterion numbers")
            self.only = [_as_int(i, "criterion", 1) for i in self.only]
            bad = [i for i in self.only if i not in CRITERIA]
            if bad:
                raise ConfigInvalid(f"unknown criteria {bad}")
        self.tol_scale = _as_float(self.tol_scale, "tol_scale")
        if self.tol_scale < 0:
            raise ConfigInvalid("tol_scale must be nonnegative")
        self.n_mc = _as_int(self.n_mc, "n_mc", 2)
        self.seed = None if self.seed is None else _as_int(self.seed, "seed")
        if not isinstance(self.canonical, list):
            raise ConfigInvalid("canonical must be a list")
        bad = [c for c in self.canonical if c not in CANONICAL]
        if bad:
            raise ConfigInvalid(f"unknown canonical configurations {bad}")


CONFIGS = {
    "best-response": BestResponseConfig,
    "nash": NashConfig,
    "phase": PhaseConfig,
    "erm": ErmConfig,
    "mechanisms": MechanismsConfig,
    "verify": VerifyConfig,
}


def load_config(command: str, path: str | None) -> Config:
    if path is None:
        return CONFIGS[command]()
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    return CONFIGS[command].from_dict(data)


def resolve_seed(flag: int | None, config_seed: int | None) -> int:
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return _as_int(int(env), SEED_ENV)
        except ValueError as exc:
            raise ConfigInvalid(f"{SEED_ENV} must be a nonnegative integer, got {env!r}") from exc
    return 0 if config_seed is None else config_seed


# commands

def cmd_best_response(c: BestResponseConfig, seed: int) -> str:
    F = dist_from_spec(c.value_law)
    G = F if c.competition is None else dist_from_spec(c.competition)
    rows = []
    for h in c.phase1_reserves:
        H = None if h == "none" else dist_from_spec(h)
        label = "none" if H is None else h["family"]
        for a in c.alphas:
            x0, x1, br = best_response(TwoStageProcess(G, H, F, a), grid=c.search_grid)
            rows.append((label, a, x0, x1, br.u1, br.u2, br.u_total, br.m1, br.m2))
    return write_csv(BEST_RESPONSE_COLUMNS, rows)


def cmd_nash(c: NashConfig, seed: int) -> str:
    F = dist_from_spec(c.value_law)
    reports = []
    for k in c.k:
        r = nash_report(k, F)
        d = asdict(r)
        d["revenue_equivalent"] = r.revenue_equivalent
        d["utility_equivalent"] = r.utility_equivalent
        reports.append(d)
    return write_json({"value_law": c.value_law, "reports": reports})


def cmd_phase(c: PhaseConfig, seed: int) -> str:
    F = dist_from_spec(c.value_law)
    G = F if c.competition is None else dist_from_spec(c.competition)
    rep = critical_alpha(TwoStageProcess(G, None, F, 0.0))
    d = asdict(rep)
    d["utilities_agree"] = abs(rep.u_truthful_at_alpha_c - rep.u_threshold_at_alpha_c) <= 1e-8
    return write_json(d)


def cmd_erm(c: ErmConfig, seed: int) -> str:
    F = dist_from_spec(c.value_law)
    reps = erm_theorem5_experiment(F, c.r, c.eta, c.n_grid, c.delta, c.trials, seed,
                                   eps_override=c.eps_override)
    rows = [tuple(getattr(r, k) for k in ERM_COLUMNS) for r in reps]
    summary = summarize_erm(reps)
    trailer = [
        "# summary n={n} hit_rate={h} required={q} delta1={d1} median_x_hat={m}".format(
            n=s["n"], h=fmt(s["hit_rate"]), q=fmt(1 - s["delta"] - s["delta1"]),
            d1=fmt(s["delta1"]), m=fmt(s["median_x_hat"]))
        for s in summary
    ]
    overall = float(np.mean([r.hit for r in reps]))
    trailer.append(f"# summary all hit_rate={fmt(overall)} trials={len(reps)}")
    return write_csv(ERM_COLUMNS, rows, trailer)


def cmd_mechanisms(c: MechanismsConfig, seed: int) -> str:
    F = dist_from_spec(c.value_law)
    rows = [tuple(getattr(m, k) for k in MECHANISM_COLUMNS) for m in compare_all(c.k, F, c.threshold)]
    return write_csv(MECHANISM_COLUMNS, rows)


def cmd_verify(c: VerifyConfig, seed: int) -> str:
    ctx = Context(tol_scale=c.tol_scale, n_mc=c.n_mc, seed=seed, canonical=tuple(c.canonical))
    results = run(c.only, ctx)
    lines = [r.line() for r in results]
    failed = [r.cid for r in results if r.passed is False]
    lines.append(f"{len(results) - len(failed)}/{len(results)} criteria without failure"
                 + (f"; failed: {failed}" if failed else ""))
    text = "\n".join(lines) + "\n"
    if failed:
        raise AcceptanceFailure(text)
    return text


COMMANDS = {
    "best-response": cmd_best_response,
    "nash": cmd_nash,
    "phase": cmd_phase,
    "erm": cmd_erm,
    "mechanisms": cmd_mechanisms,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="auctionlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", metavar="PATH")
        sp.add_argument("--seed", type=int, metavar="U64")
        sp.add_argument("--out", metavar="PATH")
        sp.add_argument("--grid", type=int, metavar="N",
                        help="best-response: number of alpha points on [0, 1]")
        if name == "verify":
            sp.add_argument("--only", metavar="IDS", help="comma-separated criterion numbers")
    return ap


def _apply_flags(cmd: str, cfg: Config, args) -> Config:
    if args.grid is not None:
        if cmd != "best-response":
            raise ConfigInvalid("--grid only applies to best-response")
        if args.grid < 1:
            raise ConfigInvalid("--grid must be at least 1")
        cfg.alphas = [round(float(a), 12) for a in np.linspace(0, 1, args.grid)] if args.grid > 1 else [0.0]
    if getattr(args, "only", None):
        try:
            ids = [int(t) for t in args.only.split(",") if t.strip()]
        except ValueError as exc:
            raise ConfigInvalid(f"--only expects numbers, got {args.only!r}") from exc
        cfg = VerifyConfig.from_dict({**cfg.to_dict(), "only": ids})
    if args.seed is not None and args.seed < 0:
        raise ConfigInvalid("--seed must be nonnegative")
    return cfg


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else ConfigInvalid.exit_code
    status = 0
    try:
        cfg = _apply_flags(args.command, load_config(args.command, args.config), args)
        seed = resolve_seed(args.seed, getattr(cfg, "seed", None))
        try:
            text = COMMANDS[args.command](cfg, seed)
        except AcceptanceFailure as exc:
            text, status = str(exc), AcceptanceFailure.exit_code
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except AuctionLabError as exc:
        print(f"auctionlab {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"auctionlab {args.command}: {exc}", file=sys.stderr)
        return ConfigInvalid.exit_code
    return status


if __name__ == "__main__":
    sys.exit(main())
