"""Command-line interface.

Usage:
    beaconsim <kind> --config <path> [--set SECTION.KEY=VALUE]...
              [--out <path>] [--format csv|json] [--threads N]

Kinds: miss-sweep, joint-sweep, diversity, capacity-ergodic,
capacity-outage, imperfect, throughput, multiuser, selfcheck.

The configuration file uses INI syntax ([section], key = value, comments
with '#').  Values are parsed as Python literals where possible (numbers,
quoted strings, lists); anything else is kept as a plain string.  The
--set flag overrides single keys after the file is read.

Exit codes: 0 success, 2 configuration error, 3 numeric error during
estimation, 4 input/output error.  Output is deterministic: the same
configuration and seed produce byte-identical files regardless of thread
count.
"""

from __future__ import annotations

import argparse
import ast
import configparser
import csv
import io
import json
import sys

import numpy as np

from .analysis import (
    SweepSpec,
    estimate_diversity,
    estimate_joint_success_curve,
    estimate_miss_curve,
)
from .capacity import (
    ActivityModel,
    OverheadParams,
    ergodic_capacity,
    imperfect_capacity,
    outage_capacity,
    relative_capacity_loss,
    throughput_loss_bound,
    throughput_loss_mc,
    wrong_relay_bound,
    wrong_relay_probability_mc,
)
from .channel import MeanGains, MultiuserMeans
from .protocols import Scheme, split_channel_uses

KINDS = (
    "miss-sweep",
    "joint-sweep",
    "diversity",
    "capacity-ergodic",
    "capacity-outage",
    "imperfect",
    "throughput",
    "multiuser",
    "selfcheck",
)

_SELFCHECK_SEED = 20240601


class ConfigError(Exception):
    """Problem with the provided configuration."""


# ---------------------------------------------------------------------------
# Configuration loading
# ---------------------------------------------------------------------------

_RUN = {("run", "seed"), ("run", "n_trials"), ("run", "chunk")}
_CHANNEL = {("channel", k) for k in ("pt", "pr", "tr")}
_PROTOCOL = {("protocol", k) for k in ("scheme", "d", "alpha", "d1", "d2")}
_SWEEP = {("sweep", k) for k in ("rho_db", "mode", "side")}
_MULTI = {("multiuser", k) for k in ("m_pairs", "primary", "inter", "user", "pair")}
_CAPACITY = {("capacity", k)
             for k in ("p_theta_t", "p_theta_joint", "t_c", "epsilons", "sigma2")}
_THROUGHPUT = {("throughput", k) for k in ("t_cr", "w1", "w2")}

_SWEEP_KINDS_KEYS = _RUN | _CHANNEL | _PROTOCOL | _SWEEP | _MULTI
KNOWN_KEYS = {
    "miss-sweep": _SWEEP_KINDS_KEYS,
    "joint-sweep": _SWEEP_KINDS_KEYS,
    "diversity": _SWEEP_KINDS_KEYS,
    "capacity-ergodic": _RUN | _CHANNEL | _PROTOCOL | _SWEEP | _CAPACITY,
    "capacity-outage": _RUN | _CHANNEL | _PROTOCOL | _SWEEP | _CAPACITY,
    "imperfect": _RUN | _CHANNEL | _PROTOCOL | _SWEEP | _CAPACITY,
    "throughput": _RUN | _CHANNEL | _PROTOCOL | _SWEEP | _THROUGHPUT,
    "multiuser": _RUN | _MULTI | _PROTOCOL | _SWEEP,
}


def _parse_value(raw: str):
    try:
        return ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        return raw


def load_config(path: str) -> dict:
    """Read an INI file into a {(section, key): value} mapping."""
    text = open(path, "r", encoding="utf-8").read()
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#",)
    )
    parser.optionxform = str
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    data = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            data[(section, key)] = _parse_value(raw)
    return data


def apply_overrides(data: dict, overrides: list[str]) -> None:
    for item in overrides:
        head, sep, raw = item.partition("=")
        if not sep or "." not in head:
            raise ConfigError(
                f"--set expects SECTION.KEY=VALUE, got {item!r}"
            )
        section, _, key = head.partition(".")
        data[(section.strip(), key.strip())] = _parse_value(raw.strip())


def check_schema(kind: str, data: dict) -> None:
    known = KNOWN_KEYS[kind]
    sections = {s for s, _ in known}
    for section, key in data:
        if section not in sections:
            raise ConfigError(f"unknown section [{section}] for kind {kind}")
        if (section, key) not in known:
            raise ConfigError(
                f"unknown key {section}.{key} for kind {kind}"
            )


class Conf:
    """Typed access to configuration values with precise error messages."""

    def __init__(self, data: dict):
        self.data = data

    def has(self, section: str, key: str) -> bool:
        return (section, key) in self.data

    def _get(self, section, key, default, required):
        if (section, key) in self.data:
            return self.data[(section, key)]
        if required:
            raise ConfigError(f"missing required key {section}.{key}")
        return default

    def get_int(self, section, key, default=None, required=False):
        v = self._get(section, key, default, required)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, int):
            raise ConfigError(f"{section}.{key} must be an integer, got {v!r}")
        return v

    def get_float(self, section, key, default=None, required=False):
        v = self._get(section, key, default, required)
        if v is None:
            return None
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ConfigError(f"{section}.{key} must be a number, got {v!r}")
        return float(v)

    def get_str(self, section, key, default=None, required=False):
        v = self._get(section, key, default, required)
        if v is None:
            return None
        if not isinstance(v, str):
            raise ConfigError(f"{section}.{key} must be a string, got {v!r}")
        return v

    def get_numlist(self, section, key, default=None, required=False):
        v = self._get(section, key, default, required)
        if v is None:
            return None
        if isinstance(v, bool):
            raise ConfigError(f"{section}.{key} must be numeric, got {v!r}")
        if isinstance(v, (int, float)):
            return [float(v)]
        if isinstance(v, (list, tuple)) and v and all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in v
        ):
            return [float(x) for x in v]
        raise ConfigError(
            f"{section}.{key} must be a number or a nonempty list of numbers"
        )


def _build(factory, *args, **kwargs):
    """Run a constructor, converting its ValueError into a ConfigError."""
    try:
        return factory(*args, **kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# Shared builders
# ---------------------------------------------------------------------------


def resolve_split(conf: Conf) -> tuple[int, int]:
    explicit = conf.has("protocol", "d1") or conf.has("protocol", "d2")
    total = conf.has("protocol", "d") or conf.has("protocol", "alpha")
    if explicit and total:
        raise ConfigError(
            "specify either protocol.d1/d2 or protocol.d/alpha, not both"
        )
    if explicit:
        d1 = conf.get_int("protocol", "d1", required=True)
        d2 = conf.get_int("protocol", "d2", required=True)
        if d1 < 1 or d2 < 1:
            raise ConfigError("protocol.d1 and protocol.d2 must be >= 1")
        return d1, d2
    d = conf.get_int("protocol", "d", default=2)
    alpha = conf.get_float("protocol", "alpha", default=0.5)
    return _build(split_channel_uses, d, alpha)


def resolve_scheme(conf: Conf, default=None) -> Scheme:
    raw = conf.get_str("protocol", "scheme",
                       default=default, required=default is None)
    return _build(Scheme, raw)


def build_pair_means(conf: Conf) -> MeanGains:
    return _build(
        MeanGains,
        conf.get_float("channel", "pt", required=True),
        conf.get_float("channel", "pr", required=True),
        conf.get_float("channel", "tr", required=True),
    )


def build_multiuser_means(conf: Conf) -> MultiuserMeans:
    return _build(
        MultiuserMeans.uniform,
        conf.get_int("multiuser", "m_pairs", required=True),
        conf.get_float("multiuser", "primary", required=True),
        conf.get_float("multiuser", "inter", required=True),
    )


def build_sweep_spec(conf: Conf, scheme: Scheme, threads: int,
                     mode_default="channel") -> SweepSpec:
    if scheme is Scheme.MUCSA:
        means = build_multiuser_means(conf)
    else:
        means = build_pair_means(conf)
    d1, d2 = resolve_split(conf)
    return _build(
        SweepSpec,
        scheme=scheme,
        means=means,
        rho_db=tuple(conf.get_numlist("sweep", "rho_db", required=True)),
        n_trials=conf.get_int("run", "n_trials", required=True),
        seed=conf.get_int("run", "seed", required=True),
        d1=d1,
        d2=d2,
        mode=conf.get_str("sweep", "mode", default=mode_default),
        threads=threads,
        chunk=conf.get_int("run", "chunk"),
    )


def get_side(conf: Conf) -> str:
    side = conf.get_str("sweep", "side", default="t")
    if side not in ("t", "r"):
        raise ConfigError("sweep.side must be 't' or 'r'")
    return side


def get_user(conf: Conf, means: MultiuserMeans) -> int:
    user = conf.get_int("multiuser", "user", default=0)
    if not 0 <= user < means.n_users:
        raise ConfigError(
            f"multiuser.user must lie in [0, {means.n_users - 1}]"
        )
    return user


# ---------------------------------------------------------------------------
# Kind runners: each returns (rows, extra_meta)
# ---------------------------------------------------------------------------


def run_miss_sweep(conf: Conf, threads: int):
    scheme = resolve_scheme(conf)
    spec = build_sweep_spec(conf, scheme, threads)
    user = get_user(conf, spec.means) if scheme is Scheme.MUCSA else 0
    res = estimate_miss_curve(spec, side=get_side(conf), user=user)
    rows = [
        {"rho_db": res.rho_db[i], "estimate": res.estimate[i],
         "std_error": res.std_error[i]}
        for i in range(len(res.rho_db))
    ]
    return rows, {"scheme": scheme.value, "mode": spec.mode}


def run_joint_sweep(conf: Conf, threads: int):
    scheme = resolve_scheme(conf)
    spec = build_sweep_spec(conf, scheme, threads)
    if spec.mode != "channel":
        raise ConfigError("joint-sweep supports sweep.mode = 'channel' only")
    pair = conf.get_int("multiuser", "pair", default=0)
    res = estimate_joint_success_curve(spec, pair=pair)
    rows = [
        {"rho_db": res.rho_db[i], "estimate": res.estimate[i],
         "std_error": res.std_error[i]}
        for i in range(len(res.rho_db))
    ]
    return rows, {"scheme": scheme.value, "mode": spec.mode}


def run_diversity(conf: Conf, threads: int):
    scheme = resolve_scheme(conf)
    spec = build_sweep_spec(conf, scheme, threads, mode_default="tail")
    user = get_user(conf, spec.means) if scheme is Scheme.MUCSA else 0
    fit = estimate_diversity(spec, side=get_side(conf), user=user)
    rows = [{
        "scheme": scheme.value,
        "mode": spec.mode,
        "order": fit.order,
        "residual": fit.residual,
        "n_points": len(spec.rho_db),
    }]
    return rows, {"scheme": scheme.value, "mode": spec.mode}


def _capacity_setup(conf: Conf, threads: int):
    scheme = resolve_scheme(conf)
    if scheme is Scheme.MUCSA:
        raise ConfigError("capacity kinds support nc, csa and ocsa only")
    means = build_pair_means(conf)
    d1, d2 = resolve_split(conf)
    activity = _build(
        ActivityModel,
        conf.get_float("capacity", "p_theta_t", required=True),
        conf.get_float("capacity", "p_theta_joint", required=True),
    )
    t_c = conf.get_float("capacity", "t_c", required=True)
    if t_c <= 0:
        raise ConfigError("capacity.t_c must be positive")
    common = dict(
        means=means,
        activity=activity,
        t_c=t_c,
        n=conf.get_int("run", "n_trials", required=True),
        seed=conf.get_int("run", "seed", required=True),
        d1=d1,
        d2=d2,
        threads=threads,
        chunk=conf.get_int("run", "chunk"),
    )
    rho_db = conf.get_numlist("sweep", "rho_db", required=True)
    return scheme, common, rho_db


def run_capacity_ergodic(conf: Conf, threads: int):
    scheme, common, rho_db = _capacity_setup(conf, threads)
    rows = []
    for rdb in rho_db:
        est = ergodic_capacity(scheme, rho=10.0 ** (rdb / 10.0), **common)
        rows.append({
            "rho_db": rdb,
            "upper_mean": est.upper_mean, "upper_se": est.upper_se,
            "lower_mean": est.lower_mean, "lower_se": est.lower_se,
        })
    return rows, {"scheme": scheme.value}


def run_capacity_outage(conf: Conf, threads: int):
    scheme, common, rho_db = _capacity_setup(conf, threads)
    epsilons = conf.get_numlist("capacity", "epsilons", required=True)
    for e in epsilons:
        if not 0.0 < e < 1.0:
            raise ConfigError("capacity.epsilons entries must lie in (0, 1)")
    sigma2 = conf.get_float("capacity", "sigma2", default=0.0)
    rows = []
    for rdb in rho_db:
        res = outage_capacity(scheme, rho=10.0 ** (rdb / 10.0),
                              epsilons=epsilons, sigma2=sigma2, **common)
        for i, eps in enumerate(res.epsilons):
            rows.append({
                "rho_db": rdb,
                "epsilon": eps,
                "upper": res.upper[i],
                "lower": res.lower[i],
            })
    return rows, {"scheme": scheme.value}


def run_imperfect(conf: Conf, threads: int):
    scheme, common, rho_db = _capacity_setup(conf, threads)
    sigma2s = conf.get_numlist("capacity", "sigma2", required=True)
    for s2 in sigma2s:
        if s2 < 0:
            raise ConfigError("capacity.sigma2 entries must be nonnegative")
    means = common["means"]
    mc_kw = dict(
        means=means, n=common["n"], seed=common["seed"],
        d1=common["d1"], d2=common["d2"], threads=common["threads"],
        chunk=common["chunk"],
    )
    rows = []
    for rdb in rho_db:
        rho = 10.0 ** (rdb / 10.0)
        base = ergodic_capacity(scheme, rho=rho, **common)
        for s2 in sigma2s:
            est = imperfect_capacity(scheme, rho=rho, sigma2=s2, **common)
            mc, se = wrong_relay_probability_mc(s2, rho=rho, **mc_kw)
            rows.append({
                "rho_db": rdb,
                "sigma2": s2,
                "upper_mean": est.upper_mean, "upper_se": est.upper_se,
                "lower_mean": est.lower_mean, "lower_se": est.lower_se,
                "relative_upper_loss": relative_capacity_loss(base, est),
                "wrong_relay_mc": mc,
                "wrong_relay_se": se,
                "wrong_relay_bound": wrong_relay_bound(s2, means),
            })
    return rows, {"scheme": scheme.value}


def run_throughput(conf: Conf, threads: int):
    means = build_pair_means(conf)
    d1, d2 = resolve_split(conf)
    rho_db = conf.get_numlist("sweep", "rho_db", required=True)
    if len(rho_db) != 1:
        raise ConfigError("throughput expects a single sweep.rho_db value")
    rho = 10.0 ** (rho_db[0] / 10.0)
    t_cr = conf.get_float("throughput", "t_cr", default=1.0)
    w1s = conf.get_numlist("throughput", "w1", required=True)
    w2s = conf.get_numlist("throughput", "w2", required=True)
    n = conf.get_int("run", "n_trials", required=True)
    seed = conf.get_int("run", "seed", required=True)
    chunk = conf.get_int("run", "chunk")
    rows = []
    for w1 in w1s:
        for w2 in w2s:
            ov = _build(OverheadParams, t_cr=t_cr, t_fb=w1 * t_cr,
                        beta=w2 * t_cr * means.pt, lambda_pt=means.pt)
            mc, se = throughput_loss_mc(ov, means, rho, n, seed,
                                        d1=d1, d2=d2, threads=threads,
                                        chunk=chunk)
            rows.append({
                "w1": ov.w1,
                "w2": ov.w2,
                "loss_mc": mc,
                "loss_se": se,
                "loss_bound": throughput_loss_bound(ov),
            })
    return rows, {"rho_db": rho_db[0]}


def run_multiuser(conf: Conf, threads: int):
    if conf.has("protocol", "scheme"):
        scheme = resolve_scheme(conf)
        if scheme is not Scheme.MUCSA:
            raise ConfigError("the multiuser kind requires scheme 'mucsa'")
    spec = build_sweep_spec(conf, Scheme.MUCSA, threads)
    user = get_user(conf, spec.means)
    res = estimate_miss_curve(spec, user=user)
    rows = [
        {"rho_db": res.rho_db[i], "estimate": res.estimate[i],
         "std_error": res.std_error[i]}
        for i in range(len(res.rho_db))
    ]
    return rows, {"scheme": Scheme.MUCSA.value, "mode": spec.mode,
                  "user": user}


RUNNERS = {
    "miss-sweep": run_miss_sweep,
    "joint-sweep": run_joint_sweep,
    "diversity": run_diversity,
    "capacity-ergodic": run_capacity_ergodic,
    "capacity-outage": run_capacity_outage,
    "imperfect": run_imperfect,
    "throughput": run_throughput,
    "multiuser": run_multiuser,
}


# ---------------------------------------------------------------------------
# Self check
# ---------------------------------------------------------------------------


def run_selfcheck() -> tuple[str, bool]:
    """Quick built-in battery; returns (report text, all passed)."""
    from .protocols import (
        ProtocolConfig,
        csa_conditional_miss,
        ocsa_conditional_miss,
        ocsa_joint_success,
    )
    from .fadeprob import exp_q_mean
    from .capacity import capacity_draws

    lines = []
    ok_all = True

    def check(name, passed):
        nonlocal ok_all
        ok_all = ok_all and passed
        lines.append(f"{name}: {'ok' if passed else 'FAIL'}")

    cfg = ProtocolConfig(rho=10.0)
    check("degenerate-channel values",
          csa_conditional_miss(cfg, 0.0, 0.0, 0.0) == 0.375
          and ocsa_conditional_miss(cfg, 0.0, 0.0, 0.0) == 0.25
          and ocsa_joint_success(cfg, 0.0, 0.0, 0.0) == 0.5625)

    means = MeanGains(1.0, 2.0, 3.0)
    spec = SweepSpec(scheme=Scheme.NC, means=means, rho_db=(10.0,),
                     n_trials=20_000, seed=_SELFCHECK_SEED, mode="tail")
    res = estimate_miss_curve(spec)
    want = exp_q_mean(2 * 10.0, means.pt)
    check("closed-form agreement",
          abs(res.estimate[0] - want) < 5 * res.std_error[0] + 1e-9)

    res2 = estimate_miss_curve(spec)
    spec4 = SweepSpec(scheme=Scheme.NC, means=means, rho_db=(10.0,),
                      n_trials=20_000, seed=_SELFCHECK_SEED, mode="tail",
                      threads=4, chunk=5_000)
    res4 = estimate_miss_curve(spec4)
    spec1 = SweepSpec(scheme=Scheme.NC, means=means, rho_db=(10.0,),
                      n_trials=20_000, seed=_SELFCHECK_SEED, mode="tail",
                      threads=1, chunk=5_000)
    res1 = estimate_miss_curve(spec1)
    check("deterministic reruns",
          res.estimate[0] == res2.estimate[0]
          and res1.estimate[0] == res4.estimate[0])

    act = ActivityModel(p_theta_t=0.85, p_theta_joint=0.7)
    up, lo = capacity_draws(Scheme.OCSA, means, act, rho=1.0, t_c=10.0,
                            n=2_000, seed=_SELFCHECK_SEED)
    check("capacity bound ordering", bool(np.all(lo <= up + 1e-12)))

    return "\n".join(lines) + "\n", ok_all


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def _csv_cell(v) -> str:
    if isinstance(v, bool):
        return str(v)
    if isinstance(v, float):
        return "%.10g" % v
    return str(v)


def render_output(rows, meta, fmt: str) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        header = list(rows[0].keys()) if rows else []
        writer.writerow(header)
        for row in rows:
            writer.writerow([_csv_cell(row[k]) for k in header])
        return buf.getvalue()
    doc = {"meta": meta, "rows": rows}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _json_ready(v):
    if isinstance(v, (list, tuple)):
        return [_json_ready(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="beaconsim",
        description="Simulation and analysis of beacon-assisted spectrum access",
    )
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--config", help="INI configuration file")
    parser.add_argument("--set", action="append", default=[], dest="overrides",
                        metavar="SECTION.KEY=VALUE",
                        help="override one configuration key")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)

    if args.kind == "selfcheck":
        report, ok = run_selfcheck()
        sys.stdout.write(report)
        return 0 if ok else 3

    try:
        if not args.config:
            raise ConfigError(f"kind {args.kind} requires --config")
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        try:
            data = load_config(args.config)
        except OSError as exc:
            print(f"beaconsim: i/o error: {exc}", file=sys.stderr)
            return 4
        apply_overrides(data, args.overrides)
        check_schema(args.kind, data)
        conf = Conf(data)
        seed = conf.get_int("run", "seed", required=True)
    except ConfigError as exc:
        print(f"beaconsim: config error: {exc}", file=sys.stderr)
        return 2

    try:
        rows, extra = RUNNERS[args.kind](conf, args.threads)
    except ConfigError as exc:
        print(f"beaconsim: config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError) as exc:
        print(f"beaconsim: numeric error: {exc}", file=sys.stderr)
        return 3

    meta = {
        "kind": args.kind,
        "seed": seed,
        "threads": args.threads,
        "config": {
            f"{s}.{k}": _json_ready(v) for (s, k), v in sorted(data.items())
        },
    }
    meta.update(extra)
    rows = [{k: _json_ready(v) for k, v in row.items()} for row in rows]
    text = render_output(rows, meta, args.format)

    try:
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except OSError as exc:
        print(f"beaconsim: i/o error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
