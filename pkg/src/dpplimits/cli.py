"""Command-line interface: ``dpp-limits {analyze,simulate,sweep,compare}``.

Settings come from three layers, later winning: built-in defaults, a config
file (``--config``, flat ``key = value`` lines named like the flags), and
command-line flags.  ``DPP_SEED`` overrides the default seed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import analytic, montecarlo
from .errors import DegenerateBaseline, InfeasibleMoments, UnsupportedFormat
from .loads import Family, LoadDistribution, SystemDimensions
from .sweep import Axis, SweepSpec, default_values, emit, run_sweep
from .topology import (
    ALL_KINDS,
    DPP_KINDS,
    ResourceBudget,
    get_topology,
    output_resistance,
)

__all__ = ["UsageError", "Command", "RunConfig", "parse_args", "parse_config", "render_config", "run", "main"]

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE = 0, 1, 2


class UsageError(Exception):
    pass


class Command(str, Enum):
    ANALYZE = "analyze"
    SIMULATE = "simulate"
    SWEEP = "sweep"
    COMPARE = "compare"


FORMATS = ("csv", "json", "svg", "text")


@dataclass(frozen=True)
class RunConfig:
    command: Command
    dims: SystemDimensions = field(default_factory=lambda: SystemDimensions(8, 4))
    dist: LoadDistribution = field(default_factory=lambda: LoadDistribution(Family.UNIFORM, 1.0, 0.5))
    budget: ResourceBudget = field(default_factory=ResourceBudget)
    topologies: tuple[str, ...] = ("ac",)
    trials: int = montecarlo.DEFAULT_TRIALS
    seed: int = 0
    sweep: SweepSpec | None = None
    output_format: str = "text"
    output_path: str | None = None
    include_switching: bool = False
    workers: int = 1


# ---------------------------------------------------------------- parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common_options() -> argparse.ArgumentParser:
    p = _Parser(add_help=False)
    add = p.add_argument
    add("--config", metavar="PATH", help="key = value file; flags override it")
    add("--topo", help="comma list of ac, dc, ladder-dab, ladder-bb, dab-n1")
    add("--n", type=int, help="series-stacked voltage domains N")
    add("--m", type=int, help="parallel loads per domain M")
    add("--v0", type=float, help="domain voltage in volts")
    add("--gsw", type=float, help="semiconductor conductance budget G_SW")
    add("--gm", type=float, help="magnetic winding conductance budget G_M")
    add("--coss-fsw", dest="coss_fsw", type=float, help="switching shunt conductance per port")
    add("--family", choices=[f.value for f in Family])
    add("--mu", type=float, help="mean load power in watts")
    dev = p.add_mutually_exclusive_group()
    dev.add_argument("--sigma", type=float, help="load power standard deviation in watts")
    dev.add_argument("--cv", type=float, help="coefficient of variance sigma/mu")
    add("--trials", type=int)
    add("--seed", type=int)
    add("--workers", type=int, help="threads used for Monte Carlo chunks")
    add("--axis", choices=[a.value for a in Axis])
    add("--from", dest="from_", type=float, metavar="START")
    add("--to", type=float, metavar="STOP")
    add("--step", type=float)
    add("--values", help="explicit comma list of sweep points")
    add("--include-switching", dest="include_switching", action="store_true", default=None)
    add("--format", choices=FORMATS)
    add("--out", metavar="PATH")
    return p


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dpp-limits", description="Expected-loss limits of DPP topologies.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common_options()
    helps = {
        Command.ANALYZE: "closed-form report per topology",
        Command.SIMULATE: "Monte Carlo estimate against the closed form",
        Command.SWEEP: "normalized loss over N, M or C_V",
        Command.COMPARE: "rank topologies by normalized loss",
    }
    for cmd, text in helps.items():
        sub.add_parser(cmd.value, parents=[common], help=text)
    return parser


# config-file key -> argparse dest
_KEYS = {
    "topo": "topo", "n": "n", "m": "m", "v0": "v0", "gsw": "gsw", "gm": "gm",
    "coss-fsw": "coss_fsw", "family": "family", "mu": "mu", "sigma": "sigma", "cv": "cv",
    "trials": "trials", "seed": "seed", "workers": "workers", "axis": "axis",
    "from": "from_", "to": "to", "step": "step", "values": "values",
    "include-switching": "include_switching", "format": "format", "out": "out",
}
_FLAG = {dest: f"--{key}" for key, dest in _KEYS.items()}


def _read_config_text(text: str, origin: str = "config") -> dict[str, str]:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lstrip("-")
        if not sep:
            raise UsageError(f"{origin}:{lineno}: expected 'key = value'")
        if key != "command" and key not in _KEYS:
            raise UsageError(f"{origin}:{lineno}: unknown key {key!r}")
        values[key] = value.strip()
    return values


def _convert(dest: str, text: str):
    flag = _FLAG[dest]
    try:
        if dest in ("n", "m", "trials", "seed", "workers"):
            return int(text)
        if dest in ("v0", "gsw", "gm", "coss_fsw", "mu", "sigma", "cv", "from_", "to", "step"):
            return float(text)
        if dest == "include_switching":
            lowered = text.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(text)
            return lowered in ("true", "1", "yes")
    except ValueError:
        raise UsageError(f"{flag}: invalid value {text!r}") from None
    return text


def _default_seed() -> int:
    env = os.environ.get("DPP_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"DPP_SEED: invalid integer {env!r}") from None


def _default_topologies(command: Command) -> str:
    if command in (Command.ANALYZE, Command.COMPARE):
        return ",".join(k.value for k in ALL_KINDS)
    if command is Command.SWEEP:
        return ",".join(k.value for k in DPP_KINDS)
    return "ac"


def _require(cond, flag, message):
    if not cond:
        raise UsageError(f"{flag}: {message}")


def _sweep_values(axis: Axis, opts) -> tuple:
    if opts.get("values") is not None:
        parts = [p for p in str(opts["values"]).split(",") if p.strip()]
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            raise UsageError(f"--values: invalid list {opts['values']!r}") from None
        return tuple(int(v) if axis.integer_valued and v == int(v) else v for v in vals)
    start, stop, step = opts.get("from_"), opts.get("to"), opts.get("step")
    if start is None and stop is None:
        return default_values(axis)
    defaults = default_values(axis)
    start = defaults[0] if start is None else start
    stop = defaults[-1] if stop is None else stop
    step = (1 if axis.integer_valued else 0.1) if step is None else step
    _require(step > 0, "--step", "must be > 0")
    _require(stop >= start, "--to", "must be >= --from")
    if axis.integer_valued:
        _require(start == int(start) and step == int(step), "--from", "N/M sweeps need integer bounds")
        return tuple(range(int(start), int(math.floor(stop)) + 1, int(step)))
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(round(start + k * step, 10) for k in range(count))


def _build_config(command: Command, opts: dict) -> RunConfig:
    get = opts.get
    n = get("n", 8)
    m = get("m", 4)
    v0 = get("v0", 1.0)
    _require(n >= 1, "--n", "must be >= 1")
    _require(m >= 1, "--m", "must be >= 1")
    _require(v0 > 0, "--v0", "must be > 0")
    gsw, gm, coss = get("gsw", 1.0), get("gm", 1.0), get("coss_fsw", 0.0)
    _require(gsw > 0, "--gsw", "must be > 0")
    _require(gm > 0, "--gm", "must be > 0")
    _require(coss >= 0, "--coss-fsw", "must be >= 0")
    mu = get("mu", 1.0)
    _require(mu >= 0, "--mu", "must be >= 0")
    if get("cv") is not None:
        _require(mu > 0, "--cv", "requires --mu > 0")
        _require(get("cv") >= 0, "--cv", "must be >= 0")
        sigma = get("cv") * mu
    else:
        sigma = get("sigma", 0.5 * mu)
    _require(sigma >= 0, "--sigma", "must be >= 0")
    family = get("family", Family.UNIFORM.value)
    try:
        family = Family(family)
    except ValueError:
        raise UsageError(f"--family: unknown family {family!r}") from None

    names = [t.strip() for t in str(get("topo") or _default_topologies(command)).split(",") if t.strip()]
    _require(names, "--topo", "no topologies given")
    for name in names:
        try:
            get_topology(name)
        except ValueError as exc:
            raise UsageError(f"--topo: {exc}") from None

    trials = get("trials", montecarlo.DEFAULT_TRIALS)
    _require(trials >= 2, "--trials", "must be >= 2")
    seed = get("seed")
    seed = _default_seed() if seed is None else seed
    _require(seed >= 0, "--seed", "must be >= 0")
    workers = get("workers", 1)
    _require(workers >= 1, "--workers", "must be >= 1")
    fmt = get("format") or ("csv" if command is Command.SWEEP else "text")
    _require(fmt in FORMATS, "--format", f"must be one of {', '.join(FORMATS)}")
    if command is not Command.SWEEP:
        _require(fmt in ("text", "json"), "--format", f"{command.value} supports text or json")
    include_switching = bool(get("include_switching", False))

    dims = SystemDimensions(n, m, v0)
    dist = LoadDistribution(family, mu, sigma)
    budget = ResourceBudget(gsw, gm, coss)
    spec = None
    if command is Command.SWEEP:
        axis = Axis(get("axis") or Axis.DOMAINS_N.value)
        values = _sweep_values(axis, opts)
        try:
            spec = SweepSpec(
                axis, values, dims, dist, budget, tuple(names), trials, seed, include_switching
            )
        except ValueError as exc:
            raise UsageError(f"--axis {axis.value}: {exc}") from None
    return RunConfig(
        command, dims, dist, budget, tuple(names), trials, seed, spec, fmt,
        get("out"), include_switching, workers,
    )


def _non_null(ns: dict) -> dict:
    return {k: v for k, v in ns.items() if v is not None}


def parse_args(argv=None) -> RunConfig:
    """Parse an argument vector into a RunConfig; raises UsageError."""
    ns = vars(_build_parser().parse_args(argv))
    command = Command(ns.pop("command"))
    flags = _non_null(ns)
    opts = {}
    config_path = flags.pop("config", None)
    if config_path is not None:
        try:
            text = Path(config_path).read_text()
        except OSError as exc:
            raise UsageError(f"--config: cannot read {config_path}: {exc.strerror}") from None
        file_opts = _read_config_text(text, config_path)
        file_opts.pop("command", None)
        opts = {_KEYS[k]: _convert(_KEYS[k], v) for k, v in file_opts.items()}
    if "cv" in flags or "sigma" in flags:
        opts.pop("cv", None)
        opts.pop("sigma", None)
    opts.update(flags)
    return _build_config(command, opts)


def render_config(config: RunConfig) -> str:
    """Serialize to the config-file format; ``parse_config`` inverts it."""
    d, s, b = config.dims, config.dist, config.budget
    lines = [
        ("command", config.command.value),
        ("topo", ",".join(config.topologies)),
        ("n", d.n_domains), ("m", d.m_loads), ("v0", repr(d.v0)),
        ("gsw", repr(b.g_sw)), ("gm", repr(b.g_m)), ("coss-fsw", repr(b.coss_fsw)),
        ("family", s.family.value), ("mu", repr(s.mu)), ("sigma", repr(s.sigma)),
        ("trials", config.trials), ("seed", config.seed), ("workers", config.workers),
        ("include-switching", str(config.include_switching).lower()),
        ("format", config.output_format),
    ]
    if config.output_path is not None:
        lines.append(("out", config.output_path))
    if config.sweep is not None:
        lines.append(("axis", config.sweep.axis.value))
        lines.append(("values", ",".join(repr(v) for v in config.sweep.values)))
    return "".join(f"{k} = {v}\n" for k, v in lines)


def parse_config(text: str) -> RunConfig:
    """Build a RunConfig from config-file text alone (it must name a command)."""
    raw = _read_config_text(text)
    if "command" not in raw:
        raise UsageError("config: missing 'command' key")
    try:
        command = Command(raw.pop("command"))
    except ValueError:
        raise UsageError("config: unknown command") from None
    opts = {_KEYS[k]: _convert(_KEYS[k], v) for k, v in raw.items()}
    return _build_config(command, opts)


# ---------------------------------------------------------------- reports


def _g(x: float) -> str:
    if math.isinf(x):
        return "unbounded"
    return f"{x:.6g}"


def _table(header, rows) -> str:
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
    out = []
    for row in (header, *rows):
        out.append("  ".join(str(c).ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(out) + "\n"


def _preamble(config: RunConfig) -> str:
    d, s, b = config.dims, config.dist, config.budget
    cv = _g(s.sigma / s.mu) if s.mu > 0 else "n/a"
    return (
        f"N={d.n_domains} M={d.m_loads} V0={_g(d.v0)} V  family={s.family.value} "
        f"mu={_g(s.mu)} W sigma={_g(s.sigma)} W C_V={cv}  "
        f"G_SW={_g(b.g_sw)} G_M={_g(b.g_m)} Coss*fsw={_g(b.coss_fsw)}\n"
    )


def _analysis_rows(config: RunConfig):
    rows = []
    for name in config.topologies:
        topo = get_topology(name)
        loss = analytic.expected_loss(topo, config.dims, config.dist, config.budget)
        rows.append(
            {
                "topology": name,
                "class": topo.architecture_class.value,
                "output_resistance_ohm": output_resistance(topo, config.dims, config.budget),
                "conduction_w": loss.conduction_w,
                "switching_w": loss.switching_w,
                "total_w": loss.total_w,
                "scaling_factor": analytic.scaling_factor(topo).label(),
                "normalized_loss": analytic.normalized_loss(
                    topo, config.dims, config.dist, config.budget, config.include_switching
                ),
            }
        )
    return rows


def _analyze(config: RunConfig) -> bytes:
    rows = _analysis_rows(config)
    if config.output_format == "json":
        return _dump_json({"dims": _preamble(config).strip(), "topologies": rows})
    header = ("topology", "class", "R_out[ohm]", "E[cond][W]", "E[sw][W]", "E[total][W]", "scaling", "normalized")
    body = [
        (r["topology"], r["class"], _g(r["output_resistance_ohm"]), _g(r["conduction_w"]),
         _g(r["switching_w"]), _g(r["total_w"]), r["scaling_factor"], _g(r["normalized_loss"]))
        for r in rows
    ]
    return (_preamble(config) + _table(header, body)).encode()


def _compare(config: RunConfig) -> bytes:
    rows = sorted(_analysis_rows(config), key=lambda r: r["normalized_loss"])
    if config.output_format == "json":
        return _dump_json({"ranking": [{"rank": i, **r} for i, r in enumerate(rows, 1)]})
    header = ("rank", "topology", "normalized", "E[total][W]", "scaling")
    body = [
        (i, r["topology"], _g(r["normalized_loss"]), _g(r["total_w"]), r["scaling_factor"])
        for i, r in enumerate(rows, 1)
    ]
    return (_preamble(config) + _table(header, body)).encode()


def _verdict(est, closed: float) -> str:
    if est.std_error_w == 0:
        return "exact match" if est.mean_w == closed else "mismatch"
    return "agree" if abs(est.mean_w - closed) <= 3 * est.std_error_w else "disagree"


def _simulate(config: RunConfig) -> bytes:
    rows = []
    for name in config.topologies:
        topo = get_topology(name)
        closed = analytic.expected_loss(topo, config.dims, config.dist, config.budget).total_w
        est = montecarlo.estimate(
            topo, config.dims, config.dist, config.budget, config.trials, config.seed, config.workers
        )
        rows.append(
            {
                "topology": name,
                "closed_form_w": closed,
                "mean_w": est.mean_w,
                "std_error_w": est.std_error_w,
                "ci95_w": list(est.ci95_w),
                "trials": est.trials,
                "seed": est.seed,
                "verdict": _verdict(est, closed),
            }
        )
    if config.output_format == "json":
        return _dump_json({"estimates": rows})
    header = ("topology", "closed[W]", "MC mean[W]", "std err[W]", "95% CI[W]", "verdict")
    body = [
        (r["topology"], _g(r["closed_form_w"]), _g(r["mean_w"]), _g(r["std_error_w"]),
         f"[{_g(r['ci95_w'][0])}, {_g(r['ci95_w'][1])}]", r["verdict"])
        for r in rows
    ]
    head = _preamble(config) + f"trials={config.trials} seed={config.seed}\n"
    return (head + _table(header, body)).encode()


def _sweep(config: RunConfig) -> bytes:
    result = run_sweep(config.sweep, workers=config.workers)
    if config.output_format != "text":
        return emit(result, config.output_format)
    header = ("value", "topology", "analytic", "simulated", "95% CI")
    body = [
        (repr(r.axis_value), r.topology, _g(r.analytic_normalized), _g(r.simulated_normalized),
         f"[{_g(r.sim_ci95[0])}, {_g(r.sim_ci95[1])}]")
        for r in result.rows
    ]
    return (f"sweep over {result.axis.value}\n" + _table(header, body)).encode()


def _dump_json(payload) -> bytes:
    return (json.dumps(payload, indent=2) + "\n").encode()


_HANDLERS = {
    Command.ANALYZE: _analyze,
    Command.SIMULATE: _simulate,
    Command.SWEEP: _sweep,
    Command.COMPARE: _compare,
}


def render_report(config: RunConfig) -> bytes:
    """The bytes a command would emit; raises model errors."""
    return _HANDLERS[config.command](config)


def run(config: RunConfig, stdout=None, stderr=None) -> int:
    """Execute ``config``; returns the exit status."""
    stderr = stderr or sys.stderr
    try:
        report = render_report(config)
    except (InfeasibleMoments, DegenerateBaseline) as exc:
        print(f"dpp-limits: infeasible model: {exc}", file=stderr)
        return EXIT_INFEASIBLE
    except UnsupportedFormat as exc:
        print(f"dpp-limits: {exc}", file=stderr)
        return EXIT_USAGE
    if config.output_path is not None:
        Path(config.output_path).write_bytes(report)
    else:
        out = stdout if stdout is not None else sys.stdout.buffer
        out.write(report)
        out.flush()
    return EXIT_OK


def main(argv=None) -> int:
    try:
        config = parse_args(argv)
    except UsageError as exc:
        print(f"dpp-limits: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
