"""Command line entry point.

Run configs are flat ``key = value`` files; see the README for the grammar.
Exit status: 0 success, 1 internal failure (or failed verification),
2 configuration / input error, 3 resource cap exceeded.
"""

import argparse
from dataclasses import dataclass, field
import json
import logging
import os
from pathlib import Path
import sys
import tempfile
import time

from . import __version__
from . import aep
from . import bitstring as bs
from . import kernels
from . import picksix as ps
from . import tournament as tn
from .errors import ConfigError, DomainError, ResourceError
from .figures import PRESETS, grid as arange_inclusive
from .optimizer import GridSpec, SweepError, argmax, surface_csv, sweep

log = logging.getLogger("multibracket")

CONTESTS = {
    "bitstring": ("emax", "winprob"),
    "picksix": ("profit",),
    "tournament": ("emax", "winprob"),
    "aep": ("verify",),
}
RESERVED = {"contest", "objective", "seed", "output"}

# parameters each contest understands, with defaults (None = required)
PARAMS = {
    "bitstring": {
        "p": None, "q": 1.0, "r": 1.0, "n": None, "k": 1,
        "weights": "hamming", "rounds": 6, "structure": None,
        "partition": None, "q_early": None, "q_late": None, "r_early": None, "r_late": None,
        "strict": 0,
    },
    "picksix": {
        "card": "belmont", "carryover": 500000.0, "take": 0.05, "price": 1.0,
        "n": None, "k": None, "lambda": None, "phi": None, "lambda_opp": 1.0,
        "method": "bound", "trials": 100000, "compat": 0,
    },
    "tournament": {
        "field": "ncaa2021", "lambda": None, "n": None, "k": 10000,
        "B1": 250, "B2": 100, "opponents": "chalky",
    },
    "aep": {"p": None, "epsilon": None, "m": None},
}


# ---------------------------------------------------------------------------
# config parsing


def parse_value(text):
    """A scalar, a comma list, or an inclusive ``start:stop:step`` range."""
    text = text.strip()
    if not text:
        raise ValueError("empty value")
    if "," in text:
        return [parse_scalar(t) for t in text.split(",") if t.strip()]
    if text.count(":") == 2:
        a, b, c = (float(x) for x in text.split(":"))
        if c <= 0 or b < a:
            raise ValueError(f"bad range {text!r}")
        return arange_inclusive(a, b, c)
    return parse_scalar(text)


def parse_scalar(text):
    text = text.strip()
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return text


@dataclass
class RunConfig:
    contest: str
    objective: str
    params: dict
    axes: list                      # [(name, [values...])] in declaration order
    output: str
    seed: int
    lines: dict = field(default_factory=dict)   # key -> source line
    text: str = ""

    @property
    def grid(self):
        return GridSpec(tuple((n, tuple(v)) for n, v in self.axes))


def parse_config(text, base_dir="."):
    raw = {}
    lines = {}
    axes = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, value = (s.strip() for s in body.split("=", 1))
        if not key:
            raise ConfigError("missing key before '='", line=lineno)
        try:
            parsed = parse_value(value)
        except ValueError as exc:
            raise ConfigError(str(exc), line=lineno, field=key) from None
        if key.startswith("grid."):
            name = key[5:]
            vals = parsed if isinstance(parsed, list) else [parsed]
            axes.setdefault(name, []).extend(vals)
            lines.setdefault(key, lineno)
            continue
        if key in raw:
            raise ConfigError("duplicate key (only grid.* keys may repeat)", line=lineno, field=key)
        raw[key] = parsed
        lines[key] = lineno

    def where(key):
        return lines.get(key)

    contest = raw.pop("contest", None)
    if contest is None:
        raise ConfigError("required field is missing", field="contest")
    if contest not in CONTESTS:
        raise ConfigError(f"unknown contest {contest!r}; expected one of {sorted(CONTESTS)}",
                          line=where("contest"), field="contest")
    objective = raw.pop("objective", None)
    if objective is None:
        raise ConfigError("required field is missing", field="objective")
    if objective not in CONTESTS[contest]:
        raise ConfigError(f"objective {objective!r} is not valid for {contest}; "
                          f"expected one of {list(CONTESTS[contest])}",
                          line=where("objective"), field="objective")
    seed = raw.pop("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a non-negative integer", line=where("seed"), field="seed")
    output = str(raw.pop("output", "surface.csv"))
    if not os.path.isabs(output):
        output = os.path.join(base_dir, output)

    known = PARAMS[contest]
    for key in list(raw) + list(axes):
        if key not in known:
            k2 = key if key in raw else "grid." + key
            raise ConfigError(f"unknown parameter for {contest}", line=where(k2), field=k2)
    dup = set(raw) & set(axes)
    if dup:
        name = sorted(dup)[0]
        raise ConfigError("parameter given both as a value and as a grid axis",
                          line=where("grid." + name), field=name)
    params = {}
    for key, default in known.items():
        if key in raw:
            params[key] = raw[key]
        elif key not in axes:
            params[key] = default
    required = [k for k, v in params.items() if v is None and k in _required(contest, objective, params)]
    if required:
        raise ConfigError("required field is missing", field=required[0])
    if contest == "aep" and axes:
        raise ConfigError("aep runs take no grid axes", line=where("grid." + next(iter(axes))),
                          field="grid." + next(iter(axes)))
    return RunConfig(contest, objective, params, list(axes.items()), output, seed, lines, text)


def _required(contest, objective, params):
    if contest == "bitstring":
        req = {"p", "n"}
        if params.get("partition") is not None:
            req |= {"q_early", "q_late"}
            if objective == "winprob":
                req |= {"r_early", "r_late"}
        return req
    if contest == "picksix":
        return {"n", "k", "lambda", "phi"}
    if contest == "tournament":
        return {"lambda", "n"}
    return {"p", "epsilon", "m"}


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, base_dir=str(path.parent))


# ---------------------------------------------------------------------------
# objectives


def _int(params, key):
    v = params[key]
    if isinstance(v, float) and v.is_integer():
        v = int(v)
    if not isinstance(v, int):
        raise ConfigError(f"expected an integer, got {v!r}", field=key)
    return v


def bitstring_objective(objective, static):
    rounds = int(static["rounds"])
    structure = static.get("structure")
    if structure is not None:
        s = bs.RoundStructure(structure if isinstance(structure, list) else [structure])
    else:
        s = bs.RoundStructure.default(rounds)
    wname = static["weights"]
    if wname not in ("hamming", "espn"):
        raise ConfigError("weights must be 'hamming' or 'espn'", field="weights")
    w = bs.ScoringWeights.hamming(s.R) if wname == "hamming" else bs.ScoringWeights.espn(s.R)

    def profile(params, stem):
        if params.get("partition") is not None:
            part = bs.RoundPartition(_int(params, "partition"))
            return bs.profile_from_partition(params[stem + "_early"], params[stem + "_late"], part, s.R)
        return bs.as_profile(params[stem], s.R)

    def evaluate(params, seed):
        n = _int(params, "n")
        q = profile(params, "q")
        if objective == "emax":
            return bs.expected_max_score(params["p"], q, n, s, w)
        r = profile(params, "r")
        return bs.win_probability(params["p"], q, r, n, _int(params, "k"), s, w,
                                  strict=bool(params["strict"]))
    return evaluate


def _load_card(source):
    if source == "belmont":
        return ps.RaceCard.belmont()
    return ps.RaceCard.from_csv(source)


def picksix_objective(static):
    card = _load_card(static["card"])

    def evaluate(params, seed):
        econ = ps.PoolEconomics(float(params["carryover"]), float(params["take"]),
                                _int(params, "n"), _int(params, "k"), float(params["price"]))
        q = ps.tilt(card, ps.TiltParams(params["lambda"], params["phi"]),
                    compat=bool(params["compat"]))
        r = ps.opponent_strategy(card, params["lambda_opp"])
        if params["method"] == "bound":
            return ps.expected_profit_lower_bound(card, q, r, econ)
        if params["method"] == "montecarlo":
            return ps.expected_profit_monte_carlo(card, q, r, econ, _int(params, "trials"), seed)
        raise ConfigError("method must be 'bound' or 'montecarlo'", field="method")
    return evaluate


def _load_field(source):
    if source == "ncaa2021":
        return tn.Field.ncaa_2021()
    return tn.Field.from_csv(source)


def tournament_objective(objective, static):
    field_ = _load_field(static["field"])
    if static["opponents"] != "chalky":
        raise ConfigError("only 'chalky' opponents are supported", field="opponents")
    P = tn.elo_to_winmatrix(field_)
    R = tn.chalky_opponents(field_)

    def evaluate(params, seed):
        Q = tn.interpolated_strategy(P, params["lambda"])
        n, B1, B2 = _int(params, "n"), _int(params, "B1"), _int(params, "B2")
        if objective == "emax":
            return tn.mc_expected_max_score(P, Q, field_, n, B1, B2, seed)
        return tn.mc_win_probability(P, Q, R, field_, n, _int(params, "k"), B1, B2, seed)
    return evaluate


# ---------------------------------------------------------------------------
# output


def write_atomic(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix="." + path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _threads():
    try:
        return max(1, int(os.environ.get(tn.THREADS_ENV, "1")))
    except ValueError:
        return 1


def _manifest(extra, started):
    return json.dumps({
        "version": __version__,
        "backend": kernels.BACKEND,
        "wall_seconds": round(time.time() - started, 3),
        **extra,
    }, indent=2, sort_keys=True, default=float) + "\n"


def run(cfg):
    started = time.time()
    out = Path(cfg.output)
    manifest_path = out.with_name(out.stem + ".manifest.json")
    if cfg.contest == "aep":
        p = cfg.params
        ms = p["m"] if isinstance(p["m"], list) else [p["m"]]
        report = aep.check_typical_bounds(p["p"], [int(m) for m in ms], p["epsilon"])
        write_atomic(out, aep_csv(report))
        write_atomic(out.with_suffix(".txt"), "\n".join(report.lines()) + "\n")
        write_atomic(manifest_path, _manifest({
            "config": cfg.text, "seed": cfg.seed, "outputs": [out.name, out.with_suffix(".txt").name],
            "all_bounds_hold": report.all_hold,
        }, started))
        return 0
    static = dict(cfg.params)
    if cfg.contest == "bitstring":
        objective = bitstring_objective(cfg.objective, static)
    elif cfg.contest == "picksix":
        objective = picksix_objective(static)
    else:
        objective = tournament_objective(cfg.objective, static)

    def evaluate(point, seed):
        return objective({**static, **point}, seed)

    grid = cfg.grid if cfg.axes else GridSpec(())
    points = sweep(grid, evaluate, seed=cfg.seed,
                   common_random_numbers=cfg.contest == "tournament", workers=_threads())
    write_atomic(out, surface_csv(points, grid.names))
    best = argmax(points)
    write_atomic(manifest_path, _manifest({
        "config": cfg.text, "seed": cfg.seed, "outputs": [out.name],
        "best": {"params": best.params, "objective": best.objective, "stderr": best.uncertainty},
    }, started))
    return 0


def aep_csv(report):
    rows = ["m,chalky_count,typical_count,rare_count,chalky_mass,typical_mass,rare_mass,bounds_hold"]
    for part in report.partitions:
        ok = all(c.holds for c in report.checks if c.m == part.m)
        c, m = part.counts, part.masses
        rows.append(",".join([str(part.m), str(c["chalky"]), str(c["typical"]), str(c["rare"]),
                              repr(m["chalky"]), repr(m["typical"]), repr(m["rare"]), str(ok)]))
    return "\n".join(rows) + "\n"


def run_figure(fig_id, out_dir, fast, seed):
    started = time.time()
    kwargs = {} if seed is None else {"seed": seed}
    panels = PRESETS[fig_id](fast=fast, **kwargs)
    out_dir = Path(out_dir)
    for panel in panels:
        write_atomic(out_dir / f"{panel.name}.csv", panel.csv())
    write_atomic(out_dir / f"{fig_id}.manifest.json", _manifest({
        "figure": fig_id, "fast": fast, "seed": seed,
        "panels": [p.summary() for p in panels],
    }, started))
    return panels


def validate_data(path):
    with open(path, newline="", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if "race_index" in header:
        card = ps.RaceCard.from_csv(path)
        return f"race card: {card.s} races, horses per race {list(card.sizes)}"
    if "team_name" in header:
        f = tn.Field.from_csv(path)
        return (f"tournament field: {f.size} teams, top {f.names[0]} ({f.elos[0]}), "
                f"bottom {f.names[-1]} ({f.elos[-1]})")
    raise ConfigError("unrecognised CSV schema (expected a race card or a tournament field)", line=1)


# ---------------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="multibracket", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="execute a sweep described by a config file")
    r.add_argument("config")
    r.add_argument("--seed", type=int, help="override the config's seed")

    f = sub.add_parser("figures", help="regenerate the data behind a figure")
    f.add_argument("figure_id")
    f.add_argument("--fast", action="store_true", help="reduced grids / sample sizes")
    f.add_argument("--out", default="figures", help="output directory")
    f.add_argument("--seed", type=int)

    a = sub.add_parser("aep", help="typical-set checks")
    asub = a.add_subparsers(dest="aep_command", required=True)
    v = asub.add_parser("verify", help="check the class-size bounds by exact counting")
    v.add_argument("--p", type=float, default=0.75)
    v.add_argument("--epsilon", type=float, default=0.1)
    v.add_argument("--m", type=int, nargs="+", default=[4, 8, 12, 16, 20])
    v.add_argument("--out", help="also write the report here")

    d = sub.add_parser("data", help="input file utilities")
    dsub = d.add_subparsers(dest="data_command", required=True)
    dv = dsub.add_parser("validate", help="check a race card or tournament field CSV")
    dv.add_argument("csv")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            if args.seed is not None:
                cfg.seed = args.seed
            return run(cfg)
        if args.command == "figures":
            if args.figure_id not in PRESETS:
                print(f"error: unknown figure id {args.figure_id!r}; valid ids: "
                      f"{', '.join(PRESETS)}", file=sys.stderr)
                return 2
            panels = run_figure(args.figure_id, args.out, args.fast, args.seed)
            for p in panels:
                print(Path(args.out) / f"{p.name}.csv")
            return 0
        if args.command == "aep":
            report = aep.check_typical_bounds(args.p, args.m, args.epsilon)
            text = "\n".join(report.lines()) + "\n"
            sys.stdout.write(text)
            if args.out:
                write_atomic(args.out, text)
            return 0 if report.all_hold else 1
        if args.command == "data":
            print(validate_data(args.csv))
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SweepError as exc:
        if isinstance(exc.cause, ResourceError):
            print(f"resource error: {exc}", file=sys.stderr)
            return 3
        if isinstance(exc.cause, (ConfigError, DomainError)):
            print(f"config error: {exc}", file=sys.stderr)
            return 2
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    except ResourceError as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 3
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:   # noqa: BLE001 - last-resort exit code
        log.debug("internal failure", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
