"""Command-line front end.

Every subcommand parses its inputs, calls one library function and prints
the result.  Values are in bits; CSV numbers carry 12 significant digits.

Exit codes: 0 success, 2 usage error, 3 domain error, 4 capability error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

from . import oracle
from .bounds import bound_report
from .channels import GaussianLeakageModel, QuadratureSpec, gaussian_report
from .errors import CapabilityError, DomainError
from .group import FiniteAbelianGroup
from .info import DiscreteChannel, measures_report
from .pmf import Pmf

EXIT_USAGE, EXIT_DOMAIN, EXIT_CAPABILITY = 2, 3, 4


class UsageError(Exception):
    pass


def _floats(text) -> list[float]:
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    return [float(v) for v in str(text).split(",") if v.strip()]


def _ints(text) -> list[int]:
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    return [int(v) for v in str(text).split(",") if v.strip()]


def _flag(v) -> bool:
    if isinstance(v, bool):
        return v
    if str(v).lower() in ("1", "true", "yes"):
        return True
    if str(v).lower() in ("0", "false", "no"):
        return False
    raise ValueError(v)


def _literal(v) -> str:
    return v if isinstance(v, str) else json.dumps(v)


# option name -> (converter, default) per subcommand; argparse defaults stay
# None so that explicit flags can be told apart from config-file values
OPTIONS = {
    "entropy": {
        "n_sigma": (float, 12.0), "nodes": (int, 20001),
        "pmf": (_literal, None), "channel": (_literal, None), "prior": (_literal, None),
        "model": (_literal, None), "alpha": (_floats, [0.5, 2.0, math.inf]),
        "format": (str, "json"), "out": (str, None),
    },
    "bound": {
        "n_sigma": (float, 12.0), "nodes": (int, 20001),
        "M": (int, None), "p": (_floats, None), "m": (int, 1), "mi": (_floats, None),
        "refined_valid": (_flag, False), "group": (str, None), "d": (int, None),
        "model": (_literal, None), "channel": (_literal, None),
        "format": (str, "json"), "out": (str, None),
    },
    "figures": {
        "which": (str, None), "d_max": (int, None), "m": (_ints, list(oracle.DEFAULT_M_VALUES)),
        "format": (str, "csv"), "out": (str, None),
    },
    "simulate": {
        "n_sigma": (float, 12.0), "nodes": (int, 20001),
        "group": (str, None), "d": (int, 1), "model": (_literal, None), "channel": (_literal, None),
        "m": (_ints, [1]), "trials": (int, 10000), "seed": (int, 0), "workers": (int, 1),
        "format": (str, "csv"), "out": (str, None),
    },
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maxleak", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def quadrature(p):
        p.add_argument("--n-sigma", dest="n_sigma", type=float,
                       help="Gaussian integration range in noise deviations (default 12)")
        p.add_argument("--nodes", type=int, help="quadrature node count, odd (default 20001)")

    def common(p):
        p.add_argument("--config", help="JSON file with option values (flags win)")
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--out", help="output path (default: standard output)")

    p = sub.add_parser("entropy", help="entropies and leakages of a pmf, channel or Gaussian model")
    p.add_argument("--pmf", help="JSON array, sparse JSON object, or uniform:<M>")
    p.add_argument("--channel", help="bsc:<eps>, complement:<M>, identity:<M> or a JSON matrix")
    p.add_argument("--prior", help="input pmf for --channel (default uniform)")
    p.add_argument("--model", help="Gaussian model: hw:<bits>:<sigma>, identity:<M>:<sigma> or JSON")
    p.add_argument("--alpha", help="comma-separated orders, 'inf' allowed")
    quadrature(p)
    common(p)

    p = sub.add_parser("bound", help="all bounds for given share values or share models")
    p.add_argument("--M", type=int, help="group order")
    p.add_argument("--p", help="comma-separated exp(-H_inf(X_i|Y_i)) per share")
    p.add_argument("--m", type=int, help="number of traces")
    p.add_argument("--mi", help="comma-separated I(X_i;Y_i) in bits, for the prior-art bound")
    p.add_argument("--refined-valid", dest="refined_valid", action="store_const", const=True,
                   help="allow the refined bound in the leakage")
    p.add_argument("--group", help="group as cyclic orders, e.g. 2,2,2,2 (with --model/--channel)")
    p.add_argument("--d", type=int, help="masking order (with --model/--channel)")
    p.add_argument("--model", help="Gaussian share model")
    p.add_argument("--channel", help="discrete share channel")
    quadrature(p)
    common(p)

    p = sub.add_parser("figures", help="figure data tables")
    p.add_argument("which", nargs="?", choices=sorted(oracle.FIGURES) + ["compare-d1", "compare-d2"])
    p.add_argument("--d-max", dest="d_max", type=int)
    p.add_argument("--m", help="comma-separated m values for compare-*")
    common(p)

    p = sub.add_parser("simulate", help="Monte-Carlo MAP attack on a masked implementation")
    p.add_argument("--group")
    p.add_argument("--d", type=int)
    p.add_argument("--model", help="Gaussian share model")
    p.add_argument("--channel", help="discrete share channel")
    p.add_argument("--m", help="comma-separated trace counts")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    quadrature(p)
    common(p)
    return ap


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags, config file and defaults into one validated option dict."""
    spec = OPTIONS[args.command]
    cfg = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = set(cfg) - set(spec)
        if unknown:
            raise UsageError(f"unknown config fields for {args.command}: {sorted(unknown)}")
    out = {}
    for name, (conv, default) in spec.items():
        val = getattr(args, name, None)
        if val is None:
            val = cfg.get(name)
        if val is None:
            out[name] = default
            continue
        try:
            out[name] = conv(val)
        except (TypeError, ValueError) as exc:
            raise UsageError(f"bad value for {name}: {val!r}") from exc
    if out.get("format") not in ("csv", "json"):
        raise UsageError("format must be csv or json")
    return out


def _fmt(v):
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, (list, tuple)):
        return ";".join(_fmt(x) for x in v)
    return str(v)


def render(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows if len(rows) != 1 else rows[0], indent=2, default=str) + "\n"
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v) for k, v in r.items()})
    return buf.getvalue()


def _setup(o: dict) -> oracle.MaskedSetup:
    if o["group"] is None:
        raise UsageError("--group is required")
    if (o["model"] is None) == (o["channel"] is None):
        raise UsageError("give exactly one of --model or --channel")
    grp = FiniteAbelianGroup.parse(o["group"])
    ch = (GaussianLeakageModel.parse(o["model"]) if o["model"] is not None
          else DiscreteChannel.parse(o["channel"]))
    return oracle.MaskedSetup(grp, o["d"], ch)


def _quad(o: dict) -> QuadratureSpec:
    return QuadratureSpec(o["n_sigma"], o["nodes"])


def cmd_entropy(o: dict) -> list[dict]:
    if o["model"] is not None:
        return [gaussian_report(GaussianLeakageModel.parse(o["model"]), _quad(o))]
    if o["pmf"] is None and o["channel"] is None:
        raise UsageError("give --pmf, --channel or --model")
    pmf = Pmf.parse(o["pmf"]) if o["pmf"] is not None else None
    ch = DiscreteChannel.parse(o["channel"]) if o["channel"] is not None else None
    prior = Pmf.parse(o["prior"]) if o["prior"] is not None else None
    return [measures_report(pmf, ch, prior, o["alpha"])]


def cmd_bound(o: dict) -> list[dict]:
    if o["model"] is not None or o["channel"] is not None:
        if o["d"] is None:
            raise UsageError("--d is required with --model/--channel")
        rep = oracle.setup_bound_report(_setup(o), o["m"], _quad(o))
    else:
        if o["M"] is None or o["p"] is None:
            raise UsageError("give --M and --p, or a share model")
        rep = bound_report(o["p"], o["M"], o["m"], o["mi"], o["refined_valid"])
    return [rep.to_dict()] if o["format"] == "json" else [rep.csv_row()]


def cmd_figures(o: dict) -> list[dict]:
    which = o["which"]
    if which is None:
        raise UsageError("figure name required")
    if which.startswith("compare-d"):
        return oracle.compare_series(int(which[-1]), 256, o["m"])
    return oracle.reference_figure(which, o["d_max"])


def cmd_simulate(o: dict) -> list[dict]:
    setup, quad = _setup(o), _quad(o)
    refined = oracle.refined_bound_applies(setup, quad)
    rows = []
    for m in o["m"]:
        b = oracle.masked_success_bound(setup, m, refined, quad)
        r = oracle.monte_carlo_attack(setup, m, o["trials"], o["seed"], o["workers"], bound=b)
        rows.append({"m": m, "trials": r.trials, "successes": r.successes, "ps": r.ps,
                     "ci_low": r.ci_low, "ci_high": r.ci_high, "bound": r.bound,
                     "exact_ps": r.exact_ps})
    return rows


COMMANDS = {"entropy": cmd_entropy, "bound": cmd_bound, "figures": cmd_figures,
            "simulate": cmd_simulate}


def run(argv=None) -> tuple[str, str | None]:
    """Parse ``argv``; return the rendered output and the output path (raises on errors)."""
    args = build_parser().parse_args(argv)
    o = resolve(args)
    return render(COMMANDS[args.command](o), o["format"]), o["out"]


def main(argv=None) -> int:
    try:
        text, out = run(argv)
    except SystemExit as exc:  # argparse usage errors
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"maxleak: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapabilityError as exc:
        print(f"maxleak: capability error: {exc}", file=sys.stderr)
        return EXIT_CAPABILITY
    except DomainError as exc:
        print(f"maxleak: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
