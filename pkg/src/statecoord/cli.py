"""Command-line interface.

    statecoord constraint  MODEL [--policy F | --optimize-policy | --state-amplification] [--side-info]
    statecoord bounds      --mode fix-alpha --alpha 0.99 [--grid 0:0.005:0.5] [--out F.csv]
    statecoord simulate    MODEL | --toy precoded  --n 8,12,16 --trials 2000 [--out F.json]
    statecoord distortion  MODEL --d D.json | --nu NU.json  [--samples K]
    statecoord gain        MODEL

Any MODEL argument may be replaced by the built-in example ``--fig4-alpha A
--fig3-eps E``.  Exit codes: 0 achievable (or success), 1 not achievable
(or no feasible policy / gain inequality violated), 2 boundary, 3 usage or
input error, 4 other failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from . import bounds as bnd
from .constraints import (
    ACHIEVABLE,
    BOUNDARY,
    NOT_ACHIEVABLE,
    OptimizerConfig,
    correlation_gain_check,
    lossless_best,
    maximize_over_aux,
    side_info_constraint,
    state_amplification_value,
)
from .modelio import ModelFile, ParseError, load_distortion, load_model, load_objective, load_policy
from .models import InputPolicy, ModelError, assemble_target, make_fig3_channel, make_fig3_input_policy, make_fig4_source
from .objectives import NoFeasiblePolicy, max_objective, min_distortion
from .simulator import (
    CodebookTooLarge,
    InfeasibleRates,
    SimConfig,
    choose_rates,
    run_monte_carlo,
    toy_model,
)

EXIT_CODES = {ACHIEVABLE: 0, NOT_ACHIEVABLE: 1, BOUNDARY: 2}
EXIT_USAGE = 3
EXIT_FAILURE = 4
DEFAULT_SEED = 0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _int_list(text):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("block lengths must be positive integers")
    return vals


def _add_model(p, required=True):
    p.add_argument("model", nargs="?", help="model JSON file")
    p.add_argument("--fig4-alpha", type=float, help="built-in binary source with correlation alpha")
    p.add_argument("--fig3-eps", type=float, help="built-in ternary channel with noise eps")
    p.set_defaults(model_required=required)


def _add_optimizer(p):
    p.add_argument("--card-w", type=_positive_int, help="auxiliary alphabet size (default |U||S||X|+2)")
    p.add_argument("--restarts", type=_positive_int, default=32, help="ascent restarts (default 32)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"random seed (default {DEFAULT_SEED})")
    p.add_argument("--tol", type=_positive_float, default=1e-4, help="verdict tolerance in bits (default 1e-4)")
    p.add_argument("--threads", type=_positive_int, default=1, help="worker threads (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="statecoord", description="Coordination with non-causal state and lossless decoding.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constraint", help="evaluate the information constraint")
    _add_model(p)
    _add_optimizer(p)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--policy", help="JSON file with Q_x_us [u][s][x]")
    mode.add_argument("--optimize-policy", action="store_true", help="maximize over the input policy too")
    mode.add_argument("--state-amplification", action="store_true",
                      help="U = S reduction: max over Q(x|s) of I(S,X;Y) - H(S)")
    p.add_argument("--fig3-p", help="six comma-separated input probabilities for the built-in model")
    p.add_argument("--side-info", action="store_true", help="decoder observes Z from P_usz")
    p.add_argument("--out", help="write JSON here instead of stdout")

    p = sub.add_parser("bounds", help="upper/lower bound sweeps for the built-in example (CSV)")
    p.add_argument("--mode", choices=["fix-alpha", "fix-eps"], required=True)
    p.add_argument("--alpha", type=float, help="alpha for --mode fix-alpha")
    p.add_argument("--eps", type=float, help="eps for --mode fix-eps")
    p.add_argument("--grid", help="swept grid, start:step:stop or comma list "
                                  "(default 0:0.005:0.5 for eps, 0:0.01:1 for alpha)")
    p.add_argument("--restarts", type=_positive_int, default=16)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--out", help="CSV path (default stdout; summary then goes to stderr)")

    p = sub.add_parser("simulate", help="Monte-Carlo run of the random-coding scheme (JSON)")
    _add_model(p, required=False)
    p.add_argument("--toy", choices=["precoded", "constant"], help="built-in scheme instead of MODEL")
    p.add_argument("--n", type=_int_list, required=True, help="block length(s), comma separated")
    p.add_argument("--trials", type=_positive_int, default=200)
    p.add_argument("--delta", type=_positive_float, default=0.03)
    p.add_argument("--eps-typ", type=_positive_float, default=0.2)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--fixed-codebook", action="store_true", help="one codebook for all trials")
    p.add_argument("--enumerative", action="store_true",
                   help="source words: most probable sequences instead of random draws")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--out", help="write JSON here instead of stdout")

    p = sub.add_parser("distortion", help="minimal distortion / maximal objective (JSON)")
    _add_model(p)
    _add_optimizer(p)
    target = p.add_mutually_exclusive_group(required=True)
    target.add_argument("--d", help="JSON file with distortion d [u][x]")
    target.add_argument("--nu", help="JSON file with objective nu [u][s][x][y] (maximized)")
    p.add_argument("--samples", type=_positive_int, default=64, help="random policies on top of deterministic ones")
    p.add_argument("--out", help="write JSON here instead of stdout")

    p = sub.add_parser("gain", help="correlation-gain check (JSON)")
    _add_model(p)
    _add_optimizer(p)
    p.add_argument("--out", help="write JSON here instead of stdout")
    return parser


# -- helpers ---------------------------------------------------------------------

def _model(args) -> Optional[ModelFile]:
    builtin = args.fig4_alpha is not None or args.fig3_eps is not None
    if builtin:
        if args.model:
            raise UsageError("give either MODEL or --fig4-alpha/--fig3-eps, not both")
        if args.fig4_alpha is None or args.fig3_eps is None:
            raise UsageError("--fig4-alpha and --fig3-eps go together")
        return ModelFile(make_fig4_source(args.fig4_alpha), make_fig3_channel(args.fig3_eps))
    if args.model:
        return load_model(args.model)
    if args.model_required:
        raise UsageError("a MODEL file or --fig4-alpha/--fig3-eps is required")
    return None


def _config(args) -> OptimizerConfig:
    return OptimizerConfig(card_w=args.card_w, restarts=args.restarts, seed=args.seed,
                           value_tol=args.tol, workers=args.threads)


def _dump(obj, path: Optional[str]):
    text = json.dumps(obj, indent=2) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands -----------------------------------------------------------------

def cmd_constraint(args) -> int:
    m = _model(args)
    cfg = _config(args)
    if args.side_info and (args.optimize_policy or args.state_amplification):
        raise UsageError("--side-info needs a fixed policy")
    if args.state_amplification:
        res = state_amplification_value(m.source, m.channel, cfg)
        kind = "state-amplification"
    elif args.optimize_policy:
        res = lossless_best(m.source, m.channel, cfg)
        kind = "optimize-policy"
    else:
        if args.policy:
            pol = InputPolicy.from_array(load_policy(args.policy))
        elif args.fig3_p:
            pol = make_fig3_input_policy([float(t) for t in args.fig3_p.split(",")], m.source.U.size)
        elif m.policy is not None:
            pol = m.policy
        else:
            raise UsageError("no input policy: use --policy, --optimize-policy, or Q_x_us in the model")
        if args.side_info:
            res = side_info_constraint(m.source, pol, m.channel, cfg)
            kind = "side-info"
        else:
            res = maximize_over_aux(m.source, pol, m.channel, cfg)
            kind = "fixed-policy"
    out = {"mode": kind, **res.to_dict()}
    _dump(out, args.out)
    print(f"{res.verdict}: {res.value:.6f} bits", file=sys.stderr)
    return EXIT_CODES[res.verdict]


def cmd_bounds(args) -> int:
    if args.mode == "fix-alpha":
        if args.alpha is None:
            raise UsageError("--mode fix-alpha needs --alpha")
        if args.eps is not None:
            raise UsageError("--eps is swept by --grid in fix-alpha mode")
        alpha_grid = (args.alpha,)
        eps_grid = bnd.parse_grid(args.grid or "0:0.005:0.5")
    else:
        if args.eps is None:
            raise UsageError("--mode fix-eps needs --eps")
        if args.alpha is not None:
            raise UsageError("--alpha is swept by --grid in fix-eps mode")
        eps_grid = (args.eps,)
        alpha_grid = bnd.parse_grid(args.grid or "0:0.01:1")
    sweep = bnd.SweepSpec(alpha_grid, eps_grid, bnd.BoundSearch(restarts=args.restarts, seed=args.seed))
    points = bnd.run_sweep(sweep, args.mode, workers=args.threads)

    xs = [p.eps if args.mode == "fix-alpha" else p.alpha for p in points]
    var = "eps" if args.mode == "fix-alpha" else "alpha"
    summary = [
        f"{len(points)} rows; sign changes in {var}:",
        "  upper18: " + (", ".join(f"{x:.4f}" for x in bnd.sign_changes(xs, [p.upper18 for p in points])) or "none"),
        "  lower19: " + (", ".join(f"{x:.4f}" for x in bnd.sign_changes(xs, [p.lower19 for p in points])) or "none"),
        "  lower19 - upper18: " + (", ".join(
            f"{x:.4f}" for x in bnd.sign_changes(xs, [p.lower19 - p.upper18 for p in points])) or "none"),
    ]
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            bnd.write_csv(points, fh)
        print("\n".join(summary))
    else:
        bnd.write_csv(points, sys.stdout)
        print("\n".join(summary), file=sys.stderr)
    return 0


def cmd_simulate(args) -> int:
    if args.toy:
        if args.model or args.fig4_alpha is not None or args.fig3_eps is not None:
            raise UsageError("--toy replaces MODEL")
        target, aux = toy_model(args.toy)
        rates = None
        if args.toy == "constant":
            # the negative control keeps the working scheme's rates
            rates = choose_rates(*toy_model("precoded"), args.delta)
    else:
        m = _model(args)
        if m is None:
            raise UsageError("a MODEL file or --toy is required")
        if m.policy is None or m.aux is None:
            raise UsageError("simulation needs Q_x_us and Q_w_usx in the model")
        target, aux, rates = assemble_target(m.source, m.policy, m.channel), m.aux, None
    reports = []
    for n in args.n:
        cfg = SimConfig(target, aux, n, args.trials, eps_typ=args.eps_typ, delta=args.delta,
                        seed=args.seed, fixed_codebook=args.fixed_codebook,
                        source_words="enumerative" if args.enumerative else "random",
                        rates=rates, workers=args.threads)
        reports.append(run_monte_carlo(cfg).to_dict())
    totals = [r["p_total"] for r in reports]
    out = {"reports": reports,
           "trend": {"n": args.n, "p_total": totals,
                     "strictly_decreasing": all(a > b for a, b in zip(totals, totals[1:]))}}
    _dump(out, args.out)
    return 0


def cmd_distortion(args) -> int:
    m = _model(args)
    cfg = _config(args)
    nu_, ns, nx, ny = m.source.U.size, m.source.S.size, m.channel.X.size, m.channel.Y.size
    try:
        if args.d:
            r = min_distortion(m.source, m.channel, load_distortion(args.d, nu_, nx), cfg, args.samples)
            out = r.to_dict("D_star")
        else:
            r = max_objective(m.source, m.channel, load_objective(args.nu, (nu_, ns, nx, ny)), cfg,
                              args.samples)
            out = r.to_dict("value")
    except NoFeasiblePolicy as e:
        _dump({"error": "no-feasible-policy", "message": str(e)}, args.out)
        print(f"no feasible policy: {e}", file=sys.stderr)
        return 1
    _dump(out, args.out)
    return 0


def cmd_gain(args) -> int:
    m = _model(args)
    rep = correlation_gain_check(m.source, m.channel, _config(args))
    _dump(rep.to_dict(), args.out)
    return 0 if rep.holds else 1


COMMANDS = {"constraint": cmd_constraint, "bounds": cmd_bounds, "simulate": cmd_simulate,
            "distortion": cmd_distortion, "gain": cmd_gain}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ParseError) as e:
        print(f"statecoord {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelError, InfeasibleRates, CodebookTooLarge, ValueError, OSError) as e:
        print(f"statecoord {args.command}: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
