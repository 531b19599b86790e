"""``mimo-sdof`` command-line front end.

Exit status: 0 when every check passes, 1 when a check fails, 2 for usage
or configuration errors.  Every subcommand accepts ``--config FILE``, a
flat TOML table whose keys are the long option names with dashes turned
into underscores; explicit flags override file values, which override the
built-in defaults.
"""

import argparse
import csv
import io
import logging
import math
import re
import sys

from .channel import FadingParams, read_trajectory_csv, synth_trajectory
from .exceptions import DecodeError, InvalidParameterError
from .phaseplan import (
    AntennaConfig,
    PhasePlan,
    Regime,
    Scheme,
    classify_regime,
    default_scheme,
    grid_oracle,
    ia_d_plan,
    optimal_plan,
)
from .rates import fmt_float, mc_rates, results_csv, sdof_slope
from .sdof import bounds_csv, fmt4, table3_csv
from .schemes import draw_compression
from .channel import generate_channel
from .verify import (
    RANK_CSV_HEADER,
    check_appendix_decomposition,
    rank_gaps,
    rank_reports,
    violated_plan,
)

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

log = logging.getLogger("mimo_sdof")

EXIT_OK, EXIT_CHECK, EXIT_USAGE = 0, 1, 2

DEFAULTS = {
    "m": None,
    "n": None,
    "max_tau": None,
    "draws": 50,
    "seed": 0,
    "tol": 1e-9,
    "snr": "10,20,30,40",
    "snr_unit": "db",
    "trials": 10_000,
    "scheme": None,
    "compare": None,
    "slope": None,
    "slope_tol": 0.05,
    "tau": None,
    "trajectory": None,
    "synth": None,
    "synth_slots": 1000,
    "distance": 10.0,
    "eta_db": None,
    "pathloss_exponent": 2.5,
    "noise_dbm": -89.0,
    "tx_power_dbm": None,
    "output": None,
    "plot_data": None,
    "layout": "long",
    "violate_security": False,
    "violate_decoding": False,
    "expect_violation": False,
    "appendix": False,
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing helpers
# ---------------------------------------------------------------------------
_RANGE = re.compile(r"^(\d+)\.\.(\d+)(?:([x+])(\d+))?$")


def parse_int_range(text):
    """Parse ``64..2048x2`` (geometric), ``1..6`` or ``1..9+2`` (arithmetic), ``2,3,5`` or ``4``."""
    if isinstance(text, int):
        return [text]
    if isinstance(text, (list, tuple)):
        return [v for part in text for v in parse_int_range(part)]
    out = []
    for part in str(text).replace(" ", "").split(","):
        if not part:
            raise UsageError(f"empty element in range {text!r}")
        m = _RANGE.match(part)
        if m:
            lo, hi, op, step = int(m[1]), int(m[2]), m[3] or "+", int(m[4] or 1)
            if lo > hi or (op == "x" and (step < 2 or lo < 1)) or step < 1:
                raise UsageError(f"bad range {part!r}")
            v = lo
            while v <= hi:
                out.append(v)
                v = v * step if op == "x" else v + step
        elif part.isdigit():
            out.append(int(part))
        else:
            raise UsageError(f"cannot parse {part!r} as an integer range")
    if any(v < 1 for v in out):
        raise UsageError(f"antenna counts must be positive in {text!r}")
    return out


def parse_float_list(text):
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    try:
        vals = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"cannot parse {text!r} as a list of numbers") from None
    if not vals:
        raise UsageError("empty number list")
    return vals


def _resolve(args):
    """Merge flags > config file > defaults into a plain dict."""
    file_vals = {}
    if getattr(args, "config", None):
        try:
            with open(args.config, "rb") as fh:
                file_vals = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        nested = [k for k, v in file_vals.items() if isinstance(v, dict)]
        if nested:
            raise UsageError(f"config file must be flat, found tables {nested}")
        unknown = sorted(set(file_vals) - set(DEFAULTS))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    merged = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        if flag is not None and flag is not False:
            merged[key] = flag
        elif key in file_vals:
            merged[key] = file_vals[key]
        else:
            merged[key] = default
    return merged


def _need(opts, *keys):
    for k in keys:
        if opts[k] is None:
            raise UsageError(f"--{k.replace('_', '-')} is required")


def _configs(opts):
    _need(opts, "m", "n")
    return [AntennaConfig(m, n) for m in parse_int_range(opts["m"]) for n in parse_int_range(opts["n"])]


class _Out:
    """Single writer: collect text, write once at the end."""

    def __init__(self, path):
        self.path = path
        self.buf = io.StringIO()

    def write(self, text):
        self.buf.write(text)

    def close(self):
        if self.path:
            with open(self.path, "w", newline="") as fh:
                fh.write(self.buf.getvalue())
        else:
            sys.stdout.write(self.buf.getvalue())


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------
def cmd_sdof_table(opts):
    _need(opts, "m", "n")
    ms, ns = parse_int_range(opts["m"]), parse_int_range(opts["n"])
    out = _Out(opts["output"])
    if opts["layout"] == "grid":
        out.write(table3_csv(ms, ns))
    else:
        out.write(bounds_csv([AntennaConfig(m, n) for m in ms for n in ns]))
    out.close()
    return EXIT_OK


def cmd_optimize(opts):
    out = _Out(opts["output"])
    w = csv.writer(out.buf, lineterminator="\n")
    w.writerow(["M", "N", "regime", "scheme", "tau1", "tau2", "tau3", "sdof",
                "grid_tau1", "grid_tau2", "grid_tau3", "grid_sdof", "agree"])
    status = EXIT_OK
    for cfg in _configs(opts):
        plan = optimal_plan(cfg)
        max_tau = opts["max_tau"] if opts["max_tau"] is not None else 4 * cfg.N
        value, gplan = grid_oracle(cfg, max_tau=int(max_tau))
        agree = value == plan.sdof(cfg)
        if not agree:
            status = EXIT_CHECK
            log.error("grid optimum %s differs from closed form %s at M=%d N=%d", value, plan.sdof(cfg), cfg.M, cfg.N)
        w.writerow([cfg.M, cfg.N, str(classify_regime(cfg)), str(plan.scheme), plan.tau1, plan.tau2, plan.tau3,
                    fmt4(plan.sdof(cfg)), gplan.tau1, gplan.tau2, gplan.tau3, fmt4(value),
                    "true" if agree else "false"])
    out.close()
    return status


def cmd_verify_ranks(opts):
    violate = "security" if opts["violate_security"] else "decoding" if opts["violate_decoding"] else None
    draws = int(opts["draws"])
    if draws < 1:
        raise UsageError("--draws must be positive")
    out = _Out(opts["output"])
    w = csv.writer(out.buf, lineterminator="\n")
    w.writerow(RANK_CSV_HEADER)
    failures = 0
    gaps_seen = 0
    checked = 0
    seed = int(opts["seed"])
    for cfg in _configs(opts):
        regime = classify_regime(cfg)
        if regime == Regime.SILENT:
            log.info("M=%d N=%d: silent regime, no rank chain", cfg.M, cfg.N)
            continue
        if violate:
            if violate == "decoding" and regime == Regime.DECODING:
                continue
            plan = violated_plan(cfg, violate)
        else:
            plan = optimal_plan(cfg)
        for d in range(draws):
            dseed = seed + 1_000_003 * cfg.M + 10_007 * cfg.N + d
            cs = generate_channel(cfg, None, FadingParams.rayleigh(), dseed, slots=plan.total_slots)
            comp = draw_compression(plan, cfg, dseed + 2**40)
            reps = rank_reports(cs, plan, comp, float(opts["tol"]))
            if opts["appendix"] and not violate:
                which = "A-appendix" if plan.scheme == Scheme.DECODING else "B-appendix"
                reps += check_appendix_decomposition(cs, plan, comp, which, float(opts["tol"]))
            for r in reps:
                w.writerow(r.row())
                if not r.passed:
                    failures += 1
                    print(f"FAIL draw={d} " + ",".join(map(str, r.row())), file=sys.stderr)
            checked += 1
            if violate:
                measured, predicted = rank_gaps(reps)[violate]
                print(f"gap {violate} M={cfg.M} N={cfg.N} draw={d} measured={measured} predicted={predicted}",
                      file=sys.stderr)
                if measured > 0:
                    gaps_seen += 1
                if measured != predicted or measured <= 0:
                    failures += 1
    out.close()
    if violate:
        if not opts["expect_violation"]:
            return EXIT_CHECK if gaps_seen or failures else EXIT_OK
        return EXIT_OK if failures == 0 and gaps_seen == checked else EXIT_CHECK
    return EXIT_OK if failures == 0 else EXIT_CHECK


def _fading(opts, have_traj):
    eta = opts["eta_db"]
    if eta is None:
        eta = -40.0 if have_traj else 0.0
    return FadingParams(eta_db=float(eta), pathloss_exponent=float(opts["pathloss_exponent"]),
                        noise_power_dbm=float(opts["noise_dbm"]))


def _trajectory(opts):
    if opts["trajectory"] and opts["synth"]:
        raise UsageError("--trajectory and --synth are mutually exclusive")
    if opts["trajectory"]:
        return read_trajectory_csv(opts["trajectory"])
    if opts["synth"]:
        return synth_trajectory(opts["synth"], int(opts["synth_slots"]), distance=float(opts["distance"]))
    return None


def _snr_list(opts, params):
    """Transmit SNRs in dB (``-inf`` for a linear 0)."""
    if opts["tx_power_dbm"] is not None:
        return [p - params.noise_power_dbm for p in parse_float_list(opts["tx_power_dbm"])]
    vals = parse_float_list(opts["slope"] if opts["slope"] is not None else opts["snr"])
    if opts["snr_unit"] == "linear":
        if any(v < 0 for v in vals):
            raise UsageError("linear SNR values must be non-negative")
        return [10 * math.log10(v) if v > 0 else -math.inf for v in vals]
    if opts["snr_unit"] != "db":
        raise UsageError("--snr-unit must be db or linear")
    return vals


def _plan_for(cfg, scheme, tau):
    regime = classify_regime(cfg)
    if scheme == Scheme.IA_D:
        if regime != Regime.ALIGNMENT:
            raise UsageError(f"ia-d needs N < M <= 2N, got M={cfg.M} N={cfg.N}")
        base = ia_d_plan(cfg)
    else:
        expected = default_scheme(cfg)
        if scheme != expected:
            raise UsageError(f"scheme {scheme} does not apply to M={cfg.M} N={cfg.N} (regime {regime} uses {expected})")
        base = optimal_plan(cfg)
    if tau is None:
        return base
    taus = [int(v) for v in parse_float_list(tau)]
    if len(taus) != 3:
        raise UsageError("--tau needs three comma-separated values")
    return PhasePlan(scheme, *taus)


def _simulate_rows(opts, configs, schemes_for):
    traj = _trajectory(opts)
    params = _fading(opts, traj is not None)
    snrs = _snr_list(opts, params)
    trials = int(opts["trials"])
    if trials < 1:
        raise UsageError("--trials must be positive")
    reports = []
    slopes = []
    for cfg in configs:
        for scheme in schemes_for(cfg):
            plan = _plan_for(cfg, scheme, opts["tau"])
            if opts["slope"] is not None:
                if len(snrs) != 2:
                    raise UsageError("--slope takes exactly two SNRs")
                s = sdof_slope(scheme, cfg, plan, snrs, trials, int(opts["seed"]), params)
                slopes.append(s)
                reports += [s.low, s.high]
            else:
                reports += mc_rates(cfg, plan, snrs, trials, int(opts["seed"]), params, traj)
    return reports, slopes


def _finish_simulation(opts, reports, slopes):
    out = _Out(opts["output"])
    out.write(results_csv(reports))
    out.close()
    if opts["plot_data"]:
        with open(opts["plot_data"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", "y", "series"])
            for r in reports:
                w.writerow([fmt_float(r.snr_db), fmt_float(r.secure_sum_rate), f"{r.scheme} M={r.config.M} N={r.config.N}"])
    status = EXIT_OK
    tol = float(opts["slope_tol"])
    for s in slopes:
        th = float(s.theoretical_sdof)
        ok = abs(s.empirical_sdof - th) <= tol * th if th > 0 else abs(s.empirical_sdof) <= tol
        print(f"slope {s.scheme} M={s.config.M} N={s.config.N} snr={fmt_float(s.snr_pair[0])},{fmt_float(s.snr_pair[1])} "
              f"empirical={fmt_float(s.empirical_sdof)} theoretical={fmt_float(th)} {'pass' if ok else 'FAIL'}",
              file=sys.stderr)
        if not ok:
            status = EXIT_CHECK
    return status


def cmd_simulate(opts):
    configs = _configs(opts)

    def schemes_for(cfg):
        first = Scheme(opts["scheme"]) if opts["scheme"] else default_scheme(cfg)
        extra = [Scheme(opts["compare"])] if opts["compare"] else []
        return [first, *extra]

    reports, slopes = _simulate_rows(opts, configs, schemes_for)
    return _finish_simulation(opts, reports, slopes)


def cmd_sweep(opts):
    """Every (M, N) of the grid with its regime's scheme, plus the comparison scheme where it applies."""
    configs = _configs(opts)

    def schemes_for(cfg):
        out = [default_scheme(cfg)]
        if opts["compare"] == "ia-d" and classify_regime(cfg) == Regime.ALIGNMENT:
            out.append(Scheme.IA_D)
        return out

    reports, slopes = _simulate_rows(opts, configs, schemes_for)
    return _finish_simulation(opts, reports, slopes)


COMMANDS = {
    "sdof-table": cmd_sdof_table,
    "optimize": cmd_optimize,
    "verify-ranks": cmd_verify_ranks,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat TOML file with option defaults")
    common.add_argument("--output", "-o", help="write CSV here instead of stdout")
    common.add_argument("-v", "--verbose", action="count", default=0)

    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--m", help="transmit antennas: 4, 2,3,5, 1..6 or 64..2048x2")
    grid.add_argument("--n", help="receive antennas, same syntax as --m")

    p = argparse.ArgumentParser(prog="mimo-sdof", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sdof-table", parents=[common, grid], help="closed-form sum-SDoF bounds")
    s.add_argument("--layout", choices=("long", "grid"), help="one row per (M, N), or the M-by-N grid")

    s = sub.add_parser("optimize", parents=[common, grid], help="closed-form vs grid-search phase durations")
    s.add_argument("--max-tau", type=int)

    s = sub.add_parser("verify-ranks", parents=[common, grid], help="numeric rank checks of the rank chains")
    s.add_argument("--draws", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--tol", type=float)
    s.add_argument("--appendix", action="store_true", help="also check the appendix factorizations")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--violate-security", action="store_true")
    g.add_argument("--violate-decoding", action="store_true")
    s.add_argument("--expect-violation", action="store_true",
                   help="with a --violate flag, succeed when every draw shows the predicted gap")

    rate_opts = argparse.ArgumentParser(add_help=False)
    rate_opts.add_argument("--snr", help="comma-separated SNR list")
    rate_opts.add_argument("--snr-unit", choices=("db", "linear"))
    rate_opts.add_argument("--trials", type=int)
    rate_opts.add_argument("--seed", type=int)
    rate_opts.add_argument("--compare", choices=("ia-d",))
    rate_opts.add_argument("--slope", help="two SNRs (dB) for an empirical SDoF slope check")
    rate_opts.add_argument("--slope-tol", type=float)
    rate_opts.add_argument("--tau", help="override the plan: tau1,tau2,tau3")
    rate_opts.add_argument("--trajectory", help="CSV with header t,tx,rx,distance_m")
    rate_opts.add_argument("--synth", choices=("fixed-distance", "roundabout"))
    rate_opts.add_argument("--synth-slots", type=int)
    rate_opts.add_argument("--distance", type=float)
    rate_opts.add_argument("--eta-db", type=float)
    rate_opts.add_argument("--pathloss-exponent", type=float)
    rate_opts.add_argument("--noise-dbm", type=float)
    rate_opts.add_argument("--tx-power-dbm", help="transmit powers; SNR = power - noise")
    rate_opts.add_argument("--plot-data", help="also write x,y,series rows here")

    s = sub.add_parser("simulate", parents=[common, grid, rate_opts], help="Monte Carlo secure sum-rate")
    s.add_argument("--scheme", choices=[x.value for x in Scheme])

    sub.add_parser("sweep", parents=[common, grid, rate_opts], help="simulate every configuration of a grid")
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s: %(message)s")
    try:
        opts = _resolve(args)
        return COMMANDS[args.command](opts)
    except (UsageError, InvalidParameterError, ValueError) as exc:
        print(f"mimo-sdof: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DecodeError as exc:
        print(f"mimo-sdof: decode failure: {exc}", file=sys.stderr)
        return EXIT_CHECK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
