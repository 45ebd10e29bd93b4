"""Command-line front end: ``zfmimo sweep | validate | presets``.

Exit codes: 0 success, 1 invalid input or failed validation, 2 numeric
failure at one or more sweep points.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from . import __version__
from .channel import PRESETS, ChannelConfig, FadingCase, db_to_linear, derive_params
from .distribution import amount_of_fading, snr_mgf, snr_outage, snr_pdf
from .errors import (
    ExactLawUnavailable,
    NumericOverflow,
    ParameterError,
    QuadratureError,
    ZfMimoError,
)
from .montecarlo import RNG_ID, estimate_aep, estimate_capacity
from .performance import (
    aep_approx,
    aep_exact_closed,
    aep_exact_hyp,
    aep_exact_series,
    aep_rayleigh,
    ergodic_capacity,
)

EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2

VARIABLES = {"GammaB": "gamma_b_db", "KdB": "k_factor_db", "AS": "azimuth_spread_deg"}
OUTPUTS = ("AepExact", "AepClosed", "AepSeries", "AepApprox", "AepMc", "Pdf", "Outage",
           "Capacity", "CapacityMc", "AoF")
SWEEP_KEYS = ("variable", "grid", "outputs", "mc_samples", "seed", "pdf_t", "gamma_th_db",
              "workers")


@dataclass
class SweepSpec:
    """One sweep: a scenario, the swept field, its grid and requested outputs."""

    variable: str
    grid: list
    scenario: ChannelConfig
    outputs: list
    mc_samples: int = 100_000
    seed: int = 1
    pdf_t: float = 1.0
    gamma_th_db: float = 8.2
    workers: int = 1

    def __post_init__(self):
        if self.variable not in VARIABLES:
            raise ParameterError(f"variable must be one of {sorted(VARIABLES)}")
        self.grid = [float(g) for g in self.grid]
        if not self.grid:
            raise ParameterError("grid must not be empty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ParameterError("grid must be strictly increasing")
        bad = [o for o in self.outputs if o not in OUTPUTS]
        if bad or not self.outputs:
            raise ParameterError(f"unknown or empty outputs {bad}; choose from {OUTPUTS}")
        if self.mc_samples < 1:
            raise ParameterError("mc_samples must be positive")

    def point_config(self, value: float) -> ChannelConfig:
        key = VARIABLES[self.variable]
        return self.scenario.replace(**{key: value})

    def columns(self):
        cols = [self.variable]
        for o in self.outputs:
            cols.append(o)
            if o in ("AepMc", "CapacityMc"):
                cols.append(o + "_se")
            if o == "Capacity":
                cols.append("Capacity_terms")
        cols.append("flags")
        return cols


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return f"{float(v):.12g}"


def evaluate_point(spec: SweepSpec, index: int):
    """Compute one CSV row; returns ``(index, row dict, numeric_failure)``."""
    value = spec.grid[index]
    row = {spec.variable: value}
    flags = []
    numeric_failure = False
    try:
        cfg = spec.point_config(value)
        params = derive_params(cfg)
    except ZfMimoError as exc:
        return index, row, [f"config:{type(exc).__name__}"], False
    M = cfg.modulation_order
    seed = spec.seed + index
    rician = cfg.fading_case is FadingCase.RicianRayleigh

    def run(name, fn):
        nonlocal numeric_failure
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                return fn()
        except (NumericOverflow, QuadratureError, ArithmeticError) as exc:
            numeric_failure = True
            flags.append(f"{name}:{type(exc).__name__}")
        except ZfMimoError as exc:
            flags.append(f"{name}:{type(exc).__name__}")
        return None

    for out in spec.outputs:
        if out == "AepExact":
            r = run(out, lambda: aep_exact_hyp(params, M) if rician else aep_rayleigh(params, M))
            row[out] = r.value if r else None
        elif out == "AepClosed":
            r = run(out, lambda: aep_exact_closed(params, M))
            row[out] = r.value if r else None
            if r:
                flags += [f"{out}:{f}" for f in r.flags]
        elif out == "AepSeries":
            r = run(out, lambda: aep_exact_series(params, M))
            row[out] = r.value if r else None
            if r:
                flags += [f"{out}:{f}" for f in r.flags]
        elif out == "AepApprox":
            r = run(out, lambda: aep_approx(params, M))
            row[out] = r.value if r else None
        elif out == "AepMc":
            r = run(out, lambda: estimate_aep(cfg, spec.mc_samples, seed))
            row[out] = r.mean if r else None
            row[out + "_se"] = r.std_error if r else None
        elif out == "Pdf":
            r = run(out, lambda: snr_pdf(params, spec.pdf_t))
            row[out] = r.value if r else None
            if r:
                flags += [f"{out}:{f}" for f in r.flags()]
        elif out == "Outage":
            r = run(out, lambda: snr_outage(params, db_to_linear(spec.gamma_th_db)))
            row[out] = r.value if r else None
            if r:
                flags += [f"{out}:{f}" for f in r.flags()]
        elif out == "Capacity":
            r = run(out, lambda: ergodic_capacity(params))
            row[out] = r.value if r else None
            row["Capacity_terms"] = r.terms_used if r else None
            if r:
                flags += [f"{out}:{f}" for f in r.flags()]
        elif out == "CapacityMc":
            r = run(out, lambda: estimate_capacity(cfg, spec.mc_samples, seed))
            row[out] = r.mean if r else None
            row[out + "_se"] = r.std_error if r else None
        elif out == "AoF":
            row[out] = amount_of_fading(params)
    return index, row, flags, numeric_failure


def _evaluate(args):
    return evaluate_point(*args)


def run_sweep(spec: SweepSpec, out_path) -> int:
    """Evaluate every grid point and write the CSV; returns an exit status."""
    tasks = [(spec, i) for i in range(len(spec.grid))]
    if spec.workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as ex:
            results = list(ex.map(_evaluate, tasks))
    else:
        results = [_evaluate(t) for t in tasks]
    results.sort(key=lambda r: r[0])
    buf = io.StringIO()
    buf.write(f"# zfmimo {__version__}\n")
    buf.write(f"# scenario: {spec.scenario.to_json(sort_keys=True)}\n")
    buf.write(f"# variable: {spec.variable}\n")
    buf.write(f"# seed: {spec.seed}\n")
    buf.write(f"# rng: {RNG_ID}\n")
    buf.write(f"# mc_samples: {spec.mc_samples}\n")
    buf.write(f"# pdf_t: {spec.pdf_t!r}; gamma_th_db: {spec.gamma_th_db!r}\n")
    cols = spec.columns()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    failed = False
    for _, row, flags, numeric in results:
        failed |= numeric
        w.writerow([_fmt(row.get(c)) for c in cols[:-1]] + [";".join(flags)])
    text = buf.getvalue()
    if str(out_path) == "-":
        sys.stdout.write(text)
    else:
        with open(out_path, "w", newline="") as fh:
            fh.write(text)
    return EXIT_NUMERIC if failed else EXIT_OK


# --- validation ------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    status: str  # PASS, FAIL, WARN, SKIP
    detail: str = ""


def validate(scenario: ChannelConfig, capacity: bool = False, mc_samples: int = 100_000,
             seed: int = 1) -> list:
    """Fast invariant suite for one scenario; returns a list of :class:`CheckResult`."""
    out = []
    d = np.asarray(scenario.mean_direction)
    nd = float(np.linalg.norm(d))
    out.append(CheckResult("direction-norm", "PASS" if abs(nd - 1) <= 1e-12 else "FAIL",
                           f"|d| = {nd:.15g}"))
    params = derive_params(scenario)

    m0 = snr_mgf(params, 0.0, "Series")
    out.append(CheckResult("mgf-normalization", "PASS" if abs(m0 - 1) <= 1e-10 else "FAIL",
                           f"M(0) = {m0:.15g}"))

    if scenario.nt >= 2:
        inv11 = float(np.real(np.linalg.inv(np.asarray(params.rtk))[0, 0]))
        rel = abs(inv11 - params.rinv11) / params.rinv11
        out.append(CheckResult("schur-identity", "PASS" if rel <= 1e-10 else "FAIL",
                               f"relative difference {rel:.3g}"))

    M = scenario.modulation_order
    rician = scenario.fading_case is FadingCase.RicianRayleigh
    if rician and params.a_param > 0:
        for gb in (15.0, 20.0, 25.0):
            p = derive_params(scenario.replace(gamma_b_db=gb))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                h = aep_exact_hyp(p, M).value
                if scenario.nt >= 2:
                    c = aep_exact_closed(p, M).value
                    rel = abs(c - h) / h
                    out.append(CheckResult(f"aep-closed-vs-hyp@{gb:g}dB",
                                           "PASS" if rel <= 1e-7 else "FAIL",
                                           f"relative difference {rel:.3g}"))
                s = aep_exact_series(p, M)
            if not s.diagnostics.ok:
                out.append(CheckResult(f"aep-series-vs-hyp@{gb:g}dB", "SKIP",
                                       f"series {','.join(s.flags)} at a = {p.a_param:.4g}"))
            else:
                diff = abs(s.value - h)
                out.append(CheckResult(f"aep-series-vs-hyp@{gb:g}dB",
                                       "PASS" if diff <= 1e-6 else "FAIL",
                                       f"absolute difference {diff:.3g}"))

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if rician:
            exact = aep_exact_hyp(params, M).value
        else:
            try:
                exact = aep_rayleigh(params, M).value
            except ExactLawUnavailable:
                exact = aep_approx(params, M).value
    mc = estimate_aep(scenario, mc_samples, seed)
    z = (mc.mean - exact) / mc.std_error if mc.std_error > 0 else 0.0
    out.append(CheckResult("mc-smoke-aep", "PASS" if abs(z) <= 4 else "FAIL",
                           f"analytic {exact:.6g}, MC {mc.mean:.6g} +/- {mc.std_error:.2g} "
                           f"({z:+.2f} s.e.)"))

    if capacity:
        r = ergodic_capacity(params)
        status = "PASS" if r.ok else "WARN"
        out.append(CheckResult("capacity-series", status,
                               f"value {r.value:.6g}, terms {r.terms_used}, "
                               f"flags {','.join(r.flags()) or 'none'}"))
    return out


# --- argument handling -----------------------------------------------------

_CONFIG_FIELDS = [f.name for f in fields(ChannelConfig)]
_SCALAR_FLAGS = {
    "nr": int, "nt": int, "k_factor_db": float, "azimuth_spread_deg": float,
    "theta_c_deg": float, "antenna_spacing": float, "snr_per_symbol_db": float,
    "modulation_order": int, "fading_case": str,
}


def _add_scenario_args(p):
    g = p.add_argument_group("scenario")
    g.add_argument("--preset", help="start from a built-in scenario (A1, C2, D1)")
    g.add_argument("--config", help="JSON scenario file; may also hold sweep settings")
    for name, typ in _SCALAR_FLAGS.items():
        g.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None)
    g.add_argument("--gamma-b-db", dest="gamma_b_db", type=float, default=None,
                   help="per-bit SNR in dB (alternative to --snr-per-symbol-db)")
    g.add_argument("--mean-direction", dest="mean_direction", default=None,
                   help="JSON list of [re, im] pairs")
    g.add_argument("--interferer-mean", dest="interferer_mean", default=None,
                   help="JSON nested list of [re, im] pairs, nr x (nt-1)")
    g.add_argument("--correlation-override", dest="correlation_override", default=None,
                   help="JSON nested list of [re, im] pairs, nt x nt")


def _load_document(args):
    data = {}
    if args.preset:
        key = args.preset.upper()
        if key not in PRESETS:
            raise ParameterError(f"unknown preset {args.preset!r}")
        data.update(PRESETS[key]["settings"])
    if args.config:
        with open(args.config) as fh:
            data.update(json.load(fh))
    for name in _SCALAR_FLAGS:
        v = getattr(args, name)
        if v is not None:
            data[name] = v
    for name in ("mean_direction", "interferer_mean", "correlation_override"):
        v = getattr(args, name)
        if v is not None:
            data[name] = json.loads(v)
    return data


def _build_scenario(data: dict, gamma_b_db=None) -> ChannelConfig:
    scen = {k: v for k, v in data.items() if k in _CONFIG_FIELDS}
    unknown = set(data) - set(_CONFIG_FIELDS) - set(SWEEP_KEYS) - {"gamma_b_db"}
    if unknown:
        raise ParameterError(f"unknown config fields: {sorted(unknown)}")
    if "azimuth_spread_deg" not in scen and "correlation_override" not in scen:
        raise ParameterError("azimuth_spread_deg is required (no default for this preset)")
    cfg = ChannelConfig.from_dict(scen)
    gb = gamma_b_db if gamma_b_db is not None else data.get("gamma_b_db")
    if gb is not None:
        cfg = cfg.replace(gamma_b_db=gb)
    return cfg


def _parse_grid(text):
    text = text.strip()
    if ":" in text:
        parts = [float(x) for x in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ParameterError("grid range must be start:stop:step with step > 0")
        start, stop, step = parts
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(max(n, 0))]
    return [float(x) for x in text.split(",") if x.strip()]


def build_parser():
    p = argparse.ArgumentParser(prog="zfmimo", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"zfmimo {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="evaluate outputs over a parameter grid, write CSV")
    _add_scenario_args(sw)
    sw.add_argument("--variable", choices=sorted(VARIABLES))
    sw.add_argument("--grid", help="comma list or start:stop:step")
    sw.add_argument("--outputs", help="comma list from " + ",".join(OUTPUTS))
    sw.add_argument("--mc-samples", dest="mc_samples", type=int)
    sw.add_argument("--seed", type=int)
    sw.add_argument("--pdf-t", dest="pdf_t", type=float, help="SNR at which Pdf is evaluated")
    sw.add_argument("--gamma-th-db", dest="gamma_th_db", type=float,
                    help="outage threshold in dB")
    sw.add_argument("--workers", type=int)
    sw.add_argument("-o", "--out", default="-", help="output CSV path ('-' for stdout)")

    va = sub.add_parser("validate", help="run the fast invariant suite on a scenario")
    _add_scenario_args(va)
    va.add_argument("--capacity", action="store_true", help="also check the capacity series")
    va.add_argument("--mc-samples", dest="mc_samples", type=int, default=100_000)
    va.add_argument("--seed", type=int, default=1)

    sub.add_parser("presets", help="list built-in scenarios")
    return p


def _cmd_sweep(args) -> int:
    data = _load_document(args)
    sweep = {k: data[k] for k in SWEEP_KEYS if k in data}
    for k in SWEEP_KEYS:
        v = getattr(args, k, None)
        if v is not None:
            sweep[k] = v
    if isinstance(sweep.get("grid"), str):
        sweep["grid"] = _parse_grid(sweep["grid"])
    if isinstance(sweep.get("outputs"), str):
        sweep["outputs"] = [o.strip() for o in sweep["outputs"].split(",") if o.strip()]
    for req in ("variable", "grid", "outputs"):
        if req not in sweep:
            raise ParameterError(f"--{req} is required")
    scenario = _build_scenario(data, args.gamma_b_db)
    spec = SweepSpec(scenario=scenario, **sweep)
    return run_sweep(spec, args.out)


def _cmd_validate(args) -> int:
    data = _load_document(args)
    if data.get("mean_direction") is not None:
        arr = np.asarray(data["mean_direction"], dtype=float)
        nd = float(np.sqrt(np.sum(arr ** 2)))
        if abs(nd - 1.0) > 1e-12:
            print(f"FAIL direction-norm: |d| = {nd:.15g}")
            return EXIT_INVALID
    scenario = _build_scenario(data, args.gamma_b_db)
    results = validate(scenario, capacity=args.capacity, mc_samples=args.mc_samples,
                       seed=args.seed)
    for r in results:
        print(f"{r.status} {r.name}: {r.detail}")
    return EXIT_INVALID if any(r.status == "FAIL" for r in results) else EXIT_OK


def _cmd_presets(args) -> int:
    for name, entry in PRESETS.items():
        settings = ", ".join(f"{k}={v}" for k, v in entry["settings"].items())
        print(f"{name}: {settings}\n    {entry['note']}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "validate":
            return _cmd_validate(args)
        return _cmd_presets(args)
    except (ParameterError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ZfMimoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
