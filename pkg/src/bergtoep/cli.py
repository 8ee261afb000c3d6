"""Batch front end.

`bergtoep <command> --config job.json [--out dir] [--jobs N]` reads one
JSON job description, runs the requested analysis, and writes a
machine-readable report (JSON for structured results, CSV for tabular
data).  Reports embed the fully resolved configuration and serialize
floats with 17 significant digits, so reruns on the same platform are
byte-for-byte identical.

Exit codes: 0 success, 2 validation or command error, 3 compute-budget
abort, 4 verification-suite failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .berezin import QuadratureRule, WGrid, berezin_gram_grid
from .conditions import (ConditionParams, classify, invertibility_floor,
                         necessary_sup, sufficient_eps)
from .core import PolyMatrixSymbol, PowerSeries, trace_gram_field
from .dyadic import a2_constant, cz_decompose, reverse_holder, \
    reverse_holder_search
from .errors import (BergtoepError, ComputeBudget, DepthExhausted,
                     DimensionMismatch, DivergenceSuspected, ParseError,
                     RangeError, ThresholdTooLow, ZeroDenominator)
from .toeplitz import operator_norm, product_restricted
from .verify import format_result, run_all

COMMANDS = ("classify", "berezin", "a2", "cz", "revholder", "verify",
            "sweep")

DEFAULT_EPSILON = 1.0
DEFAULT_ETA = 1e-9
DEFAULT_N_RADIAL = 64
DEFAULT_LEVELS = 6
DEFAULT_K_LIST = (8, 16, 32)
DEFAULT_BUDGET = 1e9

_CONFIG_KEYS = {
    "command", "f", "g", "epsilon", "eta", "grid_levels", "n_radial",
    "n_angular", "k_list", "dyadic_level", "threshold", "budget",
    "search", "sweep", "jobs", "out",
}


# ---------------------------------------------------------------------------
# 17-significant-digit serialization


def _f17(x: float) -> str:
    """17 significant digits: enough to round-trip any double exactly."""
    return f"{float(x):.17g}"


def _json17(obj, indent: int = 0) -> str:
    """Deterministic JSON: sorted keys, fixed float formatting."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _f17(obj)
    if isinstance(obj, complex):
        return f"[{_f17(obj.real)}, {_f17(obj.imag)}]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{inner}{_json17(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_json17(v, indent + 1)}"
                 for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _compact_json17(obj) -> str:
    return " ".join(_json17(obj).split())


# ---------------------------------------------------------------------------
# symbol (de)serialization


def _parse_coeff(raw, where: str) -> complex:
    if isinstance(raw, bool):
        raise ParseError(f"{where}: boolean is not a coefficient")
    if isinstance(raw, complex):
        return raw
    if isinstance(raw, (int, float)):
        return complex(raw)
    if isinstance(raw, list):
        if len(raw) != 2 or not all(
                isinstance(p, (int, float)) and not isinstance(p, bool)
                for p in raw):
            raise ParseError(
                f"{where}: complex coefficients are [re, im] pairs, "
                f"got {raw!r}")
        return complex(raw[0], raw[1])
    raise ParseError(f"{where}: expected number or [re, im] pair, "
                     f"got {type(raw).__name__}")


def parse_symbol(obj, where: str) -> PolyMatrixSymbol:
    """Symbol schema: {"n": n, "entries": {"i,j": [c0, c1, ...]}} with
    zero-based indices and coefficients as numbers or [re, im] pairs.
    Unlisted entries are zero."""
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    unknown = set(obj) - {"n", "entries"}
    if unknown:
        raise ParseError(f"{where}: unknown keys {sorted(unknown)}")
    n = obj.get("n")
    if not isinstance(n, int) or isinstance(n, bool) or not 1 <= n <= 8:
        raise RangeError(f"{where}.n: need an integer in [1, 8]")
    entries = obj.get("entries", {})
    if not isinstance(entries, dict):
        raise ParseError(f"{where}.entries: expected an object keyed "
                         f"\"i,j\"")
    grid = [[PowerSeries.zero() for _ in range(n)] for _ in range(n)]
    for key, coeffs in entries.items():
        parts = str(key).split(",")
        try:
            i, j = (int(p) for p in parts)
        except (ValueError, TypeError):
            raise ParseError(
                f"{where}.entries[{key!r}]: keys are \"i,j\" with "
                f"integer indices") from None
        if len(parts) != 2 or not (0 <= i < n and 0 <= j < n):
            raise RangeError(
                f"{where}.entries[{key!r}]: indices out of range for "
                f"n = {n}")
        if not isinstance(coeffs, list) or len(coeffs) > 65:
            raise ParseError(
                f"{where}.entries[{key!r}]: expected a coefficient "
                f"list of degree <= 64")
        cs = [_parse_coeff(c, f"{where}.entries[{key!r}][{p}]")
              for p, c in enumerate(coeffs)]
        grid[i][j] = PowerSeries(cs) if cs else PowerSeries.zero()
    return PolyMatrixSymbol(grid)


def symbol_to_dict(f: PolyMatrixSymbol) -> dict:
    """Inverse of parse_symbol; only nonzero entries are listed and all
    coefficients are [re, im] pairs."""
    entries = {}
    for i in range(f.n):
        for j in range(f.n):
            coeffs = f.entries[i][j].coeffs
            if any(c != 0 for c in coeffs):
                entries[f"{i},{j}"] = [complex(c) for c in coeffs]
    return {"n": f.n, "entries": entries}


# ---------------------------------------------------------------------------
# job configuration


@dataclass(frozen=True)
class JobConfig:
    command: str | None
    f: PolyMatrixSymbol | None
    g: PolyMatrixSymbol | None
    epsilon: float = DEFAULT_EPSILON
    eta: float = DEFAULT_ETA
    grid_levels: int = DEFAULT_LEVELS
    n_radial: int = DEFAULT_N_RADIAL
    n_angular: int = 128
    k_list: tuple[int, ...] = DEFAULT_K_LIST
    dyadic_level: int = DEFAULT_LEVELS
    threshold: float | None = None
    budget: float = DEFAULT_BUDGET
    search: bool = False
    sweep_step: PolyMatrixSymbol | None = None
    sweep_values: tuple[float, ...] = ()
    jobs: int | None = None
    out: str | None = None

    def rule(self) -> QuadratureRule:
        return QuadratureRule(self.n_radial, self.n_angular)

    def grid(self) -> WGrid:
        return WGrid(self.grid_levels)

    def condition_params(self) -> ConditionParams:
        return ConditionParams(epsilon=self.epsilon, eta=self.eta,
                               grid=self.grid(), rule=self.rule())

    def to_dict(self) -> dict:
        d = {
            "command": self.command,
            "f": None if self.f is None else symbol_to_dict(self.f),
            "g": None if self.g is None else symbol_to_dict(self.g),
            "epsilon": self.epsilon,
            "eta": self.eta,
            "grid_levels": self.grid_levels,
            "n_radial": self.n_radial,
            "n_angular": self.n_angular,
            "k_list": list(self.k_list),
            "dyadic_level": self.dyadic_level,
            "threshold": self.threshold,
            "budget": self.budget,
            "search": self.search,
            "jobs": self.jobs,
            "out": self.out,
        }
        if self.sweep_step is not None:
            d["sweep"] = {"step": symbol_to_dict(self.sweep_step),
                          "values": list(self.sweep_values)}
        return d


def _need_number(raw, field: str, lo: float, hi: float) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ParseError(f"{field}: expected a number")
    v = float(raw)
    if not lo <= v <= hi:
        raise RangeError(f"{field}: {v!r} outside [{lo}, {hi}]")
    return v


def _need_int(raw, field: str, lo: int, hi: int) -> int:
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise ParseError(f"{field}: expected an integer")
    if not lo <= raw <= hi:
        raise RangeError(f"{field}: {raw} outside [{lo}, {hi}]")
    return raw


def parse_config(path: str) -> JobConfig:
    """Read and validate a JSON job file, applying defaults."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read config {path!r}: {exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(
            f"{path}: invalid JSON at line {exc.lineno}, column "
            f"{exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: top level must be an object")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise ParseError(f"{path}: unknown keys {sorted(unknown)}")

    command = raw.get("command")
    if command is not None and command not in COMMANDS:
        raise ParseError(f"command: {command!r} is not one of "
                         f"{', '.join(COMMANDS)}")

    f = parse_symbol(raw["f"], "f") if "f" in raw else None
    g = parse_symbol(raw["g"], "g") if "g" in raw else None
    if f is None and g is not None:
        raise ParseError("g without f makes no sense")
    if f is not None and g is None:
        g = PolyMatrixSymbol.identity(f.n)
    if f is not None and g is not None and f.n != g.n:
        raise DimensionMismatch(
            f"F is {f.n}x{f.n} but G is {g.n}x{g.n}")

    epsilon = _need_number(raw.get("epsilon", DEFAULT_EPSILON),
                           "epsilon", 1e-6, 8.0)
    eta = _need_number(raw.get("eta", DEFAULT_ETA), "eta", 1e-15, 1.0)
    grid_levels = _need_int(raw.get("grid_levels", DEFAULT_LEVELS),
                            "grid_levels", 0, 8)
    n_radial = _need_int(raw.get("n_radial", DEFAULT_N_RADIAL),
                         "n_radial", 4, 512)
    if "n_angular" in raw:
        n_angular = _need_int(raw["n_angular"], "n_angular", 8, 4096)
    else:
        deg = max((s.degree for s in (f, g) if s is not None),
                  default=4)
        n_angular = 8 * max(deg, 0) + 64

    k_raw = raw.get("k_list", list(DEFAULT_K_LIST))
    if (not isinstance(k_raw, list) or not k_raw
            or not all(isinstance(k, int) and not isinstance(k, bool)
                       for k in k_raw)):
        raise ParseError("k_list: expected a nonempty list of integers")
    k_list = tuple(_need_int(k, "k_list", 1, 256) for k in k_raw)

    dyadic_level = _need_int(raw.get("dyadic_level", DEFAULT_LEVELS),
                             "dyadic_level", 0, 12)
    threshold = None
    if "threshold" in raw:
        threshold = _need_number(raw["threshold"], "threshold",
                                 1e-12, 1e12)
    budget = _need_number(raw.get("budget", DEFAULT_BUDGET), "budget",
                          1.0, 1e15)
    search = raw.get("search", False)
    if not isinstance(search, bool):
        raise ParseError("search: expected true or false")

    sweep_step = None
    sweep_values: tuple[float, ...] = ()
    if "sweep" in raw:
        sw = raw["sweep"]
        if not isinstance(sw, dict) or set(sw) - {"step", "values"}:
            raise ParseError("sweep: expected {\"step\": symbol, "
                             "\"values\": [t, ...]}")
        if "step" not in sw or "values" not in sw:
            raise ParseError("sweep: both step and values are required")
        sweep_step = parse_symbol(sw["step"], "sweep.step")
        if f is not None and sweep_step.n != f.n:
            raise DimensionMismatch(
                f"sweep step is {sweep_step.n}x{sweep_step.n} but F is "
                f"{f.n}x{f.n}")
        vals = sw["values"]
        if not isinstance(vals, list) or not vals or len(vals) > 4096:
            raise ParseError("sweep.values: expected 1..4096 numbers")
        sweep_values = tuple(
            _need_number(v, f"sweep.values[{i}]", -1e6, 1e6)
            for i, v in enumerate(vals))

    jobs = None
    if raw.get("jobs") is not None:
        jobs = _need_int(raw["jobs"], "jobs", 1, 256)
    out = raw.get("out")
    if out is not None and not isinstance(out, str):
        raise ParseError("out: expected a directory path string")

    return JobConfig(command=command, f=f, g=g, epsilon=epsilon,
                     eta=eta, grid_levels=grid_levels,
                     n_radial=n_radial, n_angular=n_angular,
                     k_list=k_list, dyadic_level=dyadic_level,
                     threshold=threshold, budget=budget, search=search,
                     sweep_step=sweep_step, sweep_values=sweep_values,
                     jobs=jobs, out=out)


# ---------------------------------------------------------------------------
# report writing


def _write_text(out_dir: str, name: str, text: str) -> str:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def _json_report(out_dir: str, name: str, payload: dict) -> str:
    return _write_text(out_dir, name, _json17(payload) + "\n")


def _csv_report(out_dir: str, name: str, config: dict,
                header: list[str], rows: list[list]) -> str:
    lines = ["# config " + _compact_json17(config), ",".join(header)]
    for row in rows:
        lines.append(",".join(
            _f17(v) if isinstance(v, (float, np.floating))
            else str(v) for v in row))
    return _write_text(out_dir, name, "\n".join(lines) + "\n")


def _error_payload(config: dict, exc: Exception) -> dict:
    return {"config": config,
            "error": {"type": type(exc).__name__, "message": str(exc)}}


def _exit_for(exc: Exception) -> int:
    return 3 if isinstance(exc, ComputeBudget) else 2


# ---------------------------------------------------------------------------
# commands


def _cmd_classify(config: JobConfig, out_dir: str) -> int:
    report = classify(config.f, config.g, config.condition_params(),
                      k_list=config.k_list)
    payload = {"config": config.to_dict(), "report": report.to_dict()}
    _json_report(out_dir, "classify.json", payload)
    if any(msg.startswith("ComputeBudget")
           for msg in report.errors.values()):
        return 3
    return 2 if report.errors else 0


def _cmd_berezin(config: JobConfig, out_dir: str) -> int:
    grid = config.grid()
    vals = berezin_gram_grid(config.f, grid)
    n = config.f.n
    header = ["w_re", "w_im"]
    for i in range(n):
        for j in range(n):
            header += [f"b{i}{j}_re", f"b{i}{j}_im"]
    rows = []
    for p, w in enumerate(grid.points):
        row = [float(w.real), float(w.imag)]
        for i in range(n):
            for j in range(n):
                row += [float(vals[p, i, j].real),
                        float(vals[p, i, j].imag)]
        rows.append(row)
    _csv_report(out_dir, "berezin.csv", config.to_dict(), header, rows)
    return 0


def _cmd_a2(config: JobConfig, out_dir: str) -> int:
    cfg = config.to_dict()
    try:
        constant, worst = a2_constant(config.f, config.dyadic_level,
                                      config.rule(),
                                      budget=config.budget)
    except (DivergenceSuspected, ComputeBudget, BergtoepError) as exc:
        _json_report(out_dir, "a2.json", _error_payload(cfg, exc))
        return _exit_for(exc)
    payload = {"config": cfg, "constant": float(constant),
               "worst": {"j": worst.j, "k": worst.k, "l": worst.l}}
    _json_report(out_dir, "a2.json", payload)
    return 0


def _cmd_cz(config: JobConfig, out_dir: str) -> int:
    cfg = config.to_dict()
    if config.threshold is None:
        raise ParseError("cz: config needs a threshold")
    field = trace_gram_field(config.f)
    try:
        dec = cz_decompose(field, config.threshold,
                           config.dyadic_level, config.rule())
    except DepthExhausted as exc:
        payload = _error_payload(cfg, exc)
        if exc.partial is not None:
            payload["partial"] = [
                {"j": q.j, "k": q.k, "l": q.l, "average": float(a)}
                for q, a in zip(exc.partial.selected,
                                exc.partial.averages)]
            payload["unresolved"] = [
                {"j": q.j, "k": q.k, "l": q.l}
                for q in (exc.unresolved or ())]
        _json_report(out_dir, "cz.json", payload)
        return 2
    except (ThresholdTooLow, ComputeBudget, BergtoepError) as exc:
        _json_report(out_dir, "cz.json", _error_payload(cfg, exc))
        return _exit_for(exc)
    rows = [[q.j, q.k, q.l, float(a)]
            for q, a in zip(dec.selected, dec.averages)]
    _csv_report(out_dir, "cz.csv", cfg, ["j", "k", "l", "average"],
                rows)
    return 0


def _cmd_revholder(config: JobConfig, out_dir: str) -> int:
    cfg = config.to_dict()
    try:
        if config.search:
            cert = reverse_holder_search(config.f, config.rule())
            if cert is None:
                _json_report(out_dir, "revholder.json",
                             {"config": cfg, "found": False})
                return 0
            payload = {"config": cfg, "found": True}
        else:
            cert = reverse_holder(config.f, config.epsilon,
                                  config.rule())
            payload = {"config": cfg}
    except (ZeroDenominator, RangeError) as exc:
        _json_report(out_dir, "revholder.json",
                     _error_payload(cfg, exc))
        return 2
    payload["certificate"] = {
        "epsilon": cert.epsilon, "lhs": cert.lhs,
        "rhs_base": cert.rhs_base, "constant": cert.constant,
    }
    _json_report(out_dir, "revholder.json", payload)
    return 0


def _cmd_verify(config: JobConfig, out_dir: str) -> int:
    results = run_all()
    for r in results:
        print(format_result(r))
    payload = {
        "config": config.to_dict(),
        "results": [{"number": r.number, "name": r.name,
                     "passed": r.passed, "detail": r.detail}
                    for r in results],
        "passed": all(r.passed for r in results),
    }
    _json_report(out_dir, "verify.json", payload)
    return 0 if payload["passed"] else 4


def _sweep_point(payload: dict) -> dict:
    """One sweep member; runs in a worker process, so symbols travel as
    plain dicts and all errors come back serialized."""
    try:
        f0 = parse_symbol(payload["f"], "f")
        step = parse_symbol(payload["step"], "step")
        g = parse_symbol(payload["g"], "g")
        t = float(payload["t"])
        ft = f0 + step.scale(t)
        grid = WGrid(payload["grid_levels"])
        params = ConditionParams(
            epsilon=payload["epsilon"], eta=payload["eta"], grid=grid,
            rule=QuadratureRule(payload["n_radial"],
                                payload["n_angular"]))
        nec, _, _ = necessary_sup(ft, g, grid)
        suf, _ = sufficient_eps(ft, g, params)
        floor, _ = invertibility_floor(ft, g, grid)
        row = {"t": t, "necessary_sup": nec, "sufficient_sup": suf,
               "floor": floor}
        for k in payload["k_list"]:
            row[f"norm_k{k}"] = operator_norm(
                product_restricted(ft, g, int(k)))
        return row
    except Exception as exc:                    # noqa: BLE001
        return {"t": payload.get("t"),
                "error": f"{type(exc).__name__}: {exc}"}


def _cmd_sweep(config: JobConfig, out_dir: str, jobs: int) -> int:
    cfg = config.to_dict()
    if config.sweep_step is None or not config.sweep_values:
        raise ParseError("sweep: config needs a sweep section")
    base = {
        "f": symbol_to_dict(config.f),
        "g": symbol_to_dict(config.g),
        "step": symbol_to_dict(config.sweep_step),
        "epsilon": config.epsilon, "eta": config.eta,
        "grid_levels": config.grid_levels,
        "n_radial": config.n_radial, "n_angular": config.n_angular,
        "k_list": list(config.k_list),
    }
    payloads = [dict(base, t=t) for t in config.sweep_values]
    if jobs <= 1 or len(payloads) == 1:
        results = [_sweep_point(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_point, payloads))

    header = (["t", "necessary_sup", "sufficient_sup", "floor"]
              + [f"norm_k{k}" for k in config.k_list] + ["error"])
    rows = []
    budget_hit = False
    failed = False
    for r in results:
        err = r.get("error", "")
        if err:
            failed = True
            if err.startswith("ComputeBudget"):
                budget_hit = True
        rows.append([r.get(c, "") if c != "error" else err.replace(
            ",", ";") for c in header])
    _csv_report(out_dir, "sweep.csv", cfg, header, rows)
    if budget_hit:
        return 3
    return 2 if failed else 0


# ---------------------------------------------------------------------------
# driver


def apply_env_budget(config: JobConfig) -> JobConfig:
    """BERGTOEP_BUDGET in the environment overrides the config."""
    raw = os.environ.get("BERGTOEP_BUDGET")
    if raw is None:
        return config
    try:
        value = float(raw)
    except ValueError:
        raise ParseError(
            f"BERGTOEP_BUDGET: {raw!r} is not a number") from None
    if not 1.0 <= value <= 1e15:
        raise RangeError(f"BERGTOEP_BUDGET: {value!r} outside "
                         f"[1, 1e15]")
    return dataclasses.replace(config, budget=value)


def run_job(config: JobConfig, out_dir: str | None = None,
            jobs: int | None = None) -> int:
    """Dispatch one job; returns the process exit code."""
    if config.command not in COMMANDS:
        raise ParseError(f"run_job: no command selected "
                         f"(have {config.command!r})")
    needs_symbols = config.command not in ("verify",)
    if needs_symbols and config.f is None:
        raise ParseError(f"{config.command}: config needs a symbol f")
    config = apply_env_budget(config)
    out = out_dir or config.out or "."
    if jobs is None:
        jobs = config.jobs or os.cpu_count() or 1
    if config.command == "classify":
        return _cmd_classify(config, out)
    if config.command == "berezin":
        return _cmd_berezin(config, out)
    if config.command == "a2":
        return _cmd_a2(config, out)
    if config.command == "cz":
        return _cmd_cz(config, out)
    if config.command == "revholder":
        return _cmd_revholder(config, out)
    if config.command == "verify":
        return _cmd_verify(config, out)
    return _cmd_sweep(config, out, jobs)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="bergtoep",
        description="Toeplitz-product condition reports, Berezin "
                    "transforms, and dyadic weight analyses on the "
                    "Bergman space.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True,
                        help="JSON job description")
    parser.add_argument("--out", default=None,
                        help="output directory (default: config 'out' "
                             "or the working directory)")
    parser.add_argument("--jobs", type=int, default=None,
                        help="worker processes for sweeps")
    args = parser.parse_args(argv)
    try:
        config = parse_config(args.config)
        if config.command is not None and config.command != args.command:
            raise ParseError(
                f"config names command {config.command!r} but the "
                f"command line says {args.command!r}")
        config = dataclasses.replace(config, command=args.command)
        if args.jobs is not None and not 1 <= args.jobs <= 256:
            raise RangeError("--jobs: outside [1, 256]")
        return run_job(config, out_dir=args.out, jobs=args.jobs)
    except (ParseError, DimensionMismatch, RangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ComputeBudget as exc:
        print(f"budget: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
