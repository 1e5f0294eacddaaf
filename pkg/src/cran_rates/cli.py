"""Command-line surface: model ingestion, scheme sweeps, verification runs.

Exit codes: 0 success, 2 config or schema problem, 3 evaluator precondition
failure, 4 model outside the supported domain, 5 verification failure.
Output files are written atomically (temp file plus rename), UTF-8 with LF
line endings, floats at six significant digits in CSV.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import dm_schemes, gaussian_info, gaussian_schemes, submodular, wyner
from .errors import DomainError, PreconditionError, SchemaError
from .optimize import DEFAULT_SEED
from .regions import Infeasible
from .runtime import parallel_map
from .sampling import random_dm_instance, rng_from_seed

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_DOMAIN = 4
EXIT_VERIFY = 5

DM_SCHEMES = ("capacity-class", "cf-jd", "cf-sd", "cf-ssd")
GAUSSIAN_SCHEMES = ("gaussian-ts", "gaussian-no-ts", "cutset")


def _atomic_write(path: str, text: str):
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-cran-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _parse_seed(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError:
        pass
    try:
        return int(text, 16)
    except ValueError as exc:
        raise SchemaError(f"cannot parse seed {text!r} as an integer") from exc


@dataclasses.dataclass
class SweepSpec:
    var: str
    lo: float
    hi: float
    steps: int
    scale: str  # "linear" or "dB"

    def grid(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)


def _parse_sweep(text: str) -> SweepSpec:
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise SchemaError(f"sweep spec must be VAR:LO:HI:STEPS[:dB], got {text!r}")
    var = parts[0]
    try:
        lo, hi, steps = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError as exc:
        raise SchemaError(f"bad sweep bounds in {text!r}: {exc}") from exc
    scale = "linear"
    if len(parts) == 5:
        if parts[4] not in ("dB", "linear"):
            raise SchemaError(f"sweep scale must be 'dB' or 'linear', got {parts[4]!r}")
        scale = parts[4]
    if not lo < hi:
        raise SchemaError(f"sweep bounds must be ordered, got [{lo}, {hi}]")
    if steps < 2:
        raise SchemaError(f"sweep needs at least 2 steps, got {steps}")
    return SweepSpec(var=var, lo=lo, hi=hi, steps=steps, scale=scale)


def _load_model_doc(path: str) -> dict:
    if not os.path.exists(path):
        raise SchemaError(f"model file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


# ---------------------------------------------------------------------------
# region
# ---------------------------------------------------------------------------

def cmd_region(args) -> int:
    doc = _load_model_doc(args.model)
    kind = doc.get("kind")
    schemes = [s.strip() for s in args.scheme.split(",") if s.strip()]
    if not schemes:
        raise SchemaError("no scheme given")
    results = {}
    metadata = {"model_path": args.model, "kind": kind, "q_card": args.q_card}

    if kind == "dm":
        model, policy = dm_schemes.model_from_json(doc)
        if policy is None:
            raise SchemaError(f"{args.model}: dm model document carries no policy")
        joint = dm_schemes.assemble_joint(model, policy)
        metadata["policy"] = {
            "q_alphabet": model.q_alphabet,
            "x_alphabets": list(model.x_alphabets),
            "u_alphabets": list(model.u_alphabets),
            "fronthaul_bits": list(model.fronthaul),
        }
        for scheme in schemes:
            if scheme not in DM_SCHEMES:
                raise SchemaError(f"unknown dm scheme {scheme!r}; choose from {DM_SCHEMES}")
            if scheme == "capacity-class":
                region = dm_schemes.region_capacity_class(model, policy, joint, markov_tol=args.tol)
            elif scheme == "cf-jd":
                region = dm_schemes.region_cf_jd(model, policy, joint)
            elif scheme == "cf-sd":
                region = dm_schemes.region_cf_sd(model, policy, joint)
            else:
                region = dm_schemes.region_cf_ssd(
                    model, policy, tuple(range(model.K)), tuple(range(model.L)), joint
                )
            if isinstance(region, Infeasible):
                results[scheme] = {
                    "feasible": False,
                    "violated_relays": sorted(region.violated),
                    "deficit_bits": region.deficit_bits,
                }
            else:
                results[scheme] = {"feasible": True, "region": region.to_jsonable()}
    elif kind == "gaussian":
        model = gaussian_info.model_from_json(doc)
        for scheme in schemes:
            if scheme not in GAUSSIAN_SCHEMES:
                raise SchemaError(f"unknown gaussian scheme {scheme!r}; choose from {GAUSSIAN_SCHEMES}")
            if scheme == "cutset":
                region = gaussian_schemes.cutset_region(model)
                results[scheme] = {"feasible": True, "region": region.to_jsonable()}
            else:
                if scheme == "gaussian-ts":
                    out = gaussian_schemes.region_gaussian_ts(model, q_card=args.q_card, seed=args.seed)
                else:
                    out = gaussian_schemes.region_gaussian_no_ts(model, seed=args.seed)
                results[scheme] = {
                    "feasible": True,
                    "region": out.region.to_jsonable(),
                    "optimizer": {
                        ",".join(str(u) for u in sorted(t)): meta
                        for t, meta in out.opt_meta.items()
                    },
                }
    else:
        raise SchemaError(f"{args.model}: field 'kind' must be 'dm' or 'gaussian', got {kind!r}")

    out_doc = {"command": "region", "schemes": results, "metadata": metadata}
    _atomic_write(args.out, _dump_json(out_doc))
    return EXIT_OK


# ---------------------------------------------------------------------------
# wyner
# ---------------------------------------------------------------------------

def cmd_wyner(args) -> int:
    schemes = (
        list(wyner.ALL_SCHEMES)
        if args.scheme == "all"
        else [s.strip() for s in args.scheme.split(",") if s.strip()]
    )
    for s in schemes:
        if s not in wyner.ALL_SCHEMES:
            raise SchemaError(f"unknown wyner scheme {s!r}; choose from {wyner.ALL_SCHEMES}")
    base = wyner.WynerModel(K=args.k, gamma=args.gamma, P=1.0, C=args.c)
    spec = _parse_sweep(args.sweep)

    def one(p_db: float):
        p = 10.0 ** (p_db / 10.0) if spec.scale == "dB" else p_db
        c = wyner.dof_fronthaul(p) if args.dof else args.c
        model = dataclasses.replace(base, P=p, C=c)
        return {s: wyner.rate_by_scheme(model, s, q_card=args.q_card) for s in schemes}

    grid = [float(v) for v in spec.grid()]
    values = parallel_map(one, grid)

    cols = sorted(schemes)
    lines = ["P_dB," + ",".join(cols)]
    for p_db, vals in zip(grid, values):
        p_db_out = p_db if spec.scale == "dB" else 10.0 * math.log10(p_db)
        lines.append(f"{p_db_out:.6g}," + ",".join(f"{vals[c]:.6g}" for c in cols))
    _atomic_write(args.out, "\n".join(lines) + "\n")

    sidecar = {
        "model": {"K": args.k, "gamma": args.gamma, "C": "5*log10(P)" if args.dof else args.c},
        "schemes": cols,
        "sweep": dataclasses.asdict(spec),
        "q_card": args.q_card,
    }
    _atomic_write(_sidecar_path(args.out), _dump_json(sidecar))
    return EXIT_OK


def _sidecar_path(csv_path: str) -> str:
    root, _ = os.path.splitext(csv_path)
    return root + "_params.json"


# ---------------------------------------------------------------------------
# example1
# ---------------------------------------------------------------------------

def cmd_example1(args) -> int:
    try:
        c_values = [float(c) for c in args.c.split(",") if c.strip()]
    except ValueError as exc:
        raise SchemaError(f"bad --c list {args.c!r}: {exc}") from exc
    if not c_values:
        raise SchemaError("--c must list at least one fronthaul capacity")
    spec = _parse_sweep(args.sweep)
    grid = [float(v) for v in spec.grid()]

    for c in c_values:
        def one(p_db: float, c=c):
            return gaussian_schemes.example1_curves(args.a, c, [p_db], q_card=args.q_card)

        rows = [r for chunk in parallel_map(one, grid) for r in chunk]
        path = args.out if len(c_values) == 1 else _suffixed(args.out, f"_c{c:g}")
        _atomic_write(path, gaussian_schemes.curves_to_csv(rows))
    return EXIT_OK


def _suffixed(path: str, suffix: str) -> str:
    root, ext = os.path.splitext(path)
    return root + suffix + ext


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    if args.instances < 1:
        raise SchemaError(f"--instances must be >= 1, got {args.instances}")
    if not 1 <= args.k <= 4:
        raise SchemaError("--k must be between 1 and 4 (ordering enumeration)")
    rng = rng_from_seed(args.seed)
    seeds = [int(s) for s in rng.integers(0, 2**63 - 1, size=args.instances)]

    def one(seed: int):
        local = rng_from_seed(seed)
        model, policy = random_dm_instance(local, L=args.l, K=args.k)
        report = submodular.verify_domination(model, policy, tol=args.tol)
        return report

    reports = parallel_map(one, seeds)
    failures = [i for i, r in enumerate(reports) if not r.passed]
    doc = {
        "command": "verify",
        "instances": args.instances,
        "K": args.k,
        "L": args.l,
        "seed": args.seed,
        "failures": failures,
        "worst_rate_deficit_bits": max(r.worst_rate_deficit for r in reports),
        "worst_cost_excess_bits": max(r.worst_cost_excess for r in reports),
        "reports": [r.to_jsonable() for r in reports] if args.full_report else None,
    }
    _atomic_write(args.out, _dump_json(doc))
    if failures:
        print(f"domination FAILED on {len(failures)} of {args.instances} instances", file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cran-rates", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", default=None, help="output path")
        sp.add_argument("--seed", type=_parse_seed, default=DEFAULT_SEED, metavar="HEX")
        sp.add_argument("--q-card", type=int, default=2, dest="q_card")
        sp.add_argument("--tol", type=float, default=1e-9)

    sp = sub.add_parser("region", help="evaluate a rate region for a model file")
    sp.add_argument("--model", required=True)
    sp.add_argument("--scheme", default="cf-jd", help="comma list, e.g. cf-jd,capacity-class")
    common(sp)

    sp = sub.add_parser("wyner", help="circular Wyner per-cell rate sweep")
    sp.add_argument("--k", type=int, default=3)
    sp.add_argument("--gamma", type=float, default=1.0 / math.sqrt(2.0))
    sp.add_argument("--c", type=float, default=3.5)
    sp.add_argument("--dof", action="store_true", help="tie C to 5*log10(P)")
    sp.add_argument("--scheme", default="all")
    sp.add_argument("--sweep", default="P:-10:30:81:dB")
    common(sp)

    sp = sub.add_parser("example1", help="single-user two-relay example sweep")
    sp.add_argument("--a", type=float, default=1.0)
    sp.add_argument("--c", default="0.5,6")
    sp.add_argument("--sweep", default="P:-20:20:41:dB")
    common(sp)

    sp = sub.add_parser("verify", help="randomized sum-rate domination verification")
    sp.add_argument("--instances", type=int, default=100)
    sp.add_argument("--k", type=int, default=2)
    sp.add_argument("--l", type=int, default=1)
    sp.add_argument("--full-report", action="store_true")
    common(sp)
    return p


_DEFAULT_OUT = {
    "region": "region.json",
    "wyner": "wyner.csv",
    "example1": "example1.csv",
    "verify": "verify_report.json",
}

_HANDLERS = {
    "region": cmd_region,
    "wyner": cmd_wyner,
    "example1": cmd_example1,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors already
        return int(exc.code or 0)
    if args.out is None:
        args.out = _DEFAULT_OUT[args.command]
    try:
        return _HANDLERS[args.command](args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreconditionError as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except DomainError as exc:
        print(f"unsupported model: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
