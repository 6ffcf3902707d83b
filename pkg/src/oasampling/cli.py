"""Command-line entry point: ``oasampling <command> [flags]``.

Exit codes: 0 success (all verdicts pass), 1 a verdict failed, 2 usage or
configuration error. Every command writes ``<out>.manifest.json`` next to its
output; ``oasampling rerun <manifest>`` replays it.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .anova import decompose
from .anova import get_integrand
from .errors import OASamplingError
from .gf_oa import construct_bose_oa, verify_strength, write_oa
from .harness import ExperimentConfig, run_experiment
from .randomize import SeedSpec, expand_to_latin, randomize_symbols, tang_randomize
from .sampler import (
    Design,
    check_bivariate_stratification,
    check_univariate_latin,
    sample_lhs,
    sample_oalh,
    sample_oalh_tang,
    sample_oas,
    sample_srs,
    write_sample_csv,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _manifest_path(out: Path) -> Path:
    return out.with_name(out.name + ".manifest.json")


def _write_manifest(command, resolved, master_seed, outputs, started):
    manifest = {
        "command": command,
        "config": resolved,
        "version": __version__,
        "master_seed": master_seed,
        "outputs": [str(p) for p in outputs],
        "duration_s": round(time.perf_counter() - started, 3),
    }
    path = _manifest_path(Path(outputs[0]))
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _ok(flag: bool) -> str:
    return "ok" if flag else "FAIL"


def cmd_construct(q: int, d: int, out) -> int:
    started = time.perf_counter()
    A = construct_bose_oa(q, d)
    out = Path(out)
    write_oa(A, out)
    good = verify_strength(A, 2)
    print(f"OA({A.n}, {A.d}, {A.q}, {A.t}) written to {out}; strength-2 check: {_ok(good)}")
    _write_manifest("construct", {"q": q, "d": d, "out": str(out)}, None, [out], started)
    return EXIT_OK if good else EXIT_FAIL


def _pipeline_sample(design: Design, q: int, d: int, seed: SeedSpec):
    if design is Design.SRS:
        return sample_srs(q * q, d, seed)
    if design is Design.LHS:
        return sample_lhs(q * q, d, seed)
    A_star = randomize_symbols(construct_bose_oa(q, d), seed)
    if design is Design.OAS:
        return sample_oas(A_star, seed)
    A_dd = expand_to_latin(A_star, seed)
    if design is Design.OALH:
        return sample_oalh(A_dd, seed)
    return sample_oalh_tang(tang_randomize(A_dd, seed), seed)


def cmd_sample(design: str, q: int, d: int, seed: int, out, replicate: int = 0) -> int:
    started = time.perf_counter()
    design = Design.parse(design)
    spec = SeedSpec(seed, replicate)
    S = _pipeline_sample(design, q, d, spec)
    out = Path(out)
    write_sample_csv(S, out)
    print(f"{design.value} sample of {S.n} points in d={S.d} written to {out}")
    checks = []
    if design in (Design.OAS, Design.OALH, Design.OALH_TANG):
        checks.append(("bivariate stratification", check_bivariate_stratification(S, q)))
    if design in (Design.OALH, Design.OALH_TANG):
        checks.append((f"univariate latin ({q * q} bins)", check_univariate_latin(S, q * q)))
    if design is Design.LHS:
        checks.append((f"univariate latin ({S.n} bins)", check_univariate_latin(S, S.n)))
    for name, flag in checks:
        print(f"{name}: {_ok(flag)}")
    resolved = {"design": design.value, "q": q, "d": d, "seed": seed, "replicate": replicate,
                "out": str(out)}
    _write_manifest("sample", resolved, seed, [out], started)
    return EXIT_OK if all(flag for _, flag in checks) else EXIT_FAIL


def cmd_decompose(integrand: str, d: int, m: int, out) -> int:
    started = time.perf_counter()
    dec = decompose(get_integrand(integrand, d), m)
    out = Path(out)
    out.write_text(dec.to_json() + "\n")
    print(f"{integrand} d={d} m={m}: mu={dec.mu!r} frem_l2={dec.frem_l2!r}")
    _write_manifest("decompose", {"integrand": integrand, "d": d, "m": m, "out": str(out)}, None,
                    [out], started)
    return EXIT_OK


def _load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        if "command" in data:
            if data["command"] != "verify":
                raise UsageError(f"manifest is for {data['command']!r}, not verify")
            data = data["config"]["experiment"]
        return ExperimentConfig.from_dict(data)
    return ExperimentConfig.from_text(text)


def cmd_verify(config_path, out=None, threads=None, seed=None, replicates=None,
               replicates_csv=None) -> int:
    started = time.perf_counter()
    cfg = _load_config(config_path)
    if threads is not None:
        cfg.threads = threads
    if seed is not None:
        cfg.master_seed = seed
    if replicates is not None:
        cfg.replicates = replicates
    report = run_experiment(cfg)
    out = Path(out) if out else Path(config_path).with_suffix(".report.json")
    out.write_text(report.to_json())
    outputs = [out]
    if replicates_csv:
        report.write_replicates_csv(replicates_csv)
        outputs.append(Path(replicates_csv))
    for name in sorted(report.verdicts):
        v = report.verdicts[name]
        print(f"{'PASS' if v['pass'] else 'FAIL'}  {name}")
    print(f"report written to {out}")
    resolved = {"experiment": cfg.to_dict(), "out": str(out),
                "replicates_csv": str(replicates_csv) if replicates_csv else None}
    _write_manifest("verify", resolved, cfg.master_seed, outputs, started)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_rerun(manifest_path, out=None) -> int:
    """Replay a manifest, optionally redirecting the primary output."""
    manifest = json.loads(Path(manifest_path).read_text())
    cfg = dict(manifest["config"])
    if out is not None:
        cfg["out"] = str(out)
    command = manifest["command"]
    if command == "construct":
        return cmd_construct(cfg["q"], cfg["d"], cfg["out"])
    if command == "sample":
        return cmd_sample(cfg["design"], cfg["q"], cfg["d"], cfg["seed"], cfg["out"], cfg["replicate"])
    if command == "decompose":
        return cmd_decompose(cfg["integrand"], cfg["d"], cfg["m"], cfg["out"])
    if command == "verify":
        return cmd_verify(manifest_path, cfg["out"])
    raise UsageError(f"unknown command in manifest: {command!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oasampling", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", help="write a Bose OA(q^2, d, q, 2)")
    c.add_argument("--q", type=int, required=True)
    c.add_argument("--d", type=int, required=True)
    c.add_argument("--out", required=True)

    s = sub.add_parser("sample", help="draw one randomized design on [0,1)^d")
    s.add_argument("--design", required=True, help="oas, oalh, oalh_tang, srs or lhs")
    s.add_argument("--q", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--replicate", type=int, default=0)
    s.add_argument("--out", required=True)

    dc = sub.add_parser("decompose", help="grid ANOVA decomposition of a registered integrand")
    dc.add_argument("--integrand", required=True)
    dc.add_argument("--d", type=int, required=True)
    dc.add_argument("--m", type=int, default=128)
    dc.add_argument("--out", required=True)

    v = sub.add_parser("verify", help="run an experiment config and judge its verdicts")
    v.add_argument("--config", required=True, help="key=value config or a verify manifest")
    v.add_argument("--out")
    v.add_argument("--threads", type=int)
    v.add_argument("--seed", type=int)
    v.add_argument("--replicates", type=int)
    v.add_argument("--replicates-csv")

    r = sub.add_parser("rerun", help="replay a run manifest")
    r.add_argument("manifest")
    r.add_argument("--out")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "construct":
            return cmd_construct(args.q, args.d, args.out)
        if args.command == "sample":
            return cmd_sample(args.design, args.q, args.d, args.seed, args.out, args.replicate)
        if args.command == "decompose":
            return cmd_decompose(args.integrand, args.d, args.m, args.out)
        if args.command == "verify":
            return cmd_verify(args.config, args.out, args.threads, args.seed, args.replicates,
                              args.replicates_csv)
        return cmd_rerun(args.manifest, args.out)
    except (OASamplingError, UsageError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
