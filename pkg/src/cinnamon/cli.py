"""Command-line front end.

Subcommands: secure, verify, simulate, attack-matrix, bench,
profile validate. Exit codes: 0 success, 1 I/O or configuration error,
2 input data parse error (messages name the offending line),
3 verification failures present in a verify batch.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import attacks, bench, codec
from .errors import (
    CinnamonError,
    LayoutMismatch,
    ParseError,
    ProfileError,
    ScenarioInvalid,
)
from .freshness import FreshnessState
from .keystore import KeyStore
from .profiles import load_profile, validate_profile
from .sim import Scenario, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_REJECTS = 3


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


def _open_in(path: str):
    return sys.stdin if path == "-" else open(path, "r", encoding="utf-8")


def _open_out(path: str):
    return sys.stdout if path == "-" else open(path, "w", encoding="utf-8")


def _load_profile_arg(path: str):
    profile = load_profile(_read_text(path))
    validate_profile(profile)
    return profile


def cmd_secure(args) -> int:
    profile = _load_profile_arg(args.profile)
    keys = KeyStore.from_provisioning_file(args.keys)
    layout = profile.layout()
    states: dict[int, FreshnessState] = {}
    out = _open_out(args.out)
    try:
        with _open_in(args.infile) as handle:
            for lineno, line in enumerate(handle, start=1):
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                # Trailing annotations after the data field are ignored.
                stripped = stripped.split("  ", 1)[0]
                try:
                    ts, iface, frame = codec.parse_candump_line(stripped)
                except ParseError as exc:
                    print(f"error: line {lineno}: {exc}", file=sys.stderr)
                    return EXIT_DATA
                state = None
                if profile.uses_freshness:
                    state = states.get(frame.can_id)
                    if state is None:
                        state = FreshnessState.for_profile(frame.can_id, profile)
                        states[frame.can_id] = state
                try:
                    secured = codec.secure_frame(
                        frame.can_id, frame.data, profile, keys, state
                    )
                except LayoutMismatch as exc:
                    print(f"error: line {lineno}: {exc}", file=sys.stderr)
                    return EXIT_DATA
                print(codec.format_candump_line(ts, iface, secured), file=out)
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_verify(args) -> int:
    profile = _load_profile_arg(args.profile)
    keys = KeyStore.from_provisioning_file(args.keys)
    states: dict[int, FreshnessState] = {}
    accepted = rejected = 0
    out = _open_out(args.out)
    try:
        with _open_in(args.infile) as handle:
            for lineno, line in enumerate(handle, start=1):
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                stripped = stripped.split("  ", 1)[0]
                try:
                    ts, iface, frame = codec.parse_candump_line(stripped)
                except ParseError as exc:
                    print(f"error: line {lineno}: {exc}", file=sys.stderr)
                    return EXIT_DATA
                state = None
                if profile.uses_freshness:
                    state = states.get(frame.can_id)
                    if state is None:
                        state = FreshnessState.for_profile(frame.can_id, profile)
                        states[frame.can_id] = state
                try:
                    payload = codec.verify_frame(frame, profile, keys, state)
                except CinnamonError as exc:
                    rejected += 1
                    print(
                        f"line {lineno}: reject {type(exc).__name__} "
                        f"id=0x{frame.can_id:03X}",
                        file=sys.stderr,
                    )
                    continue
                accepted += 1
                plain = codec.CanFrame(frame.can_id, len(payload), payload)
                print(codec.format_candump_line(ts, iface, plain), file=out)
                print(
                    f"line {lineno}: accept id=0x{frame.can_id:03X} "
                    f"payload={payload.hex().upper()}",
                    file=sys.stderr,
                )
    finally:
        if out is not sys.stdout:
            out.close()
    total = accepted + rejected
    print(f"verified {total} frames: {accepted} accepted, {rejected} rejected",
          file=sys.stderr)
    return EXIT_REJECTS if rejected else EXIT_OK


def cmd_simulate(args) -> int:
    scenario = Scenario.from_file(args.scenario)
    trace = run_scenario(scenario)
    out = _open_out(args.out)
    try:
        out.write(trace.render())
    finally:
        if out is not sys.stdout:
            out.close()
    print(
        f"simulated {len(trace.events)} transmissions, "
        f"{len(trace.decisions)} decisions (trace sha256 {trace.sha256()[:16]}...)",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_attack_matrix(args) -> int:
    seed = args.seed
    campaign = None
    freshness = True
    if args.scenario:
        doc = json.loads(_read_text(args.scenario))
        seed = int(doc.get("seed", seed))
        campaign = doc.get("campaign")
        freshness = bool(doc.get("freshness", True))
    matrix, results = attacks.run_matrix(seed=seed, campaign=campaign,
                                         freshness=freshness)
    print(matrix.as_text())
    for result in results:
        for note in result.notes:
            print(f"note [{result.kind}/{result.mode}]: {note}")
    if args.out:
        payload = {
            "seed": seed,
            "matrix": matrix.to_dict(),
            "results": [
                {
                    "kind": r.kind,
                    "mode": r.mode,
                    "succeeded": r.succeeded,
                    "evidence": r.evidence,
                    "notes": list(r.notes),
                }
                for r in results
            ],
        }
        with open(args.out, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2)
            handle.write("\n")
    return EXIT_OK


def cmd_bench(args) -> int:
    profile = _load_profile_arg(args.profile) if args.profile else None
    reports = bench.run_bench(
        profile=profile, iterations=args.iterations, seed=args.seed
    )
    print(f"# {reports[0].hardware}")
    for report in reports:
        print(report.line())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            json.dump([r.as_dict() for r in reports], handle, indent=2)
            handle.write("\n")
    return EXIT_OK


def cmd_profile_validate(args) -> int:
    profile = load_profile(_read_text(args.profile))
    layout = validate_profile(profile)
    print(f"profile {profile.name!r} is valid")
    print(
        f"layout: payload {layout.payload_bits} bits | "
        f"FVT {layout.fvt_bits} bits | MACT {layout.mact_bits} bits"
    )
    print(f"encryption: {profile.algorithm_encryption or 'none'}")
    print(f"freshness: {'yes' if profile.uses_freshness else 'no'}")
    return EXIT_OK


def _bench_iterations(text: str) -> int:
    value = int(text)
    if value < bench.MIN_ITERATIONS:
        raise argparse.ArgumentTypeError(
            f"iterations must be at least {bench.MIN_ITERATIONS}"
        )
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cinnamon",
        description="Confidential, integral and authentic CAN frames: "
                    "secure/verify pipelines, bus simulation, attack matrix, "
                    "latency benchmark.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("secure", help="secure candump lines (payload in, dlc-8 out)")
    p.add_argument("--profile", required=True, help="profile config file")
    p.add_argument("--keys", required=True, help="key provisioning JSON")
    p.add_argument("--in", dest="infile", default="-", help="input file (default stdin)")
    p.add_argument("--out", default="-", help="output file (default stdout)")
    p.set_defaults(func=cmd_secure)

    p = sub.add_parser("verify", help="verify secured candump lines")
    p.add_argument("--profile", required=True)
    p.add_argument("--keys", required=True)
    p.add_argument("--in", dest="infile", default="-")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="run a scenario file, emit the trace")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("attack-matrix",
                       help="run all six threats in both modes, print the matrix")
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--scenario", help="optional matrix config JSON")
    p.add_argument("--out", help="write matrix + evidence as JSON")
    p.set_defaults(func=cmd_attack_matrix)

    p = sub.add_parser("bench", help="measure secure/verify latency")
    p.add_argument("--profile", help="profile config file (default: built-in profile-1)")
    p.add_argument("--iterations", type=_bench_iterations, default=20_000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", help="write reports as JSON")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("profile", help="profile tools")
    psub = p.add_subparsers(dest="profile_command", required=True)
    pv = psub.add_parser("validate", help="validate a profile config file")
    pv.add_argument("--profile", required=True)
    pv.set_defaults(func=cmd_profile_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ProfileError, ScenarioInvalid) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParseError as exc:
        # Config-level parse failures (profile/keys documents).
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CinnamonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
