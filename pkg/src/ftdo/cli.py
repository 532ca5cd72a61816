"""Umbrella command line: ftdo {oracle|stars|spanner|stream|verify|bench}.

Graphs are edge-list text (header "n m", then "u v" or "u v w" lines);
deletion and pair files are plain "u v" lines with '#' comments. Report
paths write delimited output (JSONL/CSV) plus a PNG figure alongside.
FTDO_SEED overrides scenario seeds.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

from .errors import FtdoError
from .graph import UNREACHABLE, Graph, edge_id, format_edge_list, parse_edge_list
from .oracle import ExpanderOracle, build_oracle
from .spanner import SpannerSketch, build_spanner_sketch, recover_spanner
from .stars import StarOracle, build_star_oracle
from .streaming import MODE_ORACLE, MODE_SPANNER, StreamState, parse_events
from .verify import (
    PRESETS,
    Scenario,
    calibrated_oracle_config,
    calibrated_spanner_config,
    calibrated_star_config,
    calibrated_stream_config,
    run_verification,
    space_sweep,
)


def _read_pairs(path: str, n: int) -> list[tuple[int, int]]:
    pairs = []
    for ln in Path(path).read_text().splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        a, b = ln.split()[:2]
        pairs.append((int(a), int(b)))
    return pairs


def _read_deletions(path: str, n: int) -> frozenset[int]:
    out = set()
    for ln in Path(path).read_text().splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        parts = ln.split()
        out.add(edge_id(int(parts[0]), int(parts[1]), n))
    return frozenset(out)


def _load_graph(path: str) -> Graph:
    return parse_edge_list(Path(path).read_text())


def _fmt(ans) -> str:
    return "unreachable" if ans is UNREACHABLE else str(ans)


def _emit_answers(pairs, query, out_path=None):
    lines = [f"{a} {b} {_fmt(query(a, b))}" for a, b in pairs]
    text = "\n".join(lines) + "\n"
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)
    return lines


def _seed_override(seed: int) -> int:
    env = os.environ.get("FTDO_SEED")
    return int(env) if env else seed


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ftdo", description=__doc__)
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("oracle", help="deterministic expander-based distance oracle")
    osub = p.add_subparsers(dest="sub", required=True)
    b = osub.add_parser("build")
    b.add_argument("--graph", required=True)
    b.add_argument("--faults", type=int, required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--d-target", type=int)
    b.add_argument("--stop-edges", type=int)
    b.add_argument("--phi", help="expansion target as NUM/DEN")
    b.add_argument("--c-stretch", type=float, default=1.0)
    b.add_argument("--deg-exponent", type=int, default=1, choices=(1, 2))
    q = osub.add_parser("query")
    q.add_argument("--oracle", required=True)
    q.add_argument("--delete", required=True)
    q.add_argument("--pairs", required=True)
    q.add_argument("--out")

    p = sub.add_parser("stars", help="stretch-7 star-covering oracle")
    ssub = p.add_subparsers(dest="sub", required=True)
    b = ssub.add_parser("build")
    b.add_argument("--graph", required=True)
    b.add_argument("--faults", type=int, required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--cover-multiplier", type=float)
    b.add_argument("--target-multiplier", type=float)
    q = ssub.add_parser("query")
    q.add_argument("--oracle", required=True)
    q.add_argument("--delete", required=True)
    q.add_argument("--pairs", required=True)
    q.add_argument("--out")

    p = sub.add_parser("spanner", help="oblivious spanner sketch")
    psub = p.add_subparsers(dest="sub", required=True)
    b = psub.add_parser("sketch")
    b.add_argument("--graph", required=True)
    b.add_argument("--faults", type=int, required=True)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True)
    b.add_argument("--d-floor", type=int)
    b.add_argument("--comp-target", type=int)
    r = psub.add_parser("recover")
    r.add_argument("--sketch", required=True)
    r.add_argument("--delete", required=True)
    r.add_argument("--out", required=True)

    p = sub.add_parser("stream", help="bounded-deletion stream processing")
    p2 = p.add_subparsers(dest="sub", required=True)
    r = p2.add_parser("run")
    r.add_argument("--events", required=True)
    r.add_argument("--vertices", type=int, required=True)
    r.add_argument("--faults", type=int, required=True)
    r.add_argument("--mode", choices=(MODE_ORACLE, MODE_SPANNER), default=MODE_ORACLE)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--query", help="pairs file (oracle mode)")
    r.add_argument("--recover", help="output edge list (spanner mode)")
    r.add_argument("--report", help="JSON report path")
    r.add_argument("--d-target", type=int)
    r.add_argument("--cap-target", type=int)
    r.add_argument("--force-buffered", action="store_true")

    p = sub.add_parser("verify", help="run verification scenarios")
    p.add_argument("--scenario", required=True, help="preset name, 'all', or JSON file")
    p.add_argument("--out-dir", default="reports")

    p = sub.add_parser("bench", help="space-trend sweep")
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--f-sweep", default="16,64,256,1024")
    p.add_argument("--family", default="gnp")
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--no-stream", action="store_true")
    p.add_argument("--out-dir", default="reports")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (FtdoError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.cmd == "oracle":
        if args.sub == "build":
            g = _load_graph(args.graph)
            phi = None
            if args.phi:
                num, den = args.phi.split("/")
                phi = Fraction(int(num), int(den))
            cfg = calibrated_oracle_config(
                g.n,
                args.faults,
                d_target=args.d_target,
                stop_edges=args.stop_edges,
                phi=phi,
                c_stretch=args.c_stretch,
                deg_exponent=args.deg_exponent,
            )
            oracle = build_oracle(g, cfg)
            Path(args.out).write_bytes(oracle.to_bytes())
            print(
                f"oracle: n={g.n} m={g.m} levels={oracle.level_count} "
                f"residual={len(oracle.residual)} bits={oracle.measured_bits()}"
            )
            return 0
        oracle = ExpanderOracle.from_bytes(Path(args.oracle).read_bytes())
        dels = _read_deletions(args.delete, oracle.n)
        session = oracle.open_session(dels)
        _emit_answers(_read_pairs(args.pairs, oracle.n), session.query_distance, args.out)
        return 0

    if args.cmd == "stars":
        if args.sub == "build":
            g = _load_graph(args.graph)
            kw = {}
            if args.cover_multiplier:
                kw["cover_multiplier"] = args.cover_multiplier
            if args.target_multiplier:
                kw["target_multiplier"] = args.target_multiplier
            cfg = calibrated_star_config(g.n, args.faults, **kw)
            oracle = build_star_oracle(g, cfg)
            Path(args.out).write_bytes(oracle.to_bytes())
            flag = "" if oracle.regime_ok else " (outside n <= f <= n^1.5 regime)"
            print(
                f"stars: n={g.n} stars={len(oracle.stars)} "
                f"remaining={len(oracle.g_remaining)} bits={oracle.measured_bits()}{flag}"
            )
            return 0
        oracle = StarOracle.from_bytes(Path(args.oracle).read_bytes())
        dels = _read_deletions(args.delete, oracle.n)
        session = oracle.open_session(dels)
        _emit_answers(_read_pairs(args.pairs, oracle.n), session.query_distance, args.out)
        return 0

    if args.cmd == "spanner":
        if args.sub == "sketch":
            g = _load_graph(args.graph)
            cfg = calibrated_spanner_config(
                g.n,
                args.faults,
                _seed_override(args.seed),
                d_floor=args.d_floor,
                comp_target=args.comp_target,
            )
            sketch = build_spanner_sketch(g, cfg)
            Path(args.out).write_bytes(sketch.to_bytes())
            print(
                f"spanner sketch: n={g.n} components={len(sketch.components)} "
                f"residual={len(sketch.residual)} bits={sketch.measured_bits()}"
            )
            return 0
        sketch = SpannerSketch.from_bytes(Path(args.sketch).read_bytes())
        dels = _read_deletions(args.delete, sketch.n)
        h = recover_spanner(sketch, dels)
        Path(args.out).write_text(format_edge_list(h))
        print(f"recovered spanner: n={h.n} m={h.m} -> {args.out}")
        return 0

    if args.cmd == "stream":
        n = args.vertices
        cfg = calibrated_stream_config(
            n,
            args.faults,
            mode=args.mode,
            seed=_seed_override(args.seed),
            d_target=args.d_target,
            cap_target=args.cap_target,
            force_buffered=args.force_buffered,
        )
        st = StreamState(cfg)
        st.process_all(parse_events(Path(args.events).read_text(), n))
        report = {
            "peak_bits": st.peak_bits,
            "refills": st.refills,
            "events": st.events,
            "capacity_exceeded": st.capacity_exceeded,
        }
        if args.query:
            answers = _emit_answers(_read_pairs(args.query, n), st.query_distance)
            report["answers"] = answers
        if args.recover:
            h = st.recover_spanner()
            Path(args.recover).write_text(format_edge_list(h))
            report["spanner_edges"] = h.m
        if args.report:
            Path(args.report).write_text(json.dumps(report, sort_keys=True, indent=2))
        print(json.dumps({k: v for k, v in report.items() if k != "answers"}))
        return 0

    if args.cmd == "verify":
        from .plots import render_trial_overview

        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.scenario == "all":
            scenarios = list(PRESETS.values())
        elif args.scenario in PRESETS:
            scenarios = [PRESETS[args.scenario]]
        else:
            payload = json.loads(Path(args.scenario).read_text())
            if isinstance(payload, dict):
                payload = [payload]
            scenarios = [Scenario.from_dict(d) for d in payload]
        all_ok = True
        for sc in scenarios:
            if os.environ.get("FTDO_SEED"):
                sc = Scenario.from_dict({**sc.to_dict(), "seed": int(os.environ["FTDO_SEED"])})
            rep = run_verification(sc)
            (out_dir / f"{sc.name}.jsonl").write_text(rep.to_json_lines())
            (out_dir / f"{sc.name}.summary.json").write_text(
                json.dumps(rep.summary, sort_keys=True, indent=2)
            )
            render_trial_overview(rep, str(out_dir / f"{sc.name}.png"))
            ok = rep.passed
            all_ok &= ok
            print(
                f"{sc.name}: {'PASS' if ok else 'FAIL'} "
                f"(stretch_ok {rep.summary['stretch_ok_fraction']:.0%}, "
                f"max stretch {rep.summary['max_stretch']:.1f})"
            )
        return 0 if all_ok else 1

    if args.cmd == "bench":
        from .plots import render_space_trend

        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        f_values = [int(x) for x in args.f_sweep.split(",")]
        rows = space_sweep(
            args.n,
            f_values,
            _seed_override(args.seed),
            family=args.family,
            family_params={"n": args.n, "p": args.p} if args.family == "gnp" else None,
            include_stream=not args.no_stream,
        )
        csv_path = out_dir / "bench.csv"
        with open(csv_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=sorted(rows[0]))
            writer.writeheader()
            writer.writerows({k: row[k] for k in sorted(row)} for row in rows)
        render_space_trend(rows, str(out_dir / "bench.png"))
        decreasing = all(
            rows[i + 1]["oracle_bits_per_nf"] < rows[i]["oracle_bits_per_nf"]
            for i in range(len(rows) - 1)
        )
        for row in rows:
            print(json.dumps(row, sort_keys=True))
        print(f"oracle bits/(n*f) strictly decreasing: {decreasing}")
        return 0 if decreasing else 1

    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
