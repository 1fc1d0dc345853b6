"""Batch experiment runner.

    radioleader --protocol pairing --N 8 --subsets all --out runs.csv

Each execution becomes one CSV row; aggregates per (protocol, model, N) go
to a sibling <out>.agg.csv.  Rows are sorted by a canonical key and floats
are formatted with a fixed precision, so identical invocations produce
byte-identical files.  `--checks` switches to the lower-bound checker
battery and emits `check,protocol,N,k,t,result,witness` rows instead.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from fractions import Fraction
from typing import Iterable, List, Optional, Sequence, Tuple

from .channel import CdModel
from .dense import (
    choose_dense_b,
    dense_improved_election,
    dense_simple_election,
    exponential_search_election,
)
from .lowerbound import (
    canonical_sequence,
    matching_count,
    potential_active_slots,
    sequence_budget,
    uniqueness_check,
)
from .partitions import load_family
from .protocols_core import (
    BinarySearchElectionProgram,
    HalvingTradeoffProgram,
    PairingElectionProgram,
    binary_search_election,
    ceil_log2,
    halving_tradeoff_election,
    pairing_election,
)
from .runtime import BoundFactory, ProtocolConfig, RunReport
from .tradeoff import NoLeader, choose_params, partition_tradeoff_election

PROTOCOLS = (
    "pairing",
    "binary_search",
    "halving",
    "tradeoff",
    "dense_simple",
    "dense_improved",
    "exponential",
)

DEFAULT_MODEL = {
    "pairing": CdModel.NO_CD,
    "binary_search": CdModel.RECEIVER_CD,
    "halving": CdModel.STRONG_CD,
    "tradeoff": CdModel.SENDER_CD,
    "dense_simple": CdModel.NO_CD,
    "dense_improved": CdModel.NO_CD,
    "exponential": CdModel.NO_CD,
}

CSV_HEADER = (
    "protocol,model,N,n,b,k,rounds,max_energy,strict,easy,transcript_hash"
)
AGG_HEADER = (
    "protocol,model,N,runs,rounds_max,rounds_mean,"
    "energy_max,energy_mean,all_strict,all_easy"
)
CHECK_HEADER = "check,protocol,N,k,t,result,witness"
ATTEMPT_HEADER = "run,attempt,b,space,success,energy_max,rounds"


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="radioleader",
        description="run leader-election experiments on a simulated "
        "single-hop radio channel",
    )
    p.add_argument("--protocol", choices=PROTOCOLS, required=True)
    p.add_argument("--model", default=None,
                   help="strong_cd | sender_cd | receiver_cd | no_cd "
                        "(default depends on the protocol)")
    p.add_argument("--N", type=int, required=True, help="id space size")
    p.add_argument("--n", type=int, default=None,
                   help="device count for random subsets / known bound "
                        "for the trade-off")
    p.add_argument("--k", type=int, default=None, help="energy budget knob")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--b", type=int, default=None,
                   help="block width (dense) / part count (trade-off)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--subsets", choices=("all", "random", "file", "density"),
                   default="random")
    p.add_argument("--subsets-file", default=None,
                   help="one subset per line, ids separated by spaces or commas")
    p.add_argument("--ids", default=None,
                   help="run one explicit subset, e.g. --ids 3,11,12")
    p.add_argument("--density", default=None,
                   help="comma list of fractions for --subsets density, "
                        "e.g. 1,1/2,1/4 or 2^-3")
    p.add_argument("--trials", type=int, default=20,
                   help="subset count for --subsets random")
    p.add_argument("--assert-success", action="store_true",
                   help="exit nonzero if any run misses strict success")
    p.add_argument("--emit-transcripts", metavar="DIR", default=None)
    p.add_argument("--family", metavar="FILE", default=None,
                   help="partition family file for --protocol tradeoff")
    p.add_argument("--out", metavar="FILE", default=None,
                   help="CSV output path (default stdout)")
    p.add_argument("--json-out", metavar="FILE", default=None)
    p.add_argument("--checks", action="store_true",
                   help="run the lower-bound checker battery instead")
    return p


def _parse_density(text: str) -> List[Fraction]:
    out = []
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            continue
        if "^" in piece:
            base, _, expo = piece.partition("^")
            out.append(Fraction(int(base)) ** int(expo))
        else:
            out.append(Fraction(piece))
    if not out:
        raise ValueError("empty density list")
    for c in out:
        if not (0 < c <= 1):
            raise ValueError(f"density {c} outside (0, 1]")
    return out


def _parse_ids(text: str) -> List[int]:
    ids = sorted({int(tok) for tok in text.replace(",", " ").split()})
    if not ids:
        raise ValueError("empty id list")
    return ids


def _read_subsets_file(path: str) -> List[List[int]]:
    subsets = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            subsets.append(_parse_ids(line))
    if not subsets:
        raise ValueError(f"no subsets in {path}")
    return subsets


def generate_subsets(args) -> List[List[int]]:
    N = args.N
    if args.ids is not None:
        return [_parse_ids(args.ids)]
    if args.subsets == "all":
        if N > 20:
            raise ValueError("--subsets all refuses N > 20 (2^N executions)")
        return [
            [i + 1 for i in range(N) if mask >> i & 1]
            for mask in range(1, 1 << N)
        ]
    if args.subsets == "file":
        if not args.subsets_file:
            raise ValueError("--subsets file needs --subsets-file")
        return _read_subsets_file(args.subsets_file)
    if args.subsets == "density":
        if not args.density:
            raise ValueError("--subsets density needs --density")
        rng = random.Random(args.seed)
        subsets = []
        for c in _parse_density(args.density):
            n = max(1, round(c * N))
            subsets.append(sorted(rng.sample(range(1, N + 1), n)))
        return subsets
    # random
    if args.n is None:
        raise ValueError("--subsets random needs --n (subset size)")
    if not (1 <= args.n <= N):
        raise ValueError("need 1 <= n <= N")
    rng = random.Random(args.seed)
    return [
        sorted(rng.sample(range(1, N + 1), args.n))
        for _ in range(args.trials)
    ]


def _model_for(args) -> CdModel:
    if args.model is None:
        return DEFAULT_MODEL[args.protocol]
    return CdModel.parse(args.model)


def _run_one(args, model: CdModel, devices: List[int],
             tradeoff_params=None) -> Tuple[RunReport, str, str]:
    """Returns (report, b column, k column)."""
    N, proto = args.N, args.protocol
    if proto == "pairing":
        return pairing_election(devices, N, model=model), "", ""
    if proto == "binary_search":
        return binary_search_election(devices, N, model=model), "", ""
    if proto == "halving":
        k = args.k if args.k is not None else ceil_log2(max(N, 2))
        report = halving_tradeoff_election(devices, N, k, model=model)
        return report, "", str(k)
    if proto == "tradeoff":
        report = partition_tradeoff_election(devices, tradeoff_params,
                                             model=model)
        return report, str(tradeoff_params.b), str(tradeoff_params.K)
    if proto in ("dense_simple", "dense_improved"):
        b = args.b if args.b is not None else choose_dense_b(N, len(devices))
        run = (dense_simple_election if proto == "dense_simple"
               else dense_improved_election)
        return run(devices, N, b, model=model), str(b), ""
    if proto == "exponential":
        return exponential_search_election(devices, N, model=model), "", ""
    raise ValueError(f"unhandled protocol {proto}")


def _tradeoff_params(args, subsets: Sequence[Sequence[int]]):
    if args.epsilon is None or args.k is None:
        raise ValueError("--protocol tradeoff needs --k and --epsilon")
    n = args.n if args.n is not None else max(len(s) for s in subsets)
    family = load_family(args.family) if args.family else None
    return choose_params(args.N, n, args.k, args.epsilon,
                         seed=args.seed, family=family)


def run_experiment(args):
    """Execute the experiment described by parsed args.

    Returns (csv rows, aggregate rows, [(transcript name, text)], attempt
    rows); all four deterministic functions of the arguments."""
    model = _model_for(args)
    subsets = generate_subsets(args)
    params = _tradeoff_params(args, subsets) if args.protocol == "tradeoff" \
        else None

    entries = []
    for devices in subsets:
        try:
            report, b_col, k_col = _run_one(args, model, devices, params)
        except NoLeader as exc:
            report, b_col, k_col = exc.report, str(params.b), str(params.K)
        row = (
            args.protocol,
            model.value,
            str(args.N),
            str(len(devices)),
            b_col,
            k_col,
            str(report.rounds),
            str(report.ledger.max_energy),
            str(report.strict_success).lower(),
            str(report.easy_success).lower(),
            f"{report.transcript_hash:016x}",
        )
        entries.append((row, report))

    entries.sort(key=lambda e: e[0])
    rows = [",".join(row) for row, _ in entries]

    transcripts = []
    for idx, (row, report) in enumerate(entries):
        name = f"{args.protocol}_{model.value}_N{args.N}_run{idx:05d}.txt"
        transcripts.append((name, report.transcript.serialize()))

    attempt_rows = []
    for idx, (_, report) in enumerate(entries):
        for a in report.attempts or ():
            attempt_rows.append(",".join((
                str(idx), str(a.index), str(a.b), str(a.space),
                str(a.success).lower(), str(a.energy_max), str(a.rounds),
            )))

    reports = [r for _, r in entries]
    agg = ",".join((
        args.protocol,
        model.value,
        str(args.N),
        str(len(reports)),
        str(max(r.rounds for r in reports)),
        f"{sum(r.rounds for r in reports) / len(reports):.4f}",
        str(max(r.ledger.max_energy for r in reports)),
        f"{sum(r.ledger.max_energy for r in reports) / len(reports):.4f}",
        str(all(r.strict_success for r in reports)).lower(),
        str(all(r.easy_success for r in reports)).lower(),
    ))
    return rows, [agg], transcripts, attempt_rows


def _checker_factories(args):
    out = []
    N = args.N
    k = args.k if args.k is not None else ceil_log2(max(N, 2))
    out.append(("binary_search", BoundFactory(BinarySearchElectionProgram),
                ProtocolConfig(model=CdModel.STRONG_CD, N=N)))
    out.append(("halving", BoundFactory(HalvingTradeoffProgram),
                ProtocolConfig(model=CdModel.STRONG_CD, N=N, k=k)))
    out.append(("pairing", BoundFactory(PairingElectionProgram),
                ProtocolConfig(model=CdModel.STRONG_CD, N=N)))
    return out


def run_checks(args) -> List[str]:
    rows = []
    for name, factory, config in _checker_factories(args):
        t = factory.schedule_length(config)
        pair = uniqueness_check(factory, config)
        rows.append(",".join((
            "uniqueness", name, str(config.N), "", str(t),
            "ok" if pair is None else "violation",
            "" if pair is None else f"{pair.id_a}|{pair.id_b}",
        )))
        seqs = [canonical_sequence(factory, i, config, style="strong")
                for i in range(1, config.N + 1)]
        k_meas = max(len(s) - s.count("I") for s in seqs)
        budget = sequence_budget(t, k_meas)
        rows.append(",".join((
            "counting", name, str(config.N), str(k_meas), str(t),
            "ok" if config.N <= budget else "violation", str(budget),
        )))
        if t <= 20:
            m = matching_count(seqs, k_meas)
            need = -(-config.N // (1 << min(k_meas, t)))
            rows.append(",".join((
                "matching", name, str(config.N), str(k_meas), str(t),
                "ok" if m >= need else "violation", str(m),
            )))
    # feedback-tree exploration on the binary search election only: the
    # other programs branch on message payloads, not just collision/silence
    factory = BoundFactory(BinarySearchElectionProgram)
    config = ProtocolConfig(model=CdModel.STRONG_CD, N=args.N)
    budget = factory.schedule_length(config)
    count = potential_active_slots(factory, 1, config, budget)
    rows.append(",".join((
        "potential_active_slots", "binary_search", str(args.N),
        str(budget), str(budget),
        "ok" if count <= 1 << budget else "violation",
        str(count),
    )))
    return rows


def _write_lines(path: Optional[str], lines: Iterable[str]) -> None:
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    env_seed = os.environ.get("RADIOLEADER_SEED")
    if env_seed is not None:
        try:
            args.seed = int(env_seed)
        except ValueError:
            print(f"RADIOLEADER_SEED={env_seed!r} is not an integer",
                  file=sys.stderr)
            return 2
    if args.N < 1:
        print("--N must be at least 1", file=sys.stderr)
        return 2
    if args.epsilon is not None and not (0.0 < args.epsilon < 1.0):
        print(f"--epsilon {args.epsilon} outside (0, 1)", file=sys.stderr)
        return 2

    try:
        if args.checks:
            rows = run_checks(args)
            _write_lines(args.out, [CHECK_HEADER] + rows)
            if args.json_out:
                payload = [dict(zip(CHECK_HEADER.split(","), r.split(",")))
                           for r in rows]
                with open(args.json_out, "w") as fh:
                    json.dump(payload, fh, indent=2, sort_keys=True)
                    fh.write("\n")
            return 0

        rows, aggs, transcripts, attempt_rows = run_experiment(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.out is None:
        _write_lines(None, [CSV_HEADER] + rows)
        _write_lines(None, [AGG_HEADER] + aggs)
        if attempt_rows:
            _write_lines(None, [ATTEMPT_HEADER] + attempt_rows)
    else:
        _write_lines(args.out, [CSV_HEADER] + rows)
        _write_lines(args.out + ".agg.csv", [AGG_HEADER] + aggs)
        if attempt_rows:
            _write_lines(args.out + ".attempts.csv",
                         [ATTEMPT_HEADER] + attempt_rows)
    if args.emit_transcripts:
        os.makedirs(args.emit_transcripts, exist_ok=True)
        for name, text in transcripts:
            with open(os.path.join(args.emit_transcripts, name), "w") as fh:
                fh.write(text)
    if args.json_out:
        payload = {
            "runs": [dict(zip(CSV_HEADER.split(","), r.split(",")))
                     for r in rows],
            "aggregates": [dict(zip(AGG_HEADER.split(","), a.split(",")))
                           for a in aggs],
        }
        with open(args.json_out, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")

    if args.assert_success:
        bad = sum(1 for r in rows if r.split(",")[8] == "false")
        if bad:
            print(f"{bad} run(s) missed strict success", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
