"""Command-line front end.

Subcommands: ``encode`` a file into n chunk files, ``reconstruct`` the
payload from any sufficient subset, ``regenerate`` a missing chunk file,
``simulate`` fault scenarios from a flat key=value config, and ``analyze``
code parameters and capabilities.

Reports are structured text with stable field names: one ``key=value ...``
record per line.  Exit status is 0 on success and nonzero when the
requested operation fails.
"""

from __future__ import annotations

import argparse
import random
import sys
from pathlib import Path

import numpy as np

from .analysis import capability_table, code_point, percent
from .chunkio import (
    header_for_state,
    params_from_header,
    read_chunk_file,
    write_chunk_file,
)
from .cluster import (
    CRASHED,
    FAIL,
    SUCCESS,
    Adversarial,
    ClusterState,
    FaultPlan,
    NodeSlot,
    RandomCorruption,
    SeededRandom,
    build_msr_zero_crc_forgery,
    inject,
    rebuild_shares,
    run_reconstruction,
    run_regeneration,
    store,
)
from .errors import InvalidParams, MalformedChunk, RegencodeError
from .galois import GF
from .integrity import REPLICATED, SCHEMES, CrcParams, bits_to_bytes
from .mbr import MbrParams
from .msr import MsrParams

FAMILIES = ("msr", "mbr")


def _record(**fields) -> str:
    return " ".join(f"{k}={v}" for k, v in fields.items())


def _params_cls(family: str):
    if family not in FAMILIES:
        raise InvalidParams(f"unknown family {family!r}")
    return MsrParams if family == "msr" else MbrParams


def _metrics_fields(metrics) -> dict:
    return {
        "outcome": metrics.outcome,
        "nodes_contacted": metrics.nodes_contacted,
        "symbols_downloaded": metrics.symbols_downloaded,
        "checksum_symbols_downloaded": metrics.checksum_symbols_downloaded,
        "decode_rounds": metrics.decode_rounds,
    }


# ---------------------------------------------------------------------------
# chunk-file handling


def _chunk_paths(paths) -> list[Path]:
    out = []
    for raw in paths:
        p = Path(raw)
        if p.is_dir():
            out.extend(sorted(p.glob("*.rgen")))
        else:
            out.append(p)
    if not out:
        raise InvalidParams("no chunk files found")
    return out


def _assemble_state(paths, seed: int) -> ClusterState:
    """Cluster with healthy slots for present files, crashed for missing."""
    entries = [read_chunk_file(p) for p in paths]
    heads = [h for h, _, _ in entries]
    base = heads[0]
    key = lambda h: (h.family, h.m, h.generator, h.prim_poly, h.n, h.k, h.d,
                     h.beta, h.r, h.crc_poly, h.scheme, h.payload_bit_len)
    for h, p in zip(heads, paths):
        if key(h) != key(base):
            raise MalformedChunk(f"{p} belongs to a different chunk set")
    seen = set()
    for h, p in zip(heads, paths):
        if h.node_index in seen:
            raise MalformedChunk(f"{p} duplicates node index {h.node_index}")
        seen.add(h.node_index)
    params, crc = params_from_header(base)
    nodes = [
        NodeSlot(
            np.zeros((params.beta, params.alpha), dtype=np.int64), {}, CRASHED
        )
        for _ in range(params.n)
    ]
    for h, chunk, shares in entries:
        nodes[h.node_index] = NodeSlot(chunk, shares)
    return ClusterState(
        params=params,
        crc=crc,
        scheme=base.scheme,
        payload_bit_len=base.payload_bit_len,
        nodes=nodes,
        rng_seed=seed,
    )


# ---------------------------------------------------------------------------
# subcommands


def cmd_encode(args) -> int:
    payload = Path(args.input).read_bytes()
    field = GF(args.m)
    cls = _params_cls(args.family)
    bits = 8 * len(payload)
    if args.beta:
        beta = args.beta
    else:
        per_stripe = cls(args.n, args.k, args.d, 1, field).B * args.m
        beta = max(1, -((bits + args.r) // -per_stripe))
    params = cls(args.n, args.k, args.d, beta, field)
    state = store(
        payload, params, args.scheme, crc=CrcParams(args.r), seed=args.seed
    )
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    for i, slot in enumerate(state.nodes):
        write_chunk_file(
            outdir / f"node{i:03d}.rgen",
            header_for_state(state, i),
            slot.chunk,
            slot.shares,
        )
    print(_record(
        command="encode", family=args.family, n=args.n, k=args.k, d=args.d,
        beta=beta, m=args.m, r=args.r, scheme=args.scheme,
        payload_bits=bits, chunks=params.n, out=outdir,
    ))
    return 0


def cmd_reconstruct(args) -> int:
    state = _assemble_state(_chunk_paths(args.chunks), args.seed)
    bits, metrics = run_reconstruction(state, SeededRandom(args.seed))
    fields = _metrics_fields(metrics)
    if metrics.outcome == FAIL:
        print(_record(command="reconstruct", **fields))
        return 1
    data = bits_to_bytes(bits)
    Path(args.out).write_bytes(data)
    print(_record(
        command="reconstruct", **fields,
        payload_bits=state.payload_bit_len, out=args.out,
    ))
    return 0


def cmd_regenerate(args) -> int:
    paths = _chunk_paths(args.chunks)
    state = _assemble_state(paths, args.seed)
    chunk, metrics = run_regeneration(
        state, args.failed, SeededRandom(args.seed)
    )
    fields = _metrics_fields(metrics)
    if metrics.outcome == FAIL:
        print(_record(command="regenerate", failed=args.failed, **fields))
        return 1
    shares, missing = rebuild_shares(state, args.failed)
    out = Path(args.out) if args.out else paths[0].parent / f"node{args.failed:03d}.rgen"
    header = header_for_state(state, args.failed)
    write_chunk_file(out, header, chunk, shares)
    p = state.params
    print(_record(
        command="regenerate", failed=args.failed, **fields,
        repair_download_symbols=p.d * p.beta,
        reconstruct_download_symbols=p.k * p.alpha * p.beta,
        share_warnings=len(missing), out=out,
    ))
    for owner in missing:
        print(_record(warning="share_unrecovered", owner=owner))
    return 0


def cmd_analyze(args) -> int:
    pt = code_point(
        args.n, args.k, args.d, args.family,
        beta=args.beta, m=args.m, r=args.r,
    )
    rep = capability_table(pt, args.family)
    print(_record(
        command="analyze", family=args.family, n=pt.n, k=pt.k, d=pt.d,
        alpha=pt.alpha, beta=pt.beta, B=pt.B, m=pt.m, r=pt.r,
        m_prime=pt.m_prime, k_prime=pt.k_prime,
    ))
    for name in (
        "erasure_reconstruction", "erasure_regeneration",
        "byzantine_reconstruction", "byzantine_regeneration",
        "security_reconstruction", "security_regeneration",
    ):
        print(_record(**{name: getattr(rep, name)}))
    for name in (
        "storage_reconstruction",
        "storage_regeneration_replicated", "storage_regeneration_coded",
        "bandwidth_regeneration_replicated", "bandwidth_regeneration_coded",
    ):
        ratio = getattr(rep, name)
        print(_record(**{
            name: f"{ratio.numerator}/{ratio.denominator}",
            name + "_pct": percent(ratio),
        }))
    return 0


# ---------------------------------------------------------------------------
# simulate


_CONFIG_KEYS = {
    "family", "n", "k", "d", "beta", "m", "r", "scheme", "seed", "trials",
    "operation", "failed", "payload_bits", "payload_file", "crashes",
    "byzantine", "strategy", "rate", "policy", "out",
}


def _parse_config(path) -> dict[str, str]:
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidParams(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise InvalidParams(f"{path}:{lineno}: unknown key {key!r}")
        cfg[key] = value.strip()
    return cfg


def _resolve_fault_set(expr: str, rng: random.Random, n: int,
                       taken: set) -> set:
    if not expr:
        return set()
    if expr.startswith("random:"):
        count = int(expr.split(":", 1)[1])
        pool = [i for i in range(n) if i not in taken]
        if count > len(pool):
            raise InvalidParams(f"cannot pick {count} nodes from {len(pool)}")
        return set(rng.sample(pool, count))
    return {int(tok) for tok in expr.split(",") if tok}


def cmd_simulate(args) -> int:
    cfg = _parse_config(args.config)
    family = cfg.get("family", "msr")
    n = int(cfg.get("n", 6))
    k = int(cfg.get("k", 3))
    d = int(cfg.get("d", 4))
    beta = int(cfg.get("beta", 1))
    m = int(cfg.get("m", 8))
    r = int(cfg.get("r", 32))
    scheme = cfg.get("scheme", REPLICATED)
    seed = int(cfg.get("seed", 0))
    trials = int(cfg.get("trials", 1))
    operation = cfg.get("operation", "reconstruct")
    policy_name = cfg.get("policy", "seeded_random")
    strategy_name = cfg.get("strategy", "random_corruption")
    rate = float(cfg.get("rate", 1.0))
    if trials < 1:
        raise InvalidParams(f"trial count must be >= 1, got {trials}")
    if operation not in ("reconstruct", "regenerate"):
        raise InvalidParams(f"unknown operation {operation!r}")
    if policy_name not in ("seeded_random", "adversarial"):
        raise InvalidParams(f"unknown policy {policy_name!r}")
    if strategy_name not in ("random_corruption", "zero_crc_forgery"):
        raise InvalidParams(f"unknown strategy {strategy_name!r}")
    if scheme not in SCHEMES:
        raise InvalidParams(f"unknown checksum scheme {scheme!r}")

    params = _params_cls(family)(n, k, d, beta, GF(m))
    if "payload_file" in cfg:
        payload = Path(cfg["payload_file"]).read_bytes()
        truth = np.unpackbits(np.frombuffer(payload, dtype=np.uint8))
    else:
        default_bits = params.beta * params.B * params.field.m - r
        size = int(cfg.get("payload_bits", default_bits))
        truth = np.random.default_rng(seed).integers(
            0, 2, size=size, dtype=np.uint8
        )
        payload = truth
    base = store(payload, params, scheme, crc=CrcParams(r), seed=seed)

    lines = []
    successes = wrong = 0
    for trial in range(trials):
        rng = random.Random(f"{seed}|trial|{trial}")
        crashes = _resolve_fault_set(cfg.get("crashes", ""), rng, n, set())
        byzantine = _resolve_fault_set(
            cfg.get("byzantine", ""), rng, n, crashes
        )
        if strategy_name == "zero_crc_forgery":
            strategy = build_msr_zero_crc_forgery(base, byzantine)
        else:
            strategy = RandomCorruption(rate)
        base.rng_seed = seed + trial
        state = inject(base, FaultPlan(crashes, byzantine, strategy))
        policy = (
            Adversarial() if policy_name == "adversarial"
            else SeededRandom(seed + trial)
        )
        if operation == "reconstruct":
            out, metrics = run_reconstruction(state, policy)
            correct = metrics.outcome == SUCCESS and np.array_equal(out, truth)
        else:
            failed_expr = cfg.get("failed", "random")
            failed = (
                rng.randrange(n) if failed_expr == "random"
                else int(failed_expr)
            )
            out, metrics = run_regeneration(state, failed, policy)
            correct = metrics.outcome == SUCCESS and np.array_equal(
                out, base.nodes[failed].chunk
            )
        if metrics.outcome == SUCCESS:
            successes += 1
            if not correct:
                wrong += 1
        lines.append(_record(
            trial=trial, correct=int(correct), **_metrics_fields(metrics),
        ))

    footer = {
        "trials": trials,
        "successes": successes,
        "wrong_successes": wrong,
        "success_rate": f"{successes / trials:.4f}",
    }
    if operation == "regenerate":
        saving = (params.k * params.alpha) / params.d
        footer.update({
            "repair_download_symbols": params.d * params.beta,
            "reconstruct_download_symbols": params.k * params.alpha * params.beta,
            "bandwidth_saving": f"{saving:.2f}x",
        })
    lines.append(_record(**footer))
    report = "\n".join(str(s) for s in lines)
    if "out" in cfg:
        Path(cfg["out"]).write_text(report + "\n")
    print(report)
    return 0 if wrong == 0 else 1


# ---------------------------------------------------------------------------
# argument parsing


def _add_code_flags(sp, with_scheme=True):
    sp.add_argument("--family", required=True, choices=FAMILIES)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--beta", type=int, default=0,
                    help="stripes per frame (default: smallest that fits)")
    sp.add_argument("--m", type=int, default=8, help="field degree (default 8)")
    sp.add_argument("--r", type=int, default=32,
                    help="checksum width in bits (default 32)")
    if with_scheme:
        sp.add_argument("--scheme", choices=SCHEMES, default=REPLICATED)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="regencode",
        description="Regenerating-code storage simulator and chunk tool",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    enc = sub.add_parser("encode", help="split a file into n chunk files")
    enc.add_argument("input")
    _add_code_flags(enc)
    enc.add_argument("--seed", type=int, default=0)
    enc.add_argument("--out", default=".", help="output directory")
    enc.set_defaults(func=cmd_encode)

    rec = sub.add_parser("reconstruct", help="rebuild the payload from chunks")
    rec.add_argument("chunks", nargs="+", help="chunk files or directories")
    rec.add_argument("--out", required=True, help="output payload file")
    rec.add_argument("--seed", type=int, default=0)
    rec.set_defaults(func=cmd_reconstruct)

    reg = sub.add_parser("regenerate", help="rebuild one node's chunk file")
    reg.add_argument("chunks", nargs="+", help="surviving chunk files or dirs")
    reg.add_argument("--failed", type=int, required=True)
    reg.add_argument("--out", default=None, help="output chunk file")
    reg.add_argument("--seed", type=int, default=0)
    reg.set_defaults(func=cmd_regenerate)

    sim = sub.add_parser("simulate", help="run trials from a config file")
    sim.add_argument("--config", required=True)
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="print parameters and capabilities")
    ana.add_argument("--family", required=True, choices=FAMILIES)
    ana.add_argument("--n", type=int, required=True)
    ana.add_argument("--k", type=int, required=True)
    ana.add_argument("--d", type=int, required=True)
    ana.add_argument("--beta", type=int, default=1)
    ana.add_argument("--m", type=int, default=11,
                     help="field degree used in the ratio formulas (default 11)")
    ana.add_argument("--r", type=int, default=32)
    ana.set_defaults(func=cmd_analyze)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RegencodeError, OSError) as exc:
        print(
            _record(error=type(exc).__name__, detail=repr(str(exc))),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
