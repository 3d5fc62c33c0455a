"""Command-line front end and binary file formats.

Exit codes: 0 success or accept, 1 verify reject, 2 usage error, 3 I/O or
format error.

Every key and signature file starts with a 24-byte header::

    b"SURF" | version u8 | hash tag u8 | lam u16 | n u32 | k_U u32 | k_V u32 | w u32

(all little-endian).  Matrices follow as one row-major bit stream, bit ``b``
in byte ``b // 8`` at position ``b % 8``, zero padded at the very end.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import struct
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import surf
from .attack import BASE_L, BASE_P, hull_distinguish, structural_attack_cost
from .codes import LinearCode, codeword_densities
from .decoder import (
    build_rejection_table,
    pairwise_leak_test,
    uuv_decode_v1_bits,
    uuv_decode_v2_bits,
    w1,
    w1_chi_square,
)
from .estimator import (
    asymptotic_exponents,
    capacity_curves,
    distortion_curves,
    epsilon_bound,
    gv_bound,
    gv_relative,
    log2_qhash_sqrt_eps,
)
from .f2linalg import BitMatrix, BitVector, Permutation

MAGIC = b"SURF"
VERSION = 1
HEADER = struct.Struct("<4sBBHIIII")

EXIT_OK, EXIT_REJECT, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


class FormatError(ValueError):
    """A file is truncated, oversized, or carries an inconsistent header."""


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------- bit streams


def pack_stream(bits: np.ndarray) -> bytes:
    """Row-major LSB-first packing of any 0/1 array."""
    return np.packbits(np.asarray(bits, dtype=np.uint8).ravel(), bitorder="little").tobytes()


def unpack_stream(data: bytes, count: int) -> np.ndarray:
    if len(data) != (count + 7) // 8:
        raise FormatError(f"expected {(count + 7) // 8} bytes, got {len(data)}")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    if bits[count:].any():
        raise FormatError("nonzero padding bits")
    return bits[:count]


# ---------------------------------------------------------------- header


@dataclass(frozen=True)
class KeyFileHeader:
    version: int
    hash_alg: int
    lam: int
    n: int
    k_U: int
    k_V: int
    w: int

    @classmethod
    def for_params(cls, p: surf.SurfParams) -> "KeyFileHeader":
        return cls(VERSION, surf.HASH_SHAKE256, p.lam, p.n, p.k_U, p.k_V, p.w)

    def pack(self) -> bytes:
        return HEADER.pack(MAGIC, self.version, self.hash_alg, self.lam, self.n, self.k_U, self.k_V, self.w)

    @classmethod
    def unpack(cls, data: bytes) -> "KeyFileHeader":
        if len(data) < HEADER.size:
            raise FormatError("file shorter than the header")
        magic, ver, tag, lam, n, k_U, k_V, w = HEADER.unpack_from(data)
        if magic != MAGIC:
            raise FormatError("bad magic")
        if ver != VERSION or tag != surf.HASH_SHAKE256:
            raise FormatError(f"unsupported version {ver} or hash tag {tag}")
        return cls(ver, tag, lam, n, k_U, k_V, w)

    def params(self) -> surf.SurfParams:
        try:
            return surf.SurfParams(n=self.n, k_U=self.k_U, k_V=self.k_V, w=self.w, lam=self.lam)
        except ValueError as exc:
            raise FormatError(f"header parameters invalid: {exc}") from exc


def _split_header(data: bytes) -> tuple[surf.SurfParams, bytes]:
    hdr = KeyFileHeader.unpack(data)
    return hdr.params(), data[HEADER.size :]


# ---------------------------------------------------------------- payloads


def public_key_bytes(pk: surf.PublicKey) -> bytes:
    return KeyFileHeader.for_params(pk.params).pack() + pack_stream(pk.R.bits())


def public_key_from_bytes(data: bytes) -> surf.PublicKey:
    p, body = _split_header(data)
    bits = unpack_stream(body, p.k * p.r)
    return surf.PublicKey(R=BitMatrix.from_bits(bits.reshape(p.r, p.k)), params=p)


def secret_key_bytes(sk: surf.SecretKey) -> bytes:
    p = sk.params
    perm = np.asarray(sk.P.images, dtype="<u4").tobytes()
    return (
        KeyFileHeader.for_params(p).pack()
        + pack_stream(sk.H_U.bits())
        + pack_stream(sk.H_V.bits())
        + perm
    )


def secret_key_from_bytes(data: bytes) -> surf.SecretKey:
    p, body = _split_header(data)
    h = p.n // 2
    a = ((h - p.k_U) * h + 7) // 8
    b = ((h - p.k_V) * h + 7) // 8
    if len(body) != a + b + 4 * p.n:
        raise FormatError(f"secret key payload is {len(body)} bytes, expected {a + b + 4 * p.n}")
    H_U = BitMatrix.from_bits(unpack_stream(body[:a], (h - p.k_U) * h).reshape(h - p.k_U, h))
    H_V = BitMatrix.from_bits(unpack_stream(body[a : a + b], (h - p.k_V) * h).reshape(h - p.k_V, h))
    images = np.frombuffer(body[a + b :], dtype="<u4").astype(np.int64)
    if not np.array_equal(np.sort(images), np.arange(p.n)):
        raise FormatError("permutation block is not a permutation")
    return surf.SecretKey(H_U=H_U, H_V=H_V, P=Permutation(tuple(int(x) for x in images)), params=p)


def signature_bytes(sig: surf.Signature, p: surf.SurfParams) -> bytes:
    return KeyFileHeader.for_params(p).pack() + pack_stream(sig.e.bits()) + bytes(sig.r)


def signature_from_bytes(data: bytes) -> tuple[surf.Signature, surf.SurfParams]:
    p, body = _split_header(data)
    ne = (p.n + 7) // 8
    if len(body) != ne + p.salt_bytes:
        raise FormatError(f"signature payload is {len(body)} bytes, expected {ne + p.salt_bytes}")
    e = BitVector.from_bits(unpack_stream(body[:ne], p.n))
    return surf.Signature(e=e, r=bytes(body[ne:])), p


def read_code_file(path: Path) -> LinearCode:
    """Generator matrix as text, one row of ``0``/``1`` characters per line."""
    rows = [ln.strip() for ln in path.read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    if not rows or len({len(r) for r in rows}) != 1 or any(set(r) - {"0", "1"} for r in rows):
        raise FormatError("code file must hold equal-length rows of 0/1")
    G = np.array([[c == "1" for c in r] for r in rows], dtype=np.uint8)
    return LinearCode.from_generator(BitMatrix.from_bits(G))


def public_code(pk: surf.PublicKey) -> LinearCode:
    return LinearCode(pk.H_pub)


# ---------------------------------------------------------------- output helpers


def _emit(rows: list[dict], fmt: str, out) -> None:
    if fmt == "json":
        json.dump(rows, out, indent=2, default=_jsonable)
        out.write("\n")
        return
    if not rows:
        return
    w = csv.DictWriter(out, fieldnames=list(rows[0]))
    w.writeheader()
    for r in rows:
        w.writerow({k: _jsonable(v) if isinstance(v, (list, np.generic)) else v for k, v in r.items()})


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, list):
        return " ".join(str(v) for v in x)
    raise TypeError(type(x).__name__)


def _params_dict(p: surf.SurfParams) -> dict:
    return {
        "n": p.n,
        "k": p.k,
        "k_U": p.k_U,
        "k_V": p.k_V,
        "w": p.w,
        "lambda": p.lam,
        "salt_bits": p.lam0,
        "signature_bits": p.signature_bits(),
        "public_key_bits": p.public_key_bits(),
        "secret_key_bits": p.secret_key_bits(),
    }


def _params_from_args(args) -> surf.SurfParams:
    if getattr(args, "params_file", None):
        data = json.loads(Path(args.params_file).read_text())
        try:
            return surf.SurfParams(n=data["n"], k_U=data["k_U"], k_V=data["k_V"], w=data["w"], lam=data["lambda"])
        except (KeyError, TypeError) as exc:
            raise FormatError(f"params file: {exc}") from exc
    if args.n is None:
        raise UsageError("give --n or --params-file")
    return surf.select_params(args.n, args.lam, recipe=getattr(args, "recipe", "balanced"))


def _rng(seed):
    return np.random.default_rng(seed)


def _write(path: str, data: bytes) -> None:
    Path(path).write_bytes(data)


# ---------------------------------------------------------------- commands


def cmd_params(args, out) -> int:
    p = _params_from_args(args)
    d = _params_dict(p)
    out.write(f"{p}\n")
    json.dump(d, out, indent=2)
    out.write("\n")
    return EXIT_OK


def cmd_keygen(args, out) -> int:
    p = _params_from_args(args)
    sk, pk = surf.keygen(p, _rng(args.seed), on_singular=args.on_singular)
    _write(args.out_sk, secret_key_bytes(sk))
    _write(args.out_pk, public_key_bytes(pk))
    json.dump({"params": _params_dict(p), "pk_bytes": len(public_key_bytes(pk))}, out)
    out.write("\n")
    return EXIT_OK


def cmd_sign(args, out) -> int:
    sk = secret_key_from_bytes(Path(args.sk).read_bytes())
    msg = Path(args.msg_file).read_bytes()
    sig = surf.sign(sk, msg, build_rejection_table(sk.params), _rng(args.seed))
    _write(args.out_sig, signature_bytes(sig, sk.params))
    json.dump({"weight": sig.e.weight(), "w": sk.params.w, "salt": sig.r.hex()}, out)
    out.write("\n")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    pk = public_key_from_bytes(Path(args.pk).read_bytes())
    sig, sp = signature_from_bytes(Path(args.sig).read_bytes())
    msg = Path(args.msg_file).read_bytes()
    ok = sp == pk.params and surf.verify(pk, msg, sig)
    out.write("accept\n" if ok else "reject\n")
    return EXIT_OK if ok else EXIT_REJECT


def cmd_distinguish(args, out) -> int:
    if args.kU < args.kV:
        sys.stderr.write("warning: the hull test needs k_U >= k_V; refusing\n")
        return EXIT_USAGE
    if args.pk:
        C = public_code(public_key_from_bytes(Path(args.pk).read_bytes()))
    elif args.code_file:
        C = read_code_file(Path(args.code_file))
    else:
        raise UsageError("give --pk or --code-file")
    v = hull_distinguish(C, args.kU, args.kV)
    json.dump({"hull_dim": v.hull_dim, "expected_public_dim": v.expected_pub_dim, "verdict": v.predicted}, out)
    out.write("\n")
    return EXIT_OK


def _table_rows(args) -> list[dict]:
    t = args.table
    if t == "1":
        ratios = args.w_ratio or [0.11, 0.15, 0.19]
        rows = []
        for r in ratios:
            e = asymptotic_exponents(r, rate=args.rate)
            rows.append(
                {
                    "w/n": r,
                    "(1/n)log2 WF_q": e["WFq/n"],
                    "(1/n)log2 q": e["log2q/n"],
                    "(1/n)log2 WF^(M)": e["WF/n"],
                }
            )
        return rows
    if t == "3":
        lams = [args.lam] if args.n is not None else sorted(surf.REFERENCE_LENGTHS)
        return [surf.parameter_row(lam, args.n, grid=args.grid) for lam in lams]
    if t == "gv":
        if args.n is not None and args.k is not None:
            return [{"n": args.n, "k": args.k, "d_GV": gv_bound(args.n, args.k)}]
        return [{"R": R, "d_GV/n": gv_relative(R)} for R in _grid(0.0, 1.0, args.points)]
    if t == "capacity":
        rows = []
        for p in _grid(0.0, 0.5, args.points):
            bsc, uuv = capacity_curves(p)
            rows.append({"p": p, "BSC capacity": bsc, "(U,U+V) channel capacity": uuv})
        return rows
    if t == "distortion":
        rows = []
        for R in _grid(0.0, 1.0, args.points):
            d = distortion_curves(R)
            rows.append({"R": R, "(1-R)/2": d["prange"], "h^-1(1-R)": d["gv"], "v1": d["v1"], "v2": d["v2"]})
        return rows
    if t == "density":
        n = args.n or 10000
        k_U = args.kU if args.kU is not None else round(0.3 * n)
        k_V = args.kV if args.kV is not None else round(0.2 * n)
        rows = []
        for x in _grid(0.0, 0.5, args.points)[1:]:
            w = 2 * round(x * n / 2)
            uu, zv = codeword_densities(n, k_U, k_V, w)
            rows.append({"w/n": w / n, "alpha_(U,U)": uu, "alpha_(0,V)": zv})
        return rows
    if t == "epsilon":
        p = _params_from_args(args)
        return [
            {
                **_params_dict(p),
                "log2_epsilon": epsilon_bound(p).log2_value,
                "log2_qhash_sqrt_eps": log2_qhash_sqrt_eps(p, p.lam),
            }
        ]
    if t == "attack":
        if None in (args.n, args.k, args.kU, args.kV):
            raise UsageError("attack table needs --n --k --kU --kV")
        pr, lr = (BASE_P, BASE_L) if args.grid == "base" else (surf.WIDE_P, surf.WIDE_L)
        c = structural_attack_cost(args.n, args.k, args.kU, args.kV, pr, lr)
        return [
            {
                "n": args.n,
                "k": args.k,
                "k_U": args.kU,
                "k_V": args.kV,
                "log2_C_U": c.C_U,
                "log2_C_V": c.C_V,
                "argmin_U": list(c.arg_U),
                "argmin_V": list(c.arg_V),
                "log2_C_U_perp": c.C_U_dual,
                "log2_C_V_perp": c.C_V_dual,
            }
        ]
    raise UsageError(f"unknown table {t!r}")


def _grid(lo: float, hi: float, points: int) -> list[float]:
    return [float(x) for x in np.linspace(lo, hi, points)]


def cmd_estimate(args, out) -> int:
    _emit(_table_rows(args), args.format, out)
    return EXIT_OK


def distcheck_report(n: int, k_U: int, k_V: int, w: int, samples: int, seed, decoders=("v1", "v2")) -> dict:
    """Sample both decoders on uniform syndromes and run the uniformity checks."""
    if samples <= 0:
        return {}
    p = surf.SurfParams(n=n, k_U=k_U, k_V=k_V, w=w, lam=16)
    rng = _rng(seed)
    sk, _ = surf.keygen(p, rng)
    table = build_rejection_table(p)
    h = n // 2
    report = {}
    for name in decoders:
        E = np.empty((samples, n), dtype=np.uint8)
        for t in range(samples):
            s1 = BitVector.random(h - k_U, rng)
            s2 = BitVector.random(h - k_V, rng)
            if name == "v2":
                E[t] = uuv_decode_v2_bits(sk.uuv, s1, s2, table, rng)
            else:
                E[t] = uuv_decode_v1_bits(sk.uuv, s1, s2, rng)
        weight = int(E[0].sum())
        chi = w1_chi_square([w1(e) for e in E], n, weight)
        leak = pairwise_leak_test(E)
        report[name] = {
            "weight": weight,
            "w1_chi_square": chi.statistic,
            "w1_dof": chi.dof,
            "w1_p_value": chi.p_value,
            "pair_rate_matched": leak.matched_rate,
            "pair_rate_unmatched": leak.unmatched_rate,
            "pair_z": leak.z,
            "pair_p_value": leak.p_value,
        }
    return report


def cmd_distcheck(args, out) -> int:
    rep = distcheck_report(args.n, args.kU, args.kV, args.w, args.samples, args.seed)
    json.dump(rep, out, indent=2)
    out.write("\n")
    return EXIT_OK


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="surf", description="Code-based hash-and-sign toolkit.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def params_args(sp):
        sp.add_argument("--n", type=int)
        sp.add_argument("--lambda", dest="lam", type=int, default=128)
        sp.add_argument("--recipe", choices=["balanced", "rejection"], default="balanced")
        sp.add_argument("--params-file")

    sp = sub.add_parser("params", help="print a parameter set")
    params_args(sp)
    sp.set_defaults(func=cmd_params)

    sp = sub.add_parser("keygen", help="write a key pair")
    params_args(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out-sk", required=True)
    sp.add_argument("--out-pk", required=True)
    sp.add_argument("--on-singular", choices=["rekey", "repermute"], default="rekey")
    sp.set_defaults(func=cmd_keygen)

    sp = sub.add_parser("sign", help="sign a file")
    sp.add_argument("--sk", required=True)
    sp.add_argument("--msg-file", required=True)
    sp.add_argument("--out-sig", required=True)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_sign)

    sp = sub.add_parser("verify", help="verify a signature")
    sp.add_argument("--pk", required=True)
    sp.add_argument("--msg-file", required=True)
    sp.add_argument("--sig", required=True)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("distinguish", help="hull test on a public key or code")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--pk")
    g.add_argument("--code-file")
    sp.add_argument("--kU", type=int, required=True)
    sp.add_argument("--kV", type=int, required=True)
    sp.set_defaults(func=cmd_distinguish)

    sp = sub.add_parser("estimate", help="estimator tables and curve data")
    sp.add_argument("--table", required=True, choices=["1", "3", "gv", "capacity", "distortion", "density", "epsilon", "attack"])
    params_args(sp)
    sp.add_argument("--k", type=int)
    sp.add_argument("--w", type=int)
    sp.add_argument("--kU", type=int)
    sp.add_argument("--kV", type=int)
    sp.add_argument("--rate", type=float, default=0.5)
    sp.add_argument("--w-ratio", type=float, action="append")
    sp.add_argument("--points", type=int, default=51)
    sp.add_argument("--grid", choices=["base", "wide"], default="base")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.set_defaults(func=cmd_estimate)

    sp = sub.add_parser("distcheck", help="uniformity checks on decoder outputs")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--kU", type=int, required=True)
    sp.add_argument("--kV", type=int, required=True)
    sp.add_argument("--w", type=int, required=True)
    sp.add_argument("--samples", type=int, default=2000)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_distcheck)
    return ap


def _apply_thread_cap() -> None:
    raw = os.environ.get("SURF_THREADS")
    if raw is None:
        return
    try:
        cap = int(raw)
    except ValueError:
        raise UsageError(f"SURF_THREADS must be a positive integer, got {raw!r}") from None
    if cap < 1:
        raise UsageError("SURF_THREADS must be at least 1")
    try:
        import numba
    except ImportError:
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # threading-layer probes warn on old TBB builds
        numba.set_num_threads(min(cap, numba.config.NUMBA_NUM_THREADS))


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        _apply_thread_cap()
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except UsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (FormatError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO
    except ValueError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE


def run(argv=None) -> tuple[int, str]:
    """``main`` with captured stdout, for scripts and tests."""
    buf = io.StringIO()
    code = main(argv, buf)
    return code, buf.getvalue()


if __name__ == "__main__":
    sys.exit(main())
