"""Command-line driver: ``ccic check | verify | normalize``.

Results are printed one per line with tab-separated fields.  Exit status is
0 on success, 1 when checking or verification fails and 2 on usage or parse
errors.
"""
from __future__ import annotations

import argparse
import glob
import os
import sys
import time

from . import certificates
from .errors import GoalMismatch, InvalidStep, KernelError, ParseError
from .reduction import normalize
from .syntax import Axiom, Check, Convert, Def, SymbolDef, parse_file, pretty
from .terms import Annot, Context, FVar
from .conversion import Settings
from .typer import Kernel


class CheckFailed(Exception):
    def __init__(self, decl, error):
        super().__init__(str(error))
        self.decl = decl
        self.error = error


def _label(d) -> str:
    match d:
        case SymbolDef(name=n) | Def(name=n) | Axiom(name=n):
            return n
    return "-"


def run_file(src: str, settings: Settings, out=None):
    """Check every declaration of ``src``; return ``(kernel, context)``.

    Raises ParseError on syntax errors and CheckFailed on the first
    declaration that does not check.
    """
    kernel = Kernel(settings)
    ctx = Context()
    for d in parse_file(src):
        kind = type(d).__name__.lower()
        try:
            match d:
                case SymbolDef(name, args, result, _):
                    try:
                        settings.sig = settings.sig.with_symbol(name, args, result)
                    except ValueError as e:
                        raise KernelError(str(e)) from None
                case Axiom(name, annot, ty, _):
                    kernel.sort_of_type(ctx, ty)
                    ctx = ctx.extend(name, annot, ty)
                case Def(name, ty, body, _):
                    kernel.sort_of_type(ctx, ty)
                    kernel.check(ctx, body, ty)
                    ctx = ctx.extend(name, Annot.U, ty, body)
                case Check(t, ty, _):
                    kernel.check(ctx, t, ty)
                case Convert(t, u, _):
                    ok, certs = kernel.conv.convertible(ctx, t, u)
                    if not ok:
                        raise KernelError(f"{pretty(t)} and {pretty(u)} are not convertible")
                    kernel.certificates.extend(certs)
        except KernelError as e:
            if e.span is None:
                e.span = d.span
            raise CheckFailed(d, e) from None
        if out is not None:
            print(f"ok\t{kind}\t{_label(d)}", file=out)
    return kernel, ctx


def _settings(args) -> Settings:
    return Settings(plain_cic=args.plain_cic, fuel=args.fuel,
                    extract_annot=Annot.R if args.extract_annot == "r" else Annot.U)


def _read(path):
    with open(path, encoding="utf-8") as f:
        return f.read()


def cmd_check(args) -> int:
    start = time.perf_counter()
    kernel = None
    try:
        kernel, _ = run_file(_read(args.file), _settings(args), sys.stdout)
        status = 0
    except CheckFailed as f:
        e = f.error
        print(f"error\t{e.span}\t{type(e).__name__}\t{e.message}")
        status = 1
    if args.certs is not None and kernel is not None:
        os.makedirs(args.certs, exist_ok=True)
        for old in glob.glob(os.path.join(args.certs, "*.ccert")):
            os.remove(old)
        paths = certificates.write_all(kernel.certificates, args.certs)
        for p in paths:
            print(f"certificate\t{p}")
    elapsed = time.perf_counter() - start
    n = len(kernel.certificates) if kernel is not None else 0
    if status == 0:
        print(f"checked\t{args.file}\t{n} certificates\t{elapsed:.3f}s")
    return status


def cmd_verify(args) -> int:
    if os.path.isdir(args.path):
        paths = sorted(glob.glob(os.path.join(args.path, "*.ccert")))
    elif os.path.isfile(args.path):
        paths = [args.path]
    else:
        print(f"error\t{args.path}\tno such file or directory", file=sys.stderr)
        return 2
    status = 0
    for p in paths:
        with open(p, "rb") as f:
            data = f.read()
        try:
            certificates.verify(data)
            print(f"ok\t{p}")
        except (ParseError, InvalidStep, GoalMismatch) as e:
            print(f"fail\t{p}\t{type(e).__name__}\t{e}")
            status = 1
    return status


def cmd_normalize(args) -> int:
    try:
        kernel, ctx = run_file(_read(args.file), _settings(args))
    except CheckFailed as f:
        e = f.error
        print(f"error\t{e.span}\t{type(e).__name__}\t{e.message}")
        return 1
    if args.term not in ctx:
        print(f"error\t-\tUnboundVariable\tno declaration named {args.term}")
        return 1
    nf = normalize(FVar(args.term), ctx.definitions(), args.fuel)
    print(f"{args.term}\t{pretty(nf)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ccic", description="CCIC proof kernel")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("file")
        sp.add_argument("--plain-cic", action="store_true", help="conversion by beta-iota only")
        sp.add_argument("--fuel", type=int, default=10**6, help="reduction step bound")
        sp.add_argument("--extract-annot", choices=("r", "u"), default="r",
                        help="annotation of the bindings that feed equations to the solver")

    c = sub.add_parser("check", help="type-check a .ccic file")
    common(c)
    c.add_argument("--certs", metavar="DIR", help="write certificates as DIR/NNNN.ccert")
    c.set_defaults(func=cmd_check)
    v = sub.add_parser("verify", help="replay certificates")
    v.add_argument("path", help="a .ccert file or a directory of them")
    v.set_defaults(func=cmd_verify)
    n = sub.add_parser("normalize", help="print the normal form of a definition")
    common(n)
    n.add_argument("--term", required=True, metavar="NAME")
    n.set_defaults(func=cmd_normalize)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0
    try:
        return args.func(args)
    except ParseError as e:
        print(f"error\t{e.span}\tParseError\t{e.message}")
        return 2
    except OSError as e:
        print(f"error\t-\tOSError\t{e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
