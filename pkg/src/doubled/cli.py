"""Command-line interface: ``ddo <subcommand> ...``.

JSON goes to stdout by default. Exit status is 0 on success, 1 when a
validation check fails and 2 on usage or input errors.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path


from . import __version__
from .numerics import PREDICATE_TOL, DomainError, StructuralError
from .pauli import basis_to_json, build_basis

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def default_tol() -> float:
    raw = os.environ.get("DDO_TOL")
    if raw is None:
        return PREDICATE_TOL
    try:
        tol = float(raw)
    except ValueError:
        raise UsageError(f"DDO_TOL is not a number: {raw!r}") from None
    if not tol > 0:
        raise UsageError("DDO_TOL must be positive")
    return tol


def _emit(args, payload: dict, text_lines: list[str] | None = None) -> None:
    record = {"version": __version__, "command": args.command, "seed": args.seed,
              "tolerances": {"predicate": args.tol}}
    record.update(payload)
    if args.format == "text":
        lines = text_lines if text_lines is not None else [
            f"{k}: {json.dumps(v, sort_keys=True)}" for k, v in record.items()]
        out = "\n".join(lines) + "\n"
    else:
        out = json.dumps(record, indent=2, sort_keys=True) + "\n"
    if getattr(args, "output", None):
        Path(args.output).write_text(out)
    else:
        sys.stdout.write(out)


def _load_model(path):
    from .process_dsl import parse_file
    return parse_file(Path(path))


def _load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc.msg})") from None


# ------------------------------------------------------------ subcommands

def cmd_basis(args) -> int:
    b = build_basis(args.d)
    payload = {"basis": basis_to_json(b), "gram_residual": b.gram_residual(),
               "hermiticity_residual": b.hermiticity_residual(),
               "traceless_residual": b.traceless_residual()}
    _emit(args, payload)
    return EXIT_OK if b.gram_residual() < 1e-12 else EXIT_FAIL


def cmd_parse(args) -> int:
    from .process_dsl import serialize, to_ast
    model = _load_model(args.file)
    if args.ast:
        _emit(args, {"ast": to_ast(model)})
    elif args.format == "text":
        sys.stdout.write(serialize(model))
    else:
        _emit(args, {"canonical": serialize(model)})
    return EXIT_OK


def cmd_dct(args) -> int:
    from .tensors import dct_spacetime
    model = _load_model(args.file)
    t = dct_spacetime(model, build_basis(model.local_dim))
    _emit(args, {"tensor": t.to_json()})
    return EXIT_OK


def cmd_build(args) -> int:
    from .ddo import assemble
    from .tensors import dct_spacetime
    model = _load_model(args.file)
    b = build_basis(model.local_dim)
    w = assemble(dct_spacetime(model, b), b)
    _emit(args, {"ddo": w.to_json()})
    return EXIT_OK


def _tensor_from_input(path):
    from .tensors import CorrelationTensor, dct_spacetime
    if str(path).endswith(".ddo"):
        model = _load_model(path)
        return dct_spacetime(model, build_basis(model.local_dim))
    obj = _load_json(path)
    return CorrelationTensor.from_json(obj.get("tensor", obj))


def cmd_verify(args) -> int:
    from .ddo import one_event_audit
    from .tensors import verify_axioms
    t = _tensor_from_input(args.file)
    rep = verify_axioms(t, tol=args.tol)
    payload = {"axioms": rep.to_json()}
    if args.audit:
        audit = one_event_audit(t, build_basis(t.d), tol=args.tol)
        payload["one_event_audit"] = [
            {"event": a.event, "state_ok": a.state_ok, "form_residual": a.form_residual,
             "passed": a.passed} for a in audit]
    _emit(args, payload)
    return EXIT_OK if rep.passed else EXIT_FAIL


def _load_ddo(path):
    from .ddo import DoubledDensityOperator
    obj = _load_json(path)
    return DoubledDensityOperator.from_json(obj.get("ddo", obj))


def cmd_analyze(args) -> int:
    from .ddo import detect_temporality
    if not args.temporality:
        raise UsageError("analyze needs an analysis flag (--temporality)")
    rep = detect_temporality(_load_ddo(args.file), tol=args.tol)
    _emit(args, {"temporality": rep.to_json()})
    return EXIT_OK


def cmd_recover(args) -> int:
    from .ddo import recover_state_at_step
    from .numerics import matrix_to_json
    w = _load_ddo(args.file)
    model = _load_model(args.model)
    rho = recover_state_at_step(w, model, args.step, tol=args.tol)
    _emit(args, {"step": args.step, "state": matrix_to_json(rho.mat)})
    return EXIT_OK


def cmd_born(args) -> int:
    from .born import born_distribution, qm_oracle
    from .qobjects import load_instruments
    model = _load_model(args.file)
    inst = load_instruments(args.instruments)
    dist = born_distribution(model, inst, build_basis(model.local_dim), tol=args.tol)
    payload = {"distribution": dist.to_json(), "total": dist.total()}
    ok = abs(dist.total() - 1) <= args.tol
    if args.compare_oracle:
        dev = dist.max_deviation(qm_oracle(model, inst))
        payload["oracle_max_deviation"] = dev
        ok = ok and dev <= args.tol
    _emit(args, payload)
    return EXIT_OK if ok else EXIT_FAIL


def _bloch(vec, name):
    from .qobjects import BlochObservable
    try:
        return BlochObservable.normalized(vec)
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"{name} must be a nonzero 3-vector") from None


def cmd_test(args) -> int:
    from . import inequalities as iq
    if args.test == "st":
        cfg = iq.STTestConfig(_bloch(args.a1, "--a1"), _bloch(args.a2, "--a2"), _bloch(args.a3, "--a3"))
        res = iq.st_test_value(cfg)
        _emit(args, {"test": "st", "value": res.simulated, **res.to_json()})
        return EXIT_OK
    if args.test == "lg":
        from .process_dsl import ProcessModel
        from .qobjects import DensityOperator, builtin_channel
        if args.model:
            model = _load_model(args.model)
        else:
            ch = builtin_channel("ry", [args.angle])
            model = ProcessModel.build(2, 1, DensityOperator.maximally_mixed(2), [(0,)] * 3, [ch, ch])
        obs = [_bloch(v, "--observable") for v in (args.observable or [[0, 0, 1]] * 3)]
        if len(obs) != 3:
            raise UsageError("give --observable three times or not at all")
        res = iq.lg_value(model, obs)
        _emit(args, {"test": "lg", "value": res.value,
                     "correlators": {"Q2Q1": res.correlators[0], "Q3Q2": res.correlators[1],
                                     "Q3Q1": res.correlators[2]},
                     "quantum_bound": 1.5})
        return EXIT_OK
    table = iq.load_behavior(args.table)
    value = iq.causal_value(table, args.which)
    bound = iq.causal_bound(args.which)
    _emit(args, {"test": "causal", "which": args.which, "value": value, "bound": bound,
                 "violates": bool(value > bound + args.tol),
                 "signaling": {"B->A": iq.signaling_check(table, "B->A"),
                               "A->B": iq.signaling_check(table, "A->B")}})
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .acceptance import run_all
    results = run_all(args.seed, echo=lambda s: print(s, file=sys.stderr, flush=True))
    _emit(args, {"criteria": [{"number": r.number, "name": r.name, "passed": r.passed,
                               "detail": r.detail} for r in results],
                 "passed": all(r.passed for r in results)},
          text_lines=[r.line() for r in results])
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    common.add_argument("--tol", type=float, default=None,
                        help="predicate tolerance (default: $DDO_TOL or 1e-9)")

    p = argparse.ArgumentParser(prog="ddo", description="Doubled density operators for quantum processes.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("basis", parents=[common], help="print the generalized Pauli basis")
    s.add_argument("d", type=int)
    s.set_defaults(func=cmd_basis)

    s = sub.add_parser("parse", parents=[common], help="parse a process file")
    s.add_argument("file")
    s.add_argument("--ast", action="store_true", help="emit a JSON syntax tree")
    s.set_defaults(func=cmd_parse)

    for name, fn, what in (("dct", cmd_dct, "correlation tensor"), ("build", cmd_build, "doubled density operator")):
        s = sub.add_parser(name, parents=[common], help=f"compute the {what} of a process")
        s.add_argument("file")
        s.add_argument("-o", "--output", required=True)
        s.set_defaults(func=fn)

    s = sub.add_parser("verify", parents=[common], help="check tensor axioms")
    s.add_argument("file", help="tensor JSON or process file")
    s.add_argument("--audit", action="store_true", help="also audit one-event reductions")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("analyze", parents=[common], help="analyze a DDO")
    s.add_argument("file")
    s.add_argument("--temporality", action="store_true")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("recover", parents=[common], help="recover the state at a step")
    s.add_argument("file")
    s.add_argument("--model", required=True)
    s.add_argument("--step", type=int, required=True)
    s.set_defaults(func=cmd_recover)

    s = sub.add_parser("born", parents=[common], help="outcome distribution of local measurements")
    s.add_argument("file")
    s.add_argument("--instruments", required=True)
    s.add_argument("--compare-oracle", action="store_true")
    s.set_defaults(func=cmd_born)

    s = sub.add_parser("test", parents=[common], help="inequality tests")
    tsub = s.add_subparsers(dest="test", required=True)
    st = tsub.add_parser("st", parents=[common])
    for flag in ("--a1", "--a2", "--a3"):
        st.add_argument(flag, type=float, nargs=3, required=True, metavar=("X", "Y", "Z"))
    lg = tsub.add_parser("lg", parents=[common])
    lg.add_argument("--model", help="three-step qubit process (default: ry precession)")
    lg.add_argument("--angle", type=float, default=math.pi / 3, help="Bloch rotation per step")
    lg.add_argument("--observable", type=float, nargs=3, action="append", metavar=("X", "Y", "Z"))
    ca = tsub.add_parser("causal", parents=[common])
    ca.add_argument("--table", required=True)
    ca.add_argument("--which", choices=("gyni", "lgyni"), required=True)
    s.set_defaults(func=cmd_test)

    s = sub.add_parser("selftest", parents=[common], help="run the acceptance criteria")
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    from .process_dsl import ParseError
    try:
        if args.tol is None:
            args.tol = default_tol()
        return args.func(args)
    except (UsageError, ParseError, StructuralError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"ddo {args.command}: error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except DomainError as exc:
        print(f"ddo {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL
