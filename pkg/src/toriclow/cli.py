"""Command line front end.

Exit codes: 0 success or positive verdict, 1 sound negative verdict (invalid
fan, NotLowToricDegree, no global witness to descend from, no rational point,
failed re-verification), 2 input error, 3 cap exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Optional

from . import fixtures
from .fan import Fan, validate
from .intersection import (
    CurveClass,
    class_group,
    curve_class,
    divisor_from_json,
    format_rational,
    is_ample,
    is_cartier,
    is_nef,
    linear_equivalence,
    pair,
    wall_curves,
)
from .linalg import CapExceeded
from .lowdeg import (
    LOW,
    NOT_LOW,
    TRIVIAL_POINT,
    GlobalWitness,
    global_scan,
    low_toric_degree,
    positivity_criteria,
    rcc_flag,
    restricted_candidate,
    trivial_point,
    verify_global,
)
from .mori import extremal_rays, fan_digest, initial_state, is_projective, picard_one_subvarieties, replay, run_descent
from .points import HomogeneousPoly, describe, is_relevant, rational_point
from .polytopes import DEFAULT_CAP, homogenize, lattice_points, polytope_of, sigma_d

OK, NEGATIVE, INPUT_ERROR, CAP_EXCEEDED = 0, 1, 2, 3


class InputError(Exception):
    def __init__(self, message: str, code: str = "input_error"):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------- input


def read_json(ref: str, what: str) -> dict:
    """Load a JSON file, or the packaged fixture for ``builtin:NAME``."""
    if ref.startswith("builtin:"):
        name = ref.split(":", 1)[1]
        try:
            return fixtures.load(name)
        except FileNotFoundError:
            raise InputError(f"no builtin fixture {name!r}", "unknown_fixture") from None
    try:
        with open(ref, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {what} file {ref}: {exc.strerror}", "missing_file") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON in {ref} at line {exc.lineno}, column {exc.colno}: {exc.msg}",
                         "malformed_json") from None


def load_fan(ref: str) -> tuple[Fan, Optional[dict]]:
    data = read_json(ref, "fan")
    bundled = data.get("divisor") if isinstance(data, dict) and "fan" in data else None
    raw = data["fan"] if isinstance(data, dict) and "fan" in data else data
    try:
        return Fan.from_json(raw), bundled
    except ValueError as exc:
        raise InputError(str(exc), "bad_fan") from None


def load_divisor(args, fan: Fan, bundled: Optional[dict], required: bool = True) -> Optional[tuple[Fraction, ...]]:
    data = bundled
    if args.divisor:
        data = read_json(args.divisor, "divisor")
        if isinstance(data, dict) and "divisor" in data:
            data = data["divisor"]
    if data is None:
        if required:
            raise InputError("this command needs --divisor", "missing_divisor")
        return None
    try:
        return divisor_from_json(data, fan)
    except (ValueError, TypeError) as exc:
        raise InputError(str(exc), "bad_divisor") from None


def load_poly(args, fan: Fan, d) -> HomogeneousPoly:
    if not args.poly:
        raise InputError("this command needs --poly", "missing_poly")
    data = read_json(args.poly, "polynomial")
    try:
        return HomogeneousPoly.from_json(data, fan, d, args.prime)
    except ValueError as exc:
        raise InputError(str(exc), "bad_polynomial") from None


def require_valid(fan: Fan) -> None:
    report = validate(fan)
    if not report.ok:
        raise InputError("invalid fan: " + "; ".join(report.problems), "invalid_fan")


# ---------------------------------------------------------------- commands


def cmd_validate(args) -> tuple[int, dict, str]:
    fan, _ = load_fan(args.fan)
    report = validate(fan)
    out = report.to_json()
    text = "valid complete simplicial fan" if report.ok else "invalid fan:\n  " + "\n  ".join(report.problems)
    if report.ok and report.smooth:
        text += " (smooth)"
    return (OK if report.ok else NEGATIVE), out, text


def cmd_analyze(args) -> tuple[int, dict, str]:
    fan, bundled = load_fan(args.fan)
    require_valid(fan)
    d = load_divisor(args, fan, bundled, required=False)
    cl = class_group(fan)
    rays = extremal_rays(fan)
    out = {
        "fan": validate(fan).to_json(),
        "class_group": {"free_rank": cl.free_rank, "torsion": list(cl.torsion)},
        "projective": is_projective(fan),
        "extremal_rays": [r.to_json() for r in rays],
    }
    lines = [f"class group: Z^{cl.free_rank}" + "".join(f" + Z/{t}" for t in cl.torsion),
             f"projective: {out['projective']}",
             f"extremal rays: {len(rays)}"]
    lines += [f"  {r.kind}: [{', '.join(r.generator.to_json())}]" for r in rays]
    if d is not None:
        cartier = is_cartier(fan, d) is not None
        nef = is_nef(fan, d)
        info = {
            "coeffs": [format_rational(x) for x in d],
            "cartier": cartier,
            "nef": nef,
            "ample": is_ample(fan, d),
            "wall_degrees": [format_rational(pair(c, d)) for c in wall_curves(fan)],
        }
        if cartier and nef:
            crit = positivity_criteria(fan, d)
            rcc = rcc_flag(fan, d)
            info["criteria"] = crit.to_json()
            info["rcc"] = rcc.to_json() if rcc else None
        out["divisor"] = info
        lines.append(f"divisor: cartier={cartier} nef={nef} ample={info['ample']}")
        lines.append("wall degrees: " + " ".join(info["wall_degrees"]))
    return OK, out, "\n".join(lines)


def cmd_low_degree(args) -> tuple[int, dict, str]:
    fan, bundled = load_fan(args.fan)
    require_valid(fan)
    d = load_divisor(args, fan, bundled)
    v = low_toric_degree(fan, d)
    out = v.to_json()
    if v.outcome == TRIVIAL_POINT:
        text = f"{v.outcome}: V({sorted(v.trivial.cone)}) is a torus-fixed point on every member ({v.trivial.reason})"
    elif v.outcome == LOW:
        w = v.witness
        text = (f"{v.outcome} via {v.path}: V({sorted(w.gamma)}) has "
                f"C·D = {format_rational(w.degree)} < {format_rational(w.anticanonical)} = C·(-K)")
    else:
        text = f"{v.outcome}: every Picard-one subvariety fails\n  " + "\n  ".join(c.text() for c in v.report)
    return (OK if v.is_low else NEGATIVE), out, text


def _descent_start(fan: Fan, d):
    if is_cartier(fan, d) is None or not is_nef(fan, d):
        raise InputError("descent needs a nef Cartier divisor", "not_nef_cartier")
    gf = sigma_d(fan, d)
    scan = global_scan(fan, d, gf)
    return gf, scan


def cmd_mmp_trace(args) -> tuple[int, dict, str]:
    fan, bundled = load_fan(args.fan)
    require_valid(fan)
    d = load_divisor(args, fan, bundled)
    gf, scan = _descent_start(fan, d)
    if scan.witness is None:
        out = {"global_witness": None, "candidates": scan.to_json()["candidates"]}
        return NEGATIVE, out, "no global witness to descend from:\n  " + "\n  ".join(scan.texts())
    w = scan.witness
    state = initial_state(fan, d, w.c, w.i_set, gf)
    _, trace = run_descent(state, args.cap if args.cap is not None else None)
    out = {"global_witness": w.to_json(), "trace": trace.to_json()}
    lines = [f"start: C = [{', '.join(w.c.to_json())}], I = {sorted(w.i_set)}"]
    for s in trace.steps:
        extra = f" removing ray {s['rho0']}" if s["rho0"] is not None else ""
        lines.append(f"{s['kind']} contraction{extra}; rays now {s['state']['rays']}")
    fw = trace.final_witness
    lines.append(f"final: extremal class with C·D = {format_rational(fw.degree)} < {format_rational(fw.i_sum)}")
    return OK, out, "\n".join(lines)


def cmd_rational_point(args) -> tuple[int, dict, str]:
    fan, bundled = load_fan(args.fan)
    require_valid(fan)
    d = load_divisor(args, fan, bundled)
    f = load_poly(args, fan, d)
    cap = args.cap if args.cap is not None else DEFAULT_CAP
    try:
        report = rational_point(fan, f, cap, args.jobs)
    except ValueError as exc:
        raise InputError(str(exc), "bad_prime") from None
    return (OK if report.found else NEGATIVE), report.to_json(), describe(report)


def cmd_polytope(args) -> tuple[int, dict, str]:
    fan, bundled = load_fan(args.fan)
    require_valid(fan)
    d = load_divisor(args, fan, bundled)
    cap = args.cap if args.cap is not None else DEFAULT_CAP
    poly = polytope_of(fan, d)
    pts = lattice_points(fan, d, cap)
    out = {
        "vertices": [[format_rational(x) for x in v] for v in poly.vertices or ()],
        "halfspaces": [{"normal": list(u), "offset": format_rational(a)} for u, a in poly.halfspaces],
        "lattice_points": [list(a) for a in pts.points],
        "characters": [list(m) for m in pts.characters],
    }
    if is_cartier(fan, d) is not None and is_nef(fan, d):
        out["divisor_fan"] = sigma_d(fan, d).to_json()
    text = f"{len(poly.vertices or ())} vertices, {len(pts)} lattice points"
    return OK, out, text


def cmd_replay(args) -> tuple[int, dict, str]:
    fan, _ = load_fan(args.fan)
    require_valid(fan)
    if not args.trace:
        raise InputError("replay needs --trace", "missing_trace")
    data = read_json(args.trace, "trace")
    steps = data.get("trace", data).get("steps") if isinstance(data, dict) else None
    if steps is None:
        raise InputError("trace file has no steps", "bad_trace")
    try:
        final = replay(fan, steps)
    except (ValueError, KeyError, TypeError) as exc:
        return NEGATIVE, {"replayed": False, "reason": str(exc)}, f"replay failed: {exc}"
    out = {"replayed": True, "steps": len(steps), "fan": final.to_json(), "fan_digest": fan_digest(final)}
    return OK, out, f"replayed {len(steps)} steps; final fan has {final.n_rays} rays"


COMMANDS = {
    "validate": cmd_validate,
    "analyze": cmd_analyze,
    "low-degree": cmd_low_degree,
    "mmp-trace": cmd_mmp_trace,
    "rational-point": cmd_rational_point,
    "polytope": cmd_polytope,
    "replay": cmd_replay,
}


# ---------------------------------------------------------------- re-verification from emitted JSON


def _frac_list(xs) -> tuple[Fraction, ...]:
    return tuple(Fraction(x) for x in xs)


def verify_report(command: str, args, data: dict) -> list[str]:
    """Re-derive the claims of a parsed report from the input fan; returns failures."""
    fan, bundled = load_fan(args.fan)
    problems: list[str] = []
    if command == "low-degree":
        d = load_divisor(args, fan, bundled)
        outcome = data["outcome"]
        if outcome == TRIVIAL_POINT:
            t = trivial_point(fan, d)
            if t is None or sorted(t.cone) != data["trivial_point"]["cone"]:
                problems.append("trivial point not reproduced")
        else:
            target, td = fan, d
            if "ample_model" in data:
                target = Fan.from_json(data["ample_model"]["fan"])
                td = _frac_list(data["ample_model"]["divisor"])
                if not validate(target).ok:
                    problems.append("ample model fan is invalid")
            if outcome == LOW:
                w = data["witness"]
                cand = restricted_candidate(target, td, w["gamma"])
                if not cand.holds or format_rational(cand.degree) != w["degree"]:
                    problems.append("restricted inequality not reproduced")
            elif outcome == NOT_LOW:
                gammas = sorted(sorted(g) for g, _ in picard_one_subvarieties(target))
                if gammas != sorted(c["gamma"] for c in data["exhaustion"]):
                    problems.append("exhaustion does not cover every Picard-one subvariety")
                for c in data["exhaustion"]:
                    if restricted_candidate(target, td, c["gamma"]).holds:
                        problems.append(f"V({c['gamma']}) does satisfy the inequality")
    elif command == "mmp-trace":
        d = load_divisor(args, fan, bundled)
        gw = data["global_witness"]
        c = curve_class(fan, _frac_list(gw["curve"]))
        w = GlobalWitness(c, frozenset(gw["i_set"]), (), Fraction(gw["degree"]), Fraction(gw["i_sum"]))
        if not verify_global(fan, d, w):
            problems.append("global witness does not re-verify")
        trace = data["trace"]
        final = replay(fan, trace["steps"])
        fw = trace["final_witness"]
        gen = CurveClass(_frac_list(fw["ray"]["generator"]))
        if all(r.generator != gen for r in extremal_rays(final)):
            problems.append("final class is not extremal on the final fan")
        last = trace["steps"][-1]["state"] if trace["steps"] else trace["initial"]
        if format_rational(pair(gen, _frac_list(last["d"]))) != fw["degree"]:
            problems.append("final degree not reproduced")
        if not 0 < Fraction(fw["degree"]) < Fraction(fw["i_sum"]):
            problems.append("final inequality fails")
    elif command == "rational-point" and data.get("found"):
        d = load_divisor(args, fan, bundled)
        f = load_poly(args, fan, d)
        x = data["point"]
        if f(x) != 0:
            problems.append("f does not vanish at the point")
        if not is_relevant(fan, x):
            problems.append("the point is not relevant")
    elif command == "polytope":
        d = load_divisor(args, fan, bundled)
        for a, m in zip(data["lattice_points"], data["characters"]):
            if list(homogenize(fan, d, m)) != a or linear_equivalence(fan, a, d) is None:
                problems.append(f"lattice point {a} not reproduced")
    return problems


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="toriclow", description="Low toric degree certificates for toric varieties.")
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--fan", required=True, help="fan JSON file, or builtin:NAME")
    parser.add_argument("--divisor", help="divisor JSON file ({\"coeffs\": [...]}), or builtin:NAME")
    parser.add_argument("--poly", help="polynomial JSON file")
    parser.add_argument("--prime", type=int, help="override the prime of the polynomial file")
    parser.add_argument("--trace", help="mmp-trace JSON output to replay")
    parser.add_argument("--format", choices=("json", "text"), default="json")
    parser.add_argument("--verify", action="store_true", help="re-derive every claim of the emitted report")
    parser.add_argument("--cap", type=int, help="search / iteration cap")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for exhaustive search")
    return parser


def _emit(args, data: dict, text: str) -> None:
    if args.format == "json":
        print(json.dumps(data, sort_keys=True, indent=2))
    else:
        print(text)


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return INPUT_ERROR if exc.code else OK
    if args.jobs < 1:
        args.jobs = 1
    try:
        code, data, text = COMMANDS[args.command](args)
        data = json.loads(json.dumps(data, sort_keys=True))
        if args.verify and code == OK:
            problems = verify_report(args.command, args, data)
            data["verified"] = not problems
            if problems:
                data["verification_failures"] = problems
                text += "\nverification FAILED: " + "; ".join(problems)
                code = NEGATIVE
            else:
                text += "\nverified"
    except InputError as exc:
        _emit(args, {"error": {"code": exc.code, "message": str(exc)}}, f"error: {exc}")
        return INPUT_ERROR
    except CapExceeded as exc:
        _emit(args, {"error": {"code": "cap_exceeded", "message": str(exc)}}, f"cap exceeded: {exc}")
        return CAP_EXCEEDED
    except ValueError as exc:
        _emit(args, {"error": {"code": "invalid_input", "message": str(exc)}}, f"error: {exc}")
        return INPUT_ERROR
    _emit(args, data, text)
    return code


if __name__ == "__main__":
    sys.exit(main())
