"""conic-kit command-line front end."""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass

import numpy as np

from . import fixtures
from .affine import (
    AffineSystem,
    HFamily,
    classify_affine,
    classify_h,
    h_ode_check,
    normalizing_reparam,
)
from .conics import (
    ConicSubmanifold,
    Diffeomorphism,
    EquivalenceWitness,
    classify_conic,
    conic_determinants,
    parametrize_conic,
    velocity_names,
    verify_equivalence,
)
from .errors import ConicKitError, DegenerateFrame, EvalError, NotInNormalForm
from .fields import VectorField
from .oracle import Grid
from .quadnl import QuadraticNLSystem, ladder_classify, qnl_structure
from .symexpr import Box, Chart, SampleSpec, evaluate, parse_expr, to_text

EXIT_OK, EXIT_FAILED, EXIT_BAD_INPUT, EXIT_DEGENERATE = 0, 1, 2, 3


class BadInput(ConicKitError):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    document: dict
    source: str
    box_halfwidth: float | None
    samples: int
    tolerance: float
    seed: int
    fmt: str

    def __post_init__(self):
        if not self.tolerance > 0:
            raise BadInput("--tol must be positive")
        if self.samples < 16:
            raise BadInput("--samples must be at least 16")

    @property
    def spec(self) -> SampleSpec:
        return SampleSpec(self.samples, self.tolerance, self.seed)


# ---------------------------------------------------------------- input handling


def _section(doc: dict, wanted: tuple[str, ...]) -> tuple[str, dict]:
    for name in wanted:
        if isinstance(doc.get(name), dict):
            return name, doc[name]
    # flat documents: infer the payload type from its keys
    if "omega" in doc and "g" in doc:
        kind = "conic"
    elif "f" in doc:
        kind = "affine"
    elif "A" in doc:
        kind = "qnl"
    elif "phi" in doc:
        kind = "witness"
    elif all(k in doc for k in "abcde"):
        kind = "hfamily"
    else:
        kind = None
    if kind in wanted:
        return kind, doc
    raise BadInput(f"input has no section usable here (need one of {', '.join(wanted)})")


def _need(payload: dict, key: str):
    if key not in payload:
        raise BadInput(f"missing field {key!r}")
    return payload[key]


def _params(payload: dict) -> dict[str, float]:
    raw = payload.get("params", {}) or {}
    if not isinstance(raw, dict):
        raise BadInput("params must be an object")
    try:
        return {str(k): float(v) for k, v in raw.items()}
    except (TypeError, ValueError):
        raise BadInput("params values must be numbers") from None


def _chart(payload: dict, default: tuple[str, ...]) -> Chart:
    names = payload.get("chart", list(default))
    if not isinstance(names, list) or len(names) != len(default):
        raise BadInput(f"chart must list {len(default)} coordinate names")
    return Chart(tuple(str(n) for n in names))


def _expr(text, chart: Chart, params, extra: tuple[str, ...] = ()):
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        text = repr(text)
    if not isinstance(text, str):
        raise BadInput(f"expected an expression string, got {text!r}")
    return parse_expr(text, Chart(chart.names + extra), params)


def _point(payload: dict, chart: Chart) -> dict[str, float]:
    pt = payload.get("point", [0.0] * chart.dimension)
    if not isinstance(pt, list) or len(pt) != chart.dimension:
        raise BadInput(f"point must have {chart.dimension} entries")
    return {n: float(v) for n, v in zip(chart.names, pt)}


def _box(cfg: RunConfig, payload: dict, point: dict, params: dict) -> Box:
    hw = cfg.box_halfwidth if cfg.box_halfwidth is not None else payload.get("box_halfwidth", 0.5)
    if not float(hw) > 0:
        raise BadInput("box half-width must be positive")
    return Box.around(point, float(hw), params)


def _field(texts, chart, params) -> VectorField:
    if not isinstance(texts, list) or len(texts) != chart.dimension:
        raise BadInput(f"vector fields need {chart.dimension} components")
    return VectorField(chart, tuple(_expr(t, chart, params) for t in texts))


def _hfamily(payload: dict, params) -> HFamily:
    chart = Chart(("z", "y"))
    vals = [_expr(_need(payload, k), chart, params) for k in "abcde"]
    eps = int(payload.get("epsilon", 0))
    return HFamily(*vals, epsilon=eps)


# ---------------------------------------------------------------- report helpers


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _entry(e, point, params) -> dict:
    try:
        val = _num(evaluate(e, point, params))
    except EvalError:
        val = None
    return {"expr": to_text(e), "at_x0": val}


def _cite(step: str, rule: str) -> dict:
    return {"step": step, "rule": rule}


# ---------------------------------------------------------------- commands


def cmd_classify_conic(cfg: RunConfig) -> tuple[dict, int]:
    _, p = _section(cfg.document, ("conic",))
    params = _params(p)
    chart = _chart(p, ("z", "y"))
    g = _need(p, "g")
    if not (isinstance(g, list) and len(g) == 2 and all(isinstance(r, list) and len(r) == 2 for r in g)):
        raise BadInput("g must be a 2x2 array")
    gm = [[_expr(x, chart, params) for x in row] for row in g]
    om = _need(p, "omega")
    if not isinstance(om, list) or len(om) != 2:
        raise BadInput("omega needs two components")
    try:
        S = ConicSubmanifold.from_matrices(gm, [_expr(o, chart, params) for o in om],
                                           _expr(_need(p, "h"), chart, params), chart)
    except ValueError as err:
        raise BadInput(str(err)) from None
    x0 = _point(p, chart)
    box = _box(cfg, p, x0, params)
    d1, d2 = conic_determinants(S)
    cls = classify_conic(S, x0, box, cfg.spec)
    param = None
    if cls.tag in ("Elliptic", "Hyperbolic", "Parabolic"):
        try:
            Xi = parametrize_conic(S, cls, params)
            param = {"kind": Xi.kind, "A": [to_text(c) for c in Xi.A],
                     "B": [to_text(c) for c in Xi.B], "C": [to_text(c) for c in Xi.C]}
        except NotInNormalForm:
            param = None
    report = {
        "structure": {"delta1": _entry(d1, x0, params), "delta2": _entry(d2, x0, params)},
        "verdicts": {"delta1": cls.delta1_verdict.as_dict(), "delta2": cls.delta2_verdict.as_dict()},
        "tag": cls.tag,
        "parametrization": param,
        "citations": [
            _cite("determinants", "Delta1 = det of the bordered matrix [[g, omega^T], [omega, h]], Delta2 = det g"),
            _cite("classification", "sign of Delta2 at x0 with Delta1 != 0; Delta2 = 0 on the box gives the parabolic form"),
            _cite("emptiness", "a nonempty non-degenerate conic has an indefinite bordered matrix"),
        ],
    }
    return report, EXIT_DEGENERATE if cls.tag == "Degenerate" else EXIT_OK


def _affine_input(cfg: RunConfig):
    kind, p = _section(cfg.document, ("affine", "hfamily"))
    params = _params(p)
    if kind == "hfamily":
        fam = _hfamily(p, params)
        S = fam.system()
        chart = S.chart
    else:
        chart = _chart(p, ("z", "y", "w"))
        S = AffineSystem(_field(_need(p, "f"), chart, params), _field(_need(p, "g"), chart, params))
    x0 = _point(p, chart)
    return S, x0, _box(cfg, p, x0, params), params


def cmd_classify_affine(cfg: RunConfig) -> tuple[dict, int]:
    S, x0, box, params = _affine_input(cfg)
    res = classify_affine(S, x0, box, cfg.spec)
    st = res.structure
    report = {"tag": res.tag, "reason": res.reason}
    if st is not None:
        report["structure"] = {
            "rho": _entry(st.rho, x0, params), "tau": _entry(st.tau, x0, params),
            "chi": _entry(st.chi, x0, params), "c2_residual": _entry(st.c2_residual, x0, params),
            "frame_det": _entry(st.frame_det, x0, params)}
        report["verdicts"] = {
            "C1": {"value_at_x0": _num(st.c1_value_at_xi0), "pass": st.c1_pass,
                   "frame_singular_in_box": st.frame_singular},
            "chi": st.chi_verdict.as_dict(), "C2": st.c2_verdict.as_dict()}
    report["citations"] = [
        _cite("frame", "C1: g, ad_g f, ad_g^2 f independent at x0"),
        _cite("structure", "ad_g^3 f = rho ad_g^2 f + tau ad_g f mod g; chi = 3 L_g rho - 2 rho^2 - 9 tau"),
        _cite("quadratisability", "C2: L_g chi - (2/3) rho chi = 0"),
        _cite("type", "chi > 0 elliptic, chi < 0 hyperbolic, chi = 0 parabolic"),
    ]
    return report, EXIT_DEGENERATE if res.tag == "C1Fails" else EXIT_OK


def cmd_ladder(cfg: RunConfig) -> tuple[dict, int]:
    _, p = _section(cfg.document, ("qnl",))
    params = _params(p)
    chart = _chart(p, ("z", "y"))
    kind = _need(p, "kind")
    if kind not in ("E", "H", "P"):
        raise BadInput("kind must be E, H or P")
    Xi = QuadraticNLSystem(kind, *(_field(_need(p, k), chart, params) for k in "ABC"))
    x0 = _point(p, chart)
    box = _box(cfg, p, x0, params)
    try:
        label = ladder_classify(Xi, x0, box, cfg.spec)
    except DegenerateFrame as err:
        return {"tag": None, "error": f"DegenerateAB: {err}"}, EXIT_DEGENERATE
    s = qnl_structure(Xi)
    report = {
        "structure": {k: _entry(v, x0, params) for k, v in s.values().items()},
        "ladder": label.as_dict(),
        "tag": label.tag,
        "citations": [
            _cite("structure", "[A, B] = mu0 A + mu1 B and C = gamma0 A + gamma1 B"),
            _cite("invariant", "Gamma = gamma0^2 + gamma1^2 (E), gamma0^2 - gamma1^2 (H), gamma0 + gamma1^2 (P)"),
            _cite("ladder", "flat, constant-form and null-form rungs decided by zero tests of their residuals"),
        ],
    }
    return report, EXIT_OK


def _grid_from(spec: dict) -> Grid:
    if not isinstance(spec, dict) or not spec:
        raise BadInput("grid must map names to [lo, hi, count]")
    try:
        return Grid(tuple((n, float(lo), float(hi), int(k)) for n, (lo, hi, k) in spec.items()))
    except (TypeError, ValueError) as err:
        raise BadInput(f"bad grid: {err}") from None


def cmd_verify(cfg: RunConfig) -> tuple[dict, int]:
    kind, p = _section(cfg.document, ("witness", "hfamily"))
    params = _params(p)
    checks = {}
    if kind == "witness":
        chart = _chart(p, ("z", "y"))
        vel = velocity_names(chart)
        S = _expr(_need(p, "S"), chart, params, vel)
        St = _expr(_need(p, "S_tilde"), chart, params, vel)
        phi_t = _need(p, "phi")
        if not isinstance(phi_t, list) or len(phi_t) != 2:
            raise BadInput("phi needs two components")
        phi = Diffeomorphism(chart, chart, tuple(_expr(c, chart, params) for c in phi_t))
        delta = _expr(_need(p, "delta"), chart, params, vel)
        grid = _grid_from(_need(p, "grid"))
        grid = Grid(grid.axes, fixed=params)
        tol = float(p.get("tol", cfg.tolerance))
        checks["equivalence"] = verify_equivalence(S, St, EquivalenceWitness(phi, delta), grid, tol).as_dict()
        cites = [_cite("equivalence", "S_tilde(phi(x), D phi(x) xdot) = delta(x, xdot) S(x, xdot) with delta != 0")]
    else:
        fam = _hfamily(p, params)
        pt = p.get("point", [0, 0, 0])
        x = {"z": float(pt[0]), "y": float(pt[1])}
        sym, fd = h_ode_check(fam.h, x, np.linspace(-0.5, 0.5, 21), params)
        checks["ode_symbolic"] = sym.as_dict()
        checks["ode_fd"] = fd.as_dict()
        r = normalizing_reparam(fam, Box.around(x, 0.25, params), cfg.spec)
        grid = Grid((("z", x["z"], x["z"], 1), ("y", x["y"], x["y"], 1), ("wbar", -0.3, 0.3, 7)),
                    fixed=params)
        checks["reparam_" + r.kind] = r.validate(grid).as_dict()
        hc = classify_h(fam, x, None, cfg.spec)
        checks["sign_law"] = {"tag": hc.tag, "d_at_x0": hc.d_at_x0, "chi_at_x0": hc.chi_at_x0,
                              "pass": hc.consistent}
        cites = [_cite("ode", "9 h5 h2^2 - 45 h4 h3 h2 + 40 h3^3 = 0"),
                 _cite("normal form", "d3F/dwbar3 = 4 d dF/dwbar after the control change"),
                 _cite("sign", "chi = -9 d / p")]
    failed = [k for k, v in checks.items() if not v["pass"]]
    report = {"checks": checks, "failed": failed, "citations": cites}
    return report, EXIT_FAILED if failed else EXIT_OK


def cmd_fixtures(cfg: RunConfig, name: str | None) -> tuple[dict, int]:
    if name is None:
        return {"fixtures": list(fixtures.NAMES)}, EXIT_OK
    return fixtures.get(name), EXIT_OK


COMMANDS = {
    "classify-conic": cmd_classify_conic,
    "classify-affine": cmd_classify_affine,
    "ladder": cmd_ladder,
    "verify": cmd_verify,
}


# ---------------------------------------------------------------- output


def _clean(x):
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return _num(x)
    return str(x)


def render_json(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2)


def _text_lines(x, prefix=""):
    if isinstance(x, dict):
        for k in sorted(x):
            yield from _text_lines(x[k], f"{prefix}{k}.")
    elif isinstance(x, list) and any(isinstance(v, (dict, list)) for v in x):
        for i, v in enumerate(x):
            yield from _text_lines(v, f"{prefix}{i}.")
    else:
        yield f"{prefix[:-1]}: {x}"


def render_text(report: dict) -> str:
    return "\n".join(_text_lines(_clean(report)))


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="conic-kit", description="Classify conic submanifolds and "
                                 "quadratisable control systems; verify equivalence witnesses.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        src = sp.add_mutually_exclusive_group(required=True)
        src.add_argument("--input", metavar="PATH", help="JSON input document ('-' for stdin)")
        src.add_argument("--fixture", metavar="NAME", help="bundled input: " + ", ".join(fixtures.NAMES))
        sp.add_argument("--box", type=float, default=None, metavar="W", help="box half-width")
        sp.add_argument("--samples", type=int, default=256, metavar="N")
        sp.add_argument("--tol", type=float, default=1e-9, metavar="T")
        sp.add_argument("--seed", type=int, default=0, metavar="S")
        sp.add_argument("--format", choices=("text", "json"), default="text")
    fx = sub.add_parser("fixtures", help="list bundled fixtures or print one")
    fx.add_argument("name", nargs="?")
    fx.add_argument("--format", choices=("text", "json"), default="json")
    return ap


def _load(args) -> tuple[dict, str]:
    if args.fixture is not None:
        try:
            return fixtures.get(args.fixture), f"fixture:{args.fixture}"
        except KeyError as err:
            raise BadInput(str(err.args[0])) from None
    try:
        if args.input == "-":
            doc = json.load(sys.stdin)
        else:
            with open(args.input, encoding="utf-8") as fh:
                doc = json.load(fh)
    except OSError as err:
        raise BadInput(f"cannot read {args.input}: {err.strerror}") from None
    except json.JSONDecodeError as err:
        raise BadInput(f"invalid JSON: {err}") from None
    if not isinstance(doc, dict):
        raise BadInput("input must be a JSON object")
    return doc, args.input


def run(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    fmt = args.format
    try:
        if args.command == "fixtures":
            if args.name is not None and args.name not in fixtures.NAMES:
                raise BadInput(f"unknown fixture {args.name!r}")
            report, code = cmd_fixtures(None, args.name)
        else:
            doc, source = _load(args)
            cfg = RunConfig(args.command, doc, source, args.box, args.samples, args.tol, args.seed, fmt)
            report, code = COMMANDS[args.command](cfg)
            report = {"command": args.command, "source": source, "input": doc,
                      "settings": {"samples": cfg.samples, "tol": cfg.tolerance, "seed": cfg.seed,
                                   "box_halfwidth": cfg.box_halfwidth}, **report}
    except (BadInput, SyntaxError, ConicKitError) as err:
        if isinstance(err, EvalError):
            code = EXIT_FAILED
        elif isinstance(err, DegenerateFrame):
            code = EXIT_DEGENERATE
        else:
            code = EXIT_BAD_INPUT
        report = {"error": f"{type(err).__name__}: {err}"}
    report["exit_code"] = code
    out.write((render_json(report) if fmt == "json" else render_text(report)) + "\n")
    return code


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
