"""INI problem files.

    [problem]
    builtin = exampleE              # optional base problem; other keys override it
    dimension = 2
    horizon = 1.0
    hyperplanes = 0:0.0, 1:0.5      # axis:offset, axis counted from 0
    controls = ball(1.0, 32)
    c_f = 2
    terminal = linear-x1
    terminal_mode = lipschitz

    [stratum +]                     # signature over the hyperplanes, "*" for the default
    velocity = scaled-ball
    scale = 2
    cost = polynomial
    cost_coeffs = 0, 1

    [solver]
    box = -2, 2
    grid = 161
    timesteps = 200
"""

from __future__ import annotations

import configparser
import io
from pathlib import Path

import numpy as np

from .control import (
    AffineVelocity,
    ControlProblem,
    ControlSet,
    Piece,
    PolynomialCost,
    affine_velocity,
    constant_velocity,
    scaled_ball_velocity,
    terminal_from_name,
)
from .errors import ConfigParse, DuplicateHyperplane, NonPositiveDimension
from .problems import BUILTINS, builtin
from .stratification import Hyperplane, Stratification, build_stratification

_SIGN = {"+": 1, "-": -1, "0": 0}
_SIGN_TXT = {1: "+", -1: "-", 0: "0"}
SOLVER_KEYS = ("box", "grid", "timesteps", "mode", "save_every", "seed")


def signature_text(sig) -> str:
    return ",".join(_SIGN_TXT[s] for s in sig)


def _vec(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.replace(";", ",").split(",") if v.strip()])


def _mat(text: str) -> np.ndarray:
    return np.array([[float(v) for v in row.split(",")] for row in text.split(";") if row.strip()])


def _parse_signature(text: str, n_planes: int) -> tuple | None:
    text = text.strip()
    if text == "*":
        return None
    parts = [p.strip() for p in text.split(",")] if "," in text else list(text)
    try:
        sig = tuple(_SIGN[p] for p in parts if p)
    except KeyError as exc:
        raise ConfigParse(f"bad stratum signature {text!r}") from exc
    if len(sig) != n_planes:
        raise ConfigParse(f"signature {text!r} has {len(sig)} entries, expected {n_planes}")
    return sig


def _piece(section, d: int, n_controls: int) -> Piece:
    kind = section.get("velocity", "constant").strip()
    if kind == "constant":
        vel = constant_velocity(_vec(section.get("value", ",".join(["0"] * d))), n_controls)
    elif kind == "scaled-ball":
        vel = scaled_ball_velocity(float(section.get("scale", "1")), d)
    elif kind == "affine":
        vel = affine_velocity(
            _mat(section.get("state_matrix", ";".join([",".join(["0"] * d)] * d))),
            _mat(section["control_matrix"]),
            _vec(section.get("offset", ",".join(["0"] * d))),
        )
    else:
        raise ConfigParse(f"unknown velocity family {kind!r}")
    if isinstance(vel, AffineVelocity) and vel.offset.size != d:
        raise ConfigParse("velocity dimension does not match the problem dimension")
    ckind = section.get("cost", "constant").strip()
    if ckind == "constant":
        cost = PolynomialCost((float(section.get("cost_value", "0")),))
    elif ckind == "polynomial":
        cost = PolynomialCost(tuple(_vec(section["cost_coeffs"]).tolist()))
    else:
        raise ConfigParse(f"unknown cost family {ckind!r}")
    return Piece(vel, cost)


def _terminal(text: str, table: str | None, mode: str | None):
    name, _, arg = text.partition(":")
    name = name.strip()
    if name == "table":
        if not table:
            raise ConfigParse("terminal = table needs terminal_table = x:v, x:v, ...")
        params = tuple(tuple(float(u) for u in item.split(":")) for item in table.split(",") if item.strip())
        return terminal_from_name("table", params, mode)
    params = (float(arg),) if arg.strip() else ()
    return terminal_from_name(name, params, mode)


def parse_config(text: str, source: str = "<config>") -> tuple[ControlProblem, dict]:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigParse(str(exc)) from exc
    if not cp.has_section("problem"):
        raise ConfigParse(f"{source}: missing [problem] section")
    sec = cp["problem"]
    try:
        return _build(cp, sec, source)
    except (KeyError, ValueError, DuplicateHyperplane, NonPositiveDimension) as exc:
        raise ConfigParse(f"{source}: {exc}") from exc


def _build(cp, sec, source):
    base = None
    if "builtin" in sec:
        name = sec["builtin"].strip()
        if name not in BUILTINS:
            raise ConfigParse(f"{source}: unknown builtin {name!r}")
        base = builtin(name, horizon=float(sec.get("horizon", "1")))
    if "hyperplanes" in sec or base is None:
        planes = []
        for item in sec.get("hyperplanes", "").split(","):
            if item.strip():
                ax, off = item.split(":")
                planes.append(Hyperplane(int(ax), float(off)))
        d = int(sec.get("dimension", str(base.d if base else 0)))
        strat = build_stratification(planes, d=d, snap_tolerance=float(sec.get("snap_tolerance", "1e-9")))
        pieces = {}
        fresh = True
    else:
        strat = base.strat
        pieces = dict(base.pieces)
        fresh = False
    d = strat.d
    changed = fresh

    if "controls" in sec:
        controls = ControlSet.parse(sec["controls"], dim=d)
        changed = True
    elif base is not None:
        controls = base.controls
    else:
        raise ConfigParse(f"{source}: [problem] needs controls")

    default = None
    for name in cp.sections():
        if not name.startswith("stratum"):
            continue
        sig = _parse_signature(name[len("stratum"):], len(strat.hyperplanes))
        piece = _piece(cp[name], d, controls.dim)
        changed = True
        if sig is None:
            default = piece
        else:
            try:
                pieces[strat.id_of(sig)] = piece
            except KeyError:
                raise ConfigParse(f"{source}: no stratum with signature {name!r}") from None
    for st in strat.strata:
        if st.id not in pieces:
            if default is None:
                raise ConfigParse(f"{source}: no piece for stratum {signature_text(st.signature)!r}")
            pieces[st.id] = default

    mode = sec.get("terminal_mode")
    if "terminal" in sec:
        terminal = _terminal(sec["terminal"], sec.get("terminal_table"), mode)
        changed = True
    elif base is not None:
        terminal = base.terminal
        if mode and mode != terminal.mode:
            terminal = terminal_from_name(terminal.name, terminal.params, mode)
            changed = True
    else:
        raise ConfigParse(f"{source}: [problem] needs terminal")

    consts = {}
    for key in ("c_f", "c_l", "lambda_l", "lambda_phi", "horizon"):
        if key in sec:
            consts[key] = float(sec[key])
            changed = changed or key != "horizon"
    kw = dict(
        strat=strat, controls=controls, pieces=pieces, terminal=terminal,
        c_f=consts.get("c_f", base.c_f if base else 1.0),
        c_l=consts.get("c_l", base.c_l if base else 1.0),
        lambda_l=consts.get("lambda_l", base.lambda_l if base else 1.0),
        lambda_phi=consts.get("lambda_phi", base.lambda_phi if base else 1.0),
        horizon=consts.get("horizon", base.horizon if base else 1.0),
        name=sec.get("name", base.name if base else Path(source).stem),
        meta={} if (changed or base is None) else dict(base.meta),
    )
    P = ControlProblem(**kw)
    solver = {}
    if cp.has_section("solver"):
        for key in SOLVER_KEYS:
            if key in cp["solver"]:
                solver[key] = cp["solver"][key]
    return P, solver


def load_config(ref: str) -> tuple[ControlProblem, dict]:
    """Load a config file, or a builtin problem by name."""
    path = Path(ref)
    if path.is_file():
        return parse_config(path.read_text(), str(path))
    stem = path.name.removesuffix(".cfg")
    if not path.suffix and ref in BUILTINS:
        return builtin(ref), {}
    if not path.exists() and stem in BUILTINS and path.parent == Path("."):
        return builtin(stem), {}
    raise ConfigParse(f"config {ref!r} not found")


def dump_config(P: ControlProblem, solver: dict | None = None) -> str:
    """Serialize a problem with affine velocities and polynomial costs."""
    cp = configparser.ConfigParser()
    S: Stratification = P.strat
    t = P.terminal
    prob = {
        "name": P.name,
        "dimension": str(S.d),
        "horizon": f"{P.horizon:.17g}",
        "hyperplanes": ", ".join(f"{h.axis}:{h.offset:.17g}" for h in S.hyperplanes),
        "controls": P.controls.descriptor,
        "c_f": f"{P.c_f:.17g}",
        "c_l": f"{P.c_l:.17g}",
        "lambda_l": f"{P.lambda_l:.17g}",
        "lambda_phi": f"{P.lambda_phi:.17g}",
        "terminal": t.name if not t.params or t.name == "table" else f"{t.name}:{t.params[0]:.17g}",
        "terminal_mode": t.mode,
    }
    if t.name == "table":
        prob["terminal_table"] = ", ".join(f"{x:.17g}:{v:.17g}" for x, v in t.params)
    cp["problem"] = prob
    for st in S.strata:
        piece = P.pieces[st.id]
        if not hasattr(piece.velocity, "describe") or not hasattr(piece.cost, "describe"):
            raise ConfigParse(f"stratum {st.id} piece cannot be serialized")
        cp[f"stratum {signature_text(st.signature)}"] = {**piece.velocity.describe(), **piece.cost.describe()}
    if solver:
        cp["solver"] = {k: str(v) for k, v in solver.items()}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
