"""Command-line interface.

Subcommands: spectrum, ipr, winding, phase-diagram, mobility-edge,
floquet-check.  Every option may also come from a JSON file given with
``--config``; options on the command line win over the file.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from fractions import Fraction
from pathlib import Path

from . import __version__
from .floquet import floquet_report
from .localization import EXTENDED, classify_states, ipr_summary
from .model import IncommensurateWarning, ModelParams, ParameterError, build_hamiltonian, fibonacci_alpha
from .scan import QUANTITIES, GridSpec, phase_scan
from .serialize import FORMATS, emit
from .spectral import DEFAULT_IM_THRESHOLD, eigendecompose
from .topology import CommensurateWindingWarning, winding_number

PROG = "marylandlab"
COMMANDS = ("spectrum", "ipr", "winding", "phase-diagram", "mobility-edge", "floquet-check")

DEFAULTS = {
    "J": 1.0,
    "V": 1.0,
    "gamma": 0.0,
    "alpha_level": None,
    "alpha": None,
    "L": None,
    "theta": 0.0,
    "im_threshold": DEFAULT_IM_THRESHOLD,
    "E0": 0j,
    "n_theta": 256,
    "grid": None,
    "quantities": ["max_im", "rho"],
    "workers": None,
    "format": "csv",
    "out": None,
    "margin": 0.05,
    "vectors": True,
    "kick_samples": 10_000,
    "seed": 0,
    "ring": None,
}


class UsageError(Exception):
    pass


def _complex(text) -> complex:
    try:
        return complex(str(text).replace(" ", ""))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}") from None


def _fraction(text) -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational p/q: {text!r}") from None


def _quantities(text) -> list[str]:
    items = [s.strip() for s in str(text).split(",") if s.strip()]
    bad = [s for s in items if s not in QUANTITIES]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"quantities must be a subset of {','.join(QUANTITIES)}")
    return items


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    g = common.add_argument_group("model")
    g.add_argument("--J", type=float, help="hopping amplitude (default 1)")
    g.add_argument("--V", type=float, help="potential amplitude (default 1)")
    g.add_argument("--gamma", type=float, help="hopping asymmetry (default 0)")
    g.add_argument("--alpha-level", dest="alpha_level", type=int,
                   help="Fibonacci level l, alpha = F_l/F_{l+1} (default 13 -> 233/377; "
                        "15 with L=377 for windings)")
    g.add_argument("--alpha", type=_fraction, help="explicit rational alpha p/q (overrides --alpha-level)")
    g.add_argument("--L", type=int, help="number of sites (default q)")
    g.add_argument("--theta", type=float, help="boundary twist in radians (default 0)")
    g.add_argument("--im-threshold", dest="im_threshold", type=float,
                   help="|Im E| above which an energy counts as complex (default 1e-5)")
    o = common.add_argument_group("output")
    o.add_argument("--format", choices=FORMATS, help="output format (default csv)")
    o.add_argument("--out", help="output file (default stdout)")
    o.add_argument("--config", help="JSON file with option values")

    parser = argparse.ArgumentParser(prog=PROG, description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("spectrum", parents=[common], argument_default=S, help="eigenvalues and per-state table")
    p.add_argument("--no-vectors", dest="vectors", action="store_false", default=S,
                   help="skip eigenvectors (no residual / IPR columns)")

    sub.add_parser("ipr", parents=[common], argument_default=S, help="min / max / mean IPR")

    p = sub.add_parser("winding", parents=[common], argument_default=S, help="spectral winding number")
    p.add_argument("--E0", type=_complex, help="base energy (default 0)")
    p.add_argument("--n-theta", dest="n_theta", type=int, help="twist grid size (default 256)")

    p = sub.add_parser("phase-diagram", parents=[common], argument_default=S, help="(V, gamma) sweep")
    p.add_argument("--grid", nargs=6, type=float, metavar=("VMIN", "VMAX", "NV", "GMIN", "GMAX", "NG"),
                   help="V and gamma axes")
    p.add_argument("--quantities", type=_quantities,
                   help=f"comma-separated subset of {','.join(QUANTITIES)} (default max_im,rho)")
    p.add_argument("--E0", type=_complex, help="base energy for w (default 0)")
    p.add_argument("--n-theta", dest="n_theta", type=int, help="twist grid size for w (default 256)")
    p.add_argument("--workers", type=int, help="worker processes (default $MARYLANDLAB_WORKERS or 1)")

    p = sub.add_parser("mobility-edge", parents=[common], argument_default=S, help="states vs. the mobility-edge ellipse")
    p.add_argument("--margin", type=float, help="ellipse band excluded from the agreement count (default 0.05)")

    p = sub.add_parser("floquet-check", parents=[common], argument_default=S, help="kicked-particle mapping checks")
    p.add_argument("--kick-samples", dest="kick_samples", type=int, help="random kick-identity samples")
    p.add_argument("--seed", type=int, help="RNG seed for the kick samples (default 0)")
    p.add_argument("--ring", dest="ring", action="store_true", default=S, help="force the ring-propagator check")
    p.add_argument("--no-ring", dest="ring", action="store_false", default=S, help="skip the ring-propagator check")
    return parser


def load_config(path) -> dict:
    """Read option values from a JSON object; keys use underscores."""
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    raw = {k.replace("-", "_"): v for k, v in raw.items() if not k.startswith("_")}
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    cfg = dict(raw)
    try:
        if "E0" in cfg:
            e = cfg["E0"]
            cfg["E0"] = complex(*e) if isinstance(e, list) else _complex(e)
        if cfg.get("alpha") is not None:
            cfg["alpha"] = _fraction(cfg["alpha"])
        if isinstance(cfg.get("quantities"), str):
            cfg["quantities"] = _quantities(cfg["quantities"])
        if isinstance(cfg.get("grid"), dict):
            gd = cfg["grid"]
            cfg["grid"] = [*gd["v_range"], *gd["gamma_range"]]
    except (argparse.ArgumentTypeError, KeyError, TypeError) as exc:
        raise UsageError(f"bad config value: {exc}") from None
    if cfg.get("quantities") is not None:
        bad = [q for q in cfg["quantities"] if q not in QUANTITIES]
        if bad:
            raise UsageError(f"unknown quantities in config: {bad}")
    return cfg


def resolve_options(ns: argparse.Namespace) -> dict:
    """Defaults < config file < command line."""
    opts = dict(DEFAULTS)
    flags = vars(ns).copy()
    config = flags.pop("config", None)
    if config:
        opts.update(load_config(config))
    opts.update(flags)
    return opts


DEFAULT_LEVEL = 13
# winding about E0 = 0 needs L incommensurate with q; see CommensurateWindingWarning
WINDING_DEFAULT_LEVEL, WINDING_DEFAULT_L = 15, 377


def _apply_geometry_defaults(opts: dict) -> None:
    if opts["alpha_level"] is not None or opts["alpha"] is not None:
        if opts["alpha_level"] is None:
            opts["alpha_level"] = DEFAULT_LEVEL
        return
    wants_w = opts["command"] == "winding" or (
        opts["command"] == "phase-diagram" and "w" in opts["quantities"]
    )
    if wants_w and opts["L"] is None:
        opts["alpha_level"], opts["L"] = WINDING_DEFAULT_LEVEL, WINDING_DEFAULT_L
    else:
        opts["alpha_level"] = DEFAULT_LEVEL


def model_params(opts: dict) -> ModelParams:
    alpha = opts["alpha"] if opts["alpha"] is not None else fibonacci_alpha(opts["alpha_level"])
    L = opts["L"] if opts["L"] is not None else alpha.denominator
    return ModelParams(J=opts["J"], V=opts["V"], gamma=opts["gamma"], alpha=alpha, L=L,
                       theta=opts["theta"])


def _meta(opts, command):
    keep = ("J", "V", "gamma", "alpha_level", "alpha", "L", "theta", "im_threshold")
    meta = {"command": command}
    for k in keep:
        v = opts.get(k)
        meta[k] = str(v) if isinstance(v, Fraction) else v
    return meta


def run(opts: dict) -> int:
    cmd = opts["command"]
    _apply_geometry_defaults(opts)
    fmt, out = opts["format"], opts["out"]
    meta = _meta(opts, cmd)

    if cmd == "phase-diagram":
        if opts["grid"] is None:
            raise UsageError("phase-diagram needs --grid or a config 'grid'")
        vmin, vmax, nv, gmin, gmax, ng = opts["grid"]
        if nv != int(nv) or ng != int(ng):
            raise UsageError("grid counts must be integers")
        if opts["alpha"] is not None:
            raise UsageError("phase-diagram takes --alpha-level, not --alpha")
        spec = GridSpec((vmin, vmax, int(nv)), (gmin, gmax, int(ng)), J=opts["J"],
                        alpha_level=opts["alpha_level"], L=opts["L"], n_theta=opts["n_theta"],
                        im_threshold=opts["im_threshold"], E0=opts["E0"])
        diagram = phase_scan(spec, opts["quantities"], workers=opts["workers"])
        emit(diagram, fmt, out)
        if diagram.metadata["failed_cells"]:
            print(f"{PROG}: warning: {diagram.metadata['failed_cells']} cells failed (see JSON errors)",
                  file=sys.stderr)
        return 0

    params = model_params(opts)
    if cmd == "winding":
        result = winding_number(params, E0=opts["E0"], n_theta=opts["n_theta"])
        print(result.w)
        if out is not None:
            emit(result, fmt, out, meta)
        return 0

    H = build_hamiltonian(params)
    if cmd == "spectrum":
        spec = eigendecompose(H, want_vectors=opts["vectors"])
        emit(classify_states(spec, params, opts["im_threshold"]) if spec.has_vectors else spec,
             fmt, out, meta)
    elif cmd == "ipr":
        emit(ipr_summary(eigendecompose(H, want_vectors=True)), fmt, out, meta)
    elif cmd == "mobility-edge":
        states = classify_states(eigendecompose(H, want_vectors=True), params, opts["im_threshold"])
        emit(states, fmt, out, meta)
        if params.gamma != 0:
            m = opts["margin"]
            outside = [s for s in states if abs(s.ellipse_value - 1) > m]
            agree = sum((s.ellipse_value < 1) == (s.label == EXTENDED) for s in outside)
            n_ext = sum(s.label == EXTENDED for s in states)
            print(f"{PROG}: {n_ext}/{len(states)} extended; classifier agreement "
                  f"{agree}/{len(outside)} outside |ellipse-1|<={m}", file=sys.stderr)
    elif cmd == "floquet-check":
        spec = eigendecompose(H, want_vectors=True)
        report = floquet_report(spec, params, opts["kick_samples"], opts["seed"], opts["ring"])
        emit(report, fmt, out, meta)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)  # exits with 2 on usage errors
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IncommensurateWarning)
        warnings.simplefilter("always", CommensurateWindingWarning)
        try:
            opts = resolve_options(ns)
            code = run(opts)
        except (UsageError, ParameterError, OverflowError) as exc:
            print(f"{PROG}: error: {exc}", file=sys.stderr)
            code = 2
        except (ArithmeticError, ValueError, OSError, MemoryError) as exc:
            print(f"{PROG}: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
            code = 1
    shown = set()
    for w in caught:
        if not issubclass(w.category, (IncommensurateWarning, CommensurateWindingWarning)):
            continue
        if w.category is IncommensurateWarning and cmd_wants_silence(ns):
            continue
        msg = str(w.message)
        if msg not in shown:
            shown.add(msg)
            print(f"{PROG}: warning: {msg}", file=sys.stderr)
    return code


def cmd_wants_silence(ns) -> bool:
    # the incommensurate geometry is the intended default for windings
    return ns.command == "winding" and getattr(ns, "L", None) is None


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
