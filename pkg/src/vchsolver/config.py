"""INI-style run configuration.

Every key below has a default except the initial condition: exactly one of
``initial.expression`` and ``initial.snapshot`` must be given.  Unknown
sections or keys, duplicate keys, bad types and out-of-range values are
rejected with the offending key and line number.

==========  ====================  ===========================
section     key                   default
==========  ====================  ===========================
physics     kappa                 1.0
physics     alpha                 1.0
physics     potential             quartic  (quartic | zero)
physics     gamma                 1.0
physics     u_minus               -1.0
physics     u_plus                1.0
physics     mobility              cutoff  (cutoff | degenerate | constant)
physics     theta                 0.1
basis       n                     1
basis       n_modes               64
basis       padding               1.5
basis       dealias               true
time        dt                    0.001
time        t_end                 1.0
time        sample_every          10
solver      cg_tol                1e-12
solver      cg_maxiter            500
solver      picard_tol            1e-12
solver      picard_max            60
solver      max_halvings          20
initial     expression            (one of expression | snapshot)
initial     snapshot              path to a .vchf file, relative to the config
initial     seed                  0
sweep       theta_list            0.1, 0.05, 0.025, 0.0125
sweep       n_list                16, 32, 64
sweep       include_degenerate    true
sweep       eps_neg               0.001
output      dir                   out
==========  ====================  ===========================
"""
from __future__ import annotations

import configparser
import re
from dataclasses import dataclass
from pathlib import Path

from .expr import ExpressionError, parse
from .galerkin import PhysicsSpec, SolverConfig
from .experiments import SweepPlan
from .physics import MOBILITY_KINDS, MobilitySpec, QuarticWell, ZeroPotential
from .spectral import BasisSpec


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = ""
        if key is not None:
            where = f"[{key}]" if line is None else f"[{key}, line {line}]"
        super().__init__(f"{where} {message}".strip())
        self.key = key
        self.line = line


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.replace(",", " ").split())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in text.replace(",", " ").split())


def _choice(*options):
    def conv(text: str) -> str:
        value = text.strip()
        if value not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {value!r}")
        return value

    return conv


SCHEMA: dict[str, dict[str, tuple]] = {
    "physics": {
        "kappa": (float, "1.0"),
        "alpha": (float, "1.0"),
        "potential": (_choice("quartic", "zero"), "quartic"),
        "gamma": (float, "1.0"),
        "u_minus": (float, "-1.0"),
        "u_plus": (float, "1.0"),
        "mobility": (_choice(*MOBILITY_KINDS), "cutoff"),
        "theta": (float, "0.1"),
    },
    "basis": {
        "n": (int, "1"),
        "n_modes": (int, "64"),
        "padding": (float, "1.5"),
        "dealias": (_bool, "true"),
    },
    "time": {
        "dt": (float, "0.001"),
        "t_end": (float, "1.0"),
        "sample_every": (int, "10"),
    },
    "solver": {
        "cg_tol": (float, "1e-12"),
        "cg_maxiter": (int, "500"),
        "picard_tol": (float, "1e-12"),
        "picard_max": (int, "60"),
        "max_halvings": (int, "20"),
    },
    "initial": {
        "expression": (str, ""),
        "snapshot": (str, ""),
        "seed": (int, "0"),
    },
    "sweep": {
        "theta_list": (_floats, "0.1, 0.05, 0.025, 0.0125"),
        "n_list": (_ints, "16, 32, 64"),
        "include_degenerate": (_bool, "true"),
        "eps_neg": (float, "0.001"),
    },
    "output": {
        "dir": (str, "out"),
    },
}


@dataclass(frozen=True)
class RunConfig:
    solver: SolverConfig
    plan: SweepPlan
    expression: str
    seed: int
    sample_every: int
    output_dir: Path
    values: dict


_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:\s#;\[][^=:]*?)\s*[=:]")


def _line_numbers(text: str) -> dict[tuple[str, str], int]:
    lines: dict[tuple[str, str], int] = {}
    section = None
    for i, line in enumerate(text.splitlines(), start=1):
        if m := _SECTION_RE.match(line):
            section = m.group(1).strip()
            lines.setdefault((section, ""), i)
        elif section is not None and (m := _KEY_RE.match(line)):
            lines.setdefault((section, m.group(1).strip().lower()), i)
    return lines


def parse_text(text: str, overrides: dict[str, str] | None = None, base_dir: Path | None = None) -> RunConfig:
    parser = configparser.ConfigParser(strict=True, interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r}", key=f"{exc.section}.{exc.option}", line=exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section {exc.section!r}", key=exc.section, line=exc.lineno) from None
    except configparser.Error as exc:
        raise ConfigError(f"parse error: {exc}") from None
    where = _line_numbers(text)

    raw: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section {section!r}", key=section, line=where.get((section, "")))
        for key, value in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r}", key=f"{section}.{key}", line=where.get((section, key)))
            raw.setdefault(section, {})[key] = value
    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.partition(".")
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown override {dotted!r}", key=dotted)
        raw.setdefault(section, {})[key] = value

    values: dict[str, dict] = {}
    for section, keys in SCHEMA.items():
        values[section] = {}
        for key, (conv, default) in keys.items():
            text_value = raw.get(section, {}).get(key, default)
            line = where.get((section, key))
            try:
                values[section][key] = conv(text_value)
            except ValueError as exc:
                raise ConfigError(f"bad value {text_value!r}: {exc}", key=f"{section}.{key}", line=line) from None

    return _build(values, where, base_dir or Path.cwd())


def _build(v: dict, where: dict, base_dir: Path) -> RunConfig:
    def fail(section, key, message):
        raise ConfigError(message, key=f"{section}.{key}", line=where.get((section, key)))

    ph, ba, ti, so, ini, sw = (v[s] for s in ("physics", "basis", "time", "solver", "initial", "sweep"))
    for key in ("kappa", "gamma"):
        if not ph[key] > 0:
            fail("physics", key, f"must be positive, got {ph[key]}")
    if not ph["alpha"] >= 0:
        fail("physics", "alpha", f"must be non-negative, got {ph['alpha']}")
    if not ph["u_minus"] < ph["u_plus"]:
        fail("physics", "u_plus", "need u_minus < u_plus")
    if ph["mobility"] != "degenerate" and not 0.0 < ph["theta"] < 1.0:
        fail("physics", "theta", f"cutoff level must satisfy 0<theta<1, got {ph['theta']}")
    bad = [t for t in sw["theta_list"] if not 0.0 < t < 1.0]
    if bad:
        fail("sweep", "theta_list", f"every cutoff level must satisfy 0<theta<1, got {bad}")
    if not sw["theta_list"]:
        fail("sweep", "theta_list", "must not be empty")
    if any(b >= a for a, b in zip(sw["theta_list"], sw["theta_list"][1:])):
        fail("sweep", "theta_list", "must be strictly decreasing")
    if any(b < a for a, b in zip(sw["n_list"], sw["n_list"][1:])):
        fail("sweep", "n_list", "must be increasing")
    for key in ("dt", "t_end"):
        if not ti[key] > 0:
            fail("time", key, f"must be positive, got {ti[key]}")
    if ti["sample_every"] < 1:
        fail("time", "sample_every", "must be >= 1")
    for key in ("cg_tol", "picard_tol"):
        if not so[key] > 0:
            fail("solver", key, "must be positive")
    expr, snap = ini["expression"].strip(), ini["snapshot"].strip()
    if bool(expr) == bool(snap):
        raise ConfigError(
            "exactly one of initial.expression and initial.snapshot is required", key="initial.expression"
        )
    if expr:
        try:
            parse(expr)
        except ExpressionError as exc:
            fail("initial", "expression", str(exc))
        u0 = expr
    else:
        u0 = Path(snap) if Path(snap).is_absolute() else base_dir / snap
        if not u0.is_file():
            fail("initial", "snapshot", f"cannot read snapshot {u0}")

    try:
        if ba["dealias"]:
            if ba["padding"] < 1.5:
                fail("basis", "padding", "dealiasing needs padding >= 1.5")
            basis = BasisSpec.create(ba["n"], ba["n_modes"], ba["padding"])
        else:
            basis = BasisSpec(ba["n"], ba["n_modes"], ba["n_modes"])
        for N in sw["n_list"]:
            BasisSpec(ba["n"], N, N)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), key="basis") from None

    potential = ZeroPotential() if ph["potential"] == "zero" else QuarticWell(ph["gamma"], ph["u_minus"], ph["u_plus"])
    theta = None if ph["mobility"] == "degenerate" else ph["theta"]
    solver = SolverConfig(
        kappa=ph["kappa"],
        alpha=ph["alpha"],
        physics=PhysicsSpec(potential, MobilitySpec(ph["mobility"], theta)),
        basis=basis,
        dt=ti["dt"],
        t_end=ti["t_end"],
        cg_tol=so["cg_tol"],
        cg_maxiter=so["cg_maxiter"],
        picard_tol=so["picard_tol"],
        picard_max=so["picard_max"],
        max_halvings=so["max_halvings"],
        dealias=ba["dealias"],
    )
    try:
        solver.n_steps
    except ValueError as exc:
        fail("time", "t_end", str(exc))
    plan = SweepPlan(
        base=solver,
        u0=u0,
        theta_list=sw["theta_list"],
        n_list=sw["n_list"],
        sample_every=ti["sample_every"],
        include_degenerate=sw["include_degenerate"],
        eps_neg=sw["eps_neg"],
        seed=ini["seed"],
    )
    out = Path(v["output"]["dir"])
    return RunConfig(
        solver=solver,
        plan=plan,
        expression=expr,
        seed=ini["seed"],
        sample_every=ti["sample_every"],
        output_dir=out if out.is_absolute() else base_dir / out,
        values=v,
    )


def parse_config(path, overrides: dict[str, str] | None = None) -> RunConfig:
    """Read, validate and build a :class:`RunConfig`; relative output paths resolve against the file's directory."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from None
    return parse_text(text, overrides, base_dir=path.parent)
