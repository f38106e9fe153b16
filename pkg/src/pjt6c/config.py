"""Sectioned ``key = value`` run configuration.

::

    # comment
    [params]
    preset = cc2_singlet
    hbar_omega_meV = 180.3
    [solve]
    sweep = [36, 40]

Values are numbers, ``true``/``false``, bare or double-quoted strings and
inline lists ``[a, b, c]``.  Every key is checked against :data:`SCHEMA`
while parsing, so a bad value is reported with its line number.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Callable

__all__ = ["ConfigError", "RunConfig", "SCHEMA", "parse_config", "serialize", "load_preset", "PRESETS"]

PRESETS = ("cc2_singlet", "cc2_triplet", "tddft_singlet", "tddft_triplet")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line, self.column = line, column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


@dataclass(frozen=True)
class Key:
    kind: str  # float | int | str | bool | floats | ints
    check: Callable[[Any], bool] | None = None
    rule: str = ""
    choices: tuple[str, ...] = ()


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _unit(v):
    return 0 <= v <= 1


F = Key("float")
POS = Key("float", _pos, "> 0")
NONNEG = Key("float", _nonneg, ">= 0")
STR = Key("str")

_POTENTIALS = {
    "mu_C_eV": F, "mu_B_eV": F, "mu_N_eV": F, "e_vbm_eV": F, "e_pristine_eV": F,
    "gap_eV": POS, "condition": STR,
}

SCHEMA: dict[str, dict[str, Key]] = {
    "params": {
        "preset": Key("str", choices=PRESETS),
        "spin": Key("str", choices=("singlet", "triplet")),
        "lambda_meV": F,
        "delta_meV": F,
        "f_o_meV": F,
        "f_u_meV": F,
        "e_jt1_meV": NONNEG,
        "e_jt2_meV": NONNEG,
        "hbar_omega_meV": POS,
        "provenance": STR,
    },
    "solve": {
        "n_max": Key("int", _nonneg, ">= 0"),
        "k": Key("int", _pos, ">= 1"),
        "sweep": Key("ints", _nonneg, ">= 0"),
        "degeneracy_tol_meV": POS,
        "method": Key("str", choices=("auto", "sparse", "dense")),
    },
    "apes": {"x_min": F, "x_max": F, "n_points": Key("int", lambda v: v >= 2, ">= 2"), "y": F},
    "fit": {
        "samples_file": STR,
        "fit_electronic": Key("bool"),
        "max_iter": Key("int", _pos, ">= 1"),
    },
    "spectrum": {
        "zpl_eV": POS,
        "hbar_omega_meV": Key("floats", _pos, "> 0"),
        "S": Key("floats", _nonneg, ">= 0"),
        "modes_file": STR,
        "broadening_meV": NONNEG,
        "step_meV": POS,
        "alignment_shift_eV": F,
    },
    "isotope": {
        "scale": Key("floats", _pos, "> 0"),
        "S_13C": Key("floats", _nonneg, ">= 0"),
        "S_13C_total": NONNEG,
        "replicas": Key("int", _pos, ">= 1"),
    },
    "rates": {
        "e_zpl_eV": POS,
        "refractive_index": Key("float", lambda v: v >= 1, ">= 1"),
        "oscillator_strength": NONNEG,
        "dipole_sq_au": NONNEG,
        "gamma_nr_MHz": NONNEG,
        "temperatures_K": Key("floats", _nonneg, ">= 0"),
        "level_energies_meV": Key("floats", _nonneg, ">= 0"),
        "level_degeneracies": Key("ints", _pos, ">= 1"),
        "level_brightness": Key("floats", _unit, "in [0, 1]"),
        "from_polaron": Key("bool"),
        "n_max": Key("int", _nonneg, ">= 0"),
        "lambda_z_GHz": NONNEG,
        "isc_gap_meV": Key("floats", _nonneg, ">= 0"),
        "isc_S": NONNEG,
        "isc_hbar_omega_meV": POS,
        "isc_broadening_meV": POS,
    },
    "zpl": {
        "e_excited_eV": F,
        "e_ground_eV": F,
        "polaron_ground_meV": F,
        "n_max": Key("int", _nonneg, ">= 0"),
    },
    "thermo": {
        "defects_file": STR,
        "fermi_step_eV": POS,
        "n_points": Key("int", lambda v: v >= 2, ">= 2"),
        "stable_window_eV": Key("floats"),
    },
}


def _schema_for(section: str) -> dict[str, Key] | None:
    if section in SCHEMA:
        return SCHEMA[section]
    if section.startswith("potentials.") and len(section) > len("potentials."):
        return _POTENTIALS
    return None


@dataclass
class RunConfig:
    sections: dict[str, dict[str, Any]] = field(default_factory=dict)
    overrides: list[str] = field(default_factory=list, compare=False)

    def section(self, name: str) -> dict[str, Any]:
        return self.sections.get(name, {})

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def potential_sections(self) -> list[str]:
        return sorted(s for s in self.sections if s.startswith("potentials."))


_SECTION = re.compile(r"^\[\s*([A-Za-z_][\w.\-]*)\s*\]$")
_KEY = re.compile(r"^([A-Za-z_]\w*)\s*=\s*(.*)$")
_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")
_INT = re.compile(r"^[+-]?\d+$")


def _strip_comment(line: str) -> str:
    in_str = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_str = not in_str
        elif ch == "#" and not in_str:
            return line[:i]
    return line


def _scalar(token: str, lineno: int, col: int):
    token = token.strip()
    if not token:
        raise ConfigError("empty value", lineno, col)
    if token.startswith('"'):
        if len(token) < 2 or not token.endswith('"') or '"' in token[1:-1]:
            raise ConfigError(f"unterminated or malformed string {token}", lineno, col)
        return token[1:-1]
    if token in ("true", "false"):
        return token == "true"
    if _INT.match(token):
        return int(token)
    if _NUMBER.match(token):
        return float(token)
    if re.search(r"[\[\],=]", token):
        raise ConfigError(f"unexpected character in value {token!r}", lineno, col)
    return token


def _value(raw: str, lineno: int, col: int):
    raw = raw.strip()
    if raw.startswith("["):
        if not raw.endswith("]"):
            raise ConfigError("unterminated list", lineno, col)
        body = raw[1:-1].strip()
        if not body:
            return []
        return [_scalar(t, lineno, col) for t in body.split(",")]
    return _scalar(raw, lineno, col)


def _coerce(section: str, key: str, spec: Key, value, lineno: int | None):
    where = f"[{section}] {key}"

    def one(v, kind):
        if kind == "float":
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{where}: expected a number, got {v!r}", lineno)
            v = float(v)
            if not math.isfinite(v):
                raise ConfigError(f"{where}: value must be finite", lineno)
            return v
        if kind == "int":
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigError(f"{where}: expected an integer, got {v!r}", lineno)
            return v
        if kind == "str":
            if not isinstance(v, str):
                v = str(v).lower() if isinstance(v, bool) else repr(v)
            return v
        if kind == "bool":
            if not isinstance(v, bool):
                raise ConfigError(f"{where}: expected true/false, got {v!r}", lineno)
            return v
        raise AssertionError(kind)

    if spec.kind in ("floats", "ints"):
        items = value if isinstance(value, list) else [value]
        out = [one(v, spec.kind[:-1]) for v in items]
        values = out
    else:
        if isinstance(value, list):
            raise ConfigError(f"{where}: expected a single value, got a list", lineno)
        out = one(value, spec.kind)
        values = [out]
    if spec.check is not None:
        for v in values:
            if not spec.check(v):
                raise ConfigError(f"{where} = {v!r} violates {key} {spec.rule}", lineno)
    if spec.choices and out not in spec.choices:
        raise ConfigError(f"{where}: {out!r} not one of {', '.join(spec.choices)}", lineno)
    return out


def parse_config(text: str) -> RunConfig:
    """Parse and validate a configuration text (deterministic, no I/O)."""
    sections: dict[str, dict[str, Any]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("["):
            m = _SECTION.match(line)
            if not m:
                raise ConfigError(f"malformed section header {line!r}", lineno, 1)
            current = m.group(1)
            if _schema_for(current) is None:
                raise ConfigError(f"unknown section [{current}]", lineno, 1)
            if current in sections:
                raise ConfigError(f"duplicate section [{current}]", lineno, 1)
            sections[current] = {}
            continue
        m = _KEY.match(line)
        if not m:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno, 1)
        if current is None:
            raise ConfigError("key outside of any [section]", lineno, 1)
        key, raw_value = m.group(1), m.group(2)
        schema = _schema_for(current)
        if key not in schema:
            raise ConfigError(f"unknown key {key!r} in [{current}]", lineno, 1)
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r} in [{current}]", lineno, 1)
        col = raw.find("=") + 2
        sections[current][key] = _coerce(current, key, schema[key], _value(raw_value, lineno, col), lineno)
    return RunConfig(sections)


def _render(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, int):
        return str(v)
    if isinstance(v, list):
        return "[" + ", ".join(_render(x) for x in v) + "]"
    s = str(v)
    return s if re.fullmatch(r"[A-Za-z_][\w.\-/]*", s) and s not in ("true", "false") else f'"{s}"'


def serialize(config: RunConfig) -> str:
    out = []
    for name in sorted(config.sections):
        out.append(f"[{name}]")
        for key in sorted(config.sections[name]):
            out.append(f"{key} = {_render(config.sections[name][key])}")
        out.append("")
    return "\n".join(out)


def apply_override(config: RunConfig, assignment: str) -> RunConfig:
    """Apply ``section.key=value`` (last one wins); returns a new config."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} must look like section.key=value")
    lhs, rhs = assignment.split("=", 1)
    if "." not in lhs:
        raise ConfigError(f"override {assignment!r} must look like section.key=value")
    section, key = lhs.strip().rsplit(".", 1)
    schema = _schema_for(section)
    if schema is None:
        raise ConfigError(f"unknown section [{section}] in override")
    if key not in schema:
        raise ConfigError(f"unknown key {key!r} in [{section}] (override)")
    value = _coerce(section, key, schema[key], _value(rhs, 0, 1), None)
    sections = {s: dict(v) for s, v in config.sections.items()}
    sections.setdefault(section, {})[key] = value
    return RunConfig(sections, config.overrides + [f"{section}.{key}={rhs.strip()}"])


def load_preset(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = resources.files("pjt6c").joinpath("presets", f"{name}.cfg").read_text(encoding="utf-8")
    return parse_config(text)
