"""Run configuration: a dataclass, an INI reader and the parsers shared with the command line flags.

A config file uses flat ``key = value`` entries in the sections ``[run]``, ``[material]``,
``[element]`` and ``[output]``::

    [run]
    problem = plate
    formulation = iga, hybrid
    degree = 2, 3
    refine = 0..4

    [material]
    nu = 0.4999

    [output]
    directory = results
    formats = csv, vtk
"""
import configparser
import re
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple, Union

from hyiga.benchmarks import CASE_NAMES
from hyiga.element import Formulation, SUPPORTED_DEGREES, T_EVAL_MODES
from hyiga.errors import ConfigurationError
from hyiga.material import Regime

__all__ = ["RunConfig", "OUTPUT_FORMATS", "read_config_file", "parse_value", "parse_levels", "CONFIG_KEYS"]

OUTPUT_FORMATS = ("csv", "vtk", "mm")


def _split(text: str) -> Tuple[str, ...]:
    items = tuple(item.strip() for item in str(text).split(",") if item.strip())
    if not items:
        raise ConfigurationError("expected a comma separated list, got {!r}".format(text))
    return items


def _parse_int(text: str) -> int:
    try:
        return int(str(text).strip())
    except ValueError:
        raise ConfigurationError("expected an integer, got {!r}".format(text))


def _parse_float(text: str) -> float:
    try:
        return float(str(text).strip())
    except ValueError:
        raise ConfigurationError("expected a number, got {!r}".format(text))


def parse_levels(text: str) -> Tuple[int, ...]:
    """Refinement ladder from ``"0..5"`` (inclusive range), ``"3"`` or ``"0,2,4"``."""
    match = re.fullmatch(r"\s*(\d+)\s*\.\.\s*(\d+)\s*", str(text))
    if match:
        first, last = int(match.group(1)), int(match.group(2))
        if last < first:
            raise ConfigurationError("empty refinement range {!r}".format(text))
        return tuple(range(first, last + 1))
    levels = tuple(_parse_int(item) for item in _split(text))
    if any(level < 0 for level in levels):
        raise ConfigurationError("refinement levels must be >= 0, got {!r}".format(text))
    return levels


def _parse_problem(text: str) -> str:
    name = str(text).strip().lower()
    aliases = {"straight_beam": "beam", "curved": "curved_beam", "plate_with_hole": "plate"}
    name = aliases.get(name, name)
    if name not in CASE_NAMES:
        raise ConfigurationError("unknown problem {!r}; choose from {}".format(text, ", ".join(CASE_NAMES)))
    return name


def _parse_formulations(text: str) -> Tuple[str, ...]:
    return tuple(Formulation.parse(item).value for item in _split(text))


def _parse_degrees(text: str) -> Tuple[int, ...]:
    degrees = tuple(_parse_int(item) for item in _split(text))
    for degree in degrees:
        if degree not in SUPPORTED_DEGREES:
            raise ConfigurationError("degree must be one of {}, got {}".format(SUPPORTED_DEGREES, degree))
    return degrees


def _parse_regime(text: str) -> str:
    try:
        return Regime(str(text).strip().lower().replace("-", "_")).value
    except ValueError:
        raise ConfigurationError("regime must be one of {}, got {!r}".format([r.value for r in Regime], text))


def _parse_t_eval(text: str) -> str:
    value = str(text).strip().lower().replace("-", "_")
    if value not in T_EVAL_MODES:
        raise ConfigurationError("t_eval must be one of {}, got {!r}".format(T_EVAL_MODES, text))
    return value


def _parse_nu(text: str) -> float:
    value = _parse_float(text)
    if not -1.0 < value < 0.5:
        raise ConfigurationError("nu must lie in (-1, 0.5), got {}".format(value))
    return value


def _parse_formats(text: str) -> Tuple[str, ...]:
    formats = tuple(item.lower() for item in _split(text))
    unknown = [f for f in formats if f not in OUTPUT_FORMATS]
    if unknown:
        raise ConfigurationError("unknown output formats {}; choose from {}".format(unknown, OUTPUT_FORMATS))
    return formats


def _parse_samples(text: str) -> int:
    value = _parse_int(text)
    if value < 2:
        raise ConfigurationError("samples must be >= 2, got {}".format(value))
    return value


def _positive(parse: Callable[[str], Any], what: str) -> Callable[[str], Any]:
    def parse_positive(text: str) -> Any:
        value = parse(text)
        if not value > 0:
            raise ConfigurationError("{} must be positive, got {!r}".format(what, text))
        return value

    return parse_positive


# (section, key) -> (RunConfig field, parser)
CONFIG_KEYS: Dict[Tuple[str, str], Tuple[str, Callable[[str], Any]]] = {
    ("run", "problem"): ("problem", _parse_problem),
    ("run", "formulation"): ("formulations", _parse_formulations),
    ("run", "degree"): ("degrees", _parse_degrees),
    ("run", "refine"): ("levels", parse_levels),
    ("run", "slenderness"): ("slenderness", _positive(_parse_float, "slenderness")),
    ("run", "threads"): ("threads", _positive(_parse_int, "threads")),
    ("material", "e"): ("E", _positive(_parse_float, "E")),
    ("material", "nu"): ("nu", _parse_nu),
    ("material", "regime"): ("regime", _parse_regime),
    ("element", "t_eval"): ("t_eval", _parse_t_eval),
    ("output", "directory"): ("output", str),
    ("output", "formats"): ("formats", _parse_formats),
    ("output", "samples"): ("samples", _parse_samples),
    ("output", "magnification"): ("magnification", _parse_float),
}

_PARSERS = {name: parser for name, parser in CONFIG_KEYS.values()}


def parse_value(name: str, text: str) -> Any:
    """Parses the string ``text`` for the :class:`RunConfig` field ``name``."""
    return _PARSERS[name](text)


@dataclass(frozen=True)
class RunConfig:
    """Everything ``hyiga run`` needs: which study to run and which artifacts to write.

    ``levels = None`` runs the case's own ladder; ``E``, ``nu`` and ``regime`` override the
    case material when set.
    """

    problem: str = "beam"
    formulations: Tuple[str, ...] = ("hybrid",)
    degrees: Tuple[int, ...] = (2,)
    levels: Optional[Tuple[int, ...]] = None
    slenderness: Optional[float] = None
    E: Optional[float] = None
    nu: Optional[float] = None
    regime: Optional[str] = None
    t_eval: str = "per_point"
    output: str = "results"
    formats: Tuple[str, ...] = ("csv",)
    samples: int = 3
    magnification: float = 1.0
    threads: Optional[int] = None

    def __post_init__(self) -> None:
        if not self.formulations:
            raise ConfigurationError("at least one formulation is required")
        if not self.degrees:
            raise ConfigurationError("at least one degree is required")
        for degree in self.degrees:
            if degree not in SUPPORTED_DEGREES:
                raise ConfigurationError("degree must be one of {}, got {}".format(SUPPORTED_DEGREES, degree))
        if self.levels is not None and not self.levels:
            raise ConfigurationError("the refinement ladder is empty")
        _parse_samples(self.samples)
        if self.nu is not None:
            _parse_nu(self.nu)
        _parse_t_eval(self.t_eval)
        _parse_formats(",".join(self.formats))

    def override(self, values: Mapping[str, Any]) -> "RunConfig":
        """Copy with the non-``None`` entries of ``values`` applied."""
        return replace(self, **{k: v for k, v in values.items() if v is not None})

    def to_json(self) -> Dict[str, Any]:
        result = {}
        for f in fields(self):
            value = getattr(self, f.name)
            result[f.name] = list(value) if isinstance(value, tuple) else value
        return result


def _key_lines(text: str) -> Dict[Tuple[str, str], int]:
    lines: Dict[Tuple[str, str], int] = {}
    section = None
    for number, line in enumerate(text.splitlines(), start=1):
        header = re.match(r"^\s*\[([^\]]+)\]", line)
        if header:
            section = header.group(1).strip().lower()
            lines[(section, "")] = number
            continue
        entry = re.match(r"^([^\s=:#;][^=:]*?)\s*[=:]", line)
        if entry and section is not None:
            lines[(section, entry.group(1).strip().lower())] = number
    return lines


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Reads a config file into :class:`RunConfig` field values.

    Raises:
        ConfigurationError: unreadable file, syntax error, unknown section or key, or an invalid
            value; the message carries the line of the offending entry.
    """
    try:
        text = Path(path).read_text(encoding="utf8")
    except OSError as err:
        raise ConfigurationError("cannot read config file {}: {}".format(path, err))
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text, source=str(path))
    except configparser.ParsingError as err:
        raise ConfigurationError("malformed entry {!r}".format(err.errors[0][1]), err.errors[0][0])
    except configparser.Error as err:
        raise ConfigurationError(err.message.splitlines()[0], getattr(err, "lineno", None))

    lines = _key_lines(text)
    values: Dict[str, Any] = {}
    sections = {key[0] for key in CONFIG_KEYS}
    for section in parser.sections():
        name = section.strip().lower()
        if name not in sections:
            raise ConfigurationError(
                "unknown section [{}]; expected one of {}".format(section, sorted(sections)),
                lines.get((name, "")),
            )
        for key, raw in parser.items(section):
            line = lines.get((name, key))
            if (name, key) not in CONFIG_KEYS:
                raise ConfigurationError("unknown key {!r} in section [{}]".format(key, section), line)
            field_name, parse = CONFIG_KEYS[(name, key)]
            try:
                values[field_name] = parse(raw)
            except ConfigurationError as err:
                raise ConfigurationError("{} = {!r}: {}".format(key, raw, err), line) from err
    return values
