"""INI run configuration for the command-line scenarios.

Sections and keys (all optional; missing keys take the defaults below)::

    [medium]    g_root_N, gamma_ab, gamma_bc, c, L
    [schedule]  kind = constant | tanh_pair | sampled
                omega0 (constant); amplitude, rate, t_off, t_on (tanh_pair);
                times, values (sampled, comma or whitespace separated);
                retarded = yes | no
    [grid]      z_min, z_max, n_z, t_min, t_max, n_t
    [scenario]  amplitude, width, center, record_every, method,
                allow_strong_probe, excitations
    [oracle]    atoms, excitations, angles_deg, g, ramp_factor,
                slow_time, fast_time, steps
    [sweep]     parameter = g_root_N | pulse_width | ramp_time | gamma_bc
                values

The defaults describe the stop-and-restart scenario with ``g_root_N = 1``
(so Omega equals cot(theta) numerically) on a window wide enough for the
whole cycle.
"""

from __future__ import annotations

import configparser
import hashlib
import io
import math
import re
from dataclasses import dataclass

from .errors import ConfigError
from .medium import ControlSchedule, Grid, MediumParams

__all__ = ["RunConfig", "OracleConfig", "SweepConfig", "ScenarioConfig", "load_config", "parse_config",
           "DEFAULTS"]

DEFAULTS = {
    "medium": {"g_root_N": "1.0", "gamma_ab": "0.0", "gamma_bc": "0.0", "c": "1.0", "L": "420.0"},
    "schedule": {"kind": "tanh_pair", "omega0": "1.0", "amplitude": "100.0", "rate": "0.1",
                 "t_off": "15.0", "t_on": "125.0", "times": "", "values": "", "retarded": "no"},
    "grid": {"z_min": "-60.0", "z_max": "360.0", "n_z": "2101", "t_min": "0.0", "t_max": "200.0",
             "n_t": "2000"},
    "scenario": {"amplitude": "1.0", "width": "10.0", "center": "0.0", "record_every": "20",
                 "method": "spectral", "allow_strong_probe": "no", "excitations": "1"},
    "oracle": {"atoms": "2, 3, 4, 5", "excitations": "1, 2", "angles_deg": "0, 30, 45, 60, 90",
               "g": "1.0", "ramp_factor": "10.0", "slow_time": "200.0", "fast_time": "0.2",
               "steps": "200"},
    "sweep": {"parameter": "g_root_N", "values": ""},
}

SWEEP_PARAMETERS = ("g_root_N", "pulse_width", "ramp_time", "gamma_bc")
METHODS = ("spectral", "split")


@dataclass(frozen=True)
class ScenarioConfig:
    amplitude: float
    width: float
    center: float
    record_every: int
    method: str
    allow_strong_probe: bool
    excitations: int


@dataclass(frozen=True)
class OracleConfig:
    atoms: tuple
    excitations: tuple
    angles_deg: tuple
    g: float
    ramp_factor: float
    slow_time: float
    fast_time: float
    steps: int


@dataclass(frozen=True)
class SweepConfig:
    parameter: str
    values: tuple


@dataclass(frozen=True)
class RunConfig:
    params: MediumParams
    schedule: ControlSchedule
    grid: Grid
    scenario: ScenarioConfig
    oracle: OracleConfig
    sweep: SweepConfig
    canonical: str

    @property
    def sha256(self) -> str:
        return hashlib.sha256(self.canonical.encode("utf-8")).hexdigest()


class _Reader:
    """Typed access to a parsed INI file with line-aware error messages."""

    def __init__(self, parser, text, source):
        self.parser = parser
        self.lines = text.splitlines()
        self.source = source

    def _where(self, section, key):
        current = None
        for number, line in enumerate(self.lines, 1):
            stripped = line.strip()
            head = re.fullmatch(r"\[([^\]]+)\]", stripped)
            if head:
                current = head.group(1).strip()
            elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", stripped, re.IGNORECASE):
                return f"{self.source}:{number}"
        return f"{self.source} (default)"

    def fail(self, section, key, message):
        raw = self.parser.get(section, key)
        exc = ConfigError(f"{self._where(section, key)}: [{section}] {key} = {raw!r}: {message}")
        exc.located = True
        raise exc

    def raw(self, section, key):
        return self.parser.get(section, key)

    def float(self, section, key):
        try:
            value = float(self.raw(section, key))
        except ValueError:
            self.fail(section, key, "expected a number")
        if not math.isfinite(value):
            self.fail(section, key, "must be finite")
        return value

    def int(self, section, key):
        try:
            return int(self.raw(section, key))
        except ValueError:
            self.fail(section, key, "expected an integer")

    def bool(self, section, key):
        try:
            return self.parser.getboolean(section, key)
        except ValueError:
            self.fail(section, key, "expected yes/no")

    def floats(self, section, key):
        text = self.raw(section, key).strip()
        if not text:
            return ()
        try:
            return tuple(float(x) for x in re.split(r"[,\s]+", text) if x)
        except ValueError:
            self.fail(section, key, "expected a list of numbers")

    def ints(self, section, key):
        values = self.floats(section, key)
        if any(v != int(v) for v in values):
            self.fail(section, key, "expected a list of integers")
        return tuple(int(v) for v in values)

    def choice(self, section, key, options):
        value = self.raw(section, key).strip()
        if value not in options:
            self.fail(section, key, f"expected one of {', '.join(options)}")
        return value

    def build(self, section, key, factory):
        """Run ``factory`` and attach the location of ``key`` to any ConfigError."""
        try:
            return factory()
        except ConfigError as exc:
            if getattr(exc, "located", False):
                raise
            raise ConfigError(f"{self._where(section, key)}: [{section}] {exc}") from None


def _canonical(parser) -> str:
    out = io.StringIO()
    for section in sorted(parser.sections()):
        out.write(f"[{section}]\n")
        for key in sorted(parser[section]):
            out.write(f"{key} = {parser[section][key].strip()}\n")
    return out.getvalue()


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    """Parse INI text, filling missing keys from :data:`DEFAULTS`."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_dict(DEFAULTS)
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    unknown_sections = set(parser.sections()) - set(DEFAULTS)
    if unknown_sections:
        raise ConfigError(f"{source}: unknown section(s) {sorted(unknown_sections)}")
    for section in parser.sections():
        extra = set(parser[section]) - set(DEFAULTS[section])
        if extra:
            raise ConfigError(f"{source}: unknown key(s) {sorted(extra)} in [{section}]")
    r = _Reader(parser, text, source)

    params = r.build("medium", "g_root_N", lambda: MediumParams(
        g_root_N=r.float("medium", "g_root_N"), gamma_ab=r.float("medium", "gamma_ab"),
        gamma_bc=r.float("medium", "gamma_bc"), c=r.float("medium", "c"), L=r.float("medium", "L")))

    kind = r.choice("schedule", "kind", ("constant", "tanh_pair", "sampled"))
    retarded = r.bool("schedule", "retarded")
    if kind == "constant":
        schedule = r.build("schedule", "omega0", lambda: ControlSchedule.constant(
            r.float("schedule", "omega0"), retarded))
    elif kind == "tanh_pair":
        schedule = r.build("schedule", "amplitude", lambda: ControlSchedule.tanh_pair(
            r.float("schedule", "amplitude"), r.float("schedule", "rate"),
            r.float("schedule", "t_off"), r.float("schedule", "t_on"), retarded))
    else:
        schedule = r.build("schedule", "times", lambda: ControlSchedule.sampled(
            r.floats("schedule", "times"), r.floats("schedule", "values"), retarded))

    grid = r.build("grid", "n_z", lambda: Grid(
        r.float("grid", "z_min"), r.float("grid", "z_max"), r.int("grid", "n_z"),
        r.float("grid", "t_min"), r.float("grid", "t_max"), r.int("grid", "n_t")))

    scenario = ScenarioConfig(
        amplitude=r.float("scenario", "amplitude"),
        width=r.float("scenario", "width"),
        center=r.float("scenario", "center"),
        record_every=r.int("scenario", "record_every"),
        method=r.choice("scenario", "method", METHODS),
        allow_strong_probe=r.bool("scenario", "allow_strong_probe"),
        excitations=r.int("scenario", "excitations"),
    )
    if scenario.width <= 0:
        r.fail("scenario", "width", "must be positive")
    if scenario.record_every < 1:
        r.fail("scenario", "record_every", "must be >= 1")
    if scenario.excitations < 1:
        r.fail("scenario", "excitations", "must be >= 1")

    oracle = OracleConfig(
        atoms=r.ints("oracle", "atoms"),
        excitations=r.ints("oracle", "excitations"),
        angles_deg=r.floats("oracle", "angles_deg"),
        g=r.float("oracle", "g"),
        ramp_factor=r.float("oracle", "ramp_factor"),
        slow_time=r.float("oracle", "slow_time"),
        fast_time=r.float("oracle", "fast_time"),
        steps=r.int("oracle", "steps"),
    )
    if any(not 0 <= a <= 90 for a in oracle.angles_deg):
        r.fail("oracle", "angles_deg", "angles must lie in [0, 90]")
    for key in ("g", "ramp_factor", "slow_time", "fast_time"):
        if getattr(oracle, key) <= 0:
            r.fail("oracle", key, "must be positive")
    if oracle.steps < 1:
        r.fail("oracle", "steps", "must be >= 1")

    sweep = SweepConfig(
        parameter=r.choice("sweep", "parameter", SWEEP_PARAMETERS),
        values=r.floats("sweep", "values"),
    )
    return RunConfig(params, schedule, grid, scenario, oracle, sweep, _canonical(parser))


def load_config(path=None) -> RunConfig:
    """Read ``path`` (or use the defaults alone when ``path`` is None)."""
    if path is None:
        return parse_config("", "<defaults>")
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, str(path))
