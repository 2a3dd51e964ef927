"""Experiment configuration: INI-style sections of ``key = value`` pairs layered over
built-in defaults (bandwidth 20 MHz in 1 MHz subcarriers, 96 bits and 50,000 cycles
per point, 200 GHz RSU, J = 3, 20 m RoI either side, 14 m road, 3 CAVs, 7 objects,
accuracy threshold 0.85)."""
import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields, replace

from .accuracy import SurrogateAccuracyModel, TableAccuracyModel
from .comm import LinkParams, dbm_to_watt, NOISE_PSD_DBM_HZ
from .exceptions import ConfigurationError
from .planner import CooperativeSensingProblem, GibbsConfig
from .scenario import ScenarioConfig, generate_scenario
from .sensing import SynthesisParams

# Printed as-is, including the 2.0 that breaks the 2.5-step progression.
DEFAULT_CAV_COMPUTE_GHZ = (2.5, 2.0, 7.5, 10.0, 12.5, 15.0)
DEFAULT_TAU_LIST = (1e-3, 1e-4, 1e-5, 1e-6)


@dataclass(frozen=True)
class SystemParams:
    omega: int = 50_000
    xi: int = 96
    J: int = 3
    accuracy_threshold: float = 0.85
    t_broad: float = 0.005
    bandwidth: float = 20e6
    subcarrier_bandwidth: float = 1e6
    noise_psd: float = dbm_to_watt(NOISE_PSD_DBM_HZ)


@dataclass(frozen=True)
class AccuracySettings:
    model: str = "surrogate"
    table_path: str = ""
    a_floor: float = 0.3
    a_ceil: float = 0.99
    w_cov: float = 0.6
    rho_sat: float = 8.0


@dataclass(frozen=True)
class GibbsSettings:
    tau: float = 0.01
    max_iter: int = 2000
    stall_window: int = 300
    repair_cap: int = 50


@dataclass(frozen=True)
class ExperimentSettings:
    seeds: tuple = (1,)
    tau_list: tuple = DEFAULT_TAU_LIST
    cav_compute_sweep: tuple = DEFAULT_CAV_COMPUTE_GHZ  # GHz
    output_dir: str = "results"


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    sensing: SynthesisParams = field(default_factory=SynthesisParams)
    system: SystemParams = field(default_factory=SystemParams)
    accuracy: AccuracySettings = field(default_factory=AccuracySettings)
    gibbs: GibbsSettings = field(default_factory=GibbsSettings)
    experiment: ExperimentSettings = field(default_factory=ExperimentSettings)

    def to_dict(self):
        return {f.name: asdict(getattr(self, f.name)) for f in fields(self)}

    def config_hash(self):
        blob = json.dumps(self.to_dict(), sort_keys=True, default=list).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def accuracy_model(self):
        acc = self.accuracy
        if acc.model == "surrogate":
            return SurrogateAccuracyModel(acc.a_floor, acc.a_ceil, acc.w_cov, acc.rho_sat).fit()
        if acc.model == "table":
            if not acc.table_path:
                raise ConfigurationError("accuracy.model = table needs accuracy.table_path")
            return TableAccuracyModel.load(acc.table_path)
        raise ConfigurationError(f"unknown accuracy model {acc.model!r}")

    def gibbs_config(self, seed, tau=None):
        g = self.gibbs
        return GibbsConfig(tau=g.tau if tau is None else tau, max_iter=g.max_iter,
                           stall_window=g.stall_window, repair_cap=g.repair_cap, seed=seed)

    def scenario_for(self, seed):
        return generate_scenario(self.scenario, seed)

    def build_problem(self, seed, scenario=None):
        scenario = scenario or self.scenario_for(seed)
        s = self.system
        link = LinkParams.from_scenario(scenario, noise_psd=s.noise_psd, bandwidth=s.bandwidth,
                                        subcarrier_bandwidth=s.subcarrier_bandwidth)
        return CooperativeSensingProblem(
            scenario, accuracy_model=self.accuracy_model(), threshold=s.accuracy_threshold,
            omega=s.omega, xi=s.xi, t_broad=s.t_broad, J=s.J, link=link, synthesis=self.sensing)

    def with_overrides(self, section, **values):
        return replace(self, **{section: replace(getattr(self, section), **values)})


def _parse_value(raw, default, where, line):
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            value = float(raw)
            if value != int(value):
                raise ValueError(raw)
            return int(value)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            items = [x for x in raw.replace(",", " ").split() if x]
            kind = int if default and isinstance(default[0], int) else float
            return tuple(kind(float(x)) if kind is int else float(x) for x in items)
        return raw
    except ValueError:
        raise ConfigurationError(f"[{where}]: cannot parse {raw!r} as {type(default).__name__}",
                                 line=line) from None


def _key_lines(text):
    """Map (section, key) -> 1-based line number."""
    lines, section = {}, None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            section = s[1:-1].strip()
        elif section and s and not s.startswith(("#", ";")):
            sep = min((s.index(c) for c in "=:" if c in s), default=None)
            if sep is not None:
                lines[(section, s[:sep].strip().lower())] = i
    return lines


def _section_lines(text):
    out = {}
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        if s.startswith("[") and s.endswith("]"):
            out[s[1:-1].strip()] = i
    return out


def loads_config(text, base=None):
    """Parse config text, reporting errors with their line numbers."""
    base = base or ExperimentConfig()
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigurationError("key outside any [section]", line=exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigurationError("malformed line", line=line) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigurationError(f"duplicate key {exc.option!r} in [{exc.section}]",
                                 line=exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigurationError(f"duplicate section [{exc.section}]", line=exc.lineno) from None
    key_lines = _key_lines(text)
    section_lines = _section_lines(text)
    known = {f.name: f for f in fields(ExperimentConfig)}
    updates = {}
    for section in parser.sections():
        if section not in known:
            raise ConfigurationError(f"unknown section [{section}]", line=section_lines.get(section))
        current = getattr(base, section)
        # keys are matched case-insensitively (configparser lowercases them)
        names = {f.name.lower(): f.name for f in fields(current)}
        values = {}
        for key, raw in parser.items(section):
            line = key_lines.get((section, key))
            if key not in names:
                raise ConfigurationError(f"unknown key {key!r} in [{section}]", line=line)
            name = names[key]
            values[name] = _parse_value(raw, getattr(current, name), section, line)
        try:
            updates[section] = replace(current, **values)
        except (ConfigurationError, ValueError, TypeError) as exc:
            bad = next(iter(values), None)
            for key in values:
                if key in str(exc):
                    bad = key
            raise ConfigurationError(f"[{section}] {exc}",
                                     line=key_lines.get((section, str(bad).lower()))) from None
    return replace(base, **updates)


def load_config(path):
    """Read a config file; ``"default"`` or ``None`` gives the built-in defaults."""
    if path in (None, "", "default"):
        return ExperimentConfig()
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
    return loads_config(text)


def dumps_config(config):
    """Render a config back to INI text that :func:`loads_config` accepts."""
    out = []
    for name, values in config.to_dict().items():
        out.append(f"[{name}]")
        for key, value in values.items():
            if isinstance(value, (tuple, list)):
                value = ", ".join(repr(v) for v in value)
            out.append(f"{key} = {value}")
        out.append("")
    return "\n".join(out)
