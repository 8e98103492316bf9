#!/usr/bin/env python3
"""
Scenario Configuration - YAML parsing, validation and canonical emission

See docs/CONFIG.md for the grammar. Every key is optional and falls back
to the reference parameter set.
"""
import logging
import math
import re
from dataclasses import dataclass, field, fields, replace
from enum import Enum
from typing import Any, Dict, Optional, Tuple, Union

import yaml

from baselines.trees import DEFAULT_ENUMERATION_CAP, Objective
from formation.game import DEFAULT_MAX_ITERATIONS
from topology.model import DeltaMode, RadioParams, TrafficParams

logger = logging.getLogger(__name__)

KMH_TO_MS = 1000.0 / 3600.0
RANDOM_WALK = "random_walk"

_POWER_PATTERN = re.compile(
    r'^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*(dBm|mW|W)\s*$'
)


class ConfigError(ValueError):
    """Raised for schema or range violations; the message names the key path"""


class ExperimentKind(Enum):
    """What a run produces"""
    SNAPSHOT = "snapshot"
    FORMATION = "formation"
    MOBILITY = "mobility"
    CENSUS = "census"


class SweepAxis(Enum):
    """Parameter varied across sweep points"""
    NUM_MS = "num_ms"
    NUM_RS = "num_rs"
    BETA = "beta"
    SPEED = "speed"


@dataclass(frozen=True)
class MobilitySettings:
    """Who moves, how fast (km/h), where to, and for how long (s)"""
    movers: Union[str, Tuple[int, ...]] = "rs"
    speed_kmh: float = 0.0
    direction: Union[str, Tuple[float, float]] = RANDOM_WALK
    duration: float = 300.0

    @property
    def speed(self) -> float:
        """Speed in m/s"""
        return self.speed_kmh * KMH_TO_MS


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved experiment description"""
    radio: RadioParams = field(default_factory=RadioParams)
    traffic: TrafficParams = field(default_factory=TrafficParams)
    area: Tuple[float, float] = (3000.0, 3000.0)
    num_rs: int = 10
    num_ms: int = 40
    kind: ExperimentKind = ExperimentKind.FORMATION
    axis: Optional[SweepAxis] = None
    values: Tuple[float, ...] = ()
    repetitions: int = 200
    master_seed: Optional[int] = None
    objective: Objective = Objective.MEAN_MS_UTILITY
    max_iterations: int = DEFAULT_MAX_ITERATIONS
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP
    mobility: MobilitySettings = field(default_factory=MobilitySettings)
    output_directory: Optional[str] = None

    def sweep_points(self) -> Tuple[float, ...]:
        """Axis values to run; a single unlabelled point when no axis is set"""
        if self.axis is None or not self.values:
            return (math.nan,)
        return self.values

    def at(self, value: float) -> "ScenarioConfig":
        """Copy of the config with the sweep axis set to `value`"""
        if self.axis is None or math.isnan(value):
            return self
        if self.axis is SweepAxis.NUM_MS:
            return replace(self, num_ms=int(value))
        if self.axis is SweepAxis.NUM_RS:
            return replace(self, num_rs=int(value))
        if self.axis is SweepAxis.BETA:
            return replace(self, traffic=replace(self.traffic, beta=float(value)))
        return replace(self, mobility=replace(self.mobility, speed_kmh=float(value)))

    def max_rs(self) -> int:
        if self.axis is SweepAxis.NUM_RS and self.values:
            return int(max(self.values))
        return self.num_rs


def parse_power(value: Any, key: str) -> float:
    """
    Power in watts from a number or a "<value> dBm|mW|W" string

    Args:
        value: Raw YAML value
        key: Dotted key path used in error messages

    Returns:
        Power in watts
    """
    if isinstance(value, bool):
        raise ConfigError(f"{key} must be a power, got {value!r}")
    if isinstance(value, (int, float)):
        if not math.isfinite(value):
            raise ConfigError(f"{key} must be a finite power, got {value!r}")
        return float(value)
    if isinstance(value, str):
        text = value.replace('−', '-')
        match = _POWER_PATTERN.match(text)
        if match:
            number, unit = float(match.group(1)), match.group(2)
            if unit == 'dBm':
                return 10.0 ** ((number - 30.0) / 10.0)
            if unit == 'mW':
                return number / 1000.0
            return number
    raise ConfigError(f"{key} must be watts or a '<value> dBm' string, got {value!r}")


def _number(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be a finite number, got {value!r}")
    return float(value)


def _integer(value: Any, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    # int() raises on inf and nan
    if not math.isfinite(value) or int(value) != value:
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    return int(value)


def _enum(enum_type, value: Any, key: str):
    choices = [member.value for member in enum_type]
    if isinstance(value, str) and value.lower() in choices:
        return enum_type(value.lower())
    raise ConfigError(f"{key} must be one of {choices}, got {value!r}")


def _section(data: Dict[str, Any], name: str, allowed) -> Dict[str, Any]:
    section = data.get(name) or {}
    if not isinstance(section, dict):
        raise ConfigError(f"{name} must be a mapping, got {type(section).__name__}")
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key {name}.{key}")
    return section


def _build(factory, section_name: str, kwargs: Dict[str, Any]):
    try:
        return factory(**kwargs)
    except ValueError as e:
        raise ConfigError(f"{section_name}.{e}") from e


_RADIO_KEYS = ('tx_power_rs', 'tx_power_ms', 'noise_power', 'bandwidth', 'path_loss_exponent')
_TRAFFIC_KEYS = ('packet_bits', 'ms_arrival_rate', 'hello_rate', 'beta', 'epsilon_fraction',
                 'history_threshold', 'critical_threshold', 'reform_period', 'delta_mode',
                 'rs_beta')
_NETWORK_KEYS = ('area', 'num_rs', 'num_ms')
_EXPERIMENT_KEYS = ('kind', 'axis', 'values', 'repetitions', 'master_seed', 'objective',
                    'max_iterations', 'enumeration_cap')
_MOBILITY_KEYS = ('movers', 'speed_kmh', 'direction', 'duration')
_OUTPUT_KEYS = ('directory',)
_SECTIONS = ('radio', 'traffic', 'network', 'experiment', 'mobility', 'output')


def _parse_radio(section: Dict[str, Any]) -> RadioParams:
    kwargs = {}
    for key, value in section.items():
        path = f"radio.{key}"
        if key in ('tx_power_rs', 'tx_power_ms', 'noise_power'):
            kwargs[key] = parse_power(value, path)
        else:
            kwargs[key] = _number(value, path)
    return _build(RadioParams, 'radio', kwargs)


def _parse_traffic(section: Dict[str, Any]) -> TrafficParams:
    kwargs = {}
    for key, value in section.items():
        path = f"traffic.{key}"
        if key in ('packet_bits', 'history_threshold', 'critical_threshold'):
            kwargs[key] = _integer(value, path)
        elif key == 'delta_mode':
            kwargs[key] = _enum(DeltaMode, value, path)
        elif key == 'rs_beta':
            if not isinstance(value, dict):
                raise ConfigError(f"{path} must map RS index to beta")
            kwargs[key] = tuple(sorted(
                (_integer(rs, f"{path}.{rs}"), _number(beta, f"{path}.{rs}"))
                for rs, beta in value.items()
            ))
        else:
            kwargs[key] = _number(value, path)
    return _build(TrafficParams, 'traffic', kwargs)


def _parse_area(value: Any) -> Tuple[float, float]:
    if isinstance(value, (list, tuple)) and len(value) == 2:
        area = (_number(value[0], 'network.area'), _number(value[1], 'network.area'))
    else:
        side = _number(value, 'network.area')
        area = (side, side)
    if not (area[0] > 0 and area[1] > 0):
        raise ConfigError(f"network.area must be positive, got {value!r}")
    return area


def _parse_mobility(section: Dict[str, Any]) -> MobilitySettings:
    kwargs = {}
    if 'movers' in section:
        movers = section['movers']
        if isinstance(movers, str) and movers.lower() in ('rs', 'ms', 'all'):
            kwargs['movers'] = movers.lower()
        elif isinstance(movers, list) and movers:
            kwargs['movers'] = tuple(sorted(_integer(rs, 'mobility.movers') for rs in movers))
            if kwargs['movers'][0] < 1:
                raise ConfigError("mobility.movers must list RS indices >= 1")
        else:
            raise ConfigError(f"mobility.movers must be rs, ms, all or a list of RSs, got {movers!r}")
    if 'speed_kmh' in section:
        kwargs['speed_kmh'] = _number(section['speed_kmh'], 'mobility.speed_kmh')
        if kwargs['speed_kmh'] < 0:
            raise ConfigError("mobility.speed_kmh must be >= 0")
    if 'direction' in section:
        direction = section['direction']
        if isinstance(direction, str) and direction.lower() == RANDOM_WALK:
            kwargs['direction'] = RANDOM_WALK
        elif isinstance(direction, list) and len(direction) == 2:
            dx = _number(direction[0], 'mobility.direction')
            dy = _number(direction[1], 'mobility.direction')
            if dx == 0 and dy == 0:
                raise ConfigError("mobility.direction must be a nonzero vector")
            kwargs['direction'] = (dx, dy)
        else:
            raise ConfigError(f"mobility.direction must be random_walk or [dx, dy], got {direction!r}")
    if 'duration' in section:
        kwargs['duration'] = _number(section['duration'], 'mobility.duration')
        if kwargs['duration'] < 0:
            raise ConfigError("mobility.duration must be >= 0")
    return MobilitySettings(**kwargs)


def config_from_dict(data: Optional[Dict[str, Any]]) -> ScenarioConfig:
    """Validated ScenarioConfig from an already-loaded mapping"""
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError(f"configuration must be a mapping, got {type(data).__name__}")
    for name in data:
        if name not in _SECTIONS:
            raise ConfigError(f"unknown section {name}")

    radio = _parse_radio(_section(data, 'radio', _RADIO_KEYS))
    traffic = _parse_traffic(_section(data, 'traffic', _TRAFFIC_KEYS))
    kwargs: Dict[str, Any] = {'radio': radio, 'traffic': traffic}

    network = _section(data, 'network', _NETWORK_KEYS)
    if 'area' in network:
        kwargs['area'] = _parse_area(network['area'])
    for key in ('num_rs', 'num_ms'):
        if key in network:
            kwargs[key] = _integer(network[key], f"network.{key}")
            if kwargs[key] < 0:
                raise ConfigError(f"network.{key} must be >= 0")

    experiment = _section(data, 'experiment', _EXPERIMENT_KEYS)
    if 'kind' in experiment:
        kwargs['kind'] = _enum(ExperimentKind, experiment['kind'], 'experiment.kind')
    if experiment.get('axis') is not None:
        kwargs['axis'] = _enum(SweepAxis, experiment['axis'], 'experiment.axis')
    if 'values' in experiment:
        values = experiment['values']
        if not isinstance(values, list):
            raise ConfigError("experiment.values must be a list")
        kwargs['values'] = tuple(_number(v, 'experiment.values') for v in values)
    for key in ('repetitions', 'max_iterations', 'enumeration_cap'):
        if key in experiment:
            kwargs[key] = _integer(experiment[key], f"experiment.{key}")
            if kwargs[key] < 1:
                raise ConfigError(f"experiment.{key} must be >= 1")
    if experiment.get('master_seed') is not None:
        kwargs['master_seed'] = _integer(experiment['master_seed'], 'experiment.master_seed')
        if kwargs['master_seed'] < 0:
            raise ConfigError("experiment.master_seed must be >= 0")
    if 'objective' in experiment:
        kwargs['objective'] = _enum(Objective, experiment['objective'], 'experiment.objective')

    kwargs['mobility'] = _parse_mobility(_section(data, 'mobility', _MOBILITY_KEYS))

    output = _section(data, 'output', _OUTPUT_KEYS)
    if output.get('directory') is not None:
        kwargs['output_directory'] = str(output['directory'])

    config = ScenarioConfig(**kwargs)
    _check_consistency(config)
    return config


def _check_consistency(config: ScenarioConfig) -> None:
    axis, values = config.axis, config.values
    if axis in (SweepAxis.NUM_MS, SweepAxis.NUM_RS):
        for value in values:
            if not math.isfinite(value) or value < 0 or int(value) != value:
                raise ConfigError(f"experiment.values must be nonnegative integers for axis {axis.value}")
    elif axis is SweepAxis.BETA:
        for value in values:
            if not 0 < value < 1:
                raise ConfigError("experiment.values must lie in (0, 1) for axis beta")
    elif axis is SweepAxis.SPEED:
        for value in values:
            if value < 0:
                raise ConfigError("experiment.values must be >= 0 for axis speed")
    if config.kind is ExperimentKind.CENSUS and config.max_rs() > config.enumeration_cap:
        raise ConfigError(
            f"network.num_rs must be <= experiment.enumeration_cap ({config.enumeration_cap}) "
            f"for a census, got {config.max_rs()}"
        )
    for rs, _ in config.traffic.rs_beta:
        if rs > config.max_rs():
            raise ConfigError(f"traffic.rs_beta names RS {rs} beyond network.num_rs")


def parse_config(text: str) -> ScenarioConfig:
    """
    Parse a YAML scenario description

    Args:
        text: YAML document (may be empty)

    Returns:
        Fully defaulted ScenarioConfig

    Raises:
        ConfigError: on malformed YAML, unknown keys or out-of-range values
    """
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"invalid YAML: {e}") from e
    return config_from_dict(data)


def config_to_dict(config: ScenarioConfig) -> Dict[str, Any]:
    """Canonical mapping form of a config (powers in watts)"""
    radio = {f.name: getattr(config.radio, f.name) for f in fields(config.radio)}
    traffic = {}
    for f in fields(config.traffic):
        value = getattr(config.traffic, f.name)
        if f.name == 'delta_mode':
            value = value.value
        elif f.name == 'rs_beta':
            value = {rs: beta for rs, beta in value}
        traffic[f.name] = value
    mobility = config.mobility
    return {
        'radio': radio,
        'traffic': traffic,
        'network': {
            'area': list(config.area),
            'num_rs': config.num_rs,
            'num_ms': config.num_ms,
        },
        'experiment': {
            'kind': config.kind.value,
            'axis': config.axis.value if config.axis else None,
            'values': list(config.values),
            'repetitions': config.repetitions,
            'master_seed': config.master_seed,
            'objective': config.objective.value,
            'max_iterations': config.max_iterations,
            'enumeration_cap': config.enumeration_cap,
        },
        'mobility': {
            'movers': mobility.movers if isinstance(mobility.movers, str) else list(mobility.movers),
            'speed_kmh': mobility.speed_kmh,
            'direction': (mobility.direction if isinstance(mobility.direction, str)
                          else list(mobility.direction)),
            'duration': mobility.duration,
        },
        'output': {'directory': config.output_directory},
    }


def emit_config(config: ScenarioConfig) -> str:
    """YAML text that parse_config maps back to an equal config"""
    return yaml.safe_dump(config_to_dict(config), sort_keys=False, allow_unicode=True)


def load_config(path: str) -> ScenarioConfig:
    """Read and parse a config file"""
    with open(path, 'r') as f:
        return parse_config(f.read())
