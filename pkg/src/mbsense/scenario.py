"""Scenario files: JSON serialization of a ProblemSpec plus simulation
settings, and the bundled eight-subchannel reference instance."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .detection import NoiseModel, SubchannelParams
from .optimize import PrimaryUserGroup, ProblemSpec

__all__ = [
    "Scenario",
    "ScenarioError",
    "load_scenario",
    "loads_scenario",
    "save_scenario",
    "dumps_scenario",
    "table1_scenario",
]

_DEFAULT_TRIALS = 100_000
_DEFAULT_SEED = 20080411

_TOP_KEYS = {"noise", "subchannels", "groups", "delta", "simulation"}
_NOISE_KEYS = {"sigma_v2", "samples_m"}
_SUB_KEYS = {"gain_power", "rate", "cost", "alpha", "beta"}
_GROUP_KEYS = {"members", "epsilon"}
_SIM_KEYS = {"trials", "seed"}


class ScenarioError(ValueError):
    """Raised when a scenario file cannot be parsed or validated."""


@dataclass(frozen=True)
class Scenario:
    """A joint-detection problem instance plus Monte Carlo settings."""

    spec: ProblemSpec
    trials: int = _DEFAULT_TRIALS
    seed: int = _DEFAULT_SEED

    def __post_init__(self):
        trials = int(self.trials)
        if trials < 1:
            raise ScenarioError("simulation trials must be >= 1")
        object.__setattr__(self, "trials", trials)
        object.__setattr__(self, "seed", int(self.seed))


def _require_mapping(obj, where: str) -> dict:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{where} must be a JSON object")
    return obj


def _check_keys(obj: dict, allowed: set, where: str):
    extra = set(obj) - allowed
    if extra:
        raise ScenarioError(f"{where}: unknown keys {sorted(extra)}")


def loads_scenario(text: str) -> Scenario:
    """Parse a scenario from a JSON string."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as err:
        raise ScenarioError(f"invalid JSON: {err}") from err
    raw = _require_mapping(raw, "scenario")
    _check_keys(raw, _TOP_KEYS, "scenario")
    for key in ("noise", "subchannels", "groups"):
        if key not in raw:
            raise ScenarioError(f"scenario: missing required key '{key}'")

    noise_raw = _require_mapping(raw["noise"], "noise")
    _check_keys(noise_raw, _NOISE_KEYS, "noise")
    for key in _NOISE_KEYS:
        if key not in noise_raw:
            raise ScenarioError(f"noise: missing required key '{key}'")
    try:
        noise = NoiseModel(sigma_v2=float(noise_raw["sigma_v2"]),
                           samples_m=noise_raw["samples_m"])
    except (TypeError, ValueError) as err:
        raise ScenarioError(f"noise: {err}") from err

    if not isinstance(raw["subchannels"], list) or not raw["subchannels"]:
        raise ScenarioError("subchannels must be a nonempty JSON array")
    subs = []
    for i, entry in enumerate(raw["subchannels"]):
        entry = _require_mapping(entry, f"subchannel {i}")
        _check_keys(entry, _SUB_KEYS, f"subchannel {i}")
        if "gain_power" not in entry:
            raise ScenarioError(f"subchannel {i}: missing required key 'gain_power'")
        try:
            subs.append(SubchannelParams(**{k: float(v) for k, v in entry.items()}))
        except (TypeError, ValueError) as err:
            raise ScenarioError(f"subchannel {i}: {err}") from err

    if not isinstance(raw["groups"], list) or not raw["groups"]:
        raise ScenarioError("groups must be a nonempty JSON array")
    groups = []
    for j, entry in enumerate(raw["groups"]):
        entry = _require_mapping(entry, f"group {j}")
        _check_keys(entry, _GROUP_KEYS, f"group {j}")
        for key in _GROUP_KEYS:
            if key not in entry:
                raise ScenarioError(f"group {j}: missing required key '{key}'")
        if not isinstance(entry["members"], list):
            raise ScenarioError(f"group {j}: members must be a JSON array")
        try:
            groups.append(PrimaryUserGroup(members=tuple(entry["members"]),
                                           epsilon=float(entry["epsilon"])))
        except (TypeError, ValueError) as err:
            raise ScenarioError(f"group {j}: {err}") from err

    try:
        delta = float(raw.get("delta", 0.0))
        spec = ProblemSpec(subchannels=tuple(subs), noise=noise,
                           groups=tuple(groups), delta=delta)
    except (TypeError, ValueError) as err:
        raise ScenarioError(str(err)) from err

    trials, seed = _DEFAULT_TRIALS, _DEFAULT_SEED
    if "simulation" in raw:
        sim = _require_mapping(raw["simulation"], "simulation")
        _check_keys(sim, _SIM_KEYS, "simulation")
        trials = sim.get("trials", _DEFAULT_TRIALS)
        seed = sim.get("seed", _DEFAULT_SEED)
    try:
        return Scenario(spec=spec, trials=trials, seed=seed)
    except (TypeError, ValueError) as err:
        raise ScenarioError(str(err)) from err


def load_scenario(path) -> Scenario:
    """Load a scenario from a JSON file path."""
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise ScenarioError(f"cannot read {path}: {err}") from err
    return loads_scenario(text)


def dumps_scenario(scenario: Scenario) -> str:
    """Serialize a scenario to a JSON string (stable key order)."""
    spec = scenario.spec
    doc = {
        "noise": {"sigma_v2": spec.noise.sigma_v2, "samples_m": spec.noise.samples_m},
        "subchannels": [
            {"gain_power": s.gain_power, "rate": s.rate, "cost": s.cost,
             "alpha": s.alpha, "beta": s.beta}
            for s in spec.subchannels
        ],
        "groups": [
            {"members": list(g.members), "epsilon": g.epsilon} for g in spec.groups
        ],
        "delta": spec.delta,
        "simulation": {"trials": scenario.trials, "seed": scenario.seed},
    }
    return json.dumps(doc, indent=2) + "\n"


def save_scenario(scenario: Scenario, path):
    """Write a scenario to a JSON file."""
    Path(path).write_text(dumps_scenario(scenario))


def table1_scenario() -> Scenario:
    """The bundled eight-subchannel reference instance used throughout the
    documentation and tests."""
    text = resources.files("mbsense").joinpath("data/table1.json").read_text()
    return loads_scenario(text)
