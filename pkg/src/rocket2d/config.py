"""Scenario configuration as a TOML file plus key=value overrides.

The file mirrors ScenarioConfig: nested tables [plant], [trajectory],
[attitude_lqr], [guidance], [backstepping], [attitude_filter],
[altitude_filter], [sim]. Every key is optional and falls back to the
shipped baseline (configs/baseline.toml). Overrides use dotted
paths, e.g. ``sim.dt=0.0005`` or ``guidance.k_x=0.5``, and are applied on
top of the file so that overriding equals editing.
"""

from __future__ import annotations

import sys
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .control import GuidanceGains, TrajectoryRef
from .plant import PlantState, RocketParams
from .sim import ScenarioConfig

_SECTIONS = (
    "plant", "trajectory", "attitude_lqr", "guidance", "backstepping",
    "attitude_filter", "altitude_filter", "sim",
)


def default_config_dict() -> dict[str, dict[str, Any]]:
    """Baseline experiment definition (full 2-D tracking run)."""
    return {
        "plant": {
            # T_max and gamma_max are implementation policy: the actuator
            # has no documented limits, so generous bounds are applied.
            "m": 2.0, "L": 0.5, "L_b": 1.5, "J": 0.375, "g": 9.81,
            "T_max": 78.48, "gamma_max": 1.5707963267948966,
        },
        "trajectory": {"x_d": 2.0, "ydot_d": 2.0},
        "attitude_lqr": {"Q": [100.0, 5.0, 1000.0], "R": 100.0},
        "guidance": {"k_x": 0.01},
        "backstepping": {"k_1": 2.0, "k_2": 1.0},
        "attitude_filter": {"q": 1e-6, "r": 1e-6},
        "altitude_filter": {"q": 0.1, "r": 1.0},
        "sim": {
            "dt": 0.001, "duration": 60.0, "seed": 0,
            "variant": "full-2d", "navigation": True,
            "initial_state": [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            "proportional_on_reference": False,
        },
    }


def load_config_dict(path: str | None) -> dict[str, dict[str, Any]]:
    """Read a TOML file and merge it over the defaults."""
    merged = default_config_dict()
    if path is None:
        return merged
    with open(path, "rb") as fh:
        user = tomllib.load(fh)
    unknown = set(user) - set(_SECTIONS)
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    for section, table in user.items():
        bad = set(table) - set(merged[section])
        if bad:
            raise ValueError(f"unknown keys in [{section}]: {sorted(bad)}")
        merged[section].update(table)
    return merged


def _parse_literal(text: str) -> Any:
    """Parse an override value with TOML literal rules (string fallback)."""
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(cfg: dict[str, dict[str, Any]], overrides: list[str]) -> None:
    """Apply ``section.key=value`` strings in place."""
    for item in overrides:
        if "=" not in item:
            raise ValueError(f"override {item!r} is not of the form section.key=value")
        dotted, _, raw = item.partition("=")
        parts = dotted.strip().split(".")
        if len(parts) != 2:
            raise ValueError(f"override key {dotted!r} must be section.key")
        section, key = parts
        if section not in cfg or key not in cfg[section]:
            raise ValueError(f"unknown override target {dotted!r}")
        cfg[section][key] = _parse_literal(raw.strip())


def scenario_from_dict(cfg: dict[str, dict[str, Any]]) -> ScenarioConfig:
    """Materialize a ScenarioConfig from the nested dictionary."""
    p = cfg["plant"]
    params = RocketParams(
        m=float(p["m"]), L=float(p["L"]), L_b=float(p["L_b"]), J=float(p["J"]),
        g=float(p["g"]), T_max=float(p["T_max"]), gamma_max=float(p["gamma_max"]),
    )
    ref = TrajectoryRef(
        x_d=float(cfg["trajectory"]["x_d"]), ydot_d=float(cfg["trajectory"]["ydot_d"])
    )
    gains = GuidanceGains(
        k_x=float(cfg["guidance"]["k_x"]),
        k_1=float(cfg["backstepping"]["k_1"]),
        k_2=float(cfg["backstepping"]["k_2"]),
    )
    q_diag = [float(v) for v in cfg["attitude_lqr"]["Q"]]
    if len(q_diag) != 3:
        raise ValueError("attitude_lqr.Q must have 3 diagonal entries")
    s = cfg["sim"]
    init = [float(v) for v in s["initial_state"]]
    if len(init) != 6:
        raise ValueError("sim.initial_state must have 6 entries (x,u,y,v,theta,omega)")
    return ScenarioConfig(
        params=params,
        ref=ref,
        guidance=gains,
        lqr_Q=tuple(q_diag),
        lqr_R=float(cfg["attitude_lqr"]["R"]),
        attitude_q=float(cfg["attitude_filter"]["q"]),
        attitude_r=float(cfg["attitude_filter"]["r"]),
        altitude_q=float(cfg["altitude_filter"]["q"]),
        altitude_r=float(cfg["altitude_filter"]["r"]),
        dt=float(s["dt"]),
        duration=float(s["duration"]),
        seed=int(s["seed"]),
        variant=str(s["variant"]).lower(),
        navigation=bool(s["navigation"]),
        initial_state=PlantState(*init),
        proportional_on_reference=bool(s["proportional_on_reference"]),
    )


def load_scenario(path: str | None = None, overrides: list[str] | None = None) -> ScenarioConfig:
    cfg = load_config_dict(path)
    if overrides:
        apply_overrides(cfg, overrides)
    return scenario_from_dict(cfg)


def write_report(path, entries: dict[str, Any]) -> None:
    """Flat key-value report; floats at full precision via repr."""
    with open(path, "w") as fh:
        for key, value in entries.items():
            fh.write(f"{key} = {_format_value(value)}\n")


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, complex):
        sign = "+" if value.imag >= 0 else "-"
        return f"({value.real!r}{sign}{abs(value.imag)!r}j)"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_format_value(v) for v in value) + "]"
    return str(value)
