"""Plain-text key-value configuration with documented defaults.

File format: one ``section.key = value`` per line, ``#`` comments. Unknown
keys are rejected. All randomness derives from the single ``seed`` through
fixed per-component spawn keys.
"""
from __future__ import annotations

import ast
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .mppi import MppiParams
from .params import PacejkaCoeffs, VehicleParams
from .slipnet.training import TrainingConfig

# per-component seed derivation (SeedSequence spawn keys)
SEED_DATAGEN = 0
SEED_TRAINING = 1
SEED_PLANNER = 2


def derive_seed(global_seed: int, component: int) -> int:
    ss = np.random.SeedSequence(entropy=global_seed, spawn_key=(component,))
    return int(ss.generate_state(1)[0])


@dataclass
class Config:
    seed: int = 0
    output_dir: str = "runs"
    n_traj: int = 500
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    training: TrainingConfig = field(default_factory=TrainingConfig)
    mppi: MppiParams = field(default_factory=MppiParams)

    def resolve_seeds(self) -> "Config":
        """Propagate the global seed into each component."""
        return replace(
            self,
            training=replace(self.training,
                             seed=derive_seed(self.seed, SEED_TRAINING)),
            mppi=replace(self.mppi,
                         seed=derive_seed(self.seed, SEED_PLANNER)),
        )

    def dump(self) -> str:
        """Effective configuration in reloadable key-value form."""
        lines = [f"seed = {self.seed}",
                 f"output_dir = {self.output_dir}",
                 f"n_traj = {self.n_traj}"]
        for section, obj in (("vehicle", self.vehicle),
                             ("training", self.training),
                             ("mppi", self.mppi)):
            for f in fields(obj):
                val = getattr(obj, f.name)
                if isinstance(val, PacejkaCoeffs):
                    for tf in fields(val):
                        lines.append(f"{section}.{f.name}.{tf.name} = "
                                     f"{getattr(val, tf.name)}")
                else:
                    lines.append(f"{section}.{f.name} = {val!r}")
        return "\n".join(lines) + "\n"


def _parse_value(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def load_config(path=None, overrides: dict | None = None) -> Config:
    """Build a Config from an optional file plus key=value overrides."""
    kv = {}
    if path is not None:
        with open(path) as fh:
            for ln, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{ln}: expected 'key = value'")
                key, val = (part.strip() for part in line.split("=", 1))
                kv[key] = _parse_value(val)
    if overrides:
        kv.update(overrides)
    return config_from_dict(kv)


def config_from_dict(kv: dict) -> Config:
    cfg = Config()
    vehicle = dict()
    training = dict()
    mppi = dict()
    tires = {"tire_lon": {}, "tire_lat": {}}
    valid_top = {"seed", "output_dir", "n_traj"}
    vfields = {f.name for f in fields(VehicleParams)}
    tfields = {f.name for f in fields(TrainingConfig)}
    mfields = {f.name for f in fields(MppiParams)}
    for key, val in kv.items():
        parts = key.split(".")
        if len(parts) == 1 and key in valid_top:
            setattr(cfg, key, val)
        elif parts[0] == "vehicle" and len(parts) == 3 and \
                parts[1] in tires and parts[2] in ("b", "c", "d_scale", "e"):
            tires[parts[1]][parts[2]] = val
        elif parts[0] == "vehicle" and len(parts) == 2 and parts[1] in vfields:
            vehicle[parts[1]] = val
        elif parts[0] == "training" and len(parts) == 2 and parts[1] in tfields:
            training[parts[1]] = val
        elif parts[0] == "mppi" and len(parts) == 2 and parts[1] in mfields:
            if parts[1] in ("noise_v", "noise_delta", "loss_weights"):
                val = tuple(val)
            mppi[parts[1]] = val
        else:
            raise ValueError(f"unknown configuration key: {key}")
    for name, coeffs in tires.items():
        if coeffs:
            base = getattr(VehicleParams(), name)
            vehicle[name] = replace(base, **coeffs)
    if vehicle:
        cfg.vehicle = replace(cfg.vehicle, **vehicle)
    if training:
        cfg.training = replace(cfg.training, **training)
    if mppi:
        cfg.mppi = replace(cfg.mppi, **mppi)
    return cfg
