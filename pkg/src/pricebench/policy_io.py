"""Policy and value-table files.

JSON with a layout header describing the per-epoch state indexing
(inventory caps, revenue-bin parameters) so a loaded table can be replayed
against a matching environment configuration.  Deterministic policies store
one joint action per state; softmax policies store preference rows.
"""

from __future__ import annotations

import json
from typing import Union

import numpy as np

from .dp_solver import PolicyTable, StateSpace, ValueFunction, state_space
from .environments import EnvConfig
from .rl_baselines import SoftmaxPolicy

__all__ = ["save_policy", "load_policy", "save_value_function", "load_value_function"]

_POLICY_FORMAT = "pricing-policy-v1"
_VALUE_FORMAT = "pricing-value-v1"


def _layout_header(space: StateSpace) -> dict:
    return {
        "order": "row-major: inventories per typology, then revenue bin",
        "horizon": space.horizon,
        "inventory_caps": list(space.inventory_caps),
        "bin_width": space.bin_width,
        "r_max": space.r_max,
        "tau": space.tau,
    }


def _space_from_header(header: dict) -> StateSpace:
    return StateSpace(
        horizon=int(header["horizon"]),
        inventory_caps=tuple(int(c) for c in header["inventory_caps"]),
        bin_width=header["bin_width"],
        r_max=header["r_max"],
        tau=header["tau"],
    )


def save_policy(
    policy: Union[PolicyTable, SoftmaxPolicy],
    config: EnvConfig,
    path,
) -> None:
    space = state_space(config)
    payload = {
        "format": _POLICY_FORMAT,
        "env_id": config.env_id,
        "state_layout": _layout_header(space),
    }
    if isinstance(policy, PolicyTable):
        payload["kind"] = "deterministic"
        payload["actions"] = [t.tolist() for t in policy.actions]
    elif isinstance(policy, SoftmaxPolicy):
        payload["kind"] = "softmax"
        payload["preferences"] = [t.tolist() for t in policy.preferences]
    else:
        raise TypeError(f"cannot serialize policy of type {type(policy).__name__}")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_policy(path) -> Union[PolicyTable, SoftmaxPolicy]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != _POLICY_FORMAT:
        raise ValueError(f"not a policy file: {path}")
    space = _space_from_header(payload["state_layout"])
    if payload["kind"] == "deterministic":
        return PolicyTable([np.asarray(t, dtype=np.int64) for t in payload["actions"]])
    if payload["kind"] == "softmax":
        return SoftmaxPolicy(space, [np.asarray(t, dtype=float) for t in payload["preferences"]])
    raise ValueError(f"unknown policy kind: {payload['kind']!r}")


def save_value_function(values: ValueFunction, config: EnvConfig, path) -> None:
    space = state_space(config)
    payload = {
        "format": _VALUE_FORMAT,
        "env_id": config.env_id,
        "state_layout": _layout_header(space),
        "values": [v.tolist() for v in values.values],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_value_function(path) -> ValueFunction:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("format") != _VALUE_FORMAT:
        raise ValueError(f"not a value file: {path}")
    return ValueFunction([np.asarray(v, dtype=float) for v in payload["values"]])
