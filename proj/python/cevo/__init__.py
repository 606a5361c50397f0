"""Python interface to the constrained DE instance toolkit."""

import json

from . import _core

__all__ = [
    "evaluate_objective",
    "violation",
    "epsilon_compare",
    "generate",
    "solve",
    "evolve",
    "features",
    "raster",
    "run_experiment",
]


def _dump(obj):
    return obj if isinstance(obj, str) else json.dumps(obj)


def evaluate_objective(kind, x):
    return _core.evaluate_objective(kind, list(x))


def violation(instance, x):
    return _core.violation(_dump(instance), list(x))


def epsilon_compare(lhs, rhs, eps):
    """lhs and rhs are (f, phi) pairs; returns "less", "equal" or "greater"."""
    return _core.epsilon_compare(lhs[0], lhs[1], rhs[0], rhs[1], eps)


def generate(dimension, template, objective="sphere", seed=1):
    return json.loads(_core.generate(dimension, template, objective, seed))


def solve(instance, config=None, seed=1):
    return json.loads(_core.solve(_dump(instance), _dump(config) if config else "", seed))


def evolve(dimension, template, objective="sphere", direction="easy", plan=None, seed=1):
    """Returns (instance, metadata)."""
    inst, meta = _core.evolve(dimension, template, objective, direction, _dump(plan) if plan else "", seed)
    return json.loads(inst), json.loads(meta)


def features(instance, samples=1_000_000, seed=1, instance_id=""):
    """Returns a dict mapping CSV column names to cell strings."""
    header, row = _core.features(_dump(instance), samples, seed, instance_id)
    return dict(zip(header.split(","), row.split(",")))


def raster(instance, resolution=100):
    """Returns the grid as a list of rows of 0/1 integers."""
    text = _core.raster(_dump(instance), resolution)
    return [[int(c) for c in line.split(",")] for line in text.splitlines()]


def run_experiment(plan):
    return _core.run_experiment(_dump(plan))
