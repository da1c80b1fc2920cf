"""Problem presets and JSON loading for the CLI."""

from __future__ import annotations

import json

import numpy as np

from .errors import ConfigurationError
from .metric import Metric
from .operators import (AffineCocoerciveOp, BoxNormalConeOp, CocoerciveOp,
                        LinearMonotoneOp, MonotoneOp, ProblemInstance,
                        ZeroCocoerciveOp, ZeroMonotoneOp)

__all__ = ["skew2d", "monotone_from_json", "cocoercive_from_json",
           "problem_from_json", "load_problem"]

SKEW2D_MATRIX = np.array([[0.0, -1.0], [1.0, 0.0]])


def skew2d() -> ProblemInstance:
    """Rotation-field inclusion in the plane: A(x, y) = (-y, x), C = 0.

    The unique zero is the origin; it is the optimality system of the scalar
    minimax problem max_y min_x x*y.
    """
    return ProblemInstance(A=LinearMonotoneOp(SKEW2D_MATRIX),
                           C=ZeroCocoerciveOp(2),
                           M=Metric.identity(2),
                           solution=np.zeros(2),
                           name="skew2d")


def monotone_from_json(obj) -> MonotoneOp:
    kind = obj.get("type")
    if kind == "skew2d":
        return LinearMonotoneOp(SKEW2D_MATRIX)
    if kind == "linear":
        return LinearMonotoneOp(np.asarray(obj["G"], dtype=float))
    if kind == "zero":
        return ZeroMonotoneOp(int(obj["dim"]))
    if kind == "box":
        return BoxNormalConeOp(obj["lo"], obj["hi"])
    raise ConfigurationError(f"unknown monotone operator type {kind!r}")


def cocoercive_from_json(obj) -> CocoerciveOp:
    kind = obj.get("type")
    if kind == "zero":
        return ZeroCocoerciveOp(int(obj["dim"]))
    if kind == "quad_grad":
        return AffineCocoerciveOp(np.asarray(obj["Q"], dtype=float),
                                  obj.get("q"), beta=float(obj["beta"]))
    raise ConfigurationError(f"unknown cocoercive operator type {kind!r}")


def problem_from_json(cfg: dict) -> ProblemInstance:
    """{"A": {...}, "C": {...}, "M": [[...]]?, "solution": [...]?, "name": str?}."""
    if "A" not in cfg or "C" not in cfg:
        raise ConfigurationError("problem config needs both 'A' and 'C' entries")
    A = monotone_from_json(cfg["A"])
    C = cocoercive_from_json(cfg["C"])
    M = Metric.from_json_obj(cfg["M"]) if "M" in cfg else Metric.identity(A.dim)
    return ProblemInstance(A=A, C=C, M=M, solution=cfg.get("solution"),
                           name=cfg.get("name", "json-problem"))


def load_problem(spec: str) -> ProblemInstance:
    """'skew2d' or '@path/to/problem.json'."""
    if spec == "skew2d":
        return skew2d()
    if spec.startswith("@"):
        with open(spec[1:]) as fh:
            return problem_from_json(json.load(fh))
    raise ConfigurationError(f"unknown problem spec {spec!r} (use 'skew2d' or '@file.json')")
