"""JSON problem files: parsing, validation and serialisation.

Schema::

    {
      "points": ["0", "a", "b"],          # unique ids
      "base": "0",
      "metric": {"kind": "matrix", "d": [[...]]}
              | {"kind": "sum_radial", "rho": [...]}   # one radius per non-base point, listed order
              | {"kind": "geometric", "lambda_abs": 2.0, "n": 4}
              | {"kind": "shift", "n": 5},
      "map": {"a": "b", ...},               # total
      "weight": {"a": [re, im], ...}        # optional, default [1, 0]
    }

For the generated kinds ``points`` may be omitted; ids are then "0".."n".
A missing base weight defaults to 0 when f moves the base, else 1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, ProblemFileError
from .metric import PointedMetricSpace, SelfMap, Weight, geometric, make_space, shift, sum_radial

KINDS = ("matrix", "sum_radial", "geometric", "shift")


@dataclass
class Problem:
    space: PointedMetricSpace
    f: SelfMap
    w: Weight
    source: dict


def _complex(v, where):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in v
    ):
        return complex(v[0], v[1])
    raise ProblemFileError(f"{where}: expected [re, im], got {v!r}")


def _generated_radii(metric: dict) -> np.ndarray:
    kind = metric["kind"]
    try:
        if kind == "sum_radial":
            sp = sum_radial(metric["rho"])
        elif kind == "geometric":
            sp = geometric(float(metric["lambda_abs"]), int(metric["n"]))
        else:
            sp = shift(int(metric["n"]))
    except KeyError as exc:
        raise ProblemFileError(f"metric of kind {kind!r} lacks field {exc.args[0]!r}") from None
    except (ParameterError, TypeError, ValueError) as exc:
        raise ProblemFileError(f"bad {kind} parameters: {exc}") from None
    return sp.radii[1:]


def parse_problem(data: dict) -> Problem:
    """Schema checks only; metric axioms and admissibility are left to the caller."""
    if not isinstance(data, dict):
        raise ProblemFileError("problem file must hold a JSON object")
    metric = data.get("metric")
    if not isinstance(metric, dict) or metric.get("kind") not in KINDS:
        raise ProblemFileError(f"metric.kind must be one of {', '.join(KINDS)}")
    kind = metric["kind"]

    if kind == "matrix":
        d = metric.get("d")
        try:
            d = np.array(d, dtype=float)
        except (TypeError, ValueError):
            raise ProblemFileError("metric.d must be a numeric 2-D array") from None
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] < 1:
            raise ProblemFileError("metric.d must be a square 2-D array")
        size = d.shape[0]
    else:
        radii = _generated_radii(metric)
        size = radii.size + 1

    points = data.get("points")
    if points is None:
        if kind == "matrix":
            raise ProblemFileError("points are required for a matrix metric")
        points = [str(i) for i in range(size)]
    if not isinstance(points, list) or not all(isinstance(p, str) for p in points):
        raise ProblemFileError("points must be a list of string ids")
    if len(set(points)) != len(points):
        raise ProblemFileError("point ids must be unique")
    if len(points) != size:
        raise ProblemFileError(f"{len(points)} points but the metric describes {size}")
    base = data.get("base", points[0])
    if base not in points:
        raise ProblemFileError(f"base {base!r} is not a point")
    b = points.index(base)

    if kind != "matrix":
        r = np.zeros(size)
        r[[i for i in range(size) if i != b]] = radii
        d = r[:, None] + r[None, :]
        np.fill_diagonal(d, 0.0)
        d[b, :] = r
        d[:, b] = r
    descriptor = dict(metric) if kind != "matrix" else {"kind": "explicit"}
    space = PointedMetricSpace(tuple(points), b, d, descriptor)

    fmap = data.get("map")
    if not isinstance(fmap, dict):
        raise ProblemFileError("map must be an object id -> id")
    missing = [p for p in points if p not in fmap]
    if missing:
        raise ProblemFileError(f"map is not total: no image for {missing[:5]}")
    extra = [k for k in fmap if k not in points]
    if extra:
        raise ProblemFileError(f"map has unknown ids {extra[:5]}")
    bad = [v for v in fmap.values() if v not in points]
    if bad:
        raise ProblemFileError(f"map images {bad[:5]} are not points")
    img = np.array([points.index(fmap[p]) for p in points], dtype=np.intp)

    wraw = data.get("weight", {})
    if not isinstance(wraw, dict):
        raise ProblemFileError("weight must be an object id -> [re, im]")
    extra = [k for k in wraw if k not in points]
    if extra:
        raise ProblemFileError(f"weight has unknown ids {extra[:5]}")
    w = np.ones(size, dtype=complex)
    if base not in wraw and img[b] != b:
        w[b] = 0
    for k, v in wraw.items():
        w[points.index(k)] = _complex(v, f"weight[{k!r}]")
    if not np.all(np.isfinite(w)):
        raise ProblemFileError("weights must be finite")
    return Problem(space, SelfMap(img), Weight(w), data)


def load_problem(path) -> Problem:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc.strerror}") from None
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ProblemFileError(f"{path} is not valid JSON: {exc}") from None
    return parse_problem(data)


def complex_pair(z) -> list:
    z = complex(z)
    return [_num(z.real), _num(z.imag)]


def _num(x: float) -> float:
    x = float(x)
    return 0.0 if x == 0 else x  # no "-0.0" in reports


def problem_dict(space: PointedMetricSpace, f, w) -> dict:
    """Serialise (space, f, w) into the problem-file schema."""
    img = f.image if isinstance(f, SelfMap) else np.asarray(f)
    wv = w.values if isinstance(w, Weight) else np.asarray(w, dtype=complex)
    pts = list(space.points)
    desc = dict(space.descriptor)
    kind = desc.get("kind")
    if kind in ("sum_radial", "geometric", "shift") and space.base_index == 0:
        metric = desc
    else:
        metric = {"kind": "matrix", "d": space.dist.tolist()}
    return {
        "points": pts,
        "base": pts[space.base_index],
        "metric": metric,
        "map": {p: pts[int(img[i])] for i, p in enumerate(pts)},
        "weight": {p: complex_pair(wv[i]) for i, p in enumerate(pts)},
    }


def problem_from_operator(op) -> dict:
    return problem_dict(op.space, op.f, op.w)


def dump_problem(data: dict, path=None) -> str:
    text = json.dumps(data, indent=2, allow_nan=False) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def generated_problem(kind: str, map_kind: str = "shift", **params) -> dict:
    """Problem dict on a generated space with a canned map (backward shift, identity or zero)."""
    metric = {"kind": kind, **params}
    space = make_space(metric)
    n = space.n
    if map_kind == "shift":
        img = np.maximum(np.arange(n) - 1, 0)
    elif map_kind == "identity":
        img = np.arange(n)
    elif map_kind == "zero":
        img = np.zeros(n, dtype=np.intp)
    else:
        raise ParameterError(f"unknown map kind {map_kind!r}")
    return problem_dict(space, SelfMap(img), Weight.ones(n))

