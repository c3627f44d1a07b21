"""Analysis reports for the CLI: one JSON-ready dict plus a text rendering."""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .free import norm_bounds, norm_upper
from .metric import PointedMetricSpace, ValidationReport
from .operator import WeightedLipOperator, apply, operator_norm
from .problem import complex_pair
from .spectral import (
    eigenvector_for,
    discrete_predicates,
    gelfand_sequence,
    oracle_compare,
    point_spectrum,
)

RESIDUAL_TOL = 1e-8
DUALITY_RTOL = 1e-9


def eigen_entry(z, **extra) -> dict:
    z = complex(z)
    arg = math.atan2(z.imag, z.real) % (2 * math.pi) if z != 0 else 0.0
    return {"value": complex_pair(z), "modulus": abs(z), "argument": arg, **extra}


def validation_dict(space: PointedMetricSpace, rep: ValidationReport) -> dict:
    return {
        "valid": rep.ok,
        "violations": [
            {"axiom": v.axiom, "witness": [space.label(i) for i in v.witness]} for v in rep.violations
        ],
    }


def _check(passed: bool, witness=None, **info) -> dict:
    d = {"passed": bool(passed), **info}
    if not passed:
        d["witness"] = witness
    return d


def _eigenvector_checks(op: WeightedLipOperator, ps) -> tuple:
    """Residual/support check and norm-duality check over the cycle eigenvectors."""
    sp = op.space
    worst_res, res_wit = 0.0, None
    support_ok, supp_wit = True, None
    worst_gap, gap_wit = 0.0, None
    for e in ps.cycle_eigenvalues:
        cyc = ps.decomposition.cycles[e.cycle]
        g = eigenvector_for(op, cyc, e.value)
        img = apply(op, g)
        supp = {i for i, _ in g}
        if not supp <= set(cyc.points) or not {i for i, _ in img} <= supp:
            support_ok = False
            supp_wit = supp_wit or {"eigenvalue": complex_pair(e.value), "support": sorted(sp.label(i) for i in supp)}
        cert = norm_bounds(g)
        res = img - g * e.value
        up, _ = norm_upper(res) if len(res) else (0.0, None)
        rel = up / cert.lower if cert.lower > 0 else math.inf
        if rel > worst_res:
            worst_res, res_wit = rel, complex_pair(e.value)
        if g.is_real:
            gap = abs(cert.upper - cert.lower) / cert.upper
            bad = gap > DUALITY_RTOL
        else:
            gap = (cert.upper - cert.lower) / cert.upper
            bad = cert.lower > cert.upper
        if gap > worst_gap or (bad and gap_wit is None):
            worst_gap = gap
            if bad:
                gap_wit = {"eigenvalue": complex_pair(e.value), "lower": cert.lower, "upper": cert.upper}
    support = _check(
        support_ok and worst_res <= RESIDUAL_TOL,
        supp_wit or {"eigenvalue": res_wit, "relative_residual": worst_res},
        max_relative_residual=worst_res,
    )
    duality = _check(gap_wit is None, gap_wit, max_relative_gap=worst_gap)
    return support, duality


def analyze(op: WeightedLipOperator, validation: ValidationReport, oracle: bool = True,
            gelfand: Optional[int] = None) -> dict:
    sp = op.space
    lab = sp.label
    ps = point_spectrum(op)
    c = op.constants
    lo, hi = operator_norm(op)
    out = {
        "validation": validation_dict(sp, validation),
        "boundedness": {
            "A": c.A,
            "B": c.B,
            "A_witness": [lab(i) for i in c.A_witness] if c.A_witness else None,
            "B_witness": [lab(i) for i in c.B_witness] if c.B_witness else None,
        },
        "operator_norm": {"lo": lo, "hi": hi},
        "cycles": [
            {
                "points": [lab(i) for i in cy.points],
                "length": cy.length,
                "weight_product": complex_pair(cy.weight_product),
                "all_weights_nonzero": cy.all_weights_nonzero,
                "contains_base": cy.contains_base,
            }
            for cy in ps.decomposition.cycles
        ],
        "tails": {lab(i): d for i, d in ps.decomposition.tails.items()},
        "point_spectrum": {
            "nonzero": [eigen_entry(e.value, cycle=e.cycle) for e in ps.cycle_eigenvalues],
            "zero_membership": {"value": ps.zero_in_point_spectrum, "reason": ps.zero_reason},
            "roots_of_unity": None if ps.roots_of_unity is None else [complex_pair(z) for z in ps.roots_of_unity],
        },
        "oracle_eigenvalues": None,
    }
    support, duality = _eigenvector_checks(op, ps)
    checks = {
        "localization": {ch.name: _check(ch.passed, ch.witness and [str(x) for x in ch.witness]) for ch in ps.localization},
        "support_preservation": support,
        "duality": duality,
    }
    if oracle:
        orc = oracle_compare(op)
        out["oracle_eigenvalues"] = [eigen_entry(z) for z in orc.oracle_values]
        checks["oracle_match"] = _check(
            orc.matched,
            {"max_distance": orc.max_distance, "zero_oracle_count": orc.zero_oracle_count,
             "zero_algebraic_multiplicity": orc.zero_algebraic},
            max_distance=orc.max_distance,
        )
    else:
        checks["oracle_match"] = {"passed": None, "skipped": True}
    out["checks"] = checks
    out["discrete_predicates"] = discrete_predicates(op).to_dict()
    if gelfand:
        out["gelfand"] = gelfand_sequence(op, gelfand).to_dict()
    out["caveats"] = list(ps.caveats)
    return _clean(out)


def _clean(x):
    """Make the report strictly JSON-serialisable (numpy scalars, inf)."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return 0.0 if x == 0 else x
    return x


def _fmt_complex(pair) -> str:
    re, im = pair
    return f"{re:.10g}{'+' if im >= 0 else '-'}{abs(im):.10g}i"


def render_text(rep: dict) -> str:
    lines = []
    v = rep["validation"]
    lines.append(f"metric: {'valid' if v['valid'] else 'INVALID'}")
    b = rep["boundedness"]
    lines.append(f"boundedness: A = {b['A']:.10g}, B = {b['B']:.10g}")
    nrm = rep["operator_norm"]
    lines.append(f"operator norm in [{nrm['lo']:.10g}, {nrm['hi']:.10g}]")
    lines.append("cycles:")
    for c in rep["cycles"]:
        tag = " (base, excluded)" if c["contains_base"] else ""
        lines.append(f"  {' -> '.join(c['points'])}  length {c['length']}  product {_fmt_complex(c['weight_product'])}{tag}")
    ps = rep["point_spectrum"]
    lines.append("nonzero point spectrum (modulus descending):")
    entries = sorted(ps["nonzero"], key=lambda e: (-round(e["modulus"], 12), round(e["argument"], 12)))
    for e in entries:
        lines.append(f"  {_fmt_complex(e['value'])}  |λ| = {e['modulus']:.10g}")
    if not entries:
        lines.append("  (empty)")
    z = ps["zero_membership"]
    lines.append(f"0 in point spectrum: {'yes' if z['value'] else 'no'} ({z['reason']})")
    if rep["oracle_eigenvalues"] is not None:
        lines.append(f"dense eigenvalues: {len(rep['oracle_eigenvalues'])}")
    lines.append("checks:")
    for name, ch in rep["checks"].items():
        if name == "localization":
            for sub, c in ch.items():
                lines.append(f"  localization/{sub}: {'pass' if c['passed'] else 'FAIL'}")
        elif ch.get("skipped"):
            lines.append(f"  {name}: skipped")
        else:
            lines.append(f"  {name}: {'pass' if ch['passed'] else 'FAIL'}")
    dp = rep["discrete_predicates"]
    lines.append(
        f"surjective: {dp['surjective']} (c = {dp['surjectivity_constant']:.10g}), isomorphism: {dp['isomorphism']}"
    )
    if "gelfand" in rep:
        g = rep["gelfand"]
        lines.append(f"spectral radius r = {g['spectral_radius']:.10g}")
        for t in g["terms"]:
            lines.append(f"  n = {t['n']}: ||T^n||^(1/n) <= {t['term']:.10g}")
    for c in rep["caveats"]:
        lines.append(f"caveat: {c}")
    return "\n".join(lines) + "\n"
