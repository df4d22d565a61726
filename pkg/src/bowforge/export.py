"""Bow-complex exporter: the circle picture of a bow datum.

The circle has perimeter ell and marked points lambda_1..lambda_n plus k
NUT points synthesized evenly spaced in the wrap-around interval
(lambda_n - ell, lambda_1).  Intervals carry constant endomorphisms: beta_i
on [lambda_i, lambda_{i+1}], then the NUT chain endomorphisms on the
subdivided wrap-around.
"""

from __future__ import annotations

from .bowdata import BowDatum
from .bowfile import FORMAT_BOWCOMPLEX, VERSION, complex_to_doc, matrix_to_doc


def _rank_change(lo: int, hi: int) -> str:
    if hi > lo:
        return "increase"
    if hi < lo:
        return "decrease"
    return "fundamental"  # equal ranks: the boundary pair acts as fundamental datum


def export_bow_complex(b: BowDatum) -> dict:
    """Structured document describing the bow complex of a datum."""
    t = b.topo
    n, k = t.n, t.k
    d, dn = b.dims.d, b.dims.dn
    lam = list(t.lam)
    start = lam[-1] - t.ell
    step = (lam[0] - start) / (k + 1)
    p_points = [start + (j + 1) * step for j in range(k)]

    intervals = []
    for i in range(1, n):
        intervals.append(
            {
                "start": lam[i - 1],
                "end": lam[i],
                "segment": "lambda",
                "rank": d[i],
                "endomorphism": matrix_to_doc(b.beta[i]),
            }
        )
    bounds = [start] + p_points + [lam[0]]
    for j in range(k + 1):
        intervals.append(
            {
                "start": bounds[j],
                "end": bounds[j + 1],
                "segment": "p",
                "rank": dn[j],
                "endomorphism": matrix_to_doc(b.betaN[j]),
            }
        )

    lambda_points = []
    for j in range(1, n + 1):
        lambda_points.append(
            {
                "position": lam[j - 1],
                "left_rank": d[j - 1],
                "right_rank": d[j],
                "rank_change": _rank_change(d[j - 1], d[j]),
                "A": matrix_to_doc(b.A[j - 1]),
                "alpha": matrix_to_doc(b.alpha[j - 1]),
                "gamma": matrix_to_doc(b.gamma[j - 1]),
            }
        )

    nut_points = []
    for j in range(1, k + 1):
        nut_points.append(
            {
                "position": p_points[j - 1],
                "z": complex_to_doc(t.z[j - 1]),
                "M_xi": matrix_to_doc(b.Mxi[j - 1]),
                "M_psi": matrix_to_doc(b.Mpsi[j - 1]),
            }
        )

    return {
        "format": FORMAT_BOWCOMPLEX,
        "version": VERSION,
        "circle": {
            "perimeter": float(t.ell),
            "lambda_points": lam,
            "p_points": p_points,
        },
        "ranks": {"d": list(d), "dn": list(dn)},
        "intervals": intervals,
        "lambda_points": lambda_points,
        "p_points": nut_points,
    }
