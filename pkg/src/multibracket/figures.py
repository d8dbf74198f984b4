"""Canned sweeps that regenerate the data behind each figure.

Each preset returns a list of :class:`Panel` objects; the CLI writes one CSV
per panel.  ``fast`` presets use grids that are subsets of the full ones so
exact argmaxes can be compared between the two.
"""

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import bitstring as bs
from . import picksix as ps
from . import tournament as tn
from .optimizer import SurfacePoint, argmax, surface_csv


@dataclass
class Panel:
    name: str                      # file stem
    columns: list                  # axis columns
    value: str                     # objective column name
    points: list                   # SurfacePoint list
    with_error: bool = False
    group: str = None              # axis to report per-group argmaxes over
    text: str = None               # pre-rendered CSV for non-surface panels
    meta: dict = field(default_factory=dict)

    def csv(self):
        if self.text is not None:
            return self.text
        return surface_csv(self.points, self.columns, self.value,
                           "stderr" if self.with_error else None)

    def summary(self):
        out = {"file": f"{self.name}.csv", **self.meta}
        if not self.points:
            return out
        best = argmax(self.points)
        out["best"] = {"params": best.params, self.value: best.objective}
        if self.group:
            groups = {}
            for p in self.points:
                groups.setdefault(p.params[self.group], []).append(p)
            out["best_by_" + self.group] = [
                {"params": argmax(pts).params, self.value: argmax(pts).objective}
                for pts in groups.values()
            ]
        return out


def grid(start, stop, step):
    """Inclusive arithmetic grid rounded to 10 decimals."""
    count = int(round((stop - start) / step)) + 1
    return [round(start + i * step, 10) for i in range(count)]


def fig1(fast=False, seed=0):
    ps_ = [0.5, 0.75, 1.0] if fast else grid(0.5, 1.0, 0.05)
    qs = grid(0.5, 1.0, 0.1) if fast else grid(0.5, 1.0, 0.05)
    ns = [1, 10, 100, 10000]
    vals = {(p, q): bs.expected_max_scores(p, q, ns) for p in ps_ for q in qs}
    return [Panel(f"fig1_n{n}", ["p", "q"], "emax",
                  [SurfacePoint({"p": p, "q": q}, float(vals[p, q][i])) for p in ps_ for q in qs],
                  group="p", meta={"n": n})
            for i, n in enumerate(ns)]


def fig2(fast=False, seed=0, k=100, p=0.75):
    qs = grid(0.5, 1.0, 0.1 if fast else 0.05)
    ns = [1, 10, 100]
    vals = {(q, r): bs.win_probabilities(p, q, r, ns, [k])[:, 0] for q in qs for r in qs}
    return [Panel(f"fig2_n{n}", ["q", "r"], "winprob",
                  [SurfacePoint({"q": q, "r": r}, float(vals[q, r][i])) for q in qs for r in qs],
                  group="r", meta={"n": n, "k": k, "p": p})
            for i, n in enumerate(ns)]


def fig3(fast=False, seed=0, p=0.75):
    qs = [0.6, 0.8, 1.0] if fast else grid(0.5, 1.0, 0.1)
    parts = [1, 3] if fast else [1, 2, 3, 4, 5]
    ns = [1, 10, 100]
    w = bs.ScoringWeights.espn(6)
    panels = []
    for E in parts:
        pts = {n: [] for n in ns}
        for qe in qs:
            for ql in qs:
                prof = bs.profile_from_partition(qe, ql, bs.RoundPartition(E), 6)
                v = bs.expected_max_scores(p, prof, ns, w=w)
                for i, n in enumerate(ns):
                    pts[n].append(SurfacePoint({"q_early": qe, "q_late": ql}, float(v[i])))
        for n in ns:
            panels.append(Panel(f"fig3_E{E}_n{n}", ["q_early", "q_late"], "emax", pts[n],
                                meta={"partition": E, "n": n, "p": p, "weights": "espn"}))
    return panels


def fig4(fast=False, seed=0, p=0.75, n=100, k=100):
    qs = [0.7, 1.0] if fast else grid(0.6, 1.0, 0.1)
    w = bs.ScoringWeights.espn(6)
    panels = []
    for tag, E in (("a", 3), ("b", 1)):
        part = bs.RoundPartition(E)
        pts = []
        for ql in qs:
            for rl in qs:
                for qe in qs:
                    for re_ in qs:
                        q = bs.profile_from_partition(qe, ql, part, 6)
                        r = bs.profile_from_partition(re_, rl, part, 6)
                        v = bs.win_probability(p, q, r, n, k, w=w)
                        pts.append(SurfacePoint(
                            {"q_late": ql, "r_late": rl, "q_early": qe, "r_early": re_}, v))
        panels.append(Panel(f"fig4{tag}", ["q_late", "r_late", "q_early", "r_early"], "winprob",
                            pts, meta={"partition": E, "n": n, "k": k, "p": p}))
    return panels


def fig7(fast=False, seed=0, race=6):
    card = ps.RaceCard.belmont()
    lams = [0.25, 1, 4] if fast else [0.1, 0.25, 0.5, 1, 2, 4, 10]
    phis = [0.125, 0.375, 0.625] if fast else [0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0]
    buf = io.StringIO(newline="")
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(["lambda", "phi", "horse", "prob"])
    for phi in phis:
        for lam in lams:
            Q = ps.tilt(card, ps.TiltParams(lam, phi)).races[race - 1]
            for i, q in enumerate(Q, 1):
                out.writerow([repr(float(lam)), repr(float(phi)), i, repr(float(q))])
    return [Panel("fig7", [], "prob", [], text=buf.getvalue(), meta={"race": race})]


TILT_LAMBDAS = [0.25, 0.5, 1, 1.5, 2, 3, 4]
TILT_PHIS = [0.125, 0.25, 0.375, 0.5, 0.75]


def fig8(fast=False, seed=0, k=25000, carryover=500000.0, take=0.05):
    card = ps.RaceCard.belmont()
    opps = [0.5, 1, 2] if fast else [0.25, 0.5, 0.75, 1, 1.5, 2, 3, 4]
    lams = TILT_LAMBDAS if fast else [0.1, 0.25, 0.5, 0.75, 1, 1.5, 2, 3, 4, 6]
    phis = TILT_PHIS if fast else [0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0]
    pts = []
    for lo in opps:
        for n in (100, 1000, 10000):
            econ = ps.PoolEconomics(carryover, take, n, k)
            best, value, _ = ps.optimize_tilt(card, econ, lo, lams, phis)
            p = SurfacePoint({"lambda_opp": lo, "n": n}, value)
            p.params.update({"lambda": best.lam, "phi": best.phi})
            pts.append(p)
    return [Panel("fig8", ["lambda_opp", "n", "lambda", "phi"], "profit", pts,
                  group="lambda_opp", meta={"k": k, "carryover": carryover, "take": take})]


def fig9(fast=False, seed=2021, k=10000):
    field_ = tn.Field.ncaa_2021()
    P = tn.elo_to_winmatrix(field_)
    R = tn.chalky_opponents(field_)
    lams = grid(0.0, 1.0, 0.1)
    ns = [10, 100, 1000]
    B1, B2 = (25, 10) if fast else (250, 100)
    res = tn.mc_sweep(P, [tn.interpolated_strategy(P, l) for l in lams], field_, ns, B1, B2,
                      seed, R=R, k=k)
    meta = {"B1": B1, "B2": B2, "k": k, "seed": seed}
    a = [SurfacePoint({"lambda": l, "n": n}, float(res.emax[i, j]), float(res.emax_se[i, j]))
         for j, n in enumerate(ns) for i, l in enumerate(lams)]
    b = [SurfacePoint({"lambda": l, "n": n}, float(res.winprob[i, j]), float(res.winprob_se[i, j]))
         for j, n in enumerate(ns) for i, l in enumerate(lams)]
    return [Panel("fig9a", ["lambda", "n"], "emax", a, with_error=True, group="n", meta=meta),
            Panel("fig9b", ["lambda", "n"], "winprob", b, with_error=True, group="n", meta=meta)]


def figA(fast=False, seed=0, p=0.75):
    qs = grid(0.5, 1.0, 0.1 if fast else 0.05)
    ns = [1, 10, 100]
    ks = [10, 1000] if fast else [10, 100, 1000, 10000]
    vals = {(q, r): bs.win_probabilities(p, q, r, ns, ks) for q in qs for r in qs}
    panels = []
    for j, k in enumerate(ks):
        pts = [SurfacePoint({"n": n, "q": q, "r": r}, float(vals[q, r][i, j]))
               for i, n in enumerate(ns) for q in qs for r in qs]
        panels.append(Panel(f"figA_k{k}", ["n", "q", "r"], "winprob", pts,
                            meta={"k": k, "p": p}))
    return panels


PRESETS = {
    "fig1": fig1, "fig2": fig2, "fig3": fig3, "fig4": fig4,
    "fig7": fig7, "fig8": fig8, "fig9": fig9, "figA": figA,
}
