"""Combinatorial-topological existence conditions for constant curvature.

Every condition compares a subset functional against the same right-hand
side, the link-boundary sum

    rhs(I) = -sum_{(e,v) in Lk(I)} (pi - phi(e)) + 2 pi chi(F_I),

over all nonempty proper vertex subsets I. Enumeration is exponential and is
capped; larger complexes must supply candidate subsets explicitly.
"""

from dataclasses import dataclass

import numpy as np

from .mesh import (SUBSET_ENUMERATION_CAP, check_subset, euler_characteristic,
                   induced_euler, link_pairs, proper_subsets)
from .packing2d import check_metric, total_measure

BOUNDARY_MARGIN = 1e-9


@dataclass
class SubsetRecord:
    subset: tuple
    lhs: float
    rhs: float

    @property
    def margin(self):
        return self.lhs - self.rhs

    @property
    def boundary(self):
        """Within roundoff of equality; flagged instead of silently passed."""
        return abs(self.margin) < BOUNDARY_MARGIN

    @property
    def satisfied(self):
        return self.margin > 0 and not self.boundary


@dataclass
class AdmissibilityReport:
    condition: str
    records: list
    exhaustive: bool
    extra_failures: list | None = None  # e.g. Gauss-Bonnet plane violation

    @property
    def satisfied(self):
        if self.extra_failures:
            return False
        return all(rec.satisfied for rec in self.records)

    @property
    def worst(self):
        """Record with the smallest margin (the closest to failing)."""
        return min(self.records, key=lambda rec: rec.margin)

    def witnesses(self):
        return [rec for rec in self.records if not rec.satisfied]

    def first_witness(self):
        """First failing subset in (size, lex) order, or None."""
        for rec in self.records:
            if not rec.satisfied:
                return rec
        return None

    def to_dict(self, full=False):
        doc = {
            "condition": self.condition,
            "satisfied": bool(self.satisfied),
            "exhaustive": self.exhaustive,
            "subsets_checked": len(self.records),
            "worst_subset": list(self.worst.subset),
            "worst_margin": float(self.worst.margin),
            "boundary_cases": sum(1 for rec in self.records if rec.boundary),
        }
        first = self.first_witness()
        if first is not None:
            doc["witness"] = list(first.subset)
            doc["witness_margin"] = float(first.margin)
        if self.extra_failures:
            doc["failures"] = list(self.extra_failures)
        if full:
            doc["records"] = [{"subset": list(rec.subset), "lhs": rec.lhs,
                               "rhs": rec.rhs, "margin": rec.margin,
                               "satisfied": rec.satisfied}
                              for rec in self.records]
        return doc


def subset_rhs(c, subset):
    """The link-boundary sum for one subset."""
    I = check_subset(c, subset)
    phi = {e: w for e, w in zip(c.edges, c.weights)}
    s = sum(np.pi - phi[e] for e, _ in link_pairs(c, I))
    return float(-s + 2.0 * np.pi * induced_euler(c, I))


def _subsets(c, subsets, cap):
    if subsets is not None:
        return [check_subset(c, s) for s in subsets], False
    return list(proper_subsets(c.vertex_count, cap)), True


def _report(c, condition, lhs_fn, subsets, cap):
    c.require_valid()
    sets, exhaustive = _subsets(c, subsets, cap)
    records = []
    for I in sets:
        key = tuple(sorted(I))
        records.append(SubsetRecord(key, lhs_fn(I), subset_rhs(c, I)))
    records.sort(key=lambda rec: (len(rec.subset), rec.subset))
    return AdmissibilityReport(condition, records, exhaustive)


def thurston_condition(c, subsets=None, cap=SUBSET_ENUMERATION_CAP):
    """Existence criterion for constant classical curvature:
    2 pi chi(M) |I| / |V| > rhs(I) for every nonempty proper I."""
    gb = 2.0 * np.pi * euler_characteristic(c)
    n = c.vertex_count
    return _report(c, "thurston", lambda I: gb * len(I) / n, subsets, cap)


def y_membership(c, x, subsets=None, cap=SUBSET_ENUMERATION_CAP,
                 gb_tol=1e-9):
    """Membership of a vertex function in the admissible-curvature space:
    the Gauss-Bonnet plane plus every subset half-space."""
    x = np.asarray(x, dtype=float)
    gb = 2.0 * np.pi * euler_characteristic(c)
    report = _report(c, "y_membership",
                     lambda I: float(sum(x[v] for v in I)), subsets, cap)
    if abs(x.sum() - gb) > gb_tol:
        report.extra_failures = [
            f"Gauss-Bonnet plane: sum(x) = {x.sum():.12g} != {gb:.12g}"]
    return report


def metric_condition(c, r, alpha=2.0, subsets=None,
                     cap=SUBSET_ENUMERATION_CAP):
    """Metric-dependent condition for constant alpha-curvature:
    2 pi chi(M) sum_{i in I} r_i^alpha / ||r||_a^a > rhs(I)."""
    r = check_metric(c, r)
    gb = 2.0 * np.pi * euler_characteristic(c)
    nrm = total_measure(r, alpha)
    ra = r ** alpha

    def lhs(I):
        return float(gb * sum(ra[v] for v in I) / nrm)

    return _report(c, f"metric_alpha_{alpha:g}", lhs, subsets, cap)


def sphere_condition(c, subsets=None, cap=SUBSET_ENUMERATION_CAP):
    """rhs(I) < 0 for every nonempty proper I (hypothesis of the
    nonnegative-curvature existence theorems)."""
    return _report(c, "sphere", lambda I: 0.0, subsets, cap)


def rhs_table(c, subsets=None, cap=SUBSET_ENUMERATION_CAP):
    """Precomputed right-hand sides for bulk membership checks.

    Returns (subsets, rhs, indicator) where indicator is a boolean
    (n_subsets, N) matrix; x lies in the admissible-curvature space iff
    indicator @ x > rhs holds componentwise (plus the Gauss-Bonnet plane).
    The rhs values do not depend on any metric, so this amortizes the
    expensive part across many curvature vectors.
    """
    c.require_valid()
    sets, _ = _subsets(c, subsets, cap)
    sets = [tuple(sorted(I)) for I in sets]
    rhs = np.array([subset_rhs(c, I) for I in sets])
    ind = np.zeros((len(sets), c.vertex_count), dtype=bool)
    for k, I in enumerate(sets):
        ind[k, list(I)] = True
    return sets, rhs, ind
