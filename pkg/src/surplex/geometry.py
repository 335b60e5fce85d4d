"""Convex geometry of finite belief sets in the probability simplex.

Predicates over finite point sets {p_1, ..., p_m} in R^S: affine
dimension, extreme and exposed point classification, supporting
functionals and their faces, and nested exposure chains that certify a
point as eventually exposed.  Every separation question is answered by
a small LP with the functional box-normalized to |z|_inf <= 1, so the
margin tolerances below are scale-meaningful.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from surplex import lp

MARGIN_TOL = 1e-7      # exposedness: separation below this is "not exposed"
FACE_TOL = 1e-9        # membership in the zero set of a supporting functional
RANK_TOL = 1e-9        # singular value cutoff, relative to the largest
PROB_TOL = 1e-12       # probability vector sum tolerance
DISTINCT_TOL = 1e-10   # points closer than this count as duplicates
WITNESS_TOL = 1e-8     # max residual of a convex-combination witness


class EmptySet(ValueError):
    """Operation on an empty belief set."""


class IndexOutOfRange(IndexError):
    """Point index outside the belief set."""


class NotSupporting(ValueError):
    """Functional takes negative values on the set, so it cuts no face."""


class NotExtreme(ValueError):
    """Exposure chains exist only for extreme points."""


class ChainStalled(RuntimeError):
    """A chain stage failed to shrink the face; indicates tolerance trouble."""


def prob_vector(entries) -> np.ndarray:
    """Validate and return a probability vector over the states."""
    p = np.asarray(entries, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("probability vector must be a nonempty 1-d array")
    if not np.isfinite(p).all():
        raise ValueError("non-finite probability entries")
    if p.min() < -PROB_TOL:
        raise ValueError(f"negative probability {p.min()}")
    if abs(p.sum() - 1.0) > PROB_TOL:
        raise ValueError(f"probabilities sum to {p.sum()}, not 1")
    return p


@dataclass
class FiniteBeliefSet:
    """Labeled belief points; rows of `points` live in the simplex.

    Duplicated points model failures of convex independence and are legal
    inputs, but must be flagged explicitly.
    """

    labels: list[str]
    points: np.ndarray
    allow_duplicates: bool = False

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[0] == 0:
            raise EmptySet("belief set needs at least one point")
        if len(self.labels) != self.points.shape[0]:
            raise ValueError("one label per point")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be unique")
        for row in self.points:
            prob_vector(row)
        if not self.allow_duplicates and len(self) > 1:
            for i in range(len(self)):
                d = np.abs(self.points - self.points[i]).max(axis=1)
                d[i] = np.inf
                if d.min() <= DISTINCT_TOL:
                    j = int(np.argmin(d))
                    raise ValueError(
                        f"points {self.labels[i]} and {self.labels[j]} "
                        "coincide; pass allow_duplicates=True to permit this")

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def n_states(self) -> int:
        return self.points.shape[1]

    def check_index(self, i: int) -> int:
        if not 0 <= i < len(self):
            raise IndexOutOfRange(f"index {i} outside 0..{len(self) - 1}")
        return int(i)


@dataclass
class ExposureChain:
    """Nested faces certifying a point as eventually exposed.

    stages[k] = (member_indices, functional): the functional vanishes on
    the stage members and is strictly positive on the previous stage's
    other members.  The last stage is the singleton {target}.  A chain of
    length 1 means the point is exposed outright.
    """

    target: int
    initial_members: np.ndarray
    stages: list[tuple[np.ndarray, np.ndarray]]
    margins: list[float] = field(default_factory=list)
    provenance: str = "discovered"

    @property
    def length(self) -> int:
        return len(self.stages)

    def subsets(self) -> list[np.ndarray]:
        return [self.initial_members] + [s[0] for s in self.stages]

    def functionals(self) -> list[np.ndarray]:
        return [s[1] for s in self.stages]


def affine_dimension(bset: FiniteBeliefSet) -> int:
    """Dimension of the affine hull, via SVD rank of the difference space."""
    pts = bset.points
    if len(bset) == 1:
        return 0
    diffs = pts[1:] - pts[0]
    svals = np.linalg.svd(diffs, compute_uv=False)
    if svals.size == 0 or svals[0] == 0.0:
        return 0
    return int(np.sum(svals > RANK_TOL * svals[0]))


def is_extreme(bset: FiniteBeliefSet, i: int):
    """Whether p_i lies outside the convex hull of the other points.

    Returns (True, None) for extreme points, else (False, mu) where mu is
    a convex-combination witness over all indices (zero at i) with
    sum_j mu_j p_j = p_i up to WITNESS_TOL.
    """
    i = bset.check_index(i)
    m = len(bset)
    if m == 1:
        return True, None
    others = [j for j in range(m) if j != i]
    P = bset.points[others]          # (m-1, S)
    target = bset.points[i]
    cons = [(row, lp.EQ, target[s]) for s, row in enumerate(P.T)]
    cons.append((np.ones(m - 1), lp.EQ, 1.0))
    prog = lp.LinearProgram(np.zeros(m - 1), cons)
    sol = lp.solve(prog)
    if sol.status == lp.INFEASIBLE:
        return True, None
    mu = np.zeros(m)
    mu[others] = np.clip(sol.primal, 0.0, None)
    return False, mu


def _separation_lp(points, zero_idx, floor_idx, margin_idx, box=1.0):
    """max m  s.t. p.z = 0 on zero_idx, p.z >= 0 on floor_idx,
    p.z >= m on margin_idx, |z|_inf <= box.  Returns (z, m)."""
    S = points.shape[1]
    nv = S + 1                        # z then the margin variable
    cons = []
    for j in zero_idx:
        cons.append((np.append(points[j], 0.0), lp.EQ, 0.0))
    for k in floor_idx:
        cons.append((np.append(points[k], 0.0), lp.GE, 0.0))
    for k in margin_idx:
        cons.append((np.append(points[k], -1.0), lp.GE, 0.0))
    obj = np.zeros(nv)
    obj[-1] = 1.0
    bounds = [(-box, box)] * S + [(None, None)]
    prog = lp.LinearProgram(obj, cons, bounds=bounds, sense="max")
    sol = lp.solve(prog)
    if sol.status != lp.OPTIMAL:  # pragma: no cover - box keeps it bounded
        raise RuntimeError(f"separation LP ended {sol.status}")
    return sol.primal[:S], float(sol.primal[-1])


def max_margin_functional(zero_pts, floor_pts, margin_pts, *, box=1.0,
                          direct_limit=80, batch=24, max_rounds=60):
    """Row-generated separation: max m s.t. z = 0 on zero_pts, >= 0 on
    floor_pts, >= m on margin_pts, |z|_inf <= box.

    Large constraint families are handled with an active set: solve on a
    subsample, pull in the worst violated rows, repeat until the returned
    functional is clean on every row.  The reported margin is recomputed
    on the full margin family, so it is exact regardless of the path.
    """
    zero_pts = np.atleast_2d(np.asarray(zero_pts, dtype=float))
    floor_pts = np.atleast_2d(np.asarray(floor_pts, dtype=float)) \
        if len(floor_pts) else np.zeros((0, zero_pts.shape[1]))
    margin_pts = np.atleast_2d(np.asarray(margin_pts, dtype=float))
    n_floor, n_margin = floor_pts.shape[0], margin_pts.shape[0]

    if n_floor + n_margin <= direct_limit:
        z, _ = _separation_lp(np.vstack([zero_pts, floor_pts, margin_pts]),
                              np.arange(len(zero_pts)),
                              len(zero_pts) + np.arange(n_floor),
                              len(zero_pts) + n_floor + np.arange(n_margin),
                              box=box)
        return z, float((margin_pts @ z).min())

    def spread(n, k):
        if n == 0:
            return np.zeros(0, dtype=int)
        return np.unique(np.linspace(0, n - 1, min(n, k)).astype(int))

    act_floor = set(spread(n_floor, 16))
    act_margin = set(spread(n_margin, 16))
    for _ in range(max_rounds):
        fl = np.array(sorted(act_floor), dtype=int)
        mg = np.array(sorted(act_margin), dtype=int)
        pts = np.vstack([zero_pts, floor_pts[fl], margin_pts[mg]])
        z, m_active = _separation_lp(
            pts, np.arange(len(zero_pts)),
            len(zero_pts) + np.arange(fl.size),
            len(zero_pts) + fl.size + np.arange(mg.size), box=box)
        clean = True
        if n_floor:
            vals = floor_pts @ z
            bad = np.flatnonzero(vals < -1e-11)
            bad = bad[np.argsort(vals[bad])][:batch]
            new = set(bad.tolist()) - act_floor
            if new:
                act_floor |= new
                clean = False
        vals_m = margin_pts @ z
        bad = np.flatnonzero(vals_m < m_active - 1e-11 * (1 + abs(m_active)))
        bad = bad[np.argsort(vals_m[bad])][:batch]
        new = set(bad.tolist()) - act_margin
        if new:
            act_margin |= new
            clean = False
        if clean:
            return z, float(vals_m.min())
    raise RuntimeError("separation row generation did not settle")


def expose_set(bset: FiniteBeliefSet, subset, *, margin_indices=None,
               margin_tol: float = MARGIN_TOL):
    """Best functional vanishing on `subset` and positive elsewhere.

    Solves max m s.t. p_j.z = 0 for j in subset, p_k.z >= m for k outside,
    |z|_inf <= 1, and returns (z, m) if the margin clears margin_tol, else
    None.  Zero level on the subset is without loss for probability
    vectors: adding a constant to z shifts every inner product equally.
    When margin_indices is given, only those points carry the margin
    constraint; the rest of the complement is held at >= 0.
    """
    subset = np.asarray(sorted(set(int(j) for j in subset)), dtype=int)
    if subset.size == 0:
        raise ValueError("subset must be nonempty")
    for j in subset:
        bset.check_index(j)
    complement = np.setdiff1d(np.arange(len(bset)), subset)
    if complement.size == 0:
        raise ValueError("subset must be proper")
    if margin_indices is None:
        margin_idx = complement
        floor_idx = np.zeros(0, dtype=int)
    else:
        margin_idx = np.asarray(sorted(set(int(k) for k in margin_indices)),
                                dtype=int)
        floor_idx = np.setdiff1d(complement, margin_idx)
    z, margin = _separation_lp(bset.points, subset, floor_idx, margin_idx)
    if margin <= margin_tol:
        return None
    return z, margin


def face_of(bset: FiniteBeliefSet, z, face_tol: float = FACE_TOL) -> np.ndarray:
    """Indices on the zero level of a supporting functional.

    Requires p.z >= -face_tol on the whole set (z supports at level 0);
    raises NotSupporting otherwise.
    """
    z = np.asarray(z, dtype=float)
    vals = bset.points @ z
    if vals.min() < -face_tol:
        raise NotSupporting(
            f"functional dips to {vals.min():.3e} on the set")
    return np.flatnonzero(np.abs(vals) <= face_tol)


def _restrict(bset, indices):
    return FiniteBeliefSet([bset.labels[k] for k in indices],
                           bset.points[indices],
                           allow_duplicates=bset.allow_duplicates)


def exposure_chain(bset: FiniteBeliefSet, i: int, declared_faces=(),
                   *, margin_tol: float = MARGIN_TOL,
                   face_tol: float = FACE_TOL,
                   expose_test=None) -> ExposureChain:
    """Nested faces that eventually expose p_i.

    Each stage first tries a declared face (a supporting functional whose
    zero set strictly shrinks the current members while keeping i); with
    none applicable it tries to expose {i} directly, and failing that it
    discovers a face with the max-margin supporting LP.  Declared faces
    take priority so that continuum face structure known to the model
    drives the chain instead of grid-exposure artifacts.

    declared_faces: sequence of functionals (or (members, functional)
    pairs; members are ignored and re-derived from the functional).
    expose_test(current_indices, z, margin) may override the default
    terminal test margin > margin_tol.
    """
    i = bset.check_index(i)
    extreme, _ = is_extreme(bset, i)
    if not extreme:
        raise NotExtreme(f"point {bset.labels[i]} is not extreme")

    declared = []
    for item in declared_faces:
        z = item[1] if isinstance(item, tuple) else item
        declared.append(np.asarray(z, dtype=float))

    current = np.arange(len(bset))
    stages: list[tuple[np.ndarray, np.ndarray]] = []
    margins: list[float] = []
    used_declared = False

    for _ in range(len(bset) + bset.n_states + 2):
        sub = _restrict(bset, current)
        pos_i = int(np.flatnonzero(current == i)[0])

        cut = None
        for z in declared:
            vals = sub.points @ z
            if vals.min() < -face_tol:
                continue
            members = np.flatnonzero(np.abs(vals) <= face_tol)
            if (pos_i in members and 1 < members.size < current.size):
                cut = (members, z, None)
                used_declared = True
                break

        if cut is None:
            z, margin = _separation_lp(sub.points, np.array([pos_i]),
                                       np.zeros(0, dtype=int),
                                       np.setdiff1d(np.arange(len(sub)),
                                                    [pos_i]))
            ok = (expose_test(current, z, margin) if expose_test
                  else margin > margin_tol)
            if ok:
                stages.append((np.array([i]), z))
                margins.append(margin)
                return ExposureChain(
                    target=i, initial_members=np.arange(len(bset)),
                    stages=stages, margins=margins,
                    provenance="declared" if used_declared else "discovered")
            # max-margin supporting LP: maximize total mass above the
            # hyperplane through p_i
            nS = sub.n_states
            cons = [(sub.points[pos_i], lp.EQ, 0.0)]
            cons += [(sub.points[k], lp.GE, 0.0) for k in range(len(sub))
                     if k != pos_i]
            prog = lp.LinearProgram(-sub.points.sum(axis=0), cons,
                                    bounds=[(-1.0, 1.0)] * nS)
            zsol = lp.solve(prog)
            if zsol.status != lp.OPTIMAL:  # pragma: no cover
                raise ChainStalled("supporting LP failed")
            members = np.flatnonzero(
                np.abs(sub.points @ zsol.primal) <= face_tol)
            if members.size >= current.size or pos_i not in members:
                raise ChainStalled(
                    f"no face of {current.size} members separates anything "
                    f"around {bset.labels[i]}")
            # refine to the max-margin functional that exposes this face
            zref, mref = _separation_lp(sub.points, members,
                                        np.zeros(0, dtype=int),
                                        np.setdiff1d(np.arange(len(sub)),
                                                     members))
            if mref <= margin_tol:
                raise ChainStalled(
                    "discovered face is not exposed above margin_tol")
            cut = (members, zref, mref)

        members, z, margin = cut
        face_global = current[members]
        if affine_dimension(_restrict(bset, face_global)) >= \
                affine_dimension(sub):
            raise ChainStalled("stage did not reduce affine dimension")
        stages.append((face_global, z))
        margins.append(margin if margin is not None
                       else float((sub.points @ z).max()))
        current = face_global

    raise ChainStalled("chain exceeded the dimension bound")  # pragma: no cover
