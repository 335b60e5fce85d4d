"""Classification, menu construction, and verification tests."""

import numpy as np
import pytest

from surplex import lp
from surplex.extraction import (
    DETECTABLE,
    EVENTUALLY_DETECTABLE,
    NOT_DETECTABLE,
    STRONGLY_DETECTABLE,
    Contract,
    InputMenuFails,
    Menu,
    NotAllDetectable,
    classify_type,
    compress_menu,
    full_extraction_lp,
    full_extraction_menu,
    verify_menu,
    virtual_extraction_menu,
)
from surplex.models import (
    ParametricModel,
    TabularModel,
    chord_functional,
    counterexample_model,
    curve_point,
    embed,
    identical_beliefs_pair,
    planted_combination_instance,
    random_tabular,
)


@pytest.fixture(scope="module")
def curve():
    return counterexample_model(validate=False)


@pytest.fixture(scope="module")
def curve_menu(curve):
    return virtual_extraction_menu(curve, 0.05, 201)


# ---------------------------------------------------------------------------
# classification

def test_classify_tabular_convex_independent():
    tab = random_tabular(2, 6, 8)
    for t in range(6):
        c = classify_type(tab, t)
        assert c.label == STRONGLY_DETECTABLE
        assert c.inf_margin > 0
        # certificate: functional vanishes at t, positive elsewhere
        vals = tab.beliefs @ c.functional
        assert abs(vals[t]) <= 1e-9
        others = np.delete(vals, t)
        assert others.min() >= c.margin - 1e-9


def test_classify_counterexample_endpoints(curve):
    for t in (0.0, 1.0):
        c = classify_type(curve, t, 201)
        assert c.label == EVENTUALLY_DETECTABLE
        assert c.chain.length == 2
        assert c.provenance == "declared"
        subsets = c.chain.subsets()
        assert len(subsets[0]) == 201
        assert len(subsets[1]) == 2      # the chord face {0, 1}
        assert len(subsets[2]) == 1


def test_classify_counterexample_interior(curve):
    for t in (0.5, 0.25, 0.005):
        c = classify_type(curve, t, 201)
        assert c.label == DETECTABLE
        assert c.margin > 0
        assert c.slack > 0               # continuum inf not certified


def test_classify_not_detectable_witness():
    tab, idx, _ = planted_combination_instance(3, 7, 9)
    c = classify_type(tab, idx)
    assert c.label == NOT_DETECTABLE
    assert np.abs(tab.beliefs[idx] - c.witness @ tab.beliefs).max() <= 1e-8


# ---------------------------------------------------------------------------
# full extraction menus

def test_full_menu_single_type():
    tab = TabularModel(["solo"], np.array([[0.2, 0.3, 0.5]]), np.array([1.5]))
    menu = full_extraction_menu(tab)
    assert len(menu) == 1
    rep = verify_menu(tab, menu, None, ("full",))
    assert rep.passed and abs(rep.own[0]) <= 1e-9


def test_full_menu_two_types_hand_computed():
    # beliefs e1, e2; values 1, 2: z(T0) = (0, 1)-ish, z(T1) = (1, 0)-ish
    tab = TabularModel(["T0", "T1"], np.eye(2), np.array([1.0, 2.0]))
    menu = full_extraction_menu(tab)
    rep = verify_menu(tab, menu, None, ("full",))
    assert rep.passed
    assert rep.max_cross < 0
    # T1 facing T0's contract: pays v(T0) + alpha with alpha > v(T1)-v(T0)
    c0 = menu.get("T0").payments
    assert c0[0] == pytest.approx(1.0, abs=1e-9)
    assert c0[1] > 2.0


def test_full_menu_duplicated_beliefs_fails():
    tab = identical_beliefs_pair(2.0, 1.0)
    with pytest.raises(NotAllDetectable) as err:
        full_extraction_menu(tab)
    failing = err.value.failing
    assert {lbl for lbl, _ in failing} == {"T0", "T1"}
    for _, witness in failing:
        assert witness is not None


def test_full_menu_own_surplus_exactness():
    tab = random_tabular(8, 7, 9)
    menu = full_extraction_menu(tab)
    for i, (lbl, contract) in enumerate(menu.entries):
        assert contract.decomposition_residual() <= 1e-10
        for _, z in contract.provenance.terms:
            assert abs(tab.beliefs[i] @ z) <= 1e-10


def test_full_lp_matches_menu_on_ci_instance():
    tab = random_tabular(21, 6, 8)
    sol, lp_menu = full_extraction_lp(tab)
    assert sol.status == lp.OPTIMAL
    rep = verify_menu(tab, lp_menu, None, ("full",))
    assert rep.passed
    menu = full_extraction_menu(tab)
    assert verify_menu(tab, menu, None, ("full",)).passed


def test_full_lp_duplicated_infeasible():
    tab = identical_beliefs_pair(2.0, 1.0)
    sol, menu = full_extraction_lp(tab)
    assert sol.status == lp.INFEASIBLE
    assert menu is None
    assert lp.check_certificate(full_extraction_lp_program(tab), sol).passed


def full_extraction_lp_program(tab):
    # rebuild the same program to check the Farkas certificate against it
    m, S = tab.n_types, tab.state_count
    nv = m * S + m
    cons = []
    for t in range(m):
        row = np.zeros(nv)
        row[t * S:(t + 1) * S] = tab.beliefs[t]
        cons.append((row, lp.EQ, tab.values[t]))
    for t in range(m):
        for s in range(m):
            if s == t:
                continue
            row = np.zeros(nv)
            row[t * S:(t + 1) * S] = tab.beliefs[s]
            cons.append((row, lp.GE, tab.values[s]))
    for t in range(m):
        for s in range(S):
            row = np.zeros(nv)
            row[t * S + s] = 1.0
            row[m * S + t] = -1.0
            cons.append((row, lp.LE, 0.0))
            row = np.zeros(nv)
            row[t * S + s] = 1.0
            row[m * S + t] = 1.0
            cons.append((row, lp.GE, 0.0))
    obj = np.zeros(nv)
    obj[m * S:] = 1.0
    bounds = [(None, None)] * (m * S) + [(0.0, None)] * m
    return lp.LinearProgram(obj, cons, bounds=bounds)


def test_full_lp_planted_infeasible_sample():
    for seed in range(5):
        tab, idx, _ = planted_combination_instance(100 + seed, 6, 8)
        sol, menu = full_extraction_lp(tab)
        assert sol.status == lp.INFEASIBLE, seed
        assert menu is None


def test_full_lp_norm_grows_on_counterexample_grids(curve):
    from surplex.models import sample
    norms = []
    for n in (9, 17, 33):
        tab = sample(curve, n)
        sol, menu = full_extraction_lp(tab)
        assert sol.status == lp.OPTIMAL
        norms.append(sol.objective_value / n)
    assert norms[0] < norms[1] < norms[2]


# ---------------------------------------------------------------------------
# virtual extraction

def test_virtual_menu_counterexample(curve, curve_menu):
    menu, logs = curve_menu
    rep = verify_menu(curve, menu, 2001, ("virtual", 0.05))
    assert rep.passed
    own = rep.own[~np.isnan(rep.own)]
    assert own.min() >= 0.0 and own.max() <= 1e-9
    assert rep.max_cross <= 0.05
    assert rep.lipschitz_slack > 0.0


def test_virtual_menu_endpoint_decomposition(curve, curve_menu):
    # endpoint contracts decompose as inner contract + alpha * chord
    menu, logs = curve_menu
    zeta = chord_functional()
    for lbl, t in (("t=0", 0.0), ("t=1", 1.0)):
        contract = menu.get(lbl)
        terms = contract.provenance.terms
        assert len(terms) == 2
        assert contract.decomposition_residual() <= 1e-10
        pi = embed(*curve_point(t))
        # outermost term is the chord functional, re-centered on pi(t)
        alpha, z_outer = terms[-1]
        assert alpha > 0
        expected = zeta - (pi @ zeta) * np.ones(3)
        assert np.abs(z_outer - expected).max() <= 1e-9
        # inner term exposes the endpoint within the chord face
        _, z_inner = terms[0]
        other = embed(*curve_point(1.0 - t))
        assert abs(pi @ z_inner) <= 1e-10
        assert other @ z_inner > 1e-3
    by_label = dict(zip([l.label for l in logs], logs))
    assert by_label["t=0"].case == "chain"
    assert by_label["t=0"].chain_length == 2
    assert by_label["t=0.5"].case == "detectable"


def test_virtual_menu_constant_model():
    flat = ParametricModel(
        state_count=3,
        belief_fn=lambda t: np.array([0.2, 0.3, 0.5]),
        value_fn=lambda t: 1.25,
        lipschitz_pi=0.0, lipschitz_v=0.0, name="flat")
    menu, logs = virtual_extraction_menu(flat, 0.01, 11)
    assert all(log.case == "constant" for log in logs)
    for _, contract in menu.entries:
        assert contract.payments == pytest.approx([1.25] * 3)
    rep = verify_menu(flat, menu, 41, ("virtual", 0.01))
    assert rep.passed


def test_virtual_menu_detectable_only_arc():
    base = counterexample_model(validate=False)
    arc = ParametricModel(
        state_count=3,
        belief_fn=lambda t: embed(*curve_point(0.25 + 0.5 * t)),
        value_fn=lambda t: t,
        lipschitz_pi=0.5 * base.lipschitz_pi,
        lipschitz_v=1.0, name="arc")
    menu, logs = virtual_extraction_menu(arc, 0.05, 101)
    assert all(log.case == "detectable" for log in logs)
    rep = verify_menu(arc, menu, 1001, ("virtual", 0.05))
    assert rep.passed


# ---------------------------------------------------------------------------
# compression

def test_compress_counterexample(curve, curve_menu):
    menu, _ = curve_menu
    small = compress_menu(curve, menu, 0.05, 201)
    assert len(small) <= len(menu)
    rep = verify_menu(curve, small, 201, ("virtual", 0.1))
    assert (rep.best >= 0.0).all()
    assert (rep.best <= 0.1).all()


def test_compress_single_type_menu():
    flat = ParametricModel(
        state_count=3,
        belief_fn=lambda t: np.array([0.2, 0.3, 0.5]),
        value_fn=lambda t: 1.25,
        lipschitz_pi=0.0, lipschitz_v=0.0, name="flat")
    menu, _ = virtual_extraction_menu(flat, 0.01, 11)
    small = compress_menu(flat, menu, 0.01, 11)
    assert len(small) == 1


def test_compress_rejects_failing_menu(curve):
    bad = Menu([("t=0", Contract(np.zeros(3)))])
    with pytest.raises(InputMenuFails):
        compress_menu(curve, bad, 0.05, 51)


# ---------------------------------------------------------------------------
# verification

def test_verify_flags_shifted_menu():
    tab = random_tabular(31, 5, 7)
    menu = full_extraction_menu(tab)
    eps = 0.02
    shifted = Menu([(lbl, Contract(c.payments - eps))
                    for lbl, c in menu.entries])
    rep = verify_menu(tab, shifted, None, ("full",))
    assert not rep.passed
    assert rep.max_abs_own == pytest.approx(eps, abs=1e-9)


def test_verify_full_implies_all_detectable():
    for seed in (1, 2, 3):
        tab = random_tabular(seed, 5, 7)
        sol, menu = full_extraction_lp(tab)
        rep = verify_menu(tab, menu, None, ("full",))
        if rep.passed:
            for t in range(tab.n_types):
                assert classify_type(tab, t).label == STRONGLY_DETECTABLE


def test_counterexample_impossibility_lp(curve):
    # any functional supporting the sampled curve and vanishing at t=0
    # gives nearly nothing at t=1, with slack shrinking as the grid refines
    slacks = []
    for n in (251, 1001):
        ts = np.linspace(0, 1, n)
        beliefs = curve.beliefs(ts)
        nv = 4
        cons = [(np.append(beliefs[0], 0.0), lp.LE, 1e-9)]
        for b in beliefs:
            cons.append((np.append(b, 0.0), lp.GE, -1e-9))
        obj = np.zeros(nv)
        obj[:3] = beliefs[-1]
        prog = lp.LinearProgram(obj, cons,
                                bounds=[(-1.0, 1.0)] * 3 + [(0.0, None)],
                                sense="max")
        sol = lp.solve(prog)
        assert sol.status == lp.OPTIMAL
        slacks.append(sol.objective_value)
    assert slacks[1] < slacks[0]
    assert slacks[1] < 5e-2


def test_menu_json_round_trip(curve_menu):
    menu, _ = curve_menu
    data = menu.to_jsonable()
    back = Menu.from_jsonable(data)
    assert back.labels == menu.labels
    assert np.abs(back.payments_matrix() - menu.payments_matrix()).max() == 0
    resid = [c.decomposition_residual() for _, c in back.entries]
    assert max(resid) <= 1e-10
