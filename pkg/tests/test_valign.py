import numpy as np
import pytest
from factories import random_valign, small_valign
from hypothesis import given
from hypothesis import strategies as st
from oracles import earthwork_vertex_oracle, line_transport_cost
from scipy.optimize import linprog

from halign.valign import (
    Pit,
    VAlignConfig,
    VAlignConfigError,
    VAlignInfeasible,
    VAlignProblem,
    assemble,
    solution_residuals,
    valign_cost,
)


def scaled(cfg: VAlignConfig, lam: float) -> VAlignConfig:
    return VAlignConfig(
        g_lo=cfg.g_lo, g_hi=cfg.g_hi, p=cfg.p * lam, q=cfg.q * lam, haul=cfg.haul * lam,
        width=cfg.width, segments=cfg.segments, fix_ends=cfg.fix_ends,
        borrow=tuple(Pit(b.at, b.cost * lam, b.cap) for b in cfg.borrow),
        waste=tuple(Pit(w.at, w.cost * lam, w.cap) for w in cfg.waste),
    )


def test_hand_counted_dimensions():
    cfg = VAlignConfig(borrow=(Pit(0, 1, 100),), waste=(Pit(2, 1, 100),), segments=1)
    asm = assemble(VAlignProblem([0, 10, 20], [1, 2, 3], cfg))
    # a:3 u:3 V+:3 V-:3 forward:2 backward:2 borrow/waste flow:2 pit volumes:2
    assert asm.lp.n_vars == 20
    # offset 3, grade 4, volume 3, conservation 3, pit balance 2
    assert asm.lp.n_rows == 15
    assert {k: v.stop - v.start for k, v in asm.row_groups.items()} == {
        "offset": 3, "smooth": 0, "grade": 4, "volume": 3, "conservation": 3, "pits": 2, "fixed": 0}


def test_default_knots():
    cfg = VAlignConfig()
    assert cfg.knot_indices(2) == (0, 1)
    assert cfg.knot_indices(21) == (0, 10, 20)
    assert VAlignConfig(segments=4).knot_indices(9) == (0, 2, 4, 6, 8)
    with pytest.raises(VAlignConfigError):
        VAlignConfig(knots=(0, 3, 2)).knot_indices(4)


def test_zero_cost_grounds():
    s = np.linspace(0, 150, 16)
    cfg = VAlignConfig(g_lo=-0.05, g_hi=0.05)
    assert valign_cost(VAlignProblem(s, np.full(16, 7.25), cfg))[0] == 0.0
    assert valign_cost(VAlignProblem(s, 3.0 - 0.05 * s, cfg))[0] == 0.0
    # zero width decouples earthwork from the profile
    rough = np.random.default_rng(0).normal(0, 3, 16)
    assert valign_cost(VAlignProblem(s, rough, VAlignConfig(width=0.0)))[0] == 0.0


def test_steep_two_section_closed_form():
    # ground climbs 10 m over 10 m; the profile may climb 1 m, so 9 m must be
    # split between fill at the start and cut at the end
    p, q, haul, w = 1.3, 1.7, 0.4, 6.0
    cfg = VAlignConfig(g_lo=-0.1, g_hi=0.1, p=p, q=q, haul=haul, width=w)
    cost, sol = valign_cost(VAlignProblem([0.0, 10.0], [0.0, 10.0], cfg))
    vol = w * 5.0 * 4.5
    assert cost == pytest.approx((p + q + haul) * vol, rel=1e-12)
    assert sol.offsets == pytest.approx([4.5, -4.5])


def test_steep_two_section_with_pits():
    p, q, haul, w, cb, cw = 1.0, 1.5, 3.0, 8.0, 0.5, 0.25
    cfg = VAlignConfig(g_lo=-0.1, g_hi=0.1, p=p, q=q, haul=haul, width=w,
                       borrow=(Pit(0, cb, 1e6),), waste=(Pit(1, cw, 1e6),))
    cost, _ = valign_cost(VAlignProblem([0.0, 10.0], [0.0, 10.0], cfg))

    def total(a):  # a = fill depth at the first section
        fill, cut = w * 5 * a, w * 5 * (9 - a)
        moved = min(fill, cut)
        return q * fill + p * cut + haul * moved + cw * max(cut - fill, 0) + cb * max(fill - cut, 0)

    assert cost == pytest.approx(min(total(a) for a in (0.0, 4.5, 9.0)), rel=1e-12)


def test_infeasible_without_pits():
    # fixed ends on a bump: material is cut but has nowhere to go
    cfg = VAlignConfig(fix_ends=True, g_lo=-0.01, g_hi=0.01, segments=1)
    with pytest.raises(VAlignInfeasible):
        valign_cost(VAlignProblem([0, 10, 20], [0, 5, 0], cfg))


def test_transport_oracle_by_hand():
    # 10 units of surplus at section 0 must reach the waste pit at section 2
    c = line_transport_cost([[10, 0, 0]], 1.0, (0, 100.0, 0.0), (2, 0.5, 100.0))
    assert c[0] == pytest.approx(10 * 2 * 1.0 + 10 * 0.5)


@given(st.integers(0, 100_000))
def test_small_instances_match_vertex_oracle(seed):
    pr = small_valign(np.random.default_rng(seed))
    ref = earthwork_vertex_oracle(pr.chainage, pr.ground, pr.config)
    if not np.isfinite(ref):
        with pytest.raises(VAlignInfeasible):
            valign_cost(pr)
        return
    cost, _ = valign_cost(pr)
    assert cost == pytest.approx(ref, abs=max(1e-6, 1e-9 * ref))


@given(st.integers(0, 100_000), st.floats(0.01, 100.0))
def test_cost_scales_linearly(seed, lam):
    pr = random_valign(np.random.default_rng(seed), n=int(8 + seed % 10))
    base = valign_cost(pr)[0]
    big = valign_cost(VAlignProblem(pr.chainage, pr.ground, scaled(pr.config, lam)))[0]
    assert big == pytest.approx(lam * base, rel=1e-8, abs=1e-8)


@given(st.integers(0, 100_000), st.floats(-500, 500))
def test_shift_invariance(seed, shift):
    pr = random_valign(np.random.default_rng(seed), n=int(5 + seed % 12))
    a = valign_cost(pr)[0]
    b = valign_cost(VAlignProblem(pr.chainage, pr.ground + shift, pr.config))[0]
    assert b == pytest.approx(a, rel=1e-8, abs=1e-7)


@given(st.integers(0, 100_000))
def test_wider_grades_never_cost_more(seed):
    pr = random_valign(np.random.default_rng(seed), n=int(5 + seed % 12))
    cfg = pr.config
    wide = VAlignConfig(g_lo=cfg.g_lo * 1.5, g_hi=cfg.g_hi * 1.5, p=cfg.p, q=cfg.q, haul=cfg.haul,
                        width=cfg.width, borrow=cfg.borrow, waste=cfg.waste, segments=cfg.segments)
    assert valign_cost(VAlignProblem(pr.chainage, pr.ground, wide))[0] <= valign_cost(pr)[0] + 1e-7


@given(st.integers(0, 100_000))
def test_residuals_and_highs(seed):
    pr = random_valign(np.random.default_rng(seed))
    cost, sol = valign_cost(pr)
    res = solution_residuals(pr, sol)
    assert max(res.values()) <= 1e-6, res
    lp = assemble(pr).lp
    A, se = lp.dense(), np.array(lp.senses)
    ref = linprog(lp.cost, A_ub=np.vstack([A[se == "<="], -A[se == ">="]]),
                  b_ub=np.concatenate([lp.rhs[se == "<="], -lp.rhs[se == ">="]]),
                  A_eq=A[se == "="], b_eq=lp.rhs[se == "="],
                  bounds=list(zip(lp.lower, lp.upper)), method="highs")
    assert ref.status == 0
    assert cost == pytest.approx(ref.fun, rel=1e-7, abs=1e-6)
    # the reported cost is the priced solution
    cfg = pr.config
    priced = (cfg.cut_costs(pr.n) @ sol.cut + cfg.fill_costs(pr.n) @ sol.fill
              + cfg.haul * (sol.flow_forward.sum() + sol.flow_backward.sum())
              + sum(b.cost * f for b, f in zip(cfg.borrow, sol.borrow_flow))
              + sum(w.cost * f for w, f in zip(cfg.waste, sol.waste_flow)))
    assert priced == pytest.approx(cost, rel=1e-9, abs=1e-9)


def test_fixed_ends_pin_offsets():
    pr = random_valign(np.random.default_rng(1), n=12)
    cfg = pr.config
    pinned = VAlignConfig(g_lo=cfg.g_lo, g_hi=cfg.g_hi, p=cfg.p, q=cfg.q, haul=cfg.haul,
                          width=cfg.width, borrow=cfg.borrow, waste=cfg.waste,
                          segments=cfg.segments, fix_ends=True)
    prob = VAlignProblem(pr.chainage, pr.ground, pinned)
    cost, sol = valign_cost(prob)
    assert abs(sol.offsets[0]) < 1e-9 and abs(sol.offsets[-1]) < 1e-9
    assert cost >= valign_cost(pr)[0] - 1e-9
    assert solution_residuals(prob, sol)["fixed_ends"] < 1e-9


def test_solution_profile_helpers():
    pr = random_valign(np.random.default_rng(2), n=15, segments=3)
    _, sol = valign_cost(pr)
    s = pr.chainage
    np.testing.assert_allclose(sol.elevation(s), pr.ground + sol.offsets, atol=1e-9)
    g = sol.grade(np.linspace(s[0], s[-1], 50))
    assert np.all(g >= pr.config.g_lo - 1e-9) and np.all(g <= pr.config.g_hi + 1e-9)
    glob = sol.global_coefficients()
    assert glob.shape == (3, 3)
    summary = sol.summary()
    assert summary["cost"] == pytest.approx(sol.cost)


def test_config_round_trip_and_errors():
    d = {"segments": 2, "g_lo": -0.08, "g_hi": 0.09, "p": [1, 2, 3], "q": 1.5, "haul": 0.3,
         "width": 7, "borrow": [{"at": 0, "cost": 2, "cap": 50}],
         "waste": [{"at": 2, "cost": 1, "cap": 60}], "fix_ends": True}
    cfg = VAlignConfig.from_dict(d)
    assert VAlignConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.cut_costs(3).tolist() == [1, 2, 3]
    with pytest.raises(VAlignConfigError):
        cfg.cut_costs(4)
    for bad in ({"p": -1}, {"g_lo": 0.1, "g_hi": 0.0}, {"segments": 0},
                {"segments": 2, "knots": [0, 2]}, {"borrow": [{"at": 0, "cost": 1}]},
                {"nonsense": 1}):
        with pytest.raises((VAlignConfigError, ValueError, TypeError)):
            VAlignConfig.from_dict(bad)
    with pytest.raises(VAlignConfigError):
        VAlignProblem([0, 1, 2], [0, 0, 0], VAlignConfig(p=0.0, q=0.0))
    with pytest.raises(VAlignConfigError):
        VAlignProblem([0, 1, 2], [0, 0, 0], VAlignConfig(borrow=(Pit(5, 1, 1),)))
    with pytest.raises(ValueError):
        VAlignProblem([0, 1, 1], [0, 0, 0], VAlignConfig())
