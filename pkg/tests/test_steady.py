"""Steady layer: invariants, depth quartic, branch solves, jump relations.

The quartic residual f(h) = D h^4 + 2 g h^3 + 2 h^2 (g b - C2) + C1^2 is the
oracle throughout: every depth the solver returns is plugged back in.
"""

import numpy as np
import pytest

from swme_lab import (FlowRegime, NoSteadyState, StateVector, SteadyConstants,
                      SteadyStatus, classify_regime, constants_from_state,
                      critical_height, evaluate_steady_state, rh_jump,
                      solve_heights, steady_height_at)

G = 9.812


def _residual(h, C, b):
    q = C.g * b - C.c2
    return C.D * h ** 4 + 2.0 * C.g * h ** 3 + 2.0 * h ** 2 * q + C.c1 ** 2


def _scale(h, C, b):
    q = C.g * b - C.c2
    return (C.c1 ** 2 + 2.0 * C.g * h ** 3 + 2.0 * h ** 2 * abs(q)
            + abs(C.D) * h ** 4)


# ============================================================
# Invariants
# ============================================================

def test_constants_quartic_coefficient():
    C = SteadyConstants(c1=1.0, c2=5.0, cm=(0.3, -0.2), g=G)
    assert C.N == 2
    assert C.D == pytest.approx(3.0 * (0.09 / 3.0 + 0.04 / 5.0), abs=1e-15)
    assert SteadyConstants(c1=1.0, c2=5.0, cm=(), g=G).D == 0.0


def test_constants_from_state_literal():
    s = StateVector.from_primitives(2.0, 1.5, [0.4], b=0.3)
    C = constants_from_state(s, G)
    s2 = 0.4 ** 2 / 3.0
    assert C.c1 == pytest.approx(3.0, abs=1e-14)
    assert C.c2 == pytest.approx(0.5 * 1.5 ** 2 + G * 2.3 + 1.5 * s2, abs=1e-13)
    assert C.cm[0] == pytest.approx(0.2, abs=1e-15)


def test_constants_invariant_along_profile():
    # moving along the profile (changing b) must reproduce the same constants
    s = StateVector.from_primitives(2.0, 1.2, [0.3, -0.1])
    C = constants_from_state(s, G, b=0.0)
    regime = classify_regime(s, G)
    for b in (0.05, 0.12, 0.2):
        s_b = evaluate_steady_state(C, 0.0, lambda x: b, regime)
        C_b = constants_from_state(s_b, G)
        assert C_b.c1 == pytest.approx(C.c1, abs=1e-13)
        assert C_b.c2 == pytest.approx(C.c2, rel=1e-12)
        assert np.allclose(C_b.cm, C.cm, atol=1e-13)


# ============================================================
# Depth solve
# ============================================================

def test_lake_path_is_exact_arithmetic():
    h, st, _, _ = solve_heights(0.0, G * 3.0, 0.0, 1.25, G, False)
    assert float(h) == 3.0 - 1.25
    assert SteadyStatus(int(st)) is SteadyStatus.OK


def test_lake_path_dry_is_no_steady():
    _, st, _, _ = solve_heights(0.0, G * 1.0, 0.0, 2.0, G, False)
    assert SteadyStatus(int(st)) is SteadyStatus.NO_STEADY


def test_still_moments_path():
    C = SteadyConstants(c1=0.0, c2=30.0, cm=(0.5,), g=G)
    h, st, _, _ = solve_heights(0.0, C.c2, C.D, 0.4, G, False)
    assert SteadyStatus(int(st)) is SteadyStatus.OK
    assert abs(_residual(float(h), C, 0.4)) < 1e-12 * _scale(float(h), C, 0.4)


def test_branches_straddle_the_critical_depth():
    s = StateVector.from_primitives(2.0, 1.2, [0.3, -0.1])
    C = constants_from_state(s, G, b=0.0)
    for b in (0.0, 0.1, 0.2):
        h_sub, st1, hc, _ = solve_heights(C.c1, C.c2, C.D, b, G, False)
        h_sup, st2, _, _ = solve_heights(C.c1, C.c2, C.D, b, G, True)
        assert SteadyStatus(int(st1)) is SteadyStatus.OK
        assert SteadyStatus(int(st2)) is SteadyStatus.OK
        assert float(h_sup) < float(hc) < float(h_sub)
        for h in (float(h_sub), float(h_sup)):
            assert abs(_residual(h, C, b)) < 1e-12 * _scale(h, C, b)


def test_depth_residuals_over_random_constants():
    rng = np.random.default_rng(42)
    for _ in range(50):
        N = rng.integers(0, 4)
        s = StateVector.from_primitives(rng.uniform(0.5, 4.0),
                                        rng.uniform(-3.0, 3.0) or 0.7,
                                        rng.uniform(-1.0, 1.0, size=N))
        C = constants_from_state(s, G, b=0.0)
        b = rng.uniform(0.0, 0.05)
        for sup in (False, True):
            h, st, hc, fc = solve_heights(C.c1, C.c2, C.D, b, G, sup)
            if SteadyStatus(int(st)) is SteadyStatus.OK:
                h = float(h)
                assert h > 0.0
                assert abs(_residual(h, C, b)) < 1e-12 * _scale(h, C, b)


def test_solve_heights_broadcasts():
    b = np.linspace(0.0, 0.2, 7)
    h, st, hc, fc = solve_heights(3.5, 21.15525, 0.0, b, G, False)
    assert h.shape == st.shape == hc.shape == fc.shape == (7,)
    assert np.all(st == SteadyStatus.OK)
    assert np.all(np.diff(h) < 0.0)  # depth drops as the bed rises (subcritical)


def test_solve_heights_mixed_branches():
    b = np.zeros(2)
    h, st, _, _ = solve_heights(3.5, 21.15525, 0.0, b, G, [True, False])
    assert np.all(st == SteadyStatus.OK)
    assert h[0] < h[1]


def test_sonic_constants_collapse_to_the_critical_depth():
    # q = -1.5 g makes h_c = 1; f(h_c) = 0 forces c1 = sqrt(g): critical flow
    h, st, hc, fc = solve_heights(np.sqrt(G), 1.5 * G, 0.0, 0.0, G, False)
    assert SteadyStatus(int(st)) is SteadyStatus.SONIC
    assert float(h) == pytest.approx(1.0, abs=1e-12)
    assert float(hc) == pytest.approx(1.0, abs=1e-12)


def test_no_steady_when_bump_exceeds_energy():
    s = StateVector.from_primitives(1.0, 1.0)
    C = constants_from_state(s, G, b=0.0)
    _, st, _, fc = solve_heights(C.c1, C.c2, C.D, 5.0, G, False)
    assert SteadyStatus(int(st)) is SteadyStatus.NO_STEADY
    assert float(fc) > 0.0
    with pytest.raises(NoSteadyState, match="no steady depth") as exc:
        steady_height_at(C, 5.0, FlowRegime.SUBCRITICAL)
    assert exc.value.residual > 0.0
    assert np.isfinite(exc.value.h_crit)


def test_critical_height_literal_and_derivative():
    # N = 0: h_c = -2 q / (3 g)
    C0 = SteadyConstants(c1=2.0, c2=20.0, cm=(), g=G)
    hc = critical_height(C0, 0.0)
    assert hc == pytest.approx(2.0 * 20.0 / (3.0 * G), rel=1e-14)
    # with moments: f'(h_c) = 0
    C = SteadyConstants(c1=2.0, c2=20.0, cm=(0.4, 0.2), g=G)
    hc = critical_height(C, 0.1)
    q = G * 0.1 - C.c2
    fp = 4.0 * C.D * hc ** 3 + 6.0 * G * hc ** 2 + 4.0 * hc * q
    assert abs(fp) < 1e-10 * (6.0 * G * hc ** 2)


def test_critical_height_raises_without_minimum():
    C = SteadyConstants(c1=1.0, c2=-50.0, cm=(), g=G)  # q > 0: f is increasing
    with pytest.raises(NoSteadyState, match="critical depth"):
        critical_height(C, 0.0)


def test_evaluate_steady_state_fields():
    C = SteadyConstants(c1=3.5, c2=21.15525, cm=(0.25,), g=G)
    s = evaluate_steady_state(C, 1.5, lambda x: 0.1, FlowRegime.SUBCRITICAL)
    assert s.b == 0.1
    assert s.hu == pytest.approx(3.5, abs=0.0)
    assert s.alpha[0] == pytest.approx(0.25 * s.h, rel=1e-13)
    assert abs(_residual(s.h, C, 0.1)) < 1e-11 * _scale(s.h, C, 0.1)


# ============================================================
# Regime classification
# ============================================================

def test_classify_regime_literal():
    assert classify_regime(StateVector.from_primitives(1.0, 0.5), G) \
        is FlowRegime.SUBCRITICAL
    assert classify_regime(StateVector.from_primitives(1.0, -9.9), G) \
        is FlowRegime.SUPERCRITICAL
    # moments raise the wave speed: same u flips back to subcritical
    c0 = np.sqrt(G)
    assert classify_regime(StateVector.from_primitives(1.0, 1.01 * c0), G) \
        is FlowRegime.SUPERCRITICAL
    assert classify_regime(
        StateVector.from_primitives(1.0, 1.01 * c0, [2.0]), G) \
        is FlowRegime.SUBCRITICAL


def test_classify_regime_tie_is_subcritical():
    c0 = np.sqrt(G)
    assert classify_regime(StateVector.from_primitives(1.0, c0), G) \
        is FlowRegime.SUBCRITICAL


# ============================================================
# Jump relations
# ============================================================

def _jump_poly(y, fr2, ma2):
    a = ma2 * fr2
    return a * y ** 3 + (0.5 + a) * y ** 2 + (0.5 + a) * y - fr2


def test_rh_jump_swe_closed_form():
    h0, u0 = 2.0, 3.0
    fr2 = u0 ** 2 / (G * h0)
    heights, degen = rh_jump(h0, u0, [], G)
    assert not degen
    assert len(heights) == 2
    y_expect = (-1.0 + np.sqrt(1.0 + 8.0 * fr2)) / 2.0  # < 1 here: Fr < 1
    assert heights[0] / h0 == pytest.approx(y_expect, rel=1e-14)
    assert heights[1] == h0


def test_rh_jump_critical_flow_is_identity():
    h0 = 1.3
    u0 = np.sqrt(G * h0)  # Fr = 1
    heights, _ = rh_jump(h0, u0, [], G)
    assert np.allclose(heights, h0, rtol=1e-12)


def test_rh_jump_moment_roots_satisfy_the_cubic():
    rng = np.random.default_rng(5)
    for _ in range(30):
        h0 = rng.uniform(0.5, 4.0)
        u0 = rng.uniform(0.2, 3.0) * rng.choice([-1.0, 1.0])
        alpha = rng.uniform(-1.5, 1.5, size=rng.integers(1, 5))
        fr2 = u0 ** 2 / (G * h0)
        w = 1.0 / (2.0 * np.arange(1, len(alpha) + 1) + 1.0)
        ma2 = float((alpha / u0) ** 2 @ w)
        heights, degen = rh_jump(h0, u0, alpha, G)
        assert not degen
        assert np.all(heights > 0.0)
        assert np.any(np.isclose(heights, h0, rtol=1e-13))
        for h in heights:
            y = h / h0
            if abs(y - 1.0) < 1e-12:
                continue
            scale = max(1.0, fr2, ma2 * fr2 * y ** 3)
            assert abs(_jump_poly(y, fr2, ma2)) < 1e-10 * scale


def test_rh_jump_resting_states():
    heights, degen = rh_jump(1.0, 0.0, [0.5], G)
    assert degen and np.allclose(heights, [1.0])
    heights, degen = rh_jump(1.0, 0.0, [0.0], G)
    assert not degen and np.allclose(heights, [1.0])


def test_rh_jump_rejects_dry_upstream():
    with pytest.raises(ValueError, match="h0 > 0"):
        rh_jump(0.0, 1.0, [], G)
