import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bellstrong.core import (
    Apparatus,
    DegenerateExperimentError,
    DomainError,
    JointProbabilities,
    SinglesProbabilities,
    expectation,
)
from bellstrong.inequalities import (
    StrongInputs,
    ardehali_ideal,
    ardehali_strong,
    ardehali_strong_symmetric,
    bell_1965,
    ch,
    chsh,
    evaluate,
)
from bellstrong.quantum import ideal_joint, real_joint

HALF = SinglesProbabilities(0.5, 0.5)
ALIGNED = JointProbabilities(0.5, 0, 0, 0.5)
NOISE = JointProbabilities(0.25, 0.25, 0.25, 0.25)


def E(theta):
    return math.cos(2 * math.radians(theta))


# -- Bell 1965 / CHSH ---------------------------------------------------------

def test_bell_maximal():
    r = bell_1965(0.5, 0.5, -0.5)
    assert r.lhs == 1.5 and r.bound == 1 and r.violation_factor == 1.5


@pytest.mark.parametrize("args, lhs", [((0, 0, 0), 0.0), ((1, 1, 1), 1.0)])
def test_bell_trivial(args, lhs):
    r = bell_1965(*args)
    assert r.lhs == lhs and not r.violated


def test_bell_rejects_out_of_range():
    with pytest.raises(DomainError):
        bell_1965(1.5, 0, 0)


def test_chsh_at_reference_angles():
    assert chsh(0.5, 0.5, -0.5, 1).lhs == 2.5


def test_chsh_optimal_family():
    # a'=0, b'=22.5, a=45, b=67.5
    r = chsh(E(45 - 67.5), E(45 - 22.5), E(0 - 67.5), E(0 - 22.5))
    assert r.lhs == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    assert r.violation_factor == pytest.approx(math.sqrt(2), abs=1e-12)


def test_chsh_zero():
    assert chsh(0, 0, 0, 0).lhs == 0


# -- inequality with singles --------------------------------------------------

def test_ideal_form_maximal_violation():
    r = ardehali_ideal(ideal_joint(30, 60), ideal_joint(30, 0), ideal_joint(0, 60), ideal_joint(0, 0), HALF, HALF)
    assert r.lhs == pytest.approx(1.5, abs=1e-12)


def test_ideal_form_noise():
    assert ardehali_ideal(NOISE, NOISE, NOISE, NOISE, HALF, HALF).lhs == -1


def test_ideal_form_saturates_with_all_aligned():
    assert ardehali_ideal(ALIGNED, ALIGNED, ALIGNED, ALIGNED, HALF, HALF).lhs == 1


@st.composite
def normalized_joint(draw):
    w = [draw(st.floats(0.01, 1)) for _ in range(4)]
    s = sum(w)
    return JointProbabilities(*(x / s for x in w))


@given(normalized_joint(), normalized_joint(), normalized_joint(), normalized_joint())
def test_ideal_closure_equals_chsh(j_ab, j_bpa, j_apb, j_apbp):
    # no undetected fraction: singles are the joint marginals at (a', b')
    s_ap = SinglesProbabilities(j_apbp.pp + j_apbp.pm, j_apbp.mp + j_apbp.mm)
    s_bp = SinglesProbabilities(j_apbp.pp + j_apbp.mp, j_apbp.pm + j_apbp.mm)
    lhs = ardehali_ideal(j_ab, j_bpa, j_apb, j_apbp, s_ap, s_bp).lhs
    ref = chsh(*(expectation(j) for j in (j_ab, j_bpa, j_apb, j_apbp))).lhs
    assert lhs - 1 == pytest.approx(ref - 2, abs=1e-12)


@given(normalized_joint(), normalized_joint(), normalized_joint())
def test_reduces_to_bell_1965_with_aligned_primes(j_ab, j_bpa, j_apb):
    lhs = ardehali_ideal(j_ab, j_bpa, j_apb, ALIGNED, HALF, HALF).lhs
    ref = bell_1965(expectation(j_ab), expectation(j_bpa), expectation(j_apb)).lhs
    assert lhs == pytest.approx(ref, abs=1e-12)


# -- strong form --------------------------------------------------------------

def _strong_from(joint):
    return StrongInputs(
        j_ab=joint(30, 60), j_bpa=joint(30, 0), j_apb=joint(0, 60), j_apbp=joint(0, 0),
        j_apr=joint(0, 0), j_rbp=joint(0, 0), j_rr=joint(0, 0),
    )


@pytest.mark.parametrize("eta", [0.05, 0.5, 1.0])
@pytest.mark.parametrize("phi", [2, 30, 120, 180])
def test_strong_real_ideal_prisms(eta, phi):
    app = Apparatus(eta, phi)
    r = ardehali_strong(_strong_from(lambda a, b: real_joint(app, a, b)))
    assert r.lhs == pytest.approx(1.5, abs=1e-12)


def test_strong_uniform_noise():
    noise = JointProbabilities(0.01, 0.01, 0.01, 0.01)
    assert ardehali_strong(_strong_from(lambda a, b: noise)).lhs == pytest.approx(-1, abs=1e-15)


def test_strong_zero_denominator():
    z = JointProbabilities(0, 0, 0, 0)
    inputs = StrongInputs(*([ALIGNED] * 6), z)
    with pytest.raises(DegenerateExperimentError):
        ardehali_strong(inputs)


@given(st.floats(1e-3, 1e3), st.integers(0, 2**31 - 1))
def test_strong_scale_invariance(k, seed):
    rng = np.random.default_rng(seed)
    # keep every scaled total <= 1
    cap = min(1.0, 1.0 / k)
    inputs = StrongInputs(*(JointProbabilities(*(rng.dirichlet(np.ones(5))[:4] * cap)) for _ in range(7)))
    base = inputs.scaled(1 / k) if k > 1 else inputs
    assert ardehali_strong(base.scaled(k)).lhs == pytest.approx(ardehali_strong(base).lhs, rel=1e-12, abs=1e-12)


@given(st.floats(0, 90), st.floats(0.1, 1), st.floats(1, 60))
def test_strong_equals_symmetric_under_rotation_symmetry(t, eta, phi):
    app = Apparatus(eta, phi)
    joint = lambda a, b: real_joint(app, a, b)  # noqa: E731
    inputs = StrongInputs(
        j_ab=joint(t, 2 * t), j_bpa=joint(t, 0), j_apb=joint(0, 2 * t), j_apbp=joint(0, 0),
        j_apr=joint(0, 0), j_rbp=joint(0, 0), j_rr=joint(0, 0),
    )
    sym = ardehali_strong_symmetric(expectation(joint(0, t)), expectation(joint(0, 2 * t)), joint(0, 0))
    assert ardehali_strong(inputs).lhs == pytest.approx(sym.lhs, abs=1e-12)


# -- symmetric strong form ----------------------------------------------------

def test_symmetric_ideal():
    assert ardehali_strong_symmetric(0.5, -0.5, ALIGNED).lhs == pytest.approx(1.5)


def test_symmetric_real_prefactors_cancel():
    app = Apparatus(0.9, 30)
    r = ardehali_strong_symmetric(
        expectation(real_joint(app, 30, 0)), expectation(real_joint(app, 60, 0)), real_joint(app, 0, 0)
    )
    assert r.lhs == pytest.approx(1.5, abs=1e-12)


def test_symmetric_noise():
    assert ardehali_strong_symmetric(0, 0, NOISE).lhs == -1


def test_symmetric_zero_k():
    with pytest.raises(DegenerateExperimentError):
        ardehali_strong_symmetric(0, 0, JointProbabilities(0, 0, 0, 0))


# -- CH -----------------------------------------------------------------------

def test_ch_at_bound():
    r = ch(0.25, 0.25, 0.25, 0.25, 1)
    assert r.lhs == 0 and r.violation_factor == 1 and not r.violated


def test_ch_one_channel_oracle():
    # ideal one-channel polarizers: p(theta) = p_inf_inf cos^2(theta) / 2, p(a', inf) = p_inf_inf / 2
    pinf = 0.5
    p = lambda th: pinf * math.cos(math.radians(th)) ** 2 / 2  # noqa: E731
    exact = ch(p(22.5), p(67.5), pinf / 2, pinf / 2, pinf)
    assert exact.lhs == pytest.approx((math.sqrt(2) - 1) / 2, abs=1e-15)
    rounded = ch(0.2134, 0.0366, 0.25, 0.25, 0.5)
    assert rounded.lhs == pytest.approx(0.2072, abs=1e-12)
    assert rounded.excess == pytest.approx(0.2072, abs=1e-12)


def test_ch_below():
    assert ch(0, 1, 0, 0, 1).lhs == -1


def test_ch_errors():
    with pytest.raises(DegenerateExperimentError):
        ch(0.1, 0.1, 0.1, 0.1, 0)
    with pytest.raises(DomainError):
        ch(-0.1, 0.1, 0.1, 0.1, 1)


# -- dispatch -----------------------------------------------------------------

@pytest.mark.parametrize(
    "report",
    [
        bell_1965(0.5, 0.5, -0.5),
        chsh(0.1, 0.2, 0.3, 0.4),
        ardehali_ideal(NOISE, ALIGNED, NOISE, ALIGNED, HALF, HALF),
        ardehali_strong(_strong_from(ideal_joint), settings={"a": 30, "b": 60}),
        ardehali_strong_symmetric(0.5, -0.5, ALIGNED),
        ch(0.2, 0.03, 0.25, 0.25, 0.5),
    ],
    ids=lambda r: r.name.value,
)
def test_evaluate_round_trip(report):
    d = report.to_dict()
    again = evaluate(d["inequality"], d["inputs"], {s["label"]: s["deg"] for s in d["settings"]})
    assert again.to_dict() == d


def test_evaluate_unknown_and_missing():
    with pytest.raises(DomainError):
        evaluate("nope", {})
    with pytest.raises(DomainError, match="missing"):
        evaluate("chsh", {"e_ab": 0})
