import random
from fractions import Fraction

import pytest

from pwproj.exactnum import QuadraticNumber, qn_compare
from pwproj.piecewise import (
    DiscontinuousError,
    EndGermNotTranslationError,
    NotFixedError,
    NotIncreasingError,
    PiecewiseProjectiveMap,
    PoleInsidePieceError,
    build_hs,
    config_act,
    configuration,
    construct_h_s,
    construct_prechain,
    membership,
    pm_compose,
    pm_identity,
    pm_inverse,
    pm_new,
    pm_restrict,
    pm_translation,
)
from pwproj.psl2 import ProjectiveMatrix


def q(a, b=0, k=1):
    return QuadraticNumber(Fraction(a), Fraction(b), k)


SQRT3 = q(0, 1, 3)
IDENT = ProjectiveMatrix.identity()


@pytest.fixture(scope="module")
def hs3():
    return build_hs(SQRT3)


@pytest.fixture(scope="module")
def pre3():
    return construct_prechain(SQRT3)


def test_pm_new_translation():
    a3 = pm_new([], [ProjectiveMatrix.translation(3)])
    assert a3.is_identity is False
    assert a3(q(2)) == q(5)
    assert a3.br() == 0


def test_pm_new_validation_errors():
    with pytest.raises(DiscontinuousError):
        pm_new([q(0)], [IDENT, ProjectiveMatrix.translation(1)])
    with pytest.raises(NotIncreasingError):
        pm_new([q(1), q(0)], [IDENT, IDENT, IDENT])
    with pytest.raises(EndGermNotTranslationError):
        pm_new([], [ProjectiveMatrix.make(2, 3, 1, 2)])
    # continuous gluing of (2x+3)/(x+2) on [-3, -1], whose pole -2 is inside
    with pytest.raises(PoleInsidePieceError):
        pm_new(
            [q(-3), q(-1)],
            [
                ProjectiveMatrix.translation(6),
                ProjectiveMatrix.make(2, 3, 1, 2),
                ProjectiveMatrix.translation(2),
            ],
        )


def test_pm_new_reduces_equal_pieces():
    m = pm_new([q(1)], [IDENT, IDENT])
    assert m.is_identity
    assert len(m.breaks) == 0


def test_hs_is_valid_four_piece(hs3):
    assert len(hs3.map.breaks) == 3
    assert hs3.map.pieces[1] == hs3.generator
    assert membership(hs3.map, "HZ")
    assert membership(hs3.map, "GTILDE")


def test_compose_inverse_identity(hs3):
    f = hs3.map
    assert pm_compose(f, pm_inverse(f)).is_identity
    assert pm_compose(pm_identity(), f) == f
    assert pm_inverse(pm_identity()).is_identity
    assert pm_inverse(pm_translation(4)) == pm_translation(-4)


def test_compose_pointwise(hs3, pre3):
    rng = random.Random(9)
    maps = [hs3.map, hs3.map.inverse(), pre3.companion, pm_translation(2)]
    composites = []
    for _ in range(20):
        g1 = rng.choice(maps)
        g2 = rng.choice(maps)
        composites.append((pm_compose(g2, g1), g1, g2))
    for _ in range(10_000):
        comp, g1, g2 = composites[rng.randrange(len(composites))]
        x = q(Fraction(rng.randint(-400, 400), rng.randint(1, 40)))
        assert comp(x) == g2(g1(x))


def test_inverse_of_hs_configuration(hs3):
    conf = configuration(pm_inverse(hs3.map), SQRT3)
    assert conf.value_at(SQRT3) == -1
    assert len(conf.entries) == 1


def test_restrict(hs3):
    f = hs3.map
    lo, hi = f.support_intervals()[0]
    assert pm_restrict(f, lo, hi) == f
    assert pm_restrict(pm_identity(), q(0), q(1)).is_identity
    with pytest.raises(NotFixedError):
        pm_restrict(pm_translation(1), q(0), q(1))
    # restriction to a sub-window between fixed points clips the support
    sub = pm_restrict(f, lo, hi)
    supp = sub.support_intervals()
    assert supp[0][0] == lo and supp[-1][1] == hi


def test_configuration_examples(hs3):
    f = hs3.map
    assert configuration(f, SQRT3).as_text_dict() == {"0+1*sqrt(3)": 1}
    assert configuration(pm_identity(), SQRT3).is_zero
    assert configuration(f.power(2), SQRT3).value_at(SQRT3) == 2
    assert configuration(pm_translation(5), SQRT3).is_zero


def test_membership_examples(hs3):
    assert membership(pm_translation(1), "HS", SQRT3)
    assert not membership(hs3.map, "HS", SQRT3)
    assert membership(hs3.map, "HZ")


def test_config_act_identities(hs3):
    conf = configuration(hs3.map, SQRT3)
    acted = config_act(pm_identity(), conf)
    assert acted == conf
    empty = configuration(pm_identity(), SQRT3)
    assert config_act(hs3.map, empty).as_text_dict() == {"0+1*sqrt(3)": 1}


def test_config_act_matches_composition(hs3, pre3):
    # exact identity: config_act(g, C_h) == configuration(h o g)
    rng = random.Random(77)
    gens = [hs3.map, hs3.map.inverse(), pre3.companion, pre3.companion.inverse()]
    for _ in range(120):
        h = rng.choice(gens)
        g = rng.choice(gens)
        left = config_act(g, configuration(h, SQRT3))
        right = configuration(pm_compose(h, g), SQRT3)
        assert left == right


def test_no_fixed_configuration_under_hs(hs3):
    # acting by the delta element always increments the value at the base
    conf = configuration(pm_identity(), SQRT3)
    for _ in range(5):
        new = config_act(hs3.map, conf)
        assert new.value_at(SQRT3) == conf.value_at(SQRT3) + 1
        conf = new


def test_cocycle_words(hs3, pre3):
    rng = random.Random(5)
    gens = [hs3.map, hs3.map.inverse(), pre3.companion, pre3.companion.inverse()]
    for _ in range(60):
        word = [rng.choice(gens) for _ in range(rng.randint(1, 6))]
        prod = pm_identity()
        for letter in word:
            prod = prod * letter
        folded = configuration(pm_identity(), SQRT3)
        for letter in word:
            folded = config_act(letter, folded)
        assert configuration(prod, SQRT3) == folded


def test_br_subadditive(hs3, pre3):
    rng = random.Random(15)
    gens = [hs3.map, hs3.map.inverse(), pre3.companion, pre3.companion.inverse()]
    for _ in range(150):
        g = pm_identity()
        h = pm_identity()
        for _ in range(rng.randint(1, 3)):
            g = g * rng.choice(gens)
            h = h * rng.choice(gens)
        assert (g * h).br() <= g.br() + h.br()
        assert g.inverse().br() == g.br()


def test_breaks_stay_in_finitely_many_fields(hs3, pre3):
    rng = random.Random(25)
    gens = [hs3.map, hs3.map.inverse(), pre3.companion, pre3.companion.inverse()]
    base_fields = set()
    for g in gens:
        base_fields |= {b.k for b in g.breaks}
    for _ in range(40):
        prod = pm_identity()
        for _ in range(rng.randint(1, 6)):
            prod = prod * rng.choice(gens)
        assert {b.k for b in prod.breaks} <= base_fields


def test_construct_h_s_contract_multiple_fields():
    for s in [q(0, 1, 2), q(Fraction(1, 2), 1, 2), q(0, -1, 3)]:
        built = build_hs(s)
        conf = configuration(built.map, s)
        assert conf.as_text_dict() == {smallest_text(s): 1}
        for b in built.map.breaks:
            if b != s:
                assert b.k != s.k
        assert membership(built.map, "HZ")
        assert len(built.map.support_intervals()) == 1


def smallest_text(s):
    from pwproj.exactnum import qn_to_text

    return qn_to_text(s)


def test_construct_h_s_rejects_rationals():
    with pytest.raises(ValueError):
        construct_h_s(q(Fraction(1, 2)))


def test_one_sided(hs3):
    # strictly above the identity at rational probes inside the support
    lo, hi = hs3.map.support_intervals()[0]
    probes = []
    n = 2
    while len(probes) < 3 and n < 10**9:
        x = q(n)
        if qn_compare(x, lo) > 0 and qn_compare(x, hi) < 0:
            probes.append(x)
        n *= 3
    assert probes
    for x in probes:
        assert qn_compare(hs3.map(x), x) > 0


def test_prechain_contract(pre3):
    a, b, c, d = pre3.a, pre3.b, pre3.c, pre3.d
    assert qn_compare(a, b) < 0 < qn_compare(c, b)
    assert qn_compare(c, d) < 0
    assert b == SQRT3 and d == pre3.hs.far_end
    assert pre3.f.support_intervals() == [(a, c)]
    assert pre3.g.support_intervals() == [(b, d)]
    assert pre3.g(b) == b
    assert pre3.f(c) == c
    assert qn_compare(pre3.g.inverse()(c), pre3.f(b)) < 0


def test_prechain_below_branch():
    pre = construct_prechain(q(0, -1, 3))
    assert qn_compare(pre.a, pre.b) < 0
    assert qn_compare(pre.b, pre.c) < 0
    assert qn_compare(pre.c, pre.d) < 0
    assert pre.f.support_intervals() == [(pre.a, pre.c)]
    assert pre.g.support_intervals() == [(pre.b, pre.d)]
    assert qn_compare(pre.g.inverse()(pre.c), pre.f(pre.b)) < 0


def test_map_text_round_trip(hs3):
    f = hs3.map
    assert PiecewiseProjectiveMap.from_text(f.to_text()) == f
    assert PiecewiseProjectiveMap.from_text(pm_identity().to_text()).is_identity
