import random
from fractions import Fraction

import numpy as np
import pytest

from fllab.errors import ConductorExceeded
from fllab.padic import FieldConfig
from fllab.weil import (
    CharacterRing,
    FiniteLevelFunction,
    fourier_order_four_check,
    modulation_for_translation,
    partial_fourier,
    plancherel_sum,
    psi_value,
    sl2_relation_check,
    unit_selfdual_check,
    weil_apply,
)

CFG3 = FieldConfig(3, -1)
CFG5 = FieldConfig(5, 2)


def test_psi_value_examples():
    ring = CharacterRing(3, 2)
    assert psi_value(CFG3.scalar(5), ring) == ring.one()
    assert psi_value(Fraction(1, 3), ring) == ring.monomial(3)  # zeta_9^3 = zeta_3
    assert psi_value(Fraction(2, 9), ring) == ring.monomial(2)
    # psi_E factors through the trace: psi_E(w-part) is trivial
    assert psi_value(CFG3.quad(Fraction(1, 3), Fraction(1, 3)), ring) == ring.monomial(6)
    with pytest.raises(ConductorExceeded):
        psi_value(Fraction(1, 27), ring)


def test_character_ring_arithmetic():
    ring = CharacterRing(3, 1)
    z = ring.monomial(1)
    # 1 + zeta + zeta^2 = 0
    s = ring.one() + z + ring.monomial(2)
    assert s.is_zero()
    assert z * z == ring.monomial(2)
    assert z.conj() == ring.monomial(2)
    # denominators normalize
    three = ring.one() + ring.one() + ring.one()
    third = ring.monomial(0, den=1)
    assert (three * third).canonical() == ring.one().canonical()


def test_unit_box_is_fourier_fixed():
    for cfg, n in [(CFG3, 2), (CFG5, 2), (CFG3, 3), (CFG5, 3)]:
        assert unit_selfdual_check(cfg, n)
    # a character of the wrong conductor breaks it
    assert not unit_selfdual_check(CFG3, 2, kernel_shift=1)


def test_scaled_indicator_transform():
    # gl side, n=2: F(1_{pO x O}) = p^-1 1_{O x p^-1 O}
    f = FiniteLevelFunction.zero("gl", 2, CFG3, 1, 1)
    P, p = f.P, f.p
    # digit k represents the coset k/p + pO: b in pO needs k = 0, c in O needs p | k
    for kb in range(P):
        for kc in range(P):
            if kb % (p**2) == 0 and kc % p == 0:
                f.table[kb, kc, 0] = 1
    got = partial_fourier(f)
    want = FiniteLevelFunction.zero("gl", 2, CFG3, 1, 1)
    # 1_{O x p^-1 O} with denominator p: b digit divisible by p, c digit free
    for kb in range(P):
        for kc in range(P):
            if kb % p == 0:
                want.table[kb, kc, 0] = 1
    want.den = 1
    assert got.equals(want)


def test_fourier_square_is_reflection_and_order_four():
    assert fourier_order_four_check(CFG3, 2, (1, 1), 5, seed=11)
    assert fourier_order_four_check(CFG5, 2, (1, 1), 3, seed=12)
    rng = random.Random(13)
    f = FiniteLevelFunction.random("u", 3, CFG3, 1, 0, rng)
    f2 = partial_fourier(partial_fourier(f))
    assert f2.equals(f.reflect())


def test_weil_apply_examples():
    rng = random.Random(17)
    f = FiniteLevelFunction.random("gl", 2, CFG3, 1, 1, rng)
    assert weil_apply([("n", 0)], f).equals(f)
    # n(1) on the unit box: q is integral on the support, psi trivial
    box = FiniteLevelFunction.unit_box("u", 2, CFG3, 1, 1)
    assert weil_apply([("n", 1)], box).equals(box)
    # n(1) is genuinely nontrivial once the support reaches q of negative valuation
    delta = FiniteLevelFunction.zero("gl", 2, CFG3, 1, 1)
    delta.table[1, 1, 0] = 1  # b = c = 1/3, q = 1/9
    assert not weil_apply([("n", 1)], delta).equals(delta)
    # w^4 = identity as a word
    assert weil_apply(["w", "w", "w", "w"], f).equals(f)
    # t below the grid's range is rejected (the phase would split cosets)
    with pytest.raises(ConductorExceeded):
        weil_apply([("n", Fraction(1, 3))], f)


def test_sl2_relations():
    assert sl2_relation_check(CFG3, 2, (1, 1), 10, seed=21)
    assert sl2_relation_check(CFG5, 2, (1, 1), 4, seed=22)
    # scaling F by a root of unity breaks the relations
    ring_q = 3 ** (1 + 1 + 2)
    assert not sl2_relation_check(CFG3, 2, (1, 1), 2, seed=23, fourier_scale=ring_q // 3)


def test_plancherel_preserved():
    rng = random.Random(29)
    for side in ("u", "gl"):
        f = FiniteLevelFunction.random(side, 2, CFG3, 1, 1, rng)
        lhs = plancherel_sum(f)
        rhs = plancherel_sum(partial_fourier(f))
        assert lhs.canonical() == rhs.canonical()


def test_translation_modulation_exchange():
    rng = random.Random(31)
    for side in ("u", "gl"):
        f = FiniteLevelFunction.random(side, 2, CFG3, 1, 1, rng)
        v = [rng.randrange(f.P) for _ in range(f.axes)]
        lhs = partial_fourier(f.translate(v))
        rhs = partial_fourier(f).pointwise_psi(modulation_for_translation(f, v))
        assert lhs.equals(rhs)


def test_q_multiplication_does_not_commute_with_fourier():
    # witness: a delta at the coset b = c = 1/3, where q = 1/9 has a nontrivial phase
    f = FiniteLevelFunction.zero("gl", 2, CFG3, 1, 1)
    f.table[1, 1, 0] = 1
    a = weil_apply([("n", 1), "w"], f)
    b = weil_apply(["w", ("n", 1)], f)
    assert not a.equals(b)


def test_representative_independence():
    # legal phases are blind to the choice of coset representatives
    rng = random.Random(37)
    f = FiniteLevelFunction.random("u", 2, CFG3, 1, 1, rng)
    t = Fraction(1)
    base = f.pointwise_psi(lambda coords: t * f.q_of(coords))
    for _ in range(5):
        shift = [rng.randrange(3) for _ in range(f.axes)]
        alt = f.pointwise_psi(lambda coords: t * f.q_of(coords), shift=shift)
        assert base.equals(alt)


def test_spectator_untouched():
    f = FiniteLevelFunction.unit_box("gl", 2, CFG3, 1, 1)
    g = weil_apply([("n", 1), "w", "w"], f)
    assert g.spectator is f.spectator


def test_table_shape_invariant():
    for side, n in [("u", 2), ("gl", 2), ("u", 3)]:
        f = FiniteLevelFunction.zero(side, n, CFG3, 1, 1)
        dim = 2 * (n - 1)
        assert f.coset_count == (3 ** (1 + 1)) ** dim
