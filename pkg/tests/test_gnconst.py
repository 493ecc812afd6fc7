import math

import mpmath
import pytest

from triwave.exceptions import ConfigurationError, InputError
from triwave.gnconst import (GNConstantTable, gn_exponent, load_gn_table, parse_gn_table,
                             q_upper, radial_quotient, trial_gn_constant)

from oracles import SHARP_GN, sharp_gn_constant


def test_exponent_values():
    assert gn_exponent(4.0, 3) == 0.75
    assert gn_exponent(2.5, 3) == pytest.approx(0.3)
    assert gn_exponent(2.0, 2) == 0.0
    assert q_upper(3) == 6.0 and math.isinf(q_upper(2))


def _sech_quotient_mp(q):
    # 1D extremal sech^(2/(q-2)), integrated in extended precision
    s = mpmath.mpf(2) / (q - 2)
    mpmath.mp.dps = 30
    lq = 2 * mpmath.quad(lambda x: mpmath.sech(x) ** (s * q), [0, mpmath.inf])
    l2 = 2 * mpmath.quad(lambda x: mpmath.sech(x) ** (2 * s), [0, mpmath.inf])
    gr = 2 * mpmath.quad(lambda x: (s * mpmath.tanh(x) * mpmath.sech(x) ** s) ** 2, [0, mpmath.inf])
    g = mpmath.mpf(q - 2) / (2 * q)
    return float(lq ** (mpmath.mpf(1) / q) / (gr ** (g / 2) * l2 ** ((1 - g) / 2)))


@pytest.mark.parametrize("q", [3.0, 4.0, 5.0])
def test_one_dimensional_constants_are_sharp(q):
    assert trial_gn_constant(1, q) == pytest.approx(_sech_quotient_mp(q), rel=1e-8)


def test_radial_quotient_gaussian_closed_form():
    # N=3, q=4, f = exp(-r^2): |f|_4^4 = (pi/4)^1.5, |f|_2^2 = (pi/2)^1.5, |grad f|^2 = 3 (pi/2)^1.5
    val = radial_quotient(lambda r: math.exp(-r * r), lambda r: -2 * r * math.exp(-r * r), 4.0, 3)
    l4 = (math.pi / 4) ** 0.375
    l2 = (math.pi / 2) ** 0.75
    gr = (3 * (math.pi / 2) ** 1.5) ** 0.5
    assert val == pytest.approx(l4 / (gr ** 0.75 * l2 ** 0.25), rel=1e-10)


@pytest.mark.parametrize("key", sorted(SHARP_GN))
def test_table_dominates_sharp_constants(key):
    N, q = key
    table = load_gn_table()
    sharp = SHARP_GN[key]
    trial = trial_gn_constant(N, q)
    # a trial quotient can never exceed the sharp constant
    assert trial <= sharp * (1 + 1e-6)
    assert trial >= 0.99 * sharp
    assert table.lookup(N, q) >= sharp


@pytest.mark.slow
def test_shooting_oracle_reproduces_frozen_value():
    assert sharp_gn_constant(3, 4.0) == pytest.approx(SHARP_GN[(3, 4.0)], rel=1e-6)


def test_shipped_table_coverage():
    table = load_gn_table()
    for N, qs in ((1, (2.5, 4.0, 5.95)), (2, (3.0, 5.95)), (3, (2.5, 3.0, 4.0, 5.95))):
        for q in qs:
            assert table.has(N, q)
    assert not table.has(3, 6.0)
    assert table.metadata["safety_factor"] == "1.1"


def test_lookup_missing_raises():
    with pytest.raises(ConfigurationError):
        load_gn_table().lookup(3, 2.51)


def test_text_roundtrip():
    t = GNConstantTable(constants={(3, 2.5): 0.75, (1, 4.0): 0.9}, metadata={"note": "x"})
    back = parse_gn_table(t.to_text())
    assert back.constants == t.constants
    assert back.metadata == {"note": "x"}


@pytest.mark.parametrize("text", [
    "C[N=3,q=2.50] = 1.0\n",
    "format = triwave-gn-table\nversion = 2\n",
    "format = triwave-gn-table\nversion = 1\nC[N=3,q=2.50] = -1\n",
    "format = triwave-gn-table\nversion = 1\nnot a line\n",
])
def test_parse_errors(text):
    with pytest.raises(InputError):
        parse_gn_table(text)
