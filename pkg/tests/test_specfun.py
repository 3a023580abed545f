import math

import mpmath
import numpy as np
import pytest

from levy_expfun.exceptions import GammaPoleError, IntegerSpacingError
from levy_expfun.specfun import (
    GammaRatioSpec,
    MeijerGSpec,
    check_spacing,
    gamma_ratio,
    hyper_pfq,
    hyper_pfq_regularized,
    log_gamma,
    meijer_g,
    meijer_g_contour,
    pochhammer,
)


def rel(a, b):
    return abs(complex(a) - complex(b)) / abs(complex(b))


# ---------------------------------------------------------------- log gamma


@pytest.mark.parametrize("z, expected", [(1, 0.0), (4, math.log(6.0)), (0.5, 0.5723649429247001)])
def test_log_gamma_values(z, expected):
    assert abs(log_gamma(z) - expected) < 1e-14


def test_log_gamma_matches_mpmath_off_axis(rng):
    for _ in range(50):
        z = complex(rng.uniform(-20, 50), rng.uniform(-30, 30))
        assert rel(log_gamma(z), mpmath.loggamma(z)) < 1e-13


@pytest.mark.parametrize("z", [0, -1, -7])
def test_log_gamma_pole(z):
    with pytest.raises(GammaPoleError):
        log_gamma(z)


def test_reflection_formula(rng):
    checked = 0
    while checked < 1000:
        z = complex(rng.uniform(-5, 5), rng.uniform(-3, 3))
        if abs(z - round(z.real)) <= 0.1:
            continue
        g = np.exp(log_gamma(z) + log_gamma(1 - z))
        assert abs(g * np.sin(np.pi * z) / np.pi - 1) < 1e-12
        checked += 1


# ---------------------------------------------------------------- gamma ratio


@pytest.mark.parametrize(
    "num, den, expected", [([3], [2], 2.0), ([1, 1], [1], 1.0), ([5.5], [4.5], 4.5)]
)
def test_gamma_ratio_values(num, den, expected):
    assert abs(gamma_ratio(GammaRatioSpec(num, den)) - expected) < 1e-13


def test_gamma_ratio_denominator_pole_is_zero():
    assert gamma_ratio(GammaRatioSpec([2.5], [-3])) == 0


def test_gamma_ratio_numerator_pole_raises():
    with pytest.raises(GammaPoleError):
        gamma_ratio(GammaRatioSpec([-2], [1.5]))


def test_gamma_ratio_cancels_identical_arguments():
    assert gamma_ratio(GammaRatioSpec([0, 2], [0])) == pytest.approx(1.0)


# ---------------------------------------------------------------- pochhammer


def test_pochhammer_values():
    assert pochhammer(0.3 + 2j, 0) == 1
    assert pochhammer(1, 4) == pytest.approx(24.0)
    assert pochhammer(-2, 3) == 0


@pytest.mark.parametrize("k", [5, 64, 65, 150])
def test_pochhammer_matches_mpmath(k):
    a = 0.37 + 0.2j
    assert rel(pochhammer(a, k), mpmath.rf(a, k)) < 1e-12


# ---------------------------------------------------------------- hypergeometric


def test_hyper_elementary():
    assert abs(hyper_pfq([], [], 1) - math.e) < 1e-15
    assert abs(hyper_pfq([1], [2], 1) - (math.e - 1)) < 1e-15


def test_hyper_3f3_against_brute_force():
    mpmath.mp.dps = 60
    try:
        oracle = mpmath.nsum(
            lambda k: mpmath.rf(1, k) ** 3 / mpmath.rf(2, k) ** 3 * mpmath.mpf(0.5) ** k / mpmath.factorial(k),
            [0, mpmath.inf],
        )
    finally:
        mpmath.mp.dps = 15
    assert rel(hyper_pfq([1, 1, 1], [2, 2, 2], 0.5), complex(oracle)) < 1e-12


def test_hyper_cancellation_is_escalated():
    # 1F1(1; 2; z) = (e^z - 1)/z, alternating and badly cancelling at z = -40
    z = -40.0
    assert rel(hyper_pfq([1], [2], z), math.expm1(z) / z) < 1e-12


def test_hyper_beyond_double_range():
    # working precision above 308 digits, where the tolerance itself underflows a double
    from levy_expfun._numeric import MpContext
    from levy_expfun.specfun import _pfq

    ctx = MpContext(400)
    got = _pfq(ctx, [ctx.num(4.8)], [ctx.num(9.5)], ctx.num(740.0))
    mpmath.mp.dps = 60
    try:
        expected = mpmath.hyp1f1(4.8, 9.5, 740.0)
    finally:
        mpmath.mp.dps = 15
    assert abs(got / expected - 1) < 1e-40


def test_hyper_random_complex_against_mpmath(rng):
    for _ in range(20):
        a = [complex(rng.uniform(-2, 3), rng.uniform(-1, 1)) for _ in range(3)]
        b = [complex(rng.uniform(0.5, 4), rng.uniform(-1, 1)) for _ in range(3)]
        z = complex(rng.uniform(-5, 5), rng.uniform(-2, 2))
        assert rel(hyper_pfq(a, b, z), mpmath.hyper(a, b, z)) < 1e-12


def test_regularized_at_zero_and_at_denominator_pole():
    assert hyper_pfq_regularized([1], [2], 0) == pytest.approx(1.0)
    a, b = [0.3, 1.2, 2.5], [1.5, 0.7, 2.2]
    assert rel(hyper_pfq_regularized(a, b, 0), gamma_ratio(GammaRatioSpec(a, b))) < 1e-13
    # b = -1 is a pole of the plain series; the regularized limit stays finite
    expected = mpmath.nsum(
        lambda k: mpmath.gamma(0.5 + k) * mpmath.rgamma(-1 + k) * mpmath.mpf(0.7) ** k / mpmath.factorial(k),
        [0, mpmath.inf],
    )
    assert rel(hyper_pfq_regularized([0.5], [-1], 0.7), complex(expected)) < 1e-12


def test_regularized_is_gamma_times_plain(rng):
    for _ in range(20):
        a = [complex(rng.uniform(0.2, 3), rng.uniform(-1, 1)) for _ in range(3)]
        b = [complex(rng.uniform(0.5, 4), rng.uniform(-1, 1)) for _ in range(3)]
        z = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
        expected = gamma_ratio(GammaRatioSpec(a, b)) * hyper_pfq(a, b, z)
        assert rel(hyper_pfq_regularized(a, b, z), expected) < 1e-12


def test_4f4_to_3f3_contiguous_identity(rng):
    for _ in range(50):
        al = [complex(rng.uniform(-2, 4), rng.uniform(-1, 1)) for _ in range(3)]
        be = [complex(rng.uniform(1.5, 5), rng.uniform(-1, 1)) for _ in range(3)]
        z = complex(rng.uniform(-4, 4), rng.uniform(-1, 1))
        factor = np.prod([(a - 1) / (b - 1) for a, b in zip(al, be)])
        lhs = 1 + z * factor * hyper_pfq([1] + al, [2] + be, z)
        rhs = hyper_pfq([a - 1 for a in al], [b - 1 for b in be], z)
        assert abs(lhs - rhs) <= 1e-12 * max(abs(rhs), 1.0)


# ---------------------------------------------------------------- Meijer G

SHAPES = [(1, 0, 0, 1), (2, 1, 1, 3), (3, 1, 3, 4), (2, 1, 2, 3), (3, 3, 4, 5), (4, 1, 4, 5), (3, 2, 3, 4)]


def random_spec(rng):
    """Random real-parameter spec satisfying conditions A and B, with b's well separated from integer spacing."""
    m, n, p, q = SHAPES[rng.integers(len(SHAPES))]
    while True:
        bm = rng.uniform(0.05, 2.0, m)
        d = np.abs(bm[:, None] - bm[None, :])[np.triu_indices(m, 1)]
        if m < 2 or np.min(np.abs(d - np.round(d))) > 0.05:
            break
    an = rng.uniform(-1.0, min(bm) + 0.9, n)
    return MeijerGSpec(m, n, list(an) + list(rng.uniform(-1, 2, p - n)), list(bm) + list(rng.uniform(-1, 2, q - m)))


def mp_meijer(spec, x):
    return complex(mpmath.meijerg([spec.a[: spec.n], spec.a[spec.n:]], [spec.b[: spec.m], spec.b[spec.m:]], x))


def test_meijer_single_gamma():
    spec = MeijerGSpec(1, 0, [], [0])
    assert abs(meijer_g(spec, 1.0) - math.exp(-1)) < 1e-15
    assert abs(meijer_g_contour(spec, 2.0) - math.exp(-2)) < 1e-13


def test_meijer_series_matches_mpmath(rng):
    for _ in range(25):
        spec = random_spec(rng)
        x = float(rng.uniform(0.2, 4))
        assert rel(meijer_g(spec, x), mp_meijer(spec, x)) < 1e-12


def test_meijer_series_matches_contour(rng):
    for _ in range(25):
        spec = random_spec(rng)
        x = float(rng.uniform(0.2, 4))
        assert rel(meijer_g(spec, x), meijer_g_contour(spec, x)) < 1e-10


def test_meijer_shift_identity(rng):
    for _ in range(25):
        spec = random_spec(rng)
        x, c = float(rng.uniform(0.2, 4)), float(rng.uniform(-0.5, 0.5))
        assert rel(x**c * meijer_g(spec, x), meijer_g(spec.shifted(c), x)) < 1e-12


def test_meijer_inversion_identity(rng):
    for _ in range(25):
        spec = random_spec(rng)
        x = float(rng.uniform(0.2, 4))
        # the inverted spec is integrated directly, so this is not a round trip through the series
        assert rel(meijer_g(spec, x), meijer_g_contour(spec.inverted(), 1.0 / x)) < 1e-10


def test_meijer_conjugate_symmetry():
    spec = MeijerGSpec(2, 1, [0.3 + 0.2j], [0.9 - 0.1j, 1.4 + 0.3j, 0.2])
    conj = MeijerGSpec(2, 1, [0.3 - 0.2j], [0.9 + 0.1j, 1.4 - 0.3j, 0.2])
    for x in (0.3, 1.0, 2.5):
        assert abs(np.conj(meijer_g(conj, x)) - meijer_g(spec, x)) < 1e-13 * abs(meijer_g(spec, x))
        assert abs(np.conj(meijer_g_contour(conj, x)) - meijer_g_contour(spec, x)) < 1e-12


def test_meijer_kou_g33_series_vs_contour(query):
    z1, z2, h1, h2 = (complex(v).real for v in (query.roots.zeta1, query.roots.zeta2,
                                                 query.roots.zeta_hat1, query.roots.zeta_hat2))
    s = 0.7
    k = query.params
    spec = MeijerGSpec(3, 3, [1 - s, 1, -k.rho, k.rho_hat], [1 - s, h1, h2, -z1, -z2])
    arg = 1.0 / (k.A * query.x)
    assert rel(meijer_g(spec, arg), meijer_g_contour(spec, arg)) < 1e-10


def test_meijer_small_argument_order(rng):
    spec = MeijerGSpec(2, 1, [0.4], [0.35, 1.1, -0.2])
    xs = np.geomspace(1e-4, 1e-8, 5)
    slopes = np.diff(np.log(np.abs([meijer_g(spec, x) for x in xs]))) / np.diff(np.log(xs))
    assert abs(slopes[-1] - spec.b_min()) < 1e-3


def test_integer_spacing_detected():
    with pytest.raises(IntegerSpacingError):
        check_spacing(MeijerGSpec(2, 0, [], [0.25, 1.25 + 1e-10]))
    check_spacing(MeijerGSpec(2, 0, [], [0.25, 1.5]))
