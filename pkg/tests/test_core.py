import math

import numpy as np
import pytest
from scipy import stats

from cs_variational.core import (Instance, NumericError, OutputChannel, ParameterError,
                                 PriorParams, Scaling, channel_log_likelihood, dumps_exact,
                                 generate_instance, mse)


def test_zero_density_gives_zero_signal():
    inst = generate_instance(4, 2, PriorParams(0.0), 1e-8, seed=3)
    assert np.array_equal(inst.x_true, np.zeros(4))


def test_support_size_within_binomial_band():
    # P(K outside [70, 130]) for K ~ Bin(1000, 0.1), about 1.4e-3
    p_out = stats.binom.cdf(69, 1000, 0.1) + stats.binom.sf(130, 1000, 0.1)
    assert p_out < 0.01
    seeds = 200
    inside = sum(70 <= np.count_nonzero(generate_instance(1000, 500, PriorParams(0.1), 1e-8,
                                                          seed=s).x_true) <= 130
                 for s in range(seeds))
    assert inside >= 0.99 * seeds


def test_noise_variance_within_three_standard_errors():
    delta0 = 1e-3
    hits = 0
    for seed in range(20):
        inst = generate_instance(300, 400, PriorParams(0.2), delta0, seed=seed)
        noise = inst.y - inst.F @ inst.x_true
        se = delta0 * math.sqrt(2.0 / inst.m)
        hits += abs(np.mean(noise ** 2) - delta0) <= 3 * se
    # each seed passes with probability ~0.997
    assert hits >= 19


def test_generation_is_bit_reproducible():
    a = generate_instance(50, 20, PriorParams(0.3), 1e-4, Scaling.UNIT_VARIANCE, seed=11)
    b = generate_instance(50, 20, PriorParams(0.3), 1e-4, Scaling.UNIT_VARIANCE, seed=11)
    c = generate_instance(50, 20, PriorParams(0.3), 1e-4, Scaling.UNIT_VARIANCE, seed=12)
    assert a.F.tobytes() == b.F.tobytes() and a.y.tobytes() == b.y.tobytes()
    assert a.x_true.tobytes() == b.x_true.tobytes()
    assert a.F.tobytes() != c.F.tobytes()


def test_matrix_scalings():
    n = 400
    unit = generate_instance(n, 300, PriorParams(0.1), 1e-8, Scaling.UNIT_VARIANCE, seed=0)
    assert abs(np.var(unit.F) - 1.0) < 0.02
    square = generate_instance(n, n, PriorParams(0.1), 1e-8, Scaling.ONE_OVER_N, seed=0)
    col = np.sum(square.F ** 2, axis=0)
    assert np.mean(np.abs(col - 1) <= 5 / math.sqrt(n)) >= 0.95
    # for M != N it is the rows whose squared norms concentrate at 1
    wide = generate_instance(n, 150, PriorParams(0.1), 1e-8, Scaling.ONE_OVER_N, seed=1)
    row = np.sum(wide.F ** 2, axis=1)
    assert np.mean(np.abs(row - 1) <= 5 / math.sqrt(n)) >= 0.95


def test_full_size_setup():
    inst = generate_instance(1024, 512, PriorParams(0.1), 1e-8, Scaling.UNIT_VARIANCE, seed=0)
    assert inst.alpha == 0.5 and inst.n == 1024 and inst.m == 512


@pytest.mark.parametrize("kwargs", [dict(n=0, m=2), dict(n=3, m=0), dict(n=3, m=2, delta0=0.0),
                                    dict(n=3, m=2, delta0=-1.0)])
def test_generation_rejects_bad_arguments(kwargs):
    args = dict(prior=PriorParams(0.1), delta0=1e-8)
    args.update(kwargs)
    with pytest.raises(ParameterError):
        generate_instance(**args)


def test_prior_validation():
    with pytest.raises(ParameterError):
        PriorParams(1.5)
    with pytest.raises(ParameterError):
        PriorParams(0.1, gaussian_var=0.0)
    with pytest.raises(ParameterError):
        PriorParams(0.1, gaussian_mean=1.0)


def test_instance_validation_and_immutability():
    with pytest.raises(ParameterError):
        Instance(F=np.ones((3, 2)), y=np.ones(2), delta0=1.0, prior=PriorParams(0.5))
    with pytest.raises(ParameterError):
        Instance(F=np.ones((2, 2)), y=np.ones(2), delta0=1.0, prior=PriorParams(0.5),
                 x_true=np.ones(3))
    inst = Instance(F=np.ones((2, 2)), y=np.ones(2), delta0=1.0, prior=PriorParams(0.5))
    with pytest.raises(ValueError):
        inst.F[0, 0] = 2.0
    assert inst.x_true is None


def test_json_round_trip_is_exact():
    inst = generate_instance(7, 5, PriorParams(0.3), 1e-8, Scaling.UNIT_VARIANCE, seed=4)
    text = inst.to_json()
    back = Instance.from_json(text)
    assert back.F.tobytes() == inst.F.tobytes()
    assert back.y.tobytes() == inst.y.tobytes()
    assert back.x_true.tobytes() == inst.x_true.tobytes()
    assert (back.delta0, back.prior, back.scaling, back.seed) == (
        inst.delta0, inst.prior, inst.scaling, inst.seed)
    assert back.to_json() == text


def test_json_floats_carry_seventeen_digits():
    assert dumps_exact([0.1]) == "[0.10000000000000001]"
    assert dumps_exact({"a": None, "b": 2, "c": [1.5, True]}) == '{"a": null, "b": 2, "c": [1.5, true]}'
    x = np.random.default_rng(0).standard_normal(100)
    assert np.array_equal(np.array(eval(dumps_exact(x))), x)


def test_mse_examples():
    x = np.array([0.0, 2.0, 0.0, 0.0])
    assert mse(x, x) == 0.0
    assert mse(np.zeros(4), x) == 1.0
    z = np.random.default_rng(1).standard_normal(9)
    assert mse(z + 1e-3, z) == pytest.approx(1e-6, rel=1e-9)
    with pytest.raises(ParameterError):
        mse(np.zeros(3), np.zeros(4))


def test_channel_log_likelihood_examples():
    half_log_2pi = 0.5 * math.log(2 * math.pi)
    assert channel_log_likelihood(OutputChannel.awgn(1.0), 0.3, 0.3) == pytest.approx(-half_log_2pi)
    assert channel_log_likelihood(OutputChannel.awgn(1.0), 1.0, 0.0) == pytest.approx(-0.5 - half_log_2pi)
    assert channel_log_likelihood(OutputChannel.awgn(2.0), 2.0, 0.0) == pytest.approx(
        -1 - 0.5 * math.log(4 * math.pi))
    ch = OutputChannel.custom(lambda y, z: -abs(y - z))
    assert channel_log_likelihood(ch, 1.0, 3.0) == -2.0


def test_channel_validation():
    with pytest.raises(ParameterError):
        OutputChannel.awgn(0.0)
    with pytest.raises(ParameterError):
        OutputChannel(kind="custom")
    with pytest.raises(ParameterError):
        OutputChannel.custom(lambda y, z: 0.0, quadrature_order=8)
    with pytest.raises(ParameterError):
        OutputChannel(kind="poisson")


def test_scaling_parse_and_numeric_error():
    assert Scaling.parse("UnitVariance") is Scaling.UNIT_VARIANCE
    assert Scaling.parse("one_over_n") is Scaling.ONE_OVER_N
    with pytest.raises(ParameterError):
        Scaling.parse("orthogonal")
    err = NumericError("bad", where="iteration 3")
    assert err.where == "iteration 3" and "iteration 3" in str(err)
