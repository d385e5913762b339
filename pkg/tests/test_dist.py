import math

import numpy as np
import pytest
from scipy import integrate

from aoicut.dist import (Deterministic, Exponential, GenericDensity, ShiftedExponential, erlang, parse_distribution,
                         partial_moment, truncated_moments, truncation_prob)
from aoicut.exceptions import ConfigError, DomainError, TruncationMassZero

E1 = math.exp(-1.0)


class TestTruncationProb:

    def test_exponential(self, exp1):
        assert truncation_prob(exp1, 1.0) == pytest.approx(1 - E1, rel=1e-12)

    def test_no_cutoff(self, exp1):
        assert truncation_prob(exp1, math.inf) == 1.0

    def test_shifted_at_shift(self, sexp_half):
        with pytest.raises(TruncationMassZero):
            truncation_prob(sexp_half, 0.5)

    def test_deterministic_at_shift(self, det1):
        assert truncation_prob(det1, 1.0) == 1.0

    def test_below_shift(self, sexp_half):
        with pytest.raises(DomainError):
            truncation_prob(sexp_half, 0.4)

    def test_vanishing_mass(self):
        with pytest.raises(TruncationMassZero):
            truncation_prob(Exponential(1.0), 1e-14)


class TestTruncatedMoments:

    def test_exponential_cutoff_one(self, exp1):
        moments = truncated_moments(exp1, 1.0)
        assert moments.p == pytest.approx(0.632121, abs=1e-6)
        assert moments.ey == pytest.approx(0.418023, abs=1e-6)
        assert moments.ey2 == pytest.approx((2 - 5 * E1) / (1 - E1), rel=1e-10)

    def test_untruncated(self, sexp_half):
        moments = truncated_moments(sexp_half, math.inf)
        assert moments.ey == pytest.approx(1.5)
        assert moments.ey2 == pytest.approx(0.25 + 1.0 + 2.0)

    def test_deterministic(self, det1):
        moments = truncated_moments(det1, 3.0)
        assert (moments.p, moments.ey, moments.ey2) == (1.0, 1.0, 1.0)

    @pytest.mark.parametrize("gamma", [1e-6, 1e-3, 0.5, 5.0, 40.0])
    def test_bounds(self, exp1, gamma):
        moments = truncated_moments(exp1, gamma)
        assert 0.0 <= moments.ey <= gamma
        assert moments.ey2 >= moments.ey ** 2

    def test_small_cutoff_is_uniform_like(self, exp1):
        assert truncated_moments(exp1, 1e-6).ey == pytest.approx(0.5e-6, rel=1e-5)

    def test_matches_quadrature_random_cases(self):
        rng = np.random.default_rng(2024)
        for _ in range(50):
            rate = rng.uniform(0.2, 5.0)
            c = rng.uniform(0.0, 2.0)
            gamma = c + rng.uniform(0.05, 10.0) / rate
            dist = ShiftedExponential(rate, c) if c > 0 else Exponential(rate)
            moments = truncated_moments(dist, gamma)
            mass = [integrate.quad(lambda y, k=k: y ** k * dist.pdf(y), c, gamma, epsabs=0, epsrel=1e-12)[0]
                    for k in range(3)]
            assert moments.p == pytest.approx(mass[0], rel=1e-9)
            assert moments.ey == pytest.approx(mass[1] / mass[0], rel=1e-9)
            assert moments.ey2 == pytest.approx(mass[2] / mass[0], rel=1e-9)

    @pytest.mark.parametrize("rate, c, gamma", [(1.0, 0.0, 1.0), (1.0, 0.5, 0.9), (2.5, 1.2, 3.0), (0.3, 0.1, 20.0)])
    def test_continuous_in_cutoff(self, rate, c, gamma):
        dist = ShiftedExponential(rate, c) if c > 0 else Exponential(rate)
        delta = 1e-6
        here, there = truncated_moments(dist, gamma), truncated_moments(dist, gamma + delta)
        assert abs(there.p - here.p) <= rate * delta
        assert abs(there.ey - here.ey) <= 10 * delta
        assert abs(there.ey2 - here.ey2) <= 10 * (gamma + delta) * delta
        assert there.p >= here.p

    @pytest.mark.parametrize("rate, c", [(1.0, 0.0), (1.0, 0.5), (3.0, 1.0), (0.5, 2.0)])
    def test_limit_of_large_cutoff(self, rate, c):
        dist = ShiftedExponential(rate, c) if c > 0 else Exponential(rate)
        limit = truncated_moments(dist, math.inf)
        errors = []
        for excess in [5.0, 10.0, 20.0, 60.0]:
            moments = truncated_moments(dist, c + excess / rate)
            errors.append(abs(moments.ey2 - limit.ey2) + abs(moments.ey - limit.ey))
        assert errors == sorted(errors, reverse=True)
        assert errors[-1] <= 1e-12 * limit.ey2
        assert limit.ey == pytest.approx(c + 1 / rate)
        assert limit.ey2 == pytest.approx(c * c + 2 * c / rate + 2 / rate ** 2)


class TestPartialMoment:

    @pytest.mark.parametrize("k, expected", [
        (0, 1 - E1),
        (1, 1 - 2 * E1),
        (2, 2 - 5 * E1),
    ])
    def test_exponential(self, exp1, k, expected):
        assert partial_moment(exp1, k, 0.0, 1.0) == pytest.approx(expected, rel=1e-12)

    def test_shifted_tail(self, sexp_half):
        assert partial_moment(sexp_half, 0, 30.5, math.inf) == pytest.approx(math.exp(-30.0), rel=1e-9)

    def test_empty_interval(self, exp1):
        assert partial_moment(exp1, 1, 2.0, 1.0) == 0.0

    def test_invalid_order(self, exp1):
        with pytest.raises(DomainError):
            partial_moment(exp1, 3, 0.0, 1.0)


class TestGenericDensity:

    def test_matches_exponential(self, exp1):
        generic = GenericDensity(lambda x: math.exp(-x))
        assert generic.mean() == pytest.approx(1.0, abs=1e-8)
        assert generic.second_moment() == pytest.approx(2.0, abs=1e-7)
        for k in (0, 1, 2):
            assert generic.partial_moment(k, 0.2, 1.3) == pytest.approx(exp1.partial_moment(k, 0.2, 1.3), rel=1e-8)
        assert generic.truncation_prob(1.0) == pytest.approx(1 - E1, rel=1e-8)

    def test_rejects_unnormalised(self):
        with pytest.raises(ConfigError):
            GenericDensity(lambda x: 2.0 * math.exp(-x))

    def test_rejection_sampling_mean(self):
        law = erlang(2, 2.0, c=0.25)
        draws = law.sample(np.random.default_rng(11), 200000)
        assert draws.min() >= 0.25
        assert draws.mean() == pytest.approx(1.25, abs=0.01)

    def test_erlang_moments(self):
        law = erlang(3, 1.5)
        assert law.mean() == pytest.approx(2.0, rel=1e-7)
        assert law.second_moment() == pytest.approx(3 * 4 / 1.5 ** 2, rel=1e-7)


class TestSample:

    def test_exponential_mean(self, exp1):
        draws = exp1.sample(np.random.default_rng(3), 200000)
        assert draws.min() >= 0.0
        assert draws.mean() == pytest.approx(1.0, abs=0.01)

    def test_shifted_support(self, sexp_half):
        assert sexp_half.sample(np.random.default_rng(3), 1000).min() >= 0.5

    def test_deterministic(self, det1):
        assert np.all(det1.sample(np.random.default_rng(3), 10) == 1.0)


class TestParseDistribution:

    @pytest.mark.parametrize("token, cls", [
        ("exp:rate=1", Exponential),
        ("sexp:rate=1,c=0.5", ShiftedExponential),
        ("det:c=2", Deterministic),
        ("erlang:k=2,rate=1", GenericDensity),
    ])
    def test_kinds(self, token, cls):
        assert isinstance(parse_distribution(token), cls)

    @pytest.mark.parametrize("token", ["exp:rate=1.0", "sexp:rate=2.0,c=0.25", "det:c=1.5", "erlang:k=2,rate=1.0,c=0.5"])
    def test_token_round_trip(self, token):
        assert parse_distribution(token).token == token
        assert parse_distribution(parse_distribution(token).token) == parse_distribution(token)

    @pytest.mark.parametrize("token", [
        "gauss:mu=1",
        "exp",
        "exp:rate=-1",
        "exp:rate=1,c=1",
        "sexp:rate=1",
        "sexp:rate=1,c=0",
        "det:c=0",
        "exp:rate=abc",
        "erlang:k=0,rate=1",
    ])
    def test_invalid(self, token):
        with pytest.raises(ConfigError):
            parse_distribution(token)
