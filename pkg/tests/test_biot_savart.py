"""Biot-Savart: spectral inversion, direct lattice-sum oracle, symmetries."""

import numpy as np
import pytest

from oddeuler.biot_savart import (
    LatticeSumParams,
    evaluate_velocity_at,
    make_fast_sampler,
    velocity_direct,
    velocity_spectral,
)
from oddeuler.errors import DomainError
from oddeuler.fields import EVEN, ODD, SpectralField, to_grid

RNG = np.random.default_rng(11)


def single_mode():
    c = np.zeros((1, 1))
    c[0, 0] = 1.0
    return SpectralField(c)


def random_field(K=12, scale=1.0, seed=2):
    rng = np.random.default_rng(seed)
    k = np.add.outer(np.arange(K), np.arange(K))
    return SpectralField(rng.standard_normal((K, K)) * np.exp(-0.2 * k) * scale)


class TestSpectralRoute:
    def test_zero(self):
        u = velocity_spectral(SpectralField(np.zeros((3, 3))))
        assert u.max_speed(32) == 0.0

    def test_single_mode_closed_form(self):
        u = velocity_spectral(single_mode())
        pts = RNG.uniform(0, 1, size=(30, 2))
        got = u.at(pts)
        want1 = -(1 / (2 * np.pi)) * np.sin(np.pi * pts[:, 0]) * np.cos(np.pi * pts[:, 1])
        want2 = (1 / (2 * np.pi)) * np.cos(np.pi * pts[:, 0]) * np.sin(np.pi * pts[:, 1])
        assert np.allclose(got[:, 0], want1, atol=1e-12)
        assert np.allclose(got[:, 1], want2, atol=1e-12)

    def test_parity_tags(self):
        u = velocity_spectral(random_field())
        assert u.u1.parity == (ODD, EVEN)
        assert u.u2.parity == (EVEN, ODD)

    def test_stagnation_at_origin(self):
        u = velocity_spectral(random_field())
        assert np.all(u.at(np.array([0.0, 0.0])) == 0.0)

    def test_divergence_free(self):
        u = velocity_spectral(random_field())
        assert u.divergence_residual(64) <= 1e-10 * u.max_speed(64)

    def test_coordinate_swap_identity(self):
        # omega~(x) = omega(x2, x1)  =>  u~(x) = -(u2(x2,x1), u1(x2,x1))
        om = random_field()
        om_swap = SpectralField(om.coeffs.T)
        u = velocity_spectral(om)
        us = velocity_spectral(om_swap)
        pts = RNG.uniform(0, 1, size=(25, 2))
        got = us.at(pts)
        ref = u.at(pts[:, ::-1])
        assert np.allclose(got[:, 0], -ref[:, 1], atol=1e-10)
        assert np.allclose(got[:, 1], -ref[:, 0], atol=1e-10)


class TestPointEvaluation:
    def test_grid_node_match(self):
        u = velocity_spectral(random_field())
        N = 64
        g = u.u1.sample_closed(N)
        pts = np.array([[3 / N, 17 / N], [11 / N, 40 / N]])
        assert np.allclose(u.at(pts)[:, 0], [g[3, 17], g[11, 40]], atol=1e-12)

    def test_fast_sampler_refinement(self):
        u = velocity_spectral(SpectralField(RNG.standard_normal((4, 4)) * 0.3))
        pts = RNG.uniform(0.05, 0.95, size=(40, 2))
        coarse = make_fast_sampler(u, N=1024)(pts)
        fine = make_fast_sampler(u, N=2048)(pts)
        exact = evaluate_velocity_at(u, pts)
        assert np.abs(fine - coarse).max() <= 1e-8
        assert np.abs(fine - exact).max() <= 1e-8


class TestDirectOracle:
    def test_zero(self):
        res = velocity_direct(SpectralField(np.zeros((2, 2))), [0.2, 0.3],
                              LatticeSumParams(R=2))
        assert np.all(res.u == 0.0)

    def test_domain_guard(self):
        with pytest.raises(DomainError):
            velocity_direct(single_mode(), [0.7, 0.2], LatticeSumParams(R=2))

    def test_grid_field_input(self):
        om = random_field(K=6)
        g = to_grid(om, 32)
        a = velocity_direct(g, [0.2, 0.2], LatticeSumParams(R=4))
        b = velocity_direct(om, [0.2, 0.2], LatticeSumParams(R=4))
        assert np.allclose(a.u, b.u, atol=1e-10)

    def test_agrees_with_spectral_smooth_bump(self):
        om = random_field(K=16, seed=9)
        u = velocity_spectral(om)
        params = LatticeSumParams(R=64)
        for x in RNG.uniform(0.05, 0.45, size=(4, 2)):
            res = velocity_direct(om, x, params)
            rel = np.abs(res.u - u.at(x)[0]).max() / max(u.max_speed(64), 1e-30)
            assert rel <= 1e-4

    def test_coordinate_swap_identity_direct(self):
        om = random_field(K=8, seed=4)
        om_swap = SpectralField(om.coeffs.T)
        params = LatticeSumParams(R=24)
        x = np.array([0.21, 0.34])
        got = velocity_direct(om_swap, x, params).u
        ref = velocity_direct(om, x[::-1], params).u
        assert np.allclose(got, [-ref[1], -ref[0]], atol=1e-6)

    def test_shell_decay_and_tail(self):
        om = random_field(K=10, seed=1)
        res = velocity_direct(om, [0.2, 0.4], LatticeSumParams(R=32))
        m = res.shell_magnitudes
        # paired-term O(r^-3) decay integrates to ~r^-2 per shell
        assert m[8] < m[2] / 4
        # the tail estimate covers the truncation error against a longer sum
        far = velocity_direct(om, [0.2, 0.4], LatticeSumParams(R=96))
        short = velocity_direct(om, [0.2, 0.4], LatticeSumParams(R=16))
        actual_tail = np.abs(short.u - far.u).max()
        assert actual_tail <= 5 * short.tail_estimate + 1e-7
