"""The compiled and pure-numpy kernel paths must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from iclap import kernels
from iclap.registration import KdTree


needs_both = pytest.mark.skipif(
    "numba" not in kernels.implementations(),
    reason="numba path not active in this environment")


@needs_both
class TestPathEquivalence:
    def impls(self):
        both = kernels.implementations()
        return both["numpy"], both["numba"]

    def test_moments(self, rng):
        np_impl, nb_impl = self.impls()
        for _ in range(5):
            frame = rng.random((14, 6))
            a = np_impl["moments_upto3"](frame)
            b = nb_impl["moments_upto3"](frame)
            assert np.allclose(a, b, rtol=1e-13, atol=0)

    def test_zernike(self, rng):
        np_impl, nb_impl = self.impls()
        from iclap.descriptors import _zernike_tables
        n_arr, m_arr, coefs = _zernike_tables(4)
        frame = rng.random((14, 6))
        args = (frame, 2.5, 6.5, 7.0, n_arr, m_arr, coefs)
        a = np_impl["zernike_accumulate"](*args)
        b = nb_impl["zernike_accumulate"](*args)
        assert np.allclose(a, b, rtol=1e-12, atol=1e-14)

    def test_assign(self, rng):
        np_impl, nb_impl = self.impls()
        X = rng.normal(size=(100, 5))
        C = rng.normal(size=(7, 5))
        la, da = np_impl["assign_nearest"](X, C)
        lb, db = nb_impl["assign_nearest"](X, C)
        assert np.array_equal(la, lb)
        assert np.array_equal(da, db)

    def test_kd_query(self, rng):
        np_impl, nb_impl = self.impls()
        pts = rng.normal(size=(200, 4))
        tree = KdTree(pts)
        q = rng.normal(size=(300, 4))
        args = (tree.points, tree.node_point, tree.node_axis,
                tree.node_left, tree.node_right, q)
        ia, da = np_impl["kd_query"](*args)
        ib, db = nb_impl["kd_query"](*args)
        assert np.array_equal(ia, ib)
        assert np.array_equal(da, db)

    def test_kabsch(self, rng):
        np_impl, nb_impl = self.impls()
        P = rng.normal(size=(20, 4))
        Q = rng.normal(size=(20, 4))
        Ra, Ta = np_impl["kabsch_solve"](P, Q)
        Rb, Tb = nb_impl["kabsch_solve"](P, Q)
        assert np.allclose(Ra, Rb, atol=1e-12)
        assert np.allclose(Ta, Tb, atol=1e-12)

    def test_icp(self, rng):
        np_impl, nb_impl = self.impls()
        model = rng.normal(size=(60, 4))
        test = model[rng.choice(60, 20, replace=False)] + rng.normal(
            scale=0.1, size=(20, 4))
        tree = KdTree(model)
        R0 = np.eye(4)
        T0 = model.mean(axis=0) - test.mean(axis=0)
        args = (test, tree.points, tree.node_point, tree.node_axis,
                tree.node_left, tree.node_right, R0, T0, 30, 1e-6, 1e-4,
                1e-12)
        Ra, Ta, tra, ia, ca = np_impl["icp_run"](*args)
        Rb, Tb, trb, ib, cb = nb_impl["icp_run"](*args)
        assert ia == ib and ca == cb
        assert np.allclose(tra[:ia], trb[:ib], rtol=1e-12, atol=0)
        assert np.allclose(Ra, Rb, atol=1e-12)
        assert np.allclose(Ta, Tb, atol=1e-12)


def test_env_flag_selects_numpy_path():
    env = dict(os.environ, ICLAP_NUMBA="0")
    out = subprocess.run(
        [sys.executable, "-c",
         "from iclap import kernels; print(kernels.ACTIVE)"],
        env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_active_path_reported():
    assert kernels.ACTIVE in ("numba", "numpy")
    assert kernels.USING_NUMBA == (kernels.ACTIVE == "numba")
