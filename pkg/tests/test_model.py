import numpy as np
import pytest

from paratuck2.algebraic import core_residual, decompose
from paratuck2.model import (
    ParaTuck2Factors,
    core_from_factors,
    random_instance,
    reconstruct,
    relative_error,
)
from paratuck2.tensor_core import contract, unfold

from conftest import crandn, tensor_oracle


def random_factors(rng, n1=3, n2=4, n3=10):
    return ParaTuck2Factors(
        crandn(rng, n1, 2), crandn(rng, n2, 2), crandn(rng, 2, 2), crandn(rng, 2, n3), crandn(rng, 2, n3)
    )


def test_core_all_ones():
    C = core_from_factors(np.ones((2, 2)), np.ones((2, 5)), np.ones((2, 5)))
    np.testing.assert_array_equal(C, np.ones((2, 2, 5)))


def test_core_first_slice(det_factors):
    f = det_factors
    C = core_from_factors(f.F, f.G, f.H)
    np.testing.assert_array_equal(C[:, :, 0], [[25, -5], [-10, -1]])


def test_core_zero_row_of_G(rng):
    G = crandn(rng, 2, 4)
    G[1] = 0
    C = core_from_factors(crandn(rng, 2, 2), G, crandn(rng, 2, 4))
    assert np.all(C[1] == 0)


def test_core_dim_mismatch(rng):
    with pytest.raises(ValueError):
        core_from_factors(np.ones((2, 2)), np.ones((3, 5)), np.ones((2, 5)))
    with pytest.raises(ValueError):
        core_from_factors(np.ones((2, 2)), np.ones((2, 5)), np.ones((2, 4)))


def test_factors_validation():
    with pytest.raises(ValueError):
        ParaTuck2Factors(np.ones((3, 3)), np.ones((3, 2)), np.ones((3, 2)), np.ones((3, 10)), np.ones((2, 10)))
    with pytest.raises(ValueError):
        ParaTuck2Factors(np.ones((3, 2)), np.ones((3, 3)), np.ones((2, 2)), np.ones((2, 10)), np.ones((2, 10)))
    with pytest.raises(ValueError):
        ParaTuck2Factors(np.ones((3, 2)), np.ones((3, 2)), np.ones((2, 2)), np.full((2, 10), np.nan), np.ones((2, 10)))


def test_reconstruct_trivial():
    F = np.array([[1, 2], [3, 4]])
    f = ParaTuck2Factors(np.eye(2), np.eye(2), F, np.ones((2, 10)), np.ones((2, 10)))
    T = reconstruct(f)
    for k in range(10):
        np.testing.assert_array_equal(T[:, :, k], F)


def test_reconstruct_matches_oracle(det_factors, det_tensor):
    ref = tensor_oracle(*det_factors.astuple())
    assert np.abs(det_tensor - ref).max() <= 1e-13 * np.abs(ref).max()


def test_reconstruct_equals_contracted_core(rng):
    f = random_factors(rng)
    C = core_from_factors(f.F, f.G, f.H)
    np.testing.assert_array_equal(reconstruct(f), contract(contract(C, f.A, 1), f.B, 2))


def test_random_instance_rank():
    f, T = random_instance((10, 10, 15), 42)
    assert T.shape == (10, 10, 15)
    s = np.linalg.svd(unfold(T, 1), compute_uv=False)
    assert np.sum(s > 1e-10 * s[0]) == 2
    assert np.all(T.imag == 0)


def test_random_instance_deterministic():
    f1, T1 = random_instance((5, 6, 11), 3)
    f2, T2 = random_instance((5, 6, 11), 3)
    assert T1.tobytes() == T2.tobytes()
    for M1, M2 in zip(f1.astuple(), f2.astuple()):
        assert M1.tobytes() == M2.tobytes()
    _, T3 = random_instance((5, 6, 11), 4)
    assert not np.array_equal(T1, T3)


@pytest.mark.parametrize("dims", [(1, 3, 10), (3, 3, 9), (3, 3)])
def test_random_instance_bad_dims(dims):
    with pytest.raises(ValueError):
        random_instance(dims, 0)


def test_relative_error(rng):
    T = crandn(rng, 3, 3, 10)
    assert relative_error(T, T) == 0
    assert relative_error(T, 2 * T) == pytest.approx(1.0, rel=1e-14)


def test_relative_error_pipeline(det_tensor):
    factors, _ = decompose(det_tensor)
    assert relative_error(det_tensor, reconstruct(factors)) <= 1e-20


def test_scaling_permutation_ambiguity(rng):
    f = random_factors(rng)
    T = reconstruct(f)
    P = np.array([[0, 1], [1, 0]])
    for _ in range(10):
        la, lb = crandn(rng, 2), crandn(rng, 2)
        for pa in (np.eye(2), P):
            for pb in (np.eye(2), P):
                # A -> A La Pa, G -> Pa^T La^-1 G, F -> Pa^T F Pb, B -> B Lb Pb, H -> Pb^T Lb^-1 H
                A2 = f.A @ np.diag(la) @ pa
                G2 = pa.T @ np.diag(1 / la) @ f.G
                B2 = f.B @ np.diag(lb) @ pb
                H2 = pb.T @ np.diag(1 / lb) @ f.H
                F2 = pa.T @ f.F @ pb
                T2 = reconstruct(ParaTuck2Factors(A2, B2, F2, G2, H2))
                assert relative_error(T, T2) <= 1e-12


def test_synthesized_cores_satisfy_equations(rng):
    for _ in range(20):
        f = random_factors(rng)
        assert core_residual(core_from_factors(f.F, f.G, f.H)) <= 1e-12


def test_scaling_absorbed_by_F(rng):
    f = random_factors(rng)
    T = reconstruct(f)
    P = np.array([[0, 1], [1, 0]])
    for _ in range(10):
        la, lb = crandn(rng, 2), crandn(rng, 2)
        A2 = f.A @ np.diag(la) @ P
        B2 = f.B @ np.diag(lb) @ P
        F2 = P.T @ np.diag(1 / la) @ f.F @ np.diag(1 / lb) @ P
        T2 = reconstruct(ParaTuck2Factors(A2, B2, F2, P.T @ f.G, P.T @ f.H))
        assert relative_error(T, T2) <= 1e-12
