import math

import numpy as np
import pytest

from proxfield.errors import PreconditionError, ShapeError
from proxfield.field import AtomicMeasureSpace, BlockVector, HilbertField, inner_product
from proxfield.functions import (
    DirectIntegralFunction,
    abs_value,
    box_set,
    indicator,
    point_set,
    quadratic,
    zero,
)
from proxfield.linear import (
    CompositeFunction,
    LinearFamily,
    adjoint,
    apply,
    composite_eval,
    composite_subgradient,
    cyclic_probe,
    norm_bound,
    norm_estimate,
    prox_mixture,
)
from oracles import Grid1D, grid_sup


def make_field(weights, dims):
    return HilbertField(AtomicMeasureSpace(weights), dims)


def scalar_family(weights, scalars, m=1):
    fld = make_field(weights, [1] * len(scalars))
    return LinearFamily(fld, m, [np.array([[s]]) for s in scalars])


def sq():
    return quadratic([[1.0]], [0.0])


class TestApplyAdjoint:
    def test_identity_blocks(self):
        fld = make_field([1.0, 1.0], [2, 2])
        fam = LinearFamily(fld, 2, [np.eye(2), np.eye(2)])
        out = apply(fam, [1.0, -2.0])
        for b in out:
            assert np.array_equal(b, np.array([1.0, -2.0]))

    def test_scalar_scaling(self):
        fam = scalar_family([1.0, 1.0], [1.0, 3.0])
        out = apply(fam, [2.0])
        assert out[0][0] == 2.0 and out[1][0] == 6.0

    def test_zero_matrices(self):
        fld = make_field([1.0], [3])
        fam = LinearFamily(fld, 2, [np.zeros((3, 2))])
        assert np.array_equal(apply(fam, [1.0, 1.0]).flatten(), np.zeros(3))

    def test_adjoint_weighted(self):
        fam = scalar_family([1.0, 2.0], [1.0, 3.0])
        out = adjoint(fam, BlockVector([[1.0], [1.0]]))
        assert out[0] == pytest.approx(7.0, abs=1e-15)

    def test_adjoint_of_zero(self):
        fam = scalar_family([1.0, 2.0], [1.0, 3.0])
        assert adjoint(fam, BlockVector([[0.0], [0.0]]))[0] == 0.0

    def test_adjoint_identity_single_atom(self):
        fld = make_field([1.0], [2])
        fam = LinearFamily(fld, 2, [np.eye(2)])
        xs = BlockVector([[0.3, -0.8]])
        assert np.array_equal(adjoint(fam, xs), xs[0])

    def test_adjoint_pairing(self):
        rng = np.random.default_rng(20)
        fld = make_field([0.5, 2.0, 1.3], [2, 3, 1])
        fam = LinearFamily(fld, 2, [rng.standard_normal((d, 2)) for d in fld.dims])
        for _ in range(50):
            z = rng.standard_normal(2)
            xs = BlockVector([rng.standard_normal(d) for d in fld.dims])
            lhs = inner_product(fld, apply(fam, z), xs)
            rhs = float(np.dot(z, adjoint(fam, xs)))
            assert abs(lhs - rhs) <= 1e-10 * (1.0 + abs(lhs) + abs(rhs))


class TestNorms:
    def test_identity_bound(self):
        fam = scalar_family([1.0], [1.0])
        assert norm_bound(fam) == pytest.approx(1.0, abs=1e-15)
        assert norm_estimate(fam) == pytest.approx(1.0, abs=1e-8)

    def test_scalar_family_bound(self):
        fam = scalar_family([1.0, 1.0], [1.0, 3.0])
        assert norm_bound(fam) == pytest.approx(math.sqrt(10.0), abs=1e-12)
        # with m = 1 the bound is tight
        assert norm_estimate(fam) == pytest.approx(math.sqrt(10.0), abs=1e-8)

    def test_zero_family(self):
        fld = make_field([1.0], [2])
        fam = LinearFamily(fld, 2, [np.zeros((2, 2))])
        assert norm_bound(fam) == 0.0
        assert norm_estimate(fam) == 0.0

    def test_estimate_matches_gram_eigenvalue(self):
        rng = np.random.default_rng(21)
        fld = make_field([0.7, 1.1], [2, 2])
        mats = [rng.standard_normal((2, 3)) for _ in range(2)]
        fam = LinearFamily(fld, 3, mats)
        gram = sum(a * (M.T @ M) for a, M in zip(fld.weights, mats))
        expected = math.sqrt(max(np.linalg.eigvalsh(gram)))
        assert norm_estimate(fam, iters=500, seed=1) == pytest.approx(expected, rel=1e-8)

    def test_estimate_below_bound_on_random_families(self):
        rng = np.random.default_rng(22)
        for trial in range(20):
            count = int(rng.integers(1, 4))
            dims = [int(rng.integers(1, 4)) for _ in range(count)]
            m = int(rng.integers(1, 4))
            fld = make_field(rng.uniform(0.1, 3.0, count), dims)
            fam = LinearFamily(fld, m, [rng.standard_normal((d, m)) for d in dims])
            assert norm_estimate(fam, seed=trial) <= norm_bound(fam) + 1e-8


class TestProxMixture:
    def test_single_identity_reduces_to_prox(self):
        fam = scalar_family([1.0], [1.0])
        f = DirectIntegralFunction(fam.field, [abs_value()])
        for z in (-2.0, 0.5, 3.0):
            assert prox_mixture(f, fam, [z])[0] == pytest.approx(
                float(abs_value().prox(1.0, np.array([z]))[0]), abs=1e-15
            )

    def test_half_and_half(self):
        fam = scalar_family([0.5, 0.5], [1.0, 1.0])
        f = DirectIntegralFunction(fam.field, [zero(1), indicator(point_set([0.0]))])
        assert prox_mixture(f, fam, [4.0])[0] == pytest.approx(2.0, abs=1e-15)

    def test_zero_functions_give_gram(self):
        rng = np.random.default_rng(24)
        fld = make_field([0.25, 0.25], [2, 2])
        mats = [rng.standard_normal((2, 2)) for _ in range(2)]
        raw_sq = sum(a * np.linalg.norm(M, 2) ** 2 for a, M in zip(fld.weights, mats))
        mats = [M / math.sqrt(raw_sq) for M in mats]  # bound made tight
        fam = LinearFamily(fld, 2, mats)
        assert fam.norm_bound_sq == pytest.approx(1.0, abs=1e-12)
        f = DirectIntegralFunction(fld, [zero(2), zero(2)])
        z = rng.standard_normal(2)
        gram = sum(a * (M.T @ M) for a, M in zip(fld.weights, mats))
        assert np.allclose(prox_mixture(f, fam, z), gram @ z, atol=1e-12)

    def test_bound_enforced(self):
        fam = scalar_family([1.0, 1.0], [1.0, 1.0])  # sum alpha ||L||^2 = 2
        f = DirectIntegralFunction(fam.field, [zero(1), zero(1)])
        with pytest.raises(PreconditionError):
            prox_mixture(f, fam, [1.0])

    def test_nonexpansive(self):
        rng = np.random.default_rng(25)
        fam = scalar_family([0.5, 0.25], [0.9, 1.1])
        assert fam.norm_bound_sq <= 1.0
        f = DirectIntegralFunction(fam.field, [abs_value(), indicator(box_set([-1.0], [1.0]))])
        for _ in range(200):
            z = rng.standard_normal(1)
            w = rng.standard_normal(1)
            tz = prox_mixture(f, fam, z)
            tw = prox_mixture(f, fam, w)
            assert np.linalg.norm(tz - tw) <= np.linalg.norm(z - w) + 1e-10


class TestCyclicProbe:
    def test_identity_never_violates(self):
        rep = cyclic_probe(lambda z: z, dim=2, cycles=200, max_len=6, seed=0)
        assert rep.max_violation <= 0.0

    def test_prox_mixture_passes(self):
        fam = scalar_family([0.5, 0.5], [1.0, 1.0])
        f = DirectIntegralFunction(fam.field, [abs_value(), sq()])
        T = lambda z: prox_mixture(f, fam, z)
        rep = cyclic_probe(T, dim=1, cycles=500, max_len=6, seed=1)
        assert rep.max_violation <= 1e-9

    def test_rotation_violates(self):
        rot = np.array([[0.0, -1.0], [1.0, 0.0]])
        rep = cyclic_probe(lambda z: rot @ z, dim=2, cycles=500, max_len=6, seed=2)
        assert rep.max_violation > 0.0


class TestComposite:
    def test_eval_chain(self):
        fam = scalar_family([1.0], [2.0])
        g = CompositeFunction(DirectIntegralFunction(fam.field, [sq()]), fam)
        assert composite_eval(g, [1.0]) == pytest.approx(2.0, abs=1e-15)

    def test_eval_infeasible(self):
        fam = scalar_family([1.0], [1.0])
        g = CompositeFunction(
            DirectIntegralFunction(fam.field, [indicator(box_set([-1.0], [1.0]))]), fam
        )
        assert composite_eval(g, [5.0]) == math.inf

    def test_eval_zero(self):
        fam = scalar_family([1.0, 2.0], [1.0, -1.0])
        g = CompositeFunction(
            DirectIntegralFunction(fam.field, [zero(1), zero(1)]), fam
        )
        assert composite_eval(g, [3.0]) == 0.0

    def test_subgradient_smooth_chain_rule(self):
        fam = scalar_family([1.0], [2.0])
        g = CompositeFunction(DirectIntegralFunction(fam.field, [sq()]), fam)
        est = composite_subgradient(g, [1.0])
        assert est.value[0] == pytest.approx(4.0, abs=1e-6)
        assert est.increment <= 1e-6

    def test_subgradient_zero_function(self):
        fam = scalar_family([1.0], [2.0])
        g = CompositeFunction(DirectIntegralFunction(fam.field, [zero(1)]), fam)
        est = composite_subgradient(g, [1.0])
        assert est.value[0] == 0.0

    def test_subgradient_abs(self):
        fam = scalar_family([1.0], [1.0])
        g = CompositeFunction(DirectIntegralFunction(fam.field, [abs_value()]), fam)
        est = composite_subgradient(g, [2.0])
        assert est.value[0] == pytest.approx(1.0, abs=1e-12)

    def test_subgradient_fenchel_young_equality(self):
        # g(z) + g*(x*) - <z, x*> must vanish at the estimated subgradient;
        # g* evaluated by a brute-force grid supremum on the source space
        fam = scalar_family([1.0, 0.5], [2.0, -1.0])
        f = DirectIntegralFunction(fam.field, [sq(), abs_value()])
        g = CompositeFunction(f, fam)
        for z in (-1.0, 0.4, 2.0):
            est = composite_subgradient(g, [z])
            xs = float(est.value[0])
            gz = composite_eval(g, [z])
            gstar = grid_sup(
                lambda w: xs * w - composite_eval(g, [w]), Grid1D(-20.0, 20.0, 40001)
            )
            gap = gz + gstar - z * xs
            assert abs(gap) <= 5e-4  # grid resolution limits the check
