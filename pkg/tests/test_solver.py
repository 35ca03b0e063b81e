import math

import numpy as np
import pytest

from proxfield.errors import CapabilityError, PreconditionError
from proxfield.field import BlockVector, zeros
from proxfield.linear import LinearFamily, apply
from proxfield.operators import (
    DirectIntegralOperator,
    affine_psd,
    normal_cone_box,
    scaled_identity,
)
from proxfield.solver import (
    STATUS_CONVERGED,
    KKTPoint,
    PrimalDualProblem,
    SolverConfig,
    composite_apply,
    extract_solutions,
    fbf_solve,
    kkt_residual,
    saddle_residual,
)
from instances import (
    closed_form_problem,
    make_field,
    random_quadratic_problem,
    random_single_valued_problem,
    split_interval_problem,
    zero_problem,
)
from oracles import quad_solve


def bv(*scalars):
    return BlockVector([[s] for s in scalars])


class TestCompositeApply:
    def test_identity_pair(self):
        fld = make_field([1.0], [1])
        problem = PrimalDualProblem(
            W=scaled_identity(1, 1.0),
            family=LinearFamily(fld, 1, [np.array([[1.0]])]),
            operator=DirectIntegralOperator(fld, [scaled_identity(1, 1.0)]),
        )
        assert composite_apply(problem, [1.0])[0] == pytest.approx(2.0, abs=1e-15)

    def test_zero_problem(self):
        assert composite_apply(zero_problem(), [3.0])[0] == 0.0

    def test_stationarity_of_closed_form(self):
        assert composite_apply(closed_form_problem(), [0.5])[0] == pytest.approx(0.0, abs=1e-15)

    def test_set_valued_atom_rejected(self):
        fld = make_field([1.0], [1])
        problem = PrimalDualProblem(
            W=scaled_identity(1, 0.0),
            family=LinearFamily(fld, 1, [np.array([[1.0]])]),
            operator=DirectIntegralOperator(fld, [normal_cone_box([0.0], [1.0])]),
        )
        with pytest.raises(CapabilityError):
            composite_apply(problem, [0.5])

    def test_sampled_monotonicity(self):
        rng = np.random.default_rng(31)
        for seed in range(5):
            problem = random_single_valued_problem(seed)
            worst = math.inf
            for _ in range(200):
                z = rng.standard_normal(problem.m)
                w = rng.standard_normal(problem.m)
                Mz = composite_apply(problem, z)
                Mw = composite_apply(problem, w)
                worst = min(worst, float(np.dot(z - w, Mz - Mw)))
            assert worst >= -1e-10


class TestKKTResidual:
    def test_zero_at_solution(self):
        problem = closed_form_problem()
        p = KKTPoint([0.5], bv(0.5))
        assert kkt_residual(problem, p, 1.0) <= 1e-12
        assert kkt_residual(problem, p, 0.3) <= 1e-12

    def test_positive_away_from_solution(self):
        problem = closed_form_problem()
        assert kkt_residual(problem, KKTPoint([0.0], bv(0.0)), 1.0) > 0.1

    def test_zero_problem_anywhere_with_zero_dual(self):
        problem = zero_problem()
        assert kkt_residual(problem, KKTPoint([2.7], bv(0.0)), 1.0) == 0.0


class TestFBFSolve:
    def test_closed_form_instance(self):
        problem = closed_form_problem()
        point, report = fbf_solve(problem, SolverConfig(tol=1e-8))
        assert report.status == STATUS_CONVERGED
        assert point.z[0] == pytest.approx(0.5, abs=1e-6)
        assert point.dual[0][0] == pytest.approx(0.5, abs=1e-6)
        assert report.kkt_residual <= 1e-6

    def test_split_interval_instance(self):
        problem = split_interval_problem()
        point, report = fbf_solve(problem, SolverConfig(tol=1e-8, max_iters=50000))
        assert report.status == STATUS_CONVERGED
        z = float(point.z[0])
        assert 1.0 - 1e-4 <= z <= 2.0 + 1e-4
        for atom in problem.operator.atoms:
            base = atom.meta["inner"]
            lo, hi = base["params"]["lo"][0], base["params"]["hi"][0]
            assert max(lo - z, z - hi, 0.0) <= 1e-4

    def test_quadratic_suite_matches_direct_solve(self):
        for seed in range(5):
            problem = random_quadratic_problem(seed)
            point, report = fbf_solve(problem, SolverConfig(tol=1e-10, max_iters=5000))
            expected = quad_solve(problem)
            assert report.status == STATUS_CONVERGED
            assert np.linalg.norm(point.z - expected) <= 1e-6

    def test_trace_eventually_decreasing(self):
        problem = random_quadratic_problem(1)
        _, report = fbf_solve(problem, SolverConfig(tol=1e-10, max_iters=5000))
        kkts = [row[1] for row in report.trace]
        tail = kkts[len(kkts) // 2 :]
        assert all(b <= a * (1 + 1e-9) for a, b in zip(tail, tail[1:]))

    def test_step_precondition(self):
        problem = closed_form_problem()
        with pytest.raises(PreconditionError):
            fbf_solve(problem, SolverConfig(gamma=2.0))  # 1/||L|| = 1

    def test_deterministic(self):
        problem = random_quadratic_problem(2)
        _, r1 = fbf_solve(problem, SolverConfig(tol=1e-9))
        _, r2 = fbf_solve(problem, SolverConfig(tol=1e-9))
        assert r1.trace == r2.trace

    def test_explicit_start(self):
        problem = closed_form_problem()
        cfg = SolverConfig(tol=1e-10, start=(np.array([0.5]), bv(0.5)))
        point, report = fbf_solve(problem, cfg)
        assert report.iterations == 0
        assert report.status == STATUS_CONVERGED


class TestExtractSolutions:
    def test_exact_point(self):
        problem = closed_form_problem()
        rep = extract_solutions(problem, KKTPoint([0.5], bv(0.5)))
        assert rep.primal_residual <= 1e-10
        assert rep.dual_residual <= 1e-10

    def test_zero_problem(self):
        rep = extract_solutions(zero_problem(), KKTPoint([0.0], bv(0.0)))
        assert rep.primal_residual == 0.0
        assert rep.dual_residual == 0.0

    def test_residuals_grow_with_perturbation(self):
        problem = closed_form_problem()
        scales = [0.0, 0.01, 0.05, 0.2, 1.0]
        primals, duals = [], []
        for t in scales:
            rep = extract_solutions(problem, KKTPoint([0.5 + t], bv(0.5 - 0.3 * t)))
            primals.append(rep.primal_residual)
            duals.append(rep.dual_residual)
        assert all(b >= a - 1e-12 for a, b in zip(primals, primals[1:]))
        assert all(b >= a - 1e-12 for a, b in zip(duals, duals[1:]))

    def test_residuals_at_convergence_within_10x_tol(self):
        for seed in range(3):
            problem = random_quadratic_problem(seed)
            point, report = fbf_solve(problem, SolverConfig(tol=1e-8))
            assert report.status == STATUS_CONVERGED
            rep = extract_solutions(problem, point)
            assert rep.primal_residual <= 1e-7
            assert rep.dual_residual <= 1e-7


class TestSaddleResidual:
    def test_zero_at_matched_triple(self):
        problem = closed_form_problem()
        assert saddle_residual(problem, [0.5], bv(0.5), bv(0.5)) <= 1e-12

    def test_third_block_defect(self):
        problem = closed_form_problem()
        x = bv(2.0)
        r = saddle_residual(problem, [0.5], x, bv(0.5))
        lz = apply(problem.family, [0.5])
        assert r >= abs(x[0][0] - lz[0][0])

    def test_zero_problem_at_origin(self):
        problem = zero_problem()
        assert saddle_residual(problem, [0.0], bv(0.0), bv(0.0)) == 0.0

    def test_equivalence_with_kkt_zero_set(self):
        # kkt residual vanishes iff the saddle residual vanishes at (z, Lz, x*)
        for seed in range(3):
            problem = random_single_valued_problem(seed)
            rng = np.random.default_rng(seed + 100)
            z = rng.standard_normal(problem.m)
            dual = BlockVector([rng.standard_normal(d) for d in problem.family.field.dims])
            kkt = kkt_residual(problem, KKTPoint(z, dual), 1.0)
            sad = saddle_residual(problem, z, apply(problem.family, z), dual)
            assert (kkt <= 1e-12) == (sad <= 1e-12)
        # and constructively at a solved instance
        problem = closed_form_problem()
        point, _ = fbf_solve(problem, SolverConfig(tol=1e-12))
        sad = saddle_residual(
            problem, point.z, apply(problem.family, point.z), point.dual
        )
        assert sad <= 1e-10


class TestWeightCovariance:
    def test_rescaled_weights_leave_primal_limit_unchanged(self):
        # scale weight k by c_k, L_k by 1/sqrt(c_k), and the affine shift by
        # 1/sqrt(c_k): the assembled composition is unchanged, so the primal
        # limit must agree
        base = random_quadratic_problem(7)
        scales = [1.7, 0.3, 2.5][: base.family.field.count]
        new_weights = [w * c for w, c in zip(base.family.field.weights, scales)]
        fld2 = make_field(new_weights, list(base.family.field.dims))
        mats2 = [M / math.sqrt(c) for M, c in zip(base.family.mats, scales)]
        atoms2 = []
        for atom, c in zip(base.operator.atoms, scales):
            M = np.reshape(atom.meta["params"]["mat"], (atom.dim, atom.dim))
            b = np.asarray(atom.meta["params"]["shift"])
            atoms2.append(affine_psd(M, b / math.sqrt(c)))
        problem2 = PrimalDualProblem(
            W=base.W,
            family=LinearFamily(fld2, base.m, mats2),
            operator=DirectIntegralOperator(fld2, atoms2),
        )
        p1, r1 = fbf_solve(base, SolverConfig(tol=1e-10))
        p2, r2 = fbf_solve(problem2, SolverConfig(tol=1e-10))
        assert r1.status == r2.status == STATUS_CONVERGED
        assert np.linalg.norm(p1.z - p2.z) <= 1e-6
