#include "support.hpp"

#include <gtest/gtest.h>

using namespace lrantd;
using testutil::random_matrix;
using testutil::random_model;
using testutil::random_tensor;
using testutil::rel_err;

namespace {

// Central differences of the full cost with respect to every factor entry.
Matrix fd_factor(const DenseTensor& y, TuckerModel m, Index n, const Penalties& p, double h = 1e-6) {
    Matrix& a = m.factors[static_cast<std::size_t>(n)];
    Matrix g(a.rows(), a.cols());
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i) {
            const double keep = a(i, j);
            a(i, j) = keep + h;
            const double up = cost(y, m, p);
            a(i, j) = keep - h;
            const double down = cost(y, m, p);
            a(i, j) = keep;
            g(i, j) = (up - down) / (2 * h);
        }
    return g;
}

DenseTensor fd_core(const DenseTensor& y, TuckerModel m, const Penalties& p, double h = 1e-6) {
    DenseTensor g(m.core.shape());
    for (Index i = 0; i < g.size(); ++i) {
        const double keep = m.core[i];
        m.core[i] = keep + h;
        const double up = cost(y, m, p);
        m.core[i] = keep - h;
        const double down = cost(y, m, p);
        m.core[i] = keep;
        g[i] = (up - down) / (2 * h);
    }
    return g;
}

// Smallest objective over all active sets of min 1/2||Mx - b||^2, x >= 0.
Vector nls_by_enumeration(const Matrix& m, const Vector& b) {
    const Index k = m.cols();
    Vector best = Vector::Zero(k);
    double best_obj = 0.5 * b.squaredNorm();
    for (int mask = 1; mask < (1 << k); ++mask) {
        std::vector<Index> free;
        for (Index j = 0; j < k; ++j)
            if (mask & (1 << j)) free.push_back(j);
        Matrix sub(m.rows(), static_cast<Index>(free.size()));
        for (std::size_t c = 0; c < free.size(); ++c) sub.col(static_cast<Index>(c)) = m.col(free[c]);
        const Vector xs = sub.colPivHouseholderQr().solve(b);
        if ((xs.array() < 0).any()) continue;
        Vector x = Vector::Zero(k);
        for (std::size_t c = 0; c < free.size(); ++c) x[free[c]] = xs[static_cast<Index>(c)];
        const double obj = 0.5 * (m * x - b).squaredNorm();
        if (obj < best_obj) {
            best_obj = obj;
            best = x;
        }
    }
    return best;
}

SolverConfig base_config(Shape ranks, Algorithm alg = Algorithm::HALS) {
    SolverConfig c;
    c.algorithm = alg;
    c.ntd_ranks = std::move(ranks);
    return c;
}

struct ExactCase {
    TuckerModel truth;
    DenseTensor y;
    TuckerModel lra;
};

ExactCase exact_case(const Shape& extents, const Shape& ranks, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ExactCase c{random_model(extents, ranks, rng), {}, {}};
    c.y = reconstruct(c.truth);
    c.lra = hosvd(c.y, ranks);
    return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Cost and gradients
// ---------------------------------------------------------------------------

TEST(Cost, ExactZeroAndCompressedPath) {
    const auto c = exact_case({6, 7, 8}, {2, 2, 2}, 1);
    EXPECT_NEAR(cost(c.y, c.truth), 0.0, 1e-20 + 1e-24 * flat(c.y).squaredNorm());
    TuckerModel zero = c.truth;
    flat(zero.core).setZero();
    EXPECT_NEAR(cost(c.y, zero), 0.5 * flat(c.y).squaredNorm(), 1e-12 * flat(c.y).squaredNorm());

    std::mt19937_64 rng(2);
    const auto m = random_model({6, 7, 8}, {2, 2, 2}, rng);
    const double dense = cost(reconstruct(c.lra), m, {0.1, {0.2, 0.0, 0.3}});
    const double compressed = cost(c.lra, m, {0.1, {0.2, 0.0, 0.3}});
    EXPECT_NEAR(compressed, dense, 1e-8 * dense);
}

TEST(Gradients, MatchFiniteDifferences) {
    std::mt19937_64 rng(3);
    for (const Shape& s : {Shape{4, 5, 6}, Shape{3, 4, 5, 6}}) {
        const Shape ranks(s.size(), 2);
        for (double l1 : {0.0, 0.1}) {
            const DenseTensor y = random_tensor(s, rng, 0.0, 1.0);
            const auto m = random_model(s, ranks, rng);
            Penalties p{l1, std::vector<double>(s.size(), l1)};
            for (Index n = 0; n < m.order(); ++n)
                EXPECT_LT(rel_err(grad_factor_direct(y, m, n, p), fd_factor(y, m, n, p)), 1e-5);
            EXPECT_LT(rel_err(grad_core_direct(y, m, p), fd_core(y, m, p)), 1e-5);
        }
    }
}

TEST(Gradients, VanishAtExactDecomposition) {
    const auto c = exact_case({4, 5, 6}, {2, 2, 2}, 4);
    const double scale = flat(c.y).norm();
    for (Index n = 0; n < 3; ++n) {
        EXPECT_LT(grad_factor_direct(c.y, c.truth, n).norm(), 1e-10 * scale * scale);
        const auto ws = build_workspace(c.lra, c.truth, n);
        EXPECT_LT(grad_factor_lra(ws, c.lra, c.truth, n).norm(), 1e-10 * scale * scale);
        EXPECT_LT(flat(grad_core_lra(ws, c.lra, c.truth)).norm(), 1e-10 * scale * scale);
    }
    EXPECT_LT(flat(grad_core_direct(c.y, c.truth)).norm(), 1e-10 * scale * scale);
}

TEST(Gradients, L1ShiftsCoreGradientByLambda) {
    std::mt19937_64 rng(5);
    const DenseTensor y = random_tensor({3, 4, 5}, rng, 0.0, 1.0);
    const auto m = random_model({3, 4, 5}, {2, 2, 2}, rng);
    const DenseTensor g0 = grad_core_direct(y, m);
    const DenseTensor g1 = grad_core_direct(y, m, {0.7, {}});
    EXPECT_LT(((flat(g1) - flat(g0)).array() - 0.7).abs().maxCoeff(), 1e-12);
}

TEST(Gradients, LraPathEqualsDirectWhenExact) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 10; ++trial) {
        const Shape extents = trial % 2 ? Shape{5, 6, 7} : Shape{4, 5, 3, 4};
        const Shape lra_ranks(extents.size(), 3);
        const TuckerModel lra = hosvd(reconstruct(random_model(extents, lra_ranks, rng, -1.0, 1.0)), lra_ranks);
        const DenseTensor y = reconstruct(lra);
        const auto m = random_model(extents, Shape(extents.size(), 2), rng);
        Penalties p{0.1, std::vector<double>(extents.size(), 0.05)};
        for (Index n = 0; n < m.order(); ++n) {
            const auto ws = build_workspace(lra, m, n);
            EXPECT_LT(rel_err(grad_factor_lra(ws, lra, m, n, p), grad_factor_direct(y, m, n, p)), 1e-8);
            EXPECT_LT(rel_err(grad_core_lra(ws, lra, m, p), grad_core_direct(y, m, p)), 1e-8);
        }
        EXPECT_NEAR(cost(lra, m, p), cost(y, m, p), 1e-8 * cost(y, m, p));
    }
}

TEST(Workspace, MatchesNaiveProducts) {
    std::mt19937_64 rng(7);
    const auto lra = hosvd(random_tensor({5, 6, 4}, rng), {3, 3, 3});
    const auto m = random_model({5, 6, 4}, {2, 3, 2}, rng);
    for (Index n = 0; n < 3; ++n) {
        const auto ws = build_workspace(lra, m, n);
        DenseTensor x = m.core;
        for (Index p = 0; p < 3; ++p) {
            const auto k = static_cast<std::size_t>(p);
            EXPECT_LT((ws.grams[k] - ws.grams[k].transpose()).norm(), 1e-12);
            EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(ws.grams[k]).eigenvalues().minCoeff(), -1e-10);
            if (p != n) x = mode_product(x, Matrix(m.factors[k].transpose() * m.factors[k]), p);
        }
        EXPECT_LT(rel_err(ws.x, x), 1e-12);

        const Matrix b = kronecker_reverse(m.factors, n) * unfold(m.core, n).transpose();
        EXPECT_LT(rel_err(Matrix(b.transpose() * b), Matrix(unfold(ws.x, n) * unfold(m.core, n).transpose())), 1e-10);
    }

    TuckerModel ident;
    ident.core = random_tensor({3, 2, 4}, rng);
    for (Index e : {3, 2, 4}) ident.factors.push_back(Matrix::Identity(e, e));
    EXPECT_EQ(build_workspace(ident, ident, 1).x, ident.core);
}

TEST(Workspace, StaleModeRejected) {
    const auto c = exact_case({4, 5, 6}, {2, 2, 2}, 8);
    const auto ws = build_workspace(c.lra, c.truth, 0);
    EXPECT_THROW(grad_factor_lra(ws, c.lra, c.truth, 1), std::logic_error);
    EXPECT_THROW(build_workspace(c.lra, c.truth, 3), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Block updates
// ---------------------------------------------------------------------------

TEST(Mu, FixedPointAndAbsorbingZeros) {
    const auto c = exact_case({5, 6, 7}, {2, 3, 2}, 9);
    for (Index n = 0; n < 3; ++n) {
        const Matrix& a = c.truth.factors[static_cast<std::size_t>(n)];
        EXPECT_LT(rel_err(mu_update_factor(a, factor_terms(c.y, c.truth, n)), a), 1e-10);
    }
    EXPECT_LT(rel_err(mu_update_core(c.truth.core, core_terms(c.y, c.truth)), c.truth.core), 1e-10);

    TuckerModel m = c.truth;
    m.factors[1].row(2).setZero();
    const Matrix next = mu_update_factor(m.factors[1], factor_terms(c.y, m, 1));
    EXPECT_TRUE(next.row(2).isZero(0.0));
}

TEST(Mu, MonotoneOverFiftyUpdates) {
    std::mt19937_64 rng(10);
    const DenseTensor y = random_tensor({6, 5, 4}, rng, 0.0, 1.0);
    TuckerModel m = random_model({6, 5, 4}, {2, 2, 2}, rng);
    double prev = cost(y, m);
    for (int k = 0; k < 50; ++k) {
        for (Index n = 0; n < 3; ++n) {
            auto& a = m.factors[static_cast<std::size_t>(n)];
            a = mu_update_factor(a, factor_terms(y, m, n));
            EXPECT_GE(a.minCoeff(), 0.0);
            const double c = cost(y, m);
            EXPECT_LE(c, prev + 1e-12);
            prev = c;
        }
        m.core = mu_update_core(m.core, core_terms(y, m));
        EXPECT_GE(min_entry(m.core), 0.0);
        const double c = cost(y, m);
        EXPECT_LE(c, prev + 1e-12);
        prev = c;
    }
}

TEST(Mu, L1DrivesCoreDown) {
    std::mt19937_64 rng(11);
    const DenseTensor y = random_tensor({6, 5, 4}, rng, 0.0, 1.0);
    const auto m = random_model({6, 5, 4}, {2, 2, 2}, rng);
    double prev = std::numeric_limits<double>::infinity();
    for (double l1 : {0.0, 0.1, 1.0}) {
        DenseTensor g = m.core;
        TuckerModel mm = m;
        for (int k = 0; k < 50; ++k) {
            g = mu_update_core(g, core_terms(y, mm), l1);
            mm.core = g;
        }
        EXPECT_LT(l1_norm(g), prev);
        prev = l1_norm(g);
    }
}

TEST(Hals, SingleColumnClosedForm) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        const DenseTensor y = random_tensor({7, 5, 4}, rng, -0.5, 1.0);
        const auto m = random_model({7, 5, 4}, {1, 2, 2}, rng);
        const FactorTerms terms = factor_terms(y, m, 0);
        const Matrix want = (terms.q / terms.t(0, 0)).cwiseMax(0.0);
        EXPECT_LT((hals_update_factor(m.factors[0], terms).factor - want).norm(), 1e-10 * (1.0 + want.norm()));
    }
}

TEST(Hals, FixedPointMonotoneAndGuard) {
    const auto c = exact_case({5, 6, 7}, {2, 3, 2}, 13);
    for (Index n = 0; n < 3; ++n) {
        const Matrix& a = c.truth.factors[static_cast<std::size_t>(n)];
        EXPECT_LT(rel_err(hals_update_factor(a, factor_terms(c.y, c.truth, n)).factor, a), 1e-10);
    }

    std::mt19937_64 rng(14);
    const DenseTensor y = random_tensor({6, 5, 4}, rng, 0.0, 1.0);
    TuckerModel m = random_model({6, 5, 4}, {3, 2, 2}, rng);
    double prev = cost(y, m);
    for (int k = 0; k < 30; ++k)
        for (Index n = 0; n < 3; ++n) {
            auto& a = m.factors[static_cast<std::size_t>(n)];
            for (auto proj : {HalsProjection::Column, HalsProjection::Increment}) {
                const auto r = hals_update_factor(a, factor_terms(y, m, n), 0.0, proj);
                EXPECT_GE(r.factor.minCoeff(), 0.0);
                if (proj == HalsProjection::Column) a = r.factor;
            }
            const double cst = cost(y, m);
            EXPECT_LE(cst, prev + 1e-12);
            prev = cst;
        }

    TuckerModel z = m;
    z.factors[1].col(1).setZero();
    flat(z.core).setZero();
    const auto r = hals_update_factor(z.factors[0], factor_terms(y, z, 0));
    EXPECT_EQ(r.skipped_columns.size(), 3u);
    EXPECT_EQ(r.factor, z.factors[0]);
}

TEST(Apg, AlphaSequenceAndZeroGradient) {
    EXPECT_NEAR(apg_next_alpha(1.0), (1 + std::sqrt(5.0)) / 2, 1e-15);
    EXPECT_NEAR(apg_next_alpha(apg_next_alpha(1.0)), 2.193, 1e-3);
    Matrix x = Matrix::Constant(3, 2, 0.5);
    auto st = ApgState<Matrix>::start(x, 2.0);
    const Matrix out = apg_update_block([](const Matrix& v) { return Matrix(Matrix::Zero(v.rows(), v.cols())); }, st, 10);
    EXPECT_EQ(out, x);
    EXPECT_THROW(ApgState<Matrix>::start(x, 0.0), std::invalid_argument);
    st.lipschitz = -1;
    EXPECT_THROW(apg_update_block([](const Matrix& v) { return v; }, st, 1), std::invalid_argument);
}

TEST(Apg, ConvergesToEnumeratedNls) {
    std::mt19937_64 rng(15);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix mm = random_matrix(5, 3, rng);
        const Vector b = random_matrix(5, 1, rng) * 2.0;
        const Matrix gram = mm.transpose() * mm;
        const Matrix rhs = mm.transpose() * b;
        auto grad = [&](const Matrix& x) { return Matrix(gram * x - rhs); };
        auto st = ApgState<Matrix>::start(Matrix::Zero(3, 1), gram.norm());
        const Matrix x = apg_update_block(grad, st, 500);
        const Vector want = nls_by_enumeration(mm, b);
        EXPECT_LT((x.col(0) - want).norm(), 1e-6) << "trial " << trial;
    }
}

TEST(Apg, BlockObjectiveNeverIncreases) {
    std::mt19937_64 rng(16);
    for (int trial = 0; trial < 10; ++trial) {
        const DenseTensor y = random_tensor({6, 5, 4}, rng, 0.0, 1.0);
        const auto m = random_model({6, 5, 4}, {3, 2, 2}, rng);
        const FactorTerms terms = factor_terms(y, m, 0);
        auto st = ApgState<Matrix>::start(m.factors[0], lipschitz_factor(terms));
        double prev = factor_objective(m.factors[0], terms);
        auto obj = [&](const Matrix& a) { return factor_objective(a, terms); };
        for (int k = 0; k < 40; ++k) {
            const Matrix a = apg_update_block([&](const Matrix& x) { return grad_factor(x, terms); }, st, 1, {}, obj);
            EXPECT_GE(a.minCoeff(), 0.0);
            EXPECT_LE(obj(a), prev + 1e-10);
            prev = obj(a);
        }

        const CoreTerms ct = core_terms(y, m);
        auto cs = ApgState<DenseTensor>::start(m.core, lipschitz_core(ct.grams));
        double cprev = core_objective(m.core, ct);
        auto cobj = [&](const DenseTensor& g) { return core_objective(g, ct); };
        for (int k = 0; k < 40; ++k) {
            const DenseTensor g =
                apg_update_block([&](const DenseTensor& x) { return grad_core(x, ct); }, cs, 1, {}, cobj);
            EXPECT_LE(cobj(g), cprev + 1e-10);
            cprev = cobj(g);
        }
    }
}

TEST(Lipschitz, IdentityBoundAndDensePath) {
    TuckerModel ident;
    ident.core = DenseTensor(Shape{2, 3, 4});
    for (Index e : {2, 3, 4}) ident.factors.push_back(Matrix::Identity(e, e));
    EXPECT_NEAR(lipschitz_core(ident), std::sqrt(24.0), 1e-12);

    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 10; ++trial) {
        const auto m = random_model({4, 3, 5}, {2, 2, 3}, rng);
        std::vector<Matrix> grams;
        for (const auto& a : m.factors) grams.push_back(a.transpose() * a);
        const Matrix ftf = kronecker_reverse(grams);
        Vector v = Vector::Ones(ftf.rows());
        double spectral = 0.0;
        for (int it = 0; it < 500; ++it) {
            const Vector w = ftf * v;
            spectral = w.norm() / v.norm();
            v = w.normalized();
        }
        EXPECT_GE(lipschitz_core(m), spectral * (1 - 1e-12));
    }

    const DenseTensor y = random_tensor({5, 4, 3}, rng, 0.0, 1.0);
    auto m = random_model({5, 4, 3}, {2, 2, 2}, rng);
    m.factors[0] = Eigen::HouseholderQR<Matrix>(m.factors[0]).householderQ() * Matrix::Identity(5, 2);
    for (Index n = 0; n < 3; ++n) {
        const Matrix b = kronecker_reverse(m.factors, n) * unfold(m.core, n).transpose();
        EXPECT_NEAR(lipschitz_factor(factor_terms(y, m, n)), (b.transpose() * b).norm(), 1e-10 * (b.transpose() * b).norm());
    }
}

TEST(Als, RecoversFactorAndCore) {
    const auto c = exact_case({6, 5, 7}, {2, 3, 2}, 18);
    for (Index n = 0; n < 3; ++n) {
        TuckerModel start = c.truth;
        std::mt19937_64 rng(static_cast<std::uint64_t>(n));
        start.factors[static_cast<std::size_t>(n)] = random_matrix(c.y.extent(n), c.truth.core.extent(n), rng);
        const auto ws = build_workspace(c.lra, start, n);
        const Matrix a = als_update_factor(factor_terms(ws, c.lra, start, n), 0.0, false);
        EXPECT_LT(rel_err(a, c.truth.factors[static_cast<std::size_t>(n)]), 1e-8);
    }

    TuckerModel same = c.lra;
    flat(same.core).setRandom();
    EXPECT_LT(rel_err(als_update_core(core_terms(c.lra, same), 0.0, false), c.lra.core), 1e-12);

    std::mt19937_64 rng(19);
    const DenseTensor y = random_tensor({5, 4, 3}, rng);
    const auto m = random_model({5, 4, 3}, {2, 2, 2}, rng, -1.0, 1.0);
    EXPECT_GE(als_update_factor(factor_terms(y, m, 1)).minCoeff(), 0.0);
    EXPECT_GE(min_entry(als_update_core(core_terms(y, m))), 0.0);
}

TEST(Als, SingularSystemIsRegularizedAndFlagged) {
    FactorTerms terms{Matrix::Zero(2, 2), Matrix::Ones(3, 2)};
    terms.t(0, 0) = 1.0;
    bool flagged = false;
    const Matrix a = als_update_factor(terms, 0.0, false, &flagged);
    EXPECT_TRUE(flagged);
    EXPECT_TRUE(a.allFinite());
}

TEST(Invariants, ScaleIndeterminacy) {
    std::mt19937_64 rng(20);
    const DenseTensor y = random_tensor({4, 5, 3}, rng, 0.0, 1.0);
    const auto m = random_model({4, 5, 3}, {2, 3, 2}, rng);
    for (Index n = 0; n < 3; ++n) {
        TuckerModel s = m;
        Matrix d = Matrix::Identity(s.core.extent(n), s.core.extent(n));
        d(1, 1) = 3.7;
        s.factors[static_cast<std::size_t>(n)] = s.factors[static_cast<std::size_t>(n)] * d;
        s.core = mode_product(s.core, Matrix(d.inverse()), n);
        EXPECT_NEAR(cost(y, s), cost(y, m), 1e-10 * (1 + cost(y, m)));
    }
}

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

TEST(Solve, NoiseFreeRecoveryAllFirstOrderSolvers) {
    // A single random start can stall in a local minimum, so the median over
    // five generated instances is checked.
    for (auto alg : {Algorithm::MU, Algorithm::HALS, Algorithm::APG}) {
        std::vector<double> fits;
        for (std::uint64_t seed = 5; seed < 10; ++seed) {
            const auto data = generate({{20, 20, 20}, {3, 3, 3}, 0.5, 0.5, 10.0, std::nullopt, seed});
            auto cfg = base_config({3, 3, 3}, alg);
            cfg.tol = 1e-10;
            cfg.outer_iters = 2000;
            const auto r = solve(data.clean, cfg);
            EXPECT_GE(r.model.factors[0].minCoeff(), 0.0);
            EXPECT_GE(min_entry(r.model.core), 0.0);
            fits.push_back(fit_index(data.clean, reconstruct(r.model)));
        }
        std::nth_element(fits.begin(), fits.begin() + 2, fits.end());
        EXPECT_GE(fits[2], 99.0) << to_string(alg);
    }
}

TEST(Solve, MuTraceMonotoneDirectAndLra) {
    std::mt19937_64 rng(21);
    const DenseTensor y = random_tensor({8, 7, 6}, rng, 0.0, 1.0);
    for (bool lra : {false, true}) {
        auto cfg = base_config({2, 3, 2}, Algorithm::MU);
        cfg.use_lra = lra;
        cfg.lra_ranks = {4, 4, 4};
        cfg.outer_iters = 40;
        cfg.tol = 0;
        const auto r = solve(y, cfg);
        ASSERT_EQ(r.cost_trace.size(), 41u);
        for (std::size_t k = 1; k < r.cost_trace.size(); ++k) EXPECT_LE(r.cost_trace[k], r.cost_trace[k - 1] + 1e-12);
        ASSERT_TRUE(r.lra.has_value() == lra);
    }
}

TEST(Solve, PopulationModeStaysIdentity) {
    std::mt19937_64 rng(22);
    const DenseTensor y = random_tensor({9, 8, 5}, rng, 0.0, 1.0);
    for (auto alg : {Algorithm::MU, Algorithm::HALS, Algorithm::APG, Algorithm::ALS}) {
        auto cfg = base_config({3, 3, 5}, alg);
        cfg.use_lra = false;
        cfg.mode_constraints = {ModeConstraint::Nonnegative, ModeConstraint::Nonnegative, ModeConstraint::FixedIdentity};
        cfg.outer_iters = 15;
        const auto r = solve(y, cfg);
        EXPECT_EQ(r.model.factors[2], Matrix::Identity(5, 5)) << to_string(alg);
        EXPECT_TRUE(r.model.is_fixed(2));
    }
    auto bad = base_config({3, 3, 4});
    bad.mode_constraints = {ModeConstraint::Nonnegative, ModeConstraint::Nonnegative, ModeConstraint::FixedIdentity};
    EXPECT_THROW(solve(y, bad), std::invalid_argument);
}

TEST(Solve, SemiNtdLeavesModeUnprojected) {
    std::mt19937_64 rng(23);
    const DenseTensor y = random_tensor({8, 7, 6}, rng, -1.0, 1.0);
    auto cfg = base_config({2, 2, 2}, Algorithm::ALS);
    cfg.mode_constraints = {ModeConstraint::Unconstrained, ModeConstraint::Nonnegative, ModeConstraint::Nonnegative};
    cfg.use_lra = false;
    cfg.outer_iters = 20;
    const auto r = solve(y, cfg);
    EXPECT_LT(r.model.factors[0].minCoeff(), 0.0);
    EXPECT_GE(r.model.factors[1].minCoeff(), 0.0);
}

TEST(Solve, DeterministicPerSeed) {
    std::mt19937_64 rng(24);
    const DenseTensor y = random_tensor({7, 6, 5}, rng, 0.0, 1.0);
    for (auto alg : {Algorithm::MU, Algorithm::HALS, Algorithm::APG, Algorithm::ALS}) {
        auto cfg = base_config({2, 2, 2}, alg);
        cfg.outer_iters = 30;
        const auto a = solve(y, cfg);
        const auto b = solve(y, cfg);
        EXPECT_EQ(a.model, b.model);
        EXPECT_EQ(a.cost_trace, b.cost_trace);
        EXPECT_EQ(a.fit_trace, b.fit_trace);
        cfg.seed = 2;
        EXPECT_FALSE(solve(y, cfg).model == a.model);
    }
}

TEST(Solve, AcceptsCachedLraAndInitialModel) {
    const auto c = exact_case({8, 7, 6}, {2, 2, 2}, 25);
    auto cfg = base_config({2, 2, 2}, Algorithm::HALS);
    const auto from_dense = solve(c.y, cfg);
    const auto from_lra = solve(c.lra, cfg);
    EXPECT_EQ(from_dense.model, from_lra.model);

    auto one = cfg;
    one.outer_iters = 1;
    const auto start = solve(c.y, one).model;
    const auto warm = solve(c.y, cfg, start);
    EXPECT_EQ(warm.cost_trace.front(), cost(c.lra, start));
}

TEST(Solve, Errors) {
    std::mt19937_64 rng(26);
    DenseTensor y = random_tensor({4, 5, 6}, rng, 0.0, 1.0);
    EXPECT_THROW(solve(y, base_config({5, 2, 2})), std::invalid_argument);
    EXPECT_THROW(solve(y, base_config({2, 2})), std::invalid_argument);
    auto lra_too_big = base_config({2, 2, 2});
    lra_too_big.lra_ranks = {5, 2, 2};
    EXPECT_THROW(solve(y, lra_too_big), std::invalid_argument);

    DenseTensor neg = y;
    neg[3] = -0.5;
    EXPECT_THROW(solve(neg, base_config({2, 2, 2})), std::invalid_argument);
    auto allow = base_config({2, 2, 2});
    allow.allow_negative_data = true;
    allow.outer_iters = 3;
    EXPECT_NO_THROW(solve(neg, allow));

    DenseTensor nan = y;
    nan.data()[0] = std::nan("");
    EXPECT_THROW(solve(nan, base_config({2, 2, 2})), std::invalid_argument);

    auto bad = base_config({2, 2, 2});
    bad.l1_core = -1;
    EXPECT_THROW(solve(y, bad), std::invalid_argument);
    bad = base_config({2, 2, 2});
    bad.inner_iters = 0;
    EXPECT_THROW(solve(y, bad), std::invalid_argument);
}

TEST(FlopEstimate, TableValues) {
    EXPECT_EQ(gradient_flop_estimate(4, 100, 10, true), 220000.0);
    const double without = 100.0 * 100 + 1e5 + (1e1 * 1e8 + 1e2 * 1e6 + 1e3 * 1e4 + 1e4 * 1e2);
    EXPECT_EQ(gradient_flop_estimate(4, 100, 10, false), without);
    for (int n = 2; n <= 5; ++n) {
        const double ratio = gradient_flop_estimate(n, 7, 7, false) / gradient_flop_estimate(n, 7, 7, true);
        EXPECT_GT(ratio, 0.2);
        EXPECT_LT(ratio, static_cast<double>(n) + 1);
    }
    EXPECT_THROW(gradient_flop_estimate(0, 10, 2, true), std::invalid_argument);
}
