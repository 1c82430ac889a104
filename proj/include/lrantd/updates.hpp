#pragma once

#include "lrantd/gradients.hpp"

#include <type_traits>

namespace lrantd {

inline constexpr double kDiagonalFloor = 1e-12;

// ---------------------------------------------------------------------------
// Multiplicative updates
// ---------------------------------------------------------------------------

/// A <- A o P+(Q) / (A T + fro A + eps). P+ is a no-op for nonnegative data
/// and removes the negative entries an LRA can introduce.
inline Matrix mu_update_factor(const Matrix& a, const FactorTerms& terms, double fro = 0.0) {
    Matrix den = counted_product(a, terms.t);
    if (fro > 0) den += fro * a;
    return (a.array() * terms.q.array().max(0.0) / (den.array() + kDivisionFloor)).matrix();
}

/// G <- G o P+(target) / (G x_n grams_n + l1 + eps).
inline DenseTensor mu_update_core(const DenseTensor& g, const CoreTerms& terms, double l1 = 0.0) {
    const DenseTensor den = apply_grams(g, terms.grams);
    DenseTensor out = g;
    flat(out) = (flat(g).array() * flat(terms.target).array().max(0.0) / (flat(den).array() + l1 + kDivisionFloor))
                    .matrix();
    return out;
}

// ---------------------------------------------------------------------------
// HALS
// ---------------------------------------------------------------------------

struct HalsResult {
    Matrix factor;
    std::vector<Index> skipped_columns;  // t_rr below kDiagonalFloor
};

/// One sequential pass over the columns of A with
/// a_r <- a_r + (q_r - A t_r) / t_rr, projected as selected.
inline HalsResult hals_update_factor(const Matrix& a, const FactorTerms& terms, double fro = 0.0,
                                     HalsProjection projection = HalsProjection::Column, bool nonnegative = true) {
    HalsResult res{a, {}};
    Matrix t = terms.t;
    if (fro > 0) t.diagonal().array() += fro;
    Matrix& f = res.factor;
    for (Index r = 0; r < f.cols(); ++r) {
        const double trr = t(r, r);
        if (!(trr >= kDiagonalFloor)) {
            res.skipped_columns.push_back(r);
            continue;
        }
        Vector delta = (terms.q.col(r) - f * t.col(r)) / trr;
        flops::add(static_cast<std::uint64_t>(f.rows() * f.cols()));
        if (!nonnegative) {
            f.col(r) += delta;
        } else if (projection == HalsProjection::Column) {
            f.col(r) = (f.col(r) + delta).cwiseMax(0.0);
        } else {
            f.col(r) += delta.cwiseMax(0.0);
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Accelerated proximal gradient
// ---------------------------------------------------------------------------

template <class Block>
struct ApgState {
    Block extrapolation;  // E_k
    Block previous;       // last accepted iterate
    double alpha = 1.0;
    double lipschitz = 1.0;
    int restarts = 0;

    static ApgState start(const Block& block, double lipschitz) {
        if (!(lipschitz > 0)) throw std::invalid_argument("APG: Lipschitz constant must be positive");
        return ApgState{block, block, 1.0, lipschitz, 0};
    }
};

inline double apg_next_alpha(double alpha) { return 0.5 * (1.0 + std::sqrt(4.0 * alpha * alpha + 1.0)); }

struct ApgOptions {
    bool project = true;
    double early_exit = 0.0;  // stop when ||G_k - G_{k-1}|| <= early_exit * ||G_{k-1}||
};

struct NoObjective {};

/// Runs `iters` APG steps: G_k = P+(E_k - grad(E_k) / L),
/// alpha_{k+1} = (1 + sqrt(4 alpha_k^2 + 1)) / 2,
/// E_{k+1} = G_k + (alpha_k - 1) / alpha_{k+1} (G_k - G_{k-1}).
/// When an objective is supplied, a step that increases it is replaced by a
/// plain projected gradient step from G_{k-1} and the momentum restarts.
template <class Block, class Grad, class Objective = NoObjective>
Block apg_update_block(Grad&& grad, ApgState<Block>& state, int iters, const ApgOptions& opts = {},
                       Objective&& objective = {}) {
    if (!(state.lipschitz > 0)) throw std::invalid_argument("APG: Lipschitz constant must be positive");
    constexpr bool monitored = !std::is_same_v<std::decay_t<Objective>, NoObjective>;
    const double step = 1.0 / state.lipschitz;
    [[maybe_unused]] double prev_obj = 0.0;
    if constexpr (monitored) prev_obj = objective(state.previous);

    auto prox = [&](const Block& from) {
        Block next = from;
        flat(next) -= step * flat(static_cast<const Block&>(grad(from)));
        if (opts.project) flat(next) = flat(next).cwiseMax(0.0);
        return next;
    };

    for (int k = 0; k < iters; ++k) {
        Block next = prox(state.extrapolation);
        if constexpr (monitored) {
            double obj = objective(next);
            if (obj > prev_obj) {
                next = prox(state.previous);
                obj = objective(next);
                state.alpha = 1.0;
                ++state.restarts;
            }
            prev_obj = obj;
        }
        const double alpha_next = apg_next_alpha(state.alpha);
        const double change = (flat(next) - flat(state.previous)).norm();
        const double base = flat(state.previous).norm();
        state.extrapolation = next;
        flat(state.extrapolation) += ((state.alpha - 1.0) / alpha_next) * (flat(next) - flat(state.previous));
        state.previous = std::move(next);
        state.alpha = alpha_next;
        if (opts.early_exit > 0 && change <= opts.early_exit * base) break;
    }
    return state.previous;
}

/// Block subproblem objectives (data term up to a constant).
inline double factor_objective(const Matrix& a, const FactorTerms& terms, double fro = 0.0) {
    return 0.5 * (a.transpose() * a).cwiseProduct(terms.t).sum() - a.cwiseProduct(terms.q).sum() +
           0.5 * fro * a.squaredNorm();
}

inline double core_objective(const DenseTensor& g, const CoreTerms& terms, double l1 = 0.0) {
    return 0.5 * detail::dot(g, apply_grams(g, terms.grams)) - detail::dot(g, terms.target) + l1 * flat(g).sum();
}

// ---------------------------------------------------------------------------
// Least squares (ALS / semi-NTD)
// ---------------------------------------------------------------------------

namespace detail {

// Solves s * X = rhs for symmetric s. Falls back to a ridge of
// 1e-10 * trace / size when s is numerically singular.
inline Matrix solve_symmetric(const Matrix& s, const Matrix& rhs, bool* regularized) {
    Eigen::LDLT<Matrix> ldlt(s);
    const double diag_max = s.diagonal().cwiseAbs().maxCoeff();
    const double d_min = ldlt.vectorD().cwiseAbs().minCoeff();
    if (ldlt.info() == Eigen::Success && diag_max > 0 && d_min > 1e-13 * diag_max) return ldlt.solve(rhs);
    if (regularized) *regularized = true;
    Matrix ridge = s;
    const double eps = 1e-10 * std::max(s.trace(), 1e-300) / static_cast<double>(s.rows());
    ridge.diagonal().array() += eps;
    return Eigen::LDLT<Matrix>(ridge).solve(rhs);
}

}  // namespace detail

/// A <- Q (T + fro I)^{-1}, optionally followed by P+.
inline Matrix als_update_factor(const FactorTerms& terms, double fro = 0.0, bool project = true,
                                bool* regularized = nullptr) {
    Matrix t = terms.t;
    if (fro > 0) t.diagonal().array() += fro;
    Matrix a = detail::solve_symmetric(t, terms.q.transpose(), regularized).transpose();
    return project ? project_nonneg(std::move(a)) : a;
}

/// G <- (target - l1) x_n (A_n^T A_n)^{-1}, optionally followed by P+.
/// In LRA form target = Gtilde x_n A_n^T Atilde_n, so this is
/// Gtilde x_n [(A_n^T A_n)^{-1} A_n^T Atilde_n].
inline DenseTensor als_update_core(const CoreTerms& terms, double l1 = 0.0, bool project = true,
                                   bool* regularized = nullptr) {
    DenseTensor g = terms.target;
    if (l1 > 0) flat(g).array() -= l1;
    for (Index n = 0; n < g.order(); ++n) {
        const Matrix& s = terms.grams[static_cast<std::size_t>(n)];
        const Matrix inv = detail::solve_symmetric(s, Matrix::Identity(s.rows(), s.cols()), regularized);
        g = mode_product(g, inv, n);
    }
    return project ? project_nonneg(std::move(g)) : g;
}

}  // namespace lrantd
