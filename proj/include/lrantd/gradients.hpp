#pragma once

#include "lrantd/config.hpp"
#include "lrantd/tucker.hpp"

namespace lrantd {

namespace detail {

inline void check_conformable(const DenseTensor& y, const TuckerModel& m) {
    m.validate();
    if (y.order() != m.order()) throw std::invalid_argument("data and model orders differ");
    for (Index n = 0; n < y.order(); ++n)
        if (m.factors[static_cast<std::size_t>(n)].rows() != y.extent(n))
            throw std::invalid_argument("data extent " + std::to_string(y.extent(n)) + " and factor rows " +
                                        std::to_string(m.factors[static_cast<std::size_t>(n)].rows()) +
                                        " differ at mode " + std::to_string(n));
}

inline void check_conformable(const TuckerModel& lra, const TuckerModel& m) {
    lra.validate();
    m.validate();
    if (lra.order() != m.order()) throw std::invalid_argument("LRA and model orders differ");
    for (Index n = 0; n < m.order(); ++n)
        if (lra.factors[static_cast<std::size_t>(n)].rows() != m.factors[static_cast<std::size_t>(n)].rows())
            throw std::invalid_argument("LRA and model extents differ at mode " + std::to_string(n));
}

inline double dot(const DenseTensor& a, const DenseTensor& b) { return flat(a).dot(flat(b)); }

inline double penalty_value(const TuckerModel& m, const Penalties& p) {
    double v = p.l1_core * l1_norm(m.core);
    for (Index n = 0; n < m.order(); ++n)
        v += 0.5 * p.fro(n) * m.factors[static_cast<std::size_t>(n)].squaredNorm();
    return v;
}

inline std::vector<Matrix> grams_of(const TuckerModel& m) {
    std::vector<Matrix> g;
    for (const auto& a : m.factors) g.push_back(counted_product(a.transpose(), a));
    return g;
}

inline std::vector<Matrix> cross_of(const TuckerModel& m, const TuckerModel& lra) {
    std::vector<Matrix> c;
    for (std::size_t n = 0; n < m.factors.size(); ++n)
        c.push_back(counted_product(m.factors[n].transpose(), lra.factors[n]));
    return c;
}

}  // namespace detail

/// Squared residual ||Y - Yhat||^2 against a dense tensor.
inline double residual_squared(const DenseTensor& y, const TuckerModel& m) {
    detail::check_conformable(y, m);
    return (flat(y) - flat(reconstruct(m))).squaredNorm();
}

/// Squared residual ||Ytilde - Yhat||^2 evaluated through core-sized
/// products only; neither tensor is formed.
inline double residual_squared(const TuckerModel& lra, const TuckerModel& m) {
    detail::check_conformable(lra, m);
    const auto grams = detail::grams_of(m);
    const auto cross = detail::cross_of(m, lra);
    std::vector<Matrix> lra_grams;
    for (const auto& a : lra.factors) lra_grams.push_back(a.transpose() * a);
    const double data_sq = detail::dot(lra.core, multi_mode_product(lra.core, lra_grams));
    const double inner = detail::dot(m.core, multi_mode_product(lra.core, cross));
    const double model_sq = detail::dot(m.core, multi_mode_product(m.core, grams));
    return std::max(0.0, data_sq - 2.0 * inner + model_sq);
}

inline double data_norm(const DenseTensor& y) { return frobenius_norm(y); }

inline double data_norm(const TuckerModel& lra) {
    std::vector<Matrix> g;
    for (const auto& a : lra.factors) g.push_back(a.transpose() * a);
    return std::sqrt(std::max(0.0, detail::dot(lra.core, multi_mode_product(lra.core, g))));
}

/// 1/2 ||Y - G x_n A_n||^2 + l1 ||G||_1 + sum_n fro_n / 2 ||A_n||^2.
inline double cost(const DenseTensor& y, const TuckerModel& m, const Penalties& p = {}) {
    return 0.5 * residual_squared(y, m) + detail::penalty_value(m, p);
}

/// Same cost with the data replaced by its Tucker approximation.
inline double cost(const TuckerModel& lra, const TuckerModel& m, const Penalties& p = {}) {
    return 0.5 * residual_squared(lra, m) + detail::penalty_value(m, p);
}

/// Factor gradient from the explicit matrix B = [kron_{p != n} A_p] G_(n)^T.
inline Matrix grad_factor_direct(const DenseTensor& y, const TuckerModel& m, Index n, const Penalties& p = {}) {
    detail::check_conformable(y, m);
    const Matrix b = unfold(multi_mode_product(m.core, m.factors, n), n).transpose();
    const Matrix& a = m.factors[static_cast<std::size_t>(n)];
    Matrix g = a * (b.transpose() * b) - unfold_times(y, n, b);
    if (p.fro(n) > 0) g += p.fro(n) * a;
    return g;
}

/// Core gradient Yhat x_n A_n^T - Y x_n A_n^T (+ l1).
inline DenseTensor grad_core_direct(const DenseTensor& y, const TuckerModel& m, const Penalties& p = {}) {
    detail::check_conformable(y, m);
    DenseTensor g = multi_mode_product(reconstruct(m), m.factors, std::nullopt, true);
    flat(g) -= flat(multi_mode_product(y, m.factors, std::nullopt, true));
    if (p.l1_core > 0) flat(g).array() += p.l1_core;
    return g;
}

/// Gram and cross products plus the small tensors X and Xtilde for one mode.
struct GradientWorkspace {
    Index mode = 0;
    std::vector<Matrix> grams;  // A_p^T A_p
    std::vector<Matrix> cross;  // A_p^T Atilde_p
    DenseTensor x;              // G x_{p != n} A_p^T A_p
    DenseTensor x_tilde;        // Gtilde x_{p != n} A_p^T Atilde_p
};

inline GradientWorkspace build_workspace(const TuckerModel& lra, const TuckerModel& m, Index n) {
    detail::check_conformable(lra, m);
    if (n < 0 || n >= m.order()) throw std::invalid_argument("build_workspace: invalid mode");
    GradientWorkspace ws;
    ws.mode = n;
    ws.grams = detail::grams_of(m);
    ws.cross = detail::cross_of(m, lra);
    ws.x = multi_mode_product(m.core, ws.grams, n);
    ws.x_tilde = multi_mode_product(lra.core, ws.cross, n);
    return ws;
}

/// T = B^T B and Q = Y_(n) B for one factor block.
struct FactorTerms {
    Matrix t;
    Matrix q;
};

/// Terms of the block subproblem for A_n against dense data. The data is
/// touched through Y x_{p != n} A_p^T.
inline FactorTerms factor_terms(const DenseTensor& y, const TuckerModel& m, Index n) {
    detail::check_conformable(y, m);
    const auto grams = detail::grams_of(m);
    const Matrix gn = unfold(m.core, n).transpose();
    FactorTerms terms;
    terms.t = counted_product(unfold(multi_mode_product(m.core, grams, n), n), gn);
    terms.q = counted_product(unfold(multi_mode_product(y, m.factors, n, true), n), gn);
    return terms;
}

inline FactorTerms factor_terms(const GradientWorkspace& ws, const TuckerModel& lra, const TuckerModel& m, Index n) {
    if (ws.mode != n)
        throw std::logic_error("stale gradient workspace: built for mode " + std::to_string(ws.mode) +
                               ", requested mode " + std::to_string(n));
    const Matrix gn = unfold(m.core, n).transpose();
    FactorTerms terms;
    terms.t = counted_product(unfold(ws.x, n), gn);
    terms.q = counted_product(lra.factors[static_cast<std::size_t>(n)], counted_product(unfold(ws.x_tilde, n), gn));
    return terms;
}

inline Matrix grad_factor(const Matrix& a, const FactorTerms& terms, double fro = 0.0) {
    Matrix g = counted_product(a, terms.t) - terms.q;
    if (fro > 0) g += fro * a;
    return g;
}

/// A_n (X_(n) G_(n)^T) - Atilde_n (Xtilde_(n) G_(n)^T) (+ fro_n A_n).
inline Matrix grad_factor_lra(const GradientWorkspace& ws, const TuckerModel& lra, const TuckerModel& m, Index n,
                              const Penalties& p = {}) {
    return grad_factor(m.factors[static_cast<std::size_t>(n)], factor_terms(ws, lra, m, n), p.fro(n));
}

/// X x_n (A^T A) - Xtilde x_n (A^T Atilde) (+ l1), with n the workspace mode.
inline DenseTensor grad_core_lra(const GradientWorkspace& ws, const TuckerModel& lra, const TuckerModel& m,
                                 const Penalties& p = {}) {
    detail::check_conformable(lra, m);
    const auto n = ws.mode;
    const auto k = static_cast<std::size_t>(n);
    DenseTensor g = mode_product(ws.x, ws.grams[k], n);
    flat(g) -= flat(mode_product(ws.x_tilde, ws.cross[k], n));
    if (p.l1_core > 0) flat(g).array() += p.l1_core;
    return g;
}

/// Core block: gradient is G x_n grams_n - target (+ l1).
struct CoreTerms {
    std::vector<Matrix> grams;
    DenseTensor target;  // Y x_n A_n^T
};

inline CoreTerms core_terms(const DenseTensor& y, const TuckerModel& m) {
    detail::check_conformable(y, m);
    return {detail::grams_of(m), multi_mode_product(y, m.factors, std::nullopt, true)};
}

inline CoreTerms core_terms(const TuckerModel& lra, const TuckerModel& m) {
    detail::check_conformable(lra, m);
    return {detail::grams_of(m), multi_mode_product(lra.core, detail::cross_of(m, lra))};
}

inline DenseTensor apply_grams(const DenseTensor& g, const std::vector<Matrix>& grams) {
    return multi_mode_product(g, grams);
}

inline DenseTensor grad_core(const DenseTensor& g, const CoreTerms& terms, double l1 = 0.0) {
    DenseTensor out = apply_grams(g, terms.grams);
    flat(out) -= flat(terms.target);
    if (l1 > 0) flat(out).array() += l1;
    return out;
}

/// Lipschitz bound for a factor block: ||T||_F (+ fro penalty).
inline double lipschitz_factor(const FactorTerms& terms, double fro = 0.0) { return terms.t.norm() + fro; }

/// Lipschitz bound for the core: ||kron_n A_n^T A_n||_F = prod_n ||A_n^T A_n||_F.
inline double lipschitz_core(const std::vector<Matrix>& grams) {
    double l = 1.0;
    for (const auto& g : grams) l *= g.norm();
    return l;
}

inline double lipschitz_factor(const GradientWorkspace& ws, const TuckerModel& lra, const TuckerModel& m,
                               const Penalties& p = {}) {
    return lipschitz_factor(factor_terms(ws, lra, m, ws.mode), p.fro(ws.mode));
}

inline double lipschitz_core(const TuckerModel& m) {
    std::vector<Matrix> grams;
    for (const auto& a : m.factors) grams.push_back(a.transpose() * a);
    return lipschitz_core(grams);
}

/// Multiplication counts for one gradient evaluation with I_n = I and all
/// ranks equal to R.
inline double gradient_flop_estimate(int order, double extent, double rank, bool with_lra) {
    if (order < 1 || extent <= 0 || rank <= 0) throw std::invalid_argument("gradient_flop_estimate: sizes must be positive");
    const double shared = extent * rank * rank + std::pow(rank, order + 1);
    if (with_lra) return 2.0 * shared;
    double data_term = 0.0;
    for (int k = 1; k <= order; ++k) data_term += std::pow(rank, k) * std::pow(extent, order + 1 - k);
    return shared + data_term;
}

}  // namespace lrantd
