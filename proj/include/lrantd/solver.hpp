#pragma once

#include "lrantd/lra.hpp"
#include "lrantd/updates.hpp"

#include <chrono>
#include <random>
#include <variant>

namespace lrantd {

enum class Termination { Converged, MaxIterations };

inline std::string_view to_string(Termination t) {
    return t == Termination::Converged ? "converged" : "max_iterations";
}

struct DecompositionResult {
    TuckerModel model;
    std::optional<TuckerModel> lra;  // set when the LRA step ran inside solve
    std::vector<double> cost_trace;  // entry 0 is the initial cost, then one per sweep
    std::vector<double> fit_trace;   // percent, against the data the solver saw
    std::vector<double> elapsed_ms;  // cumulative NTD time at each trace entry
    double lra_ms = 0.0;
    double ntd_ms = 0.0;
    int iterations = 0;
    Termination termination = Termination::MaxIterations;
    int hals_skipped_columns = 0;
    int regularized_solves = 0;
    int apg_restarts = 0;
};

namespace detail {

// The data a solve runs against: the dense observation or its Tucker
// approximation. Everything the block updates need goes through here.
class SolverData {
public:
    explicit SolverData(const DenseTensor& y) : data_(&y) {}
    explicit SolverData(const TuckerModel& lra) : data_(&lra) {}

    Shape extents() const {
        if (auto y = std::get_if<const DenseTensor*>(&data_)) return (*y)->shape();
        return std::get<const TuckerModel*>(data_)->extents();
    }

    FactorTerms factor_terms(const TuckerModel& m, Index n) const {
        if (auto y = std::get_if<const DenseTensor*>(&data_)) return lrantd::factor_terms(**y, m, n);
        const TuckerModel& lra = *std::get<const TuckerModel*>(data_);
        return lrantd::factor_terms(build_workspace(lra, m, n), lra, m, n);
    }

    CoreTerms core_terms(const TuckerModel& m) const {
        return std::visit([&](const auto* d) { return lrantd::core_terms(*d, m); }, data_);
    }

    double residual_squared(const TuckerModel& m) const {
        return std::visit([&](const auto* d) { return lrantd::residual_squared(*d, m); }, data_);
    }

    double norm() const {
        return std::visit([&](const auto* d) { return data_norm(*d); }, data_);
    }

private:
    std::variant<const DenseTensor*, const TuckerModel*> data_;
};

using Clock = std::chrono::steady_clock;

inline double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

inline void check_ranks_against(const Shape& extents, const Shape& ranks, const char* what) {
    for (std::size_t n = 0; n < extents.size(); ++n)
        if (ranks[n] > extents[n])
            throw std::invalid_argument(std::string(what) + " rank " + std::to_string(ranks[n]) +
                                        " exceeds extent " + std::to_string(extents[n]) + " at mode " +
                                        std::to_string(n));
}

// Unit-norm factor columns, scale moved into the core. Leaves the model
// (and therefore the cost without factor penalties) unchanged.
inline void normalize_columns(TuckerModel& m, const SolverConfig& cfg) {
    for (Index n = 0; n < m.order(); ++n) {
        if (m.is_fixed(n) || cfg.fro(n) > 0) continue;
        Matrix& a = m.factors[static_cast<std::size_t>(n)];
        Vector scale = a.colwise().norm().transpose();
        for (Index r = 0; r < scale.size(); ++r)
            if (scale[r] == 0.0) scale[r] = 1.0;
        a = a * scale.cwiseInverse().asDiagonal();
        m.core = mode_product(m.core, Matrix(scale.asDiagonal()), n);
    }
}

inline TuckerModel initial_model(const SolverData& data, const SolverConfig& cfg) {
    const Shape extents = data.extents();
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    TuckerModel m;
    const auto order = static_cast<Index>(extents.size());
    m.identity_fixed.assign(extents.size(), false);
    for (Index n = 0; n < order; ++n) {
        const auto k = static_cast<std::size_t>(n);
        if (cfg.constraint(n) == ModeConstraint::FixedIdentity) {
            if (cfg.ntd_ranks[k] != extents[k])
                throw std::invalid_argument("identity-fixed mode " + std::to_string(n) + " needs rank equal to extent");
            m.factors.push_back(Matrix::Identity(extents[k], extents[k]));
            m.identity_fixed[k] = true;
            continue;
        }
        Matrix a(extents[k], cfg.ntd_ranks[k]);
        for (Index j = 0; j < a.cols(); ++j)
            for (Index i = 0; i < a.rows(); ++i) a(i, j) = uniform(rng);
        m.factors.push_back(std::move(a));
    }
    m.core = DenseTensor(cfg.ntd_ranks);
    for (double& v : m.core.data()) v = uniform(rng);
    m.core = mu_update_core(m.core, data.core_terms(m), cfg.l1_core);
    return m;
}

}  // namespace detail

namespace detail {

inline DecompositionResult run_solver(const SolverData& data, const SolverConfig& cfg,
                                      const std::optional<TuckerModel>& init) {
    const Shape extents = data.extents();
    const auto order = static_cast<Index>(extents.size());
    cfg.validate(order);
    check_ranks_against(extents, cfg.ntd_ranks, "ntd");
    const Penalties pen = cfg.penalties();

    DecompositionResult res;
    const auto t0 = Clock::now();
    if (init) {
        if (init->extents() != extents || init->ranks() != cfg.ntd_ranks)
            throw std::invalid_argument("solve: initial model does not match data extents and ranks");
        res.model = *init;
        res.model.validate();
        res.model.identity_fixed.resize(extents.size(), false);
        for (Index n = 0; n < order; ++n)
            if (cfg.constraint(n) == ModeConstraint::FixedIdentity) {
                const Matrix& f = res.model.factors[static_cast<std::size_t>(n)];
                if (f.rows() != f.cols() || f != Matrix::Identity(f.rows(), f.cols()))
                    throw std::invalid_argument("solve: initial factor for a fixed mode is not the identity");
                res.model.identity_fixed[static_cast<std::size_t>(n)] = true;
            }
    } else {
        res.model = initial_model(data, cfg);
    }
    TuckerModel& m = res.model;

    const double norm = data.norm();
    auto record = [&] {
        const double resid = data.residual_squared(m);
        res.cost_trace.push_back(0.5 * resid + penalty_value(m, pen));
        res.fit_trace.push_back(norm > 0 ? (1.0 - std::sqrt(resid) / norm) * 100.0 : 0.0);
        res.elapsed_ms.push_back(ms_since(t0));
    };
    record();

    const double inner_tol = 0.1 * cfg.tol;
    auto relative_change = [](const auto& next, const auto& prev) {
        const double base = flat(prev).norm();
        return (flat(next) - flat(prev)).norm() / (base > 0 ? base : 1.0);
    };

    for (int outer = 1; outer <= cfg.outer_iters; ++outer) {
        const std::vector<Matrix> before = m.factors;

        for (Index n = 0; n < order; ++n) {
            if (cfg.constraint(n) == ModeConstraint::FixedIdentity) continue;
            Matrix& a = m.factors[static_cast<std::size_t>(n)];
            const FactorTerms terms = data.factor_terms(m, n);
            const double fro = pen.fro(n);

            if (cfg.constraint(n) == ModeConstraint::Unconstrained) {
                bool reg = false;
                a = als_update_factor(terms, fro, false, &reg);
                res.regularized_solves += reg;
                continue;
            }
            switch (cfg.algorithm) {
                case Algorithm::MU:
                    for (int k = 0; k < cfg.inner_iters; ++k) {
                        Matrix next = mu_update_factor(a, terms, fro);
                        const double change = relative_change(next, a);
                        a = std::move(next);
                        if (change < inner_tol) break;
                    }
                    break;
                case Algorithm::HALS:
                    for (int k = 0; k < cfg.inner_iters; ++k) {
                        HalsResult h = hals_update_factor(a, terms, fro, cfg.hals_projection);
                        res.hals_skipped_columns += static_cast<int>(h.skipped_columns.size());
                        const double change = relative_change(h.factor, a);
                        a = std::move(h.factor);
                        if (change < inner_tol) break;
                    }
                    break;
                case Algorithm::APG: {
                    auto state = ApgState<Matrix>::start(a, lipschitz_factor(terms, fro));
                    a = apg_update_block(
                        [&](const Matrix& x) { return grad_factor(x, terms, fro); }, state, cfg.inner_iters,
                        ApgOptions{true, inner_tol}, [&](const Matrix& x) { return factor_objective(x, terms, fro); });
                    res.apg_restarts += state.restarts;
                    break;
                }
                case Algorithm::ALS: {
                    bool reg = false;
                    a = als_update_factor(terms, fro, true, &reg);
                    res.regularized_solves += reg;
                    break;
                }
            }
        }

        const CoreTerms cterms = data.core_terms(m);
        DenseTensor& g = m.core;
        const double l1 = pen.l1_core;
        if (cfg.core_constraint == CoreConstraint::Unconstrained) {
            bool reg = false;
            g = als_update_core(cterms, l1, false, &reg);
            res.regularized_solves += reg;
        } else {
            switch (cfg.algorithm) {
                case Algorithm::MU:
                case Algorithm::HALS:
                    for (int k = 0; k < cfg.inner_iters; ++k) {
                        DenseTensor next = mu_update_core(g, cterms, l1);
                        const double change = relative_change(next, g);
                        g = std::move(next);
                        if (change < inner_tol) break;
                    }
                    break;
                case Algorithm::APG: {
                    auto state = ApgState<DenseTensor>::start(g, lipschitz_core(cterms.grams));
                    g = apg_update_block(
                        [&](const DenseTensor& x) { return grad_core(x, cterms, l1); }, state, cfg.inner_iters,
                        ApgOptions{true, inner_tol}, [&](const DenseTensor& x) { return core_objective(x, cterms, l1); });
                    res.apg_restarts += state.restarts;
                    break;
                }
                case Algorithm::ALS: {
                    bool reg = false;
                    g = als_update_core(cterms, l1, true, &reg);
                    res.regularized_solves += reg;
                    break;
                }
            }
        }

        normalize_columns(m, cfg);

        double max_change = 0.0;
        for (Index n = 0; n < order; ++n) {
            if (m.is_fixed(n)) continue;
            const auto k = static_cast<std::size_t>(n);
            max_change = std::max(max_change, (m.factors[k] - before[k]).squaredNorm());
        }
        res.iterations = outer;
        record();
        if (max_change < cfg.tol) {
            res.termination = Termination::Converged;
            break;
        }
    }
    res.ntd_ms = ms_since(t0);
    return res;
}

inline void check_data(const DenseTensor& y, const SolverConfig& cfg) {
    if (!y.all_finite()) throw std::invalid_argument("solve: data contains non-finite values");
    bool all_nonneg = cfg.core_constraint == CoreConstraint::Nonnegative;
    for (Index n = 0; n < y.order(); ++n) all_nonneg = all_nonneg && cfg.constraint(n) != ModeConstraint::Unconstrained;
    if (all_nonneg && !cfg.allow_negative_data && min_entry(y) < 0)
        throw std::invalid_argument("solve: negative data under nonnegativity constraints");
}

}  // namespace detail

/// Nonnegative Tucker decomposition of dense data. With cfg.use_lra the data
/// is first compressed by HOSVD and every sweep runs on the compressed form.
inline DecompositionResult solve(const DenseTensor& y, const SolverConfig& cfg,
                                 const std::optional<TuckerModel>& init = std::nullopt) {
    cfg.validate(y.order());
    detail::check_data(y, cfg);
    detail::check_ranks_against(y.shape(), cfg.ntd_ranks, "ntd");
    if (!cfg.use_lra) return detail::run_solver(detail::SolverData(y), cfg, init);

    detail::check_ranks_against(y.shape(), cfg.effective_lra_ranks(), "lra");
    const auto t0 = detail::Clock::now();
    TuckerModel lra = hosvd(y, cfg.effective_lra_ranks());
    const double lra_ms = detail::ms_since(t0);
    DecompositionResult res = detail::run_solver(detail::SolverData(lra), cfg, init);
    res.lra = std::move(lra);
    res.lra_ms = lra_ms;
    return res;
}

/// NTD of data already given in Tucker form (a cached or completed LRA).
inline DecompositionResult solve(const TuckerModel& lra, const SolverConfig& cfg,
                                 const std::optional<TuckerModel>& init = std::nullopt) {
    lra.validate();
    return detail::run_solver(detail::SolverData(lra), cfg, init);
}

}  // namespace lrantd
