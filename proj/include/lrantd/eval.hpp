#pragma once

#include "lrantd/gradients.hpp"
#include "lrantd/lra.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace lrantd {

struct SyntheticSpec {
    Shape extents;
    Shape ranks;
    double factor_sparsity = 0.0;
    double core_sparsity = 0.0;
    double mean = 10.0;
    std::optional<double> snr_db;  // nullopt: clean
    std::uint64_t seed = 1;

    void validate() const {
        if (extents.empty() || extents.size() != ranks.size())
            throw std::invalid_argument("SyntheticSpec: extents and ranks must be non-empty and of equal length");
        for (std::size_t n = 0; n < extents.size(); ++n)
            if (ranks[n] < 1 || ranks[n] > extents[n])
                throw std::invalid_argument("SyntheticSpec: rank " + std::to_string(ranks[n]) + " invalid for extent " +
                                            std::to_string(extents[n]));
        auto check_s = [](double s, const char* what) {
            if (!(s >= 0.0 && s < 1.0)) throw std::invalid_argument(std::string("SyntheticSpec: ") + what + " must lie in [0,1)");
        };
        check_s(factor_sparsity, "factor sparsity");
        check_s(core_sparsity, "core sparsity");
        if (!(mean > 0.0) || !std::isfinite(mean)) throw std::invalid_argument("SyntheticSpec: mean must be positive");
        if (snr_db && !std::isfinite(*snr_db)) throw std::invalid_argument("SyntheticSpec: SNR must be finite");
    }
};

struct SyntheticData {
    DenseTensor clean;
    TuckerModel truth;
    DenseTensor noisy;
};

namespace detail {

inline constexpr int kRegenerationBudget = 100;

// Exponential entries with exactly floor(s * count) zeros at uniformly
// chosen positions.
template <class Rng>
void fill_sparse_exponential(std::span<double> out, double mean, double s, Rng& rng) {
    std::exponential_distribution<double> expo(1.0 / mean);
    for (double& v : out) v = expo(rng);
    const auto zeros = static_cast<std::size_t>(std::floor(s * static_cast<double>(out.size())));
    std::vector<std::size_t> idx(out.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t k = 0; k < zeros; ++k) {
        std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
        std::swap(idx[k], idx[pick(rng)]);
        out[idx[k]] = 0.0;
    }
}

inline bool has_zero_column(const Matrix& a) {
    for (Index j = 0; j < a.cols(); ++j)
        if ((a.col(j).array() == 0.0).all()) return true;
    return false;
}

// A core slab that is identically zero along some mode makes the
// corresponding factor column unidentifiable.
inline bool has_zero_slice(const DenseTensor& g) {
    for (Index n = 0; n < g.order(); ++n)
        if (has_zero_column(unfold(g, n).transpose())) return true;
    return false;
}

}  // namespace detail

inline SyntheticData generate(const SyntheticSpec& spec) {
    spec.validate();
    SyntheticData out;
    TuckerModel& truth = out.truth;
    truth.identity_fixed.assign(spec.extents.size(), false);

    for (std::size_t n = 0; n < spec.extents.size(); ++n) {
        std::mt19937_64 rng(mix_seed(spec.seed, 1, n));
        Matrix a(spec.extents[n], spec.ranks[n]);
        int attempt = 0;
        do {
            if (attempt++ == detail::kRegenerationBudget)
                throw std::runtime_error("generate: factor " + std::to_string(n) +
                                         " keeps a zero column at this sparsity");
            detail::fill_sparse_exponential(std::span<double>(a.data(), static_cast<std::size_t>(a.size())), spec.mean,
                                            spec.factor_sparsity, rng);
        } while (detail::has_zero_column(a));
        truth.factors.push_back(std::move(a));
    }

    std::mt19937_64 core_rng(mix_seed(spec.seed, 2));
    truth.core = DenseTensor(spec.ranks);
    int attempt = 0;
    do {
        if (attempt++ == detail::kRegenerationBudget)
            throw std::runtime_error("generate: core keeps a zero slice at this sparsity");
        detail::fill_sparse_exponential(truth.core.data(), spec.mean, spec.core_sparsity, core_rng);
    } while (detail::has_zero_slice(truth.core));

    out.clean = reconstruct(truth);
    out.noisy = out.clean;
    if (spec.snr_db) {
        std::mt19937_64 rng(mix_seed(spec.seed, 3));
        std::normal_distribution<double> normal;
        Vector noise(out.clean.size());
        for (Index i = 0; i < noise.size(); ++i) noise[i] = normal(rng);
        const double target = frobenius_norm(out.clean) * std::pow(10.0, -*spec.snr_db / 20.0);
        flat(out.noisy) += noise * (target / noise.norm());
    }
    return out;
}

/// Realized signal-to-noise ratio in dB.
inline double snr_db(const DenseTensor& clean, const DenseTensor& noisy) {
    require_same_shape(clean, noisy, "snr_db");
    return 10.0 * std::log10(flat(clean).squaredNorm() / (flat(noisy) - flat(clean)).squaredNorm());
}

/// (1 - ||Y - Yhat|| / ||Y||) * 100.
inline double fit_index(const DenseTensor& y, const DenseTensor& yhat) {
    require_same_shape(y, yhat, "fit_index");
    const double ny = frobenius_norm(y);
    if (ny == 0.0) throw std::invalid_argument("fit_index: reference tensor has zero norm");
    return (1.0 - (flat(y) - flat(yhat)).norm() / ny) * 100.0;
}

// ---------------------------------------------------------------------------
// Component matching and mSIR
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<Vector> standardized(const Vector& v) {
    Vector c = v.array() - v.mean();
    const double sd = std::sqrt(c.squaredNorm() / static_cast<double>(c.size()));
    if (!(sd > 0.0) || c.norm() <= 1e-14 * v.norm()) return std::nullopt;
    return Vector(c / sd);
}

}  // namespace detail

/// Per mode, perm[n][r] is the estimated column matched to true column r.
/// Greedy: repeatedly take the unassigned pair with the largest absolute
/// correlation. Identity-fixed modes keep the identity assignment.
inline std::vector<std::vector<Index>> match_components(const TuckerModel& truth, const TuckerModel& est) {
    if (truth.order() != est.order()) throw std::invalid_argument("match_components: orders differ");
    std::vector<std::vector<Index>> perm;
    for (Index n = 0; n < truth.order(); ++n) {
        const Matrix& a = truth.factors[static_cast<std::size_t>(n)];
        const Matrix& b = est.factors[static_cast<std::size_t>(n)];
        if (a.cols() != b.cols() || a.rows() != b.rows())
            throw std::invalid_argument("match_components: factor shapes differ at mode " + std::to_string(n));
        const Index r = a.cols();
        std::vector<Index> p(static_cast<std::size_t>(r));
        std::iota(p.begin(), p.end(), Index{0});
        if (truth.is_fixed(n)) {
            perm.push_back(std::move(p));
            continue;
        }
        Matrix corr = Matrix::Zero(r, r);
        for (Index i = 0; i < r; ++i) {
            const auto ai = detail::standardized(a.col(i));
            for (Index j = 0; j < r; ++j) {
                const auto bj = detail::standardized(b.col(j));
                if (ai && bj) corr(i, j) = std::abs(ai->dot(*bj)) / static_cast<double>(a.rows());
            }
        }
        std::vector<bool> row_used(static_cast<std::size_t>(r)), col_used(static_cast<std::size_t>(r));
        for (Index step = 0; step < r; ++step) {
            Index bi = -1, bj = -1;
            double best = -1.0;
            for (Index i = 0; i < r; ++i) {
                if (row_used[static_cast<std::size_t>(i)]) continue;
                for (Index j = 0; j < r; ++j)
                    if (!col_used[static_cast<std::size_t>(j)] && corr(i, j) > best) {
                        best = corr(i, j);
                        bi = i;
                        bj = j;
                    }
            }
            p[static_cast<std::size_t>(bi)] = bj;
            row_used[static_cast<std::size_t>(bi)] = true;
            col_used[static_cast<std::size_t>(bj)] = true;
        }
        perm.push_back(std::move(p));
    }
    return perm;
}

inline constexpr double kMsirCeilingDb = 300.0;

/// 20 log10(||a|| / ||a - s b||) with s = +-1 chosen to minimize the
/// denominator, capped at the report ceiling.
inline double sir_db(const Vector& a, const Vector& b) {
    const double err = std::min((a - b).norm(), (a + b).norm());
    const double na = a.norm();
    if (err <= 1e-13 * na) return kMsirCeilingDb;
    return std::min(kMsirCeilingDb, 20.0 * std::log10(na / err));
}

struct MsirResult {
    double db = 0.0;
    std::vector<double> terms;  // one per included column, mode-major
    int excluded = 0;           // constant columns that could not be standardized
};

inline MsirResult msir_detail(const TuckerModel& truth, const TuckerModel& est) {
    const auto perm = match_components(truth, est);
    MsirResult res;
    for (Index n = 0; n < truth.order(); ++n) {
        if (truth.is_fixed(n)) continue;
        const Matrix& a = truth.factors[static_cast<std::size_t>(n)];
        const Matrix& b = est.factors[static_cast<std::size_t>(n)];
        for (Index r = 0; r < a.cols(); ++r) {
            const auto sa = detail::standardized(a.col(r));
            const auto sb = detail::standardized(b.col(perm[static_cast<std::size_t>(n)][static_cast<std::size_t>(r)]));
            if (!sa || !sb) {
                ++res.excluded;
                continue;
            }
            res.terms.push_back(sir_db(*sa, *sb));
        }
    }
    if (res.terms.empty()) throw std::invalid_argument("msir: no column could be standardized");
    res.db = std::accumulate(res.terms.begin(), res.terms.end(), 0.0) / static_cast<double>(res.terms.size());
    return res;
}

inline double msir(const TuckerModel& truth, const TuckerModel& est) { return msir_detail(truth, est).db; }

// ---------------------------------------------------------------------------
// Sparsity
// ---------------------------------------------------------------------------

inline Index zero_count(const Matrix& x) { return static_cast<Index>((x.array() == 0.0).count()); }
inline Index zero_count(const DenseTensor& x) { return static_cast<Index>((flat(x).array() == 0.0).count()); }

inline double sparsity(const Matrix& x) {
    return x.size() ? static_cast<double>(zero_count(x)) / static_cast<double>(x.size()) : 0.0;
}
inline double sparsity(const DenseTensor& x) {
    return static_cast<double>(zero_count(x)) / static_cast<double>(x.size());
}

/// Sparsity of a Kronecker product from the sparsities of its factors.
inline double kronecker_sparsity_predict(double s1, double s2) {
    if (!(s1 >= 0 && s1 <= 1 && s2 >= 0 && s2 <= 1))
        throw std::invalid_argument("kronecker_sparsity_predict: sparsities must lie in [0,1]");
    // The sum never drops below either input; the clamp only absorbs rounding.
    return std::max({s1 + s2 - s1 * s2, s1, s2});
}

/// Zero count of A1 (x) A2 where A_k has `size_k` entries and `zeros_k` zeros.
inline Index kronecker_zero_count(Index size1, Index zeros1, Index size2, Index zeros2) {
    return size2 * zeros1 + size1 * zeros2 - zeros1 * zeros2;
}

// ---------------------------------------------------------------------------
// Two-step error bound diagnostic
// ---------------------------------------------------------------------------

struct BoundRecord {
    double sigma = 0.0;       // ||Y - Ytilde||
    double eps_direct = 0.0;  // ||Y - Yhat_direct||
    double err_lra = 0.0;     // ||Y - Yhat_lra||
    double slack = 0.0;       // 2 sigma + eps_direct - err_lra

    bool lower_bound_holds() const { return eps_direct <= err_lra; }
};

inline BoundRecord error_bound_diagnostic(const DenseTensor& y, const TuckerModel& lra, const TuckerModel& ntd_lra,
                                    const TuckerModel& ntd_direct) {
    BoundRecord r;
    r.sigma = std::sqrt(residual_squared(y, lra));
    r.eps_direct = std::sqrt(residual_squared(y, ntd_direct));
    r.err_lra = std::sqrt(residual_squared(y, ntd_lra));
    r.slack = 2.0 * r.sigma + r.eps_direct - r.err_lra;
    return r;
}

}  // namespace lrantd
