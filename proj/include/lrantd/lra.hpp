#pragma once

#include "lrantd/tucker.hpp"

#include <random>

namespace lrantd {

/// Flips each column so that its largest-magnitude entry is nonnegative.
inline void canonicalize_signs(Matrix& u) {
    for (Index j = 0; j < u.cols(); ++j) {
        Index at = 0;
        u.col(j).cwiseAbs().maxCoeff(&at);
        if (u(at, j) < 0) u.col(j) = -u.col(j);
    }
}

/// Leading eigenvectors of a symmetric PSD matrix, largest eigenvalue first.
inline Matrix leading_eigenvectors(const Matrix& sym, Index count) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
    if (eig.info() != Eigen::Success) throw std::runtime_error("symmetric eigensolver failed");
    // eigenvalues are ascending
    return eig.eigenvectors().rightCols(count).rowwise().reverse();
}

/// Leading `rank` left singular vectors of unfold(t, n), via whichever Gram
/// matrix of the unfolding is smaller.
inline Matrix leading_left_singular_vectors(const DenseTensor& t, Index n, Index rank) {
    const Index rows = t.extent(n);
    const Index cols = t.size() / rows;
    Matrix u;
    if (rows <= cols) {
        u = leading_eigenvectors(unfold_gram(t, n), rank);
    } else {
        const Matrix y = unfold(t, n);
        const Matrix v = leading_eigenvectors(y.transpose() * y, std::min(rank, cols));
        // Householder Q completes the basis when rank exceeds the column count.
        u = Eigen::HouseholderQR<Matrix>(y * v).householderQ() * Matrix::Identity(rows, rank);
    }
    canonicalize_signs(u);
    return u;
}

namespace detail {

inline void check_ranks(const DenseTensor& t, const Shape& ranks, Index extra, const char* who) {
    if (static_cast<Index>(ranks.size()) != t.order())
        throw std::invalid_argument(std::string(who) + ": expected " + std::to_string(t.order()) + " ranks");
    for (Index n = 0; n < t.order(); ++n) {
        const Index r = ranks[static_cast<std::size_t>(n)];
        if (r < 1 || r + extra > t.extent(n))
            throw std::invalid_argument(std::string(who) + ": rank " + std::to_string(r) +
                                        (extra ? " plus oversampling " + std::to_string(extra) : std::string()) +
                                        " exceeds extent " + std::to_string(t.extent(n)) + " at mode " +
                                        std::to_string(n));
    }
}

}  // namespace detail

/// Truncated HOSVD: orthonormal factors from each unfolding, core by projection.
inline TuckerModel hosvd(const DenseTensor& t, const Shape& ranks) {
    detail::check_ranks(t, ranks, 0, "hosvd");
    TuckerModel m;
    for (Index n = 0; n < t.order(); ++n)
        m.factors.push_back(leading_left_singular_vectors(t, n, ranks[static_cast<std::size_t>(n)]));
    m.core = multi_mode_product(t, m.factors, std::nullopt, true);
    return m;
}

/// Per-mode seed derivation (splitmix64 finalizer over the combined words).
inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(a) ^ b) ^ c);
}

/// Randomized range-finder Tucker: each factor comes from a Gaussian sketch
/// of the unfolding, orthonormalized, then truncated through a small SVD.
inline TuckerModel randomized_tucker(const DenseTensor& t, const Shape& ranks, Index oversampling,
                                     std::uint64_t seed) {
    if (oversampling < 0) throw std::invalid_argument("randomized_tucker: negative oversampling");
    detail::check_ranks(t, ranks, oversampling, "randomized_tucker");
    TuckerModel m;
    for (Index n = 0; n < t.order(); ++n) {
        const Index rank = ranks[static_cast<std::size_t>(n)];
        const Index width = rank + oversampling;
        const Index cols = t.size() / t.extent(n);
        std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(n)));
        std::normal_distribution<double> normal;
        Matrix omega(cols, width);
        for (Index j = 0; j < width; ++j)
            for (Index i = 0; i < cols; ++i) omega(i, j) = normal(rng);

        const Matrix sketch = unfold_times(t, n, omega);
        const Matrix q = Eigen::HouseholderQR<Matrix>(sketch).householderQ() * Matrix::Identity(t.extent(n), width);
        const Matrix bt = unfold_transpose_times(t, n, q);  // (Q^T Y_(n))^T
        Matrix u = q * leading_eigenvectors(bt.transpose() * bt, rank);
        canonicalize_signs(u);
        m.factors.push_back(std::move(u));
    }
    m.core = multi_mode_product(t, m.factors, std::nullopt, true);
    return m;
}

struct CompletionPolicy {
    double tol = 1e-6;
    int max_iters = 500;
};

struct CompletionResult {
    TuckerModel model;
    std::vector<double> objective_trace;  // ||W o (Y - Yhat)|| per iteration
    int iterations = 0;
    bool converged = false;
};

/// Weighted Tucker fit by EM-style imputation. Entries are filled with
/// w^2 * y + (1 - w^2) * yhat and the model is refit by HOSVD.
inline CompletionResult weighted_tucker_complete(const DenseTensor& t, const WeightTensor& w, const Shape& ranks,
                                                 const CompletionPolicy& policy = {}) {
    require_same_shape(t, w.weights, "weighted_tucker_complete");
    detail::check_ranks(t, ranks, 0, "weighted_tucker_complete");
    const auto wv = flat(w.weights);
    const auto yv = flat(t);
    const double wsum = wv.sum();
    if (wsum == 0.0) throw std::invalid_argument("weighted_tucker_complete: all weights are zero");

    auto objective = [&](const DenseTensor& approx) {
        return (wv.array() * (yv - flat(approx)).array()).matrix().norm();
    };

    CompletionResult res;
    if ((wv.array() == 1.0).all()) {
        res.model = hosvd(t, ranks);
        res.objective_trace.push_back(objective(reconstruct(res.model)));
        res.iterations = 1;
        res.converged = true;
        return res;
    }

    const Vector w2 = wv.array().square();
    const double mean = (wv.array() * yv.array()).sum() / wsum;
    const double scale = std::max((wv.array() * yv.array()).matrix().norm(), 1e-300);

    DenseTensor filled(t.shape());
    flat(filled) = (w2.array() * yv.array() + (1.0 - w2.array()) * mean).matrix();
    res.model = hosvd(filled, ranks);
    DenseTensor approx = reconstruct(res.model);
    res.objective_trace.push_back(objective(approx));
    res.iterations = 1;

    while (res.iterations < policy.max_iters) {
        flat(filled) = (w2.array() * yv.array() + (1.0 - w2.array()) * flat(approx).array()).matrix();
        res.model = hosvd(filled, ranks);
        approx = reconstruct(res.model);
        const double prev = res.objective_trace.back();
        res.objective_trace.push_back(objective(approx));
        ++res.iterations;
        if (std::abs(prev - res.objective_trace.back()) / scale < policy.tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

/// Storage of a Tucker representation relative to the dense tensor.
inline double lra_storage_ratio(const Shape& extents, const Shape& ranks) {
    if (extents.size() != ranks.size()) throw std::invalid_argument("lra_storage_ratio: arity mismatch");
    double factors = 0.0;
    double core = 1.0;
    double dense = 1.0;
    for (std::size_t n = 0; n < extents.size(); ++n) {
        factors += static_cast<double>(ranks[n]) * static_cast<double>(extents[n]);
        core *= static_cast<double>(ranks[n]);
        dense *= static_cast<double>(extents[n]);
    }
    return (factors + core) / dense;
}

}  // namespace lrantd
