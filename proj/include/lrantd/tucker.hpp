#pragma once

#include "lrantd/multilinear.hpp"

namespace lrantd {

/// Core tensor plus one factor per mode. Serves both as a low multilinear
/// rank approximation (orthonormal factors) and as an NTD estimate.
struct TuckerModel {
    DenseTensor core;
    std::vector<Matrix> factors;
    std::vector<bool> identity_fixed;  // empty means no fixed modes

    Index order() const noexcept { return core.order(); }

    Shape extents() const {
        Shape s;
        for (const auto& f : factors) s.push_back(f.rows());
        return s;
    }
    Shape ranks() const { return core.shape(); }

    bool is_fixed(Index n) const {
        const auto k = static_cast<std::size_t>(n);
        return k < identity_fixed.size() && identity_fixed[k];
    }

    void validate() const {
        if (static_cast<Index>(factors.size()) != core.order())
            throw std::invalid_argument("TuckerModel: " + std::to_string(factors.size()) +
                                        " factors for a core of order " + std::to_string(core.order()));
        if (!identity_fixed.empty() && identity_fixed.size() != factors.size())
            throw std::invalid_argument("TuckerModel: identity flag count mismatch");
        for (Index n = 0; n < order(); ++n) {
            const Matrix& f = factors[static_cast<std::size_t>(n)];
            if (f.cols() != core.extent(n))
                throw std::invalid_argument("TuckerModel: factor " + std::to_string(n) + " has " +
                                            std::to_string(f.cols()) + " columns, core extent is " +
                                            std::to_string(core.extent(n)));
            if (f.rows() < 1) throw std::invalid_argument("TuckerModel: empty factor");
            if (is_fixed(n) && (f.rows() != f.cols() || f != Matrix::Identity(f.rows(), f.cols())))
                throw std::invalid_argument("TuckerModel: identity-fixed factor " + std::to_string(n) +
                                            " is not a square identity");
        }
    }

    friend bool operator==(const TuckerModel&, const TuckerModel&) = default;
};

/// Binary weights mark observed (1) and missing (0) entries; fractional
/// weights down-weight unreliable entries.
struct WeightTensor {
    DenseTensor weights;

    explicit WeightTensor(DenseTensor w) : weights(std::move(w)) {
        for (double v : weights.data())
            if (v < 0.0 || v > 1.0) throw std::invalid_argument("WeightTensor: entries must lie in [0, 1]");
    }
    bool is_binary() const {
        return std::all_of(weights.data().begin(), weights.data().end(),
                           [](double v) { return v == 0.0 || v == 1.0; });
    }
};

inline DenseTensor reconstruct(const TuckerModel& m) {
    m.validate();
    return multi_mode_product(m.core, m.factors);
}

}  // namespace lrantd
