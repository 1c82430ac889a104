#pragma once

#include "lrantd/lrantd.hpp"

#include <random>

namespace testutil {

using namespace lrantd;

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) m(i, j) = u(rng);
    return m;
}

inline DenseTensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    DenseTensor t(shape);
    for (double& v : t.data()) v = u(rng);
    return t;
}

inline TuckerModel random_model(const Shape& extents, const Shape& ranks, std::mt19937_64& rng, double lo = 0.1,
                                double hi = 1.0) {
    TuckerModel m;
    for (std::size_t n = 0; n < extents.size(); ++n) m.factors.push_back(random_matrix(extents[n], ranks[n], rng, lo, hi));
    m.core = random_tensor(ranks, rng, lo, hi);
    return m;
}

template <class A, class B>
double rel_err(const A& got, const B& want) {
    const double base = flat(want).norm();
    return (flat(got) - flat(want)).norm() / (base > 0 ? base : 1.0);
}

}  // namespace testutil
