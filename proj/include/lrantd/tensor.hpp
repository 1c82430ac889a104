#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lrantd {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Shape = std::vector<Index>;

/// Denominator guard used by every elementwise division in the library.
inline constexpr double kDivisionFloor = 1e-16;

namespace flops {

// Multiplication counter for instrumented kernels. Per thread so concurrent
// solves do not mix their counts.
inline std::uint64_t& counter() noexcept {
    thread_local std::uint64_t count = 0;
    return count;
}
inline void add(std::uint64_t n) noexcept { counter() += n; }
inline void reset() noexcept { counter() = 0; }
inline std::uint64_t read() noexcept { return counter(); }

}  // namespace flops

inline Index shape_size(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

/// Dense N-way array stored first-index-fastest: element (i_0, ..., i_{N-1})
/// lives at i_0 + I_0 * (i_1 + I_1 * (i_2 + ...)).
class DenseTensor {
public:
    DenseTensor() : shape_{1}, data_(1, 0.0) {}

    explicit DenseTensor(Shape shape) : shape_(std::move(shape)) {
        check_shape(shape_);
        data_.assign(static_cast<std::size_t>(shape_size(shape_)), 0.0);
    }

    DenseTensor(Shape shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        check_shape(shape_);
        if (static_cast<Index>(data_.size()) != shape_size(shape_))
            throw std::invalid_argument("DenseTensor: data length " + std::to_string(data_.size()) +
                                        " does not match shape " + shape_string(shape_));
        for (double v : data_)
            if (!std::isfinite(v)) throw std::invalid_argument("DenseTensor: non-finite entry");
    }

    static DenseTensor constant(Shape shape, double value) {
        DenseTensor t(std::move(shape));
        std::fill(t.data_.begin(), t.data_.end(), value);
        return t;
    }

    Index order() const noexcept { return static_cast<Index>(shape_.size()); }
    const Shape& shape() const noexcept { return shape_; }
    Index extent(Index n) const { return shape_.at(static_cast<std::size_t>(n)); }
    Index size() const noexcept { return static_cast<Index>(data_.size()); }

    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }
    const std::vector<double>& storage() const noexcept { return data_; }

    double operator[](Index i) const { return data_[static_cast<std::size_t>(i)]; }
    double& operator[](Index i) { return data_[static_cast<std::size_t>(i)]; }

    Index linear_index(std::span<const Index> idx) const {
        if (static_cast<Index>(idx.size()) != order())
            throw std::invalid_argument("DenseTensor: index arity mismatch");
        Index lin = 0;
        for (Index n = order() - 1; n >= 0; --n) {
            const auto k = static_cast<std::size_t>(n);
            if (idx[k] < 0 || idx[k] >= shape_[k]) throw std::out_of_range("DenseTensor: index out of range");
            lin = lin * shape_[k] + idx[k];
        }
        return lin;
    }
    double operator()(std::initializer_list<Index> idx) const {
        return (*this)[linear_index(std::span<const Index>(idx.begin(), idx.size()))];
    }
    double& operator()(std::initializer_list<Index> idx) {
        return (*this)[linear_index(std::span<const Index>(idx.begin(), idx.size()))];
    }

    Eigen::Map<const Vector> vec() const { return {data_.data(), size()}; }
    Eigen::Map<Vector> vec() { return {data_.data(), size()}; }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const DenseTensor&, const DenseTensor&) = default;

private:
    static void check_shape(const Shape& shape) {
        if (shape.empty()) throw std::invalid_argument("DenseTensor: order must be at least 1");
        for (Index e : shape)
            if (e < 1) throw std::invalid_argument("DenseTensor: extents must be positive, got " + shape_string(shape));
    }

    Shape shape_;
    std::vector<double> data_;
};

inline Eigen::Map<Vector> flat(Matrix& m) { return {m.data(), m.size()}; }
inline Eigen::Map<const Vector> flat(const Matrix& m) { return {m.data(), m.size()}; }
inline Eigen::Map<Vector> flat(DenseTensor& t) { return t.vec(); }
inline Eigen::Map<const Vector> flat(const DenseTensor& t) { return t.vec(); }

inline bool same_shape(const Matrix& a, const Matrix& b) { return a.rows() == b.rows() && a.cols() == b.cols(); }
inline bool same_shape(const DenseTensor& a, const DenseTensor& b) { return a.shape() == b.shape(); }

template <class T>
void require_same_shape(const T& a, const T& b, const char* what) {
    if (!same_shape(a, b)) throw std::invalid_argument(std::string(what) + ": shape mismatch");
}

template <class T>
double frobenius_norm(const T& x) {
    return flat(x).norm();
}

template <class T>
double l1_norm(const T& x) {
    return flat(x).template lpNorm<1>();
}

template <class T>
T hadamard(const T& x, const T& y) {
    require_same_shape(x, y, "hadamard");
    T out = x;
    flat(out).array() *= flat(y).array();
    return out;
}

/// Elementwise x / y. Denominators with magnitude below kDivisionFloor are
/// replaced by kDivisionFloor.
template <class T>
T elementwise_divide(const T& x, const T& y) {
    require_same_shape(x, y, "elementwise_divide");
    T out = x;
    auto o = flat(out);
    auto d = flat(y);
    for (Index i = 0; i < o.size(); ++i) {
        const double den = std::abs(d[i]) < kDivisionFloor ? kDivisionFloor : d[i];
        o[i] /= den;
    }
    return out;
}

template <class T>
T project_nonneg(T x) {
    flat(x) = flat(x).cwiseMax(0.0);
    return x;
}

template <class T>
double min_entry(const T& x) {
    return flat(x).minCoeff();
}

}  // namespace lrantd
