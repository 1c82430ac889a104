#pragma once

#include "lrantd/tensor.hpp"

#include <optional>
#include <utility>

namespace lrantd {

namespace detail {

// A tensor viewed around mode n as a (left x extent x right) block, left
// fastest. Slab r is then a column-major left-by-extent matrix.
struct ModeSplit {
    Index left = 1;
    Index extent = 1;
    Index right = 1;
};

inline void check_mode(const DenseTensor& t, Index n) {
    if (n < 0 || n >= t.order())
        throw std::invalid_argument("invalid mode index " + std::to_string(n) + " for tensor of order " +
                                    std::to_string(t.order()));
}

inline ModeSplit split_at(const Shape& shape, Index n) {
    ModeSplit s;
    for (Index k = 0; k < static_cast<Index>(shape.size()); ++k) {
        const Index e = shape[static_cast<std::size_t>(k)];
        if (k < n) s.left *= e;
        else if (k == n) s.extent = e;
        else s.right *= e;
    }
    return s;
}

/// Matrix product that feeds the multiplication counter.
inline Matrix counted_product(const Matrix& a, const Matrix& b) {
    flops::add(static_cast<std::uint64_t>(a.rows() * a.cols() * b.cols()));
    return a * b;
}

}  // namespace detail

inline Matrix counted_product(const Matrix& a, const Matrix& b) { return detail::counted_product(a, b); }

/// Mode-n matricization: element (i_0..i_{N-1}) goes to row i_n and column
/// sum_{k != n} i_k prod_{m < k, m != n} I_m.
inline Matrix unfold(const DenseTensor& t, Index n) {
    detail::check_mode(t, n);
    const auto s = detail::split_at(t.shape(), n);
    Matrix m(s.extent, s.left * s.right);
    const double* src = t.data().data();
    for (Index r = 0; r < s.right; ++r)
        for (Index i = 0; i < s.extent; ++i) {
            const double* slab = src + s.left * (i + s.extent * r);
            for (Index l = 0; l < s.left; ++l) m(i, l + s.left * r) = slab[l];
        }
    return m;
}

inline DenseTensor fold(const Matrix& m, Index n, const Shape& shape) {
    if (n < 0 || n >= static_cast<Index>(shape.size()))
        throw std::invalid_argument("fold: invalid mode index " + std::to_string(n));
    DenseTensor t(shape);
    const auto s = detail::split_at(shape, n);
    if (m.rows() != s.extent || m.cols() != s.left * s.right)
        throw std::invalid_argument("fold: matrix " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                    " does not match shape " + shape_string(shape) + " at mode " +
                                    std::to_string(n));
    double* dst = t.data().data();
    for (Index r = 0; r < s.right; ++r)
        for (Index i = 0; i < s.extent; ++i) {
            double* slab = dst + s.left * (i + s.extent * r);
            for (Index l = 0; l < s.left; ++l) slab[l] = m(i, l + s.left * r);
        }
    return t;
}

/// t x_n a, i.e. unfold(result, n) = a * unfold(t, n).
inline DenseTensor mode_product(const DenseTensor& t, const Matrix& a, Index n) {
    detail::check_mode(t, n);
    const auto s = detail::split_at(t.shape(), n);
    if (a.cols() != s.extent)
        throw std::invalid_argument("mode_product: matrix has " + std::to_string(a.cols()) +
                                    " columns but mode " + std::to_string(n) + " has extent " +
                                    std::to_string(s.extent));
    Shape out_shape = t.shape();
    out_shape[static_cast<std::size_t>(n)] = a.rows();
    DenseTensor out(out_shape);
    const Index j = a.rows();
    const double* src = t.data().data();
    double* dst = out.data().data();
    if (s.left == 1) {
        Eigen::Map<const Matrix> in(src, s.extent, s.right);
        Eigen::Map<Matrix> res(dst, j, s.right);
        res.noalias() = a * in;
    } else {
        const Matrix at = a.transpose();
        for (Index r = 0; r < s.right; ++r) {
            Eigen::Map<const Matrix> in(src + s.left * s.extent * r, s.left, s.extent);
            Eigen::Map<Matrix> res(dst + s.left * j * r, s.left, j);
            res.noalias() = in * at;
        }
    }
    flops::add(static_cast<std::uint64_t>(s.left * s.right * s.extent * j));
    return out;
}

/// unfold(t, n) * b without materializing the unfolding.
inline Matrix unfold_times(const DenseTensor& t, Index n, const Matrix& b) {
    detail::check_mode(t, n);
    const auto s = detail::split_at(t.shape(), n);
    if (b.rows() != s.left * s.right) throw std::invalid_argument("unfold_times: dimension mismatch");
    const double* src = t.data().data();
    Matrix out = Matrix::Zero(s.extent, b.cols());
    if (s.left == 1) {
        Eigen::Map<const Matrix> in(src, s.extent, s.right);
        out.noalias() = in * b;
    } else {
        for (Index r = 0; r < s.right; ++r) {
            Eigen::Map<const Matrix> in(src + s.left * s.extent * r, s.left, s.extent);
            out.noalias() += in.transpose() * b.middleRows(s.left * r, s.left);
        }
    }
    flops::add(static_cast<std::uint64_t>(s.extent * b.rows() * b.cols()));
    return out;
}

/// unfold(t, n)^T * q without materializing the unfolding.
inline Matrix unfold_transpose_times(const DenseTensor& t, Index n, const Matrix& q) {
    detail::check_mode(t, n);
    const auto s = detail::split_at(t.shape(), n);
    if (q.rows() != s.extent) throw std::invalid_argument("unfold_transpose_times: dimension mismatch");
    const double* src = t.data().data();
    Matrix out(s.left * s.right, q.cols());
    if (s.left == 1) {
        Eigen::Map<const Matrix> in(src, s.extent, s.right);
        out.noalias() = in.transpose() * q;
    } else {
        for (Index r = 0; r < s.right; ++r) {
            Eigen::Map<const Matrix> in(src + s.left * s.extent * r, s.left, s.extent);
            out.middleRows(s.left * r, s.left).noalias() = in * q;
        }
    }
    flops::add(static_cast<std::uint64_t>(s.extent * out.rows() * q.cols()));
    return out;
}

/// unfold(t, n) * unfold(t, n)^T.
inline Matrix unfold_gram(const DenseTensor& t, Index n) {
    detail::check_mode(t, n);
    const auto s = detail::split_at(t.shape(), n);
    const double* src = t.data().data();
    Matrix g = Matrix::Zero(s.extent, s.extent);
    if (s.left == 1) {
        Eigen::Map<const Matrix> in(src, s.extent, s.right);
        g.selfadjointView<Eigen::Lower>().rankUpdate(in);
    } else {
        for (Index r = 0; r < s.right; ++r) {
            Eigen::Map<const Matrix> in(src + s.left * s.extent * r, s.left, s.extent);
            g.selfadjointView<Eigen::Lower>().rankUpdate(in.transpose());
        }
    }
    flops::add(static_cast<std::uint64_t>(s.extent * s.extent * s.left * s.right));
    return g.selfadjointView<Eigen::Lower>();
}

namespace detail {

// Applies the selected products, cheapest-growth first (shrinking products
// before expanding ones). The order does not change the result beyond
// rounding since products on distinct modes commute.
inline DenseTensor apply_products(DenseTensor t, const std::vector<std::pair<Index, const Matrix*>>& ops,
                                  bool transpose) {
    auto ordered = ops;
    auto ratio = [&](const std::pair<Index, const Matrix*>& op) {
        const Matrix& m = *op.second;
        const double rows = static_cast<double>(transpose ? m.cols() : m.rows());
        const double cols = static_cast<double>(transpose ? m.rows() : m.cols());
        return rows / cols;
    };
    std::stable_sort(ordered.begin(), ordered.end(),
                     [&](const auto& a, const auto& b) { return ratio(a) < ratio(b); });
    for (const auto& [mode, mat] : ordered) {
        if (transpose) {
            const Matrix mt = mat->transpose();
            t = mode_product(t, mt, mode);
        } else {
            t = mode_product(t, *mat, mode);
        }
    }
    return t;
}

}  // namespace detail

/// Applies mats[n] along every mode n (skipping `skip` when given). With
/// `transpose` the transposed matrices are applied instead.
inline DenseTensor multi_mode_product(const DenseTensor& t, std::span<const Matrix> mats,
                                      std::optional<Index> skip = std::nullopt, bool transpose = false) {
    if (static_cast<Index>(mats.size()) != t.order())
        throw std::invalid_argument("multi_mode_product: expected one matrix per mode");
    std::vector<std::pair<Index, const Matrix*>> ops;
    for (Index n = 0; n < t.order(); ++n)
        if (!skip || *skip != n) ops.emplace_back(n, &mats[static_cast<std::size_t>(n)]);
    return detail::apply_products(t, ops, transpose);
}

/// Per-mode optional products; absent entries leave their mode untouched.
inline DenseTensor multi_mode_product(const DenseTensor& t, const std::vector<std::optional<Matrix>>& mats) {
    if (static_cast<Index>(mats.size()) != t.order())
        throw std::invalid_argument("multi_mode_product: expected one entry per mode");
    std::vector<std::pair<Index, const Matrix*>> ops;
    for (Index n = 0; n < t.order(); ++n)
        if (mats[static_cast<std::size_t>(n)]) ops.emplace_back(n, &*mats[static_cast<std::size_t>(n)]);
    return detail::apply_products(t, ops, false);
}

/// C(i1*I2 + i2, j1*J2 + j2) = a(i1, j1) * b(i2, j2).
inline Matrix kronecker(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i)
            c.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return c;
}

/// Kronecker product over all matrices except `skip`, in reverse index order
/// (mats[N-1] x ... x mats[0]).
inline Matrix kronecker_reverse(std::span<const Matrix> mats, std::optional<Index> skip = std::nullopt) {
    Matrix acc = Matrix::Ones(1, 1);
    for (Index p = static_cast<Index>(mats.size()) - 1; p >= 0; --p) {
        if (skip && *skip == p) continue;
        acc = kronecker(acc, mats[static_cast<std::size_t>(p)]);
    }
    return acc;
}

inline Matrix khatri_rao(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw std::invalid_argument("khatri_rao: column counts differ (" + std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.cols()) + ")");
    Matrix c(a.rows() * b.rows(), a.cols());
    for (Index j = 0; j < a.cols(); ++j)
        for (Index i = 0; i < a.rows(); ++i) c.col(j).segment(i * b.rows(), b.rows()) = a(i, j) * b.col(j);
    return c;
}

struct KroneckerFactors {
    Matrix first;
    Matrix second;
    double singular_value = 0.0;
    int iterations = 0;
};

/// Rearranges k (I1*I2 x R1*R2) so that a Kronecker product a1 (x) a2 becomes
/// the rank-one matrix vec(a1) vec(a2)^T.
inline Matrix kronecker_rearrange(const Matrix& k, Index rows1, Index cols1, Index rows2, Index cols2) {
    if (rows1 < 1 || cols1 < 1 || rows2 < 1 || cols2 < 1 || k.rows() != rows1 * rows2 || k.cols() != cols1 * cols2)
        throw std::invalid_argument("kronecker_rearrange: dimension mismatch");
    Matrix r(rows1 * cols1, rows2 * cols2);
    for (Index j1 = 0; j1 < cols1; ++j1)
        for (Index i1 = 0; i1 < rows1; ++i1) {
            const auto block = k.block(i1 * rows2, j1 * cols2, rows2, cols2);
            for (Index j2 = 0; j2 < cols2; ++j2)
                for (Index i2 = 0; i2 < rows2; ++i2) r(i1 + rows1 * j1, i2 + rows2 * j2) = block(i2, j2);
        }
    return r;
}

/// Closest a1 (x) a2 to k in Frobenius norm: best rank-one approximation of
/// the rearranged matrix, found by power iteration.
inline KroneckerFactors nearest_kronecker_factorize(const Matrix& k, Index rows1, Index cols1, Index rows2,
                                                    Index cols2, double tol = 1e-12, int max_iters = 1000) {
    const Matrix r = kronecker_rearrange(k, rows1, cols1, rows2, cols2);
    KroneckerFactors out{Matrix::Zero(rows1, cols1), Matrix::Zero(rows2, cols2), 0.0, 0};

    Index start = 0;
    if (r.rowwise().squaredNorm().maxCoeff(&start) == 0.0) return out;
    Vector v = r.row(start).transpose().normalized();
    Vector u;
    double sigma = 0.0;
    for (int it = 1; it <= max_iters; ++it) {
        u = (r * v).normalized();
        Vector w = r.transpose() * u;
        const double next = w.norm();
        v = w / next;
        out.iterations = it;
        const bool done = std::abs(next - sigma) <= tol * next;
        sigma = next;
        if (done) break;
    }
    if (u.sum() < 0) {
        u = -u;
        v = -v;
    }
    const double root = std::sqrt(sigma);
    out.first = Eigen::Map<const Matrix>(u.data(), rows1, cols1) * root;
    out.second = Eigen::Map<const Matrix>(v.data(), rows2, cols2) * root;
    out.singular_value = sigma;
    return out;
}

}  // namespace lrantd
