#pragma once

// File formats (all integers and doubles little-endian):
//
//   tensor, binary   "NTDT" | u32 version=1 | u32 N | u64 extents[N] | f64 data[prod extents]
//   tensor, text     first line: extents separated by spaces; then one value per line
//   model            "NTDM" | u32 version=1 | u32 N | u64 extents[N] | u64 ranks[N]
//                    | u8 fixed[N] | factor 0 .. factor N-1 (f64, column-major) | core (f64)
//
// Data is always in storage order (first index fastest).

#include "lrantd/tucker.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace lrantd::io {

inline constexpr std::uint32_t kFormatVersion = 1;

namespace detail {

class Writer {
public:
    void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
    template <class T>
    void le(T v) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
        bytes(b, sizeof(T));
    }
    void f64s(const double* p, Index n) {
        for (Index i = 0; i < n; ++i) le(p[i]);
    }
    std::string take() { return std::move(out_); }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(std::string_view in) : in_(in) {}
    template <class T>
    T le() {
        need(sizeof(T));
        unsigned char b[sizeof(T)];
        std::memcpy(b, in_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
        pos_ += sizeof(T);
        T v;
        std::memcpy(&v, b, sizeof(T));
        return v;
    }
    void f64s(double* p, Index n) {
        need(static_cast<std::size_t>(n) * 8);
        for (Index i = 0; i < n; ++i) p[i] = le<double>();
    }
    void magic(const char* m) {
        need(4);
        if (in_.substr(pos_, 4) != std::string_view(m, 4))
            throw std::runtime_error(std::string("bad magic, expected ") + m);
        pos_ += 4;
    }
    void finish() const {
        if (pos_ != in_.size()) throw std::runtime_error("trailing bytes after payload");
    }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw std::runtime_error("truncated file");
    }
    std::string_view in_;
    std::size_t pos_ = 0;
};

inline std::uint32_t read_header(Reader& r, const char* magic) {
    r.magic(magic);
    const auto version = r.le<std::uint32_t>();
    if (version != kFormatVersion) throw std::runtime_error("unsupported format version " + std::to_string(version));
    const auto order = r.le<std::uint32_t>();
    if (order == 0 || order > 64) throw std::runtime_error("implausible tensor order " + std::to_string(order));
    return order;
}

inline Shape read_shape(Reader& r, std::uint32_t order) {
    Shape s(order);
    for (auto& e : s) {
        const auto v = r.le<std::uint64_t>();
        if (v == 0 || v > (std::uint64_t{1} << 40)) throw std::runtime_error("implausible extent");
        e = static_cast<Index>(v);
    }
    return s;
}

}  // namespace detail

inline std::string encode_tensor(const DenseTensor& t) {
    detail::Writer w;
    w.bytes("NTDT", 4);
    w.le(kFormatVersion);
    w.le(static_cast<std::uint32_t>(t.order()));
    for (Index e : t.shape()) w.le(static_cast<std::uint64_t>(e));
    w.f64s(t.data().data(), t.size());
    return w.take();
}

inline DenseTensor decode_tensor(std::string_view bytes) {
    detail::Reader r(bytes);
    const auto order = detail::read_header(r, "NTDT");
    Shape shape = detail::read_shape(r, order);
    DenseTensor t(shape);
    r.f64s(t.data().data(), t.size());
    r.finish();
    if (!t.all_finite()) throw std::runtime_error("tensor file contains non-finite values");
    return t;
}

inline std::string encode_tensor_text(const DenseTensor& t) {
    std::string out;
    for (std::size_t i = 0; i < t.shape().size(); ++i) out += (i ? " " : "") + std::to_string(t.shape()[i]);
    out += '\n';
    char buf[32];
    for (double v : t.data()) {
        std::snprintf(buf, sizeof buf, "%.17g\n", v);
        out += buf;
    }
    return out;
}

inline DenseTensor decode_tensor_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty tensor text");
    Shape shape;
    {
        std::istringstream ls(line);
        long long e;
        while (ls >> e) {
            if (e < 1) throw std::runtime_error("tensor text: extents must be positive");
            shape.push_back(static_cast<Index>(e));
        }
        if (!ls.eof()) throw std::runtime_error("tensor text: malformed shape line");
    }
    if (shape.empty()) throw std::runtime_error("tensor text: missing shape line");
    std::vector<double> values;
    double v;
    while (in >> v) values.push_back(v);
    if (!in.eof()) throw std::runtime_error("tensor text: malformed value");
    if (static_cast<Index>(values.size()) != shape_size(shape))
        throw std::runtime_error("tensor text: expected " + std::to_string(shape_size(shape)) + " values, found " +
                                 std::to_string(values.size()));
    return DenseTensor(std::move(shape), std::move(values));
}

/// Binary when the content starts with the tensor magic, text otherwise.
inline DenseTensor decode_tensor_any(std::string_view bytes) {
    if (bytes.substr(0, 4) == "NTDT") return decode_tensor(bytes);
    return decode_tensor_text(bytes);
}

inline std::string encode_model(const TuckerModel& m) {
    m.validate();
    detail::Writer w;
    w.bytes("NTDM", 4);
    w.le(kFormatVersion);
    w.le(static_cast<std::uint32_t>(m.order()));
    for (Index e : m.extents()) w.le(static_cast<std::uint64_t>(e));
    for (Index r : m.ranks()) w.le(static_cast<std::uint64_t>(r));
    for (Index n = 0; n < m.order(); ++n) w.le(static_cast<std::uint8_t>(m.is_fixed(n) ? 1 : 0));
    for (const auto& a : m.factors) w.f64s(a.data(), a.size());
    w.f64s(m.core.data().data(), m.core.size());
    return w.take();
}

inline TuckerModel decode_model(std::string_view bytes) {
    detail::Reader r(bytes);
    const auto order = detail::read_header(r, "NTDM");
    const Shape extents = detail::read_shape(r, order);
    const Shape ranks = detail::read_shape(r, order);
    TuckerModel m;
    for (std::uint32_t n = 0; n < order; ++n) {
        const auto flag = r.le<std::uint8_t>();
        if (flag > 1) throw std::runtime_error("model file: bad fixed flag");
        m.identity_fixed.push_back(flag == 1);
    }
    for (std::uint32_t n = 0; n < order; ++n) {
        Matrix a(extents[n], ranks[n]);
        r.f64s(a.data(), a.size());
        m.factors.push_back(std::move(a));
    }
    m.core = DenseTensor(ranks);
    r.f64s(m.core.data().data(), m.core.size());
    r.finish();
    m.validate();
    return m;
}

inline std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    if (f.bad()) throw std::runtime_error("read failed: " + path);
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

inline DenseTensor read_tensor(const std::string& path) { return decode_tensor_any(read_file(path)); }
inline TuckerModel read_model(const std::string& path) { return decode_model(read_file(path)); }

}  // namespace lrantd::io
