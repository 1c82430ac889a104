#pragma once

#include "lrantd/lrantd.hpp"

#include <filesystem>
#include <map>
#include <atomic>
#include <thread>

namespace lrantd::cli {

/// Thrown for inconsistent or malformed command-line input.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || !std::isfinite(v)) throw UsageError(what + ": not a number: '" + s + "'");
    return v;
}

inline Shape parse_shape(const std::string& s, const std::string& what) {
    Shape out;
    for (const auto& item : split_list(s)) {
        const double v = parse_double(item, what);
        if (v < 1 || v != std::floor(v)) throw UsageError(what + ": expected positive integers, got '" + item + "'");
        out.push_back(static_cast<Index>(v));
    }
    if (out.empty()) throw UsageError(what + ": empty list");
    return out;
}

inline std::vector<double> parse_doubles(const std::string& s, const std::string& what) {
    std::vector<double> out;
    for (const auto& item : split_list(s)) out.push_back(parse_double(item, what));
    if (out.empty()) throw UsageError(what + ": empty list");
    return out;
}

/// SNR values in dB, or "clean" for noise-free data.
inline std::vector<std::optional<double>> parse_snr_list(const std::string& s) {
    std::vector<std::optional<double>> out;
    for (const auto& item : split_list(s))
        out.push_back(item == "clean" ? std::nullopt : std::optional<double>(parse_double(item, "--snr")));
    if (out.empty()) throw UsageError("--snr: empty sweep list");
    return out;
}

inline std::vector<Algorithm> parse_algorithms(const std::string& s) {
    std::vector<Algorithm> out;
    for (const auto& item : split_list(s)) {
        const auto a = parse_algorithm(item);
        if (!a) throw UsageError("unknown algorithm '" + item + "' (expected mu, hals, apg or als)");
        out.push_back(*a);
    }
    if (out.empty()) throw UsageError("--algorithm: empty list");
    return out;
}

/// Files produced by a command. Nothing touches the disk until commit(),
/// and a failed commit removes whatever it already wrote.
class StagedOutput {
public:
    void add(const std::string& name, std::string content) { files_[name] = std::move(content); }

    void commit(const std::string& dir) const {
        namespace fs = std::filesystem;
        fs::create_directories(dir);
        std::vector<fs::path> written;
        try {
            for (const auto& [name, content] : files_) {
                const fs::path tmp = fs::path(dir) / ("." + name + ".tmp");
                io::write_file(tmp.string(), content);
                written.push_back(tmp);
            }
            for (const auto& [name, content] : files_) {
                const fs::path tmp = fs::path(dir) / ("." + name + ".tmp");
                fs::rename(tmp, fs::path(dir) / name);
            }
        } catch (...) {
            std::error_code ec;
            for (const auto& p : written) fs::remove(p, ec);
            throw;
        }
    }

    const std::map<std::string, std::string>& files() const { return files_; }

private:
    std::map<std::string, std::string> files_;
};

/// Runs job(i) for i in [0, count) on up to `jobs` threads. Each job writes
/// only its own slot, so results do not depend on scheduling.
template <class Job>
void run_parallel(std::size_t count, int jobs, Job&& job) {
    const auto workers = static_cast<std::size_t>(std::max(1, jobs));
    if (workers == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(count);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, count); ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline double median(std::vector<double> v) {
    if (v.empty()) return std::nan("");
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    if (v.size() % 2) return *mid;
    const double hi = *mid;
    return 0.5 * (hi + *std::max_element(v.begin(), mid));
}

}  // namespace lrantd::cli
