#pragma once

#include "lrantd/eval.hpp"
#include "lrantd/solver.hpp"

#include <json.hpp>

#include <cstdio>
#include <sstream>

namespace lrantd {

inline constexpr int kReportSchemaVersion = 1;

/// One solver run inside an experiment.
struct SolverRecord {
    std::string experiment;
    double point = 0.0;  // value of the swept parameter
    int trial = 0;
    std::string solver;
    bool use_lra = true;
    std::uint64_t seed = 0;
    double fit = 0.0;       // against the clean tensor when known
    std::optional<double> msir_db;
    int iterations = 0;
    std::string termination;
    std::optional<double> sigma;        // ||Y - Ytilde||
    std::optional<double> bound_slack;  // 2 sigma + eps_direct - err_lra
    double lra_ms = 0.0;
    double ntd_ms = 0.0;
};

struct ExperimentReport {
    std::string experiment;
    SyntheticSpec spec;
    std::vector<SolverRecord> records;

    void validate() const {
        for (const auto& r : records) {
            auto finite = [&](double v, const char* what) {
                if (!std::isfinite(v))
                    throw std::invalid_argument(std::string("report: non-finite ") + what + " for " + r.solver);
            };
            finite(r.fit, "fit");
            if (r.fit > 100.0) throw std::invalid_argument("report: fit above 100");
            if (r.msir_db) finite(*r.msir_db, "msir");
            if (r.sigma) finite(*r.sigma, "sigma");
            if (r.bound_slack) finite(*r.bound_slack, "slack");
        }
    }
};

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string opt_num(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

inline std::string join_shape(const Shape& s, char sep) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += sep;
        out += std::to_string(s[i]);
    }
    return out;
}

inline nlohmann::ordered_json opt_json(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace detail

/// Deterministic columns only; timings go to report_timing_csv.
inline std::string report_csv(const ExperimentReport& rep) {
    rep.validate();
    std::ostringstream os;
    os << "schema_version,experiment,point,trial,solver,use_lra,seed,extents,ranks,factor_sparsity,core_sparsity,"
          "snr_db,fit,msir_db,iterations,termination,sigma,bound_slack\n";
    const auto& s = rep.spec;
    for (const auto& r : rep.records)
        os << kReportSchemaVersion << ',' << r.experiment << ',' << detail::num(r.point) << ',' << r.trial << ','
           << r.solver << ',' << (r.use_lra ? 1 : 0) << ',' << r.seed << ',' << detail::join_shape(s.extents, 'x')
           << ',' << detail::join_shape(s.ranks, 'x') << ',' << detail::num(s.factor_sparsity) << ','
           << detail::num(s.core_sparsity) << ',' << (s.snr_db ? detail::num(*s.snr_db) : std::string("clean")) << ','
           << detail::num(r.fit) << ',' << detail::opt_num(r.msir_db) << ',' << r.iterations << ',' << r.termination
           << ',' << detail::opt_num(r.sigma) << ',' << detail::opt_num(r.bound_slack) << '\n';
    return os.str();
}

inline std::string report_timing_csv(const ExperimentReport& rep) {
    std::ostringstream os;
    os << "schema_version,experiment,point,trial,solver,use_lra,lra_ms,ntd_ms\n";
    for (const auto& r : rep.records)
        os << kReportSchemaVersion << ',' << r.experiment << ',' << detail::num(r.point) << ',' << r.trial << ','
           << r.solver << ',' << (r.use_lra ? 1 : 0) << ',' << detail::num(r.lra_ms) << ',' << detail::num(r.ntd_ms)
           << '\n';
    return os.str();
}

inline nlohmann::ordered_json report_json(const ExperimentReport& rep, bool with_timing) {
    rep.validate();
    using nlohmann::ordered_json;
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["experiment"] = rep.experiment;
    j["spec"] = {{"extents", rep.spec.extents},
                 {"ranks", rep.spec.ranks},
                 {"factor_sparsity", rep.spec.factor_sparsity},
                 {"core_sparsity", rep.spec.core_sparsity},
                 {"mean", rep.spec.mean},
                 {"snr_db", detail::opt_json(rep.spec.snr_db)},
                 {"seed", rep.spec.seed}};
    j["records"] = ordered_json::array();
    for (const auto& r : rep.records) {
        ordered_json e = {{"experiment", r.experiment},
                          {"point", r.point},
                          {"trial", r.trial},
                          {"solver", r.solver},
                          {"use_lra", r.use_lra},
                          {"seed", r.seed},
                          {"fit", r.fit},
                          {"msir_db", detail::opt_json(r.msir_db)},
                          {"iterations", r.iterations},
                          {"termination", r.termination},
                          {"sigma", detail::opt_json(r.sigma)},
                          {"bound_slack", detail::opt_json(r.bound_slack)}};
        if (with_timing) {
            e["lra_ms"] = r.lra_ms;
            e["ntd_ms"] = r.ntd_ms;
        }
        j["records"].push_back(std::move(e));
    }
    return j;
}

/// Convergence trace: iteration 0 is the initial model.
inline std::string trace_csv(const DecompositionResult& res) {
    std::ostringstream os;
    os << "schema_version,iter,cost,fit\n";
    for (std::size_t k = 0; k < res.cost_trace.size(); ++k)
        os << kReportSchemaVersion << ',' << k << ',' << detail::num(res.cost_trace[k]) << ','
           << detail::num(res.fit_trace[k]) << '\n';
    return os.str();
}

inline std::string trace_timing_csv(const DecompositionResult& res) {
    std::ostringstream os;
    os << "schema_version,iter,elapsed_ms\n";
    for (std::size_t k = 0; k < res.elapsed_ms.size(); ++k)
        os << kReportSchemaVersion << ',' << k << ',' << detail::num(res.elapsed_ms[k]) << '\n';
    return os.str();
}

}  // namespace lrantd
