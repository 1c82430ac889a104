// lrantd command-line front end. See README.md for the file layouts and
// report schemas.

#include "cli_support.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace lrantd;
using namespace lrantd::cli;

namespace {

struct SolverFlags {
    std::string ranks;
    std::string lra_ranks;
    std::string algorithm = "hals";
    bool use_lra = true;
    int inner_iters = 20;
    int outer_iters = 500;
    double tol = 1e-6;
    double l1_core = 0.0;
    std::string fro_factor;
    std::uint64_t seed = 1;
    std::string semi_modes;
    std::string fixed_modes;
    std::string hals_projection = "column";
};

struct CommonFlags {
    std::string out_dir = ".";
    std::string format = "csv";
    int jobs = 1;
};

void add_solver_flags(CLI::App* app, SolverFlags& f, bool multi_algorithm) {
    app->add_option("--ranks", f.ranks, "NTD ranks, e.g. 3,3,3");
    app->add_option("--lra-ranks", f.lra_ranks, "LRA ranks (default: NTD ranks)");
    app->add_option("--algorithm", f.algorithm,
                    multi_algorithm ? "Solvers to run, comma separated (mu,hals,apg,als)" : "mu, hals, apg or als")
        ->capture_default_str();
    app->add_option("--use-lra", f.use_lra, "Compress with HOSVD before the NTD (true/false)")->capture_default_str();
    app->add_option("--inner-iters", f.inner_iters, "Updates per block and sweep")->capture_default_str();
    app->add_option("--outer-iters", f.outer_iters, "Maximum sweeps")->capture_default_str();
    app->add_option("--tol", f.tol, "Stop when the largest squared factor change falls below this")->capture_default_str();
    app->add_option("--l1-core", f.l1_core, "l1 penalty on the core")->capture_default_str();
    app->add_option("--fro-factor", f.fro_factor, "Frobenius penalty per mode (one value or one per mode)");
    app->add_option("--seed", f.seed, "Master seed")->capture_default_str();
    app->add_option("--semi-modes", f.semi_modes, "1-based modes left unconstrained (semi-NTD)");
    app->add_option("--fixed-modes", f.fixed_modes, "1-based modes fixed to the identity (population NTD)");
    app->add_option("--hals-projection", f.hals_projection, "column or increment")
        ->check(CLI::IsMember({"column", "increment"}))
        ->capture_default_str();
}

void add_common_flags(CLI::App* app, CommonFlags& c, bool with_jobs) {
    app->add_option("--out-dir", c.out_dir, "Directory for output files")->capture_default_str();
    app->add_option("--format", c.format, "Report format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    if (with_jobs) app->add_option("--jobs", c.jobs, "Parallel trial workers")->check(CLI::PositiveNumber);
}

std::vector<std::size_t> parse_modes(const std::string& s, std::size_t order, const char* what) {
    std::vector<std::size_t> out;
    if (s.empty()) return out;
    for (Index m : parse_shape(s, what)) {
        if (static_cast<std::size_t>(m) > order)
            throw UsageError(std::string(what) + ": mode " + std::to_string(m) + " exceeds the tensor order " +
                             std::to_string(order));
        out.push_back(static_cast<std::size_t>(m - 1));
    }
    return out;
}

SolverConfig make_config(const SolverFlags& f, Algorithm alg, std::size_t order, const Shape& default_ranks = {}) {
    SolverConfig c;
    c.algorithm = alg;
    c.use_lra = f.use_lra;
    c.ntd_ranks = f.ranks.empty() ? default_ranks : parse_shape(f.ranks, "--ranks");
    if (c.ntd_ranks.empty()) throw UsageError("--ranks is required");
    if (c.ntd_ranks.size() == 1 && order > 1) c.ntd_ranks.assign(order, c.ntd_ranks[0]);
    if (c.ntd_ranks.size() != order)
        throw UsageError("--ranks: expected " + std::to_string(order) + " values, got " + std::to_string(c.ntd_ranks.size()));
    if (!f.lra_ranks.empty()) {
        c.lra_ranks = parse_shape(f.lra_ranks, "--lra-ranks");
        if (c.lra_ranks.size() == 1 && order > 1) c.lra_ranks.assign(order, c.lra_ranks[0]);
    }
    c.inner_iters = f.inner_iters;
    c.outer_iters = f.outer_iters;
    c.tol = f.tol;
    c.l1_core = f.l1_core;
    if (!f.fro_factor.empty()) {
        c.fro_factor = parse_doubles(f.fro_factor, "--fro-factor");
        if (c.fro_factor.size() == 1) c.fro_factor.assign(order, c.fro_factor[0]);
    }
    c.seed = f.seed;
    c.hals_projection = f.hals_projection == "increment" ? HalsProjection::Increment : HalsProjection::Column;
    c.mode_constraints.assign(order, ModeConstraint::Nonnegative);
    for (auto m : parse_modes(f.semi_modes, order, "--semi-modes")) c.mode_constraints[m] = ModeConstraint::Unconstrained;
    for (auto m : parse_modes(f.fixed_modes, order, "--fixed-modes")) {
        if (c.mode_constraints[m] != ModeConstraint::Nonnegative)
            throw UsageError("mode " + std::to_string(m + 1) + " cannot be both semi and fixed");
        c.mode_constraints[m] = ModeConstraint::FixedIdentity;
    }
    try {
        c.validate(static_cast<Index>(order));
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return c;
}

std::string render(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

void print_result(const DecompositionResult& r, double fit) {
    std::printf("fit: %.4f %%\niterations: %d (%s)\nlra_ms: %.3f\nntd_ms: %.3f\n", fit, r.iterations,
                std::string(to_string(r.termination)).c_str(), r.lra_ms, r.ntd_ms);
}

// ---------------------------------------------------------------------------

struct DecomposeFlags {
    std::string input;
    std::string lra_in;
};

void cmd_decompose(const DecomposeFlags& d, const SolverFlags& f, const CommonFlags& c) {
    const DenseTensor y = io::read_tensor(d.input);
    const auto algs = parse_algorithms(f.algorithm);
    if (algs.size() != 1) throw UsageError("decompose runs a single --algorithm");
    SolverConfig cfg = make_config(f, algs[0], y.shape().size());
    cfg.allow_negative_data = cfg.use_lra;

    DecompositionResult r;
    if (!d.lra_in.empty()) {
        const TuckerModel lra = io::read_model(d.lra_in);
        if (lra.extents() != y.shape()) throw std::runtime_error("cached LRA does not match the input tensor");
        r = solve(lra, cfg);
        r.lra = lra;
    } else {
        r = solve(y, cfg);
    }
    const double fit = fit_index(y, reconstruct(r.model));

    StagedOutput out;
    out.add("model.ntdm", io::encode_model(r.model));
    if (r.lra) out.add("lra.ntdm", io::encode_model(*r.lra));
    if (c.format == "csv") {
        out.add("trace.csv", trace_csv(r));
        out.add("trace_timing.csv", trace_timing_csv(r));
    } else {
        nlohmann::ordered_json j;
        j["schema_version"] = kReportSchemaVersion;
        j["algorithm"] = to_string(cfg.algorithm);
        j["use_lra"] = cfg.use_lra;
        j["iterations"] = r.iterations;
        j["termination"] = to_string(r.termination);
        j["fit"] = fit;
        j["cost"] = r.cost_trace;
        j["fit_trace"] = r.fit_trace;
        out.add("trace.json", render(j));
        nlohmann::ordered_json t;
        t["schema_version"] = kReportSchemaVersion;
        t["lra_ms"] = r.lra_ms;
        t["ntd_ms"] = r.ntd_ms;
        t["elapsed_ms"] = r.elapsed_ms;
        out.add("trace_timing.json", render(t));
    }
    out.commit(c.out_dir);
    print_result(r, fit);
}

// ---------------------------------------------------------------------------

struct SynthFlags {
    std::string extents = "30,30,30";
    std::string ranks = "3,3,3";
    double factor_sparsity = 0.0;
    double core_sparsity = 0.0;
    double mean = 10.0;
    std::string snr = "clean";
    std::uint64_t seed = 1;
    bool text = false;
};

SyntheticSpec make_spec(const std::string& extents, const std::string& ranks, double fs, double cs, double mean,
                        std::optional<double> snr, std::uint64_t seed) {
    SyntheticSpec s{parse_shape(extents, "--extents"), parse_shape(ranks, "--ranks"), fs, cs, mean, snr, seed};
    if (s.ranks.size() == 1 && s.extents.size() > 1) s.ranks.assign(s.extents.size(), s.ranks[0]);
    try {
        s.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    return s;
}

void cmd_synth(const SynthFlags& f, const CommonFlags& c) {
    const auto snr = parse_snr_list(f.snr);
    if (snr.size() != 1) throw UsageError("synth takes a single --snr value");
    const auto spec = make_spec(f.extents, f.ranks, f.factor_sparsity, f.core_sparsity, f.mean, snr[0], f.seed);
    const auto d = generate(spec);
    auto enc = [&](const DenseTensor& t) { return f.text ? io::encode_tensor_text(t) : io::encode_tensor(t); };
    const std::string ext = f.text ? ".txt" : ".ntdt";
    StagedOutput out;
    out.add("clean" + ext, enc(d.clean));
    out.add("noisy" + ext, enc(d.noisy));
    out.add("truth.ntdm", io::encode_model(d.truth));
    out.commit(c.out_dir);
    std::printf("generated %s tensor, realized snr: %s\n", shape_string(spec.extents).c_str(),
                spec.snr_db ? std::to_string(snr_db(d.clean, d.noisy)).c_str() : "clean");
}

// ---------------------------------------------------------------------------

struct SweepFlags {
    std::string extents;
    std::string ranks;
    std::string sparsity;
    std::string snr;
    int trials = 10;
    double mean = 10.0;
    bool warmup = true;
};

SolverRecord run_record(const std::string& experiment, double point, int trial, const SyntheticData& data,
                        SolverConfig cfg) {
    cfg.allow_negative_data = true;
    const DecompositionResult r = solve(data.noisy, cfg);
    SolverRecord rec;
    rec.experiment = experiment;
    rec.point = point;
    rec.trial = trial;
    rec.solver = std::string(to_string(cfg.algorithm));
    rec.use_lra = cfg.use_lra;
    rec.seed = cfg.seed;
    rec.fit = fit_index(data.clean, reconstruct(r.model));
    rec.msir_db = msir(data.truth, r.model);
    rec.iterations = r.iterations;
    rec.termination = std::string(to_string(r.termination));
    if (r.lra) rec.sigma = std::sqrt(residual_squared(data.noisy, *r.lra));
    rec.lra_ms = r.lra_ms;
    rec.ntd_ms = r.ntd_ms;
    return rec;
}

void emit_report(const ExperimentReport& rep, const CommonFlags& c, StagedOutput& out) {
    if (c.format == "csv") {
        out.add("report.csv", report_csv(rep));
        out.add("report_timing.csv", report_timing_csv(rep));
    } else {
        out.add("report.json", render(report_json(rep, false)));
        out.add("report_timing.json", render(report_json(rep, true)));
    }
}

void cmd_sparsity_sweep(const SweepFlags& s, const SolverFlags& f, const CommonFlags& c) {
    const auto points = parse_doubles(s.sparsity, "--sparsity");
    const auto snr = parse_snr_list(s.snr);
    if (snr.size() != 1) throw UsageError("sparsity-sweep takes a single --snr value");
    if (s.trials < 1) throw UsageError("--trials must be at least 1");
    const auto algs = parse_algorithms(f.algorithm);
    const SyntheticSpec base = make_spec(s.extents, s.ranks, 0.0, 0.0, s.mean, snr[0], f.seed);
    for (double p : points) make_spec(s.extents, s.ranks, p, p, s.mean, snr[0], f.seed);

    const std::size_t per_point = static_cast<std::size_t>(s.trials);
    std::vector<std::vector<SolverRecord>> slots(points.size() * per_point);
    run_parallel(slots.size(), c.jobs, [&](std::size_t job) {
        const std::size_t pi = job / per_point;
        const int trial = static_cast<int>(job % per_point);
        SyntheticSpec spec = base;
        spec.factor_sparsity = spec.core_sparsity = points[pi];
        spec.seed = mix_seed(f.seed, pi, static_cast<std::uint64_t>(trial));
        const auto data = generate(spec);
        for (auto alg : algs) {
            SolverConfig cfg = make_config(f, alg, spec.extents.size(), spec.ranks);
            cfg.seed = mix_seed(f.seed ^ 0x5bd1e995ULL, pi, static_cast<std::uint64_t>(trial));
            slots[job].push_back(run_record("sparsity", points[pi], trial, data, cfg));
        }
    });

    ExperimentReport rep{"sparsity", base, {}};
    for (auto& s_ : slots) rep.records.insert(rep.records.end(), s_.begin(), s_.end());
    StagedOutput out;
    emit_report(rep, c, out);
    out.commit(c.out_dir);

    std::printf("%-10s %-6s %14s %12s\n", "sparsity", "solver", "median_msir_db", "median_fit");
    for (double p : points)
        for (auto alg : algs) {
            std::vector<double> m, fit;
            for (const auto& r : rep.records)
                if (r.point == p && r.solver == to_string(alg)) {
                    m.push_back(*r.msir_db);
                    fit.push_back(r.fit);
                }
            std::printf("%-10.3g %-6s %14.3f %12.4f\n", p, std::string(to_string(alg)).c_str(), median(m), median(fit));
        }
}

void cmd_noise_sweep(const SweepFlags& s, const SolverFlags& f, const CommonFlags& c) {
    const auto levels = parse_snr_list(s.snr);
    if (s.trials < 1) throw UsageError("--trials must be at least 1");
    const auto algs = parse_algorithms(f.algorithm);
    const auto sp = parse_doubles(s.sparsity, "--sparsity");
    if (sp.size() != 1) throw UsageError("noise-sweep takes a single --sparsity value");
    const SyntheticSpec base = make_spec(s.extents, s.ranks, sp[0], sp[0], s.mean, std::nullopt, f.seed);

    if (s.warmup) {
        SyntheticSpec w = base;
        w.seed = mix_seed(f.seed, 0xffff);
        const auto data = generate(w);
        for (auto alg : algs)
            for (bool lra : {true, false}) {
                SolverConfig cfg = make_config(f, alg, base.extents.size(), base.ranks);
                cfg.use_lra = lra;
                cfg.outer_iters = 1;
                (void)run_record("warmup", 0, 0, data, cfg);
            }
    }

    const std::size_t per_point = static_cast<std::size_t>(s.trials);
    std::vector<std::vector<SolverRecord>> slots(levels.size() * per_point);
    run_parallel(slots.size(), c.jobs, [&](std::size_t job) {
        const std::size_t pi = job / per_point;
        const int trial = static_cast<int>(job % per_point);
        SyntheticSpec spec = base;
        spec.snr_db = levels[pi];
        spec.seed = mix_seed(f.seed, pi, static_cast<std::uint64_t>(trial));
        const auto data = generate(spec);
        const double point = levels[pi] ? *levels[pi] : std::numeric_limits<double>::infinity();
        for (auto alg : algs) {
            SolverConfig cfg = make_config(f, alg, spec.extents.size(), spec.ranks);
            cfg.seed = mix_seed(f.seed ^ 0x5bd1e995ULL, pi, static_cast<std::uint64_t>(trial));
            cfg.use_lra = true;
            cfg.allow_negative_data = true;
            const auto with = solve(data.noisy, cfg);
            cfg.use_lra = false;
            const auto without = solve(data.noisy, cfg);
            const auto diag = error_bound_diagnostic(data.noisy, *with.lra, with.model, without.model);
            for (const auto* r : {&with, &without}) {
                SolverRecord rec;
                rec.experiment = "noise";
                rec.point = levels[pi] ? point : 0.0;
                rec.trial = trial;
                rec.solver = std::string(to_string(alg));
                rec.use_lra = r == &with;
                rec.seed = cfg.seed;
                rec.fit = fit_index(data.clean, reconstruct(r->model));
                rec.msir_db = msir(data.truth, r->model);
                rec.iterations = r->iterations;
                rec.termination = std::string(to_string(r->termination));
                rec.sigma = diag.sigma;
                rec.bound_slack = diag.slack;
                rec.lra_ms = r->lra_ms;
                rec.ntd_ms = r->ntd_ms;
                slots[job].push_back(rec);
            }
        }
    });

    ExperimentReport rep{"noise", base, {}};
    for (auto& s_ : slots) rep.records.insert(rep.records.end(), s_.begin(), s_.end());
    StagedOutput out;
    emit_report(rep, c, out);
    out.commit(c.out_dir);

    std::printf("%-8s %-6s %-4s %12s %12s %12s\n", "snr_db", "solver", "lra", "median_fit", "median_ntd", "median_lra");
    for (std::size_t pi = 0; pi < levels.size(); ++pi)
        for (auto alg : algs)
            for (bool lra : {true, false}) {
                std::vector<double> fit, ntd, lra_ms;
                for (std::size_t t = 0; t < per_point; ++t)
                    for (const auto& r : slots[pi * per_point + t])
                        if (r.solver == to_string(alg) && r.use_lra == lra) {
                            fit.push_back(r.fit);
                            ntd.push_back(r.ntd_ms);
                            lra_ms.push_back(r.lra_ms);
                        }
                std::printf("%-8s %-6s %-4s %12.4f %12.3f %12.3f\n",
                            levels[pi] ? std::to_string(*levels[pi]).substr(0, 6).c_str() : "clean",
                            std::string(to_string(alg)).c_str(), lra ? "yes" : "no", median(fit), median(ntd),
                            median(lra_ms));
            }
}

// ---------------------------------------------------------------------------

struct CompleteFlags {
    std::string input;
    std::string mask;
    std::string truth;
    double completion_tol = 1e-6;
    int completion_iters = 500;
};

void cmd_complete(const CompleteFlags& d, const SolverFlags& f, const CommonFlags& c) {
    const DenseTensor y = io::read_tensor(d.input);
    const DenseTensor mask = io::read_tensor(d.mask);
    if (mask.shape() != y.shape())
        throw std::runtime_error("mask shape " + shape_string(mask.shape()) + " does not match tensor shape " +
                                 shape_string(y.shape()));
    const WeightTensor w(mask);
    if (!w.is_binary()) throw std::runtime_error("mask entries must be 0 or 1");
    const auto algs = parse_algorithms(f.algorithm);
    if (algs.size() != 1) throw UsageError("complete runs a single --algorithm");
    SolverConfig cfg = make_config(f, algs[0], y.shape().size());
    cfg.allow_negative_data = true;

    const auto completion = weighted_tucker_complete(y, w, cfg.effective_lra_ranks(), {d.completion_tol, d.completion_iters});
    const auto r = solve(completion.model, cfg);

    nlohmann::ordered_json rep;
    rep["schema_version"] = kReportSchemaVersion;
    rep["completion_iterations"] = completion.iterations;
    rep["completion_converged"] = completion.converged;
    rep["weighted_residual"] = completion.objective_trace.back();
    rep["ntd_iterations"] = r.iterations;
    rep["ntd_termination"] = to_string(r.termination);
    rep["observed_fit"] = fit_index(hadamard(y, mask), hadamard(reconstruct(r.model), mask));
    std::optional<double> hidden_err, lra_hidden_err;
    if (!d.truth.empty()) {
        const DenseTensor truth = io::read_tensor(d.truth);
        if (truth.shape() != y.shape()) throw std::runtime_error("truth shape does not match tensor shape");
        auto hidden_error = [&](const DenseTensor& approx) -> std::optional<double> {
            double err = 0, base = 0;
            for (Index i = 0; i < y.size(); ++i)
                if (mask[i] == 0.0) {
                    err += (approx[i] - truth[i]) * (approx[i] - truth[i]);
                    base += truth[i] * truth[i];
                }
            if (base == 0) return std::nullopt;
            return std::sqrt(err / base);
        };
        lra_hidden_err = hidden_error(reconstruct(completion.model));
        hidden_err = hidden_error(reconstruct(r.model));
        rep["truth_fit"] = fit_index(truth, reconstruct(r.model));
    }
    rep["lra_hidden_rel_error"] = lra_hidden_err ? nlohmann::ordered_json(*lra_hidden_err) : nlohmann::ordered_json();
    rep["ntd_hidden_rel_error"] = hidden_err ? nlohmann::ordered_json(*hidden_err) : nlohmann::ordered_json();

    StagedOutput out;
    out.add("model.ntdm", io::encode_model(r.model));
    out.add("lra.ntdm", io::encode_model(completion.model));
    if (c.format == "json") {
        out.add("completion.json", render(rep));
    } else {
        std::string csv = "schema_version,completion_iterations,completion_converged,weighted_residual,ntd_iterations,"
                          "ntd_termination,observed_fit,truth_fit,lra_hidden_rel_error,ntd_hidden_rel_error\n";
        auto cell = [](const nlohmann::ordered_json& v) {
            if (v.is_null()) return std::string();
            if (v.is_string()) return v.get<std::string>();
            if (v.is_boolean()) return std::string(v.get<bool>() ? "1" : "0");
            if (v.is_number_integer()) return std::to_string(v.get<long long>());
            return lrantd::detail::num(v.get<double>());
        };
        csv += cell(rep["schema_version"]) + "," + cell(rep["completion_iterations"]) + "," +
               cell(rep["completion_converged"]) + "," + cell(rep["weighted_residual"]) + "," +
               cell(rep["ntd_iterations"]) + "," + cell(rep["ntd_termination"]) + "," + cell(rep["observed_fit"]) +
               "," + cell(rep.value("truth_fit", nlohmann::ordered_json())) + "," + cell(rep["lra_hidden_rel_error"]) +
               "," + cell(rep["ntd_hidden_rel_error"]) + "\n";
        out.add("completion.csv", csv);
    }
    out.commit(c.out_dir);
    std::printf("completion iterations: %d\nntd iterations: %d\n", completion.iterations, r.iterations);
    if (hidden_err) std::printf("hidden-entry relative error: %.3e\n", *hidden_err);
}

// ---------------------------------------------------------------------------

struct FlopsFlags {
    int order = 4;
    std::string extents = "100";
    double rank = 10;
};

void cmd_flops(const FlopsFlags& f, const CommonFlags& c, bool write_file) {
    if (f.order < 1 || f.rank <= 0) throw UsageError("--order and --rank must be positive");
    const auto extents = parse_doubles(f.extents, "--extent");
    for (double e : extents)
        if (e <= 0) throw UsageError("--extent values must be positive");
    std::string csv = "schema_version,order,extent,rank,with_lra,without_lra,ratio\n";
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    std::printf("%-6s %-10s %-8s %18s %22s %12s\n", "order", "extent", "rank", "with_lra", "without_lra", "ratio");
    for (double e : extents) {
        const double with = gradient_flop_estimate(f.order, e, f.rank, true);
        const double without = gradient_flop_estimate(f.order, e, f.rank, false);
        std::printf("%-6d %-10.6g %-8.6g %18.0f %22.0f %12.2f\n", f.order, e, f.rank, with, without, without / with);
        csv += std::to_string(kReportSchemaVersion) + "," + std::to_string(f.order) + "," + lrantd::detail::num(e) +
               "," + lrantd::detail::num(f.rank) + "," + lrantd::detail::num(with) + "," +
               lrantd::detail::num(without) + "," + lrantd::detail::num(without / with) + "\n";
        rows.push_back({{"order", f.order}, {"extent", e}, {"rank", f.rank}, {"with_lra", with},
                        {"without_lra", without}, {"ratio", without / with}});
    }
    if (!write_file) return;
    StagedOutput out;
    if (c.format == "csv") {
        out.add("flops.csv", csv);
    } else {
        nlohmann::ordered_json j;
        j["schema_version"] = kReportSchemaVersion;
        j["rows"] = rows;
        out.add("flops.json", render(j));
    }
    out.commit(c.out_dir);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonnegative Tucker decomposition with low-rank approximation"};
    app.set_config("--config", "", "TOML/INI file with option defaults; command-line flags take precedence");
    app.require_subcommand(1);

    SolverFlags solver;
    CommonFlags common;

    DecomposeFlags dec;
    auto* decompose = app.add_subcommand("decompose", "Decompose a tensor file");
    decompose->add_option("--input", dec.input, "Tensor file (binary or text)")->required();
    decompose->add_option("--lra-in", dec.lra_in, "Cached LRA model to decompose instead of recomputing it");
    add_solver_flags(decompose, solver, false);
    add_common_flags(decompose, common, false);

    SynthFlags syn;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic Tucker tensor");
    synth->add_option("--extents", syn.extents)->capture_default_str();
    synth->add_option("--ranks", syn.ranks)->capture_default_str();
    synth->add_option("--factor-sparsity", syn.factor_sparsity)->capture_default_str();
    synth->add_option("--core-sparsity", syn.core_sparsity)->capture_default_str();
    synth->add_option("--mean", syn.mean, "Mean of the exponential entries")->capture_default_str();
    synth->add_option("--snr", syn.snr, "Noise level in dB, or clean")->capture_default_str();
    synth->add_option("--seed", syn.seed)->capture_default_str();
    synth->add_flag("--text", syn.text, "Write tensors in the text format");
    add_common_flags(synth, common, false);

    SweepFlags sps{"30,30,30", "3,3,3", "0,0.1,0.2,0.3,0.4,0.5,0.6", "20", 10, 10.0, false};
    auto* sparsity = app.add_subcommand("sparsity-sweep", "Recovery versus factor and core sparsity");
    sparsity->add_option("--extents", sps.extents)->capture_default_str();
    sparsity->add_option("--true-ranks", sps.ranks, "Ranks of the generated data (also the default NTD ranks)")
        ->capture_default_str();
    sparsity->add_option("--sparsity", sps.sparsity, "Sweep values")->capture_default_str();
    sparsity->add_option("--snr", sps.snr, "Noise level in dB, or clean")->capture_default_str();
    sparsity->add_option("--trials", sps.trials)->capture_default_str();
    sparsity->add_option("--mean", sps.mean)->capture_default_str();
    add_solver_flags(sparsity, solver, true);
    add_common_flags(sparsity, common, true);

    SweepFlags nss{"50,50,50,50", "5,5,5,5", "0", "-5,0,5,10,15,20", 3, 10.0, true};
    auto* noise = app.add_subcommand("noise-sweep", "Fit and timing with and without LRA versus noise");
    noise->add_option("--extents", nss.extents)->capture_default_str();
    noise->add_option("--true-ranks", nss.ranks, "Ranks of the generated data (also the default NTD ranks)")
        ->capture_default_str();
    noise->add_option("--sparsity", nss.sparsity, "Factor and core sparsity of the generated data")
        ->capture_default_str();
    noise->add_option("--snr", nss.snr, "Sweep values in dB (clean allowed)")->capture_default_str();
    noise->add_option("--trials", nss.trials)->capture_default_str();
    noise->add_option("--mean", nss.mean)->capture_default_str();
    noise->add_option("--warmup", nss.warmup, "Run one untimed pass first")->capture_default_str();
    add_solver_flags(noise, solver, true);
    add_common_flags(noise, common, true);

    CompleteFlags cf;
    auto* complete = app.add_subcommand("complete", "Weighted Tucker completion followed by NTD");
    complete->add_option("--input", cf.input, "Tensor file")->required();
    complete->add_option("--mask", cf.mask, "Binary mask file (1 = observed)")->required();
    complete->add_option("--truth", cf.truth, "Ground-truth tensor for hidden-entry error");
    complete->add_option("--completion-tol", cf.completion_tol)->capture_default_str();
    complete->add_option("--completion-iters", cf.completion_iters)->capture_default_str();
    add_solver_flags(complete, solver, false);
    add_common_flags(complete, common, false);

    FlopsFlags ff;
    auto* flops_cmd = app.add_subcommand("flops", "Gradient multiplication counts with and without LRA");
    flops_cmd->add_option("--order", ff.order)->capture_default_str();
    flops_cmd->add_option("--extent", ff.extents, "One value or a comma-separated sweep")->capture_default_str();
    flops_cmd->add_option("--rank", ff.rank)->capture_default_str();
    add_common_flags(flops_cmd, common, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (*decompose) {
            cmd_decompose(dec, solver, common);
        } else if (*synth) {
            cmd_synth(syn, common);
        } else if (*sparsity) {
            cmd_sparsity_sweep(sps, solver, common);
        } else if (*noise) {
            if (solver.algorithm == "hals" && noise->count("--algorithm") == 0) solver.algorithm = "mu,hals,apg";
            cmd_noise_sweep(nss, solver, common);
        } else if (*complete) {
            cmd_complete(cf, solver, common);
        } else if (*flops_cmd) {
            cmd_flops(ff, common, flops_cmd->count("--out-dir") > 0);
        }
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
