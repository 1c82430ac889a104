#pragma once

#include "lrantd/tensor.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace lrantd {

enum class Algorithm { MU, HALS, APG, ALS };
enum class ModeConstraint { Nonnegative, Unconstrained, FixedIdentity };
enum class CoreConstraint { Nonnegative, Unconstrained };

/// Where HALS applies the nonnegativity projection. `Column` projects the
/// updated column (a_r <- P+(a_r + d)); `Increment` projects only d.
enum class HalsProjection { Column, Increment };

inline std::string_view to_string(Algorithm a) {
    switch (a) {
        case Algorithm::MU: return "mu";
        case Algorithm::HALS: return "hals";
        case Algorithm::APG: return "apg";
        case Algorithm::ALS: return "als";
    }
    return "?";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
    if (s == "mu" || s == "MU") return Algorithm::MU;
    if (s == "hals" || s == "HALS") return Algorithm::HALS;
    if (s == "apg" || s == "APG") return Algorithm::APG;
    if (s == "als" || s == "ALS") return Algorithm::ALS;
    return std::nullopt;
}

struct Penalties {
    double l1_core = 0.0;
    std::vector<double> fro_factor;  // empty means zero for every mode

    double fro(Index n) const {
        const auto k = static_cast<std::size_t>(n);
        return k < fro_factor.size() ? fro_factor[k] : 0.0;
    }
};

struct SolverConfig {
    Algorithm algorithm = Algorithm::HALS;
    bool use_lra = true;
    Shape lra_ranks;  // empty means ntd_ranks
    Shape ntd_ranks;
    std::vector<ModeConstraint> mode_constraints;  // empty means all Nonnegative
    CoreConstraint core_constraint = CoreConstraint::Nonnegative;
    double l1_core = 0.0;
    std::vector<double> fro_factor;
    int inner_iters = 20;
    int outer_iters = 500;
    double tol = 1e-6;
    std::uint64_t seed = 1;
    HalsProjection hals_projection = HalsProjection::Column;
    // Accept observations with negative entries (e.g. noisy synthetic data)
    // even when every block is nonnegative.
    bool allow_negative_data = false;

    Penalties penalties() const { return {l1_core, fro_factor}; }
    double fro(Index n) const { return penalties().fro(n); }

    ModeConstraint constraint(Index n) const {
        const auto k = static_cast<std::size_t>(n);
        return k < mode_constraints.size() ? mode_constraints[k] : ModeConstraint::Nonnegative;
    }

    const Shape& effective_lra_ranks() const { return lra_ranks.empty() ? ntd_ranks : lra_ranks; }

    void validate(Index order) const {
        if (static_cast<Index>(ntd_ranks.size()) != order)
            throw std::invalid_argument("SolverConfig: expected " + std::to_string(order) + " ntd ranks");
        if (!lra_ranks.empty() && static_cast<Index>(lra_ranks.size()) != order)
            throw std::invalid_argument("SolverConfig: expected " + std::to_string(order) + " lra ranks");
        if (!mode_constraints.empty() && static_cast<Index>(mode_constraints.size()) != order)
            throw std::invalid_argument("SolverConfig: expected one constraint per mode");
        if (!fro_factor.empty() && static_cast<Index>(fro_factor.size()) != order)
            throw std::invalid_argument("SolverConfig: expected one Frobenius weight per mode");
        for (Index r : ntd_ranks)
            if (r < 1) throw std::invalid_argument("SolverConfig: ranks must be at least 1");
        for (Index r : lra_ranks)
            if (r < 1) throw std::invalid_argument("SolverConfig: lra ranks must be at least 1");
        if (l1_core < 0) throw std::invalid_argument("SolverConfig: l1 penalty must be nonnegative");
        for (double l : fro_factor)
            if (l < 0) throw std::invalid_argument("SolverConfig: Frobenius penalties must be nonnegative");
        if (inner_iters < 1 || outer_iters < 1)
            throw std::invalid_argument("SolverConfig: iteration counts must be at least 1");
        if (!(tol >= 0)) throw std::invalid_argument("SolverConfig: tolerance must be nonnegative");
    }
};

}  // namespace lrantd
