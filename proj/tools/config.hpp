#pragma once

#include "fracheat/operators.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracheat::cli {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Named preset ("zero", "ones", "phi1", "random") or tabulated values.
struct FieldSpec {
    std::string preset = "zero";
    std::vector<double> values;

    bool tabulated() const { return !values.empty(); }
};

struct Tolerances {
    double weyl = 0.0;
    double weak_dual = 1e-3;
    double spread_limit = 1e3;
    double decay = 0.05;
    double slope = 0.15;
    double submarkov = 1e-10;
    double resolvent = 1e-6;
};

struct ExperimentConfig {
    OperatorKind kind = OperatorKind::Rfl;
    double s = 0.5;
    int dim = 1;
    int n = 128;
    int modes = 0;   // 0: full spectrum
    double synthetic_gamma = 0.5;
    SyntheticVariant synthetic_variant = SyntheticVariant::Baseline;

    double t_end = 1.0;
    int steps = 200;
    std::vector<double> probe_times = {0.05, 0.1, 0.2, 0.5, 1.0, 2.0};
    std::vector<double> elliptic_times;   // empty: times past the spectral-gap transient

    bool rough_data = false;   // seeded rough data instead of the field specs
    FieldSpec u0;
    FieldSpec f{"ones", {}};
    FieldSpec h{"ones", {}};

    std::vector<std::string> checks;
    std::string out = "fracheat_out";
    std::uint64_t seed = 0;
    Tolerances tol;

    nlohmann::json to_json() const;
};

const std::vector<std::string>& known_checks();
/// Expands a suite name ("core", "full") to its checks.
std::vector<std::string> suite_checks(const std::string& suite);

/// Parses a JSON document on top of `base`; throws ConfigError on unknown keys or bad types.
ExperimentConfig parse_config(const nlohmann::json& doc, ExperimentConfig base = {});
ExperimentConfig load_config(const std::string& path, ExperimentConfig base = {});

/// Checks every module precondition; throws ConfigError.
void validate(const ExperimentConfig& config);

}  // namespace fracheat::cli
