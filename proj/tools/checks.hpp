#pragma once

#include "config.hpp"

#include "fracheat/kernel_bounds.hpp"
#include "fracheat/weakdual.hpp"

#include <map>
#include <string>
#include <vector>

namespace fracheat::cli {

struct Row {
    std::string symbol;
    double coordinate;
    double value;
};

struct CheckResult {
    std::string name;
    bool pass = false;
    bool informational = false;   // reported, never affects the exit code
    bool degraded = false;        // a truncation gate tripped
    std::string note;
    std::map<std::string, double> constants;
    std::vector<Row> rows;
};

/// Everything a run needs besides the configuration.
struct Problem {
    ExperimentConfig config;
    DiscreteOperator op;
    EigenSystem eig;
};

/// Builds the operator and its spectrum. Throws NumericalError on a bad spectrum.
Problem prepare(const ExperimentConfig& config);

CheckResult run_check(const Problem& problem, const std::string& name);

/// Exit code for a set of results: 3 if any degraded, else 1 if any enforced check failed, else 0.
int exit_code(const std::vector<CheckResult>& results);

/// CSV body for one check, header `check,symbol,coordinate,value`.
std::string to_csv(const CheckResult& result);

}  // namespace fracheat::cli
