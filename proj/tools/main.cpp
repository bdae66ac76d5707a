#include "checks.hpp"
#include "config.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <utility>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fracheat::cli;

namespace {

constexpr int kConfigError = 2;
constexpr int kDegraded = 3;

struct Flags {
    std::optional<std::string> op;
    std::optional<double> s;
    std::optional<int> dim;
    std::optional<int> n;
    std::optional<int> modes;
    std::optional<std::string> config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
};

struct Artifacts {
    std::vector<std::pair<std::string, std::string>> files;   // name, contents
};

ExperimentConfig resolve(const Flags& flags) {
    ExperimentConfig c;
    if (flags.config) c = load_config(*flags.config, c);
    if (flags.op) {
        const auto kind = fracheat::parse_operator_kind(*flags.op);
        if (!kind) throw ConfigError("unknown operator '" + *flags.op + "'");
        c.kind = *kind;
    }
    if (flags.s) c.s = *flags.s;
    if (flags.dim) c.dim = *flags.dim;
    if (flags.n) c.n = *flags.n;
    if (flags.modes) c.modes = *flags.modes;
    if (flags.out) c.out = *flags.out;
    if (flags.seed) c.seed = *flags.seed;
    return c;
}

json check_json(const CheckResult& r) {
    json j;
    j["name"] = r.name;
    j["pass"] = r.pass;
    j["informational"] = r.informational;
    j["degraded"] = r.degraded;
    j["constants"] = r.constants;
    if (!r.note.empty()) j["note"] = r.note;
    return j;
}

std::vector<CheckResult> run_all(const ExperimentConfig& config) {
    const Problem problem = prepare(config);
    std::vector<CheckResult> results;
    for (const auto& name : config.checks) results.push_back(run_check(problem, name));
    return results;
}

void write(const std::string& dir, const Artifacts& artifacts) {
    fs::create_directories(dir);
    for (const auto& [name, contents] : artifacts.files) {
        std::ofstream out(fs::path(dir) / name, std::ios::binary);
        out << contents;
        if (!out) throw std::runtime_error("cannot write " + (fs::path(dir) / name).string());
    }
}

int run_command(const std::string& command, const ExperimentConfig& config) {
    const std::vector<CheckResult> results = run_all(config);
    const int code = exit_code(results);
    Artifacts artifacts;
    json summary;
    summary["schema"] = "fracheat.v1";
    summary["command"] = command;
    summary["seed"] = config.seed;
    summary["config"] = config.to_json();
    summary["checks"] = json::array();
    for (const CheckResult& r : results) {
        artifacts.files.emplace_back(r.name + ".csv", to_csv(r));
        summary["checks"].push_back(check_json(r));
        std::cout << r.name << ": " << (r.pass ? "pass" : "FAIL") << (r.informational ? " (informational)" : "")
                  << (r.degraded ? " (degraded)" : "") << '\n';
    }
    summary["exit_code"] = code;
    artifacts.files.emplace_back("summary.json", summary.dump(2) + "\n");
    write(config.out, artifacts);
    return code;
}

ExperimentConfig with_parameter(ExperimentConfig c, const std::string& parameter, double value) {
    auto integral = [&](double v) {
        if (v != std::floor(v)) throw ConfigError(parameter + " values must be integers");
        return static_cast<int>(v);
    };
    if (parameter == "n") c.n = integral(value);
    else if (parameter == "modes") c.modes = integral(value);
    else if (parameter == "s") c.s = value;
    else throw ConfigError("cannot sweep '" + parameter + "' (expected n, s, modes or t)");
    return c;
}

int run_sweep(const ExperimentConfig& base, const std::string& parameter, const std::vector<double>& values) {
    if (values.empty()) throw ConfigError("sweep needs at least one value");
    Artifacts artifacts;
    json summary;
    summary["schema"] = "fracheat.v1";
    summary["command"] = "sweep";
    summary["seed"] = base.seed;
    summary["parameter"] = parameter;
    summary["values"] = values;
    summary["config"] = base.to_json();
    summary["runs"] = json::array();
    std::string csv = "check,symbol," + parameter + ",value\n";
    char buf[96];
    int code = 0;
    auto merge = [&](int c) { code = (c == kDegraded || code == kDegraded) ? kDegraded : std::max(code, c); };

    if (parameter == "t") {
        // one run whose time-indexed checks use the swept times
        ExperimentConfig c = base;
        c.elliptic_times = values;
        c.probe_times = values;
        validate(c);
        const std::vector<CheckResult> results = run_all(c);
        merge(exit_code(results));
        json run;
        run["checks"] = json::array();
        for (const CheckResult& r : results) {
            run["checks"].push_back(check_json(r));
            for (const Row& row : r.rows) {
                std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", row.coordinate, row.value);
                csv += r.name + "," + row.symbol + buf;
            }
        }
        summary["runs"].push_back(run);
    } else {
        std::vector<ExperimentConfig> configs;
        for (double v : values) {
            configs.push_back(with_parameter(base, parameter, v));
            validate(configs.back());
        }
        std::vector<std::future<std::vector<CheckResult>>> jobs;
        for (const auto& c : configs) jobs.push_back(std::async(std::launch::async, run_all, c));
        for (std::size_t k = 0; k < jobs.size(); ++k) {
            const std::vector<CheckResult> results = jobs[k].get();
            merge(exit_code(results));
            json run;
            run[parameter] = values[k];
            run["checks"] = json::array();
            for (const CheckResult& r : results) {
                run["checks"].push_back(check_json(r));
                for (const auto& [symbol, value] : r.constants) {
                    std::snprintf(buf, sizeof buf, ",%.17g,%.17g\n", values[k], value);
                    csv += r.name + "," + symbol + buf;
                }
            }
            summary["runs"].push_back(run);
        }
    }
    summary["exit_code"] = code;
    artifacts.files.emplace_back("sweep.csv", csv);
    artifacts.files.emplace_back("summary.json", summary.dump(2) + "\n");
    write(base.out, artifacts);
    return code;
}

void add_flags(CLI::App& app, Flags& flags) {
    app.add_option("--op", flags.op, "operator: rfl, sfl, cfl or synthetic");
    app.add_option("--s", flags.s, "fractional order");
    app.add_option("--dim", flags.dim, "dimension, 1 or 2");
    app.add_option("--n", flags.n, "cells per axis");
    app.add_option("--modes", flags.modes, "retained modes, 0 for the full spectrum");
    app.add_option("--config", flags.config, "JSON experiment configuration");
    app.add_option("--out", flags.out, "output directory");
    app.add_option("--seed", flags.seed, "random seed");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fractional heat equation experiments on the unit interval and square"};
    app.require_subcommand(1);
    Flags flags;
    add_flags(app, flags);
    app.fallthrough();

    const std::vector<std::pair<std::string, std::string>> single = {{"eig", "eigenvalues"}, {"weyl", "weyl"},
                                                                     {"green", "green"},     {"heat", "heat"},
                                                                     {"solve", "solve"},     {"kernel-bounds", "kernel_bounds"}};
    for (const auto& [command, check] : single) app.add_subcommand(command, "run the " + check + " check");
    CLI::App* verify = app.add_subcommand("verify", "run a suite of checks");
    std::optional<std::string> suite;
    verify->add_option("--suite", suite, "core or full");
    CLI::App* sweep = app.add_subcommand("sweep", "repeat a run over one parameter");
    std::string parameter;
    std::vector<double> values;
    std::vector<std::string> sweep_checks;
    sweep->add_option("--param", parameter, "n, s, modes or t")->required();
    sweep->add_option("--values", values, "comma-separated values")->delimiter(',');
    sweep->add_option("--check", sweep_checks, "checks to run in each configuration")->delimiter(',');

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    try {
        ExperimentConfig config = resolve(flags);
        CLI::App* chosen = app.get_subcommands().front();
        const std::string command = chosen->get_name();
        for (const auto& [name, check] : single) {
            if (command == name) config.checks = {check};
        }
        if (command == "verify") {
            if (suite) config.checks = suite_checks(*suite);
            else if (config.checks.empty()) config.checks = suite_checks("core");
        }
        if (command == "sweep") {
            if (!sweep_checks.empty()) config.checks = sweep_checks;
            else if (config.checks.empty()) config.checks = {parameter == "t" ? "elliptic_limit" : "eigenvalues"};
            if (values.empty()) throw ConfigError("sweep needs at least one value");
            validate(config);
            return run_sweep(config, parameter, values);
        }
        validate(config);
        return run_command(command, config);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const fracheat::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kDegraded;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
}
