#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

namespace fracheat::cli {

using nlohmann::json;

namespace {

const std::set<std::string> kPresets = {"zero", "ones", "phi1", "random"};

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
T get(const json& obj, const std::string& key, const std::string& where) {
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value for '" + key + "' in " + where);
    }
}

FieldSpec parse_field(const json& v, const std::string& name) {
    FieldSpec spec;
    if (v.is_string()) {
        spec.preset = v.get<std::string>();
    } else if (v.is_array()) {
        spec.preset.clear();
        for (const auto& x : v) {
            if (!x.is_number()) throw ConfigError("data." + name + " must hold numbers only");
            spec.values.push_back(x.get<double>());
        }
        if (spec.values.empty()) throw ConfigError("data." + name + " is an empty table");
    } else {
        throw ConfigError("data." + name + " must be a preset name or an array of numbers");
    }
    return spec;
}

json field_json(const FieldSpec& spec) { return spec.tabulated() ? json(spec.values) : json(spec.preset); }

void check_field(const FieldSpec& spec, const std::string& name, std::size_t expected) {
    if (spec.tabulated()) {
        if (spec.values.size() != expected) {
            throw ConfigError("data." + name + " has " + std::to_string(spec.values.size()) + " values, expected " +
                              std::to_string(expected));
        }
        for (double v : spec.values) {
            if (!std::isfinite(v)) throw ConfigError("data." + name + " holds a non-finite value");
        }
        return;
    }
    if (!kPresets.count(spec.preset)) throw ConfigError("unknown preset '" + spec.preset + "' for data." + name);
    if (name == "h" && spec.preset == "phi1") throw ConfigError("preset phi1 is not available for boundary data");
}

}  // namespace

const std::vector<std::string>& known_checks() {
    static const std::vector<std::string> names = {"eigenvalues", "weyl",           "green",        "heat",
                                                   "solve",       "weak_dual",      "elliptic_limit", "kernel_bounds"};
    return names;
}

std::vector<std::string> suite_checks(const std::string& suite) {
    if (suite == "core") return {"eigenvalues", "weyl", "heat", "weak_dual", "elliptic_limit"};
    if (suite == "full") return known_checks();
    throw ConfigError("unknown suite '" + suite + "' (expected core or full)");
}

json ExperimentConfig::to_json() const {
    json j;
    j["operator"] = std::string(to_string(kind));
    j["s"] = s;
    j["dim"] = dim;
    j["n"] = n;
    j["modes"] = modes;
    if (kind == OperatorKind::Synthetic) {
        j["synthetic"] = {{"gamma", synthetic_gamma}, {"variant", std::string(to_string(synthetic_variant))}};
    }
    j["times"] = {{"t_end", t_end}, {"steps", steps}};
    j["probe_times"] = probe_times;
    if (!elliptic_times.empty()) j["elliptic_times"] = elliptic_times;
    if (rough_data) {
        j["data"] = "rough";
    } else {
        j["data"] = {{"u0", field_json(u0)}, {"f", field_json(f)}, {"h", field_json(h)}};
    }
    j["checks"] = checks;
    j["out"] = out;
    j["seed"] = seed;
    j["tolerances"] = {{"weyl", tol.weyl},         {"weak_dual", tol.weak_dual}, {"spread_limit", tol.spread_limit},
                       {"decay", tol.decay},       {"slope", tol.slope},         {"submarkov", tol.submarkov},
                       {"resolvent", tol.resolvent}};
    return j;
}

ExperimentConfig parse_config(const json& doc, ExperimentConfig c) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    reject_unknown(doc,
                   {"operator", "s", "dim", "n", "modes", "synthetic", "times", "probe_times", "elliptic_times", "data",
                    "checks", "suite", "out", "seed", "tolerances"},
                   "config");
    const std::string top = "config";
    if (doc.contains("operator")) {
        const auto kind = parse_operator_kind(get<std::string>(doc, "operator", top));
        if (!kind) throw ConfigError("unknown operator '" + doc["operator"].dump() + "'");
        c.kind = *kind;
    }
    if (doc.contains("s")) c.s = get<double>(doc, "s", top);
    if (doc.contains("dim")) c.dim = get<int>(doc, "dim", top);
    if (doc.contains("n")) c.n = get<int>(doc, "n", top);
    if (doc.contains("modes")) c.modes = get<int>(doc, "modes", top);
    if (doc.contains("synthetic")) {
        const json& syn = doc["synthetic"];
        if (!syn.is_object()) throw ConfigError("synthetic must be an object");
        reject_unknown(syn, {"gamma", "variant"}, "synthetic");
        if (syn.contains("gamma")) c.synthetic_gamma = get<double>(syn, "gamma", "synthetic");
        if (syn.contains("variant")) {
            const auto v = parse_synthetic_variant(get<std::string>(syn, "variant", "synthetic"));
            if (!v) throw ConfigError("unknown synthetic variant " + syn["variant"].dump());
            c.synthetic_variant = *v;
        }
    }
    if (doc.contains("times")) {
        const json& t = doc["times"];
        if (!t.is_object()) throw ConfigError("times must be an object");
        reject_unknown(t, {"t_end", "steps"}, "times");
        if (t.contains("t_end")) c.t_end = get<double>(t, "t_end", "times");
        if (t.contains("steps")) c.steps = get<int>(t, "steps", "times");
    }
    if (doc.contains("probe_times")) c.probe_times = get<std::vector<double>>(doc, "probe_times", top);
    if (doc.contains("elliptic_times")) c.elliptic_times = get<std::vector<double>>(doc, "elliptic_times", top);
    if (doc.contains("data")) {
        const json& d = doc["data"];
        if (d.is_string()) {
            if (d.get<std::string>() != "rough") throw ConfigError("data must be \"rough\" or an object");
            c.rough_data = true;
        } else if (d.is_object()) {
            reject_unknown(d, {"u0", "f", "h"}, "data");
            c.rough_data = false;
            if (d.contains("u0")) c.u0 = parse_field(d["u0"], "u0");
            if (d.contains("f")) c.f = parse_field(d["f"], "f");
            if (d.contains("h")) c.h = parse_field(d["h"], "h");
        } else {
            throw ConfigError("data must be \"rough\" or an object");
        }
    }
    if (doc.contains("checks") && doc.contains("suite")) throw ConfigError("give either checks or suite, not both");
    if (doc.contains("checks")) c.checks = get<std::vector<std::string>>(doc, "checks", top);
    if (doc.contains("suite")) c.checks = suite_checks(get<std::string>(doc, "suite", top));
    if (doc.contains("out")) c.out = get<std::string>(doc, "out", top);
    if (doc.contains("seed")) c.seed = get<std::uint64_t>(doc, "seed", top);
    if (doc.contains("tolerances")) {
        const json& t = doc["tolerances"];
        if (!t.is_object()) throw ConfigError("tolerances must be an object");
        reject_unknown(t, {"weyl", "weak_dual", "spread_limit", "decay", "slope", "submarkov", "resolvent"},
                       "tolerances");
        const std::string where = "tolerances";
        if (t.contains("weyl")) c.tol.weyl = get<double>(t, "weyl", where);
        if (t.contains("weak_dual")) c.tol.weak_dual = get<double>(t, "weak_dual", where);
        if (t.contains("spread_limit")) c.tol.spread_limit = get<double>(t, "spread_limit", where);
        if (t.contains("decay")) c.tol.decay = get<double>(t, "decay", where);
        if (t.contains("slope")) c.tol.slope = get<double>(t, "slope", where);
        if (t.contains("submarkov")) c.tol.submarkov = get<double>(t, "submarkov", where);
        if (t.contains("resolvent")) c.tol.resolvent = get<double>(t, "resolvent", where);
    }
    return c;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("malformed JSON in " + path + ": " + e.what());
    }
    return parse_config(doc, std::move(base));
}

void validate(const ExperimentConfig& c) {
    auto in_open = [](double v, double lo, double hi) { return std::isfinite(v) && v > lo && v < hi; };
    switch (c.kind) {
        case OperatorKind::Rfl:
            if (!in_open(c.s, 0.0, 1.0)) throw ConfigError("rfl needs s in (0,1)");
            break;
        case OperatorKind::Sfl:
            if (!in_open(c.s, 0.0, 1.0) && c.s != 1.0) throw ConfigError("sfl needs s in (0,1]");
            break;
        case OperatorKind::Cfl:
            if (!in_open(c.s, 0.5, 1.0)) throw ConfigError("cfl needs s in (1/2,1)");
            break;
        case OperatorKind::Synthetic:
            if (!in_open(c.s, 0.0, 1.0)) throw ConfigError("synthetic needs s in (0,1)");
            if (!in_open(c.synthetic_gamma, 0.0, 1.0) && c.synthetic_gamma != 1.0) {
                throw ConfigError("synthetic.gamma must lie in (0,1]");
            }
            break;
    }
    if (c.dim != 1 && c.dim != 2) throw ConfigError("dim must be 1 or 2");
    if (c.n < 4) throw ConfigError("n must be at least 4");
    const long nodes = c.dim == 1 ? c.n : static_cast<long>(c.n) * c.n;
    if (nodes > 4096) throw ConfigError("at most 4096 grid nodes are supported by the dense solver");
    if (c.modes < 0 || c.modes > nodes) throw ConfigError("modes must lie in [0, number of nodes]");
    if (c.modes == 1) throw ConfigError("modes must be 0 (full spectrum) or at least 2");

    if (!(std::isfinite(c.t_end) && c.t_end > 0.0)) throw ConfigError("times.t_end must be positive");
    if (c.steps < 1) throw ConfigError("times.steps must be at least 1");
    auto check_times = [](const std::vector<double>& times, const std::string& name) {
        for (std::size_t k = 0; k < times.size(); ++k) {
            if (!(std::isfinite(times[k]) && times[k] > 0.0)) throw ConfigError(name + " must be positive");
            if (k > 0 && !(times[k] > times[k - 1])) throw ConfigError(name + " must be strictly increasing");
        }
    };
    if (c.probe_times.empty()) throw ConfigError("probe_times must not be empty");
    check_times(c.probe_times, "probe_times");
    check_times(c.elliptic_times, "elliptic_times");

    if (!c.rough_data) {
        const std::size_t boundary = c.dim == 1 ? 2 : 4 * static_cast<std::size_t>(c.n);
        check_field(c.u0, "u0", static_cast<std::size_t>(nodes));
        check_field(c.f, "f", static_cast<std::size_t>(nodes));
        check_field(c.h, "h", boundary);
    }

    if (c.checks.empty()) throw ConfigError("no checks requested");
    for (const auto& name : c.checks) {
        if (std::find(known_checks().begin(), known_checks().end(), name) == known_checks().end()) {
            throw ConfigError("unknown check '" + name + "'");
        }
        if (name == "elliptic_limit" && c.rough_data) {
            throw ConfigError("elliptic_limit needs time-independent data, not \"rough\"");
        }
        if (name == "kernel_bounds" && c.kind == OperatorKind::Synthetic) {
            throw ConfigError("kernel_bounds has no published envelope for synthetic kernels");
        }
    }

    const Tolerances& t = c.tol;
    if (!(t.weyl >= 0.0)) throw ConfigError("tolerances.weyl must be nonnegative");
    for (double v : {t.weak_dual, t.spread_limit, t.decay, t.slope, t.submarkov, t.resolvent}) {
        if (!(std::isfinite(v) && v > 0.0)) throw ConfigError("tolerances must be positive and finite");
    }
    if (c.out.empty()) throw ConfigError("out must name a directory");
}

}  // namespace fracheat::cli
