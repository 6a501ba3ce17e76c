#include "config.hpp"

#include "branchtrace/builtins.hpp"
#include "branchtrace/errors.hpp"
#include "branchtrace/mcbvp.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace branchtrace::app {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorKind::Config, msg); }

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
        fail("config: '" + key + "' expects a finite number, got '" + v + "'");
    return out;
}

long long to_int(const std::string& key, const std::string& v) {
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        fail("config: '" + key + "' expects an integer, got '" + v + "'");
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    fail("config: '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(key, trim(item)));
    if (out.empty()) fail("config: '" + key + "' expects a comma-separated list");
    return out;
}

} // namespace

std::string RunConfig::builtin_name() const {
    const std::string prefix = "builtin:";
    return problem.rfind(prefix, 0) == 0 ? problem.substr(prefix.size()) : std::string{};
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = {
        "problem",   "m",          "mu",           "q",          "delta",          "gradient_threshold",
        "base_lambda", "start_u",  "side",         "h_init",     "h_min",          "h_max",
        "newton_tol", "newton_max_iter", "grow",   "shrink",     "grow_after",     "max_steps",
        "max_arclength", "lambda_min", "lambda_max", "norm_cap", "boundary_threshold", "output_dir",
        "verify",    "seed"};
    return keys;
}

RunConfig parse_config(std::istream& in) {
    std::map<std::string, std::string> kv;
    const std::set<std::string> known(config_keys().begin(), config_keys().end());
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) fail("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!known.count(key)) fail("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        if (value.empty()) fail("config line " + std::to_string(lineno) + ": empty value for '" + key + "'");
        if (!kv.emplace(key, value).second)
            fail("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    if (!kv.count("problem")) fail("config: missing required key 'problem'");

    RunConfig c;
    for (const auto& [k, v] : kv) {
        if (k == "problem") c.problem = v;
        else if (k == "m") c.m = to_int(k, v);
        else if (k == "mu") c.mu = to_double(k, v);
        else if (k == "q") c.q = to_double(k, v);
        else if (k == "delta") c.delta = to_double(k, v);
        else if (k == "gradient_threshold") c.gradient_threshold = to_double(k, v);
        else if (k == "base_lambda") c.base_lambda = to_double(k, v);
        else if (k == "start_u") c.start_u = to_list(k, v);
        else if (k == "side") c.side = v;
        else if (k == "h_init") c.step.h_init = to_double(k, v);
        else if (k == "h_min") c.step.h_min = to_double(k, v);
        else if (k == "h_max") c.step.h_max = to_double(k, v);
        else if (k == "newton_tol") c.step.newton_tol = to_double(k, v);
        else if (k == "newton_max_iter") c.step.newton_max_iter = static_cast<int>(to_int(k, v));
        else if (k == "grow") c.step.grow = to_double(k, v);
        else if (k == "shrink") c.step.shrink = to_double(k, v);
        else if (k == "grow_after") c.step.grow_after = static_cast<int>(to_int(k, v));
        else if (k == "max_steps") c.step.max_steps = static_cast<int>(to_int(k, v));
        else if (k == "max_arclength") c.step.max_arclength = to_double(k, v);
        else if (k == "lambda_min") c.lambda_min = to_double(k, v);
        else if (k == "lambda_max") c.lambda_max = to_double(k, v);
        else if (k == "norm_cap") c.norm_cap = to_double(k, v);
        else if (k == "boundary_threshold") c.boundary_threshold = to_double(k, v);
        else if (k == "output_dir") c.output_dir = v;
        else if (k == "verify") c.verify = to_bool(k, v);
        else if (k == "seed") c.seed = static_cast<int>(to_int(k, v));
    }
    validate(c);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("config: cannot read '" + path + "'");
    return parse_config(in);
}

void validate(const RunConfig& c) {
    if (c.is_mcbvp()) {
        if (c.m < 2) fail("config: m must be at least 2");
        if (!(c.q > 1.0)) fail("config: q must exceed 1");
        if (!(c.delta > 0.0 && c.delta < 1.0)) fail("config: delta must lie in (0,1)");
        const double sigma = mcbvp::principal_eigenvalue(c.m);
        if (!(c.mu > sigma))
            fail("config: mu must exceed the discrete principal eigenvalue " + std::to_string(sigma));
        if (!(c.gradient_threshold > 0.0)) fail("config: gradient_threshold must be positive");
        if (c.start_u) fail("config: start_u applies to builtin problems only");
    } else {
        const std::string name = c.builtin_name();
        const auto names = builtins::names();
        if (std::find(names.begin(), names.end(), name) == names.end())
            fail("config: unknown problem '" + c.problem + "' (expected mcbvp or builtin:<name>)");
        if (c.start_u && c.start_u->size() != 1) fail("config: start_u must have one entry for builtins");
    }
    if (c.side != "plus" && c.side != "minus" && c.side != "both")
        fail("config: side must be plus, minus or both");
    const auto& s = c.step;
    if (!(s.h_min > 0.0 && s.h_min <= s.h_init && s.h_init <= s.h_max))
        fail("config: need 0 < h_min <= h_init <= h_max");
    if (!(s.newton_tol > 0.0)) fail("config: newton_tol must be positive");
    if (s.newton_max_iter < 1) fail("config: newton_max_iter must be at least 1");
    if (!(s.grow > 1.0)) fail("config: grow must exceed 1");
    if (!(s.shrink > 0.0 && s.shrink < 1.0)) fail("config: shrink must lie in (0,1)");
    if (s.grow_after < 1) fail("config: grow_after must be at least 1");
    if (s.max_steps < 1) fail("config: max_steps must be at least 1");
    if (!(s.max_arclength > 0.0)) fail("config: max_arclength must be positive");
    if (c.lambda_min && c.lambda_max && !(*c.lambda_min < *c.lambda_max))
        fail("config: lambda_min must be below lambda_max");
    if (c.norm_cap && !(*c.norm_cap > 0.0)) fail("config: norm_cap must be positive");
    if (c.boundary_threshold && !(*c.boundary_threshold > 0.0))
        fail("config: boundary_threshold must be positive");
    if (c.output_dir.empty()) fail("config: output_dir must not be empty");
}

} // namespace branchtrace::app
