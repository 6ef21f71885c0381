#include "fusebench/bench.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace fusebench {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& message) {
    throw ValidationError(message);
}

void check_known_keys(const json& object, const std::set<std::string>& known,
                      const std::string& where) {
    for (const auto& item : object.items()) {
        if (known.find(item.key()) == known.end()) {
            fail("unknown field '" + item.key() + "' in " + where);
        }
    }
}

double as_number(const json& value, const std::string& name) {
    if (!value.is_number()) {
        fail("field '" + name + "' must be a number");
    }
    return value.get<double>();
}

long as_integer(const json& value, const std::string& name) {
    if (value.is_number_integer() || value.is_number_unsigned()) {
        return value.get<long>();
    }
    if (value.is_number_float()) {
        const double d = value.get<double>();
        if (d == std::floor(d) && std::isfinite(d)) {
            return static_cast<long>(d);
        }
    }
    fail("field '" + name + "' must be an integer");
}

bool is_integer_param(const std::string& param) {
    return param == "k" || param == "mc_samples" || param == "trials" || param == "n_prior" ||
           param == "n_gen";
}

// Sets the swept field on a copy of the spec, validating the value.
void apply_sweep_value(SweepSpec& spec, const std::string& param, double value) {
    if (is_integer_param(param)) {
        if (value != std::floor(value) || !std::isfinite(value)) {
            fail("sweep value " + std::to_string(value) + " for '" + param +
                 "' must be an integer");
        }
    }
    if (param == "sigma2") {
        if (!(value > 0.0)) fail("sweep values for 'sigma2' must be positive");
        spec.sigma2 = value;
    } else if (param == "sigma0_2") {
        if (!(value > 0.0)) fail("sweep values for 'sigma0_2' must be positive");
        spec.sigma0_2 = value;
    } else if (param == "k") {
        if (value < 2) fail("sweep values for 'k' must be >= 2");
        spec.k = static_cast<int>(value);
    } else if (param == "mc_samples") {
        if (value < 1) fail("sweep values for 'mc_samples' must be >= 1");
        spec.mc_samples = static_cast<int>(value);
    } else if (param == "trials") {
        if (value < 1) fail("sweep values for 'trials' must be >= 1");
        spec.trials = static_cast<long>(value);
    } else if (param == "n_prior") {
        if (value < 1) fail("sweep values for 'n_prior' must be >= 1");
        spec.n_prior = static_cast<int>(value);
    } else if (param == "n_gen") {
        if (value < 1) fail("sweep values for 'n_gen' must be >= 1");
        spec.n_gen = static_cast<int>(value);
    } else {
        fail("unsupported sweep parameter '" + param + "'");
    }
}

std::string format_double(double value) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, result.ptr);
}

std::string row_to_csv(const ResultRow& row) {
    std::ostringstream out;
    out << row.model << ',' << row.k << ',' << row.m << ',' << format_double(row.sigma2) << ','
        << format_double(row.sigma0_2) << ',' << row.n_prior << ',' << row.mc_samples << ','
        << row.trials << ',' << row.seed << ',' << to_string(row.method) << ','
        << format_double(row.mse) << ',' << format_double(row.mse_stderr) << ','
        << format_double(row.nmse);
    return out.str();
}

} // namespace

SweepSpec parse_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("config parse failed: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ParseError("config must be a JSON object");
    }

    check_known_keys(doc,
                     {"model", "k", "m", "sigma2", "sigma0_2", "n_gen", "n_prior", "mc_samples",
                      "trials", "seed", "methods", "sweep"},
                     "config");

    SweepSpec spec;
    if (!doc.contains("model")) {
        fail("missing required field 'model'");
    }
    const long model = as_integer(doc["model"], "model");
    if (model != 1 && model != 2) {
        fail("field 'model' must be 1 or 2");
    }
    spec.model = static_cast<int>(model);

    if (!doc.contains("k")) {
        fail("missing required field 'k'");
    }
    const long k = as_integer(doc["k"], "k");
    if (k < 2) {
        fail("k must be >= 2");
    }
    spec.k = static_cast<int>(k);

    if (doc.contains("m")) {
        if (spec.model != 1) {
            fail("field 'm' applies to model 1 only (model 2 fixes m = 2)");
        }
        const long m = as_integer(doc["m"], "m");
        if (m < 1) {
            fail("m must be >= 1");
        }
        spec.m = static_cast<int>(m);
    }

    if (doc.contains("sigma2")) {
        spec.sigma2 = as_number(doc["sigma2"], "sigma2");
        if (!(spec.sigma2 > 0.0)) {
            fail("sigma2 must be positive");
        }
    }
    if (doc.contains("sigma0_2")) {
        if (spec.model != 2) {
            fail("field 'sigma0_2' applies to model 2 only");
        }
        spec.sigma0_2 = as_number(doc["sigma0_2"], "sigma0_2");
        if (!(spec.sigma0_2 > 0.0)) {
            fail("sigma0_2 must be positive");
        }
    }
    if (doc.contains("n_gen")) {
        if (spec.model != 1) {
            fail("field 'n_gen' applies to model 1 only");
        }
        const long n = as_integer(doc["n_gen"], "n_gen");
        if (n < 1) {
            fail("n_gen must be >= 1");
        }
        spec.n_gen = static_cast<int>(n);
    }
    if (doc.contains("n_prior")) {
        const long n = as_integer(doc["n_prior"], "n_prior");
        if (n < 1) {
            fail("n_prior must be >= 1");
        }
        spec.n_prior = static_cast<int>(n);
    }
    if (doc.contains("mc_samples")) {
        const long n = as_integer(doc["mc_samples"], "mc_samples");
        if (n < 1) {
            fail("mc_samples must be >= 1");
        }
        spec.mc_samples = static_cast<int>(n);
    }
    if (doc.contains("trials")) {
        spec.trials = as_integer(doc["trials"], "trials");
        if (spec.trials < 1) {
            fail("trials must be >= 1");
        }
    }
    if (doc.contains("seed")) {
        const json& s = doc["seed"];
        if (!(s.is_number_unsigned() || (s.is_number_integer() && s.get<long long>() >= 0))) {
            fail("seed must be a nonnegative integer");
        }
        spec.seed = s.get<std::uint64_t>();
    }
    if (doc.contains("methods")) {
        const json& methods = doc["methods"];
        if (!methods.is_array() || methods.empty()) {
            fail("methods must be a nonempty array of method names");
        }
        spec.methods = MethodSet{false, false, false};
        for (const auto& entry : methods) {
            if (!entry.is_string()) {
                fail("methods entries must be strings");
            }
            const std::string name = entry.get<std::string>();
            if (name == "optimal") {
                spec.methods.optimal = true;
            } else if (name == "bayesian_mc") {
                spec.methods.bayesian_mc = true;
            } else if (name == "fast_ci") {
                spec.methods.fast_ci = true;
            } else {
                fail("unknown method '" + name +
                     "' (expected optimal, bayesian_mc, or fast_ci)");
            }
        }
    }

    if (!doc.contains("sweep")) {
        fail("missing required field 'sweep'");
    }
    const json& sweep = doc["sweep"];
    if (!sweep.is_object()) {
        fail("sweep must be an object with 'param' and 'values'");
    }
    check_known_keys(sweep, {"param", "values"}, "sweep");
    if (!sweep.contains("param") || !sweep["param"].is_string()) {
        fail("sweep.param must be a string");
    }
    spec.sweep_param = sweep["param"].get<std::string>();
    const bool model1_param = spec.sweep_param == "n_gen";
    const bool model2_param = spec.sweep_param == "sigma0_2";
    const bool common_param = spec.sweep_param == "sigma2" || spec.sweep_param == "k" ||
                              spec.sweep_param == "mc_samples" || spec.sweep_param == "trials" ||
                              spec.sweep_param == "n_prior";
    if (!(common_param || (model1_param && spec.model == 1) ||
          (model2_param && spec.model == 2))) {
        fail("sweep parameter '" + spec.sweep_param + "' is not sweepable for model " +
             std::to_string(spec.model));
    }
    if (!sweep.contains("values") || !sweep["values"].is_array() || sweep["values"].empty()) {
        fail("sweep.values must be a nonempty array of numbers");
    }
    for (const auto& value : sweep["values"]) {
        spec.sweep_values.push_back(as_number(value, "sweep.values"));
    }

    materialize(spec);  // full per-point validation
    return spec;
}

std::vector<PointConfig> materialize(const SweepSpec& spec) {
    std::vector<PointConfig> points;
    points.reserve(spec.sweep_values.size());
    for (double value : spec.sweep_values) {
        SweepSpec point = spec;
        apply_sweep_value(point, spec.sweep_param, value);
        if (point.model == 1) {
            Model1Config cfg;
            cfg.k = point.k;
            cfg.m = point.m;
            cfg.sigma2 = point.sigma2;
            cfg.n_gen = point.n_gen > 0 ? point.n_gen : default_dof(point.k);
            cfg.n_prior = point.n_prior > 0 ? point.n_prior : default_dof(point.k);
            cfg.mc_samples = point.mc_samples;
            cfg.trials = point.trials;
            cfg.seed = point.seed;
            cfg.validate();
            points.emplace_back(cfg);
        } else {
            Model2Config cfg;
            cfg.k = point.k;
            cfg.sigma0_2 = point.sigma0_2;
            cfg.sigma2 = point.sigma2;
            cfg.n_prior = point.n_prior > 0 ? point.n_prior : default_dof(point.k);
            cfg.mc_samples = point.mc_samples;
            cfg.trials = point.trials;
            cfg.seed = point.seed;
            cfg.validate();
            points.emplace_back(cfg);
        }
    }
    return points;
}

std::vector<ResultRow> run_sweep(const SweepSpec& spec, int threads) {
    const std::vector<PointConfig> points = materialize(spec);
    std::vector<ResultRow> rows;
    for (std::size_t i = 0; i < points.size(); ++i) {
        AggregateResult result;
        try {
            result = std::visit(
                [&](const auto& cfg) { return run_experiment(cfg, spec.methods, threads); },
                points[i]);
        } catch (const std::exception& e) {
            std::ostringstream msg;
            msg << "sweep point " << i << " (" << spec.sweep_param << " = "
                << spec.sweep_values[i] << "): " << e.what();
            throw Error(msg.str());
        }
        for (FusionMethod method :
             {FusionMethod::optimal, FusionMethod::bayesian_mc, FusionMethod::fast_ci}) {
            if (!spec.methods.contains(method)) {
                continue;
            }
            const auto& stats = result.stats(method);
            ResultRow row;
            row.model = result.config.model;
            row.k = result.config.k;
            row.m = result.config.m;
            row.sigma2 = result.config.sigma2;
            row.sigma0_2 = result.config.sigma0_2;
            row.n_prior = result.config.n_prior;
            row.mc_samples = result.config.mc_samples;
            row.trials = result.config.trials;
            row.seed = result.config.seed;
            row.method = method;
            row.mse = stats->mse;
            row.mse_stderr = stats->mse_stderr;
            row.nmse = stats->nmse;
            rows.push_back(row);
        }
    }
    return rows;
}

void write_csv(const std::vector<ResultRow>& rows, const std::string& path) {
    if (rows.empty()) {
        throw IoError("write_csv: refusing to write an empty row set");
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("write_csv: cannot open '" + path + "' for writing");
    }
    out << kCsvHeader << '\n';
    for (const auto& row : rows) {
        out << row_to_csv(row) << '\n';
    }
    out.flush();
    if (!out) {
        throw IoError("write_csv: write to '" + path + "' failed");
    }
}

std::string format_table(const std::vector<ResultRow>& rows) {
    const std::vector<std::string> header{"model", "k",      "m",    "sigma2", "sigma0_2",
                                          "n_prior", "mc",   "trials", "method", "mse",
                                          "stderr", "nmse"};
    std::vector<std::vector<std::string>> cells;
    cells.push_back(header);
    auto compact = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        return std::string(buf);
    };
    for (const auto& row : rows) {
        cells.push_back({std::to_string(row.model), std::to_string(row.k), std::to_string(row.m),
                         compact(row.sigma2), compact(row.sigma0_2), std::to_string(row.n_prior),
                         std::to_string(row.mc_samples), std::to_string(row.trials),
                         to_string(row.method), compact(row.mse), compact(row.mse_stderr),
                         compact(row.nmse)});
    }
    std::vector<std::size_t> width(header.size(), 0);
    for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            width[c] = std::max(width[c], line[c].size());
        }
    }
    std::ostringstream out;
    for (const auto& line : cells) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            out << (c == 0 ? "" : "  ");
            out << line[c] << std::string(width[c] - line[c].size(), ' ');
        }
        out << '\n';
    }
    return out.str();
}

} // namespace fusebench
