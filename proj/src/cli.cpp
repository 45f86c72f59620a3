#include "longgreeks/cli.hpp"

#include "longgreeks/errors.hpp"
#include "longgreeks/riccati.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace longgreeks::cli {

namespace {

[[noreturn]] void config_error(const std::string& msg) { raise(ErrorKind::ConfigError, msg); }

const std::set<std::string> kCommands = {"price", "greeks", "convergence", "density", "riccati", "selftest"};

void check_keys(const Json& obj, const std::string& where, const std::set<std::string>& allowed) {
    if (!obj.is_object()) config_error(where + " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) config_error("unknown key '" + where + "." + it.key() + "'");
    }
}

const Json* find(const Json& obj, const std::string& key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return nullptr;
    return &*it;
}

double number(const Json& obj, const std::string& where, const std::string& key, std::optional<double> fallback = {}) {
    const Json* v = find(obj, key);
    if (!v) {
        if (fallback) return *fallback;
        config_error("missing '" + where + "." + key + "'");
    }
    if (!v->is_number()) config_error("'" + where + "." + key + "' must be a number");
    return v->get<double>();
}

Vector vector_of(const Json& v, const std::string& where) {
    if (v.is_number()) return Vector::Constant(1, v.get<double>());
    if (!v.is_array() || v.empty()) config_error("'" + where + "' must be a non-empty array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) config_error("'" + where + "' must contain numbers");
        out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
}

Matrix matrix_of(const Json& v, const std::string& where) {
    if (v.is_number()) return Matrix::Constant(1, 1, v.get<double>());
    if (!v.is_array() || v.empty() || !v[0].is_array()) config_error("'" + where + "' must be an array of rows");
    const std::size_t rows = v.size(), cols = v[0].size();
    Matrix out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        if (!v[i].is_array() || v[i].size() != cols) config_error("'" + where + "' rows must have equal length");
        for (std::size_t j = 0; j < cols; ++j) {
            if (!v[i][j].is_number()) config_error("'" + where + "' must contain numbers");
            out(i, j) = v[i][j].get<double>();
        }
    }
    return out;
}

Json to_json(const Vector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Json to_json(const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        out.push_back(row);
    }
    return out;
}

Json parse_model(const Json& m, ModelSpec& spec) {
    check_keys(m, "model", {"kind", "params", "initial_state", "measure"});
    const Json* kind = find(m, "kind");
    if (!kind || !kind->is_string()) config_error("'model.kind' must be a string");
    const ModelKind k = parse_model_kind(kind->get<std::string>());
    const Json* params = find(m, "params");
    if (!params) config_error("missing 'model.params'");
    const std::string where = "model.params";
    Json echo = Json::object();
    switch (k) {
        case ModelKind::GBM: {
            check_keys(*params, where, {"mu", "sigma", "r"});
            GbmParams p{number(*params, where, "mu"), number(*params, where, "sigma"), number(*params, where, "r")};
            echo = {{"mu", p.mu}, {"sigma", p.sigma}, {"r", p.r}};
            spec.params = p;
            break;
        }
        case ModelKind::CIR: {
            check_keys(*params, where, {"theta", "a", "sigma"});
            CirParams p{number(*params, where, "theta"), number(*params, where, "a"), number(*params, where, "sigma")};
            echo = {{"theta", p.theta}, {"a", p.a}, {"sigma", p.sigma}};
            spec.params = p;
            break;
        }
        case ModelKind::QTSM: {
            check_keys(*params, where, {"b", "B", "sigma", "beta", "alpha", "Gamma"});
            QtsmParams p;
            auto req = [&](const char* key) -> const Json& {
                const Json* v = find(*params, key);
                if (!v) config_error("missing '" + where + "." + key + "'");
                return *v;
            };
            p.b = vector_of(req("b"), where + ".b");
            p.B = matrix_of(req("B"), where + ".B");
            p.sigma = matrix_of(req("sigma"), where + ".sigma");
            p.beta = number(*params, where, "beta", 0.0);
            const Json* alpha = find(*params, "alpha");
            p.alpha = alpha ? vector_of(*alpha, where + ".alpha") : Vector::Zero(p.b.size());
            p.gamma = matrix_of(req("Gamma"), where + ".Gamma");
            echo = {{"b", to_json(p.b)},     {"B", to_json(p.B)},         {"sigma", to_json(p.sigma)},
                    {"beta", p.beta},        {"alpha", to_json(p.alpha)}, {"Gamma", to_json(p.gamma)}};
            spec.params = p;
            break;
        }
        case ModelKind::Heston: {
            check_keys(*params, where, {"mu", "gamma", "beta", "delta", "rho"});
            HestonParams p{number(*params, where, "mu"),    number(*params, where, "gamma"),
                           number(*params, where, "beta"),  number(*params, where, "delta"),
                           number(*params, where, "rho"),   0.0};
            echo = {{"mu", p.mu}, {"gamma", p.gamma}, {"beta", p.beta}, {"delta", p.delta}, {"rho", p.rho}};
            spec.params = p;
            break;
        }
        case ModelKind::ThreeHalves: {
            check_keys(*params, where, {"theta", "a", "sigma", "r", "leverage", "alpha"});
            ThreeHalvesParams p{number(*params, where, "theta"),           number(*params, where, "a"),
                                number(*params, where, "sigma"),           number(*params, where, "r", 0.0),
                                number(*params, where, "leverage", 1.0),   number(*params, where, "alpha", 1.0)};
            echo = {{"theta", p.theta}, {"a", p.a}, {"sigma", p.sigma}, {"r", p.r}, {"leverage", p.leverage},
                    {"alpha", p.alpha}};
            spec.params = p;
            break;
        }
    }
    const Json* x0 = find(m, "initial_state");
    if (!x0) config_error("missing 'model.initial_state'");
    spec.initial_state = vector_of(*x0, "model.initial_state");
    spec.measure = Measure::Q;
    if (const Json* meas = find(m, "measure")) {
        if (*meas != "Q") config_error("'model.measure' must be \"Q\"; transformed dynamics are derived");
    }
    return {{"kind", std::string(model_kind_name(k))},
            {"params", echo},
            {"initial_state", to_json(spec.initial_state)},
            {"measure", "Q"}};
}

Json parse_payoff(const Json& p, PayoffSpec& out) {
    check_keys(p, "payoff", {"kind", "alpha", "strike", "center", "width", "height", "leverage"});
    const Json* kind = find(p, "kind");
    if (!kind || !kind->is_string()) config_error("'payoff.kind' must be a string");
    const PayoffKind k = parse_payoff_kind(kind->get<std::string>());
    const std::string w = "payoff";
    auto allow_only = [&](const std::set<std::string>& keys) {
        std::set<std::string> all = keys;
        all.insert("kind");
        check_keys(p, w, all);
    };
    Json echo = {{"kind", std::string(payoff_kind_name(k))}};
    switch (k) {
        case PayoffKind::Power:
            allow_only({"alpha"});
            out = PayoffSpec::power(number(p, w, "alpha"));
            echo["alpha"] = out.alpha;
            break;
        case PayoffKind::PowerCall:
            allow_only({"alpha", "strike"});
            out = PayoffSpec::power_call(number(p, w, "alpha"), number(p, w, "strike"));
            echo["alpha"] = out.alpha;
            echo["strike"] = out.strike;
            break;
        case PayoffKind::Bond:
            allow_only({});
            out = PayoffSpec::bond();
            break;
        case PayoffKind::Indicator:
        case PayoffKind::BoundedBump: {
            allow_only({"center", "width", "height"});
            const Json* c = find(p, "center");
            if (!c) config_error("missing 'payoff.center'");
            const Vector center = vector_of(*c, "payoff.center");
            const double width = number(p, w, "width"), height = number(p, w, "height", 1.0);
            out = k == PayoffKind::Indicator ? PayoffSpec::indicator(center, width, height)
                                             : PayoffSpec::bump(center, width, height);
            echo["center"] = to_json(center);
            echo["width"] = width;
            echo["height"] = height;
            break;
        }
        case PayoffKind::LETFUtility:
            allow_only({"alpha", "leverage"});
            out = PayoffSpec::letf_utility(number(p, w, "alpha"), number(p, w, "leverage"));
            echo["alpha"] = out.alpha;
            echo["leverage"] = out.leverage;
            break;
    }
    validate_payoff(out);
    return echo;
}

std::string default_file(const std::string& command, const char* ext) { return command + "." + ext; }

}  // namespace

// ---------------------------------------------------------------------------

Json load_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides) {
    Json doc = Json::object();
    if (path) {
        std::ifstream in(*path);
        if (!in) config_error("cannot read config file '" + *path + "'");
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            config_error(std::string("malformed JSON config: ") + e.what());
        }
        if (!doc.is_object()) config_error("config root must be an object");
    }
    for (const auto& item : overrides) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) config_error("override '" + item + "' is not key=value");
        const std::string key = item.substr(0, eq), text = item.substr(eq + 1);
        Json value;
        try {
            value = Json::parse(text);
        } catch (const nlohmann::json::exception&) {
            value = text;  // bare strings
        }
        Json* node = &doc;
        std::stringstream parts(key);
        std::string part;
        std::vector<std::string> path_parts;
        while (std::getline(parts, part, '.')) path_parts.push_back(part);
        for (std::size_t i = 0; i + 1 < path_parts.size(); ++i) {
            Json& next = (*node)[path_parts[i]];
            if (next.is_null()) next = Json::object();
            if (!next.is_object()) config_error("override '" + key + "' descends into a non-object");
            node = &next;
        }
        if (value.is_null()) {
            node->erase(path_parts.back());
        } else {
            (*node)[path_parts.back()] = value;
        }
    }
    if (const char* env = std::getenv("LONGGREEKS_SEED")) {
        try {
            std::size_t used = 0;
            const unsigned long long seed = std::stoull(env, &used);
            if (used != std::string(env).size()) throw std::invalid_argument("trailing");
            doc["mc"]["seed"] = seed;
        } catch (const std::exception&) {
            config_error("LONGGREEKS_SEED must be an unsigned integer");
        }
    }
    return doc;
}

ExperimentConfig parse_config(const Json& doc, const std::string& command) {
    if (!kCommands.count(command)) config_error("unknown command '" + command + "'");
    check_keys(doc, "config", {"model", "payoff", "mc", "grid", "task", "output"});
    ExperimentConfig cfg;
    Json resolved = Json::object();

    const bool needs_model = command == "price" || command == "greeks" || command == "convergence" ||
                             command == "density";
    if (const Json* m = find(doc, "model")) {
        resolved["model"] = parse_model(*m, cfg.model);
    } else if (needs_model) {
        config_error("missing 'model' block");
    }
    if (const Json* p = find(doc, "payoff")) {
        PayoffSpec payoff;
        resolved["payoff"] = parse_payoff(*p, payoff);
        cfg.payoff = payoff;
    } else if (command == "price" || command == "greeks" || command == "convergence") {
        config_error("missing 'payoff' block");
    }

    const Json mc = doc.value("mc", Json::object());
    check_keys(mc, "mc", {"n_paths", "seed", "scheme", "antithetic", "threads"});
    {
        const double n = number(mc, "mc", "n_paths", 10000.0);
        if (!(n >= 1.0) || n != std::floor(n) || n > 1e12) config_error("'mc.n_paths' must be a positive integer");
        cfg.mc.n_paths = static_cast<std::size_t>(n);
        if (const Json* s = find(mc, "seed")) {
            if (!s->is_number_unsigned()) config_error("'mc.seed' must be an unsigned integer");
            cfg.mc.seed = s->get<std::uint64_t>();
        }
        if (const Json* s = find(mc, "scheme")) {
            if (!s->is_string()) config_error("'mc.scheme' must be a string");
            cfg.mc.scheme = parse_scheme(s->get<std::string>());
        }
        if (const Json* a = find(mc, "antithetic")) {
            if (!a->is_boolean()) config_error("'mc.antithetic' must be a boolean");
            cfg.mc.antithetic = a->get<bool>();
        }
        if (const Json* t = find(mc, "threads")) {
            if (!t->is_number_integer() || t->get<long long>() < 0) config_error("'mc.threads' must be >= 0");
            cfg.mc.threads = t->get<int>();
        }
        resolved["mc"] = {{"n_paths", cfg.mc.n_paths},
                          {"seed", cfg.mc.seed},
                          {"scheme", cfg.mc.scheme ? Json(std::string(scheme_name(*cfg.mc.scheme))) : Json(nullptr)},
                          {"antithetic", cfg.mc.antithetic}};
    }

    const Json grid = doc.value("grid", Json::object());
    check_keys(grid, "grid", {"T", "T_grid", "steps_per_year"});
    cfg.T = number(grid, "grid", "T", 1.0);
    if (!(cfg.T > 0.0)) config_error("'grid.T' must be positive");
    if (const Json* g = find(grid, "T_grid")) {
        const Vector v = vector_of(*g, "grid.T_grid");
        cfg.T_grid.assign(v.data(), v.data() + v.size());
        for (std::size_t i = 0; i < cfg.T_grid.size(); ++i) {
            if (!(cfg.T_grid[i] > 0.0) || (i > 0 && !(cfg.T_grid[i] > cfg.T_grid[i - 1]))) {
                config_error("'grid.T_grid' must be positive and increasing");
            }
        }
    }
    cfg.steps_per_year = number(grid, "grid", "steps_per_year", 32.0);
    if (!(cfg.steps_per_year > 0.0)) config_error("'grid.steps_per_year' must be positive");
    resolved["grid"] = {{"T", cfg.T},
                        {"T_grid", cfg.T_grid.empty() ? Json(nullptr) : Json(cfg.T_grid)},
                        {"steps_per_year", cfg.steps_per_year}};

    const Json task = doc.value("task", Json::object());
    check_keys(task, "task", {"kind", "param", "method", "measure", "t", "r_min", "r_max", "points", "care", "fd"});
    if (const Json* k = find(task, "kind")) {
        if (*k != command) config_error("'task.kind' is '" + k->dump() + "' but the command is '" + command + "'");
    }
    Json rtask = {{"kind", command}};
    if (command == "greeks" || command == "convergence") {
        const Json* p = find(task, "param");
        if (!p || !p->is_string()) config_error("'task.param' must name a parameter");
        cfg.param = p->get<std::string>();
        const auto names = param_names(cfg.model);
        if (std::find(names.begin(), names.end(), cfg.param) == names.end()) {
            config_error("unknown parameter '" + cfg.param + "' for " + std::string(model_kind_name(cfg.model.kind())));
        }
        if (const Json* m = find(task, "method")) {
            if (!m->is_string()) config_error("'task.method' must be a string");
            cfg.method = parse_method(m->get<std::string>());
        }
        rtask["param"] = cfg.param;
        rtask["method"] = cfg.method ? Json(std::string(method_name(*cfg.method))) : Json(nullptr);
        const Json fd = task.value("fd", Json::object());
        check_keys(fd, "task.fd", {"h", "crn", "pricer", "richardson"});
        if (find(fd, "h")) cfg.fd.h = number(fd, "task.fd", "h");
        if (const Json* c = find(fd, "crn")) cfg.fd.crn = c->get<bool>();
        if (const Json* r = find(fd, "richardson")) cfg.fd.richardson = r->get<bool>();
        if (const Json* p2 = find(fd, "pricer")) {
            if (*p2 == "Q") cfg.fd.pricer = Pricer::Q;
            else if (*p2 == "P") cfg.fd.pricer = Pricer::P;
            else config_error("'task.fd.pricer' must be \"Q\" or \"P\"");
        }
        rtask["fd"] = {{"h", cfg.fd.h ? Json(*cfg.fd.h) : Json(nullptr)},
                       {"crn", cfg.fd.crn},
                       {"pricer", cfg.fd.pricer == Pricer::Q ? "Q" : "P"},
                       {"richardson", cfg.fd.richardson}};
    }
    if (command == "price" || command == "density") {
        if (const Json* m = find(task, "measure")) {
            if (!m->is_string()) config_error("'task.measure' must be a string");
            cfg.measure = m->get<std::string>();
        }
        const bool ok = cfg.measure == "Q" || cfg.measure == "P" || (command == "price" && cfg.measure == "both");
        if (!ok) config_error("'task.measure' must be Q, P" + std::string(command == "price" ? " or both" : ""));
        rtask["measure"] = cfg.measure;
    }
    if (command == "density") {
        if (cfg.model.kind() != ModelKind::CIR) config_error("density is available for the CIR model");
        if (const Json* t = find(task, "t")) {
            if (t->is_string() && (*t == "inf" || *t == "invariant")) {
                cfg.density_t.reset();
            } else {
                cfg.density_t = number(task, "task", "t");
            }
        } else {
            cfg.density_t = 1.0;
        }
        cfg.r_min = number(task, "task", "r_min", 0.0);
        cfg.r_max = number(task, "task", "r_max", 0.2);
        const double pts = number(task, "task", "points", 200.0);
        if (!(pts >= 2.0) || pts != std::floor(pts) || pts > 1e7) config_error("'task.points' must be an integer >= 2");
        cfg.points = static_cast<int>(pts);
        if (!(cfg.r_min >= 0.0) || !(cfg.r_max > cfg.r_min)) config_error("density grid needs 0 <= r_min < r_max");
        rtask["t"] = cfg.density_t ? Json(*cfg.density_t) : Json("inf");
        rtask["r_min"] = cfg.r_min;
        rtask["r_max"] = cfg.r_max;
        rtask["points"] = cfg.points;
    }
    if (command == "riccati") {
        const Json* care = find(task, "care");
        if (!care) config_error("missing 'task.care' with a, B and Gamma");
        check_keys(*care, "task.care", {"a", "B", "Gamma"});
        auto req = [&](const char* key) -> Matrix {
            const Json* v = find(*care, key);
            if (!v) config_error(std::string("missing 'task.care.") + key + "'");
            return matrix_of(*v, std::string("task.care.") + key);
        };
        cfg.care = CareProblem{req("a"), req("B"), req("Gamma")};
        rtask["care"] = {{"a", to_json(cfg.care->a)}, {"B", to_json(cfg.care->B)}, {"Gamma", to_json(cfg.care->gamma)}};
    }
    resolved["task"] = rtask;

    const Json output = doc.value("output", Json::object());
    check_keys(output, "output", {"csv_path", "json_path"});
    auto path = [&](const char* key, const char* ext) {
        const Json* v = find(output, key);
        if (!v) return default_file(command, ext);
        if (!v->is_string()) config_error(std::string("'output.") + key + "' must be a string");
        return v->get<std::string>();
    };
    cfg.csv_path = path("csv_path", "csv");
    cfg.json_path = path("json_path", "json");
    resolved["output"] = {{"csv_path", cfg.csv_path}, {"json_path", cfg.json_path}};

    cfg.resolved = resolved;
    return cfg;
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string CsvTable::str() const {
    auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
        std::string out = "\"";
        for (char c : s) {
            if (c == '"') out += '"';
            out += c;
        }
        return out + "\"";
    };
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += quote(cells[i]);
        }
        out += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return out;
}

// ---------------------------------------------------------------------------
// Tasks

namespace {

std::vector<double> horizons_of(const ExperimentConfig& cfg) {
    return cfg.T_grid.empty() ? std::vector<double>{cfg.T} : cfg.T_grid;
}

Json stabilization_json(const ValidatedModel& model, const PayoffSpec& payoff, const ExperimentConfig& cfg) {
    try {
        const Extraction ext = eigenpair(model, payoff);
        std::vector<double> hs = horizons_of(cfg);
        if (hs.size() < 2) hs = {0.5 * hs.front(), hs.front()};
        McConfig mc = cfg.mc;
        mc.n_paths = std::min<std::size_t>(mc.n_paths, 20000);
        const StabilizationDiagnostic d = stabilization_check(ext, payoff, hs, mc, static_cast<int>(cfg.steps_per_year));
        return {{"method", std::string(stabilization_method_name(d.method))},
                {"witness", d.witness},
                {"pass", d.pass},
                {"measured", d.measured},
                {"horizons", d.horizons},
                {"values", d.values},
                {"std_errors", d.std_errors}};
    } catch (const Error& e) {
        return {{"unavailable", e.kind_name()}, {"message", e.what()}};
    }
}

TaskResult price_task(const ExperimentConfig& cfg) {
    const ValidatedModel model = validate(cfg.model);
    TaskResult out;
    out.table.header = {"T", "measure", "estimate", "stderr", "n_paths", "scheme"};
    for (double T : horizons_of(cfg)) {
        const GridSpec grid = GridSpec::with_policy(T, cfg.steps_per_year);
        auto emit = [&](const char* measure, const Estimate& e) {
            out.table.rows.push_back({format_double(T), measure, format_double(e.value), format_double(e.std_error),
                                      std::to_string(e.n_paths), std::string(scheme_name(e.scheme))});
            out.results.push_back({{"T", T},
                                   {"measure", measure},
                                   {"estimate", e.value},
                                   {"stderr", e.std_error},
                                   {"n_paths", e.n_paths},
                                   {"scheme", std::string(scheme_name(e.scheme))}});
        };
        if (cfg.measure != "P") emit("Q", price_q(model, *cfg.payoff, grid, cfg.mc));
        if (cfg.measure != "Q") emit("P", price_p(model, *cfg.payoff, grid, cfg.mc));
    }
    out.diagnostics["stabilization"] = stabilization_json(model, *cfg.payoff, cfg);
    return out;
}

TaskResult slope_task(const ExperimentConfig& cfg, bool convergence) {
    const ValidatedModel model = validate(cfg.model);
    const PayoffSpec& payoff = *cfg.payoff;
    TaskResult out;
    const Method natural = default_method(model.spec(), cfg.param);
    const Method method = cfg.method.value_or(natural);
    if (method != Method::FD && method != natural) {
        raise(ErrorKind::InvalidParameter, std::string(method_name(method)) + " does not apply to '" + cfg.param +
                                               "'; use " + std::string(method_name(natural)) + " or FD");
    }
    const SensitivityLimit limit = sensitivity_limit(model, payoff, cfg.param);
    if (convergence) {
        out.table.header = {"T", "slope", "stderr", "limit", "abs_gap", "method"};
    } else {
        out.table.header = {"T", "param", "method", "kind", "value", "stderr", "limit", "lambda_term", "phi_term",
                            "expectation_term"};
    }
    const char* kind = limit.kind == LimitKind::PerYear ? "PerYear" : "Instant";
    Json richardson = Json::array();
    for (double T : horizons_of(cfg)) {
        const GridSpec grid = GridSpec::with_policy(T, cfg.steps_per_year);
        double value = 0.0, se = 0.0, lt = 0.0, pt = 0.0, et = 0.0;
        if (method == Method::FD) {
            const Estimate e = fd_sensitivity(model, payoff, cfg.param, grid, cfg.mc, cfg.fd);
            const double scale = limit.kind == LimitKind::PerYear ? 1.0 / T : 1.0;
            value = e.value * scale;
            se = e.std_error * scale;
            et = value;
            richardson.push_back({{"T", T},
                                  {"checked", cfg.fd.richardson},
                                  {"truncation_error", e.truncation_error * scale},
                                  {"roundoff_error", e.roundoff_error * scale}});
        } else {
            const SlopeTerms t = slope_at(model, payoff, cfg.param, grid, cfg.mc);
            value = t.value;
            se = t.std_error;
            lt = t.lambda_term;
            pt = t.phi_term;
            et = t.expectation_term;
        }
        const double gap = std::abs(value - limit.value);
        const std::string m(method_name(method));
        if (convergence) {
            out.table.rows.push_back({format_double(T), format_double(value), format_double(se),
                                      format_double(limit.value), format_double(gap), m});
        } else {
            out.table.rows.push_back({format_double(T), cfg.param, m, kind, format_double(value), format_double(se),
                                      format_double(limit.value), format_double(lt), format_double(pt),
                                      format_double(et)});
        }
        out.results.push_back({{"T", T},
                               {"param", cfg.param},
                               {"method", m},
                               {"kind", kind},
                               {"slope", value},
                               {"stderr", se},
                               {"limit", limit.value},
                               {"abs_gap", gap},
                               {"lambda_term", lt},
                               {"phi_term", pt},
                               {"expectation_term", et}});
    }
    if (!richardson.empty()) out.diagnostics["richardson"] = richardson;
    out.diagnostics["stabilization"] = stabilization_json(model, payoff, cfg);
    return out;
}

TaskResult density_task(const ExperimentConfig& cfg) {
    const ValidatedModel model = validate(cfg.model);
    TaskResult out;
    out.table.header = {"r", "density"};
    CirDensity d{model.params<CirParams>(), cfg.measure == "P" ? Measure::P : Measure::Q,
                 cfg.density_t.value_or(std::numeric_limits<double>::infinity()), model.initial_state()(0)};
    for (int i = 0; i < cfg.points; ++i) {
        const double r = cfg.r_min + (cfg.r_max - cfg.r_min) * i / (cfg.points - 1);
        const double g = r > 0.0 ? cir_density(d, r) : 0.0;
        out.table.rows.push_back({format_double(r), format_double(g)});
        out.results.push_back({{"r", r}, {"density", g}});
    }
    return out;
}

TaskResult riccati_task(const ExperimentConfig& cfg) {
    const CareSolution s = solve_care(*cfg.care);
    TaskResult out;
    Json eig = Json::array();
    for (Eigen::Index i = 0; i < s.closed_loop_eigenvalues.size(); ++i) {
        eig.push_back({s.closed_loop_eigenvalues(i).real(), s.closed_loop_eigenvalues(i).imag()});
    }
    out.stdout_json = {{"V", to_json(s.V)},
                       {"residual", s.residual_norm},
                       {"closed_loop", to_json(s.closed_loop)},
                       {"closed_loop_eigenvalues", eig},
                       {"stable", s.stable}};
    out.results.push_back(out.stdout_json);
    out.table.header = {"i", "j", "V"};
    for (Eigen::Index i = 0; i < s.V.rows(); ++i) {
        for (Eigen::Index j = 0; j < s.V.cols(); ++j) {
            out.table.rows.push_back({std::to_string(i), std::to_string(j), format_double(s.V(i, j))});
        }
    }
    return out;
}

}  // namespace

TaskResult run_task(const std::string& command, const ExperimentConfig& cfg) {
    if (command == "price") return price_task(cfg);
    if (command == "greeks") return slope_task(cfg, false);
    if (command == "convergence") return slope_task(cfg, true);
    if (command == "density") return density_task(cfg);
    if (command == "riccati") return riccati_task(cfg);
    config_error("command '" + command + "' has no task runner");
}

// ---------------------------------------------------------------------------

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) raise(ErrorKind::ConfigError, "cannot write '" + path.string() + "'");
    f << text;
}

std::filesystem::path resolve_path(const std::string& out_dir, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : std::filesystem::path(out_dir) / path;
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message, int code) {
    err << Json{{"error", kind}, {"message", message}, {"exit_code", code}}.dump() << "\n";
}

}  // namespace

int run(const RunOptions& opt, std::ostream& out, std::ostream& err) {
    const auto start = std::chrono::steady_clock::now();
    const double previous_bump = debug_lambda_bump();
    if (opt.debug_lambda_bump) set_debug_lambda_bump(*opt.debug_lambda_bump);
    struct Restore {
        double v;
        ~Restore() { set_debug_lambda_bump(v); }
    } restore{previous_bump};

    try {
        if (opt.command == "selftest") {
            Json doc = load_config(opt.config_path, opt.overrides);
            const std::uint64_t seed = doc.contains("mc") && doc["mc"].contains("seed") ? doc["mc"]["seed"].get<std::uint64_t>() : 0;
            const auto rows = selftest(seed, opt.threads.value_or(0));
            bool ok = true;
            char buf[256];
            std::snprintf(buf, sizeof(buf), "%-44s %-6s %s\n", "criterion", "result", "measured");
            out << buf;
            Json failed = Json::array();
            for (const auto& r : rows) {
                std::snprintf(buf, sizeof(buf), "%-44s %-6s %s\n", r.criterion.c_str(), r.pass ? "PASS" : "FAIL",
                              format_double(r.measured).c_str());
                out << buf;
                if (!r.pass) {
                    ok = false;
                    failed.push_back(r.criterion);
                }
            }
            if (!ok) {
                report_error(err, "SelftestFailure", "failed: " + failed.dump(), SelftestFailure);
                return SelftestFailure;
            }
            return Ok;
        }

        const Json doc = load_config(opt.config_path, opt.overrides);
        ExperimentConfig cfg = parse_config(doc, opt.command);
        if (opt.threads) cfg.mc.threads = *opt.threads;
        const TaskResult result = run_task(opt.command, cfg);

        const std::string csv = result.table.str();
        write_file(resolve_path(opt.out_dir, cfg.csv_path), csv);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        Json report = {{"config", cfg.resolved},
                       {"command", opt.command},
                       {"results", result.results},
                       {"diagnostics", result.diagnostics},
                       {"versions", {{"longgreeks", kVersion}, {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                                                          std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                                                          std::to_string(EIGEN_MINOR_VERSION)}}},
                       {"seed", cfg.mc.seed},
                       {"wall_time", wall}};
        write_file(resolve_path(opt.out_dir, cfg.json_path), report.dump(2) + "\n");
        if (!result.stdout_json.is_null()) {
            out << result.stdout_json.dump(2) << "\n";
        } else {
            out << csv;
        }
        return Ok;
    } catch (const Error& e) {
        const int code = is_validation_error(e.kind()) ? ValidationFailure : NumericalFailure;
        report_error(err, std::string(e.kind_name()), e.what(), code);
        return code;
    } catch (const std::exception& e) {
        report_error(err, "InternalError", e.what(), NumericalFailure);
        return NumericalFailure;
    }
}

}  // namespace longgreeks::cli
