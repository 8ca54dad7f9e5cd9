#include "finsler/cli.hpp"

#include "finsler/characters.hpp"
#include "finsler/curvature.hpp"
#include "finsler/gallery.hpp"
#include "finsler/spray.hpp"
#include "finsler/surface.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>

namespace finsler::cli {

namespace {

constexpr double kPi = std::numbers::pi;

enum class Type { number, integer, string, numbers, integers };

struct FieldSpec {
    std::string name;
    Type type;
    std::string help;
    std::vector<std::string> choices = {};
};

const std::vector<FieldSpec>& fields()
{
    static const std::vector<FieldSpec> all = {
        {"metric", Type::string, "metric family",
         {"quadric", "round-sphere", "hilbert-ball", "hilbert-superellipse", "flat"}},
        {"p", Type::numbers, "quadric phases p1,...,p_{n+1}"},
        {"dim", Type::integer, "chart dimension (ignored for quadric)"},
        {"chart", Type::string, "sphere chart", {"gnomonic", "stereographic"}},
        {"samples", Type::integer, "number of samples"},
        {"seed", Type::integer, "random seed"},
        {"c", Type::number, "expected flag curvature"},
        {"length", Type::number, "integration length"},
        {"step", Type::number, "integration step"},
        {"x0", Type::numbers, "initial chart point"},
        {"y0", Type::numbers, "initial direction (normalized to unit speed)"},
        {"h", Type::numbers, "Zoll profile coefficients c_k of (1-t^2) sum c_k t^(2k+1)"},
        {"surface", Type::string, "surface data", {"zoll-derived", "zoll", "round"}},
        {"grid", Type::integer, "grid size"},
        {"grids", Type::integers, "grid sizes for the convergence study"},
        {"u0", Type::number, "initial u"},
        {"v0", Type::number, "initial v"},
        {"heading", Type::number, "initial heading against e1 = d_u/sqrt(E)"},
        {"n", Type::integer, "dimension parameter n"},
        {"n_max", Type::integer, "largest n for the identity check"},
        {"i_offset", Type::number, "offset added to I in the residual bracket"},
        {"body", Type::string, "convex body", {"ball", "superellipse"}},
        {"expect", Type::string, "expected behaviour", {"reversible", "irreversible"}},
        {"out", Type::string, "output path, - for standard output"},
        {"format", Type::string, "output format", {"json", "csv", "text"}},
    };
    return all;
}

const FieldSpec& field(const std::string& name)
{
    for (const auto& f : fields()) {
        if (f.name == name) return f;
    }
    throw std::logic_error("unknown field " + name);
}

struct CommandSpec {
    std::string name;
    std::string help;
    Json defaults;                      ///< fields read by the command
    std::vector<std::string> optional;  ///< fields read when present
    std::vector<std::string> required;  ///< fields without a default
    std::vector<std::string> tolerances;
    std::vector<std::string> formats = {"json"};
};

const std::vector<CommandSpec>& commands()
{
    static const std::vector<CommandSpec> all = {
        {"curvature-certify",
         "sample flag curvature of a metric",
         {{"metric", "quadric"}, {"p", {0.4, 0.9}}, {"dim", 2}, {"chart", "gnomonic"}, {"samples", 200}},
         {"c"},
         {"seed"},
         {"max_abs_dev", "mean_abs_dev", "stddev"}},
        {"geodesic-trace",
         "integrate a unit-speed geodesic and report closure and planarity",
         {{"metric", "quadric"}, {"p", {0.4, 0.9}}, {"dim", 2}, {"chart", "stereographic"}, {"step", 1e-3}},
         {"length", "x0", "y0"},
         {},
         {"closure_defect", "planarity_defect"},
         {"json", "csv"}},
        {"quadric-eval",
         "compare the closed-form quadric norm with the Newton oracle",
         {{"p", {0.4, 0.9}}, {"samples", 1000}},
         {},
         {"seed"},
         {"max_rel_diff"}},
        {"hilbert-eval",
         "flag curvature, Cartan tensor and reversibility of a Hilbert metric",
         {{"body", "ball"}, {"dim", 2}, {"samples", 200}},
         {},
         {"seed"},
         {"mean_dev", "stddev", "cartan_norm_min", "reversibility"}},
        {"zoll-check",
         "Zoll surface of revolution and its constant flag curvature data",
         {{"h", {0.2}}, {"grid", 128}, {"step", 1e-3}, {"u0", kPi / 2}, {"v0", 0.0}, {"heading", 0.7}},
         {},
         {},
         {"magnetic_residual", "coclosed_residual", "closure_defect", "hausdorff"}},
        {"beta-geodesic",
         "integrate a beta-geodesic",
         {{"surface", "zoll-derived"},
          {"h", {0.2}},
          {"step", 1e-3},
          {"u0", kPi / 2},
          {"v0", 0.0},
          {"heading", 0.7}},
         {"length"},
         {},
         {"closure_defect", "hausdorff"},
         {"json", "csv"}},
        {"structure-residual",
         "frame-bundle structure equation residuals under grid refinement",
         {{"surface", "zoll-derived"}, {"h", {0.2}}, {"grids", {32, 64, 128}}, {"i_offset", 0.0}},
         {},
         {},
         {"residual", "observed_order"}},
        {"cartan-characters",
         "Cartan characters and the involutivity identities",
         {{"n", 2}, {"n_max", 12}},
         {},
         {},
         {},
         {"json", "text"}},
        {"reversibility",
         "max relative difference between F(x,-y) and F(x,y)",
         {{"metric", "quadric"}, {"p", {0.4, 0.9}}, {"dim", 2}, {"chart", "gnomonic"}, {"samples", 200}},
         {"expect"},
         {"seed"},
         {"reversible", "irreversible"}},
    };
    return all;
}

const CommandSpec* find_command(const std::string& name)
{
    for (const auto& c : commands()) {
        if (c.name == name) return &c;
    }
    return nullptr;
}

std::string flag_name(const std::string& field) {
    std::string out = "--" + field;
    for (auto& ch : out) {
        if (ch == '_') ch = '-';
    }
    return out;
}

double parse_double(const std::string& text, const std::string& path)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size() || !std::isfinite(v)) {
        throw UsageError(path + ": '" + text + "' is not a finite number");
    }
    return v;
}

long long parse_integer(const std::string& text, const std::string& path)
{
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(text, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != text.size()) throw UsageError(path + ": '" + text + "' is not an integer");
    return v;
}

std::vector<std::string> split(const std::string& text)
{
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

Json parse_flag(const FieldSpec& f, const std::string& text)
{
    const std::string path = flag_name(f.name);
    switch (f.type) {
    case Type::number: return parse_double(text, path);
    case Type::integer: return parse_integer(text, path);
    case Type::string: return text;
    case Type::numbers: {
        Json arr = Json::array();
        for (const auto& s : split(text)) arr.push_back(parse_double(s, path));
        return arr;
    }
    case Type::integers: {
        Json arr = Json::array();
        for (const auto& s : split(text)) arr.push_back(parse_integer(s, path));
        return arr;
    }
    }
    return {};
}

void check_type(const FieldSpec& f, const Json& v)
{
    auto fail = [&](const std::string& path, const std::string& what) { throw UsageError(path + ": " + what); };
    switch (f.type) {
    case Type::number:
        if (!v.is_number()) fail(f.name, "expected a number");
        break;
    case Type::integer:
        if (!v.is_number_integer()) fail(f.name, "expected an integer");
        break;
    case Type::string:
        if (!v.is_string()) fail(f.name, "expected a string");
        if (!f.choices.empty()) {
            const auto s = v.get<std::string>();
            if (std::find(f.choices.begin(), f.choices.end(), s) == f.choices.end()) {
                std::string all;
                for (const auto& c : f.choices) all += (all.empty() ? "" : ", ") + c;
                fail(f.name, "'" + s + "' is not one of " + all);
            }
        }
        break;
    case Type::numbers:
    case Type::integers:
        if (!v.is_array() || v.empty()) fail(f.name, "expected a non-empty list");
        for (std::size_t i = 0; i < v.size(); ++i) {
            const bool ok = f.type == Type::numbers ? v[i].is_number() : v[i].is_number_integer();
            if (!ok) fail(f.name + "[" + std::to_string(i) + "]", f.type == Type::numbers ? "expected a number" : "expected an integer");
        }
        break;
    }
}

// Constraints that the modules would otherwise reject later.
void check_values(const RunConfig& cfg)
{
    auto require = [](bool ok, const std::string& path, const std::string& what) {
        if (!ok) throw UsageError(path + ": " + what);
    };
    const Json& v = cfg.values;
    if (v.contains("p")) {
        QuadricSpec spec{cfg.numbers("p")};
        try {
            spec.validate();
        } catch (const InvalidArgument& e) {
            throw UsageError(std::string("p: ") + e.what());
        }
    }
    if (v.contains("samples")) require(cfg.integer("samples") >= 1, "samples", "must be at least 1");
    if (v.contains("seed")) require(cfg.integer("seed") >= 0, "seed", "must be non-negative");
    if (v.contains("dim")) require(cfg.integer("dim") >= 1 && cfg.integer("dim") <= 16, "dim", "must lie in [1, 16]");
    if (v.contains("step")) require(cfg.number("step") > 0.0, "step", "must be positive");
    if (v.contains("length")) require(cfg.number("length") > 0.0, "length", "must be positive");
    if (v.contains("grid")) require(cfg.integer("grid") >= 16, "grid", "must be at least 16");
    if (v.contains("grids")) {
        const auto g = cfg.integers("grids");
        for (std::size_t i = 0; i < g.size(); ++i) {
            require(g[i] >= 16, "grids[" + std::to_string(i) + "]", "must be at least 16");
            if (i > 0) require(g[i] > g[i - 1], "grids[" + std::to_string(i) + "]", "grids must increase");
        }
    }
    if (v.contains("n")) require(cfg.integer("n") >= 2 && cfg.integer("n") <= 40, "n", "must lie in [2, 40]");
    if (v.contains("n_max")) {
        require(cfg.integer("n_max") >= 2 && cfg.integer("n_max") <= 40, "n_max", "must lie in [2, 40]");
    }
    if (v.contains("metric") && cfg.string("metric") == "round-sphere") {
        require(cfg.integer("dim") >= 2, "dim", "round sphere needs chart dimension >= 2");
    }
    const auto* cmd = find_command(cfg.subcommand);
    const auto fmt = cfg.string("format");
    require(std::find(cmd->formats.begin(), cmd->formats.end(), fmt) != cmd->formats.end(), "format",
            "'" + fmt + "' is not supported by " + cfg.subcommand);
    for (const auto& [name, value] : v["tolerances"].items()) {
        require(std::find(cmd->tolerances.begin(), cmd->tolerances.end(), name) != cmd->tolerances.end(),
                "tolerances." + name, "unknown tolerance for " + cfg.subcommand);
        require(value.is_number() && value.get<double>() > 0.0, "tolerances." + name, "expected a positive number");
    }
}

} // namespace

// ---------------------------------------------------------------------------
// RunConfig
// ---------------------------------------------------------------------------

bool RunConfig::has(const std::string& key) const { return values.contains(key) && !values[key].is_null(); }

double RunConfig::number(const std::string& key) const { return values.at(key).get<double>(); }

long long RunConfig::integer(const std::string& key) const { return values.at(key).get<long long>(); }

std::string RunConfig::string(const std::string& key) const { return values.at(key).get<std::string>(); }

std::vector<double> RunConfig::numbers(const std::string& key) const
{
    return values.at(key).get<std::vector<double>>();
}

std::vector<long long> RunConfig::integers(const std::string& key) const
{
    return values.at(key).get<std::vector<long long>>();
}

double RunConfig::tolerance(const std::string& name, double fallback) const
{
    const Json& t = values.at("tolerances");
    return t.contains(name) ? t[name].get<double>() : fallback;
}

std::vector<std::string> subcommands()
{
    std::vector<std::string> out;
    for (const auto& c : commands()) out.push_back(c.name);
    return out;
}

RunConfig config_from_json(const std::string& subcommand, const Json& object)
{
    const CommandSpec* cmd = find_command(subcommand);
    if (!cmd) throw UsageError("unknown subcommand '" + subcommand + "'");
    if (!object.is_object()) throw UsageError("config: expected a JSON object");

    RunConfig cfg;
    cfg.subcommand = subcommand;
    cfg.values = cmd->defaults;
    cfg.values["out"] = "-";
    cfg.values["format"] = "json";
    cfg.values["tolerances"] = Json::object();

    auto allowed = [&](const std::string& key) {
        if (key == "out" || key == "format" || key == "tolerances") return true;
        if (cmd->defaults.contains(key)) return true;
        auto in = [&](const std::vector<std::string>& v) { return std::find(v.begin(), v.end(), key) != v.end(); };
        return in(cmd->optional) || in(cmd->required);
    };
    for (const auto& [key, value] : object.items()) {
        if (key == "subcommand") {
            if (!value.is_string() || value.get<std::string>() != subcommand) {
                throw UsageError("subcommand: config file is for '" + value.dump() + "', not '" + subcommand + "'");
            }
            continue;
        }
        if (!allowed(key)) throw UsageError(key + ": unknown field for " + subcommand);
        if (key == "tolerances") {
            if (!value.is_object()) throw UsageError("tolerances: expected an object");
            for (const auto& [name, tol] : value.items()) cfg.values["tolerances"][name] = tol;
            continue;
        }
        check_type(field(key), value);
        cfg.values[key] = value;
    }
    for (const auto& key : cmd->required) {
        if (!cfg.has(key)) throw UsageError(key + ": required for " + subcommand);
    }
    check_values(cfg);
    return cfg;
}

namespace {

struct ParsedArgs {
    std::string subcommand;
    Json overlay = Json::object();
    std::string config_path;
};

std::string synopsis()
{
    std::ostringstream os;
    os << "usage: finsler <subcommand> [options]\n\nsubcommands:\n";
    for (const auto& c : commands()) os << "  " << std::left << std::setw(20) << c.name << c.help << "\n";
    os << "\nrun 'finsler <subcommand> --help' for the options of one subcommand\n";
    return os.str();
}

std::string command_help(const CommandSpec& cmd)
{
    std::ostringstream os;
    os << "usage: finsler " << cmd.name << " [options]\n\n" << cmd.help << "\n\noptions:\n";
    auto line = [&](const std::string& key, const std::string& note) {
        std::string choices;
        for (const auto& c : field(key).choices) choices += (choices.empty() ? ": " : "|") + c;
        os << "  " << std::left << std::setw(16) << flag_name(key) << field(key).help << choices << note << "\n";
    };
    for (const auto& [k, v] : cmd.defaults.items()) line(k, " (default " + v.dump() + ")");
    for (const auto& k : cmd.required) line(k, " (required)");
    for (const auto& k : cmd.optional) line(k, "");
    line("out", " (default \"-\")");
    std::string formats;
    for (const auto& f : cmd.formats) formats += (formats.empty() ? "" : "|") + f;
    os << "  " << std::left << std::setw(16) << "--format" << formats << " (default json)\n";
    os << "  " << std::left << std::setw(16) << "--config" << "JSON config file (flags override it)\n";
    if (!cmd.tolerances.empty()) {
        std::string names;
        for (const auto& t : cmd.tolerances) names += (names.empty() ? "" : ", ") + t;
        os << "  " << std::left << std::setw(16) << "--tol" << "NAME=VALUE tolerance override; names: " << names
           << "\n";
    }
    return os.str();
}

} // namespace

RunConfig load_config(const std::vector<std::string>& args)
{
    CLI::App app{"Finsler geometry toolkit", "finsler"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "print this help");
    std::map<std::string, std::map<std::string, std::string>> text;
    std::map<std::string, std::map<std::string, CLI::Option*>> opts;
    std::map<std::string, std::string> config_paths;
    std::map<std::string, std::vector<std::string>> tol_args;
    for (const auto& cmd : commands()) {
        auto* sub = app.add_subcommand(cmd.name, cmd.help);
        sub->set_help_flag("--help", "print the options of this subcommand");
        std::vector<std::string> keys;
        for (const auto& [k, _] : cmd.defaults.items()) keys.push_back(k);
        keys.insert(keys.end(), cmd.optional.begin(), cmd.optional.end());
        keys.insert(keys.end(), cmd.required.begin(), cmd.required.end());
        keys.push_back("out");
        keys.push_back("format");
        for (const auto& k : keys) {
            opts[cmd.name][k] = sub->add_option(flag_name(k), text[cmd.name][k], field(k).help);
        }
        sub->add_option("--config", config_paths[cmd.name], "JSON config file (flags override it)");
        if (!cmd.tolerances.empty()) {
            sub->add_option("--tol", tol_args[cmd.name], "tolerance override NAME=VALUE (repeatable)");
        }
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed); // throws CLI::ParseError

    const std::string name = app.get_subcommands().front()->get_name();
    Json merged = Json::object();
    if (!config_paths[name].empty()) {
        std::ifstream in(config_paths[name]);
        if (!in) throw UsageError("--config: cannot open '" + config_paths[name] + "'");
        try {
            merged = Json::parse(in);
        } catch (const Json::parse_error& e) {
            throw UsageError("--config: invalid JSON: " + std::string(e.what()));
        }
        if (!merged.is_object()) throw UsageError("config: expected a JSON object");
    }
    for (const auto& [k, opt] : opts[name]) {
        if (opt->count() > 0) merged[k] = parse_flag(field(k), text[name][k]);
    }
    for (const auto& t : tol_args[name]) {
        const auto eq = t.find('=');
        if (eq == std::string::npos) throw UsageError("--tol: expected NAME=VALUE, got '" + t + "'");
        if (!merged.contains("tolerances")) merged["tolerances"] = Json::object();
        merged["tolerances"][t.substr(0, eq)] = parse_double(t.substr(eq + 1), "--tol " + t.substr(0, eq));
    }
    return config_from_json(name, merged);
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

namespace {

struct Verdicts {
    Json json = Json::object();
    bool pass = true;

    void below(const std::string& name, double value, double tol)
    {
        add(name, value, tol, "<", value < tol);
    }
    void above(const std::string& name, double value, double tol)
    {
        add(name, value, tol, ">", value > tol);
    }
    void check(const std::string& name, bool ok)
    {
        json[name] = {{"pass", ok}};
        pass = pass && ok;
    }

private:
    void add(const std::string& name, double value, double tol, const char* rel, bool ok)
    {
        json[name] = {{"value", value}, {"threshold", tol}, {"relation", rel}, {"pass", ok}};
        pass = pass && ok;
    }
};

struct Outcome {
    Json payload = Json::object();
    Verdicts verdicts;
};

Json to_json(const Vec& v)
{
    Json arr = Json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

struct BuiltMetric {
    MetricOracle oracle;
    std::function<Vec(const Vec&)> embed;
    bool sphere = false;
};

BuiltMetric build_metric(const RunConfig& cfg)
{
    const std::string kind = cfg.string("metric");
    const auto dim = static_cast<int>(cfg.integer("dim"));
    const ChartKind chart = cfg.string("chart") == "stereographic" ? ChartKind::stereographic : ChartKind::gnomonic;
    auto homogeneous = [](const Vec& x) {
        Vec out(x.size() + 1);
        out << 1.0, x;
        return out;
    };
    if (kind == "quadric") {
        const QuadricSpec spec{cfg.numbers("p")};
        const SphereChart sc(spec.n(), chart);
        return {make_quadric_metric(spec, chart), [sc](const Vec& x) { return sc.point(x); }, true};
    }
    if (kind == "round-sphere") {
        const SphereChart sc(dim - 1, chart);
        return {make_round_sphere(dim - 1, chart), [sc](const Vec& x) { return sc.point(x); }, true};
    }
    if (kind == "flat") return {make_flat(dim), homogeneous, false};
    const auto body = kind == "hilbert-ball" ? ConvexBodySpec::Kind::ball : ConvexBodySpec::Kind::superellipse;
    return {make_hilbert_metric({body, dim}), homogeneous, false};
}

Json report_json(const CfcReport& r)
{
    return {{"c_estimate", r.c_estimate},   {"reference", r.reference},       {"max_abs_dev", r.max_abs_dev},
            {"mean_abs_dev", r.mean_abs_dev}, {"stddev", r.stddev},           {"sample_count", r.sample_count},
            {"failures", r.failures.size()}};
}

Outcome curvature_certify(const RunConfig& cfg)
{
    const BuiltMetric m = build_metric(cfg);
    std::optional<double> c;
    if (cfg.has("c")) c = cfg.number("c");
    const auto report = cfc_certify(m.oracle, make_flag_sampler(m.oracle, default_region(m.oracle)),
                                    static_cast<std::size_t>(cfg.integer("samples")),
                                    static_cast<std::uint64_t>(cfg.integer("seed")), c);
    Outcome o;
    o.payload = report_json(report);
    o.payload["metric"] = m.oracle.name();
    o.verdicts.check("no_failures", report.failures.empty());
    if (c) {
        o.verdicts.below("max_abs_dev", report.max_abs_dev, cfg.tolerance("max_abs_dev", 5e-3));
        o.verdicts.below("mean_abs_dev", report.mean_abs_dev, cfg.tolerance("mean_abs_dev", 5e-4));
    } else {
        o.verdicts.below("stddev", report.stddev, cfg.tolerance("stddev", 1e-3));
    }
    return o;
}

std::string trajectory_csv(const Trajectory& t)
{
    std::ostringstream os;
    os << std::setprecision(17);
    const long m = t.x0.size();
    os << "s";
    for (long i = 1; i <= m; ++i) os << ",u" << i;
    for (long i = 1; i <= m; ++i) os << ",y" << i;
    os << "\n";
    for (const auto& s : t.samples) {
        os << s.s;
        for (long i = 0; i < m; ++i) os << "," << s.x[i];
        for (long i = 0; i < m; ++i) os << "," << s.y[i];
        os << "\n";
    }
    return os.str();
}

Outcome geodesic_trace(const RunConfig& cfg, std::string* csv)
{
    const BuiltMetric m = build_metric(cfg);
    const int dim = m.oracle.dim();
    Vec x0 = Vec::Zero(dim), y0 = Vec::Zero(dim);
    if (m.sphere && cfg.string("chart") == "stereographic") x0[0] = 1.0;
    y0[dim > 1 ? 1 : 0] = 1.0;
    auto read = [&](const std::string& key, Vec& v) {
        if (!cfg.has(key)) return;
        const auto vals = cfg.numbers(key);
        if (static_cast<int>(vals.size()) != dim) {
            throw UsageError(key + ": expected " + std::to_string(dim) + " components");
        }
        v = Eigen::Map<const Vec>(vals.data(), dim);
    };
    read("x0", x0);
    read("y0", y0);
    if (!m.oracle.contains(x0)) throw UsageError("x0: outside the chart domain");
    if (y0.norm() == 0.0) throw UsageError("y0: must be non-zero");
    y0 = normalize(m.oracle, x0, y0);
    const double length = cfg.has("length") ? cfg.number("length") : (m.sphere ? 2.0 * kPi : 1.0);
    const auto traj = integrate_geodesic(m.oracle, x0, y0, length, cfg.number("step"));
    const auto& last = traj.samples.back();
    Vec d(2 * dim);
    d << last.x - x0, last.y - y0;
    const double closure = d.norm();
    const double planarity = planarity_defect(traj, m.embed);

    Outcome o;
    o.payload = {{"metric", m.oracle.name()},
                 {"x0", to_json(x0)},
                 {"y0", to_json(y0)},
                 {"length", length},
                 {"step", traj.step},
                 {"samples", traj.samples.size()},
                 {"truncated", traj.truncated},
                 {"max_drift", traj.max_drift},
                 {"closure_defect", closure},
                 {"planarity_defect", planarity},
                 {"final_x", to_json(last.x)},
                 {"final_y", to_json(last.y)}};
    o.verdicts.check("not_truncated", !traj.truncated);
    if (m.sphere && !cfg.has("length")) o.verdicts.below("closure_defect", closure, cfg.tolerance("closure_defect", 1e-4));
    o.verdicts.below("planarity_defect", planarity, cfg.tolerance("planarity_defect", 1e-6));
    if (csv) *csv = trajectory_csv(traj);
    return o;
}

Outcome quadric_eval(const RunConfig& cfg)
{
    const QuadricSpec spec{cfg.numbers("p")};
    const int a = spec.n() + 2;
    Rng rng(static_cast<std::uint64_t>(cfg.integer("seed")));
    std::normal_distribution<double> normal;
    double worst = 0.0, sum_f = 0.0;
    int max_iter = 0;
    const auto samples = cfg.integer("samples");
    for (long long i = 0; i < samples; ++i) {
        Vec v(a), y(a);
        for (int k = 0; k < a; ++k) v[k] = normal(rng);
        for (int k = 0; k < a; ++k) y[k] = normal(rng);
        v.normalize();
        y -= y.dot(v) * v;
        const double fc = quadric_F_closed(spec, v, y);
        const auto fn = quadric_F_newton(spec, v, y);
        worst = std::max(worst, std::abs(fc - fn.F) / fn.F);
        max_iter = std::max(max_iter, fn.iterations);
        sum_f += fc;
    }
    Outcome o;
    o.payload = {{"n", spec.n()},
                 {"samples", samples},
                 {"max_rel_diff", worst},
                 {"max_newton_iterations", max_iter},
                 {"mean_F", sum_f / static_cast<double>(samples)}};
    o.verdicts.below("max_rel_diff", worst, cfg.tolerance("max_rel_diff", 1e-9));
    return o;
}

Outcome hilbert_eval(const RunConfig& cfg)
{
    const bool ball = cfg.string("body") == "ball";
    const ConvexBodySpec body{ball ? ConvexBodySpec::Kind::ball : ConvexBodySpec::Kind::superellipse,
                              static_cast<int>(cfg.integer("dim"))};
    if (body.dim < 2) throw UsageError("dim: flag curvature needs dimension >= 2");
    const auto oracle = make_hilbert_metric(body);
    const auto seed = static_cast<std::uint64_t>(cfg.integer("seed"));
    const auto report = cfc_certify(oracle, make_flag_sampler(oracle, default_region(oracle)),
                                    static_cast<std::size_t>(cfg.integer("samples")), seed);
    Vec x(body.dim), y(body.dim);
    for (int i = 0; i < body.dim; ++i) {
        x[i] = 0.3 / (i + 1);
        y[i] = 0.7 - 0.4 * i / body.dim;
    }
    const double cartan = cartan_tensor(oracle, x, y).norm();
    const double rev = reversibility_defect(oracle, default_region(oracle), 200, seed);

    Outcome o;
    o.payload = report_json(report);
    o.payload["metric"] = oracle.name();
    o.payload["cartan_norm"] = cartan;
    o.payload["reversibility_defect"] = rev;
    o.verdicts.check("no_failures", report.failures.empty());
    o.verdicts.below("mean_dev", std::abs(report.c_estimate + 1.0), cfg.tolerance("mean_dev", 1e-3));
    o.verdicts.below("stddev", report.stddev, cfg.tolerance("stddev", ball ? 1e-4 : 1e-3));
    if (!ball) o.verdicts.above("cartan_norm_min", cartan, cfg.tolerance("cartan_norm_min", 1e-2));
    o.verdicts.below("reversibility", rev, cfg.tolerance("reversibility", 1e-10));
    return o;
}

SurfaceData zoll_surface(const RunConfig& cfg) { return make_zoll_revolution(ZollProfile::odd_factored(cfg.numbers("h"))); }

std::string magnetic_csv(const SurfaceData& s, const MagneticTrajectory& t)
{
    const FrameBundleCoframe frame(s);
    std::ostringstream os;
    os << std::setprecision(17) << "s,u1,u2,y1,y2\n";
    for (const auto& p : t.samples) {
        const auto b = frame.base(p.u, p.v);
        const double c = std::cos(p.chi), sn = std::sin(p.chi);
        const double du = c / b.A1 - sn * b.B1 / (b.A1 * b.B2);
        const double dv = sn / b.B2;
        os << p.s << "," << p.u << "," << p.v << "," << du << "," << dv << "\n";
    }
    return os.str();
}

Outcome zoll_check(const RunConfig& cfg)
{
    const SurfaceData z = zoll_surface(cfg);
    const SurfaceData data = zoll_to_cfc_data(z);
    const auto grid = static_cast<int>(cfg.integer("grid"));
    const double u0 = cfg.number("u0"), v0 = cfg.number("v0"), heading = cfg.number("heading");
    const double step = cfg.number("step");

    const Field K0 = gauss_curvature_field(z);
    double kmin = INFINITY, kmax = -INFINITY;
    for (int i = 1; i <= 64; ++i) {
        const double u = z.u_min + i * (z.u_max - z.u_min) / 65.0;
        const double k = K0(u, 0.0, 0).value();
        kmin = std::min(kmin, k);
        kmax = std::max(kmax, k);
    }
    const double mag = magnetic_residual(data, grid);
    const double cocl = coclosed_residual(data, grid);
    const auto ref = integrate_beta_geodesic(z, u0, v0, heading, 2.0 * kPi, step);
    const double closure = closure_defect(ref);
    const double L = conformal_length(ref, K0);
    const auto beta = integrate_beta_geodesic(data, u0, v0, heading, L, step);
    const double haus = hausdorff_distance(ref, beta);

    Outcome o;
    o.payload = {{"h", cfg.numbers("h")},
                 {"K0_min", kmin},
                 {"K0_max", kmax},
                 {"magnetic_residual", mag},
                 {"coclosed_residual", cocl},
                 {"closure_defect", closure},
                 {"reference_truncated", ref.truncated},
                 {"beta_length", L},
                 {"beta_truncated", beta.truncated},
                 {"hausdorff", haus},
                 {"provenance", to_string(data.provenance)}};
    o.verdicts.check("not_truncated", !ref.truncated && !beta.truncated);
    o.verdicts.below("magnetic_residual", mag, cfg.tolerance("magnetic_residual", 1e-5));
    o.verdicts.below("coclosed_residual", cocl, cfg.tolerance("coclosed_residual", 1e-5));
    o.verdicts.below("closure_defect", closure, cfg.tolerance("closure_defect", 1e-4));
    o.verdicts.below("hausdorff", haus, cfg.tolerance("hausdorff", 1e-5));
    return o;
}

Outcome beta_geodesic(const RunConfig& cfg, std::string* csv)
{
    const std::string kind = cfg.string("surface");
    const double u0 = cfg.number("u0"), v0 = cfg.number("v0"), heading = cfg.number("heading");
    const double step = cfg.number("step");
    SurfaceData data = kind == "round" ? make_round_surface() : zoll_surface(cfg);
    std::optional<MagneticTrajectory> ref;
    double length = 2.0 * kPi;
    if (kind == "zoll-derived") {
        // The closing length in K0 dsigma^2 is that of the reference geodesic.
        ref = integrate_beta_geodesic(data, u0, v0, heading, 2.0 * kPi, step);
        length = conformal_length(*ref, gauss_curvature_field(data));
        data = zoll_to_cfc_data(data);
    }
    if (cfg.has("length")) length = cfg.number("length");
    const auto traj = integrate_beta_geodesic(data, u0, v0, heading, length, step);
    const double closure = closure_defect(traj);

    Outcome o;
    o.payload = {{"surface", kind},
                 {"provenance", to_string(data.provenance)},
                 {"length", length},
                 {"step", traj.step},
                 {"samples", traj.samples.size()},
                 {"truncated", traj.truncated},
                 {"closure_defect", closure},
                 {"final", {traj.samples.back().u, traj.samples.back().v, traj.samples.back().chi}}};
    o.verdicts.check("not_truncated", !traj.truncated);
    if (!cfg.has("length")) o.verdicts.below("closure_defect", closure, cfg.tolerance("closure_defect", 1e-4));
    if (ref && !cfg.has("length")) {
        const double haus = hausdorff_distance(*ref, traj);
        o.payload["hausdorff_to_reference"] = haus;
        o.verdicts.below("hausdorff", haus, cfg.tolerance("hausdorff", 1e-5));
    }
    if (csv) *csv = magnetic_csv(data, traj);
    return o;
}

Outcome structure_residual(const RunConfig& cfg)
{
    const std::string kind = cfg.string("surface");
    SurfaceData data = kind == "round" ? make_round_surface() : zoll_surface(cfg);
    if (kind == "zoll-derived") data = zoll_to_cfc_data(data);
    const auto coframe = build_cfc_coframe(data);
    const auto grids = cfg.integers("grids");
    const double offset = cfg.number("i_offset");

    std::vector<StructureResidual> res;
    Json rows = Json::array();
    for (auto n : grids) {
        res.push_back(structure_equation_residual(coframe, static_cast<int>(n), offset));
        rows.push_back({{"grid", n}, {"residuals", res.back().r}});
    }
    Json orders = Json::array();
    double min_order = INFINITY;
    for (std::size_t g = 1; g < res.size(); ++g) {
        const double ratio = std::log(static_cast<double>(grids[g]) / static_cast<double>(grids[g - 1]));
        std::array<double, 3> q{};
        for (int k = 0; k < 3; ++k) {
            q[k] = std::log(res[g - 1].r[k] / res[g].r[k]) / ratio;
            // residuals already at rounding level carry no order information
            if (res[g - 1].r[k] > 1e-10) min_order = std::min(min_order, q[k]);
        }
        orders.push_back(q);
    }
    Outcome o;
    o.payload = {{"surface", kind}, {"i_offset", offset}, {"grids", rows}, {"observed_orders", orders}};
    const auto& fine = res.back().r;
    o.verdicts.below("residual", std::max({fine[0], fine[1], fine[2]}), cfg.tolerance("residual", 1e-5));
    if (std::isfinite(min_order)) {
        o.payload["min_observed_order"] = min_order;
        o.verdicts.above("observed_order", min_order, cfg.tolerance("observed_order", 2.0));
    }
    return o;
}

Outcome characters(const RunConfig& cfg, std::string* text)
{
    const auto n = static_cast<int>(cfg.integer("n"));
    const auto n_max = static_cast<int>(cfg.integer("n_max"));
    const auto t = cartan_characters(n);
    const auto report = verify_involutivity_identities(n_max);

    Outcome o;
    o.payload = {{"n", n},
                 {"s", t.s},
                 {"character_sum", t.character_sum()},
                 {"dimK", t.dimK},
                 {"weighted_sum", t.weighted_sum()},
                 {"dimK1", t.dimK1},
                 {"generality", {{"functions", t.generality.first}, {"variables", t.generality.second}}},
                 {"identities", {{"n_max", n_max}, {"ok", report.ok}}}};
    if (report.first_failure) o.payload["identities"]["first_failure"] = *report.first_failure;
    o.verdicts.check("character_sum", t.character_sum() == t.dimK);
    o.verdicts.check("cartans_test", t.weighted_sum() == t.dimK1);
    o.verdicts.check("identities", report.ok);
    o.verdicts.check("generality", t.s[static_cast<std::size_t>(n + 1)] == t.generality.first);
    if (text) {
        std::ostringstream os;
        os << "n = " << n << "\n   k";
        for (std::size_t k = 0; k < t.s.size(); ++k) os << std::setw(8) << k;
        os << "\n s_k";
        for (Int v : t.s) os << std::setw(8) << v;
        os << "\n";
        for (std::size_t k = 2; k <= static_cast<std::size_t>(n + 1); ++k) os << "s" << k << "=" << t.s[k] << " ";
        os << "\nsum s_k   = " << t.character_sum() << "  dim K  = " << t.dimK << "\n";
        os << "sum k s_k = " << t.weighted_sum() << "  dim K1 = " << t.dimK1 << "\n";
        os << "generality: " << t.generality.first << " functions of " << t.generality.second << " variables\n";
        os << "identities for 2 <= n <= " << n_max << ": " << (report.ok ? "OK" : "FAIL") << "\n";
        *text = os.str();
    }
    return o;
}

Outcome reversibility(const RunConfig& cfg)
{
    const BuiltMetric m = build_metric(cfg);
    const double defect = reversibility_defect(m.oracle, default_region(m.oracle),
                                               static_cast<std::size_t>(cfg.integer("samples")),
                                               static_cast<std::uint64_t>(cfg.integer("seed")));
    const bool expect_rev = cfg.has("expect") ? cfg.string("expect") == "reversible" : m.oracle.reversible();
    Outcome o;
    o.payload = {{"metric", m.oracle.name()},
                 {"claimed_reversible", m.oracle.reversible()},
                 {"reversibility_defect", defect}};
    if (expect_rev) {
        o.verdicts.below("reversible", defect, cfg.tolerance("reversible", 1e-10));
    } else {
        o.verdicts.above("irreversible", defect, cfg.tolerance("irreversible", 1e-3));
    }
    return o;
}

} // namespace

Json execute(const RunConfig& cfg, std::string* csv)
{
    const auto start = std::chrono::steady_clock::now();
    const std::string fmt = cfg.string("format");
    std::string* side = fmt == "json" ? nullptr : csv;
    Outcome o;
    const std::string& c = cfg.subcommand;
    if (c == "curvature-certify") o = curvature_certify(cfg);
    else if (c == "geodesic-trace") o = geodesic_trace(cfg, side);
    else if (c == "quadric-eval") o = quadric_eval(cfg);
    else if (c == "hilbert-eval") o = hilbert_eval(cfg);
    else if (c == "zoll-check") o = zoll_check(cfg);
    else if (c == "beta-geodesic") o = beta_geodesic(cfg, side);
    else if (c == "structure-residual") o = structure_residual(cfg);
    else if (c == "cartan-characters") o = characters(cfg, side);
    else if (c == "reversibility") o = reversibility(cfg);
    else throw UsageError("unknown subcommand '" + c + "'");
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    Json config = cfg.values;
    config["subcommand"] = cfg.subcommand;
    return {{"config", config},
            {"version", kVersion},
            {"wall_time", wall},
            {"payload", o.payload},
            {"verdicts", o.verdicts.json},
            {"pass", o.verdicts.pass}};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    RunConfig cfg;
    try {
        if (args.empty()) throw UsageError("missing subcommand");
        cfg = load_config(args);
    } catch (const CLI::CallForHelp&) {
        const CommandSpec* cmd = find_command(args.front());
        out << (cmd ? command_help(*cmd) : synopsis());
        return kPass;
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return kPass;
        err << "error: " << e.what() << "\n\n" << synopsis();
        return kUsage;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n\n" << synopsis();
        return kUsage;
    }

    Json envelope;
    std::string side;
    try {
        envelope = execute(cfg, &side);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n\n" << synopsis();
        return kUsage;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const InvalidProfile& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kNumerical;
    }

    const std::string fmt = cfg.string("format");
    const std::string body = fmt == "json" ? envelope.dump(2) + "\n" : side;
    const std::string path = cfg.string("out");
    if (path == "-") {
        out << body;
        out.flush();
    } else {
        std::ofstream file(path);
        if (!file) {
            err << "error: cannot write '" << path << "'\n";
            return kUsage;
        }
        file << body;
    }
    return envelope["pass"].get<bool>() ? kPass : kVerdictFail;
}

} // namespace finsler::cli
