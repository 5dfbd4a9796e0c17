#include "config.hpp"

#include "pnls/errors.hpp"

#define TOML_EXCEPTIONS 1
#include <toml++/toml.hpp>

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace pnls::cli {

namespace {

using json = nlohmann::json;
using LineMap = std::map<std::string, int>;

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

json toml_to_json(const toml::node& node, const std::string& path, LineMap& lines) {
    lines[path] = int(node.source().begin.line);
    if (auto* t = node.as_table()) {
        json obj = json::object();
        for (auto&& [k, v] : *t) {
            const std::string key(k.str());
            obj[key] = toml_to_json(v, join(path, key), lines);
        }
        return obj;
    }
    if (auto* a = node.as_array()) {
        json arr = json::array();
        std::size_t i = 0;
        for (auto&& v : *a) arr.push_back(toml_to_json(v, path + "[" + std::to_string(i++) + "]", lines));
        return arr;
    }
    if (auto v = node.value_exact<int64_t>()) return *v;
    if (auto v = node.value_exact<double>()) return *v;
    if (auto v = node.value_exact<bool>()) return *v;
    if (auto v = node.value_exact<std::string>()) return *v;
    throw ConfigParseError("line " + std::to_string(node.source().begin.line) + ", " + path +
                           ": unsupported TOML value type");
}

class Reader {
public:
    Reader(const LineMap& lines, std::filesystem::path base) : lines_(lines), base_(std::move(base)) {}

    [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
        std::string where;
        // walk up to the nearest key with a known line
        for (std::string p = path;; ) {
            auto it = lines_.find(p);
            if (it != lines_.end() && it->second > 0) {
                where = "line " + std::to_string(it->second) + ", ";
                break;
            }
            const auto dot = p.rfind('.');
            if (dot == std::string::npos) break;
            p = p.substr(0, dot);
        }
        throw ConfigParseError(where + (path.empty() ? "config" : path) + ": " + msg);
    }

    const json& object(const json& j, const std::string& path, std::set<std::string> allowed) const {
        if (!j.is_object()) fail(path, "expected a table");
        for (auto it = j.begin(); it != j.end(); ++it)
            if (!allowed.count(it.key())) fail(join(path, it.key()), "unknown key");
        return j;
    }

    void number(const json& obj, const std::string& path, const char* key, double& out) const {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        if (!v.is_number()) fail(join(path, key), "expected a number");
        out = v.get<double>();
        if (!std::isfinite(out)) fail(join(path, key), "must be finite");
    }

    void integer(const json& obj, const std::string& path, const char* key, int& out) const {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        if (!v.is_number_integer()) fail(join(path, key), "expected an integer");
        const auto x = v.get<int64_t>();
        if (x < -1000000000 || x > 1000000000) fail(join(path, key), "out of range");
        out = int(x);
    }

    void boolean(const json& obj, const std::string& path, const char* key, bool& out) const {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        if (!v.is_boolean()) fail(join(path, key), "expected true or false");
        out = v.get<bool>();
    }

    void string(const json& obj, const std::string& path, const char* key, std::string& out) const {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        if (!v.is_string()) fail(join(path, key), "expected a string");
        out = v.get<std::string>();
    }

    void file_path(const json& obj, const std::string& path, const char* key,
                   std::filesystem::path& out) const {
        std::string s;
        string(obj, path, key, s);
        if (s.empty()) return;
        std::filesystem::path p(s);
        out = p.is_relative() && !base_.empty() ? base_ / p : p;
    }

    const LineMap& lines() const { return lines_; }

private:
    const LineMap& lines_;
    std::filesystem::path base_;
};

void read_datum(const Reader& r, const json& j, DatumSection& d) {
    const std::string path = "datum";
    r.object(j, path, {"lambda", "q0_re", "q0_im", "epsilon", "regular"});
    r.number(j, path, "lambda", d.lambda);
    double re = d.q0.real(), im = d.q0.imag();
    r.number(j, path, "q0_re", re);
    r.number(j, path, "q0_im", im);
    d.q0 = {re, im};
    r.number(j, path, "epsilon", d.epsilon);
    if (!j.contains("regular")) {
        d.profile = ProfileKind::zero;
        return;
    }
    const std::string rp = "datum.regular";
    const json& reg = r.object(j.at("regular"), rp, {"gaussian", "compatible", "sampled", "zero"});
    if (reg.size() != 1) r.fail(rp, "exactly one of gaussian, compatible, sampled, zero is required");
    const std::string kind = reg.begin().key();
    const json& body = reg.begin().value();
    const std::string bp = join(rp, kind);
    if (kind == "gaussian") {
        d.profile = ProfileKind::gaussian;
        r.object(body, bp, {"a", "a_im", "b"});
        double a = d.amplitude.real(), a_im = d.amplitude.imag();
        r.number(body, bp, "a", a);
        r.number(body, bp, "a_im", a_im);
        d.amplitude = {a, a_im};
        r.number(body, bp, "b", d.width);
    } else if (kind == "compatible") {
        d.profile = ProfileKind::compatible;
        r.object(body, bp, {"b"});
        r.number(body, bp, "b", d.width);
    } else if (kind == "sampled") {
        d.profile = ProfileKind::sampled;
        r.object(body, bp, {"path", "decay_exponent"});
        if (!body.contains("path")) r.fail(bp, "path is required");
        r.file_path(body, bp, "path", d.profile_csv);
        r.number(body, bp, "decay_exponent", d.decay_exponent);
    } else {
        d.profile = ProfileKind::zero;
        r.object(body, bp, {});
    }
}

void read_params(const Reader& r, const json& j, ModelParams& p) {
    r.object(j, "params", {"sigma", "beta0", "experimental_sigma"});
    r.number(j, "params", "sigma", p.sigma);
    r.number(j, "params", "beta0", p.beta0);
    r.boolean(j, "params", "experimental_sigma", p.experimental_sigma);
}

void read_solver(const Reader& r, const json& j, SolverConfig& s) {
    const std::string path = "solver";
    r.object(j, path, {"step_init", "step_min", "step_max", "step_growth", "change_tol", "picard_tol",
                       "picard_max_iters", "blowup_threshold", "refinement_levels", "startup_cells",
                       "startup_ratio"});
    r.number(j, path, "step_init", s.step_init);
    r.number(j, path, "step_min", s.step_min);
    r.number(j, path, "step_max", s.step_max);
    r.number(j, path, "step_growth", s.step_growth);
    r.number(j, path, "change_tol", s.change_tol);
    r.number(j, path, "picard_tol", s.picard_tol);
    r.integer(j, path, "picard_max_iters", s.picard_max_iters);
    r.number(j, path, "blowup_threshold", s.blowup_threshold);
    r.integer(j, path, "refinement_levels", s.refinement_levels);
    r.integer(j, path, "startup_cells", s.startup_cells);
    r.number(j, path, "startup_ratio", s.startup_ratio);
    // step_max follows step_init unless given
    if (j.contains("step_init") && !j.contains("step_max")) s.step_max = std::max(s.step_max, s.step_init);
}

void read_grid(const Reader& r, const json& j, GridSection& g) {
    r.object(j, "grid", {"t_max", "rho_max", "panel_width", "points", "mode"});
    r.number(j, "grid", "t_max", g.t_max);
    r.number(j, "grid", "rho_max", g.rho_max);
    r.number(j, "grid", "panel_width", g.panel_width);
    r.integer(j, "grid", "points", g.points);
    std::string mode = g.adaptive ? "adaptive" : "fixed";
    r.string(j, "grid", "mode", mode);
    if (mode != "adaptive" && mode != "fixed") r.fail("grid.mode", "expected \"adaptive\" or \"fixed\"");
    g.adaptive = mode == "adaptive";
}

void read_outputs(const Reader& r, const json& j, OutputSection& o) {
    r.object(j, "outputs", {"directory", "name", "formats", "spectral_times"});
    r.file_path(j, "outputs", "directory", o.directory);
    r.string(j, "outputs", "name", o.name);
    if (j.contains("formats")) {
        const json& f = j.at("formats");
        if (!f.is_array()) r.fail("outputs.formats", "expected an array of strings");
        o.csv = o.json = false;
        for (std::size_t i = 0; i < f.size(); ++i) {
            const std::string p = "outputs.formats[" + std::to_string(i) + "]";
            if (!f[i].is_string()) r.fail(p, "expected a string");
            const auto s = f[i].get<std::string>();
            if (s == "csv") o.csv = true;
            else if (s == "json") o.json = true;
            else r.fail(p, "unknown format \"" + s + "\"");
        }
    }
    if (j.contains("spectral_times")) {
        const json& a = j.at("spectral_times");
        if (!a.is_array()) r.fail("outputs.spectral_times", "expected an array of numbers");
        o.spectral_times.clear();
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!a[i].is_number()) r.fail("outputs.spectral_times[" + std::to_string(i) + "]", "expected a number");
            o.spectral_times.push_back(a[i].get<double>());
        }
    }
}

RunConfig from_json(const json& root, const LineMap& lines, const std::filesystem::path& base) {
    Reader r(lines, base);
    r.object(root, "", {"datum", "params", "solver", "grid", "outputs"});
    RunConfig c;
    if (root.contains("datum")) read_datum(r, root.at("datum"), c.datum);
    else c.datum.profile = ProfileKind::zero;
    if (root.contains("params")) read_params(r, root.at("params"), c.params);
    if (root.contains("solver")) read_solver(r, root.at("solver"), c.solver);
    if (root.contains("grid")) read_grid(r, root.at("grid"), c.grid);
    if (root.contains("outputs")) read_outputs(r, root.at("outputs"), c.outputs);
    if (c.outputs.name.empty() || c.outputs.name.find_first_of("/\\") != std::string::npos)
        r.fail("outputs.name", "must be a plain file stem");
    try {
        c.validate();
    } catch (const ConfigError& e) {
        r.fail(e.field(), std::string(e.what()).substr(e.field().size() + 2));
    }
    return c;
}

// Maps a library DomainError onto the config key it names, falling back to the block.
[[noreturn]] void rethrow_as_config(const std::string& block, const std::exception& e) {
    const std::string msg = e.what();
    const auto space = msg.find(' ');
    const std::string head = msg.substr(0, space);
    if (head.rfind(block + ".", 0) == 0 && space != std::string::npos)
        throw ConfigError(head, msg.substr(space + 1));
    throw ConfigError(block, msg);
}

} // namespace

InitialDatum RunConfig::make_datum() const {
    InitialDatum d;
    switch (datum.profile) {
    case ProfileKind::compatible:
        d = compatible_gaussian_datum(datum.q0, datum.width, params, datum.lambda);
        break;
    case ProfileKind::gaussian:
        d.lambda = datum.lambda;
        d.q0 = datum.q0;
        d.regular = GaussianProfile{datum.amplitude, datum.width};
        break;
    case ProfileKind::sampled:
        d.lambda = datum.lambda;
        d.q0 = datum.q0;
        d.regular = SampledProfile::load_csv(datum.profile_csv, datum.decay_exponent);
        break;
    case ProfileKind::zero:
        d.lambda = datum.lambda;
        d.q0 = datum.q0;
        break;
    }
    d.epsilon = datum.epsilon;
    return d;
}

MomentumGrid RunConfig::make_momentum_grid(int refinement_level) const {
    const double width = grid.panel_width > 0.0 ? grid.panel_width : std::min(1.0, 6.0 / grid.t_max);
    return MomentumGrid::make(std::ldexp(grid.rho_max, refinement_level), width, grid.points);
}

void RunConfig::validate() const {
    if (!(datum.lambda > 0.0)) throw ConfigError("datum.lambda", "must be positive");
    if (!(datum.width > 0.0)) throw ConfigError("datum.regular", "width b must be positive");
    try {
        params.validate();
    } catch (const DomainError& e) {
        rethrow_as_config("params", e);
    }
    try {
        make_datum().validate();
    } catch (const DomainError& e) {
        rethrow_as_config("datum", e);
    } catch (const TailBoundError& e) {
        rethrow_as_config("datum", e);
    }
    try {
        solver.validate(datum.q0);
    } catch (const DomainError& e) {
        rethrow_as_config("solver", e);
    }
    if (!(grid.t_max > 0.0)) throw ConfigError("grid.t_max", "must be positive");
    if (!(grid.rho_max > 0.0)) throw ConfigError("grid.rho_max", "must be positive");
    if (grid.panel_width < 0.0) throw ConfigError("grid.panel_width", "must be nonnegative (0 selects automatically)");
    if (grid.points < 2 || grid.points > 64) throw ConfigError("grid.points", "must lie in [2, 64]");
    const double width = grid.panel_width > 0.0 ? grid.panel_width : std::min(1.0, 6.0 / grid.t_max);
    if (width * grid.t_max >= 2.0 * std::numbers::pi)
        throw ConfigError("grid.panel_width", "panel_width * t_max must stay below 2 pi");
    for (double t : outputs.spectral_times)
        if (!(t >= 0.0 && t <= grid.t_max)) throw ConfigError("outputs.spectral_times", "times must lie in [0, t_max]");
}

RunConfig parse_toml(const std::string& text, const std::filesystem::path& base) {
    toml::table tbl;
    try {
        tbl = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream os;
        os << "line " << e.source().begin.line << ", column " << e.source().begin.column << ": "
           << e.description();
        throw ConfigParseError(os.str());
    }
    LineMap lines;
    const json root = toml_to_json(tbl, "", lines);
    return from_json(root, lines, base);
}

RunConfig parse_json(const std::string& text, const std::filesystem::path& base) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigParseError(std::string("JSON: ") + e.what());
    }
    return from_json(root, {}, base);
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigParseError(path.string() + ": cannot open config");
    std::stringstream ss;
    ss << in.rdbuf();
    const auto base = path.parent_path();
    try {
        if (path.extension() == ".json") return parse_json(ss.str(), base);
        return parse_toml(ss.str(), base);
    } catch (const ConfigParseError& e) {
        throw ConfigParseError(path.string() + ": " + e.what());
    }
}

json to_json(const RunConfig& c) {
    json regular;
    switch (c.datum.profile) {
    case ProfileKind::gaussian:
        regular["gaussian"] = {{"a", c.datum.amplitude.real()}, {"a_im", c.datum.amplitude.imag()}, {"b", c.datum.width}};
        break;
    case ProfileKind::compatible:
        regular["compatible"] = {{"b", c.datum.width}};
        break;
    case ProfileKind::sampled:
        regular["sampled"] = {{"path", c.datum.profile_csv.string()}, {"decay_exponent", c.datum.decay_exponent}};
        break;
    case ProfileKind::zero:
        regular["zero"] = json::object();
        break;
    }
    const auto& s = c.solver;
    json formats = json::array();
    if (c.outputs.csv) formats.push_back("csv");
    if (c.outputs.json) formats.push_back("json");
    return {
        {"datum", {{"lambda", c.datum.lambda}, {"q0_re", c.datum.q0.real()}, {"q0_im", c.datum.q0.imag()},
                   {"epsilon", c.datum.epsilon}, {"regular", regular}}},
        {"params", {{"sigma", c.params.sigma}, {"beta0", c.params.beta0},
                    {"experimental_sigma", c.params.experimental_sigma}}},
        {"solver", {{"step_init", s.step_init}, {"step_min", s.step_min}, {"step_max", s.step_max},
                    {"step_growth", s.step_growth}, {"change_tol", s.change_tol},
                    {"picard_tol", s.picard_tol}, {"picard_max_iters", s.picard_max_iters},
                    {"blowup_threshold", s.blowup_threshold}, {"refinement_levels", s.refinement_levels},
                    {"startup_cells", s.startup_cells}, {"startup_ratio", s.startup_ratio}}},
        {"grid", {{"t_max", c.grid.t_max}, {"rho_max", c.grid.rho_max}, {"panel_width", c.grid.panel_width},
                  {"points", c.grid.points}, {"mode", c.grid.adaptive ? "adaptive" : "fixed"}}},
        {"outputs", {{"directory", c.outputs.directory.string()}, {"name", c.outputs.name},
                     {"formats", formats}, {"spectral_times", c.outputs.spectral_times}}},
    };
}

} // namespace pnls::cli
