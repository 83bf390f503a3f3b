#include "vqmc/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>

#include "vqmc/errors.hpp"
#include "vqmc/io.hpp"

namespace vqmc {

std::string_view scenario_name(Scenario s) {
    switch (s) {
    case Scenario::landau: return "landau";
    case Scenario::linear_landau: return "linear_landau";
    case Scenario::bump_on_tail: return "bump_on_tail";
    case Scenario::custom: return "custom";
    }
    return "custom";
}

std::string_view solver_name(SolverKind s) {
    switch (s) {
    case SolverKind::spectral: return "spectral";
    case SolverKind::pic: return "pic";
    case SolverKind::coupled: return "coupled";
    }
    return "spectral";
}

std::string_view sampling_name(MarkerSampling s) { return s == MarkerSampling::its ? "its" : "uniform"; }

std::vector<std::string> validation_errors(const RunConfig& c) {
    std::vector<std::string> e;
    const bool grid = c.solver != SolverKind::pic;
    const bool particles = c.solver != SolverKind::spectral;
    if (!(c.dt > 0.0)) e.push_back("dt must be > 0");
    if (!(c.t_max > 0.0)) e.push_back("t_max must be > 0");
    if (c.output_stride < 1) e.push_back("output_stride must be >= 1");
    if (!(c.ic.k > 0.0)) e.push_back("k must be > 0");
    if (!(c.ic.sigma_b > 0.0)) e.push_back("sigma_b must be > 0");
    if (!(c.ic.n_b >= 0.0 && c.ic.n_b < 1.0)) e.push_back("n_b must lie in [0, 1)");
    if (!(c.v_max > 0.0)) e.push_back("v_max must be > 0");
    if (grid && (c.nx < 4 || c.nv < 4)) e.push_back("nx and nv must be >= 4");
    if (particles && c.n_f < 4) e.push_back("n_f must be >= 4");
    if (particles && c.n_p < 1) e.push_back("n_p must be >= 1");
    if (c.solver == SolverKind::coupled) {
        if (!c.t0)
            e.push_back("t0 is required for a coupled run");
        else if (!(*c.t0 > 0.0 && *c.t0 < c.t_max))
            e.push_back("t0 must lie in (0, t_max)");
        if (c.n_pad < 1) e.push_back("n_pad must be >= 1");
    }
    if (c.disc_stride > 0 && !(c.disc_window.x_hi > c.disc_window.x_lo && c.disc_window.v_hi > c.disc_window.v_lo))
        e.push_back("disc_window must have x_hi > x_lo and v_hi > v_lo");
    if (c.disc_cap < 1) e.push_back("disc_cap must be >= 1");
    if (const auto* s = std::get_if<Sobol>(&c.sequence); s && s->skip < 1) e.push_back("skip must be >= 1");
    return e;
}

void validate(const RunConfig& cfg) {
    const auto errors = validation_errors(cfg);
    if (errors.empty()) return;
    std::string msg = "invalid configuration:";
    for (const auto& m : errors) msg += "\n  - " + m;
    throw ValidationError(msg);
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& s) {
    std::size_t used = 0;
    const double a = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("not a number");
    return a;
}

std::uint64_t to_uint(const std::string& s) {
    if (s.empty() || s[0] == '-' || s[0] == '+') throw std::invalid_argument("not a nonnegative integer");
    std::size_t used = 0;
    const unsigned long long a = std::stoull(s, &used);
    if (used != s.size()) throw std::invalid_argument("not a nonnegative integer");
    return a;
}

/// Accepts integers written in floating notation too ("1e5"), as long as the value is integral.
std::size_t to_count(const std::string& s) {
    if (s.find_first_of(".eE") == std::string::npos) return static_cast<std::size_t>(to_uint(s));
    const double a = to_double(s);
    if (!(a >= 0.0) || a != std::floor(a) || a > 1e15) throw std::invalid_argument("not a nonnegative integer");
    return static_cast<std::size_t>(a);
}

bool to_bool(const std::string& s) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw std::invalid_argument("expected true or false");
}

AxisBox to_box(const std::string& s) {
    std::vector<double> parts;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(to_double(trim(item)));
    if (parts.size() != 4) throw std::invalid_argument("expected x_lo,x_hi,v_lo,v_hi");
    return {parts[0], parts[1], parts[2], parts[3]};
}

Scenario to_scenario(const std::string& s) {
    for (auto k : {Scenario::landau, Scenario::linear_landau, Scenario::bump_on_tail, Scenario::custom})
        if (scenario_name(k) == s) return k;
    throw std::invalid_argument("expected landau, linear_landau, bump_on_tail or custom");
}

InitialCondition preset(Scenario s) {
    switch (s) {
    case Scenario::landau: return InitialCondition::landau();
    case Scenario::linear_landau: return InitialCondition::linear_landau();
    case Scenario::bump_on_tail: return InitialCondition::bump_on_tail();
    case Scenario::custom: return InitialCondition{};
    }
    return {};
}

struct SequenceSpec {
    std::string kind = "sobol";
    std::uint64_t seed = 0;
    std::uint64_t skip = 1;
};

using Setter = std::function<void(RunConfig&, SequenceSpec&, const std::string&)>;

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = {
        {"scenario", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.scenario = to_scenario(v); }},
        {"epsilon", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.ic.epsilon = to_double(v); }},
        {"k", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.ic.k = to_double(v); }},
        {"n_b", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.ic.n_b = to_double(v); }},
        {"sigma_b", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.ic.sigma_b = to_double(v); }},
        {"v_b", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.ic.v_b = to_double(v); }},
        {"solver",
         [](RunConfig& c, SequenceSpec&, const std::string& v) {
             if (v == "spectral")
                 c.solver = SolverKind::spectral;
             else if (v == "pic")
                 c.solver = SolverKind::pic;
             else if (v == "coupled")
                 c.solver = SolverKind::coupled;
             else
                 throw std::invalid_argument("expected spectral, pic or coupled");
         }},
        {"v_max", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.v_max = to_double(v); }},
        {"nx", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.nx = to_count(v); }},
        {"nv", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.nv = to_count(v); }},
        {"filter", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.filter = to_bool(v); }},
        {"n_f", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.n_f = to_count(v); }},
        {"n_p", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.n_p = to_count(v); }},
        {"dt", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.dt = to_double(v); }},
        {"t_max", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.t_max = to_double(v); }},
        {"t0",
         [](RunConfig& c, SequenceSpec&, const std::string& v) {
             if (v.empty() || v == "none")
                 c.t0.reset();
             else
                 c.t0 = to_double(v);
         }},
        {"n_pad", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.n_pad = to_count(v); }},
        {"integrator", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.integrator = parse_integrator(v); }},
        {"sampling",
         [](RunConfig& c, SequenceSpec&, const std::string& v) {
             if (v == "its")
                 c.sampling = MarkerSampling::its;
             else if (v == "uniform")
                 c.sampling = MarkerSampling::uniform;
             else
                 throw std::invalid_argument("expected its or uniform");
         }},
        {"sequence",
         [](RunConfig&, SequenceSpec& s, const std::string& v) {
             if (v != "sobol" && v != "random") throw std::invalid_argument("expected sobol or random");
             s.kind = v;
         }},
        {"seed", [](RunConfig&, SequenceSpec& s, const std::string& v) { s.seed = to_uint(v); }},
        {"skip", [](RunConfig&, SequenceSpec& s, const std::string& v) { s.skip = to_uint(v); }},
        {"output_stride", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.output_stride = to_count(v); }},
        {"hk_stride", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.hk_stride = to_count(v); }},
        {"disc_stride", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.disc_stride = to_count(v); }},
        {"disc_window", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.disc_window = to_box(v); }},
        {"disc_cap", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.disc_cap = to_count(v); }},
        {"dump_stride", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.dump_stride = to_count(v); }},
        {"output_dir", [](RunConfig& c, SequenceSpec&, const std::string& v) { c.output_dir = v; }},
    };
    return table;
}

const std::vector<std::string> kSections = {"run", "scenario", "grid", "pic", "sampling", "diagnostics", "output"};

struct Entry {
    std::string key, value, where;
};

std::vector<Entry> tokenize(std::string_view text, std::string_view source) {
    std::vector<Entry> out;
    std::stringstream ss{std::string(text)};
    std::string raw;
    std::size_t lineno = 0;
    while (std::getline(ss, raw)) {
        ++lineno;
        const std::string where = std::string(source) + ":" + std::to_string(lineno);
        std::string line = raw;
        if (const auto pos = line.find_first_of("#;"); pos != std::string::npos) line.erase(pos);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(where + ": malformed section header '" + line + "'");
            const std::string name = trim(std::string_view(line).substr(1, line.size() - 2));
            if (std::find(kSections.begin(), kSections.end(), name) == kSections.end())
                throw ParseError(where + ": unknown section [" + name + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(where + ": expected key = value, got '" + line + "'");
        out.push_back({trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1)), where});
        if (out.back().key.empty()) throw ParseError(where + ": empty key");
    }
    return out;
}

} // namespace

RunConfig parse_config(std::string_view text, const std::vector<std::string>& overrides, std::string_view source) {
    std::vector<Entry> entries = tokenize(text, source);
    for (std::size_t k = 0; k < overrides.size(); ++k) {
        const std::string where = "override " + std::to_string(k + 1);
        const auto eq = overrides[k].find('=');
        if (eq == std::string::npos) throw ParseError(where + ": expected key=value, got '" + overrides[k] + "'");
        entries.push_back({trim(std::string_view(overrides[k]).substr(0, eq)),
                           trim(std::string_view(overrides[k]).substr(eq + 1)), where});
    }
    const auto& table = setters();
    for (const auto& e : entries)
        if (!table.contains(e.key)) throw ParseError(e.where + ": unknown key '" + e.key + "'");

    RunConfig cfg;
    SequenceSpec seq;
    // The scenario preset is loaded first so explicit initial-condition keys refine it.
    for (const auto& e : entries)
        if (e.key == "scenario") try {
                cfg.scenario = to_scenario(e.value);
            } catch (const std::exception& ex) {
                throw ParseError(e.where + ": bad value for 'scenario': '" + e.value + "' (" + ex.what() + ")");
            }
    cfg.ic = preset(cfg.scenario);
    for (const auto& e : entries) {
        try {
            table.find(e.key)->second(cfg, seq, e.value);
        } catch (const std::exception& ex) {
            throw ParseError(e.where + ": bad value for '" + e.key + "': '" + e.value + "' (" + ex.what() + ")");
        }
    }
    if (seq.kind == "sobol")
        cfg.sequence = Sobol{seq.skip};
    else
        cfg.sequence = PseudoRandom{seq.seed};
    validate(cfg);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), overrides, path.string());
}

std::string echo_config(const RunConfig& c) {
    std::ostringstream o;
    auto d = [](double a) { return format_double(a); };
    o << "[scenario]\n"
      << "scenario = " << scenario_name(c.scenario) << "\n"
      << "epsilon = " << d(c.ic.epsilon) << "\n"
      << "k = " << d(c.ic.k) << "\n"
      << "n_b = " << d(c.ic.n_b) << "\n"
      << "sigma_b = " << d(c.ic.sigma_b) << "\n"
      << "v_b = " << d(c.ic.v_b) << "\n\n"
      << "[run]\n"
      << "solver = " << solver_name(c.solver) << "\n"
      << "dt = " << d(c.dt) << "\n"
      << "t_max = " << d(c.t_max) << "\n"
      << "t0 = " << (c.t0 ? d(*c.t0) : std::string("none")) << "\n\n"
      << "[grid]\n"
      << "v_max = " << d(c.v_max) << "\n"
      << "nx = " << c.nx << "\n"
      << "nv = " << c.nv << "\n"
      << "filter = " << (c.filter ? "true" : "false") << "\n"
      << "n_pad = " << c.n_pad << "\n\n"
      << "[pic]\n"
      << "n_f = " << c.n_f << "\n"
      << "n_p = " << c.n_p << "\n"
      << "integrator = " << integrator_name(c.integrator) << "\n\n"
      << "[sampling]\n"
      << "sampling = " << sampling_name(c.sampling) << "\n";
    if (const auto* s = std::get_if<Sobol>(&c.sequence))
        o << "sequence = sobol\nskip = " << s->skip << "\n\n";
    else
        o << "sequence = random\nseed = " << std::get<PseudoRandom>(c.sequence).seed << "\n\n";
    o << "[diagnostics]\n"
      << "output_stride = " << c.output_stride << "\n"
      << "hk_stride = " << c.hk_stride << "\n"
      << "disc_stride = " << c.disc_stride << "\n"
      << "disc_window = " << d(c.disc_window.x_lo) << "," << d(c.disc_window.x_hi) << "," << d(c.disc_window.v_lo)
      << "," << d(c.disc_window.v_hi) << "\n"
      << "disc_cap = " << c.disc_cap << "\n\n"
      << "[output]\n"
      << "dump_stride = " << c.dump_stride << "\n"
      << "output_dir = " << c.output_dir << "\n";
    return o.str();
}

} // namespace vqmc
