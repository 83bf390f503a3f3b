#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vqmc/core.hpp"
#include "vqmc/lowdisc.hpp"
#include "vqmc/pic.hpp"

namespace vqmc {

enum class Scenario { landau, linear_landau, bump_on_tail, custom };
enum class SolverKind { spectral, pic, coupled };
/// Initial marker distribution for plain PIC runs.
enum class MarkerSampling { its, uniform };

std::string_view scenario_name(Scenario s);
std::string_view solver_name(SolverKind s);
std::string_view sampling_name(MarkerSampling s);

struct RunConfig {
    Scenario scenario = Scenario::landau;
    InitialCondition ic = InitialCondition::landau();
    SolverKind solver = SolverKind::spectral;
    double v_max = 6.5; ///< velocity domain [-v_max, v_max]

    std::size_t nx = 64, nv = 64;
    bool filter = true;
    std::size_t n_f = 16;
    std::size_t n_p = 100000;
    double dt = 0.05;
    double t_max = 10.0;
    std::optional<double> t0;
    std::size_t n_pad = 32;
    IntegratorKind integrator = IntegratorKind::ruth3;
    MarkerSampling sampling = MarkerSampling::its;
    SequenceKind sequence = Sobol{};

    std::size_t output_stride = 1;
    std::size_t hk_stride = 0;
    std::size_t disc_stride = 0;
    AxisBox disc_window{0.0, 2.0, -1.0, 1.0};
    std::size_t disc_cap = kDefaultDiscrepancyCap;
    std::size_t dump_stride = 0; ///< 0: final state only
    std::string output_dir = "out";

    PhaseSpaceDomain domain() const { return domain_for(ic, v_max); }
};

/// Every violated invariant, one message each.
std::vector<std::string> validation_errors(const RunConfig& cfg);
/// Throws ValidationError listing every violation.
void validate(const RunConfig& cfg);

/// Parses key = value text with optional [section] headers and '#' / ';'
/// comments, applies `overrides` ("key=value", applied last) and validates.
/// Keys are the RunConfig field names; `scenario` loads its preset before any
/// initial-condition key is applied, regardless of order. Throws ParseError
/// (with the line number) for malformed lines, unknown keys or bad values.
RunConfig parse_config(std::string_view text, const std::vector<std::string>& overrides = {},
                       std::string_view source = "<config>");
RunConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Complete config text that parses back to an identical RunConfig.
std::string echo_config(const RunConfig& cfg);

} // namespace vqmc
