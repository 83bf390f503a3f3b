#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vqmc/core.hpp"
#include "vqmc/spectral.hpp"

namespace vqmc {

inline constexpr std::size_t kTimeseriesColumns = 9;
inline constexpr const char* kTimeseriesHeader =
    "t,segment,field_energy,kinetic_energy,total_energy,mass,entropy,star_disc,hk_variation";

/// Fixed-header CSV, 17 significant digits, empty cell for diagnostics not computed.
std::string format_timeseries(std::span<const DiagnosticsRecord> records);
void write_timeseries(const std::filesystem::path& path, std::span<const DiagnosticsRecord> records);
std::vector<DiagnosticsRecord> read_timeseries(const std::filesystem::path& path);

/// Shortest round-trip-safe decimal form ("%.17g").
std::string format_double(double a);

/// Dumps are a flat little-endian float64 payload `<base>.bin` plus a JSON
/// sidecar `<base>.json`. `base` may be given with or without either extension.
std::filesystem::path dump_base(const std::filesystem::path& path);

enum class VLayout { endpoint, periodic };

struct GridDump {
    GriddedDensity density; ///< periodic dumps are stored with their nv periodic nodes
    VLayout v_layout = VLayout::endpoint;
    double t = 0.0;
};

void write_grid_dump(const std::filesystem::path& path, const GriddedDensity& g, double t);
void write_spectral_dump(const std::filesystem::path& path, const SpectralState& s);
GridDump read_grid_dump(const std::filesystem::path& path);
/// Endpoint layout with the wrap column appended (identity for endpoint dumps).
GriddedDensity as_endpoint_grid(const GridDump& d);
/// Periodic-in-v state (drops the duplicated v_max column of endpoint dumps).
SpectralState as_spectral_state(const GridDump& d);

struct ParticleDump {
    ParticleEnsemble ensemble;
    PhaseSpaceDomain domain;
};

/// Payload: the x, v, f_like, g_like columns one after another.
void write_particle_dump(const std::filesystem::path& path, const ParticleEnsemble& e, const PhaseSpaceDomain& d);
ParticleDump read_particle_dump(const std::filesystem::path& path);

/// Sidecar contents as pretty-printed JSON.
std::string dump_info(const std::filesystem::path& path);

} // namespace vqmc
