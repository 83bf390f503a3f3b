#include "vqmc/io.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "vqmc/errors.hpp"

namespace vqmc {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_double(double a) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", a);
    return buf;
}

std::string format_timeseries(std::span<const DiagnosticsRecord> records) {
    std::string out = kTimeseriesHeader;
    out += '\n';
    auto opt = [](const std::optional<double>& a) { return a ? format_double(*a) : std::string(); };
    for (const auto& r : records) {
        out += format_double(r.t) + ',' + std::string(segment_name(r.segment)) + ',' + format_double(r.field_energy) +
               ',' + format_double(r.kinetic_energy) + ',' + format_double(r.total_energy) + ',' +
               format_double(r.total_mass) + ',' + format_double(r.entropy) + ',' + opt(r.star_disc) + ',' +
               opt(r.hk_variation) + '\n';
    }
    return out;
}

void write_timeseries(const fs::path& path, std::span<const DiagnosticsRecord> records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << format_timeseries(records);
    if (!out) throw IoError("failed writing " + path.string());
}

namespace {

double parse_number(const std::string& s, const fs::path& path, std::size_t line) {
    try {
        std::size_t used = 0;
        const double a = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return a;
    } catch (const std::exception&) {
        throw FormatError(path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
    }
}

} // namespace

std::vector<DiagnosticsRecord> read_timeseries(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kTimeseriesHeader)
        throw FormatError(path.string() + ": unexpected CSV header");
    std::vector<DiagnosticsRecord> out;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        if (cells.size() != kTimeseriesColumns)
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                              std::to_string(kTimeseriesColumns) + " columns");
        DiagnosticsRecord r;
        r.t = parse_number(cells[0], path, lineno);
        if (cells[1] == "spectral")
            r.segment = Segment::spectral;
        else if (cells[1] == "pic")
            r.segment = Segment::pic;
        else
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": unknown segment '" + cells[1] + "'");
        r.field_energy = parse_number(cells[2], path, lineno);
        r.kinetic_energy = parse_number(cells[3], path, lineno);
        r.total_energy = parse_number(cells[4], path, lineno);
        r.total_mass = parse_number(cells[5], path, lineno);
        r.entropy = parse_number(cells[6], path, lineno);
        if (!cells[7].empty()) r.star_disc = parse_number(cells[7], path, lineno);
        if (!cells[8].empty()) r.hk_variation = parse_number(cells[8], path, lineno);
        out.push_back(r);
    }
    return out;
}

fs::path dump_base(const fs::path& path) {
    fs::path base = path;
    if (base.extension() == ".bin" || base.extension() == ".json") base.replace_extension();
    return base;
}

namespace {

fs::path with_suffix(const fs::path& base, const char* suffix) {
    fs::path p = base;
    p += suffix;
    return p;
}

std::uint64_t to_little(std::uint64_t a) {
    if constexpr (std::endian::native == std::endian::big) {
        std::uint64_t r = 0;
        for (int b = 0; b < 8; ++b) r |= ((a >> (8 * b)) & 0xffU) << (8 * (7 - b));
        return r;
    }
    return a;
}

void write_payload(const fs::path& path, std::span<const double> data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    std::vector<std::uint64_t> raw(data.size());
    for (std::size_t k = 0; k < data.size(); ++k) raw[k] = to_little(std::bit_cast<std::uint64_t>(data[k]));
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 8));
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<double> read_payload(const fs::path& path, std::size_t expected) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open " + path.string());
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != expected * 8)
        throw FormatError(path.string() + ": payload holds " + std::to_string(bytes) + " bytes, sidecar declares " +
                          std::to_string(expected) + " float64 values");
    in.seekg(0);
    std::vector<std::uint64_t> raw(expected);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
    if (!in) throw IoError("failed reading " + path.string());
    std::vector<double> out(expected);
    for (std::size_t k = 0; k < expected; ++k) out[k] = std::bit_cast<double>(to_little(raw[k]));
    return out;
}

json domain_json(const PhaseSpaceDomain& d) {
    return {{"x_min", d.x_min}, {"x_max", d.x_max}, {"v_min", d.v_min}, {"v_max", d.v_max}};
}

void write_sidecar(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

json read_sidecar(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& ex) {
        throw FormatError(path.string() + ": invalid JSON sidecar: " + ex.what());
    }
    if (j.value("endianness", "") != "little")
        throw FormatError(path.string() + ": payload endianness must be declared \"little\"");
    return j;
}

PhaseSpaceDomain domain_from(const json& j, const fs::path& path) {
    try {
        const json& d = j.at("domain");
        return {d.at("x_min").get<double>(), d.at("x_max").get<double>(), d.at("v_min").get<double>(),
                d.at("v_max").get<double>()};
    } catch (const json::exception& ex) {
        throw FormatError(path.string() + ": bad domain: " + ex.what());
    }
}

template <class T>
T field_of(const json& j, const char* key, const fs::path& path) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& ex) {
        throw FormatError(path.string() + ": missing or invalid '" + key + "': " + ex.what());
    }
}

void write_grid(const fs::path& path, const PhaseSpaceDomain& d, std::size_t nx, std::size_t nv,
                std::span<const double> values, double t, VLayout layout) {
    const fs::path base = dump_base(path);
    write_payload(with_suffix(base, ".bin"), values);
    write_sidecar(with_suffix(base, ".json"), {{"kind", "grid"},
                                               {"nx", nx},
                                               {"nv", nv},
                                               {"domain", domain_json(d)},
                                               {"t", t},
                                               {"v_layout", layout == VLayout::endpoint ? "endpoint" : "periodic"},
                                               {"layout", "row-major, v contiguous"},
                                               {"dtype", "float64"},
                                               {"endianness", "little"}});
}

} // namespace

void write_grid_dump(const fs::path& path, const GriddedDensity& g, double t) {
    write_grid(path, g.domain(), g.nx(), g.nv(), g.values(), t, VLayout::endpoint);
}

void write_spectral_dump(const fs::path& path, const SpectralState& s) {
    write_grid(path, s.domain(), s.nx(), s.nv(), s.values(), s.t, VLayout::periodic);
}

GridDump read_grid_dump(const fs::path& path) {
    const fs::path base = dump_base(path);
    const fs::path side = with_suffix(base, ".json");
    const json j = read_sidecar(side);
    if (field_of<std::string>(j, "kind", side) != "grid") throw FormatError(side.string() + ": not a grid dump");
    const auto nx = field_of<std::size_t>(j, "nx", side), nv = field_of<std::size_t>(j, "nv", side);
    const std::string layout = field_of<std::string>(j, "v_layout", side);
    if (layout != "endpoint" && layout != "periodic") throw FormatError(side.string() + ": unknown v_layout");
    std::vector<double> values = read_payload(with_suffix(base, ".bin"), nx * nv);
    GridDump out;
    out.v_layout = layout == "endpoint" ? VLayout::endpoint : VLayout::periodic;
    out.t = field_of<double>(j, "t", side);
    try {
        out.density = GriddedDensity(domain_from(j, side), nx, nv, std::move(values));
    } catch (const std::invalid_argument& ex) {
        throw FormatError(side.string() + ": " + ex.what());
    }
    return out;
}

GriddedDensity as_endpoint_grid(const GridDump& d) {
    if (d.v_layout == VLayout::endpoint) return d.density;
    const GriddedDensity& p = d.density;
    GriddedDensity out(p.domain(), p.nx(), p.nv() + 1);
    for (std::size_t i = 0; i < p.nx(); ++i) {
        for (std::size_t j = 0; j < p.nv(); ++j) out(i, j) = p(i, j);
        out(i, p.nv()) = p(i, 0);
    }
    return out;
}

SpectralState as_spectral_state(const GridDump& d) {
    const GriddedDensity& g = d.density;
    const std::size_t nv = d.v_layout == VLayout::periodic ? g.nv() : g.nv() - 1;
    SpectralState s(g.domain(), g.nx(), nv);
    for (std::size_t i = 0; i < g.nx(); ++i)
        for (std::size_t j = 0; j < nv; ++j) s(i, j) = g(i, j);
    s.t = d.t;
    return s;
}

void write_particle_dump(const fs::path& path, const ParticleEnsemble& e, const PhaseSpaceDomain& d) {
    const fs::path base = dump_base(path);
    const std::size_t n = e.size();
    std::vector<double> payload;
    payload.reserve(4 * n);
    for (const auto* col : {&e.x, &e.v, &e.f_like, &e.g_like}) payload.insert(payload.end(), col->begin(), col->end());
    write_payload(with_suffix(base, ".bin"), payload);
    write_sidecar(with_suffix(base, ".json"), {{"kind", "particles"},
                                               {"n_p", n},
                                               {"columns", {"x", "v", "f_like", "g_like"}},
                                               {"layout", "column blocks"},
                                               {"domain", domain_json(d)},
                                               {"t", e.t},
                                               {"dtype", "float64"},
                                               {"endianness", "little"}});
}

ParticleDump read_particle_dump(const fs::path& path) {
    const fs::path base = dump_base(path);
    const fs::path side = with_suffix(base, ".json");
    const json j = read_sidecar(side);
    if (field_of<std::string>(j, "kind", side) != "particles")
        throw FormatError(side.string() + ": not a particle dump");
    const auto n = field_of<std::size_t>(j, "n_p", side);
    const std::vector<double> payload = read_payload(with_suffix(base, ".bin"), 4 * n);
    ParticleDump out;
    out.domain = domain_from(j, side);
    out.ensemble = ParticleEnsemble(n);
    out.ensemble.t = field_of<double>(j, "t", side);
    std::size_t off = 0;
    for (auto* col : {&out.ensemble.x, &out.ensemble.v, &out.ensemble.f_like, &out.ensemble.g_like}) {
        std::copy(payload.begin() + static_cast<std::ptrdiff_t>(off),
                  payload.begin() + static_cast<std::ptrdiff_t>(off + n), col->begin());
        off += n;
    }
    return out;
}

std::string dump_info(const fs::path& path) {
    const fs::path side = with_suffix(dump_base(path), ".json");
    return read_sidecar(side).dump(2);
}

} // namespace vqmc
