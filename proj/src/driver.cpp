#include "vqmc/driver.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "vqmc/coupling.hpp"
#include "vqmc/densest.hpp"
#include "vqmc/errors.hpp"
#include "vqmc/io.hpp"
#include "vqmc/lowdisc.hpp"
#include "vqmc/parallel.hpp"
#include "vqmc/pic.hpp"
#include "vqmc/sampling.hpp"
#include "vqmc/spectral.hpp"

namespace vqmc {

namespace fs = std::filesystem;

ParticleEnsemble initial_markers(const RunConfig& cfg) {
    const PhaseSpaceDomain d = cfg.domain();
    const PointSet2D pairs = generate_pairs(cfg.sequence, cfg.n_p);
    if (cfg.sampling == MarkerSampling::uniform)
        return uniform_sample(cfg.ic, pairs, {d.x_min, d.x_max, d.v_min, d.v_max});
    return its_tensor_product(cfg.ic, pairs, d);
}

namespace {

std::string numbered(const char* stem, std::size_t step) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%06zu", stem, step);
    return buf;
}

SpectralRunConfig spectral_config(const RunConfig& cfg) {
    SpectralRunConfig s;
    s.ic = cfg.ic;
    s.domain = cfg.domain();
    s.nx = cfg.nx;
    s.nv = cfg.nv;
    s.dt = cfg.dt;
    s.t_max = cfg.t_max;
    s.output_stride = cfg.output_stride;
    s.hk_stride = cfg.hk_stride;
    s.filter = cfg.filter;
    return s;
}

PicRunConfig pic_config(const RunConfig& cfg) {
    PicRunConfig p;
    p.n_f = cfg.n_f;
    p.dt = cfg.dt;
    p.t_max = cfg.t_max;
    p.integrator = cfg.integrator;
    p.output_stride = cfg.output_stride;
    p.disc_stride = cfg.disc_stride;
    if (cfg.disc_stride > 0) p.disc_window = cfg.disc_window;
    p.disc_cap = cfg.disc_cap;
    return p;
}

} // namespace

RunOutput execute_run(const RunConfig& cfg, const fs::path& out_dir) {
    validate(cfg);
    const bool write = !out_dir.empty();
    if (write) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
        std::ofstream echo(out_dir / "config.ini", std::ios::binary);
        if (!echo) throw IoError("cannot write " + (out_dir / "config.ini").string());
        echo << echo_config(cfg);
    }
    RunOutput out;
    const PhaseSpaceDomain d = cfg.domain();
    switch (cfg.solver) {
    case SolverKind::spectral: {
        auto observer = [&](const SpectralState& s, std::size_t step) {
            if (write && cfg.dump_stride > 0 && step % cfg.dump_stride == 0)
                write_spectral_dump(out_dir / numbered("spectral", step), s);
        };
        SpectralRun run = run_spectral(spectral_config(cfg), nullptr, observer);
        if (run.non_neutral_seen) out.warnings.push_back("NonNeutralPlasma: mean density deviates from 1 by > 1e-6");
        if (write) write_spectral_dump(out_dir / "spectral_final", run.state);
        out.records = std::move(run.records);
        break;
    }
    case SolverKind::pic: {
        auto observer = [&](const ParticleEnsemble& e, std::size_t step) {
            if (write && cfg.dump_stride > 0 && step % cfg.dump_stride == 0)
                write_particle_dump(out_dir / numbered("particles", step), e, d);
        };
        ParticleEnsemble e = initial_markers(cfg);
        if (write) write_particle_dump(out_dir / "particles_initial", e, d);
        PicRun run = run_pic(std::move(e), d.x_min, d.length_x(), pic_config(cfg), observer);
        if (run.max_entropy_skipped > 0.0)
            out.warnings.push_back("entropy skipped a fraction " + format_double(run.max_entropy_skipped) +
                                   " of markers with f <= 0");
        if (write) write_particle_dump(out_dir / "particles_final", run.ensemble, d);
        out.records = std::move(run.records);
        break;
    }
    case SolverKind::coupled: {
        CoupledConfig cc;
        cc.spectral = spectral_config(cfg);
        cc.handoff = {*cfg.t0, cfg.n_p, cfg.n_pad, cfg.sequence, cfg.n_f};
        cc.pic = pic_config(cfg);
        CoupledRun run = run_coupled(cc);
        if (write) {
            write_particle_dump(out_dir / "particles_handoff", run.handoff.ensemble, d);
            write_particle_dump(out_dir / "particles_final", run.final_ensemble, d);
        }
        out.records = std::move(run.records);
        break;
    }
    }
    if (write) write_timeseries(out_dir / "timeseries.csv", out.records);
    return out;
}

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void report(std::ostream& err, std::string_view kind, std::string_view message) {
    err << nlohmann::json{{"error", kind}, {"message", message}}.dump() << '\n';
}

SequenceKind sequence_from(const std::string& kind, std::uint64_t seed, std::uint64_t skip) {
    if (kind == "sobol") {
        if (skip < 1) throw UsageError("--skip must be >= 1");
        return Sobol{skip};
    }
    if (kind == "random") return PseudoRandom{seed};
    throw UsageError("--sequence must be sobol or random");
}

AxisBox parse_window(const std::string& text) {
    std::vector<double> parts;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            parts.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw UsageError("--window: '" + item + "' is not a number");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (parts.size() != 4 || !(parts[1] > parts[0]) || !(parts[3] > parts[2]))
        throw UsageError("--window expects x_lo,x_hi,v_lo,v_hi with x_hi > x_lo and v_hi > v_lo");
    return {parts[0], parts[1], parts[2], parts[3]};
}

} // namespace

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
    apply_thread_env();
    CLI::App app{"Vlasov-Poisson spectral / particle-in-cell toolkit with QMC sampling diagnostics", "vqmc"};
    app.require_subcommand(1);

    // run
    std::string config_path, out_dir_override;
    std::vector<std::string> overrides;
    auto* run = app.add_subcommand("run", "Run a spectral, PIC or coupled simulation from a config file");
    run->add_option("-c,--config", config_path, "key = value config file");
    run->add_option("-s,--set", overrides, "override, key=value (repeatable; wins over the file)");
    run->add_option("-o,--output-dir", out_dir_override, "output directory (overrides output_dir)");

    // sample
    std::string density_path, sample_out, seq_kind = "sobol";
    std::size_t n_samples = 0;
    std::uint64_t seed = 0, skip = 1;
    auto* sample = app.add_subcommand("sample", "Draw markers from a grid dump by the bilinear inverse transform");
    sample->add_option("-d,--density", density_path, "grid dump")->required();
    sample->add_option("-n,--n", n_samples, "number of markers")->required();
    sample->add_option("--sequence", seq_kind, "sobol or random");
    sample->add_option("--seed", seed, "seed for --sequence random");
    sample->add_option("--skip", skip, "leading Sobol points to drop (>= 1)");
    sample->add_option("-o,--out", sample_out, "particle dump to write")->required();

    // reconstruct
    std::string particles_path, mode = "osde", recon_out;
    std::size_t rnx = 64, rnv = 64;
    bool use_weights = false;
    std::optional<double> lambda;
    auto* recon = app.add_subcommand("reconstruct", "Rebuild a grid density from a particle dump");
    recon->add_option("-p,--particles", particles_path, "particle dump")->required();
    recon->add_option("-m,--mode", mode, "osde or interp");
    recon->add_option("--nx", rnx, "x nodes");
    recon->add_option("--nv", rnv, "v nodes (including both endpoints)");
    recon->add_flag("-w,--weights", use_weights, "osde of f (weights f/g) instead of the sampling density");
    recon->add_option("--lambda", lambda, "ridge weight for interp (default 1e-8 x max diagonal)");
    recon->add_option("-o,--out", recon_out, "grid dump to write")->required();

    // discrepancy
    std::vector<std::string> disc_paths;
    std::string window_text = "0,2,-1,1";
    std::size_t cap = kDefaultDiscrepancyCap;
    auto* disc = app.add_subcommand("discrepancy", "Windowed star discrepancy of particle dumps");
    disc->add_option("dumps", disc_paths, "particle dumps")->required();
    disc->add_option("--window", window_text, "x_lo,x_hi,v_lo,v_hi");
    disc->add_option("--cap", cap, "subsample cap for the exact computation");

    // hk-variation
    std::vector<std::string> hk_paths;
    auto* hk = app.add_subcommand("hk-variation", "Hardy-Krause variation of grid dumps");
    hk->add_option("dumps", hk_paths, "grid dumps")->required();

    // dump-info
    std::string info_path;
    auto* info = app.add_subcommand("dump-info", "Print a dump's sidecar");
    info->add_option("dump", info_path, "dump path")->required();

    try {
        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return 0;
        } catch (const CLI::CallForAllHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return 0;
        } catch (const CLI::ParseError& e) {
            throw UsageError(e.what());
        }

        if (*run) {
            if (config_path.empty() && overrides.empty()) throw UsageError("run: give --config and/or --set");
            const RunConfig cfg =
                config_path.empty() ? parse_config("", overrides, "<overrides>") : load_config(config_path, overrides);
            const fs::path dir = out_dir_override.empty() ? fs::path(cfg.output_dir) : fs::path(out_dir_override);
            const RunOutput result = execute_run(cfg, dir);
            for (const auto& w : result.warnings) err << nlohmann::json{{"warning", w}}.dump() << '\n';
            out << "wrote " << result.records.size() << " records to " << (dir / "timeseries.csv").string() << '\n';
        } else if (*sample) {
            if (n_samples == 0) throw UsageError("sample: --n must be >= 1");
            const SequenceKind kind = sequence_from(seq_kind, seed, skip);
            const GriddedDensity f = as_endpoint_grid(read_grid_dump(density_path));
            const BilinearSampler sampler(normalize_to_sampling_density(f));
            ParticleEnsemble e = sampler.rosenblatt_sample(generate_pairs(kind, n_samples));
            for (std::size_t k = 0; k < e.size(); ++k) e.f_like[k] = f.interpolate(e.x[k], e.v[k]);
            e.t = read_grid_dump(density_path).t;
            write_particle_dump(sample_out, e, f.domain());
            out << "wrote " << e.size() << " markers to " << dump_base(sample_out).string() << ".bin\n";
        } else if (*recon) {
            if (rnx < 2 || rnv < 2) throw UsageError("reconstruct: --nx and --nv must be >= 2");
            const ParticleDump p = read_particle_dump(particles_path);
            const LinearSplineBasis2D basis(p.domain, rnx, rnv);
            GriddedDensity g;
            if (mode == "osde") {
                g = osde_linear(p.ensemble, basis, use_weights);
            } else if (mode == "interp") {
                std::vector<Sample3> samples(p.ensemble.size());
                for (std::size_t k = 0; k < samples.size(); ++k)
                    samples[k] = {p.ensemble.x[k], p.ensemble.v[k], p.ensemble.f_like[k]};
                g = bilinear_ridge_fit(samples, basis, lambda);
            } else {
                throw UsageError("reconstruct: --mode must be osde or interp");
            }
            write_grid_dump(recon_out, g, p.ensemble.t);
            out << "wrote " << rnx << "x" << rnv << " grid to " << dump_base(recon_out).string() << ".bin\n";
        } else if (*disc) {
            if (cap < 1) throw UsageError("discrepancy: --cap must be >= 1");
            const AxisBox window = parse_window(window_text);
            out << "t,n_in_window,n_used,d_star\n";
            for (const auto& path : disc_paths) {
                const ParticleDump p = read_particle_dump(path);
                const WindowDiscrepancy w = star_discrepancy_in_window(p.ensemble, window, cap);
                out << format_double(p.ensemble.t) << ',' << w.n_in_window << ',' << w.n_used << ','
                    << format_double(w.d_star) << '\n';
            }
        } else if (*hk) {
            out << "t,hk_variation\n";
            for (const auto& path : hk_paths) {
                const SpectralState s = as_spectral_state(read_grid_dump(path));
                out << format_double(s.t) << ',' << format_double(hk_variation(s)) << '\n';
            }
        } else if (*info) {
            out << dump_info(info_path) << '\n';
        }
        return 0;
    } catch (const UsageError& e) {
        report(err, "UsageError", e.what());
        return 2;
    } catch (const ParseError& e) {
        report(err, e.kind(), e.what());
        return 2;
    } catch (const ValidationError& e) {
        report(err, e.kind(), e.what());
        return 2;
    } catch (const Error& e) {
        report(err, e.kind(), e.what());
        return 1;
    } catch (const std::exception& e) {
        report(err, "RuntimeError", e.what());
        return 1;
    }
}

} // namespace vqmc
