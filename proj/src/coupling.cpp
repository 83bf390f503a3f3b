#include "vqmc/coupling.hpp"

#include <stdexcept>

#include "vqmc/sampling.hpp"

namespace vqmc {

Handoff handoff(const SpectralState& s, const HandoffConfig& cfg) {
    if (cfg.n_p < 1) throw std::invalid_argument("handoff: n_p must be >= 1");
    if (cfg.n_pad < 1) throw std::invalid_argument("handoff: n_pad must be >= 1");
    Handoff out;
    out.f_fine = zero_pad(s, cfg.n_pad);
    out.fine_mass = out.f_fine.trapezoid_mass();
    const BilinearSampler sampler(normalize_to_sampling_density(out.f_fine));
    const PointSet2D pairs = generate_pairs(cfg.sequence, cfg.n_p);
    out.ensemble = sampler.rosenblatt_sample(pairs);
    ParticleEnsemble& e = out.ensemble;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t k = 0; k < static_cast<std::ptrdiff_t>(e.size()); ++k)
        e.f_like[k] = out.f_fine.interpolate(e.x[k], e.v[k]);
    e.t = s.t;
    return out;
}

CoupledRun run_coupled(const CoupledConfig& cfg) {
    if (!(cfg.handoff.t0 < cfg.pic.t_max)) throw std::invalid_argument("run_coupled: t0 must precede t_max");
    SpectralRunConfig sc = cfg.spectral;
    sc.t_max = cfg.handoff.t0;
    SpectralRun spec = run_spectral(sc);

    CoupledRun run;
    run.records = std::move(spec.records);
    run.handoff = handoff(spec.state, cfg.handoff);

    PicRunConfig pc = cfg.pic;
    pc.integrator = IntegratorKind::ruth3;
    pc.n_f = cfg.handoff.n_f;
    const PhaseSpaceDomain& d = spec.state.domain();
    PicRun pic = run_pic(run.handoff.ensemble, d.x_min, d.length_x(), pc);
    run.records.insert(run.records.end(), pic.records.begin(), pic.records.end());
    run.final_ensemble = std::move(pic.ensemble);
    return run;
}

} // namespace vqmc
