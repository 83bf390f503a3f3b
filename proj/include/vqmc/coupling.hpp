#pragma once

#include <cstddef>
#include <vector>

#include "vqmc/core.hpp"
#include "vqmc/lowdisc.hpp"
#include "vqmc/pic.hpp"
#include "vqmc/spectral.hpp"

namespace vqmc {

struct HandoffConfig {
    double t0 = 35.0;
    std::size_t n_p = 100000;
    std::size_t n_pad = 32;
    SequenceKind sequence = Sobol{};
    std::size_t n_f = 16;
};

struct Handoff {
    ParticleEnsemble ensemble;
    GriddedDensity f_fine; ///< zero-padded spectral density
    double fine_mass = 0.0;
};

/// Pads the spectral state, samples |f| / mass with the bilinear Rosenblatt
/// transform and assigns f_like from the bilinear interpolant of the padded f
/// (negative values kept).
Handoff handoff(const SpectralState& s, const HandoffConfig& cfg);

struct CoupledConfig {
    SpectralRunConfig spectral; ///< t_max is ignored; the spectral segment ends at handoff.t0
    HandoffConfig handoff;
    PicRunConfig pic;           ///< integrator is forced to ruth3, t_max is the end of the run
};

struct CoupledRun {
    std::vector<DiagnosticsRecord> records; ///< spectral segment followed by the PIC segment
    Handoff handoff;
    ParticleEnsemble final_ensemble;
};

CoupledRun run_coupled(const CoupledConfig& cfg);

} // namespace vqmc
