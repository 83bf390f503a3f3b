#include "vqmc/fft.hpp"

#include <mutex>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace vqmc {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

constexpr unsigned kPlanFlags = FFTW_ESTIMATE | FFTW_UNALIGNED;

fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

} // namespace

struct RealFft::Plans {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    ~Plans() {
        std::lock_guard lock(planner_mutex());
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
    }
};

RealFft::RealFft(std::size_t n) : n_(n), plans_(std::make_unique<Plans>()) {
    if (n < 1) throw std::invalid_argument("RealFft: empty transform");
    std::vector<double> r(n);
    std::vector<cplx> c(n / 2 + 1);
    std::lock_guard lock(planner_mutex());
    plans_->fwd = fftw_plan_dft_r2c_1d(static_cast<int>(n), r.data(), as_fftw(c.data()), kPlanFlags);
    plans_->bwd = fftw_plan_dft_c2r_1d(static_cast<int>(n), as_fftw(c.data()), r.data(), kPlanFlags);
    if (!plans_->fwd || !plans_->bwd) throw std::runtime_error("RealFft: FFTW planning failed");
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

void RealFft::forward(const double* in, cplx* out) const {
    fftw_execute_dft_r2c(plans_->fwd, const_cast<double*>(in), as_fftw(out));
}

void RealFft::backward(cplx* in, double* out) const { fftw_execute_dft_c2r(plans_->bwd, as_fftw(in), out); }

struct RealFft2D::Plans {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;
    ~Plans() {
        std::lock_guard lock(planner_mutex());
        if (fwd) fftw_destroy_plan(fwd);
        if (bwd) fftw_destroy_plan(bwd);
    }
};

RealFft2D::RealFft2D(std::size_t n0, std::size_t n1) : n0_(n0), n1_(n1), plans_(std::make_unique<Plans>()) {
    if (n0 < 1 || n1 < 1) throw std::invalid_argument("RealFft2D: empty transform");
    std::vector<double> r(n0 * n1);
    std::vector<cplx> c(n0 * (n1 / 2 + 1));
    std::lock_guard lock(planner_mutex());
    plans_->fwd =
        fftw_plan_dft_r2c_2d(static_cast<int>(n0), static_cast<int>(n1), r.data(), as_fftw(c.data()), kPlanFlags);
    plans_->bwd =
        fftw_plan_dft_c2r_2d(static_cast<int>(n0), static_cast<int>(n1), as_fftw(c.data()), r.data(), kPlanFlags);
    if (!plans_->fwd || !plans_->bwd) throw std::runtime_error("RealFft2D: FFTW planning failed");
}

RealFft2D::~RealFft2D() = default;
RealFft2D::RealFft2D(RealFft2D&&) noexcept = default;
RealFft2D& RealFft2D::operator=(RealFft2D&&) noexcept = default;

void RealFft2D::forward(const double* in, cplx* out) const {
    fftw_execute_dft_r2c(plans_->fwd, const_cast<double*>(in), as_fftw(out));
}

void RealFft2D::backward(cplx* in, double* out) const { fftw_execute_dft_c2r(plans_->bwd, as_fftw(in), out); }

} // namespace vqmc
