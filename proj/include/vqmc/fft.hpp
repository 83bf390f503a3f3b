#pragma once

#include <complex>
#include <cstddef>
#include <memory>

namespace vqmc {

using cplx = std::complex<double>;

/// 1-D real-to-complex transform of fixed length backed by FFTW.
/// The plans are created once (planner access is serialized internally);
/// forward/backward may be called concurrently from many threads on
/// distinct buffers. No normalization is applied: backward(forward(a)) = n a.
class RealFft {
  public:
    explicit RealFft(std::size_t n);
    ~RealFft();
    RealFft(RealFft&&) noexcept;
    RealFft& operator=(RealFft&&) noexcept;
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    std::size_t size() const { return n_; }
    std::size_t spectrum_size() const { return n_ / 2 + 1; }

    /// in: n reals, out: n/2+1 complex.
    void forward(const double* in, cplx* out) const;
    /// in: n/2+1 complex (overwritten), out: n reals.
    void backward(cplx* in, double* out) const;

  private:
    struct Plans;
    std::size_t n_ = 0;
    std::unique_ptr<Plans> plans_;
};

/// 2-D real-to-complex transform on a row-major n0 x n1 array
/// (spectrum n0 x (n1/2+1)). Same conventions as RealFft.
class RealFft2D {
  public:
    RealFft2D(std::size_t n0, std::size_t n1);
    ~RealFft2D();
    RealFft2D(RealFft2D&&) noexcept;
    RealFft2D& operator=(RealFft2D&&) noexcept;
    RealFft2D(const RealFft2D&) = delete;
    RealFft2D& operator=(const RealFft2D&) = delete;

    void forward(const double* in, cplx* out) const;
    void backward(cplx* in, double* out) const;

  private:
    struct Plans;
    std::size_t n0_ = 0, n1_ = 0;
    std::unique_ptr<Plans> plans_;
};

} // namespace vqmc
