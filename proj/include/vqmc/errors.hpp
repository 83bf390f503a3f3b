#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vqmc {

/// Base class for every recoverable error raised by the toolkit.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "Error"; }
};

#define VQMC_DEFINE_ERROR(Name)                                                 \
    class Name : public Error {                                                 \
      public:                                                                   \
        using Error::Error;                                                     \
        const char* kind() const noexcept override { return #Name; }            \
    };

VQMC_DEFINE_ERROR(AllZeroDensity)
VQMC_DEFINE_ERROR(EmptyPointSet)
VQMC_DEFINE_ERROR(ZeroConditional)
VQMC_DEFINE_ERROR(NewtonNoConvergence)
VQMC_DEFINE_ERROR(SingularSystem)
VQMC_DEFINE_ERROR(ParseError)
VQMC_DEFINE_ERROR(ValidationError)
VQMC_DEFINE_ERROR(FormatError)
VQMC_DEFINE_ERROR(IoError)

#undef VQMC_DEFINE_ERROR

/// Raised by the implicit integrators when the particle/field fixed point
/// does not settle within the iteration cap.
class FixedPointDiverged : public Error {
  public:
    FixedPointDiverged(std::size_t iterations, double residual)
        : Error("fixed-point iteration did not converge after " + std::to_string(iterations) +
                " iterations (residual " + std::to_string(residual) + ")"),
          iterations_(iterations), residual_(residual) {}
    const char* kind() const noexcept override { return "FixedPointDiverged"; }
    std::size_t iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

  private:
    std::size_t iterations_;
    double residual_;
};

} // namespace vqmc
