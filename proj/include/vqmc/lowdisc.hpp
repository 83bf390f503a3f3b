#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "vqmc/core.hpp"

namespace vqmc {

/// Pseudo-random pairs from xoshiro256** seeded through splitmix64.
struct PseudoRandom {
    std::uint64_t seed = 0;
};

/// Gray-code ordered 2-D Sobol points; `skip` leading points are dropped
/// (the all-zero point at index 0 is always among them).
struct Sobol {
    std::uint64_t skip = 1;
};

using SequenceKind = std::variant<PseudoRandom, Sobol>;

struct Point2 {
    double u = 0.0;
    double w = 0.0;
    friend bool operator==(const Point2&, const Point2&) = default;
};

using PointSet2D = std::vector<Point2>;

/// xoshiro256** 1.0 (Blackman & Vigna), state seeded from splitmix64.
/// Bit-reproducible on every platform.
class Xoshiro256 {
  public:
    explicit Xoshiro256(std::uint64_t seed);
    std::uint64_t next();
    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  private:
    std::array<std::uint64_t, 4> s_{};
};

/// Two-dimensional Sobol sequence. Dimension 1 is the base-2 van der Corput
/// sequence; dimension 2 uses the degree-1 primitive polynomial x + 1 with
/// initial direction number m_1 = 1 (Bratley & Fox; Joe & Kuo, "new-joe-kuo-6.21201",
/// first row). Points are produced in Gray-code order (Antonov & Saleev).
class Sobol2D {
  public:
    static constexpr int kBits = 32;

    explicit Sobol2D(std::uint64_t skip = 1);
    Point2 next();
    /// Point with Gray-code index n, independent of the running state.
    static Point2 at(std::uint64_t n);
    static const std::array<std::array<std::uint32_t, kBits>, 2>& direction_numbers();

  private:
    std::uint64_t index_ = 0;
    std::uint32_t x_[2] = {0, 0};
};

/// n deterministic pairs in [0,1)^2.
PointSet2D generate_pairs(const SequenceKind& kind, std::size_t n);

/// Exact star discrepancy sup_B |vol(B) - #{p in B}/n| over anchored boxes,
/// evaluating open and closed counts at every critical corner. O(n^2) time,
/// O(n) memory per thread; the corner loop runs in parallel and the result does
/// not depend on the thread count. Throws EmptyPointSet for n = 0.
double star_discrepancy(std::span<const Point2> points);

/// Serial reference: same critical corners, visited by an incremental sweep
/// over x that inserts points into a running y histogram.
double star_discrepancy_serial(std::span<const Point2> points);

struct AxisBox {
    double x_lo = 0.0, x_hi = 1.0, v_lo = 0.0, v_hi = 1.0;
};

struct WindowDiscrepancy {
    double d_star = 0.0;
    std::size_t n_in_window = 0;
    std::size_t n_used = 0; ///< after subsampling to the cap
};

inline constexpr std::size_t kDefaultDiscrepancyCap = 4000;

/// Star discrepancy of the markers inside `window`, rescaled to [0,1]^2.
/// When more than `cap` markers fall inside, every (n_in/cap)-th one by index is used.
WindowDiscrepancy star_discrepancy_in_window(const ParticleEnsemble& e, const AxisBox& window,
                                             std::size_t cap = kDefaultDiscrepancyCap);

} // namespace vqmc
