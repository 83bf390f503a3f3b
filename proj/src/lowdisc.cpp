#include "vqmc/lowdisc.hpp"

#include <algorithm>
#include <bit>
#include <numeric>

#include "vqmc/errors.hpp"
#include "vqmc/parallel.hpp"

namespace vqmc {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr double kTwoPowMinus32 = 0x1.0p-32;

} // namespace

Xoshiro256::Xoshiro256(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
}

std::uint64_t Xoshiro256::next() {
    const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
}

const std::array<std::array<std::uint32_t, Sobol2D::kBits>, 2>& Sobol2D::direction_numbers() {
    static const auto table = [] {
        std::array<std::array<std::uint32_t, kBits>, 2> v{};
        for (int b = 0; b < kBits; ++b) v[0][b] = std::uint32_t{1} << (kBits - 1 - b);
        // x + 1: v_b = v_{b-1} ^ (v_{b-1} >> 1), v_0 = m_1 / 2 with m_1 = 1.
        v[1][0] = std::uint32_t{1} << (kBits - 1);
        for (int b = 1; b < kBits; ++b) v[1][b] = v[1][b - 1] ^ (v[1][b - 1] >> 1);
        return v;
    }();
    return table;
}

Point2 Sobol2D::at(std::uint64_t n) {
    const auto& v = direction_numbers();
    const std::uint64_t gray = n ^ (n >> 1);
    std::uint32_t a = 0, b = 0;
    for (int bit = 0; bit < kBits; ++bit) {
        if ((gray >> bit) & 1U) {
            a ^= v[0][bit];
            b ^= v[1][bit];
        }
    }
    return {a * kTwoPowMinus32, b * kTwoPowMinus32};
}

Sobol2D::Sobol2D(std::uint64_t skip) : index_(skip) {
    const Point2 p = at(skip);
    x_[0] = static_cast<std::uint32_t>(p.u / kTwoPowMinus32);
    x_[1] = static_cast<std::uint32_t>(p.w / kTwoPowMinus32);
}

Point2 Sobol2D::next() {
    const Point2 p{x_[0] * kTwoPowMinus32, x_[1] * kTwoPowMinus32};
    // Advance by flipping the direction number of the lowest set bit of the next index.
    const auto& v = direction_numbers();
    ++index_;
    const int c = std::countr_zero(index_);
    x_[0] ^= v[0][c];
    x_[1] ^= v[1][c];
    return p;
}

PointSet2D generate_pairs(const SequenceKind& kind, std::size_t n) {
    PointSet2D out(n);
    std::visit(
        [&](const auto& k) {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, PseudoRandom>) {
                Xoshiro256 rng(k.seed);
                for (auto& p : out) {
                    p.u = rng.uniform();
                    p.w = rng.uniform();
                }
            } else {
                Sobol2D seq(std::max<std::uint64_t>(1, k.skip));
                for (auto& p : out) p = seq.next();
            }
        },
        kind);
    return out;
}

namespace {

/// Points sorted by x with the rank of each y among the distinct y values.
struct CornerTables {
    std::vector<double> xs;     // x of points, ascending
    std::vector<std::size_t> ry; // y rank of the point at the same position
    std::vector<double> ux;     // distinct x values, then 1
    std::vector<double> wy;     // distinct y values, then 1
    std::vector<std::size_t> open_end;   // #points with x <  ux[a]
    std::vector<std::size_t> closed_end; // #points with x <= ux[a]
};

CornerTables build_tables(std::span<const Point2> points) {
    const std::size_t n = points.size();
    CornerTables t;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return points[a].u < points[b].u || (points[a].u == points[b].u && points[a].w < points[b].w);
    });
    t.wy.reserve(n + 1);
    for (const auto& p : points) t.wy.push_back(p.w);
    std::sort(t.wy.begin(), t.wy.end());
    t.wy.erase(std::unique(t.wy.begin(), t.wy.end()), t.wy.end());
    if (t.wy.empty() || t.wy.back() < 1.0) t.wy.push_back(1.0);

    t.xs.resize(n);
    t.ry.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Point2& p = points[order[k]];
        t.xs[k] = p.u;
        t.ry[k] = static_cast<std::size_t>(std::lower_bound(t.wy.begin(), t.wy.end(), p.w) - t.wy.begin());
    }
    t.ux = t.xs;
    t.ux.erase(std::unique(t.ux.begin(), t.ux.end()), t.ux.end());
    if (t.ux.empty() || t.ux.back() < 1.0) t.ux.push_back(1.0);
    t.open_end.resize(t.ux.size());
    t.closed_end.resize(t.ux.size());
    for (std::size_t a = 0; a < t.ux.size(); ++a) {
        t.open_end[a] = static_cast<std::size_t>(std::lower_bound(t.xs.begin(), t.xs.end(), t.ux[a]) - t.xs.begin());
        t.closed_end[a] = static_cast<std::size_t>(std::upper_bound(t.xs.begin(), t.xs.end(), t.ux[a]) - t.xs.begin());
    }
    return t;
}

/// Scans every y corner for one x corner given the open/closed y histograms.
double scan_column(double u, const std::vector<double>& wy, const std::vector<std::size_t>& open_hist,
                   const std::vector<std::size_t>& closed_hist, double inv_n) {
    double best = 0.0;
    std::size_t open_below = 0;   // #open points with y <  wy[b]
    std::size_t closed_upto = 0;  // #closed points with y <= wy[b]
    for (std::size_t b = 0; b < wy.size(); ++b) {
        closed_upto += closed_hist[b];
        const double area = u * wy[b];
        best = std::max(best, area - static_cast<double>(open_below) * inv_n);
        best = std::max(best, static_cast<double>(closed_upto) * inv_n - area);
        open_below += open_hist[b];
    }
    return best;
}

} // namespace

double star_discrepancy(std::span<const Point2> points) {
    if (points.empty()) throw EmptyPointSet("star_discrepancy: empty point set");
    const CornerTables t = build_tables(points);
    const double inv_n = 1.0 / static_cast<double>(points.size());
    const std::size_t m = t.wy.size();
    const auto n_corners = static_cast<std::ptrdiff_t>(t.ux.size());
    double result = 0.0;
#pragma omp parallel reduction(max : result)
    {
        std::vector<std::size_t> open_hist(m), closed_hist(m);
#pragma omp for schedule(dynamic, 16)
        for (std::ptrdiff_t a = 0; a < n_corners; ++a) {
            std::fill(open_hist.begin(), open_hist.end(), 0);
            std::fill(closed_hist.begin(), closed_hist.end(), 0);
            const std::size_t oe = t.open_end[a], ce = t.closed_end[a];
            for (std::size_t k = 0; k < oe; ++k) ++open_hist[t.ry[k]];
            for (std::size_t k = 0; k < ce; ++k) ++closed_hist[t.ry[k]];
            result = std::max(result, scan_column(t.ux[a], t.wy, open_hist, closed_hist, inv_n));
        }
    }
    return result;
}

double star_discrepancy_serial(std::span<const Point2> points) {
    if (points.empty()) throw EmptyPointSet("star_discrepancy: empty point set");
    const CornerTables t = build_tables(points);
    const double inv_n = 1.0 / static_cast<double>(points.size());
    std::vector<std::size_t> open_hist(t.wy.size(), 0), closed_hist(t.wy.size(), 0);
    std::size_t open_fill = 0, closed_fill = 0;
    double result = 0.0;
    for (std::size_t a = 0; a < t.ux.size(); ++a) {
        for (; open_fill < t.open_end[a]; ++open_fill) ++open_hist[t.ry[open_fill]];
        for (; closed_fill < t.closed_end[a]; ++closed_fill) ++closed_hist[t.ry[closed_fill]];
        result = std::max(result, scan_column(t.ux[a], t.wy, open_hist, closed_hist, inv_n));
    }
    return result;
}

WindowDiscrepancy star_discrepancy_in_window(const ParticleEnsemble& e, const AxisBox& window, std::size_t cap) {
    const double sx = 1.0 / (window.x_hi - window.x_lo);
    const double sv = 1.0 / (window.v_hi - window.v_lo);
    PointSet2D inside;
    for (std::size_t k = 0; k < e.size(); ++k) {
        const double x = e.x[k], v = e.v[k];
        if (x >= window.x_lo && x < window.x_hi && v >= window.v_lo && v < window.v_hi)
            inside.push_back({std::min((x - window.x_lo) * sx, std::nextafter(1.0, 0.0)),
                              std::min((v - window.v_lo) * sv, std::nextafter(1.0, 0.0))});
    }
    if (inside.empty()) throw EmptyPointSet("star_discrepancy_in_window: no marker inside the window");
    WindowDiscrepancy out;
    out.n_in_window = inside.size();
    if (cap > 0 && inside.size() > cap) {
        PointSet2D sub(cap);
        for (std::size_t k = 0; k < cap; ++k) sub[k] = inside[k * inside.size() / cap];
        inside = std::move(sub);
    }
    out.n_used = inside.size();
    out.d_star = star_discrepancy(inside);
    return out;
}

} // namespace vqmc
