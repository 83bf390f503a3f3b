#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include <omp.h>

namespace vqmc {

/// Environment variable that overrides the OpenMP thread count.
inline constexpr const char* kThreadEnvVar = "VQMC_NUM_THREADS";

/// Applies the thread-count override from the environment, if present.
/// Returns the thread count in effect afterwards.
int apply_thread_env();

inline int max_threads() { return omp_get_max_threads(); }

/// Fixed partition of [0, n) into contiguous blocks. The block layout depends
/// only on n and the per-block buffer size, never on the thread count, so a
/// reduction that sums per-block partials in block order is bit-reproducible.
struct BlockPartition {
    std::size_t n = 0;
    std::size_t blocks = 1;

    BlockPartition(std::size_t n_items, std::size_t buffer_size, std::size_t grain = 8192) : n(n_items) {
        constexpr std::size_t kMaxBlocks = 64;
        constexpr std::size_t kMaxBufferDoubles = std::size_t{1} << 25;
        std::size_t by_items = std::max<std::size_t>(1, n_items / grain);
        std::size_t by_memory = std::max<std::size_t>(1, kMaxBufferDoubles / std::max<std::size_t>(1, buffer_size));
        blocks = std::min({by_items, by_memory, kMaxBlocks});
    }

    std::size_t begin(std::size_t b) const { return b * n / blocks; }
    std::size_t end(std::size_t b) const { return (b + 1) * n / blocks; }
};

/// Sums per-block buffers (laid out block-major) into `out` in block order.
inline void merge_blocks(const std::vector<double>& partials, std::size_t blocks, std::vector<double>& out) {
    const std::size_t width = out.size();
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t b = 0; b < blocks; ++b) {
        const double* p = partials.data() + b * width;
        for (std::size_t i = 0; i < width; ++i) out[i] += p[i];
    }
}

} // namespace vqmc
