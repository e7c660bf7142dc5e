#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

namespace qtraj {

// Ensemble reductions accumulate in fixed-point int64, so merges commute
// exactly and results are bit-identical for any worker count.  Quantization
// steps are far below every statistical tolerance in use.
inline constexpr double kQCoord = 68719476736.0;   // 2^36, for values in [-1, 1]
inline constexpr double kQSample = 1048576.0;      // 2^20, for record samples
inline constexpr double kQSampleSq = 4096.0;       // 2^12, for squared samples

inline std::int64_t fixed_of(double v, double scale) {
    if (!std::isfinite(v)) throw std::runtime_error("non-finite value in reduction");
    return std::llround(v * scale);
}

inline double fixed_to(std::int64_t q, double scale) {
    return static_cast<double>(q) / scale;
}

// Mean and standard error of the mean from fixed-point sums of v and v^2.
struct MomentStats {
    double mean = 0.0;
    double se = 0.0;
    double var = 0.0;
};

inline MomentStats moments(std::int64_t sum_q, double scale, std::int64_t sumsq_q,
                           double scale_sq, std::int64_t n) {
    MomentStats out;
    if (n <= 0) return out;
    const double nd = static_cast<double>(n);
    out.mean = fixed_to(sum_q, scale) / nd;
    const double ex2 = fixed_to(sumsq_q, scale_sq) / nd;
    out.var = std::max(0.0, ex2 - out.mean * out.mean) * (n > 1 ? nd / (nd - 1.0) : 1.0);
    out.se = std::sqrt(out.var / nd);
    return out;
}

// Trajectory indices are processed in fixed blocks; each worker owns a private
// accumulator and merges at the end.  Accumulators must be integer-valued so
// the merge order cannot matter.
inline constexpr std::uint32_t kTrajectoryBlock = 256;

template <class Acc, class Body>
Acc run_trajectories(std::uint32_t n_traj, int workers, const Acc& init, Body&& body) {
    if (workers <= 1) {
        Acc acc = init;
        for (std::uint32_t i = 0; i < n_traj; ++i) body(acc, i);
        return acc;
    }
    const std::uint32_t n_blocks = (n_traj + kTrajectoryBlock - 1) / kTrajectoryBlock;
    std::atomic<std::uint32_t> next{0};
    std::mutex merge_mutex;
    Acc total = init;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    std::exception_ptr failure;
    std::mutex failure_mutex;
    for (int t = 0; t < workers; ++t) {
        pool.emplace_back([&, init]() {
            Acc local = init;
            try {
                for (;;) {
                    const std::uint32_t blk = next.fetch_add(1);
                    if (blk >= n_blocks) break;
                    const std::uint32_t lo = blk * kTrajectoryBlock;
                    const std::uint32_t hi =
                        std::min<std::uint32_t>(lo + kTrajectoryBlock, n_traj);
                    for (std::uint32_t i = lo; i < hi; ++i) body(local, i);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lk(failure_mutex);
                if (!failure) failure = std::current_exception();
            }
            std::lock_guard<std::mutex> lk(merge_mutex);
            total.merge(local);
        });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
    return total;
}

}  // namespace qtraj
