#pragma once

// Microbenchmark of the per-measurement cost (predict + test + update) for a
// chosen predictor/test pair at a given stream dimension.

#include <cstddef>
#include <cstdint>

#include "sentinel/detector.hpp"

namespace sentinel {

struct BenchConfig {
    PredictorKind predictor = PredictorKind::ar;
    TestMode test = TestMode::omnidirectional;
    std::size_t k = 504;
    std::size_t iters = 10000;
    std::size_t ma_window = 200;
    std::uint64_t seed = 1;
};

struct BenchResult {
    double mean_ns = 0.0;
    double median_ns = 0.0;
    double p95_ns = 0.0;
    std::size_t iters = 0;
    std::size_t k = 0;
};

// Warms the detector on a synthetic stream (the moving-average window is
// filled completely so its steady-state cost is measured), then times iters
// further steps individually.
BenchResult run_bench(const BenchConfig& config);

}  // namespace sentinel
