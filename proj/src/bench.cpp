#include "sentinel/bench.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include "sentinel/simulator.hpp"

namespace sentinel {

BenchResult run_bench(const BenchConfig& config) {
    if (config.k == 0 || config.iters == 0)
        throw std::invalid_argument("run_bench: k and iters must be >= 1");

    ChannelParams channel;
    channel.a = 0.98;
    channel.u_cov = DiagCovariance::constant(config.k, 0.0396);
    channel.v_cov = DiagCovariance::constant(config.k, 0.1);
    channel.x_init_cov = DiagCovariance::constant(config.k, 1.0);
    channel.phase_noise = true;

    SimStreams streams(config.seed);
    std::vector<cplx> x = gm_init(channel, streams.noise);
    auto next_measurement = [&](std::size_t t) {
        GmStep step = gm_step(x, channel, streams.noise, streams.phase);
        x = std::move(step.x_next);
        step.y.t = t;
        return std::move(step.y);
    };

    DetectorConfig det;
    det.predictor = config.predictor;
    det.test.mode = config.test;
    det.test.eta = 25.0;  // fixed plausible threshold; decisions need not be meaningful
    det.warmup_steps = 0;
    det.ma_window = config.ma_window;
    Detector detector(det);

    // Warm-up: fill the moving-average window (or settle the recursions).
    const std::size_t warm = config.predictor == PredictorKind::ma ? config.ma_window : 100;
    std::size_t t = 0;
    for (; t < warm; ++t) detector.step(next_measurement(t));

    std::vector<double> samples_ns;
    samples_ns.reserve(config.iters);
    using clock = std::chrono::steady_clock;
    for (std::size_t i = 0; i < config.iters; ++i, ++t) {
        const FeatureVector y = next_measurement(t);
        const auto t0 = clock::now();
        detector.step(y);
        const auto t1 = clock::now();
        samples_ns.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count());
    }

    BenchResult result;
    result.iters = config.iters;
    result.k = config.k;
    double sum = 0.0;
    for (double s : samples_ns) sum += s;
    result.mean_ns = sum / static_cast<double>(samples_ns.size());
    std::sort(samples_ns.begin(), samples_ns.end());
    result.median_ns = samples_ns[samples_ns.size() / 2];
    result.p95_ns = samples_ns[static_cast<std::size_t>(0.95 * static_cast<double>(samples_ns.size() - 1))];
    return result;
}

}  // namespace sentinel
