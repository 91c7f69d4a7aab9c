#pragma once

// Synthetic data generation: a first-order Gauss-Markov fading channel with
// optional per-measurement phase noise, windowed anomaly injection, and
// packet-trace synthesis (CSI + quantized RSSI, optional transmit-gain
// randomization).
//
// Determinism contract: every random quantity is drawn from one of four
// sub-streams (channel noise, phase, anomaly, gain) derived from the master
// seed, so toggling phase noise, anomalies, or gain randomization never
// perturbs the remaining draws.  Gaussians use an explicit Box-Muller
// transform over std::mt19937_64 to keep sequences identical across
// platforms and standard libraries.

#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "sentinel/core.hpp"
#include "sentinel/features.hpp"

namespace sentinel {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform();                        // [0, 1)
    double uniform(double lo, double hi);    // [lo, hi)
    double gaussian(double variance);        // mean zero, two uniform draws per call
    cplx complex_gaussian(double variance);  // circularly symmetric, E|z|^2 = variance

private:
    std::mt19937_64 eng_;
};

// splitmix64-based derivation of independent sub-stream seeds.
std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t stream);

// The four independent draw categories of a simulation run.
struct SimStreams {
    Rng noise;    // channel process + measurement noise
    Rng phase;    // per-measurement phase offsets
    Rng anomaly;  // anomaly perturbations
    Rng gain;     // transmit-gain randomization

    explicit SimStreams(std::uint64_t master_seed)
        : noise(derive_stream_seed(master_seed, 0)),
          phase(derive_stream_seed(master_seed, 1)),
          anomaly(derive_stream_seed(master_seed, 2)),
          gain(derive_stream_seed(master_seed, 3)) {}
};

// x(t+1) = a x(t) + u(t),  y(t) = e^{j phi(t)} x(t) + v(t).
struct ChannelParams {
    double a = 0.98;            // transition factor, |a| < 1
    DiagCovariance u_cov;       // process-noise variance per element
    DiagCovariance v_cov;       // measurement-noise variance per element
    DiagCovariance x_init_cov;  // initial state variance per element
    bool phase_noise = true;    // uniform [0, 2pi) offset per measurement

    std::size_t dim() const noexcept { return u_cov.size(); }
    // Throws std::invalid_argument describing the offending field.
    void validate() const;
    // Stationary per-element state variance u / (1 - a^2).
    DiagCovariance stationary_cov() const;
};

// Draws x(0) ~ CN(0, x_init_cov) from the noise stream.
std::vector<cplx> gm_init(const ChannelParams& params, Rng& noise);

struct GmStep {
    std::vector<cplx> x_next;
    FeatureVector y;  // measurement of the *current* state
};

// Draw order per step: v (K complex), u (K complex) from the noise stream;
// one phase draw iff phase_noise is enabled.
GmStep gm_step(const std::vector<cplx>& x, const ChannelParams& params,
               Rng& noise, Rng& phase);

// Windowed anomaly: inside a scheduled window the measurement is replaced by
// y1 ~ CN(gamma * y0, y_cov); outside, y0 passes through with no draw.
struct AnomalyParams {
    int gamma = 1;        // mean retention factor, 0 or 1
    DiagCovariance y_cov; // anomaly variance per element
    std::vector<std::pair<std::size_t, std::size_t>> windows;  // inclusive spans

    void validate(std::size_t k) const;
};

bool anomaly_active(const AnomalyParams& params, std::size_t window_index);
std::vector<cplx> inject_anomaly(const std::vector<cplx>& y0, const AnomalyParams& params,
                                 bool active, Rng& anomaly_rng);

// Packet-trace synthesis on top of the channel model.  One channel step per
// packet; packets_per_bundle packets uniformly spaced inside each
// bundle_window_s window; RSSI = rssi_offset_db + 10 log10(mean |csi|^2),
// quantized to rssi_quantum_db.
struct SynthesisParams {
    std::size_t packets_per_bundle = 50;
    double bundle_window_s = 0.2;
    std::size_t subcarriers = 56;
    double rssi_offset_db = -30.0;
    double rssi_quantum_db = 1.0;
    // Per-packet uniform transmit gain in [first, second); absent = off.
    std::optional<std::pair<double, double>> power_gain;

    void validate() const;
};

struct SynthTrace {
    std::vector<Packet> packets;
    std::vector<std::pair<std::size_t, std::size_t>> labels;  // schedule clipped to span
    std::size_t windows = 0;
};

SynthTrace synthesize_trace(const ChannelParams& channel, const AnomalyParams& anomaly,
                            const SynthesisParams& synth, double duration_s,
                            std::uint64_t seed);

}  // namespace sentinel
