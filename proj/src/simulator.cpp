#include "sentinel/simulator.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace sentinel {

// ==== Rng ====================================================================

double Rng::uniform() {
    // 53 mantissa bits -> [0, 1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::gaussian(double variance) {
    if (!(variance >= 0.0) || !std::isfinite(variance))
        throw std::invalid_argument("Rng::gaussian: variance must be finite and >= 0");
    // Box-Muller, trigonometric form; always exactly two engine draws so the
    // consumption pattern is independent of the values produced.
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return std::sqrt(variance) * r * std::cos(2.0 * std::numbers::pi * u2);
}

cplx Rng::complex_gaussian(double variance) {
    const double re = gaussian(variance / 2.0);
    const double im = gaussian(variance / 2.0);
    return cplx{re, im};
}

std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master;
    std::uint64_t out = 0;
    for (std::uint64_t i = 0; i <= stream; ++i) {
        s += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = s;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        out = z ^ (z >> 31);
    }
    return out;
}

// ==== channel ================================================================

void ChannelParams::validate() const {
    if (!std::isfinite(a) || std::abs(a) >= 1.0)
        throw std::invalid_argument("channel.a must satisfy |a| < 1");
    const std::size_t k = u_cov.size();
    if (k == 0) throw std::invalid_argument("channel.u_var must be non-empty");
    if (!u_cov.is_valid()) throw std::invalid_argument("channel.u_var must be finite and >= 0");
    if (v_cov.size() != k || !v_cov.is_valid())
        throw std::invalid_argument("channel.v_var must match the channel dimension, finite, >= 0");
    if (x_init_cov.size() != k || !x_init_cov.is_valid())
        throw std::invalid_argument("channel.x_init_var must match the channel dimension, finite, >= 0");
}

DiagCovariance ChannelParams::stationary_cov() const {
    validate();
    DiagCovariance out;
    out.variances.reserve(dim());
    for (double u : u_cov.variances) out.variances.push_back(u / (1.0 - a * a));
    return out;
}

std::vector<cplx> gm_init(const ChannelParams& params, Rng& noise) {
    params.validate();
    std::vector<cplx> x(params.dim());
    for (std::size_t k = 0; k < x.size(); ++k)
        x[k] = noise.complex_gaussian(params.x_init_cov.variances[k]);
    return x;
}

GmStep gm_step(const std::vector<cplx>& x, const ChannelParams& params,
               Rng& noise, Rng& phase) {
    if (x.size() != params.dim()) throw std::invalid_argument("gm_step: dimension mismatch");
    const std::size_t k = x.size();
    GmStep step;
    step.y.values.resize(k);
    for (std::size_t i = 0; i < k; ++i)
        step.y.values[i] = x[i] + noise.complex_gaussian(params.v_cov.variances[i]);
    if (params.phase_noise) {
        const double phi = phase.uniform(0.0, 2.0 * std::numbers::pi);
        const cplx rot = std::polar(1.0, phi);
        for (cplx& v : step.y.values) v *= rot;
    }
    step.x_next.resize(k);
    for (std::size_t i = 0; i < k; ++i)
        step.x_next[i] = params.a * x[i] + noise.complex_gaussian(params.u_cov.variances[i]);
    return step;
}

// ==== anomaly ================================================================

void AnomalyParams::validate(std::size_t k) const {
    if (gamma != 0 && gamma != 1)
        throw std::invalid_argument("anomaly.gamma must be 0 or 1");
    if (!windows.empty()) {
        if (y_cov.size() != k || !y_cov.is_valid())
            throw std::invalid_argument("anomaly.y_var must match the channel dimension, finite, >= 0");
        for (const auto& [s, e] : windows)
            if (s > e) throw std::invalid_argument("anomaly.schedule spans must have start <= end");
    }
}

bool anomaly_active(const AnomalyParams& params, std::size_t window_index) {
    for (const auto& [s, e] : params.windows)
        if (window_index >= s && window_index <= e) return true;
    return false;
}

std::vector<cplx> inject_anomaly(const std::vector<cplx>& y0, const AnomalyParams& params,
                                 bool active, Rng& anomaly_rng) {
    if (!active) return y0;
    std::vector<cplx> y1(y0.size());
    for (std::size_t k = 0; k < y0.size(); ++k) {
        const cplx mean = static_cast<double>(params.gamma) * y0[k];
        y1[k] = mean + anomaly_rng.complex_gaussian(params.y_cov.variances[k]);
    }
    return y1;
}

// ==== trace synthesis ========================================================

void SynthesisParams::validate() const {
    if (packets_per_bundle == 0)
        throw std::invalid_argument("synth.packets_per_bundle must be >= 1");
    if (!(bundle_window_s > 0.0) || !std::isfinite(bundle_window_s))
        throw std::invalid_argument("synth.bundle_window_s must be finite and > 0");
    if (subcarriers == 0) throw std::invalid_argument("synth.subcarriers must be >= 1");
    if (!std::isfinite(rssi_offset_db))
        throw std::invalid_argument("synth.rssi_offset_db must be finite");
    if (!(rssi_quantum_db > 0.0) || !std::isfinite(rssi_quantum_db))
        throw std::invalid_argument("synth.rssi_quantum_db must be finite and > 0");
    if (power_gain) {
        const auto& [lo, hi] = *power_gain;
        if (!(lo > 0.0) || !(hi > lo) || !std::isfinite(hi))
            throw std::invalid_argument("synth.power_randomization requires 0 < min_gain < max_gain");
    }
}

SynthTrace synthesize_trace(const ChannelParams& channel, const AnomalyParams& anomaly,
                            const SynthesisParams& synth, double duration_s,
                            std::uint64_t seed) {
    channel.validate();
    synth.validate();
    if (channel.dim() != synth.subcarriers)
        throw std::invalid_argument("synthesize_trace: channel dimension must equal synth.subcarriers");
    anomaly.validate(channel.dim());
    if (!(duration_s > 0.0) || !std::isfinite(duration_s))
        throw std::invalid_argument("synthesize_trace: duration_s must be finite and > 0");

    const auto windows = static_cast<std::size_t>(duration_s / synth.bundle_window_s);
    if (windows == 0) throw std::invalid_argument("synthesize_trace: duration shorter than one window");

    SimStreams streams(seed);
    std::vector<cplx> x = gm_init(channel, streams.noise);

    SynthTrace trace;
    trace.windows = windows;
    trace.packets.reserve(windows * synth.packets_per_bundle);

    for (std::size_t w = 0; w < windows; ++w) {
        const bool active = anomaly_active(anomaly, w);
        for (std::size_t i = 0; i < synth.packets_per_bundle; ++i) {
            GmStep step = gm_step(x, channel, streams.noise, streams.phase);
            x = std::move(step.x_next);
            std::vector<cplx> csi = inject_anomaly(step.y.values, anomaly, active, streams.anomaly);
            if (synth.power_gain) {
                const double g = streams.gain.uniform(synth.power_gain->first, synth.power_gain->second);
                for (cplx& c : csi) c *= g;
            }
            Packet p;
            p.time = (static_cast<double>(w) + (static_cast<double>(i) + 0.5) /
                                                   static_cast<double>(synth.packets_per_bundle)) *
                     synth.bundle_window_s;
            double power = 0.0;
            for (const cplx& c : csi) power += std::norm(c);
            power /= static_cast<double>(csi.size());
            if (power > 0.0) {
                const double rssi = synth.rssi_offset_db + 10.0 * std::log10(power);
                p.rssi = std::round(rssi / synth.rssi_quantum_db) * synth.rssi_quantum_db;
            } else {
                p.rssi_valid = false;
            }
            p.csi = std::move(csi);
            trace.packets.push_back(std::move(p));
        }
    }

    for (const auto& [s, e] : anomaly.windows) {
        if (s >= windows) continue;
        trace.labels.emplace_back(s, std::min(e, windows - 1));
    }
    return trace;
}

}  // namespace sentinel
