#include "sentinel/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sentinel {

std::string feature_kind_name(FeatureKind kind) {
    switch (kind) {
        case FeatureKind::favg_csi_std: return "favg-csi-std";
        case FeatureKind::favg_csi_var: return "favg-csi-var";
        case FeatureKind::csi_std_vec: return "csi-std-vec";
        case FeatureKind::csi_var_vec: return "csi-var-vec";
        case FeatureKind::tavg_csi_ampl_vec: return "tavg-csi-ampl-vec";
        case FeatureKind::rssi_std: return "rssi-std";
        case FeatureKind::rssi_var: return "rssi-var";
        case FeatureKind::tavg_rssi: return "tavg-rssi";
    }
    return "unknown";
}

std::optional<FeatureKind> parse_feature_kind(std::string_view name) {
    for (FeatureKind kind : kAllFeatureKinds) {
        if (feature_kind_name(kind) == name) return kind;
    }
    return std::nullopt;
}

bool feature_uses_rssi(FeatureKind kind) {
    return kind == FeatureKind::rssi_std || kind == FeatureKind::rssi_var ||
           kind == FeatureKind::tavg_rssi;
}

bool feature_is_scalar(FeatureKind kind) {
    return kind == FeatureKind::favg_csi_std || kind == FeatureKind::favg_csi_var ||
           feature_uses_rssi(kind);
}

std::size_t feature_dim(FeatureKind kind, std::size_t k_sub) {
    return feature_is_scalar(kind) ? 1 : k_sub;
}

std::vector<Bundle> bundle_packets(std::span<const Packet> packets, double window_s) {
    if (!(window_s > 0.0) || !std::isfinite(window_s))
        throw std::invalid_argument("bundle_packets: window_s must be finite and > 0");
    std::vector<Bundle> bundles;
    double prev_time = 0.0;
    for (const Packet& p : packets) {
        if (!(p.time >= 0.0) || !std::isfinite(p.time))
            throw std::invalid_argument("bundle_packets: packet time must be finite and >= 0");
        if (p.time < prev_time)
            throw std::invalid_argument("bundle_packets: packet times must be nondecreasing");
        prev_time = p.time;
        const auto idx = static_cast<std::size_t>(p.time / window_s);
        if (bundles.empty() || bundles.back().window_index != idx)
            bundles.push_back(Bundle{idx, {}});
        bundles.back().packets.push_back(p);
    }
    return bundles;
}

Packet normalize_csi(const Packet& p) {
    Packet out = p;
    double norm_sq = 0.0;
    for (const cplx& c : p.csi) norm_sq += std::norm(c);
    const double norm = std::sqrt(norm_sq);
    if (norm > 0.0) {
        for (cplx& c : out.csi) c /= norm;
    }
    out.rssi = 0.0;
    out.rssi_valid = false;  // received power is meaningless after normalization
    return out;
}

namespace {

// Population mean and variance of a sample.
struct MeanVar {
    double mean = 0.0;
    double var = 0.0;
};

MeanVar mean_var(const std::vector<double>& xs) {
    MeanVar mv;
    for (double x : xs) mv.mean += x;
    mv.mean /= static_cast<double>(xs.size());
    for (double x : xs) mv.var += (x - mv.mean) * (x - mv.mean);
    mv.var /= static_cast<double>(xs.size());
    return mv;
}

std::vector<cplx> to_complex(const std::vector<double>& xs) {
    std::vector<cplx> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = cplx{xs[i], 0.0};
    return out;
}

}  // namespace

std::optional<FeatureVector> extract_feature(std::span<const Bundle> pool,
                                             const FeatureSpec& spec) {
    if (pool.empty()) return std::nullopt;
    const std::size_t t = pool.back().window_index;

    if (feature_uses_rssi(spec.kind)) {
        std::vector<double> rssi;
        for (const Bundle& b : pool)
            for (const Packet& p : b.packets)
                if (p.rssi_valid) rssi.push_back(p.rssi);
        const std::size_t min_count = spec.kind == FeatureKind::tavg_rssi ? 1 : 2;
        if (rssi.size() < min_count) return std::nullopt;
        const MeanVar mv = mean_var(rssi);
        double value = 0.0;
        switch (spec.kind) {
            case FeatureKind::rssi_std: value = std::sqrt(mv.var); break;
            case FeatureKind::rssi_var: value = mv.var; break;
            default: value = mv.mean; break;
        }
        return FeatureVector{{cplx{value, 0.0}}, t};
    }

    // CSI kinds: collect per-subcarrier packet amplitudes.
    std::size_t k_sub = 0;
    std::size_t m = 0;
    for (const Bundle& b : pool) m += b.packets.size();
    const std::size_t min_count = spec.kind == FeatureKind::tavg_csi_ampl_vec ? 1 : 2;
    if (m < min_count) return std::nullopt;

    std::vector<std::vector<double>> ampl;  // [subcarrier][packet]
    for (const Bundle& b : pool) {
        for (const Packet& packet : b.packets) {
            const Packet& p = spec.normalized ? normalize_csi(packet) : packet;
            if (k_sub == 0) {
                k_sub = p.csi.size();
                if (k_sub == 0) throw std::invalid_argument("extract_feature: empty CSI");
                ampl.assign(k_sub, {});
                for (auto& a : ampl) a.reserve(m);
            } else if (p.csi.size() != k_sub) {
                throw std::invalid_argument("extract_feature: inconsistent CSI dimensions");
            }
            for (std::size_t k = 0; k < k_sub; ++k) ampl[k].push_back(std::abs(p.csi[k]));
        }
    }

    std::vector<double> per_sub(k_sub);
    for (std::size_t k = 0; k < k_sub; ++k) {
        const MeanVar mv = mean_var(ampl[k]);
        switch (spec.kind) {
            case FeatureKind::csi_std_vec:
            case FeatureKind::favg_csi_std: per_sub[k] = std::sqrt(mv.var); break;
            case FeatureKind::csi_var_vec:
            case FeatureKind::favg_csi_var: per_sub[k] = mv.var; break;
            default: per_sub[k] = mv.mean; break;  // tavg_csi_ampl_vec
        }
    }

    if (feature_is_scalar(spec.kind)) {
        double avg = 0.0;
        for (double v : per_sub) avg += v;
        avg /= static_cast<double>(k_sub);
        return FeatureVector{{cplx{avg, 0.0}}, t};
    }
    return FeatureVector{to_complex(per_sub), t};
}

std::vector<FeatureVector> feature_stream(std::span<const Bundle> bundles,
                                          const FeatureSpec& spec) {
    if (spec.bundles == 0) throw std::invalid_argument("feature_stream: bundles must be >= 1");
    std::vector<FeatureVector> out;
    const std::size_t b = spec.bundles;
    for (std::size_t i = 0; i < bundles.size(); ++i) {
        if (i + 1 < b) continue;
        // Pool is contiguous only if the previous B-1 windows directly precede
        // this one; a gap anywhere inside restarts the pool.
        const std::size_t first = i + 1 - b;
        if (bundles[i].window_index - bundles[first].window_index != b - 1) continue;
        auto feature = extract_feature(bundles.subspan(first, b), spec);
        if (feature) out.push_back(std::move(*feature));
    }
    return out;
}

}  // namespace sentinel
