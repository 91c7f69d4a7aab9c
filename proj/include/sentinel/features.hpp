#pragma once

// Packet-level inputs (CSI + RSSI) and the feature extractors that turn
// fixed-time bundles of packets into feature vectors for the detector.
// All statistics are population statistics (divide by M, not M-1).

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sentinel/core.hpp"

namespace sentinel {

struct Packet {
    double time = 0.0;       // seconds since trace start
    double rssi = 0.0;       // dB
    bool rssi_valid = true;  // false once amplitude information is destroyed
    std::vector<cplx> csi;   // per-subcarrier channel estimate
};

// All packets whose timestamps fall into one bundling window.
struct Bundle {
    std::size_t window_index = 0;
    std::vector<Packet> packets;
};

enum class FeatureKind {
    favg_csi_std,       // scalar: per-subcarrier amplitude std, averaged over subcarriers
    favg_csi_var,       // scalar: per-subcarrier amplitude variance, averaged
    csi_std_vec,        // vector: per-subcarrier amplitude std
    csi_var_vec,        // vector: per-subcarrier amplitude variance
    tavg_csi_ampl_vec,  // vector: per-subcarrier mean amplitude
    rssi_std,           // scalar: std of packet RSSI
    rssi_var,           // scalar: variance of packet RSSI
    tavg_rssi,          // scalar: mean packet RSSI
};

inline constexpr std::array<FeatureKind, 8> kAllFeatureKinds = {
    FeatureKind::favg_csi_std,      FeatureKind::favg_csi_var, FeatureKind::csi_std_vec,
    FeatureKind::csi_var_vec,       FeatureKind::tavg_csi_ampl_vec,
    FeatureKind::rssi_std,          FeatureKind::rssi_var,     FeatureKind::tavg_rssi,
};

struct FeatureSpec {
    FeatureKind kind = FeatureKind::favg_csi_var;
    std::size_t bundles = 1;  // windows pooled per feature (sliding, stride one window)
    bool normalized = false;  // unit-norm each CSI vector before taking amplitudes
};

std::string feature_kind_name(FeatureKind kind);                       // e.g. "csi-var-vec"
std::optional<FeatureKind> parse_feature_kind(std::string_view name);  // inverse of the above
bool feature_uses_rssi(FeatureKind kind);
bool feature_is_scalar(FeatureKind kind);
std::size_t feature_dim(FeatureKind kind, std::size_t k_sub);

// Groups time-sorted packets (times >= 0) into windows of window_s seconds by
// floor(time / window_s); windows without packets are simply absent from the
// result.  Output is ordered by window_index.
std::vector<Bundle> bundle_packets(std::span<const Packet> packets, double window_s);

// CSI scaled to unit Euclidean norm.  RSSI is invalidated: once amplitudes
// are normalized away there is no meaningful received power left.
Packet normalize_csi(const Packet& p);

// Computes the feature over the pooled packets of the given windows.  Returns
// nullopt when the pool cannot support the statistic: fewer than 2 packets for
// variance/std kinds, fewer than 1 for tavg kinds, no valid RSSI for RSSI
// kinds.  Throws on inconsistent CSI dimensions.  The result's t is the
// newest window index in the pool.
std::optional<FeatureVector> extract_feature(std::span<const Bundle> pool,
                                             const FeatureSpec& spec);

// Slides a spec.bundles-wide pool over the bundle list with stride one
// window, emitting a feature at every window index t for which the windows
// [t - B + 1, t] are all present and the extractor succeeds.  Window gaps
// restart the pool.
std::vector<FeatureVector> feature_stream(std::span<const Bundle> bundles,
                                          const FeatureSpec& spec);

}  // namespace sentinel
