#include <doctest.h>

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "sentinel/features.hpp"

using namespace sentinel;

namespace {

Packet pkt(double time, std::vector<cplx> csi, double rssi = -40.0, bool rssi_valid = true) {
    Packet p;
    p.time = time;
    p.rssi = rssi;
    p.rssi_valid = rssi_valid;
    p.csi = std::move(csi);
    return p;
}

Bundle bundle_of(std::size_t window, std::vector<Packet> packets) {
    return Bundle{window, std::move(packets)};
}

}  // namespace

TEST_SUITE("features") {

TEST_CASE("feature kind names round-trip") {
    for (FeatureKind kind : kAllFeatureKinds) {
        const auto parsed = parse_feature_kind(feature_kind_name(kind));
        REQUIRE(parsed.has_value());
        CHECK(*parsed == kind);
    }
    CHECK_FALSE(parse_feature_kind("no-such-feature").has_value());
    CHECK(feature_kind_name(FeatureKind::tavg_csi_ampl_vec) == "tavg-csi-ampl-vec");
}

TEST_CASE("feature kind classification") {
    CHECK(feature_uses_rssi(FeatureKind::rssi_std));
    CHECK(feature_uses_rssi(FeatureKind::tavg_rssi));
    CHECK_FALSE(feature_uses_rssi(FeatureKind::csi_var_vec));
    CHECK(feature_is_scalar(FeatureKind::favg_csi_var));
    CHECK(feature_is_scalar(FeatureKind::rssi_var));
    CHECK_FALSE(feature_is_scalar(FeatureKind::tavg_csi_ampl_vec));
    CHECK(feature_dim(FeatureKind::favg_csi_std, 56) == 1);
    CHECK(feature_dim(FeatureKind::csi_std_vec, 56) == 56);
}

TEST_CASE("packets group into fixed windows by timestamp") {
    std::vector<Packet> packets = {pkt(0.05, {{1.0, 0.0}}), pkt(0.15, {{1.0, 0.0}}),
                                   pkt(0.25, {{1.0, 0.0}}), pkt(0.65, {{1.0, 0.0}})};
    const auto bundles = bundle_packets(packets, 0.2);
    REQUIRE(bundles.size() == 3);
    CHECK(bundles[0].window_index == 0);
    CHECK(bundles[0].packets.size() == 2);
    CHECK(bundles[1].window_index == 1);
    CHECK(bundles[1].packets.size() == 1);
    CHECK(bundles[2].window_index == 3);  // window 2 has no packets and is absent
    CHECK(bundles[2].packets.size() == 1);
}

TEST_CASE("bundling rejects bad inputs") {
    std::vector<Packet> packets = {pkt(0.1, {{1.0, 0.0}})};
    CHECK_THROWS_AS(bundle_packets(packets, 0.0), std::invalid_argument);
    packets = {pkt(-0.1, {{1.0, 0.0}})};
    CHECK_THROWS_AS(bundle_packets(packets, 0.2), std::invalid_argument);
    packets = {pkt(0.3, {{1.0, 0.0}}), pkt(0.1, {{1.0, 0.0}})};
    CHECK_THROWS_AS(bundle_packets(packets, 0.2), std::invalid_argument);
}

TEST_CASE("csi normalization produces a unit vector and kills rssi") {
    const Packet p = pkt(0.0, {{3.0, 0.0}, {0.0, 4.0}}, -40.0, true);
    const Packet n = normalize_csi(p);
    CHECK(std::abs(n.csi[0] - cplx{0.6, 0.0}) < 1e-12);
    CHECK(std::abs(n.csi[1] - cplx{0.0, 0.8}) < 1e-12);
    double norm_sq = 0.0;
    for (const cplx& c : n.csi) norm_sq += std::norm(c);
    CHECK(norm_sq == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(n.rssi_valid);
    CHECK(n.rssi == 0.0);
    // An all-zero vector cannot be scaled; it passes through but still loses rssi.
    const Packet z = normalize_csi(pkt(0.0, {{0.0, 0.0}}));
    CHECK(z.csi[0] == cplx{0.0, 0.0});
    CHECK_FALSE(z.rssi_valid);
}

TEST_CASE("csi amplitude statistics over a bundle") {
    // Amplitudes per packet are 1 and 3: mean 2, population variance 1.
    const std::vector<Bundle> pool = {
        bundle_of(4, {pkt(0.8, {{0.0, 1.0}}), pkt(0.9, {{3.0, 0.0}})})};
    auto var = extract_feature(pool, {FeatureKind::csi_var_vec, 1, false});
    REQUIRE(var.has_value());
    CHECK(var->t == 4);
    CHECK(var->values[0].real() == doctest::Approx(1.0).epsilon(1e-12));
    auto sd = extract_feature(pool, {FeatureKind::csi_std_vec, 1, false});
    REQUIRE(sd.has_value());
    CHECK(sd->values[0].real() == doctest::Approx(1.0).epsilon(1e-12));
    auto avg = extract_feature(pool, {FeatureKind::tavg_csi_ampl_vec, 1, false});
    REQUIRE(avg.has_value());
    CHECK(avg->values[0].real() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("subcarrier-averaged scalars") {
    // Subcarrier 0 amplitudes {1, 3} (var 1), subcarrier 1 amplitudes {10, 10}
    // (var 0): favg variance (1+0)/2, favg std (1+0)/2.
    const std::vector<Bundle> pool = {
        bundle_of(0, {pkt(0.0, {{1.0, 0.0}, {10.0, 0.0}}), pkt(0.1, {{3.0, 0.0}, {10.0, 0.0}})})};
    auto var = extract_feature(pool, {FeatureKind::favg_csi_var, 1, false});
    REQUIRE(var.has_value());
    CHECK(var->values.size() == 1);
    CHECK(var->values[0].real() == doctest::Approx(0.5).epsilon(1e-12));
    auto sd = extract_feature(pool, {FeatureKind::favg_csi_std, 1, false});
    REQUIRE(sd.has_value());
    CHECK(sd->values[0].real() == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("rssi statistics ignore invalidated packets") {
    const std::vector<Bundle> pool = {
        bundle_of(2, {pkt(0.0, {{1.0, 0.0}}, -40.0), pkt(0.1, {{1.0, 0.0}}, -42.0),
                      pkt(0.2, {{1.0, 0.0}}, -44.0), pkt(0.3, {{1.0, 0.0}}, -1000.0, false)})};
    auto mean = extract_feature(pool, {FeatureKind::tavg_rssi, 1, false});
    REQUIRE(mean.has_value());
    CHECK(mean->values[0].real() == doctest::Approx(-42.0).epsilon(1e-12));
    auto var = extract_feature(pool, {FeatureKind::rssi_var, 1, false});
    REQUIRE(var.has_value());
    CHECK(var->values[0].real() == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
    auto sd = extract_feature(pool, {FeatureKind::rssi_std, 1, false});
    REQUIRE(sd.has_value());
    CHECK(sd->values[0].real() == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("statistics refuse pools that cannot support them") {
    const std::vector<Bundle> one = {bundle_of(0, {pkt(0.0, {{1.0, 0.0}}, -40.0)})};
    CHECK_FALSE(extract_feature(one, {FeatureKind::csi_var_vec, 1, false}).has_value());
    CHECK_FALSE(extract_feature(one, {FeatureKind::rssi_var, 1, false}).has_value());
    CHECK(extract_feature(one, {FeatureKind::tavg_csi_ampl_vec, 1, false}).has_value());
    CHECK(extract_feature(one, {FeatureKind::tavg_rssi, 1, false}).has_value());
    const std::vector<Bundle> invalid_rssi = {
        bundle_of(0, {pkt(0.0, {{1.0, 0.0}}, -40.0, false), pkt(0.1, {{1.0, 0.0}}, -41.0, false)})};
    CHECK_FALSE(extract_feature(invalid_rssi, {FeatureKind::tavg_rssi, 1, false}).has_value());
    CHECK(extract_feature(invalid_rssi, {FeatureKind::csi_var_vec, 1, false}).has_value());
    CHECK_FALSE(extract_feature({}, {FeatureKind::tavg_rssi, 1, false}).has_value());
}

TEST_CASE("normalization removes common scale and leaves rssi features alone") {
    // Second packet is the first scaled by 2: normalized amplitudes agree
    // exactly, so the variance collapses; unnormalized it does not.
    const std::vector<Bundle> pool = {
        bundle_of(0, {pkt(0.0, {{3.0, 0.0}, {0.0, 4.0}}, -40.0),
                      pkt(0.1, {{6.0, 0.0}, {0.0, 8.0}}, -34.0)})};
    auto raw = extract_feature(pool, {FeatureKind::csi_var_vec, 1, false});
    REQUIRE(raw.has_value());
    CHECK(raw->values[0].real() > 0.1);
    auto norm = extract_feature(pool, {FeatureKind::csi_var_vec, 1, true});
    REQUIRE(norm.has_value());
    CHECK(norm->values[0].real() == doctest::Approx(0.0).epsilon(1e-12));
    // The flag transforms CSI only; the radio-reported rssi is not derived
    // from the csi vector, so rssi features are unaffected by it.
    auto rssi_norm = extract_feature(pool, {FeatureKind::tavg_rssi, 1, true});
    REQUIRE(rssi_norm.has_value());
    CHECK(rssi_norm->values[0].real() == doctest::Approx(-37.0));
}

TEST_CASE("inconsistent csi dimensions are an error") {
    const std::vector<Bundle> pool = {
        bundle_of(0, {pkt(0.0, {{1.0, 0.0}}), pkt(0.1, {{1.0, 0.0}, {2.0, 0.0}})})};
    CHECK_THROWS_AS(extract_feature(pool, {FeatureKind::csi_var_vec, 1, false}),
                    std::invalid_argument);
}

TEST_CASE("multi-window pools take the newest window index") {
    const std::vector<Bundle> pool = {bundle_of(4, {pkt(0.8, {{1.0, 0.0}})}),
                                      bundle_of(5, {pkt(1.0, {{3.0, 0.0}})})};
    auto f = extract_feature(pool, {FeatureKind::csi_var_vec, 2, false});
    REQUIRE(f.has_value());
    CHECK(f->t == 5);
    CHECK(f->values[0].real() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("feature streams slide one window at a time") {
    std::vector<Bundle> bundles;
    for (std::size_t w = 0; w < 5; ++w)
        bundles.push_back(bundle_of(w, {pkt(w * 0.2 + 0.0, {{1.0, 0.0}}),
                                        pkt(w * 0.2 + 0.1, {{3.0, 0.0}})}));
    const auto b1 = feature_stream(bundles, {FeatureKind::csi_var_vec, 1, false});
    REQUIRE(b1.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(b1[i].t == i);
    const auto b2 = feature_stream(bundles, {FeatureKind::csi_var_vec, 2, false});
    REQUIRE(b2.size() == 4);
    CHECK(b2.front().t == 1);
    CHECK(b2.back().t == 4);
    const auto b5 = feature_stream(bundles, {FeatureKind::csi_var_vec, 5, false});
    REQUIRE(b5.size() == 1);
    CHECK(b5[0].t == 4);
    CHECK(feature_stream(bundles, {FeatureKind::csi_var_vec, 6, false}).empty());
    CHECK_THROWS_AS(feature_stream(bundles, {FeatureKind::csi_var_vec, 0, false}),
                    std::invalid_argument);
}

TEST_CASE("window gaps restart multi-window pools") {
    std::vector<Bundle> bundles;
    for (std::size_t w : {0u, 1u, 3u, 4u})
        bundles.push_back(bundle_of(w, {pkt(w * 0.2 + 0.0, {{1.0, 0.0}}),
                                        pkt(w * 0.2 + 0.1, {{3.0, 0.0}})}));
    const auto out = feature_stream(bundles, {FeatureKind::csi_var_vec, 2, false});
    REQUIRE(out.size() == 2);
    CHECK(out[0].t == 1);  // windows {0,1}
    CHECK(out[1].t == 4);  // windows {3,4}; the {1,3} pair is not contiguous
}

TEST_CASE("feature streams drop windows where extraction fails") {
    std::vector<Bundle> bundles = {
        bundle_of(0, {pkt(0.0, {{1.0, 0.0}}), pkt(0.1, {{3.0, 0.0}})}),
        bundle_of(1, {pkt(0.25, {{2.0, 0.0}})}),  // single packet: no variance
        bundle_of(2, {pkt(0.45, {{1.0, 0.0}}), pkt(0.5, {{3.0, 0.0}})})};
    const auto out = feature_stream(bundles, {FeatureKind::csi_var_vec, 1, false});
    REQUIRE(out.size() == 2);
    CHECK(out[0].t == 0);
    CHECK(out[1].t == 2);
}

}  // TEST_SUITE
