#pragma once

#include <Eigen/Dense>
#include <Eigen/QR>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "diffmap/embedding.hpp"
#include "diffmap/errors.hpp"
#include "diffmap/feature_matrix.hpp"

namespace diffmap {
namespace detail {

// Box-Muller normal sampler over mt19937_64. std::normal_distribution is
// implementation-defined per standard library, which would make seeded data
// differ across toolchains; this keeps the stream reproducible everywhere.
class GaussianSampler {
public:
    explicit GaussianSampler(std::uint64_t seed) : rng_(seed) {}

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        // u1 in (0, 1] so the log stays finite; u2 in [0, 1).
        const double u1 =
            (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        have_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace detail

// A generated feature table plus the latent parameter each row was placed at,
// for checking that an embedding recovers known geometry.
struct SyntheticData {
    FeatureMatrix features;
    AreaVector truth;
    std::string truth_name;
};

// Generates `size` points on a known 2-d latent shape, embeds them in a
// 20-dimensional ambient space through a seeded random orthonormal frame plus
// offset, and displaces each point by Gaussian measurement noise whose RMS
// Euclidean length is `noise` times the RMS per-coordinate signal spread
// (noise 0.05 reads as "each point drifts by 5% of a typical coordinate's
// spread"). The noise budget is allocated across coordinates in proportion to
// their signal spread, so the standardization step cannot blow a low-signal
// column up into a pure-noise axis, which a flat per-coordinate sigma would.
//
// Kinds: "line1d" (t equally spaced on [0, 1], truth t), "circle" (unit
// circle, truth angle in [0, 2pi)), "two_clusters" (centers (-1, 0) and
// (1, 0) with fixed latent spread 0.1, truth cluster label 0 or 1).
inline SyntheticData generate_synthetic(const std::string& kind, std::size_t size, double noise,
                                        std::uint64_t seed) {
    if (size < 10)
        throw std::invalid_argument("generate_synthetic: size must be >= 10");
    if (!(noise >= 0.0))
        throw std::invalid_argument("generate_synthetic: noise must be >= 0");
    if (kind != "line1d" && kind != "circle" && kind != "two_clusters")
        throw UnknownKind("generate_synthetic: unknown kind '" + kind + "'");

    constexpr std::size_t ambient = 20;
    detail::GaussianSampler gauss(seed);

    // Orthonormal 20x2 frame and an offset, drawn before any per-point noise
    // so the geometry for a given seed never depends on size.
    Eigen::MatrixXd raw(ambient, 2);
    for (Eigen::Index i = 0; i < raw.rows(); ++i)
        for (Eigen::Index j = 0; j < raw.cols(); ++j) raw(i, j) = gauss();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
    const Eigen::MatrixXd frame =
        qr.householderQ() * Eigen::MatrixXd::Identity(ambient, 2);
    Eigen::VectorXd offset(ambient);
    for (Eigen::Index i = 0; i < offset.size(); ++i) offset(i) = gauss();

    Eigen::MatrixXd latent(size, 2);
    Eigen::VectorXd truth(size);
    if (kind == "line1d") {
        for (std::size_t i = 0; i < size; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(size - 1);
            latent(static_cast<Eigen::Index>(i), 0) = t;
            latent(static_cast<Eigen::Index>(i), 1) = 0.0;
            truth(static_cast<Eigen::Index>(i)) = t;
        }
    } else if (kind == "circle") {
        for (std::size_t i = 0; i < size; ++i) {
            const double theta =
                2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(size);
            latent(static_cast<Eigen::Index>(i), 0) = std::cos(theta);
            latent(static_cast<Eigen::Index>(i), 1) = std::sin(theta);
            truth(static_cast<Eigen::Index>(i)) = theta;
        }
    } else {
        // Latent spread keeps cluster members distinct even at noise zero.
        for (std::size_t i = 0; i < size; ++i) {
            const bool second = i >= size / 2;
            latent(static_cast<Eigen::Index>(i), 0) = (second ? 1.0 : -1.0) + 0.1 * gauss();
            latent(static_cast<Eigen::Index>(i), 1) = 0.1 * gauss();
            truth(static_cast<Eigen::Index>(i)) = second ? 1.0 : 0.0;
        }
    }

    Eigen::MatrixXd values = latent * frame.transpose();
    values.rowwise() += offset.transpose();
    if (noise > 0.0) {
        const double scale = noise / std::sqrt(static_cast<double>(ambient));
        Eigen::VectorXd sigma(values.cols());
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            const auto col = values.col(j);
            const double mean = col.mean();
            sigma(j) = scale * std::sqrt((col.array() - mean).square().sum() /
                                         static_cast<double>(values.rows()));
        }
        for (Eigen::Index i = 0; i < values.rows(); ++i)
            for (Eigen::Index j = 0; j < values.cols(); ++j) values(i, j) += sigma(j) * gauss();
    }

    SyntheticData data;
    data.features.values = std::move(values);
    data.features.area_ids.reserve(size);
    for (std::size_t i = 0; i < size; ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "S%04zu", i + 1);
        data.features.area_ids.emplace_back(buf);
    }
    data.features.column_names.reserve(ambient);
    for (std::size_t j = 0; j < ambient; ++j) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "var%02zu", j + 1);
        data.features.column_names.emplace_back(buf);
    }
    data.truth.area_ids = data.features.area_ids;
    data.truth.values = std::move(truth);
    data.truth_name = kind == "line1d" ? "t" : kind == "circle" ? "theta" : "cluster";
    return data;
}

} // namespace diffmap
