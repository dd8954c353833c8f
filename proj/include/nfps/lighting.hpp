// Copyright 2026 nfps contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Core>

#include "nfps/geometry.hpp"
#include "nfps/light.hpp"
#include "nfps/maps.hpp"
#include "nfps/rng.hpp"

namespace nfps {

/// Per-pixel lighting of one image: unit light travel direction L (from the
/// light toward the surface) and scalar attenuation A = (L.d)^mu / r^2.
struct PerPixelLighting {
    Grid<Eigen::Vector3d> direction;
    Grid<double> attenuation;
    Mask mask;

    PerPixelLighting() = default;
    PerPixelLighting(int height, int width)
        : direction(height, width, Eigen::Vector3d::Zero()),
          attenuation(height, width, 0.0),
          mask(height, width, 0) {}
};

/// Evaluates L and A on the surface implied by `depth`. Behind the emission
/// lobe (L.d < 0 with mu > 0) the attenuation clamps to zero.
inline PerPixelLighting per_pixel_lighting(const CameraIntrinsics& camera,
                                           const DepthMap& depth,
                                           const LightSource& light) {
    light.validate();
    const PointMap points = depth_to_points(depth, camera);
    PerPixelLighting out(depth.height(), depth.width());
    out.mask = depth.mask;
    for (int v = 0; v < depth.height(); ++v) {
        for (int u = 0; u < depth.width(); ++u) {
            if (!depth.mask(v, u)) continue;
            const Eigen::Vector3d offset = points.data(v, u) - light.position;
            const double dist2 = offset.squaredNorm();
            if (dist2 < 1e-18)
                throw SingularLightError("light source coincides with a surface point");
            const Eigen::Vector3d dir = offset / std::sqrt(dist2);
            const double cos_lobe = dir.dot(light.direction);
            double a;
            if (light.mu == 0.0) {
                a = 1.0 / dist2;
            } else if (cos_lobe <= 0.0) {
                a = 0.0;
            } else {
                a = std::pow(cos_lobe, light.mu) / dist2;
            }
            out.direction(v, u) = dir;
            out.attenuation(v, u) = a;
        }
    }
    return out;
}

/// Admissible light region in mean-depth-one coordinates: a cylinder of
/// radius 0.75 around the optical axis spanning z in [-0.15, 0.15], with
/// the emission axis within 30 degrees of +z.
struct AdmissibleRegion {
    static constexpr double kRadius = 0.75;
    static constexpr double kHalfExtent = 0.15;
    static constexpr double kMaxAngleDeg = 30.0;
};

inline bool in_admissible_region(const LightSource& light) {
    const double radial = std::hypot(light.position.x(), light.position.y());
    if (radial > AdmissibleRegion::kRadius) return false;
    if (std::abs(light.position.z()) > AdmissibleRegion::kHalfExtent) return false;
    const double cos_angle = light.direction.normalized().z();
    const double max_rad = AdmissibleRegion::kMaxAngleDeg * std::numbers::pi / 180.0;
    return cos_angle >= std::cos(max_rad);
}

struct LightSampleOptions {
    double mu_min = 0.0;
    double mu_max = 2.0;
};

/// Draws one light uniformly from the admissible region: position uniform
/// over the cylinder volume, direction uniform over the 30-degree solid
/// angle cone, mu uniform in [mu_min, mu_max].
inline LightSource sample_admissible_light(Rng& rng, const LightSampleOptions& opts = {}) {
    LightSource light;
    const double r = AdmissibleRegion::kRadius * std::sqrt(rng.uniform());
    const double theta = 2.0 * std::numbers::pi * rng.uniform();
    light.position = {r * std::cos(theta), r * std::sin(theta),
                      rng.uniform(-AdmissibleRegion::kHalfExtent,
                                  AdmissibleRegion::kHalfExtent)};
    const double cos_max =
        std::cos(AdmissibleRegion::kMaxAngleDeg * std::numbers::pi / 180.0);
    const double cos_a = 1.0 - rng.uniform() * (1.0 - cos_max);
    const double sin_a = std::sqrt(std::max(0.0, 1.0 - cos_a * cos_a));
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    light.direction = {sin_a * std::cos(phi), sin_a * std::sin(phi), cos_a};
    light.mu = rng.uniform(opts.mu_min, opts.mu_max);
    light.intensity = 1.0;
    return light;
}

inline LightSource sample_admissible_light(std::uint64_t seed,
                                           const LightSampleOptions& opts = {}) {
    Rng rng(seed);
    return sample_admissible_light(rng, opts);
}

inline std::vector<LightSource> sample_admissible_lights(int count, std::uint64_t seed,
                                                         const LightSampleOptions& opts = {}) {
    Rng rng(seed);
    std::vector<LightSource> lights;
    lights.reserve(count);
    for (int i = 0; i < count; ++i) lights.push_back(sample_admissible_light(rng, opts));
    return lights;
}

}  // namespace nfps
