// Copyright 2026 nfps contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "nfps/image_stack.hpp"
#include "nfps/lighting.hpp"
#include "nfps/maps.hpp"
#include "nfps/parallel.hpp"

namespace nfps {

struct EstimatorConfig {
    /// Least observations a pixel needs to be solved.
    int min_valid_obs = 3;
    /// Darkest / brightest observations dropped per pixel. Trims shrink
    /// automatically so at least min_valid_obs observations remain.
    int trim_low = 0;
    int trim_high = 1;
    /// Pixels whose 3x3 normal-equation matrix is worse conditioned than
    /// this are invalidated rather than regularized.
    double condition_limit = 1e8;
    /// Observations with intensity <= this are treated as shadowed and
    /// dropped before trimming. Zero keeps everything strictly positive.
    double shadow_threshold = 0.0;
    int threads = 1;
};

struct NormalEstimate {
    NormalMap normals;
    ScalarField albedo;
    size_t invalid_pixels = 0;  // masked-in pixels the solver had to reject
};

namespace detail {

struct Observation {
    double intensity;
    int index;
    bool operator<(const Observation& o) const {
        return intensity != o.intensity ? intensity < o.intensity : index < o.index;
    }
};

}  // namespace detail

/// Per-pixel Lambertian inversion of the rendering equation: solves
/// min_b sum_j (A_j (b . s_j) - I_j)^2 with s_j = -L_j over the kept
/// observations, then N = b/|b| and albedo = |b|. Observations are sorted by
/// (intensity, image index) before trimming and accumulation, which makes the
/// result independent of the input image order.
inline NormalEstimate estimate_normals(const ImageStack& stack,
                                       const std::vector<PerPixelLighting>& ppl,
                                       const EstimatorConfig& cfg = {}) {
    stack.validate();
    if (cfg.min_valid_obs < 3) throw DegenerateInputError("min_valid_obs must be >= 3");
    if (cfg.trim_low < 0 || cfg.trim_high < 0)
        throw DegenerateInputError("trim counts must be nonnegative");
    const int m = static_cast<int>(stack.count());
    if (m < cfg.min_valid_obs)
        throw DegenerateInputError("fewer images than min_valid_obs");
    if (ppl.size() != stack.count())
        throw DimensionError("per-pixel lighting count does not match images");
    for (const auto& p : ppl)
        if (!p.mask.same_size(stack.mask))
            throw DimensionError("per-pixel lighting size mismatch");

    const int h = stack.height();
    const int w = stack.width();
    NormalEstimate out;
    out.normals = NormalMap(h, w);
    out.albedo = ScalarField(h, w);
    std::vector<size_t> row_invalid(h, 0);

    parallel_for(0, h, cfg.threads, [&](int v) {
        std::vector<detail::Observation> obs;
        obs.reserve(m);
        for (int u = 0; u < w; ++u) {
            if (!stack.mask(v, u)) continue;
            obs.clear();
            for (int j = 0; j < m; ++j) {
                if (!ppl[j].mask(v, u)) continue;
                const double a = ppl[j].attenuation(v, u);
                const double intensity = stack.images[j](v, u);
                if (!(a > 0.0)) continue;
                if (!(intensity > cfg.shadow_threshold)) continue;
                if (!std::isfinite(intensity) || !std::isfinite(a)) continue;
                obs.push_back({intensity, j});
            }
            const int n = static_cast<int>(obs.size());
            const int budget = std::max(0, n - cfg.min_valid_obs);
            const int high = std::min(cfg.trim_high, budget);
            const int low = std::min(cfg.trim_low, budget - high);
            if (n - low - high < cfg.min_valid_obs) {
                ++row_invalid[v];
                continue;
            }
            std::sort(obs.begin(), obs.end());

            Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
            Eigen::Vector3d atb = Eigen::Vector3d::Zero();
            for (int i = low; i < n - high; ++i) {
                const int j = obs[i].index;
                const Eigen::Vector3d row =
                    ppl[j].attenuation(v, u) * (-ppl[j].direction(v, u));
                ata.noalias() += row * row.transpose();
                atb.noalias() += row * obs[i].intensity;
            }

            Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(ata);
            const Eigen::Vector3d lambda = eig.eigenvalues();
            if (!(lambda(0) > 0.0) || lambda(2) > cfg.condition_limit * lambda(0)) {
                ++row_invalid[v];
                continue;
            }
            const Eigen::Vector3d b =
                eig.eigenvectors() *
                (eig.eigenvectors().transpose() * atb).cwiseQuotient(lambda);
            const double norm = b.norm();
            if (!(norm > 0.0) || !std::isfinite(norm) || b.z() >= 0.0) {
                ++row_invalid[v];
                continue;
            }
            out.normals.data(v, u) = b / norm;
            out.normals.mask(v, u) = 1;
            out.albedo.data(v, u) = norm;
            out.albedo.mask(v, u) = 1;
        }
    });

    out.invalid_pixels = std::accumulate(row_invalid.begin(), row_invalid.end(), size_t{0});
    return out;
}

/// Ablation variant: per-pixel lighting is computed once from a plane at
/// depth one and never refined, mirroring a pipeline that only ever sees the
/// global light parameters.
inline NormalEstimate estimate_normals_global_lights(const ImageStack& stack,
                                                     const std::vector<LightSource>& lights,
                                                     const EstimatorConfig& cfg = {}) {
    stack.validate();
    if (lights.size() != stack.count())
        throw DimensionError("light count does not match images");
    DepthMap plane(stack.height(), stack.width(), 1.0);
    plane.mask = stack.mask;
    std::vector<PerPixelLighting> ppl;
    ppl.reserve(lights.size());
    for (const auto& light : lights)
        ppl.push_back(per_pixel_lighting(stack.camera, plane, light));
    return estimate_normals(stack, ppl, cfg);
}

}  // namespace nfps
