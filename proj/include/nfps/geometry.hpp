// Copyright 2026 nfps contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "nfps/camera.hpp"
#include "nfps/image_stack.hpp"
#include "nfps/maps.hpp"

namespace nfps {

inline double mean_over_mask(const Grid<double>& g, const Mask& mask) {
    if (!g.same_size(mask)) throw DimensionError("grid/mask size mismatch");
    double sum = 0.0;
    size_t n = 0;
    for (int v = 0; v < g.height(); ++v)
        for (int u = 0; u < g.width(); ++u)
            if (mask(v, u)) {
                sum += g(v, u);
                ++n;
            }
    if (n == 0) throw DegenerateInputError("mask has no valid pixels");
    return sum / static_cast<double>(n);
}

/// X(u,v) = D(u,v) K^-1 (u,v,1)^T. Mask is carried through unchanged.
inline PointMap depth_to_points(const DepthMap& depth, const CameraIntrinsics& camera) {
    camera.validate();
    if (!depth.data.same_size(camera.height, camera.width))
        throw DimensionError("depth map does not match camera size");
    PointMap points(depth.height(), depth.width());
    points.mask = depth.mask;
    for (int v = 0; v < depth.height(); ++v)
        for (int u = 0; u < depth.width(); ++u)
            if (depth.mask(v, u))
                points.data(v, u) = depth.data(v, u) * camera.ray(u, v);
    return points;
}

namespace detail {

// Per-axis finite difference of camera-space points: central inside the
// mask, one-sided at its boundary. Returns false when no valid pair exists.
inline bool point_derivative(const PointMap& pts, int v, int u, int dv, int du,
                             Eigen::Vector3d& out) {
    const bool prev = pts.data.in_bounds(v - dv, u - du) && pts.mask(v - dv, u - du);
    const bool next = pts.data.in_bounds(v + dv, u + du) && pts.mask(v + dv, u + du);
    if (prev && next) {
        out = 0.5 * (pts.data(v + dv, u + du) - pts.data(v - dv, u - du));
        return true;
    }
    if (next) {
        out = pts.data(v + dv, u + du) - pts.data(v, u);
        return true;
    }
    if (prev) {
        out = pts.data(v, u) - pts.data(v - dv, u - du);
        return true;
    }
    return false;
}

}  // namespace detail

/// N = normalize(dX/du x dX/dv), oriented camera-facing (N.z < 0). Pixels
/// whose difference stencil has no valid pair, or whose cross product is
/// degenerate, come back invalid.
inline NormalMap normals_from_depth(const DepthMap& depth, const CameraIntrinsics& camera) {
    if (count_valid(depth.mask) < 9)
        throw DegenerateInputError("normals_from_depth needs at least 3x3 valid pixels");
    const PointMap points = depth_to_points(depth, camera);
    NormalMap normals(depth.height(), depth.width());
    for (int v = 0; v < depth.height(); ++v) {
        for (int u = 0; u < depth.width(); ++u) {
            if (!depth.mask(v, u)) continue;
            Eigen::Vector3d du_vec, dv_vec;
            if (!detail::point_derivative(points, v, u, 0, 1, du_vec)) continue;
            if (!detail::point_derivative(points, v, u, 1, 0, dv_vec)) continue;
            Eigen::Vector3d n = du_vec.cross(dv_vec);
            const double len = n.norm();
            if (len <= 0.0 || !std::isfinite(len)) continue;
            n /= len;
            if (n.z() > 0.0) n = -n;
            if (!(n.z() < 0.0)) continue;  // grazing: no camera-facing choice
            normals.data(v, u) = n;
            normals.mask(v, u) = 1;
        }
    }
    return normals;
}

namespace detail {

template <class T>
T axis_slope(const Grid<T>& g, const Mask& mask, int v, int u, int dv, int du) {
    const bool prev = g.in_bounds(v - dv, u - du) && mask(v - dv, u - du);
    const bool next = g.in_bounds(v + dv, u + du) && mask(v + dv, u + du);
    if (prev && next) return 0.5 * (g(v + dv, u + du) - g(v - dv, u - du));
    if (next) return g(v + dv, u + du) - g(v, u);
    if (prev) return g(v, u) - g(v - dv, u - du);
    return g(v, u) - g(v, u);  // no valid neighbour: flat extension
}

// One 2x linear upsampling pass along a single axis. Each coarse sample i
// spawns fine samples at i -/+ 1/4 using the local slope, so a following
// 2-tap average restores the coarse grid exactly.
template <class T>
std::pair<Grid<T>, Mask> upsample_axis(const Grid<T>& g, const Mask& mask, bool along_u) {
    const int h = along_u ? g.height() : g.height() * 2;
    const int w = along_u ? g.width() * 2 : g.width();
    Grid<T> out(h, w);
    Mask out_mask(h, w, 0);
    const int dv = along_u ? 0 : 1;
    const int du = along_u ? 1 : 0;
    for (int v = 0; v < g.height(); ++v) {
        for (int u = 0; u < g.width(); ++u) {
            const int ov = along_u ? v : 2 * v;
            const int ou = along_u ? 2 * u : u;
            if (!mask(v, u)) continue;
            const T slope = axis_slope(g, mask, v, u, dv, du);
            out(ov, ou) = g(v, u) - 0.25 * slope;
            out(ov + dv, ou + du) = g(v, u) + 0.25 * slope;
            out_mask(ov, ou) = 1;
            out_mask(ov + dv, ou + du) = 1;
        }
    }
    return {std::move(out), std::move(out_mask)};
}

}  // namespace detail

/// Bilinear 2x upsampling (quarter-pixel aligned so that downsample2 is its
/// exact left inverse). A fine pixel is valid iff its coarse parent is.
template <class T>
std::pair<Grid<T>, Mask> upsample2(const Grid<T>& g, const Mask& mask) {
    if (!g.same_size(mask)) throw DimensionError("grid/mask size mismatch");
    auto [gu, mu] = detail::upsample_axis(g, mask, true);
    return detail::upsample_axis(gu, mu, false);
}

/// 2x2 area-average downsampling. A coarse pixel is valid iff all four
/// contributing pixels are.
template <class T>
std::pair<Grid<T>, Mask> downsample2(const Grid<T>& g, const Mask& mask) {
    if (!g.same_size(mask)) throw DimensionError("grid/mask size mismatch");
    if (g.height() % 2 != 0 || g.width() % 2 != 0)
        throw DimensionError("downsample2 needs even dimensions");
    Grid<T> out(g.height() / 2, g.width() / 2);
    Mask out_mask(g.height() / 2, g.width() / 2, 0);
    for (int v = 0; v < out.height(); ++v) {
        for (int u = 0; u < out.width(); ++u) {
            if (mask(2 * v, 2 * u) && mask(2 * v, 2 * u + 1) && mask(2 * v + 1, 2 * u) &&
                mask(2 * v + 1, 2 * u + 1)) {
                out(v, u) = 0.25 * (g(2 * v, 2 * u) + g(2 * v, 2 * u + 1) +
                                    g(2 * v + 1, 2 * u) + g(2 * v + 1, 2 * u + 1));
                out_mask(v, u) = 1;
            }
        }
    }
    return {std::move(out), std::move(out_mask)};
}

template <class T>
Grid<T> upsample2(const Grid<T>& g) {
    return upsample2(g, full_mask(g.height(), g.width())).first;
}

template <class T>
Grid<T> downsample2(const Grid<T>& g) {
    return downsample2(g, full_mask(g.height(), g.width())).first;
}

inline DepthMap upsample2(const DepthMap& d) {
    DepthMap out;
    std::tie(out.data, out.mask) = upsample2(d.data, d.mask);
    return out;
}

inline DepthMap downsample2(const DepthMap& d) {
    DepthMap out;
    std::tie(out.data, out.mask) = downsample2(d.data, d.mask);
    return out;
}

struct SceneScale {
    DepthMap depth;
    std::vector<LightSource> lights;
    double scale = 1.0;  // the mean depth that was divided out
};

/// Rescales to the mean-depth-one coordinate system: depth and light
/// positions are divided by the mean depth over the mask.
inline SceneScale normalize_scene_scale(const DepthMap& depth,
                                        std::vector<LightSource> lights) {
    const double mu = mean_over_mask(depth.data, depth.mask);
    SceneScale out;
    out.depth = depth;
    for (auto& d : out.depth.data) d /= mu;
    for (auto& light : lights) light.position /= mu;
    out.lights = std::move(lights);
    out.scale = mu;
    return out;
}

struct IntensityScale {
    ImageStack stack;
    double factor = 1.0;  // the mean intensity that was divided out
};

/// Divides every image by the mean intensity of the first image over the
/// mask, making the stack invariant to the (unknown) global light intensity.
inline IntensityScale normalize_intensity(ImageStack stack) {
    stack.validate();
    const double mu = mean_over_mask(stack.images[0], stack.mask);
    if (!(mu > 0.0) || !std::isfinite(mu))
        throw DegenerateInputError("first image has nonpositive mean intensity");
    for (auto& img : stack.images)
        for (auto& x : img) x /= mu;
    return {std::move(stack), mu};
}

struct TriangleMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> faces;  // zero-based vertex indices
};

/// One vertex per valid pixel, two triangles per fully valid 2x2 cell,
/// wound so face normals are camera-facing.
inline TriangleMesh depth_to_mesh(const DepthMap& depth, const CameraIntrinsics& camera) {
    if (count_valid(depth.mask) == 0)
        throw DegenerateInputError("depth_to_mesh needs a nonempty mask");
    const PointMap points = depth_to_points(depth, camera);
    TriangleMesh mesh;
    Grid<int> index(depth.height(), depth.width(), -1);
    for (int v = 0; v < depth.height(); ++v)
        for (int u = 0; u < depth.width(); ++u)
            if (depth.mask(v, u)) {
                index(v, u) = static_cast<int>(mesh.vertices.size());
                mesh.vertices.push_back(points.data(v, u));
            }
    for (int v = 0; v + 1 < depth.height(); ++v) {
        for (int u = 0; u + 1 < depth.width(); ++u) {
            const int a = index(v, u);
            const int b = index(v, u + 1);
            const int c = index(v + 1, u);
            const int d = index(v + 1, u + 1);
            if (a < 0 || b < 0 || c < 0 || d < 0) continue;
            mesh.faces.push_back({a, c, b});
            mesh.faces.push_back({b, c, d});
        }
    }
    return mesh;
}

}  // namespace nfps
