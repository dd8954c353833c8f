// Copyright 2026 nfps contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "nfps/geometry.hpp"
#include "nfps/image_stack.hpp"
#include "nfps/lighting.hpp"
#include "nfps/rng.hpp"

namespace nfps {

/// Depth sample of an analytic surface at one pixel: the depth value and its
/// partial derivatives in pixel units.
struct SurfaceSample {
    double depth = 0.0;
    double ddu = 0.0;
    double ddv = 0.0;
};

/// Plane z = c + a*x + b*y in camera coordinates.
struct PlaneSurface {
    double a = 0.0;
    double b = 0.0;
    double c = 1.0;

    std::optional<SurfaceSample> sample(const CameraIntrinsics& cam, int u, int v) const {
        const Eigen::Vector3d r = cam.ray(u, v);
        const double denom = 1.0 - a * r.x() - b * r.y();
        if (denom < 1e-6) return std::nullopt;
        const double depth = c / denom;
        if (!(depth > 0.0)) return std::nullopt;
        SurfaceSample s;
        s.depth = depth;
        s.ddu = depth * (a / cam.fx) / denom;
        s.ddv = depth * (b / cam.fy) / denom;
        return s;
    }

    void scale(double f) { c *= f; }
};

/// Near side of a sphere, masked to surface slants below max_slant_deg so
/// the silhouette grazing band stays out of the fixture.
struct SphereCapSurface {
    Eigen::Vector3d center = Eigen::Vector3d(0.0, 0.0, 1.45);
    double radius = 0.5;
    double max_slant_deg = 50.0;

    std::optional<SurfaceSample> sample(const CameraIntrinsics& cam, int u, int v) const {
        const Eigen::Vector3d r = cam.ray(u, v);
        const double s = r.squaredNorm();
        const double t = r.dot(center);
        const double k = center.squaredNorm() - radius * radius;
        const double disc = t * t - s * k;
        if (disc <= 0.0) return std::nullopt;
        const double root = std::sqrt(disc);
        const double depth = (t - root) / s;
        if (!(depth > 0.0)) return std::nullopt;
        const Eigen::Vector3d x = depth * r;
        const Eigen::Vector3d n = (x - center) / radius;
        const double cos_slant = -n.dot(x.normalized());
        const double max_rad = max_slant_deg * std::numbers::pi / 180.0;
        if (cos_slant < std::cos(max_rad)) return std::nullopt;
        SurfaceSample out;
        out.depth = depth;
        // Implicit differentiation of D^2 s - 2 D t + k = 0; note Ds - t = -root.
        const double ds_du = 2.0 * r.x() / cam.fx;
        const double dt_du = center.x() / cam.fx;
        const double ds_dv = 2.0 * r.y() / cam.fy;
        const double dt_dv = center.y() / cam.fy;
        out.ddu = (depth * depth * ds_du - 2.0 * depth * dt_du) / (2.0 * root);
        out.ddv = (depth * depth * ds_dv - 2.0 * depth * dt_dv) / (2.0 * root);
        return out;
    }

    void scale(double f) {
        center *= f;
        radius *= f;
    }
};

/// D = base * (1 + amplitude * sin(2 pi f x) * sin(2 pi f y)) over the unit
/// image square; `frequency` counts full cycles across the frame.
struct SinusoidSurface {
    double amplitude = 0.08;
    double frequency = 2.5;
    double base = 1.0;

    std::optional<SurfaceSample> sample(const CameraIntrinsics& cam, int u, int v) const {
        const double sx = cam.width > 1 ? 1.0 / (cam.width - 1) : 0.0;
        const double sy = cam.height > 1 ? 1.0 / (cam.height - 1) : 0.0;
        const double w = 2.0 * std::numbers::pi * frequency;
        const double px = w * u * sx;
        const double py = w * v * sy;
        SurfaceSample s;
        s.depth = base * (1.0 + amplitude * std::sin(px) * std::sin(py));
        s.ddu = base * amplitude * w * sx * std::cos(px) * std::sin(py);
        s.ddv = base * amplitude * w * sy * std::sin(px) * std::cos(py);
        return s;
    }

    void scale(double f) { base *= f; }
};

using Surface = std::variant<PlaneSurface, SphereCapSurface, SinusoidSurface>;

inline std::optional<SurfaceSample> surface_sample(const Surface& surface,
                                                   const CameraIntrinsics& cam, int u,
                                                   int v) {
    return std::visit([&](const auto& s) { return s.sample(cam, u, v); }, surface);
}

inline void surface_scale(Surface& surface, double f) {
    std::visit([&](auto& s) { s.scale(f); }, surface);
}

enum class BrdfModel { lambertian, cook_torrance };

/// Spatially varying material. Lambertian reflectance is the plain albedo
/// (no 1/pi); Cook-Torrance adds a GGX microfacet lobe with F0 = 0.04 on
/// top of the diffuse albedo.
struct Material {
    BrdfModel model = BrdfModel::lambertian;
    Grid<double> albedo;
    Grid<double> roughness;

    static Material constant(BrdfModel model, double albedo_value, double roughness_value,
                             int height, int width) {
        Material m;
        m.model = model;
        m.albedo = Grid<double>(height, width, albedo_value);
        m.roughness = Grid<double>(height, width, roughness_value);
        return m;
    }
};

/// BRDF value at a pixel. wl points from the surface toward the light, wv
/// toward the camera, n is the camera-facing surface normal.
inline double brdf_eval(const Material& material, const Eigen::Vector3d& wl,
                        const Eigen::Vector3d& wv, const Eigen::Vector3d& n, int v, int u) {
    const double albedo = material.albedo(v, u);
    if (material.model == BrdfModel::lambertian) return albedo;

    const double cos_l = n.dot(wl);
    const double cos_v = n.dot(wv);
    if (cos_l <= 0.0 || cos_v <= 0.0) return albedo;
    const Eigen::Vector3d h = (wl + wv).normalized();
    const double cos_h = std::max(0.0, n.dot(h));
    const double cos_vh = std::max(0.0, wv.dot(h));
    const double rough = material.roughness(v, u);
    const double alpha = rough * rough;
    const double a2 = alpha * alpha;
    const double d_denom = cos_h * cos_h * (a2 - 1.0) + 1.0;
    const double dist = a2 / (std::numbers::pi * d_denom * d_denom);
    auto g1 = [a2](double c) { return 2.0 * c / (c + std::sqrt(a2 + (1.0 - a2) * c * c)); };
    const double geom = g1(cos_l) * g1(cos_v);
    constexpr double kF0 = 0.04;
    const double fresnel = kF0 + (1.0 - kF0) * std::pow(1.0 - cos_vh, 5.0);
    return albedo + dist * fresnel * geom / (4.0 * cos_l * cos_v);
}

/// Simulated eta term: per-pixel additive Gaussian noise (sigma relative to
/// the brightest noiseless pixel of the stack) plus zeroed square patches.
struct NoiseConfig {
    double gaussian_sigma = 0.0;
    int zero_patch_count = 0;
    int zero_patch_size = 16;
    std::uint64_t seed = 0;
};

/// Analytic scene: surface + material + lights + camera, in mean-depth-one
/// coordinates when built through make_scene / make_fixture.
struct Scene {
    Surface surface;
    Material material;
    std::vector<LightSource> lights;
    CameraIntrinsics camera;
    Mask mask;
};

inline DepthMap evaluate_surface_depth(const Surface& surface, const CameraIntrinsics& cam) {
    DepthMap depth(cam.height, cam.width);
    for (int v = 0; v < cam.height; ++v)
        for (int u = 0; u < cam.width; ++u)
            if (auto s = surface_sample(surface, cam, u, v)) {
                depth.data(v, u) = s->depth;
                depth.mask(v, u) = 1;
            }
    return depth;
}

/// Builds a scene and rescales it (surface and light positions together)
/// into the mean-depth-one coordinate system.
inline Scene make_scene(Surface surface, Material material, std::vector<LightSource> lights,
                        const CameraIntrinsics& camera) {
    camera.validate();
    DepthMap depth = evaluate_surface_depth(surface, camera);
    if (count_valid(depth.mask) == 0)
        throw DegenerateInputError("surface is nowhere visible");
    const double mu = mean_over_mask(depth.data, depth.mask);
    surface_scale(surface, 1.0 / mu);
    for (auto& light : lights) light.position /= mu;
    Scene scene;
    scene.surface = std::move(surface);
    scene.material = std::move(material);
    scene.lights = std::move(lights);
    scene.camera = camera;
    scene.mask = depth.mask;
    return scene;
}

/// Uniformly scales depth and light positions; rendered images scale by
/// 1/s^2 and nothing else changes.
inline Scene scene_uniform_scale(Scene scene, double s) {
    surface_scale(scene.surface, s);
    for (auto& light : scene.lights) light.position *= s;
    return scene;
}

struct RenderResult {
    ImageStack stack;
    DepthMap gt_depth;
    NormalMap gt_normals;
};

/// I = A * B(wv, L) * max(0, N.(-L)) * intensity + eta, with ground-truth
/// depth and normals evaluated analytically from the surface.
inline RenderResult render(const Scene& scene, const NoiseConfig& noise = {}) {
    scene.camera.validate();
    const CameraIntrinsics& cam = scene.camera;
    if (!scene.mask.same_size(cam.height, cam.width))
        throw DimensionError("scene mask does not match camera size");
    if (!scene.material.albedo.same_size(scene.mask) ||
        !scene.material.roughness.same_size(scene.mask))
        throw DimensionError("material grids do not match camera size");

    RenderResult out;
    out.gt_depth = DepthMap(cam.height, cam.width);
    out.gt_normals = NormalMap(cam.height, cam.width);
    for (int v = 0; v < cam.height; ++v) {
        for (int u = 0; u < cam.width; ++u) {
            if (!scene.mask(v, u)) continue;
            const auto s = surface_sample(scene.surface, cam, u, v);
            if (!s) continue;
            out.gt_depth.data(v, u) = s->depth;
            out.gt_depth.mask(v, u) = 1;
            // Tangents of X(u,v) = D(u,v) * ray(u,v).
            const Eigen::Vector3d r = cam.ray(u, v);
            const Eigen::Vector3d xu =
                s->ddu * r + s->depth * Eigen::Vector3d(1.0 / cam.fx, 0.0, 0.0);
            const Eigen::Vector3d xv =
                s->ddv * r + s->depth * Eigen::Vector3d(0.0, 1.0 / cam.fy, 0.0);
            Eigen::Vector3d n = xu.cross(xv).normalized();
            if (n.z() > 0.0) n = -n;
            out.gt_normals.data(v, u) = n;
            out.gt_normals.mask(v, u) = 1;
        }
    }

    out.stack.camera = cam;
    out.stack.mask = out.gt_depth.mask;
    out.stack.lights = scene.lights;
    const PointMap points = depth_to_points(out.gt_depth, cam);
    for (const auto& light : scene.lights) {
        const PerPixelLighting ppl = per_pixel_lighting(cam, out.gt_depth, light);
        Grid<double> image(cam.height, cam.width, 0.0);
        for (int v = 0; v < cam.height; ++v) {
            for (int u = 0; u < cam.width; ++u) {
                if (!out.stack.mask(v, u)) continue;
                const Eigen::Vector3d& n = out.gt_normals.data(v, u);
                const Eigen::Vector3d& l = ppl.direction(v, u);
                const double shading = std::max(0.0, n.dot(-l));
                if (shading == 0.0) continue;
                const Eigen::Vector3d wv = -points.data(v, u).normalized();
                const double b = brdf_eval(scene.material, -l, wv, n, v, u);
                image(v, u) = ppl.attenuation(v, u) * b * shading * light.intensity;
            }
        }
        out.stack.images.push_back(std::move(image));
    }

    if (noise.gaussian_sigma > 0.0 || noise.zero_patch_count > 0) {
        double peak = 0.0;
        for (const auto& img : out.stack.images)
            for (double x : img) peak = std::max(peak, x);
        Rng rng(noise.seed);
        for (auto& img : out.stack.images) {
            if (noise.gaussian_sigma > 0.0 && peak > 0.0) {
                const double sigma = noise.gaussian_sigma * peak;
                for (int v = 0; v < cam.height; ++v)
                    for (int u = 0; u < cam.width; ++u)
                        if (out.stack.mask(v, u))
                            img(v, u) = std::max(0.0, img(v, u) + sigma * rng.normal());
            }
            const int ps = std::min({noise.zero_patch_size, cam.width, cam.height});
            for (int i = 0; i < noise.zero_patch_count; ++i) {
                const int u0 = static_cast<int>(rng.below(cam.width - ps + 1));
                const int v0 = static_cast<int>(rng.below(cam.height - ps + 1));
                for (int v = v0; v < v0 + ps; ++v)
                    for (int u = u0; u < u0 + ps; ++u) img(v, u) = 0.0;
            }
        }
    }
    return out;
}

enum class FixtureKind { plane, sphere, bumps };

inline FixtureKind fixture_kind_from_name(const std::string& name) {
    if (name == "plane") return FixtureKind::plane;
    if (name == "sphere") return FixtureKind::sphere;
    if (name == "bumps") return FixtureKind::bumps;
    throw DataError("unknown fixture name: " + name);
}

/// Deterministic test scene: analytic surface, smooth albedo pattern,
/// admissible lights, unit mean depth.
inline Scene make_fixture(FixtureKind kind, int size, int num_lights, std::uint64_t seed) {
    if (size < 64) throw DegenerateInputError("fixture size must be >= 64");
    if (num_lights < 3) throw DegenerateInputError("fixture needs at least 3 lights");
    CameraIntrinsics camera;
    camera.fx = camera.fy = static_cast<double>(size);
    camera.cx = camera.cy = (size - 1) / 2.0;
    camera.width = camera.height = size;

    Surface surface;
    switch (kind) {
        case FixtureKind::plane: surface = PlaneSurface{0.0, 0.0, 1.0}; break;
        case FixtureKind::sphere: surface = SphereCapSurface{}; break;
        case FixtureKind::bumps: surface = SinusoidSurface{}; break;
    }

    Material material;
    material.model = BrdfModel::lambertian;
    material.albedo = Grid<double>(size, size);
    material.roughness = Grid<double>(size, size, 0.5);
    for (int v = 0; v < size; ++v)
        for (int u = 0; u < size; ++u) {
            const double x = static_cast<double>(u) / (size - 1);
            const double y = static_cast<double>(v) / (size - 1);
            material.albedo(v, u) =
                0.7 + 0.2 * std::sin(2.0 * std::numbers::pi * x) *
                          std::cos(2.0 * std::numbers::pi * y);
        }

    Scene scene = make_scene(std::move(surface), std::move(material), {}, camera);
    scene.lights = sample_admissible_lights(num_lights, seed);
    return scene;
}

}  // namespace nfps
