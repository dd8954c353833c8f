// Copyright 2026 nfps contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include "nfps/errors.hpp"

namespace nfps {

/// Pinhole camera at the origin looking down +z. No skew, no distortion.
/// Pixel centers sit at integer (u,v); u runs along the width.
struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;
    int width = 0;
    int height = 0;

    void validate() const {
        if (fx <= 0.0 || fy <= 0.0) throw DimensionError("focal length must be positive");
        if (width <= 0 || height <= 0) throw DimensionError("image size must be positive");
        if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height)
            throw DimensionError("principal point outside the image");
    }

    Eigen::Matrix3d matrix() const {
        Eigen::Matrix3d k;
        k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
        return k;
    }

    /// K^-1 (u,v,1)^T: the ray through pixel (u,v) at unit depth.
    Eigen::Vector3d ray(double u, double v) const {
        return {(u - cx) / fx, (v - cy) / fy, 1.0};
    }

    /// Projects a camera-space point with z > 0 onto the pixel grid.
    Eigen::Vector2d project(const Eigen::Vector3d& x) const {
        return {fx * x.x() / x.z() + cx, fy * x.y() / x.z() + cy};
    }

    /// Intrinsics for the next-coarser pyramid level; everything halves.
    CameraIntrinsics downsampled() const {
        return {fx / 2.0, fy / 2.0, cx / 2.0, cy / 2.0, width / 2, height / 2};
    }
};

}  // namespace nfps
