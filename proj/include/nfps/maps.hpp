// Copyright 2026 nfps contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include "nfps/grid.hpp"

namespace nfps {

/// Depth per pixel, positive on the valid set. Scene units.
struct DepthMap {
    Grid<double> data;
    Mask mask;

    DepthMap() = default;
    DepthMap(int height, int width, double fill = 0.0, std::uint8_t valid = 0)
        : data(height, width, fill), mask(height, width, valid) {}

    int height() const { return data.height(); }
    int width() const { return data.width(); }
};

/// Unit surface normals, camera-facing (z < 0) on the valid set.
struct NormalMap {
    Grid<Eigen::Vector3d> data;
    Mask mask;

    NormalMap() = default;
    NormalMap(int height, int width)
        : data(height, width, Eigen::Vector3d::Zero()), mask(height, width, 0) {}

    int height() const { return data.height(); }
    int width() const { return data.width(); }
};

/// Camera-space points, one per pixel.
struct PointMap {
    Grid<Eigen::Vector3d> data;
    Mask mask;

    PointMap() = default;
    PointMap(int height, int width)
        : data(height, width, Eigen::Vector3d::Zero()), mask(height, width, 0) {}

    int height() const { return data.height(); }
    int width() const { return data.width(); }
};

/// Generic masked scalar field (albedo, radiance, ...).
struct ScalarField {
    Grid<double> data;
    Mask mask;

    ScalarField() = default;
    ScalarField(int height, int width, double fill = 0.0, std::uint8_t valid = 0)
        : data(height, width, fill), mask(height, width, valid) {}

    int height() const { return data.height(); }
    int width() const { return data.width(); }
};

}  // namespace nfps
