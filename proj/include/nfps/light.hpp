// Copyright 2026 nfps contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>

#include "nfps/errors.hpp"

namespace nfps {

/// Anisotropic point light: position p, emission axis d (unit), angular
/// falloff exponent mu. Attenuation at a surface point X is
/// (L.d)^mu / |X-p|^2 with L the unit direction from p to X.
struct LightSource {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Vector3d direction = Eigen::Vector3d::UnitZ();
    double mu = 0.0;
    double intensity = 1.0;

    void validate() const {
        if (std::abs(direction.norm() - 1.0) > 1e-9)
            throw DegenerateInputError("light direction must be unit length");
        if (mu < 0.0) throw DegenerateInputError("light mu must be nonnegative");
        if (!(intensity > 0.0)) throw DegenerateInputError("light intensity must be positive");
    }
};

}  // namespace nfps
