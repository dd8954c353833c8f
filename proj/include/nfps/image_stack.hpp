// Copyright 2026 nfps contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "nfps/camera.hpp"
#include "nfps/grid.hpp"
#include "nfps/light.hpp"

namespace nfps {

/// M radiance images of one static object, one light per image, shared
/// camera and validity mask.
struct ImageStack {
    std::vector<Grid<double>> images;
    std::vector<LightSource> lights;
    CameraIntrinsics camera;
    Mask mask;

    size_t count() const { return images.size(); }
    int height() const { return mask.height(); }
    int width() const { return mask.width(); }

    void validate() const {
        if (images.empty()) throw DegenerateInputError("image stack is empty");
        if (images.size() != lights.size())
            throw DimensionError("image/light count mismatch");
        for (const auto& img : images)
            if (!img.same_size(mask)) throw DimensionError("image/mask size mismatch");
        if (camera.width != mask.width() || camera.height != mask.height())
            throw DimensionError("camera/image size mismatch");
    }
};

}  // namespace nfps
