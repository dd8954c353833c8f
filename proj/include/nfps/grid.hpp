// Copyright 2026 nfps contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <vector>

#include "nfps/errors.hpp"

namespace nfps {

/// Dense row-major H x W grid. Pixel (u,v) = (column, row), origin top-left,
/// pixel centers at integer coordinates.
template <class T>
class Grid {
  public:
    Grid() = default;
    Grid(int height, int width, const T& fill = T{})
        : height_(height), width_(width),
          data_(static_cast<size_t>(height) * static_cast<size_t>(width), fill) {
        if (height < 0 || width < 0) throw DimensionError("negative grid size");
    }

    int height() const { return height_; }
    int width() const { return width_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int v, int u) { return data_[static_cast<size_t>(v) * width_ + u]; }
    const T& operator()(int v, int u) const {
        return data_[static_cast<size_t>(v) * width_ + u];
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

    bool same_size(int h, int w) const { return height_ == h && width_ == w; }
    template <class U>
    bool same_size(const Grid<U>& other) const {
        return same_size(other.height(), other.width());
    }

    bool in_bounds(int v, int u) const {
        return v >= 0 && v < height_ && u >= 0 && u < width_;
    }

    bool operator==(const Grid&) const = default;

  private:
    int height_ = 0;
    int width_ = 0;
    std::vector<T> data_;
};

/// Validity grid; nonzero = valid.
using Mask = Grid<std::uint8_t>;

inline size_t count_valid(const Mask& mask) {
    size_t n = 0;
    for (auto m : mask)
        if (m) ++n;
    return n;
}

inline Mask full_mask(int height, int width) { return Mask(height, width, 1); }

inline Mask mask_and(const Mask& a, const Mask& b) {
    if (!a.same_size(b)) throw DimensionError("mask size mismatch");
    Mask out(a.height(), a.width());
    for (int v = 0; v < a.height(); ++v)
        for (int u = 0; u < a.width(); ++u) out(v, u) = a(v, u) && b(v, u);
    return out;
}

}  // namespace nfps
