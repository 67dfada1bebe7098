#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace medpipe {

// Dense binary mask. Row-major storage, values restricted to 0/1.
struct Mask2D {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> data;

    Mask2D() = default;
    Mask2D(int h, int w)
        : height(h), width(w),
          data(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), 0) {}

    std::uint8_t& at(int row, int col) {
        return data[static_cast<std::size_t>(row) * width + col];
    }
    std::uint8_t at(int row, int col) const {
        return data[static_cast<std::size_t>(row) * width + col];
    }

    bool operator==(const Mask2D&) const = default;
};

}  // namespace medpipe
