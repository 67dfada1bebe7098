#pragma once

namespace medpipe {

// Axis-aligned box in pixel coordinates. All four edges are inclusive, so a
// single pixel is (x, y, x, y) and widths are x_max - x_min + 1.
struct LabeledBox {
    int class_id = 1;
    int x_min = 0;
    int y_min = 0;
    int x_max = 0;
    int y_max = 0;

    bool operator==(const LabeledBox&) const = default;
};

}  // namespace medpipe
