#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "medpipe/box.hpp"
#include "medpipe/mask.hpp"
#include "medpipe/volume.hpp"

namespace medpipe {

enum class Axis { X = 0, Y = 1, Z = 2 };

Axis axis_from_string(const std::string& s);
const char* to_string(Axis a);

// Parallel-beam geometry. axis is the ray direction before rotation;
// angle_deg rotates rays and detector about the volume center around the
// fixed perpendicular axis paired with the ray axis (X rotates about Z,
// Y about X, Z about Y), so 90 degrees maps each ray axis onto the next one.
// step_mm <= 0 selects the default of half the smallest voxel spacing.
struct ProjectionConfig {
    Axis axis = Axis::Z;
    double angle_deg = 0.0;
    double i0 = 1.0;
    double step_mm = 0.0;
};

// integrals holds per-pixel line integrals of mu (row-major);
// transmitted = exp(-integral) per Beer-Lambert.
struct Radiograph {
    int width = 0;
    int height = 0;
    std::vector<double> integrals;
    std::vector<double> transmitted;
};

// Integer class labels per voxel, 0 = background, layout as Volume3D.
struct LabelVolume3D {
    std::array<int, 3> dims{};
    std::array<double, 3> spacing_mm{};
    std::vector<int> labels;
};

// Axis-aligned projection: pixel (i, j) sums mu over the ray axis times its
// spacing. The image plane is spanned by the two remaining axes in ascending
// order; columns follow the first, rows the second.
Radiograph project_parallel(const AttenuationVolume& v, Axis axis);

// Rotated projection via ray marching with trilinear interpolation and
// trapezoidal integration between the ray's volume entry and exit points.
// angle 0 reproduces project_parallel.
Radiograph project_at_angle(const AttenuationVolume& v, const ProjectionConfig& cfg);

// Per-class any-hit projection of a label volume under the same geometry.
// Axis-aligned configurations enumerate voxels exactly; rotated ones sample
// nearest-neighbor at step_mm. Every nonzero class present in the volume gets
// an entry, possibly with an empty mask.
std::map<int, Mask2D> project_labels(const LabelVolume3D& lv, const ProjectionConfig& cfg);

// Tight axis-aligned hull per class, inclusive coordinates (x = column,
// y = row). Classes with empty masks produce no box. Sorted by class_id.
std::vector<LabeledBox> boxes_from_labels(const std::map<int, Mask2D>& masks);

// Min-max normalization of integrals to [0, 255]. A constant image maps to
// all zeros, inverted or not; invert flips grayscale for film-like display.
std::vector<std::uint8_t> to_display(const Radiograph& r, bool invert);

void write_pgm(const Radiograph& r, bool invert, const std::filesystem::path& path);

// Reinterprets int16 voxels as non-negative class labels.
LabelVolume3D label_volume_from(const Volume3D& v);

}  // namespace medpipe
