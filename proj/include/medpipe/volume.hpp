#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "medpipe/validation.hpp"

namespace medpipe {

enum class VoxelDtype { Int16 };
enum class ByteOrder { LittleEndian };

// Sidecar metadata for a raw CT volume. orientation holds direction cosines
// row-major; its columns must be orthonormal within kOrientationTolerance.
struct VolumeHeader {
    std::array<int, 3> dims{};            // nx, ny, nz
    std::array<double, 3> spacing_mm{};
    std::array<std::array<double, 3>, 3> orientation{};
    VoxelDtype dtype = VoxelDtype::Int16;
    ByteOrder byte_order = ByteOrder::LittleEndian;
    std::string data_path;  // relative to the header file's directory
};

// Voxels in Hounsfield units, x-fastest: index = x + nx*(y + ny*z).
struct Volume3D {
    VolumeHeader header;
    std::vector<std::int16_t> voxels;

    std::int16_t at(int x, int y, int z) const {
        const auto& d = header.dims;
        return voxels[static_cast<std::size_t>(x) +
                      static_cast<std::size_t>(d[0]) *
                          (static_cast<std::size_t>(y) +
                           static_cast<std::size_t>(d[1]) * static_cast<std::size_t>(z))];
    }
};

// Linear attenuation coefficients in mm^-1, same layout as Volume3D.
struct AttenuationVolume {
    std::array<int, 3> dims{};
    std::array<double, 3> spacing_mm{};
    std::vector<double> mu;

    double at(int x, int y, int z) const {
        return mu[static_cast<std::size_t>(x) +
                  static_cast<std::size_t>(dims[0]) *
                      (static_cast<std::size_t>(y) +
                       static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(z))];
    }
};

inline constexpr double kDefaultMuWaterPerMm = 0.02;
inline constexpr double kOrientationTolerance = 1e-3;

VolumeHeader parse_volume_header(const std::filesystem::path& header_path);

// Header-only checks: dims, spacing, orientation, dtype.
ValidationReport validate_metadata(const VolumeHeader& header);
// Additionally checks that the data file exists and has exactly
// product(dims) * 2 bytes.
ValidationReport validate_metadata(const VolumeHeader& header,
                                   const std::filesystem::path& header_path);

Volume3D load_volume(const std::filesystem::path& header_path);
void save_volume(const Volume3D& v, const std::filesystem::path& header_path);

// mu = max(0, mu_water * (1 + HU/1000)); air at -1000 HU maps to 0.
AttenuationVolume hu_to_attenuation(const Volume3D& v,
                                    double mu_water = kDefaultMuWaterPerMm);

}  // namespace medpipe
