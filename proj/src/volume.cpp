#include "medpipe/volume.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "medpipe/error.hpp"

namespace medpipe {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

long long voxel_count(const VolumeHeader& h) {
    return static_cast<long long>(h.dims[0]) * h.dims[1] * h.dims[2];
}

fs::path resolve_data_path(const VolumeHeader& h, const fs::path& header_path) {
    const fs::path p(h.data_path);
    if (p.is_absolute()) return p;
    return header_path.parent_path() / p;
}

std::string failures_to_string(const ValidationReport& rep) {
    std::string s;
    for (const auto& f : rep.failures) {
        if (!s.empty()) s += "; ";
        s += f.check_id + ": " + f.message;
    }
    return s;
}

}  // namespace

VolumeHeader parse_volume_header(const fs::path& header_path) {
    std::ifstream in(header_path, std::ios::binary);
    if (!in)
        throw Error("unreadable_data", "cannot open header " + header_path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error("malformed_header",
                    header_path.string() + ": " + std::string(e.what()));
    }

    VolumeHeader h;
    try {
        const auto dims = j.at("dims");
        const auto spacing = j.at("spacing_mm");
        const auto orient = j.at("orientation");
        if (!dims.is_array() || dims.size() != 3 || !spacing.is_array() ||
            spacing.size() != 3 || !orient.is_array() || orient.size() != 3)
            throw Error("malformed_header", "dims/spacing_mm/orientation must be 3-element arrays");
        for (int i = 0; i < 3; ++i) {
            h.dims[i] = dims[i].get<int>();
            h.spacing_mm[i] = spacing[i].get<double>();
            const auto row = orient[i];
            if (!row.is_array() || row.size() != 3)
                throw Error("malformed_header", "orientation rows must have 3 entries");
            for (int k = 0; k < 3; ++k) h.orientation[i][k] = row[k].get<double>();
        }
        const std::string dtype = j.at("dtype").get<std::string>();
        if (dtype != "int16")
            throw Error("malformed_header", "unsupported dtype '" + dtype + "'");
        h.dtype = VoxelDtype::Int16;
        const std::string order = j.at("byte_order").get<std::string>();
        if (order != "little-endian")
            throw Error("malformed_header", "unsupported byte_order '" + order + "'");
        h.byte_order = ByteOrder::LittleEndian;
        h.data_path = j.at("data_path").get<std::string>();
        if (h.data_path.empty())
            throw Error("malformed_header", "data_path must be non-empty");
    } catch (const json::exception& e) {
        throw Error("malformed_header",
                    header_path.string() + ": " + std::string(e.what()));
    }
    return h;
}

ValidationReport validate_metadata(const VolumeHeader& h) {
    ValidationReport rep;
    for (int i = 0; i < 3; ++i) {
        if (h.dims[i] < 1) {
            rep.fail("dims", "dims must be positive");
            break;
        }
    }
    for (int i = 0; i < 3; ++i) {
        if (!(h.spacing_mm[i] > 0.0) || !std::isfinite(h.spacing_mm[i])) {
            rep.fail("spacing", "spacing_mm must be positive and finite");
            break;
        }
    }
    bool orient_ok = true;
    for (int i = 0; i < 3 && orient_ok; ++i)
        for (int k = 0; k < 3; ++k)
            if (!std::isfinite(h.orientation[i][k])) {
                orient_ok = false;
                break;
            }
    if (orient_ok) {
        // Columns are the direction cosines of the volume axes.
        for (int a = 0; a < 3 && orient_ok; ++a) {
            for (int b = a; b < 3 && orient_ok; ++b) {
                double dot = 0.0;
                for (int r = 0; r < 3; ++r)
                    dot += h.orientation[r][a] * h.orientation[r][b];
                const double want = (a == b) ? 1.0 : 0.0;
                if (std::abs(dot - want) > kOrientationTolerance) orient_ok = false;
            }
        }
    }
    if (!orient_ok)
        rep.fail("orientation", "orientation columns are not orthonormal");
    if (h.dtype != VoxelDtype::Int16) rep.fail("dtype", "unsupported dtype");
    return rep;
}

ValidationReport validate_metadata(const VolumeHeader& h,
                                   const fs::path& header_path) {
    ValidationReport rep = validate_metadata(h);
    const fs::path data = resolve_data_path(h, header_path);
    std::error_code ec;
    const auto size = fs::file_size(data, ec);
    if (ec) {
        rep.fail("size", "data file not found: " + data.string());
        return rep;
    }
    const auto expected = static_cast<std::uintmax_t>(voxel_count(h)) * 2u;
    if (size != expected) {
        std::ostringstream msg;
        msg << "data file has " << size << " bytes, expected " << expected;
        rep.fail("size", msg.str());
    }
    return rep;
}

Volume3D load_volume(const fs::path& header_path) {
    Volume3D v;
    v.header = parse_volume_header(header_path);

    const ValidationReport rep = validate_metadata(v.header);
    if (!rep.passed())
        throw Error("malformed_header", failures_to_string(rep));

    const fs::path data = resolve_data_path(v.header, header_path);
    std::error_code ec;
    const auto size = fs::file_size(data, ec);
    if (ec)
        throw Error("unreadable_data", "cannot stat data file " + data.string());
    const long long n = voxel_count(v.header);
    if (size != static_cast<std::uintmax_t>(n) * 2u) {
        std::ostringstream msg;
        msg << data.string() << " has " << size << " bytes, expected " << n * 2;
        throw Error("size_mismatch", msg.str());
    }

    std::ifstream in(data, std::ios::binary);
    if (!in)
        throw Error("unreadable_data", "cannot open data file " + data.string());
    std::vector<unsigned char> bytes(static_cast<std::size_t>(n) * 2u);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw Error("unreadable_data", "short read from " + data.string());

    v.voxels.resize(static_cast<std::size_t>(n));
    for (long long i = 0; i < n; ++i) {
        const std::uint16_t lo = bytes[2 * i];
        const std::uint16_t hi = bytes[2 * i + 1];
        v.voxels[i] = static_cast<std::int16_t>(
            static_cast<std::uint16_t>(lo | (hi << 8)));
    }
    return v;
}

void save_volume(const Volume3D& v, const fs::path& header_path) {
    const ValidationReport rep = validate_metadata(v.header);
    if (!rep.passed())
        throw Error("malformed_header", failures_to_string(rep));
    const long long n = voxel_count(v.header);
    if (v.voxels.size() != static_cast<std::size_t>(n))
        throw Error("size_mismatch", "voxel buffer does not match dims");

    json j;
    j["dims"] = v.header.dims;
    j["spacing_mm"] = v.header.spacing_mm;
    j["orientation"] = v.header.orientation;
    j["dtype"] = "int16";
    j["byte_order"] = "little-endian";
    j["data_path"] = v.header.data_path;

    const fs::path dir = header_path.parent_path();
    if (!dir.empty()) fs::create_directories(dir);
    std::ofstream hout(header_path, std::ios::binary | std::ios::trunc);
    if (!hout)
        throw Error("unreadable_data", "cannot write header " + header_path.string());
    hout << j.dump(2) << "\n";

    const fs::path data = resolve_data_path(v.header, header_path);
    std::ofstream dout(data, std::ios::binary | std::ios::trunc);
    if (!dout)
        throw Error("unreadable_data", "cannot write data file " + data.string());
    std::vector<unsigned char> bytes(static_cast<std::size_t>(n) * 2u);
    for (long long i = 0; i < n; ++i) {
        const auto u = static_cast<std::uint16_t>(v.voxels[i]);
        bytes[2 * i] = static_cast<unsigned char>(u & 0xff);
        bytes[2 * i + 1] = static_cast<unsigned char>(u >> 8);
    }
    dout.write(reinterpret_cast<const char*>(bytes.data()),
               static_cast<std::streamsize>(bytes.size()));
}

AttenuationVolume hu_to_attenuation(const Volume3D& v, double mu_water) {
    if (!(mu_water > 0.0))
        throw Error("bad_argument", "mu_water must be positive");
    AttenuationVolume a;
    a.dims = v.header.dims;
    a.spacing_mm = v.header.spacing_mm;
    a.mu.resize(v.voxels.size());
    for (std::size_t i = 0; i < v.voxels.size(); ++i) {
        const double mu = mu_water * (1.0 + static_cast<double>(v.voxels[i]) / 1000.0);
        a.mu[i] = mu > 0.0 ? mu : 0.0;
    }
    return a;
}

}  // namespace medpipe
