#include "medpipe/drr.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "medpipe/error.hpp"

namespace medpipe {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Vec3 {
    double x = 0, y = 0, z = 0;

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }

struct Mat3 {
    double m[3][3] = {};

    Vec3 apply(Vec3 v) const {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }
};

Vec3 unit_vec(int axis) {
    Vec3 v;
    if (axis == 0) v.x = 1;
    if (axis == 1) v.y = 1;
    if (axis == 2) v.z = 1;
    return v;
}

// In-plane detector axes: the two non-ray axes in ascending order.
// Columns run along the first, rows along the second.
std::pair<int, int> inplane_axes(Axis a) {
    switch (a) {
        case Axis::X: return {1, 2};
        case Axis::Y: return {0, 2};
        default: return {0, 1};
    }
}

// Rotation axis paired with each ray axis; 90 degrees maps X->Y, Y->Z, Z->X.
int rotation_axis(Axis a) {
    switch (a) {
        case Axis::X: return 2;
        case Axis::Y: return 0;
        default: return 1;
    }
}

Mat3 rotation_about(int axis, double deg) {
    const double rad = deg * kPi / 180.0;
    const double c = std::cos(rad), s = std::sin(rad);
    const int u = (axis + 1) % 3, v = (axis + 2) % 3;
    Mat3 r;
    r.m[axis][axis] = 1;
    r.m[u][u] = c;
    r.m[u][v] = -s;
    r.m[v][u] = s;
    r.m[v][v] = c;
    return r;
}

void require_attenuation(const AttenuationVolume& v) {
    for (int i = 0; i < 3; ++i) {
        if (v.dims[i] < 1) throw Error("empty_volume", "volume dims must be positive");
        if (!(v.spacing_mm[i] > 0.0))
            throw Error("bad_config", "voxel spacing must be positive");
    }
    const auto n = static_cast<std::size_t>(v.dims[0]) * v.dims[1] * v.dims[2];
    if (v.mu.size() != n)
        throw Error("empty_volume", "attenuation buffer does not match dims");
}

void require_labels(const LabelVolume3D& lv) {
    for (int i = 0; i < 3; ++i) {
        if (lv.dims[i] < 1) throw Error("empty_volume", "label volume dims must be positive");
        if (!(lv.spacing_mm[i] > 0.0))
            throw Error("bad_config", "voxel spacing must be positive");
    }
    const auto n = static_cast<std::size_t>(lv.dims[0]) * lv.dims[1] * lv.dims[2];
    if (lv.labels.size() != n)
        throw Error("empty_volume", "label buffer does not match dims");
    for (const int c : lv.labels)
        if (c < 0) throw Error("bad_labels", "class labels must be non-negative");
}

double resolve_step(const ProjectionConfig& cfg, const std::array<double, 3>& spacing) {
    if (cfg.step_mm > 0.0) return cfg.step_mm;
    if (cfg.step_mm < 0.0) throw Error("bad_config", "step_mm must be positive");
    return 0.5 * std::min({spacing[0], spacing[1], spacing[2]});
}

void require_config(const ProjectionConfig& cfg) {
    if (!(cfg.i0 > 0.0)) throw Error("bad_config", "i0 must be positive");
    if (!(cfg.angle_deg >= 0.0 && cfg.angle_deg < 360.0))
        throw Error("bad_config", "angle_deg must lie in [0, 360)");
}

// Intersection of the ray p + t*d with the box [0, ext]. Returns false when
// the ray misses; otherwise [t0, t1] is the inside interval.
bool clip_to_box(Vec3 p, Vec3 d, Vec3 ext, double& t0, double& t1) {
    t0 = -std::numeric_limits<double>::infinity();
    t1 = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 3; ++k) {
        const double pk = p[k], dk = d[k], ek = ext[k];
        if (std::abs(dk) < 1e-15) {
            if (pk < 0.0 || pk > ek) return false;
            continue;
        }
        double a = (0.0 - pk) / dk;
        double b = (ek - pk) / dk;
        if (a > b) std::swap(a, b);
        t0 = std::max(t0, a);
        t1 = std::min(t1, b);
    }
    return t1 > t0;
}

// Trilinear sample on the voxel-center lattice, clamped to the edge voxels.
// Valid only for points inside the physical box.
double sample_trilinear(const AttenuationVolume& v, Vec3 q) {
    int i0[3], i1[3];
    double f[3];
    const double qs[3] = {q.x, q.y, q.z};
    for (int k = 0; k < 3; ++k) {
        const int n = v.dims[k];
        double g = qs[k] / v.spacing_mm[k] - 0.5;
        if (g < 0.0) g = 0.0;
        if (g > n - 1) g = n - 1;
        int lo = static_cast<int>(std::floor(g));
        if (lo > n - 2) lo = n - 2;
        if (lo < 0) lo = 0;
        i0[k] = lo;
        i1[k] = std::min(lo + 1, n - 1);
        f[k] = g - lo;
    }
    const double c000 = v.at(i0[0], i0[1], i0[2]);
    const double c100 = v.at(i1[0], i0[1], i0[2]);
    const double c010 = v.at(i0[0], i1[1], i0[2]);
    const double c110 = v.at(i1[0], i1[1], i0[2]);
    const double c001 = v.at(i0[0], i0[1], i1[2]);
    const double c101 = v.at(i1[0], i0[1], i1[2]);
    const double c011 = v.at(i0[0], i1[1], i1[2]);
    const double c111 = v.at(i1[0], i1[1], i1[2]);
    const double c00 = c000 + (c100 - c000) * f[0];
    const double c10 = c010 + (c110 - c010) * f[0];
    const double c01 = c001 + (c101 - c001) * f[0];
    const double c11 = c011 + (c111 - c011) * f[0];
    const double c0 = c00 + (c10 - c00) * f[1];
    const double c1 = c01 + (c11 - c01) * f[1];
    return c0 + (c1 - c0) * f[2];
}

int clamp_index(double g, int n) {
    int i = static_cast<int>(std::floor(g));
    if (i < 0) i = 0;
    if (i > n - 1) i = n - 1;
    return i;
}

struct DetectorFrame {
    int width = 0, height = 0;
    double su = 0, sv = 0;       // pixel pitch along columns / rows
    double uext = 0, vext = 0;   // physical detector extent
    Vec3 u, v, d;                // rotated basis: columns, rows, ray direction
    Vec3 center, ext;
};

DetectorFrame make_frame(const std::array<int, 3>& dims,
                         const std::array<double, 3>& spacing,
                         const ProjectionConfig& cfg) {
    const auto [ua, va] = inplane_axes(cfg.axis);
    const int ka = static_cast<int>(cfg.axis);
    DetectorFrame fr;
    fr.width = dims[ua];
    fr.height = dims[va];
    fr.su = spacing[ua];
    fr.sv = spacing[va];
    fr.uext = fr.width * fr.su;
    fr.vext = fr.height * fr.sv;
    const Mat3 rot = rotation_about(rotation_axis(cfg.axis), cfg.angle_deg);
    fr.u = rot.apply(unit_vec(ua));
    fr.v = rot.apply(unit_vec(va));
    fr.d = rot.apply(unit_vec(ka));
    fr.ext = {dims[0] * spacing[0], dims[1] * spacing[1], dims[2] * spacing[2]};
    fr.center = fr.ext * 0.5;
    return fr;
}

Vec3 pixel_origin(const DetectorFrame& fr, int row, int col) {
    return fr.center + fr.u * ((col + 0.5) * fr.su - fr.uext * 0.5) +
           fr.v * ((row + 0.5) * fr.sv - fr.vext * 0.5);
}

}  // namespace

Axis axis_from_string(const std::string& s) {
    if (s == "X" || s == "x") return Axis::X;
    if (s == "Y" || s == "y") return Axis::Y;
    if (s == "Z" || s == "z") return Axis::Z;
    throw Error("bad_config", "axis must be one of X, Y, Z");
}

const char* to_string(Axis a) {
    switch (a) {
        case Axis::X: return "X";
        case Axis::Y: return "Y";
        default: return "Z";
    }
}

Radiograph project_parallel(const AttenuationVolume& v, Axis axis) {
    require_attenuation(v);
    const auto [ua, va] = inplane_axes(axis);
    const int ka = static_cast<int>(axis);

    Radiograph r;
    r.width = v.dims[ua];
    r.height = v.dims[va];
    r.integrals.assign(static_cast<std::size_t>(r.width) * r.height, 0.0);
    r.transmitted.assign(r.integrals.size(), 0.0);

    const double ds = v.spacing_mm[ka];
    int idx[3];
    for (int i = 0; i < r.height; ++i) {
        for (int j = 0; j < r.width; ++j) {
            idx[ua] = j;
            idx[va] = i;
            double s = 0.0;
            for (int k = 0; k < v.dims[ka]; ++k) {
                idx[ka] = k;
                s += v.at(idx[0], idx[1], idx[2]);
            }
            const double integral = s * ds;
            r.integrals[static_cast<std::size_t>(i) * r.width + j] = integral;
            r.transmitted[static_cast<std::size_t>(i) * r.width + j] = std::exp(-integral);
        }
    }
    return r;
}

Radiograph project_at_angle(const AttenuationVolume& v, const ProjectionConfig& cfg) {
    require_attenuation(v);
    require_config(cfg);
    const double step = resolve_step(cfg, v.spacing_mm);

    // Degenerate rotation: the ray-marched integral reduces to the exact
    // per-voxel sum, so evaluate it that way.
    if (cfg.angle_deg == 0.0) return project_parallel(v, cfg.axis);

    const DetectorFrame fr = make_frame(v.dims, v.spacing_mm, cfg);

    Radiograph r;
    r.width = fr.width;
    r.height = fr.height;
    r.integrals.assign(static_cast<std::size_t>(fr.width) * fr.height, 0.0);
    r.transmitted.assign(r.integrals.size(), 1.0);

    for (int i = 0; i < fr.height; ++i) {
        for (int j = 0; j < fr.width; ++j) {
            const Vec3 p = pixel_origin(fr, i, j);
            double t0, t1;
            const std::size_t at = static_cast<std::size_t>(i) * fr.width + j;
            if (!clip_to_box(p, fr.d, fr.ext, t0, t1)) {
                r.transmitted[at] = 1.0;
                continue;
            }
            const double len = t1 - t0;
            const int nsteps = std::max(1, static_cast<int>(std::ceil(len / step - 1e-9)));
            const double h = len / nsteps;
            double acc = 0.5 * (sample_trilinear(v, p + fr.d * t0) +
                                sample_trilinear(v, p + fr.d * t1));
            for (int m = 1; m < nsteps; ++m)
                acc += sample_trilinear(v, p + fr.d * (t0 + m * h));
            const double integral = acc * h;
            r.integrals[at] = integral;
            r.transmitted[at] = std::exp(-integral);
        }
    }
    return r;
}

std::map<int, Mask2D> project_labels(const LabelVolume3D& lv, const ProjectionConfig& cfg) {
    require_labels(lv);
    require_config(cfg);
    const double step = resolve_step(cfg, lv.spacing_mm);

    std::map<int, Mask2D> masks;
    for (const int c : lv.labels)
        if (c != 0 && !masks.count(c)) masks.emplace(c, Mask2D());

    const auto [ua, va] = inplane_axes(cfg.axis);
    const int ka = static_cast<int>(cfg.axis);
    const int width = lv.dims[ua], height = lv.dims[va];
    for (auto& [c, m] : masks) m = Mask2D(height, width);

    if (cfg.angle_deg == 0.0) {
        // Exact per-ray enumeration: a pixel is hit iff its voxel column
        // contains the class.
        int idx[3];
        for (int i = 0; i < height; ++i) {
            for (int j = 0; j < width; ++j) {
                idx[ua] = j;
                idx[va] = i;
                for (int k = 0; k < lv.dims[ka]; ++k) {
                    idx[ka] = k;
                    const std::size_t flat =
                        static_cast<std::size_t>(idx[0]) +
                        static_cast<std::size_t>(lv.dims[0]) *
                            (static_cast<std::size_t>(idx[1]) +
                             static_cast<std::size_t>(lv.dims[1]) * idx[2]);
                    const int c = lv.labels[flat];
                    if (c != 0) masks.at(c).at(i, j) = 1;
                }
            }
        }
        return masks;
    }

    const DetectorFrame fr = make_frame(lv.dims, lv.spacing_mm, cfg);
    for (int i = 0; i < fr.height; ++i) {
        for (int j = 0; j < fr.width; ++j) {
            const Vec3 p = pixel_origin(fr, i, j);
            double t0, t1;
            if (!clip_to_box(p, fr.d, fr.ext, t0, t1)) continue;
            const double len = t1 - t0;
            const int nsteps = std::max(1, static_cast<int>(std::ceil(len / step - 1e-9)));
            const double h = len / nsteps;
            for (int m = 0; m <= nsteps; ++m) {
                const Vec3 q = p + fr.d * (t0 + m * h);
                const int ix = clamp_index(q.x / lv.spacing_mm[0], lv.dims[0]);
                const int iy = clamp_index(q.y / lv.spacing_mm[1], lv.dims[1]);
                const int iz = clamp_index(q.z / lv.spacing_mm[2], lv.dims[2]);
                const std::size_t flat =
                    static_cast<std::size_t>(ix) +
                    static_cast<std::size_t>(lv.dims[0]) *
                        (static_cast<std::size_t>(iy) +
                         static_cast<std::size_t>(lv.dims[1]) * iz);
                const int c = lv.labels[flat];
                if (c != 0) masks.at(c).at(i, j) = 1;
            }
        }
    }
    return masks;
}

std::vector<LabeledBox> boxes_from_labels(const std::map<int, Mask2D>& masks) {
    std::vector<LabeledBox> boxes;
    for (const auto& [c, m] : masks) {
        int x_min = m.width, y_min = m.height, x_max = -1, y_max = -1;
        for (int i = 0; i < m.height; ++i) {
            for (int j = 0; j < m.width; ++j) {
                if (!m.at(i, j)) continue;
                x_min = std::min(x_min, j);
                x_max = std::max(x_max, j);
                y_min = std::min(y_min, i);
                y_max = std::max(y_max, i);
            }
        }
        if (x_max < 0) continue;  // empty mask: no box
        boxes.push_back({c, x_min, y_min, x_max, y_max});
    }
    return boxes;
}

std::vector<std::uint8_t> to_display(const Radiograph& r, bool invert) {
    std::vector<std::uint8_t> out(r.integrals.size(), 0);
    if (r.integrals.empty()) return out;
    const auto [lo_it, hi_it] = std::minmax_element(r.integrals.begin(), r.integrals.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi == lo) return out;  // degenerate range: all zeros
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double t = (r.integrals[i] - lo) / (hi - lo);
        int v = static_cast<int>(std::lround(t * 255.0));
        if (invert) v = 255 - v;
        out[i] = static_cast<std::uint8_t>(v);
    }
    return out;
}

void write_pgm(const Radiograph& r, bool invert, const std::filesystem::path& path) {
    const auto pixels = to_display(r, invert);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("unreadable_data", "cannot write " + path.string());
    out << "P5\n" << r.width << " " << r.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(pixels.data()),
              static_cast<std::streamsize>(pixels.size()));
}

LabelVolume3D label_volume_from(const Volume3D& v) {
    LabelVolume3D lv;
    lv.dims = v.header.dims;
    lv.spacing_mm = v.header.spacing_mm;
    lv.labels.resize(v.voxels.size());
    for (std::size_t i = 0; i < v.voxels.size(); ++i) {
        if (v.voxels[i] < 0)
            throw Error("bad_labels", "class labels must be non-negative");
        lv.labels[i] = v.voxels[i];
    }
    return lv;
}

}  // namespace medpipe
