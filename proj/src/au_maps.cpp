#include "aufd/au_maps.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "aufd/binio.hpp"
#include "aufd/errors.hpp"
#include "aufd/filters.hpp"

namespace aufd {

AUMapStack AUMapStack::zero(int t_f, int f, int h, int w) {
    AUMapStack s;
    s.t_f = t_f;
    s.f = f;
    s.h = h;
    s.w = w;
    s.maps.assign(static_cast<std::size_t>(t_f) * f * h * w, 0.0f);
    return s;
}

const std::array<AUDefinition, 16>& au_registry() {
    static const std::array<AUDefinition, 16> reg = {{
        {1, "inner_brow_raiser", {Lm::brow_l_inner, Lm::brow_r_inner}, 1.5f},
        {2, "outer_brow_raiser", {Lm::brow_l_outer, Lm::brow_r_outer}, 1.5f},
        {3, "brow_lowerer", {Lm::brow_l_inner, Lm::brow_l_outer, Lm::brow_r_inner, Lm::brow_r_outer}, 1.2f},
        {4, "upper_lid_raiser", {Lm::eye_l_center, Lm::eye_r_center}, 1.5f},
        {5, "lid_tightener", {Lm::eye_l_inner, Lm::eye_l_outer, Lm::eye_r_inner, Lm::eye_r_outer}, 1.2f},
        {6, "cheek_raiser", {Lm::cheek_l, Lm::cheek_r}, 1.5f},
        {7, "nose_wrinkler", {Lm::nose_bridge, Lm::nose_tip}, 1.5f},
        {8, "nose_broadener", {Lm::nose_tip, Lm::cheek_l, Lm::cheek_r}, 1.2f},
        {9, "bridge_tightener", {Lm::nose_bridge, Lm::cheek_l, Lm::cheek_r}, 1.2f},
        {10, "nasolabial_deepener_l", {Lm::nose_tip, Lm::cheek_l}, 1.3f},
        {11, "nasolabial_deepener_r", {Lm::nose_tip, Lm::cheek_r}, 1.3f},
        {12, "lip_corner_puller", {Lm::mouth_l, Lm::mouth_r}, 1.3f},
        {13, "upper_lip_raiser", {Lm::mouth_l, Lm::mouth_top, Lm::mouth_r}, 1.3f},
        {14, "dimpler", {Lm::dimple_l, Lm::dimple_r}, 1.5f},
        {15, "lip_corner_depressor", {Lm::mouth_l, Lm::mouth_bottom, Lm::mouth_r}, 1.3f},
        {16, "lip_presser", {Lm::mouth_top, Lm::mouth_bottom}, 1.5f},
    }};
    return reg;
}

bool AUSubset::contains(int au_index) const {
    return std::find(indices.begin(), indices.end(), au_index) != indices.end();
}

AUSubset au_subset(AUSubsetName name) {
    AUSubset s;
    s.name = au_subset_label(name);
    auto fill = [&](int lo, int hi) {
        for (int i = lo; i <= hi; ++i) s.indices.push_back(i);
    };
    switch (name) {
        case AUSubsetName::eyes: fill(1, 5); break;
        case AUSubsetName::nose: fill(7, 11); break;
        case AUSubsetName::lips: fill(12, 16); break;
        case AUSubsetName::all: fill(1, 16); break;
    }
    return s;
}

Ellipse fit_ellipse(std::span<const Point> points, float scale) {
    if (points.size() < 2) throw ContractError("fit_ellipse: need at least 2 points");
    const float n = static_cast<float>(points.size());
    float cx = 0, cy = 0;
    for (const Point& p : points) {
        cx += p.x;
        cy += p.y;
    }
    cx /= n;
    cy /= n;
    Eigen::Matrix2f cov = Eigen::Matrix2f::Zero();
    for (const Point& p : points) {
        const Eigen::Vector2f d(p.x - cx, p.y - cy);
        cov += d * d.transpose();
    }
    cov /= n;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2f> eig(cov);
    const Eigen::Vector2f evals = eig.eigenvalues(); // ascending
    const Eigen::Vector2f major = eig.eigenvectors().col(1);

    constexpr float kAxisFloor = 2.0f;
    Ellipse e;
    e.cx = cx;
    e.cy = cy;
    e.semi_major = std::max(kAxisFloor, scale * std::sqrt(std::max(0.0f, evals[1])));
    e.semi_minor = std::max(kAxisFloor, scale * std::sqrt(std::max(0.0f, evals[0])));
    e.rotation = std::atan2(major.y(), major.x());
    return e;
}

std::vector<std::uint8_t> rasterize_region(const Ellipse& e, int h, int w) {
    if (h <= 0 || w <= 0) throw ContractError("rasterize_region: frame dims must be positive");
    std::vector<std::uint8_t> map(static_cast<std::size_t>(h) * w, 0);
    const float c = std::cos(e.rotation), s = std::sin(e.rotation);
    // bounding box of the rotated ellipse, clipped to the frame
    const float ex = std::sqrt(e.semi_major * e.semi_major * c * c + e.semi_minor * e.semi_minor * s * s);
    const float ey = std::sqrt(e.semi_major * e.semi_major * s * s + e.semi_minor * e.semi_minor * c * c);
    const int x0 = std::max(0, static_cast<int>(std::floor(e.cx - ex - 1)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(e.cx + ex + 1)));
    const int y0 = std::max(0, static_cast<int>(std::floor(e.cy - ey - 1)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(e.cy + ey + 1)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const float dx = static_cast<float>(x) + 0.5f - e.cx;
            const float dy = static_cast<float>(y) + 0.5f - e.cy;
            const float u = (dx * c + dy * s) / e.semi_major;
            const float v = (-dx * s + dy * c) / e.semi_minor;
            if (u * u + v * v <= 1.0f) map[static_cast<std::size_t>(y) * w + x] = 1;
        }
    return map;
}

void gaussian_smooth(std::vector<float>& map, int h, int w, int radius) {
    if (radius < 1) throw ContractError("gaussian_smooth: radius must be >= 1");
    if (static_cast<std::size_t>(h) * w != map.size())
        throw ShapeError("gaussian_smooth: map size does not match dims");
    const auto kernel = gaussian_kernel(radius);
    separable_blur(map.data(), h, w, kernel);
    for (float& v : map) v = std::clamp(v, 0.0f, 1.0f);
}

AUMapStack build_au_stack(const FrameStack& stack, const AUSubset& subset, int f_aus, int smooth_radius) {
    if (static_cast<int>(stack.landmarks.size()) != stack.t_f)
        throw DataError("build_au_stack: landmarks present for " + std::to_string(stack.landmarks.size()) +
                        " of " + std::to_string(stack.t_f) + " frames");
    AUMapStack out = AUMapStack::zero(stack.t_f, f_aus, stack.h, stack.w);
    const auto& registry = au_registry();
    std::vector<float> plane(static_cast<std::size_t>(stack.h) * stack.w);
    for (int t = 0; t < stack.t_f; ++t) {
        const FrameLandmarks& lms = stack.landmarks[static_cast<std::size_t>(t)];
        for (int au = 1; au <= f_aus; ++au) {
            if (!subset.contains(au)) continue;
            const AUDefinition& def = registry[static_cast<std::size_t>(au - 1)];
            std::vector<Point> pts;
            pts.reserve(def.points.size());
            for (Lm l : def.points) {
                const Point& p = landmark(lms, l);
                if (!std::isfinite(p.x) || !std::isfinite(p.y))
                    throw DataError("build_au_stack: non-finite landmark for AU " +
                                    std::to_string(def.au_index) + " (" + def.name + ") at frame " +
                                    std::to_string(t));
                pts.push_back(p);
            }
            const Ellipse e = fit_ellipse(pts, def.scale);
            const auto mask = rasterize_region(e, stack.h, stack.w);
            for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = static_cast<float>(mask[i]);
            gaussian_smooth(plane, stack.h, stack.w, smooth_radius);
            std::copy(plane.begin(), plane.end(), out.maps.begin() + static_cast<std::ptrdiff_t>(out.idx(t, au - 1, 0, 0)));
        }
    }
    return out;
}

void write_aumap(const AUMapStack& maps, const std::filesystem::path& path) {
    std::ostringstream hdr;
    hdr << "kind=aumap\n";
    hdr << "t_f=" << maps.t_f << "\nf=" << maps.f << "\nheight=" << maps.h << "\nwidth=" << maps.w << "\n";
    const std::string header = hdr.str();
    BinWriter w(path);
    w.bytes(kMagic, 4);
    w.u16(1);
    w.u32(static_cast<std::uint32_t>(header.size()));
    w.str(header);
    // payload order is (au, t, y, x)
    for (int au = 0; au < maps.f; ++au)
        for (int t = 0; t < maps.t_f; ++t)
            w.f32s(maps.maps.data() + maps.idx(t, au, 0, 0), static_cast<std::size_t>(maps.h) * maps.w);
    w.finish(path);
}

AUMapStack read_aumap(const std::filesystem::path& path) {
    BinReader r(path);
    r.expect_magic();
    const std::uint16_t version = r.u16();
    if (version != 1) throw FormatError(r.path() + ": unsupported aumap version");
    const std::uint32_t hlen = r.u32();
    const std::string header = r.str(hlen);
    int t_f = 0, f = 0, h = 0, w = 0;
    std::istringstream in(header);
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "t_f") t_f = std::stoi(val);
        else if (key == "f") f = std::stoi(val);
        else if (key == "height") h = std::stoi(val);
        else if (key == "width") w = std::stoi(val);
    }
    if (t_f <= 0 || f <= 0 || h <= 0 || w <= 0) throw FormatError(r.path() + ": bad aumap dims");
    AUMapStack maps = AUMapStack::zero(t_f, f, h, w);
    for (int au = 0; au < f; ++au)
        for (int t = 0; t < t_f; ++t)
            r.f32s(maps.maps.data() + maps.idx(t, au, 0, 0), static_cast<std::size_t>(h) * w);
    return maps;
}

void write_pgm(const float* plane, int h, int w, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string());
    out << "P5\n" << w << " " << h << "\n255\n";
    for (int i = 0; i < h * w; ++i) {
        const float v = std::clamp(plane[i], 0.0f, 1.0f);
        out.put(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f))));
    }
}

} // namespace aufd
