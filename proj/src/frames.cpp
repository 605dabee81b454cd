#include "aufd/frames.hpp"

#include <algorithm>
#include <cmath>

#include "aufd/errors.hpp"
#include "aufd/rng.hpp"

namespace aufd {

FrameStack FrameStack::zero(int t_f, int h, int w) {
    FrameStack s;
    s.t_f = t_f;
    s.h = h;
    s.w = w;
    s.pixels.assign(static_cast<std::size_t>(t_f) * 3 * h * w, 0.0f);
    s.landmarks.assign(static_cast<std::size_t>(t_f), FrameLandmarks{});
    return s;
}

const std::vector<std::string>& known_edit_names() {
    static const std::vector<std::string> names = {"brow_raise", "eye_size", "mouth_corner"};
    return names;
}

FrameStack sample_frames(const FrameStack& raw, int count) {
    if (count < 1) throw ContractError("sample_frames: count must be >= 1");
    if (raw.t_f < count)
        throw DataError("sample_frames: insufficient frames, have " + std::to_string(raw.t_f) +
                        ", need " + std::to_string(count));
    FrameStack out = FrameStack::zero(count, raw.h, raw.w);
    const std::size_t frame_floats = static_cast<std::size_t>(3) * raw.h * raw.w;
    for (int k = 0; k < count; ++k) {
        const int i = static_cast<int>((static_cast<std::int64_t>(k) * raw.t_f) / count);
        std::copy_n(raw.pixels.begin() + static_cast<std::ptrdiff_t>(i * frame_floats), frame_floats,
                    out.pixels.begin() + static_cast<std::ptrdiff_t>(k * frame_floats));
        out.landmarks[static_cast<std::size_t>(k)] = raw.landmarks[static_cast<std::size_t>(i)];
    }
    return out;
}

double mean_abs_diff(const FrameStack& a, const FrameStack& b) {
    if (a.pixels.size() != b.pixels.size())
        throw ContractError("mean_abs_diff: frame stacks differ in size");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i)
        acc += std::abs(static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]));
    return acc / static_cast<double>(a.pixels.size());
}

namespace {

struct Rgb {
    float r = 0, g = 0, b = 0;
};

enum class Feature { none = -1, brows = 0, left_eye = 1, mouth = 2 };

// Face parameterization; all lengths in pixels at the clip's resolution.
struct Rig {
    float s = 1.0f; // h / 64
    float cx = 0, cy = 0;
    float face_rx = 0, face_ry = 0;
    Rgb bg_top, bg_bottom, skin, brow_col, iris_col, lip_col;
    float tex_amp = 0;
    float tex_a1 = 0, tex_b1 = 0, tex_p1 = 0, tex_a2 = 0, tex_b2 = 0, tex_p2 = 0;
    float eye_dx = 0, eye_y = 0, eye_rl = 0, eye_rr = 0, iris_frac = 0.5f;
    float brow_dy = 0, brow_len = 0, brow_th = 0, brow_tilt = 0, brow_raise = 0;
    float nose_len = 0, nose_w = 0;
    float mouth_y = 0, mouth_hw = 0, lip_h = 0, lip_th = 0;
    float corner_dy_l = 0, corner_dy_r = 0;
    float cheek_r = 0;
    float dimple_gap = 0;
    // smooth temporal jitter
    float bob_ax = 0, bob_ay = 0, bob_px = 0, bob_py = 0;
    float blink_center = 0, blink_halfwidth = 1.0f;
    float wiggle_amp = 0, wiggle_phase = 0;
    // edit bookkeeping
    Feature edited = Feature::none;
    Rgb tint;
};

struct Pose {
    float dx = 0, dy = 0;   // head bob offset
    float openness = 1.0f;  // eyelid openness
    float wiggle = 0;       // upper-lip offset
};

Rig make_rig(std::uint64_t seed, const ClipGeometry& geom) {
    Rng id(mix_seed(seed, 0x1D));
    Rig r;
    r.s = static_cast<float>(geom.h) / 64.0f;
    const float w = static_cast<float>(geom.w), h = static_cast<float>(geom.h);
    r.cx = w * (0.5f + static_cast<float>(id.uniform(-0.02, 0.02)));
    r.cy = h * (0.52f + static_cast<float>(id.uniform(-0.02, 0.02)));
    r.face_rx = w * static_cast<float>(id.uniform(0.30, 0.34));
    r.face_ry = h * static_cast<float>(id.uniform(0.38, 0.42));

    const float base = static_cast<float>(id.uniform(0.72, 0.88));
    r.skin = {base, base - static_cast<float>(id.uniform(0.05, 0.11)),
              base - static_cast<float>(id.uniform(0.14, 0.24))};
    const float bg = static_cast<float>(id.uniform(0.12, 0.30));
    r.bg_top = {bg, bg + 0.02f, bg + 0.05f};
    r.bg_bottom = {bg * 0.6f, bg * 0.6f + 0.02f, bg * 0.6f + 0.04f};
    const float bc = static_cast<float>(id.uniform(0.10, 0.22));
    r.brow_col = {bc, bc * 0.8f, bc * 0.6f};
    const float ic = static_cast<float>(id.uniform(0.15, 0.45));
    r.iris_col = {ic * 0.6f, ic * 0.7f, ic};
    r.lip_col = {static_cast<float>(id.uniform(0.55, 0.72)), 0.25f, 0.28f};

    r.tex_amp = static_cast<float>(id.uniform(0.010, 0.022));
    r.tex_a1 = static_cast<float>(id.uniform(0.15, 0.35)) / r.s;
    r.tex_b1 = static_cast<float>(id.uniform(0.15, 0.35)) / r.s;
    r.tex_p1 = static_cast<float>(id.uniform(0.0, 6.28));
    r.tex_a2 = static_cast<float>(id.uniform(0.35, 0.6)) / r.s;
    r.tex_b2 = static_cast<float>(id.uniform(0.35, 0.6)) / r.s;
    r.tex_p2 = static_cast<float>(id.uniform(0.0, 6.28));

    r.eye_dx = r.face_rx * static_cast<float>(id.uniform(0.42, 0.50));
    r.eye_y = r.cy - r.face_ry * static_cast<float>(id.uniform(0.18, 0.26));
    r.eye_rl = r.eye_rr = r.face_rx * static_cast<float>(id.uniform(0.15, 0.18));
    r.iris_frac = static_cast<float>(id.uniform(0.45, 0.58));

    r.brow_dy = r.eye_rl * static_cast<float>(id.uniform(1.35, 1.7));
    r.brow_len = r.eye_rl * static_cast<float>(id.uniform(1.7, 2.1));
    r.brow_th = r.s * static_cast<float>(id.uniform(1.1, 1.6));
    r.brow_tilt = r.s * static_cast<float>(id.uniform(-0.8, 0.8));

    r.nose_len = r.face_ry * static_cast<float>(id.uniform(0.34, 0.42));
    r.nose_w = r.s * static_cast<float>(id.uniform(2.2, 3.2));

    r.mouth_y = r.cy + r.face_ry * static_cast<float>(id.uniform(0.42, 0.50));
    r.mouth_hw = r.face_rx * static_cast<float>(id.uniform(0.36, 0.44));
    r.lip_h = r.s * static_cast<float>(id.uniform(1.6, 2.6));
    r.lip_th = r.s * static_cast<float>(id.uniform(1.0, 1.5));

    r.cheek_r = r.face_rx * static_cast<float>(id.uniform(0.16, 0.2));
    r.dimple_gap = r.s * static_cast<float>(id.uniform(2.0, 3.5));

    Rng motion(mix_seed(seed, 0xB0B));
    r.bob_ax = r.s * static_cast<float>(motion.uniform(0.4, 1.2));
    r.bob_ay = r.s * static_cast<float>(motion.uniform(0.4, 1.2));
    r.bob_px = static_cast<float>(motion.uniform(0.0, 6.28));
    r.bob_py = static_cast<float>(motion.uniform(0.0, 6.28));
    r.blink_center = static_cast<float>(motion.uniform(1.0, std::max(1.5, geom.t_f - 2.0)));
    r.blink_halfwidth = static_cast<float>(motion.uniform(1.0, 1.8));
    r.wiggle_amp = r.s * static_cast<float>(motion.uniform(0.2, 0.7));
    r.wiggle_phase = static_cast<float>(motion.uniform(0.0, 6.28));
    return r;
}

void apply_edit(Rig& r, const EditDescriptor& edit, float tint_amp) {
    if (edit.magnitude < 0.0f || edit.magnitude > 1.0f)
        throw ConfigError("edit magnitude must lie in [0,1], got " + std::to_string(edit.magnitude));
    const float m = edit.magnitude;
    if (edit.name == "brow_raise") {
        r.brow_raise = m * 4.0f * r.s;
        r.edited = Feature::brows;
    } else if (edit.name == "eye_size") {
        r.eye_rl *= 1.0f + 0.45f * m;
        r.edited = Feature::left_eye;
    } else if (edit.name == "mouth_corner") {
        r.corner_dy_r = -m * 3.5f * r.s;
        r.edited = Feature::mouth;
    } else {
        throw ConfigError("unknown edit name '" + edit.name + "'");
    }
    const float a = tint_amp * m;
    r.tint = {a, -0.6f * a, -0.3f * a};
}

Pose pose_at(const Rig& r, int t, int t_f) {
    Pose p;
    const float phase = 2.0f * static_cast<float>(M_PI) * static_cast<float>(t) / static_cast<float>(t_f);
    p.dx = r.bob_ax * std::sin(phase + r.bob_px);
    p.dy = r.bob_ay * std::sin(2.0f * phase + r.bob_py);
    const float blink = 1.0f - std::abs(static_cast<float>(t) - r.blink_center) / r.blink_halfwidth;
    p.openness = 1.0f - 0.85f * std::max(0.0f, blink);
    p.wiggle = r.wiggle_amp * std::sin(phase + r.wiggle_phase);
    return p;
}

FrameLandmarks rig_landmarks(const Rig& r, const Pose& p) {
    FrameLandmarks lm{};
    const float cx = r.cx + p.dx;
    const float eye_y = r.eye_y + p.dy;
    const float brow_y = eye_y - r.brow_dy - r.brow_raise;
    const float exl = cx - r.eye_dx, exr = cx + r.eye_dx;

    landmark(lm, Lm::brow_l_inner) = {exl + r.brow_len * 0.5f, brow_y + r.brow_tilt};
    landmark(lm, Lm::brow_l_outer) = {exl - r.brow_len * 0.5f, brow_y - r.brow_tilt};
    landmark(lm, Lm::brow_r_inner) = {exr - r.brow_len * 0.5f, brow_y + r.brow_tilt};
    landmark(lm, Lm::brow_r_outer) = {exr + r.brow_len * 0.5f, brow_y - r.brow_tilt};

    landmark(lm, Lm::eye_l_center) = {exl, eye_y};
    landmark(lm, Lm::eye_l_inner) = {exl + r.eye_rl, eye_y};
    landmark(lm, Lm::eye_l_outer) = {exl - r.eye_rl, eye_y};
    landmark(lm, Lm::eye_r_center) = {exr, eye_y};
    landmark(lm, Lm::eye_r_inner) = {exr - r.eye_rr, eye_y};
    landmark(lm, Lm::eye_r_outer) = {exr + r.eye_rr, eye_y};

    landmark(lm, Lm::nose_bridge) = {cx, eye_y + r.eye_rl * 0.6f};
    landmark(lm, Lm::nose_tip) = {cx, eye_y + r.nose_len};

    const float mouth_y = r.mouth_y + p.dy;
    landmark(lm, Lm::mouth_l) = {cx - r.mouth_hw, mouth_y + r.corner_dy_l};
    landmark(lm, Lm::mouth_r) = {cx + r.mouth_hw, mouth_y + r.corner_dy_r};
    landmark(lm, Lm::mouth_top) = {cx, mouth_y - r.lip_h + p.wiggle};
    landmark(lm, Lm::mouth_bottom) = {cx, mouth_y + r.lip_h};

    const float cheek_y = (eye_y + mouth_y) * 0.5f;
    landmark(lm, Lm::cheek_l) = {cx - r.face_rx * 0.55f, cheek_y};
    landmark(lm, Lm::cheek_r) = {cx + r.face_rx * 0.55f, cheek_y};
    landmark(lm, Lm::dimple_l) = {cx - r.mouth_hw - r.dimple_gap, mouth_y};
    landmark(lm, Lm::dimple_r) = {cx + r.mouth_hw + r.dimple_gap, mouth_y};
    return lm;
}

class Painter {
public:
    Painter(FrameStack& stack, int t, const Rgb* tint) : s_(stack), t_(t), tint_(tint) {}

    void set_tinting(bool on) { tinting_ = on && tint_ != nullptr; }

    void blend(int x, int y, const Rgb& c, float a) {
        if (a <= 0.0f) return;
        a = std::min(a, 1.0f);
        float& r = s_.at(t_, 0, y, x);
        float& g = s_.at(t_, 1, y, x);
        float& b = s_.at(t_, 2, y, x);
        r += a * (c.r - r);
        g += a * (c.g - g);
        b += a * (c.b - b);
        if (tinting_) {
            r = std::clamp(r + a * tint_->r, 0.0f, 1.0f);
            g = std::clamp(g + a * tint_->g, 0.0f, 1.0f);
            b = std::clamp(b + a * tint_->b, 0.0f, 1.0f);
        }
    }

    // Antialiased coverage from a signed distance (inside < 0).
    static float cov(float d) { return std::clamp(0.5f - d / 1.4f, 0.0f, 1.0f); }

    void ellipse(float cx, float cy, float rx, float ry, const Rgb& c, float alpha = 1.0f,
                 const Rig* textured = nullptr) {
        const int x0 = std::max(0, static_cast<int>(std::floor(cx - rx - 2)));
        const int x1 = std::min(s_.w - 1, static_cast<int>(std::ceil(cx + rx + 2)));
        const int y0 = std::max(0, static_cast<int>(std::floor(cy - ry - 2)));
        const int y1 = std::min(s_.h - 1, static_cast<int>(std::ceil(cy + ry + 2)));
        const float rmin = std::min(rx, ry);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const float dx = (static_cast<float>(x) + 0.5f - cx) / rx;
                const float dy = (static_cast<float>(y) + 0.5f - cy) / ry;
                const float d = (std::sqrt(dx * dx + dy * dy) - 1.0f) * rmin;
                const float a = cov(d) * alpha;
                if (a <= 0.0f) continue;
                Rgb col = c;
                if (textured) {
                    const float xl = static_cast<float>(x) + 0.5f - cx;
                    const float yl = static_cast<float>(y) + 0.5f - cy;
                    const float tex =
                        textured->tex_amp *
                        (std::cos(textured->tex_a1 * xl + textured->tex_b1 * yl + textured->tex_p1) +
                         0.7f * std::cos(textured->tex_a2 * xl - textured->tex_b2 * yl + textured->tex_p2));
                    col.r = std::clamp(col.r + tex, 0.0f, 1.0f);
                    col.g = std::clamp(col.g + tex, 0.0f, 1.0f);
                    col.b = std::clamp(col.b + tex, 0.0f, 1.0f);
                }
                blend(x, y, col, a);
            }
        }
    }

    void capsule(Point a, Point b, float radius, const Rgb& c, float alpha = 1.0f) {
        const int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - radius - 2)));
        const int x1 = std::min(s_.w - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + radius + 2)));
        const int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - radius - 2)));
        const int y1 = std::min(s_.h - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + radius + 2)));
        const float abx = b.x - a.x, aby = b.y - a.y;
        const float len2 = std::max(1e-6f, abx * abx + aby * aby);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const float px = static_cast<float>(x) + 0.5f - a.x;
                const float py = static_cast<float>(y) + 0.5f - a.y;
                const float h = std::clamp((px * abx + py * aby) / len2, 0.0f, 1.0f);
                const float dx = px - h * abx, dy = py - h * aby;
                const float d = std::sqrt(dx * dx + dy * dy) - radius;
                blend(x, y, c, cov(d) * alpha);
            }
        }
    }

    // Quadratic curve through three points, stroked as a capsule chain.
    void curve3(Point p0, Point p1, Point p2, float radius, const Rgb& c) {
        const Point ctrl{2.0f * p1.x - 0.5f * (p0.x + p2.x), 2.0f * p1.y - 0.5f * (p0.y + p2.y)};
        constexpr int kSegs = 12;
        Point prev = p0;
        for (int i = 1; i <= kSegs; ++i) {
            const float t = static_cast<float>(i) / kSegs;
            const float u = 1.0f - t;
            const Point cur{u * u * p0.x + 2.0f * u * t * ctrl.x + t * t * p2.x,
                            u * u * p0.y + 2.0f * u * t * ctrl.y + t * t * p2.y};
            capsule(prev, cur, radius, c);
            prev = cur;
        }
    }

private:
    FrameStack& s_;
    int t_;
    const Rgb* tint_;
    bool tinting_ = false;
};

void render_frame(FrameStack& stack, int t, const Rig& r, const Pose& p, const FrameLandmarks& lm) {
    // background gradient
    for (int y = 0; y < stack.h; ++y) {
        const float g = static_cast<float>(y) / static_cast<float>(stack.h - 1);
        const Rgb c{r.bg_top.r + g * (r.bg_bottom.r - r.bg_top.r),
                    r.bg_top.g + g * (r.bg_bottom.g - r.bg_top.g),
                    r.bg_top.b + g * (r.bg_bottom.b - r.bg_top.b)};
        for (int x = 0; x < stack.w; ++x) {
            stack.at(t, 0, y, x) = c.r;
            stack.at(t, 1, y, x) = c.g;
            stack.at(t, 2, y, x) = c.b;
        }
    }

    Painter paint(stack, t, &r.tint);
    const float cx = r.cx + p.dx, cy = r.cy + p.dy;

    paint.ellipse(cx, cy, r.face_rx, r.face_ry, r.skin, 1.0f, &r);

    // cheeks: soft blush discs
    const Rgb blush{std::min(1.0f, r.skin.r + 0.08f), r.skin.g * 0.92f, r.skin.b * 0.92f};
    paint.ellipse(landmark(lm, Lm::cheek_l).x, landmark(lm, Lm::cheek_l).y, r.cheek_r, r.cheek_r * 0.8f,
                  blush, 0.35f);
    paint.ellipse(landmark(lm, Lm::cheek_r).x, landmark(lm, Lm::cheek_r).y, r.cheek_r, r.cheek_r * 0.8f,
                  blush, 0.35f);

    // nose: bridge stroke plus nostril dots
    const Rgb nose_col{r.skin.r * 0.82f, r.skin.g * 0.82f, r.skin.b * 0.82f};
    paint.capsule(landmark(lm, Lm::nose_bridge), landmark(lm, Lm::nose_tip), r.s * 1.0f, nose_col, 0.9f);
    const Point tip = landmark(lm, Lm::nose_tip);
    paint.ellipse(tip.x - r.nose_w, tip.y + r.s * 0.5f, r.s * 0.9f, r.s * 0.7f, nose_col);
    paint.ellipse(tip.x + r.nose_w, tip.y + r.s * 0.5f, r.s * 0.9f, r.s * 0.7f, nose_col);

    // brows
    paint.set_tinting(r.edited == Feature::brows);
    paint.capsule(landmark(lm, Lm::brow_l_inner), landmark(lm, Lm::brow_l_outer), r.brow_th, r.brow_col);
    paint.capsule(landmark(lm, Lm::brow_r_inner), landmark(lm, Lm::brow_r_outer), r.brow_th, r.brow_col);
    paint.set_tinting(false);

    // eyes: sclera, iris, pupil; openness squashes the vertical radius
    const Rgb sclera{0.93f, 0.93f, 0.90f};
    const Rgb pupil{0.06f, 0.05f, 0.05f};
    const float open = std::max(0.12f, p.openness);
    auto draw_eye = [&](Lm center, float er, bool tinted) {
        paint.set_tinting(tinted);
        const Point e = landmark(lm, center);
        paint.ellipse(e.x, e.y, er, er * 0.62f * open, sclera);
        paint.ellipse(e.x, e.y, er * r.iris_frac, er * std::min(0.62f * open, r.iris_frac * 0.9f),
                      r.iris_col);
        paint.ellipse(e.x, e.y, er * r.iris_frac * 0.45f,
                      std::min(er * 0.55f * open, er * r.iris_frac * 0.45f), pupil);
        paint.set_tinting(false);
    };
    draw_eye(Lm::eye_l_center, r.eye_rl, r.edited == Feature::left_eye);
    draw_eye(Lm::eye_r_center, r.eye_rr, false);

    // mouth: upper and lower lip curves between the corners
    paint.set_tinting(r.edited == Feature::mouth);
    paint.curve3(landmark(lm, Lm::mouth_l), landmark(lm, Lm::mouth_top), landmark(lm, Lm::mouth_r),
                 r.lip_th, r.lip_col);
    paint.curve3(landmark(lm, Lm::mouth_l), landmark(lm, Lm::mouth_bottom), landmark(lm, Lm::mouth_r),
                 r.lip_th, r.lip_col);
    paint.set_tinting(false);

    // dimples
    const Rgb dimple_col{r.skin.r * 0.75f, r.skin.g * 0.75f, r.skin.b * 0.75f};
    paint.ellipse(landmark(lm, Lm::dimple_l).x, landmark(lm, Lm::dimple_l).y, r.s * 0.9f, r.s * 0.9f,
                  dimple_col, 0.6f);
    paint.ellipse(landmark(lm, Lm::dimple_r).x, landmark(lm, Lm::dimple_r).y, r.s * 0.9f, r.s * 0.9f,
                  dimple_col, 0.6f);
}

FrameStack render_clip(const Rig& rig, const ClipGeometry& geom) {
    FrameStack stack = FrameStack::zero(geom.t_f, geom.h, geom.w);
    for (int t = 0; t < geom.t_f; ++t) {
        const Pose p = pose_at(rig, t, geom.t_f);
        FrameLandmarks lm = rig_landmarks(rig, p);
        for (Point& pt : lm) { // landmarks stay inside the frame
            pt.x = std::clamp(pt.x, 0.0f, static_cast<float>(geom.w - 1));
            pt.y = std::clamp(pt.y, 0.0f, static_cast<float>(geom.h - 1));
        }
        render_frame(stack, t, rig, p, lm);
        stack.landmarks[static_cast<std::size_t>(t)] = lm;
    }
    return stack;
}

IntRect diff_bbox(const FrameStack& a, const FrameStack& b) {
    IntRect r{a.w, a.h, 0, 0};
    bool any = false;
    for (int t = 0; t < a.t_f; ++t)
        for (int y = 0; y < a.h; ++y)
            for (int x = 0; x < a.w; ++x)
                for (int c = 0; c < 3; ++c)
                    if (a.at(t, c, y, x) != b.at(t, c, y, x)) {
                        any = true;
                        r.x0 = std::min(r.x0, x);
                        r.y0 = std::min(r.y0, y);
                        r.x1 = std::max(r.x1, x + 1);
                        r.y1 = std::max(r.y1, y + 1);
                        break;
                    }
    if (!any) return IntRect{};
    return r;
}

} // namespace

LabeledClip generate_synthetic_clip(std::uint64_t seed, const ClipGeometry& geom,
                                    const std::optional<EditDescriptor>& edit) {
    Rig rig = make_rig(seed, geom);
    LabeledClip clip;
    clip.seed = seed;
    if (!edit) {
        clip.stack = render_clip(rig, geom);
        clip.label = 0;
        return clip;
    }
    Rig edited = rig;
    apply_edit(edited, *edit, geom.edit_tint);
    clip.stack = render_clip(edited, geom);
    clip.label = 1;
    clip.edit = *edit;
    const FrameStack twin = render_clip(rig, geom);
    clip.edit_region = diff_bbox(clip.stack, twin);
    const int budget = static_cast<int>(geom.max_region_frac * static_cast<float>(geom.h * geom.w));
    if (clip.edit_region.area() > budget)
        throw DataError("edit region " + std::to_string(clip.edit_region.area()) +
                        " px exceeds budget " + std::to_string(budget) + " px");
    return clip;
}

std::vector<LabeledClip> generate_corpus(const CorpusSpec& spec) {
    if (spec.n_clips <= 0) throw ConfigError("corpus: n_clips must be positive");
    if (spec.fake_fraction < 0.0f || spec.fake_fraction > 1.0f)
        throw ConfigError("corpus: fake_fraction must lie in [0,1]");
    std::vector<LabeledClip> out;
    out.reserve(static_cast<std::size_t>(spec.n_clips));
    int fake_ordinal = 0;
    for (int i = 0; i < spec.n_clips; ++i) {
        const std::uint64_t clip_seed = mix_seed(spec.seed, static_cast<std::uint64_t>(i));
        const bool fake = static_cast<int>(std::floor((i + 1) * spec.fake_fraction)) >
                          static_cast<int>(std::floor(i * spec.fake_fraction));
        if (!fake) {
            out.push_back(generate_synthetic_clip(clip_seed, spec.geom, std::nullopt));
        } else {
            const auto& names = known_edit_names();
            EditDescriptor edit;
            edit.name = names[static_cast<std::size_t>(fake_ordinal) % names.size()];
            Rng mag(mix_seed(clip_seed, 0xED17));
            edit.magnitude = 0.4f + 0.6f * static_cast<float>(mag.uniform01());
            out.push_back(generate_synthetic_clip(clip_seed, spec.geom, edit));
            ++fake_ordinal;
        }
    }
    return out;
}

} // namespace aufd
