#include "aufd/clip_io.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "aufd/binio.hpp"

namespace aufd {

namespace {

std::string fmt_f32(float v) {
    std::ostringstream os;
    os.precision(9);
    os << v;
    return os.str();
}

std::map<std::string, std::string> parse_header(const std::string& text, const std::string& path) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError(path + ": malformed header line '" + line + "'");
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key,
                        const std::string& path) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(path + ": header missing key '" + key + "'");
    return it->second;
}

} // namespace

void write_clip(const LabeledClip& clip, const std::filesystem::path& path) {
    const FrameStack& s = clip.stack;
    std::ostringstream hdr;
    hdr << "kind=clip\n";
    hdr << "t_f=" << s.t_f << "\nheight=" << s.h << "\nwidth=" << s.w << "\n";
    hdr << "label=" << (clip.label ? "fake" : "real") << "\n";
    hdr << "seed=" << clip.seed << "\n";
    hdr << "edit=" << (clip.edit ? clip.edit->name : std::string("none")) << "\n";
    if (clip.edit) hdr << "edit_mag=" << fmt_f32(clip.edit->magnitude) << "\n";
    if (!clip.edit_region.empty())
        hdr << "edit_region=" << clip.edit_region.x0 << "," << clip.edit_region.y0 << ","
            << clip.edit_region.x1 << "," << clip.edit_region.y1 << "\n";
    hdr << "landmark_schema=";
    for (int i = 0; i < kNumLandmarks; ++i) hdr << (i ? "," : "") << kLandmarkNames[static_cast<std::size_t>(i)];
    hdr << "\n";
    const std::string header = hdr.str();

    BinWriter w(path);
    w.bytes(kMagic, 4);
    w.u16(kClipVersion);
    w.u32(static_cast<std::uint32_t>(header.size()));
    w.str(header);
    w.f32s(s.pixels.data(), s.pixels.size());
    for (const FrameLandmarks& lms : s.landmarks)
        for (const Point& p : lms) {
            w.f32s(&p.x, 1);
            w.f32s(&p.y, 1);
        }
    w.finish(path);
}

LabeledClip read_clip(const std::filesystem::path& path) {
    BinReader r(path);
    r.expect_magic();
    const std::uint16_t version = r.u16();
    if (version != kClipVersion)
        throw FormatError(r.path() + ": unsupported clip version " + std::to_string(version));
    const std::uint32_t hlen = r.u32();
    const auto kv = parse_header(r.str(hlen), r.path());
    if (need(kv, "kind", r.path()) != "clip") throw FormatError(r.path() + ": not a clip file");

    LabeledClip clip;
    const int t_f = std::stoi(need(kv, "t_f", r.path()));
    const int h = std::stoi(need(kv, "height", r.path()));
    const int w = std::stoi(need(kv, "width", r.path()));
    if (t_f <= 0 || h <= 0 || w <= 0) throw FormatError(r.path() + ": non-positive dimensions");
    clip.label = need(kv, "label", r.path()) == "fake" ? 1 : 0;
    clip.seed = std::stoull(need(kv, "seed", r.path()));
    const std::string edit = need(kv, "edit", r.path());
    if (edit != "none") {
        EditDescriptor e;
        e.name = edit;
        e.magnitude = std::stof(need(kv, "edit_mag", r.path()));
        clip.edit = e;
    }
    if (const auto it = kv.find("edit_region"); it != kv.end()) {
        IntRect rect;
        if (std::sscanf(it->second.c_str(), "%d,%d,%d,%d", &rect.x0, &rect.y0, &rect.x1, &rect.y1) != 4)
            throw FormatError(r.path() + ": malformed edit_region '" + it->second + "'");
        clip.edit_region = rect;
    }
    const std::string schema = need(kv, "landmark_schema", r.path());
    {
        std::ostringstream expect;
        for (int i = 0; i < kNumLandmarks; ++i)
            expect << (i ? "," : "") << kLandmarkNames[static_cast<std::size_t>(i)];
        if (schema != expect.str())
            throw FormatError(r.path() + ": landmark schema mismatch");
    }

    clip.stack = FrameStack::zero(t_f, h, w);
    r.f32s(clip.stack.pixels.data(), clip.stack.pixels.size());
    for (FrameLandmarks& lms : clip.stack.landmarks)
        for (Point& p : lms) {
            r.f32s(&p.x, 1);
            r.f32s(&p.y, 1);
        }
    if (r.remaining() != 0)
        throw FormatError(r.path() + ": " + std::to_string(r.remaining()) +
                          " trailing bytes at offset " + std::to_string(r.offset()));
    return clip;
}

std::vector<LabeledClip> load_clip_dir(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw IoError(dir.string() + " is not a directory");
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".clip") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("no .clip files in " + dir.string());
    std::vector<LabeledClip> clips;
    clips.reserve(files.size());
    for (const auto& f : files) clips.push_back(read_clip(f));
    return clips;
}

} // namespace aufd
