#pragma once

#include <filesystem>
#include <vector>

#include "aufd/frames.hpp"

namespace aufd {

// .clip container: "AUFD" magic, u16 version, u32 header length, text header
// (key=value lines), float32 LE frame data, float32 LE landmark pairs.
inline constexpr std::uint16_t kClipVersion = 1;

void write_clip(const LabeledClip& clip, const std::filesystem::path& path);
LabeledClip read_clip(const std::filesystem::path& path);

// Loads every *.clip in a directory in filename order.
std::vector<LabeledClip> load_clip_dir(const std::filesystem::path& dir);

} // namespace aufd
