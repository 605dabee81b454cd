#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "aufd/errors.hpp"
#include "aufd/tensor.hpp"

namespace aufd {

// .ckpt container: AUFD magic, u16 version, text meta block, then a named
// tensor directory (name, shape, float32 little-endian payload).
inline constexpr std::uint16_t kCkptVersion = 1;

struct TensorBlob {
    std::vector<std::int64_t> shape;
    std::vector<float> data;
};

struct CheckpointFile {
    std::string kind; // pretext_frame | pretext_au | fused
    std::map<std::string, std::string> meta;
    std::vector<std::pair<std::string, TensorBlob>> tensors;

    const TensorBlob* find(const std::string& name) const {
        for (const auto& [n, blob] : tensors)
            if (n == name) return &blob;
        return nullptr;
    }
};

void write_ckpt(const CheckpointFile& ckpt, const std::filesystem::path& path);
CheckpointFile read_ckpt(const std::filesystem::path& path);

template <typename S>
void pack_tensors(const std::vector<std::pair<std::string, Tensor<S>*>>& params, CheckpointFile& out) {
    for (const auto& [name, tensor] : params) {
        TensorBlob blob;
        blob.shape.assign(tensor->shape().begin(), tensor->shape().end());
        blob.data.resize(static_cast<std::size_t>(tensor->size()));
        for (Index i = 0; i < tensor->size(); ++i)
            blob.data[static_cast<std::size_t>(i)] = static_cast<float>(tensor->value()[i]);
        out.tensors.emplace_back(name, std::move(blob));
    }
}

// Fills params from the checkpoint; any missing name or shape mismatch is a
// config error naming the tensor.
template <typename S>
void unpack_tensors(const CheckpointFile& in,
                    const std::vector<std::pair<std::string, Tensor<S>*>>& params) {
    for (const auto& [name, tensor] : params) {
        const TensorBlob* blob = in.find(name);
        if (!blob) throw ConfigError("checkpoint: missing tensor '" + name + "'");
        Shape want(blob->shape.begin(), blob->shape.end());
        if (want != tensor->shape())
            throw ConfigError("checkpoint: tensor '" + name + "' has shape " + shape_str(want) +
                              ", model expects " + shape_str(tensor->shape()));
        for (Index i = 0; i < tensor->size(); ++i)
            tensor->value_mut()[i] = static_cast<S>(blob->data[static_cast<std::size_t>(i)]);
    }
}

} // namespace aufd
