#include "aufd/checkpoint.hpp"

#include <sstream>

#include "aufd/binio.hpp"

namespace aufd {

void write_ckpt(const CheckpointFile& ckpt, const std::filesystem::path& path) {
    std::ostringstream hdr;
    hdr << "kind=" << ckpt.kind << "\n";
    for (const auto& [k, v] : ckpt.meta) hdr << k << "=" << v << "\n";
    const std::string header = hdr.str();

    BinWriter w(path);
    w.bytes(kMagic, 4);
    w.u16(kCkptVersion);
    w.u32(static_cast<std::uint32_t>(header.size()));
    w.str(header);
    w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
    for (const auto& [name, blob] : ckpt.tensors) {
        w.u16(static_cast<std::uint16_t>(name.size()));
        w.str(name);
        w.u16(static_cast<std::uint16_t>(blob.shape.size()));
        std::size_t numel = 1;
        for (std::int64_t d : blob.shape) {
            w.i64(d);
            numel *= static_cast<std::size_t>(d);
        }
        if (numel != blob.data.size())
            throw ContractError("write_ckpt: tensor '" + name + "' payload does not match its shape");
        w.f32s(blob.data.data(), blob.data.size());
    }
    w.finish(path);
}

CheckpointFile read_ckpt(const std::filesystem::path& path) {
    BinReader r(path);
    r.expect_magic();
    const std::uint16_t version = r.u16();
    if (version != kCkptVersion)
        throw FormatError(r.path() + ": unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t hlen = r.u32();
    const std::string header = r.str(hlen);

    CheckpointFile ckpt;
    std::istringstream in(header);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError(r.path() + ": malformed header line '" + line + "'");
        const std::string key = line.substr(0, eq);
        if (key == "kind")
            ckpt.kind = line.substr(eq + 1);
        else
            ckpt.meta[key] = line.substr(eq + 1);
    }
    if (ckpt.kind.empty()) throw FormatError(r.path() + ": header missing kind");

    const std::uint32_t count = r.u32();
    ckpt.tensors.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint16_t name_len = r.u16();
        std::string name = r.str(name_len);
        const std::uint16_t ndim = r.u16();
        TensorBlob blob;
        std::size_t numel = 1;
        for (std::uint16_t d = 0; d < ndim; ++d) {
            const std::int64_t dim = r.i64();
            if (dim <= 0) throw FormatError(r.path() + ": tensor '" + name + "' has non-positive dim");
            blob.shape.push_back(dim);
            numel *= static_cast<std::size_t>(dim);
        }
        blob.data.resize(numel);
        r.f32s(blob.data.data(), numel);
        ckpt.tensors.emplace_back(std::move(name), std::move(blob));
    }
    if (r.remaining() != 0)
        throw FormatError(r.path() + ": " + std::to_string(r.remaining()) + " trailing bytes at offset " +
                          std::to_string(r.offset()));
    return ckpt;
}

} // namespace aufd
