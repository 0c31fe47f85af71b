#include "ditchkit/nn/checkpoint.hpp"

#include "ditchkit/binary_io.hpp"

namespace ditchkit::nn {

void save_checkpoint(const std::filesystem::path& path, const ParamStore<float>& store, const std::string& metadata) {
    io::ByteWriter w;
    w.bytes("DKPT");
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(metadata.size()));
    w.bytes(metadata);
    w.u32(static_cast<std::uint32_t>(store.size()));
    for (const auto& [name, p] : store) {
        w.u32(static_cast<std::uint32_t>(name.size()));
        w.bytes(name);
        w.u32(static_cast<std::uint32_t>(p.value.rank()));
        for (std::size_t d : p.value.shape) w.u32(static_cast<std::uint32_t>(d));
        w.f32s(p.value.data);
    }
    w.u32(io::crc32(w.buffer()));
    io::write_file(path, w.buffer());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    io::ByteReader r(io::read_file(path));
    io::expect_header(r, "DKPT", kCheckpointVersion);
    Checkpoint ck;
    ck.metadata = r.bytes(r.u32());
    const std::uint32_t n = r.u32();
    for (std::uint32_t k = 0; k < n; ++k) {
        std::string name = r.bytes(r.u32());
        Shape shape(r.u32());
        for (auto& d : shape) d = r.u32();
        const std::size_t count = shape_size(shape);
        if (count * sizeof(float) > r.remaining())
            throw FormatError(FormatErrc::truncated, "parameter " + name + " is truncated");
        Tensor<float> t(shape);
        r.f32s(t.data);
        ck.params.emplace(std::move(name), std::move(t));
    }
    const std::uint32_t expect = io::crc32(r.consumed());
    if (r.u32() != expect) throw FormatError(FormatErrc::checksum_mismatch, "checkpoint checksum mismatch: " + path.string());
    return ck;
}

void restore(ParamStore<float>& store, const Checkpoint& ckpt) {
    if (ckpt.params.size() != store.size())
        throw ConfigError("checkpoint holds " + std::to_string(ckpt.params.size()) + " tensors, model has " +
                          std::to_string(store.size()));
    for (auto& [name, p] : store) {
        auto it = ckpt.params.find(name);
        if (it == ckpt.params.end()) throw ConfigError("checkpoint lacks parameter " + name);
        if (it->second.shape != p.value.shape)
            throw ShapeError("checkpoint shape " + shape_str(it->second.shape) + " for " + name + ", model has " +
                             shape_str(p.value.shape));
        p.value.data = it->second.data;
    }
}

}  // namespace ditchkit::nn
