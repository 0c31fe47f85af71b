#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "ditchkit/nn/tensor.hpp"

namespace ditchkit::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    std::string metadata;  ///< JSON architecture description
    std::map<std::string, Tensor<float>> params;
};

/// "DKPT", version, metadata, named f32 blobs with shapes, CRC32 of all preceding bytes.
void save_checkpoint(const std::filesystem::path& path, const ParamStore<float>& store, const std::string& metadata);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Copies checkpoint values into a store with the same names and shapes.
void restore(ParamStore<float>& store, const Checkpoint& ckpt);

}  // namespace ditchkit::nn
