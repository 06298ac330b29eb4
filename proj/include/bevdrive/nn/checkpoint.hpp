#pragma once

#include <string>
#include <vector>

#include "bevdrive/nn/layers.hpp"
#include "bevdrive/nn/tensor.hpp"

namespace bevdrive::nn {

// Versioned checkpoint, magic "BVDC": a layer-spec table followed by raw
// little-endian float blobs per named parameter. Round-trips bit-exactly.
void save_checkpoint(const std::string& path, const std::vector<LayerSpec>& specs,
                     const std::vector<ParamRef<float>>& params);

struct Checkpoint {
  std::vector<LayerSpec> specs;
  std::vector<std::string> names;
  std::vector<std::vector<int>> shapes;
  std::vector<std::vector<float>> blobs;
};

Checkpoint load_checkpoint(const std::string& path);

// Copies blobs into the given parameter set; throws on any name/shape
// mismatch so silently mismatched architectures cannot load.
void restore_params(const Checkpoint& ckpt, const std::vector<ParamRef<float>>& params);

}  // namespace bevdrive::nn
