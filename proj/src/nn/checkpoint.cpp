#include "bevdrive/nn/checkpoint.hpp"

#include "bevdrive/serial.hpp"

namespace bevdrive::nn {

namespace {
constexpr char kMagic[4] = {'B', 'V', 'D', 'C'};
constexpr uint16_t kVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path, const std::vector<LayerSpec>& specs,
                     const std::vector<ParamRef<float>>& params) {
  BinWriter w;
  w.magic(kMagic);
  w.u16(kVersion);
  w.u32(static_cast<uint32_t>(specs.size()));
  for (const LayerSpec& s : specs) {
    w.u8(static_cast<uint8_t>(s.kind));
    w.i32(s.in_ch);
    w.i32(s.out_ch);
    w.i32(s.kernel);
    w.i32(s.stride);
    w.i32(s.pad);
    w.i32(s.dim);
    w.i32(s.heads);
    w.i32(s.pool);
  }
  w.u32(static_cast<uint32_t>(params.size()));
  for (const auto& p : params) {
    w.str(p.name);
    w.u32(static_cast<uint32_t>(p.value->shape.size()));
    for (int d : p.value->shape) w.i32(d);
    w.bytes(p.value->data.data(), p.value->data.size() * sizeof(float));
  }
  w.write_file(path);
}

Checkpoint load_checkpoint(const std::string& path) {
  BinReader r = BinReader::from_file(path);
  r.expect_magic(kMagic);
  if (r.u16() != kVersion) throw std::runtime_error("unsupported checkpoint version");
  Checkpoint out;
  const uint32_t nspecs = r.u32();
  out.specs.resize(nspecs);
  for (LayerSpec& s : out.specs) {
    s.kind = static_cast<LayerKind>(r.u8());
    s.in_ch = r.i32();
    s.out_ch = r.i32();
    s.kernel = r.i32();
    s.stride = r.i32();
    s.pad = r.i32();
    s.dim = r.i32();
    s.heads = r.i32();
    s.pool = r.i32();
  }
  const uint32_t nparams = r.u32();
  out.names.resize(nparams);
  out.shapes.resize(nparams);
  out.blobs.resize(nparams);
  for (uint32_t i = 0; i < nparams; ++i) {
    out.names[i] = r.str();
    const uint32_t nd = r.u32();
    out.shapes[i].resize(nd);
    size_t count = 1;
    for (auto& d : out.shapes[i]) {
      d = r.i32();
      count *= static_cast<size_t>(d);
    }
    out.blobs[i].resize(count);
    r.bytes(out.blobs[i].data(), count * sizeof(float));
  }
  return out;
}

void restore_params(const Checkpoint& ckpt, const std::vector<ParamRef<float>>& params) {
  if (ckpt.names.size() != params.size()) {
    throw std::runtime_error("checkpoint: parameter count mismatch");
  }
  for (size_t i = 0; i < params.size(); ++i) {
    if (ckpt.names[i] != params[i].name) {
      throw std::runtime_error("checkpoint: parameter name mismatch at " + params[i].name);
    }
    if (ckpt.shapes[i] != params[i].value->shape) {
      throw std::runtime_error("checkpoint: shape mismatch at " + params[i].name);
    }
    params[i].value->data = ckpt.blobs[i];
  }
}

}  // namespace bevdrive::nn
