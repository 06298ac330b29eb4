#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace bevdrive {

// Little-endian binary writer/reader for the versioned file formats
// (town files, checkpoints, datasets). Byte-exact round-trips are part of
// the format contracts, so floats are stored as raw IEEE bits.
class BinWriter {
 public:
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) { raw(&v, 2); }
  void u32(uint32_t v) { raw(&v, 4); }
  void u64(uint64_t v) { raw(&v, 8); }
  void i32(int32_t v) { raw(&v, 4); }
  void i64(int64_t v) { raw(&v, 8); }
  void f32(float v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void bytes(const void* p, size_t n) { raw(p, n); }
  void magic(const char tag[4]) { raw(tag, 4); }

  const std::vector<uint8_t>& data() const { return buf_; }
  void write_file(const std::string& path) const;

 private:
  void raw(const void* p, size_t n) {
    const size_t off = buf_.size();
    buf_.resize(off + n);
    std::memcpy(buf_.data() + off, p, n);
  }
  std::vector<uint8_t> buf_;
};

class BinReader {
 public:
  explicit BinReader(std::vector<uint8_t> data) : buf_(std::move(data)) {}
  static BinReader from_file(const std::string& path);

  uint8_t u8() { return take<uint8_t>(); }
  uint16_t u16() { return take<uint16_t>(); }
  uint32_t u32() { return take<uint32_t>(); }
  uint64_t u64() { return take<uint64_t>(); }
  int32_t i32() { return take<int32_t>(); }
  int64_t i64() { return take<int64_t>(); }
  float f32() { return take<float>(); }
  double f64() { return take<double>(); }
  std::string str() {
    const uint32_t n = u32();
    check(n);
    std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  void bytes(void* out, size_t n) {
    check(n);
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }
  void expect_magic(const char tag[4]) {
    char got[4];
    bytes(got, 4);
    if (std::memcmp(got, tag, 4) != 0) throw std::runtime_error("bad magic bytes");
  }
  bool at_end() const { return pos_ == buf_.size(); }
  size_t remaining() const { return buf_.size() - pos_; }

 private:
  template <typename T>
  T take() {
    T v;
    bytes(&v, sizeof(T));
    return v;
  }
  void check(size_t n) const {
    if (pos_ + n > buf_.size()) throw std::runtime_error("truncated binary stream");
  }
  std::vector<uint8_t> buf_;
  size_t pos_ = 0;
};

// 64-bit FNV-1a; used for determinism checks on serialized state.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const uint8_t*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace bevdrive
