#include "bevdrive/serial.hpp"

#include <cstdio>

namespace bevdrive {

void BinWriter::write_file(const std::string& path) const {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  const size_t n = std::fwrite(buf_.data(), 1, buf_.size(), f);
  std::fclose(f);
  if (n != buf_.size()) throw std::runtime_error("short write: " + path);
}

BinReader BinReader::from_file(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw std::runtime_error("cannot open: " + path);
  std::fseek(f, 0, SEEK_END);
  const long size = std::ftell(f);
  std::fseek(f, 0, SEEK_SET);
  std::vector<uint8_t> data(static_cast<size_t>(size));
  const size_t n = std::fread(data.data(), 1, data.size(), f);
  std::fclose(f);
  if (n != data.size()) throw std::runtime_error("short read: " + path);
  return BinReader(std::move(data));
}

}  // namespace bevdrive
