#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meshmotion/errors.hpp"

namespace meshmotion::binary {

// Little-endian readers/writers for the on-disk containers.

template <class T>
T to_little(T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
    std::memcpy(&value, bytes, sizeof(T));
  }
  return value;
}

class Writer {
 public:
  explicit Writer(const std::filesystem::path& path)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot open for writing: " + path.string());
  }

  void magic(std::string_view tag) { out_.write(tag.data(), static_cast<std::streamsize>(tag.size())); }

  template <class T>
  void scalar(T value) {
    value = to_little(value);
    out_.write(reinterpret_cast<const char*>(&value), sizeof(T));
  }

  void string(std::string_view s) {
    scalar<uint32_t>(static_cast<uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

  void floats(std::span<const float> values) {
    if constexpr (std::endian::native == std::endian::little) {
      out_.write(reinterpret_cast<const char*>(values.data()),
                 static_cast<std::streamsize>(values.size_bytes()));
    } else {
      for (float v : values) scalar(v);
    }
  }

  void finish() {
    out_.flush();
    if (!out_) throw IoError("write failed: " + path_.string());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
};

class Reader {
 public:
  explicit Reader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open for reading: " + path.string());
  }

  void expect_magic(std::string_view tag) {
    std::string got(tag.size(), '\0');
    in_.read(got.data(), static_cast<std::streamsize>(got.size()));
    if (!in_ || got != tag)
      throw IoError(path_.string() + ": bad magic, expected " + std::string(tag));
  }

  template <class T>
  T scalar() {
    T value;
    in_.read(reinterpret_cast<char*>(&value), sizeof(T));
    check();
    return to_little(value);
  }

  std::string string(size_t max_len = 1u << 20) {
    auto n = scalar<uint32_t>();
    if (n > max_len) throw IoError(path_.string() + ": string length out of range");
    std::string s(n, '\0');
    in_.read(s.data(), n);
    check();
    return s;
  }

  void floats(std::span<float> values) {
    in_.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size_bytes()));
    check();
    if constexpr (std::endian::native == std::endian::big) {
      for (float& v : values) v = to_little(v);
    }
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

  const std::filesystem::path& path() const { return path_; }

 private:
  void check() {
    if (!in_) throw IoError(path_.string() + ": truncated file");
  }

  std::filesystem::path path_;
  std::ifstream in_;
};

}  // namespace meshmotion::binary
