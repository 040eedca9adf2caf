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

#include "textgraph/error.hpp"

namespace textgraph {

static_assert(std::endian::native == std::endian::little ||
                  std::endian::native == std::endian::big,
              "mixed-endian platforms are not supported");

namespace detail {

template <typename T>
T to_little(T v) noexcept {
  if constexpr (std::endian::native == std::endian::big) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
      std::swap(b[i], b[sizeof(T) - 1 - i]);
    std::memcpy(&v, b, sizeof(T));
  }
  return v;
}

}  // namespace detail

// Little-endian writer over an in-memory buffer; flushed to disk in one go.
class BinaryWriter {
 public:
  void magic(std::string_view m) { bytes_.insert(bytes_.end(), m.begin(), m.end()); }

  template <typename T>
  void put(T v) {
    v = detail::to_little(v);
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    bytes_.insert(bytes_.end(), p, p + sizeof(T));
  }

  template <typename T>
  void put_array(std::span<const T> values) {
    for (const T& v : values) put(v);
  }

  const std::vector<unsigned char>& bytes() const noexcept { return bytes_; }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorCode::kIo, "cannot open for writing: " + path.string());
    out.write(reinterpret_cast<const char*>(bytes_.data()),
              static_cast<std::streamsize>(bytes_.size()));
    require(out.good(), ErrorCode::kIo, "write failed: " + path.string());
  }

 private:
  std::vector<unsigned char> bytes_;
};

class BinaryReader {
 public:
  BinaryReader(std::vector<unsigned char> bytes, std::string source)
      : bytes_(std::move(bytes)), source_(std::move(source)) {}

  static BinaryReader open(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorCode::kNotFound, "file not found: " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    return BinaryReader(std::move(bytes), path.string());
  }

  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  const std::string& source() const noexcept { return source_; }

  void expect_magic(std::string_view m) {
    need(m.size());
    require(std::memcmp(bytes_.data() + pos_, m.data(), m.size()) == 0,
            ErrorCode::kFormat,
            source_ + ": bad magic, expected \"" + std::string(m) + "\"");
    pos_ += m.size();
  }

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return detail::to_little(v);
  }

  template <typename T>
  std::vector<T> get_array(std::uint64_t n) {
    require(n <= remaining() / sizeof(T), ErrorCode::kTruncated,
            source_ + ": truncated payload, need " + std::to_string(n * sizeof(T)) +
                " bytes, have " + std::to_string(remaining()));
    std::vector<T> out(n);
    for (auto& v : out) v = get<T>();
    return out;
  }

  void need(std::size_t n) const {
    require(remaining() >= n, ErrorCode::kTruncated,
            source_ + ": unexpected end of file");
  }

 private:
  std::vector<unsigned char> bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace textgraph
