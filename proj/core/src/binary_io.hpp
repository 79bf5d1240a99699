#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "onexn/error.hpp"

namespace onexn::detail {

inline std::uint32_t byteswap32(std::uint32_t v) {
  return (v >> 24) | ((v >> 8) & 0xff00u) | ((v << 8) & 0xff0000u) | (v << 24);
}

// Little-endian encode/decode of 32-bit words.
template <typename T>
void append_le32(std::string& out, std::span<const T> values) {
  static_assert(sizeof(T) == 4);
  const std::size_t start = out.size();
  out.resize(start + values.size() * 4);
  char* dst = out.data() + start;
  for (const T& v : values) {
    auto bits = std::bit_cast<std::uint32_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = byteswap32(bits);
    std::memcpy(dst, &bits, 4);
    dst += 4;
  }
}

template <typename T>
std::vector<T> parse_le32(const char* src, std::size_t count) {
  static_assert(sizeof(T) == 4);
  std::vector<T> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, src + 4 * i, 4);
    if constexpr (std::endian::native == std::endian::big) bits = byteswap32(bits);
    out[i] = std::bit_cast<T>(bits);
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) fail(ErrorCode::kIo, "read failed: " + path.string());
  return data;
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) fail(ErrorCode::kIo, "write failed: " + path.string());
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    fail(ErrorCode::kIo, "cannot create directory " + dir.string() +
                             (ec ? ": " + ec.message() : std::string()));
  }
}

inline std::vector<float> read_f32_blob(const std::filesystem::path& path,
                                        std::size_t expected_count) {
  if (!std::filesystem::exists(path)) fail(ErrorCode::kIo, "missing blob " + path.string());
  const std::string bytes = read_file(path);
  if (bytes.size() != expected_count * 4) {
    fail(ErrorCode::kShape, path.filename().string() + ": expected " +
                                std::to_string(expected_count * 4) + " bytes, found " +
                                std::to_string(bytes.size()));
  }
  return parse_le32<float>(bytes.data(), expected_count);
}

inline void write_f32_blob(const std::filesystem::path& path, std::span<const float> values) {
  std::string bytes;
  append_le32(bytes, values);
  write_file(path, bytes);
}

}  // namespace onexn::detail
