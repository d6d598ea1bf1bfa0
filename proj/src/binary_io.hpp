#pragma once

// Little-endian POD stream helpers shared by the binary containers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <string_view>
#include <vector>

namespace emstress::detail {

static_assert(std::endian::native == std::endian::little,
              "binary containers assume a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void put_span(std::ostream& os, std::span<const T> v) {
  static_assert(std::is_trivially_copyable_v<T>);
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw std::runtime_error("unexpected end of binary stream");
  }
  return v;
}

template <typename T>
void get_into(std::istream& is, std::span<T> out) {
  if (!is.read(reinterpret_cast<char*>(out.data()), static_cast<std::streamsize>(out.size_bytes()))) {
    throw std::runtime_error("unexpected end of binary stream");
  }
}

// Cursor over an in-memory buffer.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    T v{};
    copy_out(&v, sizeof(T));
    return v;
  }

  template <typename T>
  void get_into(std::span<T> out) {
    copy_out(out.data(), out.size_bytes());
  }

  std::size_t offset() const { return pos_; }
  void seek(std::size_t pos) {
    if (pos > bytes_.size()) throw std::runtime_error("seek past end of buffer");
    pos_ = pos;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void copy_out(void* dst, std::size_t n) {
    if (n > remaining()) throw std::runtime_error("unexpected end of buffer");
    std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

class ByteWriter {
 public:
  template <typename T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    append(&v, sizeof(T));
  }
  template <typename T>
  void put_span(std::span<const T> v) {
    append(v.data(), v.size_bytes());
  }
  void put_bytes(std::string_view s) { append(s.data(), s.size()); }

  std::vector<std::uint8_t>& bytes() { return buf_; }
  std::size_t size() const { return buf_.size(); }

 private:
  void append(const void* src, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(src);
    buf_.insert(buf_.end(), p, p + n);
  }
  std::vector<std::uint8_t> buf_;
};

}  // namespace emstress::detail
