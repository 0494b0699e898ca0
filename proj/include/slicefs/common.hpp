#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace slicefs {

using Bytes = std::string;
using BytesView = std::string_view;

// --- big-endian integer codec -------------------------------------------
// All on-disk and on-wire integers are big-endian.

inline void put_u8(Bytes& out, uint8_t v) { out.push_back(static_cast<char>(v)); }

inline void put_u16(Bytes& out, uint16_t v) {
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v));
}

inline void put_u32(Bytes& out, uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<char>(v >> s));
}

inline void put_u64(Bytes& out, uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<char>(v >> s));
}

inline void put_bytes16(Bytes& out, BytesView b) {
  put_u16(out, static_cast<uint16_t>(b.size()));
  out.append(b);
}

inline void put_bytes32(Bytes& out, BytesView b) {
  put_u32(out, static_cast<uint32_t>(b.size()));
  out.append(b);
}

// Cursor-style reader over an immutable byte view. get_* return false on
// underrun instead of throwing; decoders surface that as a decode error.
class ByteReader {
 public:
  explicit ByteReader(BytesView data) : data_(data) {}

  bool get_u8(uint8_t& v) {
    if (pos_ + 1 > data_.size()) return false;
    v = static_cast<uint8_t>(data_[pos_++]);
    return true;
  }
  bool get_u16(uint16_t& v) {
    if (pos_ + 2 > data_.size()) return false;
    v = 0;
    for (int i = 0; i < 2; ++i) v = static_cast<uint16_t>((v << 8) | static_cast<uint8_t>(data_[pos_++]));
    return true;
  }
  bool get_u32(uint32_t& v) {
    if (pos_ + 4 > data_.size()) return false;
    v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | static_cast<uint8_t>(data_[pos_++]);
    return true;
  }
  bool get_u64(uint64_t& v) {
    if (pos_ + 8 > data_.size()) return false;
    v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | static_cast<uint8_t>(data_[pos_++]);
    return true;
  }
  bool get_bytes(size_t n, BytesView& out) {
    if (pos_ + n > data_.size()) return false;
    out = data_.substr(pos_, n);
    pos_ += n;
    return true;
  }
  bool get_bytes16(BytesView& out) {
    uint16_t n;
    return get_u16(n) && get_bytes(n, out);
  }
  bool get_bytes32(BytesView& out) {
    uint32_t n;
    return get_u32(n) && get_bytes(n, out);
  }

  size_t remaining() const { return data_.size() - pos_; }
  BytesView rest() const { return data_.substr(pos_); }
  bool done() const { return pos_ == data_.size(); }

 private:
  BytesView data_;
  size_t pos_ = 0;
};

// --- hashing --------------------------------------------------------------
// FNV-1a 64 with a splitmix-style finalizer. Stable across platforms; the
// deployment-wide hash name recorded in config is "fnv64m".

inline uint64_t fnv1a64(BytesView data, uint64_t seed = 0xcbf29ce484222325ULL) {
  uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t mix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

inline uint64_t hash_u64s(BytesView salt, uint64_t a, uint64_t b) {
  Bytes buf;
  buf.reserve(salt.size() + 16);
  buf.append(salt);
  put_u64(buf, a);
  put_u64(buf, b);
  return mix64(fnv1a64(buf));
}

inline uint64_t now_millis() {
  return static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                   std::chrono::system_clock::now().time_since_epoch())
                                   .count());
}

// CRC32 (IEEE, reflected). Used to checksum write-ahead-log records.
inline uint32_t crc32(BytesView data, uint32_t crc = 0) {
  static const auto table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  crc = ~crc;
  for (unsigned char b : data) crc = table[(crc ^ b) & 0xff] ^ (crc >> 8);
  return ~crc;
}

}  // namespace slicefs
