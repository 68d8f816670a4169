#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tabletop/data/types.hpp"

namespace tabletop {

// Binary episode container.
//
// Layout (little-endian):
//   magic   "TBEP" (4 bytes)
//   version u32
//   length  u64 total file size in bytes (lets truncation be detected
//           before the checksum is trusted)
//   payload
//   crc     u32 CRC-32 (IEEE 802.3) over everything before it
//
// Floats are stored as raw IEEE-754 bits so round trips are bit-exact.

struct ContainerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BadMagicError : ContainerError {
  using ContainerError::ContainerError;
};
struct TruncatedError : ContainerError {
  using ContainerError::ContainerError;
};
struct ChecksumError : ContainerError {
  using ContainerError::ContainerError;
};

namespace detail {

inline uint32_t crc32(const uint8_t* data, size_t n, uint32_t crc = 0) {
  static const auto table = [] {
    std::vector<uint32_t> t(256);
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  crc ^= 0xFFFFFFFFu;
  for (size_t i = 0; i < n; ++i) crc = table[(crc ^ data[i]) & 0xFF] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

class ByteWriter {
 public:
  void byte(uint8_t v) { buf_.push_back(v); }
  void u32(uint32_t v) { raw(&v, 4); }
  void u64(uint64_t v) { raw(&v, 8); }
  void i64(int64_t v) { raw(&v, 8); }
  void f32(float v) { raw(&v, 4); }
  void str(const std::string& s) {
    u32(static_cast<uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  void f32s(const std::vector<float>& v) {
    u32(static_cast<uint32_t>(v.size()));
    raw(v.data(), v.size() * 4);
  }
  void f64(double v) { raw(&v, 8); }
  void f64s(const std::vector<double>& v) {
    u64(v.size());
    raw(v.data(), v.size() * 8);
  }
  const std::vector<uint8_t>& bytes() const { return buf_; }

 private:
  void raw(const void* p, size_t n) {
    const uint8_t* b = static_cast<const uint8_t*>(p);
    buf_.insert(buf_.end(), b, b + n);
  }
  std::vector<uint8_t> buf_;
};

class ByteReader {
 public:
  ByteReader(const uint8_t* data, size_t n) : data_(data), size_(n) {}
  uint32_t u32() { return rd<uint32_t>(); }
  uint64_t u64() { return rd<uint64_t>(); }
  int64_t i64() { return rd<int64_t>(); }
  float f32() { return rd<float>(); }
  std::string str() {
    uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }
  std::vector<float> f32s() {
    uint32_t n = u32();
    need(static_cast<size_t>(n) * 4);
    std::vector<float> v(n);
    std::memcpy(v.data(), data_ + pos_, static_cast<size_t>(n) * 4);
    pos_ += static_cast<size_t>(n) * 4;
    return v;
  }
  double f64() { return rd<double>(); }
  std::vector<double> f64s() {
    uint64_t n = u64();
    need(n * 8);
    std::vector<double> v(n);
    std::memcpy(v.data(), data_ + pos_, n * 8);
    pos_ += n * 8;
    return v;
  }
  size_t pos() const { return pos_; }
  size_t remaining() const { return size_ - pos_; }

 private:
  template <typename T>
  T rd() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_ + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void need(size_t n) {
    if (pos_ + n > size_) throw TruncatedError("episode container: unexpected end of data");
  }
  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
};

}  // namespace detail

inline constexpr uint32_t kEpisodeFormatVersion = 1;

namespace detail {
inline void write_payload(ByteWriter& w, const Episode& e) {
  w.str(e.instruction);
  w.str(e.task_name);
  w.u32(static_cast<uint32_t>(e.task_id));
  w.u32(static_cast<uint32_t>(e.variation_id));
  w.i64(e.seed);
  w.u32(static_cast<uint32_t>(e.steps()));
  if (e.observations.size() != e.actions.size())
    throw ContainerError("episode: observation/action length mismatch");
  for (const Observation& o : e.observations) {
    w.u32(static_cast<uint32_t>(o.K));
    w.u32(static_cast<uint32_t>(o.H));
    w.u32(static_cast<uint32_t>(o.W));
    w.f32s(o.rgb);
    w.f32s(o.pcd);
    w.f32s(o.gripper_map);
  }
  for (const Action& a : e.actions) w.f32s(a.flat());
}

inline Episode read_payload(ByteReader& r) {
  Episode e;
  e.instruction = r.str();
  e.task_name = r.str();
  e.task_id = static_cast<int>(r.u32());
  e.variation_id = static_cast<int>(r.u32());
  e.seed = r.i64();
  uint32_t steps = r.u32();
  e.observations.resize(steps);
  for (Observation& o : e.observations) {
    int K = static_cast<int>(r.u32());
    int H = static_cast<int>(r.u32());
    int W = static_cast<int>(r.u32());
    o.K = K;
    o.H = H;
    o.W = W;
    o.rgb = r.f32s();
    o.pcd = r.f32s();
    o.gripper_map = r.f32s();
    size_t want = static_cast<size_t>(K) * 3 * H * W;
    if (o.rgb.size() != want || o.pcd.size() != want ||
        o.gripper_map.size() != static_cast<size_t>(K) * H * W)
      throw ContainerError("episode: array size inconsistent with header");
  }
  e.actions.reserve(steps);
  for (uint32_t i = 0; i < steps; ++i) {
    std::vector<float> f = r.f32s();
    if (f.size() != 8) throw ContainerError("episode: action must have 8 components");
    e.actions.push_back(Action::from_flat(f.data()));
  }
  return e;
}
}  // namespace detail

inline std::vector<uint8_t> encode_episode(const Episode& e) {
  detail::ByteWriter w;
  for (char c : {'T', 'B', 'E', 'P'}) w.byte(static_cast<uint8_t>(c));
  w.u32(kEpisodeFormatVersion);
  w.u64(0);  // placeholder for the total length
  detail::write_payload(w, e);
  std::vector<uint8_t> out = w.bytes();
  uint64_t total = out.size() + 4;
  std::memcpy(out.data() + 8, &total, 8);
  uint32_t crc = detail::crc32(out.data(), out.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(crc >> (8 * i)));
  return out;
}

inline Episode decode_episode(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 4) throw TruncatedError("episode container: too small");
  if (std::memcmp(bytes.data(), "TBEP", 4) != 0)
    throw BadMagicError("episode container: bad magic");
  if (bytes.size() < 20) throw TruncatedError("episode container: header incomplete");
  uint64_t declared;
  std::memcpy(&declared, bytes.data() + 8, 8);
  if (bytes.size() < declared) throw TruncatedError("episode container: truncated");
  if (bytes.size() > declared) throw ContainerError("episode container: trailing bytes");
  uint32_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
  uint32_t computed = detail::crc32(bytes.data(), bytes.size() - 4);
  if (stored != computed) throw ChecksumError("episode container: checksum mismatch");
  detail::ByteReader r(bytes.data() + 4, bytes.size() - 8);
  uint32_t version = r.u32();
  if (version != kEpisodeFormatVersion)
    throw ContainerError("episode container: unsupported version");
  r.u64();  // length, already validated
  Episode e = detail::read_payload(r);
  if (r.remaining() != 0) throw ContainerError("episode container: trailing bytes");
  return e;
}

inline void save_episode(const std::string& path, const Episode& e) {
  std::vector<uint8_t> bytes = encode_episode(e);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ContainerError("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ContainerError("write failed: " + path);
}

inline Episode load_episode(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ContainerError("cannot open for reading: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return decode_episode(bytes);
}

}  // namespace tabletop
