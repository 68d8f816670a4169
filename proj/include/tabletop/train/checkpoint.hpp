#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "tabletop/data/episode_io.hpp"
#include "tabletop/model/policy.hpp"
#include "tabletop/train/optimizer.hpp"

namespace tabletop {

// Checkpoint container "TBCK": versioned header + config fields + named f64
// parameter blobs + Adam state + serialized training rng + iteration counter,
// CRC-32 protected like the episode container. Round trips are bit-exact.

inline constexpr uint32_t kCheckpointFormatVersion = 1;

struct Checkpoint {
  PolicyConfig cfg;
  ParamStore params;
  AdamState opt;
  int64_t iteration = 0;
  std::string rng_state;  // serialized trainer rng; empty for fresh models
};

namespace detail {

inline void write_config(ByteWriter& w, const PolicyConfig& c) {
  w.u32(static_cast<uint32_t>(c.image_hw));
  w.u32(static_cast<uint32_t>(c.cameras));
  w.u32(static_cast<uint32_t>(c.d));
  w.u32(static_cast<uint32_t>(c.d_text));
  w.u32(static_cast<uint32_t>(c.d_v));
  w.u32(static_cast<uint32_t>(c.layers));
  w.u32(static_cast<uint32_t>(c.heads));
  w.u32(static_cast<uint32_t>(c.ffn_mult));
  w.u32(static_cast<uint32_t>(c.t_max));
  w.u32(static_cast<uint32_t>(c.n_tasks));
  w.u32(static_cast<uint32_t>(c.n_max_text));
  w.f64(c.leaky_slope);
  w.u32(static_cast<uint32_t>(c.gn_groups));
  w.u32(c.use_transformer ? 1 : 0);
  w.u32(c.token_mode == TokenMode::kPatch ? 0 : 1);
  w.u32(c.attn_mode == AttnMode::kCross ? 0 : 1);
  w.u32(c.use_pointcloud ? 1 : 0);
  w.u32(c.use_gripper_map ? 1 : 0);
  w.u32(c.include_history ? 1 : 0);
  w.u32(c.include_instruction ? 1 : 0);
  w.u32(c.use_masking ? 1 : 0);
  w.u32(c.per_camera_softmax ? 1 : 0);
  w.str(c.text_encoder);
}

inline PolicyConfig read_config(ByteReader& r) {
  PolicyConfig c;
  c.image_hw = static_cast<int>(r.u32());
  c.cameras = static_cast<int>(r.u32());
  c.d = static_cast<int>(r.u32());
  c.d_text = static_cast<int>(r.u32());
  c.d_v = static_cast<int>(r.u32());
  c.layers = static_cast<int>(r.u32());
  c.heads = static_cast<int>(r.u32());
  c.ffn_mult = static_cast<int>(r.u32());
  c.t_max = static_cast<int>(r.u32());
  c.n_tasks = static_cast<int>(r.u32());
  c.n_max_text = static_cast<int>(r.u32());
  c.leaky_slope = r.f64();
  c.gn_groups = static_cast<int>(r.u32());
  c.use_transformer = r.u32() != 0;
  c.token_mode = r.u32() == 0 ? TokenMode::kPatch : TokenMode::kChannel;
  c.attn_mode = r.u32() == 0 ? AttnMode::kCross : AttnMode::kSelf;
  c.use_pointcloud = r.u32() != 0;
  c.use_gripper_map = r.u32() != 0;
  c.include_history = r.u32() != 0;
  c.include_instruction = r.u32() != 0;
  c.use_masking = r.u32() != 0;
  c.per_camera_softmax = r.u32() != 0;
  c.text_encoder = r.str();
  return c;
}

inline void write_tensors(ByteWriter& w, const std::vector<Tensor>& ts) {
  w.u32(static_cast<uint32_t>(ts.size()));
  for (const Tensor& t : ts) {
    w.u32(static_cast<uint32_t>(t.shape.size()));
    for (int d : t.shape) w.u32(static_cast<uint32_t>(d));
    w.f64s(t.data);
  }
}

inline std::vector<Tensor> read_tensors(ByteReader& r) {
  uint32_t n = r.u32();
  std::vector<Tensor> out;
  for (uint32_t i = 0; i < n; ++i) {
    uint32_t rank = r.u32();
    std::vector<int> shape;
    for (uint32_t j = 0; j < rank; ++j) shape.push_back(static_cast<int>(r.u32()));
    std::vector<double> data = r.f64s();
    if (static_cast<int64_t>(data.size()) != Tensor::count(shape))
      throw ContainerError("checkpoint: tensor size inconsistent with shape");
    out.emplace_back(std::move(shape), std::move(data));
  }
  return out;
}

}  // namespace detail

inline std::vector<uint8_t> encode_checkpoint(const Checkpoint& ck) {
  detail::ByteWriter w;
  for (char ch : {'T', 'B', 'C', 'K'}) w.byte(static_cast<uint8_t>(ch));
  w.u32(kCheckpointFormatVersion);
  w.u64(0);  // length placeholder
  detail::write_config(w, ck.cfg);
  w.i64(ck.iteration);
  w.str(ck.rng_state);
  w.u32(static_cast<uint32_t>(ck.params.count()));
  std::vector<Tensor> ptensors;
  for (size_t i = 0; i < ck.params.count(); ++i) {
    w.str(ck.params.names()[i]);
    ptensors.push_back(ck.params.at(i));
  }
  detail::write_tensors(w, ptensors);
  w.u32(ck.opt.m.empty() ? 0 : 1);
  if (!ck.opt.m.empty()) {
    detail::write_tensors(w, ck.opt.m);
    detail::write_tensors(w, ck.opt.v);
    w.i64(ck.opt.t);
    w.f64(ck.opt.beta1);
    w.f64(ck.opt.beta2);
    w.f64(ck.opt.eps);
  }
  std::vector<uint8_t> out = w.bytes();
  uint64_t total = out.size() + 4;
  std::memcpy(out.data() + 8, &total, 8);
  uint32_t crc = detail::crc32(out.data(), out.size());
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(crc >> (8 * i)));
  return out;
}

inline Checkpoint decode_checkpoint(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < 4) throw TruncatedError("checkpoint: too small");
  if (std::memcmp(bytes.data(), "TBCK", 4) != 0)
    throw BadMagicError("checkpoint: bad magic");
  if (bytes.size() < 20) throw TruncatedError("checkpoint: header incomplete");
  uint64_t declared;
  std::memcpy(&declared, bytes.data() + 8, 8);
  if (bytes.size() < declared) throw TruncatedError("checkpoint: truncated");
  if (bytes.size() > declared) throw ContainerError("checkpoint: trailing bytes");
  uint32_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
  if (stored != detail::crc32(bytes.data(), bytes.size() - 4))
    throw ChecksumError("checkpoint: checksum mismatch");
  detail::ByteReader r(bytes.data() + 4, bytes.size() - 8);
  if (r.u32() != kCheckpointFormatVersion)
    throw ContainerError("checkpoint: unsupported version");
  r.u64();  // length, validated above
  Checkpoint ck;
  ck.cfg = detail::read_config(r);
  ck.iteration = r.i64();
  ck.rng_state = r.str();
  uint32_t np = r.u32();
  std::vector<std::string> names;
  for (uint32_t i = 0; i < np; ++i) names.push_back(r.str());
  std::vector<Tensor> ptensors = detail::read_tensors(r);
  if (ptensors.size() != names.size())
    throw ContainerError("checkpoint: name/tensor count mismatch");
  for (size_t i = 0; i < names.size(); ++i)
    ck.params.add(names[i], std::move(ptensors[i]));
  if (r.u32() != 0) {
    ck.opt.m = detail::read_tensors(r);
    ck.opt.v = detail::read_tensors(r);
    ck.opt.t = r.i64();
    ck.opt.beta1 = r.f64();
    ck.opt.beta2 = r.f64();
    ck.opt.eps = r.f64();
  }
  if (r.remaining() != 0) throw ContainerError("checkpoint: trailing payload bytes");
  return ck;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  std::vector<uint8_t> bytes = encode_checkpoint(ck);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ContainerError("cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ContainerError("write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ContainerError("cannot open for reading: " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                             std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

// Reconstructs a runnable policy from a checkpoint.
inline Policy policy_from_checkpoint(const Checkpoint& ck) {
  Policy p(ck.cfg, 0);
  // overwrite the freshly initialized parameters with the stored ones
  if (p.params.count() != ck.params.count())
    throw ContainerError("checkpoint: parameter set does not match config");
  for (size_t i = 0; i < p.params.count(); ++i) {
    if (p.params.names()[i] != ck.params.names()[i] ||
        p.params.at(i).shape != ck.params.at(i).shape)
      throw ContainerError("checkpoint: parameter mismatch at " + p.params.names()[i]);
    p.params.at(i) = ck.params.at(i);
  }
  return p;
}

}  // namespace tabletop
