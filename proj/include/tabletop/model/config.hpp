#pragma once

#include <sstream>
#include <string>

#include "tabletop/core/param.hpp"
#include "tabletop/core/rng.hpp"

namespace tabletop {

enum class TokenMode { kPatch, kChannel };
enum class AttnMode { kCross, kSelf };

inline const char* token_mode_str(TokenMode m) {
  return m == TokenMode::kPatch ? "patch" : "channel";
}
inline const char* attn_mode_str(AttnMode m) {
  return m == AttnMode::kCross ? "cross" : "self";
}

// Architecture hyperparameters and ablation switches. Everything the forward
// pass depends on lives here so a config hash identifies a model family.
struct PolicyConfig {
  // sizes
  int image_hw = 32;       // H = W, multiple of 16
  int cameras = 3;         // K
  int d = 64;              // token dimension
  int d_text = 64;         // frozen text-encoder dimension
  int d_v = 16;            // UNet output channels (fixed by the architecture)
  int layers = 2;          // transformer blocks L
  int heads = 4;           // attention heads h (must divide d)
  int ffn_mult = 4;        // d_ff = ffn_mult * d
  int t_max = 6;           // episode length cap
  int n_tasks = 3;         // N_tau
  int n_max_text = 32;     // instruction token cap
  double leaky_slope = 0.02;
  int gn_groups = 4;

  // ablation switches
  bool use_transformer = true;    // off: R1 UNet-only late fusion
  TokenMode token_mode = TokenMode::kPatch;
  AttnMode attn_mode = AttnMode::kCross;
  bool use_pointcloud = true;     // input feature channels only; Eq. 7 geometry always uses pcd
  bool use_gripper_map = true;
  bool include_history = true;
  bool include_instruction = true;
  bool use_masking = true;        // training-time current-observation masking
  bool per_camera_softmax = false;  // sensitivity knob; R1 late fusion implies it
  std::string text_encoder = "hash";

  int hv() const { return image_hw / 16; }
  int tokens_per_step() const {
    return token_mode == TokenMode::kPatch ? cameras * hv() * hv()
                                           : cameras * (d_v + 3);
  }
  // channels of the decoder input H_t per camera: transformer output + F-hat
  int decoder_in_channels() const {
    return (token_mode == TokenMode::kPatch ? d : d_v + 3) + d_v;
  }

  std::string describe() const {
    std::ostringstream o;
    o << "hw=" << image_hw << " K=" << cameras << " d=" << d << " dt=" << d_text
      << " L=" << layers << " h=" << heads << " ff=" << ffn_mult << " T=" << t_max
      << " nt=" << n_tasks << " slope=" << leaky_slope << " gn=" << gn_groups
      << " tf=" << use_transformer << " tok=" << token_mode_str(token_mode)
      << " attn=" << attn_mode_str(attn_mode) << " pc=" << use_pointcloud
      << " gmap=" << use_gripper_map << " hist=" << include_history
      << " inst=" << include_instruction << " mask=" << use_masking
      << " percam=" << per_camera_softmax << " enc=" << text_encoder;
    return o.str();
  }
  uint64_t hash() const { return fnv1a_str(describe()); }
};

namespace detail {
inline Tensor randn_tensor(std::vector<int> shape, Rng& rng, double scale) {
  Tensor t(std::move(shape));
  for (double& v : t.data) v = rng.normal() * scale;
  return t;
}
inline void add_linear(ParamStore& p, const std::string& name, int in, int out,
                       Rng& rng) {
  p.add(name + ".w", randn_tensor({in, out}, rng, 1.0 / std::sqrt(in)));
  p.add(name + ".b", Tensor::zeros({1, out}));
}
inline void add_conv(ParamStore& p, const std::string& name, int cin, int cout,
                     Rng& rng) {
  p.add(name + ".w", randn_tensor({cout, cin, 3, 3}, rng, 1.0 / std::sqrt(cin * 9.0)));
  p.add(name + ".b", Tensor::zeros({cout}));
}
inline void add_norm(ParamStore& p, const std::string& name, int c) {
  p.add(name + ".gamma", Tensor::full({c}, 1.0));
  p.add(name + ".beta", Tensor::zeros({c}));
}
inline void add_norm_row(ParamStore& p, const std::string& name, int c) {
  p.add(name + ".gamma", Tensor::full({1, c}, 1.0));
  p.add(name + ".beta", Tensor::zeros({1, c}));
}
}  // namespace detail

// Creates every trainable parameter for a config. Deterministic in `seed`.
inline ParamStore init_params(const PolicyConfig& c, uint64_t seed) {
  Rng rng(mix_seed(0x1417a2a5u, seed, c.hash(), 0));
  ParamStore p;
  int hv = c.hv(), grid = hv * hv;

  // UNet encoder: 2 stride-1 convs (8, 16 ch) then 4 stride-2 convs (16 ch)
  detail::add_conv(p, "unet.conv1", 4, 8, rng);
  detail::add_conv(p, "unet.conv2", 8, 16, rng);
  for (int i = 3; i <= 6; ++i) {
    detail::add_conv(p, "unet.conv" + std::to_string(i), 16, 16, rng);
    detail::add_norm(p, "unet.gn" + std::to_string(i), 16);
  }

  // instruction projection (Eq. 1 structure)
  p.add("instr.Wx", detail::randn_tensor({c.d_text, c.d}, rng, 1.0 / std::sqrt(c.d_text)));
  detail::add_norm_row(p, "instr.ln", c.d);
  p.add("instr.Etx", detail::randn_tensor({1, c.d}, rng, 0.02));

  // visual token embeddings (Eq. 3)
  if (c.token_mode == TokenMode::kPatch) {
    p.add("tok.Wf", detail::randn_tensor({c.d_v + 3, c.d}, rng,
                                         1.0 / std::sqrt(c.d_v + 3.0)));
  } else {
    p.add("tok.Wc", detail::randn_tensor({grid, c.d}, rng, 1.0 / std::sqrt(grid)));
    p.add("tok.Winv", detail::randn_tensor({c.d, grid}, rng, 1.0 / std::sqrt(c.d)));
  }
  detail::add_norm_row(p, "tok.ln", c.d);
  p.add("tok.EC", detail::randn_tensor({c.cameras, c.d}, rng, 0.02));
  p.add("tok.ES", detail::randn_tensor({c.t_max, c.d}, rng, 0.02));
  p.add("tok.EL", detail::randn_tensor({grid, c.d}, rng, 0.02));
  p.add("tok.Etv", detail::randn_tensor({1, c.d}, rng, 0.02));

  if (c.use_transformer) {
    double ws = 1.0 / std::sqrt(static_cast<double>(c.d));
    for (int l = 0; l < c.layers; ++l) {
      std::string pre = "tf" + std::to_string(l);
      if (c.attn_mode == AttnMode::kCross) {
        for (const char* m : {".ca", ".sa"}) {
          p.add(pre + m + ".Wq", detail::randn_tensor({c.d, c.d}, rng, ws));
          p.add(pre + m + ".Wk", detail::randn_tensor({c.d, c.d}, rng, ws));
          p.add(pre + m + ".Wv", detail::randn_tensor({c.d, c.d}, rng, ws));
        }
      } else {
        p.add(pre + ".sa.Wq", detail::randn_tensor({c.d, c.d}, rng, ws));
        p.add(pre + ".sa.Wk", detail::randn_tensor({c.d, c.d}, rng, ws));
        p.add(pre + ".sa.Wv", detail::randn_tensor({c.d, c.d}, rng, ws));
      }
      detail::add_linear(p, pre + ".ffn1", c.d, c.d * c.ffn_mult, rng);
      detail::add_linear(p, pre + ".ffn2", c.d * c.ffn_mult, c.d, rng);
      detail::add_norm_row(p, pre + ".ln", c.d);
    }
  } else {
    // R1: the instruction mean embedding is broadcast onto the visual tokens
    p.add("r1.Wg",
          detail::randn_tensor({c.d_text, c.d}, rng, 1.0 / std::sqrt(c.d_text)));
  }

  // decoder: 4 conv+upsample blocks with UNet skips, then a 1-channel conv
  detail::add_conv(p, "dec.conv1", c.decoder_in_channels() + 16, 16, rng);
  detail::add_conv(p, "dec.conv2", 16 + 16, 16, rng);
  detail::add_conv(p, "dec.conv3", 16 + 16, 16, rng);
  detail::add_conv(p, "dec.conv4", 16 + 16, 16, rng);
  detail::add_conv(p, "dec.final", 16 + 16, 1, rng);

  // rotation/gripper head on the camera-stacked decoder input
  int rot_in = c.cameras * c.decoder_in_channels();
  detail::add_conv(p, "rot.conv1", rot_in, 64, rng);
  detail::add_norm(p, "rot.gn1", 64);
  detail::add_conv(p, "rot.conv2", 64, 64, rng);
  detail::add_norm(p, "rot.gn2", 64);
  detail::add_linear(p, "rot.fc", 64, 5, rng);

  // offset table and task classifier
  p.add("head.EO", Tensor::zeros({c.n_tasks * c.t_max, 3}));
  p.add("head.Wm",
        detail::randn_tensor({c.d_text, c.n_tasks}, rng, 1.0 / std::sqrt(c.d_text)));
  if (!c.include_instruction) detail::add_linear(p, "rot.offset", 64, 3, rng);
  return p;
}

}  // namespace tabletop
