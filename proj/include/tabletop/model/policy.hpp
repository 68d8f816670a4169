#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tabletop/lang/encoder.hpp"
#include "tabletop/model/action_head.hpp"
#include "tabletop/model/config.hpp"
#include "tabletop/model/transformer.hpp"
#include "tabletop/model/visual_encoder.hpp"

namespace tabletop {

struct StepPrediction {
  Var position;            // [1,3] = p^e + p^o
  Var p_e, p_o;            // components of the position
  Var quat;                // [1,4] raw
  Var open;                // [1,1] raw
  Var task_log;            // [1,N_tau] logits; invalid when instructions ablated
  std::vector<Var> heatmaps;  // K maps [1,H,W]
};

// The full instruction-conditioned multi-view policy: a pure function of the
// episode prefix, the instruction, and the parameters.
class Policy {
 public:
  PolicyConfig cfg;
  ParamStore params;

  Policy() = default;
  Policy(PolicyConfig c, uint64_t seed)
      : cfg(c), params(init_params(c, seed)),
        encoder_(make_text_encoder(c.text_encoder, c.d_text)) {}

  const TextEncoder& encoder() const { return *encoder_; }

  // Rebuilds the frozen encoder after cfg changes (e.g. checkpoint load).
  void reset_encoder() { encoder_ = make_text_encoder(cfg.text_encoder, cfg.d_text); }

  // Forward for step t (1-based): observations o_1..o_t are ground truth
  // (training, teacher forcing) or the policy's own past (rollout).
  // `current_mask` (length tokens_per_step, values in {0,1}) zeroes current-step
  // tokens when masking fires during training; history/instruction tokens are
  // never masked.
  StepPrediction forward_step(
      ParamGraph& P, const std::vector<Observation>& obs, const std::string& instruction,
      int t, std::shared_ptr<const std::vector<double>> current_mask = nullptr) const {
    if (t < 1 || t > static_cast<int>(obs.size()) || t > cfg.t_max)
      throw std::invalid_argument("forward_step: step out of range");
    const Observation& cur = obs[static_cast<size_t>(t - 1)];
    if (cur.K != cfg.cameras || cur.H != cfg.image_hw || cur.W != cfg.image_hw)
      throw std::invalid_argument("forward_step: observation shape mismatch");

    // Instruction tokens (Eq. 1): x-hat = LN(W_x x-raw) + E_T^x.
    Tensor raw;
    Var xhat;
    if (cfg.include_instruction) {
      raw = encoder_->encode(instruction);
      if (raw.shape[0] > cfg.n_max_text)
        throw std::invalid_argument("forward_step: instruction exceeds token cap");
      Var r = ops::constant_owned(P.graph(), raw);
      xhat = ops::add_row_broadcast(
          ops::layernorm_rows(ops::matmul(r, P("instr.Wx")), P("instr.ln.gamma"),
                              P("instr.ln.beta")),
          P("instr.Etx"));
    }

    // With history ablated the step-embedding slot is pinned to 0, removing
    // every temporal signal from a single frame.
    auto slot = [&](int s) { return cfg.include_history ? s - 1 : 0; };

    // Visual tokens for the current step and (if enabled) each history step.
    std::vector<Var> history_tokens;
    Var cur_tokens;
    std::vector<UnetOut> cur_unet(static_cast<size_t>(cfg.cameras));
    std::vector<Var> cur_fhat;
    int start = cfg.include_history ? 1 : t;
    for (int s = start; s <= t; ++s) {
      const Observation& o = obs[static_cast<size_t>(s - 1)];
      std::vector<Var> fused;
      for (int k = 0; k < cfg.cameras; ++k) {
        Var input = ops::constant_owned(P.graph(), camera_input(o, k, cfg.use_gripper_map));
        UnetOut u = unet_encode(P, cfg, input);
        Tensor pool = cfg.use_pointcloud ? pooled_pcd(o, k)
                                         : Tensor::zeros({3, cfg.hv(), cfg.hv()});
        fused.push_back(fuse_pointcloud(P, u.out, pool));
        if (s == t) {
          cur_unet[static_cast<size_t>(k)] = u;
          cur_fhat.push_back(u.out);
        }
      }
      Var tok = tokenize(P, cfg, fused, slot(s));
      if (s == t) {
        cur_tokens = tok;
      } else {
        history_tokens.push_back(tok);
      }
    }
    if (current_mask) cur_tokens = ops::mask_rows(cur_tokens, current_mask);

    // Context: instruction tokens then strictly-past visual tokens.
    std::vector<Var> ctx_parts;
    if (cfg.include_instruction) ctx_parts.push_back(xhat);
    for (Var h : history_tokens) ctx_parts.push_back(h);
    bool has_context = !ctx_parts.empty();
    Var context;
    if (has_context)
      context = ctx_parts.size() == 1 ? ctx_parts[0] : ops::concat0(ctx_parts);

    // Contextualization (Eq. 4-6), or the R1 UNet-only wiring.
    Var ghat;
    if (cfg.use_transformer) {
      ghat = apply_transformer(P, cfg, cur_tokens, context, has_context);
    } else {
      ghat = cur_tokens;
      if (cfg.include_instruction) {
        Var mean = ops::constant_owned(P.graph(), mean_language_embedding(raw));
        ghat = ops::add_row_broadcast(ghat, ops::matmul(mean, P("r1.Wg")));
      }
    }

    // Decoder input H_t: transformer outputs reshaped to maps, concatenated
    // with the pre-transformer features F-hat, camera-wise.
    std::vector<Var> gmaps = tokens_to_maps(P, cfg, ghat);
    std::vector<Var> h_maps, logits;
    for (int k = 0; k < cfg.cameras; ++k) {
      Var hk = ops::concat0({gmaps[static_cast<size_t>(k)], cur_fhat[static_cast<size_t>(k)]});
      h_maps.push_back(hk);
      logits.push_back(decode_heatmap_logits(P, cfg, hk, cur_unet[static_cast<size_t>(k)]));
    }

    StepPrediction out;
    out.heatmaps = normalize_heatmaps(cfg, logits);
    out.p_e = expected_position(cfg, out.heatmaps, cur);

    RotationOut rot = rotation_gripper_head(P, cfg, h_maps);
    out.quat = rot.quat;
    out.open = rot.open;

    if (cfg.include_instruction) {
      out.task_log = task_logits(P, mean_language_embedding(raw));
      out.p_o = predict_offset(P, cfg, ops::softmax_rows(out.task_log), slot(t));
    } else {
      out.p_o = ops::add_row_broadcast(ops::matmul(rot.pooled, P("rot.offset.w")),
                                       P("rot.offset.b"));
    }
    out.position = ops::add(out.p_e, out.p_o);
    return out;
  }

  // Teacher-forced forward over a whole episode: per-step encodings are
  // computed once and reused both as current tokens and as history context for
  // later steps (identical results to calling forward_step per t, cheaper).
  // step_masks[t-1], when set, zeroes that step's tokens only in its
  // current-step role; history context always sees unmasked tokens.
  std::vector<StepPrediction> forward_episode(
      ParamGraph& P, const std::vector<Observation>& obs, const std::string& instruction,
      const std::vector<std::shared_ptr<const std::vector<double>>>& step_masks = {})
      const {
    int T = static_cast<int>(obs.size());
    if (T < 1 || T > cfg.t_max)
      throw std::invalid_argument("forward_episode: bad episode length");

    Tensor raw;
    Var xhat;
    if (cfg.include_instruction) {
      raw = encoder_->encode(instruction);
      if (raw.shape[0] > cfg.n_max_text)
        throw std::invalid_argument("forward_episode: instruction exceeds token cap");
      Var r = ops::constant_owned(P.graph(), raw);
      xhat = ops::add_row_broadcast(
          ops::layernorm_rows(ops::matmul(r, P("instr.Wx")), P("instr.ln.gamma"),
                              P("instr.ln.beta")),
          P("instr.Etx"));
    }
    auto slot = [&](int s) { return cfg.include_history ? s - 1 : 0; };

    // one encoding pass per step
    std::vector<Var> step_tokens(static_cast<size_t>(T));
    std::vector<std::vector<UnetOut>> unets(static_cast<size_t>(T));
    std::vector<std::vector<Var>> fhats(static_cast<size_t>(T));
    for (int s = 1; s <= T; ++s) {
      const Observation& o = obs[static_cast<size_t>(s - 1)];
      if (o.K != cfg.cameras || o.H != cfg.image_hw || o.W != cfg.image_hw)
        throw std::invalid_argument("forward_episode: observation shape mismatch");
      std::vector<Var> fused;
      for (int k = 0; k < cfg.cameras; ++k) {
        Var input =
            ops::constant_owned(P.graph(), camera_input(o, k, cfg.use_gripper_map));
        UnetOut u = unet_encode(P, cfg, input);
        Tensor pool = cfg.use_pointcloud ? pooled_pcd(o, k)
                                         : Tensor::zeros({3, cfg.hv(), cfg.hv()});
        fused.push_back(fuse_pointcloud(P, u.out, pool));
        unets[static_cast<size_t>(s - 1)].push_back(u);
        fhats[static_cast<size_t>(s - 1)].push_back(u.out);
      }
      step_tokens[static_cast<size_t>(s - 1)] = tokenize(P, cfg, fused, slot(s));
    }

    std::vector<StepPrediction> preds;
    for (int t = 1; t <= T; ++t) {
      Var cur = step_tokens[static_cast<size_t>(t - 1)];
      if (static_cast<int>(step_masks.size()) >= t && step_masks[static_cast<size_t>(t - 1)])
        cur = ops::mask_rows(cur, step_masks[static_cast<size_t>(t - 1)]);

      std::vector<Var> ctx_parts;
      if (cfg.include_instruction) ctx_parts.push_back(xhat);
      if (cfg.include_history)
        for (int s = 1; s < t; ++s) ctx_parts.push_back(step_tokens[static_cast<size_t>(s - 1)]);
      bool has_context = !ctx_parts.empty();
      Var context;
      if (has_context)
        context = ctx_parts.size() == 1 ? ctx_parts[0] : ops::concat0(ctx_parts);

      Var ghat;
      if (cfg.use_transformer) {
        ghat = apply_transformer(P, cfg, cur, context, has_context);
      } else {
        ghat = cur;
        if (cfg.include_instruction) {
          Var mean = ops::constant_owned(P.graph(), mean_language_embedding(raw));
          ghat = ops::add_row_broadcast(ghat, ops::matmul(mean, P("r1.Wg")));
        }
      }

      std::vector<Var> gmaps = tokens_to_maps(P, cfg, ghat);
      std::vector<Var> h_maps, logits;
      for (int k = 0; k < cfg.cameras; ++k) {
        Var hk = ops::concat0({gmaps[static_cast<size_t>(k)],
                               fhats[static_cast<size_t>(t - 1)][static_cast<size_t>(k)]});
        h_maps.push_back(hk);
        logits.push_back(decode_heatmap_logits(
            P, cfg, hk, unets[static_cast<size_t>(t - 1)][static_cast<size_t>(k)]));
      }

      StepPrediction out;
      out.heatmaps = normalize_heatmaps(cfg, logits);
      out.p_e = expected_position(cfg, out.heatmaps, obs[static_cast<size_t>(t - 1)]);
      RotationOut rot = rotation_gripper_head(P, cfg, h_maps);
      out.quat = rot.quat;
      out.open = rot.open;
      if (cfg.include_instruction) {
        out.task_log = task_logits(P, mean_language_embedding(raw));
        out.p_o = predict_offset(P, cfg, ops::softmax_rows(out.task_log), slot(t));
      } else {
        out.p_o = ops::add_row_broadcast(ops::matmul(rot.pooled, P("rot.offset.w")),
                                         P("rot.offset.b"));
      }
      out.position = ops::add(out.p_e, out.p_o);
      preds.push_back(out);
    }
    return preds;
  }

  // Inference: run the forward pass without gradients and post-process into an
  // executable action (unit-norm sign-canonical quaternion, thresholded
  // gripper). Degenerate quaternions fall back to identity and set the flag.
  Action predict_action(const std::vector<Observation>& obs,
                        const std::string& instruction, int t,
                        bool* degenerate_quat = nullptr) const {
    Graph g;
    ParamStore& p = const_cast<ParamStore&>(params);
    ParamGraph P(g, p, nullptr);
    StepPrediction s = forward_step(P, obs, instruction, t);
    Action a;
    a.px = static_cast<float>(s.position.v()[0]);
    a.py = static_cast<float>(s.position.v()[1]);
    a.pz = static_cast<float>(s.position.v()[2]);
    double qw = s.quat.v()[0], qx = s.quat.v()[1], qy = s.quat.v()[2],
           qz = s.quat.v()[3];
    double n = std::sqrt(qw * qw + qx * qx + qy * qy + qz * qz);
    if (n < 1e-8) {
      qw = 1; qx = qy = qz = 0;
      if (degenerate_quat) *degenerate_quat = true;
    } else {
      double sgn = qw < 0 ? -1.0 : 1.0;
      qw = sgn * qw / n; qx = sgn * qx / n; qy = sgn * qy / n; qz = sgn * qz / n;
      if (degenerate_quat) *degenerate_quat = false;
    }
    a.qw = static_cast<float>(qw);
    a.qx = static_cast<float>(qx);
    a.qy = static_cast<float>(qy);
    a.qz = static_cast<float>(qz);
    a.open = s.open.v()[0] >= 0.5 ? 1.0f : 0.0f;
    return a;
  }

 private:
  std::unique_ptr<TextEncoder> encoder_;
};

}  // namespace tabletop
