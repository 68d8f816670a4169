#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "tabletop/model/config.hpp"
#include "tabletop/model/param_graph.hpp"

namespace tabletop {

// Eq. 4 scaled dot-product attention with learned projections and no output
// matrix. Multi-head splits the feature dimension; h=1 reproduces Eq. 4
// verbatim (per-head scale 1/sqrt(d_head) equals 1/sqrt(d) when h=1).
inline Var attention(Var q_in, Var kv_in, Var wq, Var wk, Var wv, int heads) {
  int d = wq.v().cols();
  if (d % heads != 0) throw std::invalid_argument("attention: heads must divide d");
  int dh = d / heads;
  Var q = ops::matmul(q_in, wq);
  Var k = ops::matmul(kv_in, wk);
  Var v = ops::matmul(kv_in, wv);
  if (kv_in.v().rows() < 1) throw std::invalid_argument("attention: empty keys");
  std::vector<Var> head_outs;
  for (int h = 0; h < heads; ++h) {
    Var qh = ops::slice_cols(q, h * dh, dh);
    Var kh = ops::slice_cols(k, h * dh, dh);
    Var vh = ops::slice_cols(v, h * dh, dh);
    Var logits = ops::scale(ops::matmul(qh, kh, false, true), 1.0 / std::sqrt(dh));
    head_outs.push_back(ops::matmul(ops::softmax_rows(logits), vh));
  }
  return heads == 1 ? head_outs[0] : ops::concat_cols(head_outs);
}

// One encoder block (Eq. 5-6) over the current tokens G (m x d) with context C.
// Declared residual wiring: each of the three sub-layers (CA, SA, FFN) is
// wrapped in a residual connection; the LayerNorm of Eq. 6 closes the block.
// Self mode runs one self-attention over [C; G] and keeps the m current rows.
inline Var encoder_block(ParamGraph& P, const PolicyConfig& cfg, int layer, Var g_tokens,
                         Var context, bool has_context) {
  std::string pre = "tf" + std::to_string(layer);
  Var x = g_tokens;
  if (cfg.attn_mode == AttnMode::kCross) {
    if (!has_context) {
      // Only the instruction-free variant may reach a step with no context
      // (t=1, no history); there the CA sub-layer has nothing to attend to.
      if (cfg.include_instruction)
        throw std::invalid_argument("encoder_block: cross attention requires context");
    } else {
      Var ca = attention(x, context, P(pre + ".ca.Wq"), P(pre + ".ca.Wk"),
                         P(pre + ".ca.Wv"), cfg.heads);
      x = ops::add(x, ca);
    }
    Var sa = attention(x, x, P(pre + ".sa.Wq"), P(pre + ".sa.Wk"), P(pre + ".sa.Wv"),
                       cfg.heads);
    x = ops::add(x, sa);
  } else {
    int m = g_tokens.v().rows();
    Var joint = has_context ? ops::concat0({context, g_tokens}) : g_tokens;
    Var sa = attention(joint, joint, P(pre + ".sa.Wq"), P(pre + ".sa.Wk"),
                       P(pre + ".sa.Wv"), cfg.heads);
    x = ops::add(x, ops::slice0(sa, joint.v().rows() - m, m));
  }
  Var h = ops::add_row_broadcast(ops::matmul(x, P(pre + ".ffn1.w")), P(pre + ".ffn1.b"));
  h = ops::add_row_broadcast(ops::matmul(ops::gelu(h), P(pre + ".ffn2.w")),
                             P(pre + ".ffn2.b"));
  return ops::layernorm_rows(ops::add(h, x), P(pre + ".ln.gamma"), P(pre + ".ln.beta"));
}

inline Var apply_transformer(ParamGraph& P, const PolicyConfig& cfg, Var g_tokens,
                             Var context, bool has_context) {
  Var x = g_tokens;
  for (int l = 0; l < cfg.layers; ++l)
    x = encoder_block(P, cfg, l, x, context, has_context);
  return x;
}

}  // namespace tabletop
