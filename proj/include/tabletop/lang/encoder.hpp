#pragma once

#include <cctype>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "tabletop/core/rng.hpp"
#include "tabletop/core/tensor.hpp"
#include "tabletop/sim/scene.hpp"

namespace tabletop {

inline std::vector<std::string> tokenize_words(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isalpha(static_cast<unsigned char>(ch))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    } else if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Frozen deterministic text encoder. encode() maps an instruction to a
// [num_tokens, dim] embedding matrix; no learned parameters.
class TextEncoder {
 public:
  explicit TextEncoder(int dim) : dim_(dim) {}
  virtual ~TextEncoder() = default;
  int dim() const { return dim_; }
  virtual std::string name() const = 0;
  virtual Tensor encode(const std::string& text) const = 0;

  // Fixed-length variant: truncate or zero-pad to `len` tokens.
  Tensor encode_padded(const std::string& text, int len) const {
    Tensor e = encode(text);
    Tensor out = Tensor::zeros({len, dim_});
    int n = std::min(len, e.shape[0]);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < dim_; ++j) out.at(i, j) = e.at(i, j);
    return out;
  }

 protected:
  int dim_;
};

// Hash-based stand-in for a frozen pretrained sentence encoder: every word gets
// a fixed random vector derived from its hash (palette color words draw from a
// dedicated seed stream so they can never collide with ordinary words), plus a
// sinusoidal position encoding.
class HashTextEncoder : public TextEncoder {
 public:
  explicit HashTextEncoder(int dim) : TextEncoder(dim) {}
  std::string name() const override { return "hash"; }

  Tensor token_embedding(const std::string& word) const {
    int ci = palette_index(word);
    uint64_t seed = ci >= 0 ? mix_seed(0xc0104u, static_cast<uint64_t>(ci), 0, 0)
                            : mix_seed(0x7e47u, fnv1a_str(word), 0, 0);
    Rng rng(seed);
    Tensor t = Tensor::zeros({1, dim_});
    double scale = 1.0 / std::sqrt(static_cast<double>(dim_));
    for (int j = 0; j < dim_; ++j) t.at(0, j) = rng.normal() * scale;
    return t;
  }

  Tensor position_encoding(int pos) const {
    Tensor t = Tensor::zeros({1, dim_});
    for (int j = 0; j < dim_; j += 2) {
      double freq = std::pow(10000.0, -static_cast<double>(j) / dim_);
      t.at(0, j) = std::sin(pos * freq) * 0.3;
      if (j + 1 < dim_) t.at(0, j + 1) = std::cos(pos * freq) * 0.3;
    }
    return t;
  }

  Tensor encode(const std::string& text) const override {
    std::vector<std::string> words = tokenize_words(text);
    if (words.empty()) throw std::invalid_argument("encode: empty instruction");
    Tensor out = Tensor::zeros({static_cast<int>(words.size()), dim_});
    for (size_t i = 0; i < words.size(); ++i) {
      Tensor w = token_embedding(words[i]);
      Tensor p = position_encoding(static_cast<int>(i));
      for (int j = 0; j < dim_; ++j)
        out.at(static_cast<int>(i), j) = w.at(0, j) + p.at(0, j);
    }
    return out;
  }
};

// Degenerate baseline: the whole instruction collapses to a single one-hot
// token indexed by a hash of the exact string. Paraphrases land in unrelated
// bins, so it carries no compositional signal.
class OneHotTextEncoder : public TextEncoder {
 public:
  explicit OneHotTextEncoder(int dim) : TextEncoder(dim) {}
  std::string name() const override { return "onehot"; }

  Tensor encode(const std::string& text) const override {
    std::vector<std::string> words = tokenize_words(text);
    if (words.empty()) throw std::invalid_argument("encode: empty instruction");
    std::string canon;
    for (const std::string& w : words) canon += w + " ";
    Tensor out = Tensor::zeros({1, dim_});
    out.at(0, static_cast<int>(fnv1a_str(canon) % static_cast<uint64_t>(dim_))) = 1.0;
    return out;
  }
};

inline std::unique_ptr<TextEncoder> make_text_encoder(const std::string& name, int dim) {
  if (name == "hash") return std::make_unique<HashTextEncoder>(dim);
  if (name == "onehot") return std::make_unique<OneHotTextEncoder>(dim);
  throw std::invalid_argument("unknown text encoder: " + name);
}

inline Tensor mean_language_embedding(const Tensor& tokens) {
  int n = tokens.shape[0], d = tokens.shape[1];
  Tensor out = Tensor::zeros({1, d});
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out.at(0, j) += tokens.at(i, j) / n;
  return out;
}

}  // namespace tabletop
