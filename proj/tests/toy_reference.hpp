#pragma once

// Straightforward re-implementation of the toy network, used as an oracle
// for the optimized code paths. Loops follow the equations literally.

#include <cmath>
#include <span>
#include <vector>

#include "manidialog/toymodel.hpp"

namespace toy_reference {

using manidialog::toy::ModelParams;
using manidialog::toy::TrainingExample;

inline double at(const ModelParams& p, const char* segment, std::size_t r, std::size_t c) {
  const auto& s = p.segment(segment);
  return p.values()[s.offset + r * s.cols + c];
}

inline std::vector<double> logprobs(const ModelParams& p, std::span<const int> tokens) {
  const std::size_t E = static_cast<std::size_t>(p.dims().embed_dim);
  const std::size_t H = static_cast<std::size_t>(p.dims().hidden_dim);
  const std::size_t V = static_cast<std::size_t>(p.dims().vocab_size);
  std::vector<double> out(tokens.size(), 0.0);
  std::vector<double> h(H, 0.0);
  for (std::size_t t = 0; t + 1 < tokens.size(); ++t) {
    std::vector<double> next(H);
    for (std::size_t i = 0; i < H; ++i) {
      double a = at(p, "hidden_bias", i, 0);
      for (std::size_t k = 0; k < E; ++k) {
        a += at(p, "input_weight", i, k) * at(p, "embedding", static_cast<std::size_t>(tokens[t]), k);
      }
      for (std::size_t k = 0; k < H; ++k) a += at(p, "recurrent_weight", i, k) * h[k];
      next[i] = std::tanh(a);
    }
    h = next;
    std::vector<double> logits(V);
    double m = -1e300;
    for (std::size_t j = 0; j < V; ++j) {
      logits[j] = at(p, "output_bias", j, 0);
      for (std::size_t k = 0; k < H; ++k) logits[j] += at(p, "output_weight", j, k) * h[k];
      m = std::max(m, logits[j]);
    }
    double z = 0.0;
    for (double l : logits) z += std::exp(l - m);
    out[t + 1] = logits[static_cast<std::size_t>(tokens[t + 1])] - m - std::log(z);
  }
  return out;
}

inline double masked_sum(const std::vector<double>& lp, const std::vector<bool>& mask) {
  double s = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    if (mask[i]) s += lp[i];
  }
  return s;
}

struct Loss {
  double total, action, response;
};

/// L_a and L_r are mean NLLs over all masked tokens of the batch.
inline Loss joint_loss(const ModelParams& p, std::span<const TrainingExample> batch, double lambda) {
  double na = 0, nr = 0, ca = 0, cr = 0;
  for (const auto& ex : batch) {
    const auto lp = logprobs(p, ex.tokens);
    for (std::size_t i = 0; i < lp.size(); ++i) {
      if (ex.action_mask[i]) {
        na -= lp[i];
        ++ca;
      }
      if (ex.response_mask[i]) {
        nr -= lp[i];
        ++cr;
      }
    }
  }
  const double la = ca > 0 ? na / ca : 0.0;
  const double lr = cr > 0 ? nr / cr : 0.0;
  return {la + lambda * lr, la, lr};
}

inline double central_difference(const ModelParams& p, std::span<const TrainingExample> batch, double lambda,
                                  std::size_t index, double h) {
  ModelParams plus = p, minus = p;
  plus.values()[index] += h;
  minus.values()[index] -= h;
  return (joint_loss(plus, batch, lambda).total - joint_loss(minus, batch, lambda).total) / (2 * h);
}

}  // namespace toy_reference
