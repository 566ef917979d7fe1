#include "manidialog/toymodel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "manidialog/dialogue.hpp"
#include "manidialog/error.hpp"

namespace manidialog::toy {

// ---------------------------------------------------------------------------
// Tokens

namespace {

bool word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '\'';
}

bool is_role_tag(std::string_view t) { return t == kHumanTag || t == kActionTag || t == kAiTag; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (word_char(c)) {
      std::size_t j = i;
      while (j < text.size() && word_char(text[j])) ++j;
      std::string_view raw = text.substr(i, j - i);
      if (j < text.size() && text[j] == ':') {
        std::string tag = std::string(raw) + ":";
        if (is_role_tag(tag)) {
          out.push_back(std::move(tag));
          i = j + 1;
          continue;
        }
      }
      std::string w;
      w.reserve(raw.size());
      for (char ch : raw) w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
      out.push_back(std::move(w));
      i = j;
      continue;
    }
    // Multi-byte UTF-8 sequences stay together as one token.
    std::size_t len = 1;
    const auto uc = static_cast<unsigned char>(c);
    if (uc >= 0xF0) len = 4;
    else if (uc >= 0xE0) len = 3;
    else if (uc >= 0xC0) len = 2;
    len = std::min(len, text.size() - i);
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  bool glue_next = false;
  for (const auto& t : tokens) {
    const bool glue_prev = t == "." || t == "," || t == "?" || t == "!" || t == ")" || t == ";" || t == ":";
    if (!out.empty() && !glue_prev && !glue_next) out += ' ';
    out += t;
    glue_next = t == "(";
  }
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  v.tokens_ = std::move(tokens);
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], static_cast<int>(i)).second) {
      throw Error(ErrorCode::ParseError, "duplicate vocabulary token '" + v.tokens_[i] + "'");
    }
  }
  if (v.tokens_.size() < 4 || v.tokens_[0] != kPad || v.tokens_[1] != kBegin || v.tokens_[2] != kEnd ||
      v.tokens_[3] != kUnknown) {
    throw Error(ErrorCode::ParseError, "vocabulary must start with the special tokens");
  }
  return v;
}

Vocab Vocab::build(std::span<const std::string> texts) {
  std::vector<std::string> tokens = {std::string(kPad), std::string(kBegin), std::string(kEnd),
                                     std::string(kUnknown)};
  const std::vector<std::string> fixed = {"grasp", "respond", "confirm", "refuse", "(", ")", ";",
                                          std::string(kHumanTag), std::string(kActionTag), std::string(kAiTag)};
  tokens.insert(tokens.end(), fixed.begin(), fixed.end());
  std::set<std::string> seen(tokens.begin(), tokens.end());
  std::set<std::string> corpus;
  for (const auto& t : texts) {
    for (auto& tok : tokenize(t)) {
      if (!seen.count(tok)) corpus.insert(std::move(tok));
    }
  }
  tokens.insert(tokens.end(), corpus.begin(), corpus.end());
  return from_tokens(std::move(tokens));
}

std::optional<int> Vocab::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocab::id(std::string_view token) const {
  if (auto i = find(token)) return *i;
  throw Error(ErrorCode::UnknownToken, "token '" + std::string(token) + "' is not in the vocabulary");
}

std::vector<int> Vocab::encode(std::span<const std::string> tokens, bool map_unknown) const {
  std::vector<int> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (auto i = find(t)) out.push_back(*i);
    else if (map_unknown) out.push_back(unknown_id());
    else throw Error(ErrorCode::UnknownToken, "token '" + t + "' is not in the vocabulary");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Parameters

ModelParams::ModelParams(ModelDims dims) : dims_(dims) {
  if (dims.vocab_size <= 0 || dims.embed_dim <= 0 || dims.hidden_dim <= 0) {
    throw Error(ErrorCode::PreconditionFailed, "model dimensions must be positive");
  }
  const auto v = static_cast<std::size_t>(dims.vocab_size);
  const auto e = static_cast<std::size_t>(dims.embed_dim);
  const auto h = static_cast<std::size_t>(dims.hidden_dim);
  std::size_t offset = 0;
  auto add = [&](std::string name, std::size_t rows, std::size_t cols) {
    layout_.push_back({std::move(name), offset, rows, cols});
    offset += rows * cols;
  };
  add("embedding", v, e);
  add("input_weight", h, e);
  add("recurrent_weight", h, h);
  add("hidden_bias", h, 1);
  add("output_weight", v, h);
  add("output_bias", v, 1);
  values_.assign(offset, 0.0);
}

ModelParams ModelParams::random(ModelDims dims, std::uint64_t seed, double scale) {
  ModelParams p(dims);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, scale);
  for (auto& x : p.values_) x = normal(rng);
  // Biases start at zero.
  for (const auto* name : {"hidden_bias", "output_bias"}) {
    const auto& seg = p.segment(name);
    std::fill_n(p.values_.begin() + static_cast<std::ptrdiff_t>(seg.offset), seg.size(), 0.0);
  }
  return p;
}

std::vector<ParamSegment> ModelParams::layout() const { return layout_; }

const ParamSegment& ModelParams::segment(std::string_view name) const {
  for (const auto& s : layout_) {
    if (s.name == name) return s;
  }
  throw Error(ErrorCode::PreconditionFailed, "no parameter segment named '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

struct Shapes {
  std::size_t v, e, h;
  explicit Shapes(const ModelDims& d)
      : v(static_cast<std::size_t>(d.vocab_size)),
        e(static_cast<std::size_t>(d.embed_dim)),
        h(static_cast<std::size_t>(d.hidden_dim)) {}
};

void check_tokens(const ModelParams& params, std::span<const int> tokens) {
  for (int t : tokens) {
    if (t < 0 || t >= params.dims().vocab_size) {
      throw Error(ErrorCode::UnknownToken, "token id " + std::to_string(t) + " is outside the vocabulary");
    }
  }
}

// hidden <- tanh(W_in e(token) + W_rec hidden + b_h)
void recurrent_step(const ModelParams& params, const Shapes& s, int token, std::span<const double> prev,
                    std::span<double> next) {
  const double* w = params.values().data();
  const double* emb = w + params.embedding() + static_cast<std::size_t>(token) * s.e;
  const double* w_in = w + params.input_weight();
  const double* w_rec = w + params.recurrent_weight();
  const double* b_h = w + params.hidden_bias();
  for (std::size_t i = 0; i < s.h; ++i) {
    double a = b_h[i];
    const double* row_in = w_in + i * s.e;
    for (std::size_t k = 0; k < s.e; ++k) a += row_in[k] * emb[k];
    const double* row_rec = w_rec + i * s.h;
    for (std::size_t k = 0; k < s.h; ++k) a += row_rec[k] * prev[k];
    next[i] = std::tanh(a);
  }
}

// out <- log_softmax(W_out hidden + b_out)
void output_logprobs(const ModelParams& params, const Shapes& s, std::span<const double> hidden,
                     std::span<double> out) {
  const double* w = params.values().data();
  const double* w_out = w + params.output_weight();
  const double* b_out = w + params.output_bias();
  double max_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < s.v; ++j) {
    double z = b_out[j];
    const double* row = w_out + j * s.h;
    for (std::size_t k = 0; k < s.h; ++k) z += row[k] * hidden[k];
    out[j] = z;
    max_logit = std::max(max_logit, z);
  }
  double sum = 0.0;
  for (std::size_t j = 0; j < s.v; ++j) sum += std::exp(out[j] - max_logit);
  const double log_norm = max_logit + std::log(sum);
  for (std::size_t j = 0; j < s.v; ++j) out[j] -= log_norm;
}

// Hidden states h_0..h_{n-1} (h_t after reading tokens[t]) for the first n tokens.
std::vector<double> run_hidden(const ModelParams& params, const Shapes& s, std::span<const int> tokens,
                               std::size_t n) {
  std::vector<double> hs(n * s.h);
  std::vector<double> zero(s.h, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    std::span<const double> prev = t == 0 ? std::span<const double>(zero)
                                          : std::span<const double>(hs.data() + (t - 1) * s.h, s.h);
    recurrent_step(params, s, tokens[t], prev, std::span<double>(hs.data() + t * s.h, s.h));
  }
  return hs;
}

std::size_t count(const std::vector<bool>& mask) {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
}

struct MaskCounts {
  std::size_t action = 0;
  std::size_t response = 0;
};

MaskCounts check_batch(const ModelParams& params, std::span<const TrainingExample> batch) {
  if (batch.empty()) throw Error(ErrorCode::EmptyBatch, "loss needs at least one example");
  MaskCounts c;
  for (const auto& ex : batch) {
    check_example(ex);
    check_tokens(params, ex.tokens);
    const auto a = count(ex.action_mask);
    const auto r = count(ex.response_mask);
    if (a + r == 0) throw Error(ErrorCode::EmptyMask, "example has no masked token in either segment");
    c.action += a;
    c.response += r;
  }
  return c;
}

// Per-position loss weight: 1/N_a on action tokens, lambda/N_r on response tokens.
double position_weight(const TrainingExample& ex, std::size_t i, const MaskCounts& c, double lambda) {
  if (ex.action_mask[i]) return 1.0 / static_cast<double>(c.action);
  if (ex.response_mask[i]) return lambda / static_cast<double>(c.response);
  return 0.0;
}

std::size_t last_masked(const TrainingExample& ex) {
  for (std::size_t i = ex.tokens.size(); i-- > 0;) {
    if (ex.action_mask[i] || ex.response_mask[i]) return i;
  }
  return 0;
}

}  // namespace

void check_example(const TrainingExample& ex) {
  const auto n = ex.tokens.size();
  if (ex.action_mask.size() != n || ex.response_mask.size() != n) {
    throw Error(ErrorCode::PreconditionFailed, "mask length differs from token count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (ex.action_mask[i] && ex.response_mask[i]) {
      throw Error(ErrorCode::PreconditionFailed, "action and response masks overlap");
    }
  }
  if (n > 0 && (ex.action_mask[0] || ex.response_mask[0])) {
    throw Error(ErrorCode::PreconditionFailed, "position 0 has no prediction and cannot be masked");
  }
}

std::vector<std::vector<double>> next_token_logdists(const ModelParams& params, std::span<const int> tokens) {
  check_tokens(params, tokens);
  const Shapes s(params.dims());
  const auto hs = run_hidden(params, s, tokens, tokens.size());
  std::vector<std::vector<double>> out(tokens.size(), std::vector<double>(s.v));
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    output_logprobs(params, s, std::span<const double>(hs.data() + t * s.h, s.h), out[t]);
  }
  return out;
}

std::vector<double> token_logprobs(const ModelParams& params, std::span<const int> tokens) {
  check_tokens(params, tokens);
  const Shapes s(params.dims());
  std::vector<double> out(tokens.size(), 0.0);
  if (tokens.size() < 2) return out;
  const auto hs = run_hidden(params, s, tokens, tokens.size() - 1);
  std::vector<double> dist(s.v);
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    output_logprobs(params, s, std::span<const double>(hs.data() + (i - 1) * s.h, s.h), dist);
    out[i] = dist[static_cast<std::size_t>(tokens[i])];
  }
  return out;
}

double segment_logprob(const ModelParams& params, std::span<const int> tokens, const std::vector<bool>& mask) {
  if (mask.size() != tokens.size()) throw Error(ErrorCode::PreconditionFailed, "mask length differs from token count");
  if (count(mask) == 0) throw Error(ErrorCode::EmptyMask, "segment mask selects no token");
  if (mask[0]) throw Error(ErrorCode::PreconditionFailed, "position 0 has no prediction and cannot be masked");
  const auto lp = token_logprobs(params, tokens);
  double sum = 0.0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (mask[i]) sum += lp[i];
  }
  return sum;
}

JointLoss loss_joint(const ModelParams& params, std::span<const TrainingExample> batch, double lambda) {
  const MaskCounts c = check_batch(params, batch);
  const Shapes s(params.dims());
  double nll_action = 0.0;
  double nll_response = 0.0;
  std::vector<double> dist(s.v);
  for (const auto& ex : batch) {
    const std::size_t last = last_masked(ex);
    const auto hs = run_hidden(params, s, ex.tokens, last);
    for (std::size_t i = 1; i <= last; ++i) {
      if (!ex.action_mask[i] && !ex.response_mask[i]) continue;
      output_logprobs(params, s, std::span<const double>(hs.data() + (i - 1) * s.h, s.h), dist);
      const double nll = -dist[static_cast<std::size_t>(ex.tokens[i])];
      (ex.action_mask[i] ? nll_action : nll_response) += nll;
    }
  }
  JointLoss loss;
  loss.action = c.action ? nll_action / static_cast<double>(c.action) : 0.0;
  loss.response = c.response ? nll_response / static_cast<double>(c.response) : 0.0;
  loss.total = loss.action + lambda * loss.response;
  return loss;
}

LossAndGradient loss_and_gradient(const ModelParams& params, std::span<const TrainingExample> batch,
                                  double lambda) {
  const MaskCounts c = check_batch(params, batch);
  const Shapes s(params.dims());
  const double* w = params.values().data();
  std::vector<double> grad(params.size(), 0.0);
  double* g = grad.data();
  const std::size_t o_emb = params.embedding(), o_in = params.input_weight(), o_rec = params.recurrent_weight(),
                    o_bh = params.hidden_bias(), o_out = params.output_weight(), o_bout = params.output_bias();

  double nll_action = 0.0;
  double nll_response = 0.0;
  std::vector<double> dist(s.v);
  std::vector<double> da(s.h);
  std::vector<double> dprev(s.h);

  for (const auto& ex : batch) {
    const std::size_t last = last_masked(ex);
    if (last == 0) continue;
    const auto hs = run_hidden(params, s, ex.tokens, last);
    // dL/dh_t for t in [0, last).
    std::vector<double> dh(last * s.h, 0.0);

    for (std::size_t i = 1; i <= last; ++i) {
      const double weight = position_weight(ex, i, c, lambda);
      if (weight == 0.0 && !ex.action_mask[i] && !ex.response_mask[i]) continue;
      const double* h = hs.data() + (i - 1) * s.h;
      output_logprobs(params, s, std::span<const double>(h, s.h), dist);
      const auto target = static_cast<std::size_t>(ex.tokens[i]);
      (ex.action_mask[i] ? nll_action : nll_response) += -dist[target];
      if (weight == 0.0) continue;
      double* dhi = dh.data() + (i - 1) * s.h;
      for (std::size_t j = 0; j < s.v; ++j) {
        const double dz = weight * (std::exp(dist[j]) - (j == target ? 1.0 : 0.0));
        g[o_bout + j] += dz;
        const double* row = w + o_out + j * s.h;
        double* grow = g + o_out + j * s.h;
        for (std::size_t k = 0; k < s.h; ++k) {
          grow[k] += dz * h[k];
          dhi[k] += dz * row[k];
        }
      }
    }

    // Backpropagation through time.
    for (std::size_t t = last; t-- > 0;) {
      const double* h = hs.data() + t * s.h;
      const double* dht = dh.data() + t * s.h;
      for (std::size_t i = 0; i < s.h; ++i) da[i] = dht[i] * (1.0 - h[i] * h[i]);
      const auto tok = static_cast<std::size_t>(ex.tokens[t]);
      const double* emb = w + o_emb + tok * s.e;
      double* gemb = g + o_emb + tok * s.e;
      const double* hprev = t > 0 ? hs.data() + (t - 1) * s.h : nullptr;
      std::fill(dprev.begin(), dprev.end(), 0.0);
      for (std::size_t i = 0; i < s.h; ++i) {
        const double d = da[i];
        if (d == 0.0) continue;
        g[o_bh + i] += d;
        const double* row_in = w + o_in + i * s.e;
        double* grow_in = g + o_in + i * s.e;
        for (std::size_t k = 0; k < s.e; ++k) {
          grow_in[k] += d * emb[k];
          gemb[k] += d * row_in[k];
        }
        if (hprev) {
          const double* row_rec = w + o_rec + i * s.h;
          double* grow_rec = g + o_rec + i * s.h;
          for (std::size_t k = 0; k < s.h; ++k) {
            grow_rec[k] += d * hprev[k];
            dprev[k] += d * row_rec[k];
          }
        }
      }
      if (t > 0) {
        double* dhp = dh.data() + (t - 1) * s.h;
        for (std::size_t k = 0; k < s.h; ++k) dhp[k] += dprev[k];
      }
    }
  }

  LossAndGradient out;
  out.loss.action = c.action ? nll_action / static_cast<double>(c.action) : 0.0;
  out.loss.response = c.response ? nll_response / static_cast<double>(c.response) : 0.0;
  out.loss.total = out.loss.action + lambda * out.loss.response;
  out.gradient = std::move(grad);
  return out;
}

std::vector<double> gradient(const ModelParams& params, std::span<const TrainingExample> batch, double lambda) {
  return loss_and_gradient(params, batch, lambda).gradient;
}

// ---------------------------------------------------------------------------
// Training

TrainResult train(ModelParams params, std::span<const TrainingExample> corpus, const TrainConfig& config) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyBatch, "training corpus is empty");
  if (config.lambda < 0.0 || config.learning_rate <= 0.0 || config.epochs <= 0 || config.batch_size <= 0) {
    throw Error(ErrorCode::PreconditionFailed, "invalid training configuration");
  }
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<double> m(params.size(), 0.0), v(params.size(), 0.0);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);
  std::vector<TrainingExample> batch;
  std::uint64_t step = 0;

  TrainResult result;
  result.loss_trace.push_back(loss_joint(params, corpus, config.lambda).total);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(corpus[order[i]]);
      auto g = gradient(params, batch, config.lambda);

      double norm = 0.0;
      for (double x : g) norm += x * x;
      norm = std::sqrt(norm);
      const double clip = (config.clip_norm > 0.0 && norm > config.clip_norm) ? config.clip_norm / norm : 1.0;

      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      auto p = params.values();
      for (std::size_t k = 0; k < p.size(); ++k) {
        const double gk = g[k] * clip;
        m[k] = beta1 * m[k] + (1.0 - beta1) * gk;
        v[k] = beta2 * v[k] + (1.0 - beta2) * gk * gk;
        p[k] -= config.learning_rate * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
      }
    }
    result.loss_trace.push_back(loss_joint(params, corpus, config.lambda).total);
  }
  result.params = std::move(params);
  return result;
}

// ---------------------------------------------------------------------------
// Decoding

RecurrentState::RecurrentState(const ModelParams& params)
    : params_(&params), hidden_(static_cast<std::size_t>(params.dims().hidden_dim), 0.0) {}

void RecurrentState::feed(int token) {
  check_tokens(*params_, std::span<const int>(&token, 1));
  std::vector<double> next(hidden_.size());
  recurrent_step(*params_, Shapes(params_->dims()), token, hidden_, next);
  hidden_ = std::move(next);
}

std::vector<double> RecurrentState::log_distribution() const {
  const Shapes s(params_->dims());
  std::vector<double> out(s.v);
  output_logprobs(*params_, s, hidden_, out);
  return out;
}

namespace {

std::optional<ActionToken> grammar_class(const std::string& tok, const std::set<std::string>* labels) {
  if (tok == "grasp") return ActionToken::Grasp;
  if (tok == "respond") return ActionToken::Respond;
  if (tok == "confirm") return ActionToken::Confirm;
  if (tok == "refuse") return ActionToken::Refuse;
  if (tok == "(") return ActionToken::LParen;
  if (tok == ")") return ActionToken::RParen;
  if (tok == ";") return ActionToken::Semicolon;
  if (tok == kAiTag) return ActionToken::End;
  if (!is_valid_label(tok)) return std::nullopt;
  if (labels && !labels->count(tok)) return std::nullopt;
  return ActionToken::Label;
}

}  // namespace

ActionSequence decode_actions_constrained(const ModelParams& params, const Vocab& vocab,
                                          std::span<const int> prompt, const DecodeOptions& options) {
  if (static_cast<std::size_t>(params.dims().vocab_size) != vocab.size()) {
    throw Error(ErrorCode::PreconditionFailed, "model and vocabulary sizes differ");
  }
  std::set<std::string> label_set;
  if (options.labels) label_set.insert(options.labels->begin(), options.labels->end());
  const std::set<std::string>* labels = options.labels ? &label_set : nullptr;

  std::vector<std::optional<ActionToken>> classes(vocab.size());
  bool any_label = false;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    classes[i] = grammar_class(vocab.token(static_cast<int>(i)), labels);
    any_label = any_label || classes[i] == ActionToken::Label;
  }

  RecurrentState state(params);
  for (int t : prompt) state.feed(t);

  ActionGrammarState grammar;
  std::vector<std::string> emitted;
  int used = 0;
  while (!grammar.done()) {
    const auto dist = state.log_distribution();
    int best = -1;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      const auto cls = classes[i];
      if (!cls || !grammar.allows(*cls)) continue;
      if (*cls == ActionToken::Grasp && !any_label) continue;
      ActionGrammarState after = grammar;
      after.advance(*cls);
      if (used + 1 + after.min_tokens_to_finish() > options.max_tokens) continue;
      if (best < 0 || dist[i] > dist[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    if (best < 0) {
      throw Error(ErrorCode::MaxLengthExceeded,
                  "no complete action sequence fits in " + std::to_string(options.max_tokens) + " tokens");
    }
    grammar.advance(*classes[static_cast<std::size_t>(best)]);
    ++used;
    if (grammar.done()) break;
    emitted.push_back(vocab.token(best));
    state.feed(best);
  }
  std::string text;
  for (const auto& t : emitted) text += t + " ";
  return parse_actions(text);
}

std::string decode_response(const ModelParams& params, const Vocab& vocab, std::span<const int> prompt,
                            int max_tokens) {
  RecurrentState state(params);
  for (int t : prompt) state.feed(t);
  const auto stop_human = vocab.find(kHumanTag), stop_action = vocab.find(kActionTag), stop_ai = vocab.find(kAiTag);
  std::vector<std::string> words;
  for (int step = 0; step < max_tokens; ++step) {
    const auto dist = state.log_distribution();
    int best = -1;
    for (std::size_t i = 0; i < dist.size(); ++i) {
      const int id = static_cast<int>(i);
      if (id == vocab.pad_id() || id == vocab.begin_id() || id == vocab.unknown_id()) continue;
      if (best < 0 || dist[i] > dist[static_cast<std::size_t>(best)]) best = id;
    }
    if (best == vocab.end_id() || best == stop_human || best == stop_action || best == stop_ai) break;
    words.push_back(vocab.token(best));
    state.feed(best);
  }
  return detokenize(words);
}

// ---------------------------------------------------------------------------
// Data and checkpoints

TrainingExample make_example(const Vocab& vocab, std::string_view context, std::string_view actions,
                             std::string_view response, bool map_unknown) {
  std::vector<std::string> ctx = tokenize(context);
  ctx.emplace_back(kActionTag);
  std::vector<std::string> act = tokenize(actions);
  act.emplace_back(kAiTag);
  std::vector<std::string> resp = tokenize(response);
  resp.emplace_back(Vocab::kEnd);

  TrainingExample ex;
  ex.tokens.push_back(vocab.begin_id());
  for (int id : vocab.encode(ctx, map_unknown)) ex.tokens.push_back(id);
  const std::size_t action_start = ex.tokens.size();
  for (int id : vocab.encode(act, map_unknown)) ex.tokens.push_back(id);
  const std::size_t response_start = ex.tokens.size();
  for (int id : vocab.encode(resp, map_unknown)) ex.tokens.push_back(id);

  const std::size_t n = ex.tokens.size();
  ex.action_mask.assign(n, false);
  ex.response_mask.assign(n, false);
  for (std::size_t i = action_start; i < response_start; ++i) ex.action_mask[i] = true;
  for (std::size_t i = response_start; i < n; ++i) ex.response_mask[i] = true;
  return ex;
}

void save_checkpoint(const ToyModel& model, const std::filesystem::path& path) {
  using nlohmann::json;
  const auto& d = model.params.dims();
  json segments = json::array();
  for (const auto& seg : model.params.layout()) {
    auto vals = model.params.values().subspan(seg.offset, seg.size());
    segments.push_back({{"name", seg.name},
                        {"rows", seg.rows},
                        {"cols", seg.cols},
                        {"data", std::vector<double>(vals.begin(), vals.end())}});
  }
  json doc = {{"format", "manidialog-toy-checkpoint"},
              {"version", kCheckpointVersion},
              {"dims", {{"vocab_size", d.vocab_size}, {"embed_dim", d.embed_dim}, {"hidden_dim", d.hidden_dim}}},
              {"vocab", model.vocab.tokens()},
              {"segments", segments}};
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write checkpoint " + path.string());
  out << doc.dump() << '\n';
}

ToyModel load_checkpoint(const std::filesystem::path& path) {
  using nlohmann::json;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open checkpoint " + path.string());
  try {
    json doc = json::parse(in);
    if (doc.at("format") != "manidialog-toy-checkpoint") throw Error(ErrorCode::ParseError, "not a toy checkpoint");
    if (doc.at("version").get<int>() != kCheckpointVersion) {
      throw Error(ErrorCode::ParseError, "unsupported checkpoint version " + doc.at("version").dump());
    }
    ModelDims dims;
    dims.vocab_size = doc.at("dims").at("vocab_size").get<int>();
    dims.embed_dim = doc.at("dims").at("embed_dim").get<int>();
    dims.hidden_dim = doc.at("dims").at("hidden_dim").get<int>();
    ToyModel model;
    model.vocab = Vocab::from_tokens(doc.at("vocab").get<std::vector<std::string>>());
    model.params = ModelParams(dims);
    if (model.vocab.size() != static_cast<std::size_t>(dims.vocab_size)) {
      throw Error(ErrorCode::ParseError, "vocabulary size does not match dims");
    }
    for (const auto& seg : doc.at("segments")) {
      const auto& target = model.params.segment(seg.at("name").get<std::string>());
      const auto data = seg.at("data").get<std::vector<double>>();
      if (seg.at("rows").get<std::size_t>() != target.rows || seg.at("cols").get<std::size_t>() != target.cols ||
          data.size() != target.size()) {
        throw Error(ErrorCode::ParseError, "segment '" + target.name + "' has the wrong shape");
      }
      std::copy(data.begin(), data.end(), model.params.values().begin() + static_cast<std::ptrdiff_t>(target.offset));
    }
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("checkpoint: ") + e.what());
  }
}

}  // namespace manidialog::toy
