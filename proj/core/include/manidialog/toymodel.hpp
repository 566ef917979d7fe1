#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "manidialog/actions.hpp"

namespace manidialog::toy {

// ---------------------------------------------------------------------------
// Tokens

/// Word-level tokenizer: lowercased words, one token per punctuation mark,
/// role tags ("Human:", "Action:", "AI:") kept whole.
std::vector<std::string> tokenize(std::string_view text);
std::string detokenize(std::span<const std::string> tokens);

class Vocab {
 public:
  static constexpr std::string_view kPad = "<pad>";
  static constexpr std::string_view kBegin = "<bos>";
  static constexpr std::string_view kEnd = "<eos>";
  static constexpr std::string_view kUnknown = "<unk>";

  /// Specials, grammar terminals and role tags first, then every token of
  /// `texts` in sorted order.
  static Vocab build(std::span<const std::string> texts);
  static Vocab from_tokens(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  std::optional<int> find(std::string_view token) const;
  /// Throws UnknownToken.
  int id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Throws UnknownToken on an out-of-vocabulary token unless `map_unknown`.
  std::vector<int> encode(std::span<const std::string> tokens, bool map_unknown = false) const;

  int pad_id() const { return 0; }
  int begin_id() const { return 1; }
  int end_id() const { return 2; }
  int unknown_id() const { return 3; }

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// ---------------------------------------------------------------------------
// Parameters

struct ModelDims {
  int vocab_size = 0;
  int embed_dim = 24;
  int hidden_dim = 64;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct ParamSegment {
  std::string name;
  std::size_t offset = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t size() const { return rows * cols; }
};

/// Flat parameter vector of a single-layer Elman network:
///   h_t = tanh(W_in e(x_t) + W_rec h_{t-1} + b_h),  logits_t = W_out h_t + b_out.
/// One parameter set serves both the action and the response segments.
class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(ModelDims dims);

  /// All-zero parameters give a uniform next-token distribution.
  static ModelParams zeros(ModelDims dims) { return ModelParams(dims); }
  static ModelParams random(ModelDims dims, std::uint64_t seed, double scale = 0.1);

  const ModelDims& dims() const { return dims_; }
  std::vector<ParamSegment> layout() const;
  const ParamSegment& segment(std::string_view name) const;

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }

  // Offsets into values().
  std::size_t embedding() const { return layout_[0].offset; }
  std::size_t input_weight() const { return layout_[1].offset; }
  std::size_t recurrent_weight() const { return layout_[2].offset; }
  std::size_t hidden_bias() const { return layout_[3].offset; }
  std::size_t output_weight() const { return layout_[4].offset; }
  std::size_t output_bias() const { return layout_[5].offset; }

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    return a.dims_ == b.dims_ && a.values_ == b.values_;
  }

 private:
  ModelDims dims_;
  std::vector<ParamSegment> layout_;
  std::vector<double> values_;
};

// ---------------------------------------------------------------------------
// Model evaluation

struct TrainingExample {
  std::vector<int> tokens;
  std::vector<bool> action_mask;    // true on action-segment tokens
  std::vector<bool> response_mask;  // true on response-segment tokens
};

/// Throws PreconditionFailed on mismatched sizes, overlapping masks, or a
/// mask on position 0.
void check_example(const TrainingExample& example);

/// result[i] = log P(tokens[i] | tokens[0..i)) for i >= 1; result[0] = 0.
/// Throws UnknownToken for ids outside the vocabulary.
std::vector<double> token_logprobs(const ModelParams& params, std::span<const int> tokens);

/// Row i is the log next-token distribution after reading tokens[0..i].
std::vector<std::vector<double>> next_token_logdists(const ModelParams& params, std::span<const int> tokens);

/// Sum of token log-probabilities over masked positions. Throws EmptyMask.
double segment_logprob(const ModelParams& params, std::span<const int> tokens, const std::vector<bool>& mask);

struct JointLoss {
  double total = 0.0;     // action + lambda * response
  double action = 0.0;    // mean NLL over action-masked tokens of the batch
  double response = 0.0;  // mean NLL over response-masked tokens of the batch
};

/// Throws EmptyBatch for an empty batch and EmptyMask for an example with no
/// masked token in either segment.
JointLoss loss_joint(const ModelParams& params, std::span<const TrainingExample> batch, double lambda);

/// Exact gradient of loss_joint(...).total.
std::vector<double> gradient(const ModelParams& params, std::span<const TrainingExample> batch, double lambda);

struct LossAndGradient {
  JointLoss loss;
  std::vector<double> gradient;
};
LossAndGradient loss_and_gradient(const ModelParams& params, std::span<const TrainingExample> batch,
                                  double lambda);

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  double lambda = 1.0;
  double learning_rate = 0.01;
  int epochs = 12;
  int batch_size = 16;
  std::uint64_t seed = 7;
  double init_scale = 0.1;
  double clip_norm = 5.0;
};

struct TrainResult {
  ModelParams params;
  /// loss_trace[0] is the corpus loss before training, then one entry per epoch.
  std::vector<double> loss_trace;
};

/// Adam over shuffled mini-batches. Deterministic for a given seed.
TrainResult train(ModelParams params, std::span<const TrainingExample> corpus, const TrainConfig& config);

// ---------------------------------------------------------------------------
// Decoding

class RecurrentState {
 public:
  explicit RecurrentState(const ModelParams& params);
  void feed(int token);
  /// Log next-token distribution given everything fed so far.
  std::vector<double> log_distribution() const;

 private:
  const ModelParams* params_;
  std::vector<double> hidden_;
};

struct DecodeOptions {
  /// Token budget including the closing "AI:" tag.
  int max_tokens = 32;
  /// Restricts grasp targets; when unset any label-like vocabulary token is allowed.
  std::optional<std::vector<std::string>> labels;
};

/// Greedy decoding masked to the action grammar. `prompt` should end with the
/// "Action:" tag. Throws MaxLengthExceeded when the budget cannot hold any
/// complete sequence.
ActionSequence decode_actions_constrained(const ModelParams& params, const Vocab& vocab,
                                          std::span<const int> prompt, const DecodeOptions& options = {});

/// Greedy free-text decoding until <eos> or a role tag.
std::string decode_response(const ModelParams& params, const Vocab& vocab, std::span<const int> prompt,
                            int max_tokens = 40);

// ---------------------------------------------------------------------------
// Data and checkpoints

/// Renders one turn as a joint example: context tokens, then the action
/// tokens and the "AI:" tag (action mask), then the response and <eos>
/// (response mask).
TrainingExample make_example(const Vocab& vocab, std::string_view context, std::string_view actions,
                             std::string_view response, bool map_unknown = false);

struct ToyModel {
  Vocab vocab;
  ModelParams params;
};

inline constexpr int kCheckpointVersion = 1;

void save_checkpoint(const ToyModel& model, const std::filesystem::path& path);
ToyModel load_checkpoint(const std::filesystem::path& path);

}  // namespace manidialog::toy
