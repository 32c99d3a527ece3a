#pragma once
// The assembled satisfaction/breakdown predictor: context expansion with
// boundary markers, word and character bi-LSTM encoders over user and system
// sides, attention pooling over the context window's scaled feature vectors,
// one unidirectional turn-level LSTM, and a softmax or sigmoid head. The
// same per-turn code path serves batch and incremental prediction, so the
// two agree bitwise.

#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "convsat/adam.hpp"
#include "convsat/autodiff.hpp"
#include "convsat/conv_data.hpp"
#include "convsat/features.hpp"
#include "convsat/layers.hpp"
#include "convsat/param_store.hpp"
#include "convsat/text.hpp"

namespace convsat {

enum class HeadKind { Softmax3, Sigmoid1 };
enum class PredictionMode { Online, Offline };
enum class Task { Breakdown, SatOnline, SatOffline };

std::string to_string(HeadKind h);
std::string to_string(PredictionMode m);
std::string to_string(Task t);
HeadKind head_from_string(const std::string& s);
PredictionMode mode_from_string(const std::string& s);
Task task_from_string(const std::string& s);
HeadKind head_for_task(Task t);
PredictionMode mode_for_task(Task t);

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ModelConfig {
  int window = 3;
  int word_emb_dim = 300;
  int char_emb_dim = 32;
  int word_hidden = 100;
  int char_hidden = 32;
  int turn_hidden = 128;
  HeadKind head = HeadKind::Sigmoid1;
  PredictionMode mode = PredictionMode::Online;
  bool use_chars = true;
  bool use_features = true;
  bool freeze_word_emb = false;
  double dropout_p = 0.5;
  double lr = 1e-4;
  int max_tokens_per_side = 128;
  int min_count = 1;
  FeatureSchema schema = alexa_full_schema();

  int feature_dim() const { return use_features ? schema.enabled_count() : 0; }
  int encoder_dim() const { return 4 * word_hidden + (use_chars ? 4 * char_hidden : 0); }
  int turn_dim() const { return encoder_dim() + feature_dim(); }
  int output_dim() const { return head == HeadKind::Softmax3 ? 3 : 1; }

  void validate() const;
  std::string to_json_string() const;  // canonical: sorted keys, stable layout
  static ModelConfig from_json_string(const std::string& text);
};

// Presets: "convsat" (full-scale defaults), "dbdc3" (word hidden 64,
// text-only feature subset, softmax head), "lstm" (W=1, words only),
// "clstm" (W=3, words only).
ModelConfig model_preset(const std::string& name);
void apply_task(ModelConfig& config, Task task);  // sets head and mode

// ---------------------------------------------------------------------------
// Vocabulary and characters
// ---------------------------------------------------------------------------

struct Vocab {
  static constexpr int kPad = 0, kUnk = 1, kUEnd = 2, kREnd = 3;
  static constexpr const char* kPadToken = "<PAD>";
  static constexpr const char* kUnkToken = "<UNK>";
  static constexpr const char* kUEndToken = "<U-END>";
  static constexpr const char* kREndToken = "<R-END>";

  std::vector<std::string> id_to_token;  // reserved entries first
  std::unordered_map<std::string, int> token_to_id;

  int size() const { return static_cast<int>(id_to_token.size()); }
  int id_of(const std::string& token) const {
    auto it = token_to_id.find(token);
    return it == token_to_id.end() ? kUnk : it->second;
  }

  std::string to_json_string() const;
  static Vocab from_json_string(const std::string& text);
};

// Tokens with corpus frequency >= min_count, ids assigned by frequency
// descending then lexicographic; everything else resolves to UNK later.
Vocab build_vocab(const std::vector<Conversation>& train, int min_count);

// Character inventory: 0 = unknown char, 1/2 = the two boundary markers,
// 3..97 = printable ASCII 32..126.
constexpr int kCharUnk = 0, kCharUEnd = 1, kCharREnd = 2;
constexpr int kCharInventory = 98;
int char_id(char c);
// Flattens tokens to one char-id sequence; boundary tokens collapse to their
// single reserved id so marker spelling never leaks into char statistics.
std::vector<int> chars_of(const std::vector<std::string>& tokens);

// ---------------------------------------------------------------------------
// Context expansion
// ---------------------------------------------------------------------------

struct ExpandedTurn {
  std::vector<std::string> utterance_tokens;  // each window turn + <U-END>
  std::vector<std::string> response_tokens;   // each window turn + <R-END>
};

// Tokens of turns max(1, i-window+1)..i with a boundary marker after every
// turn; each side keeps at most max_tokens_per_side tokens, truncated from
// the left so the most recent context survives.
ExpandedTurn expand_context(const std::vector<Turn>& turns, int i, int window,
                            int max_tokens_per_side);

// ---------------------------------------------------------------------------
// Decisions
// ---------------------------------------------------------------------------

struct Decision {
  int class_index = 0;
  double probability = 0.0;  // probability of the predicted class
};

template <typename T>
Decision decide(const std::vector<T>& distribution, HeadKind head) {
  if (head == HeadKind::Softmax3) {
    if (distribution.size() != 3)
      throw std::invalid_argument("softmax head expects a 3-class distribution");
    int best = 0;
    for (int i = 1; i < 3; ++i)
      if (distribution[i] >= distribution[best]) best = i;  // ties toward severe
    return {best, static_cast<double>(distribution[best])};
  }
  if (distribution.size() != 1)
    throw std::invalid_argument("sigmoid head expects a single probability");
  const double p = static_cast<double>(distribution[0]);
  return p > 0.5 ? Decision{1, p} : Decision{0, 1.0 - p};
}

std::string label_name(Task task, int class_index);
int gold_class_of_turn(const Turn& turn, Task task);  // -1 when absent

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

template <typename T>
class ConvSatModel {
 public:
  using FeatureRows = std::vector<std::vector<double>>;  // scaled, one per turn

  ConvSatModel(ModelConfig config, Vocab vocab, std::uint64_t seed)
      : config_(std::move(config)), vocab_(std::move(vocab)), extractor_(config_.schema) {
    config_.validate();
    init_params(seed);
  }

  ConvSatModel(ModelConfig config, Vocab vocab, ParamStore<T> params)
      : config_(std::move(config)),
        vocab_(std::move(vocab)),
        extractor_(config_.schema),
        params_(std::move(params)) {
    config_.validate();
    check_param_layout();
  }

  const ModelConfig& config() const { return config_; }
  const Vocab& vocab() const { return vocab_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  struct OnlineState {
    std::vector<T> h, c;                             // turn-LSTM carry
    std::vector<Turn> window_turns;                  // last <= W turns
    FeatureExtractor::State feat_state;              // streaming feature state
    std::deque<std::vector<double>> window_features; // scaled rows, oldest first
    int turns_seen = 0;
  };

  OnlineState new_state() const {
    OnlineState st;
    st.h.assign(static_cast<std::size_t>(config_.turn_hidden), T(0));
    st.c.assign(static_cast<std::size_t>(config_.turn_hidden), T(0));
    st.feat_state = extractor_.new_state();
    return st;
  }

  // One incremental step; returns the head distribution for this turn.
  std::vector<T> predict_online_step(OnlineState& state, const Conversation& conv,
                                     const Turn& turn) const {
    return step_impl(state, conv, turn, nullptr);
  }

  // Per-turn distributions over the whole conversation (evaluation mode).
  std::vector<std::vector<T>> forward_online(const Conversation& conv,
                                             const FeatureRows* feature_override = nullptr) const {
    if (conv.turns.empty()) throw std::invalid_argument("conversation " + conv.id + " is empty");
    check_override(conv, feature_override);
    OnlineState st = new_state();
    std::vector<std::vector<T>> out;
    out.reserve(conv.turns.size());
    for (std::size_t t = 0; t < conv.turns.size(); ++t)
      out.push_back(step_impl(st, conv, conv.turns[t],
                              feature_override ? &(*feature_override)[t] : nullptr));
    return out;
  }

  // Conversation-level distribution: the final state's head output.
  std::vector<T> forward_offline(const Conversation& conv,
                                 const FeatureRows* feature_override = nullptr) const {
    return forward_online(conv, feature_override).back();
  }

  struct TrainForward {
    int loss = -1;   // tape node holding the sum of per-example losses
    int examples = 0;
  };

  // Training forward on the caller's tape (gradients flow through the whole
  // conversation). gold holds one class per turn in online mode and exactly
  // one class in offline mode.
  TrainForward train_forward(Tape<T>& tape, const Conversation& conv,
                             const std::vector<int>& gold, std::mt19937_64& dropout_rng,
                             const FeatureRows* feature_override = nullptr) const {
    if (conv.turns.empty()) throw std::invalid_argument("conversation " + conv.id + " is empty");
    check_override(conv, feature_override);
    const bool online = config_.mode == PredictionMode::Online;
    const std::size_t expected = online ? conv.turns.size() : 1;
    if (gold.size() != expected)
      throw std::invalid_argument("conversation " + conv.id + ": expected " +
                                  std::to_string(expected) + " gold labels, got " +
                                  std::to_string(gold.size()));

    int h = tape.input(std::vector<T>(static_cast<std::size_t>(config_.turn_hidden), T(0)));
    int c = tape.input(std::vector<T>(static_cast<std::size_t>(config_.turn_hidden), T(0)));
    std::vector<Turn> window;
    std::deque<std::vector<double>> feat_rows;
    auto feat_state = extractor_.new_state();
    std::vector<int> losses;
    for (std::size_t t = 0; t < conv.turns.size(); ++t) {
      const Turn& turn = conv.turns[t];
      push_window(window, turn);
      if (config_.use_features)
        push_features(feat_rows, feat_state, conv, turn,
                      feature_override ? &(*feature_override)[t] : nullptr);
      int turn_vec = encode_turn_node(tape, window, feat_rows);
      LstmStep s = lstm_cell(tape, "turn", static_cast<std::size_t>(config_.turn_hidden),
                             turn_vec, h, c);
      h = s.h;
      c = s.c;
      const bool scored = online || t + 1 == conv.turns.size();
      if (!scored) continue;
      int hd = tape.dropout(h, static_cast<T>(config_.dropout_p), dropout_rng);
      int dist = head_node(tape, hd);
      const int y = online ? gold[t] : gold[0];
      losses.push_back(loss_node(tape, dist, y));
    }
    return {tape.sum(losses), static_cast<int>(losses.size())};
  }

 private:
  // --- parameter layout ----------------------------------------------------
  std::vector<std::pair<std::string, std::vector<std::size_t>>> expected_layout() const {
    using Shape = std::vector<std::size_t>;
    const auto H = [](int v) { return static_cast<std::size_t>(v); };
    std::vector<std::pair<std::string, Shape>> out;
    out.emplace_back("word_emb", Shape{H(vocab_.size()), H(config_.word_emb_dim)});
    if (config_.use_chars)
      out.emplace_back("char_emb", Shape{H(kCharInventory), H(config_.char_emb_dim)});
    auto lstm = [&out, &H](const std::string& prefix, int in, int hidden) {
      out.emplace_back(prefix + ".Wx", Shape{4 * H(hidden), H(in)});
      out.emplace_back(prefix + ".Wh", Shape{4 * H(hidden), H(hidden)});
      out.emplace_back(prefix + ".b", Shape{4 * H(hidden)});
    };
    for (const char* side : {"enc_u", "enc_r"}) {
      lstm(std::string(side) + "_fwd", config_.word_emb_dim, config_.word_hidden);
      lstm(std::string(side) + "_bwd", config_.word_emb_dim, config_.word_hidden);
    }
    if (config_.use_chars)
      for (const char* side : {"cenc_u", "cenc_r"}) {
        lstm(std::string(side) + "_fwd", config_.char_emb_dim, config_.char_hidden);
        lstm(std::string(side) + "_bwd", config_.char_emb_dim, config_.char_hidden);
      }
    if (config_.use_features) {
      const auto d = H(config_.feature_dim());
      out.emplace_back("attn.M", Shape{d, d});
      out.emplace_back("attn.c", Shape{d});
      out.emplace_back("attn.b", Shape{d});
    }
    lstm("turn", config_.turn_dim(), config_.turn_hidden);
    out.emplace_back("out.W", Shape{H(config_.output_dim()), H(config_.turn_hidden)});
    out.emplace_back("out.b", Shape{H(config_.output_dim())});
    return out;
  }

  void init_params(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    params_.seed = seed;
    init_embedding(params_, "word_emb", static_cast<std::size_t>(vocab_.size()),
                   static_cast<std::size_t>(config_.word_emb_dim), rng);
    if (config_.use_chars)
      init_embedding(params_, "char_emb", kCharInventory,
                     static_cast<std::size_t>(config_.char_emb_dim), rng);
    auto lstm = [this, &rng](const std::string& prefix, int in, int hidden) {
      init_lstm(params_, prefix, static_cast<std::size_t>(in),
                static_cast<std::size_t>(hidden), rng);
    };
    for (const char* side : {"enc_u", "enc_r"}) {
      lstm(std::string(side) + "_fwd", config_.word_emb_dim, config_.word_hidden);
      lstm(std::string(side) + "_bwd", config_.word_emb_dim, config_.word_hidden);
    }
    if (config_.use_chars)
      for (const char* side : {"cenc_u", "cenc_r"}) {
        lstm(std::string(side) + "_fwd", config_.char_emb_dim, config_.char_hidden);
        lstm(std::string(side) + "_bwd", config_.char_emb_dim, config_.char_hidden);
      }
    if (config_.use_features)
      init_attention(params_, "attn", static_cast<std::size_t>(config_.feature_dim()), rng);
    lstm("turn", config_.turn_dim(), config_.turn_hidden);
    init_linear(params_, "out", static_cast<std::size_t>(config_.turn_hidden),
                static_cast<std::size_t>(config_.output_dim()), rng);
  }

  void check_param_layout() const {
    const auto expected = expected_layout();
    if (params_.count() != expected.size())
      throw std::invalid_argument("parameter store has " + std::to_string(params_.count()) +
                                  " tensors, configuration needs " +
                                  std::to_string(expected.size()));
    for (std::size_t i = 0; i < expected.size(); ++i) {
      if (params_.names()[i] != expected[i].first)
        throw std::invalid_argument("parameter " + std::to_string(i) + " is \"" +
                                    params_.names()[i] + "\", expected \"" +
                                    expected[i].first + "\"");
      if (params_.at(i).shape != expected[i].second)
        throw std::invalid_argument("parameter \"" + expected[i].first +
                                    "\" has an unexpected shape for this configuration");
    }
  }

  // --- shared per-turn plumbing --------------------------------------------
  void push_window(std::vector<Turn>& window, const Turn& turn) const {
    window.push_back(turn);
    if (static_cast<int>(window.size()) > config_.window) window.erase(window.begin());
  }

  void push_features(std::deque<std::vector<double>>& rows, FeatureExtractor::State& st,
                     const Conversation& conv, const Turn& turn,
                     const std::vector<double>* override_row) const {
    std::vector<double> row;
    if (override_row) {
      row = *override_row;
    } else {
      FeatureVector v = extractor_.advance(st, conv, turn);
      row = scale_feature_vector(v, turn.index, config_.schema).values;
    }
    rows.push_back(std::move(row));
    if (static_cast<int>(rows.size()) > config_.window) rows.pop_front();
  }

  void check_override(const Conversation& conv, const FeatureRows* rows) const {
    if (!rows) return;
    if (!config_.use_features)
      throw std::invalid_argument("feature override given but features are disabled");
    if (rows->size() != conv.turns.size())
      throw std::invalid_argument("feature override must cover every turn of " + conv.id);
    for (const auto& r : *rows)
      if (r.size() != static_cast<std::size_t>(config_.feature_dim()))
        throw std::invalid_argument("feature override row has wrong width for " + conv.id);
  }

  std::vector<int> embed_tokens(Tape<T>& tape, const std::vector<std::string>& tokens) const {
    std::vector<int> nodes;
    nodes.reserve(tokens.size());
    for (const auto& tok : tokens)
      nodes.push_back(tape.embed("word_emb", static_cast<std::size_t>(vocab_.id_of(tok))));
    return nodes;
  }

  std::vector<int> embed_chars(Tape<T>& tape, const std::vector<std::string>& tokens) const {
    std::vector<int> nodes;
    for (int id : chars_of(tokens))
      nodes.push_back(tape.embed("char_emb", static_cast<std::size_t>(id)));
    return nodes;
  }

  int encode_turn_node(Tape<T>& tape, const std::vector<Turn>& window,
                       const std::deque<std::vector<double>>& feat_rows) const {
    const ExpandedTurn et =
        expand_context(window, static_cast<int>(window.size()), config_.window,
                       config_.max_tokens_per_side);
    const auto wh = static_cast<std::size_t>(config_.word_hidden);
    std::vector<int> parts;
    parts.push_back(bilstm_last(tape, "enc_u_fwd", "enc_u_bwd", wh,
                                embed_tokens(tape, et.utterance_tokens)));
    parts.push_back(bilstm_last(tape, "enc_r_fwd", "enc_r_bwd", wh,
                                embed_tokens(tape, et.response_tokens)));
    if (config_.use_chars) {
      const auto ch = static_cast<std::size_t>(config_.char_hidden);
      parts.push_back(bilstm_last(tape, "cenc_u_fwd", "cenc_u_bwd", ch,
                                  embed_chars(tape, et.utterance_tokens)));
      parts.push_back(bilstm_last(tape, "cenc_r_fwd", "cenc_r_bwd", ch,
                                  embed_chars(tape, et.response_tokens)));
    }
    if (config_.use_features) {
      std::vector<int> rows;
      rows.reserve(feat_rows.size());
      for (const auto& r : feat_rows) {
        std::vector<T> cast(r.begin(), r.end());
        rows.push_back(tape.input(std::move(cast)));
      }
      parts.push_back(feature_attention(tape, "attn", rows).attended);
    }
    return tape.concat(parts);
  }

  int head_node(Tape<T>& tape, int h) const {
    int logits = linear(tape, "out", h);
    return config_.head == HeadKind::Softmax3 ? tape.softmax(logits)
                                              : tape.sigmoid_node(logits);
  }

  int loss_node(Tape<T>& tape, int dist, int gold) const {
    if (config_.head == HeadKind::Softmax3) {
      if (gold < 0 || gold > 2) throw std::invalid_argument("softmax gold must be 0..2");
      return tape.pick_neg_log(dist, static_cast<std::size_t>(gold));
    }
    return tape.bce(dist, gold);
  }

  std::vector<T> step_impl(OnlineState& state, const Conversation& conv, const Turn& turn,
                           const std::vector<double>* feat_override) const {
    push_window(state.window_turns, turn);
    if (config_.use_features)
      push_features(state.window_features, state.feat_state, conv, turn, feat_override);
    Tape<T> tape(params_);
    int h_prev = tape.input(state.h);
    int c_prev = tape.input(state.c);
    int turn_vec = encode_turn_node(tape, state.window_turns, state.window_features);
    LstmStep s = lstm_cell(tape, "turn", static_cast<std::size_t>(config_.turn_hidden),
                           turn_vec, h_prev, c_prev);
    int dist = head_node(tape, s.h);
    state.h = tape.value(s.h);
    state.c = tape.value(s.c);
    ++state.turns_seen;
    return tape.value(dist);
  }

  ModelConfig config_;
  Vocab vocab_;
  FeatureExtractor extractor_;
  ParamStore<T> params_;
};

// ---------------------------------------------------------------------------
// Bundles and embeddings
// ---------------------------------------------------------------------------

// On-disk bundle: params.bin + config.json + vocab.json. config.json embeds
// a hash of vocab.json, and params.bin embeds a hash of config.json, so a
// mixed-up bundle fails loudly instead of predicting garbage.
inline constexpr const char* kParamsFile = "params.bin";
inline constexpr const char* kConfigFile = "config.json";
inline constexpr const char* kVocabFile = "vocab.json";

std::string bundle_config_text(const ModelConfig& config, const std::string& vocab_text);

template <typename T>
void save_model(const ConvSatModel<T>& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string vocab_text = model.vocab().to_json_string();
  const std::string config_text = bundle_config_text(model.config(), vocab_text);
  auto write = [&dir](const char* name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + (dir / name).string() + " for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("failed writing " + (dir / name).string());
  };
  write(kVocabFile, vocab_text);
  write(kConfigFile, config_text);
  ParamStore<T> params = model.params();  // config hash binds params to this bundle
  params.config_hash = fnv1a64(config_text);
  save_params(params, dir / kParamsFile);
}

std::string read_file_text(const std::filesystem::path& path);
ModelConfig parse_bundle_config(const std::string& config_text, const std::string& vocab_text);

template <typename T>
ConvSatModel<T> load_model(const std::filesystem::path& dir) {
  const std::string vocab_text = read_file_text(dir / kVocabFile);
  const std::string config_text = read_file_text(dir / kConfigFile);
  ModelConfig config = parse_bundle_config(config_text, vocab_text);
  ParamStore<T> params = load_params<T>(dir / kParamsFile);
  if (params.config_hash != fnv1a64(config_text))
    throw std::runtime_error("bundle mismatch: " + (dir / kParamsFile).string() +
                             " was not trained with " + (dir / kConfigFile).string());
  return ConvSatModel<T>(std::move(config), Vocab::from_json_string(vocab_text),
                         std::move(params));
}

// Text embeddings, one "token v1 .. vD" line each; matching vocab rows are
// overwritten. Returns the number of vocabulary tokens initialized.
template <typename T>
std::size_t load_word_embeddings(const std::filesystem::path& path, const Vocab& vocab,
                                 ParamStore<T>& params) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file " + path.string());
  Tensor<T>& table = params.get("word_emb");
  const std::size_t dim = table.cols();
  std::size_t matched = 0;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    auto it = vocab.token_to_id.find(token);
    if (it == vocab.token_to_id.end()) continue;
    const auto row = static_cast<std::size_t>(it->second);
    for (std::size_t j = 0; j < dim; ++j) {
      double v;
      if (!(ss >> v))
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                 ": expected " + std::to_string(dim) + " values");
      table.at(row, j) = static_cast<T>(v);
    }
    double extra;
    if (ss >> extra)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": more than " + std::to_string(dim) + " values");
    ++matched;
  }
  return matched;
}

}  // namespace convsat
