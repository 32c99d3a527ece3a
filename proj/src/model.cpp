#include "convsat/model.hpp"

#include <algorithm>
#include <map>

#include "json.hpp"

namespace convsat {

namespace {
using nlohmann::json;
[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }
}  // namespace

std::string to_string(HeadKind h) {
  return h == HeadKind::Softmax3 ? "softmax3" : "sigmoid1";
}

std::string to_string(PredictionMode m) {
  return m == PredictionMode::Online ? "online" : "offline";
}

std::string to_string(Task t) {
  switch (t) {
    case Task::Breakdown: return "breakdown";
    case Task::SatOnline: return "sat-online";
    case Task::SatOffline: return "sat-offline";
  }
  fail("unknown task");
}

HeadKind head_from_string(const std::string& s) {
  if (s == "softmax3") return HeadKind::Softmax3;
  if (s == "sigmoid1") return HeadKind::Sigmoid1;
  fail("unknown head \"" + s + "\"");
}

PredictionMode mode_from_string(const std::string& s) {
  if (s == "online") return PredictionMode::Online;
  if (s == "offline") return PredictionMode::Offline;
  fail("unknown prediction mode \"" + s + "\"");
}

Task task_from_string(const std::string& s) {
  if (s == "breakdown") return Task::Breakdown;
  if (s == "sat-online") return Task::SatOnline;
  if (s == "sat-offline") return Task::SatOffline;
  fail("unknown task \"" + s + "\" (expected breakdown, sat-online or sat-offline)");
}

HeadKind head_for_task(Task t) {
  return t == Task::Breakdown ? HeadKind::Softmax3 : HeadKind::Sigmoid1;
}

PredictionMode mode_for_task(Task t) {
  return t == Task::SatOffline ? PredictionMode::Offline : PredictionMode::Online;
}

// ---------------------------------------------------------------------------
// ModelConfig
// ---------------------------------------------------------------------------

void ModelConfig::validate() const {
  if (window < 1) fail("context window must be >= 1");
  if (word_emb_dim < 1 || word_hidden < 1 || turn_hidden < 1)
    fail("model dimensions must be positive");
  if (use_chars && (char_emb_dim < 1 || char_hidden < 1))
    fail("character dimensions must be positive when use_chars is on");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) fail("dropout rate must be in [0, 1)");
  if (!(lr > 0.0)) fail("learning rate must be positive");
  if (max_tokens_per_side < 1) fail("max_tokens_per_side must be >= 1");
  if (min_count < 1) fail("min_count must be >= 1");
  schema.validate();
  if (use_features && schema.enabled_count() == 0)
    fail("use_features requires at least one enabled feature");
}

std::string ModelConfig::to_json_string() const {
  json j;
  j["window"] = window;
  j["word_emb_dim"] = word_emb_dim;
  j["char_emb_dim"] = char_emb_dim;
  j["word_hidden"] = word_hidden;
  j["char_hidden"] = char_hidden;
  j["turn_hidden"] = turn_hidden;
  j["head"] = to_string(head);
  j["mode"] = to_string(mode);
  j["use_chars"] = use_chars;
  j["use_features"] = use_features;
  j["freeze_word_emb"] = freeze_word_emb;
  j["dropout_p"] = dropout_p;
  j["lr"] = lr;
  j["max_tokens_per_side"] = max_tokens_per_side;
  j["min_count"] = min_count;
  j["schema"] = json::parse(schema.to_json_string());
  return j.dump(2);
}

ModelConfig ModelConfig::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("model configuration is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) fail("model configuration must be a JSON object");
  ModelConfig c;
  c.window = j.value("window", c.window);
  c.word_emb_dim = j.value("word_emb_dim", c.word_emb_dim);
  c.char_emb_dim = j.value("char_emb_dim", c.char_emb_dim);
  c.word_hidden = j.value("word_hidden", c.word_hidden);
  c.char_hidden = j.value("char_hidden", c.char_hidden);
  c.turn_hidden = j.value("turn_hidden", c.turn_hidden);
  if (j.contains("head")) c.head = head_from_string(j["head"].get<std::string>());
  if (j.contains("mode")) c.mode = mode_from_string(j["mode"].get<std::string>());
  c.use_chars = j.value("use_chars", c.use_chars);
  c.use_features = j.value("use_features", c.use_features);
  c.freeze_word_emb = j.value("freeze_word_emb", c.freeze_word_emb);
  c.dropout_p = j.value("dropout_p", c.dropout_p);
  c.lr = j.value("lr", c.lr);
  c.max_tokens_per_side = j.value("max_tokens_per_side", c.max_tokens_per_side);
  c.min_count = j.value("min_count", c.min_count);
  if (j.contains("schema")) c.schema = FeatureSchema::from_json_string(j["schema"].dump());
  c.validate();
  return c;
}

ModelConfig model_preset(const std::string& name) {
  ModelConfig c;  // full-scale defaults
  if (name == "convsat") return c;
  if (name == "dbdc3") {
    c.word_hidden = 64;
    c.head = HeadKind::Softmax3;
    c.schema = dbdc3_schema();
    return c;
  }
  if (name == "lstm" || name == "clstm") {
    c.window = name == "lstm" ? 1 : 3;
    c.use_chars = false;
    c.use_features = false;
    return c;
  }
  fail("unknown model preset \"" + name + "\" (expected convsat, dbdc3, lstm or clstm)");
}

void apply_task(ModelConfig& config, Task task) {
  config.head = head_for_task(task);
  config.mode = mode_for_task(task);
}

// ---------------------------------------------------------------------------
// Vocab
// ---------------------------------------------------------------------------

namespace {

Vocab reserved_vocab() {
  Vocab v;
  v.id_to_token = {Vocab::kPadToken, Vocab::kUnkToken, Vocab::kUEndToken, Vocab::kREndToken};
  for (int i = 0; i < static_cast<int>(v.id_to_token.size()); ++i)
    v.token_to_id[v.id_to_token[static_cast<std::size_t>(i)]] = i;
  return v;
}

}  // namespace

std::string Vocab::to_json_string() const {
  json j;
  j["version"] = 1;
  j["tokens"] = id_to_token;
  return j.dump(2);
}

Vocab Vocab::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("vocabulary is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("tokens") || !j["tokens"].is_array())
    fail("vocabulary must be an object with a \"tokens\" array");
  Vocab v;
  for (const auto& t : j["tokens"]) {
    if (!t.is_string()) fail("vocabulary tokens must be strings");
    v.id_to_token.push_back(t.get<std::string>());
  }
  const Vocab reserved = reserved_vocab();
  if (v.id_to_token.size() < reserved.id_to_token.size())
    fail("vocabulary is missing its reserved tokens");
  for (std::size_t i = 0; i < reserved.id_to_token.size(); ++i)
    if (v.id_to_token[i] != reserved.id_to_token[i])
      fail("vocabulary id " + std::to_string(i) + " must be " + reserved.id_to_token[i]);
  for (int i = 0; i < static_cast<int>(v.id_to_token.size()); ++i) {
    const auto& tok = v.id_to_token[static_cast<std::size_t>(i)];
    if (!v.token_to_id.emplace(tok, i).second) fail("duplicate vocabulary token \"" + tok + "\"");
  }
  return v;
}

Vocab build_vocab(const std::vector<Conversation>& train, int min_count) {
  if (train.empty()) fail("cannot build a vocabulary from an empty corpus");
  if (min_count < 1) fail("min_count must be >= 1");
  std::map<std::string, long long> freq;
  for (const auto& conv : train)
    for (const auto& turn : conv.turns) {
      for (auto& tok : tokenize(turn.utterance)) ++freq[tok];
      for (auto& tok : tokenize(turn.response)) ++freq[tok];
    }
  std::vector<std::pair<std::string, long long>> items(freq.begin(), freq.end());
  std::stable_sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab v = reserved_vocab();
  for (const auto& [tok, count] : items) {
    if (count < min_count) continue;
    v.token_to_id[tok] = v.size();
    v.id_to_token.push_back(tok);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Characters
// ---------------------------------------------------------------------------

int char_id(char c) {
  const auto u = static_cast<unsigned char>(c);
  if (u >= 32 && u <= 126) return 3 + (u - 32);
  return kCharUnk;
}

std::vector<int> chars_of(const std::vector<std::string>& tokens) {
  std::vector<int> ids;
  for (const auto& tok : tokens) {
    if (tok == Vocab::kUEndToken) {
      ids.push_back(kCharUEnd);
    } else if (tok == Vocab::kREndToken) {
      ids.push_back(kCharREnd);
    } else {
      for (char c : tok) ids.push_back(char_id(c));
    }
  }
  return ids;
}

// ---------------------------------------------------------------------------
// Context expansion
// ---------------------------------------------------------------------------

ExpandedTurn expand_context(const std::vector<Turn>& turns, int i, int window,
                            int max_tokens_per_side) {
  if (i < 1 || i > static_cast<int>(turns.size()))
    fail("turn index " + std::to_string(i) + " out of range");
  if (window < 1) fail("context window must be >= 1");
  if (max_tokens_per_side < 1) fail("max_tokens_per_side must be >= 1");
  ExpandedTurn out;
  const int start = std::max(1, i - window + 1);
  for (int j = start; j <= i; ++j) {
    const Turn& t = turns[static_cast<std::size_t>(j - 1)];
    for (auto& tok : tokenize(t.utterance)) out.utterance_tokens.push_back(std::move(tok));
    out.utterance_tokens.push_back(Vocab::kUEndToken);
    for (auto& tok : tokenize(t.response)) out.response_tokens.push_back(std::move(tok));
    out.response_tokens.push_back(Vocab::kREndToken);
  }
  auto truncate_left = [max_tokens_per_side](std::vector<std::string>& seq) {
    const auto cap = static_cast<std::size_t>(max_tokens_per_side);
    if (seq.size() > cap) seq.erase(seq.begin(), seq.end() - static_cast<std::ptrdiff_t>(cap));
  };
  truncate_left(out.utterance_tokens);
  truncate_left(out.response_tokens);
  return out;
}

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

std::string label_name(Task task, int class_index) {
  if (task == Task::Breakdown) {
    if (class_index < 0 || class_index > 2) fail("breakdown class index out of range");
    return to_string(static_cast<BreakdownLabel>(class_index));
  }
  if (class_index < 0 || class_index > 1) fail("satisfaction class index out of range");
  return to_string(static_cast<SatLabel>(class_index));
}

int gold_class_of_turn(const Turn& turn, Task task) {
  if (task == Task::Breakdown)
    return turn.gold_breakdown ? static_cast<int>(*turn.gold_breakdown) : -1;
  return turn.gold_sat ? static_cast<int>(*turn.gold_sat) : -1;
}

// ---------------------------------------------------------------------------
// Bundle plumbing
// ---------------------------------------------------------------------------

std::string read_file_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text;
}

std::string bundle_config_text(const ModelConfig& config, const std::string& vocab_text) {
  json j;
  j["format_version"] = 1;
  j["model"] = json::parse(config.to_json_string());
  j["vocab_hash"] = fnv1a64(vocab_text);
  return j.dump(2);
}

ModelConfig parse_bundle_config(const std::string& config_text, const std::string& vocab_text) {
  json j;
  try {
    j = json::parse(config_text);
  } catch (const json::parse_error& e) {
    fail(std::string("bundle configuration is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("model"))
    fail("bundle configuration must be an object with a \"model\" entry");
  const auto version = j.value("format_version", 0);
  if (version != 1)
    fail("unsupported bundle format version " + std::to_string(version));
  if (!j.contains("vocab_hash") || j["vocab_hash"].get<std::uint64_t>() != fnv1a64(vocab_text))
    throw std::runtime_error("bundle mismatch: vocabulary does not belong to this configuration");
  return ModelConfig::from_json_string(j["model"].dump());
}

}  // namespace convsat
