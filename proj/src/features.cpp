#include "convsat/features.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "convsat/text.hpp"

namespace convsat {

namespace {

using nlohmann::json;

constexpr int kFeatureCount = 51;
constexpr int kTaxonomySize = 18;  // 15 topics + 3 special states
constexpr int kTopicCountBase = 33;  // F33..F50 mirror the taxonomy, F51 = unknown

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

std::string feature_label(const FeatureDef& def) {
  return "F" + std::to_string(def.id) + " (" + def.name + ")";
}

}  // namespace

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

std::string to_string(ScalingMode m) {
  switch (m) {
    case ScalingMode::Cumulative: return "cumulative";
    case ScalingMode::Ratio: return "ratio";
    case ScalingMode::Instantaneous: return "instantaneous";
    case ScalingMode::Binary: return "binary";
    case ScalingMode::RunningAggregate: return "running_aggregate";
  }
  fail("unknown scaling mode");
}

ScalingMode scaling_mode_from_string(const std::string& s) {
  if (s == "cumulative") return ScalingMode::Cumulative;
  if (s == "ratio") return ScalingMode::Ratio;
  if (s == "instantaneous") return ScalingMode::Instantaneous;
  if (s == "binary") return ScalingMode::Binary;
  if (s == "running_aggregate") return ScalingMode::RunningAggregate;
  fail("unknown scaling mode \"" + s + "\"");
}

int FeatureSchema::enabled_count() const {
  return static_cast<int>(
      std::count_if(entries.begin(), entries.end(), [](const FeatureDef& d) { return d.enabled; }));
}

std::vector<int> FeatureSchema::enabled_ids() const {
  std::vector<int> ids;
  for (const auto& d : entries)
    if (d.enabled) ids.push_back(d.id);
  return ids;
}

std::vector<std::string> FeatureSchema::enabled_names() const {
  std::vector<std::string> names;
  for (const auto& d : entries)
    if (d.enabled) names.push_back(d.name);
  return names;
}

const FeatureDef& FeatureSchema::def(int id) const {
  if (id < 1 || id > static_cast<int>(entries.size()))
    fail("feature id " + std::to_string(id) + " out of range");
  return entries[static_cast<std::size_t>(id - 1)];
}

bool FeatureSchema::is_enabled(int id) const { return def(id).enabled; }

int FeatureSchema::enabled_position(int id) const {
  if (!is_enabled(id)) return -1;
  int pos = 0;
  for (const auto& d : entries) {
    if (d.id == id) return pos;
    if (d.enabled) ++pos;
  }
  return -1;
}

void FeatureSchema::validate() const {
  if (entries.size() != kFeatureCount)
    fail("schema must list all " + std::to_string(kFeatureCount) + " features, got " +
         std::to_string(entries.size()));
  for (int i = 0; i < kFeatureCount; ++i) {
    const auto& d = entries[static_cast<std::size_t>(i)];
    if (d.id != i + 1)
      fail("schema entry " + std::to_string(i) + " has id " + std::to_string(d.id) +
           ", expected " + std::to_string(i + 1));
    if (d.name.empty()) fail("schema entry F" + std::to_string(d.id) + " has an empty name");
  }
  bool topic_counts_enabled = false;
  for (int id = kTopicCountBase; id <= kFeatureCount; ++id)
    topic_counts_enabled = topic_counts_enabled || is_enabled(id);
  if (topic_counts_enabled) {
    if (topic_taxonomy.size() != kTaxonomySize)
      fail("topic-count features need a taxonomy of " + std::to_string(kTaxonomySize) +
           " entries, got " + std::to_string(topic_taxonomy.size()));
    const char* specials[] = {"Stop", "Profanity", "Clarification"};
    for (int k = 0; k < 3; ++k)
      if (topic_taxonomy[kTaxonomySize - 3 + k] != specials[k])
        fail("taxonomy entries 16..18 must be Stop, Profanity, Clarification");
    for (int k = 0; k < kTaxonomySize; ++k) {
      const auto& d = def(kTopicCountBase + k);
      std::string expect = "topic_count_" + topic_taxonomy[static_cast<std::size_t>(k)];
      if (d.name != expect)
        fail(feature_label(d) + " does not match taxonomy entry \"" +
             topic_taxonomy[static_cast<std::size_t>(k)] + "\"");
    }
    if (def(kFeatureCount).name != "topic_count_unknown")
      fail("F51 must be named topic_count_unknown");
  }
}

std::string FeatureSchema::to_json_string() const {
  json j;
  j["version"] = 1;
  j["topic_taxonomy"] = topic_taxonomy;
  json feats = json::array();
  for (const auto& d : entries) {
    feats.push_back({{"id", d.id},
                     {"name", d.name},
                     {"mode", to_string(d.mode)},
                     {"enabled", d.enabled}});
  }
  j["features"] = std::move(feats);
  return j.dump(2);
}

FeatureSchema FeatureSchema::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("feature schema is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("features") || !j["features"].is_array())
    fail("feature schema must be an object with a \"features\" array");
  FeatureSchema schema;
  if (j.contains("topic_taxonomy")) {
    if (!j["topic_taxonomy"].is_array()) fail("\"topic_taxonomy\" must be an array of strings");
    for (const auto& t : j["topic_taxonomy"]) {
      if (!t.is_string()) fail("\"topic_taxonomy\" must be an array of strings");
      schema.topic_taxonomy.push_back(t.get<std::string>());
    }
  }
  for (const auto& f : j["features"]) {
    if (!f.is_object() || !f.contains("id") || !f.contains("name") || !f.contains("mode"))
      fail("each feature entry needs id, name and mode");
    FeatureDef d;
    d.id = f["id"].get<int>();
    d.name = f["name"].get<std::string>();
    d.mode = scaling_mode_from_string(f["mode"].get<std::string>());
    d.enabled = f.value("enabled", true);
    schema.entries.push_back(std::move(d));
  }
  schema.validate();
  return schema;
}

void FeatureSchema::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) fail("cannot open " + path.string() + " for writing");
  out << to_json_string() << '\n';
  if (!out) fail("failed writing " + path.string());
}

FeatureSchema FeatureSchema::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

namespace {

std::vector<std::string> default_taxonomy() {
  return {"movies", "music",   "news",    "sports",            "travel",
          "weather", "wikipedia", "worldcup", "emotional_support", "food",
          "games",  "science", "technology", "books",          "animals",
          "Stop",   "Profanity", "Clarification"};
}

FeatureSchema full_catalog(std::vector<std::string> taxonomy) {
  using M = ScalingMode;
  FeatureSchema s;
  s.topic_taxonomy = std::move(taxonomy);
  auto add = [&s](const char* name, M mode) {
    FeatureDef d;
    d.id = static_cast<int>(s.entries.size()) + 1;
    d.name = name;
    d.mode = mode;
    s.entries.push_back(std::move(d));
  };
  add("num_engagements", M::Cumulative);         // F1
  add("max_engagement_depth", M::RunningAggregate);
  add("utterance_pos", M::Instantaneous);        // F3
  add("utterance_neg", M::Instantaneous);
  add("avg_pos", M::RunningAggregate);           // F5
  add("avg_neg", M::RunningAggregate);
  add("state_change_ratio", M::Ratio);           // F7
  add("yes_ratio", M::Ratio);
  add("no_ratio", M::Ratio);
  add("token_overlap_u", M::Instantaneous);      // F10
  add("token_overlap_r", M::Instantaneous);
  add("token_overlap_ur", M::Instantaneous);
  add("total_words_u", M::Cumulative);           // F13
  add("total_words_r", M::Cumulative);
  add("avg_words_u", M::RunningAggregate);       // F15
  add("avg_words_r", M::RunningAggregate);
  add("words_u", M::Instantaneous);              // F17
  add("words_r", M::Instantaneous);
  add("name_provided", M::Binary);               // F19
  add("returning_user", M::Binary);
  add("system_latency", M::Instantaneous);       // F21
  add("system_latency_avg", M::RunningAggregate);
  add("system_latency_max", M::RunningAggregate);
  add("user_latency", M::Instantaneous);         // F24
  add("user_latency_avg", M::RunningAggregate);
  add("user_latency_max", M::RunningAggregate);
  add("asr_min", M::Instantaneous);              // F27
  add("asr_max", M::Instantaneous);
  add("asr_avg", M::Instantaneous);
  add("topic_breadth", M::Cumulative);           // F30
  add("accepted_topics", M::Cumulative);
  add("rejected_topics", M::Cumulative);
  for (const auto& t : s.topic_taxonomy) add(("topic_count_" + t).c_str(), M::Cumulative);
  add("topic_count_unknown", M::Cumulative);     // F51
  s.validate();
  return s;
}

}  // namespace

FeatureSchema alexa_full_schema() { return full_catalog(default_taxonomy()); }

FeatureSchema dbdc3_schema() {
  FeatureSchema s = full_catalog(default_taxonomy());
  // Text-only corpus: keep sentiment, intent-ratio, overlap and word-count
  // features; everything that needs device metadata or a topic tagger is off.
  const std::set<int> keep = {3, 4, 5, 6, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18};
  for (auto& d : s.entries) d.enabled = keep.count(d.id) > 0;
  return s;
}

FeatureSchema schema_preset(const std::string& name) {
  if (name == "alexa-full") return alexa_full_schema();
  if (name == "dbdc3") return dbdc3_schema();
  fail("unknown schema preset \"" + name + "\" (expected alexa-full or dbdc3)");
}

// ---------------------------------------------------------------------------
// Lexicons and intent rules
// ---------------------------------------------------------------------------

void SentimentLexicon::validate() const {
  for (const auto* terms : {&positive_terms, &negative_terms})
    for (const auto& [term, weight] : *terms)
      if (!(weight > 0.0)) fail("sentiment weight for \"" + term + "\" must be > 0");
  for (const auto& [term, weight] : positive_terms)
    if (negative_terms.count(term)) fail("sentiment term \"" + term + "\" is in both polarities");
}

void IntentRuleSet::validate() const {
  std::set<std::string> affirm(affirmation_terms.begin(), affirmation_terms.end());
  for (const auto& t : negation_terms)
    if (affirm.count(t)) fail("intent term \"" + t + "\" is both affirmation and negation");
}

// ---------------------------------------------------------------------------
// Primitive signals
// ---------------------------------------------------------------------------

TopicTag tag_of_turn(const Turn& turn, const FeatureSchema& schema) {
  if (turn.special_state) return {TopicTag::Kind::Special, to_string(*turn.special_state)};
  if (turn.topic && !turn.topic->empty()) {
    const auto& tax = schema.topic_taxonomy;
    auto it = std::find(tax.begin(), tax.end(), *turn.topic);
    if (it != tax.end()) {
      auto pos = static_cast<std::size_t>(it - tax.begin());
      bool special = tax.size() == kTaxonomySize && pos >= tax.size() - 3;
      return {special ? TopicTag::Kind::Special : TopicTag::Kind::Topic, *it};
    }
  }
  return {};  // Unknown; all unknown tags compare equal
}

namespace {

constexpr int kEngagementRun = 4;

struct RunTracker {
  int run_length = 0;
  TopicTag run_tag;
  int count = 0;
  int max_depth = 0;

  void feed(const TopicTag& tag) {
    if (tag.kind == TopicTag::Kind::Topic && run_length > 0 && tag == run_tag) {
      ++run_length;
    } else if (tag.kind == TopicTag::Kind::Topic) {
      run_tag = tag;
      run_length = 1;
    } else {
      run_tag = {};
      run_length = 0;
    }
    if (run_length == kEngagementRun) ++count;
    if (run_length >= kEngagementRun) max_depth = std::max(max_depth, run_length);
  }
};

}  // namespace

EngagementSummary detect_engagements(const std::vector<TopicTag>& tags) {
  RunTracker tracker;
  for (const auto& tag : tags) tracker.feed(tag);
  return {tracker.count, tracker.max_depth};
}

std::pair<double, double> score_sentiment(const std::string& text,
                                          const SentimentLexicon& lexicon) {
  double pos = 0.0, neg = 0.0;
  for (const auto& tok : tokenize(text)) {
    if (auto it = lexicon.positive_terms.find(tok); it != lexicon.positive_terms.end())
      pos += it->second;
    if (auto it = lexicon.negative_terms.find(tok); it != lexicon.negative_terms.end())
      neg += it->second;
  }
  return {pos, neg};
}

namespace {

// True when the tokenized term occurs as a contiguous token run in `tokens`.
bool phrase_match(const std::vector<std::string>& tokens, const std::string& term) {
  std::vector<std::string> phrase = tokenize(term);
  if (phrase.empty() || phrase.size() > tokens.size()) return false;
  for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
    bool all = true;
    for (std::size_t k = 0; k < phrase.size() && all; ++k) all = tokens[i + k] == phrase[k];
    if (all) return true;
  }
  return false;
}

}  // namespace

Intent classify_intent(const std::string& utterance, const IntentRuleSet& rules) {
  std::vector<std::string> tokens = tokenize(utterance);
  bool neg = false, aff = false;
  for (const auto& term : rules.negation_terms)
    if (phrase_match(tokens, term)) { neg = true; break; }
  for (const auto& term : rules.affirmation_terms)
    if (phrase_match(tokens, term)) { aff = true; break; }
  // Mixed polarity ("yes and no") is ambiguous, not a refusal.
  if (neg == aff) return Intent::Other;
  return neg ? Intent::Negation : Intent::Affirmation;
}

int token_overlap(const std::string& a, const std::string& b) {
  auto ta = unique_tokens(a);
  auto tb = unique_tokens(b);
  if (ta.size() > tb.size()) std::swap(ta, tb);
  int n = 0;
  for (const auto& tok : ta) n += tb.count(tok) > 0;
  return n;
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

FeatureExtractor::FeatureExtractor(FeatureSchema schema, const SentimentLexicon* lexicon,
                                   const IntentRuleSet* rules)
    : schema_(std::move(schema)),
      lexicon_(lexicon ? lexicon : &default_sentiment_lexicon()),
      rules_(rules ? rules : &default_intent_rules()) {
  schema_.validate();
  lexicon_->validate();
  rules_->validate();
}

FeatureExtractor::State FeatureExtractor::new_state() const {
  State st;
  st.tag_counts.assign(schema_.topic_taxonomy.size() + 1, 0);
  return st;
}

FeatureVector FeatureExtractor::advance(State& st, const Conversation& conv,
                                        const Turn& turn) const {
  if (st.turns_seen + 1 != turn.index)
    fail("conversation " + conv.id + ": feature state has seen " +
         std::to_string(st.turns_seen) + " turns but got turn " + std::to_string(turn.index));
  const int i = turn.index;
  const double di = static_cast<double>(i);

  auto need = [&](int id, const char* field) -> std::string {
    return "conversation " + conv.id + " turn " + std::to_string(i) + ": " +
           feature_label(schema_.def(id)) + " requires " + field;
  };

  // --- per-turn signals ---------------------------------------------------
  const std::vector<std::string> u_tokens = tokenize(turn.utterance);
  const std::vector<std::string> r_tokens = tokenize(turn.response);
  const auto [pos, neg] = score_sentiment(turn.utterance, *lexicon_);
  const Intent intent = classify_intent(turn.utterance, *rules_);
  const TopicTag tag = tag_of_turn(turn, schema_);

  std::set<std::string> u_set(u_tokens.begin(), u_tokens.end());
  std::set<std::string> r_set(r_tokens.begin(), r_tokens.end());
  auto overlap = [](const std::set<std::string>& a, const std::set<std::string>& b) {
    int n = 0;
    for (const auto& tok : a) n += b.count(tok) > 0;
    return static_cast<double>(n);
  };
  const double ov_u = i > 1 ? overlap(u_set, st.prev_utterance_tokens) : 0.0;
  const double ov_r = i > 1 ? overlap(r_set, st.prev_response_tokens) : 0.0;
  const double ov_ur = overlap(u_set, r_set);

  // --- state update (always full; enablement only gates output) ------------
  st.total_words_u += static_cast<long long>(u_tokens.size());
  st.total_words_r += static_cast<long long>(r_tokens.size());
  st.sum_pos += pos;
  st.sum_neg += neg;
  if (intent == Intent::Affirmation) ++st.affirmations;
  if (intent == Intent::Negation) ++st.negations;

  if (i > 1 && !(tag == st.prev_tag)) {
    ++st.transitions;
    if (tag.kind == TopicTag::Kind::Topic) {
      if (intent == Intent::Affirmation) ++st.accepted_topics;
      if (intent == Intent::Negation) ++st.rejected_topics;
    }
  }

  RunTracker tracker;
  tracker.run_length = st.run_length;
  tracker.run_tag = st.run_tag;
  tracker.count = st.engagement_count;
  tracker.max_depth = st.engagement_max;
  tracker.feed(tag);
  st.run_length = tracker.run_length;
  st.run_tag = tracker.run_tag;
  st.engagement_count = tracker.count;
  st.engagement_max = tracker.max_depth;

  if (tag.kind == TopicTag::Kind::Topic) st.visited_topics.insert(tag.name);
  {
    std::size_t slot = st.tag_counts.size() - 1;  // unknown
    if (tag.kind != TopicTag::Kind::Unknown) {
      const auto& tax = schema_.topic_taxonomy;
      slot = static_cast<std::size_t>(std::find(tax.begin(), tax.end(), tag.name) - tax.begin());
    }
    ++st.tag_counts[slot];
  }

  if (turn.system_latency_s) {
    st.sum_sys_latency += *turn.system_latency_s;
    st.max_sys_latency = std::max(st.max_sys_latency, *turn.system_latency_s);
  }
  if (turn.user_latency_s) {
    st.sum_user_latency += *turn.user_latency_s;
    st.max_user_latency = std::max(st.max_user_latency, *turn.user_latency_s);
  }

  st.prev_tag = tag;
  st.prev_utterance_tokens = std::move(u_set);
  st.prev_response_tokens = std::move(r_set);
  ++st.turns_seen;

  // --- assemble the enabled values -----------------------------------------
  double asr_min = 0.0, asr_max = 0.0, asr_avg = 0.0;
  if (turn.asr_confidences && !turn.asr_confidences->empty()) {
    const auto& c = *turn.asr_confidences;
    asr_min = *std::min_element(c.begin(), c.end());
    asr_max = *std::max_element(c.begin(), c.end());
    asr_avg = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
  }

  FeatureVector out;
  out.turn_index = i;
  out.values.reserve(static_cast<std::size_t>(schema_.enabled_count()));
  for (const auto& d : schema_.entries) {
    if (!d.enabled) continue;
    double v = 0.0;
    switch (d.id) {
      case 1: v = st.engagement_count; break;
      case 2: v = st.engagement_max; break;
      case 3: v = pos; break;
      case 4: v = neg; break;
      case 5: v = st.sum_pos / di; break;
      case 6: v = st.sum_neg / di; break;
      case 7: v = st.transitions / di; break;
      case 8: v = st.affirmations / di; break;
      case 9: v = st.negations / di; break;
      case 10: v = ov_u; break;
      case 11: v = ov_r; break;
      case 12: v = ov_ur; break;
      case 13: v = static_cast<double>(st.total_words_u); break;
      case 14: v = static_cast<double>(st.total_words_r); break;
      case 15: v = static_cast<double>(st.total_words_u) / di; break;
      case 16: v = static_cast<double>(st.total_words_r) / di; break;
      case 17: v = static_cast<double>(u_tokens.size()); break;
      case 18: v = static_cast<double>(r_tokens.size()); break;
      case 19:
        if (!conv.name_provided) fail(need(19, "name_provided on the conversation"));
        v = *conv.name_provided ? 1.0 : 0.0;
        break;
      case 20:
        if (!conv.returning_user) fail(need(20, "returning_user on the conversation"));
        v = *conv.returning_user ? 1.0 : 0.0;
        break;
      case 21:
        if (!turn.system_latency_s) fail(need(21, "system_latency_s"));
        v = *turn.system_latency_s;
        break;
      case 22:
        if (!turn.system_latency_s) fail(need(22, "system_latency_s"));
        v = st.sum_sys_latency / di;
        break;
      case 23:
        if (!turn.system_latency_s) fail(need(23, "system_latency_s"));
        v = st.max_sys_latency;
        break;
      case 24:
        if (!turn.user_latency_s) fail(need(24, "user_latency_s"));
        v = *turn.user_latency_s;
        break;
      case 25:
        if (!turn.user_latency_s) fail(need(25, "user_latency_s"));
        v = st.sum_user_latency / di;
        break;
      case 26:
        if (!turn.user_latency_s) fail(need(26, "user_latency_s"));
        v = st.max_user_latency;
        break;
      case 27:
        if (!turn.asr_confidences) fail(need(27, "asr_confidences"));
        v = asr_min;
        break;
      case 28:
        if (!turn.asr_confidences) fail(need(28, "asr_confidences"));
        v = asr_max;
        break;
      case 29:
        if (!turn.asr_confidences) fail(need(29, "asr_confidences"));
        v = asr_avg;
        break;
      case 30: v = static_cast<double>(st.visited_topics.size()); break;
      case 31: v = st.accepted_topics; break;
      case 32: v = st.rejected_topics; break;
      default:  // F33..F51: tag counts in taxonomy order, then unknown
        v = static_cast<double>(
            st.tag_counts[static_cast<std::size_t>(d.id - kTopicCountBase)]);
        break;
    }
    out.values.push_back(v);
  }
  return out;
}

FeatureVector compute_feature_vector(const Conversation& conv, int i,
                                     const FeatureSchema& schema) {
  if (i < 1 || i > static_cast<int>(conv.turns.size()))
    fail("turn index " + std::to_string(i) + " out of range for conversation " + conv.id);
  FeatureExtractor extractor(schema);
  auto st = extractor.new_state();
  FeatureVector v;
  for (int t = 1; t <= i; ++t)
    v = extractor.advance(st, conv, conv.turns[static_cast<std::size_t>(t - 1)]);
  return v;
}

FeatureVector scale_feature_vector(const FeatureVector& v, int i, const FeatureSchema& schema) {
  if (i < 1) fail("scaling requires turn index >= 1");
  if (v.turn_index != i)
    fail("feature vector was extracted at turn " + std::to_string(v.turn_index) +
         ", cannot scale for turn " + std::to_string(i));
  if (v.values.size() != static_cast<std::size_t>(schema.enabled_count()))
    fail("feature vector length " + std::to_string(v.values.size()) +
         " does not match schema (" + std::to_string(schema.enabled_count()) + " enabled)");
  FeatureVector out = v;
  std::size_t pos = 0;
  for (const auto& d : schema.entries) {
    if (!d.enabled) continue;
    if (d.mode == ScalingMode::Cumulative) out.values[pos] /= static_cast<double>(i);
    ++pos;
  }
  return out;
}

FeatureMatrix build_feature_matrix(const Conversation& conv, int i, int window,
                                   const FeatureSchema& schema) {
  if (window < 1) fail("context window must be >= 1");
  if (i < 1 || i > static_cast<int>(conv.turns.size()))
    fail("turn index " + std::to_string(i) + " out of range for conversation " + conv.id);
  FeatureExtractor extractor(schema);
  auto st = extractor.new_state();
  std::deque<FeatureVector> recent;
  for (int t = 1; t <= i; ++t) {
    FeatureVector v = extractor.advance(st, conv, conv.turns[static_cast<std::size_t>(t - 1)]);
    recent.push_back(scale_feature_vector(v, t, schema));
    if (static_cast<int>(recent.size()) > window) recent.pop_front();
  }
  FeatureMatrix m;
  m.window = window;
  m.rows.assign(recent.begin(), recent.end());
  return m;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_value(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_feature_csv(const std::vector<Conversation>& conversations,
                       const FeatureExtractor& extractor, const std::filesystem::path& path,
                       bool scaled) {
  std::ofstream out(path);
  if (!out) fail("cannot open " + path.string() + " for writing");
  out << "conversation_id,turn";
  for (const auto& name : extractor.schema().enabled_names()) out << ',' << csv_escape(name);
  out << '\n';
  for (const auto& conv : conversations) {
    auto st = extractor.new_state();
    for (const auto& turn : conv.turns) {
      FeatureVector v = extractor.advance(st, conv, turn);
      if (scaled) v = scale_feature_vector(v, turn.index, extractor.schema());
      out << csv_escape(conv.id) << ',' << turn.index;
      for (double x : v.values) out << ',' << format_value(x);
      out << '\n';
    }
  }
  if (!out) fail("failed writing " + path.string());
}

}  // namespace convsat
