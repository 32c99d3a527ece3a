#pragma once
// Behavioral feature extraction: the F1..F51 catalog, per-turn feature
// vectors computed over the conversation prefix (no future information),
// the online scaling function, and the W-row context feature matrix.

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "convsat/conv_data.hpp"

namespace convsat {

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

enum class ScalingMode { Cumulative, Ratio, Instantaneous, Binary, RunningAggregate };

std::string to_string(ScalingMode m);
ScalingMode scaling_mode_from_string(const std::string& s);

struct FeatureDef {
  int id = 0;           // 1..51
  std::string name;
  ScalingMode mode = ScalingMode::Instantaneous;
  bool enabled = true;
};

// The full catalog is always 51 entries; disabled entries are omitted from
// extracted vectors. Topic-count features F33..F50 mirror the taxonomy order
// (15 topics then the 3 special states); F51 counts turns with no known tag.
struct FeatureSchema {
  std::vector<FeatureDef> entries;          // size 51, ascending id
  std::vector<std::string> topic_taxonomy;  // 15 topic names + Stop/Profanity/Clarification

  int enabled_count() const;
  std::vector<int> enabled_ids() const;               // ascending
  std::vector<std::string> enabled_names() const;     // aligned with enabled_ids
  const FeatureDef& def(int id) const;                // id in 1..51
  bool is_enabled(int id) const;

  // Position of feature `id` within extracted vectors, -1 when disabled.
  int enabled_position(int id) const;

  std::string to_json_string() const;
  static FeatureSchema from_json_string(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static FeatureSchema load(const std::filesystem::path& path);

  // Throws std::invalid_argument when ids are not 1..51 ascending, or topic
  // features are enabled with a taxonomy of the wrong length.
  void validate() const;
};

// All 51 features enabled, default 15-topic taxonomy.
FeatureSchema alexa_full_schema();
// Sentiment, overlap, word-count and intent-ratio features only
// (F3..F6, F8..F18); latency, ASR, session and topic features disabled.
FeatureSchema dbdc3_schema();
FeatureSchema schema_preset(const std::string& name);  // "alexa-full" | "dbdc3"

// ---------------------------------------------------------------------------
// Lexicons and intent rules
// ---------------------------------------------------------------------------

struct SentimentLexicon {
  std::map<std::string, double> positive_terms;  // term -> weight > 0
  std::map<std::string, double> negative_terms;
  void validate() const;  // weights > 0, term sets disjoint
};

struct IntentRuleSet {
  std::vector<std::string> affirmation_terms;  // tokens or multi-token phrases
  std::vector<std::string> negation_terms;
  void validate() const;  // sets disjoint
};

// Bundled defaults (~200 terms per polarity; small keyword rule sets).
const SentimentLexicon& default_sentiment_lexicon();
const IntentRuleSet& default_intent_rules();

enum class Intent { Affirmation, Negation, Other };

// ---------------------------------------------------------------------------
// Primitive signals
// ---------------------------------------------------------------------------

struct EngagementSummary {
  int count = 0;      // runs of >= 4 consecutive turns on one topic
  int max_depth = 0;  // length of the longest such run, 0 if none
};

// Per-turn topic tag as seen by the extractor. Special states and unknown
// tags never join engagements; unknown->unknown is not a transition.
struct TopicTag {
  enum class Kind { Topic, Special, Unknown };
  Kind kind = Kind::Unknown;
  std::string name;  // taxonomy topic or special-state name; empty for Unknown

  bool operator==(const TopicTag&) const = default;
};

TopicTag tag_of_turn(const Turn& turn, const FeatureSchema& schema);

EngagementSummary detect_engagements(const std::vector<TopicTag>& tags);

// (positive, negative) weight sums over tokenized `text`.
std::pair<double, double> score_sentiment(const std::string& text,
                                          const SentimentLexicon& lexicon);

Intent classify_intent(const std::string& utterance, const IntentRuleSet& rules);

// Size of the intersection of lowercased unique-token sets.
int token_overlap(const std::string& a, const std::string& b);

// ---------------------------------------------------------------------------
// Feature vectors
// ---------------------------------------------------------------------------

struct FeatureVector {
  std::vector<double> values;  // aligned to enabled schema entries
  int turn_index = 0;
};

struct FeatureMatrix {
  std::vector<FeatureVector> rows;  // oldest first, 1..W rows
  int window = 0;
};

// Streaming extractor: immutable configuration, explicit per-conversation
// state so batch and incremental paths share one code path bit for bit.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(FeatureSchema schema,
                            const SentimentLexicon* lexicon = nullptr,
                            const IntentRuleSet* rules = nullptr);

  const FeatureSchema& schema() const { return schema_; }

  struct State {
    int turns_seen = 0;
    // cumulative tallies over turns 1..i
    long long total_words_u = 0, total_words_r = 0;
    double sum_pos = 0.0, sum_neg = 0.0;
    int transitions = 0;
    int affirmations = 0, negations = 0;
    double sum_sys_latency = 0.0, max_sys_latency = 0.0;
    double sum_user_latency = 0.0, max_user_latency = 0.0;
    int engagement_count = 0, engagement_max = 0;
    int run_length = 0;
    TopicTag run_tag;
    TopicTag prev_tag;
    std::set<std::string> visited_topics;
    int accepted_topics = 0, rejected_topics = 0;
    std::vector<long long> tag_counts;  // taxonomy order + trailing unknown slot
    std::set<std::string> prev_utterance_tokens, prev_response_tokens;
  };

  State new_state() const;

  // Feeds the next turn (state must have seen exactly turn.index - 1 turns)
  // and returns the unscaled feature vector v_i. Throws when an enabled
  // feature needs an absent optional field, naming the feature id.
  FeatureVector advance(State& state, const Conversation& conv, const Turn& turn) const;

 private:
  FeatureSchema schema_;
  const SentimentLexicon* lexicon_;
  const IntentRuleSet* rules_;
};

// Unscaled v_i from turns 1..i only (prefix causality). 1 <= i <= N.
FeatureVector compute_feature_vector(const Conversation& conv, int i,
                                     const FeatureSchema& schema);

// Online scaling S(v, i): cumulative entries divided by i, all other modes
// identity. Requires i >= 1 and v.turn_index == i.
FeatureVector scale_feature_vector(const FeatureVector& v, int i,
                                   const FeatureSchema& schema);

// Scaled vectors for turns max(1, i-W+1)..i, oldest first. W >= 1.
FeatureMatrix build_feature_matrix(const Conversation& conv, int i, int window,
                                   const FeatureSchema& schema);

// CSV export: conversation_id, turn, then one column per enabled feature.
void write_feature_csv(const std::vector<Conversation>& conversations,
                       const FeatureExtractor& extractor,
                       const std::filesystem::path& path, bool scaled = true);

}  // namespace convsat
