#pragma once
// Conversation data model, corpus readers and gold-label derivation.
//
// Two input formats are supported:
//   * the DBDC3 challenge per-dialogue JSON layout (30 annotator marks per
//     system turn, O/T/X), and
//   * a generic JSONL conversation format, one conversation object per line
//     (the canonical on-disk representation used by the CLI).

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace convsat {

// ---------------------------------------------------------------------------
// Labels
// ---------------------------------------------------------------------------

// Breakdown severity increases left to right.
enum class BreakdownLabel { NB = 0, PB = 1, B = 2 };

// Ordered so DSAT < SAT (rating_to_sat is monotone under this order).
enum class SatLabel { DSAT = 0, SAT = 1 };

std::string to_string(BreakdownLabel l);
std::string to_string(SatLabel l);
BreakdownLabel breakdown_from_string(const std::string& s);
SatLabel sat_from_string(const std::string& s);

enum class SpecialState { Stop = 0, Profanity = 1, Clarification = 2 };
std::string to_string(SpecialState s);
SpecialState special_state_from_string(const std::string& s);

struct VoteCounts {
  int nb = 0;
  int pb = 0;
  int b = 0;
  int total() const { return nb + pb + b; }
  bool operator==(const VoteCounts&) const = default;
};

// ---------------------------------------------------------------------------
// Turn / Conversation
// ---------------------------------------------------------------------------

struct Turn {
  int index = 0;  // 1-based, contiguous within a conversation
  std::string utterance;
  std::string response;
  std::optional<std::vector<double>> asr_confidences;  // one per utterance token
  std::optional<double> system_latency_s;
  std::optional<double> user_latency_s;
  std::optional<std::string> topic;
  std::optional<SpecialState> special_state;
  std::optional<BreakdownLabel> gold_breakdown;
  std::optional<SatLabel> gold_sat;
  std::optional<VoteCounts> annotator_votes;
};

struct Conversation {
  std::string id;
  std::vector<Turn> turns;
  std::optional<double> final_rating;  // in [1.0, 5.0] when present
  std::optional<bool> name_provided;   // feeds F19
  std::optional<bool> returning_user;  // feeds F20
};

struct DatasetSplit {
  std::vector<Conversation> train;
  std::vector<Conversation> validation;
  std::vector<Conversation> test;
  std::uint64_t seed = 0;
};

// Throws std::invalid_argument when a Turn or Conversation invariant is
// violated (indices, ASR confidence range, latency sign, rating range).
// `where` prefixes the error message, e.g. "line 7".
void validate_conversation(const Conversation& conv, const std::string& where = {});

// ---------------------------------------------------------------------------
// Gold-label derivation
// ---------------------------------------------------------------------------

// Label with the strictly greatest count; ties broken by severity B > PB > NB.
// Throws std::invalid_argument on zero total votes.
BreakdownLabel majority_vote(const VoteCounts& votes);

// DSAT iff rating <= 3.5, SAT otherwise. Rating must lie in [1.0, 5.0].
SatLabel rating_to_sat(double rating);

// ---------------------------------------------------------------------------
// DBDC3 reader
// ---------------------------------------------------------------------------

struct Dbdc3Options {
  // Annotator mark -> label. The challenge convention; remappable for other
  // corpora using the same layout.
  std::map<std::string, BreakdownLabel> mark_map = {
      {"O", BreakdownLabel::NB}, {"T", BreakdownLabel::PB}, {"X", BreakdownLabel::B}};
};

// Reads every *.json file under `corpus_root` (recursive, sorted by path).
// Each annotated system turn becomes one Turn: utterance = user utterances
// since the previous system turn joined with spaces, response = the system
// text, annotator_votes = mark counts. System turns whose "annotations"
// array is empty (the dialogue opener) are not prediction targets and are
// skipped; a system turn with no "annotations" key at all is a validation
// error.
std::vector<Conversation> parse_dbdc3(const std::filesystem::path& corpus_root,
                                      const Dbdc3Options& options = {});

// ---------------------------------------------------------------------------
// Canonical JSONL format
// ---------------------------------------------------------------------------

// One JSON object per line:
//   {"id": str, "rating": number|null, "name_provided": bool|null,
//    "returning_user": bool|null, "turns": [{"index": int, "utterance": str,
//    "response": str, "asr_confidences": [number]|null,
//    "system_latency_s": number|null, "user_latency_s": number|null,
//    "topic": str|null, "special_state": str|null,
//    "gold_breakdown": "NB"|"PB"|"B"|null, "gold_sat": "SAT"|"DSAT"|null}]}
// Turns may additionally carry "annotator_votes": {"NB":int,"PB":int,"B":int}
// (optional extension; preserved on round trip). Schema violations raise
// std::invalid_argument naming the line number and field path.
std::vector<Conversation> parse_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::vector<Conversation>& conversations,
                 const std::filesystem::path& path);

// Deterministic shuffle-split of `conversations` into train/validation.
// |validation| = round(val_fraction * N). Requires 0 < val_fraction < 1 and
// N >= 2. The `test` member of the result is left empty.
DatasetSplit split_dataset(const std::vector<Conversation>& conversations,
                           double val_fraction, std::uint64_t seed);

// Semantic equality helpers (used by round-trip checks).
bool operator==(const Turn& a, const Turn& b);
bool operator==(const Conversation& a, const Conversation& b);

}  // namespace convsat
