#include "convsat/conv_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

namespace convsat {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Label strings
// ---------------------------------------------------------------------------

std::string to_string(BreakdownLabel l) {
  switch (l) {
    case BreakdownLabel::NB: return "NB";
    case BreakdownLabel::PB: return "PB";
    case BreakdownLabel::B: return "B";
  }
  return "?";
}

std::string to_string(SatLabel l) { return l == SatLabel::SAT ? "SAT" : "DSAT"; }

BreakdownLabel breakdown_from_string(const std::string& s) {
  if (s == "NB") return BreakdownLabel::NB;
  if (s == "PB") return BreakdownLabel::PB;
  if (s == "B") return BreakdownLabel::B;
  throw std::invalid_argument("unknown breakdown label: " + s);
}

SatLabel sat_from_string(const std::string& s) {
  if (s == "SAT") return SatLabel::SAT;
  if (s == "DSAT") return SatLabel::DSAT;
  throw std::invalid_argument("unknown satisfaction label: " + s);
}

std::string to_string(SpecialState s) {
  switch (s) {
    case SpecialState::Stop: return "Stop";
    case SpecialState::Profanity: return "Profanity";
    case SpecialState::Clarification: return "Clarification";
  }
  return "?";
}

SpecialState special_state_from_string(const std::string& s) {
  if (s == "Stop") return SpecialState::Stop;
  if (s == "Profanity") return SpecialState::Profanity;
  if (s == "Clarification") return SpecialState::Clarification;
  throw std::invalid_argument("unknown special state: " + s);
}

// ---------------------------------------------------------------------------
// Invariants
// ---------------------------------------------------------------------------

void validate_conversation(const Conversation& conv, const std::string& where) {
  auto fail = [&](const std::string& msg) {
    std::string prefix = where.empty() ? "" : where + ": ";
    throw std::invalid_argument(prefix + msg);
  };
  if (conv.turns.empty()) fail("conversation '" + conv.id + "' has no turns");
  if (conv.final_rating && (*conv.final_rating < 1.0 || *conv.final_rating > 5.0))
    fail("field final_rating out of range [1.0, 5.0]: " +
         std::to_string(*conv.final_rating));
  for (std::size_t k = 0; k < conv.turns.size(); ++k) {
    const Turn& t = conv.turns[k];
    std::string at = "turns[" + std::to_string(k) + "]";
    if (t.index != static_cast<int>(k) + 1)
      fail("field " + at + ".index must be contiguous 1-based; got " +
           std::to_string(t.index));
    if (t.asr_confidences) {
      for (std::size_t j = 0; j < t.asr_confidences->size(); ++j) {
        double c = (*t.asr_confidences)[j];
        if (!(c >= 0.0 && c <= 1.0))
          fail("field " + at + ".asr_confidences[" + std::to_string(j) +
               "] out of range [0, 1]: " + std::to_string(c));
      }
    }
    if (t.system_latency_s && *t.system_latency_s < 0.0)
      fail("field " + at + ".system_latency_s is negative");
    if (t.user_latency_s && *t.user_latency_s < 0.0)
      fail("field " + at + ".user_latency_s is negative");
    if (t.annotator_votes && t.annotator_votes->total() < 0)
      fail("field " + at + ".annotator_votes has negative counts");
  }
}

// ---------------------------------------------------------------------------
// Gold-label derivation
// ---------------------------------------------------------------------------

BreakdownLabel majority_vote(const VoteCounts& votes) {
  if (votes.total() < 1) throw std::invalid_argument("majority_vote: zero total votes");
  if (votes.nb < 0 || votes.pb < 0 || votes.b < 0)
    throw std::invalid_argument("majority_vote: negative vote count");
  // Severity order B > PB > NB decides ties.
  if (votes.b >= votes.pb && votes.b >= votes.nb) return BreakdownLabel::B;
  if (votes.pb >= votes.nb) return BreakdownLabel::PB;
  return BreakdownLabel::NB;
}

SatLabel rating_to_sat(double rating) {
  if (!(rating >= 1.0 && rating <= 5.0))
    throw std::invalid_argument("rating_to_sat: rating out of range [1.0, 5.0]: " +
                                std::to_string(rating));
  return rating <= 3.5 ? SatLabel::DSAT : SatLabel::SAT;
}

// ---------------------------------------------------------------------------
// DBDC3 reader
// ---------------------------------------------------------------------------

namespace {

Conversation parse_dbdc3_file(const std::filesystem::path& file,
                              const Dbdc3Options& options) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(file.string() + ": malformed JSON at byte " +
                                std::to_string(e.byte) + ": " + e.what());
  }

  Conversation conv;
  conv.id = doc.value("dialogue-id", file.stem().string());
  if (!doc.contains("turns") || !doc["turns"].is_array())
    throw std::invalid_argument(file.string() + ": missing 'turns' array");

  std::string pending_user;  // user utterances since the last system turn
  for (const auto& jt : doc["turns"]) {
    std::string speaker = jt.value("speaker", "");
    std::string utterance = jt.value("utterance", "");
    if (speaker == "U") {
      if (!pending_user.empty()) pending_user += " ";
      pending_user += utterance;
      continue;
    }
    if (speaker != "S") continue;  // unknown speakers ignored
    if (!jt.contains("annotations"))
      throw std::invalid_argument(file.string() + ": system turn " +
                                  std::to_string(jt.value("turn-index", -1)) +
                                  " has no annotation block");
    const auto& anns = jt["annotations"];
    if (!anns.is_array())
      throw std::invalid_argument(file.string() + ": annotations must be an array");
    if (anns.empty()) continue;  // dialogue opener, not a prediction target

    VoteCounts votes;
    for (const auto& a : anns) {
      std::string mark = a.value("breakdown", "");
      auto it = options.mark_map.find(mark);
      if (it == options.mark_map.end())
        throw std::invalid_argument(file.string() + ": unknown annotator mark '" +
                                    mark + "'");
      switch (it->second) {
        case BreakdownLabel::NB: ++votes.nb; break;
        case BreakdownLabel::PB: ++votes.pb; break;
        case BreakdownLabel::B: ++votes.b; break;
      }
    }
    Turn turn;
    turn.index = static_cast<int>(conv.turns.size()) + 1;
    turn.utterance = pending_user;
    turn.response = utterance;
    turn.annotator_votes = votes;
    conv.turns.push_back(std::move(turn));
    pending_user.clear();
  }
  if (conv.turns.empty())
    throw std::invalid_argument(file.string() + ": no annotated system turns");
  return conv;
}

}  // namespace

std::vector<Conversation> parse_dbdc3(const std::filesystem::path& corpus_root,
                                      const Dbdc3Options& options) {
  if (!std::filesystem::is_directory(corpus_root))
    throw std::invalid_argument("parse_dbdc3: not a directory: " + corpus_root.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(corpus_root)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Conversation> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(parse_dbdc3_file(f, options));
  return out;
}

// ---------------------------------------------------------------------------
// Canonical JSONL
// ---------------------------------------------------------------------------

namespace {

// Field-path aware accessors: every type error names the offending path.
class FieldReader {
 public:
  FieldReader(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {}

  const json& require(const std::string& key) const {
    if (!obj_.contains(key))
      throw std::invalid_argument(where_ + ": missing field " + key);
    return obj_.at(key);
  }

  std::string str(const std::string& key) const {
    const json& v = require(key);
    if (!v.is_string()) fail(key, "string");
    return v.get<std::string>();
  }

  int integer(const std::string& key) const {
    const json& v = require(key);
    if (!v.is_number_integer()) fail(key, "integer");
    return v.get<int>();
  }

  std::optional<double> opt_number(const std::string& key) const {
    const json& v = require(key);
    if (v.is_null()) return std::nullopt;
    if (!v.is_number()) fail(key, "number|null");
    return v.get<double>();
  }

  std::optional<bool> opt_bool(const std::string& key) const {
    const json& v = require(key);
    if (v.is_null()) return std::nullopt;
    if (!v.is_boolean()) fail(key, "bool|null");
    return v.get<bool>();
  }

  std::optional<std::string> opt_str(const std::string& key) const {
    const json& v = require(key);
    if (v.is_null()) return std::nullopt;
    if (!v.is_string()) fail(key, "string|null");
    return v.get<std::string>();
  }

  const json& raw() const { return obj_; }
  const std::string& where() const { return where_; }

  [[noreturn]] void fail(const std::string& key, const std::string& expected) const {
    throw std::invalid_argument(where_ + ": field " + key + " must be " + expected);
  }

 private:
  const json& obj_;
  std::string where_;
};

const char* kTurnKeys[] = {"index",          "utterance",      "response",
                           "asr_confidences", "system_latency_s", "user_latency_s",
                           "topic",          "special_state",  "gold_breakdown",
                           "gold_sat",       "annotator_votes"};
const char* kConvKeys[] = {"id", "rating", "name_provided", "returning_user", "turns"};

void check_known_keys(const json& obj, const char* const* keys, std::size_t n,
                      const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (std::size_t k = 0; k < n; ++k)
      if (it.key() == keys[k]) { known = true; break; }
    if (!known)
      throw std::invalid_argument(where + ": unknown field " + it.key());
  }
}

Turn turn_from_json(const json& jt, const std::string& where) {
  if (!jt.is_object()) throw std::invalid_argument(where + ": turn must be an object");
  check_known_keys(jt, kTurnKeys, std::size(kTurnKeys), where);
  FieldReader r(jt, where);
  Turn t;
  t.index = r.integer("index");
  t.utterance = r.str("utterance");
  t.response = r.str("response");

  const json& asr = r.require("asr_confidences");
  if (!asr.is_null()) {
    if (!asr.is_array()) r.fail("asr_confidences", "[number]|null");
    std::vector<double> confs;
    for (std::size_t j = 0; j < asr.size(); ++j) {
      if (!asr[j].is_number())
        throw std::invalid_argument(where + ": field asr_confidences[" +
                                    std::to_string(j) + "] must be number");
      confs.push_back(asr[j].get<double>());
    }
    t.asr_confidences = std::move(confs);
  }

  t.system_latency_s = r.opt_number("system_latency_s");
  t.user_latency_s = r.opt_number("user_latency_s");
  t.topic = r.opt_str("topic");
  if (auto s = r.opt_str("special_state")) {
    try {
      t.special_state = special_state_from_string(*s);
    } catch (const std::invalid_argument&) {
      r.fail("special_state", "one of Stop|Profanity|Clarification|null");
    }
  }
  if (auto s = r.opt_str("gold_breakdown")) {
    try {
      t.gold_breakdown = breakdown_from_string(*s);
    } catch (const std::invalid_argument&) {
      r.fail("gold_breakdown", "one of NB|PB|B|null");
    }
  }
  if (auto s = r.opt_str("gold_sat")) {
    try {
      t.gold_sat = sat_from_string(*s);
    } catch (const std::invalid_argument&) {
      r.fail("gold_sat", "one of SAT|DSAT|null");
    }
  }
  if (jt.contains("annotator_votes") && !jt["annotator_votes"].is_null()) {
    const json& v = jt["annotator_votes"];
    if (!v.is_object()) r.fail("annotator_votes", "{NB,PB,B}|null");
    VoteCounts votes;
    votes.nb = v.value("NB", 0);
    votes.pb = v.value("PB", 0);
    votes.b = v.value("B", 0);
    t.annotator_votes = votes;
  }
  return t;
}

Conversation conversation_from_json(const json& jc, const std::string& where) {
  if (!jc.is_object())
    throw std::invalid_argument(where + ": conversation must be an object");
  check_known_keys(jc, kConvKeys, std::size(kConvKeys), where);
  FieldReader r(jc, where);
  Conversation c;
  c.id = r.str("id");
  c.final_rating = r.opt_number("rating");
  c.name_provided = r.opt_bool("name_provided");
  c.returning_user = r.opt_bool("returning_user");
  const json& turns = r.require("turns");
  if (!turns.is_array()) r.fail("turns", "array");
  for (std::size_t k = 0; k < turns.size(); ++k)
    c.turns.push_back(turn_from_json(turns[k], where + ": turns[" + std::to_string(k) + "]"));
  validate_conversation(c, where);
  return c;
}

json turn_to_json(const Turn& t) {
  json j;
  j["index"] = t.index;
  j["utterance"] = t.utterance;
  j["response"] = t.response;
  j["asr_confidences"] = t.asr_confidences ? json(*t.asr_confidences) : json(nullptr);
  j["system_latency_s"] = t.system_latency_s ? json(*t.system_latency_s) : json(nullptr);
  j["user_latency_s"] = t.user_latency_s ? json(*t.user_latency_s) : json(nullptr);
  j["topic"] = t.topic ? json(*t.topic) : json(nullptr);
  j["special_state"] = t.special_state ? json(to_string(*t.special_state)) : json(nullptr);
  j["gold_breakdown"] =
      t.gold_breakdown ? json(to_string(*t.gold_breakdown)) : json(nullptr);
  j["gold_sat"] = t.gold_sat ? json(to_string(*t.gold_sat)) : json(nullptr);
  if (t.annotator_votes) {
    j["annotator_votes"] = {{"NB", t.annotator_votes->nb},
                            {"PB", t.annotator_votes->pb},
                            {"B", t.annotator_votes->b}};
  }
  return j;
}

}  // namespace

std::vector<Conversation> parse_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<Conversation> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::string where = path.filename().string() + " line " + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw std::invalid_argument(where + ": malformed JSON: " + e.what());
    }
    out.push_back(conversation_from_json(j, where));
  }
  return out;
}

void write_jsonl(const std::vector<Conversation>& conversations,
                 const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing " + path.string());
  for (const Conversation& c : conversations) {
    json j;
    j["id"] = c.id;
    j["rating"] = c.final_rating ? json(*c.final_rating) : json(nullptr);
    j["name_provided"] = c.name_provided ? json(*c.name_provided) : json(nullptr);
    j["returning_user"] = c.returning_user ? json(*c.returning_user) : json(nullptr);
    json turns = json::array();
    for (const Turn& t : c.turns) turns.push_back(turn_to_json(t));
    j["turns"] = std::move(turns);
    out << j.dump() << "\n";
  }
}

DatasetSplit split_dataset(const std::vector<Conversation>& conversations,
                           double val_fraction, std::uint64_t seed) {
  const std::size_t n = conversations.size();
  if (n < 2) throw std::invalid_argument("split_dataset: need at least 2 conversations");
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw std::invalid_argument("split_dataset: val_fraction must be in (0, 1)");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);

  DatasetSplit split;
  split.seed = seed;
  for (std::size_t k = 0; k < n; ++k) {
    if (k < n_val)
      split.validation.push_back(conversations[order[k]]);
    else
      split.train.push_back(conversations[order[k]]);
  }
  return split;
}

// ---------------------------------------------------------------------------
// Equality (semantic round-trip checks)
// ---------------------------------------------------------------------------

bool operator==(const Turn& a, const Turn& b) {
  return a.index == b.index && a.utterance == b.utterance && a.response == b.response &&
         a.asr_confidences == b.asr_confidences &&
         a.system_latency_s == b.system_latency_s &&
         a.user_latency_s == b.user_latency_s && a.topic == b.topic &&
         a.special_state == b.special_state && a.gold_breakdown == b.gold_breakdown &&
         a.gold_sat == b.gold_sat && a.annotator_votes == b.annotator_votes;
}

bool operator==(const Conversation& a, const Conversation& b) {
  return a.id == b.id && a.turns == b.turns && a.final_rating == b.final_rating &&
         a.name_provided == b.name_provided && a.returning_user == b.returning_user;
}

}  // namespace convsat
