#include "convsat/weak_label.hpp"

#include <algorithm>
#include <map>

namespace convsat {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

constexpr int kRunLength = 4;
constexpr double kSatPseudo = 5.0;
constexpr double kDsatPseudo = 1.0;
constexpr double kSatThreshold = 3.5;

double pseudo_rating(SatLabel l) { return l == SatLabel::SAT ? kSatPseudo : kDsatPseudo; }

// Marks every position inside a maximal run of length >= kRunLength, where a
// run is a stretch of consecutive positions with keep[i] true and equal keys.
template <typename Key>
void mark_runs(const std::vector<Key>& keys, const std::vector<bool>& keep,
               std::vector<bool>& out) {
  const std::size_t n = keys.size();
  std::size_t start = 0;
  while (start < n) {
    if (!keep[start]) {
      ++start;
      continue;
    }
    std::size_t end = start + 1;
    while (end < n && keep[end] && keys[end] == keys[start]) ++end;
    if (end - start >= kRunLength)
      for (std::size_t k = start; k < end; ++k) out[k] = true;
    start = end;
  }
}

}  // namespace

std::string to_string(WeakRule r) {
  switch (r) {
    case WeakRule::Engagement: return "engagement";
    case WeakRule::AffirmRun: return "affirm_run";
    case WeakRule::NegateRun: return "negate_run";
    case WeakRule::FinalRating: return "final_rating";
    case WeakRule::Imputed: return "imputed";
  }
  fail("unknown weak rule");
}

WeakRule weak_rule_from_string(const std::string& s) {
  if (s == "engagement") return WeakRule::Engagement;
  if (s == "affirm_run") return WeakRule::AffirmRun;
  if (s == "negate_run") return WeakRule::NegateRun;
  if (s == "final_rating") return WeakRule::FinalRating;
  if (s == "imputed") return WeakRule::Imputed;
  fail("unknown weak rule \"" + s + "\"");
}

PartialLabeling apply_rules(const Conversation& conv, const FeatureSchema& schema,
                            std::optional<SatLabel> final_sat, const IntentRuleSet* rules) {
  if (conv.turns.empty()) fail("conversation " + conv.id + " has no turns");
  if (!final_sat) {
    if (!conv.final_rating)
      fail("conversation " + conv.id + " has neither a final rating nor an explicit label");
    final_sat = rating_to_sat(*conv.final_rating);
  }
  const IntentRuleSet& intent_rules = rules ? *rules : default_intent_rules();
  const std::size_t n = conv.turns.size();

  std::vector<TopicTag> tags(n);
  std::vector<Intent> intents(n);
  for (std::size_t i = 0; i < n; ++i) {
    tags[i] = tag_of_turn(conv.turns[i], schema);
    intents[i] = classify_intent(conv.turns[i].utterance, intent_rules);
  }

  std::vector<bool> topic_like(n), affirm(n), negate(n);
  for (std::size_t i = 0; i < n; ++i) {
    topic_like[i] = tags[i].kind == TopicTag::Kind::Topic;
    affirm[i] = intents[i] == Intent::Affirmation;
    negate[i] = intents[i] == Intent::Negation;
  }
  std::vector<bool> in_engagement(n), in_affirm(n), in_negate(n);
  mark_runs(tags, topic_like, in_engagement);
  mark_runs(intents, affirm, in_affirm);
  mark_runs(intents, negate, in_negate);

  PartialLabeling out;
  out.labels.assign(n, std::nullopt);
  out.rule_fired.assign(n, std::nullopt);
  // Low to high precedence; later passes overwrite.
  for (std::size_t i = 0; i < n; ++i)
    if (in_engagement[i]) {
      out.labels[i] = SatLabel::SAT;
      out.rule_fired[i] = WeakRule::Engagement;
    }
  for (std::size_t i = 0; i < n; ++i)
    if (in_affirm[i]) {
      out.labels[i] = SatLabel::SAT;
      out.rule_fired[i] = WeakRule::AffirmRun;
    }
  for (std::size_t i = 0; i < n; ++i)
    if (in_negate[i]) {
      out.labels[i] = SatLabel::DSAT;
      out.rule_fired[i] = WeakRule::NegateRun;
    }
  out.labels[n - 1] = *final_sat;
  out.rule_fired[n - 1] = WeakRule::FinalRating;
  return out;
}

WeakLabeling impute(const PartialLabeling& partial) {
  const std::size_t n = partial.labels.size();
  if (n == 0) fail("cannot impute an empty labeling");
  if (partial.rule_fired.size() != n) fail("labels and rule_fired differ in length");
  for (std::size_t i = 0; i < n; ++i)
    if (partial.labels[i].has_value() != partial.rule_fired[i].has_value())
      fail("turn " + std::to_string(i + 1) + ": label and rule provenance must agree");
  if (!partial.labels[n - 1]) fail("final turn must be labeled before imputation");

  const double seed = pseudo_rating(*partial.labels[n - 1]);
  WeakLabeling out;
  out.labels.resize(n);
  out.rules.resize(n);
  double sum = 0.0;
  int count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (partial.labels[i]) {
      sum += pseudo_rating(*partial.labels[i]);
      ++count;
      out.labels[i] = *partial.labels[i];
      out.rules[i] = *partial.rule_fired[i];
    } else {
      const double mean = count > 0 ? sum / count : seed;
      out.labels[i] = mean > kSatThreshold ? SatLabel::SAT : SatLabel::DSAT;
      out.rules[i] = WeakRule::Imputed;
    }
  }
  return out;
}

WeakLabeling weak_label_conversation(const Conversation& conv, const FeatureSchema& schema,
                                     std::optional<SatLabel> final_sat,
                                     const IntentRuleSet* rules) {
  return impute(apply_rules(conv, schema, final_sat, rules));
}

// ---------------------------------------------------------------------------
// Agreement statistics
// ---------------------------------------------------------------------------

namespace {
constexpr double kDegenerateEps = 1e-15;
}

KappaResult cohen_kappa(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) fail("cohen_kappa: sequences differ in length");
  if (a.empty()) fail("cohen_kappa: empty sequences");
  const double n = static_cast<double>(a.size());
  std::map<int, int> ca, cb;
  int agree = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0 || b[i] < 0) fail("cohen_kappa: labels must be non-negative");
    ++ca[a[i]];
    ++cb[b[i]];
    agree += a[i] == b[i];
  }
  const double po = agree / n;
  double pe = 0.0;
  for (const auto& [label, count] : ca) {
    auto it = cb.find(label);
    if (it != cb.end()) pe += (count / n) * (it->second / n);
  }

  KappaResult res;
  if (1.0 - pe <= kDegenerateEps) {
    res.degenerate = true;
    if (1.0 - po <= kDegenerateEps) {
      res.value = 1.0;
      res.warning = "both raters constant with perfect agreement; kappa set to 1.0";
    } else {
      res.value = 0.0;
      res.warning = "expected agreement is 1; kappa undefined, set to 0.0";
    }
    return res;
  }
  res.value = (po - pe) / (1.0 - pe);
  if (ca.size() == 1 || cb.size() == 1) {
    res.degenerate = true;
    res.warning = "a rater used a single category; kappa is uninformative";
  }
  return res;
}

KappaResult fleiss_kappa(const std::vector<std::vector<int>>& counts) {
  if (counts.empty()) fail("fleiss_kappa: no items");
  const std::size_t categories = counts.front().size();
  if (categories == 0) fail("fleiss_kappa: no categories");
  long long raters = 0;
  for (const auto& row : counts) {
    if (row.size() != categories) fail("fleiss_kappa: ragged count matrix");
    long long sum = 0;
    for (int c : row) {
      if (c < 0) fail("fleiss_kappa: negative count");
      sum += c;
    }
    if (raters == 0) raters = sum;
    if (sum != raters) fail("fleiss_kappa: rows must sum to the same rater count");
  }
  if (raters < 2) fail("fleiss_kappa: needs at least 2 raters per item");

  const double N = static_cast<double>(counts.size());
  const double n = static_cast<double>(raters);
  double p_bar = 0.0;
  std::vector<double> p_cat(categories, 0.0);
  for (const auto& row : counts) {
    double same = 0.0;
    for (std::size_t k = 0; k < categories; ++k) {
      same += static_cast<double>(row[k]) * (row[k] - 1);
      p_cat[k] += row[k];
    }
    p_bar += same / (n * (n - 1.0));
  }
  p_bar /= N;
  double pe = 0.0;
  for (double& p : p_cat) {
    p /= N * n;
    pe += p * p;
  }

  KappaResult res;
  if (1.0 - pe <= kDegenerateEps) {
    res.degenerate = true;
    res.value = 0.0;
    res.warning = "a single category was used everywhere; kappa undefined, set to 0.0";
    return res;
  }
  res.value = (p_bar - pe) / (1.0 - pe);
  return res;
}

}  // namespace convsat
