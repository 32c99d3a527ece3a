#pragma once
// Weak supervision for satisfaction: per-turn SAT/DSAT labels derived from
// rated conversations by keyword/engagement rules plus running-mean
// imputation, and the agreement statistics used to sanity-check them.

#include <optional>
#include <string>
#include <vector>

#include "convsat/conv_data.hpp"
#include "convsat/features.hpp"

namespace convsat {

enum class WeakRule { Engagement = 0, AffirmRun, NegateRun, FinalRating, Imputed };
std::string to_string(WeakRule r);
WeakRule weak_rule_from_string(const std::string& s);

// Per-turn outcome of the rule pass; labels[i] is set iff rule_fired[i] is.
struct PartialLabeling {
  std::vector<std::optional<SatLabel>> labels;
  std::vector<std::optional<WeakRule>> rule_fired;
};

// Fully labeled conversation: one entry per turn.
struct WeakLabeling {
  std::vector<SatLabel> labels;
  std::vector<WeakRule> rules;
};

// Rule pass. A turn is labeled SAT when it sits inside a same-topic
// engagement run of length >= 4 or a run of >= 4 consecutive affirmation
// intents; DSAT inside >= 4 consecutive negations. The last turn always
// receives the conversation-level label (final_sat when given, otherwise
// derived from final_rating; neither present is an error). On overlap the
// most explicit evidence wins: final_rating > negate_run > affirm_run >
// engagement.
PartialLabeling apply_rules(const Conversation& conv, const FeatureSchema& schema,
                            std::optional<SatLabel> final_sat = std::nullopt,
                            const IntentRuleSet* rules = nullptr);

// Fills unlabeled turns left to right: turn i becomes SAT iff the mean of
// pseudo-ratings (SAT = 5.0, DSAT = 1.0) over rule-labeled turns 1..i exceeds
// 3.5. Before the first rule-labeled turn the final turn's label seeds the
// mean. Imputed turns never join the mean. Requires the final turn labeled.
WeakLabeling impute(const PartialLabeling& partial);

// apply_rules followed by impute.
WeakLabeling weak_label_conversation(const Conversation& conv, const FeatureSchema& schema,
                                     std::optional<SatLabel> final_sat = std::nullopt,
                                     const IntentRuleSet* rules = nullptr);

// ---------------------------------------------------------------------------
// Agreement statistics
// ---------------------------------------------------------------------------

struct KappaResult {
  double value = 0.0;
  bool degenerate = false;  // chance-corrected denominator collapsed or a
                            // rater never varied; value set by convention
  std::string warning;      // human-readable note when degenerate
};

// Cohen kappa between two equal-length label sequences (labels as small
// non-negative ints). Perfect agreement with constant marginals is 1.0;
// other degenerate marginals yield 0.0 with a warning instead of an error.
KappaResult cohen_kappa(const std::vector<int>& a, const std::vector<int>& b);

// Fleiss kappa over an items x categories count matrix; every row must sum
// to the same rater count n >= 2. A single category used everywhere is
// degenerate and yields 0.0 with a warning.
KappaResult fleiss_kappa(const std::vector<std::vector<int>>& counts);

}  // namespace convsat
