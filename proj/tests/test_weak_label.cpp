#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <vector>

#include "doctest.h"

#include "convsat/features.hpp"
#include "convsat/weak_label.hpp"

using namespace convsat;

namespace {

Conversation make_conv(const std::vector<std::string>& utterances,
                       const std::vector<std::string>& topics, std::optional<double> rating) {
  Conversation conv;
  conv.id = "weak-fixture";
  conv.final_rating = rating;
  for (std::size_t i = 0; i < utterances.size(); ++i) {
    Turn t;
    t.index = static_cast<int>(i) + 1;
    t.utterance = utterances[i];
    t.response = "ok";
    if (i < topics.size() && !topics[i].empty()) t.topic = topics[i];
    conv.turns.push_back(std::move(t));
  }
  return conv;
}

const std::vector<std::string> kNeutral = {"tell me something", "tell me something",
                                           "tell me something", "tell me something",
                                           "tell me something", "tell me something"};

}  // namespace

TEST_CASE("engagement runs of four or more label SAT") {
  const auto conv = make_conv(kNeutral, {"movies", "movies", "movies", "movies", "movies", ""},
                              5.0);
  const PartialLabeling partial = apply_rules(conv, alexa_full_schema());
  for (int t = 0; t < 5; ++t) {
    REQUIRE(partial.labels[t].has_value());
    CHECK(*partial.labels[t] == SatLabel::SAT);
  }
  for (int t = 0; t < 4; ++t) CHECK(*partial.rule_fired[t] == WeakRule::Engagement);
  CHECK(*partial.rule_fired[5] == WeakRule::FinalRating);
  CHECK(*partial.labels[5] == SatLabel::SAT);
}

TEST_CASE("four consecutive negations label DSAT") {
  const auto conv = make_conv({"no", "no way", "nope", "no stop"}, {}, 1.0);
  const WeakLabeling full = weak_label_conversation(conv, alexa_full_schema());
  for (int t = 0; t < 4; ++t) CHECK(full.labels[t] == SatLabel::DSAT);
  CHECK(full.rules[0] == WeakRule::NegateRun);
  CHECK(full.rules[3] == WeakRule::FinalRating);  // final rule wins the overlap
}

TEST_CASE("four consecutive affirmations label SAT") {
  const auto conv =
      make_conv({"yes", "yeah", "sure", "yes please", "tell me something"}, {}, 2.0);
  const PartialLabeling partial = apply_rules(conv, alexa_full_schema());
  for (int t = 0; t < 4; ++t) {
    CHECK(*partial.labels[t] == SatLabel::SAT);
    CHECK(*partial.rule_fired[t] == WeakRule::AffirmRun);
  }
  CHECK(*partial.labels[4] == SatLabel::DSAT);
  CHECK(*partial.rule_fired[4] == WeakRule::FinalRating);
}

TEST_CASE("three in a row is not a run") {
  const auto conv = make_conv({"yes", "yeah", "sure", "tell me something"}, {}, 5.0);
  const PartialLabeling partial = apply_rules(conv, alexa_full_schema());
  CHECK_FALSE(partial.labels[0].has_value());
  CHECK_FALSE(partial.labels[1].has_value());
  CHECK_FALSE(partial.labels[2].has_value());
  CHECK(partial.labels[3].has_value());
}

TEST_CASE("single turn conversation gets the rating label") {
  const auto conv = make_conv({"hello"}, {}, 2.0);
  const PartialLabeling partial = apply_rules(conv, alexa_full_schema());
  REQUIRE(partial.labels.size() == 1);
  CHECK(*partial.labels[0] == SatLabel::DSAT);
  CHECK(*partial.rule_fired[0] == WeakRule::FinalRating);
}

TEST_CASE("negation run outranks engagement on overlap") {
  const auto conv = make_conv({"no", "nope", "no way", "no thanks", "tell me something"},
                              {"movies", "movies", "movies", "movies", "movies"}, 5.0);
  const PartialLabeling partial = apply_rules(conv, alexa_full_schema());
  for (int t = 0; t < 4; ++t) {
    CHECK(*partial.labels[t] == SatLabel::DSAT);
    CHECK(*partial.rule_fired[t] == WeakRule::NegateRun);
  }
}

TEST_CASE("rules require a rating or an explicit final label") {
  const auto conv = make_conv({"hello"}, {}, std::nullopt);
  CHECK_THROWS_AS(apply_rules(conv, alexa_full_schema()), std::invalid_argument);
  const PartialLabeling partial =
      apply_rules(conv, alexa_full_schema(), SatLabel::SAT);
  CHECK(*partial.labels[0] == SatLabel::SAT);
}

TEST_CASE("imputation propagates the running pseudo-rating mean") {
  PartialLabeling partial;
  partial.labels = {SatLabel::SAT, std::nullopt, std::nullopt, SatLabel::SAT};
  partial.rule_fired = {WeakRule::Engagement, std::nullopt, std::nullopt, WeakRule::FinalRating};
  const WeakLabeling out = impute(partial);
  CHECK(out.labels ==
        std::vector<SatLabel>{SatLabel::SAT, SatLabel::SAT, SatLabel::SAT, SatLabel::SAT});
  CHECK(out.rules[1] == WeakRule::Imputed);

  PartialLabeling down;
  down.labels = {SatLabel::DSAT, std::nullopt, SatLabel::DSAT};
  down.rule_fired = {WeakRule::NegateRun, std::nullopt, WeakRule::FinalRating};
  CHECK(impute(down).labels[1] == SatLabel::DSAT);

  PartialLabeling mixed;
  mixed.labels = {SatLabel::SAT, SatLabel::DSAT, std::nullopt, SatLabel::DSAT};
  mixed.rule_fired = {WeakRule::AffirmRun, WeakRule::NegateRun, std::nullopt,
                      WeakRule::FinalRating};
  CHECK(impute(mixed).labels[2] == SatLabel::DSAT);  // mean (5+1)/2 = 3.0
}

TEST_CASE("imputation seeds from the final label when nothing precedes") {
  PartialLabeling partial;
  partial.labels = {std::nullopt, std::nullopt, SatLabel::SAT};
  partial.rule_fired = {std::nullopt, std::nullopt, WeakRule::FinalRating};
  const WeakLabeling out = impute(partial);
  CHECK(out.labels ==
        std::vector<SatLabel>{SatLabel::SAT, SatLabel::SAT, SatLabel::SAT});
  CHECK(out.rules == std::vector<WeakRule>{WeakRule::Imputed, WeakRule::Imputed,
                                           WeakRule::FinalRating});
}

TEST_CASE("imputed turns never join the running mean") {
  PartialLabeling partial;
  partial.labels = {SatLabel::DSAT, std::nullopt, SatLabel::SAT, SatLabel::SAT,
                    std::nullopt,   std::nullopt, SatLabel::DSAT};
  partial.rule_fired = {WeakRule::NegateRun, std::nullopt,   WeakRule::AffirmRun,
                        WeakRule::AffirmRun, std::nullopt,   std::nullopt,
                        WeakRule::FinalRating};
  const WeakLabeling out = impute(partial);
  CHECK(out.labels[1] == SatLabel::DSAT);  // mean over rule labels so far: 1.0
  // Turn 5 averages the rule labels only: (1+5+5)/3 > 3.5. Had turn 2's
  // imputed DSAT joined the mean it would read (1+1+5+5)/4 = 3.0 -> DSAT.
  CHECK(out.labels[4] == SatLabel::SAT);
  CHECK(out.labels[5] == SatLabel::SAT);
}

TEST_CASE("imputation is idempotent") {
  PartialLabeling partial;
  partial.labels = {SatLabel::SAT, std::nullopt, SatLabel::DSAT, std::nullopt, SatLabel::DSAT};
  partial.rule_fired = {WeakRule::AffirmRun, std::nullopt, WeakRule::NegateRun, std::nullopt,
                        WeakRule::FinalRating};
  const WeakLabeling once = impute(partial);
  PartialLabeling relabeled;
  for (std::size_t t = 0; t < once.labels.size(); ++t) {
    relabeled.labels.push_back(once.labels[t]);
    relabeled.rule_fired.push_back(once.rules[t]);
  }
  const WeakLabeling twice = impute(relabeled);
  CHECK(twice.labels == once.labels);
}

TEST_CASE("no rule firing leaves every turn on the final label") {
  const auto sat_conv = make_conv(kNeutral, {}, 5.0);
  const WeakLabeling out = weak_label_conversation(sat_conv, alexa_full_schema());
  for (const SatLabel l : out.labels) CHECK(l == SatLabel::SAT);

  const auto dsat_conv = make_conv(kNeutral, {}, 1.5);
  const WeakLabeling out2 = weak_label_conversation(dsat_conv, alexa_full_schema());
  for (const SatLabel l : out2.labels) CHECK(l == SatLabel::DSAT);
}

TEST_CASE("cohen kappa on hand-computed contingency tables") {
  const int SAT = 1, DSAT = 0;
  KappaResult r = cohen_kappa({SAT, DSAT, SAT, DSAT}, {SAT, DSAT, SAT, DSAT});
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(r.degenerate);

  r = cohen_kappa({SAT, SAT, DSAT, DSAT}, {SAT, DSAT, DSAT, SAT});
  CHECK(r.value == doctest::Approx(0.0).epsilon(1e-12));

  // 2x2 with po=0.6, pe=0.5: kappa = 0.2
  r = cohen_kappa({1, 1, 1, 0, 0, 0, 1, 0, 1, 0}, {1, 1, 0, 0, 0, 1, 1, 0, 0, 1});
  CHECK(r.value == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("cohen kappa degenerate marginals return zero with a warning") {
  const KappaResult r = cohen_kappa({1, 1, 1, 1}, {0, 0, 0, 0});
  CHECK(r.value == 0.0);
  CHECK(r.degenerate);
  CHECK_FALSE(r.warning.empty());

  const KappaResult perfect = cohen_kappa({1, 1, 1}, {1, 1, 1});
  CHECK(perfect.value == 1.0);  // pe = 1 and po = 1
  CHECK(perfect.degenerate);

  CHECK_THROWS_AS(cohen_kappa({1, 2}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(cohen_kappa({}, {}), std::invalid_argument);
}

TEST_CASE("fleiss kappa on fixed matrices") {
  // Three items, four raters, everyone agrees (two different categories used).
  KappaResult r = fleiss_kappa({{4, 0}, {0, 4}, {4, 0}});
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-12));

  // Two items, two raters, complete disagreement: P_i = 0, pe = 0.5 -> -1.
  r = fleiss_kappa({{1, 1}, {1, 1}});
  CHECK(r.value == doctest::Approx(-1.0).epsilon(1e-12));

  // Worked example: P-bar = 7/15, pe = 1/2 via brute-force formula.
  const std::vector<std::vector<int>> m = {{3, 3}, {6, 0}, {0, 6}, {3, 3}, {3, 3}};
  double pbar = 0, pe = 0;
  double cat0 = 0, cat1 = 0, total = 0;
  for (const auto& row : m) {
    const double n = 6;
    pbar += (row[0] * (row[0] - 1.0) + row[1] * (row[1] - 1.0)) / (n * (n - 1.0)) / 5.0;
    cat0 += row[0];
    cat1 += row[1];
    total += n;
  }
  pe = (cat0 / total) * (cat0 / total) + (cat1 / total) * (cat1 / total);
  r = fleiss_kappa(m);
  CHECK(r.value == doctest::Approx((pbar - pe) / (1 - pe)).epsilon(1e-12));
}

TEST_CASE("fleiss kappa degenerate and error cases") {
  const KappaResult r = fleiss_kappa({{3, 0}, {3, 0}});
  CHECK(r.value == 0.0);
  CHECK(r.degenerate);
  CHECK_FALSE(r.warning.empty());

  CHECK_THROWS_AS(fleiss_kappa({{2, 1}, {1, 1}}), std::invalid_argument);  // unequal sums
  CHECK_THROWS_AS(fleiss_kappa({{1, 0}, {0, 1}}), std::invalid_argument);  // n < 2
  CHECK_THROWS_AS(fleiss_kappa({}), std::invalid_argument);
}
