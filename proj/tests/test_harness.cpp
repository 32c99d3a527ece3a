#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"

#include "convsat/harness.hpp"
#include "json.hpp"
#include "test_support.hpp"

using namespace convsat;

namespace {

ModelConfig fast_config() {
  ModelConfig c;
  c.word_emb_dim = 6;
  c.char_emb_dim = 3;
  c.word_hidden = 3;
  c.char_hidden = 2;
  c.turn_hidden = 4;
  c.max_tokens_per_side = 24;
  c.dropout_p = 0.0;
  return c;
}

Turn sat_turn(int index, std::string u, SatLabel label) {
  Turn t;
  t.index = index;
  t.utterance = std::move(u);
  t.response = "ok";
  t.gold_sat = label;
  return t;
}

std::vector<Conversation> labeled_corpus(std::size_t n) {
  std::vector<Conversation> data;
  for (std::uint64_t s = 0; s < n; ++s) {
    Conversation c = testsupport::synth_conversation(s + 100, 4 + static_cast<int>(s % 2));
    for (Turn& t : c.turns) {
      if (!t.gold_sat) t.gold_sat = SatLabel::SAT;
      if (!t.gold_breakdown) t.gold_breakdown = BreakdownLabel::NB;
    }
    data.push_back(std::move(c));
  }
  return data;
}

// Text is constant; the only signal separating SAT from DSAT turns is the
// system latency feature. Used for the permutation-importance tests.
std::vector<Conversation> latency_corpus(std::size_t n_convs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Conversation> data;
  for (std::size_t c = 0; c < n_convs; ++c) {
    Conversation conv;
    conv.id = "lat" + std::to_string(c);
    conv.name_provided = true;    // constant column
    conv.returning_user = false;  // constant column
    for (int i = 1; i <= 4; ++i) {
      Turn t = sat_turn(i, "tell me more", SatLabel::SAT);
      const bool slow = (rng() & 1) != 0;
      t.system_latency_s = slow ? 4.0 : 0.25;
      t.gold_sat = slow ? SatLabel::DSAT : SatLabel::SAT;
      conv.turns.push_back(std::move(t));
    }
    data.push_back(std::move(conv));
  }
  return data;
}

FeatureSchema latency_schema() {
  FeatureSchema schema = alexa_full_schema();
  for (FeatureDef& def : schema.entries)
    def.enabled = def.id == 19 || def.id == 20 || def.id == 21;
  schema.validate();
  return schema;
}

}  // namespace

TEST_CASE("gold extraction counting contract") {
  auto data = labeled_corpus(3);  // turn counts 4, 5, 4

  const auto offline = extract_gold(data, Task::SatOffline, EvalOptions{false});
  REQUIRE(offline.size() == 3);
  for (std::size_t c = 0; c < 3; ++c) {
    CHECK(offline[c].conversation == c);
    CHECK(offline[c].turn == data[c].turns.size() - 1);
  }

  const auto all_turns = extract_gold(data, Task::SatOnline, EvalOptions{false});
  CHECK(all_turns.size() == 4 + 5 + 4);
  const auto trimmed = extract_gold(data, Task::SatOnline, EvalOptions{true});
  CHECK(trimmed.size() == 3 + 4 + 3);

  // Default options: online satisfaction skips the final turn, the rest keep it.
  CHECK(default_eval_options(Task::SatOnline).exclude_final_turn);
  CHECK_FALSE(default_eval_options(Task::Breakdown).exclude_final_turn);
  CHECK_FALSE(default_eval_options(Task::SatOffline).exclude_final_turn);

  // A single-turn conversation contributes nothing once its last turn is cut.
  Conversation single;
  single.id = "solo";
  single.turns = {sat_turn(1, "hi", SatLabel::SAT)};
  CHECK(extract_gold({single}, Task::SatOnline, EvalOptions{true}).empty());
  CHECK(extract_gold({single}, Task::SatOnline, EvalOptions{false}).size() == 1);
}

TEST_CASE("gold extraction reports which conversations lack labels") {
  auto data = labeled_corpus(2);
  data[0].id = "first";
  data[1].id = "second";
  data[1].turns[1].gold_sat.reset();
  CHECK_THROWS_WITH_AS(extract_gold(data, Task::SatOnline, EvalOptions{false}),
                       doctest::Contains("second"), std::invalid_argument);

  data[0].turns[0].gold_sat.reset();
  CHECK_THROWS_WITH_AS(extract_gold(data, Task::SatOnline, EvalOptions{false}),
                       doctest::Contains("first, second"), std::invalid_argument);

  // Offline: a final rating substitutes for a labeled final turn.
  Conversation rated;
  rated.id = "rated";
  rated.turns = {sat_turn(1, "hi", SatLabel::SAT)};
  rated.turns[0].gold_sat.reset();
  rated.final_rating = 4.0;
  const auto got = extract_gold({rated}, Task::SatOffline, EvalOptions{false});
  REQUIRE(got.size() == 1);
  CHECK(got[0].label == 1);
  rated.final_rating = 2.0;
  CHECK(extract_gold({rated}, Task::SatOffline, EvalOptions{false})[0].label == 0);
  rated.final_rating.reset();
  CHECK_THROWS_AS(extract_gold({rated}, Task::SatOffline, EvalOptions{false}),
                  std::invalid_argument);
}

TEST_CASE("breakdown labels derive from annotator votes") {
  auto data = labeled_corpus(1);
  data[0].turns[0].gold_breakdown.reset();
  data[0].turns[0].annotator_votes = VoteCounts{3, 10, 17};
  data[0].turns[1].gold_breakdown = BreakdownLabel::NB;
  data[0].turns[1].annotator_votes.reset();
  derive_breakdown_from_votes(data);
  CHECK(data[0].turns[0].gold_breakdown == BreakdownLabel::B);
  CHECK(data[0].turns[1].gold_breakdown == BreakdownLabel::NB);
}

TEST_CASE("evaluate agrees with metrics computed by hand and leaves the model alone") {
  const auto data = labeled_corpus(4);
  const Vocab vocab = build_vocab(data, 1);
  ModelConfig config = fast_config();
  apply_task(config, Task::Breakdown);
  const ConvSatModel<float> model(config, vocab, 21);

  const ParamStore<float> params_before = model.params();
  const EvalOptions options{false};
  const MetricsReport report = evaluate(model, data, Task::Breakdown, options);
  CHECK(model.params() == params_before);

  std::vector<int> gold, pred;
  for (const Conversation& conv : data) {
    const auto dists = model.forward_online(conv);
    for (std::size_t t = 0; t < conv.turns.size(); ++t) {
      gold.push_back(gold_class_of_turn(conv.turns[t], Task::Breakdown));
      pred.push_back(decide(dists[t], config.head).class_index);
    }
  }
  const MetricsReport manual = compute_metrics(gold, pred, Task::Breakdown);
  CHECK(report.n_examples == manual.n_examples);
  CHECK(report.micro_accuracy == manual.micro_accuracy);
  CHECK(report.macro_f1 == manual.macro_f1);
  CHECK(report.confusion == manual.confusion);

  // Repeat runs are identical even though scoring fans out across threads.
  const MetricsReport again = evaluate(model, data, Task::Breakdown, options);
  CHECK(again.to_json_string() == report.to_json_string());

  // Task and head must agree.
  CHECK_THROWS_AS(evaluate(model, data, Task::SatOnline, options), std::invalid_argument);
}

TEST_CASE("heuristic baseline scores its own labels perfectly") {
  const FeatureSchema schema = alexa_full_schema();
  std::vector<Conversation> data;
  for (std::uint64_t s = 0; s < 5; ++s) {
    Conversation c = testsupport::synth_conversation(s + 40, 5);
    if (!c.final_rating) c.final_rating = 4.5;
    const WeakLabeling labeling = weak_label_conversation(c, schema);
    for (std::size_t i = 0; i < c.turns.size(); ++i) c.turns[i].gold_sat = labeling.labels[i];
    data.push_back(std::move(c));
  }
  for (const EvalOptions options : {EvalOptions{false}, EvalOptions{true}}) {
    const MetricsReport r = heuristic_baseline_eval(data, Task::SatOnline, schema, options);
    CHECK(r.micro_accuracy == 1.0);
    CHECK(r.macro_f1 == 1.0);
  }
  const MetricsReport off =
      heuristic_baseline_eval(data, Task::SatOffline, schema, EvalOptions{false});
  CHECK(off.micro_accuracy == 1.0);

  CHECK_THROWS_AS(heuristic_baseline_eval(data, Task::Breakdown, schema, EvalOptions{false}),
                  std::invalid_argument);
}

TEST_CASE("heuristic baseline hand-scored fixture") {
  // Rules never fire: neutral text, no rating runs. Labels come from the
  // imputation seed, i.e. the conversation-level label everywhere.
  Conversation conv;
  conv.id = "seeded";
  conv.final_rating = 5.0;
  for (int i = 1; i <= 4; ++i)
    conv.turns.push_back(sat_turn(i, "tell me something", SatLabel::SAT));
  conv.turns[1].gold_sat = SatLabel::DSAT;  // one disagreement with the seed

  const MetricsReport r = heuristic_baseline_eval({conv}, Task::SatOnline,
                                                  alexa_full_schema(), EvalOptions{false});
  CHECK(r.n_examples == 4);
  CHECK(r.micro_accuracy == doctest::Approx(0.75));
  CHECK(r.per_class[1].recall == 1.0);   // every gold SAT predicted SAT
  CHECK(r.per_class[0].recall == 0.0);   // the gold DSAT turn was missed
}

TEST_CASE("training is deterministic and restores the best parameters") {
  const auto data = labeled_corpus(4);
  ModelConfig config = fast_config();
  config.lr = 1e-3;

  TrainOptions options;
  options.epochs = 3;
  options.patience = 10;
  options.batch_size = 2;
  options.seed = 5;

  const TrainResult a = train(config, Task::SatOnline, data, data, options);
  const TrainResult b = train(config, Task::SatOnline, data, data, options);

  REQUIRE(a.log.epochs.size() == 3);
  REQUIRE(b.log.epochs.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) {
    CHECK(a.log.epochs[e].train_loss == b.log.epochs[e].train_loss);
    CHECK(a.log.epochs[e].val_macro_f1 == b.log.epochs[e].val_macro_f1);
  }
  CHECK(a.log.best_epoch == b.log.best_epoch);
  CHECK(a.model.params() == b.model.params());
  CHECK(std::isfinite(a.log.epochs[0].train_loss));

  const EvalOptions eopts = default_eval_options(Task::SatOnline);
  const MetricsReport ra = evaluate(a.model, data, Task::SatOnline, eopts);
  const MetricsReport rb = evaluate(b.model, data, Task::SatOnline, eopts);
  CHECK(ra.to_json_string() == rb.to_json_string());

  // The returned parameters are the best epoch's snapshot.
  double best = -1.0;
  int best_epoch = 0;
  for (const EpochLog& e : a.log.epochs)
    if (e.val_macro_f1 > best) {
      best = e.val_macro_f1;
      best_epoch = e.epoch;
    }
  CHECK(a.log.best_epoch == best_epoch);
  CHECK(a.log.best_val_macro_f1 == best);

  const nlohmann::json j = nlohmann::json::parse(a.log.to_json_string());
  CHECK(j.at("training_version").get<int>() == 1);
  CHECK(j.at("epochs").size() == 3);
  CHECK(j.at("best_epoch").get<int>() == best_epoch);
}

TEST_CASE("patience counts epochs beyond the best one") {
  const auto data = labeled_corpus(3);
  ModelConfig config = fast_config();
  config.lr = 1e-9;  // parameters barely move, so the validation score plateaus

  TrainOptions options;
  options.epochs = 10;
  options.batch_size = 4;
  options.seed = 3;

  options.patience = 0;
  const TrainLog p0 = train(config, Task::SatOnline, data, data, options).log;
  REQUIRE(p0.early_stopped);
  CHECK(p0.best_epoch == 1);
  CHECK(static_cast<int>(p0.epochs.size()) == p0.best_epoch + 1);

  options.patience = 2;
  const TrainLog p2 = train(config, Task::SatOnline, data, data, options).log;
  REQUIRE(p2.early_stopped);
  CHECK(static_cast<int>(p2.epochs.size()) == p2.best_epoch + 3);
}

TEST_CASE("training validates labels before spending any epochs") {
  auto data = labeled_corpus(2);
  data[1].id = "unlabeled";
  for (Turn& t : data[1].turns) t.gold_sat.reset();
  const TrainOptions options;
  CHECK_THROWS_WITH_AS(train(fast_config(), Task::SatOnline, data, data, options),
                       doctest::Contains("unlabeled"), std::invalid_argument);
}

TEST_CASE("permutation importance singles out the feature the labels depend on") {
  const auto data = latency_corpus(16, 9);
  ModelConfig config = fast_config();
  config.use_chars = false;
  config.schema = latency_schema();
  config.lr = 0.02;

  TrainOptions topts;
  topts.epochs = 60;
  topts.patience = 60;
  topts.batch_size = 4;
  topts.seed = 1;
  const TrainResult fit = train(config, Task::SatOnline, data, data, topts);

  const EvalOptions options{false};
  const MetricsReport base = evaluate(fit.model, data, Task::SatOnline, options);
  REQUIRE(base.micro_accuracy > 0.9);  // the latency rule must actually be learned

  const auto table = permutation_importance_table(fit.model, data, Task::SatOnline, 7, 3, options);
  REQUIRE(table.size() == 3);
  CHECK(table[0].feature_id == 21);
  CHECK(table[0].mean_f1_drop > 0.0);
  for (const auto& entry : table)
    if (entry.feature_id != 21) CHECK(entry.mean_f1_drop == 0.0);  // constant columns

  // The standalone call matches the table's row for the same seed.
  const double single =
      permutation_importance(fit.model, data, Task::SatOnline, 21, 7, 3, options);
  CHECK(single == table[0].mean_f1_drop);

  const std::string csv = importance_csv(table);
  CHECK(csv.find("rank,feature,name,mean_macro_f1_drop") == 0);
  CHECK(csv.find("F21") != std::string::npos);

  CHECK_THROWS_AS(permutation_importance(fit.model, data, Task::SatOnline, 21, 7, 0, options),
                  std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      permutation_importance(fit.model, data, Task::SatOnline, 5, 7, 3, options),
      doctest::Contains("F5"), std::invalid_argument);

  ModelConfig plain = fast_config();
  plain.use_features = false;
  const ConvSatModel<float> no_features(plain, build_vocab(data, 1), 1);
  CHECK_THROWS_AS(
      permutation_importance(no_features, data, Task::SatOnline, 21, 7, 3, options),
      std::invalid_argument);
}

TEST_CASE("fold evaluation reports mean and spread") {
  const auto data = labeled_corpus(6);
  const Vocab vocab = build_vocab(data, 1);
  ModelConfig config = fast_config();
  apply_task(config, Task::Breakdown);
  const ConvSatModel<float> model(config, vocab, 33);

  const EvalOptions options{false};
  const FoldSummary summary = evaluate_folds(model, data, Task::Breakdown, 2, 11, options);
  REQUIRE(summary.per_fold.size() == 2);
  CHECK(summary.folds == 2);
  CHECK(summary.per_fold[0].n_examples + summary.per_fold[1].n_examples ==
        static_cast<long long>(extract_gold(data, Task::Breakdown, options).size()));

  const double mean =
      (summary.per_fold[0].micro_accuracy + summary.per_fold[1].micro_accuracy) / 2.0;
  CHECK(summary.mean_accuracy == doctest::Approx(mean).epsilon(1e-12));
  const double dev = std::abs(summary.per_fold[0].micro_accuracy - mean);
  CHECK(summary.std_accuracy == doctest::Approx(std::sqrt(2.0) * dev).epsilon(1e-9));

  // Same seed, same folds; the summary is reproducible.
  CHECK(evaluate_folds(model, data, Task::Breakdown, 2, 11, options).to_json_string() ==
        summary.to_json_string());

  const nlohmann::json j = nlohmann::json::parse(summary.to_json_string());
  CHECK(j.at("folds_version").get<int>() == 1);
  CHECK(j.at("folds").get<int>() == 2);
  CHECK(j.at("note").get<std::string>().find("approximation") != std::string::npos);
  CHECK(summary.to_text_table().find("+-") != std::string::npos);

  CHECK_THROWS_AS(evaluate_folds(model, data, Task::Breakdown, 0, 11, options),
                  std::invalid_argument);
  CHECK_THROWS_AS(evaluate_folds(model, data, Task::Breakdown, 7, 11, options),
                  std::invalid_argument);
}
