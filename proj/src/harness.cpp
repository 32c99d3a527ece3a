#include "convsat/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <future>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace convsat {

namespace {

using Model = ConvSatModel<float>;
using FeatureRows = Model::FeatureRows;

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out += ", ";
    out += ids[i];
  }
  return out;
}

// Deterministic parallel map over conversations: strided chunks write to
// disjoint slots, results are merged by index order.
std::vector<std::vector<std::vector<float>>> forward_all(
    const Model& model, const std::vector<Conversation>& data,
    const std::vector<FeatureRows>* overrides) {
  const std::size_t n = data.size();
  std::vector<std::vector<std::vector<float>>> out(n);
  auto run = [&](std::size_t first, std::size_t stride) {
    for (std::size_t i = first; i < n; i += stride)
      out[i] = model.forward_online(data[i], overrides ? &(*overrides)[i] : nullptr);
  };
  std::size_t workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  workers = std::min(workers, n);
  if (workers <= 1) {
    run(0, 1);
    return out;
  }
  std::vector<std::future<void>> futures;
  futures.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w)
    futures.push_back(std::async(std::launch::async, run, w, workers));
  for (auto& f : futures) f.get();
  return out;
}

MetricsReport evaluate_impl(const Model& model, const std::vector<Conversation>& data, Task task,
                            const EvalOptions& options,
                            const std::vector<FeatureRows>* overrides) {
  if (head_for_task(task) != model.config().head)
    throw std::invalid_argument("model head " + to_string(model.config().head) +
                                " does not fit task " + to_string(task));
  const auto gold = extract_gold(data, task, options);
  const auto dists = forward_all(model, data, overrides);
  std::vector<int> g, p;
  g.reserve(gold.size());
  p.reserve(gold.size());
  for (const auto& ex : gold) {
    g.push_back(ex.label);
    p.push_back(decide(dists[ex.conversation][ex.turn], model.config().head).class_index);
  }
  MetricsReport report = compute_metrics(g, p, task);
  report.config_hash = model.params().config_hash;
  return report;
}

double sample_std(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

}  // namespace

EvalOptions default_eval_options(Task task) {
  EvalOptions o;
  o.exclude_final_turn = task == Task::SatOnline;
  return o;
}

int offline_gold(const Conversation& conv) {
  if (conv.final_rating) return static_cast<int>(rating_to_sat(*conv.final_rating));
  if (!conv.turns.empty() && conv.turns.back().gold_sat)
    return static_cast<int>(*conv.turns.back().gold_sat);
  return -1;
}

std::vector<int> conversation_gold(const Conversation& conv, Task task) {
  if (task == Task::SatOffline) return {offline_gold(conv)};
  std::vector<int> out;
  out.reserve(conv.turns.size());
  for (const Turn& t : conv.turns) out.push_back(gold_class_of_turn(t, task));
  return out;
}

std::vector<GoldExample> extract_gold(const std::vector<Conversation>& data, Task task,
                                      const EvalOptions& options) {
  if (data.empty()) throw std::invalid_argument("extract_gold: empty dataset");
  std::vector<GoldExample> out;
  std::vector<std::string> missing;
  for (std::size_t ci = 0; ci < data.size(); ++ci) {
    const Conversation& conv = data[ci];
    if (conv.turns.empty()) throw std::invalid_argument("conversation " + conv.id + " is empty");
    const std::vector<int> gold = conversation_gold(conv, task);
    bool ok = true;
    if (task == Task::SatOffline) {
      if (gold[0] < 0)
        ok = false;
      else
        out.push_back({ci, conv.turns.size() - 1, gold[0]});
    } else {
      std::size_t last = conv.turns.size();
      if (options.exclude_final_turn) --last;  // may leave nothing to score
      for (std::size_t t = 0; t < last; ++t) {
        if (gold[t] < 0) {
          ok = false;
          break;
        }
        out.push_back({ci, t, gold[t]});
      }
    }
    if (!ok) missing.push_back(conv.id);
  }
  if (!missing.empty())
    throw std::invalid_argument("missing gold labels for task " + to_string(task) +
                                " in conversations: " + join_ids(missing));
  return out;
}

void derive_breakdown_from_votes(std::vector<Conversation>& data) {
  for (Conversation& conv : data)
    for (Turn& turn : conv.turns)
      if (turn.annotator_votes) turn.gold_breakdown = majority_vote(*turn.annotator_votes);
}

MetricsReport evaluate(const ConvSatModel<float>& model, const std::vector<Conversation>& data,
                       Task task, const EvalOptions& options) {
  return evaluate_impl(model, data, task, options, nullptr);
}

TrainResult train(const ModelConfig& base_config, Task task,
                  const std::vector<Conversation>& train_set,
                  const std::vector<Conversation>& val_set, const TrainOptions& options) {
  if (train_set.empty() || val_set.empty())
    throw std::invalid_argument("train: empty train or validation split");
  if (options.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (options.patience < 0) throw std::invalid_argument("train: patience must be >= 0");
  if (options.batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");

  ModelConfig config = base_config;
  apply_task(config, task);
  config.validate();

  // Fail on label problems before any training work.
  const bool online = config.mode == PredictionMode::Online;
  std::vector<std::vector<int>> gold;
  gold.reserve(train_set.size());
  std::vector<std::string> missing;
  for (const Conversation& conv : train_set) {
    if (conv.turns.empty()) throw std::invalid_argument("conversation " + conv.id + " is empty");
    std::vector<int> g = conversation_gold(conv, task);
    if (std::any_of(g.begin(), g.end(), [](int v) { return v < 0; })) missing.push_back(conv.id);
    gold.push_back(std::move(g));
  }
  if (!missing.empty())
    throw std::invalid_argument("missing gold labels for task " + to_string(task) +
                                " in conversations: " + join_ids(missing));
  const EvalOptions val_options = default_eval_options(task);
  extract_gold(val_set, task, val_options);

  Model model(config, build_vocab(train_set, config.min_count), options.seed);
  if (!options.embedding_file.empty())
    load_word_embeddings(options.embedding_file, model.vocab(), model.params());

  ParamStore<float> grads = model.params().zeros_like();
  Adam<float> optimizer(model.params(), static_cast<float>(config.lr));
  std::set<std::string> frozen;
  if (config.freeze_word_emb) frozen.insert("word_emb");

  std::mt19937_64 shuffle_rng(options.seed + 1);
  std::mt19937_64 dropout_rng(options.seed + 2);

  TrainLog log;
  log.seed = options.seed;
  ParamStore<float> best_params = model.params();
  double best_f1 = -1.0;
  int best_epoch = 0;
  int since_best = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    long long example_count = 0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(options.batch_size)) {
      const std::size_t stop =
          std::min(order.size(), start + static_cast<std::size_t>(options.batch_size));
      long long batch_examples = 0;
      for (std::size_t i = start; i < stop; ++i)
        batch_examples += online ? static_cast<long long>(train_set[order[i]].turns.size()) : 1;
      grads.zero_all();
      for (std::size_t i = start; i < stop; ++i) {
        const Conversation& conv = train_set[order[i]];
        Tape<float> tape(model.params(), &grads);
        auto fwd = model.train_forward(tape, conv, gold[order[i]], dropout_rng);
        tape.backward(fwd.loss, 1.0f / static_cast<float>(batch_examples));
        loss_sum += static_cast<double>(tape.value(fwd.loss)[0]);
        example_count += fwd.examples;
      }
      optimizer.step(model.params(), grads, frozen);
    }

    const MetricsReport val = evaluate(model, val_set, task, val_options);
    EpochLog e;
    e.epoch = epoch;
    e.train_loss = loss_sum / static_cast<double>(example_count);
    e.val_accuracy = val.micro_accuracy;
    e.val_macro_f1 = val.macro_f1;
    e.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    log.epochs.push_back(e);

    if (val.macro_f1 > best_f1) {
      best_f1 = val.macro_f1;
      best_epoch = epoch;
      best_params = model.params();
      since_best = 0;
    } else {
      ++since_best;
      if (since_best > options.patience) {
        log.early_stopped = true;
        break;
      }
    }
  }

  model.params() = std::move(best_params);
  log.best_epoch = best_epoch;
  log.best_val_macro_f1 = best_f1;
  return {std::move(model), std::move(log)};
}

MetricsReport heuristic_baseline_eval(const std::vector<Conversation>& data, Task task,
                                      const FeatureSchema& schema, const EvalOptions& options) {
  if (task == Task::Breakdown)
    throw std::invalid_argument("heuristic labeling predicts satisfaction, not breakdown");
  const auto gold = extract_gold(data, task, options);
  std::vector<std::vector<SatLabel>> pred(data.size());
  for (std::size_t ci = 0; ci < data.size(); ++ci) {
    const Conversation& conv = data[ci];
    std::optional<SatLabel> final_sat;
    if (!conv.final_rating && conv.turns.back().gold_sat) final_sat = conv.turns.back().gold_sat;
    pred[ci] = weak_label_conversation(conv, schema, final_sat).labels;
  }
  std::vector<int> g, p;
  g.reserve(gold.size());
  p.reserve(gold.size());
  for (const auto& ex : gold) {
    g.push_back(ex.label);
    p.push_back(static_cast<int>(pred[ex.conversation][ex.turn]));
  }
  return compute_metrics(g, p, task);
}

namespace {

// Scaled feature rows exactly as the model streams them.
std::vector<FeatureRows> true_feature_rows(const FeatureSchema& schema,
                                           const std::vector<Conversation>& data) {
  FeatureExtractor extractor(schema);
  std::vector<FeatureRows> out(data.size());
  for (std::size_t ci = 0; ci < data.size(); ++ci) {
    auto state = extractor.new_state();
    out[ci].reserve(data[ci].turns.size());
    for (const Turn& turn : data[ci].turns) {
      FeatureVector v = extractor.advance(state, data[ci], turn);
      out[ci].push_back(scale_feature_vector(v, turn.index, schema).values);
    }
  }
  return out;
}

double column_drop(const Model& model, const std::vector<Conversation>& data, Task task,
                   const EvalOptions& options, const std::vector<FeatureRows>& rows,
                   double base_f1, std::size_t column, std::uint64_t seed, int repeats) {
  double drop_sum = 0.0;
  for (int r = 0; r < repeats; ++r) {
    std::vector<double> column_values;
    for (const auto& conv_rows : rows)
      for (const auto& row : conv_rows) column_values.push_back(row[column]);
    std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ull * (column + 1) +
                        0xbf58476d1ce4e5b9ull * static_cast<std::uint64_t>(r + 1));
    std::shuffle(column_values.begin(), column_values.end(), rng);
    std::vector<FeatureRows> shuffled = rows;
    std::size_t k = 0;
    for (auto& conv_rows : shuffled)
      for (auto& row : conv_rows) row[column] = column_values[k++];
    const MetricsReport report = evaluate_impl(model, data, task, options, &shuffled);
    drop_sum += base_f1 - report.macro_f1;
  }
  return drop_sum / repeats;
}

std::size_t column_of_feature(const FeatureSchema& schema, int feature_id) {
  const auto ids = schema.enabled_ids();
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i] == feature_id) return i;
  throw std::invalid_argument("feature F" + std::to_string(feature_id) +
                              " is not enabled in the model's schema");
}

}  // namespace

double permutation_importance(const ConvSatModel<float>& model,
                              const std::vector<Conversation>& data, Task task, int feature_id,
                              std::uint64_t seed, int repeats, const EvalOptions& options) {
  if (!model.config().use_features)
    throw std::invalid_argument("permutation importance needs a model trained with features");
  if (repeats < 1) throw std::invalid_argument("permutation importance: repeats must be >= 1");
  const std::size_t column = column_of_feature(model.config().schema, feature_id);
  const auto rows = true_feature_rows(model.config().schema, data);
  const double base = evaluate_impl(model, data, task, options, &rows).macro_f1;
  return column_drop(model, data, task, options, rows, base, column, seed, repeats);
}

std::vector<ImportanceEntry> permutation_importance_table(
    const ConvSatModel<float>& model, const std::vector<Conversation>& data, Task task,
    std::uint64_t seed, int repeats, const EvalOptions& options) {
  if (!model.config().use_features)
    throw std::invalid_argument("permutation importance needs a model trained with features");
  if (repeats < 1) throw std::invalid_argument("permutation importance: repeats must be >= 1");
  const FeatureSchema& schema = model.config().schema;
  const auto rows = true_feature_rows(schema, data);
  const double base = evaluate_impl(model, data, task, options, &rows).macro_f1;
  const auto ids = schema.enabled_ids();
  const auto names = schema.enabled_names();
  std::vector<ImportanceEntry> table;
  table.reserve(ids.size());
  for (std::size_t c = 0; c < ids.size(); ++c)
    table.push_back({ids[c], names[c],
                     column_drop(model, data, task, options, rows, base, c, seed, repeats)});
  std::sort(table.begin(), table.end(), [](const ImportanceEntry& a, const ImportanceEntry& b) {
    if (a.mean_f1_drop != b.mean_f1_drop) return a.mean_f1_drop > b.mean_f1_drop;
    return a.feature_id < b.feature_id;
  });
  return table;
}

std::string importance_csv(const std::vector<ImportanceEntry>& table) {
  std::ostringstream out;
  out << "rank,feature,name,mean_macro_f1_drop\n";
  char line[160];
  for (std::size_t i = 0; i < table.size(); ++i) {
    std::snprintf(line, sizeof line, "%zu,F%d,%s,%.6f\n", i + 1, table[i].feature_id,
                  table[i].name.c_str(), table[i].mean_f1_drop);
    out << line;
  }
  return out.str();
}

FoldSummary evaluate_folds(const ConvSatModel<float>& model,
                           const std::vector<Conversation>& data, Task task, int folds,
                           std::uint64_t seed, const EvalOptions& options) {
  if (folds < 1) throw std::invalid_argument("evaluate_folds: folds must be >= 1");
  if (static_cast<std::size_t>(folds) > data.size())
    throw std::invalid_argument("evaluate_folds: more folds than conversations");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  FoldSummary summary;
  summary.folds = folds;
  std::vector<double> accs, f1s;
  for (int f = 0; f < folds; ++f) {
    const std::size_t lo = data.size() * static_cast<std::size_t>(f) / folds;
    const std::size_t hi = data.size() * static_cast<std::size_t>(f + 1) / folds;
    std::vector<Conversation> fold;
    fold.reserve(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) fold.push_back(data[order[i]]);
    MetricsReport report = evaluate(model, fold, task, options);
    accs.push_back(report.micro_accuracy);
    f1s.push_back(report.macro_f1);
    summary.per_fold.push_back(std::move(report));
  }
  summary.mean_accuracy = std::accumulate(accs.begin(), accs.end(), 0.0) / folds;
  summary.mean_macro_f1 = std::accumulate(f1s.begin(), f1s.end(), 0.0) / folds;
  summary.std_accuracy = sample_std(accs, summary.mean_accuracy);
  summary.std_macro_f1 = sample_std(f1s, summary.mean_macro_f1);
  return summary;
}

std::string TrainLog::to_json_string() const {
  nlohmann::json j;
  j["training_version"] = 1;
  j["seed"] = seed;
  j["best_epoch"] = best_epoch;
  j["best_val_macro_f1"] = best_val_macro_f1;
  j["early_stopped"] = early_stopped;
  nlohmann::json es = nlohmann::json::array();
  for (const EpochLog& e : epochs)
    es.push_back({{"epoch", e.epoch},
                  {"train_loss", e.train_loss},
                  {"val_accuracy", e.val_accuracy},
                  {"val_macro_f1", e.val_macro_f1},
                  {"seconds", e.seconds}});
  j["epochs"] = std::move(es);
  return j.dump(2);
}

std::string FoldSummary::to_json_string() const {
  nlohmann::json j;
  j["folds_version"] = 1;
  j["note"] = "resampled from the evaluation set; an approximation of the original folds";
  j["folds"] = folds;
  j["accuracy"] = {{"mean", mean_accuracy}, {"std", std_accuracy}};
  j["macro_f1"] = {{"mean", mean_macro_f1}, {"std", std_macro_f1}};
  nlohmann::json per = nlohmann::json::array();
  for (const MetricsReport& r : per_fold)
    per.push_back({{"n_examples", r.n_examples},
                   {"micro_accuracy", r.micro_accuracy},
                   {"macro_f1", r.macro_f1}});
  j["per_fold"] = std::move(per);
  return j.dump(2);
}

std::string FoldSummary::to_text_table() const {
  std::ostringstream out;
  char line[160];
  for (std::size_t f = 0; f < per_fold.size(); ++f) {
    std::snprintf(line, sizeof line, "fold %zu: AC %.4f  macro-F1 %.4f  (n=%lld)\n", f + 1,
                  per_fold[f].micro_accuracy, per_fold[f].macro_f1, per_fold[f].n_examples);
    out << line;
  }
  std::snprintf(line, sizeof line, "mean: AC %.4f +- %.4f  macro-F1 %.4f +- %.4f\n",
                mean_accuracy, std_accuracy, mean_macro_f1, std_macro_f1);
  out << line;
  out << "(resampled folds; approximation of fold-based reporting)\n";
  return out.str();
}

}  // namespace convsat
