#pragma once
// Training loop, evaluation, the heuristic-labeling baseline, permutation
// feature importance, and fold resampling. Everything here is deterministic
// given the seeds it is handed.

#include <cstdint>
#include <string>
#include <vector>

#include "convsat/conv_data.hpp"
#include "convsat/metrics.hpp"
#include "convsat/model.hpp"
#include "convsat/weak_label.hpp"

namespace convsat {

struct TrainOptions {
  int epochs = 50;
  int patience = 5;  // epochs without val macro-F1 improvement before stopping
  int batch_size = 16;
  std::uint64_t seed = 0;
  std::string embedding_file;  // optional pretrained word vectors (text format)
};

struct EpochLog {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;  // mean loss per scored example
  double val_accuracy = 0.0;
  double val_macro_f1 = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::uint64_t seed = 0;
  std::vector<EpochLog> epochs;
  int best_epoch = 0;
  double best_val_macro_f1 = 0.0;
  bool early_stopped = false;
  std::string to_json_string() const;
};

struct TrainResult {
  ConvSatModel<float> model;
  TrainLog log;
};

struct EvalOptions {
  bool exclude_final_turn = false;
};
// Online SAT scores every turn but the last (the last coincides with the
// offline prediction); breakdown scores every system turn.
EvalOptions default_eval_options(Task task);

// Gold labels for one conversation in model order: one per turn for online
// tasks, exactly one for offline. Absent labels come back as -1.
std::vector<int> conversation_gold(const Conversation& conv, Task task);
// Conversation-level satisfaction gold: explicit rating first, else the final
// turn's label; -1 when neither exists.
int offline_gold(const Conversation& conv);

struct GoldExample {
  std::size_t conversation = 0;
  std::size_t turn = 0;  // index into turns
  int label = 0;
};
// The single gold-extraction path shared by evaluate() and the heuristic
// baseline, so their reports cover identical examples. Throws when labels are
// missing, listing the offending conversation ids.
std::vector<GoldExample> extract_gold(const std::vector<Conversation>& data, Task task,
                                      const EvalOptions& options);

// Fills gold_breakdown from annotator votes wherever votes are present.
void derive_breakdown_from_votes(std::vector<Conversation>& data);

TrainResult train(const ModelConfig& base_config, Task task,
                  const std::vector<Conversation>& train_set,
                  const std::vector<Conversation>& val_set, const TrainOptions& options);

MetricsReport evaluate(const ConvSatModel<float>& model, const std::vector<Conversation>& data,
                       Task task, const EvalOptions& options);

// Scores the rule-plus-imputation labeler against gold on the same turns
// evaluate() would score. Satisfaction tasks only.
MetricsReport heuristic_baseline_eval(const std::vector<Conversation>& data, Task task,
                                      const FeatureSchema& schema, const EvalOptions& options);

// Mean macro-F1 drop over `repeats` shuffles of one feature column.
double permutation_importance(const ConvSatModel<float>& model,
                              const std::vector<Conversation>& data, Task task, int feature_id,
                              std::uint64_t seed, int repeats, const EvalOptions& options);

struct ImportanceEntry {
  int feature_id = 0;
  std::string name;
  double mean_f1_drop = 0.0;
};
// One entry per enabled feature, ranked by drop (ties by id).
std::vector<ImportanceEntry> permutation_importance_table(
    const ConvSatModel<float>& model, const std::vector<Conversation>& data, Task task,
    std::uint64_t seed, int repeats, const EvalOptions& options);
std::string importance_csv(const std::vector<ImportanceEntry>& table);

struct FoldSummary {
  int folds = 0;
  std::vector<MetricsReport> per_fold;
  double mean_accuracy = 0.0;
  double std_accuracy = 0.0;
  double mean_macro_f1 = 0.0;
  double std_macro_f1 = 0.0;
  std::string to_json_string() const;
  std::string to_text_table() const;
};
// Shuffles conversations with the seed and splits them into k contiguous
// folds. This resampling approximates fold-based reporting and is labeled as
// an approximation in the output.
FoldSummary evaluate_folds(const ConvSatModel<float>& model,
                           const std::vector<Conversation>& data, Task task, int folds,
                           std::uint64_t seed, const EvalOptions& options);

}  // namespace convsat
