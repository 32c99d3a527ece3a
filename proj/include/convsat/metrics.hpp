#pragma once
// Classification metrics in the shape the reports use: micro accuracy,
// per-class and macro precision/recall/F1 over the task's full label space
// (absent classes score 0 and are flagged), and the confusion matrix.

#include <cstdint>
#include <string>
#include <vector>

#include "convsat/model.hpp"

namespace convsat {

struct ClassMetrics {
  std::string name;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long long support = 0;   // gold occurrences
  bool degenerate = false; // a 0/0 was defined as 0 somewhere in this row
};

struct MetricsReport {
  std::string task;
  long long n_examples = 0;
  double micro_accuracy = 0.0;
  std::vector<ClassMetrics> per_class;  // full label space, class order
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<std::vector<long long>> confusion;  // [gold][pred]
  std::uint64_t config_hash = 0;
  std::string note;

  std::string to_json_string() const;
  std::string to_text_table() const;  // AC / PR / RC / F1 layout
};

// gold and pred hold class indices in the task's label space. Throws on
// length mismatch, empty input, or out-of-range labels.
MetricsReport compute_metrics(const std::vector<int>& gold, const std::vector<int>& pred,
                              Task task);

}  // namespace convsat
