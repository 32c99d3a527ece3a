#include "convsat/metrics.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace convsat {

namespace {

int class_count_of(Task task) { return task == Task::Breakdown ? 3 : 2; }

double ratio_or_zero(long long num, long long den, bool& degenerate) {
  if (den == 0) {
    degenerate = true;
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MetricsReport compute_metrics(const std::vector<int>& gold, const std::vector<int>& pred,
                              Task task) {
  if (gold.size() != pred.size())
    throw std::invalid_argument("compute_metrics: gold and pred lengths differ");
  if (gold.empty()) throw std::invalid_argument("compute_metrics: no examples");

  const int k = class_count_of(task);
  MetricsReport report;
  report.task = to_string(task);
  report.n_examples = static_cast<long long>(gold.size());
  report.confusion.assign(k, std::vector<long long>(k, 0));

  long long correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i] < 0 || gold[i] >= k || pred[i] < 0 || pred[i] >= k)
      throw std::invalid_argument("compute_metrics: label out of range at example " +
                                  std::to_string(i));
    report.confusion[gold[i]][pred[i]] += 1;
    if (gold[i] == pred[i]) ++correct;
  }
  report.micro_accuracy = static_cast<double>(correct) / static_cast<double>(gold.size());

  bool any_degenerate = false;
  for (int c = 0; c < k; ++c) {
    ClassMetrics m;
    m.name = label_name(task, c);
    long long tp = report.confusion[c][c];
    long long gold_total = 0, pred_total = 0;
    for (int j = 0; j < k; ++j) {
      gold_total += report.confusion[c][j];
      pred_total += report.confusion[j][c];
    }
    m.support = gold_total;
    m.precision = ratio_or_zero(tp, pred_total, m.degenerate);
    m.recall = ratio_or_zero(tp, gold_total, m.degenerate);
    if (m.precision + m.recall > 0.0)
      m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    else
      m.degenerate = true;  // F1 is 0/0, reported as 0
    any_degenerate = any_degenerate || m.degenerate;
    report.macro_precision += m.precision / k;
    report.macro_recall += m.recall / k;
    report.macro_f1 += m.f1 / k;
    report.per_class.push_back(std::move(m));
  }
  if (any_degenerate)
    report.note = "some per-class ratios were 0/0 and are reported as 0";
  return report;
}

std::string MetricsReport::to_json_string() const {
  nlohmann::json j;
  j["metrics_version"] = 1;
  j["task"] = task;
  j["n_examples"] = n_examples;
  j["micro_accuracy"] = micro_accuracy;
  j["macro"] = {{"precision", macro_precision}, {"recall", macro_recall}, {"f1", macro_f1}};
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& m : per_class) {
    classes.push_back({{"name", m.name},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"support", m.support},
                       {"degenerate", m.degenerate}});
  }
  j["classes"] = std::move(classes);
  j["confusion"] = confusion;
  j["config_hash"] = config_hash;
  if (!note.empty()) j["note"] = note;
  return j.dump(2);
}

std::string MetricsReport::to_text_table() const {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %8s %8s %8s %9s\n", "label", "PR", "RC", "F1",
                "support");
  out << line;
  for (const auto& m : per_class) {
    std::snprintf(line, sizeof line, "%-10s %8.4f %8.4f %8.4f %9lld%s\n", m.name.c_str(),
                  m.precision, m.recall, m.f1, m.support, m.degenerate ? " *" : "");
    out << line;
  }
  std::snprintf(line, sizeof line, "%-10s %8.4f %8.4f %8.4f\n", "macro", macro_precision,
                macro_recall, macro_f1);
  out << line;
  std::snprintf(line, sizeof line, "AC %.4f over %lld examples (%s)\n", micro_accuracy,
                n_examples, task.c_str());
  out << line;
  if (!note.empty()) out << "* " << note << "\n";
  return out.str();
}

}  // namespace convsat
