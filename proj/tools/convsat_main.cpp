// Command-line surface: ingest corpora, dump features, weak-label data,
// train, evaluate, predict, and rank feature importance.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "convsat/harness.hpp"

namespace {

using namespace convsat;

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spill(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

FeatureSchema schema_by_name(const std::string& name) {
  if (name == "convsat") return alexa_full_schema();
  if (name == "dbdc3") return dbdc3_schema();
  throw std::runtime_error("unknown schema preset \"" + name + "\" (convsat or dbdc3)");
}

// The model bundle pins head and mode, which pin the task.
Task task_of(const ModelConfig& config) {
  if (config.head == HeadKind::Softmax3) return Task::Breakdown;
  return config.mode == PredictionMode::Online ? Task::SatOnline : Task::SatOffline;
}

long long turn_count(const std::vector<Conversation>& data) {
  long long n = 0;
  for (const auto& c : data) n += static_cast<long long>(c.turns.size());
  return n;
}

EvalOptions resolve_eval_options(Task task, bool include_final, bool exclude_final) {
  EvalOptions options = default_eval_options(task);
  if (include_final) options.exclude_final_turn = false;
  if (exclude_final) options.exclude_final_turn = true;
  return options;
}

int run(int argc, char** argv) {
  CLI::App app{"conversational satisfaction and breakdown prediction"};
  app.require_subcommand(1);

  // ingest -----------------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "convert a corpus to canonical JSONL");
  std::string ingest_format = "jsonl", ingest_input, ingest_output;
  ingest->add_option("--format", ingest_format, "dbdc3 or jsonl")
      ->check(CLI::IsMember({"dbdc3", "jsonl"}));
  ingest->add_option("--input", ingest_input, "corpus directory (dbdc3) or JSONL file")
      ->required();
  ingest->add_option("--output", ingest_output, "canonical JSONL path")->required();

  // features ---------------------------------------------------------------
  auto* features = app.add_subcommand("features", "dump per-turn feature vectors as CSV");
  std::string feat_data, feat_output, feat_preset = "convsat", feat_schema_file;
  bool feat_raw = false;
  features->add_option("--data", feat_data, "canonical JSONL")->required();
  features->add_option("--output", feat_output, "CSV path")->required();
  features->add_option("--preset", feat_preset, "schema preset: convsat or dbdc3");
  features->add_option("--schema", feat_schema_file, "schema JSON file (overrides preset)");
  features->add_flag("--raw", feat_raw, "write unscaled values");

  // weaklabel ----------------------------------------------------------------
  auto* weaklabel = app.add_subcommand("weaklabel", "attach weak satisfaction labels");
  std::string weak_data, weak_output, weak_provenance, weak_preset = "convsat",
              weak_schema_file;
  weaklabel->add_option("--data", weak_data, "canonical JSONL with final ratings")->required();
  weaklabel->add_option("--output", weak_output, "labeled JSONL path")->required();
  weaklabel->add_option("--provenance", weak_provenance, "per-turn rule CSV path");
  weaklabel->add_option("--preset", weak_preset, "schema preset: convsat or dbdc3");
  weaklabel->add_option("--schema", weak_schema_file, "schema JSON file (overrides preset)");

  // train --------------------------------------------------------------------
  auto* train_cmd = app.add_subcommand("train", "train a model and save the bundle");
  std::string train_task, train_data, train_val, train_config_file, train_preset = "convsat",
              train_out, train_embeddings;
  std::uint64_t train_seed = 0, split_seed = 0;
  double val_fraction = 0.1;
  TrainOptions train_options;
  train_cmd->add_option("--task", train_task, "breakdown, sat-online or sat-offline")
      ->required()
      ->check(CLI::IsMember({"breakdown", "sat-online", "sat-offline"}));
  train_cmd->add_option("--train", train_data, "training JSONL")->required();
  train_cmd->add_option("--val", train_val, "validation JSONL (default: split from train)");
  train_cmd->add_option("--val-fraction", val_fraction, "validation share when splitting");
  train_cmd->add_option("--split-seed", split_seed, "seed for the validation split");
  auto* cfg_opt = train_cmd->add_option("--config", train_config_file,
                                        "model config JSON (may embed a training object)");
  train_cmd->add_option("--preset", train_preset, "config preset: convsat, dbdc3, lstm, clstm")
      ->excludes(cfg_opt);
  train_cmd->add_option("--seed", train_seed, "training seed");
  train_cmd->add_option("--epochs", train_options.epochs, "epoch cap");
  train_cmd->add_option("--patience", train_options.patience, "early-stopping patience");
  train_cmd->add_option("--batch-size", train_options.batch_size, "conversations per batch");
  train_cmd->add_option("--embeddings", train_embeddings, "pretrained word vectors (text)");
  train_cmd->add_option("--out", train_out, "output bundle directory")->required();

  // eval ---------------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a bundle or the heuristic baseline");
  std::string eval_model, eval_data, eval_task_str, eval_out, eval_preset = "convsat";
  int eval_folds = 1;
  std::uint64_t eval_seed = 0;
  bool eval_heuristic = false, eval_include_final = false, eval_exclude_final = false;
  eval_cmd->add_option("--model", eval_model, "model bundle directory");
  eval_cmd->add_option("--data", eval_data, "evaluation JSONL")->required();
  eval_cmd->add_option("--task", eval_task_str, "breakdown, sat-online or sat-offline")
      ->check(CLI::IsMember({"breakdown", "sat-online", "sat-offline"}));
  eval_cmd->add_option("--folds", eval_folds, "re-split the set into k folds (mean +- std)");
  eval_cmd->add_option("--seed", eval_seed, "fold shuffle seed");
  eval_cmd->add_flag("--heuristic", eval_heuristic, "score the weak-label rules instead");
  eval_cmd->add_option("--preset", eval_preset, "schema preset for --heuristic");
  eval_cmd->add_flag("--include-final-turn", eval_include_final, "score final turns");
  eval_cmd->add_flag("--exclude-final-turn", eval_exclude_final, "skip final turns");
  eval_cmd->add_option("--out", eval_out, "write metrics JSON here");

  // predict --------------------------------------------------------------------
  auto* predict = app.add_subcommand("predict", "write per-turn or per-conversation labels");
  std::string pred_model, pred_data, pred_output;
  bool pred_online = false;
  predict->add_option("--model", pred_model, "model bundle directory")->required();
  predict->add_option("--data", pred_data, "JSONL to label")->required();
  predict->add_flag("--online", pred_online, "emit every turn, not just the last");
  predict->add_option("--output", pred_output, "TSV path (default stdout)");

  // importance -------------------------------------------------------------
  auto* importance = app.add_subcommand("importance", "permutation feature importance");
  std::string imp_model, imp_data, imp_output;
  int imp_repeats = 3;
  std::uint64_t imp_seed = 0;
  importance->add_option("--model", imp_model, "model bundle directory")->required();
  importance->add_option("--data", imp_data, "evaluation JSONL")->required();
  importance->add_option("--repeats", imp_repeats, "shuffles per feature");
  importance->add_option("--seed", imp_seed, "shuffle seed");
  importance->add_option("--output", imp_output, "CSV path (default stdout)");

  CLI11_PARSE(app, argc, argv);

  if (*ingest) {
    std::vector<Conversation> data;
    if (ingest_format == "dbdc3") {
      data = parse_dbdc3(ingest_input);
      derive_breakdown_from_votes(data);
    } else {
      data = parse_jsonl(ingest_input);
    }
    write_jsonl(data, ingest_output);
    std::printf("wrote %zu conversations (%lld turns) to %s\n", data.size(), turn_count(data),
                ingest_output.c_str());
    return 0;
  }

  if (*features) {
    const FeatureSchema schema = feat_schema_file.empty()
                                     ? schema_by_name(feat_preset)
                                     : FeatureSchema::from_json_string(slurp(feat_schema_file));
    const auto data = parse_jsonl(feat_data);
    FeatureExtractor extractor(schema);
    write_feature_csv(data, extractor, feat_output, !feat_raw);
    std::printf("wrote %d feature columns for %lld turns to %s\n", schema.enabled_count(),
                turn_count(data), feat_output.c_str());
    return 0;
  }

  if (*weaklabel) {
    const FeatureSchema schema = weak_schema_file.empty()
                                     ? schema_by_name(weak_preset)
                                     : FeatureSchema::from_json_string(slurp(weak_schema_file));
    auto data = parse_jsonl(weak_data);
    std::ostringstream prov;
    prov << "conversation_id,turn,label,rule\n";
    for (auto& conv : data) {
      const WeakLabeling labeled = weak_label_conversation(conv, schema);
      for (std::size_t t = 0; t < conv.turns.size(); ++t) {
        conv.turns[t].gold_sat = labeled.labels[t];
        prov << conv.id << ',' << conv.turns[t].index << ','
             << (labeled.labels[t] == SatLabel::SAT ? "SAT" : "DSAT") << ','
             << to_string(labeled.rules[t]) << '\n';
      }
    }
    write_jsonl(data, weak_output);
    if (!weak_provenance.empty()) spill(weak_provenance, prov.str());
    std::printf("labeled %lld turns in %zu conversations -> %s\n", turn_count(data), data.size(),
                weak_output.c_str());
    return 0;
  }

  if (*train_cmd) {
    const Task task = task_from_string(train_task);
    ModelConfig config = model_preset(train_preset);
    if (!train_config_file.empty()) {
      const std::string text = slurp(train_config_file);
      config = ModelConfig::from_json_string(text);
      const auto j = nlohmann::json::parse(text);
      if (j.contains("training")) {
        const auto& t = j["training"];
        train_options.epochs = t.value("epochs", train_options.epochs);
        train_options.patience = t.value("patience", train_options.patience);
        train_options.batch_size = t.value("batch_size", train_options.batch_size);
        train_seed = t.value("seed", train_seed);
        train_embeddings = t.value("embedding_file", train_embeddings);
      }
    }
    train_options.seed = train_seed;
    train_options.embedding_file = train_embeddings;

    auto all = parse_jsonl(train_data);
    std::vector<Conversation> train_split, val_split;
    if (!train_val.empty()) {
      train_split = std::move(all);
      val_split = parse_jsonl(train_val);
    } else {
      DatasetSplit split = split_dataset(all, val_fraction, split_seed);
      train_split = std::move(split.train);
      val_split = std::move(split.validation);
    }

    TrainResult result = train(config, task, train_split, val_split, train_options);
    const std::filesystem::path out_dir(train_out);
    save_model(result.model, out_dir);
    spill(out_dir / "train_log.json", result.log.to_json_string());
    nlohmann::json resolved = nlohmann::json::parse(result.model.config().to_json_string());
    resolved["training"] = {{"task", to_string(task)},
                            {"epochs", train_options.epochs},
                            {"patience", train_options.patience},
                            {"batch_size", train_options.batch_size},
                            {"seed", train_options.seed},
                            {"embedding_file", train_options.embedding_file},
                            {"train_file", train_data},
                            {"val_file", train_val.empty() ? "(split from train)" : train_val}};
    spill(out_dir / "resolved_config.json", resolved.dump(2));
    std::printf("best epoch %d (val macro-F1 %.4f); bundle in %s\n", result.log.best_epoch,
                result.log.best_val_macro_f1, train_out.c_str());
    return 0;
  }

  if (*eval_cmd) {
    const auto data = parse_jsonl(eval_data);
    if (eval_heuristic) {
      if (eval_task_str.empty()) eval_task_str = "sat-online";
      const Task task = task_from_string(eval_task_str);
      const EvalOptions options =
          resolve_eval_options(task, eval_include_final, eval_exclude_final);
      const MetricsReport report =
          heuristic_baseline_eval(data, task, schema_by_name(eval_preset), options);
      std::fputs(report.to_text_table().c_str(), stdout);
      if (!eval_out.empty()) spill(eval_out, report.to_json_string());
      return 0;
    }
    if (eval_model.empty()) throw std::runtime_error("eval needs --model (or --heuristic)");
    const auto model = load_model<float>(eval_model);
    const Task task =
        eval_task_str.empty() ? task_of(model.config()) : task_from_string(eval_task_str);
    const EvalOptions options = resolve_eval_options(task, eval_include_final, eval_exclude_final);
    if (eval_folds > 1) {
      const FoldSummary summary = evaluate_folds(model, data, task, eval_folds, eval_seed, options);
      std::fputs(summary.to_text_table().c_str(), stdout);
      if (!eval_out.empty()) spill(eval_out, summary.to_json_string());
    } else {
      const MetricsReport report = evaluate(model, data, task, options);
      std::fputs(report.to_text_table().c_str(), stdout);
      if (!eval_out.empty()) spill(eval_out, report.to_json_string());
    }
    return 0;
  }

  if (*predict) {
    const auto model = load_model<float>(pred_model);
    const Task task = task_of(model.config());
    const auto data = parse_jsonl(pred_data);
    std::ostringstream out;
    out << "conversation_id\tturn\tlabel\tprobability\n";
    char line[256];
    for (const auto& conv : data) {
      const auto dists = model.forward_online(conv);
      const std::size_t first = pred_online ? 0 : dists.size() - 1;
      for (std::size_t t = first; t < dists.size(); ++t) {
        const Decision d = decide(dists[t], model.config().head);
        std::snprintf(line, sizeof line, "%s\t%d\t%s\t%.6f\n", conv.id.c_str(),
                      conv.turns[t].index, label_name(task, d.class_index).c_str(),
                      d.probability);
        out << line;
      }
    }
    if (pred_output.empty())
      std::fputs(out.str().c_str(), stdout);
    else
      spill(pred_output, out.str());
    return 0;
  }

  if (*importance) {
    const auto model = load_model<float>(imp_model);
    const Task task = task_of(model.config());
    const auto data = parse_jsonl(imp_data);
    const auto table = permutation_importance_table(model, data, task, imp_seed, imp_repeats,
                                                    default_eval_options(task));
    const std::string csv = importance_csv(table);
    if (imp_output.empty())
      std::fputs(csv.c_str(), stdout);
    else
      spill(imp_output, csv);
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
