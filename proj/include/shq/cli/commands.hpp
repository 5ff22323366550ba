#pragma once

#include <optional>
#include <string>
#include <vector>

#include "shq/cli/config.hpp"
#include "shq/cli/report.hpp"
#include "shq/search/supernet.hpp"
#include "shq/search/trainer.hpp"
#include "shq/snn/checkpoint.hpp"

namespace shq::cli {

// Generated from the config, or loaded from data.path when set.
data::Dataset load_data(const RunConfig& cfg);

// Initial model with affine stages calibrated on the first training batches.
snn::Model initial_model(const RunConfig& cfg, const data::Dataset& ds);

Json metrics_json(const EvalResult& r);

struct SearchOutputs {
  SearchResult result;
  EvalResult test;
  std::string trace_csv;
  Json architecture;
  Json report;
};

// Artifacts are written under `out_dir` unless it is empty.
SearchOutputs cmd_search(const RunConfig& cfg, const std::string& out_dir);

// Pure cost evaluation. Without an architecture every layer is fp32.
Json cmd_cost(const RunConfig& cfg, const std::optional<Json>& architecture);

struct TrainOutputs {
  snn::Checkpoint checkpoint;
  std::vector<EpochStats> epochs;
  EvalResult test;
};

TrainOutputs cmd_train(const RunConfig& cfg, const std::optional<Json>& architecture, const std::string& out_dir);

// Throws ValidationError when the checkpoint was built for another model.
EvalResult cmd_eval(const RunConfig& cfg, const snn::Checkpoint& ckpt);

ReportBundle cmd_report(const std::string& trace_path, const std::string& report_path, const std::string& out_dir);

// Exit codes: 0 success, 2 configuration error, 3 divergence, 1 anything else.
int run_cli(int argc, char** argv);

}  // namespace shq::cli
