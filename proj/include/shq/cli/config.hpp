#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "shq/cost/cost_model.hpp"
#include "shq/data/dataset.hpp"
#include "shq/search/supernet.hpp"
#include "shq/search/trainer.hpp"
#include "shq/snn/model.hpp"

namespace shq::cli {

// Everything a run needs. Text form is UTF-8 key=value lines with dotted
// sections; '#' starts a comment line.
struct RunConfig {
  std::uint64_t seed = 1;
  std::string out = "out";
  snn::ModelConfig model;
  snn::LifConfig lif;
  SearchConfig search;
  std::size_t train_epochs = 10;
  // Synthetic data; data.seed defaults to a stream derived from `seed`.
  data::SyntheticSpec data;
  std::optional<std::uint64_t> data_seed;
  std::string data_path;  // load a saved dataset instead of generating
  cost::EnergyTable energy;
  std::string assumptions;  // free text copied into report.json

  bool operator==(const RunConfig&) const;

  data::SyntheticSpec data_spec() const;  // with the effective seed and model dims
  TrainConfig train_config() const;
};

RunConfig parse_config(const std::string& text);  // ConfigError with line numbers
std::string serialize_config(const RunConfig& cfg);
RunConfig load_config(const std::string& path);

}  // namespace shq::cli
