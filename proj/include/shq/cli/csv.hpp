#pragma once

#include <string>
#include <vector>

#include "shq/search/supernet.hpp"

namespace shq::cli {

// One row per (epoch, layer, choice):
// epoch,block,layer,choice_name,probability,lambda,L_acc,L_hw,L_total
std::string trace_csv(const std::vector<TraceRecord>& trace);

struct TraceRow {
  std::size_t epoch;
  std::string block;
  std::string layer;
  std::string choice;
  double probability;
  double lambda;
  double l_acc;
  double l_hw;
  double l_total;
};

// FormatError carries the 1-based line number of the offending row.
std::vector<TraceRow> parse_trace_csv(const std::string& text);

}  // namespace shq::cli
