#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "shq/cli/config.hpp"
#include "shq/cli/csv.hpp"
#include "shq/snn/model.hpp"

namespace shq::cli {

using Json = nlohmann::ordered_json;

struct Quantiles {
  double p5, p25, p50, p75, p95;
};

// Linear interpolation between order statistics.
Quantiles quantiles(std::span<const double> values);
std::size_t distinct_values(std::span<const double> values);

// Layer name -> choice name, in layer order.
Json architecture_json(std::span<const snn::LayerHandle> layers, std::span<const quant::QuantChoice> choices);
// Throws ValidationError naming the first layer the architecture omits.
std::vector<quant::QuantChoice> parse_architecture(const Json& arch, std::span<const snn::LayerHandle> layers);

struct WeightPair {
  Tensor pre;   // full-precision weights before extraction
  Tensor post;  // stored weights after extraction
};

struct ReportInputs {
  const RunConfig* config;
  std::span<const snn::LayerHandle> layers;
  std::span<const quant::QuantChoice> choices;
  std::optional<double> accuracy;
  std::span<const WeightPair> weights;  // empty when no model is involved
};

// Summary, component and attention breakdowns against the all-FP32
// baseline of the same configuration, and per-layer detail.
Json build_report(const ReportInputs& in);

// Human-readable table of a report.
std::string format_report(const Json& report);

struct ReportBundle {
  std::string probability_evolution;  // epoch,block,layer,fp32,2u,4u,2l,4l
  std::string component_breakdown;    // group,component,energy_pj,energy_share_pct,...
  std::string weight_quantiles;       // layer,choice,stage,p5,...,p95,distinct
};

// Checks each probability group sums to 1 within 1e-6 and quantiles are
// ordered; FormatError otherwise.
ReportBundle make_report_bundle(const std::vector<TraceRow>& trace, const Json& report);

}  // namespace shq::cli
