#include "shq/cli/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "shq/detail/text.hpp"
#include "shq/errors.hpp"
#include "shq/snn/checkpoint.hpp"

namespace shq::cli {

using detail::format_double;
using quant::QuantChoice;

Quantiles quantiles(std::span<const double> values) {
  if (values.empty()) throw ValidationError("quantiles of an empty set");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  auto at = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return frac == 0.0 ? v[lo] : v[lo] + (v[hi] - v[lo]) * frac;
  };
  return {at(0.05), at(0.25), at(0.50), at(0.75), at(0.95)};
}

std::size_t distinct_values(std::span<const double> values) {
  return std::set<double>(values.begin(), values.end()).size();
}

Json architecture_json(std::span<const snn::LayerHandle> layers, std::span<const QuantChoice> choices) {
  if (layers.size() != choices.size()) throw ValidationError("architecture: layer and choice counts differ");
  Json j = Json::object();
  for (std::size_t i = 0; i < layers.size(); ++i) j[layers[i].name] = std::string(quant::choice_name(choices[i]));
  return j;
}

std::vector<QuantChoice> parse_architecture(const Json& arch, std::span<const snn::LayerHandle> layers) {
  if (!arch.is_object()) throw ValidationError("architecture: expected a JSON object of layer -> choice");
  std::vector<QuantChoice> out;
  for (const auto& h : layers) {
    if (!arch.contains(h.name)) throw ValidationError("architecture: missing layer " + h.name);
    const Json& v = arch.at(h.name);
    const auto c = v.is_string() ? quant::parse_choice(v.get<std::string>()) : std::nullopt;
    if (!c) throw ValidationError("architecture: invalid choice for layer " + h.name);
    out.push_back(*c);
  }
  for (const auto& [name, _] : arch.items()) {
    const bool known = std::any_of(layers.begin(), layers.end(), [&](const auto& h) { return h.name == name; });
    if (!known) throw ValidationError("architecture: unknown layer " + name);
  }
  return out;
}

namespace {

Json quantile_json(const Quantiles& q) {
  return Json{{"p5", q.p5}, {"p25", q.p25}, {"p50", q.p50}, {"p75", q.p75}, {"p95", q.p95}};
}

double pct(double part, double whole) { return whole > 0.0 ? 100.0 * part / whole : 0.0; }

Json share_json(const std::string& name, const cost::Share& s, double energy_total, double bits_total) {
  return Json{{"name", name},
              {"energy_pj", s.energy_pj},
              {"energy_share_pct", pct(s.energy_pj, energy_total)},
              {"storage_bits", s.storage_bits},
              {"storage_share_pct", pct(static_cast<double>(s.storage_bits), bits_total)},
              {"parameters", s.parameters}};
}

}  // namespace

Json build_report(const ReportInputs& in) {
  const auto costed = snn::costed_layers(in.layers);
  const cost::ModelSummary s = cost::model_summary(costed, in.choices, in.config->energy);
  const std::vector<QuantChoice> fp32(in.layers.size(), QuantChoice::FP32);
  const cost::ModelSummary base = cost::model_summary(costed, fp32, in.config->energy);

  Json j;
  j["summary"] = Json{{"accuracy", in.accuracy ? Json(*in.accuracy) : Json(nullptr)},
                      {"storage_mb", s.storage_mb},
                      {"storage_pct", pct(static_cast<double>(s.storage_bits), static_cast<double>(base.storage_bits))},
                      {"avg_bits", s.avg_bits},
                      {"energy_mj", s.energy_mj},
                      {"energy_pct", pct(s.energy_pj, base.energy_pj)},
                      {"energy_pj", s.energy_pj},
                      {"storage_bits", s.storage_bits},
                      {"parameters", s.parameters}};
  j["baseline"] = Json{{"storage_mb", base.storage_mb}, {"energy_mj", base.energy_mj}, {"energy_pj", base.energy_pj}};

  const double bits_total = static_cast<double>(s.storage_bits);
  Json comps = Json::array();
  for (std::size_t g = 0; g < cost::kAllGroups.size(); ++g) {
    comps.push_back(share_json(cost::group_name(cost::kAllGroups[g]), s.groups[g], s.energy_pj, bits_total));
  }
  j["components"] = comps;
  const cost::Share& attn = s.groups[static_cast<std::size_t>(cost::ComponentGroup::Attention)];
  const char* roles[] = {"query", "key", "value", "output"};
  Json attention = Json::array();
  for (std::size_t r = 0; r < 4; ++r) {
    attention.push_back(share_json(roles[r], s.attention[r], attn.energy_pj, static_cast<double>(attn.storage_bits)));
  }
  j["attention"] = attention;

  Json counts = Json::object();
  for (QuantChoice c : quant::kAllChoices) counts[std::string(quant::choice_name(c))] = 0;
  Json layers = Json::array();
  for (std::size_t i = 0; i < in.layers.size(); ++i) {
    const auto& h = in.layers[i];
    const auto& lc = s.layers[i];
    const std::string choice(quant::choice_name(in.choices[i]));
    counts[choice] = counts[choice].get<int>() + 1;
    Json l{{"name", h.name},
           {"component", cost::component_name(h.component)},
           {"choice", choice},
           {"bits", quant::bits(in.choices[i])},
           {"ops", lc.ops},
           {"parameters", h.spec.parameters()},
           {"energy_pj", lc.energy_pj},
           {"storage_bits", lc.storage_bits}};
    if (!in.weights.empty()) {
      const WeightPair& w = in.weights[i];
      l["weights"] = Json{{"pre", quantile_json(quantiles(w.pre.data()))},
                          {"post", quantile_json(quantiles(w.post.data()))},
                          {"distinct_pre", distinct_values(w.pre.data())},
                          {"distinct_post", distinct_values(w.post.data())}};
    }
    layers.push_back(l);
  }
  j["choice_counts"] = counts;
  j["layers"] = layers;
  j["assumptions"] = in.config->assumptions;
  Json model = Json::object();
  for (const auto& [k, v] : snn::model_entries(in.config->model, in.config->lif)) model[k] = v;
  j["model"] = model;
  return j;
}

std::string format_report(const Json& r) {
  std::string out;
  char buf[256];
  const Json& s = r.at("summary");
  std::snprintf(buf, sizeof buf, "storage  %.4f MB (%.2f%%)  avg bits %.3f\nenergy   %.6f mJ (%.2f%%)\n",
                s.at("storage_mb").get<double>(), s.at("storage_pct").get<double>(), s.at("avg_bits").get<double>(),
                s.at("energy_mj").get<double>(), s.at("energy_pct").get<double>());
  out += buf;
  if (!s.at("accuracy").is_null()) {
    std::snprintf(buf, sizeof buf, "accuracy %.4f\n", s.at("accuracy").get<double>());
    out += buf;
  }
  out += "\ncomponent    energy%   storage%\n";
  for (const auto& c : r.at("components")) {
    std::snprintf(buf, sizeof buf, "%-12s %7.2f   %7.2f\n", c.at("name").get<std::string>().c_str(),
                  c.at("energy_share_pct").get<double>(), c.at("storage_share_pct").get<double>());
    out += buf;
  }
  out += "\nlayer                          choice   energy (pJ)\n";
  for (const auto& l : r.at("layers")) {
    std::snprintf(buf, sizeof buf, "%-30s %-6s %14.1f\n", l.at("name").get<std::string>().c_str(),
                  l.at("choice").get<std::string>().c_str(), l.at("energy_pj").get<double>());
    out += buf;
  }
  return out;
}

ReportBundle make_report_bundle(const std::vector<TraceRow>& trace, const Json& report) {
  ReportBundle b;
  b.probability_evolution = "epoch,block,layer,fp32,2u,4u,2l,4l\n";
  if (trace.size() % quant::kChoiceCount != 0) {
    throw FormatError("trace: row count is not a multiple of the choice count", trace.size() + 1);
  }
  for (std::size_t i = 0; i < trace.size(); i += quant::kChoiceCount) {
    const TraceRow& first = trace[i];
    std::string line = std::to_string(first.epoch) + "," + first.block + "," + first.layer;
    double total = 0.0;
    for (std::size_t c = 0; c < quant::kChoiceCount; ++c) {
      const TraceRow& r = trace[i + c];
      const std::uint64_t row = i + c + 2;  // header is line 1
      if (r.epoch != first.epoch || r.layer != first.layer) {
        throw FormatError("trace: incomplete choice group for " + first.layer, row);
      }
      if (r.choice != quant::choice_name(quant::kAllChoices[c])) {
        throw FormatError("trace: expected choice " + std::string(quant::choice_name(quant::kAllChoices[c])), row);
      }
      total += r.probability;
      line += "," + format_double(r.probability);
    }
    if (std::fabs(total - 1.0) > 1e-6) {
      throw FormatError("trace: probabilities of " + first.layer + " sum to " + format_double(total), i + 2);
    }
    b.probability_evolution += line + "\n";
  }

  b.component_breakdown = "group,component,energy_pj,energy_share_pct,storage_bits,storage_share_pct\n";
  auto emit = [&](const std::string& group, const Json& c) {
    b.component_breakdown += group + "," + c.at("name").get<std::string>() + "," +
                             format_double(c.at("energy_pj").get<double>()) + "," +
                             format_double(c.at("energy_share_pct").get<double>()) + "," +
                             std::to_string(c.at("storage_bits").get<std::uint64_t>()) + "," +
                             format_double(c.at("storage_share_pct").get<double>()) + "\n";
  };
  for (const auto& c : report.at("components")) emit("model", c);
  for (const auto& c : report.at("attention")) emit("attention", c);

  b.weight_quantiles = "layer,choice,stage,p5,p25,p50,p75,p95,distinct\n";
  for (const auto& l : report.at("layers")) {
    if (!l.contains("weights")) continue;
    for (const char* stage : {"pre", "post"}) {
      const Json& q = l.at("weights").at(stage);
      const double v[5] = {q.at("p5").get<double>(), q.at("p25").get<double>(), q.at("p50").get<double>(),
                           q.at("p75").get<double>(), q.at("p95").get<double>()};
      for (int k = 0; k < 4; ++k) {
        if (v[k] > v[k + 1]) throw FormatError("report: quantiles out of order for " + l.at("name").get<std::string>(), 0);
      }
      std::string line = l.at("name").get<std::string>() + "," + l.at("choice").get<std::string>() + "," + stage;
      for (double x : v) line += "," + format_double(x);
      line += "," + std::to_string(l.at("weights").at(std::string("distinct_") + stage).get<std::size_t>());
      b.weight_quantiles += line + "\n";
    }
  }
  return b;
}

}  // namespace shq::cli
