// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cost_oracle.hpp"
#include "primitive_cases.hpp"
#include "shq/cli/commands.hpp"
#include "shq/cli/config.hpp"
#include "shq/cli/csv.hpp"
#include "shq/cli/report.hpp"
#include "shq/cost/cost_model.hpp"
#include "shq/errors.hpp"
#include "shq/kernels/kernels.hpp"
#include "shq/quant/quantizers.hpp"
#include "shq/snn/layers.hpp"
#include "shq/snn/lif.hpp"
#include "support.hpp"

using namespace shq;
using quant::QuantChoice;
using shq::testing::random_tensor;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

// Collects the first few violations of one criterion.
struct Check {
  std::vector<std::string> problems;
  std::vector<std::string> notes;
  void require(bool ok, const std::string& what) {
    if (!ok && problems.size() < 8) problems.push_back(what);
    if (!ok && problems.size() == 8) problems.push_back("...");
  }
  void note(const std::string& s) { notes.push_back(s); }
  bool ok() const { return problems.empty(); }
};

int g_failed = 0;

void report(int id, const char* title, const Check& c, double seconds) {
  std::printf("criterion %d: %s  %s  (%.1f s)\n", id, c.ok() ? "PASS" : "FAIL", title, seconds);
  for (const auto& n : c.notes) std::printf("    %s\n", n.c_str());
  for (const auto& p : c.problems) std::printf("    violation: %s\n", p.c_str());
  std::fflush(stdout);
  if (!c.ok()) ++g_failed;
}

void run_criterion(int id, const char* title, double budget_s, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = Clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.require(false, std::string("exception: ") + e.what());
  }
  const double s = std::chrono::duration<double>(Clock::now() - t0).count();
  if (budget_s > 0) c.require(s < budget_s, "runtime " + std::to_string(s) + " s over " + std::to_string(budget_s) + " s");
  report(id, title, c, s);
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Tensor vec(std::vector<double> v) { return Tensor::vector(std::move(v)); }

// ---- criterion 1 ---------------------------------------------------------------------

void quantizer_suite(Check& c) {
  using namespace quant;
  // Worked examples.
  const UniformParams a = calibrate_uniform(vec({-1.0, 0.2, 1.0}), 2);
  c.require(a.scale == 2.0 / 3.0 && a.zero_point == 2.0, "calibrate_uniform({-1,0.2,1}, 2)");
  const UniformParams same = calibrate_uniform(vec({0.7, 0.7, 0.7}), 2);
  c.require(same.scale == 1.0 && same.zero_point == 0.0, "calibrate_uniform on a constant tensor");
  const UniformParams p{0.1, 8.0, 4};
  c.require(uniform_quantize(vec({0.23}), p).values[0] == 0.1 * (10.0 - 8.0), "uniform_quantize(0.23)");
  const Quantized clamped = uniform_quantize(vec({-10.0}), p);
  c.require(clamped.values[0] == 0.1 * -8.0 && clamped.pass[0] == 0, "uniform_quantize clamps");
  c.require(calibrate_pot(vec({0.1, -0.3}), 2).params.scale == 0.25, "calibrate_pot scale 0.25");
  const PowerOfTwoParams pp{1.0, 3};
  c.require(pot_quantize(vec({0.3}), pp).values[0] == 0.25, "pot_quantize(0.3)");
  c.require(pot_quantize(vec({0.06}), pp).values[0] == 0.0, "pot_quantize dead zone");
  c.require(pot_quantize(vec({1.5}), pp).values[0] == 1.0, "pot_quantize saturates");
  c.require(pot_quantize(vec({-0.3}), pp).values[0] == -0.25, "pot_quantize sign");
  const Tensor theta = vec({1.0, 0.6, 0.4, -0.7});
  c.require(apply_quant(theta, QuantChoice::FP32).identical(theta), "apply_quant fp32 identity");
  c.require(apply_quant(theta, QuantChoice::P2).to_vector() == std::vector<double>{1.0, 0.5, 0.0, -0.5},
            "apply_quant P2 example");

  // Properties over random tensors.
  Rng rng(424242);
  const int trials = 20000;
  for (int t = 0; t < trials; ++t) {
    const std::size_t n = 1 + rng.below(64);
    const double spread = std::ldexp(1.0, static_cast<int>(rng.below(14)) - 9);
    const double center = rng.bernoulli(0.3) ? rng.uniform(-spread, spread) : 0.0;
    std::vector<double> v(n);
    for (double& x : v) x = center + rng.uniform(-spread, spread);
    const Tensor w({n}, v);
    const QuantChoice ch = kAllChoices[1 + rng.below(4)];
    const int b = bits(ch);
    const Calibration cal = calibrate(w, ch);
    const Quantized q = quantize_with(w, cal);
    if (is_uniform(ch)) {
      const double qmax = std::ldexp(1.0, b) - 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double idx = std::nearbyint(w[i] / cal.uniform.scale) + cal.uniform.zero_point;
        const double k = std::clamp(idx, 0.0, qmax);
        c.require(q.values[i] == cal.uniform.scale * (k - cal.uniform.zero_point), "uniform grid membership");
        if (idx >= 0.0 && idx <= qmax) {
          c.require(std::fabs(w[i] - q.values[i]) <= cal.uniform.scale / 2 * (1 + 1e-12), "uniform error bound");
        }
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) {
        const double r = q.values[i] / cal.pot.scale;
        int e = 0;
        c.require(r == 0.0 || (std::fabs(std::frexp(r, &e)) == 0.5 && std::fabs(r) <= 1.0 &&
                               std::fabs(r) >= pot_dead_zone(b)),
                  "power-of-two membership");
      }
    }
    c.require(quantize_with(q.values, cal).values.identical(q.values), "idempotence");
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const Quantized qs = quantize_with(Tensor({n}, sorted), cal);
    for (std::size_t i = 1; i < n; ++i) c.require(qs.values[i - 1] <= qs.values[i], "monotonicity");
  }
  c.note(std::to_string(trials) + " random tensors, worked examples exact");
}

// ---- criterion 2 ---------------------------------------------------------------------

void gradient_suite(Check& c) {
  constexpr double kTol = 1e-4;
  double worst = 0.0;
  std::size_t probes = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (const auto& g : shq::testing::primitive_cases(seed)) {
      const double err = grad_check(g.f, g.x);
      worst = std::max(worst, err);
      c.require(err < kTol, std::string(g.name) + " relative error " + std::to_string(err));
      ++probes;
    }
  }
  // Network layers built from primitives with hand-written backward.
  Rng rng(77);
  for (int t = 0; t < 10; ++t) {
    const Tensor q = random_tensor(rng, {6, 4}), k = random_tensor(rng, {6, 4}), v = random_tensor(rng, {6, 4});
    const std::vector<std::pair<const char*, std::pair<ScalarFn, Tensor>>> layer_cases = {
        {"maxpool2x2", {[](Tape&, const Var& x) { return shq::testing::probe(snn::maxpool2x2(x)); },
                        random_tensor(rng, {2, 2, 4, 6})}},
        {"channels_to_tokens", {[](Tape&, const Var& x) { return shq::testing::probe(snn::channels_to_tokens(x)); },
                                random_tensor(rng, {2, 3, 2, 2})}},
        {"add_tiled", {[](Tape& tp, const Var& x) {
                         return shq::testing::probe(mul(snn::add_tiled(x, tp.constant(Tensor::full({2, 3}, 0.5))), x));
                       },
                       random_tensor(rng, {4, 3})}},
        {"spike_attention.q", {[=](Tape& tp, const Var& x) {
                                 return shq::testing::probe(
                                     snn::spike_attention(x, tp.constant(k), tp.constant(v), 2, 2, 0.125));
                               },
                               q}},
        {"spike_attention.k", {[=](Tape& tp, const Var& x) {
                                 return shq::testing::probe(
                                     snn::spike_attention(tp.constant(q), x, tp.constant(v), 2, 2, 0.125));
                               },
                               k}},
        {"spike_attention.v", {[=](Tape& tp, const Var& x) {
                                 return shq::testing::probe(
                                     snn::spike_attention(tp.constant(q), tp.constant(k), x, 2, 2, 0.125));
                               },
                               v}},
        {"token_mean_pool", {[](Tape&, const Var& x) {
                               const Var p = snn::token_mean_pool(x, 2, 2);
                               return shq::testing::probe(mul(p, p));
                             },
                             random_tensor(rng, {12, 3})}},
    };
    for (const auto& [name, fc] : layer_cases) {
      const double err = grad_check(fc.first, fc.second);
      worst = std::max(worst, err);
      c.require(err < kTol, std::string(name) + " relative error " + std::to_string(err));
      ++probes;
    }
  }

  // STE: gradient is exactly the pass mask.
  Rng srng(78);
  std::size_t ste = 0;
  for (int t = 0; t < 3000; ++t) {
    const std::size_t n = 1 + srng.below(40);
    const double spread = std::ldexp(1.0, static_cast<int>(srng.below(10)) - 6);
    const Tensor w = random_tensor(srng, {n}, -spread, spread);
    const QuantChoice ch = quant::kAllChoices[1 + srng.below(4)];
    Tape tape;
    const Var x = tape.parameter(w);
    const Tensor g = tape.backward(sum(quant::apply_quant(x, ch))).of(x);
    const quant::Calibration cal = quant::calibrate(w, ch);
    for (std::size_t i = 0; i < n; ++i) {
      bool pass;
      if (quant::is_uniform(ch)) {
        const double idx = std::nearbyint(w[i] / cal.uniform.scale) + cal.uniform.zero_point;
        pass = idx >= 0.0 && idx <= std::ldexp(1.0, quant::bits(ch)) - 1.0;
      } else {
        pass = std::fabs(w[i] / cal.pot.scale) <= 1.0;
      }
      c.require(g[i] == (pass ? 1.0 : 0.0), "STE mask");
      ++ste;
    }
  }
  {
    Tape tape;
    const Var x = tape.parameter(vec({-10.0, 0.23, 0.8, 2.0}));
    const quant::Quantized u = quant::uniform_quantize(x.value(), quant::UniformParams{0.1, 8.0, 4});
    c.require(tape.backward(sum(masked_pass_through(x, u.values, u.pass))).of(x).to_vector() ==
                  std::vector<double>{0, 1, 0, 0},
              "uniform clamped region has zero gradient");
  }

  // LIF surrogate against its closed form.
  Rng lrng(79);
  std::size_t lif_points = 0;
  for (double width : {0.5, 1.0, 2.0}) {
    snn::LifConfig cfg;
    cfg.surrogate_width = width;
    std::vector<double> u(2000);
    for (double& x : u) x = lrng.uniform(-1.0, 3.0);
    u[0] = cfg.threshold + width / 2;
    u[1] = cfg.threshold - width / 2;
    Tape tape;
    const Var m = tape.parameter(Tensor({u.size()}, u));
    const Tensor g = tape.backward(sum(snn::spike_fn(m, cfg))).of(m);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double expect = std::fabs(u[i] - cfg.threshold) <= width / 2 ? 1.0 / width : 0.0;
      c.require(g[i] == expect, "surrogate closed form at u=" + std::to_string(u[i]));
      ++lif_points;
    }
  }
  c.note(std::to_string(probes) + " finite-difference probes, worst relative error " + fmt("%.2e", worst));
  c.note(std::to_string(ste) + " STE coordinates and " + std::to_string(lif_points) + " surrogate points exact");
}

// ---- criterion 3 ---------------------------------------------------------------------

oracle::Choice to_oracle(QuantChoice ch) {
  switch (ch) {
    case QuantChoice::FP32: return {oracle::Scheme::Full, 32};
    case QuantChoice::U2: return {oracle::Scheme::Uniform, 2};
    case QuantChoice::U4: return {oracle::Scheme::Uniform, 4};
    case QuantChoice::P2: return {oracle::Scheme::PowerOfTwo, 2};
    case QuantChoice::P4: return {oracle::Scheme::PowerOfTwo, 4};
  }
  return {};
}

void cost_oracle(Check& c) {
  Rng rng(271828);
  const cost::EnergyTable t;
  const cost::Component comps[] = {cost::Component::Tokenizer,      cost::Component::AttentionQuery,
                                   cost::Component::AttentionKey,   cost::Component::AttentionValue,
                                   cost::Component::AttentionOutput, cost::Component::Mlp,
                                   cost::Component::Head};
  std::vector<cost::CostedLayer> lib;
  std::vector<oracle::Layer> ref;
  for (int i = 0; i < 1000; ++i) {
    const cost::Component comp = comps[rng.below(7)];
    const int group = static_cast<int>(cost::group_of(comp));
    if (rng.bernoulli(0.5)) {
      const std::uint64_t fi = 1 + rng.below(96), fo = 1 + rng.below(96), d = 1 + rng.below(96);
      lib.push_back({"l" + std::to_string(i), comp, cost::LayerSpec::linear(fi, fo, d)});
      ref.push_back({oracle::Kind::Linear, fi, fo, d, 0, group});
    } else {
      const std::uint64_t k = 1 + 2 * rng.below(3), ci = 1 + rng.below(16), co = 1 + rng.below(24),
                          s = 1 + rng.below(96);
      lib.push_back({"c" + std::to_string(i), comp, cost::LayerSpec::conv(k, ci, co, s)});
      ref.push_back({oracle::Kind::Conv, k, ci, co, s, group});
    }
    for (QuantChoice ch : quant::kAllChoices) {
      const cost::LayerCost got = cost::layer_cost(lib.back().spec, ch, t);
      c.require(got.ops == oracle::enumerate_ops(ref.back()), "ops of spec " + std::to_string(i));
      c.require(got.bits == oracle::enumerate_bits(ref.back(), quant::bits(ch)), "bits of spec " + std::to_string(i));
      c.require(got.energy_pj == oracle::energy(ref.back(), to_oracle(ch)), "energy of spec " + std::to_string(i));
    }
  }
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<cost::CostedLayer> sub;
    std::vector<oracle::Layer> sub_ref;
    std::vector<QuantChoice> picks;
    std::vector<oracle::Choice> ref_picks;
    for (int i = 0; i < 17; ++i) {
      const std::size_t j = rng.below(lib.size());
      sub.push_back(lib[j]);
      sub_ref.push_back(ref[j]);
      picks.push_back(quant::kAllChoices[rng.below(5)]);
      ref_picks.push_back(to_oracle(picks.back()));
    }
    const cost::ModelSummary s = cost::model_summary(sub, picks, t);
    const oracle::Totals o = oracle::totals(sub_ref, ref_picks);
    c.require(s.energy_pj == o.energy_pj && s.storage_bits == o.bits && s.storage_mb == o.megabytes &&
                  s.avg_bits == o.avg_bits && s.parameters == o.params,
              "model_summary totals, trial " + std::to_string(trial));

    // Linearity of the expected cost in the selection weights.
    std::vector<std::vector<double>> costs, w1, w2, mix;
    const double lambda = rng.uniform01();
    for (const auto& l : sub) {
      const cost::ChoiceCosts cc = cost::choice_costs(l.spec, t);
      costs.emplace_back(cc.begin(), cc.end());
      auto simplex = [&] {
        std::vector<double> w(5);
        double total = 0.0;
        for (double& x : w) total += (x = rng.uniform(0.01, 1.0));
        for (double& x : w) x /= total;
        return w;
      };
      w1.push_back(simplex());
      w2.push_back(simplex());
      mix.emplace_back(5);
      for (int k = 0; k < 5; ++k) mix.back()[k] = lambda * w1.back()[k] + (1 - lambda) * w2.back()[k];
    }
    const double lhs = cost::expected_supernet_cost(costs, mix);
    const double rhs = lambda * cost::expected_supernet_cost(costs, w1) +
                       (1 - lambda) * cost::expected_supernet_cost(costs, w2);
    c.require(std::fabs(lhs - rhs) <= 1e-9 * std::fabs(rhs), "expected cost linearity");
    c.require(cost::expected_supernet_cost(costs, w1) == oracle::expected(costs, w1), "expected cost vs oracle");
  }
  c.note("1000 random LayerSpecs x 5 choices, 100 model summaries, 100 linearity probes");
}

// ---- criterion 4 ---------------------------------------------------------------------

void full_scale_storage(Check& c) {
  const cli::RunConfig cfg = cli::load_config(std::string(SHQ_SOURCE_DIR) + "/configs/full_dvs128.cfg");
  c.require(cfg.model.steps == 16 && cfg.model.dim == 256 && cfg.model.blocks == 2 && cfg.model.heads == 16 &&
                cfg.model.height == 128 && cfg.model.width == 128 && cfg.model.channels.front() == 2,
            "full-scale configuration");
  const cli::Json r = cli::cmd_cost(cfg, std::nullopt);
  const double mb = r["summary"]["storage_mb"].get<double>();
  const double mj = r["summary"]["energy_mj"].get<double>();
  const double target_mb = 10.21, target_mj = 14.99;
  c.require(std::fabs(mb - target_mb) <= 0.15 * target_mb, "storage " + std::to_string(mb) + " MB");
  c.require(!r["assumptions"].get<std::string>().empty(), "reconstruction assumptions missing from the report");
  c.note("storage " + fmt("%.3f", mb) + " MB vs 10.21 MB (" + fmt("%+.1f", 100.0 * (mb / target_mb - 1)) +
         "%, tolerance 15%), avg bits " + fmt("%.0f", r["summary"]["avg_bits"].get<double>()));
  const bool energy_ok = std::fabs(mj - target_mj) <= 0.25 * target_mj;
  c.note("energy " + fmt("%.2f", mj) + " mJ vs 14.99 mJ (" + fmt("%+.1f", 100.0 * (mj / target_mj - 1)) +
         "%): " + (energy_ok ? "within" : "outside") + " the informative 25% band, not blocking");
}

// ---- criteria 5 to 8 ----------------------------------------------------------------

struct Run {
  std::uint64_t seed;
  double beta;
  fs::path dir;
  cli::RunConfig cfg;
  cli::SearchOutputs out;
  double seconds;
};

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

void search_behaviour(Check& c, const std::vector<Run>& runs) {
  const cli::RunConfig& cfg = runs.front().cfg;
  c.require(cfg.model.steps == 4 && cfg.model.dim == 64 && cfg.model.blocks == 2 && cfg.model.classes == 4,
            "desk configuration is not T=4, D=64, 2 blocks, K=4");
  std::map<double, std::vector<double>> energy;
  std::map<std::pair<std::uint64_t, double>, double> acc, pct;
  for (const Run& r : runs) {
    const auto rows = cli::parse_trace_csv(slurp(r.dir / "trace.csv"));
    std::size_t initial = 0;
    for (const auto& row : rows) {
      if (row.epoch != 0) continue;
      ++initial;
      c.require(std::fabs(row.probability - 0.2) <= 1e-12, "(a) seed " + std::to_string(r.seed) + " " + row.layer +
                                                               " starts at " + std::to_string(row.probability));
    }
    c.require(initial == r.out.result.choices.size() * 5, "(a) epoch-0 rows missing");
    c.require(r.seconds < 1800.0, "run over 30 minutes");
    const double e = r.out.report["summary"]["energy_pct"].get<double>();
    const double a = r.out.test.accuracy;
    energy[r.beta].push_back(e);
    acc[{r.seed, r.beta}] = a;
    pct[{r.seed, r.beta}] = e;
    c.note("seed " + std::to_string(r.seed) + " beta " + fmt("%g", r.beta) + ": energy " + fmt("%.2f", e) +
           "% of fp32, storage " + fmt("%.2f", r.out.report["summary"]["storage_pct"].get<double>()) +
           "%, avg bits " + fmt("%.2f", r.out.report["summary"]["avg_bits"].get<double>()) + ", test accuracy " +
           fmt("%.4f", a) + ", " + fmt("%.0f", r.seconds) + " s");
  }
  for (std::uint64_t s : {1, 2, 3}) {
    c.require(pct[{s, 1.0}] <= 40.0, "(b) seed " + std::to_string(s) + " beta 1 energy " +
                                         fmt("%.2f", pct[{s, 1.0}]) + "% > 40%");
    const double drop = 100.0 * (acc[{s, 0.0}] - acc[{s, 1.0}]);
    c.require(drop <= 3.0, "(b) seed " + std::to_string(s) + " accuracy drop " + fmt("%.2f", drop) + " points > 3");
  }
  const double m0 = median3(energy[0.0]), m1 = median3(energy[1.0]), m2 = median3(energy[2.0]);
  c.note("median energy: beta 0 " + fmt("%.2f", m0) + "%, beta 1 " + fmt("%.2f", m1) + "%, beta 2 " +
         fmt("%.2f", m2) + "%");
  c.require(m0 >= m1 && m1 >= m2, "(c) median energy increases with beta");
}

void consistency_identity(Check& c, const std::vector<Run>& runs) {
  for (const Run& r : runs) {
    const cli::Json arch = cli::Json::parse(slurp(r.dir / "architecture.json"));
    const double from_cost = cli::cmd_cost(r.cfg, arch)["summary"]["energy_pj"].get<double>();
    const auto layers = snn::enumerate_layers(r.cfg.model);
    std::vector<std::vector<double>> costs, onehot;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const cost::ChoiceCosts cc = cost::choice_costs(layers[l].spec, r.cfg.energy);
      costs.emplace_back(cc.begin(), cc.end());
      onehot.emplace_back(5, 0.0);
      onehot.back()[quant::index_of(r.out.result.choices[l])] = 1.0;
    }
    const double expected = cost::expected_supernet_cost(costs, onehot);
    c.require(from_cost == expected, "seed " + std::to_string(r.seed) + " beta " + fmt("%g", r.beta) + ": " +
                                         fmt("%.17g", from_cost) + " vs " + fmt("%.17g", expected));
    c.require(r.out.result.expected_one_hot_pj == expected, "search-time one-hot cost differs");
  }
  c.note(std::to_string(runs.size()) + " extracted architectures, exact equality");
}

void determinism(Check& c, const Run& first) {
  const fs::path again = first.dir.parent_path() / (first.dir.filename().string() + "_rerun");
  fs::remove_all(again);
  cli::cmd_search(first.cfg, again.string());
  for (const char* f : {"trace.csv", "architecture.json"}) {
    const std::string a = slurp(first.dir / f), b = slurp(again / f);
    c.require(!a.empty() && a == b, std::string(f) + " differs between reruns");
    c.note(std::string(f) + ": " + std::to_string(a.size()) + " bytes, " + (a == b ? "identical" : "different"));
  }
}

void report_integrity(Check& c, const std::vector<Run>& runs) {
  std::size_t two_bit = 0, groups = 0;
  for (const Run& r : runs) {
    const std::string tag = "seed " + std::to_string(r.seed) + " beta " + fmt("%g", r.beta);
    const cli::Json report = cli::Json::parse(slurp(r.dir / "report.json"));
    for (const char* part : {"components", "attention"}) {
      double e = 0.0, s = 0.0;
      for (const auto& row : report[part]) {
        e += row["energy_share_pct"].get<double>();
        s += row["storage_share_pct"].get<double>();
      }
      c.require(std::fabs(e - 100.0) <= 0.1, tag + " " + part + " energy shares sum to " + std::to_string(e));
      c.require(std::fabs(s - 100.0) <= 0.1, tag + " " + part + " storage shares sum to " + std::to_string(s));
    }
    // Distinct stored values, counted from the checkpoint itself.
    const snn::Checkpoint ck = snn::load_checkpoint((r.dir / "checkpoint.bin").string());
    for (std::size_t l = 0; l < ck.choices.size(); ++l) {
      if (quant::bits(ck.choices[l]) != 2) continue;
      ++two_bit;
      const auto d = ck.model.weights[l].data();
      const std::size_t distinct = std::set<double>(d.begin(), d.end()).size();
      c.require(distinct <= 4, tag + " " + ck.model.layers[l].name + " (" +
                                   std::string(quant::choice_name(ck.choices[l])) + ") stores " +
                                   std::to_string(distinct) + " distinct values");
    }
    const auto rows = cli::parse_trace_csv(slurp(r.dir / "trace.csv"));
    c.require(rows.size() % 5 == 0, tag + " trace rows not a multiple of 5");
    for (std::size_t i = 0; i + 5 <= rows.size(); i += 5) {
      double total = 0.0;
      for (std::size_t k = 0; k < 5; ++k) total += rows[i + k].probability;
      c.require(std::fabs(total - 1.0) <= 1e-6, tag + " trace row group at line " + std::to_string(i + 2) +
                                                   " sums to " + fmt("%.9f", total));
      ++groups;
    }
  }
  c.note(std::to_string(two_bit) + " extracted 2-bit layers checked, " + std::to_string(groups) +
         " probability groups checked");
}

}  // namespace

int main() {
  std::printf("kernel table: %s\n", std::string(kernels::isa_name(kernels::active().isa)).c_str());
  run_criterion(1, "quantizer correctness suite", 60.0, quantizer_suite);
  run_criterion(2, "STE and gradient suite", 120.0, gradient_suite);
  run_criterion(3, "cost-model oracle agreement", 30.0, cost_oracle);
  run_criterion(4, "full-scale full-precision storage", 0.0, full_scale_storage);

  const fs::path root = fs::temp_directory_path() / "shq_acceptance";
  fs::remove_all(root);
  std::vector<Run> runs;
  std::string setup_error;
  try {
    const cli::RunConfig desk = cli::load_config(std::string(SHQ_SOURCE_DIR) + "/configs/desk.cfg");
    for (std::uint64_t seed : {1, 2, 3}) {
      for (double beta : {0.0, 1.0, 2.0}) {
        Run r{seed, beta, root / ("seed" + std::to_string(seed) + "_beta" + fmt("%g", beta)), desk, {}, 0.0};
        r.cfg.seed = seed;
        r.cfg.search.beta = beta;
        const auto t0 = Clock::now();
        r.out = cli::cmd_search(r.cfg, r.dir.string());
        r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        std::printf("  search seed %llu beta %g done in %.0f s\n", static_cast<unsigned long long>(seed), beta,
                    r.seconds);
        std::fflush(stdout);
        runs.push_back(std::move(r));
      }
    }
  } catch (const std::exception& e) {
    setup_error = e.what();
  }
  auto with_runs = [&](const std::function<void(Check&)>& body) {
    return [&, body](Check& c) {
      c.require(setup_error.empty(), "desk searches failed: " + setup_error);
      if (setup_error.empty()) body(c);
    };
  };
  run_criterion(5, "desk-scale search behaviour", 0.0, with_runs([&](Check& c) { search_behaviour(c, runs); }));
  run_criterion(6, "extracted energy equals one-hot expected cost", 0.0,
                with_runs([&](Check& c) { consistency_identity(c, runs); }));
  run_criterion(7, "search determinism", 0.0, with_runs([&](Check& c) {
                  const auto it = std::find_if(runs.begin(), runs.end(),
                                               [](const Run& r) { return r.seed == 1 && r.beta == 1.0; });
                  determinism(c, *it);
                }));
  run_criterion(8, "report integrity", 0.0, with_runs([&](Check& c) { report_integrity(c, runs); }));

  std::printf("%d of 8 criteria failed\n", g_failed);
  return g_failed == 0 ? 0 : 1;
}
