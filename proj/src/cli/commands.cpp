#include "shq/cli/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "shq/detail/binary_io.hpp"
#include "shq/errors.hpp"
#include "shq/search/rng.hpp"

namespace shq::cli {

namespace fs = std::filesystem;
using quant::QuantChoice;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::parse_error& e) {
    throw FormatError(path + ": " + e.what(), e.byte);
  }
}

std::vector<WeightPair> weight_pairs(const snn::Model& pre, const snn::Model& post) {
  std::vector<WeightPair> w;
  for (std::size_t i = 0; i < pre.weights.size(); ++i) w.push_back({pre.weights[i], post.weights[i]});
  return w;
}

std::vector<QuantChoice> resolve_choices(const std::vector<snn::LayerHandle>& layers,
                                         const std::optional<Json>& arch) {
  if (arch) return parse_architecture(*arch, layers);
  return std::vector<QuantChoice>(layers.size(), QuantChoice::FP32);
}

}  // namespace

data::Dataset load_data(const RunConfig& cfg) {
  if (cfg.data_path.empty()) return data::generate_synthetic(cfg.data_spec());
  data::Dataset ds = data::load_dataset(cfg.data_path);
  const auto& s = ds.spec;
  if (s.classes != cfg.model.classes || s.steps != cfg.model.steps || s.height != cfg.model.height ||
      s.width != cfg.model.width) {
    throw ValidationError("dataset at " + cfg.data_path + " does not match the model dimensions");
  }
  return ds;
}

snn::Model initial_model(const RunConfig& cfg, const data::Dataset& ds) {
  snn::Model m = snn::Model::init(cfg.model, cfg.lif, derive_seed(cfg.seed, "init"));
  const std::size_t n = std::min<std::size_t>(ds.splits.train.size(), 4 * cfg.search.batch_size);
  if (n > 0) {
    const Batch calib = make_batch(ds, std::span(ds.splits.train).first(n));
    snn::calibrate_affines(m, calib.frames, calib.size);
  }
  return m;
}

Json metrics_json(const EvalResult& r) {
  return Json{{"accuracy", r.accuracy}, {"loss", r.loss}, {"n_samples", r.n_samples}};
}

SearchOutputs cmd_search(const RunConfig& cfg, const std::string& out_dir) {
  const data::Dataset ds = load_data(cfg);
  const snn::Model init = snn::Model::init(cfg.model, cfg.lif, derive_seed(cfg.seed, "init"));
  SearchOutputs o;
  o.result = run_search(init, ds, cfg.search, cfg.seed, cfg.energy);
  o.test = evaluate(o.result.model, ds, ds.splits.test, cfg.search.batch_size);
  o.trace_csv = trace_csv(o.result.trace);
  o.architecture = architecture_json(o.result.model.layers, o.result.choices);
  const auto weights = weight_pairs(o.result.latent, o.result.model);
  o.report = build_report({&cfg, o.result.model.layers, o.result.choices, o.test.accuracy, weights});
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const fs::path d(out_dir);
    write_text(d / "trace.csv", o.trace_csv);
    write_text(d / "architecture.json", o.architecture.dump(2) + "\n");
    write_text(d / "report.json", o.report.dump(2) + "\n");
    write_text(d / "metrics.json", metrics_json(o.test).dump(2) + "\n");
    snn::save_checkpoint((d / "checkpoint.bin").string(), {o.result.model, o.result.choices});
  }
  return o;
}

Json cmd_cost(const RunConfig& cfg, const std::optional<Json>& architecture) {
  const auto layers = snn::enumerate_layers(cfg.model);
  const auto choices = resolve_choices(layers, architecture);
  return build_report({&cfg, layers, choices, std::nullopt, {}});
}

TrainOutputs cmd_train(const RunConfig& cfg, const std::optional<Json>& architecture, const std::string& out_dir) {
  const data::Dataset ds = load_data(cfg);
  snn::Model latent = initial_model(cfg, ds);
  const auto choices = resolve_choices(latent.layers, architecture);
  TrainOutputs o;
  o.epochs = train_fixed(latent, choices, ds, cfg.train_config());
  o.checkpoint = {freeze(latent, choices), choices};
  o.test = evaluate(o.checkpoint.model, ds, ds.splits.test, cfg.search.batch_size);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const fs::path d(out_dir);
    const auto weights = weight_pairs(latent, o.checkpoint.model);
    const Json report = build_report({&cfg, latent.layers, choices, o.test.accuracy, weights});
    write_text(d / "architecture.json", architecture_json(latent.layers, choices).dump(2) + "\n");
    write_text(d / "report.json", report.dump(2) + "\n");
    write_text(d / "metrics.json", metrics_json(o.test).dump(2) + "\n");
    snn::save_checkpoint((d / "checkpoint.bin").string(), o.checkpoint);
  }
  return o;
}

EvalResult cmd_eval(const RunConfig& cfg, const snn::Checkpoint& ckpt) {
  if (snn::model_entries(ckpt.model.config, ckpt.model.lif) != snn::model_entries(cfg.model, cfg.lif)) {
    throw ValidationError("checkpoint was saved for a different model configuration");
  }
  const data::Dataset ds = load_data(cfg);
  return evaluate(ckpt.model, ds, ds.splits.test, cfg.search.batch_size);
}

ReportBundle cmd_report(const std::string& trace_path, const std::string& report_path, const std::string& out_dir) {
  const ReportBundle b = make_report_bundle(parse_trace_csv(read_text(trace_path)), read_json(report_path));
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    const fs::path d(out_dir);
    write_text(d / "probability_evolution.csv", b.probability_evolution);
    write_text(d / "component_breakdown.csv", b.component_breakdown);
    write_text(d / "weight_quantiles.csv", b.weight_quantiles);
  }
  return b;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Hardware-aware mixed-precision search for spiking transformers"};
  app.require_subcommand(1);

  std::string config_path, arch_path, checkpoint_path, trace_path, report_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> beta;
  std::optional<std::string> out;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration (key=value lines)");
    sub->add_option("--seed", seed, "root seed, overrides the config");
    sub->add_option("--out", out, "output directory, overrides the config");
  };
  CLI::App* search = app.add_subcommand("search", "supernet search, extraction and report");
  common(search);
  search->add_option("--beta", beta, "hardware trade-off exponent, overrides the config");
  CLI::App* train = app.add_subcommand("train", "quantization-aware training of a fixed architecture");
  common(train);
  train->add_option("--arch", arch_path, "architecture JSON (default: all fp32)");
  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  common(eval);
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
  CLI::App* cost = app.add_subcommand("cost", "storage and energy of an architecture");
  common(cost);
  cost->add_option("--arch", arch_path, "architecture JSON (default: all fp32)");
  CLI::App* report = app.add_subcommand("report", "figure-ready CSVs from a trace and a report");
  report->add_option("--trace", trace_path, "trace.csv from a search")->required();
  report->add_option("--report", report_path, "report.json")->required();
  report->add_option("--out", out, "output directory");
  CLI::App* gen = app.add_subcommand("gen-data", "write the synthetic dataset to disk");
  common(gen);

  CLI11_PARSE(app, argc, argv);

  try {
    auto config = [&] {
      RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
      if (seed) c.seed = *seed;
      if (out) c.out = *out;
      if (beta) {
        c.search.beta = *beta;
        try {
          c.search.validate();
        } catch (const std::exception& e) {
          throw ConfigError(std::string("--beta: ") + e.what());
        }
      }
      return c;
    };
    auto arch = [&]() -> std::optional<Json> {
      if (arch_path.empty()) return std::nullopt;
      return read_json(arch_path);
    };

    if (search->parsed()) {
      const RunConfig c = config();
      const SearchOutputs o = cmd_search(c, c.out);
      std::cout << format_report(o.report);
      std::cout << "wrote " << c.out << "/{trace.csv,architecture.json,checkpoint.bin,report.json,metrics.json}\n";
    } else if (train->parsed()) {
      const RunConfig c = config();
      const TrainOutputs o = cmd_train(c, arch(), c.out);
      for (const auto& e : o.epochs) {
        std::printf("epoch %zu  loss %.5f  train acc %.4f\n", e.epoch, e.loss, e.accuracy);
      }
      std::cout << metrics_json(o.test).dump() << "\n";
    } else if (eval->parsed()) {
      const RunConfig c = config();
      const EvalResult r = cmd_eval(c, snn::load_checkpoint(checkpoint_path));
      const std::string text = metrics_json(r).dump(2) + "\n";
      fs::create_directories(c.out);
      write_text(fs::path(c.out) / "metrics.json", text);
      std::cout << text;
    } else if (cost->parsed()) {
      const RunConfig c = config();
      const Json r = cmd_cost(c, arch());
      fs::create_directories(c.out);
      write_text(fs::path(c.out) / "report.json", r.dump(2) + "\n");
      std::cout << format_report(r);
    } else if (report->parsed()) {
      const ReportBundle b = cmd_report(trace_path, report_path, out.value_or("."));
      std::cout << b.component_breakdown;
    } else if (gen->parsed()) {
      const RunConfig c = config();
      const fs::path dir = fs::path(c.out) / "data";
      data::save_dataset(dir.string(), data::generate_synthetic(c.data_spec()));
      std::cout << "wrote " << dir.string() << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace shq::cli
