#include "shq/cli/config.hpp"

#include <fstream>
#include <sstream>

#include "shq/detail/text.hpp"
#include "shq/errors.hpp"
#include "shq/search/rng.hpp"
#include "shq/snn/checkpoint.hpp"

namespace shq::cli {

using detail::format_double;
using detail::parse_double;
using detail::parse_u64;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

struct EnergyKey {
  const char* name;
  double cost::EnergyRow::*field;
};
constexpr EnergyKey kEnergyFields[] = {{"mult", &cost::EnergyRow::mult},
                                       {"add", &cost::EnergyRow::add},
                                       {"shift", &cost::EnergyRow::shift},
                                       {"dram", &cost::EnergyRow::dram}};

bool set_energy(cost::EnergyTable& t, const std::string& key, const std::string& v) {
  for (const auto& [row_name, row] : {std::pair{"energy.fp32.", &t.fp32}, std::pair{"energy.int8.", &t.int8}}) {
    for (const auto& f : kEnergyFields) {
      if (key == std::string(row_name) + f.name) {
        const double x = parse_double(key, v);
        if (!(x >= 0.0)) throw ConfigError(key + " must be non-negative");
        row->*f.field = x;
        return true;
      }
    }
  }
  return false;
}

bool set_search(SearchConfig& s, const std::string& key, const std::string& v) {
  const std::pair<const char*, double SearchConfig::*> reals[] = {
      {"search.beta", &SearchConfig::beta},         {"search.lambda0", &SearchConfig::lambda0},
      {"search.lambda_min", &SearchConfig::lambda_min}, {"search.lambda_decay", &SearchConfig::lambda_decay},
      {"search.lr_start", &SearchConfig::lr_start}, {"search.lr_peak", &SearchConfig::lr_peak},
      {"search.lr_end", &SearchConfig::lr_end},     {"search.logit_lr", &SearchConfig::logit_lr},
      {"search.weight_decay", &SearchConfig::weight_decay}};
  for (const auto& [k, f] : reals) {
    if (key == k) {
      s.*f = parse_double(key, v);
      return true;
    }
  }
  const std::pair<const char*, std::size_t SearchConfig::*> sizes[] = {
      {"search.epochs", &SearchConfig::epochs},
      {"search.batch_size", &SearchConfig::batch_size},
      {"search.warmup_epochs", &SearchConfig::warmup_epochs},
      {"search.finetune_epochs", &SearchConfig::finetune_epochs}};
  for (const auto& [k, f] : sizes) {
    if (key == k) {
      s.*f = parse_u64(key, v);
      return true;
    }
  }
  if (key != "search.per_candidate_weights") return false;
  s.per_candidate_weights = parse_bool(key, v);
  return true;
}

void apply(RunConfig& c, const std::string& key, const std::string& v) {
  if (key == "seed") c.seed = parse_u64(key, v);
  else if (key == "out") c.out = v;
  else if (key == "train.epochs") c.train_epochs = parse_u64(key, v);
  else if (key == "data.per_class") c.data.per_class = parse_u64(key, v);
  else if (key == "data.noise") c.data.noise = parse_double(key, v);
  else if (key == "data.seed") c.data_seed = parse_u64(key, v);
  else if (key == "data.path") c.data_path = v;
  else if (key == "report.assumptions") c.assumptions = v;
  else if (snn::set_model_entry(c.model, c.lif, key, v)) {}
  else if (set_search(c.search, key, v)) {}
  else if (set_energy(c.energy, key, v)) {}
  else throw ConfigError("unknown key '" + key + "'");
}

}  // namespace

data::SyntheticSpec RunConfig::data_spec() const {
  data::SyntheticSpec s = data;
  s.classes = model.classes;
  s.steps = model.steps;
  s.height = model.height;
  s.width = model.width;
  s.seed = data_seed.value_or(derive_seed(seed, "data"));
  return s;
}

TrainConfig RunConfig::train_config() const {
  return TrainConfig{train_epochs, search.batch_size, search.warmup_epochs, search.lr_start, search.lr_peak,
                     search.lr_end, search.weight_decay, derive_seed(seed, "train")};
}

bool RunConfig::operator==(const RunConfig& other) const {
  return serialize_config(*this) == serialize_config(other);
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream in(text);
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value", row);
    const std::string key = trim(t.substr(0, eq)), value = trim(t.substr(eq + 1));
    try {
      apply(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), row);
    }
  }
  try {
    c.model.validate();
    c.lif.validate();
    c.search.validate();
    c.data_spec().validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return c;
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream o;
  o << "seed=" << c.seed << "\n";
  o << "out=" << c.out << "\n";
  for (const auto& [k, v] : snn::model_entries(c.model, c.lif)) o << k << "=" << v << "\n";
  const SearchConfig& s = c.search;
  o << "search.beta=" << format_double(s.beta) << "\n"
    << "search.lambda0=" << format_double(s.lambda0) << "\n"
    << "search.lambda_min=" << format_double(s.lambda_min) << "\n"
    << "search.lambda_decay=" << format_double(s.lambda_decay) << "\n"
    << "search.epochs=" << s.epochs << "\n"
    << "search.batch_size=" << s.batch_size << "\n"
    << "search.warmup_epochs=" << s.warmup_epochs << "\n"
    << "search.lr_start=" << format_double(s.lr_start) << "\n"
    << "search.lr_peak=" << format_double(s.lr_peak) << "\n"
    << "search.lr_end=" << format_double(s.lr_end) << "\n"
    << "search.logit_lr=" << format_double(s.logit_lr) << "\n"
    << "search.weight_decay=" << format_double(s.weight_decay) << "\n"
    << "search.per_candidate_weights=" << (s.per_candidate_weights ? "true" : "false") << "\n"
    << "search.finetune_epochs=" << s.finetune_epochs << "\n";
  o << "train.epochs=" << c.train_epochs << "\n";
  o << "data.per_class=" << c.data.per_class << "\n";
  o << "data.noise=" << format_double(c.data.noise) << "\n";
  if (c.data_seed) o << "data.seed=" << *c.data_seed << "\n";
  if (!c.data_path.empty()) o << "data.path=" << c.data_path << "\n";
  for (const auto& [name, row] : {std::pair{"fp32", c.energy.fp32}, std::pair{"int8", c.energy.int8}}) {
    for (const auto& f : kEnergyFields) {
      o << "energy." << name << "." << f.name << "=" << format_double(row.*f.field) << "\n";
    }
  }
  if (!c.assumptions.empty()) o << "report.assumptions=" << c.assumptions << "\n";
  return o.str();
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace shq::cli
