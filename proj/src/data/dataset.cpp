#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "shq/data/dataset.hpp"
#include "shq/data/tensor_file.hpp"
#include "shq/detail/text.hpp"
#include "shq/errors.hpp"
#include "shq/search/rng.hpp"

namespace shq::data {

namespace fs = std::filesystem;

Splits stratified_split(std::span<const std::uint32_t> labels, std::size_t classes, std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= classes) throw ValidationError("stratified_split: label out of range");
    by_class[labels[i]].push_back(i);
  }
  Rng rng(seed);
  Splits s;
  for (auto& members : by_class) {
    rng.shuffle(members);
    const double n = static_cast<double>(members.size());
    const auto n_train = static_cast<std::size_t>(std::nearbyint(0.64 * n));
    const auto n_search = std::min(members.size() - n_train, static_cast<std::size_t>(std::nearbyint(0.16 * n)));
    s.train.insert(s.train.end(), members.begin(), members.begin() + n_train);
    s.search.insert(s.search.end(), members.begin() + n_train, members.begin() + n_train + n_search);
    s.test.insert(s.test.end(), members.begin() + n_train + n_search, members.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.search.begin(), s.search.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

namespace {

std::string sample_file(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "sample_%05zu.shq", i);
  return buf;
}

}  // namespace

void save_dataset(const std::string& dir, const Dataset& ds) {
  fs::create_directories(dir);
  std::ofstream m(fs::path(dir) / "manifest.txt", std::ios::trunc);
  if (!m) throw std::runtime_error("cannot write manifest in " + dir);
  m << "version=1\n"
    << "classes=" << ds.spec.classes << "\n"
    << "per_class=" << ds.spec.per_class << "\n"
    << "steps=" << ds.spec.steps << "\n"
    << "height=" << ds.spec.height << "\n"
    << "width=" << ds.spec.width << "\n"
    << "noise=" << detail::format_double(ds.spec.noise) << "\n"
    << "seed=" << ds.spec.seed << "\n"
    << "samples=" << ds.samples.size() << "\n"
    << "split.train=" << detail::join_sizes(ds.splits.train) << "\n"
    << "split.search=" << detail::join_sizes(ds.splits.search) << "\n"
    << "split.test=" << detail::join_sizes(ds.splits.test) << "\n";
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    save_tensor((fs::path(dir) / sample_file(i)).string(), ds.samples[i].frames, ds.samples[i].label);
  }
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream m(fs::path(dir) / "manifest.txt");
  if (!m) throw std::runtime_error("no manifest.txt in " + dir);
  std::map<std::string, std::string> kv;
  std::string line;
  int row = 0;
  while (std::getline(m, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("manifest: expected key=value", static_cast<std::uint64_t>(row));
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw FormatError("manifest: missing key " + k, static_cast<std::uint64_t>(row));
    return it->second;
  };
  Dataset ds;
  ds.spec.classes = detail::parse_u64("classes", get("classes"));
  ds.spec.per_class = detail::parse_u64("per_class", get("per_class"));
  ds.spec.steps = detail::parse_u64("steps", get("steps"));
  ds.spec.height = detail::parse_u64("height", get("height"));
  ds.spec.width = detail::parse_u64("width", get("width"));
  ds.spec.noise = detail::parse_double("noise", get("noise"));
  ds.spec.seed = detail::parse_u64("seed", get("seed"));
  const std::size_t n = detail::parse_u64("samples", get("samples"));
  ds.splits.train = detail::parse_size_list("split.train", get("split.train"));
  ds.splits.search = detail::parse_size_list("split.search", get("split.search"));
  ds.splits.test = detail::parse_size_list("split.test", get("split.test"));
  for (std::size_t i = 0; i < n; ++i) {
    LabeledTensor t = load_tensor((fs::path(dir) / sample_file(i)).string());
    if (!t.label) throw ValidationError("sample " + std::to_string(i) + " has no label");
    ds.samples.push_back({std::move(t.tensor), *t.label});
  }
  std::vector<bool> seen(n, false);
  for (const auto* split : {&ds.splits.train, &ds.splits.search, &ds.splits.test})
    for (std::size_t i : *split) {
      if (i >= n || seen[i]) throw ValidationError("manifest: splits overlap or reference missing samples");
      seen[i] = true;
    }
  return ds;
}

}  // namespace shq::data
