#include "shq/cli/csv.hpp"

#include <sstream>

#include "shq/detail/text.hpp"
#include "shq/errors.hpp"

namespace shq::cli {

namespace {
constexpr const char* kHeader = "epoch,block,layer,choice_name,probability,lambda,L_acc,L_hw,L_total";
}

std::string trace_csv(const std::vector<TraceRecord>& trace) {
  using detail::format_double;
  std::string out = std::string(kHeader) + "\n";
  for (const auto& r : trace) {
    for (std::size_t i = 0; i < quant::kChoiceCount; ++i) {
      out += std::to_string(r.epoch) + "," + r.block + "," + r.layer + "," +
             std::string(quant::choice_name(quant::kAllChoices[i])) + "," + format_double(r.probabilities[i]) +
             "," + format_double(r.lambda) + "," + format_double(r.l_acc) + "," + format_double(r.l_hw) + "," +
             format_double(r.l_total) + "\n";
    }
  }
  return out;
}

std::vector<TraceRow> parse_trace_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::uint64_t row = 0;
  std::vector<TraceRow> out;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (row == 1) {
      if (line != kHeader) throw FormatError("trace: unexpected header", row);
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 9) throw FormatError("trace: expected 9 fields, found " + std::to_string(f.size()), row);
    if (!quant::parse_choice(f[3])) throw FormatError("trace: unknown choice '" + f[3] + "'", row);
    try {
      out.push_back({static_cast<std::size_t>(detail::parse_u64("epoch", f[0])), f[1], f[2], f[3],
                     detail::parse_double("probability", f[4]), detail::parse_double("lambda", f[5]),
                     detail::parse_double("L_acc", f[6]), detail::parse_double("L_hw", f[7]),
                     detail::parse_double("L_total", f[8])});
    } catch (const ConfigError& e) {
      throw FormatError(std::string("trace: ") + e.what(), row);
    }
  }
  if (row == 0) throw FormatError("trace: empty file", 0);
  return out;
}

}  // namespace shq::cli
