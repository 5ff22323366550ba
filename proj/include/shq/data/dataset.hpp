#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shq/data/events.hpp"
#include "shq/diff/tensor.hpp"

namespace shq::data {

struct SyntheticSpec {
  std::size_t classes = 4;
  std::size_t per_class = 100;
  std::size_t steps = 4;
  std::size_t height = 32;
  std::size_t width = 32;
  double noise = 0.02;  // per-pixel, per-channel, per-step event probability
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SyntheticSpec&) const = default;
};

struct Sample {
  Tensor frames;  // [steps, 2, H, W], values in {0, 1}
  std::uint32_t label;
};

struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> search;  // held out for selection-logit updates
  std::vector<std::size_t> test;
};

struct Dataset {
  SyntheticSpec spec;
  std::vector<Sample> samples;
  Splits splits;
};

// Events of one moving bar: class k drifts a bar at angle k*pi/K across the
// field; ON events at the leading edge, OFF at the trailing edge, plus
// uniform noise events.
std::vector<Event> synthetic_events(const SyntheticSpec& spec, std::uint32_t label, std::size_t index);

// Samples are ordered class by class; splits are stratified.
Dataset generate_synthetic(const SyntheticSpec& spec);

// Per class: round(64%) train, round(16%) search, remainder test, assigned
// after a seeded shuffle.
Splits stratified_split(std::span<const std::uint32_t> labels, std::size_t classes, std::uint64_t seed);

// Directory layout: manifest.txt (key=value) plus one tensor file per sample.
void save_dataset(const std::string& dir, const Dataset& ds);
Dataset load_dataset(const std::string& dir);

}  // namespace shq::data
