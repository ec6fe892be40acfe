// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cldistill/box.h"
#include "cldistill/continual.h"
#include "cldistill/model.h"

namespace cldistill {

/// Per-class generator anchor: image-feature mean, canonical box, and a fixed
/// question template.
struct ClassPrototype {
  std::vector<double> image_mean;
  Box box;
  std::vector<int> question;
};

struct PeriodSpec {
  std::string name;
  std::vector<int> class_ids;  // sorted on load
  std::size_t train_count = 0;
  std::size_t test_count = 0;
  std::size_t epochs = 1;
  double lr = 1e-3;
};

struct NoiseSpec {
  double feature_sigma = 0.1;
  double box_jitter = 0.02;
};

/// Declarative description of a continual sequence. Prototypes are either
/// given explicitly or derived from the scenario seed when auto_prototypes
/// is set.
struct ScenarioSpec {
  std::string name;
  std::uint64_t seed = 1;
  ModelConfig model;
  NoiseSpec noise;
  double domain_shift = 0.0;
  std::vector<ClassInfo> classes;
  std::map<int, ClassPrototype> prototypes;
  std::vector<PeriodSpec> periods;

  ClassRegistry registry() const;
  /// Canonical JSON rendering (stable field order) used for hashing.
  std::string canonical_json() const;
  std::string hash() const;
};

struct SyntheticSample {
  std::vector<double> image_feat;
  std::vector<int> question;
  int answer = 0;
  Box box;
};

struct Dataset {
  std::string name;
  int period = 0;
  std::vector<SyntheticSample> samples;

  void to_csv(const std::filesystem::path& path) const;
};

/// Loads a scenario from a JSON file, or one of the builtins "tiny" and
/// "paper-mirror". Unknown JSON keys and missing prototypes are errors.
ScenarioSpec load_scenario(const std::string& path_or_builtin);

/// Parses scenario JSON text (same validation as load_scenario).
ScenarioSpec parse_scenario_json(const std::string& text);

/// Deterministically generates the train/test split of period t. Train and
/// test draw from disjoint seeded streams.
std::pair<Dataset, Dataset> generate_period(const ScenarioSpec& spec, int t);

}  // namespace cldistill
