#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "phishkey/pipeline.hpp"

namespace phishkey {

struct HarnessConfig {
  std::size_t folds = 5;
  std::vector<double> reduction_fractions = {1.0, 0.5, 0.25, 0.10, 0.05};
  std::size_t injection_words = 2000;
  bool crop_baseline = true;
  std::size_t crop_words = 2000;
  /// "phishkey" or "label-oracle" (harness self-check).
  std::string pipeline = "phishkey";
};

/// Every tunable of a run in one document. Component seeds are derived from
/// the single top-level seed, see pipeline_config().
struct RunConfig {
  std::optional<std::uint64_t> seed;
  PipelineConfig pipeline;
  HarnessConfig harness;

  /// Throws ConfigError when no seed was given.
  std::uint64_t require_seed() const;
  /// The pipeline settings with every component seed derived from `seed`.
  PipelineConfig pipeline_config(std::uint64_t seed) const;
};

/// Parses a JSON config layered over the defaults. Unknown keys, wrong value
/// types and out-of-range values throw ConfigError. `overrides` are
/// "section.key=value" strings applied after the document; the value is read
/// as JSON when it parses, otherwise as a plain string.
RunConfig parse_config(std::string_view json_text, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::optional<std::filesystem::path>& path,
                      const std::vector<std::string>& overrides = {});

/// Canonical JSON form (sorted keys, two-space indent).
std::string config_to_json(const RunConfig& config);

}  // namespace phishkey
