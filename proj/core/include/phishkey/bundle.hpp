#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "phishkey/error.hpp"
#include "phishkey/pipeline.hpp"

namespace phishkey {

/// Current model bundle format version. See docs/bundle_format.md.
inline constexpr std::uint32_t kBundleFormatVersion = 1;

class BundleError : public ModelError {
 public:
  enum class Kind { BadMagic, VersionMismatch, Truncated, ChecksumMismatch, Incomplete, Malformed };

  BundleError(Kind kind, const std::string& what) : ModelError(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Named binary section of a bundle archive.
struct BundleSection {
  std::string name;
  std::vector<std::uint8_t> payload;
};

/// Low-level archive framing: magic, version, sections, CRC-32 trailer.
std::vector<std::uint8_t> write_archive(const std::vector<BundleSection>& sections,
                                        std::uint32_t version = kBundleFormatVersion);
std::vector<BundleSection> read_archive(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> encode_model_bundle(const PhishKeyModel& model);
PhishKeyModel decode_model_bundle(const std::vector<std::uint8_t>& bytes);

void save_model_bundle(const PhishKeyModel& model, const std::filesystem::path& path);
PhishKeyModel load_model_bundle(const std::filesystem::path& path);

}  // namespace phishkey
