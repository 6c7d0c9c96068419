#include <gtest/gtest.h>

#include <fstream>

#include "phishkey/bundle.hpp"
#include "phishkey/harness.hpp"
#include "support/fixtures.hpp"

using namespace phishkey;

namespace {

const PhishKeyModel& trained() {
  static const PhishKeyModel model = [] {
    const Corpus c = fixtures::small_corpus(160, 5);
    const SplitCorpora s = materialize(c, make_splits(c, 1));
    return train_phishkey(s.train, s.validation, fixtures::small_config(3));
  }();
  return model;
}

BundleError::Kind decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_model_bundle(bytes);
  } catch (const BundleError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "bundle decoded";
  return BundleError::Kind::Malformed;
}

}  // namespace

TEST(Bundle, RoundTripPredictsIdentically) {
  fixtures::TempDir dir("bundle");
  save_model_bundle(trained(), dir / "m.pkb");
  const PhishKeyModel back = load_model_bundle(dir / "m.pkb");
  const PhishKeyClassifier a(trained()), b(back);
  const Corpus probe = fixtures::small_corpus(40, 99);
  for (const Sample& s : probe.samples()) {
    const Prediction pa = a.predict(s), pb = b.predict(s);
    EXPECT_EQ(pa.p_url, pb.p_url);
    EXPECT_EQ(pa.p_html, pb.p_html);
    EXPECT_EQ(pa.vote.p_final, pb.vote.p_final);
  }
  EXPECT_EQ(encode_model_bundle(back), encode_model_bundle(trained()));
}

TEST(Bundle, ArchiveFraming) {
  const std::vector<BundleSection> sections = {{"a", {1, 2, 3}}, {"b", {}}};
  const auto bytes = write_archive(sections);
  const auto back = read_archive(bytes);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].name, "a");
  EXPECT_EQ(back[0].payload, sections[0].payload);
  EXPECT_TRUE(back[1].payload.empty());
}

TEST(Bundle, CorruptionIsDetected) {
  const auto good = encode_model_bundle(trained());

  auto flipped = good;
  flipped[flipped.size() / 2] ^= 0x40;
  EXPECT_EQ(decode_error(flipped), BundleError::Kind::ChecksumMismatch);

  const std::vector<std::uint8_t> truncated(good.begin(), good.begin() + good.size() / 3);
  const auto kind = decode_error(truncated);
  EXPECT_TRUE(kind == BundleError::Kind::Truncated || kind == BundleError::Kind::ChecksumMismatch);

  auto magic = good;
  magic[0] ^= 0xFF;
  EXPECT_EQ(decode_error(magic), BundleError::Kind::BadMagic);

  EXPECT_EQ(decode_error(write_archive({}, kBundleFormatVersion + 1)), BundleError::Kind::VersionMismatch);
}

TEST(Bundle, MissingSectionIsIncomplete) {
  auto sections = read_archive(encode_model_bundle(trained()));
  sections.erase(std::remove_if(sections.begin(), sections.end(),
                                [](const BundleSection& s) { return s.name == "ensemble"; }),
                 sections.end());
  try {
    decode_model_bundle(write_archive(sections));
    FAIL();
  } catch (const BundleError& e) {
    EXPECT_EQ(e.kind(), BundleError::Kind::Incomplete);
    EXPECT_NE(std::string(e.what()).find("ensemble"), std::string::npos);
  }
}

TEST(Bundle, MissingFileIsAnError) {
  EXPECT_THROW(load_model_bundle("/nonexistent/model.pkb"), Error);
}
