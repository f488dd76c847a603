#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "assembly/error.hpp"
#include "assembly/manifest.hpp"

using namespace assembly;

TEST(Manifest, ParsesJsonl) {
  const auto m = parse_manifest(
      R"({"sequence_id":"a","items":[{"caption":"one","uri":"u1"},{"caption":"two"}]}
{"sequence_id":"b","items":[{"caption":"x"},{"caption":"y"},{"caption":"z"}]}
)");
  ASSERT_EQ(m.sequences.size(), 2u);
  EXPECT_EQ(m.sequences[0].sequence_id, "a");
  EXPECT_EQ(m.sequences[0].items[0].uri, "u1");
  EXPECT_FALSE(m.sequences[0].items[1].uri.has_value());
  EXPECT_EQ(m.sequences[1].items.size(), 3u);
  EXPECT_EQ(m.rejected, 0u);
}

TEST(Manifest, ParsesWholeDocumentForms) {
  const auto arr = parse_manifest(R"([{"sequence_id":"a","items":[{"caption":"p"},{"caption":"q"}]}])");
  EXPECT_EQ(arr.sequences.size(), 1u);
  const auto wrapped = parse_manifest(R"({"sequences":[{"sequence_id":"a","items":[{"caption":"p"},{"caption":"q"}]}]})");
  EXPECT_EQ(wrapped.sequences.size(), 1u);
}

TEST(Manifest, RejectsShortOrUncaptionedSequences) {
  const auto m = parse_manifest(
      R"({"sequence_id":"a","items":[{"caption":"only"}]}
{"sequence_id":"b","items":[{"caption":""},{"caption":"y"}]}
{"sequence_id":"c","items":[{"caption":"x"},{"caption":"y"}]}
)");
  EXPECT_EQ(m.sequences.size(), 1u);
  EXPECT_EQ(m.rejected, 2u);
}

TEST(Manifest, MalformedLineNamesLine) {
  try {
    parse_manifest("{\"sequence_id\":\"a\",\"items\":[{\"caption\":\"x\"},{\"caption\":\"y\"}]}\n{oops\n");
    FAIL() << "expected a parse error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Parse);
    EXPECT_EQ(e.line, 2u);
  }
  EXPECT_THROW(ingest_manifest("/nonexistent/manifest.jsonl"), Error);
}

TEST(Manifest, SyntheticIsDeterministicAndShaped) {
  const auto a = synthetic_manifest();
  const auto b = synthetic_manifest();
  ASSERT_EQ(a.sequences.size(), 160u);
  for (std::size_t i = 0; i < a.sequences.size(); ++i) {
    ASSERT_EQ(a.sequences[i].items.size(), 24u);
    EXPECT_EQ(a.sequences[i].sequence_id, b.sequences[i].sequence_id);
    for (std::size_t j = 0; j < 24; ++j) EXPECT_EQ(a.sequences[i].items[j].caption, b.sequences[i].items[j].caption);
  }
  SyntheticManifestOptions other;
  other.seed = 1;
  EXPECT_NE(synthetic_manifest(other).sequences[0].items[0].caption + synthetic_manifest(other).sequences[0].items[1].caption,
            a.sequences[0].items[0].caption + a.sequences[0].items[1].caption);
}

// The shipped manifest file is exactly the default synthetic manifest.
TEST(Manifest, BundledFileMatchesGenerator) {
  std::ostringstream want;
  write_manifest_jsonl(synthetic_manifest(), want);
  std::ifstream in(bundled_manifest_path(), std::ios::binary);
  ASSERT_TRUE(in) << bundled_manifest_path();
  std::ostringstream have;
  have << in.rdbuf();
  EXPECT_EQ(have.str(), want.str());
}

TEST(Manifest, WriteThenParseRoundTrips) {
  const auto m = synthetic_manifest({4, 6, 9});
  std::ostringstream out;
  write_manifest_jsonl(m, out);
  const auto back = parse_manifest(out.str());
  ASSERT_EQ(back.sequences.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(back.sequences[i].sequence_id, m.sequences[i].sequence_id);
    ASSERT_EQ(back.sequences[i].items.size(), 6u);
    for (std::size_t j = 0; j < 6; ++j) {
      EXPECT_EQ(back.sequences[i].items[j].caption, m.sequences[i].items[j].caption);
      EXPECT_EQ(back.sequences[i].items[j].uri, m.sequences[i].items[j].uri);
    }
  }
}
