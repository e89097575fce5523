#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <functional>
#include <numeric>
#include <set>
#include <limits>
#include <random>

#include "refinekit/embedding_store.hpp"
#include "refinekit/error.hpp"
#include "refinekit/io_util.hpp"
#include "support.hpp"

using namespace refinekit;
using testsupport::TempDir;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected refinekit::Error";
  return ErrorCode::InvalidArgument;
}

EmbeddingTable small_table() {
  return EmbeddingTable(2, {1.0f, 2.0f, 3.0f, 4.0f, -5.0f, 0.5f}, {"a", "b", "c"});
}

}  // namespace

TEST(EmbeddingTable, RejectsInvalidContents) {
  EXPECT_EQ(code_of([] { EmbeddingTable(2, {}, {}); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([] { EmbeddingTable(2, {1, 2, 3}, {"a", "b"}); }), ErrorCode::ShapeMismatch);
  EXPECT_EQ(code_of([] { EmbeddingTable(1, {1, 2}, {"a", "a"}); }), ErrorCode::DuplicateId);
  try {
    EmbeddingTable(2, {1, 2, 3, std::numeric_limits<float>::quiet_NaN()}, {"a", "b"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteValue);
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(Emb1, SmallRoundTripAndLayout) {
  const auto t = small_table();
  const auto bytes = serialize_table(t);
  ASSERT_GE(bytes.size(), kEmb1HeaderBytes + 6 * 4);
  EXPECT_EQ(std::memcmp(bytes.data(), "EMB1", 4), 0);
  EXPECT_EQ(io::get_u32(bytes.data() + 4), 1u);
  EXPECT_EQ(io::get_u64(bytes.data() + 8), 3u);
  EXPECT_EQ(io::get_u32(bytes.data() + 16), 2u);
  EXPECT_EQ(io::get_u32(bytes.data() + 20), 0u);
  const std::string trailer(bytes.begin() + kEmb1HeaderBytes + 6 * 4, bytes.end());
  EXPECT_EQ(bytes.size(), kEmb1HeaderBytes + 3 * 2 * 4 + trailer.size());
  EXPECT_NE(trailer.find("\"ids\""), std::string::npos);
  EXPECT_EQ(parse_table(bytes), t);
}

TEST(Emb1, RandomRoundTripIsBitExact) {
  std::mt19937_64 gen(7);
  TempDir dir("emb");
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + gen() % 50, d = 1 + gen() % 40;
    const auto t = testsupport::random_table(n, d, gen, "id_" + std::to_string(trial) + "_");
    save_table(t, dir / "t.emb");
    const auto back = load_table(dir / "t.emb");
    ASSERT_EQ(back.count(), n);
    ASSERT_EQ(back.dim(), d);
    ASSERT_EQ(back.ids(), t.ids());
    ASSERT_EQ(std::memcmp(back.data().data(), t.data().data(), n * d * sizeof(float)), 0);
  }
}

TEST(Emb1, ParseErrors) {
  const auto good = serialize_table(small_table());
  auto bad = good;
  bad[0] = 'X';
  EXPECT_EQ(code_of([&] { parse_table(bad); }), ErrorCode::BadMagic);

  bad = good;
  bad[4] = 2;
  EXPECT_EQ(code_of([&] { parse_table(bad); }), ErrorCode::VersionMismatch);

  bad = good;
  bad[20] = 1;
  EXPECT_EQ(code_of([&] { parse_table(bad); }), ErrorCode::BadFormat);

  std::vector<std::uint8_t> cut(good.begin(), good.begin() + 30);
  try {
    parse_table(cut);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TruncatedFile);
    EXPECT_TRUE(e.index().has_value());
  }
  cut.assign(good.begin(), good.begin() + 10);
  EXPECT_EQ(code_of([&] { parse_table(cut); }), ErrorCode::TruncatedFile);
  cut.assign(good.begin(), good.begin() + kEmb1HeaderBytes + 24);
  EXPECT_EQ(code_of([&] { parse_table(cut); }), ErrorCode::TruncatedFile);

  bad = good;
  bad[kEmb1HeaderBytes] ^= 0x01;  // flip a data bit, CRC no longer matches
  EXPECT_EQ(code_of([&] { parse_table(bad); }), ErrorCode::ChecksumMismatch);

  bad = good;
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bad.data() + kEmb1HeaderBytes + 8, &nan, 4);
  EXPECT_EQ(code_of([&] { parse_table(bad); }), ErrorCode::NonFiniteValue);
}

TEST(Emb1, LoadMissingFileIsIoError) {
  EXPECT_EQ(code_of([] { load_table("/nonexistent/dir/x.emb"); }), ErrorCode::IoError);
}

TEST(Manifest, ParseAcceptsStringAndArrayCaptions) {
  const auto m = parse_manifest(R"({"pairs":[{"image":"i0","text":"t0"},
                                             {"image":"i1","text":["t1","t2"]},
                                             {"image":"i0","text":"t3"}]})");
  ASSERT_EQ(m.entries.size(), 2u);
  EXPECT_EQ(m.entries[0].image, "i0");
  EXPECT_EQ(m.entries[0].texts, (std::vector<std::string>{"t0", "t3"}));
  EXPECT_EQ(m.entries[1].texts, (std::vector<std::string>{"t1", "t2"}));
  EXPECT_EQ(code_of([] { parse_manifest("{\"nope\":1}"); }), ErrorCode::BadFormat);
  EXPECT_EQ(code_of([] { parse_manifest("not json"); }), ErrorCode::BadFormat);
}

TEST(Manifest, SaveLoadRoundTrip) {
  TempDir dir("man");
  PairingManifest m;
  m.entries = {{"a", {"x"}}, {"b", {"y", "z"}}};
  save_manifest(m, dir / "m.json");
  const auto back = load_manifest(dir / "m.json");
  ASSERT_EQ(back.entries.size(), 2u);
  EXPECT_EQ(back.entries[1].texts, m.entries[1].texts);
  try {
    load_manifest(dir / "missing.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
    EXPECT_NE(std::string(e.what()).find("missing.json"), std::string::npos);
  }
}

TEST(MakePairs, IdentityOrder) {
  std::mt19937_64 gen(1);
  const auto img = testsupport::random_table(5, 3, gen, "i");
  const auto txt = testsupport::random_table(5, 3, gen, "t");
  const auto ds = make_pairs(img, txt, testsupport::identity_manifest(img, txt));
  EXPECT_EQ(ds.images, img);
  EXPECT_EQ(ds.texts, txt);
}

TEST(MakePairs, PermutedTextsAreRealigned) {
  std::mt19937_64 gen(2);
  const auto img = testsupport::random_table(6, 4, gen, "i");
  const auto txt = testsupport::random_table(6, 4, gen, "t");
  const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  const auto shuffled = txt.select(perm);
  const auto ds = make_pairs(img, shuffled, testsupport::identity_manifest(img, txt));
  EXPECT_EQ(ds.images, img);
  EXPECT_EQ(ds.texts, txt);
}

TEST(MakePairs, MissingImageIsReported) {
  std::mt19937_64 gen(3);
  const auto img = testsupport::random_table(3, 2, gen, "i");
  const auto txt = testsupport::random_table(3, 2, gen, "t");
  auto m = testsupport::identity_manifest(img, txt);
  m.entries.erase(m.entries.begin() + 1);
  try {
    make_pairs(img, txt, m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnmatchedId);
    EXPECT_NE(std::string(e.what()).find("i1"), std::string::npos);
  }
}

TEST(MakePairs, DimensionMismatch) {
  std::mt19937_64 gen(4);
  const auto img = testsupport::random_table(3, 2, gen, "i");
  const auto txt = testsupport::random_table(3, 5, gen, "t");
  EXPECT_EQ(code_of([&] { make_pairs(img, txt, testsupport::identity_manifest(img, txt)); }),
            ErrorCode::DimensionMismatch);
}

TEST(MakePairs, CaptionIndexSelectsAndClamps) {
  const EmbeddingTable img(1, {1.0f, 2.0f}, {"a", "b"});
  const EmbeddingTable txt(1, {10.0f, 11.0f, 12.0f}, {"x", "y", "z"});
  PairingManifest m;
  m.entries = {{"a", {"x", "y"}}, {"b", {"z"}}};
  EXPECT_EQ(make_pairs(img, txt, m, 0).texts.ids(), (std::vector<std::string>{"x", "z"}));
  EXPECT_EQ(make_pairs(img, txt, m, 1).texts.ids(), (std::vector<std::string>{"y", "z"}));
}

TEST(MakePairs, PairingIsABijection) {
  std::mt19937_64 gen(5);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + gen() % 30;
    const auto img = testsupport::random_table(n, 3, gen, "i");
    const auto txt = testsupport::random_table(n, 3, gen, "t");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    const auto ds = make_pairs(img, txt.select(perm), testsupport::identity_manifest(img, txt));
    std::set<std::string> seen(ds.texts.ids().begin(), ds.texts.ids().end());
    EXPECT_EQ(seen.size(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(ds.texts.ids()[i], "t" + std::to_string(i));
  }
}

TEST(Prompts, NeedTwoClasses) {
  TempDir dir("prompts");
  save_table(EmbeddingTable(2, {1, 0}, {"cat"}), dir / "p.emb");
  EXPECT_EQ(code_of([&] { load_prompts(dir / "p.emb"); }), ErrorCode::InsufficientData);
  save_table(EmbeddingTable(2, {1, 0, 0, 1}, {"cat", "dog"}), dir / "p.emb");
  EXPECT_EQ(load_prompts(dir / "p.emb").labels(), (std::vector<std::string>{"cat", "dog"}));
}
