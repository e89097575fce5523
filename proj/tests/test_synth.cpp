#include <gtest/gtest.h>

#include "refinekit/error.hpp"
#include "refinekit/io_util.hpp"
#include "refinekit/metrics.hpp"
#include "refinekit/synth.hpp"
#include "support.hpp"

using namespace refinekit;

namespace {

double unit_gap(const SynthSplit& s) {
  Matrix a = s.images.to_matrix(), t = s.texts.to_matrix();
  return modality_gap(a, t);
}

}  // namespace

TEST(Synth, ShapesAndSplit) {
  SynthConfig cfg;
  cfg.n = 50;
  cfg.dim = 6;
  const SynthData d = generate_synthetic(cfg);
  EXPECT_EQ(d.train.images.count(), 40u);
  EXPECT_EQ(d.test.texts.count(), 10u);
  EXPECT_EQ(d.train.images.dim(), 6u);
  EXPECT_EQ(d.train.manifest.entries.size(), 40u);
  EXPECT_FALSE(d.prompts.has_value());
  EXPECT_EQ(d.test.images.ids()[0], "img_000040");
  const PairedDataset p = make_pairs(d.train.images, d.train.texts, d.train.manifest);
  EXPECT_EQ(p.texts, d.train.texts);
}

TEST(Synth, NoGapNoNoiseGivesIdenticalViews) {
  SynthConfig cfg;
  cfg.n = 40;
  cfg.dim = 5;
  cfg.gap = 0.0;
  cfg.noise = 0.0;
  const SynthData d = generate_synthetic(cfg);
  EXPECT_LE(unit_gap(d.train), 1e-12);
  EXPECT_LE(unit_gap(d.test), 1e-12);
}

TEST(Synth, GapGrowsWithParameter) {
  double prev = -1.0;
  for (double gap : {0.1, 0.3, 0.5}) {
    SynthConfig cfg;
    cfg.n = 400;
    cfg.dim = 16;
    cfg.gap = gap;
    const double g = unit_gap(generate_synthetic(cfg).train);
    EXPECT_GT(g, prev);
    prev = g;
  }
}

TEST(Synth, FilesAreStableAcrossRuns) {
  testsupport::TempDir dir("synth");
  SynthConfig cfg;
  cfg.n = 30;
  cfg.dim = 4;
  cfg.classes = 3;
  cfg.seed = 9;
  const SynthFiles a = write_synthetic(generate_synthetic(cfg), (dir / "a_").string());
  const SynthFiles b = write_synthetic(generate_synthetic(cfg), (dir / "b_").string());
  for (auto member : {&SynthFiles::train_images, &SynthFiles::train_texts, &SynthFiles::train_manifest,
                      &SynthFiles::test_images, &SynthFiles::test_texts, &SynthFiles::test_manifest,
                      &SynthFiles::prompts, &SynthFiles::train_labels, &SynthFiles::test_labels}) {
    EXPECT_TRUE(testsupport::files_equal(a.*member, b.*member)) << (a.*member);
  }
  cfg.seed = 10;
  const SynthFiles c = write_synthetic(generate_synthetic(cfg), (dir / "c_").string());
  EXPECT_FALSE(testsupport::files_equal(a.train_images, c.train_images));
}

TEST(Synth, LabelsRoundTrip) {
  testsupport::TempDir dir("labels");
  SynthConfig cfg;
  cfg.n = 60;
  cfg.dim = 8;
  cfg.classes = 4;
  const SynthData d = generate_synthetic(cfg);
  ASSERT_TRUE(d.prompts.has_value());
  EXPECT_EQ(d.prompts->labels().size(), 4u);
  const SynthFiles f = write_synthetic(d, (dir / "s_").string());
  const ClassPromptTable prompts = load_prompts(f.prompts);
  EXPECT_EQ(load_labels(f.test_labels, d.test.images, prompts), d.test.labels);
  EXPECT_THROW(load_labels(f.test_labels, d.train.images, prompts), Error);
}

TEST(Synth, RejectsBadConfig) {
  SynthConfig cfg;
  cfg.n = 2;
  EXPECT_THROW(generate_synthetic(cfg), Error);
  cfg = SynthConfig{};
  cfg.dim = 1;
  EXPECT_THROW(generate_synthetic(cfg), Error);
  cfg = SynthConfig{};
  cfg.train_fraction = 1.0;
  EXPECT_THROW(generate_synthetic(cfg), Error);
}
