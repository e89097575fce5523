#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "refinekit/error.hpp"
#include "refinekit/io_util.hpp"
#include "refinekit/refine_model.hpp"
#include "support.hpp"

using namespace refinekit;

namespace {

RefineHead random_head(std::size_t d, std::size_t h, std::mt19937_64& gen, double scale = 0.3) {
  RefineHead head = init_identity(d, h, gen());
  for (auto block : head.blocks()) {
    std::normal_distribution<double> nd(0.0, scale);
    for (double& x : block) x = nd(gen);
  }
  return head;
}

}  // namespace

TEST(Gelu, ExactErfForm) {
  EXPECT_EQ(gelu(0.0), 0.0);
  EXPECT_NEAR(gelu(1.0), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(gelu(-1.0), -0.15865525393145707, 1e-15);
  for (double x : {-3.0, -0.7, 0.0, 0.4, 2.5}) {
    const double fd = (gelu(x + 1e-6) - gelu(x - 1e-6)) / 2e-6;
    EXPECT_NEAR(gelu_derivative(x), fd, 1e-8);
  }
}

TEST(Forward, IdentityAtInitReproducesTeacher) {
  std::mt19937_64 gen(11);
  for (std::uint64_t seed : {0ull, 1ull, 99ull}) {
    const Matrix raw = oracle::random_matrix(25, 12, gen, 3.0);
    const Matrix z = forward(init_identity(12, 12, seed), raw);
    const Matrix teacher = oracle::unit_rows(raw);
    for (std::size_t k = 0; k < z.size(); ++k) EXPECT_NEAR(z.flat()[k], teacher.flat()[k], 1e-12);
  }
}

TEST(Forward, ZeroRowIsRejected) {
  Matrix raw(2, 3, 1.0);
  for (double& x : raw.row(1)) x = 0.0;
  try {
    forward(init_identity(3, 3, 0), raw);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroNorm);
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(Forward, OutputsAreUnitNormAndMatchOracle) {
  std::mt19937_64 gen(12);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t d = 2 + gen() % 10, h = 1 + gen() % 12;
    const RefineHead head = random_head(d, h, gen);
    const Matrix raw = oracle::random_matrix(9, d, gen, 2.0);
    const ForwardCache c = forward_cached(head, raw);
    const auto ref = oracle::head_forward(head, raw);
    for (std::size_t i = 0; i < c.out.rows(); ++i) {
      double s = 0.0;
      for (double x : c.out.row(i)) s += x * x;
      EXPECT_NEAR(std::sqrt(s), 1.0, 1e-6);
    }
    for (std::size_t k = 0; k < c.out.size(); ++k) {
      EXPECT_NEAR(c.out.flat()[k], ref.out.flat()[k], 1e-12);
      EXPECT_NEAR(c.residual.flat()[k], ref.residual.flat()[k], 1e-12);
    }
    EXPECT_EQ(forward(head, raw), c.out);
  }
}

TEST(Forward, DimensionMismatch) {
  Matrix raw(2, 4, 1.0);
  try {
    forward(init_identity(3, 3, 0), raw);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(InitIdentity, SeedDeterminismAndScale) {
  EXPECT_EQ(init_identity(8, 5, 3), init_identity(8, 5, 3));
  EXPECT_NE(init_identity(8, 5, 3).w1, init_identity(8, 5, 4).w1);
  const RefineHead h = init_identity(64, 64, 7);
  for (double x : h.b1) EXPECT_EQ(x, 0.0);
  for (double x : h.b2) EXPECT_EQ(x, 0.0);
  for (double x : h.w2.flat()) EXPECT_EQ(x, 0.0);
  double s = 0.0;
  for (double x : h.w1.flat()) s += x * x;
  const double sd = std::sqrt(s / static_cast<double>(h.w1.size()));
  EXPECT_NEAR(sd, 1.0 / 8.0, 0.01);
}

// Reverse pass against finite differences of L = Σ G⊙z + Σ R⊙r through the
// element-wise oracle forward.
TEST(Backward, MatchesFiniteDifferences) {
  std::mt19937_64 gen(13);
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t d = 2 + gen() % 6, h = 1 + gen() % 6, n = 1 + gen() % 5;
    RefineHead head = random_head(d, h, gen);
    const Matrix raw = oracle::random_matrix(n, d, gen);
    const Matrix g_out = oracle::random_matrix(n, d, gen);
    const Matrix g_res = oracle::random_matrix(n, d, gen);
    const bool with_residual = trial % 2 == 0;

    auto loss = [&](const RefineHead& hd) {
      const auto o = oracle::head_forward(hd, raw);
      double v = 0.0;
      for (std::size_t k = 0; k < o.out.size(); ++k) {
        v += g_out.flat()[k] * o.out.flat()[k];
        if (with_residual) v += g_res.flat()[k] * o.residual.flat()[k];
      }
      return v;
    };
    const RefineHead grad = backward(head, forward_cached(head, raw), g_out, with_residual ? &g_res : nullptr);
    auto params = head.blocks();
    const auto analytic = grad.blocks();
    for (std::size_t b = 0; b < params.size(); ++b) {
      for (std::size_t i = 0; i < params[b].size(); ++i) {
        const double keep = params[b][i];
        params[b][i] = keep + 1e-6;
        const double up = loss(head);
        params[b][i] = keep - 1e-6;
        const double down = loss(head);
        params[b][i] = keep;
        const double fd = (up - down) / 2e-6;
        EXPECT_LT(std::abs(fd - analytic[b][i]) / std::max({std::abs(fd), std::abs(analytic[b][i]), 1e-3}), 1e-6)
            << "block " << b << " entry " << i;
      }
    }
  }
}

TEST(Checkpoint, RoundTripIsBitExact) {
  std::mt19937_64 gen(14);
  testsupport::TempDir dir("rhd");
  const RefineHead head = random_head(7, 5, gen);
  save_head(head, dir / "h.rhd");
  EXPECT_EQ(load_head(dir / "h.rhd"), head);
  EXPECT_EQ(load_head(dir / "h.rhd", 7), head);
  EXPECT_EQ(head_checksum(head), io::sha256_hex(serialize_head(head)));
  const auto bytes = serialize_head(head);
  EXPECT_EQ(bytes.size(), 16 + 8 * head.parameter_count());
}

TEST(Checkpoint, Errors) {
  std::mt19937_64 gen(15);
  const auto good = serialize_head(random_head(3, 2, gen));
  auto code = [](const std::vector<std::uint8_t>& b, std::optional<std::size_t> dim = std::nullopt) {
    try {
      deserialize_head(b, dim);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  auto bad = good;
  bad[4] = 9;
  EXPECT_EQ(code(bad), ErrorCode::VersionMismatch);
  bad = good;
  bad[0] = 'X';
  EXPECT_EQ(code(bad), ErrorCode::BadMagic);
  EXPECT_EQ(code(good, 4), ErrorCode::DimensionMismatch);
  EXPECT_EQ(code({good.begin(), good.end() - 8}), ErrorCode::TruncatedFile);
  try {
    load_head("/nonexistent/h.rhd");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::IoError);
  }
}

TEST(TeacherBank, RowsAreUnitNorm) {
  std::mt19937_64 gen(16);
  const auto img = testsupport::random_table(20, 6, gen, "i");
  const auto txt = testsupport::random_table(20, 6, gen, "t");
  const TeacherBank bank = TeacherBank::from(PairedDataset{img, txt});
  for (const Matrix* m : {&bank.images, &bank.texts}) {
    for (std::size_t i = 0; i < m->rows(); ++i) {
      double s = 0.0;
      for (double x : m->row(i)) s += x * x;
      EXPECT_NEAR(std::sqrt(s), 1.0, 1e-6);
    }
  }
}
