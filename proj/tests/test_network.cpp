#include <gtest/gtest.h>

#include <cmath>

#include "cutsurv/loss.hpp"
#include "cutsurv/network.hpp"
#include "gradcheck.hpp"

using namespace cutsurv;

TEST(InitParams, DeterministicShapesAndRange) {
  const auto a = init_params(2, 32, 1, 99);
  const auto b = init_params(2, 32, 1, 99);
  EXPECT_TRUE(a == b);
  EXPECT_FALSE(a == init_params(2, 32, 1, 100));
  EXPECT_EQ(a.w1.rows(), 32);
  EXPECT_EQ(a.w1.cols(), 2);
  EXPECT_EQ(a.w2.rows(), 2);
  EXPECT_EQ(a.w2.cols(), 32);
  EXPECT_EQ(a.output_dim(), 2u);
  EXPECT_LE(a.w1.cwiseAbs().maxCoeff(), std::sqrt(0.5));
  EXPECT_LE(a.w2.cwiseAbs().maxCoeff(), std::sqrt(1.0 / 32.0));
  EXPECT_TRUE(a.b1.isZero());
  EXPECT_TRUE(a.b2.isZero());
  EXPECT_THROW(init_params(0, 32, 1, 0), std::invalid_argument);
}

TEST(Forward, ZeroParametersGiveUniform) {
  auto p = init_params(3, 8, 4, 1);
  p.w1.setZero();
  p.w2.setZero();
  const std::vector<double> x{1.0, -2.0, 3.0};
  const auto probs = forward(p, x);
  for (double v : probs.values()) EXPECT_DOUBLE_EQ(v, 0.2);
}

TEST(Forward, SumsToOneAndShiftInvariant) {
  Rng rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    auto p = init_params(4, 16, 3, rng.next_u64());
    std::vector<double> x(4);
    for (auto& v : x) v = 3.0 * rng.normal();
    const auto a = forward(p, x);
    double s = 0.0;
    for (double v : a.values()) {
      EXPECT_GT(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-9);
    p.b2.array() += 7.5;
    const auto b = forward(p, x);
    for (std::size_t j = 0; j < a.size(); ++j) EXPECT_NEAR(a[j], b[j], 1e-9);
  }
}

TEST(Forward, RejectsNonFiniteInput) {
  const auto p = init_params(2, 4, 1, 1);
  const std::vector<double> x{1.0, std::nan("")};
  EXPECT_THROW(forward(p, x), DomainError);
  EXPECT_THROW(forward(p, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Forward, ExtremeLogitsStayPositive) {
  auto p = init_params(1, 1, 1, 1);
  p.w1(0, 0) = 1.0;
  p.w2(0, 0) = 500.0;
  p.w2(1, 0) = -500.0;
  const auto probs = forward(p, std::vector<double>{10.0});
  EXPECT_GT(probs[1], 0.0);
  EXPECT_TRUE(std::isfinite(std::log(probs[1])));
}

class GradientCheck : public ::testing::TestWithParam<std::size_t> {};

TEST_P(GradientCheck, MatchesFiniteDifferences) {
  const std::size_t h = GetParam();
  const int reps = h >= 512 ? 2 : 5;
  for (int rep = 0; rep < reps; ++rep) {
    const auto inst = gradcheck::random_instance(derive_seed(h, rep), h);
    for (double lambda : {0.0, 1.5}) {
      const auto r = gradcheck::check(inst, LossOptions{lambda, RegularizerForm::LogPdf, true});
      EXPECT_EQ(r.failed, 0u) << r.first_failure;
      EXPECT_GT(r.checked, 3 * h);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(HiddenSizes, GradientCheck, ::testing::Values(32u, 128u, 512u));

TEST(Backward, DuplicatedRecordDoublesContribution) {
  auto inst = gradcheck::random_instance(77, 16, 1);
  const LossOptions opt{0.0, RegularizerForm::LogPdf, false};
  const auto single = loss_and_gradient(inst.batch, inst.params, inst.cuts, inst.tau, opt);

  Batch twice = inst.batch;
  twice.x.conservativeResize(2, Eigen::NoChange);
  twice.x.row(1) = twice.x.row(0);
  twice.time.push_back(twice.time[0]);
  twice.event.push_back(twice.event[0]);
  const auto doubled = loss_and_gradient(twice, inst.params, inst.cuts, inst.tau, opt);
  // summed gradient of the pair = 2 x the single record's, to the bit
  EXPECT_TRUE(2.0 * doubled.grad.w1 == 2.0 * single.grad.w1);
  EXPECT_TRUE(2.0 * doubled.grad.b1 == 2.0 * single.grad.b1);
  EXPECT_TRUE(2.0 * doubled.grad.w2 == 2.0 * single.grad.w2);
  EXPECT_TRUE(2.0 * doubled.grad.b2 == 2.0 * single.grad.b2);
  EXPECT_EQ(doubled.nll, single.nll);
  EXPECT_EQ(doubled.grad.cuts, single.grad.cuts);

  // appending a copy to a different batch adds exactly its single-record gradient
  auto other = gradcheck::random_instance(78, 16, 3);
  other.params = inst.params;
  other.cuts = inst.cuts;
  Batch extended = other.batch;
  extended.x.conservativeResize(4, Eigen::NoChange);
  extended.x.row(3) = inst.batch.x.row(0);
  extended.time.push_back(inst.batch.time[0]);
  extended.event.push_back(inst.batch.event[0]);
  Batch plus_two = extended;
  plus_two.x.conservativeResize(5, Eigen::NoChange);
  plus_two.x.row(4) = inst.batch.x.row(0);
  plus_two.time.push_back(inst.batch.time[0]);
  plus_two.event.push_back(inst.batch.event[0]);
  const auto base = loss_and_gradient(other.batch, inst.params, inst.cuts, inst.tau, opt);
  const auto one = loss_and_gradient(extended, inst.params, inst.cuts, inst.tau, opt);
  const auto two = loss_and_gradient(plus_two, inst.params, inst.cuts, inst.tau, opt);
  const Matrix contrib_one = 4.0 * one.grad.w2 - 3.0 * base.grad.w2;
  const Matrix contrib_two = 5.0 * two.grad.w2 - 3.0 * base.grad.w2;
  EXPECT_TRUE(contrib_two.isApprox(2.0 * contrib_one, 1e-10));
  EXPECT_TRUE(contrib_one.isApprox(single.grad.w2, 1e-10));
}

TEST(Backward, OutputLayerIsProbsMinusOnehotInHardLimit) {
  // One uncensored record deep inside interval 1: -log density reduces to
  // -log p_1 + log |I_1|, whose logit gradient is probs - e_1.
  Batch b;
  b.x = Matrix::Constant(1, 2, 0.3);
  b.time = {50.0};
  b.event = {1};
  const CutPoints cuts({20, 80}, 100);
  const auto params = init_params(2, 8, 2, 5);
  const auto r = loss_and_gradient(b, params, cuts, 1e-3, LossOptions{0.0, RegularizerForm::LogPdf, false});
  const auto probs = forward(params, std::vector<double>{0.3, 0.3});
  const auto fwd = forward_batch(params, b.x);
  for (std::size_t j = 0; j < 3; ++j) {
    const double expected = probs[j] - (j == 1 ? 1.0 : 0.0);
    EXPECT_NEAR(r.grad.b2(static_cast<Eigen::Index>(j)), expected, 1e-12);
    for (Eigen::Index k = 0; k < 8; ++k) {
      EXPECT_NEAR(r.grad.w2(static_cast<Eigen::Index>(j), k), expected * fwd.hidden(0, k), 1e-12);
    }
  }
}
