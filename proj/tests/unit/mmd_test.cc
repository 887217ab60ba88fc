// Copyright 2026 The amalgam Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>

#include "amalgam/error.h"
#include "amalgam/gradient_check.h"
#include "amalgam/mmd.h"
#include "amalgam/ops.h"
#include "test_util.h"

namespace amalgam {
namespace {

using testing::RandomTensor;

// Term-by-term evaluation of the biased estimator straight from its
// definition, with the kernel written out independently of the library.
double OracleKernel(const KernelSpec &spec, const double *a, const double *b, std::size_t d) {
  double dot = 0.0, dist = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    dot += a[k] * b[k];
    dist += (a[k] - b[k]) * (a[k] - b[k]);
  }
  if (spec.kind == KernelKind::kLinear) return dot;
  return std::exp(-dist / (2.0 * *spec.bandwidth_sq));
}

double OracleMmd(const Tensor &x, const Tensor &y, const KernelSpec &spec) {
  const std::size_t ct = x.rows(), cs = y.rows(), d = x.cols();
  auto X = x.values();
  auto Y = y.values();
  double txx = 0.0, txy = 0.0, tyy = 0.0;
  for (std::size_t i = 0; i < ct; ++i)
    for (std::size_t j = 0; j < ct; ++j) txx += OracleKernel(spec, &X[i * d], &X[j * d], d);
  for (std::size_t i = 0; i < ct; ++i)
    for (std::size_t j = 0; j < cs; ++j) txy += OracleKernel(spec, &X[i * d], &Y[j * d], d);
  for (std::size_t i = 0; i < cs; ++i)
    for (std::size_t j = 0; j < cs; ++j) tyy += OracleKernel(spec, &Y[i * d], &Y[j * d], d);
  const double nt = static_cast<double>(ct), ns = static_cast<double>(cs);
  return txx / (nt * nt) - 2.0 * txy / (ns * nt) + tyy / (ns * ns);
}

double Mmd(const Tensor &x, const Tensor &y, const KernelSpec &spec) {
  return MmdLoss(FeatureSet::Wrap(x), FeatureSet::Wrap(y), spec).item();
}

TEST(KernelTest, RbfSelfIsOne) {
  const std::vector<double> x{0.3, -0.4};
  EXPECT_EQ(KernelEval(KernelSpec::Rbf(0.7), x, x), 1.0);
}

TEST(KernelTest, RbfClosedForm) {
  const std::vector<double> x{0.0}, y{1.0};
  EXPECT_NEAR(KernelEval(KernelSpec::Rbf(0.5), x, y), std::exp(-1.0), 1e-15);
  EXPECT_NEAR(KernelEval(KernelSpec::Rbf(0.5), x, y), 0.367879, 1e-6);
}

TEST(KernelTest, LinearOrthogonal) {
  const std::vector<double> x{1, 0}, y{0, 1};
  EXPECT_EQ(KernelEval(KernelSpec::Linear(), x, y), 0.0);
}

TEST(KernelTest, DimensionMismatchIsContractError) {
  const std::vector<double> x{1, 0}, y{0, 1, 2};
  EXPECT_THROW(KernelEval(KernelSpec::Linear(), x, y), ContractError);
}

TEST(KernelTest, UnresolvedMedianIsContractError) {
  const std::vector<double> x{1}, y{0};
  EXPECT_THROW(KernelEval(KernelSpec::RbfMedian(), x, y), ContractError);
}

TEST(KernelTest, SpecParsing) {
  EXPECT_EQ(KernelSpec::Parse("linear").kind, KernelKind::kLinear);
  EXPECT_TRUE(KernelSpec::Parse("rbf:median").uses_median());
  EXPECT_EQ(*KernelSpec::Parse("rbf:0.25").bandwidth_sq, 0.25);
  EXPECT_EQ(KernelSpec::Rbf(0.25).ToString(), "rbf:0.25");
  EXPECT_THROW(KernelSpec::Parse("rbf:-1"), ConfigError);
  EXPECT_THROW(KernelSpec::Parse("poly"), ConfigError);
}

TEST(MedianBandwidthTest, HandEnumeration) {
  const FeatureSet sets[] = {FeatureSet::Wrap(Tensor::FromData({2, 1}, {0, 1})),
                             FeatureSet::Wrap(Tensor::FromData({1, 1}, {2}))};
  EXPECT_EQ(MedianBandwidth(sets), 1.0);
}

TEST(MedianBandwidthTest, EvenCountAveragesMiddlePair) {
  // Points 0, 1, 3, 7: squared distances 1, 9, 49, 4, 36, 16 -> middle pair 9, 16.
  const FeatureSet sets[] = {FeatureSet::Wrap(Tensor::FromData({4, 1}, {0, 1, 3, 7}))};
  EXPECT_EQ(MedianBandwidth(sets), 12.5);
}

TEST(MedianBandwidthTest, IdenticalPointsClampToFloor) {
  const FeatureSet sets[] = {FeatureSet::Wrap(Tensor::Full({3, 2}, 0.5))};
  EXPECT_EQ(MedianBandwidth(sets), kMinBandwidthSq);
  EXPECT_EQ(kMinBandwidthSq, 1e-8);
}

TEST(MedianBandwidthTest, SinglePointIsContractError) {
  const FeatureSet sets[] = {FeatureSet::Wrap(Tensor::Full({1, 2}, 0.5))};
  EXPECT_THROW(MedianBandwidth(sets), ContractError);
}

TEST(MmdLossTest, IdenticalSetsGiveZero) {
  Rng rng = MakeRng(7, "mmd-identical");
  Tensor x = RandomTensor({5, 3}, rng);
  for (const KernelSpec &spec : {KernelSpec::Rbf(0.3), KernelSpec::Linear(), KernelSpec::RbfMedian()})
    EXPECT_NEAR(Mmd(x, x, spec), 0.0, 1e-12);
}

TEST(MmdLossTest, LinearOrthogonalSingletons) {
  EXPECT_NEAR(Mmd(Tensor::FromData({1, 2}, {1, 0}), Tensor::FromData({1, 2}, {0, 1}),
                  KernelSpec::Linear()),
              2.0, 1e-15);
}

TEST(MmdLossTest, RbfSingletons) {
  const double bw = 0.8;
  Tensor x = Tensor::FromData({1, 2}, {0.1, 0.5}), y = Tensor::FromData({1, 2}, {-0.3, 0.2});
  const double dist = 0.4 * 0.4 + 0.3 * 0.3;
  EXPECT_NEAR(Mmd(x, y, KernelSpec::Rbf(bw)), 2.0 - 2.0 * std::exp(-dist / (2 * bw)), 1e-15);
}

TEST(MmdLossTest, DimensionMismatchIsContractError) {
  EXPECT_THROW(Mmd(Tensor::Zeros({2, 2}), Tensor::Zeros({2, 3}), KernelSpec::Linear()),
               ContractError);
}

TEST(MmdLossTest, MatchesTripleLoopOracle) {
  Rng rng = MakeRng(11, "mmd-oracle");
  std::uniform_int_distribution<std::size_t> size(1, 4), dim(1, 3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = dim(rng);
    Tensor x = RandomTensor({size(rng), d}, rng);
    Tensor y = RandomTensor({size(rng), d}, rng);
    for (const KernelSpec &spec : {KernelSpec::Rbf(0.37), KernelSpec::Linear()})
      EXPECT_NEAR(Mmd(x, y, spec), OracleMmd(x, y, spec), 1e-12) << "trial " << trial;
    // The median resolves over the pair; the oracle takes the resolved value.
    const FeatureSet pair[] = {FeatureSet::Wrap(x), FeatureSet::Wrap(y)};
    if (x.rows() + y.rows() >= 2) {
      const KernelSpec resolved = ResolveKernel(KernelSpec::RbfMedian(), pair);
      EXPECT_NEAR(Mmd(x, y, KernelSpec::RbfMedian()), OracleMmd(x, y, resolved), 1e-12);
    }
  }
}

TEST(MmdLossTest, NonNegativeOverRandomTrials) {
  Rng rng = MakeRng(3, "mmd-nonneg");
  std::uniform_int_distribution<std::size_t> size(1, 8), dim(1, 6);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = dim(rng);
    FeatureSet x = FeatureSet::Normalized(RandomTensor({size(rng), d}, rng));
    FeatureSet y = FeatureSet::Normalized(RandomTensor({size(rng), d}, rng));
    for (const KernelSpec &spec : {KernelSpec::RbfMedian(), KernelSpec::Linear()})
      EXPECT_GE(MmdLoss(x, y, spec).item(), -1e-10);
  }
}

TEST(MmdLossTest, SymmetricUnderRoleSwap) {
  Rng rng = MakeRng(5, "mmd-sym");
  for (int trial = 0; trial < 50; ++trial) {
    FeatureSet x = FeatureSet::Normalized(RandomTensor({6, 4}, rng));
    FeatureSet y = FeatureSet::Normalized(RandomTensor({6, 4}, rng));
    EXPECT_EQ(MmdLoss(x, y, KernelSpec::RbfMedian()).item(),
              MmdLoss(y, x, KernelSpec::RbfMedian()).item());
    FeatureSet z = FeatureSet::Normalized(RandomTensor({3, 4}, rng));
    EXPECT_NEAR(MmdLoss(x, z, KernelSpec::Rbf(0.5)).item(),
                MmdLoss(z, x, KernelSpec::Rbf(0.5)).item(), 1e-12);
  }
}

TEST(MmdLossTest, GradientWrtStudentFeatures) {
  Rng rng = MakeRng(13, "mmd-grad");
  for (int trial = 0; trial < 10; ++trial) {
    Tensor teacher = RandomTensor({5, 4}, rng);
    Tensor student = RandomTensor({5, 4}, rng, true);
    // Fixed bandwidth: the median is a function of the inputs and would
    // move under the finite-difference stencil.
    const KernelSpec spec = KernelSpec::Rbf(0.6);
    auto r = FiniteDiffCheck(
        [&](const Tensor &s) {
          return MmdLoss(FeatureSet::Normalized(teacher), FeatureSet::Normalized(s), spec);
        },
        student, 1e-6);
    EXPECT_LT(r.max_relative_error, 1e-5) << "trial " << trial;
    auto lin = FiniteDiffCheck(
        [&](const Tensor &s) {
          return MmdLoss(FeatureSet::Wrap(teacher), FeatureSet::Wrap(s), KernelSpec::Linear());
        },
        student, 1e-6);
    EXPECT_LT(lin.max_relative_error, 1e-5) << "trial " << trial;
  }
}

TEST(MmdLossTest, GradientFlowsToTeacherSideWhenRequired) {
  Rng rng = MakeRng(17, "mmd-grad-teacher");
  Tensor teacher = RandomTensor({4, 3}, rng, true);
  Tensor student = RandomTensor({3, 3}, rng);
  auto r = FiniteDiffCheck(
      [&](const Tensor &t) {
        return MmdLoss(FeatureSet::Wrap(t), FeatureSet::Wrap(student), KernelSpec::Rbf(0.4));
      },
      teacher, 1e-6);
  EXPECT_LT(r.max_relative_error, 1e-6);
}

TEST(MmdLossTest, BandwidthIsConstantInBackward) {
  // With the median resolved inside the loss, the analytic gradient equals
  // the gradient of the loss at that bandwidth held fixed.
  Rng rng = MakeRng(19, "mmd-const-bw");
  Tensor teacher = RandomTensor({4, 3}, rng);
  Tensor s1 = RandomTensor({4, 3}, rng, true);
  Tensor s2 = s1.Clone(true);
  MmdLoss(FeatureSet::Wrap(teacher), FeatureSet::Wrap(s1), KernelSpec::RbfMedian()).Backward();
  const FeatureSet pair[] = {FeatureSet::Wrap(teacher), FeatureSet::Wrap(s2)};
  const KernelSpec fixed = ResolveKernel(KernelSpec::RbfMedian(), pair);
  MmdLoss(FeatureSet::Wrap(teacher), FeatureSet::Wrap(s2), fixed).Backward();
  EXPECT_EQ(s1.grad(), s2.grad());
}

TEST(AggregateMmdTest, SingleTeacherEqualsMmdLoss) {
  Rng rng = MakeRng(23, "agg-one");
  FeatureSet t = FeatureSet::Normalized(RandomTensor({5, 3}, rng));
  FeatureSet s = FeatureSet::Normalized(RandomTensor({5, 3}, rng));
  const FeatureSet teachers[] = {t};
  EXPECT_EQ(AggregateMmd(teachers, s, KernelSpec::Rbf(0.5)).item(),
            MmdLoss(t, s, KernelSpec::Rbf(0.5)).item());
}

TEST(AggregateMmdTest, TwoTeachersSumPairwiseTerms) {
  Rng rng = MakeRng(29, "agg-two");
  FeatureSet t1 = FeatureSet::Normalized(RandomTensor({5, 3}, rng));
  FeatureSet t2 = FeatureSet::Normalized(RandomTensor({5, 3}, rng));
  FeatureSet s = FeatureSet::Normalized(RandomTensor({5, 3}, rng));
  const FeatureSet teachers[] = {t1, t2};
  const KernelSpec spec = KernelSpec::Rbf(0.5);
  const double a = MmdLoss(t1, s, spec).item(), b = MmdLoss(t2, s, spec).item();
  EXPECT_NEAR(AggregateMmd(teachers, s, spec).item(), a + b, 1e-15);

  // Median mode: one bandwidth over every pooled set.
  const FeatureSet pooled[] = {t1, t2, s};
  const KernelSpec resolved = ResolveKernel(KernelSpec::RbfMedian(), pooled);
  EXPECT_NEAR(AggregateMmd(teachers, s, KernelSpec::RbfMedian()).item(),
              MmdLoss(t1, s, resolved).item() + MmdLoss(t2, s, resolved).item(), 1e-15);
}

TEST(AggregateMmdTest, StudentEqualToEveryTeacherGivesZero) {
  Rng rng = MakeRng(31, "agg-zero");
  FeatureSet t = FeatureSet::Normalized(RandomTensor({4, 3}, rng));
  const FeatureSet teachers[] = {t, t, t};
  EXPECT_NEAR(AggregateMmd(teachers, t, KernelSpec::RbfMedian()).item(), 0.0, 1e-12);
}

TEST(AggregateMmdTest, EmptyTeacherListIsContractError) {
  FeatureSet s = FeatureSet::Wrap(Tensor::Zeros({2, 2}));
  EXPECT_THROW(AggregateMmd({}, s, KernelSpec::Linear()), ContractError);
}

}  // namespace
}  // namespace amalgam
