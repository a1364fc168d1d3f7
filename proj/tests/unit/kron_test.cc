// Copyright 2026 The otbss Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Core>
#include <gtest/gtest.h>

#include "otbss/error.h"
#include "otbss/kron.h"
#include "otbss/sinkhorn.h"

namespace otbss {
namespace {

Eigen::VectorXd RandomPositive(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 2.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

double RelErr(const Eigen::VectorXd& x, const Eigen::VectorXd& ref) {
  return (x - ref).norm() / ref.norm();
}

// Row-major digits, most significant first.
std::vector<int> Digits(int flat, const std::vector<int>& dims) {
  std::vector<int> d(dims.size());
  for (int q = static_cast<int>(dims.size()) - 1; q >= 0; --q) {
    d[q] = flat % dims[q];
    flat /= dims[q];
  }
  return d;
}

// e^{-1} prod_q exp(-mu C_q(i_q, j_q)), entry by entry.
Eigen::MatrixXd DenseKroneckerKernel(const KroneckerCost& cost, double mu) {
  const int F = cost.dims.total();
  Eigen::MatrixXd k(F, F);
  for (int i = 0; i < F; ++i) {
    const auto di = Digits(i, cost.dims.dims);
    for (int j = 0; j < F; ++j) {
      const auto dj = Digits(j, cost.dims.dims);
      double prod = std::exp(-1.0);
      for (int q = 0; q < cost.dims.order(); ++q) {
        prod *= std::exp(-mu * cost.factors[q](di[q], dj[q]));
      }
      k(i, j) = prod;
    }
  }
  return k;
}

TEST(FactorizeBinsTest, Examples) {
  EXPECT_EQ(FactorizeBins(513, 2).dims, (std::vector<int>{27, 19}));
  EXPECT_EQ(FactorizeBins(12, 1).dims, (std::vector<int>{12}));
  EXPECT_EQ(FactorizeBins(4096, 2).dims, (std::vector<int>{64, 64}));
  EXPECT_THROW(FactorizeBins(13, 2), FactorizationUnavailableError);
  EXPECT_THROW(FactorizeBins(0, 1), ValidationError);
  for (int F : {12, 16, 36, 64, 129, 257 * 2, 1000}) {
    for (int Q = 1; Q <= 3; ++Q) {
      try {
        const BinFactorization b = FactorizeBins(F, Q);
        EXPECT_EQ(b.total(), F);
        EXPECT_EQ(b.order(), Q);
        if (Q >= 2) {
          for (int f : b.dims) EXPECT_GE(f, 2);
        }
      } catch (const FactorizationUnavailableError&) {
        EXPECT_GE(Q, 2);
      }
    }
  }
}

TEST(BinFactorizationTest, Strides) {
  const BinFactorization b{{2, 3, 5}};
  EXPECT_EQ(b.total(), 30);
  EXPECT_EQ(b.stride(0), 15);
  EXPECT_EQ(b.stride(1), 5);
  EXPECT_EQ(b.stride(2), 1);
  EXPECT_THROW((BinFactorization{{3, 1}}).Validate(), ValidationError);
}

TEST(KronSumCostTest, OrderOneIsSquaredCost) {
  const KroneckerCost c = KronSumCost(BinFactorization{{10}});
  ASSERT_EQ(c.factors.size(), 1u);
  EXPECT_TRUE(c.factors[0] == BuildCostSq(10).C);
  EXPECT_TRUE(MaterializeKronSum(c).C == BuildCostSq(10).C);
}

TEST(KronSumCostTest, HandEvaluation) {
  const KroneckerCost c = KronSumCost(BinFactorization{{2, 2}});
  const CostMatrix m = MaterializeKronSum(c);
  EXPECT_DOUBLE_EQ(m.C(0, 3), 0.3125);
  EXPECT_DOUBLE_EQ(m.C(0, 3), (1.0 * 2 / 4) * (1.0 * 2 / 4) + (1.0 / 4) * (1.0 / 4));
}

TEST(KronSumCostTest, SeparableSurrogate) {
  for (const std::vector<int>& dims :
       {std::vector<int>{3, 4}, std::vector<int>{4, 4}, std::vector<int>{2, 3, 4}}) {
    const BinFactorization b{dims};
    const CostMatrix m = MaterializeKronSum(KronSumCost(b));
    const int F = b.total();
    EXPECT_NO_THROW(m.Validate());
    for (int i = 0; i < F; ++i) {
      const auto di = Digits(i, dims);
      for (int j = 0; j < F; ++j) {
        const auto dj = Digits(j, dims);
        double expected = 0.0;
        for (std::size_t q = 0; q < dims.size(); ++q) {
          const double d = (di[q] - dj[q]) * static_cast<double>(b.stride(static_cast<int>(q))) / F;
          expected += d * d;
        }
        ASSERT_NEAR(m.C(i, j), expected, 1e-15);
      }
    }
  }
}

TEST(MaterializeTest, SingleSummand) {
  // B = 0 leaves A on the leading digit for every pair of trailing digits.
  Eigen::MatrixXd A(2, 2);
  A << 0.0, 0.7, 0.7, 0.0;
  KroneckerCost c;
  c.dims = BinFactorization{{2, 3}};
  c.factors = {A, Eigen::MatrixXd::Zero(3, 3)};
  const CostMatrix m = MaterializeKronSum(c);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) EXPECT_EQ(m.C(i, j), A(i / 3, j / 3));
}

TEST(MaterializeTest, HandAssembly) {
  Eigen::MatrixXd A(2, 2), B(3, 3);
  A << 0.0, 0.4, 0.4, 0.0;
  B << 0.0, 0.1, 0.9, 0.1, 0.0, 0.2, 0.9, 0.2, 0.0;
  KroneckerCost c;
  c.dims = BinFactorization{{2, 3}};
  c.factors = {A, B};
  Eigen::MatrixXd hand(6, 6);
  // Rows/cols ordered (0,0) (0,1) (0,2) (1,0) (1,1) (1,2).
  hand << 0.0, 0.1, 0.9, 0.4, 0.5, 1.3,
          0.1, 0.0, 0.2, 0.5, 0.4, 0.6,
          0.9, 0.2, 0.0, 1.3, 0.6, 0.4,
          0.4, 0.5, 1.3, 0.0, 0.1, 0.9,
          0.5, 0.4, 0.6, 0.1, 0.0, 0.2,
          1.3, 0.6, 0.4, 0.9, 0.2, 0.0;
  EXPECT_LT((MaterializeKronSum(c).C - hand).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(MaterializeTest, EntrywiseExpIsKroneckerProduct) {
  const double mu = 100.0;
  const KroneckerCost c = KronSumCost(BinFactorization{{3, 4}});
  const Eigen::MatrixXd lhs = (-mu * MaterializeKronSum(c).C).array().exp().matrix();
  const Eigen::MatrixXd g1 = (-mu * c.factors[0]).array().exp().matrix();
  const Eigen::MatrixXd g2 = (-mu * c.factors[1]).array().exp().matrix();
  Eigen::MatrixXd rhs(12, 12);
  for (int i1 = 0; i1 < 3; ++i1)
    for (int j1 = 0; j1 < 3; ++j1) rhs.block(4 * i1, 4 * j1, 4, 4) = g1(i1, j1) * g2;
  EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(MaterializeTest, CapabilityLimit) {
  EXPECT_THROW(MaterializeKronSum(KronSumCost(BinFactorization{{64, 32}})), CapabilityError);
}

TEST(FoldTest, IndexMapAndBijection) {
  const BinFactorization b{{2, 3}};
  Eigen::VectorXd v(6);
  v << 0, 1, 2, 3, 4, 5;
  const FoldedTensor t = Fold(v, b);
  const std::vector<int> idx{1, 2};
  EXPECT_EQ(t.at(idx), 5.0);
  EXPECT_EQ(FlatToDigits(5, b), idx);
  EXPECT_EQ(DigitsToFlat(idx, b), 5);
  EXPECT_TRUE(Unfold(t) == v);

  std::mt19937_64 rng(1);
  const BinFactorization b3{{3, 4, 5}};
  const Eigen::VectorXd r = RandomPositive(60, rng);
  EXPECT_TRUE(Unfold(Fold(r, b3)) == r);
  for (int i = 0; i < 60; ++i) EXPECT_EQ(DigitsToFlat(FlatToDigits(i, b3), b3), i);

  const FoldedTensor ones = Fold(Eigen::VectorXd::Ones(60), b3);
  for (double x : ones.data) EXPECT_EQ(x, 1.0);

  EXPECT_THROW(Fold(Eigen::VectorXd::Ones(7), b), ValidationError);
}

TEST(ModeProductTest, NaiveAndCommuting) {
  std::mt19937_64 rng(2);
  const BinFactorization b{{3, 4}};
  const Eigen::VectorXd v = RandomPositive(12, rng);
  Eigen::MatrixXd m1(3, 3), m2(4, 4);
  for (int i = 0; i < 9; ++i) m1.data()[i] = RandomPositive(1, rng)[0];
  for (int i = 0; i < 16; ++i) m2.data()[i] = RandomPositive(1, rng)[0];

  const FoldedTensor t = Fold(v, b);
  const FoldedTensor p0 = ModeProduct(t, m1, 0);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 4; ++k) {
      double s = 0.0;
      for (int j = 0; j < 3; ++j) s += m1(i, j) * v[j * 4 + k];
      EXPECT_NEAR(p0.data[i * 4 + k], s, 1e-14);
    }

  const Eigen::VectorXd ab = Unfold(ModeProduct(ModeProduct(t, m1, 0), m2, 1));
  const Eigen::VectorXd ba = Unfold(ModeProduct(ModeProduct(t, m2, 1), m1, 0));
  EXPECT_LT((ab - ba).cwiseAbs().maxCoeff(), 1e-12 * ab.cwiseAbs().maxCoeff());
  EXPECT_THROW(ModeProduct(t, m1, 1), ValidationError);
}

TEST(FactorizedKernelTest, OrderOne) {
  std::mt19937_64 rng(3);
  const KroneckerCost c = KronSumCost(BinFactorization{{9}});
  const FactorizedKernel k(c, 100.0);
  const Eigen::VectorXd v = RandomPositive(9, rng);
  Eigen::VectorXd out;
  k.Apply(v, out);
  const Eigen::MatrixXd g = (-100.0 * BuildCostSq(9).C).array().exp().matrix() * std::exp(-1.0);
  EXPECT_LT(RelErr(out, g * v), 1e-14);
}

TEST(FactorizedKernelTest, MatchesDenseKroneckerProduct) {
  std::mt19937_64 rng(4);
  for (const std::vector<int>& dims :
       {std::vector<int>{3, 4}, std::vector<int>{4, 4}, std::vector<int>{6, 6},
        std::vector<int>{2, 3, 2}, std::vector<int>{8, 8}}) {
    const KroneckerCost c = KronSumCost(BinFactorization{dims});
    const FactorizedKernel k(c, 100.0);
    const Eigen::MatrixXd dense = DenseKroneckerKernel(c, 100.0);
    EXPECT_LT((k.Dense() - dense).cwiseAbs().maxCoeff(), 1e-14);
    const Eigen::VectorXd v = RandomPositive(c.dims.total(), rng);
    Eigen::VectorXd out;
    k.Apply(v, out);
    EXPECT_LT(RelErr(out, dense * v), 1e-12);
    k.ApplyTranspose(v, out);
    EXPECT_LT(RelErr(out, dense.transpose() * v), 1e-12);

    // Same kernel as the dense Gibbs kernel of the materialized cost.
    const GibbsKernel g(MaterializeKronSum(c), 100.0);
    EXPECT_LT((g.matrix() - dense).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(FactorizedKernelTest, ZeroVector) {
  const FactorizedKernel k(KronSumCost(BinFactorization{{3, 4}}), 100.0);
  Eigen::VectorXd out;
  k.Apply(Eigen::VectorXd::Zero(12), out);
  EXPECT_EQ(out.cwiseAbs().maxCoeff(), 0.0);
}

TEST(FactorizedKernelTest, LogApply) {
  std::mt19937_64 rng(5);
  const KroneckerCost c = KronSumCost(BinFactorization{{6, 4}});
  const FactorizedKernel k(c, 100.0);
  const Eigen::MatrixXd dense = DenseKroneckerKernel(c, 100.0);
  const Eigen::VectorXd v = RandomPositive(24, rng);
  const Eigen::VectorXd lv = (v.array().log() + 800.0).matrix();
  Eigen::VectorXd out;
  k.LogApply(lv, out);
  EXPECT_LT(RelErr(out, ((dense * v).array().log() + 800.0).matrix()), 1e-15);
  k.LogApplyTranspose(lv, out);
  EXPECT_LT(RelErr(out, ((dense.transpose() * v).array().log() + 800.0).matrix()), 1e-15);
}

TEST(FactorizedKernelTest, OperationCount) {
  FactorizedKernel k(KronSumCost(BinFactorization{{27, 19}}), 100.0);
  EXPECT_EQ(k.MultiplyAddsPerApply(), 513LL * (27 + 19));
  k.ResetCounter();
  Eigen::VectorXd out;
  k.Apply(Eigen::VectorXd::Ones(513), out);
  EXPECT_EQ(k.multiply_adds(), 513LL * (27 + 19));
  k.ApplyTranspose(Eigen::VectorXd::Ones(513), out);
  EXPECT_EQ(k.multiply_adds(), 2 * 513LL * (27 + 19));
}

TEST(KronMarginalTest, MatchesDensePlan) {
  std::mt19937_64 rng(6);
  for (int F : {12, 16, 36, 64}) {
    const KroneckerCost c = KronSumCost(FactorizeBins(F, 2));
    const FactorizedKernel k(c, 100.0);
    const Eigen::VectorXd u = RandomPositive(F, rng), v = RandomPositive(F, rng);
    const Eigen::MatrixXd plan =
        u.asDiagonal() * DenseKroneckerKernel(c, 100.0) * v.asDiagonal();
    EXPECT_LT(RelErr(KronRowMarginal(u, k, v), plan.rowwise().sum()), 1e-12) << F;
    EXPECT_LT(RelErr(KronColMarginal(u, k, v), plan.colwise().sum().transpose()), 1e-12) << F;
  }
}

TEST(KronMarginalTest, UnitScalings) {
  const KroneckerCost c = KronSumCost(BinFactorization{{3, 4}});
  const FactorizedKernel k(c, 100.0);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(12);
  const Eigen::VectorXd expected = DenseKroneckerKernel(c, 100.0) * ones;
  EXPECT_LT(RelErr(KronRowMarginal(ones, k, ones), expected), 1e-14);
}

TEST(KronSinkhornTest, MatchesDenseSolve) {
  std::mt19937_64 rng(7);
  const KroneckerCost c = KronSumCost(BinFactorization{{4, 3}});
  const SinkhornParams p;
  const FactorizedKernel k(c, p.mu);
  const GibbsKernel g(MaterializeKronSum(c), p.mu);
  const Eigen::VectorXd a = RandomPositive(12, rng), b = RandomPositive(12, rng);
  const Scalings sk = SinkhornScalings(a, b, k, p);
  const Scalings sd = SinkhornScalings(a, b, g, p);
  Eigen::VectorXd rk, ck, rd, cd;
  TransportMarginals(sk, k, rk, ck);
  TransportMarginals(sd, g, rd, cd);
  EXPECT_LT(RelErr(rk, rd), 1e-12);
  EXPECT_LT(RelErr(ck, cd), 1e-12);
}

}  // namespace
}  // namespace otbss
