#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "slicegcn/matrix.hpp"
#include "slicegcn/rng.hpp"

using namespace slicegcn;

TEST(Rng, SameSeedAndStreamRepeat) {
  Rng a(42, 3), b(42, 3), c(42, 4);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    differs |= x != c.next_u64();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, UniformIndexInRange) {
  Rng r(1, 0);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) ++hits[r.uniform_index(7)];
  for (int h : hits) EXPECT_GT(h, 800);
}

TEST(Rng, NormalMoments) {
  Rng r(5, 0);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Matmul, HandExample) {
  const auto a = Matrix<double>::from_rows({{1, 2}, {3, 4}});
  const auto b = Matrix<double>::from_rows({{5, 6}, {7, 8}});
  EXPECT_EQ(matmul(a, b), Matrix<double>::from_rows({{19, 22}, {43, 50}}));
}

TEST(Matmul, IdentityAndZero) {
  Rng rng(1, 0);
  const auto a = oracle::random_matrix(5, 4, rng);
  EXPECT_EQ(matmul(a, Matrix<double>::identity(4)), a);
  EXPECT_EQ(matmul(Matrix<double>(3, 5), a), Matrix<double>(3, 4));
}

TEST(Matmul, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(Matrix<double>(2, 3), Matrix<double>(2, 3)), ShapeError);
  EXPECT_THROW(matmul_tn(Matrix<double>(2, 3), Matrix<double>(3, 3)), ShapeError);
}

TEST(Matmul, TransposedVariantsAgreeWithNaive) {
  Rng rng(2, 0);
  for (int trial = 0; trial < 10; ++trial) {
    const auto a = oracle::random_matrix(7, 5, rng);
    const auto b = oracle::random_matrix(7, 3, rng);
    const auto c = oracle::random_matrix(4, 5, rng);
    const auto tn = matmul_tn(a, b);
    const auto tn_ref = oracle::naive_matmul(transpose(a), b);
    const auto nt = matmul_nt(a, c);
    const auto nt_ref = oracle::naive_matmul(a, transpose(c));
    for (std::size_t i = 0; i < tn.size(); ++i) EXPECT_NEAR(tn.data()[i], tn_ref.data()[i], 1e-12);
    for (std::size_t i = 0; i < nt.size(); ++i) EXPECT_NEAR(nt.data()[i], nt_ref.data()[i], 1e-12);
  }
}

TEST(Glorot, BoundsMeanAndDeterminism) {
  Rng r1(9, 0), r2(9, 0);
  const auto m = glorot_init<double>(512, 512, r1);
  const double a = std::sqrt(6.0 / 1024.0);
  double sum = 0;
  for (double v : m.values()) {
    EXPECT_GE(v, -a);
    EXPECT_LE(v, a);
    sum += v;
  }
  const double mean = sum / static_cast<double>(m.size());
  EXPECT_LE(std::abs(mean), 3 * a / std::sqrt(3.0 * 512 * 512));
  EXPECT_EQ(m, glorot_init<double>(512, 512, r2));
}

TEST(Relu, ForwardBackwardConventions) {
  const auto x = Matrix<double>::from_rows({{-1, 0, 2}, {-3, 4, -0.5}});
  EXPECT_EQ(relu(x), Matrix<double>::from_rows({{0, 0, 2}, {0, 4, 0}}));
  const auto g = Matrix<double>::from_rows({{1, 1, 1}, {1, 1, 1}});
  // zero input gets zero gradient
  EXPECT_EQ(relu_backward(x, g), Matrix<double>::from_rows({{0, 0, 1}, {0, 1, 0}}));

  const auto neg = Matrix<double>::from_rows({{-1, -2}, {-3, -4}});
  EXPECT_EQ(relu(neg), Matrix<double>(2, 2));
  const auto pos = Matrix<double>::from_rows({{1, 2}, {3, 4}});
  EXPECT_EQ(relu(pos), pos);
  EXPECT_EQ(relu_backward(pos, pos), pos);
}

TEST(Dropout, IdentityCases) {
  Rng rng(3, 0);
  const auto x = oracle::random_matrix(10, 10, rng);
  EXPECT_EQ(dropout(x, 0.0, true, rng).out, x);
  EXPECT_EQ(dropout(x, 0.9, false, rng).out, x);
  EXPECT_THROW(dropout(x, 1.0, true, rng), ConfigError);
}

TEST(Dropout, InvertedScalingKeepsMean) {
  Rng rng(4, 0);
  const Matrix<double> ones(1000, 1000, 1.0);
  const auto d = dropout(ones, 0.5, true, rng);
  double sum = 0;
  for (double v : d.out.values()) {
    EXPECT_TRUE(v == 0.0 || v == 2.0);
    sum += v;
  }
  EXPECT_NEAR(sum / 1e6, 1.0, 0.01);
}

TEST(Dropout, BackwardUsesSameMask) {
  Rng rng(5, 0);
  const auto x = oracle::random_matrix(6, 6, rng);
  const auto d = dropout(x, 0.3, true, rng);
  Matrix<double> g(6, 6, 1.0);
  dropout_backward_inplace(g, d.mask);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (d.out.data()[i] == 0.0) EXPECT_EQ(g.data()[i], 0.0);
    else EXPECT_DOUBLE_EQ(g.data()[i], 1.0 / 0.7);
  }
}

TEST(CrossEntropy, UniformLogitsGiveLogC) {
  const Matrix<double> logits(4, 5, 0.3);
  const std::vector<std::uint32_t> labels{0, 1, 2, 4};
  EXPECT_NEAR(softmax_cross_entropy(logits, labels).loss, std::log(5.0), 1e-15);
}

TEST(CrossEntropy, ConfidentCorrectLogit) {
  const auto logits = Matrix<double>::from_rows({{10, -10}});
  const std::vector<std::uint32_t> labels{0};
  const auto ce = softmax_cross_entropy(logits, labels);
  // log(1 + e^-20) and e^-20 / (1 + e^-20), evaluated at 40 digits
  EXPECT_NEAR(ce.loss, 2.061153620314381e-9, 1e-20);
  EXPECT_NEAR(ce.grad(0, 0), -2.061153618190204e-9, 1e-20);
  EXPECT_NEAR(ce.grad(0, 1), 2.061153618190204e-9, 1e-20);
}

TEST(CrossEntropy, ShiftInvariance) {
  Rng rng(6, 0);
  const auto logits = oracle::random_matrix(5, 3, rng);
  auto shifted = logits;
  for (std::size_t r = 0; r < 5; ++r)
    for (auto& v : shifted.row(r)) v += 100.0 * static_cast<double>(r + 1);
  const std::vector<std::uint32_t> labels{0, 2, 1, 1, 0};
  const auto a = softmax_cross_entropy(logits, labels);
  const auto b = softmax_cross_entropy(shifted, labels);
  EXPECT_NEAR(a.loss, b.loss, 1e-12);
  for (std::size_t i = 0; i < a.grad.size(); ++i) EXPECT_NEAR(a.grad.data()[i], b.grad.data()[i], 1e-13);
}

TEST(CrossEntropy, EmptyBatchThrows) {
  EXPECT_THROW(softmax_cross_entropy(Matrix<double>(0, 3), std::vector<std::uint32_t>{}), ConfigError);
}

TEST(CrossEntropy, SoftmaxRowsSumToOneAndLossNonNegative) {
  Rng rng(7, 0);
  for (int t = 0; t < 20; ++t) {
    const auto logits = oracle::random_matrix(8, 6, rng, 5.0);
    const auto p = softmax(logits);
    for (std::size_t r = 0; r < 8; ++r) {
      double s = 0;
      for (double v : p.row(r)) s += v;
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
    std::vector<std::uint32_t> labels(8);
    for (auto& l : labels) l = static_cast<std::uint32_t>(rng.uniform_index(6));
    EXPECT_GE(softmax_cross_entropy(logits, labels).loss, 0.0);
  }
}

// Central differences against every backward kernel in this header.
TEST(Kernels, BackwardMatchesFiniteDifferences) {
  Rng rng(8, 0);
  const std::vector<std::uint32_t> labels{1, 0, 2, 2};
  auto x = oracle::random_matrix(4, 3, rng);
  // loss(x) = CE(relu(x) * W) exercises relu_backward, matmul_nt and CE grad.
  const auto w = oracle::random_matrix(3, 3, rng);
  auto loss = [&] { return softmax_cross_entropy(matmul(relu(x), w), labels).loss; };
  const auto ce = softmax_cross_entropy(matmul(relu(x), w), labels);
  auto analytic = relu_backward(x, matmul_nt(ce.grad, w));
  Matrix<double> grad = analytic;
  slicegcn::ParamList<double> params{{"x", &x, &grad}};
  for (const auto& g : oracle::finite_difference_check(params, loss)) EXPECT_LE(g.rel_error, 1e-5);
}

TEST(Matrix, ConcatAndBlockRoundTrip) {
  Rng rng(10, 0);
  const auto a = oracle::random_matrix(4, 2, rng);
  const auto b = oracle::random_matrix(4, 3, rng);
  const std::vector<Matrix<double>> blocks{a, b};
  const auto c = concat_columns<double>(blocks);
  EXPECT_EQ(column_block(c, 0, 2), a);
  EXPECT_EQ(column_block(c, 2, 3), b);
  const auto padded = pad_columns(a, 1);
  EXPECT_EQ(padded.cols(), 3u);
  EXPECT_EQ(column_block(padded, 0, 2), a);
  EXPECT_EQ(column_block(padded, 2, 1), Matrix<double>(4, 1));
}
