#include <sstream>

#include <gtest/gtest.h>

#include "dcil/error.hpp"
#include "dcil/mlp.hpp"
#include "support/fixtures.hpp"

using namespace dcil;

namespace {

Matrix random_matrix(Rng& rng, int r, int c) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng);
  }
  return m;
}

// Scalar loss sum(upstream .* net(x)) and its analytic parameter gradients.
double weighted_output(const Mlp& net, const Matrix& x, const Matrix& upstream) {
  return net.forward(x).cwiseProduct(upstream).sum();
}

}  // namespace

TEST(Mlp, ShapesAndParameterCount) {
  Rng rng(0);
  const Mlp net({5, 400, 300, 2}, rng);
  EXPECT_EQ(net.parameter_count(), 5u * 400 + 400 + 400 * 300 + 300 + 300 * 2 + 2);
  const Matrix y = net.forward(Matrix::Ones(5, 7));
  EXPECT_EQ(y.rows(), 2);
  EXPECT_EQ(y.cols(), 7);
  EXPECT_TRUE(y.allFinite());
  EXPECT_THROW(Mlp({3}, rng), ConfigError);
  EXPECT_THROW(Mlp({3, 0, 1}, rng), ConfigError);
}

TEST(Mlp, LinearLayerGradientIsInput) {
  Rng rng(1);
  const Mlp net({3, 1}, rng);
  Matrix x(3, 1);
  x << 0.5, -2.0, 4.0;
  Mlp::Tape tape;
  net.forward(x, tape);
  auto g = net.zero_gradients();
  net.backward(tape, Matrix::Ones(1, 1), &g);
  for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(g.weights[0](0, j), x(j, 0));
  EXPECT_DOUBLE_EQ(g.biases[0](0), 1.0);
}

TEST(Mlp, ZeroInputZeroBiasGivesZeroFirstLayerGradient) {
  Rng rng(2);
  Mlp net({4, 8, 3}, rng);
  for (auto& b : net.biases()) b.setZero();
  Mlp::Tape tape;
  net.forward(Matrix::Zero(4, 3), tape);
  auto g = net.zero_gradients();
  net.backward(tape, Matrix::Ones(3, 3), &g);
  EXPECT_EQ(g.weights[0].squaredNorm(), 0.0);
}

TEST(Mlp, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    std::uniform_int_distribution<int> width(1, 9);
    const int in = width(rng), out = width(rng);
    std::vector<int> sizes{in};
    for (int l = 0; l < 1 + static_cast<int>(seed % 3); ++l) sizes.push_back(width(rng) + 2);
    sizes.push_back(out);
    Mlp net(sizes, rng);
    const Matrix x = random_matrix(rng, in, 5);
    const Matrix up = random_matrix(rng, out, 5);
    Mlp::Tape tape;
    net.forward(x, tape);
    auto g = net.zero_gradients();
    const Matrix dx = net.backward(tape, up, &g);
    const double err = fixtures::max_relative_error(
        net, g, [&] { return weighted_output(net, x, up); });
    EXPECT_LT(err, 1e-4) << "seed " << seed;

    // input gradient as well
    Matrix xp = x;
    double worst = 0.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        xp(i, j) = x(i, j) + 1e-5;
        const double a = weighted_output(net, xp, up);
        xp(i, j) = x(i, j) - 1e-5;
        const double b = weighted_output(net, xp, up);
        xp(i, j) = x(i, j);
        const double n = (a - b) / 2e-5;
        worst = std::max(worst, std::abs(n - dx(i, j)) /
                                    std::max({std::abs(n), std::abs(dx(i, j)), 1e-6}));
      }
    }
    EXPECT_LT(worst, 1e-4) << "seed " << seed;
  }
}

TEST(Mlp, BlendAndTextRoundTrip) {
  Rng rng(3);
  Mlp a({3, 4, 2}, rng), b({3, 4, 2}, rng);
  Mlp c = a;
  c.blend_from(b, 1.0);
  EXPECT_EQ(c.weights()[0], b.weights()[0]);
  std::stringstream ss;
  a.save(ss);
  const Mlp back = Mlp::load(ss);
  EXPECT_EQ(back.sizes(), a.sizes());
  for (std::size_t l = 0; l < a.layer_count(); ++l) {
    EXPECT_EQ(back.weights()[l], a.weights()[l]);
    EXPECT_EQ(back.biases()[l], a.biases()[l]);
  }
  std::stringstream bad("mlp 3 3 4 2\n0.1 0.2\n");
  EXPECT_THROW(Mlp::load(bad), ParseError);
  std::stringstream junk("hello");
  EXPECT_THROW(Mlp::load(junk), ParseError);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Rng rng(4);
  Mlp net({2, 1}, rng);
  const Mlp before = net;
  Adam opt(net, 1e-3);
  auto g = net.zero_gradients();
  g.weights[0] << 0.5, -3.0;
  g.biases[0] << 2.0;
  opt.step(net, g);
  // first bias-corrected step is lr * g / (|g| + eps)
  EXPECT_NEAR(net.weights()[0](0, 0) - before.weights()[0](0, 0), -1e-3 * 0.5 / (0.5 + 1e-8), 1e-15);
  EXPECT_NEAR(net.weights()[0](0, 1) - before.weights()[0](0, 1), 1e-3 * 3.0 / (3.0 + 1e-8), 1e-15);
  EXPECT_NEAR(net.biases()[0](0) - before.biases()[0](0), -1e-3 * 2.0 / (2.0 + 1e-8), 1e-15);
  EXPECT_EQ(opt.steps(), 1);
}

TEST(Adam, MatchesReferenceRecurrence) {
  Rng rng(5);
  Mlp net({1, 1}, rng);
  double w = net.weights()[0](0, 0);
  Adam opt(net, 0.01);
  double m = 0.0, v = 0.0;
  for (int t = 1; t <= 50; ++t) {
    const double grad = std::sin(0.3 * t) + 0.1;
    auto g = net.zero_gradients();
    g.weights[0](0, 0) = grad;
    opt.step(net, g);
    m = 0.9 * m + 0.1 * grad;
    v = 0.999 * v + 0.001 * grad * grad;
    const double mh = m / (1 - std::pow(0.9, t));
    const double vh = v / (1 - std::pow(0.999, t));
    w -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(net.weights()[0](0, 0), w, 1e-12);
  }
}

TEST(Normalizer, MatchesTwoPassStatisticsAndFreezes) {
  Rng rng(6);
  std::normal_distribution<double> n(3.0, 2.0);
  Normalizer norm(3);
  std::vector<Vector> xs;
  for (int k = 0; k < 500; ++k) {
    Vector x(3);
    x << n(rng), 5.0, -n(rng);
    xs.push_back(x);
    norm.observe(x);
  }
  Vector mean = Vector::Zero(3);
  for (const auto& x : xs) mean += x;
  mean /= 500.0;
  Vector var = Vector::Zero(3);
  for (const auto& x : xs) var += (x - mean).cwiseAbs2();
  var /= 500.0;
  EXPECT_LT((norm.mean() - mean).norm(), 1e-10);
  EXPECT_NEAR(norm.stddev()(0), std::sqrt(var(0)), 1e-10);
  EXPECT_DOUBLE_EQ(norm.stddev()(1), Normalizer::kMinStd);

  norm.freeze();
  Vector big(3);
  big << 1e6, 1e6, 1e6;
  norm.observe(big);
  EXPECT_EQ(norm.count(), 500);
  Vector y = xs[0];
  norm.apply(y);
  EXPECT_NEAR(y(0), (xs[0](0) - mean(0)) / std::sqrt(var(0)), 1e-9);
  EXPECT_TRUE(y.allFinite());

  std::stringstream ss;
  norm.save(ss);
  const Normalizer back = Normalizer::load(ss);
  EXPECT_EQ(back.mean(), norm.mean());
  EXPECT_TRUE(back.frozen());
}

TEST(Normalizer, IdentityBeforeObservations) {
  Normalizer norm(2);
  Vector x(2);
  x << 3.0, -4.0;
  Vector y = x;
  norm.apply(y);
  EXPECT_EQ(y, x);
}
