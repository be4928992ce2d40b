#pragma once

// Fully connected ReLU networks with hand-written reverse-mode gradients, an
// Adam optimizer and a per-dimension observation normalizer. Batches are
// column-major: one sample per column.

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace dcil {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

struct MlpGradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;

  void set_zero();
  double squared_norm() const;
};

class Mlp {
 public:
  /// Activations kept by a forward pass for the matching backward pass.
  struct Tape {
    std::vector<Matrix> inputs;       // input of every layer
    std::vector<Matrix> pre_activations;
  };

  Mlp() = default;
  /// sizes = {in, hidden..., out}. Weights and biases are drawn from
  /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Mlp(std::vector<int> sizes, Rng& rng);

  Matrix forward(const Matrix& x) const;
  Matrix forward(const Matrix& x, Tape& tape) const;

  /// Propagates dL/d(output) back through the tape. Parameter gradients are
  /// accumulated into `grads` when non-null; returns dL/d(input).
  Matrix backward(const Tape& tape, const Matrix& grad_out, MlpGradients* grads) const;

  MlpGradients zero_gradients() const;

  const std::vector<int>& sizes() const noexcept { return sizes_; }
  std::size_t layer_count() const noexcept { return weights_.size(); }
  std::size_t parameter_count() const;

  std::vector<Matrix>& weights() noexcept { return weights_; }
  std::vector<Vector>& biases() noexcept { return biases_; }
  const std::vector<Matrix>& weights() const noexcept { return weights_; }
  const std::vector<Vector>& biases() const noexcept { return biases_; }

  /// this <- (1 - tau) * this + tau * other.
  void blend_from(const Mlp& other, double tau);

  void save(std::ostream& out) const;
  static Mlp load(std::istream& in);

 private:
  std::vector<int> sizes_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

class Adam {
 public:
  Adam() = default;
  explicit Adam(const Mlp& net, double lr = 1e-3, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);

  void step(Mlp& net, const MlpGradients& grads);

  double learning_rate() const noexcept { return lr_; }
  std::int64_t steps() const noexcept { return t_; }

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::int64_t t_ = 0;
  MlpGradients m_, v_;
};

/// Running mean / standard deviation per dimension (Welford). Statistics are
/// frozen once collection ends.
class Normalizer {
 public:
  static constexpr double kMinStd = 1e-6;

  Normalizer() = default;
  explicit Normalizer(int dim);

  void observe(const Vector& x);
  void freeze() noexcept { frozen_ = true; }
  bool frozen() const noexcept { return frozen_; }

  Vector mean() const { return mean_; }
  Vector stddev() const;
  std::int64_t count() const noexcept { return count_; }
  int dim() const noexcept { return static_cast<int>(mean_.size()); }

  /// (x - mean) / std with std floored at kMinStd. Identity before any
  /// observation.
  void apply(Eigen::Ref<Vector> x) const;

  void save(std::ostream& out) const;
  static Normalizer load(std::istream& in);

 private:
  Vector mean_;
  Vector m2_;
  std::int64_t count_ = 0;
  bool frozen_ = false;
};

}  // namespace dcil
