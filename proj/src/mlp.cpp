#include "dcil/mlp.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "dcil/error.hpp"

namespace dcil {

void MlpGradients::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

double MlpGradients::squared_norm() const {
  double s = 0.0;
  for (const auto& w : weights) s += w.squaredNorm();
  for (const auto& b : biases) s += b.squaredNorm();
  return s;
}

Mlp::Mlp(std::vector<int> sizes, Rng& rng) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw ConfigError("an MLP needs at least input and output sizes");
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int fan_in = sizes_[l];
    const int fan_out = sizes_[l + 1];
    if (fan_in < 1 || fan_out < 1) throw ConfigError("MLP layer sizes must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix w(fan_out, fan_in);
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
    }
    Vector b(fan_out);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = u(rng);
    weights_.push_back(std::move(w));
    biases_.push_back(std::move(b));
  }
}

Matrix Mlp::forward(const Matrix& x) const {
  Matrix h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    Matrix z = weights_[l] * h;
    z.colwise() += biases_[l];
    if (l + 1 < weights_.size()) z = z.cwiseMax(0.0);
    h = std::move(z);
  }
  return h;
}

Matrix Mlp::forward(const Matrix& x, Tape& tape) const {
  tape.inputs.resize(weights_.size());
  tape.pre_activations.resize(weights_.size());
  Matrix h = x;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    tape.inputs[l] = h;
    Matrix z = weights_[l] * h;
    z.colwise() += biases_[l];
    tape.pre_activations[l] = z;
    h = l + 1 < weights_.size() ? Matrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return h;
}

Matrix Mlp::backward(const Tape& tape, const Matrix& grad_out, MlpGradients* grads) const {
  Matrix delta = grad_out;
  for (std::size_t l = weights_.size(); l-- > 0;) {
    if (l + 1 < weights_.size()) {
      // ReLU: pass gradient where the pre-activation was positive.
      delta = delta.cwiseProduct(
          (tape.pre_activations[l].array() > 0.0).cast<double>().matrix());
    }
    if (grads != nullptr) {
      grads->weights[l].noalias() += delta * tape.inputs[l].transpose();
      grads->biases[l] += delta.rowwise().sum();
    }
    delta = weights_[l].transpose() * delta;
  }
  return delta;
}

MlpGradients Mlp::zero_gradients() const {
  MlpGradients g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.weights.push_back(Matrix::Zero(weights_[l].rows(), weights_[l].cols()));
    g.biases.push_back(Vector::Zero(biases_[l].size()));
  }
  return g;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    n += weights_[l].size() + biases_[l].size();
  }
  return n;
}

void Mlp::blend_from(const Mlp& other, double tau) {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    weights_[l] = (1.0 - tau) * weights_[l] + tau * other.weights_[l];
    biases_[l] = (1.0 - tau) * biases_[l] + tau * other.biases_[l];
  }
}

// Text archive: "mlp <n_sizes> <sizes...>" followed by each layer's weights
// (row-major) and biases, one value per token in shortest round-trip form.
void Mlp::save(std::ostream& out) const {
  fmt::print(out, "mlp {}", sizes_.size());
  for (int s : sizes_) fmt::print(out, " {}", s);
  out << '\n';
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto& w = weights_[l];
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) fmt::print(out, "{} ", w(i, j));
      out << '\n';
    }
    for (Eigen::Index i = 0; i < biases_[l].size(); ++i) fmt::print(out, "{} ", biases_[l](i));
    out << '\n';
  }
}

Mlp Mlp::load(std::istream& in) {
  std::string tag;
  std::size_t n = 0;
  if (!(in >> tag >> n) || tag != "mlp" || n < 2 || n > 64) {
    throw ParseError("expected an mlp header");
  }
  Mlp net;
  net.sizes_.resize(n);
  for (auto& s : net.sizes_) {
    if (!(in >> s) || s < 1 || s > (1 << 20)) throw ParseError("bad mlp layer size");
  }
  for (std::size_t l = 0; l + 1 < n; ++l) {
    Matrix w(net.sizes_[l + 1], net.sizes_[l]);
    Vector b(net.sizes_[l + 1]);
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      for (Eigen::Index j = 0; j < w.cols(); ++j) {
        if (!(in >> w(i, j))) throw ParseError("truncated mlp weights");
      }
    }
    for (Eigen::Index i = 0; i < b.size(); ++i) {
      if (!(in >> b(i))) throw ParseError("truncated mlp biases");
    }
    if (!w.allFinite() || !b.allFinite()) throw ParseError("non-finite mlp parameter");
    net.weights_.push_back(std::move(w));
    net.biases_.push_back(std::move(b));
  }
  return net;
}

Adam::Adam(const Mlp& net, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(net.zero_gradients()),
      v_(net.zero_gradients()) {}

void Adam::step(Mlp& net, const MlpGradients& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  const double rate = lr_ * std::sqrt(c2) / c1;
  // Folding the bias corrections into the step rescales eps by sqrt(c2).
  const double eps_hat = eps_ * std::sqrt(c2);
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseAbs2();
    param.array() -= rate * m.array() / (v.array().sqrt() + eps_hat);
  };
  for (std::size_t l = 0; l < net.layer_count(); ++l) {
    update(net.weights()[l], m_.weights[l], v_.weights[l], grads.weights[l]);
    update(net.biases()[l], m_.biases[l], v_.biases[l], grads.biases[l]);
  }
}

Normalizer::Normalizer(int dim) : mean_(Vector::Zero(dim)), m2_(Vector::Zero(dim)) {}

void Normalizer::observe(const Vector& x) {
  if (frozen_) return;
  ++count_;
  const Vector delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta.cwiseProduct(x - mean_);
}

Vector Normalizer::stddev() const {
  if (count_ < 2) return Vector::Ones(mean_.size());
  return (m2_ / static_cast<double>(count_)).cwiseSqrt().cwiseMax(kMinStd);
}

void Normalizer::apply(Eigen::Ref<Vector> x) const {
  if (count_ == 0) return;
  x = (x - mean_).cwiseQuotient(stddev());
}

void Normalizer::save(std::ostream& out) const {
  fmt::print(out, "normalizer {} {} {}\n", mean_.size(), count_, int(frozen_));
  for (Eigen::Index i = 0; i < mean_.size(); ++i) fmt::print(out, "{} ", mean_(i));
  out << '\n';
  for (Eigen::Index i = 0; i < m2_.size(); ++i) fmt::print(out, "{} ", m2_(i));
  out << '\n';
}

Normalizer Normalizer::load(std::istream& in) {
  std::string tag;
  Eigen::Index dim = 0;
  int frozen = 0;
  Normalizer n;
  if (!(in >> tag >> dim >> n.count_ >> frozen) || tag != "normalizer" || dim < 0 ||
      dim > 4096 || n.count_ < 0) {
    throw ParseError("expected a normalizer header");
  }
  n.mean_.resize(dim);
  n.m2_.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (!(in >> n.mean_(i))) throw ParseError("truncated normalizer mean");
  }
  for (Eigen::Index i = 0; i < dim; ++i) {
    if (!(in >> n.m2_(i))) throw ParseError("truncated normalizer variance");
  }
  n.frozen_ = frozen != 0;
  return n;
}

}  // namespace dcil
