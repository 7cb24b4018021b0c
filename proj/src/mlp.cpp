#include "eigfilter/mlp.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace eigfilter {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }
double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

class MlpLoss final : public Loss {
 public:
  MlpLoss(MlpSpec spec, Dataset data) : spec_(std::move(spec)), data_(std::move(data)) {
    dim_ = mlp_parameter_count(spec_.layers);
  }

  std::size_t dim() const override { return dim_; }
  std::string id() const override { return "mlp"; }

  double value(const Vector& x) const override {
    require_dim(x);
    std::vector<Matrix> pre;
    std::vector<Matrix> act;
    forward(x, pre, act);
    return output_loss(pre.back(), nullptr);
  }

  Vector gradient(const Vector& x) const override {
    require_dim(x);
    std::vector<Matrix> pre;
    std::vector<Matrix> act;
    forward(x, pre, act);
    Matrix delta;
    output_loss(pre.back(), &delta);

    Vector grad(static_cast<Eigen::Index>(dim_));
    const std::size_t n_layers = spec_.layers.size() - 1;
    std::vector<Eigen::Index> offsets = layer_offsets();
    for (std::size_t l = n_layers; l-- > 0;) {
      const auto in = static_cast<Eigen::Index>(spec_.layers[l]);
      const auto out = static_cast<Eigen::Index>(spec_.layers[l + 1]);
      const Matrix& input = act[l];
      RowMajor dw = delta.transpose() * input;
      grad.segment(offsets[l], out * in) = Eigen::Map<const Vector>(dw.data(), out * in);
      grad.segment(offsets[l] + out * in, out) = delta.colwise().sum().transpose();
      if (l == 0) break;
      const Eigen::Map<const RowMajor> w(x.data() + offsets[l], out, in);
      Matrix upstream = delta * w;
      delta = upstream.cwiseProduct(pre[l - 1].unaryExpr([this](double z) { return activation_derivative(z); }));
    }
    return grad;
  }

 private:
  std::vector<Eigen::Index> layer_offsets() const {
    std::vector<Eigen::Index> offsets;
    Eigen::Index off = 0;
    for (std::size_t l = 0; l + 1 < spec_.layers.size(); ++l) {
      offsets.push_back(off);
      off += static_cast<Eigen::Index>(spec_.layers[l + 1] * (spec_.layers[l] + 1));
    }
    return offsets;
  }

  double activate(double z) const { return spec_.activation == Activation::Tanh ? std::tanh(z) : softplus(z); }
  double activation_derivative(double z) const {
    if (spec_.activation == Activation::Tanh) {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
    return sigmoid(z);
  }

  // pre[l] is the pre-activation of layer l + 1; act[l] is the input to layer l.
  void forward(const Vector& x, std::vector<Matrix>& pre, std::vector<Matrix>& act) const {
    const std::size_t n_layers = spec_.layers.size() - 1;
    const std::vector<Eigen::Index> offsets = layer_offsets();
    act.push_back(data_.inputs);
    for (std::size_t l = 0; l < n_layers; ++l) {
      const auto in = static_cast<Eigen::Index>(spec_.layers[l]);
      const auto out = static_cast<Eigen::Index>(spec_.layers[l + 1]);
      const Eigen::Map<const RowMajor> w(x.data() + offsets[l], out, in);
      const Eigen::Map<const Vector> b(x.data() + offsets[l] + out * in, out);
      Matrix z = act.back() * w.transpose();
      z.rowwise() += b.transpose();
      pre.push_back(z);
      if (l + 1 < n_layers) act.push_back(z.unaryExpr([this](double v) { return activate(v); }));
    }
  }

  double output_loss(const Matrix& z, Matrix* delta) const {
    const auto n = static_cast<double>(data_.inputs.rows());
    if (spec_.loss_kind == MlpLossKind::Squared) {
      const Matrix r = z - data_.targets;
      if (delta != nullptr) *delta = r / n;
      return 0.5 * r.squaredNorm() / n;
    }
    double total = 0.0;
    if (delta != nullptr) delta->resize(z.rows(), z.cols());
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      const double zmax = z.row(i).maxCoeff();
      const Eigen::RowVectorXd e = (z.row(i).array() - zmax).exp().matrix();
      const double s = e.sum();
      total -= data_.targets.row(i).dot((z.row(i).array() - zmax - std::log(s)).matrix());
      if (delta != nullptr) delta->row(i) = (e / s - data_.targets.row(i)) / n;
    }
    return total / n;
  }

  MlpSpec spec_;
  Dataset data_;
  std::size_t dim_ = 0;
};

}  // namespace

std::size_t mlp_parameter_count(const std::vector<std::size_t>& layers) {
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) count += layers[l + 1] * (layers[l] + 1);
  return count;
}

Dataset make_synthetic_dataset(const SyntheticDataSpec& spec) {
  if (spec.n_samples == 0 || spec.input_dim == 0 || spec.output_dim == 0)
    throw InvalidSpecError("synthetic dataset: sizes must be positive");
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> normal;
  const auto n = static_cast<Eigen::Index>(spec.n_samples);
  const auto d = static_cast<Eigen::Index>(spec.input_dim);
  const auto k = static_cast<Eigen::Index>(spec.output_dim);

  Matrix teacher(k, d);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < d; ++j) teacher(i, j) = normal(rng);
  Vector phase(k);
  for (Eigen::Index i = 0; i < k; ++i) phase[i] = 2.0 * std::numbers::pi * 0.5 * (unit(rng) + 1.0);

  Dataset data;
  data.inputs.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) data.inputs(i, j) = unit(rng);

  const Matrix scores = data.inputs * teacher.transpose();
  data.targets.resize(n, k);
  if (spec.loss_kind == MlpLossKind::CrossEntropy) {
    data.targets.setZero();
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      scores.row(i).maxCoeff(&best);
      data.targets(i, best) = 1.0;
    }
  } else if (spec.teacher == Teacher::Linear) {
    data.targets = spec.target_scale * scores;
  } else {
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < k; ++j)
        data.targets(i, j) = spec.target_scale * std::sin(2.0 * scores(i, j) + phase[j]);
  }
  return data;
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  const auto d = data.inputs.cols();
  const auto k = data.targets.cols();
  for (Eigen::Index j = 0; j < d; ++j) out << (j ? "," : "") << 'u' << j;
  for (Eigen::Index j = 0; j < k; ++j) out << ",y" << j;
  out << '\n';
  out.precision(17);
  for (Eigen::Index i = 0; i < data.inputs.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) out << (j ? "," : "") << data.inputs(i, j);
    for (Eigen::Index j = 0; j < k; ++j) out << ',' << data.targets(i, j);
    out << '\n';
  }
}

LossPtr make_mlp_loss(const MlpSpec& spec, Dataset data) {
  if (spec.layers.size() < 2) throw InvalidSpecError("mlp: need at least input and output widths");
  for (std::size_t w : spec.layers)
    if (w == 0) throw InvalidSpecError("mlp: zero layer width");
  const std::size_t count = mlp_parameter_count(spec.layers);
  if (count > kDenseHessianCap) {
    std::ostringstream msg;
    msg << "mlp: " << count << " parameters exceeds the cap of " << kDenseHessianCap;
    throw InvalidSpecError(msg.str());
  }
  if (data.inputs.rows() == 0 || data.inputs.rows() != data.targets.rows() ||
      static_cast<std::size_t>(data.inputs.cols()) != spec.layers.front() ||
      static_cast<std::size_t>(data.targets.cols()) != spec.layers.back()) {
    throw InvalidSpecError("mlp: dataset shape does not match the layer widths");
  }
  return std::make_shared<MlpLoss>(spec, std::move(data));
}

Vector mlp_initial_parameters(const std::vector<std::size_t>& layers, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Vector x = Vector::Zero(static_cast<Eigen::Index>(mlp_parameter_count(layers)));
  Eigen::Index off = 0;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(layers[l]);
    const auto out = static_cast<Eigen::Index>(layers[l + 1]);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (Eigen::Index i = 0; i < out * in; ++i) x[off + i] = scale * unit(rng);
    off += out * (in + 1);
  }
  return x;
}

}  // namespace eigfilter
