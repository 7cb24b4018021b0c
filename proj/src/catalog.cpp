#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include "eigfilter/loss.hpp"
#include "eigfilter/mlp.hpp"

namespace eigfilter {
namespace {

class QuadraticLoss final : public Loss {
 public:
  QuadraticLoss(Matrix h, Vector center) : h_(std::move(h)), center_(std::move(center)) {}

  std::size_t dim() const override { return static_cast<std::size_t>(center_.size()); }
  std::string id() const override { return "quadratic"; }

  double value(const Vector& x) const override {
    require_dim(x);
    const Vector d = x - center_;
    return 0.5 * d.dot(h_ * d);
  }
  Vector gradient(const Vector& x) const override {
    require_dim(x);
    return h_ * (x - center_);
  }
  Vector hvp(const Vector& x, const Vector& v) const override {
    require_dim(x);
    return h_ * v;
  }
  Matrix hessian(const Vector& x) const override {
    require_dim(x);
    return h_;
  }

 private:
  Matrix h_;
  Vector center_;
};

// Quintic on s = t - 2 in [0, 1] matching (h, h', h'') of the two arms at
// t = 2 and t = 3.
struct QuinticBlend {
  std::array<double, 6> c{};

  static QuinticBlend fit(const RadialProfile& left, const RadialProfile& right) {
    QuinticBlend b;
    b.c[0] = left.value;
    b.c[1] = left.first;
    b.c[2] = 0.5 * left.second;
    // Remaining conditions at s = 1 for c3, c4, c5.
    Eigen::Matrix3d a;
    a << 1, 1, 1,
         3, 4, 5,
         6, 12, 20;
    Eigen::Vector3d rhs(right.value - b.c[0] - b.c[1] - b.c[2],
                        right.first - b.c[1] - 2 * b.c[2],
                        right.second - 2 * b.c[2]);
    const Eigen::Vector3d sol = a.partialPivLu().solve(rhs);
    b.c[3] = sol[0];
    b.c[4] = sol[1];
    b.c[5] = sol[2];
    return b;
  }

  RadialProfile eval(double s) const {
    double v = 0, d1 = 0, d2 = 0;
    double pw = 1.0;  // s^(i-2) for i >= 2
    v = c[0] + s * c[1];
    d1 = c[1];
    for (std::size_t i = 2; i < c.size(); ++i) {
      const auto k = static_cast<double>(i);
      d2 += k * (k - 1) * c[i] * pw;
      d1 += k * c[i] * pw * s;
      v += c[i] * pw * s * s;
      pw *= s;
    }
    return {v, d1, d2};
  }
};

RadialProfile inner_arm(double t) {
  const double q = t * t - 1.0;
  return {q * q, 4.0 * t * q, 12.0 * t * t - 4.0};
}

RadialProfile outer_arm(double t) { return {t * t, 2.0 * t, 2.0}; }

const QuinticBlend& bump_blend() {
  static const QuinticBlend blend = QuinticBlend::fit(inner_arm(2.0), outer_arm(3.0));
  return blend;
}

class BumpLoss final : public Loss {
 public:
  explicit BumpLoss(std::size_t dim) : dim_(dim) {}

  std::size_t dim() const override { return dim_; }
  std::string id() const override { return "bump"; }

  double value(const Vector& x) const override {
    require_dim(x);
    const double t2 = x.squaredNorm();
    if (t2 <= 4.0) return (t2 - 1.0) * (t2 - 1.0);
    if (t2 >= 9.0) return t2;
    return bump_profile(std::sqrt(t2)).value;
  }

  Vector gradient(const Vector& x) const override {
    require_dim(x);
    const double t2 = x.squaredNorm();
    // Written as scalar * x in every region so that x - alpha * grad is exact
    // in floating point where the scalar is a power of two.
    if (t2 <= 4.0) return 4.0 * (t2 - 1.0) * x;
    if (t2 >= 9.0) return 2.0 * x;
    const double t = std::sqrt(t2);
    return (bump_profile(t).first / t) * x;
  }

  Vector hvp(const Vector& x, const Vector& v) const override { return hessian(x) * v; }

  Matrix hessian(const Vector& x) const override {
    require_dim(x);
    const auto m = static_cast<Eigen::Index>(dim_);
    const double t2 = x.squaredNorm();
    if (t2 <= 4.0) {
      return 8.0 * x * x.transpose() + 4.0 * (t2 - 1.0) * Matrix::Identity(m, m);
    }
    if (t2 >= 9.0) return 2.0 * Matrix::Identity(m, m);
    const double t = std::sqrt(t2);
    const RadialProfile p = bump_profile(t);
    const double radial = (p.second - p.first / t) / t2;
    return radial * x * x.transpose() + (p.first / t) * Matrix::Identity(m, m);
  }

 private:
  std::size_t dim_;
};

class PiecewiseCubicLoss final : public Loss {
 public:
  explicit PiecewiseCubicLoss(double k) : k_(k) {}

  std::size_t dim() const override { return 1; }
  std::string id() const override { return "piecewise_cubic"; }

  double value(const Vector& x) const override {
    require_dim(x);
    const double s = x[0] - 1.0;
    return s > 0.0 ? -(k_ / 3.0) * s * s * s : 0.0;
  }
  Vector gradient(const Vector& x) const override {
    require_dim(x);
    const double s = x[0] - 1.0;
    return Vector::Constant(1, s > 0.0 ? -k_ * s * s : 0.0);
  }
  Vector hvp(const Vector& x, const Vector& v) const override { return hessian(x) * v; }
  Matrix hessian(const Vector& x) const override {
    require_dim(x);
    const double s = x[0] - 1.0;
    return Matrix::Constant(1, 1, s > 0.0 ? -2.0 * k_ * s : 0.0);
  }

 private:
  double k_;
};

class ConcaveQuadraticLoss final : public Loss {
 public:
  explicit ConcaveQuadraticLoss(double rho) : rho_(rho) {}

  std::size_t dim() const override { return 1; }
  std::string id() const override { return "concave_quadratic"; }

  double value(const Vector& x) const override {
    require_dim(x);
    return -x[0] * x[0] / rho_;
  }
  Vector gradient(const Vector& x) const override {
    require_dim(x);
    return Vector::Constant(1, -2.0 * x[0] / rho_);
  }
  Vector hvp(const Vector& x, const Vector& v) const override { return hessian(x) * v; }
  Matrix hessian(const Vector& x) const override {
    require_dim(x);
    return Matrix::Constant(1, 1, -2.0 / rho_);
  }

 private:
  double rho_;
};

Matrix random_orthogonal(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix g(n, n);
  for (Eigen::Index j = 0; j < n; ++j)
    for (Eigen::Index i = 0; i < n; ++i) g(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  // Fix column signs so Q is a deterministic function of G.
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

// ---- param map helpers ----

template <typename T>
const T* find_param(const ParamMap& params, const std::string& key, const std::string& loss_id) {
  auto it = params.find(key);
  if (it == params.end()) return nullptr;
  if (const T* v = std::get_if<T>(&it->second)) return v;
  throw InvalidSpecError(loss_id + ": parameter '" + key + "' has the wrong type");
}

double get_number(const ParamMap& p, const std::string& key, const std::string& loss_id,
                  std::optional<double> fallback = std::nullopt) {
  if (const double* v = find_param<double>(p, key, loss_id)) return *v;
  if (fallback) return *fallback;
  throw InvalidSpecError(loss_id + ": missing parameter '" + key + "'");
}

std::size_t get_count(const ParamMap& p, const std::string& key, const std::string& loss_id,
                      std::optional<double> fallback = std::nullopt) {
  const double v = get_number(p, key, loss_id, fallback);
  if (v < 0 || v != std::floor(v)) throw InvalidSpecError(loss_id + ": '" + key + "' must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

std::string get_string(const ParamMap& p, const std::string& key, const std::string& loss_id,
                       const std::string& fallback) {
  if (const std::string* v = find_param<std::string>(p, key, loss_id)) return *v;
  return fallback;
}

void reject_unknown(const ParamMap& p, const std::string& loss_id, std::initializer_list<const char*> allowed) {
  for (const auto& [key, _] : p) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw InvalidSpecError(loss_id + ": unknown parameter '" + key + "'");
  }
}

}  // namespace

RadialProfile bump_profile(double t) {
  if (t <= 2.0) return inner_arm(t);
  if (t >= 3.0) return outer_arm(t);
  return bump_blend().eval(t - 2.0);
}

LossPtr make_quadratic(const QuadraticSpec& spec) {
  if (spec.eigenvalues.empty()) throw InvalidSpecError("quadratic: empty eigenvalue list");
  const auto n = static_cast<Eigen::Index>(spec.eigenvalues.size());
  Vector lambda(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    lambda[i] = spec.eigenvalues[static_cast<std::size_t>(i)];
    if (!std::isfinite(lambda[i])) throw InvalidSpecError("quadratic: non-finite eigenvalue");
  }
  Vector center = Vector::Zero(n);
  if (!spec.center.empty()) {
    if (spec.center.size() != spec.eigenvalues.size())
      throw InvalidSpecError("quadratic: center length differs from eigenvalue count");
    center = Eigen::Map<const Vector>(spec.center.data(), n);
  }
  Matrix h;
  if (n == 1) {
    h = Matrix::Constant(1, 1, lambda[0]);
  } else {
    const Matrix q = random_orthogonal(n, spec.rotation_seed);
    h = q.transpose() * lambda.asDiagonal() * q;
    h = 0.5 * (h + h.transpose());
  }
  return std::make_shared<QuadraticLoss>(std::move(h), std::move(center));
}

LossPtr make_bump_loss(const BumpLossSpec& spec) {
  if (spec.dim == 0) throw InvalidSpecError("bump: dim must be at least 1");
  return std::make_shared<BumpLoss>(spec.dim);
}

LossPtr make_piecewise_cubic(const PiecewiseCubicSpec& spec) {
  if (!(spec.K > 0.0)) throw InvalidSpecError("piecewise_cubic: K must be positive");
  return std::make_shared<PiecewiseCubicLoss>(spec.K);
}

LossPtr make_concave_quadratic(double rho) {
  if (!(rho > 0.0)) throw InvalidSpecError("concave_quadratic: rho must be positive");
  return std::make_shared<ConcaveQuadraticLoss>(rho);
}

std::vector<std::string> catalog_ids() {
  return {"quadratic", "bump", "piecewise_cubic", "concave_quadratic", "mlp"};
}

LossPtr make_loss(const std::string& id, const ParamMap& params) {
  if (id == "quadratic") {
    reject_unknown(params, id, {"eigenvalues", "rotation_seed", "center"});
    QuadraticSpec spec;
    const auto* eig = find_param<std::vector<double>>(params, "eigenvalues", id);
    if (eig == nullptr) throw InvalidSpecError("quadratic: missing parameter 'eigenvalues'");
    spec.eigenvalues = *eig;
    spec.rotation_seed = get_count(params, "rotation_seed", id, 0.0);
    if (const auto* c = find_param<std::vector<double>>(params, "center", id)) spec.center = *c;
    return make_quadratic(spec);
  }
  if (id == "bump") {
    reject_unknown(params, id, {"dim"});
    return make_bump_loss({get_count(params, "dim", id, 2.0)});
  }
  if (id == "piecewise_cubic") {
    reject_unknown(params, id, {"K"});
    return make_piecewise_cubic({get_number(params, "K", id)});
  }
  if (id == "concave_quadratic") {
    reject_unknown(params, id, {"rho"});
    return make_concave_quadratic(get_number(params, "rho", id));
  }
  if (id == "mlp") {
    reject_unknown(params, id, {"layers", "activation", "loss_kind", "n_samples", "data_seed", "teacher",
                              "target_scale"});
    const auto* layers = find_param<std::vector<double>>(params, "layers", id);
    if (layers == nullptr || layers->size() < 2) throw InvalidSpecError("mlp: 'layers' needs at least two widths");
    MlpSpec spec;
    for (double w : *layers) {
      if (w < 1 || w != std::floor(w)) throw InvalidSpecError("mlp: layer widths must be positive integers");
      spec.layers.push_back(static_cast<std::size_t>(w));
    }
    const std::string act = get_string(params, "activation", id, "tanh");
    if (act == "tanh") spec.activation = Activation::Tanh;
    else if (act == "softplus") spec.activation = Activation::Softplus;
    else throw InvalidSpecError("mlp: activation must be tanh or softplus, got '" + act + "'");
    const std::string kind = get_string(params, "loss_kind", id, "squared");
    if (kind == "squared") spec.loss_kind = MlpLossKind::Squared;
    else if (kind == "cross_entropy") spec.loss_kind = MlpLossKind::CrossEntropy;
    else throw InvalidSpecError("mlp: loss_kind must be squared or cross_entropy, got '" + kind + "'");
    SyntheticDataSpec data;
    data.n_samples = get_count(params, "n_samples", id, 64.0);
    data.seed = get_count(params, "data_seed", id, 0.0);
    data.target_scale = get_number(params, "target_scale", id, 1.0);
    data.input_dim = spec.layers.front();
    data.output_dim = spec.layers.back();
    data.loss_kind = spec.loss_kind;
    const std::string teacher = get_string(params, "teacher", id, "sine");
    if (teacher == "sine") data.teacher = Teacher::Sine;
    else if (teacher == "linear") data.teacher = Teacher::Linear;
    else throw InvalidSpecError("mlp: teacher must be sine or linear, got '" + teacher + "'");
    return make_mlp_loss(spec, make_synthetic_dataset(data));
  }
  throw InvalidSpecError("unknown loss id '" + id + "'");
}

}  // namespace eigfilter
