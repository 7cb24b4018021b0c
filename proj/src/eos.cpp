#include <cmath>
#include <cstdio>
#include <ostream>

#include "eigfilter/harness.hpp"
#include "eigfilter/spectral.hpp"

namespace eigfilter {
namespace {

EosPoint probe(const Loss& loss, const Vector& x, std::size_t step_index, const EosConfig& cfg) {
  EosPoint p;
  p.step = step_index;
  p.loss = loss.value(x);
  const std::size_t k = std::min(cfg.top_k, loss.dim());
  const TopSpectrum top = top_hessian_eigenvalues(loss, x, k, cfg.lanczos_tol, 300, cfg.init_seed);
  p.top.assign(top.values.data(), top.values.data() + top.values.size());
  return p;
}

}  // namespace

EosResult eos_experiment(const EosConfig& cfg) {
  cfg.optimizer.validate();
  if (cfg.probe_every == 0) throw std::invalid_argument("eos_experiment: probe_every must be positive");
  SyntheticDataSpec data = cfg.data;
  data.input_dim = cfg.mlp.layers.front();
  data.output_dim = cfg.mlp.layers.back();
  data.loss_kind = cfg.mlp.loss_kind;
  const LossPtr loss = make_mlp_loss(cfg.mlp, make_synthetic_dataset(data));

  EosResult result;
  AugmentedState s = AugmentedState::at(mlp_initial_parameters(cfg.mlp.layers, cfg.init_seed));
  result.series.push_back(probe(*loss, s.x, 0, cfg));
  std::size_t done = 0;
  for (std::size_t k = 1; k <= cfg.epochs; ++k) {
    try {
      s = step(cfg.optimizer, *loss, s);
    } catch (const DivergenceError&) {
      result.diverged = true;
      break;
    }
    if (!s.x.allFinite() || !std::isfinite(loss->value(s.x)) || s.x.norm() > 1e8) {
      result.diverged = true;
      break;
    }
    done = k;
    if (k % cfg.probe_every == 0 || k == cfg.epochs) result.series.push_back(probe(*loss, s.x, k, cfg));
  }
  if (result.diverged) {
    result.final_params = s.x;
    result.final_lambda_max = std::numeric_limits<double>::quiet_NaN();
    result.saturation_ratio = std::numeric_limits<double>::quiet_NaN();
    return result;
  }
  if (result.series.back().step != done) result.series.push_back(probe(*loss, s.x, done, cfg));
  result.final_params = s.x;
  result.final_lambda_max = result.series.back().top.front();
  result.saturation_ratio = result.final_lambda_max / filter_bound(cfg.optimizer).positive_upper();
  return result;
}

void write_eos_csv(std::ostream& out, const EosResult& result) {
  std::size_t k = 0;
  for (const auto& p : result.series) k = std::max(k, p.top.size());
  out << "step,loss";
  for (std::size_t i = 0; i < k; ++i) out << ",lam" << i + 1;
  out << '\n';
  char buf[40];
  for (const auto& p : result.series) {
    std::snprintf(buf, sizeof buf, "%.12g", p.loss);
    out << p.step << ',' << buf;
    for (std::size_t i = 0; i < k; ++i) {
      out << ',';
      if (i < p.top.size()) {
        std::snprintf(buf, sizeof buf, "%.12g", p.top[i]);
        out << buf;
      }
    }
    out << '\n';
  }
}

}  // namespace eigfilter
