#include "eigfilter/config.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace eigfilter::cli {
namespace {

int line_of(const YAML::Node& node) { return node.Mark().is_null() ? 0 : node.Mark().line + 1; }

void require_map(const YAML::Node& node, const std::string& what) {
  if (!node.IsMap()) throw ConfigError(what + " must be a mapping", line_of(node));
}

void reject_unknown(const YAML::Node& node, const std::string& section, const std::set<std::string>& allowed) {
  require_map(node, section);
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + section, line_of(kv.first));
  }
}

double as_double(const YAML::Node& node, const std::string& key) {
  try {
    return node.as<double>();
  } catch (const YAML::Exception&) {
    throw ConfigError("'" + key + "' must be a number", line_of(node));
  }
}

std::size_t as_count(const YAML::Node& node, const std::string& key) {
  const double v = as_double(node, key);
  if (v < 0 || v != std::floor(v)) throw ConfigError("'" + key + "' must be a non-negative integer", line_of(node));
  return static_cast<std::size_t>(v);
}

std::string as_string(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) throw ConfigError("'" + key + "' must be a string", line_of(node));
  return node.as<std::string>();
}

std::vector<double> as_doubles(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) throw ConfigError("'" + key + "' must be a list of numbers", line_of(node));
  std::vector<double> out;
  for (const auto& item : node) out.push_back(as_double(item, key));
  return out;
}

OptimizerKind as_kind(const YAML::Node& node, const std::string& key) {
  try {
    return parse_optimizer_kind(as_string(node, key));
  } catch (const InvalidSpecError& e) {
    throw ConfigError(e.what(), line_of(node));
  }
}

std::vector<OptimizerKind> as_kinds(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) throw ConfigError("'" + key + "' must be a list of optimizer kinds", line_of(node));
  std::vector<OptimizerKind> out;
  for (const auto& item : node) out.push_back(as_kind(item, key));
  return out;
}

template <typename Fn>
void with_line(const YAML::Node& node, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what(), line_of(node));
  }
}

LossSection parse_loss(const YAML::Node& node) {
  require_map(node, "loss");
  LossSection loss;
  if (!node["id"]) throw ConfigError("loss needs an 'id'", line_of(node));
  loss.id = as_string(node["id"], "id");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (key == "id") continue;
    if (kv.second.IsSequence()) {
      loss.params[key] = as_doubles(kv.second, key);
    } else if (kv.second.IsScalar()) {
      double v = 0;
      if (YAML::convert<double>::decode(kv.second, v)) {
        loss.params[key] = v;
      } else {
        loss.params[key] = kv.second.as<std::string>();
      }
    } else {
      throw ConfigError("loss parameter '" + key + "' must be a scalar or a list", line_of(kv.second));
    }
  }
  try {
    (void)make_loss(loss.id, loss.params);
  } catch (const std::exception& e) {
    // Point at the offending key when the message names one.
    const std::string msg = e.what();
    int line = line_of(node);
    for (const auto& kv : node)
      if (msg.find("'" + kv.first.as<std::string>() + "'") != std::string::npos) line = line_of(kv.first);
    throw ConfigError(msg, line);
  }
  return loss;
}

OptimizerSpec parse_optimizer(const YAML::Node& node) {
  reject_unknown(node, "optimizer", {"kind", "alpha", "beta", "rho", "sam_guard_eps"});
  OptimizerSpec spec;
  if (!node["kind"]) throw ConfigError("optimizer needs a 'kind'", line_of(node));
  spec.kind = as_kind(node["kind"], "kind");
  if (node["alpha"]) spec.alpha = as_double(node["alpha"], "alpha");
  if (node["beta"]) spec.beta = as_double(node["beta"], "beta");
  if (node["rho"]) spec.rho = as_double(node["rho"], "rho");
  if (node["sam_guard_eps"]) spec.sam_guard_eps = as_double(node["sam_guard_eps"], "sam_guard_eps");
  with_line(node, [&] { spec.validate(); });
  return spec;
}

StopCriteria parse_stop(const YAML::Node& node) {
  reject_unknown(node, "stop", {"max_iters", "fixed_point_tol", "window", "blowup_radius", "tail_length"});
  StopCriteria stop;
  if (node["max_iters"]) stop.max_iters = as_count(node["max_iters"], "max_iters");
  if (node["fixed_point_tol"]) stop.fixed_point_tol = as_double(node["fixed_point_tol"], "fixed_point_tol");
  if (node["window"]) stop.window = as_count(node["window"], "window");
  if (node["blowup_radius"]) stop.blowup_radius = as_double(node["blowup_radius"], "blowup_radius");
  if (node["tail_length"]) stop.tail_length = as_count(node["tail_length"], "tail_length");
  if (!(stop.fixed_point_tol > 0) || stop.window == 0 || !(stop.blowup_radius > 0))
    throw ConfigError("stop: fixed_point_tol, window and blowup_radius must be positive", line_of(node));
  return stop;
}

// Log-uniform step sizes drawn from a seed, for sweeps over "random" alpha.
std::vector<double> parse_alpha_range(const YAML::Node& node) {
  reject_unknown(node, "alpha_range", {"lo", "hi", "count", "seed"});
  for (const char* k : {"lo", "hi", "count"})
    if (!node[k]) throw ConfigError(std::string("alpha_range needs '") + k + "'", line_of(node));
  const double lo = as_double(node["lo"], "lo");
  const double hi = as_double(node["hi"], "hi");
  const std::size_t count = as_count(node["count"], "count");
  const std::uint64_t seed = node["seed"] ? as_count(node["seed"], "seed") : 0;
  if (!(lo > 0) || !(hi >= lo)) throw ConfigError("alpha_range needs 0 < lo <= hi", line_of(node));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  std::vector<double> out(count);
  for (auto& a : out) a = std::exp(u(rng));
  return out;
}

SweepConfig parse_sweep(const YAML::Node& node) {
  reject_unknown(node, "sweep",
                 {"kinds", "alphas", "alpha_range", "betas", "rhos", "n_inits", "init_box", "master_seed"});
  SweepConfig cfg;
  if (!node["kinds"]) throw ConfigError("sweep needs 'kinds'", line_of(node));
  cfg.kinds = as_kinds(node["kinds"], "kinds");
  if (node["alphas"]) cfg.alphas = as_doubles(node["alphas"], "alphas");
  if (node["alpha_range"]) {
    const auto extra = parse_alpha_range(node["alpha_range"]);
    cfg.alphas.insert(cfg.alphas.end(), extra.begin(), extra.end());
  }
  if (node["betas"]) cfg.betas = as_doubles(node["betas"], "betas");
  if (node["rhos"]) cfg.rhos = as_doubles(node["rhos"], "rhos");
  if (node["n_inits"]) cfg.n_inits = as_count(node["n_inits"], "n_inits");
  if (node["init_box"]) cfg.init_box = as_double(node["init_box"], "init_box");
  if (node["master_seed"]) cfg.master_seed = as_count(node["master_seed"], "master_seed");
  if (!(cfg.init_box > 0)) throw ConfigError("sweep: init_box must be positive", line_of(node));
  with_line(node, [&] { (void)expand_grid(cfg); });
  return cfg;
}

DerivcheckSection parse_derivcheck(const YAML::Node& node) {
  reject_unknown(node, "derivcheck", {"n_probes", "tol", "box", "seed"});
  DerivcheckSection d;
  if (node["n_probes"]) d.n_probes = as_count(node["n_probes"], "n_probes");
  if (node["tol"]) d.tol = as_double(node["tol"], "tol");
  if (node["box"]) d.box = as_double(node["box"], "box");
  if (node["seed"]) d.seed = as_count(node["seed"], "seed");
  if (!(d.tol > 0) || !(d.box > 0)) throw ConfigError("derivcheck: tol and box must be positive", line_of(node));
  return d;
}

ScanSection parse_scan(const YAML::Node& node) {
  reject_unknown(node, "scan", {"lo", "hi", "n_grid", "grid_tol", "refine_tol"});
  ScanSection s;
  if (node["lo"]) s.scan.lo = as_double(node["lo"], "lo");
  if (node["hi"]) s.scan.hi = as_double(node["hi"], "hi");
  if (node["n_grid"]) s.scan.n_grid = as_count(node["n_grid"], "n_grid");
  if (node["grid_tol"]) s.scan.grid_tol = as_double(node["grid_tol"], "grid_tol");
  if (node["refine_tol"]) s.scan.refine_tol = as_double(node["refine_tol"], "refine_tol");
  if (!(s.scan.hi > s.scan.lo) || s.scan.n_grid < 2) throw ConfigError("scan: need lo < hi and n_grid >= 2", line_of(node));
  return s;
}

BoundarySection parse_boundary(const YAML::Node& node) {
  reject_unknown(node, "boundary",
                 {"kind", "rho", "betas", "alpha_lambda_lo", "alpha_lambda_hi", "alpha_lambda_n", "iterations",
                  "tolerance"});
  BoundarySection b;
  if (node["kind"]) b.kind = as_kind(node["kind"], "kind");
  if (node["rho"]) b.rho = as_double(node["rho"], "rho");
  if (node["betas"]) b.betas = as_doubles(node["betas"], "betas");
  if (node["alpha_lambda_lo"]) b.alpha_lambda_lo = as_double(node["alpha_lambda_lo"], "alpha_lambda_lo");
  if (node["alpha_lambda_hi"]) b.alpha_lambda_hi = as_double(node["alpha_lambda_hi"], "alpha_lambda_hi");
  if (node["alpha_lambda_n"]) b.alpha_lambda_n = as_count(node["alpha_lambda_n"], "alpha_lambda_n");
  if (node["iterations"]) b.iterations = as_count(node["iterations"], "iterations");
  if (node["tolerance"]) b.tolerance = as_double(node["tolerance"], "tolerance");
  if (b.kind == OptimizerKind::SAMExperimental) throw ConfigError("boundary: sam has no prediction", line_of(node));
  if (!(b.alpha_lambda_hi > b.alpha_lambda_lo) || !(b.alpha_lambda_lo > 0) || b.alpha_lambda_n < 2)
    throw ConfigError("boundary: need 0 < alpha_lambda_lo < alpha_lambda_hi and alpha_lambda_n >= 2", line_of(node));
  with_line(node, [&] {
    for (double beta : b.betas) {
      OptimizerSpec spec{b.kind, 1.0, beta, uses_rho(b.kind) ? b.rho : 0.0};
      spec.validate();
    }
  });
  return b;
}

EosSection parse_eos(const YAML::Node& node) {
  reject_unknown(node, "eos", {"layers", "activation", "loss_kind", "n_samples", "data_seed", "teacher",
                               "target_scale", "init_seed", "epochs", "probe_every", "top_k"});
  EosSection s;
  EosConfig& e = s.eos;
  if (!node["layers"]) throw ConfigError("eos needs 'layers'", line_of(node));
  for (double w : as_doubles(node["layers"], "layers")) {
    if (w < 1 || w != std::floor(w)) throw ConfigError("eos: layer widths must be positive integers", line_of(node["layers"]));
    e.mlp.layers.push_back(static_cast<std::size_t>(w));
  }
  if (e.mlp.layers.size() < 2) throw ConfigError("eos: need at least two layer widths", line_of(node["layers"]));
  if (node["activation"]) {
    const auto a = as_string(node["activation"], "activation");
    if (a == "tanh") e.mlp.activation = Activation::Tanh;
    else if (a == "softplus") e.mlp.activation = Activation::Softplus;
    else throw ConfigError("eos: activation must be tanh or softplus", line_of(node["activation"]));
  }
  if (node["loss_kind"]) {
    const auto k = as_string(node["loss_kind"], "loss_kind");
    if (k == "squared") e.mlp.loss_kind = MlpLossKind::Squared;
    else if (k == "cross_entropy") e.mlp.loss_kind = MlpLossKind::CrossEntropy;
    else throw ConfigError("eos: loss_kind must be squared or cross_entropy", line_of(node["loss_kind"]));
  }
  if (node["teacher"]) {
    const auto t = as_string(node["teacher"], "teacher");
    if (t == "sine") e.data.teacher = Teacher::Sine;
    else if (t == "linear") e.data.teacher = Teacher::Linear;
    else throw ConfigError("eos: teacher must be sine or linear", line_of(node["teacher"]));
  }
  if (node["n_samples"]) e.data.n_samples = as_count(node["n_samples"], "n_samples");
  if (node["data_seed"]) e.data.seed = as_count(node["data_seed"], "data_seed");
  if (node["target_scale"]) e.data.target_scale = as_double(node["target_scale"], "target_scale");
  if (node["init_seed"]) e.init_seed = as_count(node["init_seed"], "init_seed");
  if (node["epochs"]) e.epochs = as_count(node["epochs"], "epochs");
  if (node["probe_every"]) e.probe_every = as_count(node["probe_every"], "probe_every");
  if (node["top_k"]) e.top_k = as_count(node["top_k"], "top_k");
  if (e.probe_every == 0 || e.top_k == 0) throw ConfigError("eos: probe_every and top_k must be positive", line_of(node));
  if (mlp_parameter_count(e.mlp.layers) > kDenseHessianCap)
    throw ConfigError("eos: parameter count exceeds the cap of " + std::to_string(kDenseHessianCap),
                      line_of(node["layers"]));
  return s;
}

ScalingSection parse_scaling(const YAML::Node& node) {
  reject_unknown(node, "scaling", {"kinds", "rho", "beta", "alphas"});
  ScalingSection s;
  if (node["kinds"]) s.kinds = as_kinds(node["kinds"], "kinds");
  if (node["rho"]) s.rho = as_double(node["rho"], "rho");
  if (node["beta"]) s.beta = as_double(node["beta"], "beta");
  if (node["alphas"]) s.alphas = as_doubles(node["alphas"], "alphas");
  for (OptimizerKind k : s.kinds)
    if (k == OptimizerKind::SAMExperimental) throw ConfigError("scaling: sam has no bound", line_of(node["kinds"]));
  if (!(s.rho > 0) || !(s.beta >= 0 && s.beta < 1)) throw ConfigError("scaling: need rho > 0 and 0 <= beta < 1", line_of(node));
  return s;
}

}  // namespace

Config parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("malformed YAML: " + e.msg, e.mark.line + 1);
  }
  Config cfg;
  if (root.IsNull()) return cfg;
  reject_unknown(root, "config",
                 {"loss", "optimizer", "sweep", "stop", "run", "derivcheck", "scan", "boundary", "eos", "scaling",
                  "output"});
  if (root["loss"]) cfg.loss = parse_loss(root["loss"]);
  if (root["optimizer"]) cfg.optimizer = parse_optimizer(root["optimizer"]);
  if (root["stop"]) cfg.stop = parse_stop(root["stop"]);
  if (root["sweep"]) {
    cfg.sweep = parse_sweep(root["sweep"]);
    if (!cfg.loss) throw ConfigError("sweep requires a loss section", line_of(root["sweep"]));
    cfg.sweep->loss_id = cfg.loss->id;
    cfg.sweep->loss_params = cfg.loss->params;
    cfg.sweep->stop = cfg.stop;
  }
  if (root["run"]) {
    const YAML::Node& r = root["run"];
    reject_unknown(r, "run", {"x0"});
    if (r["x0"]) cfg.x0 = as_doubles(r["x0"], "x0");
    if (cfg.loss && !cfg.x0.empty() && cfg.x0.size() != make_loss(cfg.loss->id, cfg.loss->params)->dim())
      throw ConfigError("run: x0 length does not match the loss dimension", line_of(r["x0"]));
  }
  if (root["derivcheck"]) cfg.derivcheck = parse_derivcheck(root["derivcheck"]);
  if (root["scan"]) cfg.scan = parse_scan(root["scan"]);
  if (root["boundary"]) cfg.boundary = parse_boundary(root["boundary"]);
  if (root["eos"]) cfg.eos = parse_eos(root["eos"]);
  if (root["scaling"]) cfg.scaling = parse_scaling(root["scaling"]);
  if (root["output"]) {
    const YAML::Node& o = root["output"];
    reject_unknown(o, "output", {"dir"});
    if (o["dir"]) cfg.output_dir = as_string(o["dir"], "dir");
  }
  if (cfg.eos) {
    if (!cfg.optimizer) throw ConfigError("eos requires an optimizer section", line_of(root["eos"]));
    cfg.eos->eos.optimizer = *cfg.optimizer;
  }
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'", 0);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace eigfilter::cli
