#include "cprl/config.hpp"

#include <cmath>
#include <functional>
#include <map>

#include "cprl/error.hpp"
#include "cprl/matrix_io.hpp"
#include "cprl/text_files.hpp"

namespace cprl {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw FormatError("cannot parse boolean '" + std::string(v) + "'");
}

int parse_int(std::string_view v) { return static_cast<int>(parse_index(v)); }

using Setter = std::function<void(ModelConfig&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"alpha", [](ModelConfig& c, std::string_view v) { c.alpha = parse_double(v); }},
      {"beta", [](ModelConfig& c, std::string_view v) { c.beta = parse_double(v); }},
      {"gamma0", [](ModelConfig& c, std::string_view v) { c.gamma0 = parse_double(v); }},
      {"eta", [](ModelConfig& c, std::string_view v) { c.eta = parse_double(v); }},
      {"mu", [](ModelConfig& c, std::string_view v) { c.mu = parse_double(v); }},
      {"dict_size", [](ModelConfig& c, std::string_view v) { c.dict_size = parse_int(v); }},
      {"sigma", [](ModelConfig& c, std::string_view v) { c.sigma = parse_double(v); }},
      {"regularizer", [](ModelConfig& c, std::string_view v) { c.regularizer = parse_regularizer(v); }},
      {"laplacian_form", [](ModelConfig& c, std::string_view v) { c.laplacian_form = parse_laplacian_form(v); }},
      {"max_outer_iters", [](ModelConfig& c, std::string_view v) { c.max_outer_iters = parse_int(v); }},
      {"rel_tol", [](ModelConfig& c, std::string_view v) { c.rel_tol = parse_double(v); }},
      {"rng_seed", [](ModelConfig& c, std::string_view v) { c.rng_seed = static_cast<std::uint64_t>(parse_index(v)); }},
      {"order_margin", [](ModelConfig& c, std::string_view v) { c.order_margin = parse_double(v); }},
      {"literal_sp_b", [](ModelConfig& c, std::string_view v) { c.literal_sp_b = parse_bool(v); }},
      {"pace_saturation", [](ModelConfig& c, std::string_view v) { c.pace_saturation = parse_double(v); }},
      {"warmup_iters", [](ModelConfig& c, std::string_view v) { c.warmup_iters = parse_int(v); }},
      {"code_max_inner_iters", [](ModelConfig& c, std::string_view v) { c.code_solver.max_inner_iters = parse_int(v); }},
      {"code_step_rule",
       [](ModelConfig& c, std::string_view v) {
         if (v == "fixed") c.code_solver.step_rule = StepRule::fixed;
         else if (v == "backtracking") c.code_solver.step_rule = StepRule::backtracking;
         else throw FormatError("code_step_rule must be fixed or backtracking");
       }},
      {"code_initial_step", [](ModelConfig& c, std::string_view v) { c.code_solver.initial_step = parse_double(v); }},
      {"code_shrink", [](ModelConfig& c, std::string_view v) { c.code_solver.shrink = parse_double(v); }},
      {"code_kkt_tol", [](ModelConfig& c, std::string_view v) { c.code_solver.kkt_tol = parse_double(v); }},
      {"code_accelerated", [](ModelConfig& c, std::string_view v) { c.code_solver.accelerated = parse_bool(v); }},
  };
  return table;
}

}  // namespace

void CodeSolverConfig::validate() const {
  if (max_inner_iters < 1) throw std::invalid_argument("code_max_inner_iters must be >= 1");
  if (!(initial_step > 0.0)) throw std::invalid_argument("code step size must be > 0");
  if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("code_shrink must lie in (0, 1)");
  if (!(kkt_tol >= 0.0)) throw std::invalid_argument("code_kkt_tol must be >= 0");
}

void ModelConfig::validate() const {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
  };
  require(alpha >= 0.0 && std::isfinite(alpha), "alpha must be >= 0");
  require(beta >= 0.0 && std::isfinite(beta), "beta must be >= 0");
  require(gamma0 >= 0.0 && std::isfinite(gamma0), "gamma0 must be >= 0 (0 disables self-pacing)");
  require(eta > 1.0 && std::isfinite(eta), "eta must be > 1");
  require(mu >= 0.0 && std::isfinite(mu), "mu must be >= 0");
  require(dict_size >= 1, "dict_size must be >= 1");
  require(sigma > 0.0 && std::isfinite(sigma), "sigma must be > 0");
  require(max_outer_iters >= 1, "max_outer_iters must be >= 1");
  require(rel_tol >= 0.0, "rel_tol must be >= 0");
  require(order_margin >= 0.0 && order_margin < 1.0, "order_margin must lie in [0, 1)");
  require(pace_saturation > 0.0 && pace_saturation <= 1.0, "pace_saturation must lie in (0, 1]");
  require(warmup_iters >= 1, "warmup_iters must be >= 1");
  code_solver.validate();
}

ModelConfig parse_config(std::string_view text, ModelConfig cfg) {
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    auto line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError("config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    if (it == setters().end()) {
      throw FormatError("config line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
    it->second(cfg, value);
  }
  return cfg;
}

ModelConfig load_config(const std::filesystem::path& path, ModelConfig base) {
  return parse_config(read_file(path), std::move(base));
}

std::string encode_config(const ModelConfig& c) {
  std::string out;
  auto kv = [&out](std::string_view k, const std::string& v) {
    out.append(k).append(" = ").append(v).push_back('\n');
  };
  kv("alpha", format_double(c.alpha));
  kv("beta", format_double(c.beta));
  kv("gamma0", format_double(c.gamma0));
  kv("eta", format_double(c.eta));
  kv("mu", format_double(c.mu));
  kv("dict_size", std::to_string(c.dict_size));
  kv("sigma", format_double(c.sigma));
  kv("regularizer", std::string(to_string(c.regularizer)));
  kv("laplacian_form", std::string(to_string(c.laplacian_form)));
  kv("max_outer_iters", std::to_string(c.max_outer_iters));
  kv("rel_tol", format_double(c.rel_tol));
  kv("rng_seed", std::to_string(c.rng_seed));
  kv("order_margin", format_double(c.order_margin));
  kv("literal_sp_b", c.literal_sp_b ? "true" : "false");
  kv("pace_saturation", format_double(c.pace_saturation));
  kv("warmup_iters", std::to_string(c.warmup_iters));
  kv("code_max_inner_iters", std::to_string(c.code_solver.max_inner_iters));
  kv("code_step_rule", c.code_solver.step_rule == StepRule::fixed ? "fixed" : "backtracking");
  kv("code_initial_step", format_double(c.code_solver.initial_step));
  kv("code_shrink", format_double(c.code_solver.shrink));
  kv("code_kkt_tol", format_double(c.code_solver.kkt_tol));
  kv("code_accelerated", c.code_solver.accelerated ? "true" : "false");
  return out;
}

ModelConfig apply_preset(ModelConfig cfg, std::string_view preset) {
  if (preset == "cufs") {
    cfg.alpha = 1.0;
    cfg.beta = 5.0;
    cfg.dict_size = 50;
  } else if (preset == "flickr15k") {
    cfg.alpha = 2.0;
    cfg.beta = 25.0;
    cfg.gamma0 = 0.5;
    cfg.dict_size = 1000;
  } else if (preset == "queenmary") {
    cfg.alpha = 6.0;
    cfg.beta = 8.0;
    cfg.gamma0 = 1.0;
    cfg.dict_size = 1500;
  } else {
    throw std::invalid_argument("unknown preset '" + std::string(preset) + "'");
  }
  return cfg;
}

std::string_view to_string(Regularizer r) { return r == Regularizer::A ? "A" : "B"; }
std::string_view to_string(LaplacianForm f) { return f == LaplacianForm::paper ? "paper" : "exact"; }

Regularizer parse_regularizer(std::string_view s) {
  if (s == "A" || s == "a") return Regularizer::A;
  if (s == "B" || s == "b") return Regularizer::B;
  throw FormatError("regularizer must be A or B");
}

LaplacianForm parse_laplacian_form(std::string_view s) {
  if (s == "paper") return LaplacianForm::paper;
  if (s == "exact") return LaplacianForm::exact;
  throw FormatError("laplacian_form must be paper or exact");
}

}  // namespace cprl
