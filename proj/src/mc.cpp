#include "enlarge/mc.hpp"

#include "enlarge/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <set>

namespace enlarge::mc {

namespace {

Error config_error(const std::string& what) { return Error(ErrorCode::kConfigError, what); }

double loading_of(const MCConfig& cfg, int k, double zh) {
  const double alpha = cfg.defaults[k].alpha;
  return cfg.loading == Loading::kDamped ? alpha * (1.0 - zh) : alpha;
}

struct PathMonitor {
  int z_violations = 0;
  int linear_nonpositive = 0;
  double max_inv_z = 0.0;
  double max_inv_one_minus_z = 0.0;
};

// One path into slot p of the bundle.
PathMonitor simulate_one(const MCConfig& cfg, PathBundle& b, int p) {
  PathMonitor mon;
  const int steps = cfg.steps;
  const int nd = b.n_defaults;
  const double dt = cfg.dt;
  const double theta = cfg.mu / cfg.sigma;
  std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(b.first + p)));
  std::normal_distribution<double> normal(0.0, std::sqrt(dt));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::poisson_distribution<int> jumps(cfg.jump_rate * dt);

  b.w[b.at(p, 0)] = 0.0;
  b.s[b.at(p, 0)] = cfg.s0;
  std::vector<double> yf(steps + 1, 1.0);
  for (int k = 0; k < nd; ++k) b.z[b.at(k, p, 0)] = 1.0;

  for (int n = 1; n <= steps; ++n) {
    double dw = normal(rng);
    if (cfg.jump_rate > 0.0) dw += cfg.jump_size * (jumps(rng) - cfg.jump_rate * dt);
    b.w[b.at(p, n)] = b.w[b.at(p, n - 1)] + dw;
    b.s[b.at(p, n)] = b.s[b.at(p, n - 1)] * std::exp((cfg.mu - 0.5 * cfg.sigma * cfg.sigma) * dt + cfg.sigma * dw);
    yf[n] = std::exp(-theta * dw - 0.5 * theta * theta * dt);
    for (int k = 0; k < nd; ++k) {
      const double zh = b.z[b.at(k, p, n - 1)] * std::exp(-cfg.defaults[k].lambda * dt);
      const double a = loading_of(cfg, k, zh);
      double z = zh * std::exp(a * dw - 0.5 * a * a * dt);
      if (z > 1.0 || z <= 0.0) {
        ++mon.z_violations;
        z = std::clamp(z, std::numeric_limits<double>::min(), 1.0);
      }
      b.zh[b.at(k, p, n)] = zh;
      b.z[b.at(k, p, n)] = z;
    }
  }

  // tau from the terminal conditional law: mass of step u is the hazard mass
  // times the later diffusion rescalings.
  std::vector<double> suffix(steps + 2, 1.0);
  for (int k = 0; k < nd; ++k) {
    for (int n = steps; n >= 1; --n) {
      const double zh = b.zh[b.at(k, p, n)];
      const double r = 1.0 - zh > 0.0 ? (1.0 - b.z[b.at(k, p, n)]) / (1.0 - zh) : 1.0;
      suffix[n] = suffix[n + 1] * r;
    }
    const double u = unif(rng);
    int tau = kAlive;
    double acc = b.z[b.at(k, p, steps)];
    if (u >= acc) {
      int last = kAlive;
      for (int n = 1; n <= steps; ++n) {
        const double mass = (b.z[b.at(k, p, n - 1)] - b.zh[b.at(k, p, n)]) * suffix[n];
        if (mass <= 0.0) continue;
        last = n;
        acc += mass;
        if (u < acc) {
          tau = n;
          break;
        }
      }
      if (tau == kAlive) tau = last;  // rounding in the cumulative sum
    }
    b.tau[static_cast<std::size_t>(k) * b.count + p] = tau;
  }

  // Deflator for the first default's enlargement: Y_F times the inverse
  // conditional density of each diffusion substep.
  b.y[b.at(p, 0)] = 1.0;
  const int tau0 = nd > 0 ? b.tau[p] : kAlive;
  for (int n = 1; n <= steps; ++n) {
    double factor = yf[n];
    if (nd > 0) {
      const double zh = b.zh[b.at(0, p, n)];
      const double z = b.z[b.at(0, p, n)];
      const double a = loading_of(cfg, 0, zh);
      const double dn = z - zh;
      const double var = zh * zh * std::expm1(a * a * dt);
      const bool pre = tau0 == kAlive || tau0 > n;
      const double phi = pre ? 1.0 / zh : (1.0 - zh > 0.0 ? -1.0 / (1.0 - zh) : 0.0);
      if (1.0 - phi * (dn - phi * var) <= 0.0) ++mon.linear_nonpositive;
      if (pre) {
        factor *= zh / z;
        mon.max_inv_z = std::max(mon.max_inv_z, 1.0 / z);
      } else {
        factor *= 1.0 - z > 0.0 ? (1.0 - zh) / (1.0 - z) : 1.0;
        mon.max_inv_one_minus_z = std::max(mon.max_inv_one_minus_z, 1.0 / (1.0 - z));
      }
    }
    b.y[b.at(p, n)] = b.y[b.at(p, n - 1)] * factor;
  }
  return mon;
}

PathBundle empty_bundle(const MCConfig& cfg, int first, int count) {
  cfg.validate();
  PathBundle b;
  b.first = first;
  b.count = count;
  b.steps = cfg.steps;
  b.n_defaults = static_cast<int>(cfg.defaults.size());
  const std::size_t per = static_cast<std::size_t>(count) * (cfg.steps + 1);
  b.w.resize(per);
  b.s.resize(per);
  b.y.resize(per);
  b.z.resize(per * b.n_defaults);
  b.zh.resize(per * b.n_defaults);
  b.tau.resize(static_cast<std::size_t>(count) * b.n_defaults);
  return b;
}

void fold_monitors(PathBundle& b, const std::vector<PathMonitor>& m) {
  for (const auto& x : m) {
    b.z_violations += x.z_violations;
    b.linear_nonpositive += x.linear_nonpositive;
    b.max_inv_z = std::max(b.max_inv_z, x.max_inv_z);
    b.max_inv_one_minus_z = std::max(b.max_inv_one_minus_z, x.max_inv_one_minus_z);
  }
}

std::string required_string(const nlohmann::json& j, const char* key, const std::set<std::string>& allowed) {
  const auto v = j.at(key).get<std::string>();
  if (!allowed.count(v)) throw config_error(std::string("bad value for ") + key + ": " + v);
  return v;
}

}  // namespace

void MCConfig::validate() const {
  if (paths < 1) throw config_error("paths must be positive");
  if (steps < 1) throw config_error("steps must be positive");
  if (!(dt > 0.0)) throw config_error("dt must be positive");
  if (!(sigma > 0.0)) throw config_error("sigma must be positive");
  if (!(s0 > 0.0)) throw config_error("s0 must be positive");
  if (defaults.empty()) throw config_error("at least one default is required");
  for (const auto& d : defaults)
    if (!(d.lambda >= 0.0) || !std::isfinite(d.alpha)) throw config_error("bad default parameters");
  if (time_buckets < 1 || time_buckets > steps) throw config_error("time_buckets must be in [1, steps]");
  if (!(truncation > 0.0)) throw config_error("truncation must be positive");
  if (!(jump_rate >= 0.0)) throw config_error("jump_rate must be nonnegative");
  if (chunk < 1) throw config_error("chunk must be positive");
  if (dump_paths < 0) throw config_error("dump_paths must be nonnegative");
}

MCConfig config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {"seed",         "paths",      "steps",      "dt",        "mu",
                                              "sigma",        "s0",         "defaults",   "loading",   "scheme",
                                              "time_buckets", "truncation", "jump_rate",  "jump_size", "chunk",
                                              "dump_paths"};
  MCConfig cfg;
  try {
    if (!j.is_object()) throw config_error("mc config must be an object");
    for (const auto& [key, _] : j.items())
      if (!known.count(key)) throw config_error("unknown mc key: " + key);
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("paths")) cfg.paths = j.at("paths").get<int>();
    if (j.contains("steps")) cfg.steps = j.at("steps").get<int>();
    if (j.contains("dt")) cfg.dt = j.at("dt").get<double>();
    if (j.contains("mu")) cfg.mu = j.at("mu").get<double>();
    if (j.contains("sigma")) cfg.sigma = j.at("sigma").get<double>();
    if (j.contains("s0")) cfg.s0 = j.at("s0").get<double>();
    if (j.contains("defaults")) {
      cfg.defaults.clear();
      for (const auto& d : j.at("defaults"))
        cfg.defaults.push_back({d.value("lambda", 0.3), d.value("alpha", 0.5)});
    }
    if (j.contains("loading"))
      cfg.loading = required_string(j, "loading", {"damped", "constant"}) == "damped" ? Loading::kDamped
                                                                                       : Loading::kConstant;
    if (j.contains("scheme"))
      cfg.scheme = required_string(j, "scheme", {"split", "joint"}) == "split" ? Scheme::kSplit : Scheme::kJoint;
    if (j.contains("time_buckets")) cfg.time_buckets = j.at("time_buckets").get<int>();
    if (j.contains("truncation")) cfg.truncation = j.at("truncation").get<double>();
    if (j.contains("jump_rate")) cfg.jump_rate = j.at("jump_rate").get<double>();
    if (j.contains("jump_size")) cfg.jump_size = j.at("jump_size").get<double>();
    if (j.contains("chunk")) cfg.chunk = j.at("chunk").get<int>();
    if (j.contains("dump_paths")) cfg.dump_paths = j.at("dump_paths").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw config_error(e.what());
  }
  cfg.validate();
  return cfg;
}

nlohmann::json to_json(const MCConfig& cfg) {
  nlohmann::json d = nlohmann::json::array();
  for (const auto& x : cfg.defaults) d.push_back({{"lambda", x.lambda}, {"alpha", x.alpha}});
  return {{"seed", cfg.seed},
          {"paths", cfg.paths},
          {"steps", cfg.steps},
          {"dt", cfg.dt},
          {"mu", cfg.mu},
          {"sigma", cfg.sigma},
          {"s0", cfg.s0},
          {"defaults", d},
          {"loading", cfg.loading == Loading::kDamped ? "damped" : "constant"},
          {"scheme", cfg.scheme == Scheme::kSplit ? "split" : "joint"},
          {"time_buckets", cfg.time_buckets},
          {"truncation", cfg.truncation},
          {"jump_rate", cfg.jump_rate},
          {"jump_size", cfg.jump_size},
          {"chunk", cfg.chunk},
          {"dump_paths", cfg.dump_paths}};
}

PathBundle simulate_paths_serial(const MCConfig& cfg, int first, int count) {
  PathBundle b = empty_bundle(cfg, first, count);
  std::vector<PathMonitor> mon(count);
  for (int p = 0; p < count; ++p) mon[p] = simulate_one(cfg, b, p);
  fold_monitors(b, mon);
  return b;
}

PathBundle simulate_paths_parallel(const MCConfig& cfg, int first, int count) {
  PathBundle b = empty_bundle(cfg, first, count);
  std::vector<PathMonitor> mon(count);
#pragma omp parallel for schedule(static)
  for (int p = 0; p < count; ++p) mon[p] = simulate_one(cfg, b, p);
  fold_monitors(b, mon);
  return b;
}

MartingaleAccumulator::MartingaleAccumulator(int steps, int buckets, int labels)
    : steps_(steps),
      buckets_(buckets),
      labels_(labels),
      sum_(buckets * labels, 0.0),
      sumsq_(buckets * labels, 0.0),
      hits_(buckets * labels, 0),
      scratch_(buckets * labels, 0.0),
      touched_(buckets * labels, 0) {}

void MartingaleAccumulator::add_path(const double* values, const int* labels) {
  std::fill(scratch_.begin(), scratch_.end(), 0.0);
  std::fill(touched_.begin(), touched_.end(), 0);
  for (int n = 1; n <= steps_; ++n) {
    const int bucket = static_cast<int>(static_cast<long>(n - 1) * buckets_ / steps_);
    const int bin = bucket * labels_ + labels[n - 1];
    scratch_[bin] += values[n] - values[n - 1];
    touched_[bin] = 1;
  }
  for (std::size_t i = 0; i < scratch_.size(); ++i) {
    sum_[i] += scratch_[i];
    sumsq_[i] += scratch_[i] * scratch_[i];
    hits_[i] += touched_[i];
  }
  ++paths_;
}

void MartingaleAccumulator::merge(const MartingaleAccumulator& o) {
  for (std::size_t i = 0; i < sum_.size(); ++i) {
    sum_[i] += o.sum_[i];
    sumsq_[i] += o.sumsq_[i];
    hits_[i] += o.hits_[i];
  }
  paths_ += o.paths_;
}

MartingaleTestResult MartingaleAccumulator::finish(double z_limit) const {
  constexpr long kMinHits = 30;
  MartingaleTestResult r;
  r.pass = true;
  const double np = static_cast<double>(paths_);
  for (int bucket = 0; bucket < buckets_; ++bucket)
    for (int label = 0; label < labels_; ++label) {
      const int i = bucket * labels_ + label;
      BinStat b{bucket, label, hits_[i], 0.0, 0.0, 0.0};
      if (hits_[i] < kMinHits || paths_ < 2) continue;
      // Paths outside the bin contribute a zero sum.
      b.mean = sum_[i] / np;
      const double var = std::max(0.0, (sumsq_[i] - np * b.mean * b.mean) / (np - 1.0));
      b.se = std::sqrt(var / np);
      if (b.se > 0.0)
        b.z = b.mean / b.se;
      else
        b.z = b.mean == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), b.mean);
      r.max_abs_z = std::max(r.max_abs_z, std::abs(b.z));
      if (!(std::abs(b.z) < z_limit)) r.pass = false;
      r.bins.push_back(b);
    }
  return r;
}

MartingaleTestResult statistical_martingale_test(const std::vector<std::vector<double>>& values,
                                                 const std::vector<std::vector<int>>& labels, int buckets,
                                                 int num_labels) {
  constexpr std::size_t kMinPaths = 1000;
  if (values.size() < kMinPaths)
    throw Error(ErrorCode::kInsufficientPaths,
                std::to_string(values.size()) + " paths, need " + std::to_string(kMinPaths));
  if (labels.size() != values.size()) throw Error(ErrorCode::kDimensionMismatch, "labels per path");
  const int steps = static_cast<int>(values.front().size()) - 1;
  if (steps < 1 || buckets < 1 || buckets > steps || num_labels < 1)
    throw Error(ErrorCode::kConfigError, "bad binning");
  MartingaleAccumulator acc(steps, buckets, num_labels);
  for (std::size_t p = 0; p < values.size(); ++p) {
    if (static_cast<int>(values[p].size()) != steps + 1 || static_cast<int>(labels[p].size()) != steps + 1)
      throw Error(ErrorCode::kDimensionMismatch, "path length");
    for (int l : labels[p])
      if (l < 0 || l >= num_labels) throw Error(ErrorCode::kDimensionMismatch, "label out of range");
    acc.add_path(values[p].data(), labels[p].data());
  }
  return acc.finish();
}

void RegressionAccumulator::add(double x, double y) {
  sxy += x * y;
  sxx += x * x;
  syy += y * y;
  sy += y;
  ++n;
}

void RegressionAccumulator::merge(const RegressionAccumulator& o) {
  sxy += o.sxy;
  sxx += o.sxx;
  syy += o.syy;
  sy += o.sy;
  n += o.n;
}

Coefficient RegressionAccumulator::coefficient() const {
  Coefficient c;
  c.samples = n;
  if (n < 2 || sxx <= 0.0) return c;
  c.estimate = sxy / sxx;
  const double rss = std::max(0.0, syy - c.estimate * sxy);
  c.se = std::sqrt(rss / (n - 1) / sxx);
  c.lo = c.estimate - 1.96 * c.se;
  c.hi = c.estimate + 1.96 * c.se;
  c.contains_one = c.lo <= 1.0 && 1.0 <= c.hi;
  return c;
}

double RegressionAccumulator::mean_y_se() const {
  if (n < 2) return 0.0;
  const double m = sy / n;
  return std::sqrt(std::max(0.0, (syy - n * m * m) / (n - 1)) / n);
}

void GammaAccumulator::merge(const GammaAccumulator& o) {
  sa += o.sa;
  sb += o.sb;
  saa += o.saa;
  sbb += o.sbb;
  sab += o.sab;
  paths += o.paths;
  jumps += o.jumps;
}

void SurvivalAccumulator::merge(const SurvivalAccumulator& o) {
  for (std::size_t i = 0; i < sum.size(); ++i) {
    sum[i] += o.sum[i];
    sumsq[i] += o.sumsq[i];
  }
  paths += o.paths;
}

MCStatistics::MCStatistics(const MCConfig& cfg)
    : deflated_asset(cfg.steps, cfg.time_buckets, 2),
      deflator(cfg.steps, cfg.time_buckets, 2),
      driver(cfg.steps, cfg.time_buckets, 1),
      gamma(cfg.defaults.empty() ? 0 : cfg.defaults.size() - 1) {
  survival.sum.assign(cfg.steps + 1, 0.0);
  survival.sumsq.assign(cfg.steps + 1, 0.0);
}

void MCStatistics::add(const PathBundle& b, const MCConfig& cfg) {
  const int steps = b.steps;
  const double dt = cfg.dt;
  std::vector<double> ys(steps + 1);
  std::vector<int> status(steps + 1), zeros(steps + 1, 0);
  for (int p = 0; p < b.count; ++p) {
    const int tau = b.tau[p];
    const auto alive_after = [&](int n) { return tau == kAlive || tau > n; };
    const double* w = &b.w[b.at(p, 0)];
    const double* y = &b.y[b.at(p, 0)];
    const double* s = &b.s[b.at(p, 0)];
    const double* z = &b.z[b.at(0, p, 0)];
    const double* zh = &b.zh[b.at(0, p, 0)];
    for (int n = 0; n <= steps; ++n) {
      ys[n] = y[n] * s[n];
      status[n] = alive_after(n) ? 0 : 1;
    }
    deflated_asset.add_path(ys.data(), status.data());
    deflator.add_path(y, status.data());
    driver.add_path(w, zeros.data());

    double bias = 0.0;
    for (int n = 1; n <= steps; ++n) {
      const double dw = w[n] - w[n - 1];
      const double a = loading_of(cfg, 0, zh[n]);
      const double bracket = zh[n] * a * dt;  // conditional covariance of dZ and dW
      if (cfg.scheme == Scheme::kSplit) {
        if (alive_after(n))
          pre.add(bracket / zh[n], dw);
        else
          post.add(-bracket / (1.0 - zh[n]), dw);
      } else {
        if (alive_after(n - 1))
          pre.add(bracket / z[n - 1], dw);
        else
          post.add(-bracket / (1.0 - z[n - 1]), dw);
      }
      // Joint-scheme template error on alive steps, from the exact coefficient.
      if (alive_after(n - 1) && zh[n] < 1.0)
        bias += bracket / z[n - 1] * ((1.0 - z[n - 1]) / (1.0 - zh[n]) - 1.0);
      const double surv = (alive_after(n) ? 1.0 : 0.0) - z[n];
      survival.sum[n] += surv;
      survival.sumsq[n] += surv * surv;
    }
    joint_bias += bias;

    for (std::size_t lvl = 0; lvl < gamma.size(); ++lvl) {
      const int k1 = static_cast<int>(lvl), k2 = k1 + 1;
      double a_sum = 0.0, b_sum = 0.0;
      long jumps = 0;
      for (int n = 1; n <= steps; ++n) {
        const double dw = w[n] - w[n - 1];
        const double zh1 = b.zh[b.at(k1, p, n)];
        const double dn1 = b.z[b.at(k1, p, n)] - zh1;
        const double dn2 = b.z[b.at(k2, p, n)] - b.zh[b.at(k2, p, n)];
        const double a1 = loading_of(cfg, k1, zh1);
        const double sd = zh1 * std::sqrt(std::expm1(a1 * a1 * dt));
        const bool jump = std::abs(dn1) > cfg.truncation * sd && dn1 != 0.0;
        jumps += jump;
        a_sum += (jump ? dn1 : 0.0) * dn2 * dw;
        b_sum += dn2 * dw;
      }
      auto& g = gamma[lvl];
      g.sa += a_sum;
      g.sb += b_sum;
      g.saa += a_sum * a_sum;
      g.sbb += b_sum * b_sum;
      g.sab += a_sum * b_sum;
      ++g.paths;
      g.jumps += jumps;
    }
  }
  survival.paths += b.count;
  paths += b.count;
  z_violations += b.z_violations;
  linear_nonpositive += b.linear_nonpositive;
  max_inv_z = std::max(max_inv_z, b.max_inv_z);
  max_inv_one_minus_z = std::max(max_inv_one_minus_z, b.max_inv_one_minus_z);
}

void MCStatistics::merge(const MCStatistics& o) {
  deflated_asset.merge(o.deflated_asset);
  deflator.merge(o.deflator);
  driver.merge(o.driver);
  pre.merge(o.pre);
  post.merge(o.post);
  for (std::size_t i = 0; i < gamma.size(); ++i) gamma[i].merge(o.gamma[i]);
  survival.merge(o.survival);
  joint_bias += o.joint_bias;
  paths += o.paths;
  z_violations += o.z_violations;
  linear_nonpositive += o.linear_nonpositive;
  max_inv_z = std::max(max_inv_z, o.max_inv_z);
  max_inv_one_minus_z = std::max(max_inv_one_minus_z, o.max_inv_one_minus_z);
}

DriftRegression dies_drift_regression(const MCStatistics& st) {
  DriftRegression r;
  r.pre = st.pre.coefficient();
  r.post = st.post.coefficient();
  r.pre_mean_drift = st.pre.mean_y();
  r.pre_mean_se = st.pre.mean_y_se();
  return r;
}

GammaEstimate gamma_estimate(const MCStatistics& st, int level) {
  GammaEstimate e;
  if (level < 1 || level > static_cast<int>(st.gamma.size())) return e;
  const auto& g = st.gamma[level - 1];
  e.available = true;
  e.jumps = g.jumps;
  if (g.sb == 0.0) return e;
  e.gamma = g.sa / g.sb;
  // Ratio estimator, sandwich variance over paths.
  const double resid = std::max(0.0, g.saa - 2.0 * e.gamma * g.sab + e.gamma * e.gamma * g.sbb);
  e.se = std::sqrt(resid) / std::abs(g.sb);
  e.within_two_se = std::abs(e.gamma) <= 2.0 * e.se;
  return e;
}

namespace {

MCRun run_chunks(const MCConfig& cfg, bool keep_dump, bool parallel) {
  cfg.validate();
  const int chunks = (cfg.paths + cfg.chunk - 1) / cfg.chunk;
  std::vector<MCStatistics> part(chunks, MCStatistics(cfg));
  const int dump_chunks = keep_dump ? (std::min(cfg.dump_paths, cfg.paths) + cfg.chunk - 1) / cfg.chunk : 0;
  std::vector<PathBundle> dumped(dump_chunks);
  auto work = [&](int c) {
    const int first = c * cfg.chunk;
    const int count = std::min(cfg.chunk, cfg.paths - first);
    PathBundle b = simulate_paths_serial(cfg, first, count);
    part[c].add(b, cfg);
    if (c < dump_chunks) dumped[c] = std::move(b);
  };
  if (parallel) {
#pragma omp parallel for schedule(dynamic)
    for (int c = 0; c < chunks; ++c) work(c);
  } else {
    for (int c = 0; c < chunks; ++c) work(c);
  }
  MCRun run{MCStatistics(cfg), std::move(dumped)};
  for (const auto& p : part) run.stats.merge(p);
  return run;
}

}  // namespace

MCRun run_statistics(const MCConfig& cfg, bool keep_dump) { return run_chunks(cfg, keep_dump, true); }

MCRun run_statistics_serial(const MCConfig& cfg, bool keep_dump) { return run_chunks(cfg, keep_dump, false); }

void write_paths_csv(const std::vector<PathBundle>& bundles, const std::string& path, int limit) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kConfigError, "cannot write " + path);
  out.precision(17);
  const int nd = bundles.empty() ? 0 : bundles.front().n_defaults;
  out << "path,step,w,s,y";
  for (int k = 1; k <= nd; ++k) out << ",z" << k << ",tau" << k;
  out << '\n';
  int written = 0;
  for (const auto& b : bundles)
    for (int p = 0; p < b.count && written < limit; ++p, ++written)
      for (int n = 0; n <= b.steps; ++n) {
        out << b.first + p << ',' << n << ',' << b.w[b.at(p, n)] << ',' << b.s[b.at(p, n)] << ','
            << b.y[b.at(p, n)];
        for (int k = 0; k < nd; ++k) out << ',' << b.z[b.at(k, p, n)] << ',' << b.tau[k * b.count + p];
        out << '\n';
      }
}

}  // namespace enlarge::mc
