#pragma once

#include "enlarge/error.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace enlarge::mc {

struct DefaultParams {
  double lambda = 0.3;  // constant hazard rate
  double alpha = 0.5;   // loading of L on W
};

enum class Loading { kDamped, kConstant };  // a = alpha (1 - Z') or a = alpha
enum class Scheme { kSplit, kJoint };

struct MCConfig {
  std::uint64_t seed = 1;
  int paths = 100000;
  int steps = 100;
  double dt = 0.01;
  double mu = 0.1;
  double sigma = 0.2;
  double s0 = 1.0;
  std::vector<DefaultParams> defaults{DefaultParams{}};
  Loading loading = Loading::kDamped;
  Scheme scheme = Scheme::kSplit;
  int time_buckets = 10;
  double truncation = 6.0;  // jump threshold in step standard deviations
  double jump_rate = 0.0;   // synthetic compensated jumps added to W
  double jump_size = 0.0;
  int chunk = 1024;         // fixed work unit; results do not depend on threads
  int dump_paths = 100;

  void validate() const;
};

MCConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const MCConfig& cfg);

inline constexpr int kAlive = -1;

// Paths [first, first + count). Arrays are row-major per path with steps + 1
// entries; default k occupies block k. tau is the step whose hazard substep
// produced the default, kAlive if none by the horizon.
struct PathBundle {
  int first = 0;
  int count = 0;
  int steps = 0;
  int n_defaults = 0;
  std::vector<double> w, s, y;
  std::vector<double> z;   // [k][path][n]
  std::vector<double> zh;  // Z after the hazard substep of step n, [k][path][n]; n = 0 unused
  std::vector<int> tau;    // [k][path]
  int z_violations = 0;    // Z outside (0, 1) before clamping
  int linear_nonpositive = 0;
  double max_inv_z = 0.0;
  double max_inv_one_minus_z = 0.0;

  std::size_t at(int path, int n) const { return static_cast<std::size_t>(path) * (steps + 1) + n; }
  std::size_t at(int k, int path, int n) const {
    return (static_cast<std::size_t>(k) * count + path) * (steps + 1) + n;
  }
};

PathBundle simulate_paths_serial(const MCConfig& cfg, int first, int count);
PathBundle simulate_paths_parallel(const MCConfig& cfg, int first, int count);

// Martingale test: per-path sums of increments over each bin (time bucket x
// label at the start of the step), then mean / standard error across paths.
struct BinStat {
  int bucket = 0;
  int label = 0;
  long paths = 0;
  double mean = 0.0;
  double se = 0.0;
  double z = 0.0;
};

struct MartingaleTestResult {
  std::vector<BinStat> bins;
  double max_abs_z = 0.0;
  bool pass = false;
};

class MartingaleAccumulator {
 public:
  MartingaleAccumulator(int steps, int buckets, int labels);
  // values[n], labels[n] for n = 0..steps; the label of step n is labels[n-1].
  void add_path(const double* values, const int* labels);
  void merge(const MartingaleAccumulator& other);
  long paths() const { return paths_; }
  MartingaleTestResult finish(double z_limit = 3.0) const;

 private:
  int steps_, buckets_, labels_;
  long paths_ = 0;
  std::vector<double> sum_, sumsq_;
  std::vector<long> hits_;
  std::vector<double> scratch_;
  std::vector<char> touched_;
};

// Throws InsufficientPaths below 1000 paths.
MartingaleTestResult statistical_martingale_test(const std::vector<std::vector<double>>& values,
                                                 const std::vector<std::vector<int>>& labels, int buckets,
                                                 int num_labels);

struct Coefficient {
  double estimate = 0.0;
  double se = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  long samples = 0;
  bool contains_one = false;
};

struct RegressionAccumulator {
  double sxy = 0.0, sxx = 0.0, syy = 0.0, sy = 0.0;
  long n = 0;
  void add(double x, double y);
  void merge(const RegressionAccumulator& o);
  Coefficient coefficient() const;  // y = b x, 95% interval
  double mean_y() const { return n ? sy / n : 0.0; }
  double mean_y_se() const;
};

struct DriftRegression {
  Coefficient pre;
  Coefficient post;
  double pre_mean_drift = 0.0;  // mean dW on pre-default steps
  double pre_mean_se = 0.0;
};

struct GammaAccumulator {
  double sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
  long paths = 0;
  long jumps = 0;
  void merge(const GammaAccumulator& o);
};

struct GammaEstimate {
  bool available = false;
  double gamma = 0.0;
  double se = 0.0;
  long jumps = 0;
  bool within_two_se = true;
};

// Survival indicator mean against mean Z per grid time.
struct SurvivalAccumulator {
  std::vector<double> sum, sumsq;
  long paths = 0;
  void merge(const SurvivalAccumulator& o);
};

struct MCStatistics {
  MartingaleAccumulator deflated_asset;
  MartingaleAccumulator deflator;
  MartingaleAccumulator driver;
  RegressionAccumulator pre, post;
  std::vector<GammaAccumulator> gamma;  // level k = 1..n-1
  SurvivalAccumulator survival;
  double joint_bias = 0.0;  // sum over paths of the pre-default template bias
  long paths = 0;
  int z_violations = 0;
  int linear_nonpositive = 0;
  double max_inv_z = 0.0;
  double max_inv_one_minus_z = 0.0;

  explicit MCStatistics(const MCConfig& cfg);
  void add(const PathBundle& b, const MCConfig& cfg);
  void merge(const MCStatistics& o);
};

DriftRegression dies_drift_regression(const MCStatistics& st);
GammaEstimate gamma_estimate(const MCStatistics& st, int level);

struct MCRun {
  MCStatistics stats;
  std::vector<PathBundle> dumped;  // first cfg.dump_paths paths when requested
};

// Chunks of cfg.chunk paths, simulated and reduced in parallel, merged in
// chunk order.
MCRun run_statistics(const MCConfig& cfg, bool keep_dump = false);

// Serial reference of run_statistics.
MCRun run_statistics_serial(const MCConfig& cfg, bool keep_dump = false);

void write_paths_csv(const std::vector<PathBundle>& bundles, const std::string& path, int limit);

}  // namespace enlarge::mc
