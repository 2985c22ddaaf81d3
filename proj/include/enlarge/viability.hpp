#pragma once

#include "enlarge/natural_model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace enlarge {

// Positive asset vector on a (possibly enlarged) space, with a horizon
// stopping time given per atom. Step t is in force on a cell of t-1 iff the
// horizon there is >= t.
struct MarketModel {
  SpacePtr<double> space;
  AdaptedProcess<double> s;
  std::vector<int> horizon;  // per atom; empty means T everywhere

  int horizon_on(int t_minus_1, int cell) const;
  bool step_active(int t, int cell_of_t_minus_1) const { return horizon_on(t - 1, cell_of_t_minus_1) >= t; }
  void validate() const;
};

enum class DeflatorSource { kExponential, kLpCertificate, kUser, kComposed };

struct DeflatorCandidate {
  AdaptedProcess<double> y;
  DeflatorSource source = DeflatorSource::kUser;
  int nonpositive_nodes = 0;  // nodes where the step factor was <= 0
  double min_step_factor = 1.0;
};

struct DeflatorReport {
  bool pass = false;
  double drift_y = 0.0;
  double drift_ys = 0.0;  // max over components of Y S
};

// Y and Y S martingale up to the horizon. Throws NonPositive if Y <= 0 on an
// active node.
DeflatorReport deflator_check(const DeflatorCandidate& y, const MarketModel& market, double tol);

struct ArbitrageCertificate {
  int t = -1;       // step
  int cell = -1;    // cell of t-1
  std::vector<double> strategy;
  double expected_gain = 0.0;
  double min_gain = 0.0;
};

struct LpOracleReport {
  bool feasible = false;
  double min_state_weight = 0.0;  // smallest max-min weight over active nodes
  std::optional<DeflatorCandidate> deflator;
  std::optional<ArbitrageCertificate> arbitrage;
  int nodes_checked = 0;
};

// One-step state prices per active node: maximize the smallest weight subject
// to weights summing to 1 and pricing every asset increment at 0.
LpOracleReport lp_deflator_oracle(const MarketModel& market, double min_weight = 1e-12);

enum class DeflatorForm {
  kDensity,  // prod 1 / (1 + phi^T dN)
  kLinear,   // E(-phi . N~), N~ = N - Gamma(N)
};

DeflatorCandidate build_exponential_deflator(const DriftFactors<double>& factors,
                                             const EnlargedFiltration<double>& g,
                                             DeflatorForm form = DeflatorForm::kDensity);

// min over active G nodes of 1 - phi^T dN~.
double linear_factor_floor(const DriftFactors<double>& factors, const EnlargedFiltration<double>& g);

struct ViabilityConditions {
  double continuous_term = 0.0;
  double ratio_term_max = 0.0;   // max over nodes of sqrt(sum (phi dN / (1 + phi dN))^2)
  double ratio_term_mean = 0.0;  // E at the horizon, zero-division steps skipped
  int zero_division_nodes = 0;
};

ViabilityConditions fullviability_conditions(const DriftFactors<double>& factors,
                                             const EnlargedFiltration<double>& g,
                                             const std::vector<int>& horizon = {});

// Level k of a multi-default construction: F subset G^{:1} subset ... G^{:k}.
struct RecursionLevel {
  EnlargedFiltration<double> g;            // G^{:k} over G^{:(k-1)}
  std::vector<std::vector<int>> root_cell; // [t][G^{:k} cell] -> F cell
  AdaptedProcess<double> n_level;          // N^{(k-1)|k} on F (the driver W)
  DriftFactors<double> level_fit;          // phi-bar^{(k-1)|k} on G^{:k}
  AdaptedProcess<double> n_full;           // N^{:k} on F
  PredictableProcess<double> phi_full;     // phi^{:k} on G^{:k}
  PredictableProcess<double> gamma;        // on F, dim = dim N^{:(k-1)} * dim N^{(k-1)|k}
  double gamma_residual = 0.0;
  double verification_residual = 0.0;     // vs the directly computed Gamma^{:k}
  bool mismatch = false;
};

struct RecursiveFactors {
  std::vector<RecursionLevel> levels;
};

// N^{(k-1)|k} is taken as the spanning driver W at every level, so each level
// fit is a square system; the assembled factors then match the direct drift
// wherever the gamma fit is exact.
RecursiveFactors recursive_factors(const std::vector<NaturalModelSpec<double>>& specs,
                                   const AdaptedProcess<double>& driver, double tol = 1e-10);

struct TransmissionLevel {
  int level = 0;
  LpOracleReport lp;
  bool transmitted = false;  // feasible here and at every earlier level
  double fit_residual = 0.0;
  double linear_floor = 1.0;
  DeflatorReport composed_check;
  int nonpositive_nodes = 0;
};

struct TransmissionReport {
  std::vector<TransmissionLevel> levels;
  bool verdict = false;
  bool stopped_at_base = false;
};

// horizons[k] is per atom of G^{:k} (k = 0..n); empty entries mean T.
TransmissionReport transmission_check(const MarketModel& base_market,
                                      const std::vector<RandomTimeExtension<double>>& defaults,
                                      const std::vector<std::vector<int>>& horizons, double tol = 1e-10);

struct HonestTimeReport {
  std::vector<int> tau;  // per F atom
  bool feasible_full = false;
  bool feasible_up_to_tau = false;
  bool tau_deterministic = false;
  std::optional<ArbitrageCertificate> witness;
};

// tau = last time the supermartingale X (default: S itself, first component)
// attains its running maximum over [0, T].
HonestTimeReport honest_time_control(const MarketModel& market,
                                     const std::optional<AdaptedProcess<double>>& x = std::nullopt);

// Helpers shared with the experiment runner.
std::vector<AdaptedProcess<double>> driver_basis(const SpacePtr<double>& sp);

}  // namespace enlarge
