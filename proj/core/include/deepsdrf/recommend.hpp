#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace deepsdrf {

// Candidate dose levels: evenly spaced between the 10th and 90th
// percentiles of the observed doses.
struct ActionGrid {
  std::vector<double> levels;  // strictly increasing
  double lo = 0.0, hi = 0.0;

  static ActionGrid from_doses(const std::vector<double>& doses, int n_levels = 20,
                               double lo_percentile = 10.0, double hi_percentile = 90.0);
  int size() const { return static_cast<int>(levels.size()); }
};

// Floor applied to the mean CADR before taking logs.
constexpr double kPsiBarFloor = 1e-9;

// r = log psi_bar(a') - log psi_bar(a); positive values favour a'.
// `psi_bar` is the mean CADR of the patient under a queried dose. When the
// floor engages, `floored` (if given) is set.
double recommender_value(const std::function<double(double)>& psi_bar, double a,
                         double a_prime, bool* floored = nullptr);
double recommender_value_from(double psi_bar_a, double psi_bar_a_prime,
                              bool* floored = nullptr);

struct Recommendation {
  int patient_id = 0;
  double original_dose = 0.0;
  double recommended_dose = 0.0;
  double r_value = 0.0;
  std::string method;  // "rs" or "rl"
  bool floored = false;
};

// Random search over the grid: draws n_draws distinct candidate levels
// (the full grid when n_draws covers it), keeps the observed dose as an
// implicit candidate with r = 0, and returns the argmax. Ties break toward
// the dose closest to the observed one, then toward the smaller dose.
Recommendation recommend_rs(const std::function<double(double)>& psi_bar,
                            double observed_dose, const ActionGrid& grid, int n_draws,
                            std::uint64_t seed, int patient_id = 0);

// Tabular state-action values over quantile-binned patient summaries.
struct QTable {
  Eigen::MatrixXd q;                // states x actions
  std::vector<double> state_edges;  // inner quantile edges (size states-1)
  double alpha = 0.1;
  double gamma = 0.99;

  int states() const { return static_cast<int>(q.rows()); }
  int actions() const { return static_cast<int>(q.cols()); }
  int bin_of(double summary) const;
  static std::vector<double> quantile_edges(std::vector<double> summaries, int bins);
};

// Q(s,a) += alpha * (r + gamma * Q(s',a') - Q(s,a)).
void td_update(QTable& table, int s, int a, double r, int s_next, int a_next);

// One offline trajectory: the state-bin path of a patient plus the mean
// CADR of every grid action evaluated at the start of follow-up.
struct RlEpisode {
  std::vector<int> states;
  Eigen::VectorXd psi_by_action;  // per grid level
  double psi_observed = 0.0;      // at the observed dose
};

struct RlPolicy {
  std::vector<int> action;  // greedy grid index per state
  QTable table;
  bool converged = false;
  int iterations_used = 0;
};

// Policy iteration over the offline episodes: every sweep runs TD updates
// of all actions at the visited states (the reward of action a is the
// recommender value of switching the episode's patient from the observed
// dose to level a), then the policy is made greedy. Stops when the greedy
// policy is stable or after `iters` rounds (the last policy is returned
// with converged = false). `state_edges` is the quantile binning the
// episode states were produced with (bins = edges.size() + 1).
RlPolicy fit_rl_policy(const std::vector<RlEpisode>& episodes, const ActionGrid& grid,
                       const std::vector<double>& state_edges, double alpha, double gamma,
                       int iters, int sweeps_per_iter, std::uint64_t seed);

// One-step Bellman value of the table's greedy content at a patient:
// V = sum_a w(a) Q(bin(summary), a), with w the GPS density over the grid
// renormalized to sum to one (uniform when the density vanishes).
double policy_value(const QTable& table, const std::function<double(double)>& gps_density,
                    double state_summary, const ActionGrid& grid);

}  // namespace deepsdrf
