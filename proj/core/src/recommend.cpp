#include "deepsdrf/recommend.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "deepsdrf/common.hpp"

namespace deepsdrf {

ActionGrid ActionGrid::from_doses(const std::vector<double>& doses, int n_levels,
                                  double lo_percentile, double hi_percentile) {
  if (doses.empty()) throw std::invalid_argument("ActionGrid: no observed doses");
  if (n_levels < 1) throw std::invalid_argument("ActionGrid: n_levels must be >= 1");
  if (!(lo_percentile < hi_percentile))
    throw std::invalid_argument("ActionGrid: lo_percentile must be < hi_percentile");
  ActionGrid grid;
  grid.lo = percentile(doses, lo_percentile);
  grid.hi = percentile(doses, hi_percentile);
  if (!(grid.lo < grid.hi))
    throw std::invalid_argument("ActionGrid: degenerate dose distribution");
  grid.levels.resize(static_cast<std::size_t>(n_levels));
  if (n_levels == 1) {
    grid.levels[0] = 0.5 * (grid.lo + grid.hi);
    return grid;
  }
  for (int j = 0; j < n_levels; ++j)
    grid.levels[static_cast<std::size_t>(j)] =
        grid.lo + (grid.hi - grid.lo) * static_cast<double>(j) / (n_levels - 1);
  return grid;
}

double recommender_value_from(double psi_bar_a, double psi_bar_a_prime, bool* floored) {
  bool hit = false;
  if (psi_bar_a < kPsiBarFloor) {
    psi_bar_a = kPsiBarFloor;
    hit = true;
  }
  if (psi_bar_a_prime < kPsiBarFloor) {
    psi_bar_a_prime = kPsiBarFloor;
    hit = true;
  }
  if (floored) *floored = hit;
  return std::log(psi_bar_a_prime) - std::log(psi_bar_a);
}

double recommender_value(const std::function<double(double)>& psi_bar, double a,
                         double a_prime, bool* floored) {
  if (a == a_prime) {
    if (floored) *floored = false;
    return 0.0;
  }
  return recommender_value_from(psi_bar(a), psi_bar(a_prime), floored);
}

Recommendation recommend_rs(const std::function<double(double)>& psi_bar,
                            double observed_dose, const ActionGrid& grid, int n_draws,
                            std::uint64_t seed, int patient_id) {
  if (grid.levels.empty()) throw std::invalid_argument("recommend_rs: empty grid");
  if (n_draws < 1) throw std::invalid_argument("recommend_rs: n_draws must be >= 1");

  // Candidate levels: the whole grid when n_draws covers it, otherwise a
  // uniform draw without replacement.
  std::vector<int> candidates(grid.levels.size());
  std::iota(candidates.begin(), candidates.end(), 0);
  if (n_draws < grid.size()) {
    auto rng = make_rng(derive_seed(seed, 0x7273ULL));
    std::shuffle(candidates.begin(), candidates.end(), rng);
    candidates.resize(static_cast<std::size_t>(n_draws));
    std::sort(candidates.begin(), candidates.end());
  }

  const double psi_obs = psi_bar(observed_dose);

  Recommendation best;
  best.patient_id = patient_id;
  best.original_dose = observed_dose;
  best.method = "rs";
  // The observed dose is always an implicit candidate with r = 0.
  best.recommended_dose = observed_dose;
  best.r_value = 0.0;

  for (int idx : candidates) {
    const double dose = grid.levels[static_cast<std::size_t>(idx)];
    bool floored = false;
    const double r = dose == observed_dose
                         ? 0.0
                         : recommender_value_from(psi_obs, psi_bar(dose), &floored);
    best.floored = best.floored || floored;
    const bool better =
        r > best.r_value ||
        (r == best.r_value &&
         (std::abs(dose - observed_dose) < std::abs(best.recommended_dose - observed_dose) ||
          (std::abs(dose - observed_dose) ==
               std::abs(best.recommended_dose - observed_dose) &&
           dose < best.recommended_dose)));
    if (better) {
      best.recommended_dose = dose;
      best.r_value = r;
    }
  }
  return best;
}

int QTable::bin_of(double summary) const {
  int b = 0;
  for (double edge : state_edges) {
    if (summary >= edge)
      ++b;
    else
      break;
  }
  return std::min(b, states() - 1);
}

std::vector<double> QTable::quantile_edges(std::vector<double> summaries, int bins) {
  if (bins < 1) throw std::invalid_argument("QTable: bins must be >= 1");
  if (summaries.empty()) throw std::invalid_argument("QTable: empty summaries");
  std::vector<double> edges;
  edges.reserve(static_cast<std::size_t>(bins - 1));
  for (int b = 1; b < bins; ++b)
    edges.push_back(percentile(summaries, 100.0 * static_cast<double>(b) / bins));
  return edges;
}

void td_update(QTable& table, int s, int a, double r, int s_next, int a_next) {
  if (s < 0 || s >= table.states() || s_next < 0 || s_next >= table.states())
    throw std::invalid_argument("td_update: state out of range");
  if (a < 0 || a >= table.actions() || a_next < 0 || a_next >= table.actions())
    throw std::invalid_argument("td_update: action out of range");
  table.q(s, a) +=
      table.alpha * (r + table.gamma * table.q(s_next, a_next) - table.q(s, a));
}

RlPolicy fit_rl_policy(const std::vector<RlEpisode>& episodes, const ActionGrid& grid,
                       const std::vector<double>& state_edges, double alpha, double gamma,
                       int iters, int sweeps_per_iter, std::uint64_t seed) {
  if (episodes.empty()) throw std::invalid_argument("fit_rl_policy: no episodes");
  const int state_bins = static_cast<int>(state_edges.size()) + 1;
  if (gamma < 0.0 || gamma > 1.0)
    throw std::invalid_argument("fit_rl_policy: gamma must be in [0,1]");
  if (iters < 1) throw std::invalid_argument("fit_rl_policy: iters must be >= 1");

  const int n_actions = grid.size();
  RlPolicy policy;
  policy.table.q = Eigen::MatrixXd::Zero(state_bins, n_actions);
  policy.table.state_edges = state_edges;
  policy.table.alpha = alpha;
  policy.table.gamma = gamma;

  // Random starting policy.
  auto rng = make_rng(derive_seed(seed, 0x726cULL));
  std::uniform_int_distribution<int> pick(0, n_actions - 1);
  policy.action.resize(static_cast<std::size_t>(state_bins));
  for (int s = 0; s < state_bins; ++s) policy.action[static_cast<std::size_t>(s)] = pick(rng);

  auto reward = [&](const RlEpisode& e, int action) {
    return recommender_value_from(e.psi_observed,
                                  e.psi_by_action(static_cast<Eigen::Index>(action)));
  };

  for (int iter = 0; iter < iters; ++iter) {
    // Policy evaluation: TD sweeps updating every action at the visited
    // states, bootstrapping with the current policy's next action.
    for (int sweep = 0; sweep < sweeps_per_iter; ++sweep) {
      for (const RlEpisode& e : episodes) {
        const std::size_t len = e.states.size();
        for (std::size_t t = 0; t < len; ++t) {
          const int s = e.states[t];
          const int s_next = t + 1 < len ? e.states[t + 1] : s;
          const int a_next = policy.action[static_cast<std::size_t>(s_next)];
          for (int a = 0; a < n_actions; ++a)
            td_update(policy.table, s, a, reward(e, a), s_next, a_next);
        }
      }
    }
    // Greedy improvement, ties toward the smaller dose.
    std::vector<int> greedy(static_cast<std::size_t>(state_bins));
    for (int s = 0; s < state_bins; ++s) {
      int best = 0;
      for (int a = 1; a < n_actions; ++a)
        if (policy.table.q(s, a) > policy.table.q(s, best)) best = a;
      greedy[static_cast<std::size_t>(s)] = best;
    }
    policy.iterations_used = iter + 1;
    if (greedy == policy.action) {
      policy.converged = true;
      break;
    }
    policy.action = std::move(greedy);
  }
  return policy;
}

double policy_value(const QTable& table, const std::function<double(double)>& gps_density,
                    double state_summary, const ActionGrid& grid) {
  if (grid.size() != table.actions())
    throw std::invalid_argument("policy_value: grid size != table actions");
  Eigen::VectorXd w(grid.size());
  for (int j = 0; j < grid.size(); ++j)
    w(j) = std::max(0.0, gps_density(grid.levels[static_cast<std::size_t>(j)]));
  const double total = w.sum();
  if (total <= 0.0)
    w.setConstant(1.0 / grid.size());
  else
    w /= total;
  const int s = table.bin_of(state_summary);
  return w.dot(table.q.row(s).transpose());
}

}  // namespace deepsdrf
