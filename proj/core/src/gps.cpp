#include "deepsdrf/gps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "deepsdrf/common.hpp"

namespace deepsdrf {

namespace {

// Basis values at the midpoints of `cells` uniform cells on [0,1].
Eigen::MatrixXd basis_matrix_midpoint(const BasisSpec& spec, int cells) {
  Eigen::MatrixXd m(cells, spec.num_basis);
  for (int i = 0; i < cells; ++i) {
    const double z = (static_cast<double>(i) + 0.5) / static_cast<double>(cells);
    m.row(i) = eval_basis_unit(spec, z).transpose();
  }
  return m;
}

constexpr double kDegenerateNorm = 1e-12;

}  // namespace

WindowBatch covariate_windows(const PatientPanel& panel, int history_u,
                              const std::vector<std::pair<int, int>>& anchors) {
  if (history_u < 1) throw std::invalid_argument("covariate_windows: history_u must be >= 1");
  const int d = panel.dim_d;
  WindowBatch batch;
  batch.inputs.setZero(static_cast<Eigen::Index>(anchors.size()), history_u * d);
  batch.mask.setZero(static_cast<Eigen::Index>(anchors.size()), history_u);
  for (std::size_t row = 0; row < anchors.size(); ++row) {
    const auto [patient, step] = anchors[row];
    if (step < 0 || step >= panel.n_steps)
      throw std::invalid_argument("covariate_windows: step out of range");
    const int first = std::max(0, step - history_u + 1);
    for (int t = first; t <= step; ++t) {
      const int pos = t - first;
      batch.inputs.row(static_cast<Eigen::Index>(row))
          .segment(pos * d, d) = panel.covariates.row(patient).segment(t * d, d);
      batch.mask(static_cast<Eigen::Index>(row), pos) = 1.0;
    }
  }
  return batch;
}

WindowBatch covariate_windows_at(const PatientPanel& panel, int history_u, int step) {
  std::vector<std::pair<int, int>> anchors;
  anchors.reserve(static_cast<std::size_t>(panel.n_patients));
  for (int i = 0; i < panel.n_patients; ++i) anchors.emplace_back(i, step);
  return covariate_windows(panel, history_u, anchors);
}

GpsEnsemble fit_gps(const PatientPanel& panel, const BasisSpec& spec,
                    const NetConfig& net_cfg, int ensemble_m,
                    double coef_threshold_scale) {
  if (panel.n_patients < 1) throw std::invalid_argument("fit_gps: empty panel");
  if (ensemble_m < 1) throw std::invalid_argument("fit_gps: ensemble_m must be >= 1");
  spec.validate();

  // Treatment support from the observed doses.
  std::vector<std::pair<int, int>> anchors;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < panel.n_patients; ++i) {
    const int last = std::min(panel.observed_time(i), panel.max_followup);
    for (int t = 0; t <= last; ++t) {
      anchors.emplace_back(i, t);
      lo = std::min(lo, panel.treatment(i, t));
      hi = std::max(hi, panel.treatment(i, t));
    }
  }
  if (!(lo < hi))
    throw std::invalid_argument("fit_gps: degenerate treatment support");

  GpsEnsemble ens;
  ens.basis = spec;
  ens.basis.rescale_lo = lo;
  ens.basis.rescale_hi = hi;
  ens.history_u = net_cfg.history_u;
  ens.dim_d = panel.dim_d;
  ens.coef_threshold =
      coef_threshold_scale / std::sqrt(static_cast<double>(anchors.size()));

  SequenceBatch data;
  data.steps = net_cfg.history_u;
  data.features = panel.dim_d;
  WindowBatch windows = covariate_windows(panel, net_cfg.history_u, anchors);
  data.inputs = std::move(windows.inputs);
  data.mask = std::move(windows.mask);
  data.targets.resize(static_cast<Eigen::Index>(anchors.size()), ens.basis.num_basis);
  for (std::size_t row = 0; row < anchors.size(); ++row) {
    const auto [patient, step] = anchors[row];
    data.targets.row(static_cast<Eigen::Index>(row)) =
        eval_basis(ens.basis, panel.treatment(patient, step)).transpose();
  }

  NetConfig member_cfg = net_cfg;
  member_cfg.input_dim = panel.dim_d;
  member_cfg.output_dim = ens.basis.num_basis;
  member_cfg.head = OutputHead::kVector;

  ens.members.reserve(static_cast<std::size_t>(ensemble_m));
  for (int k = 0; k < ensemble_m; ++k) {
    member_cfg.seed = derive_seed(net_cfg.seed, 0x677073ULL + static_cast<std::uint64_t>(k));
    Network member(member_cfg);
    train(member, data, LossKind::kCde);
    ens.members.push_back(std::move(member));
  }
  return ens;
}

Eigen::MatrixXd gps_member_coefficients(const GpsEnsemble& ens, int member,
                                        const WindowBatch& windows) {
  if (member < 0 || member >= ens.ensemble_m())
    throw std::invalid_argument("gps_member_coefficients: member out of range");
  SequenceBatch batch;
  batch.steps = ens.history_u;
  batch.features = ens.dim_d;
  batch.inputs = windows.inputs;
  batch.mask = windows.mask;
  Eigen::MatrixXd coefs = ens.members[static_cast<std::size_t>(member)].forward(batch);
  if (ens.coef_threshold > 0.0) {
    // The constant term carries the total mass and is never thresholded.
    for (Eigen::Index i = 0; i < coefs.rows(); ++i)
      for (Eigen::Index j = 1; j < coefs.cols(); ++j)
        if (std::abs(coefs(i, j)) < ens.coef_threshold) coefs(i, j) = 0.0;
  }
  return coefs;
}

Eigen::VectorXd gps_member_normalizers(const GpsEnsemble& ens,
                                       const Eigen::MatrixXd& coefs) {
  const Eigen::MatrixXd grid = basis_matrix_midpoint(ens.basis, ens.norm_cells);
  // rows = windows, cols = cells; clip then midpoint-integrate.
  Eigen::MatrixXd values = coefs * grid.transpose();
  values = values.cwiseMax(0.0);
  return values.rowwise().sum() / static_cast<double>(ens.norm_cells);
}

GpsEvalCache build_gps_cache(const GpsEnsemble& ens, const WindowBatch& windows) {
  GpsEvalCache cache;
  cache.ens = &ens;
  cache.coefs.reserve(static_cast<std::size_t>(ens.ensemble_m()));
  cache.norms.reserve(static_cast<std::size_t>(ens.ensemble_m()));
  for (int k = 0; k < ens.ensemble_m(); ++k) {
    Eigen::MatrixXd coefs = gps_member_coefficients(ens, k, windows);
    cache.norms.push_back(gps_member_normalizers(ens, coefs));
    cache.coefs.push_back(std::move(coefs));
  }
  return cache;
}

namespace {

Eigen::VectorXd member_density_common(const GpsEvalCache& cache, int member,
                                      const Eigen::VectorXd& phi, double width,
                                      GpsQueryStats* stats) {
  const Eigen::MatrixXd& coefs = cache.coefs[static_cast<std::size_t>(member)];
  const Eigen::VectorXd& norms = cache.norms[static_cast<std::size_t>(member)];
  Eigen::VectorXd raw = (coefs * phi).cwiseMax(0.0);
  Eigen::VectorXd out(raw.size());
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    if (norms(i) < kDegenerateNorm) {
      // Expansion nonpositive everywhere: fall back to a uniform density.
      out(i) = 1.0 / width;
      if (stats) ++stats->degenerate_members;
    } else {
      out(i) = raw(i) / (norms(i) * width);
    }
  }
  return out;
}

}  // namespace

Eigen::VectorXd gps_cache_density(const GpsEvalCache& cache, int member, double a,
                                  GpsQueryStats* stats) {
  const GpsEnsemble& ens = *cache.ens;
  if (stats && (a < ens.basis.rescale_lo || a > ens.basis.rescale_hi))
    ++stats->clipped_to_support;
  const Eigen::VectorXd phi = eval_basis(ens.basis, a);
  return member_density_common(cache, member, phi, ens.basis.width(), stats);
}

Eigen::VectorXd gps_cache_density(const GpsEvalCache& cache, int member,
                                  const Eigen::VectorXd& a, GpsQueryStats* stats) {
  const GpsEnsemble& ens = *cache.ens;
  if (a.size() != cache.rows())
    throw std::invalid_argument("gps_cache_density: dose vector length mismatch");
  const Eigen::MatrixXd& coefs = cache.coefs[static_cast<std::size_t>(member)];
  const Eigen::VectorXd& norms = cache.norms[static_cast<std::size_t>(member)];
  const double width = ens.basis.width();
  Eigen::VectorXd out(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (stats && (a(i) < ens.basis.rescale_lo || a(i) > ens.basis.rescale_hi))
      ++stats->clipped_to_support;
    const Eigen::VectorXd phi = eval_basis(ens.basis, a(i));
    const double raw = std::max(0.0, coefs.row(i).dot(phi));
    if (norms(i) < kDegenerateNorm) {
      out(i) = 1.0 / width;
      if (stats) ++stats->degenerate_members;
    } else {
      out(i) = raw / (norms(i) * width);
    }
  }
  return out;
}

Eigen::VectorXd gps_cache_density_mean(const GpsEvalCache& cache, double a,
                                       GpsQueryStats* stats) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(cache.rows());
  for (int k = 0; k < cache.ens->ensemble_m(); ++k)
    acc += gps_cache_density(cache, k, a, k == 0 ? stats : nullptr);
  return acc / static_cast<double>(cache.ens->ensemble_m());
}

Eigen::VectorXd gps_cache_density_mean(const GpsEvalCache& cache,
                                       const Eigen::VectorXd& a, GpsQueryStats* stats) {
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(cache.rows());
  for (int k = 0; k < cache.ens->ensemble_m(); ++k)
    acc += gps_cache_density(cache, k, a, k == 0 ? stats : nullptr);
  return acc / static_cast<double>(cache.ens->ensemble_m());
}

double estimate_gps(const GpsEnsemble& ens, double a, const WindowBatch& window,
                    GpsQueryStats* stats) {
  if (window.inputs.rows() != 1)
    throw std::invalid_argument("estimate_gps: expected a single window row");
  GpsEvalCache cache = build_gps_cache(ens, window);
  return gps_cache_density_mean(cache, a, stats)(0);
}

OverlapReport overlap_report(const GpsEnsemble& ens, const PatientPanel& panel,
                             int n_bands, double threshold) {
  if (n_bands < 1) throw std::invalid_argument("overlap_report: n_bands must be >= 1");
  OverlapReport report;
  report.threshold = threshold;

  std::vector<double> doses(static_cast<std::size_t>(panel.n_patients));
  for (int i = 0; i < panel.n_patients; ++i) doses[static_cast<std::size_t>(i)] = panel.treatment(i, 0);

  const double dose_min = *std::min_element(doses.begin(), doses.end());
  const double dose_max = *std::max_element(doses.begin(), doses.end());
  if (!(dose_min < dose_max)) {
    report.degenerate = true;
    OverlapReport::Band band;
    band.lo = dose_min;
    band.hi = dose_max;
    band.median_dose = dose_min;
    band.count = panel.n_patients;
    report.bands.push_back(band);
    return report;
  }

  std::vector<double> edges;
  edges.push_back(dose_min);
  for (int b = 1; b < n_bands; ++b)
    edges.push_back(percentile(doses, 100.0 * static_cast<double>(b) / n_bands));
  edges.push_back(dose_max);

  WindowBatch windows = covariate_windows_at(panel, ens.history_u, 0);
  GpsEvalCache cache = build_gps_cache(ens, windows);

  for (int b = 0; b < n_bands; ++b) {
    OverlapReport::Band band;
    band.lo = edges[static_cast<std::size_t>(b)];
    band.hi = edges[static_cast<std::size_t>(b) + 1];
    std::vector<double> members_doses;
    for (double a : doses) {
      const bool last = b == n_bands - 1;
      if (a >= band.lo && (a < band.hi || (last && a <= band.hi))) members_doses.push_back(a);
    }
    band.count = static_cast<int>(members_doses.size());
    if (band.count == 0) {
      report.bands.push_back(band);
      continue;
    }
    band.median_dose = percentile(members_doses, 50.0);
    const Eigen::VectorXd density = gps_cache_density_mean(cache, band.median_dose);
    band.frac_below_threshold =
        static_cast<double>((density.array() < threshold).count()) /
        static_cast<double>(density.size());
    report.bands.push_back(band);
  }
  return report;
}

}  // namespace deepsdrf
