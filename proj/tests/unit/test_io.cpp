#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "deepsdrf/io.hpp"

using namespace deepsdrf;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("panel csv: bit-exact round trip") {
  DgpConfig cfg;
  cfg.n_patients = 25;
  cfg.dim_d = 3;
  cfg.seed = 2024;
  const PatientPanel panel = generate_panel(cfg);
  const std::string path = temp_path("deepsdrf_panel.csv");
  write_panel_csv(panel, path);

  // Header is mandatory and fixed.
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "patient_id,t,x_1,x_2,x_3,a,event_time,censor_time,event_flag");

  const PatientPanel again = read_panel_csv(path);
  CHECK(again.n_patients == panel.n_patients);
  CHECK(again.dim_d == panel.dim_d);
  CHECK(again.covariates == panel.covariates);
  CHECK(again.treatment == panel.treatment);
  CHECK(again.event_time == panel.event_time);
  CHECK(again.censor_time == panel.censor_time);
  CHECK(again.event_flag == panel.event_flag);
  std::remove(path.c_str());
}

TEST_CASE("panel csv: bad header rejected") {
  const std::string path = temp_path("deepsdrf_bad.csv");
  {
    std::ofstream out(path);
    out << "id,t,x_1,a,event_time,censor_time,event_flag\n";
    out << "0,0,1.0,0.5,1,2,1\n";
  }
  CHECK_THROWS(read_panel_csv(path));
  std::remove(path.c_str());
}

TEST_CASE("network checkpoint: config header and parameters round trip") {
  NetConfig cfg;
  cfg.input_dim = 3;
  cfg.history_u = 2;
  cfg.output_dim = 4;
  cfg.dense_layers = 1;
  cfg.dense_units = 5;
  cfg.seed = 9;
  const Network net(cfg);
  const std::string text = net_to_json(net);
  const Network again = net_from_json(text);
  CHECK(again.parameters_flat() == net.parameters_flat());
  CHECK(again.config().input_dim == cfg.input_dim);
  CHECK(again.config().output_dim == cfg.output_dim);
}

TEST_CASE("network checkpoint: version field is required") {
  NetConfig cfg;
  const Network net(cfg);
  std::string text = net_to_json(net);
  // Strip the version field.
  auto pos = text.find("\"format_version\":1");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 18, "\"format_other\":1");
  CHECK_THROWS(net_from_json(text));
}

TEST_CASE("gps checkpoint: bundle with manifest round trips") {
  DgpConfig cfg;
  cfg.n_patients = 60;
  cfg.dim_d = 2;
  cfg.seed = 5;
  const PatientPanel panel = generate_panel(cfg);
  BasisSpec spec;
  spec.num_basis = 30;
  NetConfig net_cfg;
  net_cfg.history_u = 1;
  net_cfg.epochs = 2;
  net_cfg.recurrent_units = 3;
  net_cfg.dense_layers = 1;
  net_cfg.dense_units = 2;
  const GpsEnsemble ens = fit_gps(panel, spec, net_cfg, 2);

  const std::string path = temp_path("deepsdrf_gps.json");
  write_gps_checkpoint(ens, path);
  const GpsEnsemble again = read_gps_checkpoint(path);
  CHECK(again.ensemble_m() == 2);
  CHECK(again.basis.rescale_lo == ens.basis.rescale_lo);
  CHECK(again.basis.rescale_hi == ens.basis.rescale_hi);
  CHECK(again.coef_threshold == ens.coef_threshold);
  for (int k = 0; k < 2; ++k)
    CHECK(again.members[k].parameters_flat() == ens.members[k].parameters_flat());

  // Same density from the reloaded bundle.
  WindowBatch window = covariate_windows(panel, 1, {{0, 0}});
  CHECK(estimate_gps(again, 0.4, window) == doctest::Approx(estimate_gps(ens, 0.4, window)));
  std::remove(path.c_str());
}

TEST_CASE("outcome checkpoint: bundle round trips with scaler") {
  DgpConfig cfg;
  cfg.n_patients = 50;
  cfg.dim_d = 2;
  cfg.seed = 6;
  const PatientPanel panel = generate_panel(cfg);
  NetConfig net_cfg;
  net_cfg.epochs = 2;
  net_cfg.recurrent_units = 3;
  net_cfg.dense_layers = 1;
  net_cfg.dense_units = 2;
  const OutcomeEnsemble ens =
      fit_outcome(panel, nullptr, net_cfg, 2, OutcomeKind::kSnn, 1);
  const std::string path = temp_path("deepsdrf_outcome.json");
  write_outcome_checkpoint(ens, path);
  const OutcomeEnsemble again = read_outcome_checkpoint(path);
  CHECK(again.kind == OutcomeKind::kSnn);
  CHECK(again.window_h == ens.window_h);
  CHECK(again.label_steps == ens.label_steps);
  CHECK(again.scaler.mean == ens.scaler.mean);
  CHECK(again.scaler.treat_sd == ens.scaler.treat_sd);
  for (int k = 0; k < 2; ++k)
    CHECK(again.members[k].parameters_flat() == ens.members[k].parameters_flat());
  std::remove(path.c_str());
}

TEST_CASE("cadr json record carries the full curve") {
  CadrEstimate est;
  est.survival_mean = Eigen::VectorXd::LinSpaced(3, 0.9, 0.7);
  est.survival_sd = Eigen::VectorXd::Constant(3, 0.01);
  est.ci_lo = est.survival_mean.array() - 0.02;
  est.ci_hi = est.survival_mean.array() + 0.02;
  est.psi_bar = est.survival_mean.mean();
  const std::string text = cadr_to_json(est, 0.4);
  CHECK(text.find("\"a\":0.4") != std::string::npos);
  CHECK(text.find("\"psi_bar\"") != std::string::npos);
  CHECK(text.find("\"t\":[1,2,3]") != std::string::npos);
}

TEST_CASE("recommendations csv layout") {
  Recommendation rec;
  rec.patient_id = 3;
  rec.original_dose = 0.5;
  rec.recommended_dose = 0.25;
  rec.r_value = 0.1;
  rec.method = "rs";
  const std::string path = temp_path("deepsdrf_recs.csv");
  write_recommendations_csv({rec}, path);
  std::ifstream in(path);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header == "patient_id,method,original_dose,recommended_dose,r_value,flags");
  CHECK(row.rfind("3,rs,0.5,0.25,", 0) == 0);
  std::remove(path.c_str());
}
