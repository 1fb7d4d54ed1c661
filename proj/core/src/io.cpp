#include "deepsdrf/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace deepsdrf {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

std::string head_to_string(OutputHead h) {
  return h == OutputHead::kVector ? "vector" : "per_step_sigmoid";
}
OutputHead head_from_string(const std::string& s) {
  if (s == "vector") return OutputHead::kVector;
  if (s == "per_step_sigmoid") return OutputHead::kPerStepSigmoid;
  throw std::invalid_argument("checkpoint: unknown output head " + s);
}
std::string arch_to_string(Arch a) { return a == Arch::kRecurrent ? "recurrent" : "linear"; }
Arch arch_from_string(const std::string& s) {
  if (s == "recurrent") return Arch::kRecurrent;
  if (s == "linear") return Arch::kLinear;
  throw std::invalid_argument("checkpoint: unknown arch " + s);
}
std::string opt_to_string(Optimizer o) { return o == Optimizer::kSgd ? "sgd" : "adam"; }
Optimizer opt_from_string(const std::string& s) {
  if (s == "sgd") return Optimizer::kSgd;
  if (s == "adam") return Optimizer::kAdam;
  throw std::invalid_argument("checkpoint: unknown optimizer " + s);
}

json net_config_to_json(const NetConfig& cfg) {
  return json{{"history_u", cfg.history_u},
              {"input_dim", cfg.input_dim},
              {"dense_layers", cfg.dense_layers},
              {"dense_units", cfg.dense_units},
              {"recurrent_units", cfg.recurrent_units},
              {"output_dim", cfg.output_dim},
              {"head", head_to_string(cfg.head)},
              {"arch", arch_to_string(cfg.arch)},
              {"batch_size", cfg.batch_size},
              {"learning_rate", cfg.learning_rate},
              {"epochs", cfg.epochs},
              {"optimizer", opt_to_string(cfg.optimizer)},
              {"seed", cfg.seed}};
}

NetConfig net_config_from_json(const json& j) {
  NetConfig cfg;
  cfg.history_u = j.at("history_u").get<int>();
  cfg.input_dim = j.at("input_dim").get<int>();
  cfg.dense_layers = j.at("dense_layers").get<int>();
  cfg.dense_units = j.at("dense_units").get<int>();
  cfg.recurrent_units = j.at("recurrent_units").get<int>();
  cfg.output_dim = j.at("output_dim").get<int>();
  cfg.head = head_from_string(j.at("head").get<std::string>());
  cfg.arch = arch_from_string(j.at("arch").get<std::string>());
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.optimizer = opt_from_string(j.at("optimizer").get<std::string>());
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

json net_to_json_obj(const Network& net) {
  const Eigen::VectorXd& theta = net.parameters_flat();
  return json{{"format_version", kFormatVersion},
              {"config", net_config_to_json(net.config())},
              {"params", std::vector<double>(theta.data(), theta.data() + theta.size())}};
}

Network net_from_json_obj(const json& j) {
  if (!j.contains("format_version"))
    throw std::invalid_argument("checkpoint: missing format_version");
  if (j.at("format_version").get<int>() != kFormatVersion)
    throw std::invalid_argument("checkpoint: unsupported format_version");
  Network net(net_config_from_json(j.at("config")));
  const auto params = j.at("params").get<std::vector<double>>();
  if (static_cast<int>(params.size()) != net.parameter_count())
    throw std::invalid_argument("checkpoint: parameter count mismatch");
  Eigen::VectorXd theta =
      Eigen::Map<const Eigen::VectorXd>(params.data(), static_cast<Eigen::Index>(params.size()));
  net.set_parameters_flat(theta);
  return net;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void write_panel_csv(const PatientPanel& panel, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "patient_id,t";
  for (int d = 1; d <= panel.dim_d; ++d) out << ",x_" << d;
  out << ",a,event_time,censor_time,event_flag\n";
  for (int i = 0; i < panel.n_patients; ++i) {
    for (int t = 0; t < panel.n_steps; ++t) {
      out << i << ',' << t;
      for (int d = 0; d < panel.dim_d; ++d) out << ',' << fmt_double(panel.covariate(i, t, d));
      out << ',' << fmt_double(panel.treatment(i, t)) << ',' << panel.event_time[i] << ','
          << panel.censor_time[i] << ',' << static_cast<int>(panel.event_flag[i]) << '\n';
    }
  }
}

PatientPanel read_panel_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("panel csv: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 7 || header[0] != "patient_id" || header[1] != "t")
    throw std::runtime_error("panel csv: bad header");
  const int dim_d = static_cast<int>(header.size()) - 6;
  for (int d = 0; d < dim_d; ++d)
    if (header[static_cast<std::size_t>(2 + d)] != "x_" + std::to_string(d + 1))
      throw std::runtime_error("panel csv: bad covariate header");

  struct Row {
    int patient, t;
    std::vector<double> x;
    double a;
    int event_time, censor_time, event_flag;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size()) throw std::runtime_error("panel csv: ragged row");
    Row r;
    r.patient = std::stoi(fields[0]);
    r.t = std::stoi(fields[1]);
    r.x.resize(static_cast<std::size_t>(dim_d));
    for (int d = 0; d < dim_d; ++d) r.x[static_cast<std::size_t>(d)] = std::stod(fields[static_cast<std::size_t>(2 + d)]);
    r.a = std::stod(fields[static_cast<std::size_t>(2 + dim_d)]);
    r.event_time = std::stoi(fields[static_cast<std::size_t>(3 + dim_d)]);
    r.censor_time = std::stoi(fields[static_cast<std::size_t>(4 + dim_d)]);
    r.event_flag = std::stoi(fields[static_cast<std::size_t>(5 + dim_d)]);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw std::runtime_error("panel csv: no data rows");

  int n_patients = 0, n_steps = 0;
  for (const Row& r : rows) {
    n_patients = std::max(n_patients, r.patient + 1);
    n_steps = std::max(n_steps, r.t + 1);
  }
  PatientPanel panel;
  panel.n_patients = n_patients;
  panel.dim_d = dim_d;
  panel.n_steps = n_steps;
  panel.max_followup = n_steps - 1;
  panel.covariates.setZero(n_patients, n_steps * dim_d);
  panel.treatment.setZero(n_patients, n_steps);
  panel.event_time.assign(static_cast<std::size_t>(n_patients), 0);
  panel.censor_time.assign(static_cast<std::size_t>(n_patients), 0);
  panel.event_flag.assign(static_cast<std::size_t>(n_patients), 0);
  for (const Row& r : rows) {
    for (int d = 0; d < dim_d; ++d)
      panel.covariates(r.patient, r.t * dim_d + d) = r.x[static_cast<std::size_t>(d)];
    panel.treatment(r.patient, r.t) = r.a;
    panel.event_time[static_cast<std::size_t>(r.patient)] = r.event_time;
    panel.censor_time[static_cast<std::size_t>(r.patient)] = r.censor_time;
    panel.event_flag[static_cast<std::size_t>(r.patient)] =
        static_cast<std::uint8_t>(r.event_flag);
  }
  return panel;
}

std::string net_to_json(const Network& net) { return net_to_json_obj(net).dump(); }

Network net_from_json(const std::string& json_text) {
  return net_from_json_obj(json::parse(json_text));
}

void write_gps_checkpoint(const GpsEnsemble& ens, const std::string& path) {
  json members = json::array();
  for (const Network& m : ens.members) members.push_back(net_to_json_obj(m));
  json j{{"format_version", kFormatVersion},
         {"type", "gps_ensemble"},
         {"manifest",
          {{"ensemble_m", ens.ensemble_m()},
           {"basis_kind", ens.basis.kind == BasisKind::kCosine ? "cosine" : "haar"},
           {"num_basis", ens.basis.num_basis},
           {"rescale_lo", ens.basis.rescale_lo},
           {"rescale_hi", ens.basis.rescale_hi},
           {"coef_threshold", ens.coef_threshold},
           {"history_u", ens.history_u},
           {"dim_d", ens.dim_d},
           {"norm_cells", ens.norm_cells}}},
         {"members", std::move(members)}};
  write_text(path, j.dump());
}

GpsEnsemble read_gps_checkpoint(const std::string& path) {
  const json j = json::parse(read_text(path));
  if (!j.contains("format_version") || j.at("format_version").get<int>() != kFormatVersion)
    throw std::invalid_argument("gps checkpoint: missing or unsupported format_version");
  if (j.at("type").get<std::string>() != "gps_ensemble")
    throw std::invalid_argument("gps checkpoint: wrong type");
  const json& m = j.at("manifest");
  GpsEnsemble ens;
  ens.basis.kind =
      m.at("basis_kind").get<std::string>() == "cosine" ? BasisKind::kCosine : BasisKind::kHaar;
  ens.basis.num_basis = m.at("num_basis").get<int>();
  ens.basis.rescale_lo = m.at("rescale_lo").get<double>();
  ens.basis.rescale_hi = m.at("rescale_hi").get<double>();
  ens.coef_threshold = m.at("coef_threshold").get<double>();
  ens.history_u = m.at("history_u").get<int>();
  ens.dim_d = m.at("dim_d").get<int>();
  ens.norm_cells = m.at("norm_cells").get<int>();
  for (const json& member : j.at("members")) ens.members.push_back(net_from_json_obj(member));
  if (ens.members.empty()) throw std::invalid_argument("gps checkpoint: no members");
  return ens;
}

void write_outcome_checkpoint(const OutcomeEnsemble& ens, const std::string& path) {
  json members = json::array();
  for (const Network& m : ens.members) members.push_back(net_to_json_obj(m));
  const Eigen::VectorXd& mu = ens.scaler.mean;
  const Eigen::VectorXd& sd = ens.scaler.sd;
  json j{{"format_version", kFormatVersion},
         {"type", "outcome_ensemble"},
         {"kind", ens.kind == OutcomeKind::kDeepSdrf ? "deepsdrf" : "snn"},
         {"window_h", ens.window_h},
         {"label_steps", ens.label_steps},
         {"scaler",
          {{"mean", std::vector<double>(mu.data(), mu.data() + mu.size())},
           {"sd", std::vector<double>(sd.data(), sd.data() + sd.size())},
           {"treat_mean", ens.scaler.treat_mean},
           {"treat_sd", ens.scaler.treat_sd}}},
         {"members", std::move(members)}};
  write_text(path, j.dump());
}

OutcomeEnsemble read_outcome_checkpoint(const std::string& path) {
  const json j = json::parse(read_text(path));
  if (!j.contains("format_version") || j.at("format_version").get<int>() != kFormatVersion)
    throw std::invalid_argument("outcome checkpoint: missing or unsupported format_version");
  if (j.at("type").get<std::string>() != "outcome_ensemble")
    throw std::invalid_argument("outcome checkpoint: wrong type");
  OutcomeEnsemble ens;
  ens.kind = j.at("kind").get<std::string>() == "deepsdrf" ? OutcomeKind::kDeepSdrf
                                                           : OutcomeKind::kSnn;
  ens.window_h = j.at("window_h").get<int>();
  ens.label_steps = j.at("label_steps").get<int>();
  const json& s = j.at("scaler");
  const auto mean = s.at("mean").get<std::vector<double>>();
  const auto sd = s.at("sd").get<std::vector<double>>();
  ens.scaler.mean =
      Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  ens.scaler.sd =
      Eigen::Map<const Eigen::VectorXd>(sd.data(), static_cast<Eigen::Index>(sd.size()));
  ens.scaler.treat_mean = s.at("treat_mean").get<double>();
  ens.scaler.treat_sd = s.at("treat_sd").get<double>();
  for (const json& member : j.at("members")) ens.members.push_back(net_from_json_obj(member));
  if (ens.members.empty()) throw std::invalid_argument("outcome checkpoint: no members");
  return ens;
}

std::string cadr_to_json(const CadrEstimate& est, double dose) {
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  std::vector<int> t(static_cast<std::size_t>(est.survival_mean.size()));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<int>(i) + 1;
  json j{{"a", dose},
         {"t", t},
         {"mean", vec(est.survival_mean)},
         {"sd", vec(est.survival_sd)},
         {"ci_lo", vec(est.ci_lo)},
         {"ci_hi", vec(est.ci_hi)},
         {"psi_bar", est.psi_bar}};
  return j.dump();
}

void write_cadr_grid_csv(const std::vector<std::pair<double, CadrEstimate>>& curves,
                         const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "dose,t,mean,sd,ci_lo,ci_hi\n";
  for (const auto& [dose, est] : curves) {
    for (Eigen::Index t = 0; t < est.survival_mean.size(); ++t) {
      out << fmt_double(dose) << ',' << (t + 1) << ',' << fmt_double(est.survival_mean(t))
          << ',' << fmt_double(est.survival_sd(t)) << ',' << fmt_double(est.ci_lo(t)) << ','
          << fmt_double(est.ci_hi(t)) << '\n';
    }
  }
}

void write_recommendations_csv(const std::vector<Recommendation>& recs,
                               const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "patient_id,method,original_dose,recommended_dose,r_value,flags\n";
  for (const Recommendation& r : recs) {
    out << r.patient_id << ',' << r.method << ',' << fmt_double(r.original_dose) << ','
        << fmt_double(r.recommended_dose) << ',' << fmt_double(r.r_value) << ','
        << (r.floored ? "floored" : "") << '\n';
  }
}

}  // namespace deepsdrf
