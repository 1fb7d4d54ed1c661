#pragma once

#include <string>

#include "deepsdrf/cadr.hpp"
#include "deepsdrf/dgp.hpp"
#include "deepsdrf/gps.hpp"
#include "deepsdrf/net.hpp"
#include "deepsdrf/recommend.hpp"

namespace deepsdrf {

// Cohort CSV: header `patient_id,t,x_1..x_D,a,event_time,censor_time,
// event_flag`, rows ordered by (patient, t), doubles printed with
// round-trip precision.
void write_panel_csv(const PatientPanel& panel, const std::string& path);
PatientPanel read_panel_csv(const std::string& path);

// Network checkpoints are JSON with a format_version field and the full
// config header; loading validates both.
std::string net_to_json(const Network& net);
Network net_from_json(const std::string& json_text);

// GPS ensemble bundle: manifest (basis, rescale bounds, threshold) plus all
// member checkpoints in a single JSON document.
void write_gps_checkpoint(const GpsEnsemble& ens, const std::string& path);
GpsEnsemble read_gps_checkpoint(const std::string& path);

// Outcome ensemble bundle: kind, window, scaler and members.
void write_outcome_checkpoint(const OutcomeEnsemble& ens, const std::string& path);
OutcomeEnsemble read_outcome_checkpoint(const std::string& path);

// CADR curve record {a, t[], mean[], sd[], ci_lo[], ci_hi[], psi_bar}.
std::string cadr_to_json(const CadrEstimate& est, double dose);

// Long-format curve CSV rows: dose, t, mean, sd, ci_lo, ci_hi.
void write_cadr_grid_csv(const std::vector<std::pair<double, CadrEstimate>>& curves,
                         const std::string& path);

// Recommendations CSV: patient_id, method, original_dose, recommended_dose,
// r_value, flags.
void write_recommendations_csv(const std::vector<Recommendation>& recs,
                               const std::string& path);

}  // namespace deepsdrf
