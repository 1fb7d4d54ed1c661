#include "deepsdrf/labels.hpp"

#include <stdexcept>

namespace deepsdrf {

LabelMatrix build_labels(int event_time, int censor_time, bool event_flag, int q) {
  if (q < 0) throw std::invalid_argument("build_labels: q must be >= 0");
  if (event_time < 0 || censor_time < 0)
    throw std::invalid_argument("build_labels: negative times");
  if (event_flag && event_time > censor_time)
    throw std::invalid_argument(
        "build_labels: event_flag set but event_time > censor_time");
  if (!event_flag && event_time <= censor_time)
    throw std::invalid_argument(
        "build_labels: event_flag clear but event_time <= censor_time");

  const int tau = event_flag ? event_time : censor_time;
  if (tau > q)
    throw std::invalid_argument("build_labels: observed time exceeds label length q");

  LabelMatrix label;
  label.theta.assign(static_cast<std::size_t>(q) + 1, 0);
  label.gamma.assign(static_cast<std::size_t>(q) + 1, 0);
  for (int t = 0; t < tau; ++t) label.theta[static_cast<std::size_t>(t)] = 1;
  if (event_flag) {
    label.theta[static_cast<std::size_t>(tau)] = 1;
    label.gamma[static_cast<std::size_t>(tau)] = 1;
  }
  return label;
}

std::vector<double> survival_from_hazard(const std::vector<double>& hazards) {
  std::vector<double> s(hazards.size());
  double acc = 1.0;
  for (std::size_t t = 0; t < hazards.size(); ++t) {
    const double h = hazards[t];
    if (!(h >= 0.0 && h <= 1.0))
      throw std::invalid_argument("survival_from_hazard: hazard outside [0,1]");
    acc *= 1.0 - h;
    s[t] = acc;
  }
  return s;
}

}  // namespace deepsdrf
