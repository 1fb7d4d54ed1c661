#pragma once

#include <cstdint>
#include <vector>

namespace deepsdrf {

// Longitudinal outcome label of one patient over steps 0..q: `gamma` holds
// the event indicator (at most one 1, at the event step), `theta` the loss
// mask (1 while the patient is observed; the event step itself is included
// so the positive label contributes, the censoring step is not).
struct LabelMatrix {
  std::vector<std::uint8_t> theta;
  std::vector<std::uint8_t> gamma;
};

LabelMatrix build_labels(int event_time, int censor_time, bool event_flag, int q);

// s(t) = prod_{j<=t} (1 - h(j)). Rejects hazards outside [0,1].
std::vector<double> survival_from_hazard(const std::vector<double>& hazards);

}  // namespace deepsdrf
