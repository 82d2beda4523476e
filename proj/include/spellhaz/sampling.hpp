#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "spellhaz/spells.hpp"

namespace spellhaz {

struct SplitResult {
  Panel train;
  Panel validation;
};

// Stratified clustered split: whole loan histories are assigned to exactly
// one side, with round(train_fraction * stratum size) loans per stratum going
// to training. Deterministic for a fixed seed; the per-stratum stream is
// derived from the stratum label so label iteration order does not matter.
SplitResult split_sample(const Panel& panel, double train_fraction,
                         const std::map<std::string, std::string>& strata, std::uint64_t seed);

// Convenience stratum labelling from the panel itself: a loan's final row
// decides its label (settled / written-off / defaulted / active), where
// active means the history runs to the panel's last observed period.
std::map<std::string, std::string> outcome_strata(const Panel& panel);

struct ResolutionSeries {
  ResolutionType kappa = ResolutionType::Default;
  std::vector<int> times;      // calendar periods t' with n > 0, ascending
  std::vector<int> n_at_risk;  // spells stopping at t'
  std::vector<double> rates;   // share of those spells resolving into kappa
};

// Cohort-end resolution rate r_kappa(t'): among spells whose calendar stop
// month is t', the proportion resolving into type kappa. Spell stops are read
// from the records' panel periods (any technique) or, failing that, from the
// AG stop axis.
ResolutionSeries resolution_rate(const SpellDataset& ds, ResolutionType kappa);

// Average discrepancy: mean absolute rate gap over time points where both
// series are defined. Throws when the series share no time points or differ
// in resolution type.
double avg_discrepancy(const ResolutionSeries& a, const ResolutionSeries& b);

void emit_resolution_series_csv(const ResolutionSeries& series, std::ostream& out);

}  // namespace spellhaz
