#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spellhaz/panel.hpp"

namespace spellhaz {

// Discrete-time portfolio simulator with a known hazard structure. Each
// performing month of spell j carries default probability
// 1 - exp(-h_j exp(beta'x)), competing with a flat settlement probability;
// after a default the loan cures with cure_prob per month and re-enters
// performing status in spell j+1. Per-loan RNG streams are derived from
// (seed, loan index), so output is independent of evaluation order.
struct GeneratorSpec {
  int n_loans = 1000;
  int max_horizon = 120;                  // administrative censoring at this loan age
  std::vector<double> true_beta;          // length n_fixed + n_ar
  std::vector<double> baseline_hazards{0.02};  // per spell number; last entry reused beyond
  double cure_prob = 0.0;                 // monthly cure probability inside a default episode
  double settle_hazard = 0.0;             // monthly settlement probability
  int censor_min = 0;                     // optional uniform per-loan censor age;
  int censor_max = 0;                     // 0/0 keeps only the administrative horizon
  int n_fixed = 1;                        // time-fixed standard normal covariates x1..xk
  int n_ar = 0;                           // AR(1) standard normal covariates z1..zk
  double ar_rho = 0.8;
  std::uint64_t seed = 1;

  void check() const;  // throws input_error on out-of-range fields
};

GeneratorSpec generator_spec_from_json(const std::string& json_text);
std::string generator_spec_to_json(const GeneratorSpec& spec);

std::vector<std::string> generator_schema(const GeneratorSpec& spec);

Panel generate(const GeneratorSpec& spec);

}  // namespace spellhaz
