#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "spellhaz/cox.hpp"
#include "spellhaz/spells.hpp"

namespace spellhaz {

// Concordance over comparable spell pairs: one spell fails at t, the other is
// at risk past t in the same stratum (its window contains t strictly). Scores
// are the linear predictors of the intervals covering t; score ties count
// one half. Throws when no pair is comparable.
double harrell_c(const CoxFit& fit, const SpellDataset& ds);

// Same statistic for externally supplied per-interval scores.
double harrell_c_scores(const SpellDataset& ds, const std::vector<double>& interval_scores);

struct CoxSnellResiduals {
  std::vector<double> values;  // one per spell, median-adjusted
  std::vector<bool> event;
};

// Fitted cumulative hazard of each spell at its stop; censored spells receive
// the unit-exponential median ln 2 on top.
CoxSnellResiduals cox_snell_residuals(const CoxFit& fit, const SpellDataset& ds);

enum class KsMode : int { OneSample = 0, TwoSample = 1 };

// Kolmogorov-Smirnov distance of a sample from the unit exponential: against
// the analytic CDF (one-sample) or against a seeded reference sample of equal
// size (two-sample).
double ks_statistic(const std::vector<double>& sample, KsMode mode, std::uint64_t seed = 1);

struct TROCConfig {
  double lambda = 0.05;                      // neighbourhood half-mass; 2*lambda in (0,1)
  std::vector<int> horizons{3, 12, 24, 36};
};

enum class TROCVariant : int { Classical = 0, Clustered = 1 };

struct TROCPoint {
  double threshold = 0.0;  // -inf/+inf endpoints use +-infinity
  double fpr = 0.0;
  double tpr = 0.0;
};

struct TROCCurve {
  TROCVariant variant = TROCVariant::Classical;
  int horizon = 0;
  bool defined = false;       // false when no event mass falls inside the horizon
  std::vector<TROCPoint> raw;     // descending threshold, from (0,0) towards (1,1)
  std::vector<TROCPoint> clean;   // cumulative-max monotone cleanup of raw
  double tauc = 0.0;          // trapezoidal area under the clean polyline
};

// One observation per marker; clustered inputs additionally tag each marker
// with its spell (consecutive equal ids form one spell).
struct MarkerSample {
  std::vector<double> marker;
  std::vector<int> time;      // subject/spell age T
  std::vector<bool> event;    // resolved through the main event
  std::vector<int> spell_id;  // clustered only; empty for classical use
};

// Nearest-neighbour (0/1 kernel) estimate of the time-dependent ROC curve at
// one horizon, thresholds on the percentile grid of the marker sample.
TROCCurve troc_classical(const MarkerSample& sample, const TROCConfig& config, int horizon);

// Mean-adjusted variant: inner averages run over each spell's qualifying
// markers, the outer average over spells; spells with no qualifying marker
// contribute zero.
TROCCurve troc_clustered(const MarkerSample& sample, const TROCConfig& config, int horizon);

// Trapezoidal area under a monotone (fpr, tpr) polyline through (0,0), (1,1).
double tauc(const std::vector<TROCPoint>& points);

// One marker per spell: the linear predictor at the spell's final interval.
MarkerSample spell_markers(const CoxFit& fit, const SpellDataset& ds);
// All per-period markers, tagged by spell, for the clustered estimator.
MarkerSample period_markers(const CoxFit& fit, const SpellDataset& ds);

// One-covariate fit plus its concordance, for importance ranking.
struct SingleFactorResult {
  std::string covariate;
  CoxFit fit;
  double c = 0.0;
};

SingleFactorResult screen_single_factor(const SpellDataset& ds, const std::string& covariate,
                                        const CoxFitOptions& options = {});

void emit_troc_csv(const TROCCurve& curve, bool cleaned, std::ostream& out);

}  // namespace spellhaz
