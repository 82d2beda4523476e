#pragma once

#include <iosfwd>
#include <vector>

#include "spellhaz/cox.hpp"
#include "spellhaz/spells.hpp"

namespace spellhaz {

// Product-limit estimate on the dataset's own time axis (gap time for
// TFD/PWP built data, loan age for AG), pooled across strata. Left truncation
// is respected: n_t counts spells with entry < t <= stop.
struct KaplanMeier {
  std::vector<int> times;       // unique failure times, ascending
  std::vector<int> n_at_risk;   // n_t
  std::vector<int> n_events;    // d_t
  std::vector<double> hazard;   // d_t / n_t
  std::vector<double> survival; // product-limit S(t)

  double survival_at(int t) const;  // S(t); 1 before the first failure time
};

KaplanMeier kaplan_meier(const SpellDataset& ds);

enum class TermStructureKind : int { Actual = 0, Predicted = 1 };

// Event-probability series on t = 1..horizon; zero where no mass falls.
struct TermStructure {
  TermStructureKind kind = TermStructureKind::Actual;
  int horizon = 0;
  std::vector<double> probs;     // index t-1
  std::vector<int> n_at_risk;    // actual: KM n_t; predicted: spells covering t

  double at(int t) const { return t >= 1 && t <= horizon ? probs[static_cast<std::size_t>(t) - 1] : 0.0; }
};

// f_A(t) = S(t-1) h(t) at each failure time within the horizon.
TermStructure actual_term_structure(const SpellDataset& ds, int horizon);

// Portfolio average of the per-spell one-step event probabilities
// f_P(t, x) = S(t-1|x) - S(t|x), averaged over the spells whose observation
// window covers t. Parallel over a fixed block partition so results do not
// depend on the thread count.
TermStructure predicted_term_structure(const CoxFit& fit, const SpellDataset& ds, int horizon,
                                       int threads = 1);

// Mean absolute gap with the denominator T - t1, exactly as the summary is
// defined (the sum itself runs over T - t1 + 1 points).
double term_structure_mae(const TermStructure& a, const TermStructure& b, int t1, int horizon);

void emit_term_structure_csv(const TermStructure& ts, std::ostream& out);
void emit_term_structure_overlay_csv(const TermStructure& actual, const TermStructure& predicted,
                                     std::ostream& out);

}  // namespace spellhaz
