#include "spellhaz/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

namespace spellhaz {

SplitResult split_sample(const Panel& panel, double train_fraction,
                         const std::map<std::string, std::string>& strata, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw input_error("train_fraction must lie in the open interval (0,1)");
  }

  std::map<std::string, std::vector<std::string>> loans_by_stratum;
  std::string cur;
  for (const auto& row : panel.rows) {
    if (row.loan_id == cur) continue;
    cur = row.loan_id;
    auto it = strata.find(row.loan_id);
    if (it == strata.end()) throw input_error("loan " + row.loan_id + " has no stratum label");
    if (it->second.empty()) throw input_error("loan " + row.loan_id + " has an empty stratum label");
    loans_by_stratum[it->second].push_back(row.loan_id);
  }
  if (loans_by_stratum.empty()) throw input_error("panel has no loans to split");

  std::set<std::string> train_ids;
  for (auto& [label, loans] : loans_by_stratum) {
    DetRng rng(mix64(seed, fnv1a64(label)));
    det_shuffle(loans, rng);
    const auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(loans.size())));
    for (std::size_t i = 0; i < n_train && i < loans.size(); ++i) train_ids.insert(loans[i]);
  }

  SplitResult out;
  out.train.schema = panel.schema;
  out.train.calendar_origin = panel.calendar_origin;
  out.validation.schema = panel.schema;
  out.validation.calendar_origin = panel.calendar_origin;
  for (const auto& row : panel.rows) {
    (train_ids.count(row.loan_id) ? out.train : out.validation).rows.push_back(row);
  }
  return out;
}

std::map<std::string, std::string> outcome_strata(const Panel& panel) {
  int last_period = 0;
  for (const auto& row : panel.rows) last_period = std::max(last_period, row.period);
  std::map<std::string, std::string> labels;
  for (std::size_t i = 0; i < panel.rows.size(); ++i) {
    const bool last_of_loan =
        i + 1 == panel.rows.size() || panel.rows[i + 1].loan_id != panel.rows[i].loan_id;
    if (!last_of_loan) continue;
    const PanelRow& row = panel.rows[i];
    std::string label;
    switch (row.state) {
      case LoanState::Settled: label = "settled"; break;
      case LoanState::WriteOff: label = "written-off"; break;
      case LoanState::Default: label = "defaulted"; break;
      case LoanState::Performing:
        label = row.period >= last_period ? "active" : "completed";
        break;
    }
    labels[row.loan_id] = label;
  }
  return labels;
}

ResolutionSeries resolution_rate(const SpellDataset& ds, ResolutionType kappa) {
  ResolutionSeries series;
  series.kappa = kappa;

  std::map<int, std::pair<int, int>> cohorts;  // stop month -> (n, hits)
  for (const auto& range : spell_ranges(ds)) {
    const SpellRecord& last = ds.records[range.last - 1];
    int stop = last.period;
    if (stop < 0) {
      if (ds.technique == Technique::PWP) {
        throw input_error(
            "resolution_rate needs calendar stop times; PWP records loaded without panel "
            "periods cannot provide them");
      }
      stop = last.stop;  // TFD/AG ride the calendar axis
    }
    auto& cohort = cohorts[stop];
    ++cohort.first;
    if (last.resolution == kappa) ++cohort.second;
  }
  for (const auto& [t, cohort] : cohorts) {
    series.times.push_back(t);
    series.n_at_risk.push_back(cohort.first);
    series.rates.push_back(static_cast<double>(cohort.second) / cohort.first);
  }
  return series;
}

double avg_discrepancy(const ResolutionSeries& a, const ResolutionSeries& b) {
  if (a.kappa != b.kappa) {
    throw input_error("avg_discrepancy: series compare different resolution types");
  }
  double sum = 0.0;
  int shared = 0;
  std::size_t ia = 0, ib = 0;
  while (ia < a.times.size() && ib < b.times.size()) {
    if (a.times[ia] < b.times[ib]) {
      ++ia;
    } else if (a.times[ia] > b.times[ib]) {
      ++ib;
    } else {
      sum += std::abs(a.rates[ia] - b.rates[ib]);
      ++shared;
      ++ia;
      ++ib;
    }
  }
  if (shared == 0) throw input_error("avg_discrepancy: series share no time points");
  return sum / shared;
}

void emit_resolution_series_csv(const ResolutionSeries& series, std::ostream& out) {
  out << "t_prime,n,rate\n";
  for (std::size_t i = 0; i < series.times.size(); ++i) {
    out << series.times[i] << ',' << series.n_at_risk[i] << ',' << format_double(series.rates[i])
        << '\n';
  }
}

}  // namespace spellhaz
