#include "spellhaz/nonparametric.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <map>
#include <ostream>

namespace spellhaz {

double KaplanMeier::survival_at(int t) const {
  // survival steps down at failure times only
  auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - times.begin()) - 1];
}

namespace {

struct SpellWindow {
  int entry = 0;
  int stop = 0;
  bool event = false;
};

std::vector<SpellWindow> spell_windows(const SpellDataset& ds) {
  std::vector<SpellWindow> out;
  for (const auto& range : spell_ranges(ds)) {
    const SpellRecord& first = ds.records[range.first];
    const SpellRecord& last = ds.records[range.last - 1];
    out.push_back({first.entry, last.stop, last.status});
  }
  return out;
}

}  // namespace

KaplanMeier kaplan_meier(const SpellDataset& ds) {
  const auto windows = spell_windows(ds);
  std::map<int, int> events;
  for (const auto& w : windows) {
    if (w.event) ++events[w.stop];
  }
  KaplanMeier km;
  double surv = 1.0;
  for (const auto& [t, d] : events) {
    int n = 0;
    for (const auto& w : windows) {
      if (w.entry < t && t <= w.stop) ++n;
    }
    const double h = static_cast<double>(d) / n;
    surv *= 1.0 - h;
    km.times.push_back(t);
    km.n_at_risk.push_back(n);
    km.n_events.push_back(d);
    km.hazard.push_back(h);
    km.survival.push_back(surv);
  }
  return km;
}

TermStructure actual_term_structure(const SpellDataset& ds, int horizon) {
  if (horizon < 1) throw input_error("term-structure horizon must be >= 1");
  const KaplanMeier km = kaplan_meier(ds);
  TermStructure ts;
  ts.kind = TermStructureKind::Actual;
  ts.horizon = horizon;
  ts.probs.assign(static_cast<std::size_t>(horizon), 0.0);
  ts.n_at_risk.assign(static_cast<std::size_t>(horizon), 0);

  const auto windows = spell_windows(ds);
  for (int t = 1; t <= horizon; ++t) {
    int n = 0;
    for (const auto& w : windows) {
      if (w.entry < t && t <= w.stop) ++n;
    }
    ts.n_at_risk[static_cast<std::size_t>(t) - 1] = n;
  }
  for (std::size_t k = 0; k < km.times.size(); ++k) {
    const int t = km.times[k];
    if (t > horizon) break;
    const double s_prev = k == 0 ? 1.0 : km.survival[k - 1];
    ts.probs[static_cast<std::size_t>(t) - 1] = s_prev * km.hazard[k];
  }
  return ts;
}

TermStructure predicted_term_structure(const CoxFit& fit, const SpellDataset& ds, int horizon,
                                       int threads) {
  if (horizon < 1) throw input_error("term-structure horizon must be >= 1");
  if (!fit.converged) throw std::invalid_argument("predicted term-structure requires a converged fit");
  const auto ranges = spell_ranges(ds);
  const std::vector<double> eta = linear_predictors(fit, ds);

  // fixed block partition keeps the reduction order independent of threads
  const std::size_t n_blocks = 64;
  struct Block {
    std::vector<double> sum;
    std::vector<int> count;
  };
  std::vector<Block> blocks(n_blocks);
  auto run_block = [&](std::size_t b) {
    Block& blk = blocks[b];
    blk.sum.assign(static_cast<std::size_t>(horizon), 0.0);
    blk.count.assign(static_cast<std::size_t>(horizon), 0);
    for (std::size_t s = b; s < ranges.size(); s += n_blocks) {
      const SpellRange& range = ranges[s];
      const int stratum =
          ds.technique == Technique::PWP ? ds.records[range.first].spell_num_binned : 0;
      const BaselineStratum* base = nullptr;
      for (const auto& cand : fit.baseline) {
        if (cand.stratum == stratum) {
          base = &cand;
          break;
        }
      }
      const int span_entry = ds.records[range.first].entry;
      const int span_stop = ds.records[range.last - 1].stop;
      std::size_t rec = range.first;
      std::size_t step = 0;
      if (base != nullptr) {
        step = static_cast<std::size_t>(
            std::upper_bound(base->times.begin(), base->times.end(), span_entry) -
            base->times.begin());
      }
      double cum = 0.0;
      double s_prev = 1.0;
      for (int t = span_entry + 1; t <= span_stop && t <= horizon; ++t) {
        while (rec < range.last && ds.records[rec].stop < t) ++rec;
        if (base != nullptr && step < base->times.size() && base->times[step] == t) {
          cum += base->increment[step] * std::exp(eta[rec]);
          ++step;
        }
        const double s_cur = std::exp(-cum);
        blk.sum[static_cast<std::size_t>(t) - 1] += s_prev - s_cur;
        ++blk.count[static_cast<std::size_t>(t) - 1];
        s_prev = s_cur;
      }
    }
  };

  const int n_threads = std::max(1, threads);
  if (n_threads == 1) {
    for (std::size_t b = 0; b < n_blocks; ++b) run_block(b);
  } else {
    std::vector<std::future<void>> futures;
    std::atomic<std::size_t> next{0};
    for (int w = 0; w < n_threads; ++w) {
      futures.push_back(std::async(std::launch::async, [&]() {
        for (std::size_t b = next.fetch_add(1); b < n_blocks; b = next.fetch_add(1)) {
          run_block(b);
        }
      }));
    }
    for (auto& f : futures) f.get();
  }

  TermStructure ts;
  ts.kind = TermStructureKind::Predicted;
  ts.horizon = horizon;
  ts.probs.assign(static_cast<std::size_t>(horizon), 0.0);
  ts.n_at_risk.assign(static_cast<std::size_t>(horizon), 0);
  for (int t = 0; t < horizon; ++t) {
    double sum = 0.0;
    int count = 0;
    for (const auto& blk : blocks) {
      sum += blk.sum[static_cast<std::size_t>(t)];
      count += blk.count[static_cast<std::size_t>(t)];
    }
    ts.n_at_risk[static_cast<std::size_t>(t)] = count;
    ts.probs[static_cast<std::size_t>(t)] = count > 0 ? sum / count : 0.0;
  }
  return ts;
}

double term_structure_mae(const TermStructure& a, const TermStructure& b, int t1, int horizon) {
  if (horizon <= t1) throw input_error("term_structure_mae requires horizon > t1");
  double sum = 0.0;
  for (int t = t1; t <= horizon; ++t) sum += std::abs(a.at(t) - b.at(t));
  return sum / (horizon - t1);
}

void emit_term_structure_csv(const TermStructure& ts, std::ostream& out) {
  out << "t,f,n_at_risk\n";
  for (int t = 1; t <= ts.horizon; ++t) {
    out << t << ',' << format_double(ts.at(t)) << ','
        << ts.n_at_risk[static_cast<std::size_t>(t) - 1] << '\n';
  }
}

void emit_term_structure_overlay_csv(const TermStructure& actual, const TermStructure& predicted,
                                     std::ostream& out) {
  out << "t,f_actual,f_predicted,abs_gap\n";
  const int horizon = std::max(actual.horizon, predicted.horizon);
  for (int t = 1; t <= horizon; ++t) {
    const double fa = actual.at(t);
    const double fp = predicted.at(t);
    out << t << ',' << format_double(fa) << ',' << format_double(fp) << ','
        << format_double(std::abs(fa - fp)) << '\n';
  }
}

}  // namespace spellhaz
