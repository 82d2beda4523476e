#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace oracle {

using spellhaz::MarkerSample;
using spellhaz::SpellDataset;
using spellhaz::SpellRecord;
using spellhaz::Technique;
using spellhaz::TiesMethod;

namespace {

int stratum_of(const SpellDataset& ds, const SpellRecord& rec) {
  return ds.technique == Technique::PWP ? rec.spell_num_binned : 0;
}

double eta_of(const SpellRecord& rec, const std::vector<double>& beta) {
  double eta = 0.0;
  for (std::size_t c = 0; c < beta.size(); ++c) eta += beta[c] * rec.covariates.at(c);
  return eta;
}

}  // namespace

double log_partial_likelihood(const SpellDataset& ds, const std::vector<double>& beta,
                              TiesMethod ties) {
  std::set<int> strata;
  for (const auto& rec : ds.records) strata.insert(stratum_of(ds, rec));
  double lpl = 0.0;
  for (int stratum : strata) {
    std::set<int> times;
    for (const auto& rec : ds.records) {
      if (stratum_of(ds, rec) == stratum && rec.status) times.insert(rec.stop);
    }
    for (int t : times) {
      double s0 = 0.0, e0 = 0.0, eta_events = 0.0;
      int d = 0;
      for (const auto& rec : ds.records) {
        if (stratum_of(ds, rec) != stratum) continue;
        if (!(rec.entry < t && t <= rec.stop)) continue;
        const double w = std::exp(eta_of(rec, beta));
        s0 += w;
        if (rec.status && rec.stop == t) {
          e0 += w;
          eta_events += eta_of(rec, beta);
          ++d;
        }
      }
      lpl += eta_events;
      if (ties == TiesMethod::Breslow) {
        lpl -= d * std::log(s0);
      } else {
        for (int l = 0; l < d; ++l) {
          lpl -= std::log(s0 - (static_cast<double>(l) / d) * e0);
        }
      }
    }
  }
  return lpl;
}

double golden_section_max(const std::function<double(double)>& f, double lo, double hi,
                          double tol) {
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  return (a + b) / 2.0;
}

std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> x, double step) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double save = x[i];
    x[i] = save + step;
    const double up = f(x);
    x[i] = save - step;
    const double down = f(x);
    x[i] = save;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

std::vector<std::vector<double>> fd_hessian(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    double step) {
  const std::size_t p = x.size();
  std::vector<std::vector<double>> h(p, std::vector<double>(p, 0.0));
  const double f0 = f(x);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i; j < p; ++j) {
      double val;
      if (i == j) {
        const double save = x[i];
        x[i] = save + step;
        const double up = f(x);
        x[i] = save - step;
        const double down = f(x);
        x[i] = save;
        val = (up - 2.0 * f0 + down) / (step * step);
      } else {
        const double si = x[i], sj = x[j];
        x[i] = si + step; x[j] = sj + step;
        const double pp = f(x);
        x[j] = sj - step;
        const double pm = f(x);
        x[i] = si - step; x[j] = sj + step;
        const double mp = f(x);
        x[j] = sj - step;
        const double mm = f(x);
        x[i] = si; x[j] = sj;
        val = (pp - pm - mp + mm) / (4.0 * step * step);
      }
      h[i][j] = h[j][i] = val;
    }
  }
  return h;
}

std::map<int, std::vector<ScanRiskSet>> scan_risk_sets(const SpellDataset& ds) {
  std::map<int, std::vector<ScanRiskSet>> out;
  std::map<int, std::set<int>> times;
  for (const auto& rec : ds.records) {
    if (rec.status) times[stratum_of(ds, rec)].insert(rec.stop);
  }
  for (const auto& [stratum, ts] : times) {
    for (int t : ts) {
      ScanRiskSet rs;
      rs.time = t;
      for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const auto& rec = ds.records[i];
        if (stratum_of(ds, rec) != stratum) continue;
        if (rec.entry < t && t <= rec.stop) {
          rs.at_risk.push_back(i);
          if (rec.status && rec.stop == t) rs.events.push_back(i);
        }
      }
      out[stratum].push_back(std::move(rs));
    }
  }
  return out;
}

std::map<int, std::vector<std::pair<int, double>>> scan_breslow(const SpellDataset& ds,
                                                                const std::vector<double>& beta) {
  std::map<int, std::vector<std::pair<int, double>>> out;
  for (const auto& [stratum, sets] : scan_risk_sets(ds)) {
    for (const auto& rs : sets) {
      double denom = 0.0;
      for (std::size_t i : rs.at_risk) denom += std::exp(eta_of(ds.records[i], beta));
      out[stratum].emplace_back(rs.time, static_cast<double>(rs.events.size()) / denom);
    }
  }
  return out;
}

double pairwise_concordance(const SpellDataset& ds, const std::vector<double>& interval_scores) {
  struct Spell {
    int entry, stop, stratum;
    bool event;
    std::size_t first, last;
  };
  std::vector<Spell> spells;
  for (const auto& range : spellhaz::spell_ranges(ds)) {
    const auto& head = ds.records[range.first];
    const auto& tail = ds.records[range.last - 1];
    spells.push_back({head.entry, tail.stop, stratum_of(ds, head), tail.status, range.first,
                      range.last});
  }
  auto score_at = [&](const Spell& sp, int t) {
    for (std::size_t i = sp.first; i < sp.last; ++i) {
      if (ds.records[i].entry < t && t <= ds.records[i].stop) return interval_scores[i];
    }
    return interval_scores[sp.last - 1];
  };
  double concordant = 0.0;
  long long total = 0;
  for (std::size_t a = 0; a < spells.size(); ++a) {
    if (!spells[a].event) continue;
    const int t = spells[a].stop;
    for (std::size_t b = 0; b < spells.size(); ++b) {
      if (a == b || spells[b].stratum != spells[a].stratum) continue;
      if (!(spells[b].entry < t && t < spells[b].stop)) continue;
      const double sa = score_at(spells[a], t);
      const double sb = score_at(spells[b], t);
      if (sa > sb) concordant += 1.0;
      else if (sa == sb) concordant += 0.5;
      ++total;
    }
  }
  return concordant / static_cast<double>(total);
}

double km_survival_at(const SpellDataset& ds, int t) {
  struct W {
    int entry, stop;
    bool event;
  };
  std::vector<W> windows;
  for (const auto& range : spellhaz::spell_ranges(ds)) {
    windows.push_back({ds.records[range.first].entry, ds.records[range.last - 1].stop,
                       ds.records[range.last - 1].status});
  }
  std::set<int> times;
  for (const auto& w : windows) {
    if (w.event && w.stop <= t) times.insert(w.stop);
  }
  double surv = 1.0;
  for (int u : times) {
    int d = 0, n = 0;
    for (const auto& w : windows) {
      if (w.entry < u && u <= w.stop) {
        ++n;
        if (w.event && w.stop == u) ++d;
      }
    }
    surv *= 1.0 - static_cast<double>(d) / n;
  }
  return surv;
}

namespace {

// literal marker-level machinery shared by the two brute-force tROC variants
struct BruteNN {
  std::vector<double> scond;  // per marker
  std::vector<double> ecdf;   // per marker, F(m_s)
  std::size_t n = 0;

  BruteNN(const MarkerSample& sample, double lambda, int horizon) {
    n = sample.marker.size();
    ecdf.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
      long long below = 0;
      for (std::size_t r = 0; r < n; ++r) {
        if (sample.marker[r] <= sample.marker[s]) ++below;
      }
      ecdf[s] = static_cast<double>(below) / static_cast<double>(n);
    }
    std::set<int> fail;
    for (std::size_t s = 0; s < n; ++s) {
      if (sample.event[s] && sample.time[s] <= horizon) fail.insert(sample.time[s]);
    }
    scond.assign(n, 1.0);
    for (std::size_t s = 0; s < n; ++s) {
      double prod = 1.0;
      for (int q : fail) {
        double num = 0.0, den = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          const bool in_kernel = std::abs(ecdf[s] - ecdf[r]) < lambda;
          if (!in_kernel) continue;
          if (sample.time[r] >= q) den += 1.0;
          if (sample.event[r] && sample.time[r] == q) num += 1.0;
        }
        if (den > 0.0) prod *= 1.0 - num / den;
      }
      scond[s] = prod;
    }
  }
};

}  // namespace

BruteTrocPoint brute_troc_classical(const MarkerSample& sample, double lambda, int horizon,
                                    double threshold) {
  const BruteNN nn(sample, lambda, horizon);
  const std::size_t n = nn.n;
  double s_pc = 0.0, s_all = 0.0;
  long long below = 0;
  for (std::size_t s = 0; s < n; ++s) {
    s_all += nn.scond[s];
    if (sample.marker[s] > threshold) s_pc += nn.scond[s];
    if (sample.marker[s] <= threshold) ++below;
  }
  s_pc /= static_cast<double>(n);
  s_all /= static_cast<double>(n);
  const double f_m = static_cast<double>(below) / static_cast<double>(n);
  BruteTrocPoint pt;
  pt.defined = 1.0 - s_all > 0.0;
  if (!pt.defined) return pt;
  pt.tpr = ((1.0 - f_m) - s_pc) / (1.0 - s_all);
  pt.fpr = s_pc / s_all;
  return pt;
}

BruteTrocPoint brute_troc_clustered(const MarkerSample& sample, double lambda, int horizon,
                                    double threshold) {
  const BruteNN nn(sample, lambda, horizon);
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  std::size_t i = 0;
  while (i < sample.marker.size()) {
    std::size_t j = i + 1;
    while (j < sample.marker.size() && sample.spell_id[j] == sample.spell_id[i]) ++j;
    groups.emplace_back(i, j);
    i = j;
  }
  auto mean_adjusted = [&](double p_c) {
    double outer_s = 0.0, outer_f = 0.0;
    for (const auto& [lo, hi] : groups) {
      double in_s = 0.0, in_f = 0.0;
      int eta_s = 0, eta_f = 0;
      for (std::size_t s = lo; s < hi; ++s) {
        if (sample.marker[s] > p_c) {
          in_s += nn.scond[s];
          ++eta_s;
        }
        if (sample.marker[s] <= p_c) {
          in_f += 1.0;
          ++eta_f;
        }
      }
      if (eta_s > 0) outer_s += in_s / eta_s;
      if (eta_f > 0) outer_f += in_f / eta_f;
    }
    return std::pair<double, double>{outer_s / groups.size(), outer_f / groups.size()};
  };
  const double s_all = mean_adjusted(-std::numeric_limits<double>::infinity()).first;
  BruteTrocPoint pt;
  pt.defined = 1.0 - s_all > 0.0;
  if (!pt.defined) return pt;
  const auto [s_pc, f_m] = mean_adjusted(threshold);
  pt.tpr = ((1.0 - f_m) - s_pc) / (1.0 - s_all);
  pt.fpr = s_pc / s_all;
  return pt;
}

double trapezoid(const std::vector<std::pair<double, double>>& points) {
  double area = 0.0, x = 0.0, y = 0.0;
  for (const auto& [px, py] : points) {
    area += (px - x) * (py + y) / 2.0;
    x = px;
    y = py;
  }
  area += (1.0 - x) * (1.0 + y) / 2.0;
  return area;
}

}  // namespace oracle
