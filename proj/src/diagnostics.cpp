#include "spellhaz/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include "spellhaz/util.hpp"

namespace spellhaz {

namespace {

struct SpellView {
  int entry = 0;
  int stop = 0;
  bool event = false;
  int stratum = 0;
  std::size_t first = 0;  // record range
  std::size_t last = 0;
};

std::vector<SpellView> spell_views(const SpellDataset& ds) {
  std::vector<SpellView> out;
  for (const auto& range : spell_ranges(ds)) {
    const SpellRecord& head = ds.records[range.first];
    const SpellRecord& tail = ds.records[range.last - 1];
    SpellView v;
    v.entry = head.entry;
    v.stop = tail.stop;
    v.event = tail.status;
    v.stratum = ds.technique == Technique::PWP ? head.spell_num_binned : 0;
    v.first = range.first;
    v.last = range.last;
    out.push_back(v);
  }
  return out;
}

// score of the interval covering time t within [first, last)
double score_at(const SpellDataset& ds, const std::vector<double>& scores, std::size_t first,
                std::size_t last, int t) {
  for (std::size_t i = first; i < last; ++i) {
    if (ds.records[i].entry < t && t <= ds.records[i].stop) return scores[i];
  }
  return scores[last - 1];
}

}  // namespace

double harrell_c_scores(const SpellDataset& ds, const std::vector<double>& interval_scores) {
  if (interval_scores.size() != ds.records.size()) {
    throw std::invalid_argument("harrell_c: one score per interval required");
  }
  const auto spells = spell_views(ds);
  double concordant = 0.0;
  long long comparable = 0;
  for (const auto& a : spells) {
    if (!a.event) continue;
    const int t = a.stop;
    const double score_a = score_at(ds, interval_scores, a.first, a.last, t);
    for (const auto& b : spells) {
      if (&b == &a || b.stratum != a.stratum) continue;
      if (!(b.entry < t && t < b.stop)) continue;  // must be at risk past t
      const double score_b = score_at(ds, interval_scores, b.first, b.last, t);
      if (score_a > score_b) {
        concordant += 1.0;
      } else if (score_a == score_b) {
        concordant += 0.5;
      }
      ++comparable;
    }
  }
  if (comparable == 0) throw input_error("harrell_c: no comparable spell pairs");
  return concordant / static_cast<double>(comparable);
}

double harrell_c(const CoxFit& fit, const SpellDataset& ds) {
  return harrell_c_scores(ds, linear_predictors(fit, ds));
}

CoxSnellResiduals cox_snell_residuals(const CoxFit& fit, const SpellDataset& ds) {
  const std::vector<double> eta = linear_predictors(fit, ds);
  CoxSnellResiduals out;
  for (const auto& range : spell_ranges(ds)) {
    const int stratum =
        ds.technique == Technique::PWP ? ds.records[range.first].spell_num_binned : 0;
    const BaselineStratum* base = nullptr;
    for (const auto& cand : fit.baseline) {
      if (cand.stratum == stratum) {
        base = &cand;
        break;
      }
    }
    double cum = 0.0;
    if (base != nullptr) {
      for (std::size_t i = range.first; i < range.last; ++i) {
        const SpellRecord& rec = ds.records[i];
        auto lo = std::upper_bound(base->times.begin(), base->times.end(), rec.entry);
        auto hi = std::upper_bound(base->times.begin(), base->times.end(), rec.stop);
        for (auto it = lo; it != hi; ++it) {
          cum += base->increment[static_cast<std::size_t>(it - base->times.begin())] *
                 std::exp(eta[i]);
        }
      }
    }
    const bool event = ds.records[range.last - 1].status;
    out.values.push_back(event ? cum : cum + std::log(2.0));
    out.event.push_back(event);
  }
  return out;
}

double ks_statistic(const std::vector<double>& sample, KsMode mode, std::uint64_t seed) {
  if (sample.empty()) throw input_error("ks_statistic: empty sample");
  std::vector<double> x(sample);
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();

  if (mode == KsMode::OneSample) {
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double f = 1.0 - std::exp(-x[i]);  // unit exponential CDF
      const double hi = static_cast<double>(i + 1) / n;
      const double lo = static_cast<double>(i) / n;
      d = std::max(d, std::max(hi - f, f - lo));
    }
    return d;
  }

  DetRng rng(mix64(seed, 0x9e5fULL));
  std::vector<double> ref(n);
  for (auto& r : ref) r = -std::log(rng.next_uniform());
  std::sort(ref.begin(), ref.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < n && j < n) {
    const double v = std::min(x[i], ref[j]);
    while (i < n && x[i] == v) ++i;
    while (j < n && ref[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) - static_cast<double>(j)) / n);
  }
  return d;
}

namespace {

// Shared nearest-neighbour machinery. Markers are grouped by unique value;
// everything downstream works on the value grid, since tied markers share
// their neighbourhood and conditional survivor estimate.
struct NNContext {
  std::vector<double> values;          // unique marker values, ascending
  std::vector<int> count;              // markers per value
  std::vector<long long> cum_count;    // markers at or below value
  std::vector<double> scond;           // conditional survivor at the horizon per value
  std::vector<std::size_t> value_of;   // marker -> value index
  std::size_t n = 0;

  double ecdf_value(std::size_t v) const {
    return static_cast<double>(cum_count[v]) / static_cast<double>(n);
  }
  // empirical F(m) for an arbitrary threshold
  double ecdf(double m) const {
    auto it = std::upper_bound(values.begin(), values.end(), m);
    if (it == values.begin()) return 0.0;
    return ecdf_value(static_cast<std::size_t>(it - values.begin()) - 1);
  }
};

NNContext make_nn_context(const MarkerSample& sample, double lambda, int horizon) {
  const std::size_t n = sample.marker.size();
  if (n == 0) throw input_error("troc: empty marker sample");
  if (!(lambda > 0.0 && 2.0 * lambda < 1.0)) {
    throw input_error("troc: 2*lambda must lie in (0,1)");
  }
  for (double m : sample.marker) {
    if (!std::isfinite(m)) throw input_error("troc: markers must be finite");
  }

  NNContext ctx;
  ctx.n = n;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return sample.marker[a] < sample.marker[b];
  });
  ctx.value_of.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t s = order[k];
    if (ctx.values.empty() || sample.marker[s] != ctx.values.back()) {
      ctx.values.push_back(sample.marker[s]);
      ctx.count.push_back(0);
    }
    ctx.count.back() += 1;
    ctx.value_of[s] = ctx.values.size() - 1;
  }
  ctx.cum_count.resize(ctx.values.size());
  long long running = 0;
  for (std::size_t v = 0; v < ctx.values.size(); ++v) {
    running += ctx.count[v];
    ctx.cum_count[v] = running;
  }

  // unique failure times inside the horizon
  std::vector<int> fail_times;
  for (std::size_t s = 0; s < n; ++s) {
    if (sample.event[s] && sample.time[s] <= horizon) fail_times.push_back(sample.time[s]);
  }
  std::sort(fail_times.begin(), fail_times.end());
  fail_times.erase(std::unique(fail_times.begin(), fail_times.end()), fail_times.end());

  const std::size_t u = ctx.values.size();
  const std::size_t q_count = fail_times.size();
  // per failure time: counts of events-at-q and at-risk-at-q, cumulative over values
  std::vector<std::vector<long long>> ev(q_count, std::vector<long long>(u + 1, 0));
  std::vector<std::vector<long long>> risk(q_count, std::vector<long long>(u + 1, 0));
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t v = ctx.value_of[s];
    for (std::size_t q = 0; q < q_count; ++q) {
      if (sample.event[s] && sample.time[s] == fail_times[q]) ev[q][v + 1] += 1;
      if (sample.time[s] >= fail_times[q]) risk[q][v + 1] += 1;
    }
  }
  for (std::size_t q = 0; q < q_count; ++q) {
    for (std::size_t v = 0; v < u; ++v) {
      ev[q][v + 1] += ev[q][v];
      risk[q][v + 1] += risk[q][v];
    }
  }

  // 0/1 kernel window per value: unique values whose ecdf lies within lambda
  ctx.scond.assign(u, 1.0);
  // the window comparisons evaluate |F(m) - F(m')| < lambda exactly as
  // written so boundary ties round the same way everywhere
  std::size_t lo = 0, hi = 0;
  for (std::size_t v = 0; v < u; ++v) {
    const double center = ctx.ecdf_value(v);
    while (lo < u && !(center - ctx.ecdf_value(lo) < lambda)) ++lo;
    while (hi < u && ctx.ecdf_value(hi) - center < lambda) ++hi;
    // product-limit over failure times with kernel-restricted counts
    double s = 1.0;
    for (std::size_t q = 0; q < q_count; ++q) {
      const long long r = risk[q][hi] - risk[q][lo];
      if (r <= 0) continue;
      const long long e = ev[q][hi] - ev[q][lo];
      s *= 1.0 - static_cast<double>(e) / static_cast<double>(r);
    }
    ctx.scond[v] = s;
  }
  return ctx;
}

// threshold grid: unique marker percentiles (1% steps) plus +-infinity,
// descending so the curve runs from (0,0) to (1,1)
std::vector<double> threshold_grid(const NNContext& ctx) {
  std::vector<double> grid;
  grid.push_back(std::numeric_limits<double>::infinity());
  std::vector<double> qs;
  for (int pct = 99; pct >= 1; --pct) {
    const auto rank = static_cast<long long>(
        std::ceil(static_cast<double>(pct) / 100.0 * static_cast<double>(ctx.n)));
    // order statistic: smallest value whose cumulative count reaches the rank
    auto it = std::lower_bound(ctx.cum_count.begin(), ctx.cum_count.end(), std::max(1ll, rank));
    qs.push_back(ctx.values[static_cast<std::size_t>(it - ctx.cum_count.begin())]);
  }
  std::sort(qs.begin(), qs.end(), std::greater<>());
  qs.erase(std::unique(qs.begin(), qs.end()), qs.end());
  grid.insert(grid.end(), qs.begin(), qs.end());
  grid.push_back(-std::numeric_limits<double>::infinity());
  return grid;
}

TROCCurve assemble_curve(TROCVariant variant, int horizon, const std::vector<double>& grid,
                         const std::vector<double>& fpr, const std::vector<double>& tpr,
                         bool defined) {
  TROCCurve curve;
  curve.variant = variant;
  curve.horizon = horizon;
  curve.defined = defined;
  if (!defined) return curve;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    curve.raw.push_back({grid[k], fpr[k], tpr[k]});
  }
  double max_f = 0.0, max_t = 0.0;
  for (const auto& pt : curve.raw) {
    max_f = std::max(max_f, pt.fpr);
    max_t = std::max(max_t, pt.tpr);
    curve.clean.push_back({pt.threshold, max_f, max_t});
  }
  curve.tauc = tauc(curve.clean);
  return curve;
}

}  // namespace

TROCCurve troc_classical(const MarkerSample& sample, const TROCConfig& config, int horizon) {
  const NNContext ctx = make_nn_context(sample, config.lambda, horizon);
  const std::size_t u = ctx.values.size();

  // suffix sums of the conditional survivor over markers above each value
  std::vector<double> scond_above(u + 1, 0.0);
  double total_scond = 0.0;
  for (std::size_t v = u; v-- > 0;) {
    scond_above[v] = scond_above[v + 1] + ctx.count[v] * ctx.scond[v];
  }
  total_scond = scond_above[0];

  const double s_t = total_scond / static_cast<double>(ctx.n);  // S(t) at p_c = -inf
  const bool defined = 1.0 - s_t > 0.0;

  const auto grid = threshold_grid(ctx);
  std::vector<double> fpr(grid.size(), 0.0), tpr(grid.size(), 0.0);
  if (defined) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double p_c = grid[k];
      // index of the first value strictly above the threshold
      const std::size_t above = static_cast<std::size_t>(
          std::upper_bound(ctx.values.begin(), ctx.values.end(), p_c) - ctx.values.begin());
      const double s_pc_t = scond_above[above] / static_cast<double>(ctx.n);
      const double f_m = above == 0 ? 0.0 : ctx.ecdf_value(above - 1);
      tpr[k] = ((1.0 - f_m) - s_pc_t) / (1.0 - s_t);
      fpr[k] = s_pc_t / s_t;
    }
  }
  return assemble_curve(TROCVariant::Classical, horizon, grid, fpr, tpr, defined);
}

TROCCurve troc_clustered(const MarkerSample& sample, const TROCConfig& config, int horizon) {
  if (sample.spell_id.size() != sample.marker.size()) {
    throw input_error("troc_clustered: markers must carry spell ids");
  }
  const NNContext ctx = make_nn_context(sample, config.lambda, horizon);

  // group markers into spells (consecutive equal ids)
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  std::size_t i = 0;
  while (i < sample.marker.size()) {
    std::size_t j = i + 1;
    while (j < sample.marker.size() && sample.spell_id[j] == sample.spell_id[i]) ++j;
    groups.emplace_back(i, j);
    i = j;
  }
  const double n_spells = static_cast<double>(groups.size());

  // mean-adjusted survivor and marker CDF at a threshold
  auto maa = [&](double p_c) {
    double outer_s = 0.0;
    double outer_f = 0.0;
    for (const auto& [lo, hi] : groups) {
      double inner_s = 0.0, inner_f = 0.0;
      int eta_s = 0, eta_f = 0;
      for (std::size_t s = lo; s < hi; ++s) {
        if (sample.marker[s] > p_c) {
          inner_s += ctx.scond[ctx.value_of[s]];
          ++eta_s;
        } else {
          inner_f += 1.0;
          ++eta_f;
        }
      }
      if (eta_s > 0) outer_s += inner_s / eta_s;
      if (eta_f > 0) outer_f += inner_f / eta_f;
    }
    return std::pair<double, double>{outer_s / n_spells, outer_f / n_spells};
  };

  const double s_t = maa(-std::numeric_limits<double>::infinity()).first;
  const bool defined = 1.0 - s_t > 0.0;

  const auto grid = threshold_grid(ctx);
  std::vector<double> fpr(grid.size(), 0.0), tpr(grid.size(), 0.0);
  if (defined) {
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const auto [s_pc_t, f_m] = maa(grid[k]);
      tpr[k] = ((1.0 - f_m) - s_pc_t) / (1.0 - s_t);
      fpr[k] = s_pc_t / s_t;
    }
  }
  return assemble_curve(TROCVariant::Clustered, horizon, grid, fpr, tpr, defined);
}

double tauc(const std::vector<TROCPoint>& points) {
  double area = 0.0;
  double x_prev = 0.0, y_prev = 0.0;
  for (const auto& pt : points) {
    area += (pt.fpr - x_prev) * (pt.tpr + y_prev) / 2.0;
    x_prev = pt.fpr;
    y_prev = pt.tpr;
  }
  area += (1.0 - x_prev) * (1.0 + y_prev) / 2.0;
  return area;
}

MarkerSample spell_markers(const CoxFit& fit, const SpellDataset& ds) {
  const std::vector<double> eta = linear_predictors(fit, ds);
  MarkerSample out;
  for (const auto& range : spell_ranges(ds)) {
    const SpellRecord& tail = ds.records[range.last - 1];
    out.marker.push_back(eta[range.last - 1]);
    out.time.push_back(tail.spell_age);
    out.event.push_back(tail.status);
  }
  return out;
}

MarkerSample period_markers(const CoxFit& fit, const SpellDataset& ds) {
  const std::vector<double> eta = linear_predictors(fit, ds);
  MarkerSample out;
  int spell_id = 0;
  for (const auto& range : spell_ranges(ds)) {
    const SpellRecord& tail = ds.records[range.last - 1];
    for (std::size_t i = range.first; i < range.last; ++i) {
      out.marker.push_back(eta[i]);
      out.time.push_back(tail.spell_age);
      out.event.push_back(tail.status);
      out.spell_id.push_back(spell_id);
    }
    ++spell_id;
  }
  return out;
}

SingleFactorResult screen_single_factor(const SpellDataset& ds, const std::string& covariate,
                                        const CoxFitOptions& options) {
  CoxFitOptions opt = options;
  opt.covariates = {covariate};
  SingleFactorResult res;
  res.covariate = covariate;
  res.fit = cox_fit(ds, opt);
  res.c = harrell_c(res.fit, ds);
  return res;
}

void emit_troc_csv(const TROCCurve& curve, bool cleaned, std::ostream& out) {
  out << "p_c,fpr,tpr\n";
  if (!curve.defined) return;
  const auto& pts = cleaned ? curve.clean : curve.raw;
  for (const auto& pt : pts) {
    out << format_double(pt.threshold) << ',' << format_double(pt.fpr) << ','
        << format_double(pt.tpr) << '\n';
  }
}

}  // namespace spellhaz
