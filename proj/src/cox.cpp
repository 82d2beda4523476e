#include "spellhaz/cox.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

namespace spellhaz {

const char* ties_name(TiesMethod t) {
  return t == TiesMethod::Efron ? "efron" : "breslow";
}

TiesMethod parse_ties(const std::string& label) {
  if (label == "efron") return TiesMethod::Efron;
  if (label == "breslow") return TiesMethod::Breslow;
  throw input_error("unknown ties method '" + label + "' (supported: efron, breslow)");
}

static int record_stratum(const SpellDataset& ds, const SpellRecord& rec) {
  return ds.technique == Technique::PWP ? rec.spell_num_binned : 0;
}

std::map<int, std::vector<RiskSet>> build_risk_sets(const SpellDataset& ds) {
  std::map<int, std::vector<RiskSet>> out;
  std::map<int, std::set<int>> failure_times;
  for (const auto& rec : ds.records) {
    if (rec.status) failure_times[record_stratum(ds, rec)].insert(rec.stop);
  }
  for (const auto& [stratum, times] : failure_times) {
    auto& sets = out[stratum];
    for (int t : times) {
      RiskSet rs;
      rs.time = t;
      for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const SpellRecord& rec = ds.records[i];
        if (record_stratum(ds, rec) != stratum) continue;
        if (rec.entry < t && t <= rec.stop) {
          rs.at_risk.push_back(i);
          if (rec.status && rec.stop == t) rs.event_set.push_back(i);
        }
      }
      sets.push_back(std::move(rs));
    }
  }
  return out;
}

namespace {

// Flattened fitting problem: one row per interval, covariates restricted to
// the requested subset and centered for numerical stability (the partial
// likelihood is invariant to column shifts).
struct Problem {
  int p = 0;
  std::vector<int> entry, stop, stratum;
  std::vector<char> status;
  Eigen::MatrixXd x;         // n x p, centered
  Eigen::VectorXd col_mean;  // p
  std::vector<int> strata;   // distinct strata, ascending
  int n_events = 0;
};

std::vector<std::size_t> covariate_indices(const std::vector<std::string>& schema,
                                           const std::vector<std::string>& wanted) {
  std::vector<std::size_t> idx;
  if (wanted.empty()) {
    idx.resize(schema.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
  }
  for (const auto& name : wanted) {
    auto it = std::find(schema.begin(), schema.end(), name);
    if (it == schema.end()) throw input_error("covariate '" + name + "' not in dataset schema");
    idx.push_back(static_cast<std::size_t>(it - schema.begin()));
  }
  return idx;
}

Problem make_problem(const SpellDataset& ds, const std::vector<std::size_t>& cov_idx) {
  Problem pr;
  const std::size_t n = ds.records.size();
  pr.p = static_cast<int>(cov_idx.size());
  pr.entry.resize(n);
  pr.stop.resize(n);
  pr.stratum.resize(n);
  pr.status.resize(n);
  pr.x.resize(static_cast<Eigen::Index>(n), pr.p);
  std::set<int> strata;
  for (std::size_t i = 0; i < n; ++i) {
    const SpellRecord& rec = ds.records[i];
    if (rec.entry >= rec.stop) throw input_error("interval with entry >= stop in dataset");
    pr.entry[i] = rec.entry;
    pr.stop[i] = rec.stop;
    pr.stratum[i] = record_stratum(ds, rec);
    pr.status[i] = rec.status ? 1 : 0;
    if (rec.status) ++pr.n_events;
    strata.insert(pr.stratum[i]);
    for (int c = 0; c < pr.p; ++c) {
      pr.x(static_cast<Eigen::Index>(i), c) = rec.covariates.at(cov_idx[c]);
    }
  }
  pr.strata.assign(strata.begin(), strata.end());

  pr.col_mean = Eigen::VectorXd::Zero(pr.p);
  if (n > 0 && pr.p > 0) {
    pr.col_mean = pr.x.colwise().mean();
    pr.x.rowwise() -= pr.col_mean.transpose();
  }
  return pr;
}

// Pivoted Cholesky on the event-centered covariate cross-product. Columns
// whose pivot falls below 1e-10 of the leading scale cannot be identified
// from the event sample and are rejected by name.
void check_event_rank(const Problem& pr, const std::vector<std::string>& names) {
  const int p = pr.p;
  if (p == 0) return;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  for (std::size_t i = 0; i < pr.status.size(); ++i) {
    if (pr.status[i]) mean += pr.x.row(static_cast<Eigen::Index>(i)).transpose();
  }
  mean /= std::max(1, pr.n_events);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
  for (std::size_t i = 0; i < pr.status.size(); ++i) {
    if (!pr.status[i]) continue;
    Eigen::VectorXd d = pr.x.row(static_cast<Eigen::Index>(i)).transpose() - mean;
    m.noalias() += d * d.transpose();
  }
  std::vector<int> order(p);
  std::iota(order.begin(), order.end(), 0);
  const double scale = std::max(m.diagonal().maxCoeff(), 0.0);
  const double threshold = 1e-10 * std::max(scale, 1.0);
  std::vector<std::string> rejected;
  for (int k = 0; k < p; ++k) {
    int best = k;
    for (int j = k + 1; j < p; ++j) {
      if (m(order[j], order[j]) > m(order[best], order[best])) best = j;
    }
    std::swap(order[k], order[best]);
    const double pivot = m(order[k], order[k]);
    if (pivot < threshold) {
      for (int j = k; j < p; ++j) rejected.push_back(names[static_cast<std::size_t>(order[j])]);
      break;
    }
    for (int r = k + 1; r < p; ++r) {
      const double f = m(order[r], order[k]) / pivot;
      for (int c = k + 1; c < p; ++c) {
        m(order[r], order[c]) -= f * m(order[k], order[c]);
      }
    }
  }
  if (!rejected.empty()) {
    std::string msg = "covariates rank-deficient on the event sample:";
    for (const auto& name : rejected) msg += " " + name;
    throw input_error(msg);
  }
}

// Per-stratum risk-set sums at each unique failure time, obtained with a
// descending sweep: an interval joins the running sums once t <= stop and
// leaves once t <= entry.
struct StratumSums {
  std::vector<int> times;                 // ascending
  std::vector<int> d;                     // events per time
  std::vector<double> s0;                 // sum exp(eta) over risk set
  std::vector<Eigen::VectorXd> s1;        // sum exp(eta) x
  std::vector<Eigen::MatrixXd> s2;        // sum exp(eta) x x'
  std::vector<double> e0;                 // same sums over the tied events
  std::vector<Eigen::VectorXd> e1;
  std::vector<Eigen::MatrixXd> e2;
  std::vector<double> eta_sum;            // sum of eta over events
  std::vector<Eigen::VectorXd> x_sum;     // sum of x over events
};

std::vector<StratumSums> risk_sums(const Problem& pr, const Eigen::VectorXd& beta,
                                   bool need_x_moments) {
  const std::size_t n = pr.status.size();
  Eigen::VectorXd eta = pr.p > 0 ? Eigen::VectorXd(pr.x * beta) : Eigen::VectorXd::Zero(n);
  std::vector<StratumSums> out;

  for (int stratum : pr.strata) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (pr.stratum[i] == stratum) rows.push_back(i);
    }
    std::map<int, std::vector<std::size_t>> events;  // failure time -> event rows
    for (std::size_t i : rows) {
      if (pr.status[i]) events[pr.stop[i]].push_back(i);
    }
    StratumSums sums;
    std::vector<const std::vector<std::size_t>*> event_rows;
    for (const auto& [t, ev] : events) {
      sums.times.push_back(t);
      sums.d.push_back(static_cast<int>(ev.size()));
      event_rows.push_back(&ev);
    }
    if (sums.times.empty()) {
      out.push_back(std::move(sums));
      continue;
    }
    const std::size_t m = sums.times.size();
    const int p = pr.p;
    sums.s0.assign(m, 0.0);
    sums.e0.assign(m, 0.0);
    sums.eta_sum.assign(m, 0.0);
    if (need_x_moments) {
      sums.s1.assign(m, Eigen::VectorXd::Zero(p));
      sums.s2.assign(m, Eigen::MatrixXd::Zero(p, p));
      sums.e1.assign(m, Eigen::VectorXd::Zero(p));
      sums.e2.assign(m, Eigen::MatrixXd::Zero(p, p));
      sums.x_sum.assign(m, Eigen::VectorXd::Zero(p));
    }

    std::vector<std::size_t> by_stop(rows), by_entry(rows);
    std::sort(by_stop.begin(), by_stop.end(), [&](std::size_t a, std::size_t b) {
      if (pr.stop[a] != pr.stop[b]) return pr.stop[a] > pr.stop[b];
      return a < b;
    });
    std::sort(by_entry.begin(), by_entry.end(), [&](std::size_t a, std::size_t b) {
      if (pr.entry[a] != pr.entry[b]) return pr.entry[a] > pr.entry[b];
      return a < b;
    });

    double s0 = 0.0;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
    std::size_t stop_ptr = 0, entry_ptr = 0;
    for (std::size_t k = m; k-- > 0;) {
      const int t = sums.times[k];
      while (stop_ptr < by_stop.size() && pr.stop[by_stop[stop_ptr]] >= t) {
        const std::size_t i = by_stop[stop_ptr++];
        const double w = std::exp(eta[static_cast<Eigen::Index>(i)]);
        s0 += w;
        if (need_x_moments) {
          const auto xi = pr.x.row(static_cast<Eigen::Index>(i)).transpose();
          s1.noalias() += w * xi;
          s2.noalias() += w * xi * xi.transpose();
        }
      }
      while (entry_ptr < by_entry.size() && pr.entry[by_entry[entry_ptr]] >= t) {
        const std::size_t i = by_entry[entry_ptr++];
        const double w = std::exp(eta[static_cast<Eigen::Index>(i)]);
        s0 -= w;
        if (need_x_moments) {
          const auto xi = pr.x.row(static_cast<Eigen::Index>(i)).transpose();
          s1.noalias() -= w * xi;
          s2.noalias() -= w * xi * xi.transpose();
        }
      }
      sums.s0[k] = s0;
      if (need_x_moments) {
        sums.s1[k] = s1;
        sums.s2[k] = s2;
      }
      for (std::size_t i : *event_rows[k]) {
        const double w = std::exp(eta[static_cast<Eigen::Index>(i)]);
        sums.e0[k] += w;
        sums.eta_sum[k] += eta[static_cast<Eigen::Index>(i)];
        if (need_x_moments) {
          const auto xi = pr.x.row(static_cast<Eigen::Index>(i)).transpose();
          sums.e1[k].noalias() += w * xi;
          sums.e2[k].noalias() += w * xi * xi.transpose();
          sums.x_sum[k].noalias() += xi;
        }
      }
    }
    out.push_back(std::move(sums));
  }
  return out;
}

struct Evaluation {
  double log_pl = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd info;  // negative Hessian
};

Evaluation evaluate(const Problem& pr, const Eigen::VectorXd& beta, TiesMethod ties,
                    bool need_derivatives) {
  Evaluation ev;
  ev.grad = Eigen::VectorXd::Zero(pr.p);
  ev.info = Eigen::MatrixXd::Zero(pr.p, pr.p);
  const auto sums = risk_sums(pr, beta, need_derivatives || pr.p > 0);

  // accumulation runs in fixed order: strata ascending, failure times ascending
  for (const auto& stratum : sums) {
    for (std::size_t k = 0; k < stratum.times.size(); ++k) {
      const int d = stratum.d[k];
      const double s0 = stratum.s0[k];
      if (ties == TiesMethod::Breslow || d == 1) {
        ev.log_pl += stratum.eta_sum[k] - d * std::log(s0);
        if (need_derivatives && pr.p > 0) {
          const Eigen::VectorXd mu = stratum.s1[k] / s0;
          ev.grad.noalias() += stratum.x_sum[k] - d * mu;
          ev.info.noalias() += d * (stratum.s2[k] / s0 - mu * mu.transpose());
        }
      } else {
        // Efron: events leave the risk set gradually across the tie
        ev.log_pl += stratum.eta_sum[k];
        for (int l = 0; l < d; ++l) {
          const double frac = static_cast<double>(l) / d;
          const double s0l = s0 - frac * stratum.e0[k];
          ev.log_pl -= std::log(s0l);
          if (need_derivatives && pr.p > 0) {
            const Eigen::VectorXd s1l = stratum.s1[k] - frac * stratum.e1[k];
            const Eigen::MatrixXd s2l = stratum.s2[k] - frac * stratum.e2[k];
            const Eigen::VectorXd mu = s1l / s0l;
            ev.grad.noalias() -= mu;
            ev.info.noalias() += s2l / s0l - mu * mu.transpose();
          }
        }
        if (need_derivatives && pr.p > 0) ev.grad.noalias() += stratum.x_sum[k];
      }
    }
  }
  return ev;
}

}  // namespace

CoxFit cox_fit(const SpellDataset& ds, const CoxFitOptions& options) {
  const auto cov_idx = covariate_indices(ds.schema, options.covariates);
  Problem pr = make_problem(ds, cov_idx);
  if (pr.n_events == 0) throw input_error("cannot fit: dataset has no default events");

  CoxFit fit;
  fit.technique = ds.technique;
  fit.ties = options.ties;
  for (std::size_t c : cov_idx) fit.schema.push_back(ds.schema[c]);
  fit.n_events = pr.n_events;
  fit.n_intervals = static_cast<int>(ds.records.size());
  fit.n_spells = static_cast<int>(spell_ranges(ds).size());
  fit.beta = Eigen::VectorXd::Zero(pr.p);
  fit.vcov = Eigen::MatrixXd::Zero(pr.p, pr.p);

  if (pr.p == 0) {
    fit.log_pl = evaluate(pr, fit.beta, options.ties, false).log_pl;
    fit.converged = true;
    fit.baseline = baseline_hazard(fit, ds);
    return fit;
  }

  check_event_rank(pr, fit.schema);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(pr.p);
  Evaluation cur = evaluate(pr, beta, options.ties, true);
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    if (cur.grad.cwiseAbs().maxCoeff() <= options.tol) {
      fit.converged = true;
      break;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(cur.info);
    if (ldlt.info() != Eigen::Success) {
      fit.note = "information matrix not positive definite";
      break;
    }
    const Eigen::VectorXd direction = ldlt.solve(cur.grad);
    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h < 30; ++h) {
      const Eigen::VectorXd cand = beta + step * direction;
      Evaluation trial = evaluate(pr, cand, options.ties, true);
      if (std::isfinite(trial.log_pl) && trial.log_pl >= cur.log_pl - 1e-12) {
        beta = cand;
        cur = std::move(trial);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      fit.note = "step-halving failed to improve the log partial likelihood";
      break;
    }
    // a risk-score spread beyond e^70 means some coefficient is running off
    // to infinity: quasi-separated data
    if (pr.p > 0) {
      const Eigen::VectorXd eta = pr.x * beta;
      if (eta.maxCoeff() - eta.minCoeff() > 70.0) {
        fit.note = "separation suspected: coefficients diverging";
        ++iter;
        break;
      }
    }
  }
  if (!fit.converged && fit.note.empty()) {
    fit.note = "no convergence within max_iter";
  }

  fit.beta = beta;
  fit.log_pl = cur.log_pl;
  fit.iterations = iter;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cur.info);
  if (ldlt.info() == Eigen::Success) {
    fit.vcov = ldlt.solve(Eigen::MatrixXd::Identity(pr.p, pr.p));
  }
  fit.baseline = baseline_hazard(fit, ds);
  return fit;
}

std::vector<BaselineStratum> baseline_hazard(const CoxFit& fit, const SpellDataset& ds) {
  const auto cov_idx = covariate_indices(ds.schema, fit.schema);
  const std::size_t n = ds.records.size();

  // raw (uncentered) linear predictors with a max-shift per stratum
  std::vector<double> eta(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < cov_idx.size(); ++c) {
      eta[i] += fit.beta[static_cast<Eigen::Index>(c)] * ds.records[i].covariates[cov_idx[c]];
    }
  }

  std::map<int, std::vector<std::size_t>> strata_rows;
  for (std::size_t i = 0; i < n; ++i) strata_rows[record_stratum(ds, ds.records[i])].push_back(i);

  std::vector<BaselineStratum> out;
  for (const auto& [stratum, rows] : strata_rows) {
    std::map<int, int> d;
    double shift = 0.0;
    for (std::size_t i : rows) shift = std::max(shift, eta[i]);
    for (std::size_t i : rows) {
      if (ds.records[i].status) ++d[ds.records[i].stop];
    }
    if (d.empty()) continue;
    BaselineStratum base;
    base.stratum = stratum;
    std::vector<std::size_t> by_stop(rows), by_entry(rows);
    std::sort(by_stop.begin(), by_stop.end(), [&](std::size_t a, std::size_t b) {
      if (ds.records[a].stop != ds.records[b].stop) return ds.records[a].stop > ds.records[b].stop;
      return a < b;
    });
    std::sort(by_entry.begin(), by_entry.end(), [&](std::size_t a, std::size_t b) {
      if (ds.records[a].entry != ds.records[b].entry)
        return ds.records[a].entry > ds.records[b].entry;
      return a < b;
    });
    std::vector<int> times;
    for (const auto& [t, dk] : d) times.push_back(t);
    std::vector<double> denom(times.size(), 0.0);
    double s0 = 0.0;
    std::size_t stop_ptr = 0, entry_ptr = 0;
    for (std::size_t k = times.size(); k-- > 0;) {
      const int t = times[k];
      while (stop_ptr < by_stop.size() && ds.records[by_stop[stop_ptr]].stop >= t) {
        s0 += std::exp(eta[by_stop[stop_ptr]] - shift);
        ++stop_ptr;
      }
      while (entry_ptr < by_entry.size() && ds.records[by_entry[entry_ptr]].entry >= t) {
        s0 -= std::exp(eta[by_entry[entry_ptr]] - shift);
        ++entry_ptr;
      }
      denom[k] = s0;
    }
    double cum = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double increment = d[times[k]] / (denom[k] * std::exp(shift));
      cum += increment;
      base.times.push_back(times[k]);
      base.increment.push_back(increment);
      base.cumulative.push_back(cum);
    }
    out.push_back(std::move(base));
  }
  return out;
}

std::vector<std::pair<int, double>> predict_survival(const CoxFit& fit, const SpellDataset& ds,
                                                     const SpellRange& spell) {
  const auto cov_idx = covariate_indices(ds.schema, fit.schema);
  const int stratum =
      ds.technique == Technique::PWP ? ds.records[spell.first].spell_num_binned : 0;
  const BaselineStratum* base = nullptr;
  for (const auto& b : fit.baseline) {
    if (b.stratum == stratum) {
      base = &b;
      break;
    }
  }
  std::vector<std::pair<int, double>> out;
  double cum = 0.0;
  for (std::size_t i = spell.first; i < spell.last; ++i) {
    const SpellRecord& rec = ds.records[i];
    if (base != nullptr) {
      double eta = 0.0;
      for (std::size_t c = 0; c < cov_idx.size(); ++c) {
        eta += fit.beta[static_cast<Eigen::Index>(c)] * rec.covariates[cov_idx[c]];
      }
      auto lo = std::upper_bound(base->times.begin(), base->times.end(), rec.entry);
      auto hi = std::upper_bound(base->times.begin(), base->times.end(), rec.stop);
      for (auto it = lo; it != hi; ++it) {
        cum += base->increment[static_cast<std::size_t>(it - base->times.begin())] * std::exp(eta);
      }
    }
    out.emplace_back(rec.stop, std::exp(-cum));
  }
  return out;
}

double aic(const CoxFit& fit) {
  if (!fit.converged) throw std::invalid_argument("aic requires a converged fit");
  return -2.0 * fit.log_pl + 2.0 * static_cast<double>(fit.beta.size());
}

LogPlValue evaluate_log_pl(const SpellDataset& ds, const std::vector<double>& beta,
                           TiesMethod ties, const std::vector<std::string>& covariates) {
  const auto cov_idx = covariate_indices(ds.schema, covariates);
  if (beta.size() != cov_idx.size()) {
    throw std::invalid_argument("evaluate_log_pl: beta length does not match covariates");
  }
  Problem pr = make_problem(ds, cov_idx);
  Eigen::VectorXd b(static_cast<Eigen::Index>(beta.size()));
  for (std::size_t k = 0; k < beta.size(); ++k) b[static_cast<Eigen::Index>(k)] = beta[k];
  // centering shifts neither the value nor the derivatives
  const Evaluation ev = evaluate(pr, b, ties, true);
  LogPlValue out;
  out.log_pl = ev.log_pl;
  out.gradient = ev.grad;
  out.information = ev.info;
  return out;
}

std::vector<double> linear_predictors(const CoxFit& fit, const SpellDataset& ds) {
  const auto cov_idx = covariate_indices(ds.schema, fit.schema);
  std::vector<double> eta(ds.records.size(), 0.0);
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    for (std::size_t c = 0; c < cov_idx.size(); ++c) {
      eta[i] += fit.beta[static_cast<Eigen::Index>(c)] * ds.records[i].covariates[cov_idx[c]];
    }
  }
  return eta;
}

static double normal_two_sided_p(double z) {
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

std::string cox_fit_to_json(const CoxFit& fit) {
  nlohmann::json j;
  j["technique"] = technique_name(fit.technique);
  j["ties"] = ties_name(fit.ties);
  j["schema"] = fit.schema;
  j["log_pl"] = fit.log_pl;
  j["n_events"] = fit.n_events;
  j["n_spells"] = fit.n_spells;
  j["n_intervals"] = fit.n_intervals;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["note"] = fit.note;
  if (fit.converged) j["aic"] = aic(fit);
  std::vector<double> beta, se, z, p;
  for (Eigen::Index k = 0; k < fit.beta.size(); ++k) {
    beta.push_back(fit.beta[k]);
    const double s = std::sqrt(std::max(0.0, fit.vcov(k, k)));
    se.push_back(s);
    const double zk = s > 0.0 ? fit.beta[k] / s : 0.0;
    z.push_back(zk);
    p.push_back(normal_two_sided_p(zk));
  }
  j["beta"] = beta;
  j["se"] = se;
  j["z"] = z;
  j["p_value"] = p;
  std::vector<std::vector<double>> vcov;
  for (Eigen::Index r = 0; r < fit.vcov.rows(); ++r) {
    std::vector<double> row;
    for (Eigen::Index c = 0; c < fit.vcov.cols(); ++c) row.push_back(fit.vcov(r, c));
    vcov.push_back(std::move(row));
  }
  j["vcov"] = vcov;
  nlohmann::json jb = nlohmann::json::object();
  for (const auto& b : fit.baseline) {
    nlohmann::json arr = nlohmann::json::array();
    for (std::size_t k = 0; k < b.times.size(); ++k) {
      arr.push_back({b.times[k], b.increment[k], b.cumulative[k]});
    }
    jb[std::to_string(b.stratum)] = std::move(arr);
  }
  j["baseline"] = std::move(jb);
  return j.dump(2);
}

CoxFit cox_fit_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("fit file is not valid JSON: ") + e.what());
  }
  CoxFit fit;
  fit.technique = parse_technique(j.at("technique").get<std::string>());
  fit.ties = parse_ties(j.at("ties").get<std::string>());
  fit.schema = j.at("schema").get<std::vector<std::string>>();
  fit.log_pl = j.at("log_pl").get<double>();
  fit.n_events = j.at("n_events").get<int>();
  fit.n_spells = j.at("n_spells").get<int>();
  fit.n_intervals = j.at("n_intervals").get<int>();
  fit.converged = j.at("converged").get<bool>();
  fit.iterations = j.at("iterations").get<int>();
  fit.note = j.at("note").get<std::string>();
  const auto beta = j.at("beta").get<std::vector<double>>();
  fit.beta.resize(static_cast<Eigen::Index>(beta.size()));
  for (std::size_t k = 0; k < beta.size(); ++k) fit.beta[static_cast<Eigen::Index>(k)] = beta[k];
  const auto vcov = j.at("vcov").get<std::vector<std::vector<double>>>();
  fit.vcov.resize(static_cast<Eigen::Index>(vcov.size()), static_cast<Eigen::Index>(vcov.size()));
  for (std::size_t r = 0; r < vcov.size(); ++r) {
    for (std::size_t c = 0; c < vcov[r].size(); ++c) {
      fit.vcov(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = vcov[r][c];
    }
  }
  for (const auto& [key, arr] : j.at("baseline").items()) {
    BaselineStratum b;
    b.stratum = std::stoi(key);
    for (const auto& triple : arr) {
      b.times.push_back(triple.at(0).get<int>());
      b.increment.push_back(triple.at(1).get<double>());
      b.cumulative.push_back(triple.at(2).get<double>());
    }
    fit.baseline.push_back(std::move(b));
  }
  return fit;
}

}  // namespace spellhaz
