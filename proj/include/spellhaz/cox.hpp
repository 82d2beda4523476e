#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spellhaz/spells.hpp"

namespace spellhaz {

enum class TiesMethod : int { Efron = 0, Breslow = 1 };

const char* ties_name(TiesMethod t);
TiesMethod parse_ties(const std::string& label);

// Risk set at one failure time: interval indices into SpellDataset::records
// with entry < t <= stop; event_set holds those failing at t.
struct RiskSet {
  int time = 0;
  std::vector<std::size_t> at_risk;
  std::vector<std::size_t> event_set;
};

// Risk sets per stratum (PWP strata are keyed on spell_num_binned; TFD and AG
// use the single stratum 0), ascending in failure time. Strata without events
// are absent.
std::map<int, std::vector<RiskSet>> build_risk_sets(const SpellDataset& ds);

struct BaselineStratum {
  int stratum = 0;
  std::vector<int> times;          // unique failure times, ascending
  std::vector<double> increment;   // Breslow increments d_k / sum exp(beta'x)
  std::vector<double> cumulative;  // running sum of increments
};

struct CoxFitOptions {
  TiesMethod ties = TiesMethod::Efron;
  int max_iter = 25;
  double tol = 1e-9;                     // gradient max-norm
  std::vector<std::string> covariates;   // subset by name; empty selects all
};

struct CoxFit {
  Technique technique = Technique::AG;
  TiesMethod ties = TiesMethod::Efron;
  std::vector<std::string> schema;  // covariates entering the model
  Eigen::VectorXd beta;
  Eigen::MatrixXd vcov;             // inverse observed information at beta
  double log_pl = 0.0;
  int n_events = 0;
  int n_spells = 0;
  int n_intervals = 0;
  bool converged = false;
  int iterations = 0;
  std::string note;                 // diagnostics on non-convergence/separation
  std::vector<BaselineStratum> baseline;
};

// Newton-Raphson maximisation of the Cox partial likelihood over the
// technique's risk sets, with step-halving and the selected tie correction.
// Throws input_error when there are no events or the covariates are rank
// deficient on the event sample; non-convergence and suspected separation are
// reported through converged/note instead.
CoxFit cox_fit(const SpellDataset& ds, const CoxFitOptions& options = {});

// Breslow baseline hazard increments under a fitted model; also stored on the
// fit itself by cox_fit.
std::vector<BaselineStratum> baseline_hazard(const CoxFit& fit, const SpellDataset& ds);

// Predicted survival for one spell over its own intervals, conditional on
// being at risk from the spell's first entry: S(t) = exp(-sum of baseline
// increments at failure times in (entry, t], each scaled by exp(beta'x) of
// the interval covering it). Returns (stop, S(stop)) per interval.
std::vector<std::pair<int, double>> predict_survival(const CoxFit& fit, const SpellDataset& ds,
                                                     const SpellRange& spell);

double aic(const CoxFit& fit);

// Log partial likelihood with its analytic gradient and observed information
// at an arbitrary beta; the same accumulation the solver iterates on.
struct LogPlValue {
  double log_pl = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd information;  // negative Hessian
};

LogPlValue evaluate_log_pl(const SpellDataset& ds, const std::vector<double>& beta,
                           TiesMethod ties, const std::vector<std::string>& covariates = {});

// Per-interval linear predictors beta'x under the fit's covariate subset.
std::vector<double> linear_predictors(const CoxFit& fit, const SpellDataset& ds);

std::string cox_fit_to_json(const CoxFit& fit);
CoxFit cox_fit_from_json(const std::string& json_text);

}  // namespace spellhaz
