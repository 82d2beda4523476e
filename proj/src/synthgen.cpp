#include "spellhaz/synthgen.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace spellhaz {

void GeneratorSpec::check() const {
  if (n_loans < 1) throw input_error("generator: n_loans must be positive");
  if (max_horizon < 1) throw input_error("generator: max_horizon must be positive");
  if (baseline_hazards.empty()) throw input_error("generator: baseline_hazards empty");
  for (double h : baseline_hazards) {
    if (!(h >= 0.0 && h < 1.0)) throw input_error("generator: hazards must lie in [0,1)");
  }
  if (!(cure_prob >= 0.0 && cure_prob <= 1.0)) throw input_error("generator: cure_prob outside [0,1]");
  if (!(settle_hazard >= 0.0 && settle_hazard <= 1.0)) {
    throw input_error("generator: settle_hazard outside [0,1]");
  }
  if (n_fixed < 0 || n_ar < 0) throw input_error("generator: covariate counts negative");
  if (static_cast<int>(true_beta.size()) != n_fixed + n_ar) {
    throw input_error("generator: true_beta length must equal n_fixed + n_ar");
  }
  if (censor_min < 0 || censor_max < censor_min) {
    throw input_error("generator: censor window invalid");
  }
  if (!(ar_rho > -1.0 && ar_rho < 1.0)) throw input_error("generator: ar_rho outside (-1,1)");
}

GeneratorSpec generator_spec_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("generator spec is not valid JSON: ") + e.what());
  }
  GeneratorSpec spec;
  if (j.contains("n_loans")) spec.n_loans = j["n_loans"].get<int>();
  if (j.contains("max_horizon")) spec.max_horizon = j["max_horizon"].get<int>();
  if (j.contains("true_beta")) spec.true_beta = j["true_beta"].get<std::vector<double>>();
  if (j.contains("baseline_hazards")) {
    spec.baseline_hazards = j["baseline_hazards"].get<std::vector<double>>();
  }
  if (j.contains("cure_prob")) spec.cure_prob = j["cure_prob"].get<double>();
  if (j.contains("settle_hazard")) spec.settle_hazard = j["settle_hazard"].get<double>();
  if (j.contains("censor")) {
    spec.censor_min = j["censor"].value("min", 0);
    spec.censor_max = j["censor"].value("max", 0);
  }
  if (j.contains("covariates")) {
    const auto& c = j["covariates"];
    spec.n_fixed = c.value("n_fixed", 0);
    spec.n_ar = c.value("n_ar", 0);
    spec.ar_rho = c.value("ar_rho", 0.8);
  }
  if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
  spec.check();
  return spec;
}

std::string generator_spec_to_json(const GeneratorSpec& spec) {
  nlohmann::json j;
  j["n_loans"] = spec.n_loans;
  j["max_horizon"] = spec.max_horizon;
  j["true_beta"] = spec.true_beta;
  j["baseline_hazards"] = spec.baseline_hazards;
  j["cure_prob"] = spec.cure_prob;
  j["settle_hazard"] = spec.settle_hazard;
  j["censor"] = {{"min", spec.censor_min}, {"max", spec.censor_max}};
  j["covariates"] = {{"n_fixed", spec.n_fixed}, {"n_ar", spec.n_ar}, {"ar_rho", spec.ar_rho}};
  j["seed"] = spec.seed;
  return j.dump(2);
}

std::vector<std::string> generator_schema(const GeneratorSpec& spec) {
  std::vector<std::string> schema;
  for (int k = 1; k <= spec.n_fixed; ++k) schema.push_back("x" + std::to_string(k));
  for (int k = 1; k <= spec.n_ar; ++k) schema.push_back("z" + std::to_string(k));
  return schema;
}

namespace {

std::string loan_label(int index, int n_loans) {
  int width = 1;
  for (int v = n_loans; v >= 10; v /= 10) ++width;
  std::string digits = std::to_string(index + 1);
  return "L" + std::string(static_cast<std::size_t>(width) - std::min<std::size_t>(width, digits.size()), '0') + digits;
}

}  // namespace

Panel generate(const GeneratorSpec& spec) {
  spec.check();
  Panel panel;
  panel.schema = generator_schema(spec);
  const int p = spec.n_fixed + spec.n_ar;
  const double ar_innov = std::sqrt(1.0 - spec.ar_rho * spec.ar_rho);

  for (int loan = 0; loan < spec.n_loans; ++loan) {
    DetRng rng(mix64(spec.seed, static_cast<std::uint64_t>(loan) + 1));
    const std::string id = loan_label(loan, spec.n_loans);

    int censor_age = spec.max_horizon;
    if (spec.censor_max > 0) {
      const int span = spec.censor_max - spec.censor_min + 1;
      censor_age = std::min<int>(censor_age, spec.censor_min +
                                                 static_cast<int>(rng.next_below(span)));
    }

    std::vector<double> x(p, 0.0);
    for (int k = 0; k < spec.n_fixed; ++k) x[k] = rng.next_normal();
    for (int k = 0; k < spec.n_ar; ++k) x[spec.n_fixed + k] = rng.next_normal();

    int spell = 1;
    int month = 1;
    bool alive = true;
    while (alive && month <= censor_age) {
      // AR columns evolve every calendar month, observed or not
      if (month > 1) {
        for (int k = 0; k < spec.n_ar; ++k) {
          x[spec.n_fixed + k] =
              spec.ar_rho * x[spec.n_fixed + k] + ar_innov * rng.next_normal();
        }
      }
      double eta = 0.0;
      for (int k = 0; k < p; ++k) eta += spec.true_beta[static_cast<std::size_t>(k)] * x[k];
      const double h0 =
          spec.baseline_hazards[std::min<std::size_t>(static_cast<std::size_t>(spell) - 1,
                                                      spec.baseline_hazards.size() - 1)];
      const double p_default = 1.0 - std::exp(-h0 * std::exp(eta));

      PanelRow row;
      row.loan_id = id;
      row.period = month;
      row.covariates = x;

      if (rng.next_uniform() < p_default) {
        row.state = LoanState::Default;
        panel.rows.push_back(std::move(row));
        if (spec.cure_prob <= 0.0) {
          alive = false;
        } else {
          // months spent inside the default episode (no rows emitted); the
          // AR columns still evolve through the skipped months
          const int gap = rng.next_geometric(spec.cure_prob);
          for (int g = 0; g < gap; ++g) {
            for (int k = 0; k < spec.n_ar; ++k) {
              x[spec.n_fixed + k] =
                  spec.ar_rho * x[spec.n_fixed + k] + ar_innov * rng.next_normal();
            }
          }
          month += gap + 1;
          ++spell;
          if (month > censor_age) alive = false;
          continue;
        }
      } else if (spec.settle_hazard > 0.0 && rng.next_uniform() < spec.settle_hazard) {
        row.state = LoanState::Settled;
        panel.rows.push_back(std::move(row));
        alive = false;
      } else {
        row.state = LoanState::Performing;
        panel.rows.push_back(std::move(row));
      }
      ++month;
    }
  }

  std::stable_sort(panel.rows.begin(), panel.rows.end(), [](const PanelRow& a, const PanelRow& b) {
    if (a.loan_id != b.loan_id) return a.loan_id < b.loan_id;
    return a.period < b.period;
  });
  return panel;
}

}  // namespace spellhaz
