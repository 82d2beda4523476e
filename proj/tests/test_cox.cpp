#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "oracles.hpp"
#include "spellhaz/cox.hpp"
#include "spellhaz/synthgen.hpp"

using namespace spellhaz;
using testutil::make_dataset;

namespace {

// six single-covariate spells, distinct failure times
SpellDataset toy_untied() {
  return make_dataset(Technique::AG, {"x"},
                      {{"a", 0, 1, true, {1.0}},
                       {"b", 0, 2, true, {0.0}},
                       {"c", 0, 3, false, {1.0}},
                       {"d", 0, 4, true, {1.0}},
                       {"e", 0, 5, false, {0.0}},
                       {"f", 0, 6, true, {0.0}}});
}

SpellDataset toy_tied() {
  return make_dataset(Technique::AG, {"x"},
                      {{"a", 0, 2, true, {1.0}},
                       {"b", 0, 2, true, {0.0}},
                       {"c", 0, 3, true, {1.0}},
                       {"d", 0, 3, false, {0.5}},
                       {"e", 0, 4, true, {-1.0}}});
}

}  // namespace

TEST_CASE("build_risk_sets on the reference portfolio") {
  const Panel panel = testutil::load_appendix_panel();

  SUBCASE("TFD: failure times 4 and 9") {
    const SpellDataset ds = build_spells(panel, Technique::TFD);
    const auto sets = build_risk_sets(ds);
    REQUIRE(sets.count(0) == 1);
    const auto& s = sets.at(0);
    REQUIRE(s.size() == 2);
    CHECK(s[0].time == 4);
    CHECK(s[1].time == 9);

    auto loans_of = [&](const std::vector<std::size_t>& idx) {
      std::set<std::string> out;
      for (std::size_t i : idx) out.insert(ds.records[i].loan_id);
      return out;
    };
    // loan 2 left the risk set at 3; loan 4 only enters observation at age 4,
    // so the intervals (entry < 4 <= stop) belong to loans 1 and 3 alone
    CHECK(loans_of(s[0].at_risk) == std::set<std::string>{"1", "3"});
    CHECK(loans_of(s[0].event_set) == std::set<std::string>{"1", "3"});
    CHECK(loans_of(s[1].at_risk) == std::set<std::string>{"4"});

    // brute-force interval scan agrees
    const auto scanned = oracle::scan_risk_sets(ds);
    REQUIRE(scanned.at(0).size() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(scanned.at(0)[k].time == s[k].time);
      CHECK(scanned.at(0)[k].at_risk == s[k].at_risk);
      CHECK(scanned.at(0)[k].events == s[k].event_set);
    }
  }

  SUBCASE("PWP stratum 2: single failure time 4 with only loan 4 at risk") {
    const SpellDataset ds = build_spells(panel, Technique::PWP);
    const auto sets = build_risk_sets(ds);
    REQUIRE(sets.count(2) == 1);
    const auto& s2 = sets.at(2);
    REQUIRE(s2.size() == 1);
    CHECK(s2[0].time == 4);
    REQUIRE(s2[0].at_risk.size() == 1);
    CHECK(ds.records[s2[0].at_risk[0]].loan_id == "4");
    CHECK(s2[0].event_set == s2[0].at_risk);
  }

  SUBCASE("no events, no risk sets") {
    const auto ds = make_dataset(Technique::AG, {}, {{"a", 0, 3, false, {}}});
    CHECK(build_risk_sets(ds).empty());
  }
}

TEST_CASE("partial-likelihood oracle: Newton matches 1-D brute-force maximisation") {
  const SpellDataset ds = toy_untied();
  CoxFitOptions options;
  options.ties = TiesMethod::Breslow;  // no ties, Efron identical
  const CoxFit fit = cox_fit(ds, options);
  REQUIRE(fit.converged);

  const double brute = oracle::golden_section_max(
      [&](double b) { return oracle::log_partial_likelihood(ds, {b}, TiesMethod::Breslow); },
      -10.0, 10.0, 1e-10);
  CHECK(std::abs(fit.beta[0] - brute) <= 1e-6);

  // engine and direct-scan log PL agree at the optimum and elsewhere
  for (double b : {-1.0, -0.25, 0.0, 0.7, fit.beta[0]}) {
    const auto ev = evaluate_log_pl(ds, {b}, TiesMethod::Breslow);
    CHECK(ev.log_pl ==
          doctest::Approx(oracle::log_partial_likelihood(ds, {b}, TiesMethod::Breslow))
              .epsilon(1e-12));
  }
}

TEST_CASE("analytic gradient and information match central finite differences") {
  GeneratorSpec spec;
  spec.n_loans = 60;
  spec.max_horizon = 40;
  spec.true_beta = {0.5, -0.3};
  spec.baseline_hazards = {0.05};
  spec.cure_prob = 0.3;
  spec.n_fixed = 2;
  spec.seed = 13;
  const SpellDataset ds = build_spells(generate(spec), Technique::AG);

  for (TiesMethod ties : {TiesMethod::Efron, TiesMethod::Breslow}) {
    for (const std::vector<double>& beta :
         {std::vector<double>{0.0, 0.0}, {0.3, -0.2}, {-0.5, 0.4}}) {
      const auto ev = evaluate_log_pl(ds, beta, ties);
      auto f = [&](const std::vector<double>& b) {
        return evaluate_log_pl(ds, b, ties).log_pl;
      };
      const auto g = oracle::fd_gradient(f, beta, 1e-5);
      for (std::size_t j = 0; j < beta.size(); ++j) {
        CHECK(std::abs(ev.gradient[static_cast<Eigen::Index>(j)] - g[j]) <=
              1e-5 * std::max(1.0, std::abs(g[j])));
      }
      const auto h = oracle::fd_hessian(f, beta, 1e-4);
      for (std::size_t r = 0; r < beta.size(); ++r) {
        for (std::size_t c = 0; c < beta.size(); ++c) {
          CHECK(std::abs(-ev.information(static_cast<Eigen::Index>(r),
                                         static_cast<Eigen::Index>(c)) -
                         h[r][c]) <= 1e-4 * std::max(1.0, std::abs(h[r][c])));
        }
      }
    }
  }
}

TEST_CASE("log PL is concave along random line sections (no ties, Breslow)") {
  const SpellDataset ds = toy_untied();
  DetRng rng(99);
  for (int rep = 0; rep < 10; ++rep) {
    const double origin = 2.0 * rng.next_normal();
    const double dir = rng.next_normal();
    double prev2 = 0.0, prev1 = 0.0;
    for (int k = 0; k <= 20; ++k) {
      const double t = -1.0 + 0.1 * k;
      const double v =
          oracle::log_partial_likelihood(ds, {origin + t * dir}, TiesMethod::Breslow);
      if (k >= 2) CHECK(v - 2.0 * prev1 + prev2 <= 1e-9);
      prev2 = prev1;
      prev1 = v;
    }
  }
}

TEST_CASE("Efron and Breslow log PL match the direct scan on tied data") {
  const SpellDataset ds = toy_tied();
  for (TiesMethod ties : {TiesMethod::Efron, TiesMethod::Breslow}) {
    for (double b : {-0.8, 0.0, 0.4, 1.2}) {
      CHECK(evaluate_log_pl(ds, {b}, ties).log_pl ==
            doctest::Approx(oracle::log_partial_likelihood(ds, {b}, ties)).epsilon(1e-12));
    }
  }
  // with real ties the two corrections disagree
  CHECK(evaluate_log_pl(ds, {0.4}, TiesMethod::Efron).log_pl !=
        evaluate_log_pl(ds, {0.4}, TiesMethod::Breslow).log_pl);
}

TEST_CASE("null model: closed-form log PL, empty beta") {
  const SpellDataset ds = toy_tied();
  SpellDataset no_cov = ds;
  no_cov.schema.clear();
  for (auto& rec : no_cov.records) rec.covariates.clear();

  CoxFitOptions options;
  options.ties = TiesMethod::Breslow;
  const CoxFit breslow = cox_fit(no_cov, options);
  REQUIRE(breslow.converged);
  CHECK(breslow.beta.size() == 0);
  CHECK(breslow.log_pl ==
        doctest::Approx(-2.0 * std::log(5.0) - std::log(3.0)).epsilon(1e-12));
  CHECK(aic(breslow) == doctest::Approx(-2.0 * breslow.log_pl));

  options.ties = TiesMethod::Efron;
  const CoxFit efron = cox_fit(no_cov, options);
  CHECK(efron.log_pl ==
        doctest::Approx(-std::log(5.0) - std::log(4.0) - std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("baseline hazard: Breslow increments") {
  SUBCASE("beta = 0 reduces to d/n") {
    const SpellDataset ds = toy_tied();
    SpellDataset no_cov = ds;
    no_cov.schema.clear();
    for (auto& rec : no_cov.records) rec.covariates.clear();
    const CoxFit fit = cox_fit(no_cov, {});
    REQUIRE(fit.baseline.size() == 1);
    const auto& base = fit.baseline[0];
    REQUIRE(base.times == std::vector<int>{2, 3, 4});
    CHECK(base.increment[0] == doctest::Approx(2.0 / 5.0).epsilon(1e-14));
    // single event among the 3 spells still at risk at t=3: increment 1/3
    CHECK(base.increment[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(base.increment[2] == doctest::Approx(1.0).epsilon(1e-14));
    // cumulative nondecreasing
    for (std::size_t k = 1; k < base.cumulative.size(); ++k) {
      CHECK(base.cumulative[k] >= base.cumulative[k - 1]);
    }
  }

  SUBCASE("fitted beta matches the direct summation oracle") {
    const SpellDataset ds = toy_untied();
    const CoxFit fit = cox_fit(ds, {});
    REQUIRE(fit.converged);
    const auto expected = oracle::scan_breslow(ds, {fit.beta[0]});
    REQUIRE(fit.baseline.size() == 1);
    const auto& got = fit.baseline[0];
    const auto& want = expected.at(0);
    REQUIRE(got.times.size() == want.size());
    for (std::size_t k = 0; k < want.size(); ++k) {
      CHECK(got.times[k] == want[k].first);
      CHECK(got.increment[k] == doctest::Approx(want[k].second).epsilon(1e-12));
    }
  }
}

TEST_CASE("predict_survival") {
  const SpellDataset ds = toy_tied();
  SpellDataset no_cov = ds;
  no_cov.schema.clear();
  for (auto& rec : no_cov.records) rec.covariates.clear();
  const CoxFit fit = cox_fit(no_cov, {});

  SUBCASE("beta = 0 over a spell covering all failure times equals baseline survival") {
    // spell e spans (0,4], covering failure times 2, 3, 4
    const auto ranges = spell_ranges(no_cov);
    const auto curve = predict_survival(fit, no_cov, ranges.back());
    REQUIRE(curve.size() == 1);
    CHECK(curve[0].first == 4);
    CHECK(curve[0].second ==
          doctest::Approx(std::exp(-(2.0 / 5.0 + 1.0 / 3.0 + 1.0))).epsilon(1e-12));
  }

  SUBCASE("spell ending before the first failure time keeps survival at one") {
    SpellDataset with_short = no_cov;
    SpellRecord rec;
    rec.loan_id = "zz";
    rec.entry = 0;
    rec.stop = 1;
    rec.status = false;
    rec.resolution = ResolutionType::Censored;
    rec.spell_age = 1;
    with_short.records.push_back(rec);
    const CoxFit refit = cox_fit(with_short, {});
    const auto ranges = spell_ranges(with_short);
    const auto curve = predict_survival(refit, with_short, ranges.back());
    REQUIRE(curve.size() == 1);
    CHECK(curve[0].second == 1.0);
  }

  SUBCASE("nonincreasing with time-varying covariates, matches direct accumulation") {
    // one spell, three monthly intervals with drifting covariate
    SpellDataset multi = toy_untied();
    const CoxFit cfit = cox_fit(multi, {});
    REQUIRE(cfit.converged);
    SpellDataset scored = multi;
    // rebuild spell "d" (0,4] as four width-1 intervals with varying x
    std::vector<SpellRecord> recs;
    for (const auto& rec : scored.records) {
      if (rec.loan_id != "d") recs.push_back(rec);
    }
    for (int k = 1; k <= 4; ++k) {
      SpellRecord rec;
      rec.loan_id = "d";
      rec.entry = k - 1;
      rec.stop = k;
      rec.status = k == 4;
      rec.resolution = ResolutionType::Default;
      rec.spell_age = 4;
      rec.covariates = {0.2 * k};
      recs.push_back(rec);
    }
    scored.records = recs;
    std::sort(scored.records.begin(), scored.records.end(),
              [](const SpellRecord& a, const SpellRecord& b) {
                if (a.loan_id != b.loan_id) return a.loan_id < b.loan_id;
                return a.entry < b.entry;
              });
    const auto ranges = spell_ranges(scored);
    for (const auto& range : ranges) {
      if (scored.records[range.first].loan_id != "d") continue;
      const auto curve = predict_survival(cfit, scored, range);
      REQUIRE(curve.size() == 4);
      double prev = 1.0;
      double cum = 0.0;
      const auto& base = cfit.baseline[0];
      for (const auto& [t, s] : curve) {
        CHECK(s <= prev + 1e-15);
        // direct accumulation with the interval's own covariate
        for (std::size_t k = 0; k < base.times.size(); ++k) {
          if (base.times[k] == t) {
            cum += base.increment[k] * std::exp(cfit.beta[0] * 0.2 * t);
          }
        }
        CHECK(s == doctest::Approx(std::exp(-cum)).epsilon(1e-12));
        prev = s;
      }
    }
  }
}

TEST_CASE("aic cross-checked against the PL evaluation oracle") {
  const SpellDataset ds = toy_untied();
  const CoxFit fit = cox_fit(ds, {});
  REQUIRE(fit.converged);
  const double lpl = oracle::log_partial_likelihood(ds, {fit.beta[0]}, TiesMethod::Efron);
  CHECK(aic(fit) == doctest::Approx(-2.0 * lpl + 2.0).epsilon(1e-10));
  // definition checks
  CoxFit fake = fit;
  fake.log_pl = -100.0;
  fake.beta = Eigen::VectorXd::Zero(5);
  CHECK(aic(fake) == doctest::Approx(210.0));
}

TEST_CASE("technique equivalence on a single-spell portfolio") {
  GeneratorSpec spec;
  spec.n_loans = 300;
  spec.max_horizon = 60;
  spec.true_beta = {0.5, -0.3};
  spec.baseline_hazards = {0.03};
  spec.cure_prob = 0.0;
  spec.n_fixed = 2;
  spec.seed = 21;
  const Panel panel = generate(spec);
  CoxFit fits[3];
  int k = 0;
  for (Technique technique : {Technique::TFD, Technique::AG, Technique::PWP}) {
    fits[k++] = cox_fit(build_spells(panel, technique), {});
  }
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(fits[0].beta[j] - fits[1].beta[j]) <= 1e-8);
    CHECK(std::abs(fits[0].beta[j] - fits[2].beta[j]) <= 1e-8);
  }
  CHECK(std::abs(fits[0].log_pl - fits[1].log_pl) <= 1e-8);
  CHECK(std::abs(fits[0].log_pl - fits[2].log_pl) <= 1e-8);
}

TEST_CASE("shifting a covariate column leaves beta unchanged") {
  const SpellDataset ds = toy_untied();
  const CoxFit fit = cox_fit(ds, {});
  SpellDataset shifted = ds;
  for (auto& rec : shifted.records) rec.covariates[0] += 250.0;
  const CoxFit fit2 = cox_fit(shifted, {});
  CHECK(std::abs(fit.beta[0] - fit2.beta[0]) <= 1e-8);
}

TEST_CASE("vcov is symmetric positive semi-definite at convergence") {
  GeneratorSpec spec;
  spec.n_loans = 150;
  spec.max_horizon = 48;
  spec.true_beta = {0.4, -0.2};
  spec.baseline_hazards = {0.04};
  spec.n_fixed = 2;
  spec.seed = 3;
  const CoxFit fit = cox_fit(build_spells(generate(spec), Technique::AG), {});
  REQUIRE(fit.converged);
  CHECK(std::abs(fit.vcov(0, 1) - fit.vcov(1, 0)) <= 1e-12);
  CHECK(fit.vcov(0, 0) > 0.0);
  CHECK(fit.vcov(1, 1) > 0.0);
  CHECK(fit.vcov.determinant() > 0.0);
}

TEST_CASE("rank deficiency is rejected by name") {
  SUBCASE("constant covariate") {
    const auto ds = make_dataset(Technique::AG, {"flat"},
                                 {{"a", 0, 1, true, {2.0}},
                                  {"b", 0, 2, true, {2.0}},
                                  {"c", 0, 3, false, {2.0}}});
    CHECK_THROWS_WITH_AS(cox_fit(ds, {}), doctest::Contains("flat"), input_error);
  }
  SUBCASE("duplicated covariate") {
    const auto ds = make_dataset(Technique::AG, {"x", "x_copy"},
                                 {{"a", 0, 1, true, {1.0, 1.0}},
                                  {"b", 0, 2, true, {0.0, 0.0}},
                                  {"c", 0, 3, true, {0.5, 0.5}},
                                  {"d", 0, 4, false, {0.2, 0.2}}});
    CHECK_THROWS_AS(cox_fit(ds, {}), input_error);
  }
}

TEST_CASE("fit without events is an error") {
  const auto ds = make_dataset(Technique::AG, {"x"}, {{"a", 0, 3, false, {1.0}}});
  CHECK_THROWS_AS(cox_fit(ds, {}), input_error);
}

TEST_CASE("separation is detected and reported") {
  // marker perfectly splits failures from survivors far apart in time
  const auto ds = make_dataset(Technique::AG, {"x"},
                               {{"a", 0, 1, true, {1.0}},
                                {"b", 0, 2, true, {1.0}},
                                {"c", 0, 3, true, {1.0}},
                                {"d", 0, 14, false, {0.0}},
                                {"e", 0, 15, false, {0.0}},
                                {"f", 0, 16, false, {0.0}}});
  CoxFitOptions options;
  options.max_iter = 60;
  const CoxFit fit = cox_fit(ds, options);
  CHECK(!fit.converged);
  CHECK(fit.note.find("separation") != std::string::npos);
}

TEST_CASE("fit json round-trip") {
  const CoxFit fit = cox_fit(toy_untied(), {});
  const CoxFit back = cox_fit_from_json(cox_fit_to_json(fit));
  CHECK(back.technique == fit.technique);
  CHECK(back.beta[0] == fit.beta[0]);
  CHECK(back.log_pl == fit.log_pl);
  CHECK(back.schema == fit.schema);
  REQUIRE(back.baseline.size() == fit.baseline.size());
  CHECK(back.baseline[0].times == fit.baseline[0].times);
  CHECK(back.baseline[0].increment == fit.baseline[0].increment);
}
