#include "spellhaz/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "spellhaz/diagnostics.hpp"
#include "spellhaz/nonparametric.hpp"
#include "spellhaz/sampling.hpp"
#include "spellhaz/synthgen.hpp"

namespace spellhaz {

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write " + path.string());
  out << content;
}

class StageClock {
public:
  StageClock(nlohmann::json& manifest, std::string name)
      : manifest_(manifest), name_(std::move(name)), start_(std::chrono::steady_clock::now()) {}
  void done(std::vector<std::string> outputs) {
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - start_)
                             .count();
    manifest_["stages"].push_back(
        {{"name", name_}, {"wall_ms", elapsed}, {"outputs", std::move(outputs)}});
  }

private:
  nlohmann::json& manifest_;
  std::string name_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace

int run_pipeline(const std::string& config_path, const std::string& out_dir, int threads_override,
                 long long seed_override) {
  namespace fs = std::filesystem;
  const std::string config_text = slurp(config_path);
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(config_text);
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("pipeline config is not valid JSON: ") + e.what());
  }

  fs::create_directories(out_dir);
  const fs::path out(out_dir);

  std::uint64_t seed = cfg.value("seed", 1ull);
  if (seed_override >= 0) seed = static_cast<std::uint64_t>(seed_override);
  int threads = cfg.value("threads", 0);
  if (threads_override > 0) threads = threads_override;
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads <= 0) threads = 1;

  // fingerprint covers every input byte: the config plus referenced files
  std::uint64_t input_hash = fnv1a64(config_text);
  if (cfg.contains("panel")) input_hash = fnv1a64_file(cfg["panel"].get<std::string>(), input_hash);
  if (cfg.contains("schema") && cfg["schema"].is_string()) {
    input_hash = fnv1a64_file(cfg["schema"].get<std::string>(), input_hash);
  }
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(input_hash));

  nlohmann::json manifest;
  manifest["tool"] = "spellhaz 0.1.0";
  manifest["config_hash"] = std::string(hash_hex);
  manifest["seed"] = seed;
  manifest["threads"] = threads;
  manifest["stages"] = nlohmann::json::array();
  manifest["status"] = "running";

  auto fail = [&](const std::string& stage, const std::string& why) -> int {
    manifest["status"] = "failed";
    manifest["failed_stage"] = stage;
    manifest["error"] = why;
    manifest["stale_outputs"] = true;  // artifacts on disk may predate the failure
    write_file(out / "manifest.json", manifest.dump(2) + "\n");
    throw input_error("pipeline stage '" + stage + "' failed: " + why);
  };

  std::string stage = "configure";
  try {
    // ---- source panel -------------------------------------------------
    stage = "synth/ingest";
    Panel panel;
    if (cfg.contains("synth")) {
      GeneratorSpec spec = generator_spec_from_json(cfg["synth"].dump());
      if (!cfg["synth"].contains("seed")) spec.seed = seed;
      panel = generate(spec);
    } else if (cfg.contains("panel")) {
      SchemaConfig schema;
      if (cfg.contains("schema") && cfg["schema"].is_string()) {
        schema = schema_config_from_json(slurp(cfg["schema"].get<std::string>()));
      } else if (cfg.contains("schema")) {
        schema = schema_config_from_json(cfg["schema"].dump());
      } else {
        throw input_error("config with 'panel' also needs 'schema'");
      }
      std::ifstream in(cfg["panel"].get<std::string>());
      if (!in) throw input_error("cannot open panel " + cfg["panel"].get<std::string>());
      panel = ingest_panel(in, schema);
    } else {
      throw input_error("config needs either 'synth' or 'panel'");
    }
    const auto violations = validate_panel(panel);
    if (!violations.empty()) {
      throw input_error("panel invalid: loan " + violations.front().loan_id + ": " +
                        violations.front().description);
    }
    {
      StageClock clock(manifest, "panel");
      std::ostringstream ss;
      emit_panel(panel, ss);
      write_file(out / "panel.csv", ss.str());
      clock.done({"panel.csv"});
    }

    stage = "techniques";
    std::vector<Technique> techniques;
    if (!cfg.contains("techniques")) throw input_error("config needs 'techniques'");
    for (const auto& t : cfg["techniques"]) techniques.push_back(parse_technique(t.get<std::string>()));

    // ---- sample --------------------------------------------------------
    stage = "sample";
    const Panel* model_panel = &panel;
    const Panel* holdout_panel = nullptr;
    SplitResult split;
    if (cfg.contains("sample")) {
      const double fraction = cfg["sample"].value("fraction", 0.7);
      const std::string strata_mode = cfg["sample"].value("strata", "outcome");
      std::map<std::string, std::string> labels;
      if (strata_mode == "outcome") {
        labels = outcome_strata(panel);
      } else if (strata_mode == "none") {
        std::string cur;
        for (const auto& row : panel.rows) {
          if (row.loan_id != cur) {
            cur = row.loan_id;
            labels[cur] = "all";
          }
        }
      } else {
        throw input_error("sample.strata must be 'outcome' or 'none'");
      }
      split = split_sample(panel, fraction, labels, seed);
      model_panel = &split.train;
      holdout_panel = &split.validation;
      StageClock clock(manifest, "sample");
      std::ostringstream st, sv;
      emit_panel(split.train, st);
      emit_panel(split.validation, sv);
      write_file(out / "train.csv", st.str());
      write_file(out / "validation.csv", sv.str());
      std::vector<std::string> outputs{"train.csv", "validation.csv"};

      // representativeness screen: resolution rates and AD per type
      const SpellDataset full_ag = build_spells(panel, Technique::AG);
      const SpellDataset train_ag = build_spells(split.train, Technique::AG);
      const SpellDataset valid_ag = build_spells(split.validation, Technique::AG);
      nlohmann::json ad = nlohmann::json::object();
      for (ResolutionType kappa :
           {ResolutionType::Default, ResolutionType::Settled, ResolutionType::WriteOff,
            ResolutionType::Censored}) {
        const auto full = resolution_rate(full_ag, kappa);
        const auto train = resolution_rate(train_ag, kappa);
        const auto valid = resolution_rate(valid_ag, kappa);
        const std::string tag = std::to_string(static_cast<int>(kappa));
        const std::pair<const char*, const ResolutionSeries*> emits[] = {
            {"full", &full}, {"train", &train}, {"valid", &valid}};
        for (const auto& [name, series] : emits) {
          std::ostringstream ss;
          emit_resolution_series_csv(*series, ss);
          const std::string file = "resolution_k" + tag + "_" + std::string(name) + ".csv";
          write_file(out / file, ss.str());
          outputs.push_back(file);
        }
        ad["kappa_" + tag] = {{"full_vs_train", avg_discrepancy(full, train)},
                              {"full_vs_valid", avg_discrepancy(full, valid)},
                              {"train_vs_valid", avg_discrepancy(train, valid)}};
      }
      write_file(out / "sampling_ad.json", ad.dump(2) + "\n");
      outputs.push_back("sampling_ad.json");
      clock.done(outputs);
    }

    // ---- per-technique stages -------------------------------------------
    for (Technique technique : techniques) {
      const std::string tag = technique_name(technique);

      stage = "build-spells " + tag;
      const SpellDataset model_ds = build_spells(*model_panel, technique);
      const SpellDataset eval_ds =
          holdout_panel != nullptr ? build_spells(*holdout_panel, technique) : model_ds;
      {
        StageClock clock(manifest, "build-spells " + tag);
        std::ostringstream ss;
        emit_spells_csv(model_ds, ss);
        write_file(out / ("spells_" + tag + ".csv"), ss.str());
        clock.done({"spells_" + tag + ".csv"});
      }

      stage = "fit " + tag;
      CoxFitOptions options;
      if (cfg.contains("fit")) {
        options.ties = parse_ties(cfg["fit"].value("ties", "efron"));
        if (cfg["fit"].contains("covariates")) {
          options.covariates = cfg["fit"]["covariates"].get<std::vector<std::string>>();
        }
      }
      CoxFit fit;
      {
        StageClock clock(manifest, "fit " + tag);
        fit = cox_fit(model_ds, options);
        write_file(out / ("fit_" + tag + ".json"), cox_fit_to_json(fit) + "\n");
        clock.done({"fit_" + tag + ".json"});
      }

      if (cfg.value("screen", false)) {
        stage = "screen " + tag;
        StageClock clock(manifest, "screen " + tag);
        std::ostringstream ss;
        ss << "covariate,c,aic,beta,se\n";
        for (const auto& name : model_ds.schema) {
          const auto res = screen_single_factor(model_ds, name, options);
          const double se = res.fit.vcov.size() > 0 ? std::sqrt(std::max(0.0, res.fit.vcov(0, 0)))
                                                    : 0.0;
          ss << name << ',' << format_double(res.c) << ',' << format_double(aic(res.fit)) << ','
             << format_double(res.fit.beta(0)) << ',' << format_double(se) << '\n';
        }
        write_file(out / ("screen_" + tag + ".csv"), ss.str());
        clock.done({"screen_" + tag + ".csv"});
      }

      if (cfg.contains("diagnose")) {
        stage = "diagnose " + tag;
        StageClock clock(manifest, "diagnose " + tag);
        TROCConfig troc_cfg;
        troc_cfg.lambda = cfg["diagnose"].value("lambda", 0.05);
        if (cfg["diagnose"].contains("horizons")) {
          troc_cfg.horizons = cfg["diagnose"]["horizons"].get<std::vector<int>>();
        }
        const std::string variant = cfg["diagnose"].value("troc", "clustered");
        if (variant != "clustered" && variant != "classical") {
          throw input_error("diagnose.troc must be 'clustered' or 'classical'");
        }
        std::vector<std::string> outputs;
        nlohmann::json summary;
        summary["technique"] = tag;
        summary["harrell_c"] = harrell_c(fit, eval_ds);
        summary["aic"] = aic(fit);
        const auto residuals = cox_snell_residuals(fit, eval_ds);
        const double d = ks_statistic(residuals.values, KsMode::OneSample);
        summary["ks_D"] = d;
        summary["one_minus_D"] = 1.0 - d;
        summary["horizons"] = nlohmann::json::array();
        const MarkerSample markers =
            variant == "clustered" ? period_markers(fit, eval_ds) : spell_markers(fit, eval_ds);
        for (int horizon : troc_cfg.horizons) {
          const TROCCurve curve = variant == "clustered"
                                      ? troc_clustered(markers, troc_cfg, horizon)
                                      : troc_classical(markers, troc_cfg, horizon);
          nlohmann::json h;
          h["horizon"] = horizon;
          h["defined"] = curve.defined;
          if (curve.defined) h["tauc"] = curve.tauc;
          summary["horizons"].push_back(h);
          for (bool cleaned : {false, true}) {
            std::ostringstream ss;
            emit_troc_csv(curve, cleaned, ss);
            const std::string file = "troc_" + tag + "_h" + std::to_string(horizon) +
                                     (cleaned ? ".csv" : "_raw.csv");
            write_file(out / file, ss.str());
            outputs.push_back(file);
          }
        }
        write_file(out / ("diagnostics_" + tag + ".json"), summary.dump(2) + "\n");
        outputs.push_back("diagnostics_" + tag + ".json");
        clock.done(outputs);
      }

      if (cfg.contains("term_structure")) {
        stage = "term-structure " + tag;
        StageClock clock(manifest, "term-structure " + tag);
        const int horizon = cfg["term_structure"].value("horizon", 240);
        const TermStructure actual = actual_term_structure(eval_ds, horizon);
        const TermStructure predicted = predicted_term_structure(fit, eval_ds, horizon, threads);
        std::ostringstream sa, sp, so;
        emit_term_structure_csv(actual, sa);
        emit_term_structure_csv(predicted, sp);
        emit_term_structure_overlay_csv(actual, predicted, so);
        write_file(out / ("term_actual_" + tag + ".csv"), sa.str());
        write_file(out / ("term_predicted_" + tag + ".csv"), sp.str());
        write_file(out / ("term_overlay_" + tag + ".csv"), so.str());
        nlohmann::json mae;
        mae["mae"] = term_structure_mae(actual, predicted, 1, horizon);
        mae["horizon"] = horizon;
        write_file(out / ("term_mae_" + tag + ".json"), mae.dump(2) + "\n");
        clock.done({"term_actual_" + tag + ".csv", "term_predicted_" + tag + ".csv",
                    "term_overlay_" + tag + ".csv", "term_mae_" + tag + ".json"});
      }
    }
  } catch (const std::exception& e) {
    return fail(stage, e.what());
  }

  manifest["status"] = "ok";
  write_file(out / "manifest.json", manifest.dump(2) + "\n");
  return 0;
}

}  // namespace spellhaz
