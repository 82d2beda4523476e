// spellhaz command line: survival-analysis pipeline for recurrent-default
// panel data. Subcommands compose through CSV/JSON files; every stage is
// deterministic for a fixed seed.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spellhaz/diagnostics.hpp"
#include "spellhaz/nonparametric.hpp"
#include "spellhaz/pipeline.hpp"
#include "spellhaz/sampling.hpp"
#include "spellhaz/synthgen.hpp"

using namespace spellhaz;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw input_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot write " + path);
  out << content;
}

Panel load_panel(const std::string& panel_path, const std::string& schema_path) {
  SchemaConfig schema;
  if (!schema_path.empty()) {
    schema = schema_config_from_json(slurp(schema_path));
  } else {
    // derive the covariate list from the header
    std::ifstream probe(panel_path);
    if (!probe) throw input_error("cannot open " + panel_path);
    std::string header_line;
    if (!std::getline(probe, header_line)) throw input_error("empty panel file");
    const auto header = split_csv_line(header_line);
    for (std::size_t i = 3; i < header.size(); ++i) schema.covariates.push_back(header[i]);
  }
  std::ifstream in(panel_path);
  if (!in) throw input_error("cannot open " + panel_path);
  return ingest_panel(in, schema);
}

std::vector<std::string> split_names(const std::string& csv) {
  std::vector<std::string> out;
  if (csv.empty()) return out;
  for (const auto& cell : split_csv_line(csv)) {
    if (!cell.empty()) out.push_back(cell);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spellhaz: recurrent-event Cox survival analysis for loan panels"};
  app.require_subcommand(1);

  long long seed = -1;
  int threads = 0;
  std::string out_dir = ".";
  app.add_option("--seed", seed, "override the seed of the invoked stage");
  app.add_option("--threads", threads, "worker threads (0 = all cores)");
  app.add_option("--out-dir", out_dir, "directory for outputs of pipeline runs");

  // ---- synth ----------------------------------------------------------
  auto* synth = app.add_subcommand("synth", "generate a synthetic panel");
  std::string synth_spec, synth_out, synth_schema_out;
  synth->add_option("--spec", synth_spec, "generator spec JSON")->required();
  synth->add_option("--out", synth_out, "panel CSV to write")->required();
  synth->add_option("--out-schema", synth_schema_out, "also write the schema config JSON");

  // ---- ingest ---------------------------------------------------------
  auto* ingest = app.add_subcommand("ingest", "validate and normalise a panel CSV");
  std::string in_panel, in_schema, ingest_out;
  ingest->add_option("--in", in_panel, "panel CSV")->required();
  ingest->add_option("--schema", in_schema, "schema config JSON");
  ingest->add_option("--out", ingest_out, "normalised panel CSV to write");

  // ---- build-spells -----------------------------------------------------
  auto* build = app.add_subcommand("build-spells", "panel -> counting-process spell dataset");
  std::string build_panel, build_schema, build_technique = "ag", build_out;
  build->add_option("--in", build_panel, "panel CSV")->required();
  build->add_option("--schema", build_schema, "schema config JSON");
  build->add_option("--technique", build_technique, "tfd | ag | pwp")->required();
  build->add_option("--out", build_out, "spell CSV to write")->required();

  // ---- sample -----------------------------------------------------------
  auto* sample = app.add_subcommand("sample", "stratified clustered train/validation split");
  std::string sample_panel, sample_schema, strata_col, sample_train, sample_valid, resolution_dir;
  double fraction = 0.7;
  sample->add_option("--in", sample_panel, "panel CSV")->required();
  sample->add_option("--schema", sample_schema, "schema config JSON");
  sample->add_option("--fraction", fraction, "training fraction in (0,1)");
  sample->add_option("--strata-col", strata_col,
                     "covariate column holding the stratum code (default: outcome strata)");
  sample->add_option("--out-train", sample_train, "training panel CSV")->required();
  sample->add_option("--out-valid", sample_valid, "validation panel CSV")->required();
  sample->add_option("--resolution-out", resolution_dir,
                     "directory for resolution-rate series and AD summary");

  // ---- fit ---------------------------------------------------------------
  auto* fit_cmd = app.add_subcommand("fit", "Cox partial-likelihood fit on a spell dataset");
  std::string fit_in, fit_technique, fit_ties = "efron", fit_covariates, fit_out;
  fit_cmd->add_option("--in", fit_in, "spell CSV")->required();
  fit_cmd->add_option("--technique", fit_technique, "tfd | ag | pwp")->required();
  fit_cmd->add_option("--ties", fit_ties, "efron | breslow");
  fit_cmd->add_option("--covariates", fit_covariates, "comma-separated subset (default: all)");
  fit_cmd->add_option("--out", fit_out, "fit JSON to write")->required();

  // ---- screen -------------------------------------------------------------
  auto* screen = app.add_subcommand("screen", "single-factor fits ranked by concordance");
  std::string screen_in, screen_technique, screen_out, screen_ties = "efron";
  screen->add_option("--in", screen_in, "spell CSV")->required();
  screen->add_option("--technique", screen_technique, "tfd | ag | pwp")->required();
  screen->add_option("--ties", screen_ties, "efron | breslow");
  screen->add_option("--out", screen_out, "ranking CSV to write")->required();

  // ---- diagnose -------------------------------------------------------------
  auto* diagnose = app.add_subcommand("diagnose", "concordance, CS residual KS, tROC/tAUC");
  std::string diag_in, diag_technique, diag_fit, diag_troc = "clustered", diag_horizons = "3,12,24,36";
  std::string diag_out_dir = ".";
  double diag_lambda = 0.05;
  diagnose->add_option("--in", diag_in, "spell CSV")->required();
  diagnose->add_option("--technique", diag_technique, "tfd | ag | pwp")->required();
  diagnose->add_option("--fit", diag_fit, "fit JSON")->required();
  diagnose->add_option("--horizons", diag_horizons, "comma-separated month horizons");
  diagnose->add_option("--lambda", diag_lambda, "NN smoothing half-mass");
  diagnose->add_option("--troc", diag_troc, "clustered | classical");
  diagnose->add_option("--out", diag_out_dir, "directory for summary JSON and curve CSVs");

  // ---- term-structure -------------------------------------------------------
  auto* term = app.add_subcommand("term-structure", "actual vs predicted event-probability series");
  std::string term_in, term_technique, term_fit, term_actual, term_predicted, term_overlay;
  int term_horizon = 240;
  term->add_option("--in", term_in, "spell CSV")->required();
  term->add_option("--technique", term_technique, "tfd | ag | pwp")->required();
  term->add_option("--fit", term_fit, "fit JSON")->required();
  term->add_option("--horizon", term_horizon, "maximum month");
  term->add_option("--out-actual", term_actual, "actual series CSV")->required();
  term->add_option("--out-predicted", term_predicted, "predicted series CSV")->required();
  term->add_option("--out-overlay", term_overlay, "overlay CSV (t,f_actual,f_predicted,abs_gap)");

  // ---- pipeline ---------------------------------------------------------------
  auto* pipe = app.add_subcommand("pipeline", "run the full configured sequence");
  std::string pipe_config;
  pipe->add_option("--config", pipe_config, "pipeline config JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      GeneratorSpec spec = generator_spec_from_json(slurp(synth_spec));
      if (seed >= 0) spec.seed = static_cast<std::uint64_t>(seed);
      const Panel panel = generate(spec);
      std::ostringstream ss;
      emit_panel(panel, ss);
      write_file(synth_out, ss.str());
      if (!synth_schema_out.empty()) {
        nlohmann::json js;
        js["covariates"] = generator_schema(spec);
        write_file(synth_schema_out, js.dump(2) + "\n");
      }
      std::cout << "wrote " << synth_out << " (" << panel.rows.size() << " rows, "
                << panel.n_loans() << " loans)\n";
    } else if (ingest->parsed()) {
      const Panel panel = load_panel(in_panel, in_schema);
      const auto violations = validate_panel(panel);
      for (const auto& v : violations) {
        std::cerr << "violation: loan " << v.loan_id << ": " << v.description << "\n";
      }
      if (!violations.empty()) return 2;
      if (!ingest_out.empty()) {
        std::ostringstream ss;
        emit_panel(panel, ss);
        write_file(ingest_out, ss.str());
      }
      std::cout << "panel ok: " << panel.rows.size() << " rows, " << panel.n_loans()
                << " loans\n";
    } else if (build->parsed()) {
      const Panel panel = load_panel(build_panel, build_schema);
      const SpellDataset ds = build_spells(panel, parse_technique(build_technique));
      std::ostringstream ss;
      emit_spells_csv(ds, ss);
      write_file(build_out, ss.str());
      const auto summary = spell_summary(ds);
      std::cout << "wrote " << build_out << " (" << ds.records.size() << " intervals, "
                << summary.n_spells << " spells, " << summary.n_loans << " loans)\n";
    } else if (sample->parsed()) {
      const Panel panel = load_panel(sample_panel, sample_schema);
      std::map<std::string, std::string> labels;
      if (strata_col.empty()) {
        labels = outcome_strata(panel);
      } else {
        auto it = std::find(panel.schema.begin(), panel.schema.end(), strata_col);
        if (it == panel.schema.end()) {
          throw input_error("strata column '" + strata_col + "' not in schema");
        }
        const std::size_t idx = static_cast<std::size_t>(it - panel.schema.begin());
        std::string cur;
        for (const auto& row : panel.rows) {
          if (row.loan_id == cur) continue;
          cur = row.loan_id;
          labels[cur] = format_double(row.covariates[idx]);
        }
      }
      const std::uint64_t use_seed = seed >= 0 ? static_cast<std::uint64_t>(seed) : 1;
      const SplitResult split = split_sample(panel, fraction, labels, use_seed);
      std::ostringstream st, sv;
      emit_panel(split.train, st);
      emit_panel(split.validation, sv);
      write_file(sample_train, st.str());
      write_file(sample_valid, sv.str());
      std::cout << "train " << split.train.n_loans() << " loans / validation "
                << split.validation.n_loans() << " loans\n";
      if (!resolution_dir.empty()) {
        std::filesystem::create_directories(resolution_dir);
        const SpellDataset full = build_spells(panel, Technique::AG);
        const SpellDataset train = build_spells(split.train, Technique::AG);
        const SpellDataset valid = build_spells(split.validation, Technique::AG);
        nlohmann::json ad = nlohmann::json::object();
        for (ResolutionType kappa : {ResolutionType::Default, ResolutionType::Settled,
                                     ResolutionType::WriteOff, ResolutionType::Censored}) {
          const auto rf = resolution_rate(full, kappa);
          const auto rt = resolution_rate(train, kappa);
          const auto rv = resolution_rate(valid, kappa);
          const std::string tag = std::to_string(static_cast<int>(kappa));
          const std::pair<const char*, const ResolutionSeries*> emits[] = {
              {"full", &rf}, {"train", &rt}, {"valid", &rv}};
          for (const auto& [name, series] : emits) {
            std::ostringstream ss;
            emit_resolution_series_csv(*series, ss);
            write_file(resolution_dir + "/resolution_k" + tag + "_" + name + ".csv", ss.str());
          }
          ad["kappa_" + tag] = {{"full_vs_train", avg_discrepancy(rf, rt)},
                                {"full_vs_valid", avg_discrepancy(rf, rv)},
                                {"train_vs_valid", avg_discrepancy(rt, rv)}};
        }
        write_file(resolution_dir + "/sampling_ad.json", ad.dump(2) + "\n");
      }
    } else if (fit_cmd->parsed()) {
      std::ifstream in(fit_in);
      if (!in) throw input_error("cannot open " + fit_in);
      const SpellDataset ds = read_spells_csv(in, parse_technique(fit_technique));
      CoxFitOptions options;
      options.ties = parse_ties(fit_ties);
      options.covariates = split_names(fit_covariates);
      const CoxFit fit = cox_fit(ds, options);
      write_file(fit_out, cox_fit_to_json(fit) + "\n");
      std::cout << "log PL " << fit.log_pl << ", " << fit.iterations << " iterations"
                << (fit.converged ? "" : " (NOT converged: " + fit.note + ")") << "\n";
      if (!fit.converged) return 1;
    } else if (screen->parsed()) {
      std::ifstream in(screen_in);
      if (!in) throw input_error("cannot open " + screen_in);
      const SpellDataset ds = read_spells_csv(in, parse_technique(screen_technique));
      CoxFitOptions options;
      options.ties = parse_ties(screen_ties);
      std::ostringstream ss;
      ss << "covariate,c,aic,beta,se\n";
      for (const auto& name : ds.schema) {
        try {
          const auto res = screen_single_factor(ds, name, options);
          const double se =
              res.fit.vcov.size() > 0 ? std::sqrt(std::max(0.0, res.fit.vcov(0, 0))) : 0.0;
          ss << name << ',' << format_double(res.c) << ',' << format_double(aic(res.fit)) << ','
             << format_double(res.fit.beta(0)) << ',' << format_double(se) << '\n';
        } catch (const input_error& e) {
          ss << name << ",,,," << '\n';
          std::cerr << "screen: skipping " << name << ": " << e.what() << "\n";
        }
      }
      write_file(screen_out, ss.str());
    } else if (diagnose->parsed()) {
      std::ifstream in(diag_in);
      if (!in) throw input_error("cannot open " + diag_in);
      const SpellDataset ds = read_spells_csv(in, parse_technique(diag_technique));
      const CoxFit fit = cox_fit_from_json(slurp(diag_fit));
      if (diag_troc != "clustered" && diag_troc != "classical") {
        throw input_error("--troc must be clustered or classical");
      }
      TROCConfig cfg;
      cfg.lambda = diag_lambda;
      cfg.horizons.clear();
      for (const auto& cell : split_names(diag_horizons)) cfg.horizons.push_back(std::stoi(cell));
      std::filesystem::create_directories(diag_out_dir);
      nlohmann::json summary;
      summary["technique"] = technique_name(ds.technique);
      summary["harrell_c"] = harrell_c(fit, ds);
      summary["aic"] = aic(fit);
      const auto residuals = cox_snell_residuals(fit, ds);
      const double d = ks_statistic(residuals.values, KsMode::OneSample);
      summary["ks_D"] = d;
      summary["one_minus_D"] = 1.0 - d;
      summary["horizons"] = nlohmann::json::array();
      const MarkerSample markers =
          diag_troc == "clustered" ? period_markers(fit, ds) : spell_markers(fit, ds);
      for (int horizon : cfg.horizons) {
        const TROCCurve curve = diag_troc == "clustered" ? troc_clustered(markers, cfg, horizon)
                                                         : troc_classical(markers, cfg, horizon);
        nlohmann::json h;
        h["horizon"] = horizon;
        h["defined"] = curve.defined;
        if (curve.defined) h["tauc"] = curve.tauc;
        summary["horizons"].push_back(h);
        for (bool cleaned : {false, true}) {
          std::ostringstream ss;
          emit_troc_csv(curve, cleaned, ss);
          write_file(diag_out_dir + "/troc_h" + std::to_string(horizon) +
                         (cleaned ? ".csv" : "_raw.csv"),
                     ss.str());
        }
      }
      write_file(diag_out_dir + "/diagnostics.json", summary.dump(2) + "\n");
      std::cout << summary.dump(2) << "\n";
    } else if (term->parsed()) {
      std::ifstream in(term_in);
      if (!in) throw input_error("cannot open " + term_in);
      const SpellDataset ds = read_spells_csv(in, parse_technique(term_technique));
      const CoxFit fit = cox_fit_from_json(slurp(term_fit));
      const int use_threads =
          threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
      const TermStructure actual = actual_term_structure(ds, term_horizon);
      const TermStructure predicted =
          predicted_term_structure(fit, ds, term_horizon, std::max(1, use_threads));
      std::ostringstream sa, sp;
      emit_term_structure_csv(actual, sa);
      emit_term_structure_csv(predicted, sp);
      write_file(term_actual, sa.str());
      write_file(term_predicted, sp.str());
      if (!term_overlay.empty()) {
        std::ostringstream so;
        emit_term_structure_overlay_csv(actual, predicted, so);
        write_file(term_overlay, so.str());
      }
      std::cout << "MAE " << format_double(term_structure_mae(actual, predicted, 1, term_horizon))
                << " over t in [1," << term_horizon << "]\n";
    } else if (pipe->parsed()) {
      run_pipeline(pipe_config, out_dir, threads, seed);
      std::cout << "pipeline ok: " << out_dir << "\n";
    }
  } catch (const input_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
