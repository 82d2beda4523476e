#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "spellhaz/panel.hpp"
#include "spellhaz/spells.hpp"

namespace testutil {

inline spellhaz::Panel load_appendix_panel() {
  std::ifstream in(std::string(SPELLHAZ_TEST_DATA_DIR) + "/appendix_panel.csv");
  spellhaz::SchemaConfig config;
  config.covariates = {"x1", "x2"};
  return spellhaz::ingest_panel(in, config);
}

// Single-interval spells assembled directly, for small hand-built datasets.
// Each tuple is (loan, entry, stop, status, covariates...).
struct ToySpell {
  std::string loan;
  int entry;
  int stop;
  bool status;
  std::vector<double> covariates;
};

inline spellhaz::SpellDataset make_dataset(spellhaz::Technique technique,
                                           const std::vector<std::string>& schema,
                                           const std::vector<ToySpell>& spells) {
  spellhaz::SpellDataset ds;
  ds.technique = technique;
  ds.schema = schema;
  for (const auto& sp : spells) {
    spellhaz::SpellRecord rec;
    rec.loan_id = sp.loan;
    rec.spell_num = 1;
    rec.spell_num_binned = 1;
    rec.period = sp.stop;
    rec.entry = sp.entry;
    rec.stop = sp.stop;
    rec.status = sp.status;
    rec.resolution =
        sp.status ? spellhaz::ResolutionType::Default : spellhaz::ResolutionType::Censored;
    rec.spell_age = sp.stop - sp.entry;
    rec.covariates = sp.covariates;
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace testutil
