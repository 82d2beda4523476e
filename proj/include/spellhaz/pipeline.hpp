#pragma once

#include <string>

namespace spellhaz {

// Runs synth/ingest -> build-spells -> sample -> fit -> screen -> diagnose ->
// term-structure from a JSON config, writing all artifacts plus manifest.json
// into out_dir. Numeric outputs are byte-identical for a fixed config
// regardless of thread count; the manifest carries wall-times and the input
// fingerprint. Any stage error aborts the run, and the manifest then flags
// the partial outputs as stale.
//
// Config shape (seed/threads may be overridden by the caller):
//   {
//     "seed": 42, "threads": 0,
//     "synth": { ...generator spec... }            // or:
//     "panel": "panel.csv", "schema": "schema.json",
//     "techniques": ["tfd", "ag", "pwp"],
//     "sample": {"fraction": 0.7, "strata": "outcome"},   // optional stage
//     "fit": {"ties": "efron", "covariates": ["x1"]},     // covariates optional
//     "screen": true,                                      // optional stage
//     "diagnose": {"horizons": [3,12,24,36], "lambda": 0.05, "troc": "clustered"},
//     "term_structure": {"horizon": 240}
//   }
int run_pipeline(const std::string& config_path, const std::string& out_dir, int threads_override,
                 long long seed_override);

}  // namespace spellhaz
