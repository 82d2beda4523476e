#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spellhaz/util.hpp"

namespace spellhaz {

// Spell resolution types, coded 1-4. Censored is reserved for spells whose
// outcome was never observed (right-censoring).
enum class ResolutionType : int { Default = 1, Settled = 2, WriteOff = 3, Censored = 4 };

const char* resolution_name(ResolutionType r);

// Month-end loan state. A row whose state is Default/Settled/WriteOff marks
// the month in which the loan left performing status; it is the final month
// of its performing spell. Months spent inside a default episode either
// appear as further Default rows (skipped by the spell builder) or as a gap
// in the period sequence.
enum class LoanState : int { Performing = 0, Default = 1, Settled = 2, WriteOff = 3 };

LoanState parse_state_label(const std::string& label);       // PERF/DEF/SET/WO
const char* state_label(LoanState s);

struct PanelRow {
  std::string loan_id;
  int period = 0;  // loan age in months, >= 1
  LoanState state = LoanState::Performing;
  std::vector<double> covariates;
};

struct Panel {
  std::vector<std::string> schema;             // covariate column names
  std::vector<PanelRow> rows;                  // sorted by (loan_id, period)
  std::optional<std::string> calendar_origin;  // label for period 1, e.g. "2007-01"

  std::size_t n_loans() const;
};

struct SchemaConfig {
  std::vector<std::string> covariates;
  std::optional<std::string> calendar_origin;
};

SchemaConfig schema_config_from_json(const std::string& json_text);

// Reads the CSV layout `loan_id,period,state,<covariates...>`. Column order of
// covariates may differ from the config; unknown or missing columns, duplicate
// (loan_id, period) keys, unparsable cells and unknown state labels are
// reported with their line number.
Panel ingest_panel(std::istream& in, const SchemaConfig& config);

void emit_panel(const Panel& panel, std::ostream& out);

struct Violation {
  std::string loan_id;
  std::string description;
};

// Checks the Panel invariants; violations are data, not failures. Rules:
// unique ascending periods per loan, gaps only directly after a Default row
// (i.e. while the loan is out of performing status), no rows after a
// Settled/WriteOff month, consistent covariate arity.
std::vector<Violation> validate_panel(const Panel& panel);

}  // namespace spellhaz
