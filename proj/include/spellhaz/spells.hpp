#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "spellhaz/panel.hpp"

namespace spellhaz {

enum class Technique : int { TFD = 0, AG = 1, PWP = 2 };

const char* technique_name(Technique t);
Technique parse_technique(const std::string& label);  // tfd/ag/pwp

// One counting-process interval (entry, stop], one per panel month of a
// performing spell. Covariates are the values observed at the month's start.
struct SpellRecord {
  std::string loan_id;
  int spell_num = 1;         // j >= 1
  int spell_num_binned = 1;  // min(j, 4)
  int period = -1;           // originating panel period (calendar axis); -1 if unknown
  int entry = 0;             // technique axis: loan age (TFD/AG) or gap time (PWP)
  int stop = 0;
  bool status = false;       // default event at stop
  ResolutionType resolution = ResolutionType::Censored;
  int spell_age = 0;         // T_ij, identical across time scales
  std::vector<double> covariates;
};

struct SpellDataset {
  Technique technique = Technique::AG;
  std::vector<std::string> schema;
  std::vector<SpellRecord> records;  // sorted by (loan_id, spell_num, entry)
};

// Half-open index range [first, last) of one spell's intervals in
// SpellDataset::records, which are contiguous after sorting.
struct SpellRange {
  std::size_t first = 0;
  std::size_t last = 0;
};

std::vector<SpellRange> spell_ranges(const SpellDataset& ds);

// Converts a valid panel into the per-technique counting-process layout.
//
// A performing spell is a maximal run of contiguous Performing months plus,
// when present, the directly following month whose state records how the run
// ended (Default/Settled/WriteOff); that month is the spell's final interval
// and carries the event flag for defaults. Runs that simply reach the end of
// the loan's observed history resolve as Censored. Months spent inside a
// default episode (repeated DEF rows or a period gap) separate spells.
//
// Axis conventions: panel period t yields interval (t-1, t] on the loan-age
// axis (TFD and AG); the k-th month of a spell yields (k-1, k] on the gap
// axis (PWP). TFD keeps only spell 1, including a left-truncated nonzero
// first entry when a loan's history starts after origination.
SpellDataset build_spells(const Panel& panel, Technique technique);

struct SpellSummary {
  std::map<int, int> max_spell_histogram;          // max spell_num per loan -> #loans
  std::map<ResolutionType, int> resolution_counts; // per spell
  int n_loans = 0;
  int n_spells = 0;
};

SpellSummary spell_summary(const SpellDataset& ds);

void emit_spells_csv(const SpellDataset& ds, std::ostream& out);
SpellDataset read_spells_csv(std::istream& in, Technique technique);

}  // namespace spellhaz
