#include "spellhaz/spells.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <set>

namespace spellhaz {

const char* technique_name(Technique t) {
  switch (t) {
    case Technique::TFD: return "tfd";
    case Technique::AG: return "ag";
    case Technique::PWP: return "pwp";
  }
  return "?";
}

Technique parse_technique(const std::string& label) {
  if (label == "tfd") return Technique::TFD;
  if (label == "ag") return Technique::AG;
  if (label == "pwp") return Technique::PWP;
  throw input_error("unknown technique '" + label + "' (supported: tfd, ag, pwp)");
}

std::vector<SpellRange> spell_ranges(const SpellDataset& ds) {
  std::vector<SpellRange> out;
  std::size_t i = 0;
  while (i < ds.records.size()) {
    std::size_t j = i + 1;
    while (j < ds.records.size() && ds.records[j].loan_id == ds.records[i].loan_id &&
           ds.records[j].spell_num == ds.records[i].spell_num) {
      ++j;
    }
    out.push_back({i, j});
    i = j;
  }
  return out;
}

namespace {

struct RawSpell {
  std::size_t first_row = 0;  // indices into panel.rows
  std::size_t last_row = 0;   // inclusive
  ResolutionType resolution = ResolutionType::Censored;
};

// Splits one loan's rows [lo, hi) into performing spells. Assumes the panel
// passed validation, so gaps only occur after Default months.
std::vector<RawSpell> segment_loan(const std::vector<PanelRow>& rows, std::size_t lo,
                                   std::size_t hi) {
  std::vector<RawSpell> spells;
  bool in_spell = false;
  bool in_default_episode = false;
  RawSpell cur;
  for (std::size_t i = lo; i < hi; ++i) {
    const PanelRow& row = rows[i];
    const bool contiguous = i > lo && row.period == rows[i - 1].period + 1;
    if (!contiguous) in_default_episode = false;  // a gap ends the episode bookkeeping

    if (row.state == LoanState::Performing) {
      in_default_episode = false;
      if (!in_spell) {
        cur = RawSpell{i, i, ResolutionType::Censored};
        in_spell = true;
      } else {
        cur.last_row = i;
      }
      continue;
    }

    if (row.state == LoanState::Default) {
      if (in_spell) {
        cur.last_row = i;  // the default month closes the spell
        cur.resolution = ResolutionType::Default;
        spells.push_back(cur);
        in_spell = false;
        in_default_episode = true;
      } else if (in_default_episode && contiguous) {
        // intra-default month, skipped
      } else {
        // immediate default: a spell consisting of the event month alone
        spells.push_back({i, i, ResolutionType::Default});
        in_default_episode = true;
      }
      continue;
    }

    // Settled / WriteOff
    const ResolutionType res =
        row.state == LoanState::Settled ? ResolutionType::Settled : ResolutionType::WriteOff;
    if (in_spell) {
      cur.last_row = i;
      cur.resolution = res;
      spells.push_back(cur);
      in_spell = false;
    } else {
      spells.push_back({i, i, res});
    }
    in_default_episode = false;
  }
  if (in_spell) {
    cur.resolution = ResolutionType::Censored;
    spells.push_back(cur);
  }
  return spells;
}

}  // namespace

SpellDataset build_spells(const Panel& panel, Technique technique) {
  const auto violations = validate_panel(panel);
  if (!violations.empty()) {
    throw input_error("panel violates invariants: loan " + violations.front().loan_id + ": " +
                      violations.front().description +
                      (violations.size() > 1
                           ? " (+" + std::to_string(violations.size() - 1) + " more)"
                           : ""));
  }

  SpellDataset ds;
  ds.technique = technique;
  ds.schema = panel.schema;

  std::size_t lo = 0;
  while (lo < panel.rows.size()) {
    std::size_t hi = lo + 1;
    while (hi < panel.rows.size() && panel.rows[hi].loan_id == panel.rows[lo].loan_id) ++hi;

    const auto spells = segment_loan(panel.rows, lo, hi);
    for (std::size_t j = 0; j < spells.size(); ++j) {
      const RawSpell& sp = spells[j];
      const int spell_num = static_cast<int>(j) + 1;
      if (technique == Technique::TFD && spell_num > 1) continue;
      const int n_months = static_cast<int>(sp.last_row - sp.first_row) + 1;
      for (std::size_t r = sp.first_row; r <= sp.last_row; ++r) {
        const PanelRow& row = panel.rows[r];
        SpellRecord rec;
        rec.loan_id = row.loan_id;
        rec.spell_num = spell_num;
        rec.spell_num_binned = std::min(spell_num, 4);
        rec.period = row.period;
        if (technique == Technique::PWP) {
          const int k = static_cast<int>(r - sp.first_row) + 1;  // month index in spell
          rec.entry = k - 1;
          rec.stop = k;
        } else {
          rec.entry = row.period - 1;
          rec.stop = row.period;
        }
        rec.resolution = sp.resolution;
        rec.status = (sp.resolution == ResolutionType::Default) && (r == sp.last_row);
        rec.spell_age = n_months;
        rec.covariates = row.covariates;
        ds.records.push_back(std::move(rec));
      }
    }
    lo = hi;
  }

  std::sort(ds.records.begin(), ds.records.end(), [](const SpellRecord& a, const SpellRecord& b) {
    if (a.loan_id != b.loan_id) return a.loan_id < b.loan_id;
    if (a.spell_num != b.spell_num) return a.spell_num < b.spell_num;
    return a.entry < b.entry;
  });
  return ds;
}

SpellSummary spell_summary(const SpellDataset& ds) {
  SpellSummary s;
  const auto ranges = spell_ranges(ds);
  s.n_spells = static_cast<int>(ranges.size());
  std::string cur_loan;
  int cur_max = 0;
  auto flush = [&]() {
    if (!cur_loan.empty()) {
      ++s.max_spell_histogram[cur_max];
      ++s.n_loans;
    }
  };
  for (const auto& range : ranges) {
    const SpellRecord& head = ds.records[range.first];
    if (head.loan_id != cur_loan) {
      flush();
      cur_loan = head.loan_id;
      cur_max = 0;
    }
    cur_max = std::max(cur_max, head.spell_num);
    ++s.resolution_counts[head.resolution];
  }
  flush();
  return s;
}

void emit_spells_csv(const SpellDataset& ds, std::ostream& out) {
  std::vector<std::string> header{"loan_id",  "spell_num",  "spell_num_binned", "entry",
                                  "stop",     "status",     "resolution",       "spell_age"};
  header.insert(header.end(), ds.schema.begin(), ds.schema.end());
  out << join_csv(header) << '\n';
  std::vector<std::string> cells;
  for (const auto& rec : ds.records) {
    cells.clear();
    cells.push_back(rec.loan_id);
    cells.push_back(std::to_string(rec.spell_num));
    cells.push_back(std::to_string(rec.spell_num_binned));
    cells.push_back(std::to_string(rec.entry));
    cells.push_back(std::to_string(rec.stop));
    cells.push_back(rec.status ? "1" : "0");
    cells.push_back(std::to_string(static_cast<int>(rec.resolution)));
    cells.push_back(std::to_string(rec.spell_age));
    for (double v : rec.covariates) cells.push_back(format_double(v));
    out << join_csv(cells) << '\n';
  }
}

SpellDataset read_spells_csv(std::istream& in, Technique technique) {
  std::string line;
  if (!std::getline(in, line)) throw input_error("empty spell CSV: missing header");
  const auto header = split_csv_line(line);
  const std::vector<std::string> fixed{"loan_id",  "spell_num",  "spell_num_binned", "entry",
                                       "stop",     "status",     "resolution",       "spell_age"};
  if (header.size() < fixed.size() ||
      !std::equal(fixed.begin(), fixed.end(), header.begin())) {
    throw input_error("spell CSV header does not match the expected layout");
  }
  SpellDataset ds;
  ds.technique = technique;
  ds.schema.assign(header.begin() + fixed.size(), header.end());

  auto to_int = [](const std::string& cell, int line_no) {
    int v = 0;
    auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
      throw input_error("spell CSV line " + std::to_string(line_no) + ": bad integer '" + cell +
                        "'");
    }
    return v;
  };

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw input_error("spell CSV line " + std::to_string(line_no) + ": wrong cell count");
    }
    SpellRecord rec;
    rec.loan_id = cells[0];
    rec.spell_num = to_int(cells[1], line_no);
    rec.spell_num_binned = to_int(cells[2], line_no);
    rec.period = -1;
    rec.entry = to_int(cells[3], line_no);
    rec.stop = to_int(cells[4], line_no);
    rec.status = to_int(cells[5], line_no) != 0;
    const int res = to_int(cells[6], line_no);
    if (res < 1 || res > 4) {
      throw input_error("spell CSV line " + std::to_string(line_no) + ": resolution out of range");
    }
    rec.resolution = static_cast<ResolutionType>(res);
    rec.spell_age = to_int(cells[7], line_no);
    rec.covariates.reserve(ds.schema.size());
    for (std::size_t c = fixed.size(); c < cells.size(); ++c) {
      double v = 0.0;
      auto r = std::from_chars(cells[c].data(), cells[c].data() + cells[c].size(), v);
      if (r.ec != std::errc() || r.ptr != cells[c].data() + cells[c].size()) {
        throw input_error("spell CSV line " + std::to_string(line_no) + ": bad number '" +
                          cells[c] + "'");
      }
      rec.covariates.push_back(v);
    }
    ds.records.push_back(std::move(rec));
  }
  // AG entry/stop ride the calendar axis, so the panel period is recoverable.
  if (technique == Technique::AG || technique == Technique::TFD) {
    for (auto& rec : ds.records) rec.period = rec.stop;
  }
  return ds;
}

}  // namespace spellhaz
