#include "spellhaz/panel.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

namespace spellhaz {

const char* resolution_name(ResolutionType r) {
  switch (r) {
    case ResolutionType::Default: return "Default";
    case ResolutionType::Settled: return "Settled";
    case ResolutionType::WriteOff: return "WriteOff";
    case ResolutionType::Censored: return "Censored";
  }
  return "?";
}

LoanState parse_state_label(const std::string& label) {
  if (label == "PERF") return LoanState::Performing;
  if (label == "DEF") return LoanState::Default;
  if (label == "SET") return LoanState::Settled;
  if (label == "WO") return LoanState::WriteOff;
  throw input_error("unknown state label '" + label + "' (expected PERF, DEF, SET or WO)");
}

const char* state_label(LoanState s) {
  switch (s) {
    case LoanState::Performing: return "PERF";
    case LoanState::Default: return "DEF";
    case LoanState::Settled: return "SET";
    case LoanState::WriteOff: return "WO";
  }
  return "?";
}

std::size_t Panel::n_loans() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i == 0 || rows[i].loan_id != rows[i - 1].loan_id) ++n;
  }
  return n;
}

SchemaConfig schema_config_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("schema config is not valid JSON: ") + e.what());
  }
  SchemaConfig cfg;
  if (!j.contains("covariates") || !j["covariates"].is_array()) {
    throw input_error("schema config needs a 'covariates' array");
  }
  for (const auto& name : j["covariates"]) cfg.covariates.push_back(name.get<std::string>());
  std::set<std::string> seen(cfg.covariates.begin(), cfg.covariates.end());
  if (seen.size() != cfg.covariates.size()) {
    throw input_error("schema config lists a covariate twice");
  }
  if (j.contains("calendar_origin")) cfg.calendar_origin = j["calendar_origin"].get<std::string>();
  return cfg;
}

static double parse_cell_double(const std::string& cell, int line_no, const std::string& column) {
  double value = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end || cell.empty()) {
    throw input_error("line " + std::to_string(line_no) + ": covariate '" + column +
                      "' has non-numeric cell '" + cell + "'");
  }
  return value;
}

Panel ingest_panel(std::istream& in, const SchemaConfig& config) {
  std::string line;
  if (!std::getline(in, line)) throw input_error("empty input: missing header row");
  const auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "loan_id" || header[1] != "period" || header[2] != "state") {
    throw input_error("header must start with loan_id,period,state");
  }

  // map configured covariates onto header positions; header order may differ
  std::vector<std::size_t> cov_pos(config.covariates.size());
  std::vector<bool> header_used(header.size(), false);
  for (std::size_t c = 0; c < config.covariates.size(); ++c) {
    auto it = std::find(header.begin() + 3, header.end(), config.covariates[c]);
    if (it == header.end()) {
      throw input_error("header is missing configured covariate '" + config.covariates[c] + "'");
    }
    cov_pos[c] = static_cast<std::size_t>(it - header.begin());
    header_used[cov_pos[c]] = true;
  }
  for (std::size_t h = 3; h < header.size(); ++h) {
    if (!header_used[h]) {
      throw input_error("header column '" + header[h] + "' is not in the schema config");
    }
  }

  Panel panel;
  panel.schema = config.covariates;
  panel.calendar_origin = config.calendar_origin;

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw input_error("line " + std::to_string(line_no) + ": expected " +
                        std::to_string(header.size()) + " cells, got " +
                        std::to_string(cells.size()));
    }
    PanelRow row;
    row.loan_id = cells[0];
    if (row.loan_id.empty()) {
      throw input_error("line " + std::to_string(line_no) + ": empty loan_id");
    }
    {
      const char* b = cells[1].data();
      auto res = std::from_chars(b, b + cells[1].size(), row.period);
      if (res.ec != std::errc() || res.ptr != b + cells[1].size() || row.period < 1) {
        throw input_error("line " + std::to_string(line_no) + ": period '" + cells[1] +
                          "' is not a positive integer");
      }
    }
    try {
      row.state = parse_state_label(cells[2]);
    } catch (const input_error& e) {
      throw input_error("line " + std::to_string(line_no) + ": " + e.what());
    }
    row.covariates.resize(config.covariates.size());
    for (std::size_t c = 0; c < config.covariates.size(); ++c) {
      row.covariates[c] = parse_cell_double(cells[cov_pos[c]], line_no, config.covariates[c]);
    }
    panel.rows.push_back(std::move(row));
  }

  std::stable_sort(panel.rows.begin(), panel.rows.end(), [](const PanelRow& a, const PanelRow& b) {
    if (a.loan_id != b.loan_id) return a.loan_id < b.loan_id;
    return a.period < b.period;
  });

  for (std::size_t i = 1; i < panel.rows.size(); ++i) {
    if (panel.rows[i].loan_id == panel.rows[i - 1].loan_id &&
        panel.rows[i].period == panel.rows[i - 1].period) {
      throw input_error("duplicate (loan_id, period) = (" + panel.rows[i].loan_id + ", " +
                        std::to_string(panel.rows[i].period) + ")");
    }
  }
  return panel;
}

void emit_panel(const Panel& panel, std::ostream& out) {
  std::vector<std::string> header{"loan_id", "period", "state"};
  header.insert(header.end(), panel.schema.begin(), panel.schema.end());
  out << join_csv(header) << '\n';
  std::vector<std::string> cells;
  for (const auto& row : panel.rows) {
    cells.clear();
    cells.push_back(row.loan_id);
    cells.push_back(std::to_string(row.period));
    cells.push_back(state_label(row.state));
    for (double v : row.covariates) cells.push_back(format_double(v));
    out << join_csv(cells) << '\n';
  }
}

std::vector<Violation> validate_panel(const Panel& panel) {
  std::vector<Violation> out;
  const std::size_t arity = panel.schema.size();
  for (std::size_t i = 0; i < panel.rows.size(); ++i) {
    const PanelRow& row = panel.rows[i];
    if (row.covariates.size() != arity) {
      out.push_back({row.loan_id, "row at period " + std::to_string(row.period) + " carries " +
                                      std::to_string(row.covariates.size()) +
                                      " covariates, schema has " + std::to_string(arity)});
    }
    if (row.period < 1) {
      out.push_back({row.loan_id, "period " + std::to_string(row.period) + " below 1"});
    }
    if (i == 0 || panel.rows[i - 1].loan_id != row.loan_id) continue;
    const PanelRow& prev = panel.rows[i - 1];
    if (row.period <= prev.period) {
      out.push_back({row.loan_id, "periods not strictly ascending at period " +
                                      std::to_string(row.period)});
      continue;
    }
    if (prev.state == LoanState::Settled || prev.state == LoanState::WriteOff) {
      out.push_back({row.loan_id, "rows continue after terminal " +
                                      std::string(state_label(prev.state)) + " month " +
                                      std::to_string(prev.period)});
    }
    if (row.period != prev.period + 1 && prev.state != LoanState::Default) {
      // a gap is only legal while the loan sits in a default episode
      out.push_back({row.loan_id, "gap within spell between periods " +
                                      std::to_string(prev.period) + " and " +
                                      std::to_string(row.period)});
    }
  }
  return out;
}

}  // namespace spellhaz
