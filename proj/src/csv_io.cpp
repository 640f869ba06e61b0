#include "underreport/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace underreport {

namespace {

constexpr std::size_t kColumns = 9;

std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

template <typename T>
T parse_number(const std::string& cell, std::string_view column, std::size_t line) {
  T value{};
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (cell.empty() || ec != std::errc{} || ptr != last) {
    throw DataError(fmt::format("line {}: column {}: '{}' is not a valid number", line, column,
                                cell),
                    line);
  }
  return value;
}

bool parse_flag(const std::string& cell, std::string_view column, std::size_t line) {
  if (cell == "0" || cell == "false") return false;
  if (cell == "1" || cell == "true") return true;
  throw DataError(fmt::format("line {}: column {}: '{}' is not 0 or 1", line, column, cell),
                  line);
}

}  // namespace

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"' && current.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, ptr);
}

Ingested ingest_csv(std::istream& in, const std::string& source) {
  static const std::vector<std::string> kNames = split_csv_line(kDataHeader);
  Ingested result;
  result.report.source = source;

  std::string line;
  if (!std::getline(in, line)) throw DataError(fmt::format("{}: empty file, no header", source));
  result.report.lines = 1;
  const auto header = split_csv_line(trim_cr(line));
  for (const auto& name : kNames) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      throw DataError(fmt::format("line 1: missing column '{}'", name), 1);
    }
  }
  if (header != kNames) {
    throw DataError(fmt::format("line 1: header must be exactly '{}'", kDataHeader), 1);
  }

  std::vector<SchoolYearRecord> records;
  std::map<std::pair<std::string, int>, std::size_t> seen;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = trim_cr(line);
    if (text.find_first_not_of(" \t") == std::string_view::npos) {
      ++result.report.blank_lines;
      continue;
    }
    const auto cells = split_csv_line(text);
    if (cells.size() != kColumns) {
      throw DataError(fmt::format("line {}: expected {} columns, found {}", lineno, kColumns,
                                  cells.size()),
                      lineno);
    }
    SchoolYearRecord rec;
    rec.school_id = cells[0];
    rec.year = parse_number<int>(cells[1], kNames[1], lineno);
    rec.reported = parse_number<std::int64_t>(cells[2], kNames[2], lineno);
    rec.urbanization = parse_number<int>(cells[3], kNames[3], lineno);
    rec.students = parse_number<std::int64_t>(cells[4], kNames[4], lineno);
    rec.frac_women = parse_number<double>(cells[5], kNames[5], lineno);
    rec.pell_frac = parse_number<double>(cells[6], kNames[6], lineno);
    rec.assoc_only = parse_flag(cells[7], kNames[7], lineno);
    rec.religious = parse_flag(cells[8], kNames[8], lineno);
    try {
      validate_record(rec);
    } catch (const DataError& e) {
      throw DataError(fmt::format("line {}: {}", lineno, e.what()), lineno);
    }
    auto [it, fresh] = seen.emplace(std::pair{rec.school_id, rec.year}, lineno);
    if (!fresh) {
      throw DataError(fmt::format("line {}: duplicate (school_id, year) = ({}, {}), first seen "
                                  "on line {}",
                                  lineno, rec.school_id, rec.year, it->second),
                      lineno);
    }
    records.push_back(std::move(rec));
  }
  result.report.lines = lineno;
  if (records.empty()) throw DataError(fmt::format("{}: no records", source));
  result.data = Dataset::from_records(std::move(records));
  result.report.records = result.data.size();
  result.report.schools = result.data.n_schools();
  result.report.pell_median = result.data.pell_median();
  return result;
}

Ingested ingest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(fmt::format("cannot open data file {}", path.string()));
  return ingest_csv(in, path.string());
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  out << kDataHeader << '\n';
  for (const auto& r : data.records()) {
    out << csv_field(r.school_id) << ',' << r.year << ',' << r.reported << ','
        << r.urbanization << ',' << r.students << ',' << format_double(r.frac_women) << ','
        << format_double(r.pell_frac) << ',' << (r.assoc_only ? 1 : 0) << ','
        << (r.religious ? 1 : 0) << '\n';
  }
}

void write_truth_csv(std::ostream& out, const SimOutput& sim) {
  out << "school_id,year,z_true,p_true,lambda_true\n";
  for (std::size_t r = 0; r < sim.data.size(); ++r) {
    const auto& rec = sim.data.record(r);
    out << csv_field(rec.school_id) << ',' << rec.year << ',' << sim.z_true[r] << ','
        << format_double(sim.p_true[r]) << ',' << format_double(sim.lambda_true[r]) << '\n';
  }
}

void write_draws_csv(std::ostream& out, const SampleBatch& batch) {
  out << "chain,iteration";
  for (const auto& name : batch.names) out << ',' << csv_field(name);
  out << '\n';
  for (std::size_t s = 0; s < batch.n_draws(); ++s) {
    const auto [chain, iter] = batch.locate(s);
    out << chain << ',' << iter;
    for (double v : batch.draw(s)) out << ',' << format_double(v);
    out << '\n';
  }
}

SampleBatch read_draws_csv(std::istream& in, const std::string& source) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(fmt::format("{}: empty draws file", source));
  const auto header = split_csv_line(trim_cr(line));
  if (header.size() < 3 || header[0] != "chain" || header[1] != "iteration") {
    throw DataError(fmt::format("{}: header must start with chain,iteration", source), 1);
  }
  SampleBatch batch;
  batch.names.assign(header.begin() + 2, header.end());
  batch.dim = batch.names.size();

  std::vector<std::vector<double>> rows_by_chain;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto text = trim_cr(line);
    if (text.empty()) continue;
    const auto cells = split_csv_line(text);
    if (cells.size() != header.size()) {
      throw DataError(fmt::format("{}: line {}: expected {} columns, found {}", source, lineno,
                                  header.size(), cells.size()),
                      lineno);
    }
    const auto chain = parse_number<std::size_t>(cells[0], "chain", lineno);
    const auto iter = parse_number<std::size_t>(cells[1], "iteration", lineno);
    if (chain >= rows_by_chain.size()) rows_by_chain.resize(chain + 1);
    auto& rows = rows_by_chain[chain];
    if (iter != rows.size() / batch.dim) {
      throw DataError(fmt::format("{}: line {}: iterations of chain {} out of order", source,
                                  lineno, chain),
                      lineno);
    }
    for (std::size_t k = 0; k < batch.dim; ++k) {
      rows.push_back(parse_number<double>(cells[k + 2], header[k + 2], lineno));
    }
  }
  if (rows_by_chain.empty()) throw DataError(fmt::format("{}: no draws", source));
  batch.n_chains = rows_by_chain.size();
  batch.draws_per_chain = rows_by_chain.front().size() / batch.dim;
  for (std::size_t c = 0; c < rows_by_chain.size(); ++c) {
    if (rows_by_chain[c].size() != batch.draws_per_chain * batch.dim) {
      throw DataError(fmt::format("{}: chain {} has a different number of draws", source, c));
    }
    batch.draws.insert(batch.draws.end(), rows_by_chain[c].begin(), rows_by_chain[c].end());
  }
  return batch;
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  out << contents;
  if (!out) throw std::runtime_error(fmt::format("write failed for {}", path.string()));
}

}  // namespace underreport
