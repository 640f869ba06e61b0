#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "underreport/dataset.hpp"
#include "underreport/hmc.hpp"
#include "underreport/synthetic.hpp"

namespace underreport {

/// Column order of the data file.
inline constexpr std::string_view kDataHeader =
    "school_id,year,reported,urbanization,students,frac_women,pell_frac,assoc_only,religious";

struct IngestReport {
  std::string source;
  std::size_t lines = 0;        // including the header
  std::size_t records = 0;
  std::size_t blank_lines = 0;  // skipped
  std::size_t schools = 0;
  double pell_median = 0.0;
};

struct Ingested {
  Dataset data;
  IngestReport report;
};

/// Parses and validates a data file. Errors are DataError with the 1-based
/// line number of the offending row.
Ingested ingest_csv(std::istream& in, const std::string& source = "<input>");
Ingested ingest(const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Splits one CSV line; fields may be double-quoted with "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);
/// Quotes a field only when it needs it.
std::string csv_field(std::string_view text);

void write_dataset_csv(std::ostream& out, const Dataset& data);
/// school_id,year,z_true,p_true,lambda_true
void write_truth_csv(std::ostream& out, const SimOutput& sim);

/// chain,iteration,<parameter names...>; one row per draw.
void write_draws_csv(std::ostream& out, const SampleBatch& batch);
/// Reads a file written by write_draws_csv. Chains must have equal length;
/// sampler statistics that the file does not carry are left empty.
SampleBatch read_draws_csv(std::istream& in, const std::string& source = "<draws>");

/// Writes `contents` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace underreport
