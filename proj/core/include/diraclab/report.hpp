#pragma once

// Serialization of experiment reports: JSON summary plus one CSV per table.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "diraclab/analysis.hpp"

namespace diraclab {

/// Header row, then rows at 17 significant digits; infinities print as inf.
void write_table_csv(std::ostream& os, const Table& table);

/// JSON text. Tables are referenced by their CSV file name (<name>.csv), not
/// inlined. Non-finite numbers become null.
std::string report_to_json(const ExperimentReport& report);

/// Matplotlib script that plots every table's first column against the rest.
void write_plot_script(std::ostream& os, const ExperimentReport& report);

/// Writes report.json, one CSV per table and plot.py into dir. Returns the
/// file names written, relative to dir.
std::vector<std::string> write_report(const ExperimentReport& report,
                                      const std::filesystem::path& dir);

/// Opens path for writing or throws IoError naming it.
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace diraclab
