#include "diraclab/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "diraclab/error.hpp"

namespace diraclab {

namespace {

std::string csv_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

nlohmann::json number(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

}  // namespace

void write_table_csv(std::ostream& os, const Table& table) {
  for (std::size_t j = 0; j < table.columns.size(); ++j)
    os << (j ? "," : "") << table.columns[j];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << csv_number(row[j]);
    os << '\n';
  }
}

std::string report_to_json(const ExperimentReport& report) {
  // ordered_json keeps insertion order so reruns diff cleanly.
  nlohmann::ordered_json j;
  j["experiment"] = report.experiment;
  j["passed"] = report.passed();
  auto& params = j["parameters"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.parameters) params[k] = v;
  auto& measured = j["measured"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.measured) measured[k] = number(v);
  auto& checks = j["checks"] = nlohmann::ordered_json::array();
  for (const Check& c : report.checks)
    checks.push_back({{"name", c.name},
                      {"value", number(c.value)},
                      {"lower", number(c.lower)},
                      {"upper", number(c.upper)},
                      {"passed", c.passed()}});
  auto& prov = j["provenance"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : report.provenance) prov[k] = v;
  auto& tables = j["series"] = nlohmann::ordered_json::array();
  for (const Table& t : report.tables)
    tables.push_back({{"name", t.name}, {"file", t.name + ".csv"}, {"rows", t.rows.size()},
                      {"columns", t.columns}});
  return j.dump(2) + "\n";
}

void write_plot_script(std::ostream& os, const ExperimentReport& report) {
  os << "# Plots for the " << report.experiment << " run; execute from the output directory.\n"
     << "import csv\n"
     << "import matplotlib\n"
     << "matplotlib.use(\"Agg\")\n"
     << "import matplotlib.pyplot as plt\n\n"
     << "def load(name):\n"
     << "    with open(name) as f:\n"
     << "        rows = list(csv.reader(f))\n"
     << "    header, body = rows[0], rows[1:]\n"
     << "    return header, [[float(x) for x in r] for r in body]\n\n";
  for (const Table& t : report.tables) {
    if (t.columns.size() < 2) continue;
    os << "header, rows = load(\"" << t.name << ".csv\")\n"
       << "fig, ax = plt.subplots()\n"
       << "for j in range(1, len(header)):\n"
       << "    ax.plot([r[0] for r in rows], [r[j] for r in rows], \".-\", label=header[j])\n"
       << "ax.set_xlabel(header[0])\n"
       << "ax.set_title(\"" << t.name << "\")\n"
       << "ax.legend()\n"
       << "fig.savefig(\"" << t.name << ".png\", dpi=120)\n\n";
  }
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << contents;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<std::string> write_report(const ExperimentReport& report,
                                      const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  std::vector<std::string> files;
  write_file(dir / "report.json", report_to_json(report));
  files.emplace_back("report.json");
  for (const Table& t : report.tables) {
    std::ostringstream os;
    write_table_csv(os, t);
    write_file(dir / (t.name + ".csv"), os.str());
    files.push_back(t.name + ".csv");
  }
  std::ostringstream plot;
  write_plot_script(plot, report);
  write_file(dir / "plot.py", plot.str());
  files.emplace_back("plot.py");
  return files;
}

}  // namespace diraclab
