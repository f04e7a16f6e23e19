#pragma once

// Run configuration: flat key=value text plus command-line overrides.
//
// Every key is validated when it is read, before any computation starts.
// Keys that are unknown, or that the chosen experiment does not use, are
// rejected. Values are stored in a canonical spelling so that the manifest of
// a run diffs cleanly against another.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace diraclab {

enum class Experiment {
  lyapunov_sweep,
  critical_energies,
  moments,
  delocalization,
  localization,
  mass_gap,
  nrl,
  zitter,
  eigenfunctions,
};

/// CLI spelling, e.g. "lyapunov-sweep".
std::string to_string(Experiment e);
Experiment experiment_from_string(const std::string& s);
std::vector<Experiment> all_experiments();

/// Keys accepted by an experiment, sorted.
std::vector<std::string> config_keys(Experiment e);

/// Environment variable naming the default output root.
inline constexpr const char* kOutputRootEnv = "DIRACLAB_OUT";

struct ConfigEntry {
  std::string value;   ///< canonical spelling
  std::string source;  ///< "file:LINE" or "flag --NAME"
};

class RunConfig {
 public:
  Experiment experiment = Experiment::moments;
  std::map<std::string, ConfigEntry> entries;
  /// Keys set in the file and then overridden by a flag, with the file value.
  std::map<std::string, ConfigEntry> overridden;
  std::filesystem::path out_dir;
  bool check = false;

  bool has(const std::string& key) const { return entries.count(key) != 0; }

  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::vector<double> get_doubles(const std::string& key, std::vector<double> fallback) const;
  std::vector<std::size_t> get_sizes(const std::string& key,
                                     std::vector<std::size_t> fallback) const;

  /// "experiment=NAME" followed by every entry as key=value, sorted by key.
  std::string canonical() const;
};

struct FlagValue {
  std::string key;
  std::string value;
  std::string flag;  ///< spelling used on the command line, for messages
};

/// Builds a validated RunConfig. file_text may be empty. Flags override file
/// values. The output directory is, in order: the out key, then
/// $DIRACLAB_OUT/<experiment>, then runs/<experiment>.
/// Throws ConfigError with the offending line or flag.
RunConfig parse_config(Experiment experiment, const std::string& file_text,
                       const std::string& file_name, const std::vector<FlagValue>& flags);

/// Reads the file (throws ConfigError naming it when unreadable) and parses.
RunConfig load_config(Experiment experiment, const std::optional<std::filesystem::path>& file,
                      const std::vector<FlagValue>& flags);

}  // namespace diraclab
