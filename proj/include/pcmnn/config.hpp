#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pcmnn/dynamics.hpp"
#include "pcmnn/pinn.hpp"
#include "pcmnn/prefit.hpp"

namespace pcmnn {

struct ConfigKey {
  std::string name;
  std::string default_value;  // empty: no default
  std::string help;
};

/// Every recognised run key with its default.
const std::vector<ConfigKey>& config_keys();

/// Flat key=value run configuration. Later sources override earlier ones:
/// defaults, config file, PCMNN_SEED, command-line flags.
class RunConfig {
 public:
  RunConfig();

  /// Throws UsageError for an unknown key.
  void set(const std::string& key, const std::string& value);
  /// Reads `key=value` lines; `#` starts a comment.
  void load_file(const std::filesystem::path& path);
  void load_text(const std::string& text, const std::string& source);
  /// Applies PCMNN_SEED when the variable is set.
  void apply_environment();

  bool has(const std::string& key) const;
  /// True when a file, the environment or a flag set the key.
  bool is_explicit(const std::string& key) const { return explicit_.contains(key); }
  std::string get(const std::string& key) const;
  double get_double(const std::string& key) const;
  long long get_int(const std::string& key) const;
  std::uint64_t get_seed() const;
  bool get_bool(const std::string& key) const;
  std::vector<std::string> get_list(const std::string& key) const;

  LogisticParams params() const;
  TrainConfig train_config() const;
  PrefitOptions prefit_options() const;
  Rk4Options rk4_options() const;

  /// Sorted `key=value` lines; loading it back reproduces this config.
  std::string snapshot() const;

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> explicit_;
};

}  // namespace pcmnn
