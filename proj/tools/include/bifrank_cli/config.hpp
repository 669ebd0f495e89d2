#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "bifrank/ingest.hpp"
#include "bifrank/solvers.hpp"

namespace bifrank::cli {

/// Documented key with its default value; an empty default means "unset".
struct ConfigKey {
  const char* name;  // "section.key"
  const char* default_value;
  const char* help;
};

/// Every accepted key, in echo order.
const std::vector<ConfigKey>& config_keys();

/// Raw "section.key" -> value strings over the full key set, defaults filled in.
class ConfigMap {
 public:
  ConfigMap();

  /// Throws ConfigError on unknown keys.
  void set(const std::string& key, const std::string& value);
  [[nodiscard]] const std::string& get(const std::string& key) const;
  [[nodiscard]] const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

/// Reads an INI file with [problem], [solver], [data] and [output] sections,
/// or a JSON file holding those sections (either at top level or under a
/// "config" member, as written to run.json). Throws ConfigError.
ConfigMap load_config_file(const std::filesystem::path& path);
ConfigMap parse_ini(const std::string& text, const std::string& source = "<string>");
ConfigMap parse_json(const nlohmann::json& doc, const std::string& source = "<json>");

/// Applies "section.key=value". Throws ConfigError.
void apply_override(ConfigMap& map, const std::string& assignment);

[[nodiscard]] std::string to_ini(const ConfigMap& map);
[[nodiscard]] nlohmann::json to_json(const ConfigMap& map);

enum class ProblemKind { MatcompSynthetic, MatcompRatings, PolicyEval };

const char* to_string(ProblemKind kind);

struct ProblemConfig {
  ProblemKind kind = ProblemKind::MatcompSynthetic;
  std::uint64_t seed = 42;
  // Matrix completion.
  int n = 50;
  int rank = 5;
  double noise_factor = 0.5;
  double observe_prob = 0.8;
  double lambda1 = 0.05;
  double lambda2 = 0.05;
  double epsilon_l1 = 1e-3;
  bool smooth_l1 = true;
  double sigma_g_sq = 0.0;
  /// Constraint radius; defaults depend on the problem kind.
  std::optional<double> alpha;
  // Policy evaluation.
  int states = 100;
  int actions = 3;
  int features = 100;
  double favored_prob = 0.9;
  double gamma = 0.9;
  bool deterministic = false;
  std::uint64_t reference_budget = 100000;
};

struct DataConfig {
  std::string path;
  RatingsFormat format = RatingsFormat::Tab100k;
  std::size_t batch_outer = 50;
  std::size_t batch_inner = 50;
};

struct OutputConfig {
  std::filesystem::path dir = "out";
  std::uint64_t cadence = 10;
};

struct ExperimentConfig {
  ProblemConfig problem;
  SolverConfig solver;
  DataConfig data;
  OutputConfig output;
  /// The resolved key map, echoed into run outputs.
  ConfigMap source;
};

/// Typed, validated view of a key map. Throws ConfigError.
ExperimentConfig resolve(const ConfigMap& map);

Algorithm algorithm_from_string(const std::string& name);

}  // namespace bifrank::cli
