#include "bifrank_cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "bifrank/errors.hpp"

namespace bifrank::cli {

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"problem.kind", "matcomp_synthetic", "matcomp_synthetic | matcomp_ratings | policy_eval"},
      {"problem.seed", "42", "seed of the problem instance (Problem stream)"},
      {"problem.n", "50", "synthetic matrix size"},
      {"problem.rank", "5", "synthetic rank r"},
      {"problem.noise_factor", "0.5", "synthetic noise factor in [0, 1)"},
      {"problem.observe_prob", "0.8", "probability that an entry is observed, in (0, 1]"},
      {"problem.lambda1", "0.05", "weight of the sparsity term in the inner problem"},
      {"problem.lambda2", "0.05", "weight of the coupling term in the inner problem"},
      {"problem.epsilon_l1", "0.001", "pseudo-Huber smoothing width"},
      {"problem.smooth_l1", "true", "false switches to the plain l1 subgradient"},
      {"problem.sigma_g_sq", "0", "declared inner-gradient variance bound"},
      {"problem.alpha", "", "constraint radius; default ||W W^T||_*, ||M||_* or 0.1"},
      {"problem.states", "100", "policy evaluation: number of states"},
      {"problem.actions", "3", "policy evaluation: number of actions"},
      {"problem.features", "100", "policy evaluation: feature dimension"},
      {"problem.favored_prob", "0.9", "policy evaluation: probability of the favored action"},
      {"problem.gamma", "0.9", "policy evaluation: discount factor"},
      {"problem.deterministic", "false", "policy evaluation: exact expectations in place of samples"},
      {"problem.reference_budget", "100000", "policy evaluation: iterations used to compute w*"},
      {"solver.algorithm", "sbfw", "sbfw | scfw | sfw | projected"},
      {"solver.regime", "convex", "convex | nonconvex"},
      {"solver.horizon", "1000", "number of iterations T"},
      {"solver.seed", "0", "seed of the sampling streams"},
      {"solver.output", "auto", "auto | last | uniform"},
      {"solver.delta", "", "constant inner step override"},
      {"solver.rho", "", "constant tracking weight override"},
      {"solver.eta", "", "constant Frank-Wolfe step override"},
      {"solver.k", "", "constant Neumann depth override"},
      {"solver.inner_step_scale", "", "inner step scale override"},
      {"solver.projected_step", "0.1", "alpha_0 of the projected baseline"},
      {"solver.check_feasibility", "true", "abort when a recorded iterate leaves the set"},
      {"data.path", "", "ratings file for matcomp_ratings"},
      {"data.format", "tab100k", "tab100k | doublecolon1m | csvlatest"},
      {"data.batch_outer", "50", "outer minibatch size"},
      {"data.batch_inner", "50", "inner minibatch size"},
      {"output.dir", "out", "output directory"},
      {"output.cadence", "10", "record metrics every this many iterations"},
  };
  return keys;
}

ConfigMap::ConfigMap() {
  for (const ConfigKey& k : config_keys()) entries_.emplace_back(k.name, k.default_value);
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const auto& e) { return e.first == key; });
  if (it == entries_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

const std::string& ConfigMap::get(const std::string& key) const {
  auto it = std::find_if(entries_.begin(), entries_.end(),
                         [&](const auto& e) { return e.first == key; });
  if (it == entries_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string json_scalar(const nlohmann::json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number_float()) return v.dump();
  if (v.is_null()) return "";
  throw ConfigError("config key '" + key + "' must be a scalar");
}

}  // namespace

ConfigMap parse_ini(const std::string& text, const std::string& source) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  ConfigMap map;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(source + ": key '" + section + "' is outside a section");
    for (const auto& [key, value] : body) map.set(section + "." + key, trim(value.data()));
  }
  return map;
}

ConfigMap parse_json(const nlohmann::json& doc, const std::string& source) {
  const nlohmann::json& root = doc.contains("config") ? doc.at("config") : doc;
  if (!root.is_object()) throw ConfigError(source + ": expected an object of sections");
  ConfigMap map;
  for (const auto& [section, body] : root.items()) {
    if (!body.is_object()) throw ConfigError(source + ": section '" + section + "' is not an object");
    for (const auto& [key, value] : body.items()) {
      const std::string name = section + "." + key;
      map.set(name, json_scalar(value, name));
    }
  }
  return map;
}

ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  if (path.extension() == ".json") {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_json(doc, path.string());
  }
  return parse_ini(buf.str(), path.string());
}

void apply_override(ConfigMap& map, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override '" + assignment + "' must look like section.key=value");
  }
  map.set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

std::string to_ini(const ConfigMap& map) {
  std::ostringstream out;
  std::string current;
  for (const auto& [key, value] : map.entries()) {
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot);
    if (section != current) {
      if (!current.empty()) out << '\n';
      out << '[' << section << "]\n";
      current = section;
    }
    out << key.substr(dot + 1) << " = " << value << '\n';
  }
  return out.str();
}

nlohmann::json to_json(const ConfigMap& map) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [key, value] : map.entries()) {
    const auto dot = key.find('.');
    out[key.substr(0, dot)][key.substr(dot + 1)] = value;
  }
  return out;
}

const char* to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::MatcompSynthetic: return "matcomp_synthetic";
    case ProblemKind::MatcompRatings: return "matcomp_ratings";
    case ProblemKind::PolicyEval: return "policy_eval";
  }
  return "?";
}

Algorithm algorithm_from_string(const std::string& name) {
  if (name == "sbfw") return Algorithm::Sbfw;
  if (name == "scfw") return Algorithm::Scfw;
  if (name == "sfw") return Algorithm::Sfw;
  if (name == "projected") return Algorithm::ProjectedBilevel;
  throw ConfigError("unknown algorithm '" + name + "'");
}

namespace {

class Reader {
 public:
  explicit Reader(const ConfigMap& map) : map_(map) {}

  std::string str(const std::string& key) const { return map_.get(key); }

  double real(const std::string& key) const {
    const std::string& s = map_.get(key);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
      throw ConfigError("config key '" + key + "': '" + s + "' is not a finite number");
    }
    return v;
  }

  std::optional<double> optional_real(const std::string& key) const {
    if (map_.get(key).empty()) return std::nullopt;
    return real(key);
  }

  std::uint64_t count(const std::string& key) const {
    const std::string& s = map_.get(key);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
      throw ConfigError("config key '" + key + "': '" + s + "' is not a non-negative integer");
    }
    return v;
  }

  std::optional<std::uint64_t> optional_count(const std::string& key) const {
    if (map_.get(key).empty()) return std::nullopt;
    return count(key);
  }

  int positive_int(const std::string& key) const {
    const std::uint64_t v = count(key);
    if (v < 1 || v > 1000000) throw ConfigError("config key '" + key + "' must be in [1, 1e6]");
    return static_cast<int>(v);
  }

  bool flag(const std::string& key) const {
    const std::string& s = map_.get(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError("config key '" + key + "': '" + s + "' is not a boolean");
  }

 private:
  const ConfigMap& map_;
};

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

}  // namespace

ExperimentConfig resolve(const ConfigMap& map) {
  const Reader r(map);
  ExperimentConfig c;
  c.source = map;

  ProblemConfig& p = c.problem;
  const std::string kind = r.str("problem.kind");
  if (kind == "matcomp_synthetic") {
    p.kind = ProblemKind::MatcompSynthetic;
  } else if (kind == "matcomp_ratings") {
    p.kind = ProblemKind::MatcompRatings;
  } else if (kind == "policy_eval") {
    p.kind = ProblemKind::PolicyEval;
  } else {
    throw ConfigError("unknown problem kind '" + kind + "'");
  }
  p.seed = r.count("problem.seed");
  p.n = r.positive_int("problem.n");
  p.rank = r.positive_int("problem.rank");
  p.noise_factor = r.real("problem.noise_factor");
  p.observe_prob = r.real("problem.observe_prob");
  p.lambda1 = r.real("problem.lambda1");
  p.lambda2 = r.real("problem.lambda2");
  p.epsilon_l1 = r.real("problem.epsilon_l1");
  p.smooth_l1 = r.flag("problem.smooth_l1");
  p.sigma_g_sq = r.real("problem.sigma_g_sq");
  p.alpha = r.optional_real("problem.alpha");
  p.states = r.positive_int("problem.states");
  p.actions = r.positive_int("problem.actions");
  p.features = r.positive_int("problem.features");
  p.favored_prob = r.real("problem.favored_prob");
  p.gamma = r.real("problem.gamma");
  p.deterministic = r.flag("problem.deterministic");
  p.reference_budget = r.count("problem.reference_budget");

  require(p.rank <= p.n, "problem.rank must not exceed problem.n");
  require(p.noise_factor >= 0.0 && p.noise_factor < 1.0, "problem.noise_factor must lie in [0, 1)");
  require(p.observe_prob > 0.0 && p.observe_prob <= 1.0,
          "problem.observe_prob must lie in (0, 1]");
  require(p.lambda1 >= 0.0, "problem.lambda1 must be non-negative");
  require(p.lambda2 > 0.0, "problem.lambda2 must be positive");
  require(p.epsilon_l1 > 0.0, "problem.epsilon_l1 must be positive");
  require(p.sigma_g_sq >= 0.0, "problem.sigma_g_sq must be non-negative");
  require(!p.alpha || *p.alpha > 0.0, "problem.alpha must be positive");
  require(p.favored_prob >= 0.0 && p.favored_prob <= 1.0,
          "problem.favored_prob must lie in [0, 1]");
  require(p.gamma > 0.0 && p.gamma < 1.0, "problem.gamma must lie in (0, 1)");
  require(p.reference_budget >= 1, "problem.reference_budget must be >= 1");

  SolverConfig& s = c.solver;
  s.algorithm = algorithm_from_string(r.str("solver.algorithm"));
  const std::string regime = r.str("solver.regime");
  require(regime == "convex" || regime == "nonconvex", "solver.regime must be convex or nonconvex");
  s.nonconvex = regime == "nonconvex";
  s.horizon = r.count("solver.horizon");
  s.seed = r.count("solver.seed");
  const std::string output = r.str("solver.output");
  if (output == "auto") {
    s.output = OutputRule::Auto;
  } else if (output == "last") {
    s.output = OutputRule::LastIterate;
  } else if (output == "uniform") {
    s.output = OutputRule::UniformIterate;
  } else {
    throw ConfigError("solver.output must be auto, last or uniform");
  }
  s.overrides.delta = r.optional_real("solver.delta");
  s.overrides.rho = r.optional_real("solver.rho");
  s.overrides.eta = r.optional_real("solver.eta");
  s.overrides.k = r.optional_count("solver.k");
  s.overrides.inner_step_scale = r.optional_real("solver.inner_step_scale");
  s.projected_step = r.real("solver.projected_step");
  s.check_feasibility = r.flag("solver.check_feasibility");

  DataConfig& d = c.data;
  d.path = r.str("data.path");
  try {
    d.format = ratings_format_from_string(r.str("data.format"));
  } catch (const Error& e) {
    throw ConfigError(std::string("data.format: ") + e.what());
  }
  d.batch_outer = r.count("data.batch_outer");
  d.batch_inner = r.count("data.batch_inner");
  require(d.batch_outer >= 1 && d.batch_inner >= 1, "data batch sizes must be >= 1");

  c.output.dir = r.str("output.dir");
  c.output.cadence = r.count("output.cadence");
  require(!c.output.dir.empty(), "output.dir must not be empty");
  s.cadence = c.output.cadence;
  s.validate();

  const bool matcomp = p.kind != ProblemKind::PolicyEval;
  if (matcomp) {
    require(s.algorithm != Algorithm::Scfw, "scfw needs a compositional problem (policy_eval)");
  } else {
    require(s.algorithm != Algorithm::Sfw, "sfw needs a single-level problem (matcomp)");
  }
  if (p.kind == ProblemKind::MatcompRatings) {
    require(!d.path.empty(), "data.path is required for matcomp_ratings");
  }
  return c;
}

}  // namespace bifrank::cli
