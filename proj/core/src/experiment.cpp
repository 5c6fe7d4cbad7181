#include "ftrluq/experiment.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <json.hpp>
#include <limits>
#include <sstream>

#include "ftrluq/io_util.hpp"
#include "ftrluq/linear_maps.hpp"
#include "ftrluq/rng.hpp"

namespace ftrluq {

namespace {

using json = nlohmann::ordered_json;

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Normalized token for enum parsing: lowercase, separators dropped.
std::string token(const std::string& s) {
  std::string out;
  for (char c : s)
    if (c != '-' && c != '_' && c != ' ')
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

UpdateRule parse_rule(const std::string& s, const std::string& where) {
  const std::string t = token(s);
  if (t == "gda") return UpdateRule::GDA;
  if (t == "altgda") return UpdateRule::AltGDA;
  if (t == "mwu") return UpdateRule::MWU;
  if (t == "altmwu") return UpdateRule::AltMWU;
  if (t == "continuousftrl" || t == "continuous") return UpdateRule::ContinuousFTRL;
  throw ConfigError(where, "unknown rule '" + s +
                               "'; valid: GDA, AltGDA, MWU, AltMWU, ContinuousFTRL");
}

RegKind parse_reg(const std::string& s, const std::string& where) {
  const std::string t = token(s);
  if (t == "euclidean") return RegKind::Euclidean;
  if (t == "entropy" || t == "negativeentropy") return RegKind::NegativeEntropy;
  throw ConfigError(where, "unknown regularizer '" + s + "'; valid: euclidean, entropy");
}

const char* reg_label(RegKind k) {
  return k == RegKind::Euclidean ? "euclidean" : "entropy";
}

// Rule tag used in file names; the continuous rule maps to its flow name.
std::string rule_file_tag(UpdateRule rule) {
  if (rule == UpdateRule::ContinuousFTRL) return "continuous";
  return lower(update_rule_name(rule));
}

double get_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where, "must be a number");
  return v.get<double>();
}

long get_count(const json& v, const std::string& where, long min_value) {
  if (!v.is_number_integer() && !v.is_number_unsigned())
    throw ConfigError(where, "must be an integer");
  const long n = v.get<long>();
  if (n < min_value)
    throw ConfigError(where, "must be at least " + std::to_string(min_value));
  return n;
}

std::uint64_t get_seed(const json& v, const std::string& where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0)
    return static_cast<std::uint64_t>(v.get<long long>());
  throw ConfigError(where, "must be a nonnegative integer");
}

Mat get_matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty())
    throw ConfigError(where, "must be a nonempty array of rows");
  const std::size_t rows = v.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    const json& row = v[i];
    if (!row.is_array() || row.empty())
      throw ConfigError(where + "/" + std::to_string(i), "must be a nonempty row");
    if (i == 0)
      cols = row.size();
    else if (row.size() != cols)
      throw ConfigError(where + "/" + std::to_string(i), "ragged row");
  }
  Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const json& cell = v[i][j];
      if (!cell.is_number())
        throw ConfigError(where + "/" + std::to_string(i) + "/" + std::to_string(j),
                          "must be a number");
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          cell.get<double>();
    }
  if (!m.allFinite()) throw ConfigError(where, "entries must be finite");
  return m;
}

Vec get_vector(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty())
    throw ConfigError(where, "must be a nonempty array of numbers");
  Vec out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number())
      throw ConfigError(where + "/" + std::to_string(i), "must be a number");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  return out;
}

void check_psd(const Mat& P, const std::string& where) {
  if (P.rows() != P.cols()) throw ConfigError(where, "must be square");
  const double scale = std::max(1.0, P.cwiseAbs().maxCoeff());
  if ((P - P.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw ConfigError(where, "must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(P);
  if (es.eigenvalues().minCoeff() < -1e-10 * scale)
    throw ConfigError(where, "must be positive semidefinite");
}

GameRef parse_game(const json& v) {
  if (v.is_string()) {
    const std::string name = v.get<std::string>();
    if (!is_named_game(name))
      throw ConfigError("/game", "unknown game '" + name +
                                     "'; valid: " + join(named_game_list(), ", "));
    return GameRef{name, named_game(name).A};
  }
  if (v.is_array()) return GameRef{"custom", get_matrix(v, "/game")};
  if (v.is_object()) {
    long rows = 0, cols = 0;
    double lo = -1.0, hi = 1.0;
    std::uint64_t seed = 0;
    for (const auto& [k, val] : v.items()) {
      if (k == "rows")
        rows = get_count(val, "/game/rows", 1);
      else if (k == "cols")
        cols = get_count(val, "/game/cols", 1);
      else if (k == "entry_range") {
        const Vec r = get_vector(val, "/game/entry_range");
        if (r.size() != 2 || !(r(0) < r(1)))
          throw ConfigError("/game/entry_range", "must be [lo, hi] with lo < hi");
        lo = r(0);
        hi = r(1);
      } else if (k == "seed")
        seed = get_seed(val, "/game/seed");
      else
        throw ConfigError("/game/" + k, "unknown key");
    }
    if (rows < 1 || cols < 1)
      throw ConfigError("/game", "random spec needs rows and cols");
    Xoshiro256pp rng(seed);
    Mat m(rows, cols);
    for (long i = 0; i < rows; ++i)
      for (long j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
    return GameRef{"random", m};
  }
  throw ConfigError("/game", "must be a name, a matrix, or a random spec");
}

InitDistribution parse_init(const json& v) {
  InitDistribution init;
  if (v.is_string()) {
    if (token(v.get<std::string>()) != "canonical")
      throw ConfigError("/init", "unknown init shorthand '" + v.get<std::string>() + "'");
    init.kind = InitDistribution::Kind::GaussianDual;
    init.gauss.player = 1;
    init.gauss.cov = canonical_initial_covariance();
    init.gauss.mean = Vec::Zero(init.gauss.cov.rows());
    return init;
  }
  if (v.is_array()) {
    init.kind = InitDistribution::Kind::GaussianDual;
    init.gauss.player = 1;
    init.gauss.cov = get_matrix(v, "/init");
    check_psd(init.gauss.cov, "/init");
    init.gauss.mean = Vec::Zero(init.gauss.cov.rows());
    return init;
  }
  if (!v.is_object()) throw ConfigError("/init", "must be an object, matrix, or 'canonical'");
  if (!v.contains("kind") || !v["kind"].is_string())
    throw ConfigError("/init/kind", "required string");
  const std::string kind = token(v["kind"].get<std::string>());
  if (kind == "gaussiandual") {
    init.kind = InitDistribution::Kind::GaussianDual;
    init.gauss.player = 1;
    bool has_cov = false, has_mean = false;
    for (const auto& [k, val] : v.items()) {
      if (k == "kind") continue;
      if (k == "player") {
        const long p = get_count(val, "/init/player", 1);
        if (p != 1 && p != 2) throw ConfigError("/init/player", "must be 1 or 2");
        init.gauss.player = static_cast<int>(p);
      } else if (k == "cov") {
        if (val.is_string() && token(val.get<std::string>()) == "canonical")
          init.gauss.cov = canonical_initial_covariance();
        else
          init.gauss.cov = get_matrix(val, "/init/cov");
        check_psd(init.gauss.cov, "/init/cov");
        has_cov = true;
      } else if (k == "mean") {
        init.gauss.mean = get_vector(val, "/init/mean");
        has_mean = true;
      } else
        throw ConfigError("/init/" + k, "unknown key");
    }
    if (!has_cov) throw ConfigError("/init/cov", "required");
    if (!has_mean) init.gauss.mean = Vec::Zero(init.gauss.cov.rows());
    if (init.gauss.mean.size() != init.gauss.cov.rows())
      throw ConfigError("/init/mean", "length must match the covariance dimension");
    return init;
  }
  if (kind == "uniformsimplexpatch") {
    init.kind = InitDistribution::Kind::UniformSimplexPatch;
    bool has_center = false;
    for (const auto& [k, val] : v.items()) {
      if (k == "kind") continue;
      if (k == "center") {
        init.patch.center = get_vector(val, "/init/center");
        has_center = true;
      } else if (k == "side") {
        init.patch.side = get_number(val, "/init/side");
      } else
        throw ConfigError("/init/" + k, "unknown key");
    }
    if (!has_center) throw ConfigError("/init/center", "required");
    if (!(init.patch.side > 0.0)) throw ConfigError("/init/side", "must be positive");
    if (init.patch.center.size() < 3)
      throw ConfigError("/init/center", "must have at least 3 entries");
    if (std::abs(init.patch.center.sum() - 1.0) > 1e-9 ||
        init.patch.center.minCoeff() <= 0.0)
      throw ConfigError("/init/center", "must be an interior simplex point");
    return init;
  }
  throw ConfigError("/init/kind", "unknown kind '" + v["kind"].get<std::string>() +
                                      "'; valid: gaussian-dual, uniform-simplex-patch");
}

void parse_algorithm(const json& v, AlgorithmSpec& spec) {
  if (!v.is_object()) throw ConfigError("/algorithm", "must be an object");
  for (const auto& [k, val] : v.items()) {
    (void)val;
    if (k != "rule" && k != "eta" && k != "regularizer")
      throw ConfigError("/algorithm/" + k, "unknown key");
  }
  const bool reg_explicit = v.contains("regularizer");
  if (v.contains("rule")) {
    if (!v["rule"].is_string()) throw ConfigError("/algorithm/rule", "must be a string");
    spec.rule = parse_rule(v["rule"].get<std::string>(), "/algorithm/rule");
    if (!reg_explicit) spec.regularizer_kind = rule_default_reg(spec.rule);
  }
  if (v.contains("eta")) spec.eta = get_number(v["eta"], "/algorithm/eta");
  if (reg_explicit) {
    if (!v["regularizer"].is_string())
      throw ConfigError("/algorithm/regularizer", "must be a string");
    spec.regularizer_kind =
        parse_reg(v["regularizer"].get<std::string>(), "/algorithm/regularizer");
  }
}

std::vector<double> get_number_array(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty())
    throw ConfigError(where, "must be a nonempty array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number())
      throw ConfigError(where + "/" + std::to_string(i), "must be a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

json matrix_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json echo_config(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = cfg.experiment.empty() ? "custom" : cfg.experiment;
  json games = json::array();
  for (const auto& g : cfg.games) {
    json jg;
    jg["label"] = g.label;
    jg["matrix"] = matrix_json(g.payoff);
    games.push_back(jg);
  }
  j["games"] = games;
  json alg;
  alg["rule"] = update_rule_name(cfg.algorithm.rule);
  alg["eta"] = cfg.algorithm.eta;
  alg["regularizer"] = reg_label(cfg.algorithm.regularizer_kind);
  j["algorithm"] = alg;
  if (!cfg.compare_rules.empty()) {
    json rules = json::array();
    for (UpdateRule r : cfg.compare_rules) rules.push_back(update_rule_name(r));
    j["compare_rules"] = rules;
  }
  json init;
  if (cfg.init.kind == InitDistribution::Kind::GaussianDual) {
    init["kind"] = "gaussian-dual";
    init["player"] = cfg.init.gauss.player;
    init["mean"] = vector_json(cfg.init.gauss.mean);
    init["cov"] = matrix_json(cfg.init.gauss.cov);
  } else {
    init["kind"] = "uniform-simplex-patch";
    init["center"] = vector_json(cfg.init.patch.center);
    init["side"] = cfg.init.patch.side;
  }
  j["init"] = init;
  j["horizon"] = cfg.horizon;
  j["sample_every"] = cfg.sample_every;
  j["ensemble_n"] = cfg.ensemble_n;
  j["seed"] = cfg.seed;
  if (!cfg.snapshot_times.empty()) j["snapshot_times"] = cfg.snapshot_times;
  if (!cfg.k_values.empty()) j["k_values"] = cfg.k_values;
  return j;
}

std::vector<GameRef> named_refs(const std::vector<std::string>& names) {
  std::vector<GameRef> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(GameRef{n, named_game(n).A});
  return out;
}

InitDistribution canonical_init() {
  InitDistribution init;
  init.kind = InitDistribution::Kind::GaussianDual;
  init.gauss.player = 1;
  init.gauss.cov = canonical_initial_covariance();
  init.gauss.mean = Vec::Zero(4);
  return init;
}

std::vector<RegistryEntry> build_registry() {
  return {
      {"figure1-dispersion",
       "AltMWU on RPS from a 400-member square patch: primal snapshots showing "
       "the cloud disperse."},
      {"continuous-singular",
       "Continuous-flow covariance on singular-Gram games: X variance grows "
       "quadratically, y stays bounded."},
      {"continuous-nonsingular",
       "Continuous-flow covariance on nonsingular-Gram games: bounded in both "
       "coordinates."},
      {"symplectic",
       "Alternating Euclidean scheme at eta 0.05: growth matches the "
       "continuous flow per game."},
      {"euler",
       "Simultaneous Euclidean scheme at eta 0.1: exponential covariance "
       "growth regardless of singularity."},
      {"entropy-gda-vs-altgda",
       "Entropy ledger contrast: linear growth under GDA, exactly flat under "
       "AltGDA."},
      {"heisenberg-altmwu",
       "AltMWU ensemble with Gaussian dual noise: uncertainty products and "
       "conjugate block determinants."},
      {"chebyshev",
       "Concentration of X around its mean under the alternating scheme, "
       "k in {2, 3, 5}."},
  };
}

}  // namespace

const std::vector<RegistryEntry>& experiment_registry() {
  static const std::vector<RegistryEntry> reg = build_registry();
  return reg;
}

bool is_registered_experiment(const std::string& name) {
  for (const auto& e : experiment_registry())
    if (e.name == name) return true;
  return false;
}

ExperimentConfig registry_config(const std::string& name) {
  ExperimentConfig cfg;
  cfg.experiment = name;
  for (const auto& e : experiment_registry())
    if (e.name == name) cfg.description = e.description;

  if (name == "figure1-dispersion") {
    cfg.games = named_refs({"RPS"});
    cfg.algorithm = {UpdateRule::AltMWU, 1.0, RegKind::NegativeEntropy};
    cfg.init.kind = InitDistribution::Kind::UniformSimplexPatch;
    cfg.init.patch.center = Vec(3);
    cfg.init.patch.center << 0.15, 0.15, 0.7;
    cfg.init.patch.side = 0.05;
    cfg.init_given = true;
    cfg.ensemble_n = 400;
    cfg.horizon = 200;
    cfg.snapshot_times = {0, 50, 80, 130, 150, 200};
    return cfg;
  }
  if (name == "continuous-singular" || name == "continuous-nonsingular") {
    cfg.games = named_refs(name == "continuous-singular"
                               ? std::vector<std::string>{"A1", "A2", "A3"}
                               : std::vector<std::string>{"A4", "A5", "A6"});
    cfg.algorithm = {UpdateRule::ContinuousFTRL, 0.05, RegKind::Euclidean};
    cfg.init = canonical_init();
    cfg.init_given = true;
    return cfg;
  }
  if (name == "symplectic") {
    cfg.games = named_refs({"B1", "B2", "B3", "B4", "B5", "B6"});
    cfg.algorithm = {UpdateRule::AltGDA, 0.05, RegKind::Euclidean};
    cfg.init = canonical_init();
    cfg.init_given = true;
    return cfg;
  }
  if (name == "euler") {
    cfg.games = named_refs({"C1", "C2"});
    cfg.algorithm = {UpdateRule::GDA, 0.1, RegKind::Euclidean};
    cfg.init = canonical_init();
    cfg.init_given = true;
    cfg.horizon = 2000;
    return cfg;
  }
  if (name == "entropy-gda-vs-altgda") {
    cfg.games = named_refs({"A1"});
    cfg.algorithm = {UpdateRule::GDA, 0.05, RegKind::Euclidean};
    cfg.compare_rules = {UpdateRule::GDA, UpdateRule::AltGDA};
    cfg.init = canonical_init();
    cfg.init_given = true;
    return cfg;
  }
  if (name == "heisenberg-altmwu") {
    cfg.games = named_refs({"RPS"});
    cfg.algorithm = {UpdateRule::AltMWU, 0.05, RegKind::NegativeEntropy};
    cfg.init.kind = InitDistribution::Kind::GaussianDual;
    cfg.init.gauss.player = 1;
    cfg.init.gauss.mean = Vec::Zero(6);
    cfg.init.gauss.cov = 0.04 * Mat::Identity(6, 6);
    cfg.init_given = true;
    cfg.ensemble_n = 100;
    cfg.horizon = 1000;
    return cfg;
  }
  if (name == "chebyshev") {
    cfg.games = named_refs({"A1"});
    cfg.algorithm = {UpdateRule::AltGDA, 0.05, RegKind::Euclidean};
    cfg.init = canonical_init();
    cfg.init_given = true;
    cfg.ensemble_n = 1000;
    cfg.sample_every = 100;
    cfg.k_values = {2, 3, 5};
    return cfg;
  }
  throw ConfigError("/experiment", "unknown experiment '" + name + "'");
}

ExperimentConfig parse_config_text(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("/", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("/", "config must be a JSON object");

  ExperimentConfig cfg;
  if (doc.contains("experiment")) {
    const json& je = doc["experiment"];
    if (!je.is_string()) throw ConfigError("/experiment", "must be a string");
    const std::string name = je.get<std::string>();
    if (!is_registered_experiment(name)) {
      std::vector<std::string> names;
      for (const auto& e : experiment_registry()) names.push_back(e.name);
      throw ConfigError("/experiment",
                        "unknown experiment '" + name + "'; valid: " + join(names, ", "));
    }
    cfg = registry_config(name);
  }

  for (const auto& [key, value] : doc.items()) {
    if (key == "experiment") {
      continue;
    } else if (key == "game") {
      cfg.games = {parse_game(value)};
    } else if (key == "algorithm") {
      parse_algorithm(value, cfg.algorithm);
    } else if (key == "init") {
      cfg.init = parse_init(value);
      cfg.init_given = true;
    } else if (key == "horizon") {
      cfg.horizon = get_count(value, "/horizon", 0);
    } else if (key == "sample_every") {
      cfg.sample_every = get_count(value, "/sample_every", 1);
    } else if (key == "ensemble_n") {
      cfg.ensemble_n = get_count(value, "/ensemble_n", 2);
    } else if (key == "seed") {
      cfg.seed = get_seed(value, "/seed");
    } else if (key == "output_dir") {
      if (!value.is_string()) throw ConfigError("/output_dir", "must be a string");
      cfg.output_dir = value.get<std::string>();
    } else if (key == "snapshot_times") {
      cfg.snapshot_times = get_number_array(value, "/snapshot_times");
    } else if (key == "k_values") {
      cfg.k_values = get_number_array(value, "/k_values");
    } else {
      throw ConfigError("/" + key, "unknown key");
    }
  }

  if (!(cfg.algorithm.eta > 0.0))
    throw ConfigError("/algorithm/eta", "must be positive");
  try {
    validate_algorithm_spec(cfg.algorithm);
  } catch (const std::exception& e) {
    throw ConfigError("/algorithm", e.what());
  }
  for (double k : cfg.k_values)
    if (!(k > 1.0)) throw ConfigError("/k_values", "entries must be > 1");
  for (std::size_t i = 0; i < cfg.snapshot_times.size(); ++i) {
    const double t = cfg.snapshot_times[i];
    if (t < 0.0 || std::abs(t - std::round(t)) > 1e-9)
      throw ConfigError("/snapshot_times/" + std::to_string(i),
                        "must be a nonnegative integer");
    if (i > 0 && t <= cfg.snapshot_times[i - 1])
      throw ConfigError("/snapshot_times/" + std::to_string(i),
                        "must be strictly increasing");
  }
  if (cfg.games.empty())
    throw ConfigError("/game", "a game is required (named, inline matrix, or random spec)");
  return cfg;
}

ExperimentConfig parse_config(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return parse_config_text(ss.str());
  }
  return parse_config_text(read_file(path));
}

void list_experiments(std::ostream& os) {
  for (const auto& e : experiment_registry()) {
    const ExperimentConfig cfg = registry_config(e.name);
    std::vector<std::string> labels;
    for (const auto& g : cfg.games) labels.push_back(g.label);
    os << e.name << "\n    " << e.description << " Games: " << join(labels, ", ")
       << ".\n";
  }
}

void describe_experiment(const std::string& name, std::ostream& os) {
  if (!is_registered_experiment(name)) {
    std::vector<std::string> names;
    for (const auto& e : experiment_registry()) names.push_back(e.name);
    throw ConfigError("/experiment",
                      "unknown experiment '" + name + "'; valid: " + join(names, ", "));
  }
  const ExperimentConfig cfg = registry_config(name);
  os << name << "\n" << cfg.description << "\n\n";
  os << echo_config(cfg).dump(2) << "\n";
}

std::string resolve_output_dir(const std::string& cli_out,
                               const ExperimentConfig& config) {
  if (!cli_out.empty()) return cli_out;
  if (!config.output_dir.empty()) return config.output_dir;
  if (const char* env = std::getenv("OUTPUT_DIR"); env != nullptr && *env != '\0')
    return env;
  return "out";
}

namespace {

struct RunOutput {
  std::vector<std::pair<std::string, std::string>> artifacts;  // relpath, bytes
  std::vector<CheckRecord> checks;
  std::vector<std::string> warnings;
  std::string section;
};

void resolve_init(ExperimentConfig& cfg) {
  if (cfg.init_given) return;
  if (cfg.algorithm.regularizer_kind == RegKind::NegativeEntropy)
    throw ConfigError("/init", "entropy-family rules need an explicit init");
  for (const auto& g : cfg.games)
    if (g.payoff.rows() != 2)
      throw ConfigError("/init",
                        "no default init for games with n1 != 2; provide one");
  cfg.init = canonical_init();
  cfg.init_given = true;
}

std::string fmt(double v) { return format_double(v); }

// CSV with the covariance-series schema. Ps holds the stacked (y; X)
// covariance of the observed player at each recorded time.
std::string covariance_csv(const std::vector<double>& ts,
                           const std::vector<const Mat*>& Ps,
                           const std::vector<double>& entropy_cum) {
  const Eigen::Index n = Ps.front()->rows() / 2;
  std::string s = "t";
  for (Eigen::Index a = 0; a < n; ++a) s += ",var_y_" + std::to_string(a + 1);
  for (Eigen::Index a = 0; a < n; ++a) s += ",var_X_" + std::to_string(a + 1);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b)
      s += ",cov_y" + std::to_string(a + 1) + "_X" + std::to_string(b + 1);
  s += ",entropy_cum";
  for (Eigen::Index a = 0; a < n; ++a)
    s += ",heisenberg_product_" + std::to_string(a + 1);
  for (Eigen::Index a = 0; a < n; ++a) s += ",block_det_" + std::to_string(a + 1);
  s += "\n";
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const Mat& P = *Ps[i];
    s += fmt(ts[i]);
    for (Eigen::Index a = 0; a < n; ++a) s += "," + fmt(P(a, a));
    for (Eigen::Index a = 0; a < n; ++a) s += "," + fmt(P(n + a, n + a));
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) s += "," + fmt(P(a, n + b));
    s += "," + fmt(entropy_cum[i]);
    for (Eigen::Index a = 0; a < n; ++a)
      s += "," + fmt(std::sqrt(std::max(P(a, a), 0.0)) *
                     std::sqrt(std::max(P(n + a, n + a), 0.0)));
    for (Eigen::Index a = 0; a < n; ++a)
      s += "," + fmt(P(a, a) * P(n + a, n + a) - P(a, n + a) * P(n + a, a));
    s += "\n";
  }
  return s;
}

struct GrowthRow {
  std::string quantity;
  GrowthVerdict verdict;
  std::string theory;  // class name or "n/a (nonlinear update)"
  bool checked = false;
  bool matched = false;
};

std::string growth_table(const std::vector<GrowthRow>& rows) {
  std::string s = "| quantity | observed | fitted | R2 | theory |\n";
  s += "| --- | --- | --- | --- | --- |\n";
  for (const auto& r : rows) {
    std::string fitted;
    switch (r.verdict.cls) {
      case GrowthClass::Quadratic:
        fitted = "loglog slope " + fmt(r.verdict.fitted);
        break;
      case GrowthClass::Exponential:
        fitted = "per-step base " + fmt(r.verdict.fitted);
        break;
      case GrowthClass::Bounded:
        fitted = "tail max/median " + fmt(r.verdict.fitted);
        break;
    }
    s += "| " + r.quantity + " | " + growth_class_name(r.verdict.cls) + " | " +
         fitted + " | " + fmt(r.verdict.r2) + " | " + r.theory + " |\n";
  }
  return s;
}

std::vector<std::pair<double, double>> scalar_series(
    const std::vector<double>& ts, const std::vector<const Mat*>& Ps,
    Eigen::Index row) {
  std::vector<std::pair<double, double>> out;
  out.reserve(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i)
    out.push_back({ts[i], (*Ps[i])(row, row)});
  return out;
}

RunOutput exact_pipeline(const ExperimentConfig& cfg, const AlgorithmSpec& spec,
                         const GameRef& gref) {
  RunOutput out;
  Game game(gref.payoff);
  const std::string tag = gref.label + " " + update_rule_name(spec.rule);
  if (spec.regularizer_kind != RegKind::Euclidean)
    throw ConfigError("/algorithm/regularizer",
                      "the exact covariance pipeline is Euclidean only");
  if (cfg.init.kind != InitDistribution::Kind::GaussianDual)
    throw ConfigError("/init", "the covariance pipeline needs a gaussian-dual init");
  if (cfg.init.gauss.player != 1)
    throw ConfigError("/init/player", "exact covariance propagation tracks player 1");
  const Mat& P0 = cfg.init.gauss.cov;
  if (P0.rows() != 2 * game.n1())
    throw ConfigError("/init/cov", "must be 2n x 2n for player 1's (y, X)");

  const MapKind kind = spec.rule == UpdateRule::ContinuousFTRL
                           ? MapKind::Continuous
                           : (spec.rule == UpdateRule::GDA ? MapKind::Euler
                                                           : MapKind::Symplectic);

  const CovarianceSeries series =
      covariance_series(game, kind, spec.eta, P0, cfg.horizon, cfg.sample_every);

  // Per-step (per unit time for the flow) entropy change of the exact map.
  double delta = 0.0;
  if (kind == MapKind::Continuous)
    delta = build_generator(game, 1).L.trace();
  else if (kind == MapKind::Euler)
    delta = entropy_delta_linear(build_euler_map(game, 1, spec.eta).M);
  else
    delta = entropy_delta_linear(build_symplectic_map(game, 1, spec.eta).M);

  const Vec d0 = symplectic_eigenvalues(P0);
  const double bound_block = d0(0) * d0(0);
  const double bound_product = d0(0) / std::sqrt(2.0);

  std::vector<double> ts, ent;
  std::vector<const Mat*> Ps;
  double min_block = std::numeric_limits<double>::infinity();
  double min_product = std::numeric_limits<double>::infinity();
  const Eigen::Index n = game.n1();
  for (const auto& s : series.samples) {
    ts.push_back(s.t);
    ent.push_back(s.t * delta);
    Ps.push_back(&s.P);
    for (Eigen::Index a = 0; a < n; ++a) {
      min_block = std::min(min_block, s.P(a, a) * s.P(n + a, n + a) -
                                          s.P(a, n + a) * s.P(n + a, a));
      min_product =
          std::min(min_product, std::sqrt(std::max(s.P(a, a), 0.0) *
                                          std::max(s.P(n + a, n + a), 0.0)));
    }
  }

  const std::string csv_name = gref.label + "_" + rule_file_tag(spec.rule) + ".csv";
  out.artifacts.push_back({csv_name, covariance_csv(ts, Ps, ent)});

  if (series.truncated)
    out.warnings.push_back(tag + ": series truncated at t = " +
                           fmt(series.truncated_at) +
                           " (covariance neared the double range; expected for "
                           "the explicit scheme)");

  out.checks.push_back({"heisenberg-block-floor " + tag,
                        min_block >= bound_block - 1e-8,
                        "min block det " + fmt(min_block) + " vs floor " +
                            fmt(bound_block)});

  const GramInfo gi = gram_singularity(game, 1);
  std::vector<GrowthRow> rows;
  std::string growth_note;
  for (Eigen::Index a = 0; a < n && growth_note.empty(); ++a) {
    for (bool x_side : {false, true}) {
      GrowthRow row;
      row.quantity = std::string("Var(") + (x_side ? "X_" : "y_") +
                     std::to_string(a + 1) + ")";
      try {
        row.verdict = classify_growth(
            scalar_series(ts, Ps, x_side ? n + a : a), gi.gamma, spec.eta);
      } catch (const std::invalid_argument& e) {
        growth_note = e.what();
        break;
      }
      const GrowthClass theory = theoretical_growth(kind, gi.singular, x_side);
      row.theory = growth_class_name(theory);
      row.checked = true;
      row.matched = row.verdict.cls == theory;
      out.checks.push_back(
          {"growth-theory " + tag + " " + row.quantity, row.matched,
           std::string("observed ") + growth_class_name(row.verdict.cls) +
               ", predicted " + row.theory});
      if (kind == MapKind::Euler && row.verdict.cls == GrowthClass::Exponential) {
        const double ref = 1.0 + gi.gamma * spec.eta * spec.eta;
        out.checks.push_back(
            {"euler-base " + tag + " " + row.quantity,
             std::abs(row.verdict.fitted - ref) <= 0.05 * ref,
             "fitted " + fmt(row.verdict.fitted) + " vs 1 + gamma eta^2 = " +
                 fmt(ref)});
      }
      rows.push_back(std::move(row));
    }
  }

  // Entropy ledger checks against the closed forms.
  const double cum_final = ent.empty() ? 0.0 : ent.back();
  if (kind == MapKind::Symplectic || kind == MapKind::Continuous) {
    out.checks.push_back({"entropy-flat " + tag, std::abs(cum_final) <= 1e-10,
                          "cumulative " + fmt(cum_final) + " at t = " +
                              fmt(ts.back())});
  } else {
    const Mat G = game.gram(1);
    const double ref =
        std::log((Mat::Identity(n, n) + spec.eta * spec.eta * G).determinant());
    const double rel = std::abs(delta - ref) / std::max(1e-300, std::abs(ref));
    out.checks.push_back({"entropy-linear-slope " + tag, rel <= 1e-9,
                          "per-step " + fmt(delta) + " vs ln det(I + eta^2 G) = " +
                              fmt(ref)});
  }

  if (spec.rule == UpdateRule::GDA && !simultaneous_step_condition_ok(game, spec.eta))
    out.warnings.push_back(tag +
                           ": eta exceeds min{1, 1/||A||^2}; the volume-growth "
                           "hypothesis does not cover this step size");

  // Concentration stage: empirical ensemble against the exact envelope.
  std::string cheb_md;
  if (!cfg.k_values.empty()) {
    if (kind != MapKind::Symplectic) {
      out.warnings.push_back(tag +
                             ": concentration stage skipped (needs the "
                             "alternating symplectic scheme)");
    } else {
      if (cfg.ensemble_n < 100)
        throw ConfigError("/ensemble_n",
                          "the concentration check needs at least 100 members");
      const double c = calibrate_chebyshev_c(series);
      Ensemble ens = sample_ensemble(game, spec, cfg.init, cfg.ensemble_n, cfg.seed);
      const EnsembleSeries es =
          evolve_ensemble_series(ens, cfg.horizon, cfg.sample_every);
      // The mean propagates through the same linear map; zero stays zero.
      std::vector<Vec> mu;
      mu.reserve(es.times.size());
      const Mat M = build_symplectic_map(game, 1, spec.eta).M;
      Vec v = cfg.init.gauss.mean;
      mu.push_back(v);
      for (long step = 1; step <= cfg.horizon; ++step) {
        v = M * v;
        if (step % cfg.sample_every == 0) mu.push_back(v);
      }
      std::string cheb_csv = "t,k,fraction_X,fraction_y,bound_X,bound_y\n";
      cheb_md = "Concentration (calibrated c = " + fmt(c) + "):\n\n";
      cheb_md += "| k | max X fraction | bound 1/k^2 | max y fraction | reference c/k^2 |\n";
      cheb_md += "| --- | --- | --- | --- | --- |\n";
      for (double k : cfg.k_values) {
        const ChebyshevReport rep = chebyshev_check(es, k, c, &mu);
        for (const auto& r : rep.per_t)
          cheb_csv += fmt(r[0]) + "," + fmt(k) + "," + fmt(r[1]) + "," + fmt(r[2]) +
                      "," + fmt(rep.bound_X) + "," +
                      fmt(std::min(1.0, rep.bound_y)) + "\n";
        out.checks.push_back(
            {"chebyshev-x k=" + fmt(k) + " " + tag,
             rep.max_fraction_X <= rep.bound_X,
             "max fraction " + fmt(rep.max_fraction_X) + " vs 1/k^2 = " +
                 fmt(rep.bound_X)});
        cheb_md += "| " + fmt(k) + " | " + fmt(rep.max_fraction_X) + " | " +
                   fmt(rep.bound_X) + " | " + fmt(rep.max_fraction_y) + " | " +
                   fmt(std::min(1.0, rep.bound_y)) + " |\n";
      }
      out.artifacts.push_back({"chebyshev_" + csv_name, cheb_csv});
    }
  }

  if (!growth_note.empty()) {
    rows.clear();
    out.warnings.push_back(tag + ": growth not classified: " + growth_note);
  }

  std::string md = "## " + tag + "\n\n";
  md += "Gram matrix: ";
  md += gi.singular ? "singular" : "nonsingular";
  md += " (gamma = " + fmt(gi.gamma) + ", min eigenvalue = " + fmt(gi.min_eig) + ").\n\n";
  if (!rows.empty()) md += growth_table(rows) + "\n";
  md += "Entropy ledger: per-step change " + fmt(delta) + ", cumulative " +
        fmt(cum_final) + " at t = " + fmt(ts.back()) + ".\n\n";
  md += "Uncertainty floors: min block det " + fmt(min_block) + " vs floor " +
        fmt(bound_block) + "; min product " + fmt(min_product) +
        " vs reference " + fmt(bound_product) + ".\n\n";
  if (!cheb_md.empty()) md += cheb_md + "\n";
  md += "Data: " + csv_name + "\n";
  out.section = md;
  return out;
}

RunOutput ensemble_pipeline(const ExperimentConfig& cfg, const AlgorithmSpec& spec,
                            const GameRef& gref) {
  RunOutput out;
  Game game(gref.payoff);
  const std::string tag = gref.label + " " + update_rule_name(spec.rule);
  Ensemble ens = sample_ensemble(game, spec, cfg.init, cfg.ensemble_n, cfg.seed);
  const bool simultaneous = !rule_is_alternating(spec.rule);
  const Regularizer reg1{spec.regularizer_kind, game.n1()};
  const Regularizer reg2{spec.regularizer_kind, game.n2()};

  // Manual evolution so the simultaneous entropy increment can be measured
  // at every step; the alternating map is volume preserving exactly.
  EnsembleSeries es;
  std::vector<double> ent;
  double cum = 0.0;
  double min_det = std::numeric_limits<double>::infinity();
  double min_increment = std::numeric_limits<double>::infinity();
  auto record = [&](double t) {
    std::vector<Vec> zs;
    zs.reserve(ens.members.size());
    for (const auto& m : ens.members) {
      const DualState& s = ens.observed_player == 1 ? m.s1 : m.s2;
      Vec z(s.y.size() + s.X.size());
      z << s.y, s.X;
      zs.push_back(std::move(z));
    }
    es.times.push_back(t);
    es.mean.push_back(sample_mean(zs));
    es.cov.push_back(sample_covariance(zs));
    es.states.push_back(std::move(zs));
    ent.push_back(cum);
  };
  record(0.0);
  for (long step = 1; step <= cfg.horizon; ++step) {
    if (simultaneous) {
      const MwuEntropyDelta d =
          entropy_delta_mwu_step(game, reg1, reg2, ens, spec.eta);
      cum += d.mean_log_det;
      min_det = std::min(min_det, d.min_det);
      min_increment = std::min(min_increment, d.mean_log_det);
    }
    for (auto& m : ens.members) {
      const auto next = rule_is_alternating(spec.rule)
                            ? step_dual_symplectic(spec, game, m.ctx, m.s1, m.s2)
                            : step_dual_euler(spec, game, m.ctx, m.s1, m.s2);
      m.s1 = next.first;
      m.s2 = next.second;
    }
    if (step % cfg.sample_every == 0) record(static_cast<double>(step));
  }

  const Eigen::Index n = es.cov.front().rows() / 2;
  std::vector<const Mat*> Ps;
  Ps.reserve(es.cov.size());
  for (const Mat& P : es.cov) Ps.push_back(&P);

  const std::string csv_name = gref.label + "_" + rule_file_tag(spec.rule) + ".csv";
  out.artifacts.push_back({csv_name, covariance_csv(es.times, Ps, ent)});

  // Reference floors from the initial sample covariance; reported, not
  // asserted, since the propagation is nonlinear.
  const Vec d0 = symplectic_eigenvalues(es.cov.front());
  const double dmin = std::max(d0(0), 0.0);
  const double bound_block = dmin * dmin;
  const double bound_product = dmin / std::sqrt(2.0);
  double min_block = std::numeric_limits<double>::infinity();
  double min_product = std::numeric_limits<double>::infinity();
  std::vector<double> dx1, dy1;
  for (const Mat& P : es.cov) {
    for (Eigen::Index a = 0; a < n; ++a) {
      min_block = std::min(min_block, P(a, a) * P(n + a, n + a) -
                                          P(a, n + a) * P(n + a, a));
      min_product = std::min(min_product, std::sqrt(std::max(P(a, a), 0.0) *
                                                    std::max(P(n + a, n + a), 0.0)));
    }
    dx1.push_back(std::sqrt(std::max(P(n, n), 0.0)));
    dy1.push_back(std::sqrt(std::max(P(0, 0), 0.0)));
  }
  out.checks.push_back({"uncertainty-product-positive " + tag, min_product > 0.0,
                        "min over t and coordinates " + fmt(min_product)});
  if (simultaneous) {
    out.checks.push_back({"entropy-unit-floor " + tag, min_det >= 1.0 - 1e-8,
                          "min sample det " + fmt(min_det)});
    out.checks.push_back({"entropy-increment-positive " + tag, min_increment > 0.0,
                          "min per-step increment " + fmt(min_increment)});
  }
  if (simultaneous && !simultaneous_step_condition_ok(game, spec.eta))
    out.warnings.push_back(tag +
                           ": eta exceeds min{1, 1/||A||^2}; the volume-growth "
                           "hypothesis does not cover this step size");

  // Anti-phase diagnostic on the first coordinate's deviation curves.
  double corr = 0.0;
  {
    std::vector<double> ix, iy;
    for (std::size_t i = 0; i + 1 < dx1.size(); ++i) {
      ix.push_back(dx1[i + 1] - dx1[i]);
      iy.push_back(dy1[i + 1] - dy1[i]);
    }
    if (ix.size() >= 3) {
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < ix.size(); ++i) {
        mx += ix[i];
        my += iy[i];
      }
      mx /= static_cast<double>(ix.size());
      my /= static_cast<double>(ix.size());
      double sxx = 0, syy = 0, sxy = 0;
      for (std::size_t i = 0; i < ix.size(); ++i) {
        sxx += (ix[i] - mx) * (ix[i] - mx);
        syy += (iy[i] - my) * (iy[i] - my);
        sxy += (ix[i] - mx) * (iy[i] - my);
      }
      if (sxx > 0 && syy > 0) corr = sxy / std::sqrt(sxx * syy);
    }
  }

  std::vector<GrowthRow> rows;
  std::string growth_note;
  for (Eigen::Index a = 0; a < n && growth_note.empty(); ++a) {
    for (bool x_side : {false, true}) {
      GrowthRow row;
      row.quantity = std::string("Var(") + (x_side ? "X_" : "y_") +
                     std::to_string(a + 1) + ")";
      try {
        row.verdict = classify_growth(
            scalar_series(es.times, Ps, x_side ? n + a : a), 0.0, spec.eta);
      } catch (const std::invalid_argument& e) {
        growth_note = std::string("growth not classified: ") + e.what();
        break;
      }
      row.theory = "n/a (nonlinear update)";
      rows.push_back(std::move(row));
    }
  }

  std::string md = "## " + tag + "\n\n";
  md += "Ensemble of " + std::to_string(cfg.ensemble_n) +
        " members, observed player " + std::to_string(ens.observed_player) + ".\n\n";
  if (!rows.empty()) md += growth_table(rows) + "\n";
  if (!growth_note.empty()) md += growth_note + "\n\n";
  if (simultaneous)
    md += "Entropy ledger: cumulative " + fmt(cum) + " over " +
          std::to_string(cfg.horizon) + " steps; min sample det " + fmt(min_det) +
          ".\n\n";
  else
    md += "Entropy ledger: the alternating update is volume preserving, so the "
          "per-step change is identically zero.\n\n";
  md += "Uncertainty floors (sampled, reference only): min block det " +
        fmt(min_block) + " vs initial floor " + fmt(bound_block) +
        "; min product " + fmt(min_product) + " vs reference " +
        fmt(bound_product) + ".\n\n";
  md += "Deviation-increment correlation of dX_1 against dy_1: " + fmt(corr) +
        " (negative values mean the curves move in anti-phase).\n\n";
  md += "Data: " + csv_name + "\n";
  out.section = md;
  return out;
}

RunOutput dispersion_pipeline(const ExperimentConfig& cfg, const AlgorithmSpec& spec,
                              const GameRef& gref) {
  RunOutput out;
  Game game(gref.payoff);
  const std::string tag = gref.label + " " + update_rule_name(spec.rule);
  if (cfg.init.kind != InitDistribution::Kind::UniformSimplexPatch)
    throw ConfigError("/init", "dispersion runs need a uniform-simplex-patch init");
  const DispersionResult dr = figure1_dispersion(
      game, spec, cfg.init.patch, cfg.snapshot_times, cfg.ensemble_n, cfg.seed);

  const Eigen::Index n = game.n1();
  std::string points = "t,member";
  for (Eigen::Index a = 0; a < n; ++a) points += ",x_" + std::to_string(a + 1);
  points += "\n";
  std::string summary = "t";
  for (Eigen::Index a = 0; a < n; ++a) summary += ",mean_" + std::to_string(a + 1);
  for (Eigen::Index a = 0; a < n; ++a) summary += ",var_" + std::to_string(a + 1);
  summary += "\n";
  for (const auto& snap : dr.snapshots) {
    for (Eigen::Index i = 0; i < snap.points.rows(); ++i) {
      points += fmt(snap.t) + "," + std::to_string(i);
      for (Eigen::Index a = 0; a < n; ++a) points += "," + fmt(snap.points(i, a));
      points += "\n";
    }
    summary += fmt(snap.t);
    for (Eigen::Index a = 0; a < n; ++a) summary += "," + fmt(snap.mean(a));
    for (Eigen::Index a = 0; a < n; ++a) summary += "," + fmt(snap.var(a));
    summary += "\n";
  }
  out.artifacts.push_back({"dispersion_points.csv", points});
  out.artifacts.push_back({"dispersion_summary.csv", summary});

  std::string md = "## " + tag + " dispersion\n\n";
  if (!dr.plottable)
    out.warnings.push_back(tag + ": not plottable as barycentric coordinates");
  md += "| t | Var(x_1) | ratio to t = 0 |\n| --- | --- | --- |\n";
  const bool have_t0 = dr.snapshots.front().t == 0.0;
  const double var0 = dr.snapshots.front().var(0);
  for (const auto& snap : dr.snapshots) {
    md += "| " + fmt(snap.t) + " | " + fmt(snap.var(0)) + " | " +
          (have_t0 && var0 > 0 ? fmt(snap.var(0) / var0) : std::string("n/a")) +
          " |\n";
  }
  md += "\nData: dispersion_points.csv, dispersion_summary.csv\n";

  if (have_t0) {
    const double oracle = cfg.init.patch.side * cfg.init.patch.side / 12.0;
    out.checks.push_back({"patch-variance-oracle " + tag,
                          std::abs(var0 - oracle) <= 0.2 * oracle,
                          "Var(x_1) at t = 0 is " + fmt(var0) +
                              " vs side^2/12 = " + fmt(oracle)});
    if (dr.snapshots.back().t >= 150.0 && var0 > 0) {
      double ratio = 0.0;
      for (const auto& snap : dr.snapshots)
        ratio = std::max(ratio, snap.var(0) / var0);
      out.checks.push_back({"dispersion-growth " + tag, ratio >= 100.0,
                            "max variance ratio " + fmt(ratio) +
                                " (floor 100)"});
    } else {
      out.warnings.push_back(tag +
                             ": horizon too short to assess dispersion growth");
    }
  }
  out.section = md;
  return out;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config,
                                const std::string& out_dir) {
  ExperimentConfig cfg = config;
  resolve_init(cfg);

  ExperimentReport rep;
  rep.config = cfg;
  rep.output_dir = out_dir;

  std::vector<std::pair<std::string, std::string>> artifacts;
  std::vector<std::string> sections;

  const std::vector<UpdateRule> rules =
      cfg.compare_rules.empty() ? std::vector<UpdateRule>{cfg.algorithm.rule}
                                : cfg.compare_rules;

  auto absorb = [&](RunOutput&& ro) {
    for (auto& a : ro.artifacts) artifacts.push_back(std::move(a));
    for (auto& c : ro.checks) rep.checks.push_back(std::move(c));
    for (auto& w : ro.warnings) rep.warnings.push_back(std::move(w));
    sections.push_back(std::move(ro.section));
  };

  for (const GameRef& g : cfg.games) {
    for (UpdateRule rule : rules) {
      AlgorithmSpec spec = cfg.algorithm;
      if (rule != cfg.algorithm.rule) {
        spec.rule = rule;
        spec.regularizer_kind = rule_default_reg(rule);
      }
      const std::string stage = g.label + "/" + update_rule_name(spec.rule);
      try {
        if (!cfg.snapshot_times.empty())
          absorb(dispersion_pipeline(cfg, spec, g));
        else if (spec.regularizer_kind == RegKind::NegativeEntropy)
          absorb(ensemble_pipeline(cfg, spec, g));
        else
          absorb(exact_pipeline(cfg, spec, g));
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception& e) {
        throw std::runtime_error("stage " + stage + " failed: " + e.what());
      }
    }
  }

  for (const auto& c : rep.checks)
    if (!c.passed) rep.all_passed = false;

  const std::string label = cfg.experiment.empty() ? "custom" : cfg.experiment;

  // Report body; its file table covers the data artifacts, the manifest is
  // the authority for every emitted file including the report itself.
  std::string md = "# Report: " + label + "\n\n";
  if (!cfg.description.empty()) md += cfg.description + "\n\n";
  md += "## Configuration\n\n```json\n" + echo_config(cfg).dump(2) + "\n```\n\n";
  for (const auto& s : sections) md += s + "\n";
  md += "## Checks\n\n| check | status | detail |\n| --- | --- | --- |\n";
  for (const auto& c : rep.checks)
    md += "| " + c.name + " | " + (c.passed ? "pass" : "FAIL") + " | " + c.detail +
          " |\n";
  md += "\n## Warnings\n\n";
  if (rep.warnings.empty())
    md += "none\n";
  else
    for (const auto& w : rep.warnings) md += "- " + w + "\n";
  md += "\n## Files\n\n| path | bytes | sha256 |\n| --- | --- | --- |\n";
  for (const auto& [path, bytes] : artifacts)
    md += "| " + path + " | " + std::to_string(bytes.size()) + " | " +
          sha256_hex(bytes) + " |\n";
  md += "\nManifest: manifest.json\n";
  artifacts.push_back({"report.md", md});

  for (const auto& [path, bytes] : artifacts)
    rep.files.push_back(FileRecord{path, bytes.size(), sha256_hex(bytes)});

  json manifest;
  manifest["experiment"] = label;
  manifest["seed"] = cfg.seed;
  manifest["config"] = echo_config(cfg);
  json checks = json::array();
  for (const auto& c : rep.checks) {
    json jc;
    jc["name"] = c.name;
    jc["passed"] = c.passed;
    jc["detail"] = c.detail;
    checks.push_back(jc);
  }
  manifest["checks"] = checks;
  manifest["warnings"] = rep.warnings;
  json files = json::array();
  for (const auto& f : rep.files) {
    json jf;
    jf["path"] = f.path;
    jf["bytes"] = f.bytes;
    jf["sha256"] = f.sha256;
    files.push_back(jf);
  }
  manifest["files"] = files;

  for (const auto& [path, bytes] : artifacts)
    write_file_atomic(out_dir + "/" + path, bytes);
  write_file_atomic(out_dir + "/manifest.json", manifest.dump(2) + "\n");
  return rep;
}

}  // namespace ftrluq
