#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include "loggas/cli.hpp"
#include "loggas/errors.hpp"

namespace loggas::cli {

namespace {

using Schema = std::vector<std::pair<std::string, Value>>;

RealList dyadic_eps() {
  RealList e;
  for (int j = 4; j <= 12; ++j) e.push_back(std::ldexp(1.0, -j));
  return e;
}

const std::map<std::string, Schema>& schemas() {
  static const std::map<std::string, Schema> s = {
      {"kernel-verify",
       {{"check", std::string("diagonal")},
        {"epsilons", dyadic_eps()},
        {"p", std::int64_t{4}},
        {"quadrature", std::int64_t{0}},
        {"sup_grid", std::int64_t{32}},
        {"grid_resolution", std::int64_t{64}},
        {"points", std::int64_t{64}},
        {"ratio_max", 3.0},
        {"kappa_lo", 0.5},
        {"kappa_hi", 1.5},
        {"floor", -1e-6}}},
      {"zsweep",
       {{"n_values", IntList{2, 4, 8, 16, 32, 64, 128, 256}},
        {"betas", RealList{1.0, 2.0}},
        {"eps", 0.0},
        {"samples", std::int64_t{100000}},
        {"block", std::int64_t{1024}},
        {"bootstrap", std::int64_t{200}},
        {"min_ess", 50.0}}},
      {"moments-verify",
       {{"cases", PairList{{2, 1}, {2, 2}, {3, 2}, {3, 3}, {4, 2}}},
        {"atoms", std::int64_t{4}},
        {"samples", std::int64_t{100000}},
        {"max_se", 4.0}}},
      {"sde-run",
       {{"n", std::int64_t{64}},
        {"t_end", 0.1},
        {"dt", 1e-3},
        {"eps_reg", 1e-3},
        {"force_cap", 0.0},
        {"noise", 1.0},
        {"snapshot_every", std::int64_t{10}},
        {"dump", false}}},
      {"mv-solve",
       {{"cells", std::int64_t{64}},
        {"t_end", 0.1},
        {"dt", 1e-4},
        {"eps", 0.0},
        {"snapshots", RealList{0.05, 0.1}},
        {"max_halvings", std::int64_t{10}}}},
      {"mfl-sweep",
       {{"n_values", IntList{8, 16, 32, 64, 128}},
        {"t_grid", RealList{0.1, 0.5}},
        {"replicas", std::int64_t{64}},
        {"dt", 1e-3},
        {"eps_reg", 1e-3},
        {"pde_dt", 1e-4},
        {"cells", std::int64_t{32}},
        {"snapshot_spacing", 0.01},
        {"slope_lo", -1.3},
        {"slope_hi", -0.7}}},
      {"gibbs",
       {{"n_values", IntList{4, 8, 16, 32, 64, 128}},
        {"burn_in", std::int64_t{2000}},
        {"chain_samples", std::int64_t{20000}},
        {"is_samples", std::int64_t{100000}},
        {"eps", 0.0},
        {"minimizer_cells", std::int64_t{64}},
        {"ti_n_values", IntList{16}},
        {"slope_lo", -1.3},
        {"slope_hi", -0.7}}},
  };
  return s;
}

[[noreturn]] void fail_at(const YAML::Node& node, const std::string& what) {
  const auto m = node.Mark();
  if (m.is_null()) throw ConfigError(what);
  throw ConfigError(what, m.line + 1, m.column + 1);
}

template <class T>
T scalar(const YAML::Node& node, const std::string& key) {
  if (!node.IsScalar()) fail_at(node, "'" + key + "' must be a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail_at(node, "'" + key + "' has the wrong type");
  }
}

template <class T>
std::vector<T> sequence(const YAML::Node& node, const std::string& key) {
  if (!node.IsSequence()) fail_at(node, "'" + key + "' must be a list");
  std::vector<T> out;
  for (const auto& item : node) out.push_back(scalar<T>(item, key));
  return out;
}

void check_keys(const YAML::Node& map, const std::vector<std::string>& allowed, const std::string& where) {
  if (!map.IsMap()) fail_at(map, where + " must be a mapping");
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      fail_at(kv.first, "unknown key '" + key + "' in " + where);
  }
}

Value parse_value(const YAML::Node& node, const std::string& key, const Value& like) {
  return std::visit(
      [&](const auto& d) -> Value {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, bool> || std::is_same_v<T, std::int64_t> || std::is_same_v<T, double> ||
                      std::is_same_v<T, std::string>) {
          return scalar<T>(node, key);
        } else if constexpr (std::is_same_v<T, IntList>) {
          return sequence<std::int64_t>(node, key);
        } else if constexpr (std::is_same_v<T, RealList>) {
          return sequence<double>(node, key);
        } else {
          if (!node.IsSequence()) fail_at(node, "'" + key + "' must be a list of pairs");
          PairList out;
          for (const auto& item : node) {
            const auto v = sequence<std::int64_t>(item, key);
            if (v.size() != 2) fail_at(item, "'" + key + "' entries must be pairs");
            out.push_back({v[0], v[1]});
          }
          return out;
        }
      },
      like);
}

void emit_value(YAML::Emitter& e, const Value& v) {
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, PairList>) {
          e << YAML::Flow << YAML::BeginSeq;
          for (const auto& p : x) e << YAML::Flow << YAML::BeginSeq << p[0] << p[1] << YAML::EndSeq;
          e << YAML::EndSeq;
        } else if constexpr (std::is_same_v<T, IntList> || std::is_same_v<T, RealList>) {
          e << YAML::Flow << YAML::BeginSeq;
          for (const auto& y : x) e << y;
          e << YAML::EndSeq;
        } else {
          e << x;
        }
      },
      v);
}

template <class T>
const T& get(const std::map<std::string, Value>& params, const std::string& key) {
  auto it = params.find(key);
  require(it != params.end(), ErrorKind::configuration, "missing parameter '" + key + "'");
  const T* v = std::get_if<T>(&it->second);
  require(v != nullptr, ErrorKind::configuration, "parameter '" + key + "' has another type");
  return *v;
}

std::string sha256_hex(const std::string& text) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

void validate(const ExperimentConfig& c, const YAML::Node& root) {
  try {
    (void)c.make_kernel();
    if (c.measure.kind != "atomic" || !c.measure.atoms.empty()) (void)c.make_measure();
    (void)c.make_potential();
  } catch (const Error& e) {
    fail_at(root, e.what());
  }
  if (c.workers < 1) fail_at(root["workers"], "workers must be >= 1");
}

}  // namespace

ConfigError::ConfigError(const std::string& what, int line, int column)
    : std::runtime_error(what), line_(line), column_(column) {}

const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k = {"kernel-verify", "zsweep",    "moments-verify", "sde-run",
                                             "mv-solve",      "mfl-sweep", "gibbs"};
  return k;
}

bool ExperimentConfig::flag(const std::string& key) const { return get<bool>(params, key); }
std::int64_t ExperimentConfig::integer(const std::string& key) const { return get<std::int64_t>(params, key); }
double ExperimentConfig::real(const std::string& key) const { return get<double>(params, key); }
const std::string& ExperimentConfig::text(const std::string& key) const { return get<std::string>(params, key); }
const IntList& ExperimentConfig::integers(const std::string& key) const { return get<IntList>(params, key); }
const RealList& ExperimentConfig::reals(const std::string& key) const { return get<RealList>(params, key); }
const PairList& ExperimentConfig::pairs(const std::string& key) const { return get<PairList>(params, key); }

Kernel ExperimentConfig::make_kernel() const {
  const Family f = family_from_string(kernel.family);
  require(kernel.dim >= 1 && kernel.dim <= 3, ErrorKind::configuration, "kernel dim must be 1, 2 or 3");
  switch (f) {
    case Family::torus_log: return Kernel::torus_log(kernel.dim, kernel.cutoff);
    case Family::free_log: return Kernel::free_log(kernel.dim, kernel.radius);
    case Family::zero: break;
  }
  require(kernel.domain == "torus" || kernel.domain == "free_space", ErrorKind::configuration,
          "kernel domain must be torus or free_space");
  return Kernel::zero(kernel.domain == "torus" ? Domain::torus(kernel.dim)
                                               : Domain::free_space(kernel.dim, kernel.radius));
}

BaseMeasure ExperimentConfig::make_measure() const {
  const Domain dom = make_kernel().domain();
  const auto& m = measure;
  if (m.kind == "uniform") return BaseMeasure::uniform(dom);
  if (m.kind == "single-mode") return BaseMeasure::single_mode(dom, m.cells, m.amplitude);
  if (m.kind == "two-bump") return BaseMeasure::two_bump(dom, m.cells, m.width);
  if (m.kind == "grid") return BaseMeasure::grid(dom, m.cells, m.density);
  if (m.kind == "atomic") {
    std::vector<Point> pts;
    for (const auto& a : m.atoms) {
      require(static_cast<int>(a.size()) == dom.d, ErrorKind::configuration, "atom coordinates must match dim");
      Point p{0.0, 0.0, 0.0};
      for (int c = 0; c < dom.d; ++c) p[static_cast<std::size_t>(c)] = a[static_cast<std::size_t>(c)];
      pts.push_back(p);
    }
    return BaseMeasure::atomic(dom, pts, m.weights);
  }
  raise(ErrorKind::configuration, "unknown measure kind '" + m.kind + "'");
}

Potential ExperimentConfig::make_potential() const {
  const auto& p = potential;
  if (p.kind == "zero") return Potential::zero();
  if (p.kind == "quadratic") return Potential::quadratic(p.stiffness);
  if (p.kind == "cosine") {
    require(p.mode.size() == 3, ErrorKind::configuration, "potential mode needs three entries");
    return Potential::cosine(p.amplitude, {static_cast<int>(p.mode[0]), static_cast<int>(p.mode[1]),
                                           static_cast<int>(p.mode[2])});
  }
  raise(ErrorKind::configuration, "unknown potential kind '" + p.kind + "'");
}

ExperimentConfig parse_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(std::string("YAML syntax: ") + e.msg, e.mark.line + 1, e.mark.column + 1);
  }
  if (!root.IsMap()) throw ConfigError("config must be a mapping", 1, 1);
  check_keys(root, {"kind", "seed", "workers", "output", "kernel", "measure", "potential", "params"}, "config");

  ExperimentConfig c;
  if (!root["kind"]) throw ConfigError("missing 'kind'", 1, 1);
  c.kind = scalar<std::string>(root["kind"], "kind");
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end())
    fail_at(root["kind"], "unknown experiment kind '" + c.kind + "'");
  if (root["seed"]) c.seed = scalar<std::uint64_t>(root["seed"], "seed");
  if (root["workers"]) c.workers = scalar<int>(root["workers"], "workers");
  if (root["output"]) c.output = scalar<std::string>(root["output"], "output");

  if (const auto k = root["kernel"]) {
    check_keys(k, {"family", "domain", "dim", "cutoff", "radius"}, "kernel");
    if (k["family"]) c.kernel.family = scalar<std::string>(k["family"], "family");
    if (k["domain"]) c.kernel.domain = scalar<std::string>(k["domain"], "domain");
    if (k["dim"]) c.kernel.dim = scalar<int>(k["dim"], "dim");
    if (k["cutoff"]) c.kernel.cutoff = scalar<int>(k["cutoff"], "cutoff");
    if (k["radius"]) c.kernel.radius = scalar<double>(k["radius"], "radius");
  }
  if (const auto m = root["measure"]) {
    check_keys(m, {"kind", "cells", "amplitude", "width", "density", "atoms", "weights"}, "measure");
    if (m["kind"]) c.measure.kind = scalar<std::string>(m["kind"], "kind");
    if (m["cells"]) c.measure.cells = scalar<int>(m["cells"], "cells");
    if (m["amplitude"]) c.measure.amplitude = scalar<double>(m["amplitude"], "amplitude");
    if (m["width"]) c.measure.width = scalar<double>(m["width"], "width");
    if (m["density"]) c.measure.density = sequence<double>(m["density"], "density");
    if (m["weights"]) c.measure.weights = sequence<double>(m["weights"], "weights");
    if (const auto a = m["atoms"]) {
      if (!a.IsSequence()) fail_at(a, "'atoms' must be a list");
      for (const auto& item : a) c.measure.atoms.push_back(sequence<double>(item, "atoms"));
    }
  }
  if (const auto p = root["potential"]) {
    check_keys(p, {"kind", "amplitude", "mode", "stiffness"}, "potential");
    if (p["kind"]) c.potential.kind = scalar<std::string>(p["kind"], "kind");
    if (p["amplitude"]) c.potential.amplitude = scalar<double>(p["amplitude"], "amplitude");
    if (p["mode"]) c.potential.mode = sequence<std::int64_t>(p["mode"], "mode");
    if (p["stiffness"]) c.potential.stiffness = scalar<double>(p["stiffness"], "stiffness");
  }

  const Schema& schema = schemas().at(c.kind);
  for (const auto& [key, def] : schema) c.params[key] = def;
  if (const auto p = root["params"]) {
    std::vector<std::string> allowed;
    for (const auto& kv : schema) allowed.push_back(kv.first);
    check_keys(p, allowed, "params of " + c.kind);
    for (const auto& kv : p) {
      const auto key = kv.first.as<std::string>();
      c.params[key] = parse_value(kv.second, key, c.params[key]);
    }
  }
  validate(c, root);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_yaml(const ExperimentConfig& c) {
  YAML::Emitter e;
  e.SetDoublePrecision(17);
  e << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << c.kind;
  e << YAML::Key << "seed" << YAML::Value << c.seed;
  e << YAML::Key << "workers" << YAML::Value << c.workers;
  e << YAML::Key << "output" << YAML::Value << YAML::DoubleQuoted << c.output;
  e << YAML::Key << "kernel" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "family" << YAML::Value << c.kernel.family;
  e << YAML::Key << "domain" << YAML::Value << c.kernel.domain;
  e << YAML::Key << "dim" << YAML::Value << c.kernel.dim;
  e << YAML::Key << "cutoff" << YAML::Value << c.kernel.cutoff;
  e << YAML::Key << "radius" << YAML::Value << c.kernel.radius;
  e << YAML::EndMap;
  e << YAML::Key << "measure" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << c.measure.kind;
  e << YAML::Key << "cells" << YAML::Value << c.measure.cells;
  e << YAML::Key << "amplitude" << YAML::Value << c.measure.amplitude;
  e << YAML::Key << "width" << YAML::Value << c.measure.width;
  e << YAML::Key << "density" << YAML::Value << YAML::Flow << c.measure.density;
  e << YAML::Key << "atoms" << YAML::Value << YAML::BeginSeq;
  for (const auto& a : c.measure.atoms) e << YAML::Flow << a;
  e << YAML::EndSeq;
  e << YAML::Key << "weights" << YAML::Value << YAML::Flow << c.measure.weights;
  e << YAML::EndMap;
  e << YAML::Key << "potential" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << c.potential.kind;
  e << YAML::Key << "amplitude" << YAML::Value << c.potential.amplitude;
  e << YAML::Key << "mode" << YAML::Value << YAML::Flow << c.potential.mode;
  e << YAML::Key << "stiffness" << YAML::Value << c.potential.stiffness;
  e << YAML::EndMap;
  e << YAML::Key << "params" << YAML::Value << YAML::BeginMap;
  for (const auto& [key, def] : schemas().at(c.kind)) {
    e << YAML::Key << key << YAML::Value;
    emit_value(e, c.params.at(key));
  }
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

std::string config_hash(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.output.clear();
  return sha256_hex(to_yaml(c));
}

std::string kernel_hash(const ExperimentConfig& config) {
  std::ostringstream os;
  os.precision(17);
  os << config.kernel.family << '|' << config.kernel.domain << '|' << config.kernel.dim << '|' << config.kernel.cutoff << '|' << config.kernel.radius;
  return sha256_hex(os.str());
}

std::string version_string() { return std::string("loggas ") + LOGGAS_VERSION + " (" + LOGGAS_GIT_SHA + ")"; }

}  // namespace loggas::cli
