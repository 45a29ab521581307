#include "trackopt/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace trackopt {

namespace {

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  return parts;
}

// ---------------------------------------------------------------------------
// Config text: sections of key = value lines, # or ; comments, comma lists.
// ---------------------------------------------------------------------------

struct ConfigEntry {
  std::string value;
  int line = 0;
  mutable bool used = false;
};

class Config {
 public:
  static Config parse(const std::string& text, const std::string& origin) {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string raw;
    int line_no = 0;
    std::string section;
    while (std::getline(in, raw)) {
      ++line_no;
      std::string line = raw;
      const auto hash = line.find_first_of("#;");
      if (hash != std::string::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']')
          throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": malformed section header");
        section = trim(line.substr(1, line.size() - 2));
        cfg.sections_[section];  // remember even if empty
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": expected key = value");
      if (section.empty())
        throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": key outside any [section]");
      const std::string key = trim(line.substr(0, eq));
      ConfigEntry entry{trim(line.substr(eq + 1)), line_no, false};
      if (!cfg.sections_[section].emplace(key, entry).second)
        throw std::invalid_argument(origin + ":" + std::to_string(line_no) + ": duplicate key [" + section +
                                    "]." + key);
    }
    return cfg;
  }

  bool has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
  }

  const ConfigEntry& entry(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end() || !s->second.count(key))
      throw std::invalid_argument(origin_ + ": missing required key [" + section + "]." + key);
    const ConfigEntry& e = s->second.at(key);
    e.used = true;
    return e;
  }

  std::string get_string(const std::string& section, const std::string& key) const {
    return entry(section, key).value;
  }
  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    return has(section, key) ? get_string(section, key) : fallback;
  }

  [[noreturn]] void fail(const std::string& section, const std::string& key, int line,
                         const std::string& msg) const {
    throw std::invalid_argument(origin_ + ":" + std::to_string(line) + ": [" + section + "]." + key +
                                ": " + msg);
  }

  double get_double(const std::string& section, const std::string& key) const {
    const ConfigEntry& e = entry(section, key);
    char* end = nullptr;
    const double v = std::strtod(e.value.c_str(), &end);
    if (end == e.value.c_str() || *end != '\0') fail(section, key, e.line, "not a number: '" + e.value + "'");
    return v;
  }
  double get_double(const std::string& section, const std::string& key, double fallback) const {
    return has(section, key) ? get_double(section, key) : fallback;
  }

  long get_long(const std::string& section, const std::string& key, long fallback) const {
    if (!has(section, key)) return fallback;
    const ConfigEntry& e = entry(section, key);
    const double v = get_double(section, key);
    if (std::fabs(v - std::round(v)) > 0.0) fail(section, key, e.line, "expected an integer");
    return std::lround(v);
  }

  std::vector<double> get_list(const std::string& section, const std::string& key) const {
    const ConfigEntry& e = entry(section, key);
    std::vector<double> out;
    for (const std::string& part : split(e.value, ',')) {
      const std::string p = trim(part);
      char* end = nullptr;
      const double v = std::strtod(p.c_str(), &end);
      if (end == p.c_str() || *end != '\0') fail(section, key, e.line, "not a number list: '" + e.value + "'");
      out.push_back(v);
    }
    return out;
  }

  int line_of(const std::string& section, const std::string& key) const {
    return entry(section, key).line;
  }

  void check_all_used(const std::initializer_list<std::string>& known_sections) const {
    for (const auto& [section, keys] : sections_) {
      bool known = false;
      for (const std::string& s : known_sections) known = known || s == section;
      if (!known) throw std::invalid_argument(origin_ + ": unknown section [" + section + "]");
      for (const auto& [key, e] : keys)
        if (!e.used)
          throw std::invalid_argument(origin_ + ":" + std::to_string(e.line) + ": unknown key [" + section +
                                      "]." + key);
    }
  }

  const std::string& origin() const { return origin_; }

 private:
  std::string origin_;
  std::map<std::string, std::map<std::string, ConfigEntry>> sections_;
};

std::vector<Edge> parse_edges(const Config& cfg) {
  const ConfigEntry& e = cfg.entry("graph", "edges");
  std::vector<Edge> edges;
  for (const std::string& part : split(e.value, ',')) {
    const std::string p = trim(part);
    if (p.empty()) continue;
    // "i-j" or "i-j:w", zero-based node ids
    const auto colon = p.find(':');
    const std::string pair = colon == std::string::npos ? p : p.substr(0, colon);
    const auto dash = pair.find('-');
    if (dash == std::string::npos) cfg.fail("graph", "edges", e.line, "expected i-j or i-j:w entries");
    Edge edge;
    try {
      edge.i = std::stoi(trim(pair.substr(0, dash)));
      edge.j = std::stoi(trim(pair.substr(dash + 1)));
      edge.weight = colon == std::string::npos ? 1.0 : std::stod(trim(p.substr(colon + 1)));
    } catch (const std::exception&) {
      cfg.fail("graph", "edges", e.line, "malformed edge entry '" + p + "'");
    }
    edges.push_back(edge);
  }
  if (edges.empty()) cfg.fail("graph", "edges", e.line, "edge list is empty");
  return edges;
}

InitSpec parse_init(const Config& cfg, const std::string& key, const std::string& fallback) {
  InitSpec init;
  const std::string text = cfg.get_string("init", key, fallback);
  if (text == "zeros" || text == "ones") {
    init.mode = text;
    return init;
  }
  init.mode = "explicit";
  const std::string origin = cfg.origin();
  for (const std::string& part : split(text, ',')) {
    const std::string p = trim(part);
    char* end = nullptr;
    const double v = std::strtod(p.c_str(), &end);
    if (end == p.c_str() || *end != '\0')
      throw std::invalid_argument(origin + ": [init]." + key + ": expected zeros|ones|number list, got '" +
                                  text + "'");
    init.values.push_back(v);
  }
  return init;
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  const Config cfg = Config::parse(text, origin);
  Scenario s;

  s.name = cfg.get_string("scenario", "name", "scenario");

  s.graph.family = cfg.get_string("graph", "family", "ring");
  s.graph.n_agents = static_cast<int>(cfg.get_long("graph", "n_agents", 0));
  if (s.graph.n_agents < 1)
    throw std::invalid_argument(origin + ": [graph].n_agents must be a positive integer");
  if (s.graph.family == "explicit") {
    s.graph.edges = parse_edges(cfg);
  } else if (s.graph.family != "ring" && s.graph.family != "path" && s.graph.family != "complete") {
    cfg.fail("graph", "family", cfg.line_of("graph", "family"),
             "unknown family '" + s.graph.family + "' (ring|path|complete|explicit)");
  }

  const int N = s.graph.n_agents;
  s.costs.family = cfg.get_string("costs", "family", "quadratic_sinusoidal");
  s.costs.omega = cfg.get_double("costs", "omega", 0.0);
  if (s.costs.family == "quadratic_sinusoidal") {
    s.costs.a = cfg.get_list("costs", "a");
    s.costs.b = cfg.get_list("costs", "b");
    s.costs.offset = cfg.has("costs", "offset") ? cfg.get_list("costs", "offset")
                                                : std::vector<double>(static_cast<std::size_t>(N), 0.0);
    if (static_cast<int>(s.costs.a.size()) != N)
      cfg.fail("costs", "a", cfg.line_of("costs", "a"), "need one entry per agent");
    if (static_cast<int>(s.costs.b.size()) != N)
      cfg.fail("costs", "b", cfg.line_of("costs", "b"), "need one entry per agent");
    if (static_cast<int>(s.costs.offset.size()) != N)
      cfg.fail("costs", "offset", cfg.line_of("costs", "offset"), "need one entry per agent");
    s.costs.dimension = 1;
  } else if (s.costs.family == "quadratic_vector") {
    s.costs.dimension = static_cast<int>(cfg.get_long("costs", "dimension", 0));
    if (s.costs.dimension < 1)
      throw std::invalid_argument(origin + ": [costs].dimension must be a positive integer");
    const int n = s.costs.dimension;
    s.costs.b_mult = cfg.get_list("costs", "b");
    if (static_cast<int>(s.costs.b_mult.size()) != N)
      cfg.fail("costs", "b", cfg.line_of("costs", "b"), "need one entry per agent");
    for (int i = 1; i <= N; ++i) {
      const std::string ak = "a_" + std::to_string(i);
      const std::vector<double> flat = cfg.get_list("costs", ak);
      if (static_cast<int>(flat.size()) != n * n)
        cfg.fail("costs", ak, cfg.line_of("costs", ak), "need dimension^2 entries, row-major");
      Matrix mat(n, n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) mat(r, c) = flat[static_cast<std::size_t>(r * n + c)];
      s.costs.a_mats.push_back(std::move(mat));

      auto vec_key = [&](const std::string& prefix) -> Vector {
        const std::string key = prefix + "_" + std::to_string(i);
        if (!cfg.has("costs", key)) return Vector(static_cast<std::size_t>(n), 0.0);
        const std::vector<double> vals = cfg.get_list("costs", key);
        if (static_cast<int>(vals.size()) != n)
          cfg.fail("costs", key, cfg.line_of("costs", key), "need dimension entries");
        return vals;
      };
      s.costs.c0s.push_back(vec_key("c0"));
      s.costs.c1s.push_back(vec_key("c1"));
    }
  } else {
    cfg.fail("costs", "family", cfg.line_of("costs", "family"),
             "unknown family '" + s.costs.family + "' (quadratic_sinusoidal|quadratic_vector)");
  }

  s.delta_t = cfg.get_double("run", "delta_t", 0.1);
  if (!(s.delta_t > 0.0))
    throw std::invalid_argument(origin + ": [run].delta_t must be positive");
  const std::string dc = cfg.get_string("run", "delta_c", "auto");
  if (dc == "auto") {
    s.delta_c_auto = true;
    s.delta_c = 0.0;
  } else {
    s.delta_c_auto = false;
    s.delta_c = cfg.get_double("run", "delta_c");
    if (!(s.delta_c > 0.0))
      throw std::invalid_argument(origin + ": [run].delta_c must be positive or 'auto'");
  }
  s.k_bar = cfg.get_long("run", "k_bar", 10);
  if (s.k_bar < 1) throw std::invalid_argument(origin + ": [run].k_bar must be >= 1");
  s.substeps = static_cast<int>(cfg.get_long("run", "substeps", 10));
  if (s.substeps < 1) throw std::invalid_argument(origin + ": [run].substeps must be >= 1");
  s.horizon = cfg.get_double("run", "horizon", 50.0);
  if (!(s.horizon > 0.0)) throw std::invalid_argument(origin + ": [run].horizon must be positive");

  s.x0 = parse_init(cfg, "x0", "ones");
  s.v0 = parse_init(cfg, "v0", "zeros");
  s.z0 = parse_init(cfg, "z0", "zeros");

  s.bounds.region_halfwidth = cfg.get_double("bounds", "region_halfwidth", 2.0);
  if (s.bounds.region_halfwidth < 0.0)
    throw std::invalid_argument(origin + ": [bounds].region_halfwidth must be nonnegative");
  if (cfg.has("bounds", "region_center")) {
    s.bounds.region_center = cfg.get_list("bounds", "region_center");
  }
  s.bounds.samples = static_cast<int>(cfg.get_long("bounds", "samples", 200));
  if (s.bounds.samples < 1) throw std::invalid_argument(origin + ": [bounds].samples must be >= 1");
  s.bounds.transient_fraction = cfg.get_double("bounds", "transient_fraction", 0.5);
  if (!(s.bounds.transient_fraction >= 0.0) || !(s.bounds.transient_fraction < 1.0))
    throw std::invalid_argument(origin + ": [bounds].transient_fraction must lie in [0, 1)");
  const bool any_declared = cfg.has("bounds", "m") || cfg.has("bounds", "l") ||
                            cfg.has("bounds", "c0") || cfg.has("bounds", "c1");
  if (any_declared) {
    CostBounds b;
    b.m = cfg.get_double("bounds", "m");
    b.l = cfg.get_double("bounds", "l");
    b.c0 = cfg.get_double("bounds", "c0");
    b.c1 = cfg.get_double("bounds", "c1");
    b.provenance = CostBounds::Provenance::Declared;
    b.validate();
    s.bounds.declared = b;
  }

  cfg.check_all_used({"scenario", "graph", "costs", "run", "init", "bounds"});
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("load_scenario: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path);
}

namespace {

constexpr const char* kPaperSec4 = R"(# 5-agent ring with quadratic costs under sinusoidal drift.
[scenario]
name = paper_sec4

[graph]
family = ring
n_agents = 5

[costs]
family = quadratic_sinusoidal
a = 1, 2, 3, 4, 5
b = 1, 2, 3, 4, 5
omega = 0.05

[run]
delta_t = 0.1
delta_c = auto
k_bar = 10
substeps = 10
horizon = 50

[init]
x0 = ones
v0 = zeros
z0 = zeros

[bounds]
region_halfwidth = 2
region_center = 0
samples = 200
transient_fraction = 0.5
)";

constexpr const char* kStaticQuadratic = R"(# Static strongly convex quadratics; the optimum is the origin.
[scenario]
name = static_quadratic

[graph]
family = ring
n_agents = 5

[costs]
family = quadratic_sinusoidal
a = 1, 2, 3, 4, 5
b = 0, 0, 0, 0, 0
omega = 0.05

[run]
delta_t = 0.1
delta_c = auto
k_bar = 10
substeps = 10
horizon = 50

[init]
x0 = ones
v0 = zeros
z0 = zeros

[bounds]
region_halfwidth = 2
region_center = 0
samples = 200
transient_fraction = 0.5
)";

}  // namespace

std::string preset_config_text(const std::string& name) {
  if (name == "paper_sec4") return kPaperSec4;
  if (name == "static_quadratic") return kStaticQuadratic;
  throw std::invalid_argument("unknown preset '" + name + "' (paper_sec4|static_quadratic)");
}

Scenario preset_scenario(const std::string& name) {
  return parse_scenario(preset_config_text(name), "preset:" + name);
}

Problem build_problem(const Scenario& s) {
  Graph g = [&s] {
    if (s.graph.family == "ring") return Graph::ring(s.graph.n_agents);
    if (s.graph.family == "path") return Graph::path(s.graph.n_agents);
    if (s.graph.family == "complete") return Graph::complete(s.graph.n_agents);
    return Graph::from_edges(s.graph.n_agents, s.graph.edges);
  }();

  std::vector<std::shared_ptr<const CostModel>> costs;
  const int N = s.graph.n_agents;
  if (s.costs.family == "quadratic_sinusoidal") {
    for (int i = 0; i < N; ++i)
      costs.push_back(std::make_shared<QuadraticSinusoidalCost>(
          s.costs.a[static_cast<std::size_t>(i)], s.costs.b[static_cast<std::size_t>(i)], s.costs.omega,
          s.costs.offset[static_cast<std::size_t>(i)]));
  } else {
    for (int i = 0; i < N; ++i)
      costs.push_back(std::make_shared<QuadraticVectorCost>(
          s.costs.a_mats[static_cast<std::size_t>(i)], s.costs.c0s[static_cast<std::size_t>(i)],
          s.costs.c1s[static_cast<std::size_t>(i)], s.costs.b_mult[static_cast<std::size_t>(i)],
          s.costs.omega));
  }
  return Problem(std::move(g), std::move(costs));
}

Vector resolve_init(const InitSpec& init, std::size_t length, const std::string& what) {
  if (init.mode == "zeros") return Vector(length, 0.0);
  if (init.mode == "ones") return Vector(length, 1.0);
  if (init.values.size() == 1) return Vector(length, init.values.front());
  if (init.values.size() != length)
    throw std::invalid_argument(what + ": explicit init needs 1 or N*n values, got " +
                                std::to_string(init.values.size()));
  return init.values;
}

namespace {

std::string list_text(const Vector& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt17(v[i]);
  }
  return out;
}

}  // namespace

std::string resolved_config_text(const Scenario& s) {
  std::ostringstream out;
  out << "[scenario]\nname = " << s.name << "\n\n";

  out << "[graph]\nfamily = " << s.graph.family << "\nn_agents = " << s.graph.n_agents << "\n";
  if (s.graph.family == "explicit") {
    out << "edges = ";
    for (std::size_t i = 0; i < s.graph.edges.size(); ++i) {
      const Edge& e = s.graph.edges[i];
      if (i) out << ", ";
      out << e.i << "-" << e.j << ":" << fmt17(e.weight);
    }
    out << "\n";
  }
  out << "\n[costs]\nfamily = " << s.costs.family << "\nomega = " << fmt17(s.costs.omega) << "\n";
  if (s.costs.family == "quadratic_sinusoidal") {
    out << "a = " << list_text(s.costs.a) << "\n";
    out << "b = " << list_text(s.costs.b) << "\n";
    out << "offset = " << list_text(s.costs.offset) << "\n";
  } else {
    out << "dimension = " << s.costs.dimension << "\n";
    out << "b = " << list_text(s.costs.b_mult) << "\n";
    for (std::size_t i = 0; i < s.costs.a_mats.size(); ++i) {
      const Matrix& m = s.costs.a_mats[i];
      Vector flat;
      for (int r = 0; r < m.rows(); ++r)
        for (int c = 0; c < m.cols(); ++c) flat.push_back(m(r, c));
      out << "a_" << (i + 1) << " = " << list_text(flat) << "\n";
      out << "c0_" << (i + 1) << " = " << list_text(s.costs.c0s[i]) << "\n";
      out << "c1_" << (i + 1) << " = " << list_text(s.costs.c1s[i]) << "\n";
    }
  }

  out << "\n[run]\ndelta_t = " << fmt17(s.delta_t) << "\n";
  out << "delta_c = " << (s.delta_c_auto ? std::string("auto") : fmt17(s.delta_c)) << "\n";
  out << "k_bar = " << s.k_bar << "\nsubsteps = " << s.substeps << "\nhorizon = " << fmt17(s.horizon)
      << "\n";

  auto init_text = [](const InitSpec& init) {
    if (init.mode == "explicit") return list_text(init.values);
    return init.mode;
  };
  out << "\n[init]\nx0 = " << init_text(s.x0) << "\nv0 = " << init_text(s.v0)
      << "\nz0 = " << init_text(s.z0) << "\n";

  out << "\n[bounds]\nregion_halfwidth = " << fmt17(s.bounds.region_halfwidth) << "\n";
  out << "region_center = "
      << (s.bounds.region_center.empty() ? std::string("0") : list_text(s.bounds.region_center)) << "\n";
  out << "samples = " << s.bounds.samples << "\n";
  out << "transient_fraction = " << fmt17(s.bounds.transient_fraction) << "\n";
  if (s.bounds.declared) {
    out << "m = " << fmt17(s.bounds.declared->m) << "\nl = " << fmt17(s.bounds.declared->l)
        << "\nc0 = " << fmt17(s.bounds.declared->c0) << "\nc1 = " << fmt17(s.bounds.declared->c1) << "\n";
  }
  return out.str();
}

namespace {

struct Prepared {
  Problem problem;
  LaplacianDecomposition decomp;
  Vector x0, v0, z0;
  double delta_c = 0.0;
  double initial_delta_bar = 0.0;
  TransformedSystem tsys;
  CostBounds bounds;
};

Prepared prepare(const Scenario& s) {
  Problem problem = build_problem(s);
  const int N = problem.n_agents();
  const int n = problem.dimension;
  const std::size_t stacked = static_cast<std::size_t>(N) * static_cast<std::size_t>(n);

  Prepared pre{std::move(problem), {}, {}, {}, {}, 0.0, 0.0, {}, {}};
  pre.decomp = decompose(pre.problem.graph);
  pre.x0 = resolve_init(s.x0, stacked, "[init].x0");
  pre.v0 = resolve_init(s.v0, stacked, "[init].v0");
  pre.z0 = resolve_init(s.z0, stacked, "[init].z0");

  const ReferenceSet refs0 = make_references(pre.problem, pre.x0, 0.0);
  pre.tsys = build_abar(pre.decomp, refs0.hessians, n);
  pre.initial_delta_bar = delta_bar(pre.tsys);
  pre.delta_c = s.delta_c_auto ? 0.9 * pre.initial_delta_bar : s.delta_c;

  if (s.bounds.declared) {
    pre.bounds = *s.bounds.declared;
  } else {
    const std::size_t centers = s.bounds.region_center.size();
    if (centers > 1 && centers != static_cast<std::size_t>(n))
      throw std::invalid_argument(
          "[bounds].region_center: need one value or one per dimension, got " +
          std::to_string(centers));
    Box region;
    region.lo.resize(static_cast<std::size_t>(n));
    region.hi.resize(static_cast<std::size_t>(n));
    for (int d = 0; d < n; ++d) {
      const double center =
          centers == 0 ? 0.0 : s.bounds.region_center[centers == 1 ? 0 : static_cast<std::size_t>(d)];
      region.lo[static_cast<std::size_t>(d)] = center - s.bounds.region_halfwidth;
      region.hi[static_cast<std::size_t>(d)] = center + s.bounds.region_halfwidth;
    }
    pre.bounds = estimate_bounds(pre.problem, region, 0.0, s.horizon, s.bounds.samples);
  }
  return pre;
}

Scenario resolved_copy(const Scenario& s, const Prepared& pre) {
  Scenario r = s;
  r.delta_c_auto = false;
  r.delta_c = pre.delta_c;
  r.x0 = InitSpec{"explicit", pre.x0};
  r.v0 = InitSpec{"explicit", pre.v0};
  r.z0 = InitSpec{"explicit", pre.z0};
  return r;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string column_name(const std::string& prefix, int agent, int d, int dim) {
  std::string name = prefix + "_" + std::to_string(agent + 1);
  if (dim > 1) name += "_" + std::to_string(d + 1);
  return name;
}

std::string run_csv_text(const TimeSeries& ts, const MetricSeries& m) {
  const int N = ts.n_agents;
  const int n = ts.dimension;
  std::ostringstream out;
  out << "t";
  for (int i = 0; i < N; ++i)
    for (int d = 0; d < n; ++d) out << "," << column_name("x", i, d, n);
  for (int d = 0; d < n; ++d) out << ",x_star_" << (d + 1);
  for (int i = 0; i < N; ++i)
    for (int d = 0; d < n; ++d) out << "," << column_name("psi", i, d, n);
  out << ",e,grad_norm,disagreement\n";
  for (std::size_t s = 0; s < ts.times.size(); ++s) {
    out << fmt17(ts.times[s]);
    for (double v : ts.states[s]) out << "," << fmt17(v);
    for (double v : ts.x_star[s]) out << "," << fmt17(v);
    for (double v : ts.psis[s]) out << "," << fmt17(v);
    out << "," << fmt17(m.e[s]) << "," << fmt17(m.grad_norm[s]) << "," << fmt17(m.disagreement[s])
        << "\n";
  }
  return out.str();
}

std::string consensus_csv_text(const TimeSeries& ts) {
  const int N = ts.n_agents;
  const int n = ts.dimension;
  std::ostringstream out;
  out << "k";
  for (int i = 0; i < N; ++i)
    for (int d = 0; d < n; ++d) out << "," << column_name("p", i, d, n);
  if (n == 1)
    out << ",pbar";
  else
    for (int d = 0; d < n; ++d) out << ",pbar_" << (d + 1);
  out << ",consensus_err\n";
  for (std::size_t s = 0; s < ts.consensus_steps.size(); ++s) {
    out << ts.consensus_steps[s];
    for (double v : ts.consensus_p[s]) out << "," << fmt17(v);
    for (double v : ts.consensus_pbar[s]) out << "," << fmt17(v);
    out << "," << fmt17(ts.consensus_err[s]) << "\n";
  }
  return out.str();
}

constexpr const char* kConfigMarker = "--- resolved config ---";

std::string summary_text(const Scenario& resolved, const StabilityReport& r, const MetricSeries& m,
                         const BoundCheck& bc, double initial_delta_bar) {
  std::ostringstream out;
  out << "scenario = " << resolved.name << "\n";
  out << "e_bar = " << fmt17(m.e_bar) << "\n";
  out << "max_e = " << fmt17(m.max_e) << "\n";
  out << "final_e = " << fmt17(m.e.back()) << "\n";
  out << "final_disagreement = " << fmt17(m.disagreement.back()) << "\n";
  out << "delta_bar = " << fmt17(r.delta_bar) << "\n";
  out << "delta_bar_initial = " << fmt17(initial_delta_bar) << "\n";
  out << "delta_c = " << fmt17(r.delta_c) << "\n";
  out << "delta_c_admissible = " << (r.delta_c < r.delta_bar ? "true" : "false") << "\n";
  out << "phi_norm = " << fmt17(r.phi_norm) << "\n";
  out << "phi_rho = " << fmt17(r.phi_rho) << "\n";
  out << "phi_used = " << fmt17(r.phi_used) << "\n";
  out << "phi_norm_fallback = " << (r.phi_norm_fallback ? "true" : "false") << "\n";
  out << "bounds_evaluable = " << (r.bounds_evaluable ? "true" : "false") << "\n";
  for (const auto& item : bc.items) {
    out << item.name << "_bound = " << fmt17(item.bound) << "\n";
    out << item.name << "_worst = " << fmt17(item.worst) << "\n";
    out << item.name << "_margin = " << fmt17(item.margin) << "\n";
    out << item.name << "_pass = " << (item.pass ? "true" : "false") << "\n";
  }
  out << "bounds_pass = " << (bc.all_pass ? "true" : "false") << "\n";
  out << kConfigMarker << "\n";
  out << resolved_config_text(resolved);
  return out.str();
}

}  // namespace

StabilityReport stability_report(const Scenario& s) {
  const Prepared pre = prepare(s);
  return make_stability_report(pre.tsys, pre.bounds, pre.delta_c);
}

void write_stability_report(const Scenario& s, const std::string& out_dir) {
  const StabilityReport r = stability_report(s);
  std::filesystem::create_directories(out_dir);
  write_file(out_dir + "/stability_report.txt", to_text(r));
}

RunResult run_scenario(const Scenario& s, const std::string& out_dir) {
  Prepared pre = prepare(s);

  OrchestratorConfig cfg;
  cfg.delta_t = s.delta_t;
  cfg.k_bar = s.k_bar;
  cfg.delta_c = pre.delta_c;
  cfg.substeps = s.substeps;
  cfg.horizon = s.horizon;

  const bool constant_h = pre.problem.constant_hessians();
  StabilityAccumulator acc(pre.decomp, pre.problem.dimension, pre.delta_c);
  RefreshObserver observer;
  if (!constant_h)
    observer = [&acc](const ReferenceSet& refs, long) { acc.update(refs.hessians); };

  RunResult result{resolved_copy(s, pre), {}, {}, {}, {}};
  result.series = orchestrate(pre.problem, cfg, pre.x0, pre.v0, pre.z0, observer);
  result.metrics = tracking_error(result.series, pre.problem);

  result.report = make_stability_report(pre.tsys, pre.bounds, pre.delta_c);
  if (!constant_h && acc.refreshes() > 0) {
    // Hessians vary along the trajectory: report the running extrema over
    // all reference refreshes instead of the k = 0 snapshot.
    StabilityReport worst = result.report;
    worst.delta_bar = std::min(worst.delta_bar, acc.min_delta_bar());
    worst.phi_norm = std::max(worst.phi_norm, acc.max_phi_norm());
    worst.phi_rho = std::max(worst.phi_rho, acc.max_phi_rho());
    worst.phi_norm_fallback = !(worst.phi_norm < 1.0);
    worst.phi_used = worst.phi_norm_fallback ? worst.phi_rho : worst.phi_norm;
    worst.bounds_evaluable = worst.phi_used < 1.0;
    if (worst.bounds_evaluable) {
      const BoundConstants c = bound_constants(pre.bounds, worst.phi_used);
      worst.c_d = c.c_d;
      worst.c_bar = c.c_bar;
      worst.eps_bar = c.eps_bar;
      worst.consensus_bound = pre.tsys.n_agents * c.c_bar * (1.0 + worst.phi_used) /
                              (1.0 - worst.phi_used * worst.phi_used);
      worst.gradient_bound = worst.c_nabla * c.eps_bar;
    }
    result.report = worst;
  }

  result.bound_check =
      check_bounds(result.series, result.metrics, result.report, s.bounds.transient_fraction);

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    write_file(out_dir + "/run.csv", run_csv_text(result.series, result.metrics));
    write_file(out_dir + "/consensus.csv", consensus_csv_text(result.series));
    write_file(out_dir + "/stability_report.txt", to_text(result.report));
    write_file(out_dir + "/summary.txt",
               summary_text(result.resolved, result.report, result.metrics, result.bound_check,
                            pre.initial_delta_bar));
  }
  return result;
}

std::vector<SweepRow> run_sweep(const SweepSpec& sw, const std::string& out_dir) {
  if (sw.values.empty()) throw std::invalid_argument("run_sweep: empty value list");
  if (sw.param != "k_bar" && sw.param != "delta_c" && sw.param != "delta_t" && sw.param != "omega")
    throw std::invalid_argument("run_sweep: unknown parameter '" + sw.param +
                                "' (k_bar|delta_c|delta_t|omega)");

  std::vector<SweepRow> rows;
  for (double value : sw.values) {
    SweepRow row;
    row.value = value;
    Scenario s = sw.base;
    try {
      if (sw.param == "k_bar") {
        if (value < 1.0 || std::fabs(value - std::round(value)) > 0.0)
          throw std::invalid_argument("k_bar values must be positive integers");
        s.k_bar = std::lround(value);
      } else if (sw.param == "delta_c") {
        s.delta_c_auto = false;
        s.delta_c = value;
      } else if (sw.param == "delta_t") {
        s.delta_t = value;
      } else {
        s.costs.omega = value;
      }
      s.name = sw.base.name + "_" + sw.param + "_" + fmt_short(value);
      const std::string run_dir =
          out_dir.empty() ? std::string() : out_dir + "/" + sw.param + "_" + fmt_short(value);
      const RunResult r = run_scenario(s, run_dir);
      row.ok = true;
      row.e_bar = r.metrics.e_bar;
      row.max_e = r.metrics.max_e;
      row.consensus_margin = r.bound_check.items[0].margin;
      row.gradient_margin = r.bound_check.items[1].margin;
      row.admissible = r.report.delta_c < r.report.delta_bar;
    } catch (const std::exception& ex) {
      row.ok = false;
      std::string msg = ex.what();
      for (char& c : msg)
        if (c == ',' || c == '\n') c = ';';
      row.error = msg;
    }
    rows.push_back(std::move(row));
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ostringstream csv;
    csv << "value,e_bar,max_e,consensus_margin,gradient_margin,admissible,status\n";
    for (const SweepRow& row : rows) {
      csv << fmt17(row.value) << ",";
      if (row.ok) {
        csv << fmt17(row.e_bar) << "," << fmt17(row.max_e) << "," << fmt17(row.consensus_margin)
            << "," << fmt17(row.gradient_margin) << "," << (row.admissible ? "true" : "false")
            << ",ok\n";
      } else {
        csv << ",,,,,error: " << row.error << "\n";
      }
    }
    write_file(out_dir + "/comparison.csv", csv.str());
  }
  return rows;
}

CompareResult compare_central(const Scenario& s, const std::string& out_dir) {
  const RunResult dist = run_scenario(s, out_dir);
  const Prepared pre = prepare(s);
  const int N = pre.problem.n_agents();
  const int n = pre.problem.dimension;

  Vector x0c(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < N; ++i)
    for (int d = 0; d < n; ++d)
      x0c[static_cast<std::size_t>(d)] += pre.x0[static_cast<std::size_t>(i * n + d)] / N;

  const TimeSeries central =
      central_baseline(pre.problem, x0c, s.delta_t / s.substeps, s.horizon);
  const MetricSeries mc = tracking_error(central, pre.problem);

  CompareResult out;
  out.e_bar_distributed = dist.metrics.e_bar;
  out.e_bar_central = mc.e_bar;
  out.final_e_distributed = dist.metrics.e.back();
  out.final_e_central = mc.e.back();

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ostringstream csv;
    csv << "t";
    for (int d = 0; d < n; ++d) csv << ",x_" << (d + 1);
    for (int d = 0; d < n; ++d) csv << ",x_star_" << (d + 1);
    csv << ",e\n";
    for (std::size_t k = 0; k < central.times.size(); ++k) {
      csv << fmt17(central.times[k]);
      for (double v : central.states[k]) csv << "," << fmt17(v);
      for (double v : central.x_star[k]) csv << "," << fmt17(v);
      csv << "," << fmt17(mc.e[k]) << "\n";
    }
    write_file(out_dir + "/central.csv", csv.str());

    std::ostringstream sum;
    sum << "e_bar_distributed = " << fmt17(out.e_bar_distributed) << "\n";
    sum << "e_bar_central = " << fmt17(out.e_bar_central) << "\n";
    sum << "final_e_distributed = " << fmt17(out.final_e_distributed) << "\n";
    sum << "final_e_central = " << fmt17(out.final_e_central) << "\n";
    write_file(out_dir + "/compare_summary.txt", sum.str());
  }
  return out;
}

namespace {

std::vector<std::vector<double>> read_csv_rows(const std::string& path, std::string& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open CSV: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty CSV: " + path);
  header = line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<double> row;
    for (const std::string& cell : split(line, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

TimeSeries read_run_csv(const std::string& path, int n_agents, int dimension) {
  std::string header;
  const auto rows = read_csv_rows(path, header);
  const std::size_t stacked = static_cast<std::size_t>(n_agents) * static_cast<std::size_t>(dimension);
  const std::size_t expected = 1 + stacked + static_cast<std::size_t>(dimension) + stacked + 3;
  TimeSeries ts;
  ts.n_agents = n_agents;
  ts.dimension = dimension;
  for (const auto& row : rows) {
    if (row.size() != expected) throw std::invalid_argument("read_run_csv: column count mismatch");
    std::size_t c = 0;
    ts.times.push_back(row[c++]);
    ts.states.emplace_back(row.begin() + c, row.begin() + c + stacked);
    c += stacked;
    ts.x_star.emplace_back(row.begin() + c, row.begin() + c + dimension);
    c += static_cast<std::size_t>(dimension);
    ts.psis.emplace_back(row.begin() + c, row.begin() + c + stacked);
  }
  return ts;
}

TimeSeries read_consensus_csv(const std::string& path, int n_agents, int dimension) {
  std::string header;
  const auto rows = read_csv_rows(path, header);
  const std::size_t stacked = static_cast<std::size_t>(n_agents) * static_cast<std::size_t>(dimension);
  const std::size_t expected = 1 + stacked + static_cast<std::size_t>(dimension) + 1;
  TimeSeries ts;
  ts.n_agents = n_agents;
  ts.dimension = dimension;
  for (const auto& row : rows) {
    if (row.size() != expected) throw std::invalid_argument("read_consensus_csv: column count mismatch");
    std::size_t c = 0;
    ts.consensus_steps.push_back(static_cast<long>(row[c++]));
    ts.consensus_p.emplace_back(row.begin() + c, row.begin() + c + stacked);
    c += stacked;
    ts.consensus_pbar.emplace_back(row.begin() + c, row.begin() + c + dimension);
    c += static_cast<std::size_t>(dimension);
    ts.consensus_err.push_back(row[c]);
  }
  return ts;
}

std::string extract_embedded_config(const std::string& summary_text_in) {
  const std::string marker = std::string(kConfigMarker) + "\n";
  const auto pos = summary_text_in.find(marker);
  if (pos == std::string::npos)
    throw std::invalid_argument("extract_embedded_config: marker not found in summary");
  return summary_text_in.substr(pos + marker.size());
}

}  // namespace trackopt
