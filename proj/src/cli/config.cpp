#include "osp/cli.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

namespace osp::cli {

ConfigError::ConfigError(std::vector<std::string> messages)
    : std::runtime_error(messages.empty() ? "invalid config" : messages.front()), messages_(std::move(messages)) {}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream in(s);
  std::string part;
  while (std::getline(in, part, sep)) parts.push_back(trim(part));
  return parts;
}

bool positive_integer(const std::string& s) {
  return !s.empty() && s.front() != '0' && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

enum class Kind { real, integer, u64, boolean, text, real_list, int_list, matrix };

const char* kind_name(Kind k) {
  switch (k) {
    case Kind::real: return "a real number";
    case Kind::integer: return "an integer";
    case Kind::u64: return "an unsigned 64-bit integer";
    case Kind::boolean: return "true or false";
    case Kind::text: return "text";
    case Kind::real_list: return "a comma-separated list of reals";
    case Kind::int_list: return "a comma-separated list of integers";
    case Kind::matrix: return "rows of comma-separated reals separated by ';'";
  }
  return "";
}

// Known keys; entries ending in '.' take a positive integer suffix (e.g. transition.3).
const std::map<std::string, std::map<std::string, Kind>>& registry() {
  static const std::map<std::string, std::map<std::string, Kind>> keys{
      {"process",
       {{"kind", Kind::text}, {"dim", Kind::integer}, {"rate", Kind::real}, {"dividend", Kind::real}, {"vol", Kind::real},
        {"spot", Kind::real}, {"horizon", Kind::real}, {"dates", Kind::integer}, {"states", Kind::integer},
        {"initial", Kind::integer}, {"transition.", Kind::matrix}}},
      {"payoff", {{"kind", Kind::text}, {"strike", Kind::real}, {"discount", Kind::boolean}, {"row.", Kind::real_list}}},
      {"region", {{"kind", Kind::text}, {"strike", Kind::real}, {"shared", Kind::boolean}}},
      {"optimizer",
       {{"grid_points", Kind::integer}, {"refine_rounds", Kind::integer}, {"refine_top_k", Kind::integer},
        {"pattern_shrink", Kind::real}, {"box_lower", Kind::real_list}, {"box_upper", Kind::real_list}}},
      {"plan",
       {{"L", Kind::integer}, {"M", Kind::integer}, {"N", Kind::integer}, {"M_star", Kind::integer},
        {"N_star", Kind::integer}, {"L_star", Kind::integer}, {"M_grid", Kind::int_list}, {"N_grid", Kind::int_list},
        {"seed", Kind::u64}, {"q2_convention", Kind::text}}},
      {"rates",
       {{"alpha", Kind::real}, {"rho", Kind::real}, {"gamma", Kind::real}, {"dim", Kind::integer},
        {"dates", Kind::integer}, {"N", Kind::int_list}}},
      {"output", {{"dir", Kind::text}}},
      {"adversarial",
       {{"gamma", Kind::real}, {"alpha", Kind::real}, {"delta", Kind::real}, {"amp", Kind::real}, {"q", Kind::real},
        {"M_grid", Kind::int_list}, {"replications", Kind::integer}, {"omega_count", Kind::integer},
        {"learner", Kind::text}}},
      {"oracle",
       {{"random_instances", Kind::integer}, {"states", Kind::integer}, {"dates", Kind::integer},
        {"regions", Kind::integer}}},
  };
  return keys;
}

std::optional<Kind> kind_of(const std::string& section, const std::string& key) {
  const auto& keys = registry().at(section);
  if (auto it = keys.find(key); it != keys.end()) return it->second;
  const auto dot = key.find('.');
  if (dot == std::string::npos || !positive_integer(key.substr(dot + 1))) return std::nullopt;
  if (auto it = keys.find(key.substr(0, dot + 1)); it != keys.end()) return it->second;
  return std::nullopt;
}

struct Entry {
  std::string value;
  int line = 0;
};

template <typename T>
bool parse_number(const std::string& s, T& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end && !s.empty();
}

class Reader {
 public:
  std::map<std::string, Entry> entries;
  std::set<std::string> sections;
  std::vector<std::string> errors;

  bool has(const std::string& key) const { return entries.contains(key); }

  bool has_section(const std::string& section) const { return sections.contains(section); }

  template <typename T>
  void get(const std::string& key, T& out) {
    auto it = entries.find(key);
    if (it == entries.end()) return;
    if (!convert(it->second.value, out)) {
      errors.push_back("line " + std::to_string(it->second.line) + ": " + key + " expects " +
                       kind_name(*kind_of(key.substr(0, key.find('.')), key.substr(key.find('.') + 1))) + ", got '" +
                       it->second.value + "'");
    }
  }

  template <typename T>
  void require_key(const std::string& key, T& out) {
    if (!has(key)) {
      errors.push_back("missing required key: " + key);
      return;
    }
    get(key, out);
  }

  int line_of(const std::string& key) const { return entries.at(key).line; }

  void fail(const std::string& key, const std::string& message) {
    errors.push_back("line " + std::to_string(line_of(key)) + ": " + key + " " + message);
  }

 private:
  static bool convert(const std::string& s, Real& out) { return parse_number(s, out) && std::isfinite(out); }
  static bool convert(const std::string& s, int& out) { return parse_number(s, out); }
  static bool convert(const std::string& s, Index& out) { return parse_number(s, out); }
  static bool convert(const std::string& s, std::uint64_t& out) { return parse_number(s, out); }
  static bool convert(const std::string& s, std::string& out) {
    out = s;
    return true;
  }
  static bool convert(const std::string& s, bool& out) {
    if (s == "true") return out = true, true;
    if (s == "false") return out = false, true;
    return false;
  }
  static bool convert(const std::string& s, std::vector<Real>& out) {
    out.clear();
    for (const auto& part : split(s, ',')) {
      Real v = 0;
      if (!convert(part, v)) return false;
      out.push_back(v);
    }
    return !out.empty();
  }
  static bool convert(const std::string& s, std::vector<Index>& out) {
    out.clear();
    for (const auto& part : split(s, ',')) {
      Index v = 0;
      if (!parse_number(part, v)) return false;
      out.push_back(v);
    }
    return !out.empty();
  }
  static bool convert(const std::string& s, Eigen::VectorXd& out) {
    std::vector<Real> v;
    if (!convert(s, v)) return false;
    out = Eigen::Map<Eigen::VectorXd>(v.data(), Index(v.size()));
    return true;
  }
  static bool convert(const std::string& s, Eigen::MatrixXd& out) {
    std::vector<std::vector<Real>> rows;
    for (const auto& row : split(s, ';')) {
      std::vector<Real> v;
      if (!convert(row, v)) return false;
      if (!rows.empty() && v.size() != rows.front().size()) return false;
      rows.push_back(std::move(v));
    }
    if (rows.empty()) return false;
    out.resize(Index(rows.size()), Index(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < rows[i].size(); ++j) out(Index(i), Index(j)) = rows[i][j];
    }
    return true;
  }
};

Reader read_lines(const std::string& text) {
  Reader r;
  std::stringstream in(text);
  std::string raw;
  for (int line = 1; std::getline(in, raw); ++line) {
    const std::string content = trim(raw.substr(0, raw.find('#')));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    const std::string lhs = eq == std::string::npos ? "" : trim(content.substr(0, eq));
    const auto dot = lhs.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot == 0 || dot + 1 == lhs.size()) {
      r.errors.push_back("line " + std::to_string(line) + ": expected 'section.key = value'");
      continue;
    }
    const std::string section = lhs.substr(0, dot);
    const std::string key = lhs.substr(dot + 1);
    if (!registry().contains(section)) {
      r.errors.push_back("line " + std::to_string(line) + ": unknown section '" + section + "'");
      continue;
    }
    if (!kind_of(section, key)) {
      r.errors.push_back("line " + std::to_string(line) + ": unknown key '" + lhs + "'");
      continue;
    }
    if (auto it = r.entries.find(lhs); it != r.entries.end()) {
      r.errors.push_back("line " + std::to_string(line) + ": duplicate key '" + lhs + "' (first set on line " +
                         std::to_string(it->second.line) + ")");
      continue;
    }
    r.entries.emplace(lhs, Entry{trim(content.substr(eq + 1)), line});
    r.sections.insert(section);
  }
  return r;
}

ProcessSpec read_process(Reader& r) {
  std::string kind;
  r.require_key("process.kind", kind);
  if (kind == "gbm") {
    GbmSpec g;
    r.get("process.dim", g.dim);
    r.get("process.rate", g.rate);
    r.get("process.dividend", g.dividend);
    r.get("process.vol", g.vol);
    r.get("process.spot", g.spot);
    r.get("process.horizon", g.horizon);
    r.get("process.dates", g.dates);
    return g;
  }
  if (kind == "chain") {
    DiscreteChainSpec c;
    r.require_key("process.states", c.states);
    r.require_key("process.dates", c.dates);
    r.get("process.initial", c.initial);
    for (int k = 1; k <= c.dates && c.dates <= 10000; ++k) {
      Eigen::MatrixXd P;
      r.require_key("process.transition." + std::to_string(k), P);
      c.transitions.push_back(P);
    }
    return c;
  }
  if (r.has("process.kind")) r.fail("process.kind", "must be 'gbm' or 'chain', got '" + kind + "'");
  return GbmSpec{};
}

PayoffSpec read_payoff(Reader& r, const ProcessSpec& process) {
  std::string kind;
  r.require_key("payoff.kind", kind);
  if (kind == "table") {
    const int dates = dates_of(process);
    const auto* chain = std::get_if<DiscreteChainSpec>(&process);
    const int states = chain ? chain->states : 0;
    TablePayoff t{Eigen::MatrixXd::Zero(dates, states)};
    for (int k = 1; k <= dates && dates <= 10000; ++k) {
      const std::string key = "payoff.row." + std::to_string(k);
      std::vector<Real> row;
      r.require_key(key, row);
      if (!r.has(key) || row.empty()) continue;
      if (int(row.size()) != states) {
        r.fail(key, "needs " + std::to_string(states) + " entries, got " + std::to_string(row.size()));
        continue;
      }
      for (int s = 0; s < states; ++s) t.values(k - 1, s) = row[std::size_t(s)];
    }
    return t;
  }
  MaxCallPayoff p;
  r.get("payoff.strike", p.strike);
  bool discount = true;
  r.get("payoff.discount", discount);
  if (const auto* g = std::get_if<GbmSpec>(&process)) {
    p.rate = discount ? g->rate : 0.0;
    p.horizon = g->horizon;
    p.dates = g->dates;
  }
  if (kind != "maxcall" && r.has("payoff.kind")) r.fail("payoff.kind", "must be 'maxcall' or 'table', got '" + kind + "'");
  return p;
}

RegionFamily read_region(Reader& r, const ProcessSpec& process) {
  std::string kind;
  r.require_key("region.kind", kind);
  if (kind == "table") {
    const auto* chain = std::get_if<DiscreteChainSpec>(&process);
    return TableFamily{chain ? chain->states : 0, dates_of(process)};
  }
  MaxCallFamily f;
  if (const auto* g = std::get_if<GbmSpec>(&process)) {
    f.dim = g->dim;
    f.dates = g->dates;
  }
  r.get("region.strike", f.strike);
  r.get("region.shared", f.shared);
  if (kind != "maxcall" && r.has("region.kind")) r.fail("region.kind", "must be 'maxcall' or 'table', got '" + kind + "'");
  return f;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  Reader r = read_lines(text);
  RunConfig cfg;
  if (!r.has_section("process")) {
    r.errors.insert(r.errors.begin(), "missing section: process");
    throw ConfigError(r.errors);
  }
  cfg.process = read_process(r);
  if (r.has_section("payoff")) cfg.payoff = read_payoff(r, cfg.process);
  if (r.has_section("region")) cfg.region = read_region(r, cfg.process);

  auto& o = cfg.optimizer;
  r.get("optimizer.grid_points", o.grid_points_per_dim);
  r.get("optimizer.refine_rounds", o.refine_rounds);
  r.get("optimizer.refine_top_k", o.refine_top_k);
  r.get("optimizer.pattern_shrink", o.pattern_shrink);
  if (r.has("optimizer.box_lower") || r.has("optimizer.box_upper")) {
    ThetaBox box;
    r.require_key("optimizer.box_lower", box.lower);
    r.require_key("optimizer.box_upper", box.upper);
    o.box = box;
  }

  auto& p = cfg.plan;
  r.get("plan.L", p.L);
  r.get("plan.M", p.M);
  r.get("plan.N", p.N);
  r.get("plan.M_star", p.M_star);
  r.get("plan.N_star", p.N_star);
  r.get("plan.L_star", p.L_star);
  r.get("plan.M_grid", p.M_grid);
  r.get("plan.N_grid", p.N_grid);
  if (r.has("plan.seed")) {
    std::uint64_t seed = 0;
    r.get("plan.seed", seed);
    cfg.seed = seed;
  }
  std::string q2 = "sqrt_vartheta";
  r.get("plan.q2_convention", q2);
  if (q2 == "vartheta") {
    p.q2_convention = Q2Convention::vartheta;
  } else if (q2 != "sqrt_vartheta") {
    r.fail("plan.q2_convention", "must be 'sqrt_vartheta' or 'vartheta'");
  }

  auto& rt = cfg.rates;
  r.get("rates.alpha", rt.alpha);
  r.get("rates.rho", rt.rho);
  r.get("rates.gamma", rt.gamma);
  r.get("rates.dim", rt.dim);
  r.get("rates.dates", rt.dates);
  r.get("rates.N", rt.budgets);

  auto& a = cfg.adversarial;
  r.get("adversarial.gamma", a.gamma);
  r.get("adversarial.alpha", a.alpha);
  r.get("adversarial.delta", a.delta);
  r.get("adversarial.amp", a.amp);
  r.get("adversarial.q", a.q);
  r.get("adversarial.M_grid", a.M_grid);
  r.get("adversarial.replications", a.replications);
  r.get("adversarial.omega_count", a.omega_count);
  std::string learner = "plug_in";
  r.get("adversarial.learner", learner);
  if (learner == "optimize") {
    a.learner = LearnerKind::optimize;
  } else if (learner != "plug_in") {
    r.fail("adversarial.learner", "must be 'plug_in' or 'optimize'");
  }

  r.get("oracle.random_instances", cfg.oracle.random_instances);
  r.get("oracle.states", cfg.oracle.states);
  r.get("oracle.dates", cfg.oracle.dates);
  r.get("oracle.regions", cfg.oracle.regions);
  r.get("output.dir", cfg.output_dir);

  if (r.errors.empty()) {
    try {
      std::visit([](const auto& spec) { spec.validate(); }, cfg.process);
      if (auto* table = cfg.payoff ? std::get_if<TablePayoff>(&*cfg.payoff) : nullptr) {
        require(table->values.allFinite(), "payoff table entries must be finite");
      }
      cfg.optimizer.validate();
    } catch (const ParameterError& e) {
      r.errors.push_back(e.what());
    }
  }
  if (!r.errors.empty()) throw ConfigError(r.errors);
  return cfg;
}

}  // namespace osp::cli
