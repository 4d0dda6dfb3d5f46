#include "twodesign/cli.hpp"

#include "twodesign/analytics.hpp"
#include "twodesign/connectivity.hpp"
#include "twodesign/engine.hpp"
#include "twodesign/errors.hpp"
#include "twodesign/oracle.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fmt/format.h>

#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>
#include <map>
#include <variant>

namespace twodesign {

using json = nlohmann::ordered_json;

std::vector<int> parse_range(const std::string& text) {
  std::vector<int> parts;
  std::stringstream ss(text);
  std::string item;
  try {
    while (std::getline(ss, item, ':')) {
      std::size_t used = 0;
      parts.push_back(std::stoi(item, &used));
      if (used != item.size()) throw ConfigError("");
    }
  } catch (const std::exception&) {
    throw ConfigError("invalid range '" + text + "', expected a, a:b or a:b:stride");
  }
  if (parts.empty() || parts.size() > 3) throw ConfigError("invalid range '" + text + "'");
  const int lo = parts[0], hi = parts.size() > 1 ? parts[1] : parts[0], stride = parts.size() > 2 ? parts[2] : 1;
  if (stride < 1 || hi < lo) throw ConfigError("invalid range '" + text + "'");
  std::vector<int> out;
  for (int v = lo; v <= hi; v += stride) out.push_back(v);
  return out;
}

EnsembleSpec resolve_ensemble(const std::string& family, const std::string& graph_path, int n, LocalDim q,
                              const FamilyParams& params) {
  if (!graph_path.empty()) return EnsembleSpec::from_graph(load_graph(graph_path), q);
  if (family == "singles") return EnsembleSpec::singles(n, q);
  if (family == "brickwork-obc" || family == "brickwork_open") return EnsembleSpec::brickwork(n, Boundary::open, q);
  if (family == "brickwork-pbc" || family == "brickwork_periodic")
    return EnsembleSpec::brickwork(n, Boundary::periodic, q);
  if (family == "pcg") return EnsembleSpec::pcg(n, q);
  if (family == "pb") return EnsembleSpec::pb(n, q);
  if (family == "pbfe") return EnsembleSpec::pbfe(n, q);
  return EnsembleSpec::from_family(parse_family(family), n, q, params);
}

namespace {

using Cell = std::variant<std::int64_t, double, std::string, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

std::string cell_text(const Cell& c) {
  return std::visit(
      [](const auto& v) -> std::string {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, double>)
          return fmt::format("{:.17g}", v);
        else if constexpr (std::is_same_v<V, bool>)
          return v ? "true" : "false";
        else if constexpr (std::is_same_v<V, std::string>)
          return v;
        else
          return std::to_string(v);
      },
      c);
}

json cell_json(const Cell& c) {
  return std::visit([](const auto& v) { return json(v); }, c);
}

void write_table(const Table& t, const json& config, const std::string& format, std::ostream& os) {
  if (format == "json") {
    json rows = json::array();
    for (const auto& r : t.rows) {
      json row = json::object();
      for (std::size_t k = 0; k < t.columns.size(); ++k) row[t.columns[k]] = cell_json(r[k]);
      rows.push_back(row);
    }
    os << json{{"config", config}, {"rows", rows}}.dump(2) << "\n";
    return;
  }
  os << "# " << config.dump() << "\n";
  for (std::size_t k = 0; k < t.columns.size(); ++k) os << (k ? "," : "") << t.columns[k];
  os << "\n";
  for (const auto& r : t.rows) {
    for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << cell_text(r[k]);
    os << "\n";
  }
}

struct Options {
  std::string family = "linear";
  std::string graph;
  std::string n = "12";
  int q = 2;
  double eps = 0.01;
  std::string steps;
  std::string layers;
  int realizations = 100;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out;
  std::string format = "csv";
  std::string kind = "mult";
  std::string variant = "entangled_boundaries";
  std::string experiment;
  int samples = 1000;
  int max_steps = 100000;
  int arity = 2;
  int degree = 3;
  std::uint64_t graph_seed = 0;
  bool no_symmetry = false;

  json to_json(const std::string& command) const {
    return json{{"command", command},   {"family", graph.empty() ? family : std::string()},
                {"graph", graph},       {"n", n},
                {"q", q},               {"eps", eps},
                {"steps", steps},       {"layers", layers},
                {"realizations", realizations}, {"seed", seed},
                {"kind", kind},         {"variant", variant},
                {"experiment", experiment}, {"samples", samples},
                {"arity", arity},       {"degree", degree},
                {"graph_seed", graph_seed}, {"symmetry", !no_symmetry},
                {"max_steps", max_steps}};
  }

  FamilyParams family_params() const { return {arity, degree, graph_seed}; }
  EngineOptions engine() const {
    EngineOptions o;
    o.realizations = realizations;
    o.seed = seed;
    o.threads = threads;
    o.use_symmetry = !no_symmetry;
    o.max_steps = max_steps;
    return o;
  }
  EnsembleSpec spec(int sites) const {
    return resolve_ensemble(family, graph, sites, LocalDim{q}, family_params());
  }
  std::vector<int> sizes() const {
    if (!graph.empty()) return {load_graph(graph).n};
    return parse_range(n);
  }
  std::vector<int> step_list(const std::string& fallback) const {
    if (!steps.empty() && !layers.empty()) throw ConfigError("give --steps or --layers, not both");
    return parse_range(!steps.empty() ? steps : !layers.empty() ? layers : fallback);
  }
  ErrorKind error_kind() const {
    if (kind == "mult" || kind == "multiplicative") return ErrorKind::multiplicative;
    if (kind == "coll" || kind == "collisional") return ErrorKind::collisional;
    throw ConfigError("unknown error kind '" + kind + "'");
  }
};

Table cmd_error_curve(const Options& o) {
  Table t{{"n", "step", "mult_error", "coll_error", "mult_stat_err", "coll_stat_err", "optimal_a", "guaranteed"}, {}};
  for (int n : o.sizes()) {
    const auto c = error_curve(o.spec(n), o.step_list("0:20"), o.engine());
    for (std::size_t k = 0; k < c.steps.size(); ++k)
      t.rows.push_back({std::int64_t{n}, std::int64_t{c.steps[k]}, c.mult_error[k], c.coll_error[k],
                        c.mult_stat_err[k], c.coll_stat_err[k], c.argmax[k].to_string(), c.guaranteed[k] != 0});
  }
  return t;
}

Table cmd_depth(const Options& o) {
  Table t{{"n", "epsilon", "kind", "depth", "lower_step", "upper_step", "lower_error", "upper_error", "lower_argmax",
           "upper_argmax", "stat_err", "guaranteed"},
          {}};
  for (int n : o.sizes()) {
    const EnsembleSpec spec = o.spec(n);
    DepthResult d;
    std::string kind;
    if (!o.experiment.empty()) {
      const auto a = ExperimentVector::from_string(o.experiment);
      if (a.n() != n) throw ConfigError("--experiment length must equal n");
      d = experiment_depth(spec, a, o.eps, o.engine());
      kind = "experiment:" + o.experiment;
    } else {
      d = design_depth(spec, o.eps, o.error_kind(), o.engine());
      kind = d.kind == ErrorKind::multiplicative ? "multiplicative" : "collisional";
    }
    t.rows.push_back({std::int64_t{n}, d.epsilon, kind, d.depth, std::int64_t{d.lower_step},
                      std::int64_t{d.upper_step}, d.lower_error, d.upper_error, d.lower_argmax.to_string(),
                      d.upper_argmax.to_string(), d.stat_err, d.guaranteed});
  }
  return t;
}

Table cmd_sweep(const Options& o) {
  Table t{{"n", "step", "experiment", "multiplicity", "error", "stat_err", "is_max"}, {}};
  for (int n : o.sizes()) {
    const auto s = experiment_sweep(o.spec(n), o.step_list("0:20"), o.engine());
    for (std::size_t k = 0; k < s.steps.size(); ++k)
      for (std::size_t c = 0; c < s.classes.size(); ++c)
        t.rows.push_back({std::int64_t{n}, std::int64_t{s.steps[k]}, s.classes[c].representative.to_string(),
                          static_cast<std::int64_t>(s.classes[c].multiplicity),
                          s.error(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)),
                          s.stat_err(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)), s.argmax[k] == c});
  }
  return t;
}

Table cmd_connections(const Options& o) {
  Table t{{"n", "s", "naive_mean", "greedy_mean", "naive_se", "greedy_se"}, {}};
  for (int n : o.sizes()) {
    const EnsembleSpec spec = o.spec(n);
    for (int s : o.step_list("0:200:20")) {
      const auto c = mean_connection_count(spec, s, o.samples, o.seed, o.threads);
      t.rows.push_back({std::int64_t{n}, std::int64_t{s}, c.mean_naive, c.mean_greedy, c.se_naive, c.se_greedy});
    }
  }
  return t;
}

Table cmd_formula(const Options& o) {
  Table t{{"n", "q", "epsilon", "variant", "alpha", "beta", "value", "leading_order"}, {}};
  const BetaVariant v = parse_beta_variant(o.variant);
  const LocalDim q{o.q};
  for (int n : o.sizes())
    t.rows.push_back({std::int64_t{n}, std::int64_t{o.q}, o.eps, std::string(beta_variant_name(v)),
                      brickwork_alpha(n, q), brickwork_beta(n, q, v), design_depth_formula(n, q, o.eps, v),
                      leading_order_depth(n, q, o.eps)});
  return t;
}

Table cmd_bounds(const Options& o) {
  Table t{{"n", "q", "epsilon", "dalzell_brickwork_depth", "dalzell_general", "dalzell_general_relaxed",
           "dalzell_general_quoted", "bridge_gates", "bridge_gates_exact", "disconnection_half"},
          {}};
  const LocalDim q{o.q};
  for (int n : o.sizes())
    t.rows.push_back({std::int64_t{n}, std::int64_t{o.q}, o.eps, dalzell_brickwork_bound(n, q, o.eps),
                      dalzell_general_bound(n, q, o.eps), dalzell_general_relaxed(n, q, o.eps),
                      dalzell_general_quoted(n, o.eps), bridge_gate_bound(n, o.eps), bridge_gate_bound_exact(n, o.eps),
                      disconnection_error_bound(1.0, n / 2, n, q)});
  return t;
}

Table cmd_oracle_check(const Options& o, bool& mismatch) {
  Table t{{"n", "step", "engine", "choi", "sector", "max_rel_diff"}, {}};
  for (int n : o.sizes()) {
    const EnsembleSpec spec = o.spec(n);
    const std::vector<int> steps =
        spec.kind == EnsembleKind::single_site ? std::vector<int>{0} : o.step_list("1:5");
    for (int s : steps) {
      const double engine = multiplicative_error(spec, s, o.engine()).value;
      const auto oracle = oracle_errors(spec, s);
      auto rel = [](double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-5}); };
      const double diff = std::max({rel(engine, oracle.choi), rel(engine, oracle.sector), rel(oracle.choi, oracle.sector)});
      if (diff > 1e-8) mismatch = true;
      t.rows.push_back({std::int64_t{n}, std::int64_t{s}, engine, oracle.choi, oracle.sector, diff});
    }
  }
  return t;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Exact second-moment multiplicative errors of random circuit ensembles"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--family", o.family, "graph family or singles, brickwork-obc, brickwork-pbc, pcg, pb, pbfe");
    sub->add_option("--graph", o.graph, "graph JSON file {\"n\": int, \"edges\": [[i, j], ...]}");
    sub->add_option("--n", o.n, "site count or range a:b[:stride]");
    sub->add_option("--q", o.q, "local dimension");
    sub->add_option("--eps", o.eps, "target multiplicative error");
    sub->add_option("--steps", o.steps, "gate counts a:b[:stride]");
    sub->add_option("--layers", o.layers, "layer counts a:b[:stride]");
    sub->add_option("--realizations", o.realizations, "realizations for matching ensembles");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--threads", o.threads, "worker threads (results do not depend on it)");
    sub->add_option("--out", o.out, "output file (default stdout)");
    sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--arity", o.arity, "tree arity");
    sub->add_option("--degree", o.degree, "random regular degree");
    sub->add_option("--graph-seed", o.graph_seed, "random regular graph seed");
    sub->add_flag("--no-symmetry", o.no_symmetry, "evaluate every experiment separately");
  };
  std::map<std::string, CLI::App*> subs;
  for (const char* name : {"error-curve", "depth", "sweep", "connections", "formula", "bounds", "oracle-check"}) {
    subs[name] = app.add_subcommand(name);
    add_common(subs[name]);
  }
  subs["depth"]->add_option("--kind", o.kind, "mult or coll");
  subs["depth"]->add_option("--max-steps", o.max_steps, "give up (exit 3) beyond this many steps");
  subs["depth"]->add_option("--experiment", o.experiment, "fixed experiment bit string, e.g. 1001");
  subs["connections"]->add_option("--samples", o.samples, "Monte Carlo samples");
  subs["formula"]->add_option("--variant", o.variant, "entangled_boundaries or collision");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config;
  }

  std::string command;
  for (const auto& [name, sub] : subs)
    if (sub->parsed()) command = name;
  try {
    if (o.threads < 1) throw ConfigError("--threads must be >= 1");
    bool mismatch = false;
    Table t;
    if (command == "error-curve") t = cmd_error_curve(o);
    else if (command == "depth") t = cmd_depth(o);
    else if (command == "sweep") t = cmd_sweep(o);
    else if (command == "connections") t = cmd_connections(o);
    else if (command == "formula") t = cmd_formula(o);
    else if (command == "bounds") t = cmd_bounds(o);
    else t = cmd_oracle_check(o, mismatch);
    const json config = o.to_json(command);
    if (o.out.empty()) {
      write_table(t, config, o.format, out);
    } else {
      std::ofstream f(o.out);
      if (!f) throw ConfigError("cannot open output file " + o.out);
      write_table(t, config, o.format, f);
    }
    if (mismatch) {
      err << "oracle mismatch above relative tolerance 1e-8\n";
      return exit_oracle_mismatch;
    }
    return exit_ok;
  } catch (const UnreachedError& e) {
    err << "error: " << e.what() << "\n";
    return exit_unreached;
  } catch (const OracleMismatch& e) {
    err << "error: " << e.what() << "\n";
    return exit_oracle_mismatch;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return exit_config;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << "\n";
    return exit_config;
  }
}

}  // namespace twodesign
