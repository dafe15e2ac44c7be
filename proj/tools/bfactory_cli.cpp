// bfactory: command-line front end for building, evaluating and testing factories.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "bfactory/faces.hpp"
#include "bfactory/harness.hpp"
#include "bfactory/lattice.hpp"
#include "bfactory/polytope.hpp"
#include "bfactory/sampford.hpp"
#include "bfactory/subdomain.hpp"

namespace bf = bfactory;

namespace {

enum ExitCode : int { kPass = 0, kFail = 1, kUsage = 2, kResource = 3 };

struct Globals {
  std::uint64_t seed = 1;
  std::uint64_t trials = 100000;
  std::optional<std::uint64_t> budget;
  unsigned mesh = 8;
  bool json = false;
  bool csv = false;
  unsigned threads = 0;
};

// Inline JSON, a path to a JSON file, or (for vectors) a comma list like "1/2,1/3".
bf::Json json_argument(const std::string& text) {
  if (!text.empty() && (text.front() == '{' || text.front() == '[')) return bf::parse_json(text);
  if (std::filesystem::exists(text)) return bf::load_json_file(text);
  throw bf::UsageError("'" + text + "' is neither JSON nor a readable file");
}

bf::RationalVector point_argument(const std::string& text) {
  if (!text.empty() && text.front() != '{' && text.front() != '[' && !std::filesystem::exists(text)) {
    bf::RationalVector p;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) p.push_back(bf::parse_rational(item));
    return p;
  }
  bf::Json j = json_argument(text);
  return bf::rational_vector_from_json(j.is_object() ? j.at("p") : j);
}

// "cube:3", "k-subset:3,2", "birkhoff:2", inline JSON or a file.
bf::AffineCubeDomain domain_argument(const std::string& text) {
  auto colon = text.find(':');
  if (colon != std::string::npos && text.front() != '{') {
    std::string kind = text.substr(0, colon);
    std::vector<std::size_t> args;
    std::stringstream ss(text.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) args.push_back(std::stoul(item));
    if (kind == "cube" && args.size() == 1) return bf::AffineCubeDomain::cube(args[0]);
    if (kind == "k-subset" && args.size() == 2) return bf::AffineCubeDomain::k_subset(args[0], args[1]);
    if (kind == "birkhoff" && args.size() == 1) return bf::AffineCubeDomain::birkhoff(args[0]);
    throw bf::UsageError("unknown domain shorthand '" + text + "'");
  }
  return bf::AffineCubeDomain::from_json(json_argument(text));
}

struct FunctionArgs {
  std::string name;
  std::string poly;
  std::size_t arity = 1;
};

bf::TargetFunction function_argument(const FunctionArgs& args) {
  if (!args.poly.empty()) return bf::polynomial_from_json(json_argument(args.poly));
  if (args.name.empty()) throw bf::UsageError("give --function or --poly");
  return bf::builtin_function(args.name, args.arity);
}

bf::FlipBudget budget_of(const Globals& g) {
  return g.budget ? bf::FlipBudget(*g.budget) : bf::FlipBudget::unbounded();
}

bf::RunConfig run_config(const Globals& g) { return bf::RunConfig{g.trials, g.seed, budget_of(g), g.threads}; }

bf::ValidityPolicy policy_argument(const std::string& s) {
  if (s == "strict") return bf::ValidityPolicy::kStrict;
  if (s == "record") return bf::ValidityPolicy::kRecord;
  throw bf::UsageError("policy must be strict or record");
}

void print_report(const Globals& g, const bf::TrialReport& report) {
  if (g.json) std::cout << report.to_json().dump(2) << "\n";
  else std::cout << report.to_csv();
}

int report_exit(const bf::TrialReport& report) { return report.chi && !report.chi->pass ? kFail : kPass; }

void note_validity(const bf::LevelEngine& engine) {
  if (std::size_t k = engine.first_invalid_level())
    std::cerr << "note: level function " << k << " leaves [0,1] at some tracked point; " << engine.levels_built()
              << " levels built\n";
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string oracle = "tree";
  std::string tree;
  FunctionArgs fn;
  std::string p;
  std::size_t level = 1;
  std::uint32_t t = 64;
  std::string domain;
  std::size_t k = 2;
};

int run_eval(const Globals& g, const EvalArgs& a) {
  bf::RationalVector p = point_argument(a.p);
  bf::Json out;
  std::vector<std::pair<std::string, bf::Rational>> table;
  if (a.oracle == "tree") {
    auto tree = bf::FiniteTree::from_json(json_argument(a.tree));
    table.emplace_back("P[1]", bf::exact_eval(tree, p));
  } else if (a.oracle == "fk") {
    auto f = function_argument(a.fn);
    table.emplace_back("f_" + std::to_string(a.level),
                       bf::fk_eval(a.level, p, bf::LevelSchedule::constant(a.t, std::max<std::size_t>(a.level, 1)), f));
  } else if (a.oracle == "fv") {
    auto polytope = bf::Polytope::from_domain(domain_argument(a.domain));
    auto values = bf::f_v(polytope, p);
    for (std::size_t v = 0; v < values.size(); ++v) table.emplace_back(bf::to_string(polytope.vertices()[v]), values[v]);
  } else if (a.oracle == "fU" || a.oracle == "fbar") {
    for (const auto& u : bf::k_subsets(p.size(), a.k))
      table.emplace_back(bf::subset_label(u), a.oracle == "fU" ? bf::f_U(p, u) : bf::fbar_U(p, u));
  } else {
    throw bf::UsageError("unknown oracle '" + a.oracle + "'");
  }
  if (g.json) {
    bf::Json rows = bf::Json::array();
    for (const auto& [label, value] : table) rows.push_back({{"key", label}, {"value", bf::to_json(value)}});
    std::cout << bf::Json{{"oracle", a.oracle}, {"p", bf::to_json(p)}, {"values", rows}}.dump(2) << "\n";
  } else {
    std::cout << "key,value\n";
    for (const auto& [label, value] : table) std::cout << "\"" << label << "\"," << bf::to_string(value) << "\n";
  }
  return kPass;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string tree;
  FunctionArgs fn;
  std::string program;
  std::string p;
  std::uint32_t t = 64;
  std::size_t max_level = 200;
  std::string domain;
  std::string eps = "1/16";
  std::string policy = "record";
};

int run_simulate(const Globals& g, const SimulateArgs& a) {
  bf::RationalVector p = point_argument(a.p);
  bf::TrialReport report;
  bf::Rational target;
  std::shared_ptr<bf::LevelEngine> engine;
  if (!a.tree.empty()) {
    auto tree = bf::FiniteTree::from_json(json_argument(a.tree));
    target = bf::exact_eval(tree, p);
    report = bf::run_trials("tree", bf::program_sampler(bf::Program::finite(tree)), p, run_config(g));
  } else if (!a.program.empty()) {
    if (a.program != "ratio-retry") throw bf::UsageError("unknown program '" + a.program + "'");
    if (p.size() != 2 || p[0] + p[1] == 0) throw bf::UsageError("ratio-retry needs two coins, not both zero");
    target = p[0] / (p[0] + p[1]);
    report = bf::run_trials(a.program, bf::program_sampler(bf::ratio_retry(0, 1)), p, run_config(g));
  } else {
    auto fn = a.fn;
    fn.arity = p.size();
    auto f = function_argument(fn);
    target = f(p);
    auto schedule = bf::LevelSchedule::constant(a.t, a.max_level);
    auto policy = policy_argument(a.policy);
    engine = a.domain.empty() ? bf::cube_engine(f, schedule, policy)
                              : bf::subdomain_engine(f, domain_argument(a.domain), schedule,
                                                     bf::parse_rational(a.eps), policy);
    report = bf::run_trials(f.name, bf::program_sampler(bf::engine_program(engine, f.name)), p, run_config(g));
  }
  bf::attach_oracle(report, {{"0", 1 - target}, {"1", target}});
  print_report(g, report);
  if (engine) note_validity(*engine);
  return report_exit(report);
}

// ---------------------------------------------------------------------------
// verify

struct VerifyArgs {
  std::string check = "poly-bounded";
  FunctionArgs fn;
  std::string tree;
  std::string c = "1";
  unsigned m = 1;
  bool both = false;
  std::string domain;
  std::uint32_t t = 64;
  std::string eps = "1/4";
  std::string p;
  unsigned events = 50;
};

int run_verify(const Globals& g, const VerifyArgs& a) {
  bf::Json out;
  bool pass = true;
  if (a.check == "poly-bounded") {
    std::optional<bf::AffineCubeDomain> domain;
    if (!a.domain.empty()) domain = domain_argument(a.domain);
    bf::TargetFunction f;
    std::optional<std::vector<bf::BernsteinMonomial>> monos;
    if (!a.tree.empty()) {
      auto tree = bf::FiniteTree::from_json(json_argument(a.tree));
      std::size_t n = domain ? domain->n() : std::max<std::size_t>(tree.arity(), 1);
      monos = bf::leaf_monomials(tree, n);
      f = bf::TargetFunction{n, [tree](const bf::RationalVector& x) { return bf::exact_eval(tree, x); }, "tree"};
    } else {
      auto fn = a.fn;
      if (domain) fn.arity = domain->n();
      f = function_argument(fn);
    }
    bf::BoundCertificate cert(bf::parse_rational(a.c), a.m);
    bf::PolyBoundOptions options{domain ? &*domain : nullptr, monos ? &*monos : nullptr};
    auto report = bf::check_poly_bounded(f, cert, g.mesh, options);
    out = {{"check", a.check}, {"f", report.to_json()}};
    pass = report.pass;
    if (a.both) {
      options.monomials = nullptr;
      auto rc = bf::check_poly_bounded(bf::complement(f), cert, g.mesh, options);
      out["one_minus_f"] = rc.to_json();
      pass = pass && rc.pass;
    }
  } else if (a.check == "1d") {
    auto report = bf::check_1d(function_argument(a.fn), a.m, g.mesh);
    out = {{"check", a.check}, {"report", report.to_json()}};
    pass = report.pass;
  } else if (a.check == "certificate") {
    auto report = bf::certificate_check(function_argument(a.fn), a.t, g.mesh);
    out = {{"check", a.check},
           {"holds", report.holds},
           {"points_checked", report.points_checked},
           {"worst_point", bf::to_json(report.worst_point)},
           {"worst_margin", bf::to_json(report.worst_margin)},
           {"worst_is_complement", report.worst_is_complement}};
    pass = report.holds;
  } else if (a.check == "lemma52") {
    auto domain = domain_argument(a.domain);
    bf::RationalVector p = point_argument(a.p);
    bf::Rational eps = bf::parse_rational(a.eps);
    bf::Json runs = bf::Json::array();
    for (unsigned e = 0; e < a.events; ++e) {
      std::uint64_t salt = bf::derive_seed(g.seed, e);
      auto event = [salt](const bf::LatticePoint& x) {
        std::uint64_t h = salt;
        for (auto c : x.counts) h = bf::splitmix64(h ^ c);
        return (h & 1U) != 0;
      };
      auto r = bf::lemma52_check(domain, p, a.t, eps, event);
      runs.push_back({{"event", e},
                      {"conditioned", bf::to_json(r.conditioned)},
                      {"unconditioned", bf::to_json(r.unconditioned)},
                      {"precondition", r.precondition},
                      {"holds", r.holds}});
      pass = pass && r.holds;
    }
    out = {{"check", a.check}, {"runs", runs}};
  } else if (a.check == "lemma71") {
    std::optional<bf::Polytope> polytope;
    bf::Json j = a.domain.find(':') != std::string::npos && a.domain.front() != '{' ? bf::Json() : json_argument(a.domain);
    if (j.is_object() && j.contains("vertices")) {
      std::vector<bf::RationalVector> vs;
      for (const auto& v : j.at("vertices")) vs.push_back(bf::rational_vector_from_json(v));
      polytope = bf::Polytope::from_vertices(std::move(vs));
    } else {
      polytope = bf::Polytope::from_domain(domain_argument(a.domain));
    }
    auto r = bf::lemma71_check(*polytope);
    out = {{"check", a.check}, {"holds", r.holds}, {"pairs", r.pairs.size()}};
    if (r.counterexample)
      out["counterexample"] = {{"vertex", bf::to_json(polytope->vertices()[r.counterexample->vertex])},
                               {"facet", polytope->facets()[r.counterexample->facet].vertices}};
    pass = r.holds;
  } else {
    throw bf::UsageError("unknown check '" + a.check + "'");
  }
  out["pass"] = pass;
  std::cout << out.dump(2) << "\n";
  return pass ? kPass : kFail;
}

// ---------------------------------------------------------------------------
// polytope

struct PolytopeArgs {
  std::string domain;
  std::string action = "vertices";
  std::string p;
  std::uint32_t t = 16;
  std::size_t max_level = 200;
  std::string eps = "1/8";
  std::string policy = "record";
};

int run_polytope(const Globals& g, const PolytopeArgs& a) {
  auto polytope = bf::Polytope::from_domain(domain_argument(a.domain));
  const auto& V = polytope.vertices();
  if (a.action == "vertices") {
    std::cout << "index,vertex\n";
    for (std::size_t v = 0; v < V.size(); ++v) std::cout << v << ",\"" << bf::to_string(V[v]) << "\"\n";
  } else if (a.action == "facets") {
    std::cout << "facet,constraint,vertices\n";
    for (std::size_t f = 0; f < polytope.facets().size(); ++f) {
      const auto& facet = polytope.facets()[f];
      std::string constraint =
          facet.constraint ? "x" + std::to_string(facet.constraint->coordinate + 1) + "=" +
                                 std::to_string(facet.constraint->value)
                           : "";
      std::string members;
      for (auto v : facet.vertices) members += (members.empty() ? "" : " ") + std::to_string(v);
      std::cout << f << "," << constraint << "," << members << "\n";
    }
  } else if (a.action == "triangulation") {
    std::cout << "apex,simplices\n";
    for (std::size_t w = 0; w < V.size(); ++w)
      std::cout << w << "," << bf::fan_triangulation(polytope, w).simplices.size() << "\n";
  } else if (a.action == "fv") {
    auto values = bf::f_v(polytope, point_argument(a.p));
    std::cout << "vertex,f_v\n";
    for (std::size_t v = 0; v < V.size(); ++v)
      std::cout << "\"" << bf::to_string(V[v]) << "\"," << bf::to_string(values[v]) << "\n";
  } else if (a.action == "sample") {
    bf::RationalVector p = point_argument(a.p);
    auto factory = bf::combinatorial_factory(polytope, bf::LevelSchedule::constant(a.t, a.max_level),
                                             bf::parse_rational(a.eps), policy_argument(a.policy));
    auto sampler = [&](bf::CoinSource& source, const bf::FlipBudget& budget) {
      auto r = factory.run(source, budget);
      bf::TrialOutcome o;
      o.flips = r.flips_used;
      if (r.index) o.label = bf::to_string(V[*r.index]);
      return o;
    };
    auto report = bf::run_trials("combinatorial", sampler, p, run_config(g));
    auto oracle = bf::f_v(polytope, p);
    std::vector<std::pair<std::string, bf::Rational>> rows;
    for (std::size_t v = 0; v < V.size(); ++v) rows.emplace_back(bf::to_string(V[v]), oracle[v]);
    bf::attach_oracle(report, rows);
    print_report(g, report);
    for (const auto& e : factory.engines()) note_validity(*e);
    return report_exit(report);
  } else {
    throw bf::UsageError("unknown polytope action '" + a.action + "'");
  }
  return kPass;
}

// ---------------------------------------------------------------------------
// sampford

struct SampfordArgs {
  std::string p;
  std::size_t k = 2;
  std::string mode = "classic";
  std::uint32_t t = 32;
  std::size_t max_level = 200;
  std::string eps = "1/16";
  std::string policy = "record";
};

int run_sampford(const Globals& g, const SampfordArgs& a) {
  bf::RationalVector p = point_argument(a.p);
  const std::size_t n = p.size();
  std::optional<bf::BoundarySampford> boundary;
  if (a.mode == "boundary")
    boundary.emplace(n, a.k, bf::LevelSchedule::constant(a.t, a.max_level), bf::parse_rational(a.eps),
                     policy_argument(a.policy));
  else if (a.mode != "classic" && a.mode != "naive")
    throw bf::UsageError("mode must be classic, boundary or naive");
  auto sampler = [&](bf::CoinSource& source, const bf::FlipBudget& budget) {
    bf::SubsetOutcome s = a.mode == "classic" ? bf::classic_sampford(source, a.k, budget)
                          : a.mode == "naive" ? bf::naive_sampford(source, a.k, budget)
                                              : boundary->run(source, budget);
    bf::TrialOutcome o;
    o.flips = s.flips_used;
    if (s.subset) o.label = bf::subset_label(*s.subset);
    return o;
  };
  auto report = bf::run_trials("sampford-" + a.mode, sampler, p, run_config(g));
  // Oracle: fbar on the k-subset domain, otherwise the classic f_U.
  bf::Rational sum = 0;
  for (const auto& x : p) sum += x;
  std::vector<std::pair<std::string, bf::Rational>> oracle;
  try {
    for (const auto& u : bf::k_subsets(n, a.k))
      oracle.emplace_back(bf::subset_label(u), sum == static_cast<long>(a.k) ? bf::fbar_U(p, u) : bf::f_U(p, u));
  } catch (const bf::DomainError& e) {
    std::cerr << "note: no oracle at this point (" << e.what() << ")\n";
    oracle.clear();
  }
  if (!oracle.empty() && report.completed() > 0) bf::attach_oracle(report, oracle);
  print_report(g, report);
  if (boundary)
    for (const auto& e : boundary->engines()) note_validity(*e);
  return report_exit(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Build, evaluate and test Bernoulli factories"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Base seed for the trial streams")->capture_default_str();
  app.add_option("--trials", g.trials, "Number of independent trials")->capture_default_str();
  app.add_option("--budget", g.budget, "Flip budget per trial (unbounded when absent)");
  app.add_option("--mesh", g.mesh, "Grid mesh denominator d (mesh 1/d)")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0: all cores)")->capture_default_str();
  auto* json_flag = app.add_flag("--json", g.json, "Emit JSON");
  app.add_flag("--csv", g.csv, "Emit CSV (default for tables)")->excludes(json_flag);

  auto add_function = [](CLI::App* cmd, FunctionArgs& fn) {
    cmd->add_option("--function", fn.name, "Built-in target function");
    cmd->add_option("--poly", fn.poly, "Polynomial target (JSON or file)");
    cmd->add_option("--arity", fn.arity, "Arity for built-in functions")->capture_default_str();
  };

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Exact oracles: tree, fk, fv, fU, fbar");
  eval->add_option("--oracle", ea.oracle)->check(CLI::IsMember({"tree", "fk", "fv", "fU", "fbar"}))->capture_default_str();
  eval->add_option("--tree", ea.tree, "Finite tree (JSON or file)");
  add_function(eval, ea.fn);
  eval->add_option("--p", ea.p, "Point: JSON {\"p\": [...]}, file, or comma list")->required();
  eval->add_option("--level", ea.level)->capture_default_str();
  eval->add_option("--t", ea.t)->capture_default_str();
  eval->add_option("--domain", ea.domain, "Domain JSON, file, or cube:n | k-subset:n,k | birkhoff:m");
  eval->add_option("--k", ea.k)->capture_default_str();

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Run trials of a factory and compare with its exact target");
  simulate->add_option("--tree", sa.tree, "Finite tree (JSON or file)");
  simulate->add_option("--program", sa.program, "Named program: ratio-retry");
  add_function(simulate, sa.fn);
  simulate->add_option("--p", sa.p, "True biases")->required();
  simulate->add_option("--t", sa.t, "Flips per coin per level")->capture_default_str();
  simulate->add_option("--max-level", sa.max_level)->capture_default_str();
  simulate->add_option("--domain", sa.domain, "Restrict to a domain (subdomain factory)");
  simulate->add_option("--eps", sa.eps)->capture_default_str();
  simulate->add_option("--policy", sa.policy, "strict | record")->capture_default_str();

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "Desk-scale checks: poly-bounded, 1d, certificate, lemma52, lemma71");
  verify->add_option("--check", va.check)
      ->check(CLI::IsMember({"poly-bounded", "1d", "certificate", "lemma52", "lemma71"}))
      ->capture_default_str();
  add_function(verify, va.fn);
  verify->add_option("--tree", va.tree);
  verify->add_option("--c", va.c)->capture_default_str();
  verify->add_option("--m", va.m)->capture_default_str();
  verify->add_flag("--both", va.both, "Also check 1 - f");
  verify->add_option("--domain", va.domain);
  verify->add_option("--t", va.t)->capture_default_str();
  verify->add_option("--eps", va.eps)->capture_default_str();
  verify->add_option("--p", va.p);
  verify->add_option("--events", va.events)->capture_default_str();

  PolytopeArgs pa;
  auto* polytope = app.add_subcommand("polytope", "Vertices, facets, triangulations, f_v and vertex sampling");
  polytope->add_option("--domain", pa.domain)->required();
  polytope->add_option("--action", pa.action)
      ->check(CLI::IsMember({"vertices", "facets", "triangulation", "fv", "sample"}))
      ->capture_default_str();
  polytope->add_option("--p", pa.p);
  polytope->add_option("--t", pa.t)->capture_default_str();
  polytope->add_option("--max-level", pa.max_level)->capture_default_str();
  polytope->add_option("--eps", pa.eps)->capture_default_str();
  polytope->add_option("--policy", pa.policy)->capture_default_str();

  SampfordArgs fa;
  auto* sampford = app.add_subcommand("sampford", "k-subset sampling with classic, boundary or naive samplers");
  sampford->add_option("--p", fa.p)->required();
  sampford->add_option("--k", fa.k)->required();
  sampford->add_option("--mode", fa.mode)->check(CLI::IsMember({"classic", "boundary", "naive"}))->capture_default_str();
  sampford->add_option("--t", fa.t)->capture_default_str();
  sampford->add_option("--max-level", fa.max_level)->capture_default_str();
  sampford->add_option("--eps", fa.eps)->capture_default_str();
  sampford->add_option("--policy", fa.policy)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  try {
    if (*eval) return run_eval(g, ea);
    if (*simulate) return run_simulate(g, sa);
    if (*verify) return run_verify(g, va);
    if (*polytope) return run_polytope(g, pa);
    if (*sampford) return run_sampford(g, fa);
  } catch (const bf::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const bf::DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kUsage;
  } catch (const bf::ResourceError& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return kResource;
  } catch (const bf::CertificateViolation& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return kFail;
  } catch (const bf::Json::exception& e) {
    std::cerr << "usage error: bad JSON: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
