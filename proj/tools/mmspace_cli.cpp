// mmspace: command-line front end.
//
// Exit codes: 0 success, 1 domain error (invalid input, over a size cap),
// 2 usage error, 3 an experiment assertion failed.

#include "mmspace/excursion.hpp"
#include "mmspace/gp_box.hpp"
#include "mmspace/harness.hpp"
#include "mmspace/io.hpp"
#include "mmspace/mm_space.hpp"
#include "mmspace/prohorov.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <charconv>
#include <vector>

namespace {

using namespace mmspace;
using io::json;

struct experiment_failed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct global_flags {
  bool rational = false;
  bool floating = false;
  std::size_t threads = 1;
  std::uint64_t seed = 42;
  std::string out;
  bool raw = false;
};

global_flags flags;
std::string current_op = "mmspace";

void emit(const json& doc, const std::string& raw_value) {
  if (flags.raw && !raw_value.empty()) {
    io::write_text(flags.out, raw_value + "\n");
    return;
  }
  io::write_text(flags.out, io::dump(doc));
}

json result_json(const std::string& op, const Rational& v) {
  return {{"operation", op}, {"value", io::value_json(v)}};
}

json result_json(const std::string& op, double v) { return {{"operation", op}, {"value", io::value_json(v)}}; }

/// Shortest decimal that reads back as the same double.
std::string shortest(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void summary(const std::string& text) { std::cerr << text << "\n"; }

mm_space load_space(const std::string& path) { return io::space_from_json(io::read_json_file(path), path); }

mm_space load_valid_space(const std::string& path) {
  mm_space s = load_space(path);
  if (auto v = validate(s); !v.empty()) throw domain_error(path + ": " + v.front().describe());
  return s;
}

excursion load_excursion(const std::string& path) {
  return io::excursion_from_json(io::read_json_file(path), path);
}

Rational parse_option_rational(const std::string& text, const std::string& name) {
  try {
    return parse_rational(text);
  } catch (const parse_error& e) {
    throw CLI::ValidationError(name, e.what());
  }
}

/// "0:0,1:1" or a JSON array [[0,0],[1,1]].
std::vector<point_pair> parse_pairs(const std::string& text) {
  if (!text.empty() && text.front() == '[') {
    try {
      return io::pairs_from_json(json::parse(text), "--k");
    } catch (const json::parse_error& e) {
      throw io::format_error(std::string("--k: malformed JSON: ") + e.what());
    }
  }
  std::vector<point_pair> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    auto colon = item.find(':');
    if (colon == std::string::npos) throw io::format_error("--k: expected i:j pairs, got '" + item + "'");
    try {
      out.emplace_back(std::stoul(item.substr(0, colon)), std::stoul(item.substr(colon + 1)));
    } catch (const std::logic_error&) {
      throw io::format_error("--k: expected nonnegative integers in '" + item + "'");
    }
  }
  return out;
}

void finish_experiment(const experiment_report& rep, const std::string& csv_path) {
  emit(rep.to_json(), "");
  if (!csv_path.empty()) io::write_text(csv_path, rep.table_csv());
  summary(rep.experiment + ": " + std::to_string(rep.instances.size()) + " instances, " +
          std::to_string(rep.failures()) + " failed assertions");
  if (!rep.passed()) throw experiment_failed(rep.experiment + ": assertion failures");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact distances between finite metric measure spaces and coded trees"};
  app.name("mmspace");
  app.require_subcommand(1);
  app.fallthrough();

  auto* rational_flag = app.add_flag("--rational", flags.rational, "Exact rational arithmetic (default)");
  auto* float_flag = app.add_flag("--float", flags.floating, "Floating-point arithmetic for dist prohorov|gp|box");
  rational_flag->excludes(float_flag);
  app.add_option("--threads", flags.threads, "Worker threads for experiments")->envname("MMSPACE_THREADS")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", flags.seed, "Random seed");
  app.add_option("--out", flags.out, "Write the result here instead of stdout");
  app.add_flag("--raw", flags.raw, "Print only the bare value");

  // dist ---------------------------------------------------------------------
  auto* dist = app.add_subcommand("dist", "Distances");
  dist->require_subcommand(1);

  std::string space_path, mu_path, nu_path, method = "flow";
  auto* prohorov_cmd = dist->add_subcommand("prohorov", "Prohorov distance of two measures on one space");
  prohorov_cmd->add_option("--space", space_path, "mmspace/1 file (its weights are ignored)")->required();
  prohorov_cmd->add_option("--mu", mu_path, "measure/1 file or bare weight array")->required();
  prohorov_cmd->add_option("--nu", nu_path, "measure/1 file or bare weight array")->required();
  prohorov_cmd->add_option("--method", method)->check(CLI::IsMember({"flow", "bruteforce"}));
  prohorov_cmd->callback([&] {
    current_op = "dist prohorov";
    mm_space s = load_space(space_path);
    auto mu = io::measure_from_json(io::read_json_file(mu_path), mu_path);
    auto nu = io::measure_from_json(io::read_json_file(nu_path), nu_path);
    common_space_measures cm{s.dist, mu, nu};
    if (auto v = validate(cm); !v.empty()) throw domain_error(v.front());
    if (flags.floating) {
      basic_common_space_measures<double> cf{to_float(s).dist, {}, {}};
      for (const auto& w : mu) cf.mu.push_back(w.get_d());
      for (const auto& w : nu) cf.nu.push_back(w.get_d());
      double v = method == "flow" ? prohorov_flow(cf) : prohorov_bruteforce(cf);
      emit(result_json("prohorov", v), shortest(v));
      return;
    }
    Rational v = method == "flow" ? prohorov_flow(cm) : prohorov_bruteforce(cm);
    json doc = result_json("prohorov", v);
    doc["method"] = method;
    emit(doc, to_string(v));
    summary("d_Pr = " + to_string(v) + " (" + to_decimal(v, 6) + ")");
  });

  std::string a_path, b_path, mode = "exact", lambda_text = "1/2";
  std::size_t max_pairs = 20;
  auto* gp_cmd = dist->add_subcommand("gp", "Gromov-Prohorov distance");
  gp_cmd->add_option("--a", a_path)->required();
  gp_cmd->add_option("--b", b_path)->required();
  gp_cmd->add_option("--mode", mode, "exact: box formula; bound: gluing search upper bound")
      ->check(CLI::IsMember({"exact", "bound"}));
  gp_cmd->add_option("--max-pairs", max_pairs, "Exact-search cap on positive-mass pairs (<= 64)");
  gp_cmd->callback([&] {
    current_op = "dist gp";
    mm_space a = load_valid_space(a_path), b = load_valid_space(b_path);
    box_options bo;
    bo.max_pairs = max_pairs;
    bo.seed = flags.seed;
    if (mode == "bound") {
      glue_search gs;
      gs.seed = flags.seed;
      gs.max_pairs = max_pairs;
      auto g = glued_upper_bound(a, b, gs);
      json doc = result_json("gp", g.value);
      doc["mode"] = "bound";
      doc["pairs"] = io::pairs_json(g.pairs);
      doc["eps"] = io::value_json(g.eps);
      doc["gluings_tried"] = g.gluings_tried;
      emit(doc, to_string(g.value));
      summary("d_GP <= " + to_string(g.value));
      return;
    }
    if (flags.floating) {
      auto r = gromov_prohorov(to_float(a), to_float(b), bo);
      json doc = result_json("gp", r.value);
      doc["exact_search"] = r.exact;
      emit(doc, shortest(r.value));
      return;
    }
    auto r = gromov_prohorov(a, b, bo);
    json doc = result_json("gp", r.value);
    doc["mode"] = "exact";
    doc["exact_search"] = r.exact;
    doc["optimal"] = io::to_json(r.optimal);
    emit(doc, to_string(r.value));
    summary(std::string(r.exact ? "d_GP = " : "d_GP <= ") + to_string(r.value) + " (" + to_decimal(r.value, 6) + ")");
  });

  auto* box_cmd = dist->add_subcommand("box", "Box distance box_lambda");
  box_cmd->add_option("--a", a_path)->required();
  box_cmd->add_option("--b", b_path)->required();
  box_cmd->add_option("--lambda", lambda_text, "Positive rational")->required();
  box_cmd->add_option("--max-pairs", max_pairs, "Exact-search cap on positive-mass pairs (<= 64)");
  box_cmd->callback([&] {
    current_op = "dist box";
    mm_space a = load_valid_space(a_path), b = load_valid_space(b_path);
    Rational lambda = parse_option_rational(lambda_text, "--lambda");
    box_options bo;
    bo.max_pairs = max_pairs;
    bo.seed = flags.seed;
    if (flags.floating) {
      auto r = box_lambda(to_float(a), to_float(b), lambda.get_d(), bo);
      emit(result_json("box", r.value), shortest(r.value));
      return;
    }
    auto r = box_lambda(a, b, lambda, bo);
    json doc = result_json("box", r.value);
    doc["lambda"] = to_string(lambda);
    doc["exact_search"] = r.exact;
    doc["optimal"] = io::to_json(r.optimal);
    emit(doc, to_string(r.value));
    summary("box_" + to_string(lambda) + " = " + to_string(r.value));
  });

  double gamma_tol = 1e-9;
  auto* exc_cmd = dist->add_subcommand("excursion", "Excursion metric d_Gamma + d_lambda");
  exc_cmd->add_option("--a", a_path)->required();
  exc_cmd->add_option("--b", b_path)->required();
  exc_cmd->add_option("--gamma-tol", gamma_tol)->check(CLI::PositiveNumber);
  exc_cmd->callback([&] {
    current_op = "dist excursion";
    excursion h = load_excursion(a_path), g = load_excursion(b_path);
    gamma_options go;
    go.tolerance = gamma_tol;
    auto gamma = d_gamma(h, g, go);
    Rational lambda = d_lambda(h, g);
    auto total = d_excursion(h, g, go);
    auto certified = [](const certified_distance& d) {
      json j{{"lo", d.lo}, {"hi", d.hi}, {"converged", d.converged}};
      if (d.exact) j["exact"] = io::value_json(*d.exact);
      if (d.exact_square) j["exact_square"] = to_string(*d.exact_square);
      return j;
    };
    json doc{{"operation", "excursion"},
             {"d_lambda", io::value_json(lambda)},
             {"d_gamma", certified(gamma)},
             {"d_excursion", certified(total)},
             {"gamma_tol", gamma_tol}};
    emit(doc, total.exact ? to_string(*total.exact) : shortest(total.midpoint()));
    summary("d_E in [" + shortest(total.lo) + ", " + shortest(total.hi) + "]");
    if (!total.converged) summary("warning: d_Gamma tolerance not reached within the evaluation budget");
  });

  std::string in_path, s_text, t_text;
  auto* dh_cmd = dist->add_subcommand("dh", "Tree distance d_h(s, t)");
  dh_cmd->add_option("--in", in_path)->required();
  dh_cmd->add_option("--s", s_text)->required();
  dh_cmd->add_option("--t", t_text)->required();
  dh_cmd->callback([&] {
    current_op = "dist dh";
    excursion h = load_excursion(in_path);
    Rational s = parse_option_rational(s_text, "--s"), t = parse_option_rational(t_text, "--t");
    Rational v = dh(h, s, t);
    json doc = result_json("dh", v);
    doc["s"] = to_string(s);
    doc["t"] = to_string(t);
    emit(doc, to_string(v));
  });

  // glue ---------------------------------------------------------------------
  std::string k_text, eps_text;
  bool check = false;
  auto* glue_cmd = app.add_subcommand("glue", "Glue two spaces along a correspondence");
  glue_cmd->add_option("--a", a_path)->required();
  glue_cmd->add_option("--b", b_path)->required();
  glue_cmd->add_option("--k", k_text, "Pairs as i:j,i:j or [[i,j],...] (0-based)")->required();
  glue_cmd->add_option("--eps", eps_text)->required();
  glue_cmd->add_flag("--check", check, "Report the triangle check and the Prohorov distance in the glued space");
  glue_cmd->callback([&] {
    current_op = "glue";
    mm_space a = load_valid_space(a_path), b = load_valid_space(b_path);
    Rational eps = parse_option_rational(eps_text, "--eps");
    auto k = parse_pairs(k_text);
    auto g = build_glued_space(a, b, k, eps);
    json doc{{"operation", "glue"}, {"glued", io::to_json(g)}, {"eps", to_string(eps)}, {"pairs", io::pairs_json(k)}};
    std::string raw;
    if (check) {
      doc["triangle_violations"] = check_triangle(g).size();
      Rational pr = prohorov_flow(glued_measures(g, a, b));
      doc["prohorov"] = io::value_json(pr);
      raw = to_string(pr);
      summary("d_Pr in the glued space = " + raw);
    }
    emit(doc, raw);
  });

  // code-excursion -------------------------------------------------------------
  long mesh = 0;
  auto* code_cmd = app.add_subcommand("code-excursion", "Finite tree coded by an excursion");
  code_cmd->add_option("--in", in_path)->required();
  code_cmd->add_option("--mesh", mesh, "Add resolution points j/mesh")->check(CLI::NonNegativeNumber);
  code_cmd->callback([&] {
    current_op = "code-excursion";
    excursion h = load_excursion(in_path);
    std::vector<Rational> res;
    for (long j = 1; j < mesh; ++j) res.push_back(ratio(j, mesh));
    auto tree = code_excursion(h, res);
    json doc = io::to_json(tree.space);
    doc["approximation_bound"] = to_string(tree.approximation_bound);
    doc["cuts"] = io::rational_array(tree.cuts);
    doc["segment_point"] = tree.segment_point;
    emit(doc, "");
    summary(std::to_string(tree.space.size()) + " tree points, approximation bound " +
            to_string(tree.approximation_bound));
  });

  // experiment -------------------------------------------------------------------
  auto* exp = app.add_subcommand("experiment", "Seeded experiments with JSON reports");
  exp->require_subcommand(1);
  std::string csv_path;
  std::size_t count = 0, n_max = 3;
  bool no_pinned = false, no_glue = false;

  auto* thm = exp->add_subcommand("theorem-check", "d_GP against gluings, the corollary chain, monotonicity");
  thm->add_option("--count", count, "Random pairs (default 200)");
  thm->add_option("--n-max", n_max, "Points per space");
  thm->add_flag("--no-pinned", no_pinned, "Omit the closed-form instance");
  thm->add_flag("--no-glue", no_glue, "Skip the gluing search");
  thm->callback([&] {
    current_op = "experiment theorem-check";
    theorem_check_options o;
    o.seed = flags.seed;
    o.count = count ? count : 200;
    o.n_max = n_max;
    o.pinned = !no_pinned;
    o.glue = !no_glue;
    o.threads = flags.threads;
    finish_experiment(run_theorem_check(o), csv_path);
  });

  auto* lip = exp->add_subcommand("lipschitz", "d_GP of coded trees against 2 sup|h - g|");
  lip->add_option("--count", count, "Random pairs (default 100)");
  lip->callback([&] {
    current_op = "experiment lipschitz";
    lipschitz_options o;
    o.seed = flags.seed;
    o.count = count ? count : 100;
    o.threads = flags.threads;
    finish_experiment(run_lipschitz_check(o), csv_path);
  });

  std::vector<std::size_t> n_list{2, 3, 4, 6, 8};
  auto* cex = exp->add_subcommand("counterexample", "The h_n table");
  cex->add_option("--n-list", n_list, "Values of n")->delimiter(',');
  cex->add_option("--csv", csv_path, "Also write the table as CSV");
  cex->callback([&] {
    current_op = "experiment counterexample";
    counterexample_options o;
    o.n_list = n_list;
    o.threads = flags.threads;
    finish_experiment(run_counterexample(o), csv_path);
  });

  std::string schedule = "value";
  unsigned k_max = 10;
  auto* cont = exp->add_subcommand("continuity", "Perturbation sequences g_k -> h");
  cont->add_option("--in", in_path, "Excursion file (default: the tent)");
  cont->add_option("--schedule", schedule)->check(CLI::IsMember({"none", "value", "breakpoint"}));
  cont->add_option("--k-max", k_max)->check(CLI::Range(1u, 30u));
  cont->add_option("--mesh", mesh, "Resolution j/mesh for piecewise-linear h (default 4)");
  cont->callback([&] {
    current_op = "experiment continuity";
    excursion h = in_path.empty() ? tent() : load_excursion(in_path);
    continuity_options o;
    o.seed = flags.seed;
    o.schedule = schedule == "none"    ? jitter_kind::none
                 : schedule == "value" ? jitter_kind::value
                                       : jitter_kind::breakpoint;
    o.k_max = k_max;
    if (mesh > 0) o.mesh = mesh;
    o.threads = flags.threads;
    finish_experiment(run_continuity_check(h, o), csv_path);
  });
  for (auto* sub : {thm, lip, cont}) sub->add_option("--csv", csv_path, "Also write one row per instance as CSV");

  // validate / canonicalize / sample ---------------------------------------------
  auto* val = app.add_subcommand("validate", "Check a space or excursion file");
  val->add_option("--in", in_path)->required();
  val->callback([&] {
    current_op = "validate";
    json doc = io::read_json_file(in_path);
    json out{{"operation", "validate"}, {"file", in_path}};
    json problems = json::array();
    std::string format = doc.is_object() && doc.contains("format") && doc["format"].is_string()
                             ? doc["format"].get<std::string>()
                             : "";
    if (format == "excursion/1") {
      // Shape errors throw; axiom violations are listed.
      const json& kind = io::field(doc, "kind", in_path);
      auto breaks = io::read_rational_array(io::field(doc, "breakpoints", in_path), in_path + ".breakpoints");
      auto values = io::read_rational_array(io::field(doc, "values", in_path), in_path + ".values");
      excursion h;
      if (kind == "pl") {
        h = excursion::piecewise_linear(breaks, values);
      } else if (kind == "pc") {
        std::vector<Rational> at;
        if (doc.contains("breakpoint_values"))
          at = io::read_rational_array(doc["breakpoint_values"], in_path + ".breakpoint_values");
        h = excursion::piecewise_constant(breaks, values, at);
      } else {
        throw io::format_error(in_path + ".kind: expected \"pl\" or \"pc\"");
      }
      for (const auto& v : validate(h)) problems.push_back({{"axiom", "excursion"}, {"detail", v}});
    } else {
      mm_space s = io::space_from_json(doc, in_path);
      for (const auto& v : validate(s))
        problems.push_back({{"axiom", v.axiom}, {"indices", v.indices}, {"detail", v.describe()}});
    }
    out["format"] = format;
    out["violations"] = problems;
    out["valid"] = problems.empty();
    emit(out, problems.empty() ? "valid" : "invalid");
    if (!problems.empty()) throw domain_error(in_path + ": " + problems[0]["detail"].get<std::string>());
  });

  auto* canon = app.add_subcommand("canonicalize", "Drop null points and merge points at distance 0");
  canon->add_option("--in", in_path)->required();
  canon->callback([&] {
    current_op = "canonicalize";
    emit(io::to_json(canonicalize(load_valid_space(in_path))), "");
  });

  std::size_t sample_n = 3;
  std::string diam_text = "2";
  auto* sample = app.add_subcommand("sample", "Random valid canonical space");
  sample->add_option("--n-max", sample_n)->check(CLI::PositiveNumber);
  sample->add_option("--diam-max", diam_text);
  sample->callback([&] {
    current_op = "sample";
    emit(io::to_json(sample_mm_space(flags.seed, sample_n, parse_option_rational(diam_text, "--diam-max"))), "");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const experiment_failed& e) {
    std::cerr << current_op << ": " << e.what() << "\n";
    return 3;
  } catch (const std::logic_error& e) {
    std::cerr << current_op << ": internal error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << current_op << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
