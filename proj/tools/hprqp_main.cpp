#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hprqp/bench.hpp"
#include "hprqp/engine.hpp"
#include "hprqp/generators.hpp"
#include "hprqp/io.hpp"
#include "hprqp/primal.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

hprqp::CcqpProblem load_problem(const fs::path& input) {
  if (fs::is_directory(input)) return hprqp::read_matrix_bundle(input);
  const std::string ext = input.extension().string();
  if (ext == ".qps" || ext == ".mps" || ext == ".QPS" || ext == ".MPS")
    return hprqp::read_qps_file(input);
  throw hprqp::Error("unrecognized input (expect .qps/.mps or a bundle dir): " +
                     input.string());
}

std::optional<fs::path> output_prefix(const std::string& out_flag,
                                      const std::string& name) {
  if (!out_flag.empty()) return fs::path(out_flag);
  if (const char* dir = std::getenv("HPRQP_OUT_DIR"))
    return fs::path(dir) / name;
  return std::nullopt;
}

void print_summary(const std::string& name, const hprqp::KktReport& r) {
  std::cout << name << ": status=" << hprqp::to_string(r.status)
            << " iters=" << r.iterations << " restarts=" << r.restarts
            << " solve=" << r.solve_seconds << "s data=" << r.data_seconds
            << "s obj=" << r.primal_obj << " gap=" << r.eta_gap
            << " p=" << r.eta_p << " d=" << r.eta_d << "\n";
}

struct SolveFlags {
  double tol = 1e-8;
  double time_limit = 3600.0;
  std::int64_t max_iter = 1'000'000'000;
  double sigma0 = 0.0;
  bool no_scaling = false;
  std::string variant = "dual";
  std::uint64_t seed = 0;
  std::string out;
};

void add_solve_flags(CLI::App* app, SolveFlags& f) {
  app->add_option("--tol", f.tol, "relative KKT tolerance")->check(CLI::PositiveNumber);
  app->add_option("--time-limit", f.time_limit, "seconds")->check(CLI::PositiveNumber);
  app->add_option("--max-iter", f.max_iter, "iteration cap");
  app->add_option("--sigma0", f.sigma0, "fixed initial penalty (default: auto)");
  app->add_flag("--no-scaling", f.no_scaling, "disable preconditioning");
  app->add_option("--variant", f.variant, "dual | primal1 | primal2");
  app->add_option("--seed", f.seed, "random seed");
  app->add_option("--out", f.out, "output prefix for result JSON and trace CSV");
}

hprqp::SolverConfig to_config(const SolveFlags& f) {
  hprqp::SolverConfig cfg;
  cfg.tol = f.tol;
  cfg.time_limit = f.time_limit;
  cfg.max_iter = f.max_iter;
  cfg.sigma0 = f.sigma0;
  cfg.scaling = !f.no_scaling;
  cfg.seed = f.seed;
  return cfg;
}

int cmd_solve(const std::string& input, const SolveFlags& f) {
  hprqp::CcqpProblem prob = load_problem(input);
  const hprqp::SolveResult res =
      hprqp::solve_variant(prob, to_config(f), hprqp::variant_from_string(f.variant));
  print_summary(prob.name, res.report);
  if (auto prefix = output_prefix(f.out, prob.name))
    hprqp::write_results(res.report, res.trace, *prefix);
  return res.report.status == hprqp::Status::Optimal ? 0 : 2;
}

int cmd_gen(const std::string& kind, hprqp::Index n, hprqp::Index m,
            hprqp::Index p, hprqp::Index q, hprqp::Index d, double density,
            const std::string& lambda_rule, std::uint64_t seed,
            const std::string& out) {
  if (out.empty()) throw hprqp::Error("gen requires --out <dir>");
  hprqp::CcqpProblem prob;
  if (kind == "random") {
    const double dens = density > 0.0 ? density : std::min(1.0, 2.0 / static_cast<double>(n));
    prob = hprqp::gen_random_qp(n, m, dens, seed);
  } else if (kind == "lasso") {
    const double dens = density > 0.0 ? density : 0.5;
    const auto rule = lambda_rule == "fifth" ? hprqp::LassoLambdaRule::Fifth
                                             : hprqp::LassoLambdaRule::Thousandth;
    prob = hprqp::lasso_to_cqp(hprqp::gen_lasso(p, q, dens, seed, rule));
  } else if (kind == "qap") {
    if (d > 32)
      throw hprqp::Error("explicit QAP bundles are limited to d <= 32; "
                         "use a bench recipe for matrix-free instances");
    auto gen = hprqp::gen_qap(d, seed);
    // Assemble the operator into explicit sparse form for serialization.
    const hprqp::Index nn = d * d;
    std::vector<hprqp::Triplet> tq;
    hprqp::Vec e = hprqp::Vec::Zero(nn);
    for (hprqp::Index j = 0; j < nn; ++j) {
      e[j] = 1.0;
      const hprqp::Vec col = gen.inst.apply_qhat(e);
      e[j] = 0.0;
      for (hprqp::Index i = 0; i < nn; ++i)
        if (col[i] != 0.0) tq.emplace_back(i, j, col[i]);
    }
    hprqp::SpMat qm(nn, nn);
    qm.setFromTriplets(tq.begin(), tq.end());
    prob = hprqp::make_ccqp(hprqp::PsdOperator::explicit_sparse(std::move(qm)),
                            gen.problem.A, gen.problem.c, gen.problem.K,
                            gen.problem.phi, gen.problem.name);
  } else {
    throw hprqp::Error("gen kind must be random | lasso | qap");
  }
  hprqp::write_matrix_bundle(prob, out);
  std::cout << "wrote " << out << " (n=" << prob.n << " m=" << prob.m << ")\n";
  return 0;
}

struct BenchItem {
  std::string name;
  std::function<hprqp::CcqpProblem()> load;
};

std::vector<BenchItem> collect_instances(const fs::path& input) {
  std::vector<BenchItem> items;
  if (fs::is_directory(input) && !fs::exists(input / "A.mtx")) {
    const bool is_recipe = false;
    (void)is_recipe;
    std::vector<fs::path> paths;
    for (const auto& e : fs::directory_iterator(input)) paths.push_back(e.path());
    std::sort(paths.begin(), paths.end());
    for (const auto& p : paths) {
      if (fs::is_directory(p) && fs::exists(p / "A.mtx"))
        items.push_back({p.filename().string(),
                         [p] { return hprqp::read_matrix_bundle(p); }});
      else if (p.extension() == ".qps" || p.extension() == ".mps")
        items.push_back({p.stem().string(),
                         [p] { return hprqp::read_qps_file(p); }});
    }
    return items;
  }
  if (fs::is_directory(input)) {  // a single bundle
    items.push_back({input.filename().string(),
                     [input] { return hprqp::read_matrix_bundle(input); }});
    return items;
  }
  if (input.extension() == ".json") {  // generator recipe
    std::ifstream in(input);
    if (!in) throw hprqp::Error("cannot open " + input.string());
    json recipe = json::parse(in);
    int idx = 0;
    for (const auto& spec : recipe.at("instances")) {
      const std::string kind = spec.at("kind");
      const std::uint64_t seed = spec.value("seed", 0);
      std::string name = spec.value("name", kind + "_" + std::to_string(idx));
      ++idx;
      if (kind == "random") {
        const hprqp::Index n = spec.at("n"), m = spec.at("m");
        const double dens =
            spec.value("density", std::min(1.0, 2.0 / static_cast<double>(n)));
        items.push_back({name, [=] { return hprqp::gen_random_qp(n, m, dens, seed); }});
      } else if (kind == "lasso") {
        const hprqp::Index p = spec.at("p"), q = spec.at("q");
        const double dens = spec.value("density", 0.5);
        const auto rule = spec.value("lambda_rule", "thousandth") == std::string("fifth")
                              ? hprqp::LassoLambdaRule::Fifth
                              : hprqp::LassoLambdaRule::Thousandth;
        const bool native = spec.value("form", "cqp") == std::string("native");
        items.push_back({name, [=] {
                           auto inst = hprqp::gen_lasso(p, q, dens, seed, rule);
                           return native ? hprqp::lasso_native(inst)
                                         : hprqp::lasso_to_cqp(inst);
                         }});
      } else if (kind == "qap") {
        const hprqp::Index d = spec.at("d");
        items.push_back({name, [=] { return hprqp::gen_qap(d, seed).problem; }});
      } else {
        throw hprqp::Error("recipe kind must be random | lasso | qap");
      }
    }
    return items;
  }
  if (input.extension() == ".qps" || input.extension() == ".mps") {
    items.push_back({input.stem().string(),
                     [input] { return hprqp::read_qps_file(input); }});
    return items;
  }
  throw hprqp::Error("bench input must be a directory, recipe .json, or instance file");
}

int cmd_bench(const std::string& input, const SolveFlags& f,
              const std::vector<std::string>& variants) {
  const auto items = collect_instances(input);
  if (items.empty()) throw hprqp::Error("no instances found in " + input);
  std::map<std::string, std::vector<hprqp::BenchRecord>> by_solver;
  for (const auto& vname : variants) {
    const hprqp::Variant variant = hprqp::variant_from_string(vname);
    auto& records = by_solver[vname];
    for (const auto& item : items) {
      hprqp::BenchRecord rec;
      rec.instance = item.name;
      rec.tol = f.tol;
      try {
        const hprqp::CcqpProblem prob = item.load();
        const auto res = hprqp::solve_variant(prob, to_config(f), variant);
        rec.status = res.report.status;
        rec.iterations = res.report.iterations;
        rec.seconds = res.report.solve_seconds;
      } catch (const std::exception& e) {
        std::cerr << item.name << " (" << vname << "): " << e.what() << "\n";
        rec.status = hprqp::Status::IterLimit;
      }
      if (!rec.solved()) rec.seconds = f.time_limit;  // unsolved counts the limit
      std::cout << vname << " " << item.name << ": "
                << hprqp::to_string(rec.status) << " iters=" << rec.iterations
                << " secs=" << rec.seconds << "\n";
      records.push_back(rec);
    }
  }

  json summary;
  for (const auto& [vname, records] : by_solver) {
    int solved = 0;
    for (const auto& r : records) solved += r.solved() ? 1 : 0;
    summary[vname] = {{"sgm10_time", hprqp::sgm_time(records)},
                      {"sgm10_iterations", hprqp::sgm_iterations(records)},
                      {"solved", solved},
                      {"instances", records.size()}};
    std::cout << vname << ": SGM10(time)=" << hprqp::sgm_time(records)
              << " SGM10(iters)=" << hprqp::sgm_iterations(records)
              << " solved=" << solved << "/" << records.size() << "\n";
  }

  if (auto prefix = output_prefix(f.out, "bench")) {
    std::string all;
    bool first = true;
    for (const auto& [vname, records] : by_solver) {
      std::string csv = hprqp::records_csv(records, vname);
      if (!first) csv.erase(0, csv.find('\n') + 1);  // keep one header
      all += csv;
      first = false;
    }
    const auto parent = prefix->parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream(prefix->string() + ".records.csv") << all;
    std::ofstream(prefix->string() + ".summary.json") << summary.dump(2) << "\n";
    const auto profile =
        hprqp::perf_profile(by_solver, hprqp::default_tau_grid(f.time_limit));
    std::ofstream(prefix->string() + ".profile.csv")
        << hprqp::perf_profile_csv(profile);
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& csvs, const std::string& out,
               double time_limit) {
  std::map<std::string, std::vector<hprqp::BenchRecord>> by_solver;
  for (const auto& file : csvs) {
    std::ifstream in(file);
    if (!in) throw hprqp::Error("cannot open " + file);
    std::string line;
    std::getline(in, line);  // header
    long no = 1;
    while (std::getline(in, line)) {
      ++no;
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string inst, solver, status, iters, secs, tol;
      if (!std::getline(ls, inst, ',') || !std::getline(ls, solver, ',') ||
          !std::getline(ls, status, ',') || !std::getline(ls, iters, ',') ||
          !std::getline(ls, secs, ',') || !std::getline(ls, tol, ','))
        throw hprqp::ParseError("malformed records CSV", no);
      hprqp::BenchRecord rec;
      rec.instance = inst;
      rec.status = hprqp::status_from_string(status);
      rec.iterations = std::stoll(iters);
      rec.seconds = std::stod(secs);
      rec.tol = std::stod(tol);
      by_solver[solver].push_back(rec);
    }
  }
  if (by_solver.empty()) throw hprqp::Error("no records");
  for (const auto& [vname, records] : by_solver) {
    int solved = 0;
    for (const auto& r : records) solved += r.solved() ? 1 : 0;
    std::cout << vname << ": SGM10(time)=" << hprqp::sgm_time(records)
              << " SGM10(iters)=" << hprqp::sgm_iterations(records)
              << " solved=" << solved << "/" << records.size() << "\n";
  }
  if (auto prefix = output_prefix(out, "report")) {
    const auto profile =
        hprqp::perf_profile(by_solver, hprqp::default_tau_grid(time_limit));
    const auto parent = prefix->parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream(prefix->string() + ".profile.csv")
        << hprqp::perf_profile_csv(profile);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hprqp: convex composite QP solver (dual HPR method)"};
  app.require_subcommand(1);

  SolveFlags sf;
  std::string input;
  auto* solve = app.add_subcommand("solve", "solve one instance");
  solve->add_option("input", input, "QPS/MPS file or bundle directory")->required();
  add_solve_flags(solve, sf);

  std::string gen_kind;
  hprqp::Index gn = 50, gm = 100, gp = 30, gq = 60, gd = 8;
  double gdensity = 0.0;
  std::string glambda = "thousandth", gout;
  std::uint64_t gseed = 0;
  auto* gen = app.add_subcommand("gen", "generate an instance bundle");
  gen->add_option("kind", gen_kind, "random | lasso | qap")->required();
  gen->add_option("--n", gn);
  gen->add_option("--m", gm);
  gen->add_option("--p", gp);
  gen->add_option("--q", gq);
  gen->add_option("--d", gd);
  gen->add_option("--density", gdensity);
  gen->add_option("--lambda-rule", glambda, "thousandth | fifth");
  gen->add_option("--seed", gseed);
  gen->add_option("--out", gout, "output bundle directory")->required();

  SolveFlags bf;
  std::string bench_input;
  std::vector<std::string> bvariants{"dual"};
  auto* bench = app.add_subcommand("bench", "solve a suite and aggregate");
  bench->add_option("input", bench_input, "directory, recipe .json, or file")->required();
  add_solve_flags(bench, bf);
  bench->add_option("--variants", bvariants, "solvers to run")->delimiter(',');

  std::vector<std::string> rcsvs;
  std::string rout;
  double rtime_limit = 3600.0;
  auto* report = app.add_subcommand("report", "aggregate records CSV files");
  report->add_option("csvs", rcsvs, "records CSV files")->required();
  report->add_option("--out", rout, "output prefix");
  report->add_option("--time-limit", rtime_limit, "profile grid upper end");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed()) return cmd_solve(input, sf);
    if (gen->parsed())
      return cmd_gen(gen_kind, gn, gm, gp, gq, gd, gdensity, glambda, gseed, gout);
    if (bench->parsed()) return cmd_bench(bench_input, bf, bvariants);
    if (report->parsed()) return cmd_report(rcsvs, rout, rtime_limit);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
