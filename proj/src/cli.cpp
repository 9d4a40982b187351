#include "mcsort/cli.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcsort/assigner.hpp"
#include "mcsort/error.hpp"
#include "mcsort/io.hpp"
#include "mcsort/learner.hpp"
#include "mcsort/metrics.hpp"
#include "mcsort/priority.hpp"
#include "mcsort/synthgen.hpp"

namespace mcsort {

namespace {

namespace fs = std::filesystem;

struct DataArgs {
  std::string performances;
  std::string assignments;
  std::string criteria;
};

struct LearnArgs {
  std::string kind = "linear";
  double c1 = 1.0;
  double c2 = 1.0;
  std::vector<int> segments;
  double rho = 1.0;
  double eps_abs = 1e-6;
  double eps_rel = 1e-4;
  int max_iterations = 5000;
  std::size_t folds = 5;
  bool full_grid = false;
  std::vector<double> grid_c1;
  std::vector<double> grid_c2;
  std::vector<int> grid_segments;
};

void add_data_options(CLI::App* cmd, DataArgs& a) {
  cmd->add_option("--performances", a.performances, "CSV with header id,g1,...,gn")->required();
  cmd->add_option("--assignments", a.assignments, "CSV id,class or id,sigma_1,...,sigma_q")->required();
  cmd->add_option("--criteria", a.criteria, "criteria config (JSON)")->required();
}

void add_learn_options(CLI::App* cmd, LearnArgs& a) {
  cmd->add_option("--kind", a.kind, "linear | piecewise_linear | spline | general")->capture_default_str();
  cmd->add_option("--c1", a.c1, "complexity multiplier C (LINEAR) or C1")->capture_default_str();
  cmd->add_option("--c2", a.c2, "complexity multiplier C2")->capture_default_str();
  cmd->add_option("--segments", a.segments, "sub-intervals per criterion (one value applies to all)")->delimiter(',');
  cmd->add_option("--admm-rho", a.rho, "ADMM penalty")->capture_default_str();
  cmd->add_option("--eps-abs", a.eps_abs, "ADMM absolute tolerance")->capture_default_str();
  cmd->add_option("--eps-rel", a.eps_rel, "ADMM relative tolerance")->capture_default_str();
  cmd->add_option("--max-iter", a.max_iterations, "ADMM iteration cap")->capture_default_str();
  cmd->add_option("--folds", a.folds, "cross-validation folds")->capture_default_str();
  cmd->add_flag("--full-grid", a.full_grid, "search the full multiplier grid and 1..10 sub-intervals");
  cmd->add_option("--grid-c1", a.grid_c1, "explicit C/C1 candidates")->delimiter(',');
  cmd->add_option("--grid-c2", a.grid_c2, "explicit C2 candidates")->delimiter(',');
  cmd->add_option("--grid-segments", a.grid_segments, "explicit sub-interval candidates")->delimiter(',');
}

Hyperparams hyper_from(const LearnArgs& a) {
  Hyperparams h;
  h.multipliers = {a.c1, a.c2};
  h.segments = a.segments;
  h.rho = a.rho;
  h.eps_abs = a.eps_abs;
  h.eps_rel = a.eps_rel;
  h.max_iterations = a.max_iterations;
  h.validate();
  return h;
}

CvGrid grid_from(const LearnArgs& a) {
  CvGrid g = a.full_grid ? CvGrid::full() : CvGrid::desk();
  if (!a.grid_c1.empty()) g.c1 = a.grid_c1;
  if (!a.grid_c2.empty()) g.c2 = a.grid_c2;
  if (!a.grid_segments.empty()) g.segments = a.grid_segments;
  return g;
}

SortingProblem load(const DataArgs& d) { return load_problem(d.performances, d.assignments, d.criteria); }

std::string to_text(const auto& writer) {
  std::ostringstream ss;
  writer(ss);
  return ss.str();
}

void emit(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << content;
  } else {
    write_file(path, content);
  }
}

ModelBundle load_model(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_model(in);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Additive value-function sorting models learned from valued assignment examples", "mcsort"};
  app.require_subcommand(1);
  std::uint64_t seed = 1;

  // generate
  GeneratorConfig gen;
  std::string truth = "general";
  std::string out_dir;
  auto* generate = app.add_subcommand("generate", "write a synthetic dataset");
  generate->add_option("--out-dir", out_dir, "output directory")->required();
  generate->add_option("--alternatives", gen.alternatives)->capture_default_str();
  generate->add_option("--criteria", gen.criteria)->capture_default_str();
  generate->add_option("--classes", gen.classes)->capture_default_str();
  generate->add_option("--levels", gen.levels, "performance levels per criterion")->capture_default_str();
  generate->add_option("--rho", gen.rho, "growth-rate perturbation bound in [0, 1]")->capture_default_str();
  generate->add_option("--truth", truth, "general | linear")->capture_default_str();
  generate->add_option("--weights", gen.weights, "linear ground-truth weights")->delimiter(',');
  generate->add_option("--spread", gen.spread, "credibility moved to adjacent classes")->capture_default_str();
  generate->add_option("--train-fraction", gen.train_fraction)->capture_default_str();
  generate->add_option("--seed", seed)->capture_default_str();

  // fit
  DataArgs fit_data;
  LearnArgs fit_learn;
  bool fit_cv = false;
  std::string model_path, report_path;
  auto* fit = app.add_subcommand("fit", "learn a value model");
  add_data_options(fit, fit_data);
  add_learn_options(fit, fit_learn);
  fit->add_flag("--cv", fit_cv, "choose multipliers by cross-validation");
  fit->add_option("--model", model_path, "output model file")->required();
  fit->add_option("--report", report_path, "fit report (JSON); stdout when omitted");
  fit->add_option("--seed", seed)->capture_default_str();

  // cv
  DataArgs cv_data;
  LearnArgs cv_learn;
  std::string cv_output;
  auto* cv = app.add_subcommand("cv", "cross-validation table over a hyperparameter grid");
  add_data_options(cv, cv_data);
  add_learn_options(cv, cv_learn);
  cv->add_option("--output", cv_output, "CSV table; stdout when omitted");
  cv->add_option("--seed", seed)->capture_default_str();

  // assign
  std::string assign_model, assign_perf, soft_path, crisp_path;
  auto* assign = app.add_subcommand("assign", "assign alternatives with a fitted model");
  assign->add_option("--model", assign_model)->required();
  assign->add_option("--performances", assign_perf, "alternatives to assign")->required();
  assign->add_option("--soft", soft_path, "valued assignments (softmax)");
  assign->add_option("--crisp", crisp_path, "crisp assignments");
  assign->add_option("--seed", seed)->capture_default_str();

  // adjust
  std::string adjust_model, adjust_output, trace_path;
  std::vector<std::size_t> priority;
  AdjustOptions adjust_opts;
  double validation_fraction = 0.0;
  auto* adjust_cmd = app.add_subcommand("adjust", "adjust class performance along a priority ranking");
  adjust_cmd->add_option("--model", adjust_model)->required();
  adjust_cmd->add_option("--priority", priority, "classes by priority, highest first (e.g. 5,4,3,2,1)")
      ->required()
      ->delimiter(',');
  adjust_cmd->add_option("--zeta", adjust_opts.zeta, "allowed relative growth of complexity")->capture_default_str();
  adjust_cmd->add_option("--max-iter", adjust_opts.max_iterations)->capture_default_str();
  adjust_cmd->add_option("--validation-fraction", validation_fraction,
                         "share of reference alternatives held out to decide when to stop")
      ->capture_default_str();
  adjust_cmd->add_option("--output", adjust_output, "adjusted model file")->required();
  adjust_cmd->add_option("--trace", trace_path, "per-iteration trace (JSON lines)");
  adjust_cmd->add_option("--seed", seed)->capture_default_str();

  // evaluate
  std::string actual_path, predicted_path, metrics_path;
  std::size_t eval_classes = 0;
  auto* evaluate = app.add_subcommand("evaluate", "compare predicted and actual assignments");
  evaluate->add_option("--actual", actual_path)->required();
  evaluate->add_option("--predicted", predicted_path)->required();
  evaluate->add_option("--classes", eval_classes, "number of classes (needed for crisp files)");
  evaluate->add_option("--output", metrics_path, "metrics (JSON); stdout when omitted");
  evaluate->add_option("--seed", seed)->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*generate) {
      if (truth == "linear") {
        gen.truth = TruthKind::linear;
      } else if (truth == "general") {
        gen.truth = TruthKind::general;
      } else {
        throw ParameterError("--truth must be 'general' or 'linear'");
      }
      gen.seed = seed;
      const SyntheticDataset ds = make_dataset(gen);
      const SortingProblem& p = ds.problem;
      PerformanceTable table;
      for (const auto& c : p.criteria) table.criteria.push_back(c.name);
      table.ids = p.ids;
      table.values = p.performances;
      CriteriaConfig cfg;
      cfg.classes = p.num_classes;
      for (const auto& c : p.criteria) cfg.criteria.push_back({c.name, c.direction, c.alpha, c.beta});
      auto split = [&](const std::vector<std::size_t>& rows) {
        std::vector<std::string> ids;
        std::vector<ValuedAssignment> sig;
        for (std::size_t i : rows) {
          ids.push_back(p.ids[i]);
          sig.push_back(p.sigma(i));
        }
        return to_text([&](std::ostream& o) { write_assignments(o, ids, sig, gen.spread == 0.0); });
      };
      const fs::path dir(out_dir);
      write_file(dir / "performances.csv", to_text([&](std::ostream& o) { write_performances(o, table); }));
      write_file(dir / "criteria.json", to_text([&](std::ostream& o) { write_criteria_config(o, cfg); }));
      write_file(dir / "train.csv", split(p.reference));
      write_file(dir / "test.csv", split(p.test));
      ModelBundle truth_bundle;
      truth_bundle.model = ds.truth;
      truth_bundle.num_classes = p.num_classes;
      truth_bundle.reference_performances.resize(0, static_cast<Eigen::Index>(p.num_criteria()));
      write_file(dir / "truth.json", to_text([&](std::ostream& o) { write_model(o, truth_bundle); }));
      return 0;
    }

    if (*fit) {
      const SortingProblem problem = load(fit_data);
      const ModelKind kind = parse_model_kind(fit_learn.kind);
      Hyperparams hyper = hyper_from(fit_learn);
      std::vector<CvRow> table;
      if (fit_cv) {
        CvResult res = cross_validate(problem, kind, grid_from(fit_learn), hyper, fit_learn.folds, seed);
        hyper = res.best;
        table = std::move(res.table);
      }
      FitReport report = fit_model(problem, kind, hyper);
      report.cv_table = std::move(table);
      if (report.status == FitStatus::iteration_cap) err << "warning: ADMM stopped at the iteration cap\n";
      if (!report.monotone) err << "warning: spline marginals are not monotone at the sub-interval cap\n";
      write_file(model_path, to_text([&](std::ostream& o) { write_model(o, ModelBundle::from_fit(report.model, problem)); }));
      emit(report_path, to_text([&](std::ostream& o) { write_fit_report(o, report); }), out);
      return 0;
    }

    if (*cv) {
      const SortingProblem problem = load(cv_data);
      const CvResult res = cross_validate(problem, parse_model_kind(cv_learn.kind), grid_from(cv_learn),
                                          hyper_from(cv_learn), cv_learn.folds, seed);
      emit(cv_output, to_text([&](std::ostream& o) { write_cv_table(o, res.table); }), out);
      return 0;
    }

    if (*assign) {
      if (soft_path.empty() && crisp_path.empty()) throw ParameterError("give --soft and/or --crisp");
      const ModelBundle bundle = load_model(assign_model);
      std::istringstream perf_in(read_file(assign_perf));
      const PerformanceTable table = read_performances(perf_in, fs::path(assign_perf).filename().string());
      SortingProblem rows;
      rows.criteria = bundle.model.spec.scales();
      rows.ids = table.ids;
      rows.performances = to_internal(table, rows.criteria);
      const SortingProblem ref_problem = bundle.reference_problem();
      const ReferenceSet ref = ReferenceSet::from_problem(bundle.model, ref_problem);
      std::vector<std::size_t> all(table.ids.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      const auto results = assign_rows(bundle.model, ref, rows, all);
      if (!crisp_classes_monotone(results)) throw Error("crisp assignments are not monotone in the comprehensive value");
      std::vector<ValuedAssignment> soft, crisp;
      for (const auto& r : results) {
        soft.push_back(r.soft);
        crisp.push_back(r.crisp);
      }
      if (!soft_path.empty()) write_file(soft_path, to_text([&](std::ostream& o) { write_assignments(o, table.ids, soft); }));
      if (!crisp_path.empty()) {
        write_file(crisp_path, to_text([&](std::ostream& o) { write_assignments(o, table.ids, crisp, true); }));
      }
      return 0;
    }

    if (*adjust_cmd) {
      const ModelBundle bundle = load_model(adjust_model);
      const SortingProblem problem = bundle.reference_problem();
      const PriorityRanking tau = PriorityRanking::from_order(priority, problem.num_classes);
      if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw ParameterError("--validation-fraction must lie in [0, 1)");
      }
      if (validation_fraction > 0.0) {
        std::vector<std::size_t> classes;
        for (std::size_t i : problem.reference) classes.push_back(problem.sigma(i).top_class());
        std::mt19937_64 rng(seed);
        adjust_opts.validation = stratified_split(classes, validation_fraction, rng).first;
      }
      const AdjustResult res = adjust(bundle.model, problem, tau, adjust_opts);
      ModelBundle adjusted = bundle;
      adjusted.model = res.model;
      write_file(adjust_output, to_text([&](std::ostream& o) { write_model(o, adjusted); }));
      if (!trace_path.empty()) write_file(trace_path, to_text([&](std::ostream& o) { res.trace.write_jsonl(o); }));
      for (const auto& r : res.trace.records) {
        if (r.lambda_capped) err << "warning: iteration " << r.iteration << " step length capped\n";
      }
      return 0;
    }

    if (*evaluate) {
      std::istringstream pred_in(read_file(predicted_path));
      const auto predicted = read_assignments(pred_in, eval_classes, fs::path(predicted_path).filename().string());
      std::size_t q = eval_classes;
      if (q == 0 && !predicted.empty()) q = predicted.front().second.num_classes();
      std::istringstream act_in(read_file(actual_path));
      const auto actual = read_assignments(act_in, q, fs::path(actual_path).filename().string());
      std::map<std::string, const ValuedAssignment*> by_id;
      for (const auto& [id, s] : actual) by_id[id] = &s;
      std::vector<ValuedAssignment> a, p;
      for (const auto& [id, s] : predicted) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw ValidationError("no actual assignment for " + id);
        if (it->second->num_classes() != s.num_classes()) throw DimensionError("alternative " + id + ": class counts differ");
        a.push_back(*it->second);
        p.push_back(s);
      }
      if (a.empty()) throw InsufficientDataError("nothing to evaluate");
      const MetricsReport report = evaluate_predictions(a, p);
      emit(metrics_path, to_text([&](std::ostream& o) { write_metrics(o, report, class_performance(a, p)); }), out);
      return 0;
    }
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const SolverError& e) {
    err << "solver failure: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace mcsort
