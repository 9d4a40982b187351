#include "mcsort/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "mcsort/error.hpp"

namespace mcsort {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::string where(const std::string& source, std::size_t line) { return source + ":" + std::to_string(line) + ": "; }

double parse_double(const std::string& text, const std::string& context) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ValidationError(context + "non-numeric value '" + text + "'");
  }
  return v;
}

// Lines of a CSV file without blank lines, paired with 1-based line numbers.
std::vector<std::pair<std::size_t, std::vector<std::string>>> read_rows(std::istream& in) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    rows.emplace_back(number, split_csv(line));
  }
  return rows;
}

std::string_view direction_name(Direction d) { return d == Direction::gain ? "gain" : "cost"; }

Direction parse_direction(const std::string& s) {
  if (s == "gain") return Direction::gain;
  if (s == "cost") return Direction::cost;
  throw ValidationError("criterion direction must be 'gain' or 'cost', got '" + s + "'");
}

json scales_to_json(const std::vector<CriterionScale>& scales) {
  json arr = json::array();
  for (const auto& s : scales) {
    arr.push_back({{"name", s.name}, {"direction", direction_name(s.direction)}, {"alpha", s.alpha}, {"beta", s.beta}});
  }
  return arr;
}

std::vector<CriterionScale> scales_from_json(const json& arr) {
  std::vector<CriterionScale> scales;
  for (std::size_t j = 0; j < arr.size(); ++j) {
    CriterionScale s;
    s.index = j;
    s.name = arr[j].at("name").get<std::string>();
    s.direction = parse_direction(arr[j].at("direction").get<std::string>());
    s.alpha = arr[j].at("alpha").get<double>();
    s.beta = arr[j].at("beta").get<double>();
    scales.push_back(std::move(s));
  }
  return scales;
}

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  if (ec != std::errc()) throw Error("failed to format a number");
  return std::string(buf, ptr);
}

PerformanceTable read_performances(std::istream& in, const std::string& source) {
  const auto rows = read_rows(in);
  if (rows.empty()) throw ValidationError(source + ": file is empty");
  const auto& header = rows.front().second;
  if (header.size() < 2 || header[0] != "id") throw ValidationError(where(source, rows.front().first) + "header must be id,g1,...,gn");
  PerformanceTable t;
  t.criteria.assign(header.begin() + 1, header.end());
  const std::size_t n = t.criteria.size();
  t.values.resize(static_cast<Eigen::Index>(rows.size() - 1), static_cast<Eigen::Index>(n));
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [line, cells] = rows[r];
    if (cells.size() != n + 1) {
      throw ValidationError(where(source, line) + "expected " + std::to_string(n + 1) + " columns, found " + std::to_string(cells.size()));
    }
    if (cells[0].empty()) throw ValidationError(where(source, line) + "missing id");
    t.ids.push_back(cells[0]);
    for (std::size_t j = 0; j < n; ++j) {
      t.values(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(j)) = parse_double(cells[j + 1], where(source, line));
    }
  }
  return t;
}

void write_performances(std::ostream& out, const PerformanceTable& table) {
  out << "id";
  for (const auto& c : table.criteria) out << ',' << c;
  out << '\n';
  for (Eigen::Index i = 0; i < table.values.rows(); ++i) {
    out << table.ids[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < table.values.cols(); ++j) out << ',' << format_double(table.values(i, j));
    out << '\n';
  }
}

std::vector<std::pair<std::string, ValuedAssignment>> read_assignments(std::istream& in, std::size_t q,
                                                                       const std::string& source) {
  const auto rows = read_rows(in);
  if (rows.empty()) throw ValidationError(source + ": file is empty");
  const auto& header = rows.front().second;
  if (header.size() < 2 || header[0] != "id") throw ValidationError(where(source, rows.front().first) + "header must start with id");
  const bool crisp = header.size() == 2 && header[1] == "class";
  if (!crisp && q != 0 && header.size() != q + 1) {
    throw ValidationError(where(source, rows.front().first) + "expected " + std::to_string(q) + " credibility columns");
  }
  const std::size_t width = header.size();
  std::vector<std::pair<std::string, ValuedAssignment>> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& [line, cells] = rows[r];
    if (cells.size() != width) throw ValidationError(where(source, line) + "wrong number of columns");
    try {
      if (crisp) {
        const double c = parse_double(cells[1], "");
        if (c != std::floor(c) || c < 1.0 || (q != 0 && c > static_cast<double>(q))) {
          throw ValidationError("class index " + cells[1] + " out of range");
        }
        if (q == 0) throw ValidationError("number of classes unknown for crisp assignments");
        out.emplace_back(cells[0], ValuedAssignment::one_hot(q, static_cast<std::size_t>(c)));
      } else {
        std::vector<double> sigma;
        for (std::size_t s = 1; s < width; ++s) sigma.push_back(parse_double(cells[s], ""));
        out.emplace_back(cells[0], ValuedAssignment::from_vector(std::move(sigma)));
      }
    } catch (const ValidationError& e) {
      throw ValidationError(where(source, line) + e.what());
    }
  }
  return out;
}

void write_assignments(std::ostream& out, const std::vector<std::string>& ids,
                       const std::vector<ValuedAssignment>& sigmas, bool crisp_form) {
  if (ids.size() != sigmas.size()) throw DimensionError("ids and assignments differ in length");
  bool one_hot = crisp_form;
  for (const auto& s : sigmas) {
    if (!one_hot) break;
    one_hot = s[s.top_class() - 1] == 1.0;
  }
  const std::size_t q = sigmas.empty() ? 0 : sigmas.front().num_classes();
  if (one_hot) {
    out << "id,class\n";
    for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << ',' << sigmas[i].top_class() << '\n';
    return;
  }
  out << "id";
  for (std::size_t s = 1; s <= q; ++s) out << ",sigma_" << s;
  out << '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out << ids[i];
    for (double v : sigmas[i].sigma()) out << ',' << format_double(v);
    out << '\n';
  }
}

CriteriaConfig read_criteria_config(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("criteria config: ") + e.what());
  }
  try {
    CriteriaConfig c;
    c.classes = j.at("classes").get<std::size_t>();
    for (const auto& e : j.at("criteria")) {
      CriteriaConfig::Entry entry;
      entry.name = e.at("name").get<std::string>();
      entry.direction = parse_direction(e.value("direction", std::string("gain")));
      if (e.contains("alpha")) entry.alpha = e.at("alpha").get<double>();
      if (e.contains("beta")) entry.beta = e.at("beta").get<double>();
      c.criteria.push_back(std::move(entry));
    }
    return c;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("criteria config: ") + e.what());
  }
}

void write_criteria_config(std::ostream& out, const CriteriaConfig& config) {
  json arr = json::array();
  for (const auto& e : config.criteria) {
    json item = {{"name", e.name}, {"direction", direction_name(e.direction)}};
    if (e.alpha) item["alpha"] = *e.alpha;
    if (e.beta) item["beta"] = *e.beta;
    arr.push_back(std::move(item));
  }
  out << json{{"classes", config.classes}, {"criteria", arr}}.dump(2) << '\n';
}

Eigen::MatrixXd to_internal(const PerformanceTable& table, const std::vector<CriterionScale>& scales) {
  if (static_cast<std::size_t>(table.values.cols()) != scales.size()) {
    throw DimensionError("performance table has " + std::to_string(table.values.cols()) + " criteria, model has " +
                         std::to_string(scales.size()));
  }
  Eigen::MatrixXd out = table.values;
  for (std::size_t j = 0; j < scales.size(); ++j) {
    if (scales[j].direction == Direction::cost) out.col(static_cast<Eigen::Index>(j)) *= -1.0;
  }
  return out;
}

SortingProblem make_problem(const PerformanceTable& table, const CriteriaConfig& config,
                            const std::vector<std::pair<std::string, ValuedAssignment>>& reference,
                            const std::vector<std::pair<std::string, ValuedAssignment>>& test) {
  const std::size_t n = table.criteria.size();
  if (config.criteria.size() != n) {
    throw ValidationError("criteria config lists " + std::to_string(config.criteria.size()) + " criteria, table has " +
                          std::to_string(n));
  }
  if (table.ids.empty()) throw InsufficientDataError("performance table has no rows");
  SortingProblem p;
  p.num_classes = config.classes;
  p.ids = table.ids;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& e = config.criteria[j];
    if (e.name != table.criteria[j]) {
      throw ValidationError("criterion " + std::to_string(j + 1) + " is '" + table.criteria[j] + "' in the table but '" +
                            e.name + "' in the config");
    }
    const auto col = table.values.col(static_cast<Eigen::Index>(j));
    const bool gain = e.direction == Direction::gain;
    const double worst = e.alpha.value_or(gain ? col.minCoeff() : col.maxCoeff());
    const double best = e.beta.value_or(gain ? col.maxCoeff() : col.minCoeff());
    CriterionScale s;
    s.index = j;
    s.name = e.name;
    s.direction = e.direction;
    s.alpha = gain ? worst : -worst;
    s.beta = gain ? best : -best;
    if (!(s.alpha < s.beta)) throw RangeError("criterion " + e.name + ": worst value must be below the best on the gain scale");
    p.criteria.push_back(std::move(s));
  }
  p.performances = to_internal(table, p.criteria);

  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < p.ids.size(); ++i) {
    if (!index.emplace(p.ids[i], i).second) throw ValidationError("duplicate alternative id " + p.ids[i]);
  }
  p.assignments.assign(p.ids.size(), std::nullopt);
  std::vector<bool> is_ref(p.ids.size(), false);
  auto attach = [&](const auto& list, bool ref) {
    for (const auto& [id, sigma] : list) {
      const auto it = index.find(id);
      if (it == index.end()) throw ValidationError("assignment for unknown alternative " + id);
      if (sigma.num_classes() != p.num_classes) throw DimensionError("alternative " + id + ": credibility vector has the wrong length");
      if (p.assignments[it->second]) throw ValidationError("alternative " + id + " is assigned twice");
      p.assignments[it->second] = sigma;
      is_ref[it->second] = ref;
    }
  };
  attach(reference, true);
  attach(test, false);
  for (std::size_t i = 0; i < p.ids.size(); ++i) (is_ref[i] ? p.reference : p.test).push_back(i);
  p.validate();
  return p;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << content;
}

SortingProblem load_problem(const std::filesystem::path& performances, const std::filesystem::path& assignments,
                            const std::filesystem::path& criteria,
                            const std::optional<std::filesystem::path>& test_assignments) {
  std::istringstream cfg_in(read_file(criteria));
  const CriteriaConfig cfg = read_criteria_config(cfg_in);
  std::istringstream perf_in(read_file(performances));
  const PerformanceTable table = read_performances(perf_in, performances.filename().string());
  std::istringstream asg_in(read_file(assignments));
  const auto ref = read_assignments(asg_in, cfg.classes, assignments.filename().string());
  std::vector<std::pair<std::string, ValuedAssignment>> tst;
  if (test_assignments) {
    std::istringstream t_in(read_file(*test_assignments));
    tst = read_assignments(t_in, cfg.classes, test_assignments->filename().string());
  }
  return make_problem(table, cfg, ref, tst);
}

SortingProblem ModelBundle::reference_problem() const {
  SortingProblem p;
  p.criteria = model.spec.scales();
  p.num_classes = num_classes;
  p.ids = reference_ids;
  p.performances = reference_performances;
  for (const auto& s : reference_sigmas) p.assignments.emplace_back(s);
  for (std::size_t i = 0; i < reference_ids.size(); ++i) p.reference.push_back(i);
  return p;
}

ModelBundle ModelBundle::from_fit(const FittedModel& model, const SortingProblem& problem) {
  ModelBundle b;
  b.model = model;
  b.num_classes = problem.num_classes;
  b.reference_performances.resize(static_cast<Eigen::Index>(problem.reference.size()), problem.performances.cols());
  for (std::size_t k = 0; k < problem.reference.size(); ++k) {
    const std::size_t i = problem.reference[k];
    b.reference_ids.push_back(problem.ids[i]);
    b.reference_performances.row(static_cast<Eigen::Index>(k)) = problem.performances.row(static_cast<Eigen::Index>(i));
    b.reference_sigmas.push_back(problem.sigma(i));
  }
  return b;
}

void write_model(std::ostream& out, const ModelBundle& b) {
  const ModelSpec& spec = b.model.spec;
  json grids = json::array();
  for (std::size_t j = 0; j < spec.num_criteria(); ++j) grids.push_back(spec.grid(j));
  json perf = json::array();
  for (Eigen::Index i = 0; i < b.reference_performances.rows(); ++i) {
    perf.push_back(vec_json(b.reference_performances.row(i).transpose()));
  }
  json sigmas = json::array();
  for (const auto& s : b.reference_sigmas) sigmas.push_back(s.sigma());
  const json j = {{"format", "mcsort-model"},
                  {"version", 1},
                  {"kind", to_string(spec.kind())},
                  {"criteria", scales_to_json(spec.scales())},
                  {"grids", grids},
                  {"multipliers", {{"c1", b.model.multipliers.c1}, {"c2", b.model.multipliers.c2}}},
                  {"theta", vec_json(b.model.theta)},
                  {"classes", b.num_classes},
                  {"reference", {{"ids", b.reference_ids}, {"performances", perf}, {"sigma", sigmas}}}};
  out << j.dump(1) << '\n';
}

ModelBundle read_model(std::istream& in) {
  try {
    json j;
    in >> j;
    if (j.value("format", std::string()) != "mcsort-model") throw ValidationError("not a model file");
    ModelBundle b;
    auto scales = scales_from_json(j.at("criteria"));
    const auto grids = j.at("grids").get<std::vector<std::vector<double>>>();
    if (grids.size() != scales.size()) throw ValidationError("model file: grid count does not match criteria");
    const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
    std::vector<int> segments;
    for (const auto& g : grids) segments.push_back(static_cast<int>(g.size()) - 1);
    ModelSpec spec;
    switch (kind) {
      case ModelKind::linear: spec = ModelSpec::linear(scales); break;
      case ModelKind::piecewise_linear: spec = ModelSpec::piecewise_linear(scales, segments); break;
      case ModelKind::spline: spec = ModelSpec::spline(scales, segments); break;
      case ModelKind::general: spec = ModelSpec::general_from_levels(scales, grids); break;
    }
    for (std::size_t k = 0; k < grids.size(); ++k) {
      if (spec.grid(k) != grids[k]) throw ValidationError("model file: breakpoints do not match the model kind");
    }
    const auto theta = j.at("theta").get<std::vector<double>>();
    if (theta.size() != spec.dimension()) throw DimensionError("model file: theta has the wrong dimension");
    b.model.spec = std::move(spec);
    b.model.multipliers = {j.at("multipliers").at("c1").get<double>(), j.at("multipliers").at("c2").get<double>()};
    b.model.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
    b.num_classes = j.at("classes").get<std::size_t>();
    const auto& ref = j.at("reference");
    b.reference_ids = ref.at("ids").get<std::vector<std::string>>();
    const auto perf = ref.at("performances").get<std::vector<std::vector<double>>>();
    const auto sig = ref.at("sigma").get<std::vector<std::vector<double>>>();
    if (perf.size() != b.reference_ids.size() || sig.size() != b.reference_ids.size()) {
      throw DimensionError("model file: reference set is inconsistent");
    }
    b.reference_performances.resize(static_cast<Eigen::Index>(perf.size()), static_cast<Eigen::Index>(scales.size()));
    for (std::size_t i = 0; i < perf.size(); ++i) {
      if (perf[i].size() != scales.size()) throw DimensionError("model file: reference row has the wrong width");
      for (std::size_t c = 0; c < scales.size(); ++c) {
        b.reference_performances(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = perf[i][c];
      }
      b.reference_sigmas.push_back(ValuedAssignment::from_vector(sig[i]));
      if (b.reference_sigmas.back().num_classes() != b.num_classes) throw DimensionError("model file: credibility vector length");
    }
    return b;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("model file: ") + e.what());
  }
}

void write_fit_report(std::ostream& out, const FitReport& r) {
  const ModelSpec& spec = r.model.spec;
  std::vector<int> segments;
  for (std::size_t j = 0; j < spec.num_criteria(); ++j) segments.push_back(spec.segments(j));
  json cv = json::array();
  for (const auto& row : r.cv_table) {
    cv.push_back({{"c1", row.multipliers.c1}, {"c2", row.multipliers.c2}, {"segments", row.segments},
                  {"accuracy", row.accuracy}, {"kendall", row.kendall}});
  }
  const json j = {{"kind", to_string(spec.kind())},
                  {"multipliers", {{"c1", r.model.multipliers.c1}, {"c2", r.model.multipliers.c2}}},
                  {"segments", segments},
                  {"objective", r.objective},
                  {"iterations", r.iterations},
                  {"status", to_string(r.status)},
                  {"primal_residual", r.primal_residual},
                  {"dual_residual", r.dual_residual},
                  {"refinements", r.refinements},
                  {"monotone", r.monotone},
                  {"trade_off_weights", trade_off_weights(spec, r.model.theta)},
                  {"cv", cv}};
  out << j.dump(2) << '\n';
}

void write_metrics(std::ostream& out, const MetricsReport& report, const std::optional<ClassPerformance>& perf) {
  json j = {{"count", report.count}, {"mean_accuracy", report.mean_accuracy}, {"mean_kendall", report.mean_kendall}};
  if (perf) j["class_performance"] = {{"card_pf", perf->card_pf}, {"ord_pf", perf->ord_pf}};
  out << j.dump(2) << '\n';
}

void write_cv_table(std::ostream& out, const std::vector<CvRow>& table) {
  out << "c1,c2,segments,accuracy,kendall\n";
  for (const auto& row : table) {
    out << format_double(row.multipliers.c1) << ',' << format_double(row.multipliers.c2) << ',' << row.segments << ','
        << format_double(row.accuracy) << ',' << format_double(row.kendall) << '\n';
  }
}

}  // namespace mcsort
