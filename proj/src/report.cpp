#include "mlspeak/report.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "mlspeak/errors.hpp"

namespace mlspeak {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Non-finite values have no JSON representation; they are written as null.
json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return round_sig(v);
}

double get_num(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return j.get<double>();
}

json nums(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

std::vector<double> get_nums(const json& j) {
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& x : j) v.push_back(get_num(x));
  return v;
}

std::vector<double> round_all(std::vector<double> v) {
  for (auto& x : v) x = std::isfinite(x) ? round_sig(x) : x;
  return v;
}

json to_json(const CurvePoints& c) { return {{"pi", nums(c.pi)}, {"d", nums(c.d)}, {"peak", nums(c.peak)}}; }

CurvePoints curve_points_from_json(const json& j) {
  return {get_nums(j.at("pi")), get_nums(j.at("d")), get_nums(j.at("peak"))};
}

json meta_block(const RunMetadata& meta) {
  return {{"schema_version", kSchemaVersion}, {"run", to_json(meta)}};
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void check_schema(const json& j) {
  const int v = j.at("schema_version").get<int>();
  if (v != kSchemaVersion)
    throw SchemaError("unsupported schema_version " + std::to_string(v) + " (expected " +
                      std::to_string(kSchemaVersion) + ")");
}

void write_points_row(std::ostream& out, const CurvePoints& c, std::size_t i) {
  out << format_number(c.pi[i]) << ',' << format_number(c.d[i]) << ',' << format_number(c.peak[i]) << '\n';
}

}  // namespace

double round_sig(double v) {
  if (!std::isfinite(v) || v == 0.0) return v;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", kSignificantDigits, v);
  return std::strtod(buf, nullptr);
}

std::string format_number(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", kSignificantDigits, v);
  return buf;
}

std::string slug(const std::string& label) {
  std::string s;
  for (unsigned char c : label) s.push_back(std::isalnum(c) ? static_cast<char>(c) : '_');
  return s;
}

// ---------------------------------------------------------------------------

json to_json(const RunMetadata& m) {
  return {{"command", m.command}, {"preset", m.preset}, {"seed", m.seed}, {"config", m.config}};
}

RunMetadata run_metadata_from_json(const json& j) {
  return {j.at("command").get<std::string>(), j.at("preset").get<std::string>(),
          j.at("seed").get<std::uint64_t>(), j.at("config")};
}

json to_json(const stats::TestResult& t) {
  return {{"statistic", num(t.statistic)},
          {"p_value", num(t.p_value)},
          {"method", t.method},
          {"alternative", stats::to_string(t.alternative)},
          {"exact", t.exact}};
}

stats::TestResult test_result_from_json(const json& j) {
  stats::TestResult t;
  t.statistic = get_num(j.at("statistic"));
  t.p_value = get_num(j.at("p_value"));
  t.method = j.at("method").get<std::string>();
  t.alternative = stats::parse_alternative(j.at("alternative").get<std::string>());
  t.exact = j.at("exact").get<bool>();
  return t;
}

json to_json(const stats::PairwiseMatrix& m) {
  json tests = json::array();
  for (const auto& t : m.tests) tests.push_back(to_json(t));
  return {{"k", m.k}, {"p", nums(m.p)}, {"p_holm", nums(m.p_holm)}, {"tests", tests}};
}

stats::PairwiseMatrix pairwise_from_json(const json& j) {
  stats::PairwiseMatrix m;
  m.k = j.at("k").get<std::size_t>();
  m.p = get_nums(j.at("p"));
  m.p_holm = get_nums(j.at("p_holm"));
  for (const auto& t : j.at("tests")) m.tests.push_back(test_result_from_json(t));
  return m;
}

json to_json(const TrialResult& t) {
  return {{"trial", t.trial_index}, {"models", t.models}, {"nll", nums(t.nll)}, {"loss_diff", nums(t.loss_diff)}};
}

TrialResult trial_result_from_json(const json& j) {
  TrialResult t;
  t.trial_index = j.at("trial").get<std::size_t>();
  t.models = j.at("models").get<std::vector<std::string>>();
  t.nll = get_nums(j.at("nll"));
  t.loss_diff = get_nums(j.at("loss_diff"));
  return t;
}

json to_json(const CurveSet& c) {
  json curves = json::array();
  for (const auto& cd : c.curves) {
    json per_trial = json::array();
    for (const auto& p : cd.per_trial) per_trial.push_back(to_json(p));
    curves.push_back({{"trait", cd.trait}, {"grid", nums(cd.grid)}, {"per_trial", per_trial}, {"mean", to_json(cd.mean)}});
  }
  json surfaces = json::array();
  for (const auto& s : c.surfaces)
    surfaces.push_back({{"trait_x", s.trait_x},
                        {"trait_y", s.trait_y},
                        {"others_at", s.others_at},
                        {"grid", nums(s.grid)},
                        {"mean", to_json(s.mean)}});
  return {{"curves", curves}, {"surfaces", surfaces}};
}

CurveSet curve_set_from_json(const json& j) {
  CurveSet c;
  for (const auto& cj : j.at("curves")) {
    CurveData cd;
    cd.trait = cj.at("trait").get<std::string>();
    cd.grid = get_nums(cj.at("grid"));
    for (const auto& p : cj.at("per_trial")) cd.per_trial.push_back(curve_points_from_json(p));
    cd.mean = curve_points_from_json(cj.at("mean"));
    c.curves.push_back(std::move(cd));
  }
  for (const auto& sj : j.at("surfaces")) {
    SurfaceData s;
    s.trait_x = sj.at("trait_x").get<std::string>();
    s.trait_y = sj.at("trait_y").get<std::string>();
    s.others_at = sj.at("others_at").get<std::string>();
    s.grid = get_nums(sj.at("grid"));
    s.mean = curve_points_from_json(sj.at("mean"));
    c.surfaces.push_back(std::move(s));
  }
  return c;
}

namespace {

json trials_json(const std::vector<TrialResult>& trials) {
  json a = json::array();
  for (const auto& t : trials) a.push_back(to_json(t));
  return a;
}

std::vector<TrialResult> trials_from_json(const json& j) {
  std::vector<TrialResult> v;
  for (const auto& t : j) v.push_back(trial_result_from_json(t));
  return v;
}

json model_summary(const std::vector<std::string>& models, const std::vector<TrialResult>& trials) {
  json summary = json::array();
  if (trials.empty()) return summary;
  const auto diffs = by_model(trials, true);
  const auto nll = by_model(trials, false);
  for (std::size_t m = 0; m < models.size(); ++m) {
    const auto q = stats::quartiles(diffs[m]);
    summary.push_back({{"model", models[m]},
                       {"median_nll", num(stats::median(nll[m]))},
                       {"loss_diff_q1", num(q.q1)},
                       {"loss_diff_median", num(q.median)},
                       {"loss_diff_q3", num(q.q3)}});
  }
  return summary;
}

}  // namespace

json to_json(const Study1Result& r, const RunMetadata& meta) {
  json j = meta_block(meta);
  j["study"] = "study1";
  j["models"] = r.models;
  j["summary"] = model_summary(r.models, r.trials);
  j["trials"] = trials_json(r.trials);
  j["kruskal_wallis"] = to_json(r.kruskal);
  j["pairwise"] = to_json(r.pairwise);
  j["function_recovery"] = {{"pi_vs_sqrt_a", num(r.recovery.pi_vs_sqrt_a)}, {"d_vs_b", num(r.recovery.d_vs_b)}};
  j["curves"] = to_json(r.curves);
  return j;
}

Study1Result study1_from_json(const json& j) {
  check_schema(j);
  Study1Result r;
  r.models = j.at("models").get<std::vector<std::string>>();
  r.trials = trials_from_json(j.at("trials"));
  r.kruskal = test_result_from_json(j.at("kruskal_wallis"));
  r.pairwise = pairwise_from_json(j.at("pairwise"));
  r.recovery.pi_vs_sqrt_a = get_num(j.at("function_recovery").at("pi_vs_sqrt_a"));
  r.recovery.d_vs_b = get_num(j.at("function_recovery").at("d_vs_b"));
  r.curves = curve_set_from_json(j.at("curves"));
  return r;
}

json to_json(const Study2Result& r, const RunMetadata& meta) {
  json j = meta_block(meta);
  j["study"] = "study2";
  j["kind"] = to_string(r.kind);
  json cells = json::array();
  for (const auto& c : r.cells)
    cells.push_back({{"condition", c.condition},
                     {"model", c.model},
                     {"median_nll", num(c.nll.empty() ? 0.0 : stats::median(c.nll))},
                     {"nll", nums(c.nll)},
                     {"true_nll", nums(c.true_nll)}});
  j["cells"] = cells;
  json tests = json::array();
  for (const auto& t : r.tests) tests.push_back({{"name", t.name}, {"result", to_json(t.result)}});
  j["tests"] = tests;
  json pairwise = json::array();
  for (const auto& p : r.pairwise)
    pairwise.push_back({{"name", p.name}, {"labels", p.labels}, {"matrix", to_json(p.matrix)}});
  j["pairwise"] = pairwise;
  return j;
}

Study2Result study2_from_json(const json& j) {
  check_schema(j);
  Study2Result r;
  r.kind = parse_study2_kind(j.at("kind").get<std::string>());
  for (const auto& c : j.at("cells"))
    r.cells.push_back({c.at("condition").get<std::string>(), c.at("model").get<std::string>(),
                       get_nums(c.at("nll")), get_nums(c.at("true_nll"))});
  for (const auto& t : j.at("tests"))
    r.tests.push_back({t.at("name").get<std::string>(), test_result_from_json(t.at("result"))});
  for (const auto& p : j.at("pairwise"))
    r.pairwise.push_back({p.at("name").get<std::string>(), p.at("labels").get<std::vector<std::string>>(),
                          pairwise_from_json(p.at("matrix"))});
  return r;
}

json to_json(const SelectionResult& s) {
  json steps = json::array();
  for (const auto& st : s.steps)
    steps.push_back({{"stage", st.stage},
                     {"incumbent", st.incumbent},
                     {"candidate", st.candidate},
                     {"median_diff", num(st.median_diff)},
                     {"test", to_json(st.test)},
                     {"accepted", st.accepted},
                     {"loss_diff", nums(st.loss_diff)}});
  return {{"selected", s.selected}, {"baseline_nll", nums(s.baseline_nll)}, {"steps", steps}};
}

SelectionResult selection_from_json(const json& j) {
  SelectionResult s;
  s.selected = j.at("selected").get<std::vector<std::string>>();
  s.baseline_nll = get_nums(j.at("baseline_nll"));
  for (const auto& st : j.at("steps")) {
    SelectionStep step;
    step.stage = st.at("stage").get<std::size_t>();
    step.incumbent = st.at("incumbent").get<std::vector<std::string>>();
    step.candidate = st.at("candidate").get<std::vector<std::string>>();
    step.median_diff = get_num(st.at("median_diff"));
    step.test = test_result_from_json(st.at("test"));
    step.accepted = st.at("accepted").get<bool>();
    step.loss_diff = get_nums(st.at("loss_diff"));
    s.steps.push_back(std::move(step));
  }
  return s;
}

json to_json(const Study3Result& r, const RunMetadata& meta) {
  json j = meta_block(meta);
  j["study"] = "study3";
  j["selection"] = to_json(r.selection);
  j["models"] = r.models;
  j["summary"] = model_summary(r.models, r.trials);
  j["trials"] = trials_json(r.trials);
  j["kruskal_wallis"] = to_json(r.kruskal);
  j["pairwise"] = to_json(r.pairwise);
  j["curves"] = to_json(r.curves);
  return j;
}

Study3Result study3_from_json(const json& j) {
  check_schema(j);
  Study3Result r;
  r.selection = selection_from_json(j.at("selection"));
  r.models = j.at("models").get<std::vector<std::string>>();
  r.trials = trials_from_json(j.at("trials"));
  r.kruskal = test_result_from_json(j.at("kruskal_wallis"));
  r.pairwise = pairwise_from_json(j.at("pairwise"));
  r.curves = curve_set_from_json(j.at("curves"));
  return r;
}

Study1Result rounded(const Study1Result& r) {
  Study1Result o = r;
  for (auto& t : o.trials) {
    t.nll = round_all(t.nll);
    t.loss_diff = round_all(t.loss_diff);
  }
  auto round_test = [](stats::TestResult& t) {
    t.statistic = round_all({t.statistic})[0];
    t.p_value = round_all({t.p_value})[0];
  };
  round_test(o.kruskal);
  for (auto& t : o.pairwise.tests) round_test(t);
  o.pairwise.p = round_all(o.pairwise.p);
  o.pairwise.p_holm = round_all(o.pairwise.p_holm);
  o.recovery.pi_vs_sqrt_a = round_all({o.recovery.pi_vs_sqrt_a})[0];
  o.recovery.d_vs_b = round_all({o.recovery.d_vs_b})[0];
  auto round_points = [](CurvePoints& p) {
    p.pi = round_all(p.pi);
    p.d = round_all(p.d);
    p.peak = round_all(p.peak);
  };
  for (auto& c : o.curves.curves) {
    c.grid = round_all(c.grid);
    for (auto& p : c.per_trial) round_points(p);
    round_points(c.mean);
  }
  for (auto& s : o.curves.surfaces) {
    s.grid = round_all(s.grid);
    round_points(s.mean);
  }
  return o;
}

void write_json(const json& j, const fs::path& path) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------

void write_loss_diffs_csv(const std::vector<TrialResult>& trials, const fs::path& path) {
  auto out = open_out(path);
  out << "trial,model,nll,loss_diff\n";
  for (const auto& t : trials)
    for (std::size_t m = 0; m < t.models.size(); ++m)
      out << t.trial_index << ',' << t.models[m] << ',' << format_number(t.nll[m]) << ','
          << format_number(t.loss_diff[m]) << '\n';
}

void write_pairwise_csv(const std::vector<std::string>& labels, const stats::PairwiseMatrix& m, const fs::path& path,
                        bool holm) {
  if (labels.size() != m.k) throw InvalidArgument("pairwise labels do not match the matrix size");
  const auto& p = holm ? m.p_holm : m.p;
  auto out = open_out(path);
  out << "model";
  for (const auto& l : labels) out << ',' << l;
  out << '\n';
  for (std::size_t i = 0; i < m.k; ++i) {
    out << labels[i];
    for (std::size_t j = 0; j < m.k; ++j) out << ',' << format_number(p[i * m.k + j]);
    out << '\n';
  }
}

std::vector<fs::path> write_curve_csvs(const CurveSet& curves, const fs::path& dir) {
  std::vector<fs::path> written;
  for (const auto& c : curves.curves) {
    const auto path = dir / ("curves_" + slug(c.trait) + ".csv");
    auto out = open_out(path);
    out << "trait,pi,d,peak\n";
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
      out << format_number(c.grid[i]) << ',';
      write_points_row(out, c.mean, i);
    }
    written.push_back(path);
  }
  for (const auto& s : curves.surfaces) {
    const auto path =
        dir / ("curves_" + slug(s.trait_x) + "_x_" + slug(s.trait_y) + "_others_" + slug(s.others_at) + ".csv");
    auto out = open_out(path);
    out << s.trait_x << ',' << s.trait_y << ",pi,d,peak\n";
    const std::size_t g = s.grid.size();
    for (std::size_t ix = 0; ix < g; ++ix)
      for (std::size_t iy = 0; iy < g; ++iy) {
        out << format_number(s.grid[ix]) << ',' << format_number(s.grid[iy]) << ',';
        write_points_row(out, s.mean, ix * g + iy);
      }
    written.push_back(path);
  }
  return written;
}

void write_study1_outputs(const Study1Result& r, const RunMetadata& meta, const fs::path& dir) {
  write_json(to_json(r, meta), dir / "results.json");
  write_loss_diffs_csv(r.trials, dir / "loss_diffs.csv");
  write_pairwise_csv(r.models, r.pairwise, dir / "pairwise_p.csv");
  write_curve_csvs(r.curves, dir);
}

void write_study2_outputs(const Study2Result& r, const RunMetadata& meta, const fs::path& dir) {
  write_json(to_json(r, meta), dir / "results.json");
  auto out = open_out(dir / "nll.csv");
  out << "condition,model,trial,nll,true_nll\n";
  for (const auto& c : r.cells)
    for (std::size_t k = 0; k < c.nll.size(); ++k)
      out << c.condition << ',' << c.model << ',' << k << ',' << format_number(c.nll[k]) << ','
          << format_number(k < c.true_nll.size() ? c.true_nll[k] : std::nan("")) << '\n';
  for (const auto& p : r.pairwise) {
    const auto name = r.pairwise.size() == 1 ? std::string("pairwise_p.csv") : "pairwise_p_" + slug(p.name) + ".csv";
    write_pairwise_csv(p.labels, p.matrix, dir / name);
  }
}

void write_study3_outputs(const Study3Result& r, const RunMetadata& meta, const fs::path& dir) {
  write_json(to_json(r, meta), dir / "results.json");
  json path = meta_block(meta);
  path["selection"] = to_json(r.selection);
  write_json(path, dir / "selection_path.json");
  write_loss_diffs_csv(r.trials, dir / "loss_diffs.csv");
  if (!r.models.empty()) write_pairwise_csv(r.models, r.pairwise, dir / "pairwise_p.csv");
  write_curve_csvs(r.curves, dir);
}

}  // namespace mlspeak
