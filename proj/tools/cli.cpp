#include "cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "robust/cellwise.hpp"
#include "robust/covariance.hpp"
#include "robust/csv.hpp"
#include "robust/models.hpp"
#include "robust/pca.hpp"
#include "robust/random.hpp"
#include "robust/regression.hpp"
#include "robust/svg.hpp"
#include "robust/univariate.hpp"

namespace robust::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

constexpr const char* kVersion = "0.1.0";

struct Config {
  std::string input;
  std::string out_dir = "robust_out";
  std::vector<std::string> columns;
  std::string header = "auto";
  std::optional<long> h;
  std::optional<double> h_frac;
  int starts = 500;
  std::uint64_t seed = 0;
  std::optional<double> cutoff;
  std::optional<long> k;
  std::string response;
  std::string labels;
  bool no_reweight = false;
  double rho = -1.0;
  long block_size = 5;
  std::string scale = "mad";
  std::string method;
  std::string estimator = "mcd";
  std::string target = "identity";
  int dirs = 500;
};

// ---------------------------------------------------------------------------
// Output helpers

std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) : header_(std::move(header)) {}

  Table& row() {
    rows_.emplace_back();
    return *this;
  }
  Table& add(const std::string& s) {
    rows_.back().push_back(s);
    return *this;
  }
  Table& add(double v) { return add(fmt(v)); }
  Table& add(long v) { return add(std::to_string(v)); }
  Table& add(int v) { return add(std::to_string(v)); }
  Table& add(bool v) { return add(std::string(v ? "1" : "0")); }
  Table& add(const char* s) { return add(std::string(s)); }

  std::string str() const {
    std::ostringstream o;
    line(o, header_);
    for (const auto& r : rows_) line(o, r);
    return o.str();
  }

 private:
  static void line(std::ostream& o, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) o << ',';
      const bool quote = cells[i].find_first_of(",\"\n") != std::string::npos;
      if (quote) {
        o << '"';
        for (char c : cells[i]) o << (c == '"' ? "\"\"" : std::string(1, c));
        o << '"';
      } else {
        o << cells[i];
      }
    }
    o << '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Plot with numeric companions: <name>_points.csv, <name>_cutoffs.csv and,
// when there are curves, <name>_lines.csv.
struct PlotData {
  std::string name, title, xlabel, ylabel;
  struct Point {
    long id;
    double x, y;
    std::string group;
  };
  struct Curve {
    std::string name;
    std::vector<double> x, y;
  };
  struct Cut {
    std::string name;
    char axis;
    double value;
  };
  std::vector<Point> points;
  std::vector<Curve> curves;
  std::vector<Cut> cuts;
  bool equal_aspect = false;
};

const std::map<std::string, std::string>& palette() {
  static const std::map<std::string, std::string> p{
      {"regular", "#3b6fb6"}, {"ok", "#3b6fb6"}, {"inlier", "#3b6fb6"},
      {"flagged", "#d7191c"}, {"outlier", "#d7191c"}, {"vertical", "#fdae61"},
      {"good_leverage", "#1a9641"}, {"orthogonal", "#fdae61"}, {"bad_leverage", "#d7191c"},
      {"trimmed", "#999999"}, {"center", "#000000"}};
  return p;
}

std::string color_for(const std::string& group, std::size_t ordinal) {
  const auto& p = palette();
  if (auto it = p.find(group); it != p.end()) return it->second;
  static const std::vector<std::string> cycle{"#3b6fb6", "#d7191c", "#1a9641", "#7b3294", "#fdae61",
                                              "#2c7bb6", "#a6611a", "#018571"};
  return cycle[ordinal % cycle.size()];
}

class Run {
 public:
  Run(const Config& cfg, std::string command, std::ostream& out)
      : cfg_(cfg), command_(std::move(command)), out_(out), start_(Clock::now()) {}

  void mark(const std::string& phase) {
    const auto now = Clock::now();
    timings_[phase] = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
  }
  void begin() { last_ = Clock::now(); }

  void write(const std::string& name, const std::string& content) {
    fs::create_directories(cfg_.out_dir);
    const fs::path p = fs::path(cfg_.out_dir) / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw InputError("cannot write " + p.string());
    f << content;
    files_.push_back(name);
    out_ << p.string() << '\n';
  }

  void write_plot(const PlotData& pd) {
    svg::Plot plot(pd.title, pd.xlabel, pd.ylabel);
    if (pd.equal_aspect) plot.equal_aspect();
    std::vector<std::string> order;
    std::map<std::string, svg::Series> groups;
    for (const auto& p : pd.points) {
      if (!groups.count(p.group)) {
        order.push_back(p.group);
        groups[p.group] = svg::Series{p.group, color_for(p.group, order.size() - 1), {}, {}, false};
      }
      groups[p.group].x.push_back(p.x);
      groups[p.group].y.push_back(p.y);
    }
    for (const auto& g : order) plot.add(groups[g]);
    std::size_t ci = 0;
    for (const auto& c : pd.curves)
      plot.add(svg::Series{c.name, ci++ == 0 ? "#555555" : "#d7191c", c.x, c.y, true});
    for (const auto& c : pd.cuts) {
      if (c.axis == 'x') plot.vline(c.value);
      else plot.hline(c.value);
    }
    write(pd.name + ".svg", plot.render());

    Table pts({"id", "x", "y", "group"});
    for (const auto& p : pd.points) pts.row().add(p.id).add(p.x).add(p.y).add(p.group);
    write(pd.name + "_points.csv", pts.str());
    Table cuts({"name", "axis", "value"});
    for (const auto& c : pd.cuts) cuts.row().add(c.name).add(std::string(1, c.axis)).add(c.value);
    write(pd.name + "_cutoffs.csv", cuts.str());
    if (!pd.curves.empty()) {
      Table lines({"curve", "vertex", "x", "y"});
      for (const auto& c : pd.curves)
        for (std::size_t i = 0; i < c.x.size(); ++i)
          lines.row().add(c.name).add(static_cast<long>(i)).add(c.x[i]).add(c.y[i]);
      write(pd.name + "_lines.csv", lines.str());
    }
  }

  json& results() { return results_; }
  json& input() { return input_; }

  void finish(const json& config) {
    mark("write");
    json m;
    m["tool"] = "robust-anomaly";
    m["version"] = kVersion;
    m["subcommand"] = command_;
    m["input"] = input_;
    m["config"] = config;
    m["threads"] = thread_limit();
    m["versions"] = {{"tool", kVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                   "." + std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__},
                     {"cxx", static_cast<long>(__cplusplus)}};
    m["results"] = results_;
    json t;
    for (const auto& [k, v] : timings_) t[k] = v;
    t["total"] = std::chrono::duration<double, std::milli>(Clock::now() - start_).count();
    m["timings_ms"] = t;
    files_.push_back("manifest.json");
    m["outputs"] = files_;
    write("manifest.json", m.dump(2) + "\n");
  }

 private:
  const Config& cfg_;
  std::string command_;
  std::ostream& out_;
  Clock::time_point start_, last_;
  std::vector<std::string> files_;
  std::map<std::string, double> timings_;
  json results_ = json::object();
  json input_ = json::object();
};

// ---------------------------------------------------------------------------
// Input

struct Dataset {
  csv::Table table;
  std::vector<std::size_t> columns;  // numeric selection
  std::vector<std::string> names;
  MatrixXd X;
  std::optional<std::size_t> response_col;
  std::optional<std::size_t> label_col;
};

Dataset ingest(const Config& cfg, Run& run) {
  if (cfg.input.empty()) throw InputError("no input file given");
  std::optional<bool> header;
  if (cfg.header == "yes") header = true;
  else if (cfg.header == "no") header = false;
  Dataset ds{csv::read_file(cfg.input, header), {}, {}, {}, {}, {}};
  if (!cfg.response.empty()) ds.response_col = csv::resolve_column(ds.table, cfg.response);
  if (!cfg.labels.empty()) ds.label_col = csv::resolve_column(ds.table, cfg.labels);
  if (!cfg.columns.empty()) {
    for (const auto& c : cfg.columns) ds.columns.push_back(csv::resolve_column(ds.table, c));
  } else {
    for (std::size_t j = 0; j < ds.table.names.size(); ++j)
      if (j != ds.response_col && j != ds.label_col) ds.columns.push_back(j);
  }
  for (auto c : ds.columns) {
    if (c == ds.response_col) throw InputError("the response column is also selected as a predictor");
    if (c == ds.label_col) throw InputError("the label column is also selected as a variable");
    ds.names.push_back(ds.table.names[c]);
  }
  ds.X = csv::numeric(ds.table, ds.columns);
  run.input() = {{"path", cfg.input},
                 {"rows", ds.X.rows()},
                 {"columns", ds.names},
                 {"delimiter", ds.table.delimiter == '\t' ? "tab" : "comma"},
                 {"header", ds.table.header}};
  if (ds.response_col) run.input()["response"] = ds.table.names[*ds.response_col];
  if (ds.label_col) run.input()["labels"] = ds.table.names[*ds.label_col];
  return ds;
}

Index resolve_h(const Config& cfg, Index n, Index fallback) {
  if (cfg.h && cfg.h_frac) throw InputError("give either --h or --h-frac, not both");
  if (cfg.h) return static_cast<Index>(*cfg.h);
  if (cfg.h_frac) {
    if (!(*cfg.h_frac > 0.0 && *cfg.h_frac <= 1.0)) throw InputError("--h-frac must lie in (0, 1]");
    return static_cast<Index>(std::floor(*cfg.h_frac * static_cast<double>(n)));
  }
  return fallback;
}

std::vector<double> col_vec(const MatrixXd& X, Index j) {
  return std::vector<double>(X.col(j).data(), X.col(j).data() + X.rows());
}

template <class F>
double or_na(F f) {
  try {
    return f();
  } catch (const Error&) {
    return std::nan("");
  }
}

void require_columns(const MatrixXd& X, Index min_cols, const char* cmd) {
  if (X.cols() < min_cols) {
    std::ostringstream os;
    os << cmd << " needs at least " << min_cols << " numeric column(s), got " << X.cols();
    throw InputError(os.str());
  }
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_univariate(const Config& cfg, Run& run) {
  const auto ds = ingest(cfg, run);
  run.mark("ingest");
  const double cut = cfg.cutoff.value_or(kDefaultScoreCutoff);
  Table rep({"column", "row", "value", "robust_score", "robust_flag", "z_score", "z_flag"});
  Table sum({"column", "n", "mean", "stdev", "median", "mad", "qn", "iqr", "huber_location",
             "lower_fence", "upper_fence", "robust_flagged", "z_flagged"});
  PlotData pd{"univariate_scores", "Robust scores", "row", "robust score", {}, {}, {}, false};
  json res = json::array();
  for (Index j = 0; j < ds.X.cols(); ++j) {
    const auto x = col_vec(ds.X, j);
    const auto rs = robust_scores(x, cut);
    std::optional<UnivariateReport> zs;
    try {
      zs = z_scores(x, cut);
    } catch (const DegenerateError&) {
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      rep.row().add(ds.names[static_cast<std::size_t>(j)]).add(static_cast<long>(i + 1)).add(x[i]);
      rep.add(rs.scores[i]).add(static_cast<bool>(rs.flagged[i]));
      if (zs) rep.add(zs->scores[i]).add(static_cast<bool>(zs->flagged[i]));
      else rep.add("NA").add("NA");
      pd.points.push_back({static_cast<long>(i + 1), static_cast<double>(i + 1), rs.scores[i],
                           ds.X.cols() == 1 ? (rs.flagged[i] ? "flagged" : "regular")
                                            : ds.names[static_cast<std::size_t>(j)]});
    }
    const double huber = or_na([&] { return m_location(x, PsiSpec::huber()).location; });
    const double iqr = or_na([&] { return iqr_normalized(x); });
    double lo = std::nan(""), hi = std::nan("");
    try {
      const auto f = boxplot_fences(x);
      lo = f.lower;
      hi = f.upper;
    } catch (const Error&) {
    }
    sum.row().add(ds.names[static_cast<std::size_t>(j)]).add(static_cast<long>(x.size()));
    sum.add(mean(x)).add(or_na([&] { return stdev(x); })).add(median(x)).add(mad(x));
    sum.add(or_na([&] { return qn(x); })).add(iqr).add(huber).add(lo).add(hi);
    sum.add(static_cast<long>(rs.flagged_count())).add(zs ? static_cast<long>(zs->flagged_count()) : -1L);
    res.push_back({{"column", ds.names[static_cast<std::size_t>(j)]},
                   {"median", rs.location},
                   {"mad", rs.scale},
                   {"flagged", rs.flagged_count()}});
  }
  run.mark("compute");
  pd.cuts = {{"upper", 'y', cut}, {"lower", 'y', -cut}};
  run.write("univariate_report.csv", rep.str());
  run.write("univariate_summary.csv", sum.str());
  run.write_plot(pd);
  run.results()["columns"] = res;
  run.results()["cutoff"] = cut;
}

void write_estimates(Run& run, const std::string& file, const std::vector<std::string>& names,
                     const std::vector<std::pair<std::string, const LocationScatter*>>& fits) {
  std::vector<std::string> header{"estimate", "variable", "center"};
  for (const auto& n : names) header.push_back(n);
  Table t(header);
  for (const auto& [label, ls] : fits) {
    if (!ls) continue;
    for (std::size_t a = 0; a < names.size(); ++a) {
      t.row().add(label).add(names[a]).add(ls->center(static_cast<Index>(a)));
      for (std::size_t b = 0; b < names.size(); ++b) t.add(ls->scatter(static_cast<Index>(a), static_cast<Index>(b)));
    }
  }
  run.write(file, t.str());
}

void distance_outputs(Run& run, const std::string& prefix, const MatrixXd& X,
                      const std::optional<LocationScatter>& classical, const LocationScatter& fit,
                      const std::vector<std::string>& names) {
  const auto rd = mahalanobis_distances(X, fit);
  std::optional<DistanceReport> md;
  if (classical) md = mahalanobis_distances(X, *classical);
  Table rep({"row", "md", "rd", "md_flag", "rd_flag", "weight"});
  long flagged = 0;
  for (Index i = 0; i < X.rows(); ++i) {
    rep.row().add(static_cast<long>(i + 1));
    if (md) rep.add(md->distances(i));
    else rep.add("NA");
    rep.add(rd.distances(i));
    if (md) rep.add(static_cast<bool>(md->flags[static_cast<std::size_t>(i)]));
    else rep.add("NA");
    rep.add(static_cast<bool>(rd.flags[static_cast<std::size_t>(i)]));
    int w = 0;
    if (!fit.weights.empty()) w = fit.weights[static_cast<std::size_t>(i)];
    else w = std::binary_search(fit.best_subset.begin(), fit.best_subset.end(), i) ? 1 : 0;
    rep.add(w);
    flagged += rd.flags[static_cast<std::size_t>(i)];
  }
  run.write(prefix + "_report.csv", rep.str());
  write_estimates(run, prefix + "_estimates.csv", names,
                  {{"classical", classical ? &*classical : nullptr}, {prefix, &fit}});

  PlotData pd;
  if (md) {
    pd = {"dd_plot", "Distance-distance plot", "Mahalanobis distance", "robust distance", {}, {}, {}, false};
    for (Index i = 0; i < X.rows(); ++i)
      pd.points.push_back({static_cast<long>(i + 1), md->distances(i), rd.distances(i),
                           rd.flags[static_cast<std::size_t>(i)] ? "flagged" : "regular"});
    const double top = std::max(md->distances.maxCoeff(), rd.distances.maxCoeff());
    pd.curves.push_back({"identity", {0.0, top}, {0.0, top}});
    pd.cuts = {{"md_cutoff", 'x', md->cutoff}, {"rd_cutoff", 'y', rd.cutoff}};
  } else {
    pd = {"distance_plot", "Robust distances", "row", "robust distance", {}, {}, {}, false};
    for (Index i = 0; i < X.rows(); ++i)
      pd.points.push_back({static_cast<long>(i + 1), static_cast<double>(i + 1), rd.distances(i),
                           rd.flags[static_cast<std::size_t>(i)] ? "flagged" : "regular"});
    pd.cuts = {{"rd_cutoff", 'y', rd.cutoff}};
  }
  run.write_plot(pd);

  if (X.cols() == 2) {
    PlotData te{"tolerance_ellipse", "97.5% tolerance ellipses", names[0], names[1], {}, {}, {}, true};
    for (Index i = 0; i < X.rows(); ++i)
      te.points.push_back({static_cast<long>(i + 1), X(i, 0), X(i, 1),
                           rd.flags[static_cast<std::size_t>(i)] ? "flagged" : "regular"});
    auto add_curve = [&](const std::string& name, const LocationScatter& ls) {
      PlotData::Curve c{name, {}, {}};
      for (const auto& v : tolerance_ellipse(ls.center, ls.scatter)) {
        c.x.push_back(v[0]);
        c.y.push_back(v[1]);
      }
      te.curves.push_back(std::move(c));
    };
    if (classical) add_curve("classical", *classical);
    add_curve("robust", fit);
    run.write_plot(te);
  }
  run.results()["flagged"] = flagged;
  run.results()["rd_cutoff"] = rd.cutoff;
}

std::optional<LocationScatter> classical_if_regular(const MatrixXd& X) {
  if (X.rows() <= X.cols()) return std::nullopt;
  auto c = classical_moments(X);
  if (c.exact_fit) return std::nullopt;
  return c;
}

void cmd_mcd(const Config& cfg, Run& run) {
  const auto ds = ingest(cfg, run);
  run.mark("ingest");
  const Index n = ds.X.rows(), d = ds.X.cols();
  McdOptions opt;
  opt.h = resolve_h(cfg, n, default_mcd_h(n, d));
  opt.n_starts = cfg.starts;
  opt.seed = cfg.seed;
  opt.reweight = !cfg.no_reweight;
  const auto fit = fast_mcd(ds.X, opt);
  if (fit.exact_fit) {
    std::ostringstream os;
    os << "exact fit: at least h=" << fit.h << " rows lie on the hyperplane with normal (";
    for (Index j = 0; j < d; ++j) os << (j ? ", " : "") << fmt(fit.hyperplane->normal(j));
    os << ") and offset " << fmt(fit.hyperplane->offset);
    throw DegenerateError(os.str());
  }
  const auto classical = classical_if_regular(ds.X);
  run.mark("compute");
  distance_outputs(run, "mcd", ds.X, classical, fit, ds.names);
  run.results()["h"] = fit.h;
  run.results()["log_det"] = std::log(fit.objective);
  run.results()["consistency_factor"] = fit.consistency_factor;
  run.results()["reweighted"] = fit.reweighted;
}

void cmd_mrcd(const Config& cfg, Run& run) {
  const auto ds = ingest(cfg, run);
  run.mark("ingest");
  const Index n = ds.X.rows(), d = ds.X.cols();
  MrcdOptions opt;
  opt.h = resolve_h(cfg, n, 0);
  opt.rho = cfg.rho;
  opt.n_starts = cfg.starts;
  opt.seed = cfg.seed;
  if (cfg.target == "identity") opt.target = MrcdTarget::identity;
  else if (cfg.target == "equicorrelation") opt.target = MrcdTarget::equicorrelation;
  else throw InputError("--target must be identity or equicorrelation");
  const auto fit = mrcd(ds.X, opt);
  const auto classical = classical_if_regular(ds.X);
  run.mark("compute");
  distance_outputs(run, "mrcd", ds.X, classical, fit, ds.names);
  run.results()["h"] = fit.h;
  run.results()["rho"] = fit.rho;
  (void)d;
}

void cmd_sdoutl(const Config& cfg, Run& run) {
  const auto ds = ingest(cfg, run);
  run.mark("ingest");
  const auto rep = stahel_donoho(ds.X, cfg.dirs, cfg.seed);
  const double cut = cfg.cutoff.value_or(std::sqrt(dist::chi2_quantile(0.975, static_cast<double>(ds.X.cols()))));
  run.mark("compute");
  Table t({"row", "outlyingness", "flag"});
  PlotData pd{"outlyingness", "Stahel-Donoho outlyingness", "row", "outlyingness", {}, {}, {}, false};
  long flagged = 0;
  for (Index i = 0; i < ds.X.rows(); ++i) {
    const bool f = rep.outl(i) > cut;
    flagged += f;
    t.row().add(static_cast<long>(i + 1)).add(rep.outl(i)).add(f);
    pd.points.push_back({static_cast<long>(i + 1), static_cast<double>(i + 1), rep.outl(i), f ? "flagged" : "regular"});
  }
  pd.cuts = {{"cutoff", 'y', cut}};
  run.write("sdoutl_report.csv", t.str());
  run.write_plot(pd);
  run.results() = {{"cutoff", cut},
                   {"flagged", flagged},
                   {"directions_used", rep.directions_used},
                   {"directions_skipped", rep.directions_skipped}};
}

void cmd_lts(const Config& cfg, Run& run) {
  if (cfg.response.empty()) throw InputError("lts needs --response");
  const auto ds = ingest(cfg, run);
  run.mark("ingest");
  const Index n = ds.X.rows(), d = ds.X.cols();
  require_columns(ds.X, 1, "lts");
  RegressionData data{ds.X, csv::numeric(ds.table, {*ds.response_col}).col(0), true};
  const double cut = cfg.cutoff.value_or(2.5);
  LtsOptions opt;
  opt.h = resolve_h(cfg, n, default_lts_h(n, d));
  opt.n_starts = cfg.starts;
  opt.seed = cfg.seed;
  const auto raw = fast_lts(data, opt);
  if (raw.exact_fit) {
    std::ostringstream os;
    os << "exact fit: at least h=" << raw.h << " cases lie on y =";
    for (Index j = 0; j < raw.beta.size(); ++j) os << ' ' << fmt(raw.beta(j)) << (j ? " x" + std::to_string(j) : "");
    throw DegenerateError(os.str());
  }
  std::optional<RegressionFit> rew;
  if (!cfg.no_reweight) rew = reweighted_ls(data, raw, cut);
  const auto ls = least_squares(data);
  McdOptions mo;
  mo.n_starts = cfg.starts;
  mo.seed = cfg.seed;
  const auto xs = fast_mcd(data.X, mo);
  if (xs.exact_fit) throw DegenerateError("predictor scatter is singular (exact fit among the x-variables)");
  const auto map = regression_outlier_map(data, raw, xs, cut);
  run.mark("compute");

  const RegressionFit& final_fit = rew ? *rew : raw;
  Table rep({"row", "y", "fitted", "residual", "std_residual", "rd_x", "weight", "class"});
  PlotData pd{"regression_outlier_map", "Regression outlier map", "robust distance of x",
              "standardized LTS residual", {}, {}, {}, false};
  std::map<std::string, long> counts;
  for (Index i = 0; i < n; ++i) {
    const std::string cls = to_string(map.cls[static_cast<std::size_t>(i)]);
    ++counts[cls];
    rep.row().add(static_cast<long>(i + 1)).add(data.y(i)).add(data.y(i) - final_fit.residuals(i));
    rep.add(final_fit.residuals(i)).add(map.std_resid(i)).add(map.rd_x(i));
    rep.add(final_fit.weights[static_cast<std::size_t>(i)]).add(cls);
    pd.points.push_back({static_cast<long>(i + 1), map.rd_x(i), map.std_resid(i), cls});
  }
  pd.cuts = {{"resid_upper", 'y', cut}, {"resid_lower", 'y', -cut}, {"rd_cutoff", 'x', map.rd_cutoff}};
  run.write("lts_report.csv", rep.str());

  Table coef({"term", "ls", "lts_raw", "reweighted", "std_error", "t_value", "p_value"});
  for (Index j = 0; j < raw.beta.size(); ++j) {
    coef.row().add(j == 0 ? std::string("(intercept)") : ds.names[static_cast<std::size_t>(j - 1)]);
    coef.add(ls.beta(j)).add(raw.beta(j));
    if (rew) {
      const auto& inf = *rew->inference;
      coef.add(rew->beta(j)).add(inf.std_errors(j)).add(inf.t_values(j)).add(inf.p_values(j));
    } else {
      coef.add("NA").add("NA").add("NA").add("NA");
    }
  }
  run.write("lts_coefficients.csv", coef.str());
  run.write_plot(pd);

  json res{{"h", raw.h},
           {"sigma_lts", raw.scale},
           {"chn", raw.chn},
           {"objective", raw.objective},
           {"classes", counts},
           {"rd_cutoff", map.rd_cutoff}};
  if (rew) {
    const auto& inf = *rew->inference;
    res["reweighted"] = {{"scale", rew->scale},
                         {"cases", rew->h},
                         {"r_squared", inf.r_squared},
                         {"adj_r_squared", inf.adj_r_squared},
                         {"f_statistic", inf.f_statistic},
                         {"f_p_value", inf.f_p_value},
                         {"df_residual", inf.df_residual}};
  }
  run.results() = res;
}

void cmd_pca(const Config& cfg, Run& run) {
  const auto ds = ingest(cfg, run);
  run.mark("ingest");
  const Index n = ds.X.rows(), d = ds.X.cols();
  const Index k = cfg.k ? static_cast<Index>(*cfg.k) : std::min<Index>(2, std::min(d, n - 1));
  const std::string method = cfg.method.empty() ? "robpca" : cfg.method;
  PCAModel model;
  if (method == "robpca") model = robust_pca(ds.X, k, resolve_h(cfg, n, 0), cfg.dirs, cfg.seed);
  else if (method == "spherical") model = spherical_pca(ds.X, k);
  else if (method == "classical") model = classical_pca(ds.X, k);
  else throw InputError("--method for pca must be robpca, spherical or classical");
  const auto map = pca_distances(model, ds.X);
  run.mark("compute");

  const MatrixXd T = (ds.X.rowwise() - model.center.transpose()) * model.loadings;
  std::vector<std::string> header{"row", "od", "sd", "class"};
  for (Index j = 0; j < k; ++j) header.push_back("score_" + std::to_string(j + 1));
  Table rep(header);
  PlotData pd{"pca_outlier_map", "PCA outlier map", "score distance", "orthogonal distance", {}, {}, {}, false};
  std::map<std::string, long> counts;
  for (Index i = 0; i < n; ++i) {
    const std::string cls = to_string(map.cls[static_cast<std::size_t>(i)]);
    ++counts[cls];
    rep.row().add(static_cast<long>(i + 1)).add(map.od(i)).add(map.sd(i)).add(cls);
    for (Index j = 0; j < k; ++j) rep.add(T(i, j));
    pd.points.push_back({static_cast<long>(i + 1), map.sd(i), map.od(i), cls});
  }
  pd.cuts = {{"sd_cutoff", 'x', map.sd_cutoff}, {"od_cutoff", 'y', map.od_cutoff}};
  run.write("pca_report.csv", rep.str());

  std::vector<std::string> lh{"variable", "center"};
  for (Index j = 0; j < k; ++j) lh.push_back("PC" + std::to_string(j + 1));
  Table load(lh);
  for (Index a = 0; a < d; ++a) {
    load.row().add(ds.names[static_cast<std::size_t>(a)]).add(model.center(a));
    for (Index j = 0; j < k; ++j) load.add(model.loadings(a, j));
  }
  run.write("pca_loadings.csv", load.str());
  Table ev({"component", "eigenvalue", "scatter_eigenvalue"});
  for (Index j = 0; j < model.scree.size(); ++j)
    ev.row().add(static_cast<long>(j + 1)).add(j < k ? model.eigenvalues(j) : std::nan("")).add(model.scree(j));
  run.write("pca_eigenvalues.csv", ev.str());
  run.write_plot(pd);

  PlotData scree{"scree", "Scree plot", "component", "eigenvalue", {}, {}, {}, false};
  PlotData::Curve c{"scree", {}, {}};
  for (Index j = 0; j < model.scree.size(); ++j) {
    scree.points.push_back({static_cast<long>(j + 1), static_cast<double>(j + 1), model.scree(j),
                            j < k ? "retained" : "dropped"});
    c.x.push_back(static_cast<double>(j + 1));
    c.y.push_back(model.scree(j));
  }
  scree.curves.push_back(c);
  run.write_plot(scree);
  run.results() = {{"method", to_string(model.method)},
                   {"k", k},
                   {"od_cutoff", map.od_cutoff},
                   {"sd_cutoff", map.sd_cutoff},
                   {"classes", counts}};
  if (model.method == PcaMethod::robpca) run.results()["h"] = model.kept.size();
}

void cmd_discriminant(const Config& cfg, Run& run, DiscriminantKind kind) {
  if (cfg.labels.empty()) throw InputError(std::string(to_string(kind)) + " needs --labels");
  const auto ds = ingest(cfg, run);
  run.mark("ingest");
  std::set<std::string> distinct;
  for (const auto& row : ds.table.cells) distinct.insert(row[*ds.label_col]);
  const std::vector<std::string> names(distinct.begin(), distinct.end());
  std::map<std::string, int> code;
  for (std::size_t j = 0; j < names.size(); ++j) code[names[j]] = static_cast<int>(j);
  GroupedData data{ds.X, {}};
  for (const auto& row : ds.table.cells) data.labels.push_back(code[row[*ds.label_col]]);

  DiscriminantOptions opt;
  if (cfg.estimator == "classical") opt.estimator = MomentEstimator::classical;
  else if (cfg.estimator != "mcd") throw InputError("--estimator must be mcd or classical");
  if (cfg.h) throw InputError("use --h-frac for discriminant analysis (group sizes differ)");
  if (cfg.h_frac) opt.h_frac = *cfg.h_frac;
  opt.n_starts = cfg.starts;
  opt.seed = cfg.seed;
  opt.reweight = !cfg.no_reweight;
  const auto model = train_discriminant(data, kind, opt);
  const auto cls = classify(model, ds.X);
  run.mark("compute");

  const std::string prefix = to_string(kind);
  std::vector<std::string> header{"row", "label", "predicted", "tied"};
  for (const auto& g : names) header.push_back("score_" + g);
  Table rep(header);
  long correct = 0;
  PlotData pd{prefix + "_classes", "Predicted groups", ds.names[0],
              ds.X.cols() > 1 ? ds.names[1] : std::string("row"), {}, {}, {}, false};
  for (Index i = 0; i < ds.X.rows(); ++i) {
    const auto& truth = names[static_cast<std::size_t>(data.labels[static_cast<std::size_t>(i)])];
    const auto& pred = names[static_cast<std::size_t>(cls.labels[static_cast<std::size_t>(i)])];
    correct += truth == pred;
    rep.row().add(static_cast<long>(i + 1)).add(truth).add(pred).add(static_cast<bool>(cls.tied[static_cast<std::size_t>(i)]));
    for (Index j = 0; j < cls.scores.cols(); ++j) rep.add(cls.scores(i, j));
    pd.points.push_back({static_cast<long>(i + 1), ds.X(i, 0),
                         ds.X.cols() > 1 ? ds.X(i, 1) : static_cast<double>(i + 1), pred});
  }
  run.write(prefix + "_report.csv", rep.str());

  std::vector<std::string> mh{"group", "size", "prior"};
  for (const auto& v : ds.names) mh.push_back("mean_" + v);
  Table mt(mh);
  std::vector<std::string> sh{"group", "variable"};
  for (const auto& v : ds.names) sh.push_back(v);
  Table st(sh);
  for (std::size_t g = 0; g < model.groups.size(); ++g) {
    const auto& gname = names[static_cast<std::size_t>(model.groups[g])];
    mt.row().add(gname).add(static_cast<long>(model.sizes[g])).add(model.priors[g]);
    for (Index a = 0; a < ds.X.cols(); ++a) mt.add(model.mu[g](a));
    // LDA has a single pooled scatter
    if (kind == DiscriminantKind::lda && g > 0) continue;
    const MatrixXd& S = kind == DiscriminantKind::lda ? model.pooled : model.sigma[g];
    for (Index a = 0; a < ds.X.cols(); ++a) {
      st.row().add(kind == DiscriminantKind::lda ? std::string("pooled") : gname).add(ds.names[static_cast<std::size_t>(a)]);
      for (Index b = 0; b < ds.X.cols(); ++b) st.add(S(a, b));
    }
  }
  run.write(prefix + "_model.csv", mt.str());
  run.write(prefix + "_scatter.csv", st.str());
  run.write_plot(pd);
  run.results() = {{"estimator", to_string(model.estimator)},
                   {"groups", names},
                   {"training_accuracy", static_cast<double>(correct) / static_cast<double>(ds.X.rows())}};
}

void cmd_tkmeans(const Config& cfg, Run& run) {
  const auto ds = ingest(cfg, run);
  run.mark("ingest");
  const Index n = ds.X.rows();
  TkmeansOptions opt;
  opt.h = resolve_h(cfg, n, 0);
  opt.n_starts = cfg.starts;
  opt.seed = cfg.seed;
  const Index k = cfg.k ? static_cast<Index>(*cfg.k) : 2;
  const auto r = trimmed_kmeans(ds.X, k, opt);
  run.mark("compute");
  Table rep({"row", "cluster", "trimmed", "distance"});
  PlotData pd{"tkmeans_clusters", "Trimmed k-means", ds.names[0],
              ds.X.cols() > 1 ? ds.names[1] : std::string("row"), {}, {}, {}, false};
  for (Index i = 0; i < n; ++i) {
    const int a = r.assignment[static_cast<std::size_t>(i)];
    double best = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < k; ++c) best = std::min(best, (ds.X.row(i) - r.centers.row(c)).norm());
    rep.row().add(static_cast<long>(i + 1)).add(a + 1).add(a < 0).add(best);
    pd.points.push_back({static_cast<long>(i + 1), ds.X(i, 0), ds.X.cols() > 1 ? ds.X(i, 1) : static_cast<double>(i + 1),
                         a < 0 ? std::string("trimmed") : "cluster " + std::to_string(a + 1)});
  }
  run.write("tkmeans_report.csv", rep.str());
  std::vector<std::string> ch{"cluster", "size"};
  for (const auto& v : ds.names) ch.push_back(v);
  Table ct(ch);
  for (Index c = 0; c < k; ++c) {
    long size = 0;
    for (int a : r.assignment) size += a == c;
    ct.row().add(static_cast<long>(c + 1)).add(size);
    for (Index j = 0; j < ds.X.cols(); ++j) ct.add(r.centers(c, j));
  }
  run.write("tkmeans_centers.csv", ct.str());
  run.write_plot(pd);
  run.results() = {{"k", k}, {"h", r.h}, {"objective", r.objective}};
}

void cmd_cellmap(const Config& cfg, Run& run) {
  const auto ds = ingest(cfg, run);
  run.mark("ingest");
  const double cut = cfg.cutoff.value_or(kDefaultScoreCutoff);
  CellScale scale = CellScale::mad;
  if (cfg.scale == "qn") scale = CellScale::qn;
  else if (cfg.scale != "mad") throw InputError("--scale must be mad or qn");
  if (cfg.block_size < 1) throw InputError("--block-size must be at least 1");
  const auto flags = flag_cells(ds.X, cut, scale);
  RowFlagOptions ro;
  ro.n_starts = cfg.starts;
  ro.seed = cfg.seed;
  const std::string method = cfg.method.empty() ? "mcd" : cfg.method;
  if (method == "pca" || method == "robpca") {
    ro.method = RowMethod::robust_pca;
    ro.k = cfg.k ? static_cast<Index>(*cfg.k) : std::min<Index>(2, ds.X.cols());
  } else if (method != "mcd") {
    throw InputError("--method for cellmap must be mcd or pca");
  }
  const auto rows = rowwise_flags(ds.X, ro);
  const Index b = static_cast<Index>(cfg.block_size);
  const auto grid = block_aggregate(flags, b, b);
  const auto rowmap = rowmap_aggregate(rows.flagged, b);
  run.mark("compute");

  Table cells({"row", "column", "value", "score", "flag"});
  for (Index i = 0; i < ds.X.rows(); ++i)
    for (Index j = 0; j < ds.X.cols(); ++j)
      cells.row().add(static_cast<long>(i + 1)).add(ds.names[static_cast<std::size_t>(j)]).add(ds.X(i, j))
          .add(flags.resid(i, j)).add(to_string(flags.flag[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]));
  run.write("cellmap_cells.csv", cells.str());
  Table rt({"row", "distance", "flagged", "flagged_cells"});
  long rows_with_cells = 0;
  const auto with_flag = flags.rows_with_flag();
  for (Index i = 0; i < ds.X.rows(); ++i) {
    long count = 0;
    for (auto f : flags.flag[static_cast<std::size_t>(i)]) count += f == CellFlag::high || f == CellFlag::low;
    rows_with_cells += with_flag[static_cast<std::size_t>(i)];
    rt.row().add(static_cast<long>(i + 1)).add(rows.distance(i)).add(static_cast<bool>(rows.flagged[static_cast<std::size_t>(i)])).add(count);
  }
  run.write("cellmap_rows.csv", rt.str());

  Table gt({"block_row", "block_col", "rows", "columns", "value"});
  svg::Heatmap cm{{}, grid.row_labels, grid.col_labels, false, "cells"};
  for (Index a = 0; a < grid.cells.rows(); ++a) {
    cm.cells.emplace_back();
    for (Index c = 0; c < grid.cells.cols(); ++c) {
      gt.row().add(static_cast<long>(a + 1)).add(static_cast<long>(c + 1)).add(grid.row_labels[static_cast<std::size_t>(a)])
          .add(grid.col_labels[static_cast<std::size_t>(c)]).add(grid.cells(a, c));
      cm.cells.back().push_back(grid.cells(a, c));
    }
  }
  Table rg({"block_row", "rows", "value"});
  svg::Heatmap rm{{}, rowmap.row_labels, {"row"}, true, "rows"};
  for (Index a = 0; a < rowmap.cells.rows(); ++a) {
    rg.row().add(static_cast<long>(a + 1)).add(rowmap.row_labels[static_cast<std::size_t>(a)]).add(rowmap.cells(a, 0));
    rm.cells.push_back({rowmap.cells(a, 0)});
  }
  run.write("cellmap.svg", svg::render_heatmaps({rm, cm}, "Cell map (red high, blue low, black outlying row)"));
  run.write("cellmap_grid.csv", gt.str());
  run.write("rowmap_grid.csv", rg.str());

  long degenerate = 0;
  for (bool deg : flags.degenerate) degenerate += deg;
  run.results() = {{"cutoff", cut},
                   {"scale", scale == CellScale::mad ? "mad" : "qn"},
                   {"row_method", method},
                   {"rows_flagged", std::count(rows.flagged.begin(), rows.flagged.end(), true)},
                   {"rows_with_flagged_cells", rows_with_cells},
                   {"degenerate_columns", degenerate},
                   {"block_size", b}};
}

json config_json(const Config& c, const std::string& cmd) {
  json j;
  j["subcommand"] = cmd;
  j["input"] = c.input;
  j["out_dir"] = c.out_dir;
  j["columns"] = c.columns;
  j["header"] = c.header;
  j["h"] = c.h ? json(*c.h) : json(nullptr);
  j["h_frac"] = c.h_frac ? json(*c.h_frac) : json(nullptr);
  j["starts"] = c.starts;
  j["seed"] = c.seed;
  j["cutoff"] = c.cutoff ? json(*c.cutoff) : json(nullptr);
  j["k"] = c.k ? json(*c.k) : json(nullptr);
  j["response"] = c.response;
  j["labels"] = c.labels;
  j["no_reweight"] = c.no_reweight;
  j["rho"] = c.rho;
  j["block_size"] = c.block_size;
  j["scale"] = c.scale;
  j["method"] = c.method;
  j["estimator"] = c.estimator;
  j["target"] = c.target;
  j["dirs"] = c.dirs;
  return j;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Config cfg;
  CLI::App app{"Robust statistics and outlier diagnostics", "robust-anomaly"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  using Handler = std::function<void(const Config&, Run&)>;
  const std::vector<std::pair<std::string, std::pair<std::string, Handler>>> commands{
      {"univariate", {"robust and classical scores per column", cmd_univariate}},
      {"mcd", {"FastMCD robust distances, DD-plot, tolerance ellipse", cmd_mcd}},
      {"mrcd", {"minimum regularized covariance determinant", cmd_mrcd}},
      {"sdoutl", {"Stahel-Donoho outlyingness", cmd_sdoutl}},
      {"lts", {"least trimmed squares regression and outlier map", cmd_lts}},
      {"pca", {"robust PCA and its outlier map", cmd_pca}},
      {"lda", {"linear discriminant analysis", [](const Config& c, Run& r) { cmd_discriminant(c, r, DiscriminantKind::lda); }}},
      {"qda", {"quadratic discriminant analysis", [](const Config& c, Run& r) { cmd_discriminant(c, r, DiscriminantKind::qda); }}},
      {"tkmeans", {"trimmed k-means clustering", cmd_tkmeans}},
      {"cellmap", {"cellwise outliers and cell map", cmd_cellmap}},
  };
  std::map<CLI::App*, std::pair<std::string, Handler>> subs;
  for (const auto& [name, entry] : commands) {
    CLI::App* s = app.add_subcommand(name, entry.first);
    s->add_option("input", cfg.input, "CSV or TSV data file")->required();
    s->add_option("--out-dir", cfg.out_dir, "output directory")->capture_default_str();
    s->add_option("--columns", cfg.columns, "numeric columns (names or 1-based indices)")->delimiter(',');
    s->add_option("--header", cfg.header, "auto, yes or no")->check(CLI::IsMember({"auto", "yes", "no"}));
    s->add_option("--h", cfg.h, "subset size h");
    s->add_option("--h-frac", cfg.h_frac, "subset size as a fraction of n");
    s->add_option("--starts", cfg.starts, "number of random starts")->capture_default_str()->check(CLI::PositiveNumber);
    s->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    s->add_option("--cutoff", cfg.cutoff, "flagging cutoff");
    s->add_option("--k", cfg.k, "components or clusters")->check(CLI::PositiveNumber);
    s->add_option("--response", cfg.response, "response column (lts)");
    s->add_option("--labels", cfg.labels, "group label column (lda, qda)");
    s->add_flag("--no-reweight", cfg.no_reweight, "skip the reweighting step");
    s->add_option("--rho", cfg.rho, "MRCD regularization in (0, 1); default chooses it");
    s->add_option("--block-size", cfg.block_size, "cell map block size")->capture_default_str();
    s->add_option("--scale", cfg.scale, "mad or qn (univariate cell scores)")->capture_default_str();
    s->add_option("--method", cfg.method, "pca: robpca|spherical|classical; cellmap rows: mcd|pca");
    s->add_option("--estimator", cfg.estimator, "mcd or classical (lda, qda)")->capture_default_str();
    s->add_option("--target", cfg.target, "identity or equicorrelation (mrcd)")->capture_default_str();
    s->add_option("--dirs", cfg.dirs, "random directions (sdoutl, pca)")->capture_default_str();
    subs[s] = {name, entry.second};
  }

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return ok;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return ok;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return input_error;
  }

  for (const auto& [s, entry] : subs) {
    if (!s->parsed()) continue;
    Run run(cfg, entry.first, out);
    run.begin();
    try {
      entry.second(cfg, run);
      run.finish(config_json(cfg, entry.first));
      return ok;
    } catch (const Error& e) {
      err << entry.first << ": " << e.what() << '\n';
      switch (e.kind()) {
        case ErrorKind::input: return input_error;
        case ErrorKind::degenerate: return degenerate;
        case ErrorKind::non_convergence: return non_convergence;
      }
    } catch (const std::filesystem::filesystem_error& e) {
      err << entry.first << ": " << e.what() << '\n';
      return input_error;
    }
  }
  return input_error;
}

}  // namespace robust::cli
