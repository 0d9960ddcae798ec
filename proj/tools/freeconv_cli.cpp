// freeconv command-line front end. Talks to the library only through the C API.

#include <freeconv/freeconv.h>

#include <unistd.h>

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

enum Exit { kOk = 0, kVerifyFailed = 1, kUsage = 2, kNumerical = 3 };

struct CliError {
  int code;
  std::string message;
};

int exit_code_for(fc_status s) {
  switch (s) {
    case FC_ERR_CONVERGENCE:
    case FC_ERR_INVERSION:
    case FC_ERR_BOUNDARY:
    case FC_ERR_SINGULAR:
    case FC_ERR_INTERNAL: return kNumerical;
    default: return kUsage;
  }
}

void check(fc_status s, const std::string& context) {
  if (s != FC_OK) throw CliError{exit_code_for(s), context + ": " + fc_last_error()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Measure = std::unique_ptr<fc_measure, Deleter<fc_measure, fc_measure_free>>;
using Support = std::unique_ptr<fc_support, Deleter<fc_support, fc_support_free>>;
using Predictions = std::unique_ptr<fc_predictions, Deleter<fc_predictions, fc_predictions_free>>;
using Report = std::unique_ptr<fc_report, Deleter<fc_report, fc_report_free>>;

/// %.15g with negative zero printed as 0.
std::string num(double x) {
  if (x == 0.0) x = 0.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", x);
  return buf;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

struct RunConfig {
  json mu;
  json nu;
  std::vector<fc_spike> spikes;
  std::optional<double> grid_lo, grid_hi;
  int grid_points = 401;
  std::vector<double> ladder{1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
  std::size_t n = 2000;
  int trials = 10;
  double epsilon = 0.1;
  double eta = 0.0;
  std::uint64_t seed = 1;
  double pass_threshold = 0.9;
  std::optional<double> window_lo, window_hi;
  double grid_step = 0.0;
  std::string output_dir;
  unsigned threads = 1;
  bool trace = false;
  std::string which = "G";
  std::string target = "mu";
  std::vector<std::pair<double, double>> points;

  json echo() const {
    json j;
    j["mu"] = mu;
    j["nu"] = nu;
    json sp = json::array();
    for (const auto& s : spikes) sp.push_back({s.theta, s.multiplicity});
    j["spikes"] = sp;
    if (grid_lo) j["grid"] = {{"lo", *grid_lo}, {"hi", *grid_hi}, {"points", grid_points}};
    j["epsilon_ladder"] = ladder;
    j["simulation"] = {{"n", n},     {"trials", trials}, {"epsilon", epsilon}, {"eta", eta},
                       {"seed", seed}, {"pass_threshold", pass_threshold}};
    if (window_lo) j["window"] = {*window_lo, *window_hi};
    j["grid_step"] = grid_step;
    json pts = json::array();
    for (const auto& p : points) pts.push_back({p.first, p.second});
    j["transform"] = {{"which", which}, {"measure", target}, {"points", pts}};
    return j;
  }

  std::string hash() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a64(echo().dump()));
    return buf;
  }
};

double get_number(const json& j, const char* key, const std::string& where) {
  if (!j.at(key).is_number()) throw CliError{kUsage, where + "." + key + " must be a number"};
  return j.at(key).get<double>();
}

std::vector<fc_spike> parse_spikes(const json& arr) {
  if (!arr.is_array()) throw CliError{kUsage, "\"spikes\" must be an array"};
  std::vector<fc_spike> out;
  for (const auto& s : arr) {
    if (s.is_array() && s.size() == 2 && s[0].is_number() && s[1].is_number_integer()) {
      out.push_back({s[0].get<double>(), s[1].get<int>()});
    } else if (s.is_object() && s.contains("theta")) {
      const int k = s.contains("multiplicity") ? s.at("multiplicity").get<int>() : 1;
      out.push_back({get_number(s, "theta", "spikes[]"), k});
    } else if (s.is_number()) {
      out.push_back({s.get<double>(), 1});
    } else {
      throw CliError{kUsage, "each spike must be [theta, multiplicity] or {\"theta\":..,\"multiplicity\":..}"};
    }
  }
  return out;
}

std::pair<double, double> parse_point(const std::string& text) {
  std::stringstream ss(text);
  std::string re, im;
  std::getline(ss, re, ',');
  std::getline(ss, im);
  try {
    std::size_t used = 0;
    const double r = std::stod(re, &used);
    if (used != re.size()) throw std::invalid_argument(text);
    double i = 0.0;
    if (!im.empty()) {
      i = std::stod(im, &used);
      if (used != im.size()) throw std::invalid_argument(text);
    }
    return {r, i};
  } catch (const std::exception&) {
    throw CliError{kUsage, "cannot parse point \"" + text + "\" (expected re or re,im)"};
  }
}

RunConfig load_config(const std::string& path) {
  RunConfig c;
  if (path.empty()) return c;
  std::ifstream in(path);
  if (!in) throw CliError{kUsage, "cannot open config file " + path};
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw CliError{kUsage, "invalid config JSON in " + path + ": " + e.what()};
  }
  try {
    if (j.contains("mu")) c.mu = j.at("mu");
    if (j.contains("nu")) c.nu = j.at("nu");
    if (j.contains("spikes")) c.spikes = parse_spikes(j.at("spikes"));
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      c.grid_lo = get_number(g, "lo", "grid");
      c.grid_hi = get_number(g, "hi", "grid");
      c.grid_points = g.at("points").get<int>();
    }
    if (j.contains("epsilon_ladder")) c.ladder = j.at("epsilon_ladder").get<std::vector<double>>();
    if (j.contains("simulation")) {
      const auto& s = j.at("simulation");
      if (s.contains("n")) c.n = s.at("n").get<std::size_t>();
      if (s.contains("N")) c.n = s.at("N").get<std::size_t>();
      if (s.contains("trials")) c.trials = s.at("trials").get<int>();
      if (s.contains("epsilon")) c.epsilon = get_number(s, "epsilon", "simulation");
      if (s.contains("eta")) c.eta = get_number(s, "eta", "simulation");
      if (s.contains("seed")) c.seed = s.at("seed").get<std::uint64_t>();
      if (s.contains("pass_threshold")) c.pass_threshold = get_number(s, "pass_threshold", "simulation");
    }
    if (j.contains("window")) {
      const auto w = j.at("window").get<std::vector<double>>();
      if (w.size() != 2) throw CliError{kUsage, "\"window\" must be [lo, hi]"};
      c.window_lo = w[0];
      c.window_hi = w[1];
    }
    if (j.contains("grid_step")) c.grid_step = get_number(j, "grid_step", "config");
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("transform")) {
      const auto& t = j.at("transform");
      if (t.contains("which")) c.which = t.at("which").get<std::string>();
      if (t.contains("measure")) c.target = t.at("measure").get<std::string>();
      if (t.contains("points")) {
        for (const auto& p : t.at("points")) {
          if (p.is_number()) {
            c.points.emplace_back(p.get<double>(), 0.0);
          } else {
            const auto v = p.get<std::vector<double>>();
            if (v.empty() || v.size() > 2) throw CliError{kUsage, "transform point must be [re] or [re, im]"};
            c.points.emplace_back(v[0], v.size() == 2 ? v[1] : 0.0);
          }
        }
      }
    }
  } catch (const json::exception& e) {
    throw CliError{kUsage, std::string("bad config field: ") + e.what()};
  }
  return c;
}

void validate(const RunConfig& c) {
  if (c.grid_lo && !(*c.grid_lo < *c.grid_hi)) throw CliError{kUsage, "grid needs lo < hi"};
  if (c.grid_points < 2) throw CliError{kUsage, "grid needs at least 2 points"};
  if (c.trials < 1) throw CliError{kUsage, "trials must be >= 1"};
  if (!(c.epsilon > 0.0)) throw CliError{kUsage, "epsilon must be positive"};
  if (c.eta < 0.0) throw CliError{kUsage, "eta must be nonnegative (0 selects the default)"};
  if (!(c.pass_threshold > 0.0 && c.pass_threshold <= 1.0)) throw CliError{kUsage, "pass_threshold must lie in (0, 1]"};
  if (c.ladder.empty()) throw CliError{kUsage, "epsilon_ladder must be nonempty"};
  for (std::size_t i = 0; i < c.ladder.size(); ++i) {
    if (!(c.ladder[i] > 0.0) || (i > 0 && !(c.ladder[i] < c.ladder[i - 1]))) {
      throw CliError{kUsage, "epsilon_ladder must be positive and strictly decreasing"};
    }
  }
  if (c.window_lo && !(*c.window_lo < *c.window_hi)) throw CliError{kUsage, "window needs lo < hi"};
}

Measure make_measure(const json& spec, const char* name) {
  if (spec.is_null()) throw CliError{kUsage, std::string("config has no \"") + name + "\" measure"};
  fc_measure* m = nullptr;
  check(fc_measure_from_json(spec.dump().c_str(), &m), std::string("measure ") + name);
  return Measure(m);
}

/// Collects CSV text; written with a leading config-hash comment.
class CsvFile {
 public:
  CsvFile(std::string name, const std::string& header) : name_(std::move(name)) { body_ << header << '\n'; }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) body_ << (i ? "," : "") << cells[i];
    body_ << '\n';
  }
  std::string text(const std::string& hash) const { return "# config_hash=" + hash + "\n" + body_.str(); }
  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::ostringstream body_;
};

void write_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CliError{kUsage, "cannot write " + tmp.string()};
    out << content;
    out.flush();
    if (!out) throw CliError{kUsage, "write failed for " + tmp.string()};
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw CliError{kUsage, "cannot rename into " + path.string() + ": " + ec.message()};
  }
}

fs::path output_dir(const RunConfig& c) {
  const fs::path dir = c.output_dir.empty() ? fs::path("freeconv_out") : fs::path(c.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw CliError{kUsage, "cannot create output directory " + dir.string() + ": " + ec.message()};
  return dir;
}

void emit(const RunConfig& c, const fs::path& dir, const CsvFile& f) {
  write_atomic(dir / f.name(), f.text(c.hash()));
  std::cout << "wrote " << (dir / f.name()).string() << '\n';
}

// ---- subcommands --------------------------------------------------------------

int cmd_transform(const RunConfig& c) {
  fc_transform which;
  if (c.which == "G") {
    which = FC_TRANSFORM_G;
  } else if (c.which == "F") {
    which = FC_TRANSFORM_F;
  } else if (c.which == "h") {
    which = FC_TRANSFORM_H;
  } else if (c.which == "R") {
    which = FC_TRANSFORM_R;
  } else if (c.which == "dG") {
    which = FC_TRANSFORM_G_PRIME;
  } else if (c.which == "dh") {
    which = FC_TRANSFORM_H_PRIME;
  } else {
    throw CliError{kUsage, "unknown transform \"" + c.which + "\" (expected G, F, h, R, dG or dh)"};
  }
  if (c.target != "mu" && c.target != "nu") throw CliError{kUsage, "--measure must be mu or nu"};
  if (c.points.empty()) throw CliError{kUsage, "no evaluation points (use --point re,im)"};
  const Measure m = make_measure(c.target == "mu" ? c.mu : c.nu, c.target.c_str());

  CsvFile csv("transform.csv", "re_z,im_z,re_val,im_val");
  for (const auto& [re, im] : c.points) {
    double vr = 0.0, vi = 0.0;
    const fc_status s = fc_transform_eval(m.get(), which, re, im, &vr, &vi);
    if (s != FC_OK) {
      throw CliError{exit_code_for(s), c.which + " at z = " + num(re) + (im < 0 ? "" : "+") + num(im) +
                                           "i: " + fc_last_error()};
    }
    csv.row({num(re), num(im), num(vr), num(vi)});
  }
  std::cout << csv.text(c.hash());
  if (!c.output_dir.empty()) write_atomic(output_dir(c) / csv.name(), csv.text(c.hash()));
  return kOk;
}

std::vector<double> make_grid(const RunConfig& c, const fc_measure* mu, const fc_measure* nu) {
  double lo = 0.0, hi = 0.0;
  if (c.grid_lo) {
    lo = *c.grid_lo;
    hi = *c.grid_hi;
  } else {
    double rm = 0.0, rn = 0.0;
    check(fc_measure_radius(mu, &rm), "radius of mu");
    check(fc_measure_radius(nu, &rn), "radius of nu");
    hi = 1.1 * (rm + rn) + 1e-3;
    lo = -hi;
  }
  std::vector<double> g(static_cast<std::size_t>(c.grid_points));
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(g.size() - 1);
  }
  return g;
}

int cmd_convolve(const RunConfig& c) {
  const Measure mu = make_measure(c.mu, "mu");
  const Measure nu = make_measure(c.nu, "nu");
  const auto grid = make_grid(c, mu.get(), nu.get());
  std::vector<double> dens(grid.size());
  std::vector<int> ok(grid.size());
  std::vector<fc_subordination_point> trace(grid.size());
  check(fc_convolution_density(mu.get(), nu.get(), grid.data(), grid.size(), c.ladder.data(), c.ladder.size(), 1,
                               c.threads, dens.data(), ok.data(), trace.data()),
        "convolution density");
  fc_support* raw = nullptr;
  check(fc_convolution_support(mu.get(), nu.get(), 0.0, c.threads, &raw), "convolution support");
  const Support k(raw);

  const fs::path dir = output_dir(c);
  CsvFile density("density.csv", "x,density");
  std::size_t failed = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    density.row({num(grid[i]), ok[i] ? num(dens[i]) : "nan"});
    failed += ok[i] ? 0 : 1;
  }
  CsvFile supp("support.csv", "left,right");
  for (std::size_t i = 0; i < fc_support_count(k.get()); ++i) {
    double lo = 0.0, hi = 0.0;
    check(fc_support_interval(k.get(), i, &lo, &hi), "support interval");
    supp.row({num(lo), num(hi)});
  }
  emit(c, dir, density);
  emit(c, dir, supp);
  if (c.trace) {
    CsvFile tr("trace.csv", "re_z,im_z,re_w1,im_w1,re_w2,im_w2,iters,residual");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (!ok[i]) continue;
      const auto& p = trace[i];
      tr.row({num(p.z_re), num(p.z_im), num(p.omega1_re), num(p.omega1_im), num(p.omega2_re), num(p.omega2_im),
              std::to_string(p.iterations), num(p.residual)});
    }
    emit(c, dir, tr);
  }
  if (failed > 0) std::cerr << failed << " grid points did not converge (density written as nan)\n";
  return kOk;
}

Predictions predict(const RunConfig& c, const fc_measure* mu, const fc_measure* nu) {
  fc_outlier_options opt{};
  if (c.window_lo) {
    opt.has_window = 1;
    opt.window_lo = *c.window_lo;
    opt.window_hi = *c.window_hi;
  }
  opt.grid_step = c.grid_step;
  opt.threads = c.threads;
  fc_predictions* raw = nullptr;
  check(fc_solve_outliers(mu, nu, c.spikes.data(), c.spikes.size(), &opt, &raw), "outlier search");
  Predictions p(raw);
  for (std::size_t i = 0; i < fc_predictions_dropped_count(p.get()); ++i) {
    std::cerr << "dropped: " << fc_predictions_dropped(p.get(), i) << '\n';
  }
  return p;
}

CsvFile predictions_csv(const fc_predictions* p) {
  CsvFile csv("predictions.csv", "rho,theta,multiplicity,derivative_product,residual,distance_to_support");
  for (std::size_t i = 0; i < fc_predictions_count(p); ++i) {
    fc_prediction x{};
    check(fc_predictions_get(p, i, &x), "prediction");
    csv.row({num(x.rho), num(x.theta), std::to_string(x.multiplicity), num(x.derivative_product), num(x.residual),
             num(x.distance_to_support)});
  }
  return csv;
}

int cmd_outliers(const RunConfig& c) {
  const Measure mu = make_measure(c.mu, "mu");
  const Measure nu = make_measure(c.nu, "nu");
  const Predictions p = predict(c, mu.get(), nu.get());
  emit(c, output_dir(c), predictions_csv(p.get()));
  std::cout << fc_predictions_count(p.get()) << " prediction(s)\n";
  return kOk;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

int cmd_simulate(const RunConfig& c, bool verify) {
  const Measure mu = make_measure(c.mu, "mu");
  const Measure nu = make_measure(c.nu, "nu");
  const Predictions p = predict(c, mu.get(), nu.get());

  fc_verification_config vc;
  fc_verification_config_default(&vc);
  vc.n = c.n;
  vc.trials = c.trials;
  vc.epsilon = c.epsilon;
  vc.eta = c.eta;
  vc.seed = c.seed;
  vc.threads = c.threads;
  vc.pass_threshold = c.pass_threshold;
  fc_report* raw = nullptr;
  check(fc_run_verification(mu.get(), nu.get(), c.spikes.data(), c.spikes.size(), p.get(), &vc, &raw),
        "verification");
  const Report r(raw);

  const fs::path dir = output_dir(c);
  CsvFile rows("report.csv", "trial,rho,epsilon,expected,observed");
  for (std::size_t i = 0; i < fc_report_row_count(r.get()); ++i) {
    fc_window_row w{};
    check(fc_report_row(r.get(), i, &w), "report row");
    rows.row({std::to_string(w.trial), num(w.rho), num(w.epsilon), std::to_string(w.expected),
              std::to_string(w.observed)});
  }
  CsvFile strays("strays.csv", "trial,eigenvalue");
  json stray_list = json::array();
  for (std::size_t i = 0; i < fc_report_stray_count(r.get()); ++i) {
    int trial = 0;
    double ev = 0.0;
    check(fc_report_stray(r.get(), i, &trial, &ev), "stray");
    strays.row({std::to_string(trial), num(ev)});
    stray_list.push_back({{"trial", trial}, {"eigenvalue", ev}});
  }
  json flags = json::array();
  for (std::size_t i = 0; i < fc_report_boundary_flag_count(r.get()); ++i) {
    flags.push_back(fc_report_boundary_flag(r.get(), i));
  }
  const double frac = fc_report_pass_fraction(r.get());
  const bool passed = fc_report_passed(r.get()) != 0;
  json summary = {{"config_hash", c.hash()},
                  {"config", c.echo()},
                  {"seed", c.seed},
                  {"eta", fc_report_eta(r.get())},
                  {"pass_fraction", frac},
                  {"passed", passed},
                  {"epsilon_below_half_distance_to_k_eta", fc_report_separation_ok(r.get()) != 0},
                  {"predictions_near_k_eta_boundary", flags},
                  {"strays", stray_list},
                  {"generated_at", utc_now()}};

  emit(c, dir, predictions_csv(p.get()));
  emit(c, dir, rows);
  emit(c, dir, strays);
  write_atomic(dir / "summary.json", summary.dump(2) + "\n");
  std::cout << "wrote " << (dir / "summary.json").string() << '\n';
  std::cout << "pass fraction " << num(frac) << " (threshold " << num(c.pass_threshold) << "): "
            << (passed ? "PASS" : "FAIL") << '\n';
  return verify && !passed ? kVerifyFailed : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"freeconv: free additive convolution, outlier prediction and random-matrix verification"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::size_t> n;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials;
  std::optional<double> epsilon, eta;
  std::optional<std::string> out;
  unsigned threads = 1;
  bool trace = false;
  std::string which, target;
  std::vector<std::string> points;

  auto common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory");
    sub->add_option("--threads", threads, "worker thread cap")->check(CLI::PositiveNumber);
  };
  auto simulation = [&](CLI::App* sub) {
    sub->add_option("--n", n, "matrix size N");
    sub->add_option("--seed", seed, "base seed");
    sub->add_option("--trials", trials, "number of sampled matrices");
    sub->add_option("--epsilon", epsilon, "window half-width around each prediction");
    sub->add_option("--eta", eta, "enlargement radius of the support (0: default)");
  };

  auto* transform = app.add_subcommand("transform", "evaluate G, F, h or R of mu or nu at points");
  common(transform);
  transform->add_option("--which", which, "G, F, h, R (also dG, dh)");
  transform->add_option("--measure", target, "mu or nu");
  transform->add_option("--point", points, "evaluation point re[,im]; repeatable");
  auto* convolve = app.add_subcommand("convolve", "density and support of mu boxplus nu");
  common(convolve);
  convolve->add_flag("--trace", trace, "also write the subordination trace");
  auto* outliers = app.add_subcommand("outliers", "predict outlier locations");
  common(outliers);
  auto* simulate = app.add_subcommand("simulate", "predict and sample the random-matrix model");
  common(simulate);
  simulation(simulate);
  auto* verify = app.add_subcommand("verify", "like simulate; exit 1 when the pass fraction is too low");
  common(verify);
  simulation(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    RunConfig c = load_config(config_path);
    if (n) c.n = *n;
    if (seed) c.seed = *seed;
    if (trials) c.trials = *trials;
    if (epsilon) c.epsilon = *epsilon;
    if (eta) c.eta = *eta;
    if (out) c.output_dir = *out;
    c.threads = threads;
    c.trace = trace;
    if (!which.empty()) c.which = which;
    if (!target.empty()) c.target = target;
    for (const auto& p : points) c.points.push_back(parse_point(p));
    validate(c);

    if (transform->parsed()) return cmd_transform(c);
    if (convolve->parsed()) return cmd_convolve(c);
    if (outliers->parsed()) return cmd_outliers(c);
    if (simulate->parsed()) return cmd_simulate(c, false);
    if (verify->parsed()) return cmd_simulate(c, true);
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}
