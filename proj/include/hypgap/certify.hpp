#pragma once

// Net-of-s certification driver: cusp budget, choice of T, support
// enumeration, deviation constant, net, per-point cover norms and verdicts.
// Reports are deterministic functions of the configuration.

#include "hypgap/covers.hpp"
#include "hypgap/cusp.hpp"
#include "hypgap/discretize.hpp"
#include "hypgap/geometry.hpp"
#include "hypgap/kernels.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace hypgap {

inline constexpr double kCuspBudget = 0.2;
inline constexpr double kInteriorTarget = 0.6;
inline constexpr double kTotalBudget = 0.8;

struct CertifyConfig {
  double s0 = 0.8;
  int n = 200;
  int trials = 5;
  std::uint64_t seed = 1;
  double mesh_h = 0.15;
  double height_cut = 2.0;
  /// Recorded with the report; the free-group reference used by the
  /// verdicts is the Selberg-transform norm.
  int ball_radius = 12;
  int nodes = 64;
  std::string out_dir = ".";
  /// Fixed T; 0 selects T with choose_T.
  double T = 0.0;
  /// Number of s values used for the deviation constant.
  int deviation_grid = 5;
  double deviation_safety = 2.0;
  int power_iters = 300;
  double power_tol = 1e-6;
  int threads = 1;
  std::uint64_t max_shell_entries = kDefaultMaxShellEntries;
  std::uint64_t max_net_points = 100000;
  /// Cap on estimated multiply-adds of the cover stage.
  double max_work = 2e12;

  void validate() const {
    if (!(s0 > 0.5 && s0 <= 1.0)) throw std::invalid_argument("config: s0 must lie in (1/2, 1]");
    if (n < 1 || trials < 1 || nodes < 4 || ball_radius < 1 || deviation_grid < 3 || power_iters < 1 ||
        threads < 1)
      throw std::invalid_argument("config: sizes must be positive");
    if (!(mesh_h > 0.0)) throw std::invalid_argument("config: mesh_h must be positive");
    if (!(height_cut > 1.0)) throw std::invalid_argument("config: height_cut must exceed 1");
    if (T < 0.0) throw std::invalid_argument("config: T must be >= 0");
  }
};

/// key=value lines, '#' starts a comment. Unknown keys are rejected.
inline void apply_config_text(CertifyConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "s0") cfg.s0 = std::stod(val);
      else if (key == "n") cfg.n = std::stoi(val);
      else if (key == "trials") cfg.trials = std::stoi(val);
      else if (key == "seed") cfg.seed = std::stoull(val);
      else if (key == "mesh_h") cfg.mesh_h = std::stod(val);
      else if (key == "height_cut") cfg.height_cut = std::stod(val);
      else if (key == "ball_radius") cfg.ball_radius = std::stoi(val);
      else if (key == "nodes") cfg.nodes = std::stoi(val);
      else if (key == "out") cfg.out_dir = val;
      else if (key == "T") cfg.T = std::stod(val);
      else if (key == "deviation_grid") cfg.deviation_grid = std::stoi(val);
      else if (key == "deviation_safety") cfg.deviation_safety = std::stod(val);
      else if (key == "power_iters") cfg.power_iters = std::stoi(val);
      else if (key == "power_tol") cfg.power_tol = std::stod(val);
      else if (key == "threads") cfg.threads = std::stoi(val);
      else if (key == "max_shell_entries") cfg.max_shell_entries = std::stoull(val);
      else if (key == "max_net_points") cfg.max_net_points = std::stoull(val);
      else if (key == "max_work") cfg.max_work = std::stod(val);
      else throw std::invalid_argument("unknown key '" + key + "'");
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": " + e.what());
    } catch (const std::out_of_range&) {
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": value out of range");
    }
  }
}

inline void apply_config_file(CertifyConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str());
}

struct ChooseTOptions {
  int t_min = 2;
  int t_max = 30;
  /// Points of the coarse s grid, endpoints included.
  int s_points = 6;
  double target = kCuspBudget;
  double xi_max = 50.0;
  int nodes = 64;
};

struct ChooseTResult {
  double T = 0.0;
  /// Largest free norm over the coarse grid at the returned T.
  double norm = 0.0;
};

/// Smallest integer T in [t_min, t_max] whose free remainder norm is at most
/// target on a coarse grid of [s0, 1].
inline ChooseTResult choose_T(double s0, const ChooseTOptions& opts = {}) {
  if (!(s0 > 0.5 && s0 <= 1.0)) throw std::invalid_argument("choose_T: s0 must lie in (1/2, 1]");
  double best = std::numeric_limits<double>::infinity();
  int best_T = opts.t_min;
  for (int T = opts.t_min; T <= opts.t_max; ++T) {
    double worst = 0.0;
    for (int k = 0; k < opts.s_points && worst <= opts.target; ++k) {
      const double s = opts.s_points == 1 ? s0 : s0 + (1.0 - s0) * k / (opts.s_points - 1);
      worst = std::max(worst, interior_norm_free(s, T, opts.xi_max, 0, opts.nodes).value);
    }
    if (worst <= opts.target) return {static_cast<double>(T), worst};
    if (worst < best) {
      best = worst;
      best_T = T;
    }
  }
  char msg[160];
  std::snprintf(msg, sizeof msg, "choose_T: no T in [%d, %d] reaches %.3g; best %.6g at T = %d", opts.t_min,
                opts.t_max, opts.target, best, best_T);
  throw std::runtime_error(msg);
}

struct NetPoint {
  double s = 0.0;
  /// Largest cover estimate over trials.
  double interior_cover = 0.0;
  std::vector<double> cover_trials;
  double interior_free = 0.0;
  double cusp = 0.0;
  double total = 0.0;
  bool empirically_within_budget = false;
};

struct CertifyReport {
  CertifyConfig config;
  bool completed = false;
  std::string failed_stage;
  std::string error;
  std::vector<std::string> stages;

  double cusp_certificate = 0.0;
  double cusp_epsilon = 0.0;
  double cusp_constant = 0.0;
  double T = 0.0;
  std::string T_source;
  double choose_T_norm = 0.0;

  std::size_t mesh_points = 0;
  double mesh_weight = 0.0;
  /// Relative error of the mesh area against the exact area of the
  /// truncated domain. Reported, not folded into the budget.
  double discretization_delta = 0.0;
  std::size_t support_size = 0;
  std::size_t max_word_length = 0;
  std::uint64_t nonzeros = 0;

  double c1 = 0.0;
  double spacing_bound = 0.0;
  double net_spacing = 0.0;
  /// |S| c1 times net spacing.
  double deviation_allowance = 0.0;
  double gap_abscissa = 0.0;
  std::vector<NetPoint> points;

  double fraction_within_budget() const {
    if (points.empty()) return 0.0;
    std::size_t k = 0;
    for (const auto& p : points) k += p.empirically_within_budget;
    return static_cast<double>(k) / points.size();
  }
};

/// Verdict from stored numbers.
inline bool recompute_verdict(double interior_cover, double cusp, double deviation_allowance) {
  return interior_cover <= kInteriorTarget && interior_cover + cusp <= kTotalBudget &&
         interior_cover + cusp + deviation_allowance < 1.0;
}

/// Equally spaced points from s0 to 1 whose computed gaps are all at most
/// delta.
inline std::vector<double> build_net(double s0, double delta) {
  if (!(delta > 0.0)) throw std::invalid_argument("build_net: spacing must be positive");
  if (!(s0 < 1.0)) return {s0};
  auto steps = static_cast<std::uint64_t>(std::ceil((1.0 - s0) / delta));
  for (;; ++steps) {
    std::vector<double> net(steps + 1);
    for (std::uint64_t k = 0; k < steps; ++k) net[k] = s0 + (1.0 - s0) * static_cast<double>(k) / steps;
    net[steps] = 1.0;
    bool ok = true;
    for (std::uint64_t k = 0; k < steps && ok; ++k) ok = net[k + 1] - net[k] <= delta;
    if (ok) return net;
  }
}

/// Runs items 0..count-1 on the given number of threads; results must be
/// written to per-item slots. The first exception is rethrown.
template <class Work>
void parallel_items(std::size_t count, int threads, Work&& work) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        work(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!failure) failure = std::current_exception();
        next = count;
      }
    }
  };
  const int t = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (t == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < t; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
}

/// Progress messages go to this sink when set.
using ProgressSink = std::function<void(const std::string&)>;

inline CertifyReport run_certify(const CertifyConfig& cfg, const ProgressSink& progress = {}) {
  CertifyReport rep;
  rep.config = cfg;
  auto note = [&](const std::string& m) {
    if (progress) progress(m);
  };
  std::string stage = "config";
  try {
    cfg.validate();
    rep.gap_abscissa = cfg.s0 * (1.0 - cfg.s0);
    rep.stages.push_back(stage);

    stage = "cusp_certificate";
    const CuspBudget cusp = cusp_error_certificate(cfg.s0);
    rep.cusp_certificate = cusp.certificate;
    rep.cusp_epsilon = cusp.epsilon;
    rep.cusp_constant = cusp.C;
    if (!(cusp.certificate <= kCuspBudget)) throw std::runtime_error("cusp certificate exceeds 1/5");
    rep.stages.push_back(stage);

    stage = "choose_T";
    if (cfg.T > 0.0) {
      rep.T = cfg.T;
      rep.T_source = "fixed";
      rep.choose_T_norm = interior_norm_free(cfg.s0, cfg.T, 50.0, 0, cfg.nodes).value;
    } else {
      ChooseTOptions o;
      o.nodes = cfg.nodes;
      const ChooseTResult ct = choose_T(cfg.s0, o);
      rep.T = ct.T;
      rep.T_source = "chosen";
      rep.choose_T_norm = ct.norm;
    }
    note("T = " + std::to_string(rep.T));
    rep.stages.push_back(stage);

    stage = "enumerate_support";
    const DomainSpec spec = gamma2_domain(cfg.height_cut);
    const Mesh mesh = build_mesh(spec, cfg.height_cut, cfg.mesh_h);
    rep.mesh_points = mesh.size();
    rep.mesh_weight = mesh.total_weight();
    double exact = spec.total_area();
    for (const auto& c : spec.cusps) exact -= c.width / cfg.height_cut;
    rep.discretization_delta = std::abs(rep.mesh_weight - exact) / exact;
    const std::vector<GroupElement> support = enumerate_S(rep.T, mesh.points, spec);
    rep.support_size = support.size();
    for (const auto& g : support) rep.max_word_length = std::max(rep.max_word_length, g.word.size());
    note("|S| = " + std::to_string(rep.support_size));
    rep.stages.push_back(stage);

    stage = "deviation_constant";
    std::vector<double> grid;
    for (int k = 0; k < cfg.deviation_grid; ++k)
      grid.push_back(cfg.s0 + (1.0 - cfg.s0) * k / (cfg.deviation_grid - 1));
    const DeviationResult dev = deviation_constant_streaming(rep.T, support, mesh, spec, cusp.cutoff, grid,
                                                             cfg.deviation_safety, cfg.nodes, &rep.nonzeros);
    rep.c1 = dev.c1;
    if (!(rep.c1 > 0.0)) throw std::runtime_error("deviation constant vanished; shell is empty");
    note("c1 = " + std::to_string(rep.c1));
    rep.stages.push_back(stage);

    stage = "net";
    rep.spacing_bound = 1.0 / (5.0 * static_cast<double>(rep.support_size) * rep.c1);
    const double est_points = (1.0 - cfg.s0) / rep.spacing_bound + 2.0;
    if (est_points > static_cast<double>(cfg.max_net_points))
      throw std::length_error("net needs about " + std::to_string(static_cast<std::uint64_t>(est_points)) +
                              " points, cap " + std::to_string(cfg.max_net_points));
    const std::vector<double> net = build_net(cfg.s0, rep.spacing_bound);
    for (std::size_t k = 0; k + 1 < net.size(); ++k) rep.net_spacing = std::max(rep.net_spacing, net[k + 1] - net[k]);
    rep.deviation_allowance = static_cast<double>(rep.support_size) * rep.c1 * rep.net_spacing;
    rep.points.resize(net.size());
    for (std::size_t k = 0; k < net.size(); ++k) {
      rep.points[k].s = net[k];
      rep.points[k].cusp = rep.cusp_certificate;
    }
    note("net of " + std::to_string(net.size()) + " points");
    rep.stages.push_back(stage);

    stage = "interior_cover";
    if (cfg.n > 1) {
      const double work = 4.0 * static_cast<double>(rep.nonzeros) * cfg.n * cfg.power_iters * cfg.trials *
                          static_cast<double>(rep.points.size());
      if (work > cfg.max_work) {
        char msg[200];
        std::snprintf(msg, sizeof msg, "cover stage needs about %.3g multiply-adds (%llu nonzeros), cap %.3g",
                      work, static_cast<unsigned long long>(rep.nonzeros), cfg.max_work);
        throw std::length_error(msg);
      }
      const ShellGeometry shell = build_shell(rep.T, support, mesh, spec, cusp.cutoff, cfg.max_shell_entries);
      std::vector<CoverSample> covers;
      for (int t = 0; t < cfg.trials; ++t) covers.push_back(sample_cover(cfg.n, spec.rank(), trial_seed(cfg.seed, t)));
      parallel_items(rep.points.size(), cfg.threads, [&](std::size_t k) {
        NetPoint& p = rep.points[k];
        const InteriorCoefficients ic = assemble_interior(p.s, shell, cfg.nodes);
        p.cover_trials.assign(cfg.trials, 0.0);
        for (int t = 0; t < cfg.trials; ++t) {
          PowerOptions po;
          po.tol = cfg.power_tol;
          po.max_iters = cfg.power_iters;
          po.seed = covers[t].seed;
          po.check_adjoint = false;
          p.cover_trials[t] = interior_norm_cover(ic, covers[t], po).value;
        }
        p.interior_cover = *std::max_element(p.cover_trials.begin(), p.cover_trials.end());
      });
    } else {
      for (auto& p : rep.points) p.cover_trials.assign(cfg.trials, 0.0);
    }
    rep.stages.push_back(stage);

    stage = "interior_free";
    parallel_items(rep.points.size(), cfg.threads, [&](std::size_t k) {
      rep.points[k].interior_free = interior_norm_free(rep.points[k].s, rep.T, 50.0, 0, cfg.nodes).value;
    });
    rep.stages.push_back(stage);

    stage = "verdict";
    for (auto& p : rep.points) {
      p.total = p.interior_cover + p.cusp;
      p.empirically_within_budget = recompute_verdict(p.interior_cover, p.cusp, rep.deviation_allowance);
    }
    rep.stages.push_back(stage);
    rep.completed = true;
  } catch (const std::exception& e) {
    rep.failed_stage = stage;
    rep.error = e.what();
    // Rows without cover estimates are not reported.
    if (stage == "interior_cover" || stage == "interior_free") rep.points.clear();
  }
  return rep;
}

inline nlohmann::json config_to_json(const CertifyConfig& c) {
  return {{"s0", c.s0},
          {"n", c.n},
          {"trials", c.trials},
          {"seed", c.seed},
          {"mesh_h", c.mesh_h},
          {"height_cut", c.height_cut},
          {"ball_radius", c.ball_radius},
          {"nodes", c.nodes},
          {"out", c.out_dir},
          {"T", c.T},
          {"deviation_grid", c.deviation_grid},
          {"deviation_safety", c.deviation_safety},
          {"power_iters", c.power_iters},
          {"power_tol", c.power_tol},
          {"max_shell_entries", c.max_shell_entries},
          {"max_net_points", c.max_net_points},
          {"max_work", c.max_work}};
}

inline CertifyConfig config_from_json(const nlohmann::json& j) {
  CertifyConfig c;
  c.s0 = j.at("s0").get<double>();
  c.n = j.at("n").get<int>();
  c.trials = j.at("trials").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.mesh_h = j.at("mesh_h").get<double>();
  c.height_cut = j.at("height_cut").get<double>();
  c.ball_radius = j.at("ball_radius").get<int>();
  c.nodes = j.at("nodes").get<int>();
  c.out_dir = j.at("out").get<std::string>();
  c.T = j.at("T").get<double>();
  c.deviation_grid = j.at("deviation_grid").get<int>();
  c.deviation_safety = j.at("deviation_safety").get<double>();
  c.power_iters = j.at("power_iters").get<int>();
  c.power_tol = j.at("power_tol").get<double>();
  c.max_shell_entries = j.at("max_shell_entries").get<std::uint64_t>();
  c.max_net_points = j.at("max_net_points").get<std::uint64_t>();
  c.max_work = j.at("max_work").get<double>();
  return c;
}

/// Thread count is left out: it does not change the numbers.
inline nlohmann::json report_to_json(const CertifyReport& r) {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : r.points)
    pts.push_back({{"s", p.s},
                   {"interior_cover", p.interior_cover},
                   {"cover_trials", p.cover_trials},
                   {"interior_free", p.interior_free},
                   {"cusp", p.cusp},
                   {"total", p.total},
                   {"empirically_within_budget", p.empirically_within_budget}});
  return {{"config", config_to_json(r.config)},
          {"completed", r.completed},
          {"failed_stage", r.failed_stage},
          {"error", r.error},
          {"stages", r.stages},
          {"cusp_certificate", r.cusp_certificate},
          {"cusp_epsilon", r.cusp_epsilon},
          {"cusp_constant", r.cusp_constant},
          {"T", r.T},
          {"T_source", r.T_source},
          {"choose_T_norm", r.choose_T_norm},
          {"mesh_points", r.mesh_points},
          {"mesh_weight", r.mesh_weight},
          {"discretization_delta", r.discretization_delta},
          {"support_size", r.support_size},
          {"max_word_length", r.max_word_length},
          {"nonzeros", r.nonzeros},
          {"c1", r.c1},
          {"spacing_bound", r.spacing_bound},
          {"net_spacing", r.net_spacing},
          {"deviation_allowance", r.deviation_allowance},
          {"gap_abscissa", r.gap_abscissa},
          {"fraction_within_budget", r.fraction_within_budget()},
          {"points", pts}};
}

inline CertifyReport report_from_json(const nlohmann::json& j) {
  CertifyReport r;
  r.config = config_from_json(j.at("config"));
  r.completed = j.at("completed").get<bool>();
  r.failed_stage = j.at("failed_stage").get<std::string>();
  r.error = j.at("error").get<std::string>();
  r.stages = j.at("stages").get<std::vector<std::string>>();
  r.cusp_certificate = j.at("cusp_certificate").get<double>();
  r.cusp_epsilon = j.at("cusp_epsilon").get<double>();
  r.cusp_constant = j.at("cusp_constant").get<double>();
  r.T = j.at("T").get<double>();
  r.T_source = j.at("T_source").get<std::string>();
  r.choose_T_norm = j.at("choose_T_norm").get<double>();
  r.mesh_points = j.at("mesh_points").get<std::size_t>();
  r.mesh_weight = j.at("mesh_weight").get<double>();
  r.discretization_delta = j.at("discretization_delta").get<double>();
  r.support_size = j.at("support_size").get<std::size_t>();
  r.max_word_length = j.at("max_word_length").get<std::size_t>();
  r.nonzeros = j.at("nonzeros").get<std::uint64_t>();
  r.c1 = j.at("c1").get<double>();
  r.spacing_bound = j.at("spacing_bound").get<double>();
  r.net_spacing = j.at("net_spacing").get<double>();
  r.deviation_allowance = j.at("deviation_allowance").get<double>();
  r.gap_abscissa = j.at("gap_abscissa").get<double>();
  for (const auto& p : j.at("points")) {
    NetPoint q;
    q.s = p.at("s").get<double>();
    q.interior_cover = p.at("interior_cover").get<double>();
    q.cover_trials = p.at("cover_trials").get<std::vector<double>>();
    q.interior_free = p.at("interior_free").get<double>();
    q.cusp = p.at("cusp").get<double>();
    q.total = p.at("total").get<double>();
    q.empirically_within_budget = p.at("empirically_within_budget").get<bool>();
    r.points.push_back(std::move(q));
  }
  return r;
}

inline constexpr const char* kCertifyCsvHeader = "s,interior_cover,interior_free,cusp,total,verdict";

inline std::string report_csv(const CertifyReport& r) {
  std::string out = std::string(kCertifyCsvHeader) + "\n";
  char buf[256];
  for (const auto& p : r.points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", p.s, p.interior_cover, p.interior_free,
                  p.cusp, p.total, p.empirically_within_budget ? 1 : 0);
    out += buf;
  }
  return out;
}

struct EmittedFiles {
  std::string json_path;
  std::string csv_path;
};

/// Writes certify_report.json and certify_report.csv into dir.
inline EmittedFiles emit_outputs(const CertifyReport& r, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir + ": " + ec.message());
  EmittedFiles f{(fs::path(dir) / "certify_report.json").string(), (fs::path(dir) / "certify_report.csv").string()};
  auto write = [](const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
  };
  write(f.json_path, report_to_json(r).dump(2) + "\n");
  write(f.csv_path, report_csv(r));
  return f;
}

}  // namespace hypgap
