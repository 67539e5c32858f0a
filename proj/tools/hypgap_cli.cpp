// Command-line driver. Each subcommand writes CSV (or JSON for cover-sample)
// to --out, or to stdout when --out is absent; certify writes a report
// directory.

#include "hypgap/certify.hpp"
#include "hypgap/covers.hpp"
#include "hypgap/cusp.hpp"
#include "hypgap/discretize.hpp"
#include "hypgap/kernels.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

using namespace hypgap;

namespace {

/// CSV sink: a file when a path is given, stdout otherwise.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw std::runtime_error("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::vector<double> linspace(double a, double b, int count) {
  std::vector<double> v;
  for (int k = 0; k < count; ++k) v.push_back(count == 1 ? a : a + (b - a) * k / (count - 1));
  return v;
}

struct KernelTableArgs {
  std::vector<double> s{0.75};
  double T = 4.0;
  double r_min = 0.05;
  double r_max = 6.0;
  int r_count = 120;
  int nodes = 64;
  std::string out;
};

int run_kernel_table(const KernelTableArgs& a) {
  Output out(a.out);
  auto& os = out.stream();
  os << "s,r,R,dR_dr,L_T\n";
  for (double s : a.s) {
    const ResolventEvaluator res(s, a.nodes);
    for (double r : linspace(a.r_min, a.r_max, a.r_count)) {
      os << fmt(s) << ',' << fmt(r) << ',' << fmt(res.value(r)) << ',' << fmt(res.derivative(r)) << ','
         << fmt(remainder_kernel(res, a.T, r)) << '\n';
    }
  }
  return 0;
}

struct SelbergArgs {
  std::vector<double> s{0.75};
  std::vector<double> T{4.0};
  double xi_max = 50.0;
  int grid = 0;
  int nodes = 64;
  std::string out;
};

int run_selberg_norm(const SelbergArgs& a) {
  Output out(a.out);
  auto& os = out.stream();
  os << "s,T,norm_estimate,grid_size,refine_gap\n";
  for (double s : a.s)
    for (double T : a.T) {
      const NormEstimate e = remainder_norm(s, T, a.xi_max, a.grid, a.nodes);
      os << fmt(s) << ',' << fmt(T) << ',' << fmt(e.value) << ',' << e.grid_size << ',' << fmt(e.refine_gap)
         << '\n';
    }
  return 0;
}

struct CuspArgs {
  std::vector<double> s0{0.55, 0.6, 0.65, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0};
  std::string out;
};

int run_cusp_bound(const CuspArgs& a) {
  Output out(a.out);
  auto& os = out.stream();
  os << "s0,epsilon,C_s0,certificate\n";
  for (double s0 : a.s0) {
    const CuspBudget b = cusp_error_certificate(s0);
    os << fmt(s0) << ',' << fmt(b.epsilon) << ',' << fmt(b.C) << ',' << fmt(b.certificate) << '\n';
  }
  return 0;
}

struct CylinderArgs {
  double m = 2.0;
  std::vector<int> grid_tau{200};
  std::vector<int> grid_x{32};
  double L = 8.0;
  std::uint64_t seed = 1;
  std::string out;
};

int run_cylinder_floor(const CylinderArgs& a) {
  if (a.grid_tau.size() != a.grid_x.size())
    throw std::invalid_argument("--grid-tau and --grid-x need the same number of values");
  Output out(a.out);
  auto& os = out.stream();
  os << "m,grid_tau,grid_x,L,min_rayleigh\n";
  for (std::size_t k = 0; k < a.grid_tau.size(); ++k) {
    const CylinderFloor f = cylinder_spectral_floor(a.m, a.grid_tau[k], a.grid_x[k], a.L, a.seed);
    os << fmt(a.m) << ',' << a.grid_tau[k] << ',' << a.grid_x[k] << ',' << fmt(a.L) << ','
       << fmt(f.min_rayleigh) << '\n';
  }
  return 0;
}

struct CoverArgs {
  int n = 6;
  int d = 2;
  std::uint64_t seed = 1;
  std::string out;
};

int run_cover_sample(const CoverArgs& a) {
  const CoverSample c = sample_cover(a.n, a.d, a.seed);
  const nlohmann::json j = {{"n", c.n},
                            {"d", c.rank()},
                            {"seed", c.seed},
                            {"transitive", is_transitive(c)},
                            {"permutations", c.perms}};
  Output out(a.out);
  out.stream() << j.dump(2) << '\n';
  return 0;
}

struct BcArgs {
  std::vector<int> n{100, 300, 1000};
  int d = 2;
  int trials = 20;
  std::uint64_t seed = 1;
  double eps = 0.2;
  int ball_radius = 12;
  double free_ref = 0.0;
  std::string out;
};

int run_bc_sweep(const BcArgs& a) {
  DomainSpec spec;
  for (int i = 0; i < a.d; ++i) spec.generators.push_back(MoebiusMatrix::identity());
  const auto coeffs = scalar_generator_coefficients(spec);
  double free_ref = a.free_ref;
  if (free_ref <= 0.0) {
    PowerOptions p;
    p.tol = 1e-7;
    p.check_adjoint = false;
    const int r1 = std::max(1, a.ball_radius - 3);
    const double v1 = free_ball_norm(coeffs, r1, p).value;
    const double v2 = free_ball_norm(coeffs, a.ball_radius, p).value;
    free_ref = extrapolate_ball_norms(r1, v1, a.ball_radius, v2);
    std::cerr << "free_ref extrapolated from R = " << r1 << ", " << a.ball_radius << ": " << fmt(free_ref) << '\n';
  }
  PowerOptions power;
  power.tol = 1e-8;
  power.max_iters = 2000;
  const BcTable t = bc_experiment(coeffs, a.n, a.trials, a.eps, free_ref, a.seed, power);
  Output out(a.out);
  auto& os = out.stream();
  os << "n,trial,norm,free_ref,within_eps\n";
  for (const auto& r : t.rows)
    os << r.n << ',' << r.trial << ',' << fmt(r.norm) << ',' << fmt(r.free_ref) << ',' << (r.within_eps ? 1 : 0)
       << '\n';
  for (const auto& s : t.summary)
    std::cerr << "n=" << s.n << " fraction " << fmt(s.fraction_within) << " median " << fmt(s.median) << '\n';
  return 0;
}

struct InteriorArgs {
  double s = 0.8;
  double T = 4.0;
  int n = 50;
  int trials = 1;
  std::uint64_t seed = 1;
  double mesh_h = 0.15;
  double height_cut = 2.0;
  int nodes = 64;
  double s0 = 0.0;
  std::string cache;
  std::string out;
};

int run_interior_norm(const InteriorArgs& a) {
  const DomainSpec spec = gamma2_domain(a.height_cut);
  const Mesh mesh = build_mesh(spec, a.height_cut, a.mesh_h);
  const CuspCutoffPair cutoff = cusp_error_certificate(a.s0 > 0.5 ? a.s0 : a.s).cutoff;
  InteriorCoefficients ic;
  bool loaded = false;
  if (!a.cache.empty() && std::ifstream(a.cache)) {
    ic = load_coefficients(a.cache, a.s, a.T, mesh_hash(mesh));
    loaded = true;
  }
  if (!loaded) {
    const auto support = enumerate_S(a.T, mesh.points, spec);
    const ShellGeometry shell = build_shell(a.T, support, mesh, spec, cutoff);
    ic = assemble_interior(a.s, shell, a.nodes);
    if (!a.cache.empty()) save_coefficients(a.cache, ic, mesh_hash(mesh));
  }
  const double free_ref = interior_norm_free(a.s, a.T, 50.0, 0, a.nodes).value;
  Output out(a.out);
  auto& os = out.stream();
  os << "s,T,n,trial,norm,free_ref,mesh_h\n";
  for (int t = 0; t < a.trials; ++t) {
    const CoverSample cover = sample_cover(a.n, spec.rank(), trial_seed(a.seed, t));
    PowerOptions p;
    p.tol = 1e-6;
    p.max_iters = 300;
    p.seed = cover.seed;
    const double norm = interior_norm_cover(ic, cover, p).value;
    os << fmt(a.s) << ',' << fmt(a.T) << ',' << a.n << ',' << t << ',' << fmt(norm) << ',' << fmt(free_ref) << ','
       << fmt(a.mesh_h) << '\n';
  }
  return 0;
}

int run_certify_command(CertifyConfig cfg, const std::string& config_path, const CLI::App& sub) {
  // Config file first, then explicitly given flags on top.
  const CertifyConfig flags = cfg;
  if (!config_path.empty()) {
    cfg = CertifyConfig{};
    apply_config_file(cfg, config_path);
    auto given = [&sub](const char* name) { return sub.get_option(name)->count() > 0; };
    if (given("--s0")) cfg.s0 = flags.s0;
    if (given("--n")) cfg.n = flags.n;
    if (given("--trials")) cfg.trials = flags.trials;
    if (given("--seed")) cfg.seed = flags.seed;
    if (given("--mesh-h")) cfg.mesh_h = flags.mesh_h;
    if (given("--height-cut")) cfg.height_cut = flags.height_cut;
    if (given("--ball-radius")) cfg.ball_radius = flags.ball_radius;
    if (given("--nodes")) cfg.nodes = flags.nodes;
    if (given("--out")) cfg.out_dir = flags.out_dir;
    if (given("--T")) cfg.T = flags.T;
    if (given("--threads")) cfg.threads = flags.threads;
  }
  const CertifyReport rep = run_certify(cfg, [](const std::string& m) { std::cerr << "certify: " << m << '\n'; });
  const EmittedFiles files = emit_outputs(rep, cfg.out_dir);
  std::cerr << "wrote " << files.json_path << " and " << files.csv_path << '\n';
  if (!rep.completed) {
    std::cerr << "certify: stage '" << rep.failed_stage << "' failed: " << rep.error << '\n';
    return 2;
  }
  std::cerr << "certify: " << rep.points.size() << " net points, fraction within budget "
            << fmt(rep.fraction_within_budget()) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral-gap parametrix laboratory"};
  app.require_subcommand(1);

  KernelTableArgs kt;
  auto* k = app.add_subcommand("kernel-table", "Resolvent and remainder kernel values; CSV columns s,r,R,dR_dr,L_T");
  k->add_option("--s0,--s", kt.s, "spectral parameters")->expected(1, -1);
  k->add_option("--T", kt.T, "cutoff radius");
  k->add_option("--r-min", kt.r_min);
  k->add_option("--r-max", kt.r_max);
  k->add_option("--r-count", kt.r_count);
  k->add_option("--nodes", kt.nodes, "quadrature nodes");
  k->add_option("--out", kt.out, "CSV path (stdout if absent)");

  SelbergArgs sa;
  auto* sn = app.add_subcommand("selberg-norm",
                                "Selberg-transform norm of the remainder operator; CSV columns "
                                "s,T,norm_estimate,grid_size,refine_gap");
  sn->add_option("--s0,--s", sa.s)->expected(1, -1);
  sn->add_option("--T", sa.T)->expected(1, -1);
  sn->add_option("--xi-max", sa.xi_max);
  sn->add_option("--grid", sa.grid, "xi grid size (0 = automatic)");
  sn->add_option("--nodes", sa.nodes);
  sn->add_option("--out", sa.out);

  CuspArgs ca;
  auto* cb = app.add_subcommand("cusp-bound", "Cusp error certificate; CSV columns s0,epsilon,C_s0,certificate");
  cb->add_option("--s0", ca.s0)->expected(1, -1);
  cb->add_option("--out", ca.out);

  CylinderArgs cy;
  auto* cf = app.add_subcommand("cylinder-floor",
                                "Smallest Rayleigh quotient on a cusp cylinder; CSV columns "
                                "m,grid_tau,grid_x,L,min_rayleigh");
  cf->add_option("--m", cy.m, "circumference");
  cf->add_option("--grid-tau", cy.grid_tau)->expected(1, -1);
  cf->add_option("--grid-x", cy.grid_x)->expected(1, -1);
  cf->add_option("--L", cy.L, "half length in tau");
  cf->add_option("--seed", cy.seed);
  cf->add_option("--out", cy.out);

  CoverArgs co;
  auto* cs = app.add_subcommand("cover-sample", "Random permutations of a degree-n cover as JSON");
  cs->add_option("--n", co.n);
  cs->add_option("--d", co.d);
  cs->add_option("--seed", co.seed);
  cs->add_option("--out", co.out);

  BcArgs bc;
  auto* bs = app.add_subcommand("bc-sweep",
                                "Scalar-generator cover norms against the free reference; CSV columns "
                                "n,trial,norm,free_ref,within_eps");
  bs->add_option("--n", bc.n)->expected(1, -1);
  bs->add_option("--d", bc.d);
  bs->add_option("--trials", bc.trials);
  bs->add_option("--seed", bc.seed);
  bs->add_option("--eps", bc.eps);
  bs->add_option("--ball-radius", bc.ball_radius, "radius of the free-group reference computation");
  bs->add_option("--free-ref", bc.free_ref, "fixed reference value instead of the ball computation");
  bs->add_option("--out", bc.out);

  InteriorArgs ia;
  auto* in = app.add_subcommand("interior-norm",
                                "Interior operator norm on random covers; CSV columns "
                                "s,T,n,trial,norm,free_ref,mesh_h");
  in->add_option("--s", ia.s, "spectral parameter");
  in->add_option("--s0", ia.s0, "parameter fixing the cusp cutoff (default: --s)");
  in->add_option("--T", ia.T);
  in->add_option("--n", ia.n);
  in->add_option("--trials", ia.trials);
  in->add_option("--seed", ia.seed);
  in->add_option("--mesh-h", ia.mesh_h);
  in->add_option("--height-cut", ia.height_cut);
  in->add_option("--nodes", ia.nodes);
  in->add_option("--cache", ia.cache, "coefficient cache file");
  in->add_option("--out", ia.out);

  CertifyConfig cfg;
  std::string config_path;
  auto* ce = app.add_subcommand("certify",
                                "Net-of-s certification; writes certify_report.json and certify_report.csv "
                                "(columns s,interior_cover,interior_free,cusp,total,verdict) to --out");
  ce->add_option("--config", config_path, "key=value file; flags override");
  ce->add_option("--s0", cfg.s0);
  ce->add_option("--n", cfg.n);
  ce->add_option("--trials", cfg.trials);
  ce->add_option("--seed", cfg.seed);
  ce->add_option("--mesh-h", cfg.mesh_h);
  ce->add_option("--height-cut", cfg.height_cut);
  ce->add_option("--ball-radius", cfg.ball_radius);
  ce->add_option("--nodes", cfg.nodes);
  ce->add_option("--out", cfg.out_dir, "output directory");
  ce->add_option("--T", cfg.T, "fixed T (0 = choose)");
  ce->add_option("--threads", cfg.threads);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*k) return run_kernel_table(kt);
    if (*sn) return run_selberg_norm(sa);
    if (*cb) return run_cusp_bound(ca);
    if (*cf) return run_cylinder_floor(cy);
    if (*cs) return run_cover_sample(co);
    if (*bs) return run_bc_sweep(bc);
    if (*in) return run_interior_norm(ia);
    if (*ce) return run_certify_command(cfg, config_path, *ce);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
