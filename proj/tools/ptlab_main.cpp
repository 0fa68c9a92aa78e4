// ptlab — command-line front end for the gain/loss lattice laboratory.
//
// Subcommands: branches, continue, spectrum, simulate, table1, validate.
// Every output file embeds version, command, config echo, seed, and the
// pinned tolerances, and is byte-identical for identical configurations.
//
// Exit codes: 0 success, 2 usage/config error, 3 numeric failure,
// 4 partial sweep (some grid points failed).

#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ptlab/continuation.hpp"
#include "ptlab/dimer.hpp"
#include "ptlab/dynamics.hpp"
#include "ptlab/model.hpp"
#include "ptlab/stability.hpp"

#include "output_table.hpp"
#include "worker_pool.hpp"

using namespace ptlab;

namespace {

constexpr const char* kVersion = "1.0.0";
constexpr int kOk = 0;
constexpr int kUsage = 2;
constexpr int kNumeric = 3;
constexpr int kPartial = 4;

// Pinned thresholds, echoed into every output header.
constexpr double kNewtonTol = 1e-12;
constexpr double kZeroCluster = 1e-6;
constexpr double kStabilityThreshold = 1e-6;
constexpr double kBlowUpSup = 1e6;

struct CommonOpts {
  std::string out;                 // empty: stdout
  std::string format = "csv";
  std::uint64_t seed = 0;
  int threads = 1;
};

const double kNaN = std::numeric_limits<double>::quiet_NaN();

Branch parse_branch(const std::string& s) {
  if (s == "a") return Branch::a;
  if (s == "b") return Branch::b;
  if (s == "c") return Branch::c;
  throw std::domain_error("branch must be one of a, b, c");
}

std::vector<double> eps_ladder(double eps, double step) {
  std::vector<double> steps;
  for (double e = step; e < eps - 1e-12; e += step) steps.push_back(e);
  steps.push_back(eps);
  return steps;
}

// Breather at (branch, gamma, omega, E, eps): direct Newton solve at eps = 0,
// a staged continuation ladder otherwise.
BreatherSolution solve_breather(Branch br, double gamma, double omega, double E,
                                double eps, int half_width, double eps_step) {
  const DimerPoint pt = solve_for_E(gamma, omega, E, br);
  if (eps <= 0.0) {
    const ModelParams p{gamma, omega, 0.0};
    return newton_solve(seed_field(pt, half_width), pt, p, E);
  }
  EpsPath path = continue_eps(pt, eps_ladder(eps, eps_step), half_width);
  if (!path.completed) {
    std::ostringstream msg;
    msg << "continuation stalled at eps = " << path.eps_reached;
    throw no_convergence_error(msg.str(), 0.0, 0);
  }
  return path.solutions.back();
}

void stamp(OutputTable& table, const std::string& command,
           const std::string& config, const CommonOpts& common) {
  table.meta("version", std::string("ptlab ") + kVersion);
  table.meta("command", command);
  table.meta("config", config);
  table.meta("seed", static_cast<long long>(common.seed));
  std::ostringstream tol;
  tol << "newton=" << kNewtonTol << " zero_cluster=" << kZeroCluster
      << " stability=" << kStabilityThreshold << " blow_up_sup=" << kBlowUpSup;
  table.meta("tolerances", tol.str());
}

int write_output(const OutputTable& table, const CommonOpts& common) {
  if (common.out.empty()) {
    table.write(std::cout, common.format);
    return kOk;
  }
  std::ofstream os(common.out);
  if (!os) {
    std::cerr << "ptlab: cannot open output file: " << common.out << "\n";
    return kUsage;
  }
  table.write(os, common.format);
  return kOk;
}

// The deterministic two-site unit kick shared by the dynamics probes; with
// --random-kick the direction is drawn from the seeded generator instead.
UVState make_kick(int half_width, bool random, std::uint64_t seed) {
  UVState kick{LatticeField(half_width), LatticeField(half_width)};
  if (!random) {
    kick.u(0) = complexd(0.6, 0.0);
    kick.v(0) = complexd(-0.48, 0.64);
    return kick;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  double sq = 0.0;
  for (int n = -half_width; n <= half_width; ++n) {
    kick.u(n) = complexd(normal(rng), normal(rng));
    kick.v(n) = complexd(normal(rng), normal(rng));
    sq += std::norm(kick.u(n)) + std::norm(kick.v(n));
  }
  const double scale = 1.0 / std::sqrt(sq);
  kick.u.data() *= scale;
  kick.v.data() *= scale;
  return kick;
}

// ----------------------------------------------------------------------------
// branches: the anticontinuum branch diagram over an A^2 grid
// ----------------------------------------------------------------------------

struct BranchesOpts {
  double gamma = 1.0;
  double omega = 2.0;
  int grid = 100;
  double amp_max = 2.0;
  int e_sign = 1;
};

int run_branches(const BranchesOpts& opt, const CommonOpts& common) {
  std::vector<BranchWindow> windows;
  try {
    windows = classify_branches(opt.gamma, opt.omega);
  } catch (const std::exception& ex) {
    std::cerr << "ptlab: " << ex.what() << "\n";
    return kUsage;
  }

  OutputTable table({"branch", "amp_sq", "E", "theta", "mu1", "mu2", "mu3",
                     "lambda0_im_or_re", "lambda0_imaginary",
                     "jacobian_invertible"});
  std::ostringstream cfg;
  cfg << "gamma=" << opt.gamma << " omega=" << opt.omega << " grid=" << opt.grid
      << " amp_max=" << opt.amp_max << " e_sign=" << opt.e_sign;
  stamp(table, "branches", cfg.str(), common);

  for (const BranchWindow& w : windows) {
    if (!w.exists) continue;
    const double lo = w.amp_sq_min;
    const double hi = std::isfinite(w.amp_sq_max)
                          ? w.amp_sq_max
                          : std::max(opt.amp_max, lo + 1e-3);
    if (!(hi > lo)) {
      std::cerr << "ptlab: amp_max leaves no room on branch "
                << branch_name(w.branch) << "\n";
      return kUsage;
    }
    for (int i = 1; i <= opt.grid; ++i) {
      const double amp_sq = lo + (hi - lo) * i / opt.grid;
      try {
        const DimerPoint pt = point_from_amplitude(opt.gamma, opt.omega, amp_sq,
                                                   w.branch, opt.e_sign);
        const DimerLimitSpectrum lim = limit_spectrum(pt);
        const DimerJacobian jac = dimer_jacobian(pt);
        table.row({branch_name(w.branch), amp_sq, pt.E, pt.theta, lim.mu1,
                   lim.mu2, lim.mu3,
                   lim.lambda0_imaginary ? lim.lambda0.imag()
                                         : lim.lambda0.real(),
                   static_cast<long long>(lim.lambda0_imaginary ? 1 : 0),
                   static_cast<long long>(jac.invertible ? 1 : 0)});
      } catch (const std::exception& ex) {
        std::cerr << "ptlab: branch " << branch_name(w.branch)
                  << " A^2=" << amp_sq << ": " << ex.what() << "\n";
        return kNumeric;
      }
    }
  }
  return write_output(table, common);
}

// ----------------------------------------------------------------------------
// continue: staged continuation in eps at fixed E
// ----------------------------------------------------------------------------

struct ContinueOpts {
  std::string branch = "a";
  double gamma = 1.0;
  double omega = 2.0;
  double E = 3.7712361663282534;
  double amp_sq = -1.0;  // >= 0: seed by amplitude instead of E
  double eps = 0.05;
  double eps_step = 0.01;
  int half_width = 15;
  bool profile = false;
};

int run_continue(const ContinueOpts& opt, const CommonOpts& common) {
  DimerPoint pt;
  try {
    pt = opt.amp_sq >= 0.0
             ? point_from_amplitude(opt.gamma, opt.omega, opt.amp_sq,
                                    parse_branch(opt.branch))
             : solve_for_E(opt.gamma, opt.omega, opt.E,
                           parse_branch(opt.branch));
  } catch (const std::exception& ex) {
    std::cerr << "ptlab: " << ex.what() << "\n";
    return kUsage;
  }

  std::ostringstream cfg;
  cfg << "branch=" << opt.branch << " gamma=" << opt.gamma
      << " omega=" << opt.omega << " E=" << pt.E << " eps=" << opt.eps
      << " eps_step=" << opt.eps_step << " half_width=" << opt.half_width;

  EpsPath path;
  try {
    path = continue_eps(pt, eps_ladder(opt.eps, opt.eps_step), opt.half_width);
  } catch (const std::exception& ex) {
    std::cerr << "ptlab: " << ex.what() << "\n";
    return kNumeric;
  }
  if (path.solutions.empty()) {
    std::cerr << "ptlab: continuation produced no converged points\n";
    return kNumeric;
  }

  if (opt.profile) {
    OutputTable table({"site", "re_U", "im_U", "abs_U"});
    stamp(table, "continue", cfg.str(), common);
    table.meta("eps_reached", path.eps_reached);
    const LatticeField& U = path.solutions.back().field;
    for (int n = -opt.half_width; n <= opt.half_width; ++n)
      table.row({static_cast<long long>(n), U(n).real(), U(n).imag(),
                 std::abs(U(n))});
    const int code = write_output(table, common);
    return code != kOk ? code : (path.completed ? kOk : kPartial);
  }

  OutputTable table({"eps", "E", "residual_sup", "newton_iters", "u0_re",
                     "u0_im", "seed_deviation", "deviation_ratio", "tail_sup",
                     "symmetric"});
  stamp(table, "continue", cfg.str(), common);
  for (std::size_t i = 0; i < path.solutions.size(); ++i) {
    const BreatherSolution& sol = path.solutions[i];
    const double dev = seed_deviation(sol);
    table.row({path.eps_values[i], sol.E, sol.residual_norm,
               static_cast<long long>(sol.newton_iters),
               sol.field(0).real(), sol.field(0).imag(), dev,
               dev / path.eps_values[i], sol.field.tail_sup(2),
               static_cast<long long>(sol.symmetric ? 1 : 0)});
  }
  if (!path.completed)
    table.meta("stalled_at_eps", path.eps_reached);
  const int code = write_output(table, common);
  return code != kOk ? code : (path.completed ? kOk : kPartial);
}

// ----------------------------------------------------------------------------
// spectrum: eigenvalue sweep along an E grid at fixed eps
// ----------------------------------------------------------------------------

struct SpectrumOpts {
  std::string branch = "b";
  double gamma = 1.0;
  double omega = -2.2;
  double eps = 0.05;
  double e_min = 1.30;
  double e_max = 1.75;
  int e_count = 19;
  double eps_step = 0.01;
  int half_width = 12;
};

struct SpectrumPoint {
  bool ok = false;
  std::string reason;
  double E = 0.0;
  SpectrumReport report;
  std::optional<int> k_ham;
  std::optional<BandEdges> edges;
};

int run_spectrum(const SpectrumOpts& opt, const CommonOpts& common) {
  Branch br;
  try {
    br = parse_branch(opt.branch);
  } catch (const std::exception& ex) {
    std::cerr << "ptlab: " << ex.what() << "\n";
    return kUsage;
  }
  if (opt.e_count < 1 || !(opt.e_max >= opt.e_min)) {
    std::cerr << "ptlab: E grid must be nonempty and ordered\n";
    return kUsage;
  }

  std::vector<SpectrumPoint> points(opt.e_count);
  parallel_for(opt.e_count, common.threads, [&](int i) {
    SpectrumPoint& sp = points[i];
    sp.E = opt.e_count == 1 ? opt.e_min
                            : opt.e_min + (opt.e_max - opt.e_min) * i /
                                              (opt.e_count - 1);
    try {
      const BreatherSolution sol = solve_breather(
          br, opt.gamma, opt.omega, sp.E, opt.eps, opt.half_width,
          opt.eps_step);
      sp.report = eigen_spectrum(sol);
      try {
        sp.k_ham = hamilton_krein_index(sp.report, sol).khm_from_counting;
      } catch (const std::exception&) {
        sp.k_ham = std::nullopt;
      }
      try {
        sp.edges = band_edges(sol.params, sol.E);
      } catch (const std::exception&) {
        sp.edges = std::nullopt;
      }
      sp.ok = true;
    } catch (const std::exception& ex) {
      sp.reason = ex.what();
    }
  });

  OutputTable table({"E", "eig_index", "re", "im", "krein_sign", "band",
                     "max_real", "zero_multiplicity", "k_ham", "w_min",
                     "w_max"});
  std::ostringstream cfg;
  cfg << "branch=" << opt.branch << " gamma=" << opt.gamma
      << " omega=" << opt.omega << " eps=" << opt.eps << " e_min=" << opt.e_min
      << " e_max=" << opt.e_max << " e_count=" << opt.e_count
      << " half_width=" << opt.half_width;
  stamp(table, "spectrum", cfg.str(), common);

  int failures = 0;
  for (const SpectrumPoint& sp : points) {
    if (!sp.ok) {
      ++failures;
      std::ostringstream key;
      key << "failed_E_" << OutputTable::format_double(sp.E);
      table.meta(key.str(), sp.reason);
      std::cerr << "ptlab: E=" << sp.E << " failed: " << sp.reason << "\n";
      continue;
    }
    for (std::size_t j = 0; j < sp.report.eigenvalues.size(); ++j) {
      std::vector<Cell> cells{
          sp.E,
          static_cast<long long>(j),
          sp.report.eigenvalues[j].real(),
          sp.report.eigenvalues[j].imag(),
          static_cast<long long>(sp.report.krein_signs[j]),
          static_cast<long long>(sp.report.band[j] ? 1 : 0),
          sp.report.max_real,
          static_cast<long long>(sp.report.zero_multiplicity)};
      cells.push_back(sp.k_ham ? Cell(static_cast<long long>(*sp.k_ham))
                               : Cell(std::monostate{}));
      if (sp.edges) {
        cells.push_back(sp.edges->w_min);
        cells.push_back(sp.edges->w_max);
      } else {
        cells.push_back(std::monostate{});
        cells.push_back(std::monostate{});
      }
      table.row(std::move(cells));
    }
  }
  if (failures == opt.e_count) {
    std::cerr << "ptlab: every sweep point failed\n";
    return kNumeric;
  }
  const int code = write_output(table, common);
  return code != kOk ? code : (failures > 0 ? kPartial : kOk);
}

// ----------------------------------------------------------------------------
// simulate: trajectories, orbital probes, multiscale runs, pendula runs
// ----------------------------------------------------------------------------

struct SimulateOpts {
  std::string mode = "trajectory";
  std::string branch = "c";
  double gamma = 1.0;
  double omega = -3.0;
  double E = 1.0;
  double eps = 0.02;
  double eps_step = 0.01;
  int half_width = 10;
  double delta = 0.0;
  double amplify = 1.0;
  bool random_kick = false;
  double T = 20.0;
  double dt = 1e-2;
  int sample_every = 100;
  // multiscale / pendula
  std::vector<double> mus{0.2, 0.1};
  double T_slow = 1.0;
  double dt_fast = 1e-2;
  double amp = 1.0;
  bool from_branch = false;
  double mu = 0.1;
  double x0 = 0.1;
};

int run_simulate_trajectory(const SimulateOpts& opt, const CommonOpts& common,
                            const std::string& cfg) {
  BreatherSolution sol;
  try {
    sol = solve_breather(parse_branch(opt.branch), opt.gamma, opt.omega, opt.E,
                         opt.eps, opt.half_width, opt.eps_step);
  } catch (const std::domain_error& ex) {
    std::cerr << "ptlab: " << ex.what() << "\n";
    return kUsage;
  } catch (const std::exception& ex) {
    std::cerr << "ptlab: " << ex.what() << "\n";
    return kNumeric;
  }
  UVState state{sol.field, sol.field.conjugated()};
  state.u.data() *= opt.amplify;
  state.v.data() *= opt.amplify;
  if (opt.delta != 0.0) {
    const UVState kick = make_kick(opt.half_width, opt.random_kick, common.seed);
    state.u.data() += opt.delta * kick.u.data();
    state.v.data() += opt.delta * kick.v.data();
  }

  PtTrajectory traj;
  try {
    traj = integrate_pt_dnls(state, sol.params, opt.T, opt.dt,
                             opt.sample_every);
  } catch (const std::exception& ex) {
    std::cerr << "ptlab: " << ex.what() << "\n";
    return kUsage;
  }

  OutputTable table({"t", "site", "re_u", "im_u", "re_v", "im_v", "H", "Q",
                     "note"});
  stamp(table, "simulate", cfg, common);
  table.meta("diverged", std::string(traj.diverged ? "true" : "false"));
  for (const TrajectorySample& smp : traj.samples)
    for (int n = -opt.half_width; n <= opt.half_width; ++n)
      table.row({smp.t, static_cast<long long>(n), smp.state.u(n).real(),
                 smp.state.u(n).imag(), smp.state.v(n).real(),
                 smp.state.v(n).imag(), smp.H, smp.Q, std::string()});
  if (traj.diverged)
    table.row({traj.blow_up_time, static_cast<long long>(-1), kNaN, kNaN, kNaN,
               kNaN, kNaN, kNaN, std::string("DIVERGED")});
  return write_output(table, common);
}

int run_simulate_orbital(const SimulateOpts& opt, const CommonOpts& common,
                         const std::string& cfg) {
  BreatherSolution sol;
  OrbitalProbe probe;
  try {
    sol = solve_breather(parse_branch(opt.branch), opt.gamma, opt.omega, opt.E,
                         opt.eps, opt.half_width, opt.eps_step);
    probe = orbital_probe(sol, opt.delta, opt.T, opt.dt, opt.sample_every);
  } catch (const std::domain_error& ex) {
    std::cerr << "ptlab: " << ex.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& ex) {
    std::cerr << "ptlab: " << ex.what() << "\n";
    return kUsage;
  } catch (const std::exception& ex) {
    std::cerr << "ptlab: " << ex.what() << "\n";
    return kNumeric;
  }

  OutputTable table({"t", "deviation", "note"});
  stamp(table, "simulate", cfg, common);
  table.meta("diverged", std::string(probe.diverged ? "true" : "false"));
  for (std::size_t i = 0; i < probe.times.size(); ++i)
    table.row({probe.times[i], probe.deviations[i], std::string()});
  if (probe.diverged)
    table.row({probe.blow_up_time, kNaN, std::string("DIVERGED")});
  table.row({kNaN, probe.max_deviation, std::string("max_deviation")});
  return write_output(table, common);
}

int run_simulate_multiscale(const SimulateOpts& opt, const CommonOpts& common,
                            const std::string& cfg) {
  OutputTable table({"mu", "error_norm", "diverged"});
  stamp(table, "simulate", cfg, common);
  for (double mu : opt.mus) {
    const PendulaParams pp{mu, opt.gamma, opt.omega, opt.eps};
    MultiscaleReport rep;
    try {
      if (opt.from_branch) {
        const DimerPoint pt =
            solve_for_E(opt.gamma, opt.omega, opt.E, parse_branch(opt.branch));
        rep = multiscale_validate(pt, pp, opt.T_slow, opt.half_width,
                                  opt.dt_fast);
      } else {
        ABState init{LatticeField(opt.half_width), LatticeField(opt.half_width)};
        init.A(0) = complexd(opt.amp, 0.0);
        init.B(0) = complexd(opt.amp, 0.0);
        rep = multiscale_validate(init, pp, opt.T_slow, opt.dt_fast);
      }
    } catch (const std::domain_error& ex) {
      std::cerr << "ptlab: " << ex.what() << "\n";
      return kUsage;
    } catch (const std::invalid_argument& ex) {
      std::cerr << "ptlab: " << ex.what() << "\n";
      return kUsage;
    } catch (const std::exception& ex) {
      std::cerr << "ptlab: " << ex.what() << "\n";
      return kNumeric;
    }
    table.row({mu, rep.error_norm,
               static_cast<long long>(rep.diverged ? 1 : 0)});
  }
  return write_output(table, common);
}

int run_simulate_pendula(const SimulateOpts& opt, const CommonOpts& common,
                         const std::string& cfg) {
  const int L = 2 * opt.half_width + 1;
  PendulaState s;
  s.x.assign(L, 0.0);
  s.y.assign(L, 0.0);
  s.xdot.assign(L, 0.0);
  s.ydot.assign(L, 0.0);
  s.x[opt.half_width] = opt.x0;

  const PendulaParams pp{opt.mu, opt.gamma, opt.omega, opt.eps};
  PendulaTrajectory traj;
  try {
    traj = integrate_pendula(s, pp, opt.T, opt.dt, opt.sample_every);
  } catch (const std::exception& ex) {
    std::cerr << "ptlab: " << ex.what() << "\n";
    return kUsage;
  }

  OutputTable table({"t", "site", "x", "y", "xdot", "ydot", "energy", "note"});
  stamp(table, "simulate", cfg, common);
  table.meta("diverged", std::string(traj.diverged ? "true" : "false"));
  for (const PendulaSample& smp : traj.samples)
    for (int i = 0; i < L; ++i)
      table.row({smp.t, static_cast<long long>(i - opt.half_width),
                 smp.state.x[i], smp.state.y[i], smp.state.xdot[i],
                 smp.state.ydot[i], smp.energy, std::string()});
  if (traj.diverged)
    table.row({traj.blow_up_time, static_cast<long long>(-1), kNaN, kNaN, kNaN,
               kNaN, kNaN, std::string("DIVERGED")});
  return write_output(table, common);
}

int run_simulate(const SimulateOpts& opt, const CommonOpts& common) {
  std::ostringstream cfg;
  cfg << "mode=" << opt.mode << " branch=" << opt.branch
      << " gamma=" << opt.gamma << " omega=" << opt.omega << " E=" << opt.E
      << " eps=" << opt.eps << " half_width=" << opt.half_width
      << " delta=" << opt.delta << " amplify=" << opt.amplify
      << " random_kick=" << (opt.random_kick ? 1 : 0) << " T=" << opt.T
      << " dt=" << opt.dt << " sample_every=" << opt.sample_every
      << " T_slow=" << opt.T_slow << " mu=" << opt.mu << " x0=" << opt.x0;
  if (opt.mode == "trajectory")
    return run_simulate_trajectory(opt, common, cfg.str());
  if (opt.mode == "orbital") return run_simulate_orbital(opt, common, cfg.str());
  if (opt.mode == "multiscale")
    return run_simulate_multiscale(opt, common, cfg.str());
  if (opt.mode == "pendula")
    return run_simulate_pendula(opt, common, cfg.str());
  std::cerr << "ptlab: unknown simulate mode: " << opt.mode << "\n";
  return kUsage;
}

// ----------------------------------------------------------------------------
// table1: the four-exemplar summary (existence / continuum / spectral /
// orbital classification)
// ----------------------------------------------------------------------------

struct Table1Opts {
  double eps = 0.05;
  double eps_step = 0.01;
  int half_width = 10;
  double orbital_T = 200.0;
};

struct Exemplar {
  int point;
  Branch branch;
  double gamma, omega, E;
  // Bubble-detection sweep (count == 0: none).
  double sweep_lo = 0.0, sweep_hi = 0.0;
  int sweep_count = 0;
};

// Classifies the bulk of the energy Hessian: a bounded number of positive
// (negative) directions against an extensive remainder means the wave
// continuum is negative (positive); two extensive signs mean a saddle.
std::string classify_continuum(const HessianInertia& inertia) {
  constexpr int kBounded = 4;
  if (inertia.n_pos <= kBounded) return "negative";
  if (inertia.n_neg <= kBounded) return "positive";
  return "sign-indefinite";
}

int run_table1(const Table1Opts& opt, const CommonOpts& common) {
  const std::vector<Exemplar> exemplars{
      {1, Branch::a, 1.0, 2.0, 3.7712361663282534, 0.0, 0.0, 0},
      {2, Branch::b, 1.0, -1.5, 2.5, 1.90, 2.25, 8},
      {3, Branch::b, 1.0, -2.2, 1.0, 1.45, 1.70, 6},
      {4, Branch::c, 1.0, -3.0, 1.0, 0.0, 0.0, 0}};

  OutputTable table({"point", "branch", "gamma", "omega", "E", "eps",
                     "converged", "continuum", "spectral", "bubble_lo",
                     "bubble_hi", "orbital", "max_real", "k_ham"});
  std::ostringstream cfg;
  cfg << "eps=" << opt.eps << " half_width=" << opt.half_width
      << " orbital_T=" << opt.orbital_T;
  stamp(table, "table1", cfg.str(), common);

  for (const Exemplar& ex : exemplars) {
    BreatherSolution sol;
    try {
      sol = solve_breather(ex.branch, ex.gamma, ex.omega, ex.E, opt.eps,
                           opt.half_width, opt.eps_step);
    } catch (const std::exception& e) {
      std::cerr << "ptlab: point " << ex.point << ": " << e.what() << "\n";
      return kNumeric;
    }
    const SpectrumReport rep = eigen_spectrum(sol);
    std::optional<int> k_ham;
    try {
      k_ham = hamilton_krein_index(rep, sol).khm_from_counting;
    } catch (const std::exception&) {
    }

    // Bubble sweep around the internal-mode resonance, where requested.
    double bubble_lo = 0.0, bubble_hi = 0.0;
    bool bubble = false;
    if (ex.sweep_count > 0) {
      std::vector<double> max_reals(ex.sweep_count, -1.0);
      parallel_for(ex.sweep_count, common.threads, [&](int i) {
        const double E = ex.sweep_lo + (ex.sweep_hi - ex.sweep_lo) * i /
                                           (ex.sweep_count - 1);
        try {
          const BreatherSolution s = solve_breather(
              ex.branch, ex.gamma, ex.omega, E, opt.eps, opt.half_width,
              opt.eps_step);
          max_reals[i] = eigen_spectrum(s).max_real;
        } catch (const std::exception&) {
        }
      });
      for (int i = 0; i < ex.sweep_count; ++i) {
        if (max_reals[i] > kStabilityThreshold) {
          const double E = ex.sweep_lo + (ex.sweep_hi - ex.sweep_lo) * i /
                                             (ex.sweep_count - 1);
          if (!bubble) bubble_lo = E;
          bubble_hi = E;
          bubble = true;
        }
      }
    }

    const bool stable_here = rep.max_real <= kStabilityThreshold;
    std::string spectral = stable_here ? "yes" : "no";
    if (bubble) spectral += " (IB)";

    const std::string continuum = classify_continuum(rep.inertia);
    std::string orbital;
    if (continuum == "sign-indefinite") {
      orbital = "no";
    } else if (ex.point == 3) {
      // Energy method applies when the internal mode clears the bands.
      const DimerLimitSpectrum lim = limit_spectrum(sol.seed);
      const double band_top =
          std::max(std::abs(lim.lambda_plus), std::abs(lim.lambda_minus));
      orbital = std::abs(lim.lambda0) > band_top ? "yes (l0 above bands)"
                                                 : "unproven";
    } else if (stable_here) {
      const OrbitalProbe probe = orbital_probe(sol, 1e-3, opt.orbital_T, 1e-3);
      orbital = (!probe.diverged && probe.max_deviation <= 1e-2) ? "yes" : "no";
    } else {
      orbital = "no";
    }

    std::vector<Cell> cells{static_cast<long long>(ex.point),
                            branch_name(ex.branch),
                            ex.gamma,
                            ex.omega,
                            ex.E,
                            opt.eps,
                            static_cast<long long>(1),
                            continuum,
                            spectral};
    if (bubble) {
      cells.push_back(bubble_lo);
      cells.push_back(bubble_hi);
    } else {
      cells.push_back(std::monostate{});
      cells.push_back(std::monostate{});
    }
    cells.push_back(orbital);
    cells.push_back(rep.max_real);
    cells.push_back(k_ham ? Cell(static_cast<long long>(*k_ham))
                          : Cell(std::monostate{}));
    table.row(std::move(cells));
  }
  return write_output(table, common);
}

// ----------------------------------------------------------------------------
// validate: the dynamics/multiscale consistency battery
// ----------------------------------------------------------------------------

struct ValidateOpts {
  bool quick = false;
};

int run_validate(const ValidateOpts& opt, const CommonOpts& common) {
  OutputTable table({"check", "measured", "bound", "pass"});
  std::ostringstream cfg;
  cfg << "quick=" << (opt.quick ? 1 : 0);
  stamp(table, "validate", cfg.str(), common);
  bool all_pass = true;
  const auto report = [&](const std::string& name, double measured,
                          const std::string& bound, bool pass) {
    table.row({name, measured, bound, static_cast<long long>(pass ? 1 : 0)});
    all_pass = all_pass && pass;
  };

  try {
    // Conservation along a kicked stable breather.
    const BreatherSolution stable =
        solve_breather(Branch::c, 1.0, -3.0, 1.0, 0.02, 10, 0.01);
    UVState s0{stable.field, stable.field.conjugated()};
    s0.u(0) += complexd(6e-4, 0.0);
    s0.v(0) += complexd(-4.8e-4, 6.4e-4);
    const double T_cons = opt.quick ? 20.0 : 100.0;
    const PtTrajectory traj =
        integrate_pt_dnls(s0, stable.params, T_cons, 1e-3, 100);
    double dH = 0.0, dQ = 0.0;
    for (const TrajectorySample& smp : traj.samples) {
      dH = std::max(dH, std::abs(smp.H - traj.samples.front().H));
      dQ = std::max(dQ, std::abs(smp.Q - traj.samples.front().Q));
    }
    report("conservation_drift_H", dH, "<=1e-08", dH <= 1e-8);
    report("conservation_drift_Q", dQ, "<=1e-08", dQ <= 1e-8);

    // Linearised growth against the spectral rate at an unstable point.
    const BreatherSolution unstable =
        solve_breather(Branch::c, 1.0, -2.2, 0.1, 0.02, 15, 0.01);
    UVState kick = make_kick(15, false, 0);
    const GrowthFit fit = integrate_linearized(unstable, kick, 30.0, 1e-3);
    const double predicted = 0.5 * eigen_spectrum(unstable).max_real;
    const double rel = std::abs(fit.growth_rate - predicted) / predicted;
    report("growth_vs_spectrum_rel", rel, "<=0.05", rel <= 0.05);

    // Orbital persistence and escape.
    const double T_orb = opt.quick ? 100.0 : 1000.0;
    const OrbitalProbe ps = orbital_probe(stable, 1e-3, T_orb, 1e-3, 1000);
    report("orbital_stable_dev", ps.max_deviation, "<=1e-02",
           !ps.diverged && ps.max_deviation <= 1e-2);
    const OrbitalProbe pu = orbital_probe(unstable, 1e-3, 40.0, 1e-3, 100);
    report("orbital_unstable_dev", pu.max_deviation, ">1e-01",
           pu.max_deviation > 1e-1);

    // Envelope error shrinks like mu^3.
    ABState init{LatticeField(10), LatticeField(10)};
    init.A(0) = complexd(1.0, 0.0);
    init.B(0) = complexd(1.0, 0.0);
    const MultiscaleReport big =
        multiscale_validate(init, PendulaParams{0.2, 1.0, -3.0, 0.02}, 1.0);
    const MultiscaleReport small =
        multiscale_validate(init, PendulaParams{0.1, 1.0, -3.0, 0.02}, 1.0);
    const double ratio = big.error_norm / small.error_norm;
    report("multiscale_error_ratio", ratio, "in [4..16]",
           ratio >= 4.0 && ratio <= 16.0);
  } catch (const std::exception& ex) {
    std::cerr << "ptlab: " << ex.what() << "\n";
    return kNumeric;
  }

  table.meta("all_pass", std::string(all_pass ? "true" : "false"));
  const int code = write_output(table, common);
  return code != kOk ? code : (all_pass ? kOk : kNumeric);
}

}  // namespace

// ----------------------------------------------------------------------------
// Argument wiring
// ----------------------------------------------------------------------------

int main(int argc, char** argv) {
  CLI::App app{"ptlab: breathers of the gain/loss lattice - branch diagrams, "
               "continuation, spectra, and time dynamics"};
  app.require_subcommand(1);
  app.fallthrough(true);
  app.set_config("--config", "", "INI config file ([subcommand] sections)");

  CommonOpts common;
  BranchesOpts br_opt;
  ContinueOpts co_opt;
  SpectrumOpts sp_opt;
  SimulateOpts si_opt;
  Table1Opts t1_opt;
  ValidateOpts va_opt;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", common.out, "Output file (default: stdout)");
    sub->add_option("--format", common.format, "Output format")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", common.seed, "Random seed (recorded in headers)");
    sub->add_option("--threads", common.threads, "Worker threads for sweeps")
        ->check(CLI::Range(1, 256));
    sub->configurable(true);
  };

  CLI::App* branches =
      app.add_subcommand("branches", "Anticontinuum branch diagram");
  branches->add_option("--gamma", br_opt.gamma, "Gain/loss coefficient");
  branches->add_option("--omega", br_opt.omega, "Detuning frequency");
  branches->add_option("--grid", br_opt.grid, "A^2 grid points per branch")
      ->check(CLI::Range(1, 1000000));
  branches->add_option("--amp-max", br_opt.amp_max, "A^2 cap for unbounded branches");
  branches->add_option("--e-sign", br_opt.e_sign, "Sign of E = e_sign sqrt(E^2)")
      ->check(CLI::IsMember({-1, 1}));
  add_common(branches);

  CLI::App* cont = app.add_subcommand("continue", "Continuation in eps at fixed E");
  cont->add_option("--branch", co_opt.branch, "Branch (a, b, c)")
      ->check(CLI::IsMember({"a", "b", "c"}));
  cont->add_option("--gamma", co_opt.gamma, "Gain/loss coefficient");
  cont->add_option("--omega", co_opt.omega, "Detuning frequency");
  cont->add_option("--E", co_opt.E, "Breather frequency");
  cont->add_option("--amp-sq", co_opt.amp_sq,
                   "Seed by amplitude A^2 instead of E (boundary points allowed)");
  cont->add_option("--eps", co_opt.eps, "Target coupling")->check(CLI::NonNegativeNumber);
  cont->add_option("--eps-step", co_opt.eps_step, "Continuation ladder step")
      ->check(CLI::PositiveNumber);
  cont->add_option("--half-width", co_opt.half_width, "Lattice half-width")
      ->check(CLI::Range(1, 2000));
  cont->add_flag("--profile", co_opt.profile, "Emit the final site profile");
  add_common(cont);

  CLI::App* spectrum = app.add_subcommand("spectrum", "Eigenvalue sweep over an E grid");
  spectrum->add_option("--branch", sp_opt.branch, "Branch (a, b, c)")
      ->check(CLI::IsMember({"a", "b", "c"}));
  spectrum->add_option("--gamma", sp_opt.gamma, "Gain/loss coefficient");
  spectrum->add_option("--omega", sp_opt.omega, "Detuning frequency");
  spectrum->add_option("--eps", sp_opt.eps, "Coupling")->check(CLI::NonNegativeNumber);
  spectrum->add_option("--eps-step", sp_opt.eps_step, "Continuation ladder step")
      ->check(CLI::PositiveNumber);
  spectrum->add_option("--e-min", sp_opt.e_min, "E grid lower end");
  spectrum->add_option("--e-max", sp_opt.e_max, "E grid upper end");
  spectrum->add_option("--e-count", sp_opt.e_count, "E grid points")
      ->check(CLI::Range(1, 100000));
  spectrum->add_option("--half-width", sp_opt.half_width, "Lattice half-width")
      ->check(CLI::Range(1, 2000));
  add_common(spectrum);

  CLI::App* simulate = app.add_subcommand("simulate", "Time integration runs");
  simulate->add_option("--mode", si_opt.mode, "trajectory|orbital|multiscale|pendula")
      ->check(CLI::IsMember({"trajectory", "orbital", "multiscale", "pendula"}));
  simulate->add_option("--branch", si_opt.branch, "Branch (a, b, c)")
      ->check(CLI::IsMember({"a", "b", "c"}));
  simulate->add_option("--gamma", si_opt.gamma, "Gain/loss coefficient");
  simulate->add_option("--omega", si_opt.omega, "Detuning frequency");
  simulate->add_option("--E", si_opt.E, "Breather frequency");
  simulate->add_option("--eps", si_opt.eps, "Coupling")->check(CLI::NonNegativeNumber);
  simulate->add_option("--eps-step", si_opt.eps_step, "Continuation ladder step")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--half-width", si_opt.half_width, "Lattice half-width")
      ->check(CLI::Range(1, 2000));
  simulate->add_option("--delta", si_opt.delta, "Perturbation size");
  simulate->add_option("--amplify", si_opt.amplify, "Initial-state scale factor");
  simulate->add_flag("--random-kick", si_opt.random_kick,
                     "Draw the kick direction from the seeded generator");
  simulate->add_option("--T", si_opt.T, "Integration time (trajectory/orbital/pendula)");
  simulate->add_option("--dt", si_opt.dt, "Time step")->check(CLI::PositiveNumber);
  simulate->add_option("--sample-every", si_opt.sample_every, "Sampling stride")
      ->check(CLI::Range(1, 1000000));
  simulate->add_option("--mu", si_opt.mus, "Scale separations for multiscale mode");
  simulate->add_option("--T-slow", si_opt.T_slow, "Slow-time horizon (multiscale)");
  simulate->add_option("--dt-fast", si_opt.dt_fast, "Fast time step (multiscale)")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--amp", si_opt.amp, "Synchronized envelope amplitude");
  simulate->add_flag("--from-branch", si_opt.from_branch,
                     "Seed the multiscale run from the (branch, E) point");
  simulate->add_option("--pendula-mu", si_opt.mu, "mu for pendula mode");
  simulate->add_option("--x0", si_opt.x0, "Central pendulum angle (pendula mode)");
  add_common(simulate);

  CLI::App* table1 = app.add_subcommand("table1", "Four-exemplar summary table");
  table1->add_option("--eps", t1_opt.eps, "Coupling")->check(CLI::PositiveNumber);
  table1->add_option("--eps-step", t1_opt.eps_step, "Continuation ladder step")
      ->check(CLI::PositiveNumber);
  table1->add_option("--half-width", t1_opt.half_width, "Lattice half-width")
      ->check(CLI::Range(1, 2000));
  table1->add_option("--orbital-T", t1_opt.orbital_T, "Orbital probe horizon")
      ->check(CLI::PositiveNumber);
  add_common(table1);

  CLI::App* validate = app.add_subcommand("validate", "Dynamics consistency battery");
  validate->add_flag("--quick", va_opt.quick, "Shorten the long-horizon checks");
  add_common(validate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (app.got_subcommand(branches)) return run_branches(br_opt, common);
    if (app.got_subcommand(cont)) return run_continue(co_opt, common);
    if (app.got_subcommand(spectrum)) return run_spectrum(sp_opt, common);
    if (app.got_subcommand(simulate)) return run_simulate(si_opt, common);
    if (app.got_subcommand(table1)) return run_table1(t1_opt, common);
    if (app.got_subcommand(validate)) return run_validate(va_opt, common);
  } catch (const std::exception& ex) {
    std::cerr << "ptlab: " << ex.what() << "\n";
    return kNumeric;
  }
  return kUsage;
}
