// Command-line front end: analytic pipelines, the simulation oracle, and
// side-by-side validation for the (m,n)-batch matched queue.
//
// Exit codes: 0 success, 1 validation criterion failed, 2 configuration
// error, 3 numerical failure.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "matchq/departure.hpp"
#include "matchq/io.hpp"
#include "matchq/simulator.hpp"
#include "matchq/sojourn.hpp"
#include "matchq/stability.hpp"
#include "matchq/stationary.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace matchq;

namespace {

struct CommonOptions {
  std::string params_path;
  std::string out_dir;
  double tol = 1e-12;
  std::int64_t k_neg = 0;  // 0 = adaptive
  std::int64_t k_pos = 0;
  std::uint64_t seed = 1;
  std::uint64_t events = 1'000'000;
  int reps = 10;
  double warmup = 0.2;
  bool dump_rg = false;
  std::string convention = "pasta";
  std::string sequence;
  std::string direction = "forward";
  std::string theta1_grid;
  std::string theta2_grid;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> parse_grid(const std::string& text) {
  // "a:b:step" inclusive; a bare number is a one-point grid.
  std::vector<double> xs;
  if (text.empty()) return xs;
  const auto first = text.find(':');
  if (first == std::string::npos) {
    xs.push_back(std::stod(text));
    return xs;
  }
  const auto second = text.find(':', first + 1);
  if (second == std::string::npos)
    throw ConfigError("grid must be 'a:b:step': " + text);
  const double a = std::stod(text.substr(0, first));
  const double b = std::stod(text.substr(first + 1, second - first - 1));
  const double step = std::stod(text.substr(second + 1));
  if (!(step > 0)) throw ConfigError("grid step must be positive");
  for (double x = a; x <= b + 1e-12; x += step) xs.push_back(x);
  return xs;
}

std::vector<Mark> parse_sequence(const std::string& text) {
  std::vector<Mark> seq;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok == "A")
      seq.push_back(Mark::A);
    else if (tok == "B")
      seq.push_back(Mark::B);
    else if (tok == "AB")
      seq.push_back(Mark::AB);
    else
      throw ConfigError("sequence marks must be A, B or AB: got '" + tok + "'");
  }
  if (seq.empty()) throw ConfigError("empty mark sequence");
  return seq;
}

WeightConvention parse_convention(const std::string& text) {
  if (text == "pasta") return WeightConvention::Pasta;
  if (text == "paper") return WeightConvention::Paper;
  throw ConfigError("convention must be 'pasta' or 'paper'");
}

Params load_params(const CommonOptions& opt) {
  if (opt.params_path.empty()) throw ConfigError("--params is required");
  try {
    return load_params_json(opt.params_path);
  } catch (const std::invalid_argument& err) {
    throw ConfigError(err.what());
  }
}

void write_manifest(const CommonOptions& opt, const std::string& command,
                    const Params& p) {
  if (opt.out_dir.empty()) return;
  fs::create_directories(opt.out_dir);
  json m;
  m["command"] = command;
  m["params_path"] = opt.params_path;
  m["params"] = json::parse(params_to_json_text(p));
  m["output_dir"] = opt.out_dir;
  m["tolerances"] = {{"tol", opt.tol}};
  m["window"] = {{"k_neg", opt.k_neg}, {"k_pos", opt.k_pos}};
  m["seed"] = opt.seed;
  m["events"] = opt.events;
  m["replications"] = opt.reps;
  m["warmup_fraction"] = opt.warmup;
  m["convention"] = opt.convention;
  write_text_file((fs::path(opt.out_dir) / "manifest.json").string(), m.dump(2) + "\n");
}

void emit(const CommonOptions& opt, const std::string& filename,
          const std::string& content) {
  if (opt.out_dir.empty()) {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
  } else {
    fs::create_directories(opt.out_dir);
    write_text_file((fs::path(opt.out_dir) / filename).string(), content);
  }
}

StationaryDist solve_dist(const Params& p, const CommonOptions& opt) {
  AnalysisOptions a;
  if (opt.k_neg > 0 && opt.k_pos > 0) {
    // Fixed window: assemble on exactly the requested levels.
    GeneratorBlocks g(p);
    const std::int64_t levels = std::max(opt.k_neg, opt.k_pos) + 2;
    const RgMeasures pos = compute_rg_positive(g, levels);
    const RgMeasures neg = compute_rg_negative(g, levels);
    const BoundaryVectors b = solve_boundary(g, pos, neg);
    StationaryDist d = assemble_stationary(g, pos, neg, b, 0.0);  // full extent
    // Trim or keep as assembled; re-normalize over the requested window.
    if (d.k_neg < opt.k_neg || d.k_pos < opt.k_pos)
      throw std::runtime_error("requested window exceeds the decayed support");
    StationaryDist out = d;
    out.k_neg = opt.k_neg;
    out.k_pos = opt.k_pos;
    out.levels.assign(d.levels.begin() + (d.k_neg - opt.k_neg),
                      d.levels.begin() + (d.k_neg + opt.k_pos + 1));
    double total = 0;
    for (const auto& lv : out.levels) total += lv.sum();
    for (auto& lv : out.levels) lv /= total;
    return out;
  }
  return solve_stationary(p, a);
}

json dist_summary(const StationaryDist& d) {
  json out;
  out["E_Q1"] = mean_queue_length_A(d);
  out["E_Q2"] = mean_queue_length_B(d);
  out["tail_mass"] = d.tail_mass_bound;
  out["window"] = {-d.k_neg, d.k_pos};
  return out;
}

std::string pi_csv(const StationaryDist& d) {
  std::ostringstream out;
  out.precision(17);
  out << "i,j,pi\n";
  for (std::int64_t k = -d.k_neg; k <= d.k_pos; ++k)
    for (int phase = 0; phase < d.params.phase_count(); ++phase) {
      const StateCoords s = to_coords({k, phase}, d.params);
      out << s.i << ',' << s.j << ',' << d.level(k)(phase) << '\n';
    }
  return out.str();
}

int cmd_stability(const CommonOptions& opt) {
  const Params p = load_params(opt);
  write_manifest(opt, "stability", p);
  const StabilityReport rep = is_stable(p);
  std::ostringstream csv;
  csv.precision(17);
  csv << "level,up_rate,down_rate\n";
  const std::int64_t k_hi = std::max<std::int64_t>(rep.k_star + 2, 4);
  for (std::int64_t k = 1; k <= k_hi; ++k) {
    const DriftReport d = drift_rates_A(k, p);
    csv << k << ',' << d.up_rate << ',' << d.down_rate << '\n';
  }
  const std::int64_t l_lo = std::min<std::int64_t>(rep.l_star - 2, -4);
  for (std::int64_t l = -2; l >= l_lo; --l) {
    const DriftReport d = drift_rates_B(l, p);
    csv << l << ',' << d.up_rate << ',' << d.down_rate << '\n';
  }
  emit(opt, "drift.csv", csv.str());
  if (!opt.out_dir.empty()) {
    json j;
    j["stable"] = rep.stable;
    j["k_star"] = rep.k_star;
    j["l_star"] = rep.l_star;
    write_text_file((fs::path(opt.out_dir) / "stability.json").string(),
                    j.dump(2) + "\n");
  }
  return 0;
}

int cmd_analyze(const CommonOptions& opt) {
  const Params p = load_params(opt);
  write_manifest(opt, "analyze", p);
  const StationaryDist d = solve_dist(p, opt);
  emit(opt, "analysis.json", dist_summary(d).dump(2) + "\n");
  if (!opt.out_dir.empty())
    write_text_file((fs::path(opt.out_dir) / "pi.csv").string(), pi_csv(d));
  if (opt.dump_rg) {
    GeneratorBlocks g(p);
    const std::int64_t levels = std::max(d.k_neg, d.k_pos) + 2;
    const RgMeasures pos = compute_rg_positive(g, levels);
    const RgMeasures neg = compute_rg_negative(g, levels);
    std::ostringstream csv;
    csv.precision(17);
    csv << "axis,level,residual_R,residual_G\n";
    const auto residuals = [&csv](const RgMeasures& m, const GeneratorBlocks& gb) {
      const auto blocks =
          m.axis == Axis::Positive
              ? BlockSeq{[&gb](std::int64_t k) { return gb.a1(k); },
                         [&gb](std::int64_t k) { return gb.a0(k); },
                         [&gb](std::int64_t k) { return gb.a2(k); }}
              : BlockSeq{[&gb](std::int64_t k) { return gb.b1(-k); },
                         [&gb](std::int64_t k) { return gb.b0(-k); },
                         [&gb](std::int64_t k) { return gb.b2(-k); }};
      for (std::int64_t k = 1; k + 1 < m.levels; ++k) {
        const Matrix res_r = blocks.up(k) + m.R[k - 1] * blocks.diag(k + 1) +
                             m.R[k - 1] * m.R[k] * blocks.down(k + 2);
        const Matrix res_g = blocks.up(k) * m.G[k] * m.G[k - 1] +
                             blocks.diag(k) * m.G[k - 1] + blocks.down(k);
        csv << (m.axis == Axis::Positive ? "positive" : "negative") << ','
            << (m.axis == Axis::Positive ? k : -k) << ','
            << res_r.cwiseAbs().maxCoeff() << ',' << res_g.cwiseAbs().maxCoeff()
            << '\n';
      }
    };
    residuals(pos, g);
    residuals(neg, g);
    emit(opt, "rg_residuals.csv", csv.str());
  }
  return 0;
}

int cmd_sojourn(const CommonOptions& opt) {
  const Params p = load_params(opt);
  write_manifest(opt, "sojourn", p);
  const StationaryDist d = solve_dist(p, opt);
  const SojournSummary s = compute_sojourn(d, parse_convention(opt.convention));
  json out;
  out["E_W_little"] = s.e_w_little;
  out["E_W_prob"] = s.e_w_probabilistic;
  out["E_xi_upper"] = s.e_xi_upper;
  out["convention"] = convention_name(s.convention);
  emit(opt, "sojourn.json", out.dump(2) + "\n");
  return 0;
}

int cmd_departures(const CommonOptions& opt) {
  const Params p = load_params(opt);
  write_manifest(opt, "departures", p);
  const StationaryDist d = solve_dist(p, opt);
  const MmapSet mmap = build_mmap(p, d.k_neg, d.k_pos);

  if (!opt.sequence.empty()) {
    const std::vector<Mark> seq = parse_sequence(opt.sequence);
    const Direction dir =
        opt.direction == "backward" ? Direction::Backward : Direction::Forward;
    json out;
    out["sequence"] = opt.sequence;
    out["direction"] = opt.direction;
    out["probability"] = consecutive_mark_probability(d, mmap, seq, dir);
    emit(opt, "sequence.json", out.dump(2) + "\n");
    return 0;
  }

  const DepartureRates r = departure_rates(d, mmap);
  const MarkTriples t = mark_probabilities(d, mmap);
  json out;
  out["mu_A_impatient"] = r.mu_A_impatient;
  out["mu_B_impatient"] = r.mu_B_impatient;
  out["mu_AB"] = r.mu_AB;
  out["mu_A_total"] = r.mu_A_total;
  out["mu_B_total"] = r.mu_B_total;
  out["mu_all"] = r.mu_all;
  const auto triple = [](const std::array<double, 3>& a) {
    return json{{"A", a[0]}, {"B", a[1]}, {"AB", a[2]}};
  };
  out["backward"] = triple(t.backward);
  out["forward"] = triple(t.forward);
  out["at_departure"] = triple(t.at_departure);
  emit(opt, "departures.json", out.dump(2) + "\n");
  return 0;
}

json sim_to_json(const SimResult& sim) {
  const auto ci = [](const EstimateCI& e) {
    return json{{"mean", e.mean}, {"ci99_half_width", e.half_width}};
  };
  json out;
  out["replications"] = sim.config.replications;
  out["events_per_replication"] = sim.config.events;
  out["seed"] = sim.config.seed;
  out["warmup_fraction"] = sim.config.warmup_fraction;
  out["mean_Q1"] = ci(sim.mean_q1);
  out["mean_Q2"] = ci(sim.mean_q2);
  out["mean_sojourn_A"] = ci(sim.sojourn_A);
  out["mean_sojourn_B"] = ci(sim.sojourn_B);
  out["rate_A_impatient"] = ci(sim.rate_A_imp);
  out["rate_B_impatient"] = ci(sim.rate_B_imp);
  out["rate_AB"] = ci(sim.rate_AB);
  std::uint64_t censored_a = 0, censored_b = 0;
  for (const auto& rep : sim.reps) {
    censored_a += rep.censored_A;
    censored_b += rep.censored_B;
  }
  out["censored_A"] = censored_a;
  out["censored_B"] = censored_b;
  return out;
}

int cmd_simulate(const CommonOptions& opt) {
  const Params p = load_params(opt);
  write_manifest(opt, "simulate", p);
  SimConfig cfg;
  cfg.params = p;
  cfg.events = opt.events;
  cfg.seed = opt.seed;
  cfg.replications = opt.reps;
  cfg.warmup_fraction = opt.warmup;
  cfg.retain_mark_log = !opt.out_dir.empty();
  const SimResult sim = simulate(cfg);
  emit(opt, "simulation.json", sim_to_json(sim).dump(2) + "\n");
  if (!opt.out_dir.empty()) {
    std::ostringstream csv;
    csv.precision(17);
    csv << "replication,time,mark\n";
    for (std::size_t r = 0; r < sim.reps.size(); ++r)
      for (const MarkEvent& ev : sim.reps[r].mark_log)
        csv << r << ',' << ev.time << ',' << mark_name(ev.mark) << '\n';
    write_text_file((fs::path(opt.out_dir) / "mark_log.csv").string(), csv.str());
  }
  return 0;
}

int cmd_sweep(const CommonOptions& opt) {
  const Params base = load_params(opt);
  write_manifest(opt, "sweep", base);
  std::vector<double> grid1 = parse_grid(opt.theta1_grid);
  std::vector<double> grid2 = parse_grid(opt.theta2_grid);
  if (grid1.empty()) grid1 = {base.theta1};
  if (grid2.empty()) grid2 = {base.theta2};
  std::ostringstream csv;
  csv.precision(17);
  csv << "theta1,theta2,E_Q1,E_Q2\n";
  for (double t1 : grid1)
    for (double t2 : grid2) {
      Params p = base;
      p.theta1 = t1;
      p.theta2 = t2;
      const StationaryDist d = solve_stationary(p);
      csv << t1 << ',' << t2 << ',' << mean_queue_length_A(d) << ','
          << mean_queue_length_B(d) << '\n';
    }
  emit(opt, "sweep.csv", csv.str());
  return 0;
}

int cmd_validate(const CommonOptions& opt) {
  const Params p = load_params(opt);
  write_manifest(opt, "validate", p);

  struct Row {
    std::string name;
    std::string detail;
    bool pass;
  };
  std::vector<Row> rows;
  const auto check = [&rows](const std::string& name, bool pass,
                             const std::string& detail) {
    rows.push_back({name, detail, pass});
  };
  char buf[256];

  GeneratorBlocks g(p);
  const StationaryDist d = solve_dist(p, opt);
  const std::int64_t levels = std::max(d.k_neg, d.k_pos) + 2;
  const RgMeasures pos = compute_rg_positive(g, levels);
  const RgMeasures neg = compute_rg_negative(g, levels);

  std::snprintf(buf, sizeof buf, "max residual %.2e",
                std::max({pos.residual_R, pos.residual_G, neg.residual_R, neg.residual_G}));
  check("rg-residuals<=1e-12",
        std::max({pos.residual_R, pos.residual_G, neg.residual_R, neg.residual_G}) <=
            1e-12,
        buf);

  const TruncatedGenerator q = build_truncated_generator(p, d.k_neg, d.k_pos);
  {
    Matrix A = q.dense.transpose();
    A.row(q.dim() - 1).setOnes();
    Vector rhs = Vector::Zero(q.dim());
    rhs(q.dim() - 1) = 1.0;
    const Vector pi_dense = A.partialPivLu().solve(rhs);
    const double diff = (d.flatten().transpose() - pi_dense).cwiseAbs().maxCoeff();
    std::snprintf(buf, sizeof buf, "inf-norm diff %.2e", diff);
    check("stationary-oracle<=1e-8", diff <= 1e-8, buf);
  }

  std::snprintf(buf, sizeof buf, "residual %.2e", balance_residual(d, g));
  check("global-balance<=1e-9", balance_residual(d, g) <= 1e-9, buf);

  std::snprintf(buf, sizeof buf, "|pi e - 1| = %.2e", std::abs(d.flatten().sum() - 1.0));
  check("normalization<=1e-12", std::abs(d.flatten().sum() - 1.0) <= 1e-12, buf);

  const MmapSet mmap = build_mmap(p, d.k_neg, d.k_pos);
  const DepartureRates rates = departure_rates(d, mmap);
  std::snprintf(buf, sizeof buf, "|lambda1-muA|=%.2e |lambda2-muB|=%.2e",
                std::abs(p.lambda1 - rates.mu_A_total),
                std::abs(p.lambda2 - rates.mu_B_total));
  check("flow-conservation<=1e-8",
        std::abs(p.lambda1 - rates.mu_A_total) <= 1e-8 &&
            std::abs(p.lambda2 - rates.mu_B_total) <= 1e-8,
        buf);

  const double dec =
      ((mmap.D0 + mmap.DA + mmap.DB + mmap.DAB) - q.dense).cwiseAbs().maxCoeff();
  std::snprintf(buf, sizeof buf, "entrywise diff %.2e", dec);
  check("mmap-decomposition-exact", dec == 0.0, buf);

  const SojournSummary soj = compute_sojourn(d, parse_convention(opt.convention));
  std::snprintf(buf, sizeof buf, "E_W=%.6f E_xi=%.6f", soj.e_w_little, soj.e_xi_upper);
  check("sojourn-upper-bound", soj.upper_bound_holds, buf);

  const MarkTriples t = mark_probabilities(d, mmap);
  const auto sum3 = [](const std::array<double, 3>& a) { return a[0] + a[1] + a[2]; };
  std::snprintf(buf, sizeof buf, "sums %.9f %.9f %.9f", sum3(t.backward),
                sum3(t.forward), sum3(t.at_departure));
  check("mark-triples-sum-1<=1e-7",
        std::abs(sum3(t.backward) - 1) <= 1e-7 && std::abs(sum3(t.forward) - 1) <= 1e-7 &&
            std::abs(sum3(t.at_departure) - 1) <= 1e-7,
        buf);

  // Simulation cross-validation at the 99% level.
  SimConfig cfg;
  cfg.params = p;
  cfg.events = opt.events;
  cfg.seed = opt.seed;
  cfg.replications = opt.reps;
  cfg.warmup_fraction = opt.warmup;
  const SimResult sim = simulate(cfg);

  const auto ci_check = [&](const std::string& name, const EstimateCI& ci,
                            double analytic) {
    std::snprintf(buf, sizeof buf, "analytic %.6f, sim %.6f +- %.6f", analytic, ci.mean,
                  ci.half_width);
    check(name, ci.contains(analytic), buf);
  };
  ci_check("sim-E_Q1", sim.mean_q1, mean_queue_length_A(d));
  ci_check("sim-E_Q2", sim.mean_q2, mean_queue_length_B(d));
  ci_check("sim-E_W", sim.sojourn_A, soj.e_w_little);
  ci_check("sim-rate-A-impatient", sim.rate_A_imp, rates.mu_A_impatient);
  ci_check("sim-rate-B-impatient", sim.rate_B_imp, rates.mu_B_impatient);
  ci_check("sim-rate-AB", sim.rate_AB, rates.mu_AB);
  for (int idx = 0; idx < 3; ++idx) {
    const Mark mk = MarkTriples::order[static_cast<std::size_t>(idx)];
    ci_check(std::string("sim-at-departure-") + mark_name(mk), at_departure_ci(sim, mk),
             t.at_departure[static_cast<std::size_t>(idx)]);
  }
  const SequenceTable seqs = empirical_mark_sequences(sim, 1);
  for (int idx = 0; idx < 3; ++idx) {
    const Mark mk = MarkTriples::order[static_cast<std::size_t>(idx)];
    const std::string key = mark_name(mk);
    ci_check("sim-forward-" + key, seqs.forward.at(key),
             t.forward[static_cast<std::size_t>(idx)]);
    ci_check("sim-backward-" + key, seqs.backward.at(key),
             t.backward[static_cast<std::size_t>(idx)]);
  }

  std::ostringstream table;
  bool all_pass = true;
  for (const Row& row : rows) {
    table << (row.pass ? "[PASS] " : "[FAIL] ") << row.name << " — " << row.detail
          << '\n';
    all_pass = all_pass && row.pass;
  }
  table << (all_pass ? "VALIDATE: all criteria passed\n"
                     : "VALIDATE: criteria failed\n");
  emit(opt, "validate.txt", table.str());
  if (!opt.out_dir.empty()) std::cout << table.str();
  return all_pass ? 0 : 1;
}

void attach_common(CLI::App* cmd, CommonOptions& opt) {
  cmd->add_option("--params", opt.params_path, "parameter JSON document");
  cmd->add_option("--out", opt.out_dir, "output directory (default: stdout)");
  cmd->add_option("--tol", opt.tol, "residual tolerance");
  cmd->add_option("--kneg", opt.k_neg, "fixed negative window (levels below 0)");
  cmd->add_option("--kpos", opt.k_pos, "fixed positive window");
  cmd->add_option("--seed", opt.seed, "simulation seed");
  cmd->add_option("--events", opt.events, "events per replication");
  cmd->add_option("--reps", opt.reps, "independent replications");
  cmd->add_option("--warmup", opt.warmup, "warmup fraction in [0,1)");
  cmd->add_flag("--dump-rg", opt.dump_rg, "emit per-level R/G residual CSV");
  cmd->add_option("--convention", opt.convention, "arrival weighting: pasta|paper");
  cmd->add_option("--sequence", opt.sequence, "mark sequence, e.g. A,AB,B");
  cmd->add_option("--direction", opt.direction, "sequence direction: forward|backward");
  cmd->add_option("--theta1-grid", opt.theta1_grid, "sweep grid a:b:step");
  cmd->add_option("--theta2-grid", opt.theta2_grid, "sweep grid a:b:step");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"matchq — matrix-analytic engine for (m,n)-batch matched queues"};
  app.require_subcommand(1);

  CommonOptions opt;
  int (*handler)(const CommonOptions&) = nullptr;
  for (const auto& [name, desc, fn] :
       {std::tuple{"stability", "mean-drift table and stability witnesses",
                   &cmd_stability},
        std::tuple{"analyze", "stationary distribution and queue-length moments",
                   &cmd_analyze},
        std::tuple{"sojourn", "mean sojourn times (Little, case formulas, PH bound)",
                   &cmd_sojourn},
        std::tuple{"departures", "departure rates and mark probabilities",
                   &cmd_departures},
        std::tuple{"simulate", "discrete-event simulation oracle", &cmd_simulate},
        std::tuple{"validate", "analytic vs simulation acceptance table",
                   &cmd_validate},
        std::tuple{"sweep", "theta grid sweep of queue-length means", &cmd_sweep}}) {
    CLI::App* cmd = app.add_subcommand(name, desc);
    attach_common(cmd, opt);
    cmd->callback([&handler, fn] { handler = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    return handler(opt);
  } catch (const ConfigError& err) {
    json e;
    e["error"] = "config";
    e["message"] = err.what();
    std::cerr << e.dump() << '\n';
    return 2;
  } catch (const std::invalid_argument& err) {
    json e;
    e["error"] = "config";
    e["message"] = err.what();
    std::cerr << e.dump() << '\n';
    return 2;
  } catch (const std::exception& err) {
    json e;
    e["error"] = "numerical";
    e["message"] = err.what();
    std::cerr << e.dump() << '\n';
    return 3;
  }
}
