#include "gaugeforge/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "gaugeforge/elliptic.hpp"
#include "gaugeforge/errors.hpp"
#include "gaugeforge/gauge.hpp"
#include "gaugeforge/gfld_io.hpp"
#include "gaugeforge/potentials.hpp"
#include "gaugeforge/subcritical.hpp"

namespace gaugeforge::cli {

namespace {

namespace fs = std::filesystem;
using domain::GridDomain;
using domain::GridField;
using nlohmann::json;

constexpr double kPi = 3.14159265358979323846;

std::string out_path(const config::RunConfig& cfg, const std::string& name) {
  return (fs::path(cfg.output_dir) / name).string();
}

void ensure_output_dir(const config::RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + cfg.output_dir + "': " + ec.message());
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open for writing: " + path);
  os << j.dump(2) << '\n';
  if (!os) throw IoError("write failed: " + path);
}

// CSV with a fixed header and %.12e numeric cells.
void write_csv_file(const std::string& path, const std::vector<std::string>& header,
                    const std::vector<std::vector<double>>& rows) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open for writing: " + path);
  for (std::size_t c = 0; c < header.size(); ++c)
    std::fprintf(f, "%s%s", header[c].c_str(), c + 1 < header.size() ? "," : "\n");
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c)
      std::fprintf(f, "%.12e%s", row[c], c + 1 < row.size() ? "," : "\n");
  }
  if (std::fclose(f) != 0) throw IoError("write failed: " + path);
}

json report_json(const elliptic::SolveReport& rep) {
  // Wall times are excluded: command outputs must be byte-identical across
  // reruns of the same configuration.
  return json{{"converged", rep.converged},
              {"iterations", rep.iterations},
              {"method", rep.method},
              {"relative_residual", rep.relative_residual}};
}

GridDomain build_domain(const config::RunConfig& cfg) {
  return GridDomain::build(cfg.m, cfg.N);
}

gauge::AntisymmetricPotential load_potential(const config::RunConfig& cfg,
                                             const GridDomain& dom) {
  const gfld::GfldData data = gfld::read_gfld(out_path(cfg, "omega.gfld"));
  GridField f = gfld::field_from_gfld(data, dom, cfg.n, cfg.n);
  return gauge::make_potential(std::move(f), cfg.omega.smoothness_passes);
}

GridField load_gauge_field(const config::RunConfig& cfg, const GridDomain& dom) {
  const std::string path = out_path(cfg, "A.gfld");
  if (!fs::exists(path))
    throw IoError("gauge field " + path + " not found; run the gauge command first");
  const gfld::GfldData data = gfld::read_gfld(path);
  GridField A = gfld::field_from_gfld(data, dom, cfg.n, cfg.n);
  domain::set_boundary_identity(A);  // the gauge is the identity on the sphere
  return A;
}

GridField load_state_field(const config::RunConfig& cfg, const GridDomain& dom,
                           const std::string& name, const std::vector<double>& g) {
  const std::string path = out_path(cfg, name);
  if (!fs::exists(path))
    throw IoError("state field " + path + " not found; run the solve command first");
  const gfld::GfldData data = gfld::read_gfld(path);
  GridField v = gfld::field_from_gfld(data, dom, cfg.n, 1);
  std::copy(g.begin(), g.end(), v.bv.begin());
  return v;
}

std::vector<double> read_boundary_csv(const GridDomain& dom, int n, const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open boundary file: " + path);
  std::vector<double> g;
  g.reserve(dom.boundary().size() * static_cast<std::size_t>(n));
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int got = 0;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str())
        throw ConfigError("boundary file " + path + ": non-numeric cell '" + cell + "'");
      g.push_back(v);
      ++got;
    }
    if (got != n)
      throw ConfigError("boundary file " + path + ": expected " + std::to_string(n) +
                        " values per row");
  }
  if (g.size() != dom.boundary().size() * static_cast<std::size_t>(n))
    throw ConfigError("boundary file " + path + ": row count does not match the grid (" +
                      std::to_string(dom.boundary().size()) + " boundary points)");
  return g;
}

// Least-squares slope of log(vals) against log(hs).
double observed_order(const std::vector<double>& hs, const std::vector<double>& vals) {
  double mx = 0.0, my = 0.0;
  const int k = static_cast<int>(hs.size());
  for (int i = 0; i < k; ++i) {
    mx += std::log(hs[i]);
    my += std::log(vals[i]);
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < k; ++i) {
    const double dx = std::log(hs[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(vals[i]) - my);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

struct PipelineRun {
  gauge::GaugeTriple triple;
  gauge::VerificationReport verification;
};

PipelineRun run_pipeline(const gauge::AntisymmetricPotential& pot,
                         const config::RunConfig& cfg) {
  gauge::ContinuationConfig cc;
  cc.steps = cfg.solver.steps;
  cc.newton_tol = cfg.solver.newton_tol;
  cc.newton_max = cfg.solver.newton_max;
  cc.eps0_monitor = cfg.monitors.eps0;
  cc.eps1_monitor = cfg.monitors.eps1;
  gauge::PResult pr = gauge::construct_P(pot, cc);
  gauge::QResult qr = gauge::construct_Q(pr.P, cfg.solver.tol);
  PipelineRun run;
  run.triple = gauge::assemble_A(pr, qr, pot);
  run.verification = gauge::verify_gauge(run.triple, pot);
  return run;
}

json verification_json(const gauge::VerificationReport& v) {
  return json{{"all_finite", v.all_finite},
              {"grad_energy_23", v.grad_energy_23},
              {"harnack_ratio", v.harnack_ratio},
              {"q_dist_half", v.q_dist_half},
              {"q_dist_ratio", v.q_dist_ratio},
              {"q_minus_id_proxy", v.q_minus_id_proxy},
              {"q_minus_id_ratio", v.q_minus_id_ratio},
              {"residual_A", v.residual_A},
              {"s_symmetry_defect", v.s_symmetry_defect}};
}

json diagnostics_json(const gauge::GaugeDiagnostics& d) {
  return json{{"continuation_steps", d.continuation_steps},
              {"dist_A_On", d.dist_A_On},
              {"residual_A", d.residual_A},
              {"residual_P", d.residual_P},
              {"w2_proxy_norms", d.w2_proxy_norms}};
}

json trace_json(const gauge::ContinuationTrace& tr) {
  json stages = json::array();
  for (const auto& s : tr.stages) {
    stages.push_back(json{{"eps0", s.eps0},
                          {"eps1", s.eps1},
                          {"final_residual", s.residuals.empty() ? 0.0 : s.residuals.back()},
                          {"initial_residual", s.residuals.empty() ? 0.0 : s.residuals.front()},
                          {"lemma_ratio", s.lemma_ratio},
                          {"newton_iterations", s.newton_iterations},
                          {"predictor_used", s.predictor_used},
                          {"residuals", s.residuals},
                          {"t", s.t}});
  }
  return json{{"stages", stages}, {"total_newton_iterations", tr.total_newton_iterations}};
}

}  // namespace

std::vector<double> boundary_data(const GridDomain& dom, int n,
                                  const config::BoundaryConfig& bc) {
  if (bc.kind == "file") return read_boundary_csv(dom, n, bc.file);
  const int mdim = dom.m();
  std::vector<double> g(dom.boundary().size() * static_cast<std::size_t>(n));
  for (std::size_t b = 0; b < dom.boundary().size(); ++b) {
    const double* x = dom.boundary()[b].x.data();
    for (int c = 0; c < n; ++c) {
      if (bc.kind == "linear") {
        g[b * n + c] = x[c % mdim];
      } else {  // trig
        g[b * n + c] = 1.0 + 0.3 * std::sin(kPi * x[c % mdim]) + 0.2 * x[(c + 1) % mdim];
      }
    }
  }
  return g;
}

void cmd_gen(const config::RunConfig& cfg) {
  const GridDomain dom = build_domain(cfg);
  gauge::AntisymmetricPotential pot = potentials::generate(
      dom, cfg.n, cfg.omega.kind, cfg.omega.seed, cfg.omega.target_norm,
      cfg.omega.smoothness_passes);
  ensure_output_dir(cfg);
  gfld::write_gfld(out_path(cfg, "omega.gfld"), dom, cfg.n, pot.omega);
  const json j{{"N", cfg.N},
               {"boundary_points", dom.boundary().size()},
               {"command", "gen"},
               {"h", dom.h()},
               {"interior_nodes", dom.n_interior()},
               {"m", cfg.m},
               {"measured_norm", pot.l_half_m_norm},
               {"n", cfg.n},
               {"omega",
                json{{"kind", cfg.omega.kind},
                     {"seed", cfg.omega.seed},
                     {"smoothness_passes", cfg.omega.smoothness_passes},
                     {"target_norm", cfg.omega.target_norm}}}};
  write_json_file(out_path(cfg, "gen.json"), j);
  std::cout << "gen: wrote " << out_path(cfg, "omega.gfld") << " (measured norm "
            << pot.l_half_m_norm << ")\n";
}

void cmd_gauge(const config::RunConfig& cfg) {
  const GridDomain dom = build_domain(cfg);
  gauge::AntisymmetricPotential pot = load_potential(cfg, dom);
  const PipelineRun run = run_pipeline(pot, cfg);
  ensure_output_dir(cfg);
  gfld::write_gfld(out_path(cfg, "U.gfld"), dom, cfg.n, run.triple.U);
  gfld::write_gfld(out_path(cfg, "P.gfld"), dom, cfg.n, run.triple.P);
  gfld::write_gfld(out_path(cfg, "Q.gfld"), dom, cfg.n, run.triple.Q);
  gfld::write_gfld(out_path(cfg, "A.gfld"), dom, cfg.n, run.triple.A);

  json j{{"command", "gauge"},
         {"diagnostics", diagnostics_json(run.triple.diagnostics)},
         {"monitors",
          json{{"eps0_limit", cfg.monitors.eps0},
               {"eps1_limit", cfg.monitors.eps1},
               {"passed", true}}},
         {"potential_norm", pot.l_half_m_norm},
         {"trace", trace_json(run.triple.trace)},
         {"verification", verification_json(run.verification)}};

  // Sweep mode: rescale the stored potential to each requested norm and
  // record one summary row per pipeline.
  if (!cfg.omega.sweep_norms.empty()) {
    std::vector<std::vector<double>> rows;
    for (double target : cfg.omega.sweep_norms) {
      gauge::AntisymmetricPotential scaled = pot;
      if (pot.l_half_m_norm <= 0.0)
        throw ConfigError("sweep mode needs a nonzero stored potential");
      domain::scale(scaled.omega, target / pot.l_half_m_norm);
      scaled = gauge::make_potential(std::move(scaled.omega), cfg.omega.smoothness_passes);
      const PipelineRun srun = run_pipeline(scaled, cfg);
      rows.push_back({scaled.l_half_m_norm, srun.triple.diagnostics.residual_P,
                      srun.triple.diagnostics.residual_A, srun.triple.diagnostics.dist_A_On,
                      srun.verification.grad_energy_23, srun.verification.q_dist_half});
    }
    write_csv_file(out_path(cfg, "sweep.csv"),
                   {"target_norm", "residual_P", "residual_A", "dist_A_On", "grad_energy_23",
                    "q_dist_half"},
                   rows);
    j["sweep_rows"] = rows.size();
  }
  write_json_file(out_path(cfg, "gauge.json"), j);
  std::cout << "gauge: residual_A " << run.triple.diagnostics.residual_A << ", dist to O(n) "
            << run.triple.diagnostics.dist_A_On << "\n";
}

void cmd_solve(const config::RunConfig& cfg) {
  const GridDomain dom = build_domain(cfg);
  gauge::AntisymmetricPotential pot = load_potential(cfg, dom);
  GridField A = load_gauge_field(cfg, dom);
  const std::vector<double> g = boundary_data(dom, cfg.n, cfg.boundary);

  subcritical::StateField direct = subcritical::solve_direct(pot, g, cfg.solver.tol);
  subcritical::StateField cons = subcritical::solve_conservation(A, g, cfg.solver.tol);
  const double denom = domain::lp_norm(direct.v, 2.0);
  const double rel =
      denom > 0.0 ? domain::lp_norm(domain::diff(direct.v, cons.v), 2.0) / denom : 0.0;
  const double res_direct = subcritical::conservation_residual(A, direct.v);
  const double res_cons = subcritical::conservation_residual(A, cons.v);

  ensure_output_dir(cfg);
  gfld::write_gfld(out_path(cfg, "v_direct.gfld"), dom, cfg.n, direct.v);
  gfld::write_gfld(out_path(cfg, "v_conservation.gfld"), dom, cfg.n, cons.v);
  const json j{{"boundary_kind", cfg.boundary.kind},
               {"command", "solve"},
               {"conservation_report", report_json(cons.report)},
               {"conservation_residual",
                json{{"conservation_state", res_cons}, {"direct_state", res_direct}}},
               {"direct_report", report_json(direct.report)},
               {"equivalence_rel_l2", rel}};
  write_json_file(out_path(cfg, "solve.json"), j);
  std::cout << "solve: equivalence " << rel << ", conservation residual " << res_direct
            << "\n";
}

void cmd_morrey(const config::RunConfig& cfg) {
  const GridDomain dom = build_domain(cfg);
  GridField A = load_gauge_field(cfg, dom);
  const std::vector<double> g = boundary_data(dom, cfg.n, cfg.boundary);
  GridField v = load_state_field(cfg, dom, "v_direct.gfld", g);

  const auto centers = centers_points(cfg);
  const subcritical::DecayReport decay = subcritical::decay_experiment(
      A, v, centers, cfg.experiment.radii, cfg.experiment.lambda);
  const subcritical::IntegrabilityReport integ =
      subcritical::integrability_report(v, cfg.experiment.exponents);

  ensure_output_dir(cfg);
  std::vector<std::string> header;
  for (int d = 0; d < cfg.m; ++d) header.push_back("center_" + std::to_string(d));
  header.insert(header.end(), {"radius", "combined_ratio", "harmonic_ratio", "phi_const"});
  std::vector<std::vector<double>> rows;
  std::size_t idx = 0;
  for (const auto& c : centers) {
    for (double r : cfg.experiment.radii) {
      std::vector<double> row(c.begin(), c.end());
      row.insert(row.end(), {r, decay.ratios[idx], decay.harmonic_ratios[idx],
                             decay.phi_bound_consts[idx]});
      rows.push_back(std::move(row));
      ++idx;
    }
  }
  write_csv_file(out_path(cfg, "morrey.csv"), header, rows);
  const json j{{"command", "morrey"},
               {"gamma_hat", decay.gamma_hat},
               {"gamma_points", decay.gamma_points},
               {"integrability",
                json{{"exponents", integ.exponents},
                     {"gamma_fit", integ.gamma_fit},
                     {"gamma_points", integ.gamma_points},
                     {"laplace_mass", integ.laplace_mass},
                     {"norms", integ.norms},
                     {"radii", integ.radii}}},
               {"lambda", cfg.experiment.lambda},
               {"radii", cfg.experiment.radii},
               {"rows", rows.size()}};
  write_json_file(out_path(cfg, "morrey.json"), j);
  std::cout << "morrey: " << rows.size() << " rows, gamma_hat " << decay.gamma_hat << "\n";
}

void cmd_study(const config::RunConfig& cfg) {
  const std::vector<int> grids = {17, 33, 65};
  std::vector<double> hs, res_a, equiv, cons_res;
  std::vector<std::vector<double>> rows;
  for (int N : grids) {
    config::RunConfig sub = cfg;
    sub.N = N;
    const GridDomain dom = build_domain(sub);
    gauge::AntisymmetricPotential pot = potentials::generate(
        dom, cfg.n, cfg.omega.kind, cfg.omega.seed, cfg.omega.target_norm,
        cfg.omega.smoothness_passes);
    const PipelineRun run = run_pipeline(pot, cfg);
    const std::vector<double> g = boundary_data(dom, cfg.n, cfg.boundary);
    subcritical::StateField direct = subcritical::solve_direct(pot, g, cfg.solver.tol);
    subcritical::StateField cons =
        subcritical::solve_conservation(run.triple.A, g, cfg.solver.tol);
    const double rel = domain::lp_norm(domain::diff(direct.v, cons.v), 2.0) /
                       domain::lp_norm(direct.v, 2.0);
    const double cr = subcritical::conservation_residual(run.triple.A, direct.v);
    hs.push_back(dom.h());
    res_a.push_back(run.triple.diagnostics.residual_A);
    equiv.push_back(rel);
    cons_res.push_back(cr);
    rows.push_back({static_cast<double>(N), dom.h(), run.triple.diagnostics.residual_A, rel,
                    cr});
  }
  ensure_output_dir(cfg);
  write_csv_file(out_path(cfg, "study.csv"),
                 {"N", "h", "residual_A", "equivalence_rel_l2", "conservation_residual"},
                 rows);
  const json j{{"command", "study"},
               {"grids", grids},
               {"orders",
                json{{"conservation_residual", observed_order(hs, cons_res)},
                     {"equivalence_rel_l2", observed_order(hs, equiv)},
                     {"residual_A", observed_order(hs, res_a)}}},
               {"values",
                json{{"conservation_residual", cons_res},
                     {"equivalence_rel_l2", equiv},
                     {"residual_A", res_a}}}};
  write_json_file(out_path(cfg, "study.json"), j);
  std::cout << "study: residual_A order " << observed_order(hs, res_a)
            << ", equivalence order " << observed_order(hs, equiv) << "\n";
}

int dispatch(const std::string& command, const config::RunConfig& cfg) noexcept {
  try {
    if (command == "gen") {
      cmd_gen(cfg);
    } else if (command == "gauge") {
      cmd_gauge(cfg);
    } else if (command == "solve") {
      cmd_solve(cfg);
    } else if (command == "morrey") {
      cmd_morrey(cfg);
    } else if (command == "study") {
      cmd_study(cfg);
    } else {
      throw ConfigError("unknown command '" + command + "'");
    }
    return 0;
  } catch (const MonitorError& e) {
    std::cerr << "monitor breach (" << e.monitor << ", stage " << e.stage << "): " << e.what()
              << "\n";
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 4;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace gaugeforge::cli
