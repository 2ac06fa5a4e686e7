// sktflow command line: validate instance files, compute Bismut-Ricci data,
// integrate the pluriclosed/bracket flows, and search for SKT instances.
//
// exit codes: 0 ok, 2 parse error, 3 usage/mismatch, 4 flow blowup,
//             5 generation failure

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "sktflow/bismut.hpp"
#include "sktflow/catalog.hpp"
#include "sktflow/flow.hpp"
#include "sktflow/generator.hpp"
#include "sktflow/hermitian.hpp"
#include "sktflow/instance_io.hpp"
#include "sktflow/rng.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 2;
constexpr int kExitUsage = 3;
constexpr int kExitBlowup = 4;
constexpr int kExitGeneration = 5;

std::string fmt(double v, int digits = 12) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

std::optional<sktflow::InstanceSpec> load_or_fail(const std::string& path, int& exit_code) {
  const sktflow::ParseResult pr = sktflow::parse_instance_file(path);
  if (!pr.ok()) {
    std::cerr << "parse error: " << path << ":" << pr.error->line << ": " << pr.error->message
              << "\n";
    exit_code = kExitParse;
    return std::nullopt;
  }
  exit_code = kExitOk;
  return pr.spec;
}

std::string coeff_string(const sktflow::Form& rho) {
  std::string out;
  const auto& tt = rho.tuples();
  for (int r = 0; r < tt.size(); ++r) {
    const double v = rho.coeffs()(r).real();
    if (std::abs(v) < 1e-12) continue;
    const auto t = tt.tuple(r);
    if (!out.empty()) out += "  +  ";
    out += fmt(v) + " e" + std::to_string(t[0] + 1) + std::to_string(t[1] + 1);
  }
  return out.empty() ? "0" : out;
}

int cmd_validate(const std::string& path) {
  int code = kExitOk;
  const auto spec = load_or_fail(path, code);
  if (!spec) return code;

  const sktflow::StructureReport sr = sktflow::check_structure(spec->algebra);
  std::cout << "antisymmetry: " << (sr.antisymmetry_ok ? "ok" : "FAIL")
            << "  (residual " << fmt(sr.antisymmetry_residual, 3) << ")\n";
  std::cout << "jacobi:       " << (sr.jacobi_ok ? "ok" : "FAIL") << "  (residual "
            << fmt(sr.jacobi_residual, 3) << ")\n";
  std::cout << "two_step:     " << (sr.two_step ? "true" : "false") << "  (residual "
            << fmt(sr.two_step_residual, 3) << ")\n";
  std::cout << "center_dim:   " << sr.center_dim << "\n";

  const sktflow::HermitianValidation hv =
      sktflow::validate_hermitian(spec->algebra, spec->J, spec->g);
  std::cout << "J integrable: " << (hv.nijenhuis_residual <= 1e-9 ? "true" : "false")
            << "  (Nijenhuis " << fmt(hv.nijenhuis_residual, 3) << ", J^2 "
            << fmt(hv.j_square_residual, 3) << ")\n";
  std::cout << "hermitian:    " << (hv.ok() ? "ok" : "FAIL") << "  (J^T g J - g "
            << fmt(hv.hermitian_residual, 3) << ", min eig " << fmt(hv.min_metric_eigenvalue, 3)
            << ")\n";
  if (!sr.antisymmetry_ok || !sr.jacobi_ok || !hv.ok()) {
    std::cout << "structural checks: FAIL\n";
    return kExitUsage;
  }
  sktflow::HermitianStructure h(spec->algebra, spec->J, spec->g);
  const sktflow::SktReport skt = sktflow::skt_check(h);
  std::cout << "SKT:          " << (skt.is_skt ? "true" : "false") << "  (residual "
            << fmt(skt.residual_norm, 3) << ", threshold " << fmt(skt.threshold, 3) << ")\n";
  return kExitOk;
}

int cmd_rho(const std::string& path, const std::string& formula, std::uint64_t frame_seed,
            const std::string& output) {
  int code = kExitOk;
  const auto spec = load_or_fail(path, code);
  if (!spec) return code;

  sktflow::HermitianStructure h(spec->algebra, spec->J, spec->g);
  const sktflow::StructureReport sr = sktflow::check_structure(spec->algebra);
  if (formula == "two-step" && !sr.two_step) {
    std::cerr << "error: --formula two-step requires a 2-step nilpotent algebra "
                 "(two_step residual "
              << fmt(sr.two_step_residual, 3) << "); use --formula general\n";
    return kExitUsage;
  }
  const sktflow::UnitaryFrame frame =
      frame_seed ? sktflow::unitary_frame(h, frame_seed) : sktflow::unitary_frame(h);
  const sktflow::RicciForm rho = formula == "two-step" ? sktflow::rho_two_step(h, frame)
                                                       : sktflow::rho_general(h, frame);
  const sktflow::Form r11 = sktflow::rho_11(h, rho.rho);
  const sktflow::SeminegativityReport sn = sktflow::seminegativity_gap(h, rho.rho);
  const sktflow::StaticResidualReport st = sktflow::static_residual(h, rho.rho);

  if (output == "csv") {
    const auto& tt = rho.rho.tuples();
    std::cout << "name,value\n";
    for (int r = 0; r < tt.size(); ++r) {
      const auto t = tt.tuple(r);
      std::cout << "rho_" << (t[0] + 1) << "_" << (t[1] + 1) << ","
                << sktflow::format_double(rho.rho.coeffs()(r).real()) << "\n";
    }
    for (int r = 0; r < tt.size(); ++r) {
      const auto t = tt.tuple(r);
      std::cout << "rho11_" << (t[0] + 1) << "_" << (t[1] + 1) << ","
                << sktflow::format_double(r11.coeffs()(r).real()) << "\n";
    }
    for (int i = 0; i < sn.eigenvalues.size(); ++i)
      std::cout << "semineg_eig_" << (i + 1) << ","
                << sktflow::format_double(sn.eigenvalues(i)) << "\n";
    std::cout << "lambda_star," << sktflow::format_double(st.lambda_star) << "\n";
    std::cout << "static_residual," << sktflow::format_double(st.residual) << "\n";
    return kExitOk;
  }

  std::cout << "rho^B   (" << formula << "): " << coeff_string(rho.rho) << "\n";
  std::cout << "(1,1)-part:       " << coeff_string(r11) << "\n";
  std::cout << "seminegativity eigenvalues:";
  for (int i = 0; i < sn.eigenvalues.size(); ++i) std::cout << " " << fmt(sn.eigenvalues(i));
  std::cout << "\nlambda_star:      " << fmt(st.lambda_star)
            << "\nstatic residual:  " << fmt(st.residual) << "\n";
  return kExitOk;
}

int run_flow_kind(const sktflow::HermitianStructure& h, sktflow::FlowKind kind, double t_end,
                  double rtol, const std::string& csv_path, sktflow::Trajectory& out) {
  sktflow::FlowControls controls;
  controls.rtol = rtol;
  out = sktflow::integrate(h, kind, t_end, controls);
  if (!csv_path.empty()) {
    std::ofstream os(csv_path, std::ios::binary);
    if (!os) {
      std::cerr << "error: cannot write " << csv_path << "\n";
      return kExitUsage;
    }
    sktflow::write_trajectory_csv(out, os);
  }
  const auto& last = out.samples.back();
  std::cout << (kind == sktflow::FlowKind::Pcf ? "pcf" : "bracket") << ": t = " << fmt(last.t)
            << ", samples = " << out.samples.size() << ", |mu|^2 = " << fmt(last.norm_mu_sq)
            << ", skt residual = " << fmt(last.skt_residual, 3)
            << (out.steady ? ", steady" : "") << "\n";
  if (out.blowup || out.aborted) {
    std::cerr << "flow stopped early at t = " << fmt(last.t) << ": "
              << (out.blowup ? "step underflow (blowup)" : out.abort_reason) << "\n";
    return kExitBlowup;
  }
  return kExitOk;
}

int cmd_flow(const std::string& path, const std::string& kind, double t_end, double rtol,
             const std::string& csv) {
  int code = kExitOk;
  const auto spec = load_or_fail(path, code);
  if (!spec) return code;
  sktflow::HermitianStructure h(spec->algebra, spec->J, spec->g);
  if (!sktflow::skt_check(h).is_skt)
    std::cerr << "warning: instance is not SKT; no flow guarantees apply\n";

  auto stem_paths = [&](const char* tag) {
    if (csv.empty()) return std::string();
    std::filesystem::path p(csv);
    std::filesystem::path q = p.parent_path() / (p.stem().string() + tag + p.extension().string());
    return q.string();
  };

  if (kind == "pcf" || kind == "bracket") {
    sktflow::Trajectory traj;
    return run_flow_kind(h, kind == "pcf" ? sktflow::FlowKind::Pcf : sktflow::FlowKind::Bracket,
                         t_end, rtol, csv, traj);
  }
  // both: run the pair and report equivalence
  sktflow::Trajectory tp, tb;
  const int c1 = run_flow_kind(h, sktflow::FlowKind::Pcf, t_end, rtol, stem_paths(".pcf"), tp);
  const int c2 =
      run_flow_kind(h, sktflow::FlowKind::Bracket, t_end, rtol, stem_paths(".bracket"), tb);
  if (c1 != kExitOk) return c1;
  if (c2 != kExitOk) return c2;
  const sktflow::EquivalenceReport rep = sktflow::check_equivalence(tp, tb, h, 1e-5);
  std::cout << "equivalence: " << (rep.pass ? "pass" : "FAIL")
            << "  (omega dev " << fmt(rep.max_omega_deviation, 3) << ", mu dev "
            << fmt(rep.max_mu_deviation, 3) << ", center dev "
            << fmt(rep.max_center_deviation, 3) << ", " << rep.compared_samples
            << " shared samples)\n";
  return kExitOk;
}

int cmd_search(int p, int q, int count, std::uint64_t seed, const std::string& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    std::cerr << "error: cannot create output directory " << out_dir << "\n";
    return kExitUsage;
  }
  int written = 0, attempts = 0;
  double max_gap = -std::numeric_limits<double>::infinity();
  double min_static = std::numeric_limits<double>::infinity();
  for (int i = 0; i < count; ++i) {
    ++attempts;
    const std::uint64_t inst_seed = sktflow::Rng::mix(seed, static_cast<std::uint64_t>(i));
    auto spec = sktflow::generate_skt_instance(p, q, inst_seed);
    if (!spec) continue;
    spec->name = "skt_p" + std::to_string(p) + "q" + std::to_string(q) + "_seed" +
                 std::to_string(seed) + "_" + std::to_string(i);
    const std::string path = out_dir + "/" + spec->name + ".txt";
    if (!sktflow::write_instance_file(*spec, path)) {
      std::cerr << "error: cannot write " << path << "\n";
      return kExitUsage;
    }
    sktflow::HermitianStructure h(spec->algebra, spec->J, spec->g);
    const auto sn = sktflow::seminegativity_gap(h);
    const auto st = sktflow::static_residual(h);
    max_gap = std::max(max_gap, sn.max_eigenvalue);
    min_static = std::min(min_static, st.residual);
    ++written;
  }
  std::cout << "wrote " << written << "/" << count << " instances to " << out_dir << "\n";
  if (written > 0)
    std::cout << "max seminegativity gap: " << fmt(max_gap, 6)
              << "\nmin static residual:    " << fmt(min_static, 6) << "\n";
  if (written * 10 < count) {  // failure rate > 90%
    std::cerr << "generation failure rate above 90% (" << (count - written) << "/" << count
              << " draws failed); dims (" << p << "," << q
              << ") may admit no generic SKT structures\n";
    return kExitGeneration;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"left-invariant SKT geometry and pluriclosed flow toolkit"};
  app.require_subcommand(1);

  std::string path, formula = "general", output = "text", kind = "pcf", csv, out_dir = ".";
  std::uint64_t frame_seed = 0, seed = 1;
  double t_end = 10.0, rtol = 1e-8;
  int count = 10;
  std::vector<int> dims;

  auto* validate = app.add_subcommand("validate", "check an instance file");
  validate->add_option("path", path)->required();

  auto* rho = app.add_subcommand("rho", "Bismut-Ricci form and derived reports");
  rho->add_option("path", path)->required();
  rho->add_option("--formula", formula)->check(CLI::IsMember({"two-step", "general"}));
  rho->add_option("--frame-seed", frame_seed);
  rho->add_option("--output", output)->check(CLI::IsMember({"text", "csv"}));

  auto* flow = app.add_subcommand("flow", "integrate the pluriclosed / bracket flow");
  flow->add_option("path", path)->required();
  flow->add_option("--kind", kind)->check(CLI::IsMember({"pcf", "bracket", "both"}));
  flow->add_option("--t-end", t_end)->check(CLI::PositiveNumber);
  flow->add_option("--rtol", rtol)->check(CLI::PositiveNumber);
  flow->add_option("--csv", csv);

  auto* search = app.add_subcommand("search", "generate random SKT 2-step instances");
  search->add_option("--dims", dims, "noncentral and central dimensions")->expected(2);
  search->add_option("--count", count)->check(CLI::PositiveNumber);
  search->add_option("--seed", seed);
  search->add_option("--out", out_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (validate->parsed()) return cmd_validate(path);
    if (rho->parsed()) return cmd_rho(path, formula, frame_seed, output);
    if (flow->parsed()) return cmd_flow(path, kind, t_end, rtol, csv);
    if (search->parsed()) {
      if (dims.size() != 2) {
        std::cerr << "error: --dims p q is required\n";
        return kExitUsage;
      }
      return cmd_search(dims[0], dims[1], count, seed, out_dir);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
