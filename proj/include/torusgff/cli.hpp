#pragma once

// Command-line surface. Subcommands: spectrum, green, mass, sample, verify.
// Precedence: CLI > config file > defaults. Unknown flags or config keys are
// hard errors (exit 2); a failed verification gate exits 1.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "torusgff/experiments.hpp"
#include "torusgff/greens.hpp"
#include "torusgff/io.hpp"
#include "torusgff/mass_solver.hpp"
#include "torusgff/samplers.hpp"
#include "torusgff/spectral.hpp"

namespace torusgff {

constexpr const char* kToolVersion = "torusgff 1.0.0";

namespace cli_detail {

struct CommonFlags {
  int dim = 3;
  int side = 8;
  double beta = 0.2;
  double mass = 1.0;
  int spin_n = 16;
  int components = 1;
  std::uint64_t seed = 1234;
  std::int64_t chains = 0;
  std::int64_t sweeps = 0;
  std::int64_t burnin = 0;
  std::int64_t samples = 0;
  std::string out;
  std::string format = "text";
  int threads = 0;
};

inline void attach(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--dim", f.dim, "torus dimension d");
  cmd->add_option("--side", f.side, "torus side length n");
  cmd->add_option("--beta", f.beta, "inverse temperature");
  cmd->add_option("--mass", f.mass, "mass squared m^2");
  cmd->add_option("--spin-n", f.spin_n, "spin dimension N");
  cmd->add_option("--components", f.components, "field components M");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--chains", f.chains, "MCMC chains");
  cmd->add_option("--sweeps", f.sweeps, "MCMC sweeps per chain");
  cmd->add_option("--burnin", f.burnin, "burn-in sweeps");
  cmd->add_option("--samples", f.samples, "sample count");
  cmd->add_option("--out", f.out, "output file or directory");
  cmd->add_option("--format", f.format, "csv, json, or text")
      ->check(CLI::IsMember({"csv", "json", "text"}));
  cmd->add_option("--threads", f.threads, "worker threads (env TORUSGFF_THREADS)");
}

inline int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("TORUSGFF_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

inline std::string timestamp_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[40];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

inline void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty())
    std::cout << text;
  else
    write_file(out_path, text);
}

inline std::string kernel_csv(const GreenTable& g, const TorusLattice& lat) {
  std::ostringstream os;
  os << "# kind=" << to_string(g.kind()) << " n=" << lat.side() << " d=" << lat.dim()
     << " m2=" << format_real(g.m2())
     << " convention=G=(-Delta+m^2)^{-1}, -Delta f = 2d f - sum_nb f\n";
  for (int i = 0; i < lat.dim(); ++i) os << "dx" << (i + 1) << ",";
  os << "value\n";
  for (std::int64_t y = 0; y < lat.volume(); ++y) {
    const Coords c = lat.canonical_lift(y);
    for (int i = 0; i < lat.dim(); ++i) os << c[i] << ",";
    os << format_real(g(0, y)) << "\n";
  }
  return os.str();
}

}  // namespace cli_detail

inline int cli_main(int argc, const char* const* argv) {
  using cli_detail::CommonFlags;
  CLI::App app{"Numerical toolkit for Gaussian free fields, the spherical model, and the spin "
               "O(N) model on discrete tori"};
  app.set_config("--config", "", "key=value configuration file (CLI overrides config)");
  app.allow_config_extras(false);
  app.require_subcommand(1);

  CommonFlags spectrum_f, green_f, mass_f, sample_f, verify_f;

  CLI::App* spectrum = app.add_subcommand("spectrum", "dump the eigenvalue table of -Delta");
  cli_detail::attach(spectrum, spectrum_f);

  CLI::App* green = app.add_subcommand("green", "evaluate a Green's function kernel to CSV");
  std::string green_kind = "massive";
  std::vector<std::int64_t> green_boundary;
  std::vector<int> green_at;
  green->add_option("--kind", green_kind, "massive, zero-avg, dirichlet, or zd")
      ->check(CLI::IsMember({"massive", "zero-avg", "dirichlet", "zd"}));
  green->add_option("--boundary", green_boundary, "dirichlet boundary sites (flat indices)");
  green->add_option("--at", green_at, "displacement for zd kind");
  cli_detail::attach(green, green_f);

  CLI::App* mass = app.add_subcommand("mass", "solve the torus mass equation");
  cli_detail::attach(mass, mass_f);

  CLI::App* sample = app.add_subcommand("sample", "draw model samples to CSV with a manifest");
  std::string sample_model = "gff";
  sample->add_option("--model", sample_model, "gff, zero-avg-gff, spherical, or spin-on")
      ->check(CLI::IsMember({"gff", "zero-avg-gff", "spherical", "spin-on"}));
  cli_detail::attach(sample, sample_f);

  CLI::App* verify = app.add_subcommand("verify", "run a verification suite");
  std::string verify_id;
  bool verify_timing = false;
  verify->add_option("id", verify_id, "experiment id or 'all'")->required();
  verify->add_flag("--timing", verify_timing, "include wall-clock in reports (breaks rerun determinism)");
  cli_detail::attach(verify, verify_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*spectrum) {
      const TorusLattice lat(spectrum_f.dim, spectrum_f.side);
      const SpectrumTable t = build_spectrum(lat);
      std::ostringstream os;
      os << "# eigenvalues of -Delta, n=" << lat.side() << " d=" << lat.dim() << "\n";
      os << "mode_flat,";
      for (int i = 0; i < lat.dim(); ++i) os << "w" << (i + 1) << ",";
      os << "eta\n";
      for (std::int64_t w = 0; w < lat.volume(); ++w) {
        const Coords c = lat.to_coords(w);
        os << w << ",";
        for (int i = 0; i < lat.dim(); ++i) os << c[i] << ",";
        os << format_real(t.eigenvalues[w]) << "\n";
      }
      cli_detail::emit(os.str(), spectrum_f.out);
      return 0;
    }

    if (*green) {
      const TorusLattice lat(green_f.dim, green_f.side);
      if (green_kind == "zd") {
        std::vector<int> at(green_f.dim, 0);
        for (std::size_t i = 0; i < green_at.size() && i < at.size(); ++i) at[i] = green_at[i];
        std::ostringstream os;
        os << "# kind=zd d=" << green_f.dim << " m2=" << format_real(green_f.mass)
           << " convention=G=(-Delta+m^2)^{-1}\n";
        os << "value\n" << format_real(zd_green(green_f.dim, green_f.mass, at)) << "\n";
        cli_detail::emit(os.str(), green_f.out);
        return 0;
      }
      GreenTable g = [&] {
        if (green_kind == "massive") return massive_green(lat, green_f.mass);
        if (green_kind == "zero-avg") return zero_average_green(lat);
        return dirichlet_green(lat, green_boundary, green_f.mass);
      }();
      cli_detail::emit(cli_detail::kernel_csv(g, lat), green_f.out);
      return 0;
    }

    if (*mass) {
      const TorusLattice lat(mass_f.dim, mass_f.side);
      const ModelParams params(lat, mass_f.beta);
      const MassSolution sol = solve_torus_mass(params);
      std::ostringstream os;
      os << "m2 " << format_real(sol.m_squared) << "\n";
      os << "residual " << format_real(sol.residual) << "\n";
      os << "regime " << to_string(params.regime()) << "\n";
      if (std::isfinite(params.beta_c) && params.beta > params.beta_c)
        os << "lowT_diagnostic m2*(beta-beta_c)*n^d "
           << format_real(sol.m_squared * (params.beta - params.beta_c) * lat.volume()) << "\n";
      cli_detail::emit(os.str(), mass_f.out);
      return 0;
    }

    if (*sample) {
      const TorusLattice lat(sample_f.dim, sample_f.side);
      const std::int64_t count = sample_f.samples > 0 ? sample_f.samples : 1;
      const std::int64_t sweeps = sample_f.sweeps > 0 ? sample_f.sweeps : 2000;
      const std::int64_t burnin = sample_f.burnin > 0 ? sample_f.burnin : sweeps / 5;
      const std::string dir = sample_f.out.empty() ? "." : sample_f.out;
      std::filesystem::create_directories(dir);

      RunManifest manifest;
      manifest.tool_version = kToolVersion;
      for (int i = 0; i < argc; ++i) manifest.command_line += std::string(i ? " " : "") + argv[i];
      manifest.master_seed = sample_f.seed;
      manifest.started = cli_detail::timestamp_now();
      manifest.config = {{"model", sample_model},
                         {"dim", std::to_string(sample_f.dim)},
                         {"side", std::to_string(sample_f.side)},
                         {"beta", format_real(sample_f.beta)},
                         {"mass", format_real(sample_f.mass)},
                         {"spin_n", std::to_string(sample_f.spin_n)},
                         {"components", std::to_string(sample_f.components)},
                         {"samples", std::to_string(count)},
                         {"sweeps", std::to_string(sweeps)},
                         {"burnin", std::to_string(burnin)}};

      std::ostringstream csv;
      csv << "sample,site,component,value\n";
      ordered_json diag_json = ordered_json::array();
      for (std::int64_t s = 0; s < count; ++s) {
        FieldSample field = [&]() -> FieldSample {
          if (sample_model == "gff")
            return sample_massive_gff(lat, sample_f.mass, sample_f.components,
                                      sample_f.seed + static_cast<std::uint64_t>(s));
          if (sample_model == "zero-avg-gff")
            return sample_zero_avg_gff(lat, sample_f.seed + static_cast<std::uint64_t>(s));
          if (sample_model == "spherical") {
            SphericalRun run = sample_spherical_gibbs(ModelParams(lat, sample_f.beta), sweeps,
                                                      burnin, sample_f.seed,
                                                      static_cast<std::uint64_t>(s));
            ordered_json d;
            d["sample"] = s;
            d["ess"] = run.diagnostics.ess;
            d["autocorrelation_time"] = run.diagnostics.autocorrelation_time;
            d["max_norm_drift"] = run.diagnostics.max_norm_drift;
            diag_json.push_back(d);
            return std::move(run.sample);
          }
          SpinONRun run = sample_spin_on_gibbs(ModelParams(lat, sample_f.beta), sample_f.spin_n,
                                               sweeps, burnin, sample_f.seed,
                                               sample_f.components, static_cast<std::uint64_t>(s));
          ordered_json d;
          d["sample"] = s;
          d["ess"] = run.diagnostics.ess;
          diag_json.push_back(d);
          return std::move(run.sample);
        }();
        manifest.streams.push_back(field.provenance.stream + "/" +
                                   std::to_string(field.provenance.index));
        for (std::int64_t x = 0; x < lat.volume(); ++x)
          for (int comp = 0; comp < field.components; ++comp)
            csv << s << ',' << x << ',' << comp << ','
                << format_real(field.at(x, comp)) << "\n";
      }
      const std::string csv_path = dir + "/samples.csv";
      write_file(csv_path, csv.str());
      manifest.finished = cli_detail::timestamp_now();
      manifest.output_digests[csv_path] = file_digest(csv_path);
      ordered_json mj = manifest.to_json();
      mj["law"] = sample_model;
      mj["diagnostics"] = diag_json;
      write_file(dir + "/manifest.json", mj.dump(2) + "\n");
      return 0;
    }

    if (*verify) {
      ExperimentOptions opt;
      opt.seed = verify_f.seed;
      opt.threads = cli_detail::resolve_threads(verify_f.threads);
      opt.chains = verify_f.chains;
      opt.sweeps = verify_f.sweeps;
      opt.burnin = verify_f.burnin;
      opt.samples = verify_f.samples;

      std::vector<std::string> ids;
      if (verify_id == "all")
        ids = experiment_ids();
      else
        ids.push_back(verify_id);

      bool all_passed = true;
      for (const std::string& id : ids) {
        const auto t0 = std::chrono::steady_clock::now();
        ExperimentReport rep = run_experiment(id, opt);
        rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        all_passed = all_passed && rep.passed();
        if (!verify_f.out.empty()) {
          std::filesystem::create_directories(verify_f.out);
          write_file(verify_f.out + "/" + id + ".json", rep.to_json(verify_timing).dump(2) + "\n");
          write_file(verify_f.out + "/" + id + ".txt", rep.to_text(verify_timing));
          write_file(verify_f.out + "/" + id + ".csv", rep.to_csv());
        }
        if (verify_f.format == "json")
          std::cout << rep.to_json(verify_timing).dump(2) << "\n";
        else if (verify_f.format == "csv")
          std::cout << rep.to_csv();
        else
          std::cout << rep.to_text(verify_timing) << "\n";
      }
      return all_passed ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

inline int cli_main(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("torusgff");
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

}  // namespace torusgff
