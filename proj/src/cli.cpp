#include "dropf/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "json.hpp"

#include "dropf/report.hpp"

namespace dropf {

namespace {

namespace fs = std::filesystem;

std::string data_dir() {
  if (const char* env = std::getenv("DROPF_DATA_DIR")) return env;
  return "data";
}

// Accepts a literal path, a file under the data directory, or a bare name
// that gets the conventional extension appended.
std::string resolve_input(const std::string& name, const std::string& ext) {
  if (fs::exists(name)) return name;
  const fs::path dir(data_dir());
  if (fs::exists(dir / name)) return (dir / name).string();
  if (fs::exists(dir / (name + ext))) return (dir / (name + ext)).string();
  throw CaseError("cannot find input '" + name + "' (also tried under " + dir.string() + ")");
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string default_out_dir() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[48];
  std::strftime(buf, sizeof(buf), "dropf-out-%Y%m%d-%H%M%S", &tm);
  return buf;
}

struct CostOverride {
  int bus = 0;
  double a = 0, b = 0, c = 0;
};

void apply_cost_overrides(NetworkCase& net, const std::vector<CostOverride>& overrides) {
  for (const CostOverride& o : overrides) {
    const std::vector<int> gens = net.generators_at(o.bus);
    if (gens.empty())
      throw ConfigError("cost override names bus " + std::to_string(o.bus) +
                        " which has no generator");
    for (int g : gens) {
      net.generators[g].cost_a = o.a;
      net.generators[g].cost_b = o.b;
      net.generators[g].cost_c = o.c;
    }
  }
}

struct StudyConfig {
  std::vector<ScenarioTariff> tariffs{ScenarioTariff::tou, ScenarioTariff::rtp};
  std::vector<double> gammas{0.1, 0.2, 0.5};
  std::optional<std::string> case_path, profile_path, tariff_path, elasticity_path;
  std::vector<CostOverride> cost_overrides;
};

StudyConfig load_study_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open study config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("study config " + path + ": " + e.what());
  }

  const fs::path dir = fs::path(path).parent_path();
  auto rel = [&](const std::string& p) {
    return fs::exists(p) || dir.empty() ? p : (dir / p).string();
  };

  StudyConfig cfg;
  try {
    if (j.contains("tariffs")) {
      cfg.tariffs.clear();
      for (const auto& t : j.at("tariffs")) {
        const std::string s = t.get<std::string>();
        if (s == "tou")
          cfg.tariffs.push_back(ScenarioTariff::tou);
        else if (s == "rtp")
          cfg.tariffs.push_back(ScenarioTariff::rtp);
        else
          throw ConfigError("unknown tariff '" + s + "' in study config");
      }
    }
    if (j.contains("gammas")) {
      cfg.gammas.clear();
      for (const auto& g : j.at("gammas")) cfg.gammas.push_back(g.get<double>());
    }
    if (j.contains("case")) cfg.case_path = rel(j.at("case").get<std::string>());
    if (j.contains("profile")) cfg.profile_path = rel(j.at("profile").get<std::string>());
    if (j.contains("tariff_config")) cfg.tariff_path = rel(j.at("tariff_config").get<std::string>());
    if (j.contains("elasticity")) cfg.elasticity_path = rel(j.at("elasticity").get<std::string>());
    if (j.contains("cost_overrides")) {
      for (const auto& o : j.at("cost_overrides")) {
        CostOverride co;
        co.bus = o.at("bus").get<int>();
        co.a = o.at("a").get<double>();
        co.b = o.at("b").get<double>();
        co.c = o.at("c").get<double>();
        cfg.cost_overrides.push_back(co);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("study config " + path + ": " + e.what());
  }
  return cfg;
}

struct CommonArgs {
  std::string case_name = "ieee14";
  std::string profile_name = "default";
  std::string tariff_config_name;
  std::string elasticity_name;
  std::string out_dir;
  double baseline_price = 0;  // 0 = keep config value
  bool verbose = false;
};

struct LoadedInputs {
  NetworkCase net;
  LoadProfile profile;
  TariffConfig tariff;
  ElasticityMatrix elasticity{Eigen::MatrixXd::Zero(kHours, kHours)};
  std::vector<std::pair<std::string, std::string>> paths;  // manifest labels
};

LoadedInputs load_inputs(const CommonArgs& args, const StudyConfig* study) {
  LoadedInputs in;

  const std::string case_path =
      study && study->case_path && args.case_name == "ieee14" ? *study->case_path
                                                              : args.case_name;
  const std::string resolved_case = resolve_input(case_path, ".case");
  in.net = load_case_file(resolved_case);
  in.paths.emplace_back("case", resolved_case);

  const std::string profile_path =
      study && study->profile_path && args.profile_name == "default" ? *study->profile_path
                                                                     : args.profile_name;
  const std::string resolved_profile = resolve_input(profile_path, ".profile");
  in.profile = LoadProfile::load(resolved_profile);
  in.paths.emplace_back("profile", resolved_profile);

  std::string tariff_name = args.tariff_config_name;
  if (tariff_name.empty() && study && study->tariff_path) tariff_name = *study->tariff_path;
  if (tariff_name.empty()) tariff_name = "tariff.json";
  if (fs::exists(tariff_name) || fs::exists(fs::path(data_dir()) / tariff_name)) {
    const std::string resolved = resolve_input(tariff_name, ".json");
    in.tariff = TariffConfig::load(resolved);
    in.paths.emplace_back("tariff_config", resolved);
  }
  if (args.baseline_price != 0) {
    if (!(args.baseline_price > 0)) throw ConfigError("--baseline-price must be positive");
    in.tariff.baseline_price = args.baseline_price;
  }

  std::string elas_name = args.elasticity_name;
  if (elas_name.empty() && study && study->elasticity_path) elas_name = *study->elasticity_path;
  if (elas_name.empty()) elas_name = "elasticity.json";
  ElasticityConfig ecfg = ElasticityConfig::defaults();
  if (fs::exists(elas_name) || fs::exists(fs::path(data_dir()) / elas_name)) {
    const std::string resolved = resolve_input(elas_name, ".json");
    ecfg = ElasticityConfig::load(resolved);
    in.paths.emplace_back("elasticity", resolved);
  }
  in.elasticity =
      build_elasticity_matrix(in.tariff.period_map, ecfg.block, ecfg.same_period_cross);

  if (study) apply_cost_overrides(in.net, study->cost_overrides);
  return in;
}

int cmd_solve(const CommonArgs& args) {
  const std::string resolved = resolve_input(args.case_name, ".case");
  const NetworkCase net = load_case_file(resolved);
  OpfOptions opts;
  opts.verbose = args.verbose;
  const OpfSolution sol = solve_opf(net, BusLoads::base_of(net), opts);

  std::printf("case: %s\n", resolved.c_str());
  std::printf("objective: %s $/h  (%s, %d iterations)\n", format_full(sol.objective).c_str(),
              sol.method.c_str(), sol.iterations);
  for (size_t g = 0; g < net.generators.size(); ++g)
    std::printf("  gen %zu @bus %-4d pg %12.6f MW   qg %12.6f MVAr\n", g + 1,
                net.generators[g].bus, sol.state.pg[static_cast<int>(g)],
                sol.state.qg[static_cast<int>(g)]);
  std::printf("  vm range [%.6f, %.6f] p.u.\n", sol.state.vm.minCoeff(),
              sol.state.vm.maxCoeff());
  if (!sol.binding_constraints.empty()) {
    std::printf("binding:");
    for (const std::string& b : sol.binding_constraints) std::printf(" %s", b.c_str());
    std::printf("\n");
  }
  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    const std::string path = (fs::path(args.out_dir) / "solution.csv").string();
    std::ofstream out(path);
    if (!out) throw ReportError("cannot write " + path);
    out << "generator,bus,pg_mw,qg_mvar\n";
    for (size_t g = 0; g < net.generators.size(); ++g)
      out << (g + 1) << ',' << net.generators[g].bus << ','
          << format_full(sol.state.pg[static_cast<int>(g)]) << ','
          << format_full(sol.state.qg[static_cast<int>(g)]) << "\n";
    std::printf("wrote %s\n", path.c_str());
  }
  return 0;
}

int run_and_emit(const LoadedInputs& in, const std::vector<ScenarioSpec>& specs,
                 const std::string& out_dir) {
  fs::create_directories(out_dir);

  RunManifest manifest;
  manifest.tool = kToolName;
  manifest.version = kToolVersion;
  manifest.timestamp = timestamp_utc();
  manifest.out_dir = out_dir;
  manifest.inputs = in.paths;
  for (const ScenarioSpec& s : specs) manifest.scenarios.push_back(s.name);
  manifest.outputs.push_back("summary.csv");
  for (const ScenarioSpec& s : specs) {
    manifest.outputs.push_back(per_hour_csv_name(s.name));
    manifest.outputs.push_back(profile_svg_name(s.name));
    manifest.outputs.push_back(cost_svg_name(s.name));
  }
  manifest.write((fs::path(out_dir) / "manifest.json").string());

  std::vector<ScenarioResult> results;
  bool all_ok = true;
  for (const ScenarioSpec& spec : specs) {
    std::fprintf(stderr, "running %s ...\n", spec.name.c_str());
    ScenarioResult res = run_scenario(spec);
    for (const std::string& w : res.warnings) std::fprintf(stderr, "  warning: %s\n", w.c_str());
    if (!res.ok()) {
      all_ok = false;
      std::fprintf(stderr, "  FAILED (%zu infeasible/diverged hours)\n",
                   res.failed_hours.size());
    }
    results.push_back(std::move(res));
  }

  const ScenarioResult* baseline = nullptr;
  for (const ScenarioResult& r : results)
    if (r.tariff == ScenarioTariff::none) baseline = &r;

  std::vector<SummaryRow> rows;
  for (const ScenarioResult& r : results) {
    SummaryRow row;
    row.scenario = r.name;
    row.total_cost = r.total_cost;
    row.peak_load_mw = r.modified_profile.peak_mw();
    row.percent_saving = 0.0;
    if (baseline && &r != baseline && r.ok() && baseline->ok())
      row.percent_saving = compare_scenarios(*baseline, r).percent_saving;
    rows.push_back(row);

    const LoadProfile& base_profile =
        baseline ? baseline->modified_profile : r.modified_profile;
    write_per_hour_csv((fs::path(out_dir) / per_hour_csv_name(r.name)).string(), base_profile,
                       r);
    write_profile_svg((fs::path(out_dir) / profile_svg_name(r.name)).string(), base_profile,
                      r);
    write_cost_svg((fs::path(out_dir) / cost_svg_name(r.name)).string(), r);
  }
  write_summary_csv((fs::path(out_dir) / "summary.csv").string(), rows);

  std::printf("%-12s %16s %12s %10s\n", "scenario", "total_cost", "peak_mw", "saving_%");
  for (const SummaryRow& row : rows)
    std::printf("%-12s %16.4f %12.4f %10.4f\n", row.scenario.c_str(), row.total_cost,
                row.peak_load_mw, row.percent_saving);
  std::printf("outputs in %s\n", out_dir.c_str());
  return all_ok ? 0 : 1;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"demand-response optimal power flow studies"};
  app.set_version_flag("--version", std::string(kToolName) + " " + kToolVersion);
  app.require_subcommand(1);

  CommonArgs args;
  std::string tariff_choice = "none";
  double gamma = 0.0;
  std::string config_path;

  auto add_common = [&](CLI::App* cmd, bool with_profile) {
    cmd->add_option("--case", args.case_name, "case file (path or data-dir name)");
    if (with_profile)
      cmd->add_option("--profile", args.profile_name, "24-hour load profile file");
    cmd->add_option("--tariff-config", args.tariff_config_name, "tariff config JSON");
    cmd->add_option("--elasticity", args.elasticity_name, "elasticity config JSON");
    cmd->add_option("--baseline-price", args.baseline_price, "flat baseline price, $/MWh");
    cmd->add_option("--out", args.out_dir, "output directory");
    cmd->add_flag("--verbose", args.verbose, "solver iteration logging");
  };

  CLI::App* solve = app.add_subcommand("solve", "single OPF on a case at its base load");
  add_common(solve, false);

  CLI::App* scenario = app.add_subcommand("scenario", "one tariff/participation scenario");
  add_common(scenario, true);
  scenario->add_option("--tariff", tariff_choice, "none|tou|rtp")
      ->check(CLI::IsMember({"none", "tou", "rtp"}));
  scenario->add_option("--gamma", gamma, "participation factor in [0,1]");

  CLI::App* study = app.add_subcommand(
      "study", "baseline plus the tou/rtp x participation grid, with comparison table");
  add_common(study, true);
  study->add_option("--config", config_path, "study config JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (solve->parsed()) return cmd_solve(args);

    if (scenario->parsed()) {
      const LoadedInputs in = load_inputs(args, nullptr);
      ScenarioSpec spec;
      spec.tariff = tariff_choice == "tou"
                        ? ScenarioTariff::tou
                        : (tariff_choice == "rtp" ? ScenarioTariff::rtp : ScenarioTariff::none);
      spec.gamma = gamma;
      spec.network = &in.net;
      spec.profile = &in.profile;
      spec.elasticity = &in.elasticity;
      spec.tariff_config = &in.tariff;
      spec.opf.verbose = args.verbose;
      spec.name = default_scenario_name(spec.tariff, spec.gamma);
      const std::string out_dir = args.out_dir.empty() ? default_out_dir() : args.out_dir;
      return run_and_emit(in, {spec}, out_dir);
    }

    // study
    StudyConfig cfg;
    if (!config_path.empty()) {
      cfg = load_study_config(config_path);
    } else {
      const fs::path bundled = fs::path(data_dir()) / "study.json";
      if (fs::exists(bundled)) cfg = load_study_config(bundled.string());
    }
    const LoadedInputs in = load_inputs(args, &cfg);

    std::vector<ScenarioSpec> specs;
    ScenarioSpec base;
    base.tariff = ScenarioTariff::none;
    base.network = &in.net;
    base.profile = &in.profile;
    base.elasticity = &in.elasticity;
    base.tariff_config = &in.tariff;
    base.opf.verbose = args.verbose;
    base.name = default_scenario_name(base.tariff, 0.0);
    specs.push_back(base);
    for (ScenarioTariff tariff : cfg.tariffs) {
      for (double g : cfg.gammas) {
        ScenarioSpec s = base;
        s.tariff = tariff;
        s.gamma = g;
        s.name = default_scenario_name(tariff, g);
        specs.push_back(s);
      }
    }
    const std::string out_dir = args.out_dir.empty() ? default_out_dir() : args.out_dir;
    return run_and_emit(in, specs, out_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s: error: %s\n", kToolName, e.what());
    return 1;
  }
}

}  // namespace dropf
