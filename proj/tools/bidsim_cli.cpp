// Command-line front end: loads an instance, dispatches one of the four
// workflows (clear / equilibrium / simulate / report) and writes the CSV/JSON
// reports. Exit codes: 0 success, 1 validation error, 2 computational
// failure (infeasible instance, non-convergence, I/O).

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bidsim/bidsim.hpp"

namespace {

bidsim::BidProfile parse_profile(const std::string& text, int expected) {
  bidsim::BidProfile profile;
  std::stringstream in(text);
  std::string token;
  while (std::getline(in, token, ',')) {
    try {
      std::size_t used = 0;
      const int value = std::stoi(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      profile.push_back(value);
    } catch (const std::exception&) {
      throw std::invalid_argument("profile entries must be integers: '" +
                                  token + "'");
    }
  }
  if (expected >= 0 && static_cast<int>(profile.size()) != expected)
    throw std::invalid_argument("profile must list exactly " +
                                std::to_string(expected) + " action indices");
  return profile;
}

std::string profile_text(const bidsim::BidProfile& profile) {
  std::string out;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(profile[i]);
  }
  return out;
}

bidsim::SweepSchedule parse_schedule(const std::string& name) {
  if (name == "gauss-seidel") return bidsim::SweepSchedule::GaussSeidel;
  if (name == "jacobi") return bidsim::SweepSchedule::Jacobi;
  throw std::invalid_argument("schedule must be gauss-seidel or jacobi");
}

struct CommonFlags {
  std::string instance_path;
  int rounds = 200;
  int runs = 15;
  std::uint64_t seed = 0;
  int jobs = 1;
  double eta = -1.0;  // < 0 means "derive from the horizon"
  double epsilon = 0.0004;
  int max_iter = 50;
  std::string schedule = "gauss-seidel";
  std::string out_dir = "out";
};

bidsim::ExperimentConfig experiment_config(const CommonFlags& flags) {
  bidsim::ExperimentConfig config;
  config.rounds = flags.rounds;
  config.runs = flags.runs;
  config.base_seed = flags.seed;
  config.jobs = flags.jobs;
  if (flags.eta >= 0.0) config.eta_override = flags.eta;
  config.diagonalization.tolerance = flags.epsilon;
  config.diagonalization.max_iterations = flags.max_iter;
  config.diagonalization.schedule = parse_schedule(flags.schedule);
  return config;
}

bidsim::ReportConfig report_config(const CommonFlags& flags) {
  bidsim::ReportConfig config;
  config.instance_path = flags.instance_path;
  config.rounds = flags.rounds;
  config.runs = flags.runs;
  config.base_seed = flags.seed;
  if (flags.eta >= 0.0) config.eta_override = flags.eta;
  config.epsilon = flags.epsilon;
  config.max_iterations = flags.max_iter;
  config.schedule = flags.schedule;
  return config;
}

int run_clear(const CommonFlags& flags, const std::string& profile_arg) {
  const auto instance = bidsim::load_instance(flags.instance_path);
  bidsim::BidProfile profile(instance.size(), 0);
  if (!profile_arg.empty()) profile = parse_profile(profile_arg, instance.size());
  const auto result = bidsim::clear_market(instance, profile);
  std::cout << "price " << bidsim::format_g6(result.price) << "\n";
  std::cout << "social_cost " << bidsim::format_g6(result.social_cost) << "\n";
  std::cout << "bidder,allocation,payment,utility\n";
  for (int i = 0; i < instance.size(); ++i)
    std::cout << i << "," << bidsim::format_g6(result.allocations[i]) << ","
              << bidsim::format_g6(result.payments[i]) << ","
              << bidsim::format_g6(result.utilities[i]) << "\n";
  return 0;
}

int run_equilibrium(const CommonFlags& flags, const std::string& init_arg) {
  const auto instance = bidsim::load_instance(flags.instance_path);
  bidsim::DiagonalizationOptions options;
  options.tolerance = flags.epsilon;
  options.max_iterations = flags.max_iter;
  options.schedule = parse_schedule(flags.schedule);
  if (!init_arg.empty())
    options.initial = parse_profile(init_arg, instance.size());

  const auto report = bidsim::diagonalize(instance, options);
  std::cout << "converged " << (report.converged ? "true" : "false") << "\n";
  std::cout << "iterations " << report.iterations << "\n";
  std::cout << "cycle_detected " << (report.cycle_detected ? "true" : "false")
            << "\n";
  for (std::size_t i = 0; i < report.history.size(); ++i)
    std::cout << "sweep " << i << " profile " << profile_text(report.history[i])
              << "\n";
  std::cout << "profile " << profile_text(report.final_profile) << "\n";

  const auto nash = bidsim::verify_nash(instance, report.final_profile);
  std::cout << "nash " << (nash.is_nash ? "true" : "false") << "\n";
  std::cout << "worst_gain " << bidsim::format_g6(nash.worst_gain) << "\n";

  const auto clearing = bidsim::clear_market(instance, report.final_profile);
  std::cout << "price " << bidsim::format_g6(clearing.price) << "\n";
  std::cout << "social_cost " << bidsim::format_g6(clearing.social_cost) << "\n";
  if (!report.converged) {
    std::cerr << "error: diagonalization did not converge\n";
    return 2;
  }
  return 0;
}

int run_simulate(const CommonFlags& flags, char case_letter) {
  const auto instance = bidsim::load_instance(flags.instance_path);
  auto config = experiment_config(flags);
  config.case_id = bidsim::case_from_letter(case_letter);
  const auto result = bidsim::run_case(instance, config);
  bidsim::write_case_reports(instance, result, report_config(flags),
                             flags.out_dir);
  const auto summary = bidsim::summarize_case(instance, result);
  std::cout << "case " << case_letter << " rounds " << flags.rounds << " runs "
            << flags.runs << "\n";
  std::cout << "final_social_cost_mean "
            << bidsim::format_g6(summary.social_cost_mean) << "\n";
  std::cout << "final_price_mean " << bidsim::format_g6(summary.price_mean)
            << "\n";
  std::cout << "reports_written " << flags.out_dir << "\n";
  return 0;
}

int run_report(const CommonFlags& flags) {
  const auto instance = bidsim::load_instance(flags.instance_path);
  const auto results = bidsim::run_all_cases(instance, experiment_config(flags));
  bidsim::write_report_bundle(instance, results, report_config(flags),
                              flags.out_dir);
  std::cout << bidsim::summary_table_text(bidsim::summary_table(instance, results));
  std::cout << "reports_written " << flags.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bidsim - repeated day-ahead electricity auction simulator"};
  app.require_subcommand(1);

  CommonFlags flags;
  std::string profile_arg;
  std::string init_arg;
  std::string case_arg;

  auto* clear = app.add_subcommand("clear", "clear a single auction round");
  clear->add_option("--instance", flags.instance_path, "instance JSON file")
      ->required();
  clear->add_option("--profile", profile_arg,
                    "comma-separated action indices (default: all true costs)");

  auto* equilibrium = app.add_subcommand(
      "equilibrium", "best-response diagonalization plus Nash check");
  equilibrium->add_option("--instance", flags.instance_path, "instance JSON file")
      ->required();
  equilibrium->add_option("--epsilon", flags.epsilon,
                          "convergence tolerance on bid coefficients");
  equilibrium->add_option("--max-iter", flags.max_iter, "sweep budget");
  equilibrium->add_option("--schedule", flags.schedule,
                          "gauss-seidel (default) or jacobi");
  equilibrium->add_option("--init", init_arg, "starting profile (default: true costs)");

  auto* simulate = app.add_subcommand("simulate", "run one case over T rounds, R runs");
  simulate->add_option("--instance", flags.instance_path, "instance JSON file")
      ->required();
  simulate->add_option("--case", case_arg, "case letter a..h")->required();
  simulate->add_option("--rounds", flags.rounds, "auction rounds per run");
  simulate->add_option("--runs", flags.runs, "independent runs");
  simulate->add_option("--seed", flags.seed, "base seed");
  simulate->add_option("--eta", flags.eta, "learning-rate override");
  simulate->add_option("--epsilon", flags.epsilon, "case-a convergence tolerance");
  simulate->add_option("--max-iter", flags.max_iter, "case-a sweep budget");
  simulate->add_option("--schedule", flags.schedule, "case-a sweep schedule");
  simulate->add_option("--out", flags.out_dir, "output directory");
  simulate->add_option("--jobs", flags.jobs, "parallel run workers");

  auto* report = app.add_subcommand("report", "run all eight cases and tabulate");
  report->add_option("--instance", flags.instance_path, "instance JSON file")
      ->required();
  report->add_option("--rounds", flags.rounds, "auction rounds per run");
  report->add_option("--runs", flags.runs, "independent runs");
  report->add_option("--seed", flags.seed, "base seed");
  report->add_option("--eta", flags.eta, "learning-rate override");
  report->add_option("--epsilon", flags.epsilon, "case-a convergence tolerance");
  report->add_option("--max-iter", flags.max_iter, "case-a sweep budget");
  report->add_option("--schedule", flags.schedule, "case-a sweep schedule");
  report->add_option("--out", flags.out_dir, "output directory");
  report->add_option("--jobs", flags.jobs, "parallel run workers");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (clear->parsed()) return run_clear(flags, profile_arg);
    if (equilibrium->parsed()) return run_equilibrium(flags, init_arg);
    if (simulate->parsed()) {
      if (case_arg.size() != 1)
        throw std::invalid_argument("--case expects a single letter a..h");
      return run_simulate(flags, case_arg[0]);
    }
    if (report->parsed()) return run_report(flags);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
