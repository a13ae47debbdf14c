#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bidsim/experiment.hpp"

namespace bidsim {

/// Six significant digits, the fixed serialization width of every float in
/// the CSV/JSON reports.
inline std::string format_g6(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof buffer, "%.6g", value);
  return buffer;
}

inline double round_g6(double value) { return std::stod(format_g6(value)); }

/// Effective CLI parameters echoed into summary.json so a run can be
/// replayed exactly.
struct ReportConfig {
  std::string instance_path;
  int rounds = 200;
  int runs = 15;
  std::uint64_t base_seed = 0;
  std::optional<double> eta_override;
  double epsilon = 0.0004;
  int max_iterations = 50;
  std::string schedule = "gauss-seidel";
};

namespace detail {

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << contents;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace detail

/// Layout shared by all series files: round, mean, std, then one column per
/// run, rows ordered by round index.
inline std::string series_csv(const std::vector<std::vector<double>>& per_run,
                              const AggregateSeries& agg) {
  std::ostringstream out;
  out << "round,mean,std";
  for (std::size_t r = 0; r < per_run.size(); ++r) out << ",run" << r;
  out << "\n";
  for (std::size_t t = 0; t < agg.mean.size(); ++t) {
    out << t << "," << format_g6(agg.mean[t]) << "," << format_g6(agg.stddev[t]);
    for (const auto& run : per_run) out << "," << format_g6(run[t]);
    out << "\n";
  }
  return out.str();
}

inline nlohmann::ordered_json case_summary_json(const MarketInstance& instance,
                                                const CaseResult& result,
                                                const ReportConfig& config) {
  const int focal = instance.size() - 1;
  const CaseSummary summary = summarize_case(instance, result);

  nlohmann::ordered_json doc;
  doc["case"] = std::string(1, case_letter(result.case_id));
  doc["name"] = case_name(result.case_id);
  nlohmann::ordered_json policies = nlohmann::ordered_json::array();
  for (CasePolicy p : result.policies) policies.push_back(policy_name(p));
  doc["policies"] = policies;
  doc["instance"] = config.instance_path;
  doc["demand"] = round_g6(instance.demand);
  doc["bidders"] = instance.size();
  doc["focal_bidder"] = focal;
  doc["rounds"] = config.rounds;
  doc["runs"] = config.runs;
  doc["base_seed"] = config.base_seed;
  // worker count is omitted: results are independent of it by contract
  if (config.eta_override)
    doc["eta_override"] = round_g6(*config.eta_override);
  else
    doc["eta_override"] = nullptr;
  nlohmann::ordered_json etas = nlohmann::ordered_json::array();
  for (double eta : result.etas) etas.push_back(round_g6(eta));
  doc["etas"] = etas;
  nlohmann::ordered_json bounds = nlohmann::ordered_json::array();
  for (double b : result.bounds) bounds.push_back(round_g6(b));
  doc["utility_bounds"] = bounds;
  nlohmann::ordered_json seeds = nlohmann::ordered_json::array();
  for (const auto& run : result.runs) seeds.push_back(run.run_seed);
  doc["run_seeds"] = seeds;
  if (result.equilibrium) {
    nlohmann::ordered_json eq;
    eq["epsilon"] = round_g6(config.epsilon);
    eq["max_iterations"] = config.max_iterations;
    eq["schedule"] = config.schedule;
    eq["iterations"] = result.equilibrium->iterations;
    eq["converged"] = result.equilibrium->converged;
    eq["profile"] = result.equilibrium->final_profile;
    doc["diagonalization"] = eq;
  }
  nlohmann::ordered_json final_round;
  final_round["social_cost_mean"] = round_g6(summary.social_cost_mean);
  final_round["social_cost_std"] = round_g6(summary.social_cost_stddev);
  final_round["price_mean"] = round_g6(summary.price_mean);
  final_round["focal_payoff_mean"] = round_g6(summary.focal_payoff_mean);
  final_round["focal_average_regret"] = round_g6(summary.focal_average_regret);
  doc["final_round"] = final_round;
  return doc;
}

/// Writes social_cost.csv, price.csv, regret_bidder5.csv, payoff_bidder5.csv
/// and summary.json for one simulated case. The regret file carries the
/// focal bidder's average regret, the payoff file its per-round utility.
inline void write_case_reports(const MarketInstance& instance,
                               const CaseResult& result,
                               const ReportConfig& config,
                               const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const int focal = instance.size() - 1;

  const auto social = collect_series(
      result, [](const RoundRecord& r) { return r.social_cost; });
  const auto price =
      collect_series(result, [](const RoundRecord& r) { return r.price; });
  const auto payoff = collect_series(
      result, [&](const RoundRecord& r) { return r.utilities[focal]; });
  std::vector<std::vector<double>> regret;
  regret.reserve(result.runs.size());
  for (const auto& run : result.runs)
    regret.push_back(regret_of(instance, run.rounds, focal).average);

  detail::write_text_file(dir / "social_cost.csv",
                          series_csv(social, aggregate(social)));
  detail::write_text_file(dir / "price.csv", series_csv(price, aggregate(price)));
  detail::write_text_file(dir / "regret_bidder5.csv",
                          series_csv(regret, aggregate(regret)));
  detail::write_text_file(dir / "payoff_bidder5.csv",
                          series_csv(payoff, aggregate(payoff)));
  detail::write_text_file(
      dir / "summary.json",
      case_summary_json(instance, result, config).dump(2) + "\n");
}

inline std::string summary_table_text(const std::vector<CaseSummary>& table) {
  std::ostringstream out;
  out << "case  name                 social_cost  price     payoff_b5  avg_regret_b5\n";
  for (const auto& row : table) {
    char line[160];
    std::snprintf(line, sizeof line, "%c     %-20s %-12s %-9s %-10s %s\n",
                  case_letter(row.case_id), case_name(row.case_id),
                  format_g6(row.social_cost_mean).c_str(),
                  format_g6(row.price_mean).c_str(),
                  format_g6(row.focal_payoff_mean).c_str(),
                  format_g6(row.focal_average_regret).c_str());
    out << line;
  }
  return out.str();
}

/// Full eight-case bundle: one subdirectory per case plus a top-level
/// summary.json with the ascending social-cost table.
inline void write_report_bundle(const MarketInstance& instance,
                                const std::vector<CaseResult>& results,
                                const ReportConfig& config,
                                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json doc;
  doc["instance"] = config.instance_path;
  doc["rounds"] = config.rounds;
  doc["runs"] = config.runs;
  doc["base_seed"] = config.base_seed;

  for (const auto& result : results) {
    const std::string sub = std::string("case_") + case_letter(result.case_id);
    write_case_reports(instance, result, config, dir / sub);
  }
  const auto table = summary_table(instance, results);
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& row : table) {
    nlohmann::ordered_json entry;
    entry["case"] = std::string(1, case_letter(row.case_id));
    entry["name"] = case_name(row.case_id);
    entry["social_cost_mean"] = round_g6(row.social_cost_mean);
    entry["social_cost_std"] = round_g6(row.social_cost_stddev);
    entry["price_mean"] = round_g6(row.price_mean);
    entry["focal_payoff_mean"] = round_g6(row.focal_payoff_mean);
    entry["focal_average_regret"] = round_g6(row.focal_average_regret);
    rows.push_back(std::move(entry));
  }
  doc["cases_by_social_cost"] = rows;
  detail::write_text_file(dir / "summary.json", doc.dump(2) + "\n");
}

}  // namespace bidsim
