#pragma once

#include <filesystem>

#include "fusiongen/bench.hpp"

namespace fusiongen {

/// Writes results.csv (header: dataset,subject,mode,trials,method,mean_acc,
/// std_acc,seed_accs) and results.txt (per-dataset accuracy table, percent
/// with two decimals) under out_dir.
void emit_results(const ResultTable& table, const std::filesystem::path& out_dir);

/// Parses a results.csv written by emit_results.
ResultTable parse_results_csv(const std::filesystem::path& csv_path);

/// The plain-text accuracy table as a string (also written by emit_results).
std::string format_results_text(const ResultTable& table);

}  // namespace fusiongen
