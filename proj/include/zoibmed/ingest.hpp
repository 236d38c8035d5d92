#pragma once

// CSV ingestion: role mapping, rescaling to [0, 1], categorical expansion,
// standardization and validation.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "zoibmed/model.hpp"
#include "zoibmed/table.hpp"

namespace zoibmed {

struct CategoricalColumn {
  std::string name;
  /// Declared levels (first is the reference). Empty: levels observed in the
  /// data, sorted numerically when possible.
  std::vector<std::string> levels;
};

struct ColumnRoles {
  std::string outcome;
  std::string mediator;
  std::string treatment;
  std::vector<std::string> covariates;      // numeric
  std::vector<CategoricalColumn> categorical;
};

struct IngestOptions {
  ColumnRoles roles;
  /// Original-scale bounds for variables that are rescaled to [0, 1].
  std::map<std::string, std::pair<double, double>> bounds;
  bool standardize = true;
};

/// Boundary diagnostics for one [0, 1] variable within one arm.
struct BoundarySummary {
  std::size_t n = 0;
  double zero = 0.0;   // proportion exactly 0
  double one = 0.0;    // proportion exactly 1
  double interior_mean = 0.0;
  double interior_sd = 0.0;
};

struct IngestReport {
  std::size_t rows = 0;
  std::array<std::size_t, 2> arm_rows{};
  std::array<BoundarySummary, 2> mediator;  // per arm
  std::array<BoundarySummary, 2> outcome;
  std::vector<std::string> design_columns;
};

struct Ingested {
  Dataset dataset;
  IngestReport report;
};

/// Throws DataError listing every offending row (missing values, values out
/// of range, unknown categories, non-binary treatment) or citing overlap
/// when an arm is empty.
Ingested ingest_table(const Table& table, const IngestOptions& options);
Ingested ingest_csv(const std::string& path, const IngestOptions& options);

BoundarySummary boundary_summary(const std::vector<double>& values);

}  // namespace zoibmed
