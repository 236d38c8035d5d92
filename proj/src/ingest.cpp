#include "zoibmed/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "zoibmed/error.hpp"

namespace zoibmed {

namespace {

bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == ".";
}

class Problems {
 public:
  void add(std::size_t row, const std::string& what) {
    if (first_ == DataError::npos) first_ = row;
    ++count_;
    if (lines_.size() < 25) {
      std::ostringstream os;
      os << "row " << row + 1 << ": " << what;
      lines_.push_back(os.str());
    }
  }
  void raise_if_any() const {
    if (count_ == 0) return;
    std::ostringstream os;
    os << "rejected " << count_ << " value(s)";
    for (const auto& l : lines_) os << "\n  " << l;
    if (count_ > lines_.size()) os << "\n  ...";
    throw DataError(os.str(), first_);
  }

 private:
  std::vector<std::string> lines_;
  std::size_t count_ = 0;
  std::size_t first_ = DataError::npos;
};

std::vector<std::string> observed_levels(const Table& t, std::size_t col) {
  std::set<std::string> seen;
  for (std::size_t r = 0; r < t.rows(); ++r)
    if (!is_missing(t.at(r, col))) seen.insert(t.at(r, col));
  std::vector<std::string> levels(seen.begin(), seen.end());
  bool numeric = true;
  for (const auto& l : levels) {
    try {
      parse_double(l);
    } catch (const DataError&) {
      numeric = false;
      break;
    }
  }
  if (numeric)
    std::stable_sort(levels.begin(), levels.end(), [](const auto& a, const auto& b) {
      return parse_double(a) < parse_double(b);
    });
  return levels;
}

}  // namespace

BoundarySummary boundary_summary(const std::vector<double>& values) {
  BoundarySummary s;
  s.n = values.size();
  if (values.empty()) return s;
  std::size_t zero = 0, one = 0;
  double sum = 0.0;
  std::vector<double> interior;
  for (double v : values) {
    if (v == 0.0)
      ++zero;
    else if (v == 1.0)
      ++one;
    else
      interior.push_back(v);
  }
  const double n = static_cast<double>(values.size());
  s.zero = static_cast<double>(zero) / n;
  s.one = static_cast<double>(one) / n;
  if (!interior.empty()) {
    for (double v : interior) sum += v;
    s.interior_mean = sum / static_cast<double>(interior.size());
    if (interior.size() > 1) {
      double ss = 0.0;
      for (double v : interior) ss += (v - s.interior_mean) * (v - s.interior_mean);
      s.interior_sd = std::sqrt(ss / static_cast<double>(interior.size() - 1));
    }
  }
  return s;
}

Ingested ingest_table(const Table& table, const IngestOptions& options) {
  const ColumnRoles& roles = options.roles;
  // Roles must partition a subset of the columns.
  {
    std::vector<std::string> used = {roles.outcome, roles.mediator, roles.treatment};
    for (const auto& c : roles.covariates) used.push_back(c);
    for (const auto& c : roles.categorical) used.push_back(c.name);
    std::set<std::string> seen;
    for (const auto& u : used) {
      if (u.empty()) throw DataError("outcome, mediator and treatment columns are required");
      if (!table.has_column(u)) throw DataError("unknown column '" + u + "'");
      if (!seen.insert(u).second)
        throw DataError("column '" + u + "' is assigned more than one role");
    }
    for (const auto& [name, b] : options.bounds)
      if (name != roles.outcome && name != roles.mediator && !table.has_column(name))
        throw DataError("bounds given for unknown column '" + name + "'");
  }

  const std::size_t n = table.rows();
  if (n == 0) throw DataError("input has no data rows");
  Problems problems;

  auto numeric = [&](std::size_t r, const std::string& col, double& out) {
    const std::string& s = table.at(r, col);
    if (is_missing(s)) {
      problems.add(r, "missing value in '" + col + "'");
      return false;
    }
    try {
      out = parse_double(s);
    } catch (const DataError&) {
      problems.add(r, "non-numeric value '" + s + "' in '" + col + "'");
      return false;
    }
    if (!std::isfinite(out)) {
      problems.add(r, "non-finite value in '" + col + "'");
      return false;
    }
    return true;
  };

  std::vector<int> treatment(n, 0);
  for (std::size_t r = 0; r < n; ++r) {
    double v = 0.0;
    if (!numeric(r, roles.treatment, v)) continue;
    if (v != 0.0 && v != 1.0) {
      problems.add(r, "treatment '" + table.at(r, roles.treatment) + "' is not 0 or 1");
      continue;
    }
    treatment[r] = static_cast<int>(v);
  }

  std::vector<RescaleRecord> records;
  auto unit_column = [&](const std::string& col) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    const auto b = options.bounds.find(col);
    double lo = 0.0, hi = 1.0;
    if (b != options.bounds.end()) {
      lo = b->second.first;
      hi = b->second.second;
      if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
        throw DataError("bounds for '" + col + "' must satisfy lo < hi");
    }
    for (std::size_t r = 0; r < n; ++r) {
      double v = 0.0;
      if (!numeric(r, col, v)) continue;
      if (v < lo || v > hi) {
        std::ostringstream os;
        os << "'" << col << "' value " << table.at(r, col) << " outside [" << lo << ", "
           << hi << "]";
        problems.add(r, os.str());
        continue;
      }
      out[static_cast<Eigen::Index>(r)] = (v - lo) / (hi - lo);
    }
    if (b != options.bounds.end()) records.push_back({col, lo, hi});
    return out;
  };
  Eigen::VectorXd mediator = unit_column(roles.mediator);
  Eigen::VectorXd outcome = unit_column(roles.outcome);

  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;
  for (const auto& col : roles.covariates) {
    std::vector<double> v(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) numeric(r, col, v[r]);
    names.push_back(col);
    columns.push_back(std::move(v));
  }
  for (const auto& cat : roles.categorical) {
    const std::size_t c = table.column(cat.name);
    std::vector<std::string> levels =
        cat.levels.empty() ? observed_levels(table, c) : cat.levels;
    if (levels.size() < 2)
      throw DataError("categorical column '" + cat.name + "' has fewer than two levels");
    const std::size_t first = columns.size();
    for (std::size_t l = 1; l < levels.size(); ++l) {
      names.push_back(cat.name + "=" + levels[l]);
      columns.emplace_back(n, 0.0);
    }
    for (std::size_t r = 0; r < n; ++r) {
      const std::string& s = table.at(r, c);
      if (is_missing(s)) {
        problems.add(r, "missing value in '" + cat.name + "'");
        continue;
      }
      const auto it = std::find(levels.begin(), levels.end(), s);
      if (it == levels.end()) {
        problems.add(r, "unknown category '" + s + "' in '" + cat.name + "'");
        continue;
      }
      const auto l = static_cast<std::size_t>(it - levels.begin());
      if (l > 0) columns[first + l - 1][r] = 1.0;
    }
  }
  problems.raise_if_any();

  for (int a : {0, 1})
    if (std::count(treatment.begin(), treatment.end(), a) == 0)
      throw DataError("treatment arm " + std::to_string(a) +
                      " is empty; both arms must be observed (overlap)");

  RowMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j)
    for (std::size_t r = 0; r < n; ++r)
      x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = columns[j][r];

  StandardizeRecord standardization;
  if (options.standardize && x.cols() > 0) {
    StandardizedMatrix s = standardize_covariates(x, names);
    x = std::move(s.values);
    standardization = std::move(s.record);
  }

  IngestReport report;
  report.rows = n;
  report.design_columns = names;
  for (int a : {0, 1}) {
    std::vector<double> m, y;
    for (std::size_t r = 0; r < n; ++r)
      if (treatment[r] == a) {
        m.push_back(mediator[static_cast<Eigen::Index>(r)]);
        y.push_back(outcome[static_cast<Eigen::Index>(r)]);
      }
    report.arm_rows[static_cast<std::size_t>(a)] = m.size();
    report.mediator[static_cast<std::size_t>(a)] = boundary_summary(m);
    report.outcome[static_cast<std::size_t>(a)] = boundary_summary(y);
  }

  Dataset ds(std::move(x), std::move(treatment), std::move(mediator), std::move(outcome),
             names, records, standardization);
  return Ingested{std::move(ds), std::move(report)};
}

Ingested ingest_csv(const std::string& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return ingest_table(Table::read_csv(in), options);
}

}  // namespace zoibmed
