#include "zoibmed/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "zoibmed/error.hpp"

namespace zoibmed {

double expit(double t) noexcept {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double logit(double p) noexcept { return std::log(p) - std::log1p(-p); }

RescaledValues rescale_to_unit(std::span<const double> values, double lo,
                               double hi, std::string variable) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    std::ostringstream os;
    os << "rescale " << variable << ": bounds [" << lo << ", " << hi
       << "] must satisfy lo < hi";
    throw DataError(os.str());
  }
  RescaledValues out{Eigen::VectorXd(static_cast<Eigen::Index>(values.size())),
                     RescaleRecord{std::move(variable), lo, hi}};
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double v = values[i];
    if (!(v >= lo && v <= hi)) {
      std::ostringstream os;
      os << "row " << i << ": " << out.record.variable << " = " << v
         << " outside [" << lo << ", " << hi << "]";
      throw DataError(os.str(), i);
    }
    out.values[static_cast<Eigen::Index>(i)] = out.record.to_unit(v);
  }
  return out;
}

StandardizedMatrix standardize_covariates(const RowMatrix& x,
                                          std::vector<std::string> names) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (names.empty())
    for (Eigen::Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  if (static_cast<Eigen::Index>(names.size()) != p)
    throw DataError("standardize_covariates: name count does not match columns");
  if (n < 2 && p > 0)
    throw DataError("standardize_covariates: need at least two rows");

  StandardizeRecord record{std::move(names), {}, {}};
  for (Eigen::Index j = 0; j < p; ++j) {
    const double mean = x.col(j).mean();
    const double ss = (x.col(j).array() - mean).square().sum();
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0) || !std::isfinite(sd))
      throw DataError("covariate '" + record.columns[static_cast<std::size_t>(j)] +
                      "' has zero variance");
    record.mean.push_back(mean);
    record.sd.push_back(sd);
  }
  return {apply_standardization(x, record), std::move(record)};
}

RowMatrix apply_standardization(const RowMatrix& x,
                                const StandardizeRecord& record) {
  RowMatrix out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const auto k = static_cast<std::size_t>(j);
    out.col(j) = (x.col(j).array() - record.mean[k]) / record.sd[k];
  }
  return out;
}

// ---------------------------------------------------------------------------

Dataset::Dataset(RowMatrix covariates, std::vector<int> treatment,
                 Eigen::VectorXd mediator, Eigen::VectorXd outcome,
                 std::vector<std::string> column_names,
                 std::vector<RescaleRecord> rescale,
                 StandardizeRecord standardization)
    : covariates_(std::move(covariates)),
      treatment_(std::move(treatment)),
      mediator_(std::move(mediator)),
      outcome_(std::move(outcome)),
      column_names_(std::move(column_names)),
      rescale_(std::move(rescale)),
      standardization_(std::move(standardization)) {
  const auto n = treatment_.size();
  if (n == 0) throw DataError("dataset is empty");
  if (static_cast<std::size_t>(covariates_.rows()) != n ||
      static_cast<std::size_t>(mediator_.size()) != n ||
      static_cast<std::size_t>(outcome_.size()) != n)
    throw DataError("dataset columns have inconsistent lengths");
  if (column_names_.empty())
    for (std::size_t j = 0; j < num_covariates(); ++j)
      column_names_.push_back("x" + std::to_string(j + 1));
  if (column_names_.size() != num_covariates())
    throw DataError("column name count does not match covariates");

  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    if (treatment_[i] != 0 && treatment_[i] != 1)
      throw DataError("row " + std::to_string(i) + ": treatment must be 0 or 1", i);
    if (!(mediator_[k] >= 0.0 && mediator_[k] <= 1.0))
      throw DataError("row " + std::to_string(i) + ": mediator outside [0, 1]", i);
    if (!(outcome_[k] >= 0.0 && outcome_[k] <= 1.0))
      throw DataError("row " + std::to_string(i) + ": outcome outside [0, 1]", i);
    for (double v : covariate_row(i))
      if (!std::isfinite(v))
        throw DataError("row " + std::to_string(i) + ": non-finite covariate", i);
  }
  for (int a : {0, 1})
    if (arm_size(a) == 0)
      throw DataError("treatment arm " + std::to_string(a) +
                      " is empty; overlap requires both arms to be observed");
}

std::optional<RescaleRecord> Dataset::rescale_record(
    const std::string& variable) const {
  for (const auto& r : rescale_)
    if (r.variable == variable) return r;
  return std::nullopt;
}

std::size_t Dataset::arm_size(int a) const noexcept {
  return static_cast<std::size_t>(
      std::count(treatment_.begin(), treatment_.end(), a));
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  const auto m = static_cast<Eigen::Index>(rows.size());
  RowMatrix x(m, covariates_.cols());
  std::vector<int> a(rows.size());
  Eigen::VectorXd med(m);
  Eigen::VectorXd out(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto i = rows[static_cast<std::size_t>(r)];
    x.row(r) = covariates_.row(static_cast<Eigen::Index>(i));
    a[static_cast<std::size_t>(r)] = treatment_[i];
    med[r] = mediator_[static_cast<Eigen::Index>(i)];
    out[r] = outcome_[static_cast<Eigen::Index>(i)];
  }
  return Dataset(std::move(x), std::move(a), std::move(med), std::move(out),
                 column_names_, rescale_, standardization_);
}

// ---------------------------------------------------------------------------

double ModelSpec::ridge_penalty() const noexcept {
  if (!prior_sd) return 0.0;
  return 1.0 / (*prior_sd * *prior_sd);
}

std::size_t design_width(const ModelSpec& spec, std::size_t num_covariates,
                         Submodel which) noexcept {
  return 1 + num_covariates + (spec.heterogeneous ? 0 : 1) +
         (which == Submodel::kOutcome ? 1 : 0);
}

std::size_t mediator_column(const ModelSpec& spec,
                            std::size_t num_covariates) noexcept {
  return 1 + num_covariates + (spec.heterogeneous ? 0 : 1);
}

std::size_t treatment_column(std::size_t num_covariates) noexcept {
  return 1 + num_covariates;
}

Eigen::VectorXd build_design(const ModelSpec& spec, std::span<const double> x,
                             int a, std::optional<double> m) {
  const auto which = m ? Submodel::kOutcome : Submodel::kMediator;
  Eigen::VectorXd row(static_cast<Eigen::Index>(design_width(spec, x.size(), which)));
  Eigen::Index k = 0;
  row[k++] = 1.0;
  for (double v : x) row[k++] = v;
  if (!spec.heterogeneous) row[k++] = static_cast<double>(a);
  if (m) row[k++] = *m;
  return row;
}

LinkCoefficients LinkCoefficients::zeros(std::size_t width) {
  const auto w = static_cast<Eigen::Index>(width);
  return {Eigen::VectorXd::Zero(w), Eigen::VectorXd::Zero(w),
          Eigen::VectorXd::Zero(w), Eigen::VectorXd::Zero(w)};
}

Eigen::VectorXd& LinkCoefficients::component(std::size_t c) {
  switch (c) {
    case 0: return alpha;
    case 1: return gamma;
    case 2: return mu;
    default: return phi;
  }
}

const Eigen::VectorXd& LinkCoefficients::component(std::size_t c) const {
  return const_cast<LinkCoefficients*>(this)->component(c);
}

ZoibParams predict_zoib_params(const LinkCoefficients& coeffs,
                               const Eigen::Ref<const Eigen::VectorXd>& row) {
  std::array<double, 4> eta{};
  for (std::size_t c = 0; c < 4; ++c) {
    const auto& beta = coeffs.component(c);
    if (beta.size() != row.size()) {
      std::ostringstream os;
      os << "predict_zoib_params: " << kComponentNames[c] << " has "
         << beta.size() << " coefficients but the design row has " << row.size();
      throw DomainError(os.str());
    }
    const double t = row.dot(beta);
    if (!std::isfinite(t))
      throw DomainError(std::string("predict_zoib_params: non-finite linear "
                                    "predictor for ") + kComponentNames[c]);
    eta[c] = std::clamp(t, -kLinkClamp, kLinkClamp);
  }
  return ZoibParams(expit(eta[0]), expit(eta[1]), expit(eta[2]),
                    std::exp(eta[3]));
}

ZoibParams predict_mediator(const ModelSpec& spec, const CoefficientSet& c,
                            std::span<const double> x, int a) {
  return predict_zoib_params(c.mediator.for_arm(a), build_design(spec, x, a));
}

ZoibParams predict_outcome(const ModelSpec& spec, const CoefficientSet& c,
                           std::span<const double> x, int a, double m) {
  return predict_zoib_params(c.outcome.for_arm(a), build_design(spec, x, a, m));
}

}  // namespace zoibmed
