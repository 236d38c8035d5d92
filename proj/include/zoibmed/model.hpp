#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zoibmed/zoib.hpp"

namespace zoibmed {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// ---------------------------------------------------------------------------
// Links

/// Linear predictors are clamped to this magnitude before expit/exp.
inline constexpr double kLinkClamp = 30.0;

double expit(double t) noexcept;
double logit(double p) noexcept;

// ---------------------------------------------------------------------------
// Rescaling and standardization records

struct RescaleRecord {
  std::string variable;
  double lo = 0.0;
  double hi = 1.0;

  double to_unit(double v) const noexcept { return (v - lo) / (hi - lo); }
  double to_original(double u) const noexcept { return lo + u * (hi - lo); }
  /// Differences (effects) scale by hi - lo.
  double effect_to_original(double e) const noexcept { return e * (hi - lo); }
};

struct RescaledValues {
  Eigen::VectorXd values;
  RescaleRecord record;
};

/// (v - lo) / (hi - lo). Throws DataError naming the first row outside
/// [lo, hi].
RescaledValues rescale_to_unit(std::span<const double> values, double lo,
                               double hi, std::string variable = {});

struct StandardizeRecord {
  std::vector<std::string> columns;
  std::vector<double> mean;
  std::vector<double> sd;  // n - 1 divisor
};

struct StandardizedMatrix {
  RowMatrix values;
  StandardizeRecord record;
};

/// Centers every column and divides by its sample sd (n - 1 divisor).
/// Throws DataError naming any zero-variance column.
StandardizedMatrix standardize_covariates(const RowMatrix& x,
                                          std::vector<std::string> names = {});

/// Applies a previously computed record to new rows.
RowMatrix apply_standardization(const RowMatrix& x,
                                const StandardizeRecord& record);

// ---------------------------------------------------------------------------
// Dataset

/// Immutable analysis table. Mediator and outcome live on [0, 1]; both
/// treatment arms are nonempty.
class Dataset {
 public:
  Dataset(RowMatrix covariates, std::vector<int> treatment,
          Eigen::VectorXd mediator, Eigen::VectorXd outcome,
          std::vector<std::string> column_names = {},
          std::vector<RescaleRecord> rescale = {},
          StandardizeRecord standardization = {});

  std::size_t size() const noexcept { return treatment_.size(); }
  std::size_t num_covariates() const noexcept {
    return static_cast<std::size_t>(covariates_.cols());
  }

  const RowMatrix& covariates() const noexcept { return covariates_; }
  std::span<const double> covariate_row(std::size_t i) const noexcept {
    return {covariates_.data() + i * num_covariates(), num_covariates()};
  }
  const std::vector<int>& treatment() const noexcept { return treatment_; }
  const Eigen::VectorXd& mediator() const noexcept { return mediator_; }
  const Eigen::VectorXd& outcome() const noexcept { return outcome_; }
  const std::vector<std::string>& column_names() const noexcept {
    return column_names_;
  }
  const std::vector<RescaleRecord>& rescale_records() const noexcept {
    return rescale_;
  }
  const StandardizeRecord& standardization() const noexcept {
    return standardization_;
  }
  /// Record for `variable`, if it was rescaled at ingestion.
  std::optional<RescaleRecord> rescale_record(const std::string& variable) const;

  std::size_t arm_size(int a) const noexcept;

  /// Rows in the given order (duplicates allowed). The result must still
  /// contain both arms.
  Dataset subset(std::span<const std::size_t> rows) const;

 private:
  RowMatrix covariates_;
  std::vector<int> treatment_;
  Eigen::VectorXd mediator_;
  Eigen::VectorXd outcome_;
  std::vector<std::string> column_names_;
  std::vector<RescaleRecord> rescale_;
  StandardizeRecord standardization_;
};

// ---------------------------------------------------------------------------
// Model specification and coefficients

struct ModelSpec {
  /// Every coefficient varies with treatment (one bank per arm); otherwise
  /// shared slopes plus a treatment column.
  bool heterogeneous = false;
  /// Sd of the Normal(0, tau^2) prior mirrored as a ridge penalty
  /// 1 / (2 tau^2) * ||slopes||^2. Unset means no penalty.
  std::optional<double> prior_sd;

  /// Ridge weight 1 / tau^2 (0 when unpenalized).
  double ridge_penalty() const noexcept;
};

enum class Submodel { kMediator, kOutcome };

/// Design width: intercept, covariates, [treatment if homogeneous],
/// [mediator if outcome].
std::size_t design_width(const ModelSpec& spec, std::size_t num_covariates,
                         Submodel which) noexcept;
/// Index of the mediator column in an outcome design row.
std::size_t mediator_column(const ModelSpec& spec,
                            std::size_t num_covariates) noexcept;
/// Index of the treatment column (homogeneous specs only).
std::size_t treatment_column(std::size_t num_covariates) noexcept;

/// Column order: intercept, covariates, treatment (homogeneous only),
/// mediator (outcome rows only). Heterogeneous specs route on `a` through
/// the coefficient bank instead of a treatment column.
Eigen::VectorXd build_design(const ModelSpec& spec, std::span<const double> x,
                             int a, std::optional<double> m = std::nullopt);

/// Coefficients of the four links (logit alpha, logit gamma, logit mu,
/// log phi) for one design layout.
struct LinkCoefficients {
  Eigen::VectorXd alpha;
  Eigen::VectorXd gamma;
  Eigen::VectorXd mu;
  Eigen::VectorXd phi;

  static LinkCoefficients zeros(std::size_t width);
  Eigen::VectorXd& component(std::size_t c);
  const Eigen::VectorXd& component(std::size_t c) const;
};

inline constexpr std::array<const char*, 4> kComponentNames = {"alpha", "gamma",
                                                               "mu", "phi"};

/// One half of the model (mediator or outcome). Homogeneous specs use
/// banks[0] for both arms.
struct SubmodelCoefficients {
  bool heterogeneous = false;
  std::array<LinkCoefficients, 2> banks;

  const LinkCoefficients& for_arm(int a) const noexcept {
    return banks[heterogeneous ? a : 0];
  }
  LinkCoefficients& for_arm(int a) noexcept {
    return banks[heterogeneous ? a : 0];
  }
};

struct CoefficientSet {
  SubmodelCoefficients mediator;
  SubmodelCoefficients outcome;
};

/// expit / expit / expit / exp of the four linear predictors. Predictors
/// are clamped to [-kLinkClamp, kLinkClamp]; a non-finite predictor throws
/// DomainError naming the component.
ZoibParams predict_zoib_params(const LinkCoefficients& coeffs,
                               const Eigen::Ref<const Eigen::VectorXd>& row);

/// Mediator law at arm a for covariate row x.
ZoibParams predict_mediator(const ModelSpec& spec, const CoefficientSet& c,
                            std::span<const double> x, int a);
/// Outcome law at arm a, mediator m, covariate row x.
ZoibParams predict_outcome(const ModelSpec& spec, const CoefficientSet& c,
                           std::span<const double> x, int a, double m);

}  // namespace zoibmed
