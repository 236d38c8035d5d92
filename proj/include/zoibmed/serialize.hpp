#pragma once

// JSON round trip for fitted coefficients.

#include <string>
#include <vector>

#include "zoibmed/fit.hpp"

namespace zoibmed {

struct ModelFile {
  ModelSpec spec;
  CoefficientSet coefficients;
  std::vector<std::string> covariates;  // design column names
  StandardizeRecord standardization;
};

std::string model_to_json(const ModelFile& model);
ModelFile model_from_json(const std::string& text);

/// FittedModels with the given coefficients (loglik etc. left empty).
FittedModels as_fitted(const ModelFile& model);

}  // namespace zoibmed
