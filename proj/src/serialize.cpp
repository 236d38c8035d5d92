#include "zoibmed/serialize.hpp"

#include "json.hpp"
#include "zoibmed/error.hpp"

namespace zoibmed {

using nlohmann::ordered_json;

namespace {

ordered_json vec_json(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Eigen::VectorXd json_vec(const ordered_json& a) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<Eigen::Index>(i)] = a[i].get<double>();
  return v;
}

ordered_json half_json(const SubmodelCoefficients& s) {
  ordered_json banks = ordered_json::array();
  const int count = s.heterogeneous ? 2 : 1;
  for (int b = 0; b < count; ++b) {
    ordered_json bank = ordered_json::object();
    for (std::size_t c = 0; c < 4; ++c)
      bank[kComponentNames[c]] = vec_json(s.banks[static_cast<std::size_t>(b)].component(c));
    banks.push_back(bank);
  }
  return banks;
}

SubmodelCoefficients json_half(const ordered_json& banks, bool heterogeneous) {
  SubmodelCoefficients s;
  s.heterogeneous = heterogeneous;
  const std::size_t count = heterogeneous ? 2 : 1;
  if (banks.size() != count) throw DataError("model file: wrong number of coefficient banks");
  for (std::size_t b = 0; b < count; ++b)
    for (std::size_t c = 0; c < 4; ++c)
      s.banks[b].component(c) = json_vec(banks[b].at(kComponentNames[c]));
  if (!heterogeneous) s.banks[1] = s.banks[0];
  return s;
}

}  // namespace

std::string model_to_json(const ModelFile& m) {
  ordered_json j;
  j["heterogeneous"] = m.spec.heterogeneous;
  j["prior_sd"] = m.spec.prior_sd ? ordered_json(*m.spec.prior_sd) : ordered_json(nullptr);
  j["covariates"] = m.covariates;
  ordered_json st = ordered_json::object();
  st["columns"] = m.standardization.columns;
  st["mean"] = m.standardization.mean;
  st["sd"] = m.standardization.sd;
  j["standardization"] = st;
  j["mediator"] = half_json(m.coefficients.mediator);
  j["outcome"] = half_json(m.coefficients.outcome);
  return j.dump(2) + "\n";
}

ModelFile model_from_json(const std::string& text) {
  ModelFile m;
  try {
    const ordered_json j = ordered_json::parse(text);
    m.spec.heterogeneous = j.at("heterogeneous").get<bool>();
    if (!j.at("prior_sd").is_null()) m.spec.prior_sd = j.at("prior_sd").get<double>();
    m.covariates = j.at("covariates").get<std::vector<std::string>>();
    const auto& st = j.at("standardization");
    m.standardization.columns = st.at("columns").get<std::vector<std::string>>();
    m.standardization.mean = st.at("mean").get<std::vector<double>>();
    m.standardization.sd = st.at("sd").get<std::vector<double>>();
    m.coefficients.mediator = json_half(j.at("mediator"), m.spec.heterogeneous);
    m.coefficients.outcome = json_half(j.at("outcome"), m.spec.heterogeneous);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file: ") + e.what());
  }
  const std::size_t p = m.covariates.size();
  for (int a : {0, 1})
    for (std::size_t c = 0; c < 4; ++c) {
      if (static_cast<std::size_t>(m.coefficients.mediator.for_arm(a).component(c).size()) !=
              design_width(m.spec, p, Submodel::kMediator) ||
          static_cast<std::size_t>(m.coefficients.outcome.for_arm(a).component(c).size()) !=
              design_width(m.spec, p, Submodel::kOutcome))
        throw DataError("model file: coefficient length does not match the design");
    }
  return m;
}

FittedModels as_fitted(const ModelFile& model) {
  FittedModels f;
  f.spec = model.spec;
  f.coefficients = model.coefficients;
  f.num_covariates = model.covariates.size();
  f.converged = true;
  return f;
}

}  // namespace zoibmed
