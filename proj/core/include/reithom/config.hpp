#ifndef REITHOM_CONFIG_HPP
#define REITHOM_CONFIG_HPP

#include <string>

#include <nlohmann/json.hpp>

#include "reithom/flux.hpp"
#include "reithom/harness.hpp"
#include "reithom/nfunction.hpp"

namespace reithom {

nlohmann::json load_json_file(const std::string& path);

/// {"family":"power|scaled_power|power_log","p":2.0} or
/// {"family":"tabulated","csv":"density.csv"} with two columns t, phi(t).
NFunction nf_from_json(const nlohmann::json& j);
NFunction load_tabulated_csv(const std::string& path);

/// {"family":"linear_separable|phi_laplacian|degenerate", "c_y":expr,
///  "c_z":expr, "nf":{...}, "weight":{"h":expr-in-t,"h_min":0.5}}
FluxCoefficient flux_from_json(const nlohmann::json& j, int dim);

SolveOptions solver_from_json(const nlohmann::json& j);
TableOptions table_from_json(const nlohmann::json& j);
SeparableTest pairing_from_json(const nlohmann::json& j);

/// Whole study/run document; see the README for the schema and defaults.
StudyConfig study_from_json(const nlohmann::json& j);

}  // namespace reithom

#endif
