#include "reithom/config.hpp"

#include <fstream>
#include <sstream>

namespace reithom {

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("malformed JSON in " + path + ": " + e.what());
  }
}

NFunction load_tabulated_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open density CSV: " + path);
  std::vector<double> t, phi;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string a, b;
    if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',')) continue;
    try {
      t.push_back(std::stod(a));
      phi.push_back(std::stod(b));
    } catch (const std::exception&) {
      continue;  // header row
    }
  }
  return NFunction::tabulated(std::move(t), std::move(phi));
}

NFunction nf_from_json(const nlohmann::json& j) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "power") return NFunction::power(j.at("p").get<double>());
  if (family == "scaled_power") return NFunction::scaled_power(j.at("p").get<double>());
  if (family == "power_log") return NFunction::power_log(j.at("p").get<double>());
  if (family == "tabulated") return load_tabulated_csv(j.at("csv").get<std::string>());
  throw std::invalid_argument("unknown N-function family: " + family);
}

namespace {

Expression coeff(const nlohmann::json& j, const char* key, char letter) {
  if (!j.contains(key)) return Expression::parse("1", letter);
  return Expression::parse(j.at(key).get<std::string>(), letter);
}

}  // namespace

FluxCoefficient flux_from_json(const nlohmann::json& j, int dim) {
  const std::string family = j.at("family").get<std::string>();
  const Expression c_y = coeff(j, "c_y", 'y');
  const Expression c_z = coeff(j, "c_z", 'z');
  if (family == "linear_separable") return make_linear_separable(dim, c_y, c_z);
  const NFunction nf = j.contains("nf") ? nf_from_json(j.at("nf")) : NFunction::scaled_power(2.0);
  if (family == "phi_laplacian") return make_phi_laplacian(dim, nf, c_y, c_z);
  if (family == "degenerate") {
    const auto& wj = j.at("weight");
    DegenerateWeight w =
        wj.contains("h")
            ? DegenerateWeight::from_expression(Expression::parse(wj.at("h").get<std::string>(), 't'),
                                                wj.at("h_min").get<double>())
            : DegenerateWeight::constant(wj.at("h0").get<double>());
    return make_degenerate(dim, nf, c_y, c_z, std::move(w));
  }
  throw std::invalid_argument("unknown flux family: " + family);
}

SolveOptions solver_from_json(const nlohmann::json& j) {
  SolveOptions o;
  o.tol = j.value("tol", o.tol);
  o.max_iter = j.value("max_iter", o.max_iter);
  if (j.contains("jacobian"))
    o.jacobian = j.at("jacobian").get<std::string>() == "finite_difference"
                     ? JacobianMode::FiniteDifference
                     : JacobianMode::Analytic;
  if (j.contains("linear_solver")) {
    const std::string k = j.at("linear_solver").get<std::string>();
    if (k == "direct")
      o.linear_solver = LinearSolverKind::DirectBanded;
    else if (k == "cg_ilu")
      o.linear_solver = LinearSolverKind::ConjugateGradientILU;
    else if (k == "gmres")
      o.linear_solver = LinearSolverKind::GMRES;
    else if (k == "auto")
      o.linear_solver = LinearSolverKind::Auto;
    else
      throw std::invalid_argument("unknown linear_solver: " + k);
  }
  return o;
}

TableOptions table_from_json(const nlohmann::json& j) {
  TableOptions t;
  t.r_min = j.value("r_min", t.r_min);
  t.r_max = j.value("r_max", t.r_max);
  t.r_n = j.value("r_n", t.r_n);
  t.xi_min = j.value("xi_min", t.xi_min);
  t.xi_max = j.value("xi_max", t.xi_max);
  t.xi_n = j.value("xi_n", t.xi_n);
  return t;
}

SeparableTest pairing_from_json(const nlohmann::json& j) {
  SeparableTest t;
  if (j.contains("fx")) t.fx = Expression::parse(j.at("fx").get<std::string>(), 'x');
  if (j.contains("gy")) t.gy = Expression::parse(j.at("gy").get<std::string>(), 'y');
  if (j.contains("wz")) t.wz = Expression::parse(j.at("wz").get<std::string>(), 'z');
  t.label = j.value("label", t.fx.source() + "*" + t.gy.source() + "*" + t.wz.source());
  return t;
}

StudyConfig study_from_json(const nlohmann::json& j) {
  StudyConfig cfg;
  cfg.dim = j.value("dim", 1);
  cfg.flux = flux_from_json(j.at("flux"), cfg.dim);
  cfg.nf = j.contains("nf") ? nf_from_json(j.at("nf")) : cfg.flux.phi();
  cfg.f = Expression::parse(j.value("f", std::string("1")), 'x');
  cfg.eps_list = j.at("eps_list").get<std::vector<double>>();
  if (j.contains("fine_n")) cfg.fine_n = j.at("fine_n").get<std::vector<int>>();
  cfg.macro_n = j.value("macro_n", cfg.macro_n);
  cfg.cell_n = j.value("cell_n", cfg.cell_n);
  cfg.recon_cell_n = j.value("recon_cell_n", cfg.recon_cell_n);
  cfg.with_corrector = j.value("with_corrector", cfg.with_corrector);
  if (j.contains("pairing_tests"))
    for (const auto& pj : j.at("pairing_tests")) cfg.pairing_tests.push_back(pairing_from_json(pj));
  if (j.contains("table")) cfg.table = table_from_json(j.at("table"));
  if (j.contains("solver")) cfg.solver = solver_from_json(j.at("solver"));
  cfg.workers = j.value("workers", 0);
  return cfg;
}

}  // namespace reithom
