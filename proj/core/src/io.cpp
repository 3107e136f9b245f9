#include "localize/io.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace localize {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(path, "cannot open for reading");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(path, std::string("JSON parse error: ") + e.what());
  }
}

void write_json_file(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(path, "cannot open for writing");
  out << j.dump(2) << "\n";
  if (!out) fail(path, "write failed");
}

const Json& require_field(const Json& j, const char* name,
                          const std::string& path) {
  if (!j.contains(name)) fail(path, std::string("missing field '") + name + "'");
  return j.at(name);
}

Eigen::MatrixXd parse_matrix(const Json& j, const char* name,
                             const std::string& path, Eigen::Index rows,
                             Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    std::ostringstream msg;
    msg << "field '" << name << "' must be an array of " << rows << " rows";
    fail(path, msg.str());
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json& row = j.at(static_cast<std::size_t>(r));
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      std::ostringstream msg;
      msg << "field '" << name << "' row " << r << " must have " << cols
          << " entries";
      fail(path, msg.str());
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Json& cell = row.at(static_cast<std::size_t>(c));
      if (!cell.is_number()) {
        std::ostringstream msg;
        msg << "field '" << name << "' entry (" << r << "," << c
            << ") is not a number";
        fail(path, msg.str());
      }
      m(r, c) = cell.get<double>();
    }
  }
  if (!m.allFinite()) {
    fail(path, std::string("field '") + name + "' has non-finite entries");
  }
  return m;
}

Eigen::VectorXd parse_vector(const Json& j, const char* name,
                             const std::string& path, Eigen::Index size) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != size) {
    std::ostringstream msg;
    msg << "field '" << name << "' must be an array of " << size << " numbers";
    fail(path, msg.str());
  }
  Eigen::VectorXd v(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    const Json& cell = j.at(static_cast<std::size_t>(i));
    if (!cell.is_number()) {
      std::ostringstream msg;
      msg << "field '" << name << "' entry " << i << " is not a number";
      fail(path, msg.str());
    }
    v(i) = cell.get<double>();
  }
  return v;
}

// Load-time symmetry policy: silent within 1e-10 relative, warning within
// (1e-10, 1e-6], rejected above.
SymmetricMatrix accept_coupling(const Eigen::MatrixXd& j,
                                const std::string& path) {
  const double scale = 1.0 + (j.size() > 0 ? j.cwiseAbs().maxCoeff() : 0.0);
  const double asym =
      j.size() > 0 ? (j - j.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (asym > 1e-6 * scale) {
    std::ostringstream msg;
    msg << "field 'J' is asymmetric beyond tolerance (max |J - J^T| = " << asym
        << ")";
    fail(path, msg.str());
  }
  if (asym > 1e-10 * scale) {
    std::cerr << "warning: " << path << ": J asymmetry " << asym
              << " symmetrized\n";
  }
  return SymmetricMatrix::from_dense(j, 1e-5);
}

}  // namespace

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

Json to_json(const ModelMetadata& meta) {
  Json j;
  j["generator"] = meta.generator;
  Json params = Json::object();
  for (const auto& [k, v] : meta.params) params[k] = v;
  j["params"] = std::move(params);
  return j;
}

void save_model(const SpinModel& model, const ModelMetadata& metadata,
                const std::string& path) {
  Json j;
  j["schema_version"] = "1";
  j["n"] = model.n;
  j["k"] = model.space.k();
  Json space;
  switch (model.space.kind()) {
    case SpinSpace::Kind::ising:
      space["type"] = "ising";
      break;
    case SpinSpace::Kind::potts:
      space["type"] = "potts";
      space["k"] = model.space.k();
      break;
    case SpinSpace::Kind::atoms:
      space["type"] = "atoms";
      space["points"] = matrix_to_json(model.space.points());
      break;
  }
  j["spin_space"] = std::move(space);
  j["J"] = matrix_to_json(model.coupling.dense());
  j["h"] = matrix_to_json(model.field);
  j["metadata"] = to_json(metadata);
  write_json_file(j, path);
}

LoadedModel load_model(const std::string& path) {
  const Json j = read_json_file(path);
  const std::string version =
      require_field(j, "schema_version", path).get<std::string>();
  if (version != "1") fail(path, "unsupported schema_version '" + version + "'");
  const auto n = require_field(j, "n", path).get<Eigen::Index>();
  const auto k = require_field(j, "k", path).get<Eigen::Index>();
  if (n < 1 || k < 1) fail(path, "n and k must be positive");

  const Json& space_j = require_field(j, "spin_space", path);
  const std::string type =
      require_field(space_j, "type", path).get<std::string>();
  SpinSpace space = SpinSpace::ising();
  if (type == "ising") {
    if (k != 1) fail(path, "ising spin space requires k = 1");
  } else if (type == "potts") {
    const auto pk = require_field(space_j, "k", path).get<int>();
    if (pk != k) fail(path, "spin_space.k disagrees with top-level k");
    space = SpinSpace::potts(pk);
  } else if (type == "atoms") {
    const Json& pts_j = require_field(space_j, "points", path);
    if (!pts_j.is_array() || pts_j.empty()) {
      fail(path, "spin_space.points must be a nonempty array");
    }
    Eigen::MatrixXd pts = parse_matrix(
        pts_j, "spin_space.points", path,
        static_cast<Eigen::Index>(pts_j.size()), k);
    space = SpinSpace::atoms(std::move(pts));
  } else {
    fail(path, "unknown spin_space type '" + type + "'");
  }

  Eigen::MatrixXd coupling =
      parse_matrix(require_field(j, "J", path), "J", path, n, n);
  Eigen::MatrixXd field =
      parse_matrix(require_field(j, "h", path), "h", path, n, k);

  LoadedModel out{make_spin_model(std::move(space),
                                  accept_coupling(coupling, path),
                                  std::move(field)),
                  {}};
  if (j.contains("metadata")) {
    const Json& meta = j.at("metadata");
    if (meta.contains("generator")) {
      out.metadata.generator = meta.at("generator").get<std::string>();
    }
    if (meta.contains("params")) {
      for (const auto& [key, value] : meta.at("params").items()) {
        if (value.is_number()) out.metadata.params[key] = value.get<double>();
      }
    }
  }
  return out;
}

void save_measure(const AtomicMeasure& mu, const std::string& path) {
  Json j;
  j["schema_version"] = "1";
  j["dim"] = mu.dim();
  j["atoms"] = matrix_to_json(mu.atoms());
  j["weights"] = vector_to_json(mu.weights());
  j["base_weights"] = vector_to_json(mu.base_weights());
  write_json_file(j, path);
}

AtomicMeasure load_measure(const std::string& path) {
  const Json j = read_json_file(path);
  const std::string version =
      require_field(j, "schema_version", path).get<std::string>();
  if (version != "1") fail(path, "unsupported schema_version '" + version + "'");
  const auto dim = require_field(j, "dim", path).get<Eigen::Index>();
  if (dim < 1) fail(path, "dim must be positive");
  const Json& atoms_j = require_field(j, "atoms", path);
  if (!atoms_j.is_array() || atoms_j.empty()) {
    fail(path, "field 'atoms' must be a nonempty array");
  }
  const auto m = static_cast<Eigen::Index>(atoms_j.size());
  Eigen::MatrixXd atoms = parse_matrix(atoms_j, "atoms", path, m, dim);
  Eigen::VectorXd weights =
      parse_vector(require_field(j, "weights", path), "weights", path, m);
  Eigen::VectorXd base = parse_vector(
      require_field(j, "base_weights", path), "base_weights", path, m);
  try {
    return AtomicMeasure::create(std::move(atoms), std::move(weights),
                                 std::move(base));
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
}

void save_matrix(const SymmetricMatrix& m, const std::string& path) {
  Json j;
  j["n"] = m.dim();
  j["entries"] = matrix_to_json(m.dense());
  write_json_file(j, path);
}

SymmetricMatrix load_matrix(const std::string& path) {
  const Json j = read_json_file(path);
  const auto n = require_field(j, "n", path).get<Eigen::Index>();
  if (n < 1) fail(path, "n must be positive");
  Eigen::MatrixXd entries =
      parse_matrix(require_field(j, "entries", path), "entries", path, n, n);
  try {
    return SymmetricMatrix::from_dense(entries, 1e-8);
  } catch (const std::invalid_argument& e) {
    fail(path, e.what());
  }
}

Json to_json(const BoundReport& rep) {
  Json j;
  j["budget_s"] = rep.budget_s;
  j["eigenvalues"] = vector_to_json(rep.eigenvalues);
  j["s_js"] = Json{{"value", rep.s_js_bound}, {"beta", vector_to_json(rep.beta)}};
  Json schatten = Json::array();
  for (const auto& [p, v] : rep.schatten_bounds) {
    schatten.push_back(Json{{"p", p}, {"value", v}});
  }
  j["schatten"] = std::move(schatten);
  j["rank"] = Json{{"rank", rep.rank}, {"value", rep.rank_bound}};
  if (rep.logdet_bound) {
    j["logdet"] = *rep.logdet_bound;
  } else {
    j["logdet"] = nullptr;
  }
  j["best"] = Json{{"name", rep.best_name}, {"value", rep.best_value}};
  return j;
}

Json to_json(const MeanFieldSolution& sol) {
  Json j;
  j["marginals"] = matrix_to_json(sol.marginals);
  j["value"] = sol.value;
  j["iterations"] = sol.iterations;
  j["converged"] = sol.converged;
  j["restart_index"] = sol.restart_index;
  j["max_update_decrease"] = sol.max_update_decrease;
  return j;
}

Json to_json(const DeficitReport& rep) {
  return Json{{"log_z", rep.log_z},
              {"mf_value", rep.mf_value},
              {"deficit", rep.value}};
}

namespace {

Json to_json(const ScalarStat& s) {
  return Json{{"mean", s.mean}, {"std_err", s.std_err}};
}

Json to_json(const MatrixStat& s) {
  return Json{{"mean", matrix_to_json(s.mean)},
              {"std_err", matrix_to_json(s.std_err)},
              {"max_std_err", s.max_std_err}};
}

}  // namespace

Json to_json(const DecompositionReport& rep) {
  Json j;
  j["trials"] = rep.trials;
  j["dt"] = rep.dt;
  j["entropy_mu"] = rep.entropy_mu;
  j["deficit_bound"] = rep.deficit_bound;
  j["allowance_c"] = rep.allowance_c;
  j["mean_entropy"] = to_json(rep.mean_entropy);
  j["mean_cov"] = to_json(rep.mean_cov);
  j["mean_cov_L_cov"] = to_json(rep.mean_cov_l_cov);
  Json verdicts;
  verdicts["entropy"] = Json{{"holds", rep.est_entropy.holds},
                             {"lhs", rep.est_entropy.lhs},
                             {"rhs", rep.est_entropy.rhs},
                             {"tol", rep.est_entropy.tol}};
  verdicts["cov_leq_L_inv"] = Json{{"holds", rep.est_cov_bound.holds},
                                   {"lambda_min", rep.est_cov_bound.lambda_min},
                                   {"tol", rep.est_cov_bound.tol}};
  verdicts["cov_L_cov_leq_cov"] =
      Json{{"holds", rep.est_cov_l_cov.holds},
           {"lambda_min", rep.est_cov_l_cov.lambda_min},
           {"tol", rep.est_cov_l_cov.tol}};
  verdicts["all_hold"] = rep.all_hold();
  j["verdicts"] = std::move(verdicts);
  return j;
}

Json to_json(const MartingaleReport& rep) {
  Json j;
  j["a0"] = vector_to_json(rep.a0);
  j["mean_a"] = vector_to_json(rep.mean_a);
  j["se_a"] = vector_to_json(rep.se_a);
  j["mean_holds"] = rep.mean_holds;
  j["worst_mean_excess"] = rep.worst_mean_excess;
  j["weights_hold"] = rep.weights_hold;
  j["worst_weight_excess"] = rep.worst_weight_excess;
  j["total_variance"] = Json{{"holds", rep.total_variance.holds},
                             {"lambda_min", rep.total_variance.lambda_min},
                             {"tol", rep.total_variance.tol}};
  j["allowance"] = rep.allowance;
  j["all_hold"] = rep.all_hold();
  return j;
}

Json to_json(const DecayTable& table) {
  Json cells = Json::array();
  for (const auto& c : table.cells) {
    cells.push_back(Json{{"direction", c.direction},
                         {"t", c.t},
                         {"estimate", c.estimate},
                         {"std_err", c.std_err},
                         {"bound", c.bound},
                         {"holds", c.holds}});
  }
  return Json{{"allowance", table.allowance},
              {"cells", std::move(cells)},
              {"all_hold", table.all_hold()}};
}

Json to_json(const EntropyIdentityResult& res) {
  return Json{{"lhs", res.lhs},
              {"rhs", res.rhs},
              {"rel_err", res.rel_err},
              {"end_entropy", to_json(res.end_entropy)}};
}

}  // namespace localize
