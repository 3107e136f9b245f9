#pragma once

#include <string>

#include <json.hpp>

#include "localize/bounds.hpp"
#include "localize/localization.hpp"
#include "localize/meanfield.hpp"
#include "localize/measure.hpp"
#include "localize/models.hpp"

namespace localize {

using Json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Model files. Schema:
//   { "schema_version": "1", "n": int, "k": int,
//     "spin_space": {"type": "ising"}
//                 | {"type": "potts", "k": int}
//                 | {"type": "atoms", "points": [[...k...], ...]},
//     "J": [[...n...] x n], "h": [[...k...] x n],
//     "metadata": {"generator": str, "params": {name: number}} }
// Doubles are serialized as shortest round-trip decimals, so load(save(m))
// reproduces every value bitwise. J is symmetrized with a warning when the
// asymmetry is within (1e-10, 1e-6] relative, rejected above.
// ---------------------------------------------------------------------------

struct LoadedModel {
  SpinModel model;
  ModelMetadata metadata;
};

void save_model(const SpinModel& model, const ModelMetadata& metadata,
                const std::string& path);
LoadedModel load_model(const std::string& path);

// Measure files: { "schema_version": "1", "dim": int, "atoms": [[...]],
//                  "weights": [...], "base_weights": [...] }.
void save_measure(const AtomicMeasure& mu, const std::string& path);
AtomicMeasure load_measure(const std::string& path);

// Symmetric matrix files: { "n": int, "entries": [[...]] }.
void save_matrix(const SymmetricMatrix& m, const std::string& path);
SymmetricMatrix load_matrix(const std::string& path);

// ---------------------------------------------------------------------------
// Report serialization (all numeric fields, verdicts as booleans).
// ---------------------------------------------------------------------------

Json to_json(const BoundReport& rep);
Json to_json(const MeanFieldSolution& sol);
Json to_json(const DeficitReport& rep);
Json to_json(const DecompositionReport& rep);
Json to_json(const MartingaleReport& rep);
Json to_json(const DecayTable& table);
Json to_json(const EntropyIdentityResult& res);
Json to_json(const ModelMetadata& meta);

Json matrix_to_json(const Eigen::MatrixXd& m);
Json vector_to_json(const Eigen::VectorXd& v);

}  // namespace localize
