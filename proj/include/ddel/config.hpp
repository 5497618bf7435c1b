#pragma once

#include "ddel/constraint_space.hpp"
#include "ddel/data_set.hpp"
#include "ddel/solver.hpp"

#include <json.hpp>

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace ddel {

/// Invalid or incomplete configuration input; the message names the offending key.
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Typed JSON access helpers.  `path` is the dotted location used in error
/// messages ("solver.tol"); every failure throws ConfigError naming it.
const nlohmann::json& json_require(const nlohmann::json& obj, const std::string& key,
                                   const std::string& path);
double json_number(const nlohmann::json& v, const std::string& path);
int json_int(const nlohmann::json& v, const std::string& path);
std::string json_string(const nlohmann::json& v, const std::string& path);
/// Rejects keys outside `allowed` so typos fail loudly instead of being ignored.
void json_check_keys(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                     const std::string& path);

/// Stiffness input: a number (scaled identity), a full matrix on packed
/// coordinates, or {"lambda": .., "mu": ..} for an isotropic tensor.
ElasticityTensor parse_elasticity(const nlohmann::json& v, int dim, const std::string& path);
/// Symmetric tensor from its packed entries (diagonal first).
SymMatrix parse_packed(const nlohmann::json& v, int dim, const std::string& path);

/// A fully parsed boundary-value problem: mesh, material data set, boundary
/// data, solver knobs, and the optional sampling plan for convergence studies.
struct ExperimentConfig {
    nlohmann::json raw;  ///< parsed input, echoed verbatim into reports

    std::optional<Mesh> mesh;
    std::shared_ptr<MaterialDataSet> data;
    BoundaryData boundary;
    SolverConfig solver;

    /// Per packed-strain-component sampling ranges; empty when no sampling plan.
    std::vector<std::array<double, 2>> sampling_box;
    /// (rho, t) rows of the sampling schedule, coarse to fine.
    std::vector<std::array<double, 2>> sampling_schedule;

    std::string output_dir;  ///< empty when the config does not set one

    /// Constraint space for the parsed problem (metric taken from the data set).
    ConstraintSpace make_space() const;
};

/// Parse a configuration object.  `base_dir` anchors relative file paths
/// (mesh and point-cloud files); pass the config file's directory.
ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::string& base_dir);

/// Read and parse a configuration file.
ExperimentConfig load_experiment_config(const std::string& path);

}  // namespace ddel
