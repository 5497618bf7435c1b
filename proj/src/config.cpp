#include "ddel/config.hpp"

#include "ddel/io_util.hpp"

#include <algorithm>
#include <filesystem>

namespace ddel {

namespace {

std::string joined(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

/// Resolve a configured file path against the config file's directory.
std::string resolve(const std::string& base_dir, const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_absolute() || base_dir.empty()) return path;
    return (std::filesystem::path(base_dir) / p).string();
}

}  // namespace

const nlohmann::json& json_require(const nlohmann::json& obj, const std::string& key,
                                   const std::string& path) {
    if (!obj.is_object())
        throw ConfigError("config error: \"" + path + "\" must be an object");
    const auto it = obj.find(key);
    if (it == obj.end())
        throw ConfigError("config error: missing key \"" + joined(path, key) + "\"");
    return *it;
}

double json_number(const nlohmann::json& v, const std::string& path) {
    if (!v.is_number())
        throw ConfigError("config error: \"" + path + "\" must be a number");
    return v.get<double>();
}

int json_int(const nlohmann::json& v, const std::string& path) {
    if (!v.is_number_integer())
        throw ConfigError("config error: \"" + path + "\" must be an integer");
    return v.get<int>();
}

std::string json_string(const nlohmann::json& v, const std::string& path) {
    if (!v.is_string())
        throw ConfigError("config error: \"" + path + "\" must be a string");
    return v.get<std::string>();
}

void json_check_keys(const nlohmann::json& obj, const std::vector<std::string>& allowed,
                     const std::string& path) {
    if (!obj.is_object()) return;
    for (const auto& item : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
            throw ConfigError("config error: unknown key \"" + joined(path, item.key()) + "\"");
    }
}

ElasticityTensor parse_elasticity(const nlohmann::json& v, int dim, const std::string& path) {
    if (v.is_number()) {
        const double c = v.get<double>();
        if (!(c > 0.0))
            throw ConfigError("config error: \"" + path + "\" must be positive");
        return ElasticityTensor::scaled_identity(dim, c);
    }
    if (v.is_object()) {
        json_check_keys(v, {"lambda", "mu"}, path);
        const double lambda = json_number(json_require(v, "lambda", path), joined(path, "lambda"));
        const double mu = json_number(json_require(v, "mu", path), joined(path, "mu"));
        return ElasticityTensor::isotropic(dim, lambda, mu);
    }
    if (v.is_array()) {
        const int s = packed_size(dim);
        if (static_cast<int>(v.size()) != s)
            throw ConfigError("config error: \"" + path + "\" must be a " + std::to_string(s) +
                              "x" + std::to_string(s) + " matrix");
        Matrix m(s, s);
        for (int i = 0; i < s; ++i) {
            const auto& row = v[i];
            if (!row.is_array() || static_cast<int>(row.size()) != s)
                throw ConfigError("config error: \"" + path + "\" row " + std::to_string(i) +
                                  " must have " + std::to_string(s) + " entries");
            for (int j = 0; j < s; ++j)
                m(i, j) = json_number(row[j], joined(path, std::to_string(i)));
        }
        try {
            return ElasticityTensor(dim, m);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("config error: \"" + path + "\": " + e.what());
        }
    }
    throw ConfigError("config error: \"" + path +
                      "\" must be a number, a matrix, or {\"lambda\", \"mu\"}");
}

SymMatrix parse_packed(const nlohmann::json& v, int dim, const std::string& path) {
    const int s = packed_size(dim);
    if (!v.is_array() || static_cast<int>(v.size()) != s)
        throw ConfigError("config error: \"" + path + "\" must be an array of " +
                          std::to_string(s) + " packed entries");
    std::vector<double> entries(s);
    for (int k = 0; k < s; ++k) entries[k] = json_number(v[k], path);
    return SymMatrix::from_packed(dim, entries);
}

namespace {

Mesh parse_problem(const nlohmann::json& j, const std::string& base_dir) {
    const auto& problem = json_require(j, "problem", "");
    const std::string type = json_string(json_require(problem, "type", "problem"), "problem.type");
    if (type == "bar1d") {
        json_check_keys(problem, {"type", "length", "elements"}, "problem");
        const double length = json_number(json_require(problem, "length", "problem"), "problem.length");
        const int n = json_int(json_require(problem, "elements", "problem"), "problem.elements");
        if (!(length > 0.0)) throw ConfigError("config error: \"problem.length\" must be positive");
        if (n < 1) throw ConfigError("config error: \"problem.elements\" must be at least 1");
        return Mesh::bar(length, n);
    }
    if (type == "rect2d") {
        json_check_keys(problem, {"type", "lx", "ly", "nx", "ny", "pattern"}, "problem");
        const double lx = json_number(json_require(problem, "lx", "problem"), "problem.lx");
        const double ly = json_number(json_require(problem, "ly", "problem"), "problem.ly");
        const int nx = json_int(json_require(problem, "nx", "problem"), "problem.nx");
        const int ny = json_int(json_require(problem, "ny", "problem"), "problem.ny");
        const std::string pattern =
            json_string(json_require(problem, "pattern", "problem"), "problem.pattern");
        if (!(lx > 0.0) || !(ly > 0.0))
            throw ConfigError("config error: \"problem.lx\" and \"problem.ly\" must be positive");
        if (nx < 1 || ny < 1)
            throw ConfigError("config error: \"problem.nx\" and \"problem.ny\" must be at least 1");
        if (pattern != "diagonal" && pattern != "crossed")
            throw ConfigError(
                "config error: \"problem.pattern\" must be \"diagonal\" or \"crossed\"");
        return Mesh::rectangle(lx, ly, nx, ny, pattern);
    }
    if (type == "mesh_file") {
        json_check_keys(problem, {"type", "path"}, "problem");
        const std::string path =
            json_string(json_require(problem, "path", "problem"), "problem.path");
        return Mesh::load(resolve(base_dir, path));
    }
    throw ConfigError(
        "config error: \"problem.type\" must be \"bar1d\", \"rect2d\", or \"mesh_file\"");
}

std::shared_ptr<MaterialDataSet> parse_material(const nlohmann::json& j, int dim,
                                                const std::string& base_dir) {
    const auto& material = json_require(j, "material", "");
    const std::string type =
        json_string(json_require(material, "type", "material"), "material.type");

    if (type == "linear_graph") {
        json_check_keys(material, {"type", "C", "offset", "halfspace"}, "material");
        ElasticityTensor c = parse_elasticity(json_require(material, "C", "material"), dim,
                                              "material.C");
        SymMatrix offset = SymMatrix::zero(dim);
        if (material.contains("offset"))
            offset = parse_packed(material["offset"], dim, "material.offset");
        std::optional<HalfSpace> halfspace;
        if (material.contains("halfspace")) {
            const auto& hs = material["halfspace"];
            json_check_keys(hs, {"direction", "bound", "sense"}, "material.halfspace");
            HalfSpace h;
            h.direction = parse_packed(json_require(hs, "direction", "material.halfspace"), dim,
                                       "material.halfspace.direction");
            h.bound = json_number(json_require(hs, "bound", "material.halfspace"),
                                  "material.halfspace.bound");
            const std::string sense = json_string(json_require(hs, "sense", "material.halfspace"),
                                                  "material.halfspace.sense");
            if (sense == "le")
                h.sense = HalfSpace::Sense::LessEqual;
            else if (sense == "ge")
                h.sense = HalfSpace::Sense::GreaterEqual;
            else
                throw ConfigError(
                    "config error: \"material.halfspace.sense\" must be \"le\" or \"ge\"");
            halfspace = h;
        }
        return std::make_shared<AffineGraphBranch>(std::move(c), std::move(offset), halfspace);
    }

    if (type == "two_well") {
        json_check_keys(material, {"type", "C", "a", "b", "w"}, "material");
        ElasticityTensor c = parse_elasticity(json_require(material, "C", "material"), dim,
                                              "material.C");
        SymMatrix a = parse_packed(json_require(material, "a", "material"), dim, "material.a");
        SymMatrix b = parse_packed(json_require(material, "b", "material"), dim, "material.b");
        const double w = json_number(json_require(material, "w", "material"), "material.w");
        return std::make_shared<TwoWellDataSet>(std::move(c), std::move(a), std::move(b), w);
    }

    if (type == "flag") {
        json_check_keys(material, {"type", "C", "sigma0"}, "material");
        if (dim != 1)
            throw ConfigError("config error: \"material.type\" flag requires a 1d problem");
        const double c = json_number(json_require(material, "C", "material"), "material.C");
        const double sigma0 =
            json_number(json_require(material, "sigma0", "material"), "material.sigma0");
        return std::make_shared<FlagDataSet1D>(c, sigma0);
    }

    if (type == "point_cloud") {
        json_check_keys(material, {"type", "csv", "sidecar", "metric_C"}, "material");
        const std::string csv =
            json_string(json_require(material, "csv", "material"), "material.csv");
        const std::string sidecar =
            json_string(json_require(material, "sidecar", "material"), "material.sidecar");
        PointCloudDataSet cloud =
            load_point_cloud(resolve(base_dir, csv), resolve(base_dir, sidecar));
        if (cloud.dim() != dim)
            throw ConfigError("config error: \"material.csv\" has dimension " +
                              std::to_string(cloud.dim()) + " but the problem has dimension " +
                              std::to_string(dim));
        if (material.contains("metric_C")) {
            ElasticityTensor metric =
                parse_elasticity(material["metric_C"], dim, "material.metric_C");
            return std::make_shared<PointCloudDataSet>(cloud.points(), std::move(metric),
                                                       cloud.provenance());
        }
        return std::make_shared<PointCloudDataSet>(std::move(cloud));
    }

    throw ConfigError("config error: \"material.type\" must be \"linear_graph\", \"two_well\", "
                      "\"flag\", or \"point_cloud\"");
}

BoundaryData parse_boundary(const nlohmann::json& j, const Mesh& mesh) {
    const auto& boundary = json_require(j, "boundary", "");
    json_check_keys(boundary, {"dirichlet", "neumann", "body_force"}, "boundary");
    const int dim = mesh.dim();
    BoundaryData bc;

    const auto& dirichlet = json_require(boundary, "dirichlet", "boundary");
    if (!dirichlet.is_array() || dirichlet.empty())
        throw ConfigError(
            "config error: \"boundary.dirichlet\" must list at least one condition");
    for (std::size_t i = 0; i < dirichlet.size(); ++i) {
        const std::string path = "boundary.dirichlet[" + std::to_string(i) + "]";
        const auto& entry = dirichlet[i];
        const int component =
            json_int(json_require(entry, "component", path), joined(path, "component"));
        const double value = json_number(json_require(entry, "value", path), joined(path, "value"));
        if (component < 0 || component >= dim)
            throw ConfigError("config error: \"" + joined(path, "component") +
                              "\" must be in [0, " + std::to_string(dim) + ")");
        if (entry.contains("marker")) {
            json_check_keys(entry, {"marker", "component", "value"}, path);
            bc.fix_marker(mesh, json_int(entry["marker"], joined(path, "marker")), component,
                          value);
        } else if (entry.contains("node")) {
            json_check_keys(entry, {"node", "component", "value"}, path);
            const int node = json_int(entry["node"], joined(path, "node"));
            if (node < 0 || node >= mesh.n_nodes())
                throw ConfigError("config error: \"" + joined(path, "node") +
                                  "\" is out of range");
            bc.dirichlet.push_back({node, component, value});
        } else {
            throw ConfigError("config error: \"" + path + "\" needs \"marker\" or \"node\"");
        }
    }

    if (boundary.contains("neumann")) {
        const auto& neumann = boundary["neumann"];
        if (!neumann.is_array())
            throw ConfigError("config error: \"boundary.neumann\" must be an array");
        for (std::size_t i = 0; i < neumann.size(); ++i) {
            const std::string path = "boundary.neumann[" + std::to_string(i) + "]";
            const auto& entry = neumann[i];
            json_check_keys(entry, {"marker", "traction"}, path);
            const int marker =
                json_int(json_require(entry, "marker", path), joined(path, "marker"));
            const auto& traction = json_require(entry, "traction", path);
            if (!traction.is_array() || static_cast<int>(traction.size()) != dim)
                throw ConfigError("config error: \"" + joined(path, "traction") +
                                  "\" must have " + std::to_string(dim) + " components");
            Eigen::VectorXd t(dim);
            for (int k = 0; k < dim; ++k)
                t[k] = json_number(traction[k], joined(path, "traction"));
            bc.traction_on_marker(mesh, marker, t);
        }
    }

    if (boundary.contains("body_force")) {
        const auto& f = boundary["body_force"];
        if (!f.is_array() || static_cast<int>(f.size()) != dim)
            throw ConfigError("config error: \"boundary.body_force\" must have " +
                              std::to_string(dim) + " components");
        bc.body_force.resize(mesh.n_elements(), dim);
        for (int k = 0; k < dim; ++k) {
            const double v = json_number(f[k], "boundary.body_force");
            bc.body_force.col(k).setConstant(v);
        }
    }

    return bc;
}

SolverConfig parse_solver(const nlohmann::json& j) {
    SolverConfig solver;
    if (!j.contains("solver")) return solver;
    const auto& s = j["solver"];
    json_check_keys(s, {"max_iters", "tol", "zero_floor", "init", "seed", "restarts", "threads"},
                    "solver");
    if (s.contains("max_iters")) solver.max_iters = json_int(s["max_iters"], "solver.max_iters");
    if (s.contains("tol")) solver.tol = json_number(s["tol"], "solver.tol");
    if (s.contains("zero_floor"))
        solver.zero_floor = json_number(s["zero_floor"], "solver.zero_floor");
    if (s.contains("init")) {
        const std::string init = json_string(s["init"], "solver.init");
        if (init == "classical")
            solver.init = InitKind::Classical;
        else if (init == "zero")
            solver.init = InitKind::Zero;
        else if (init == "random")
            solver.init = InitKind::Random;
        else
            throw ConfigError(
                "config error: \"solver.init\" must be \"classical\", \"zero\", or \"random\"");
    }
    if (s.contains("seed")) {
        const auto& seed = s["seed"];
        if (!seed.is_number_integer() || seed.get<long long>() < 0)
            throw ConfigError("config error: \"solver.seed\" must be a nonnegative integer");
        solver.seed = seed.get<std::uint64_t>();
    }
    if (s.contains("restarts")) solver.restarts = json_int(s["restarts"], "solver.restarts");
    if (s.contains("threads")) solver.threads = json_int(s["threads"], "solver.threads");
    if (solver.max_iters < 1)
        throw ConfigError("config error: \"solver.max_iters\" must be at least 1");
    if (!(solver.tol >= 0.0))
        throw ConfigError("config error: \"solver.tol\" must be nonnegative");
    if (solver.restarts < 1)
        throw ConfigError("config error: \"solver.restarts\" must be at least 1");
    if (solver.threads < 1)
        throw ConfigError("config error: \"solver.threads\" must be at least 1");
    return solver;
}

}  // namespace

ConstraintSpace ExperimentConfig::make_space() const {
    return ConstraintSpace(mesh.value(), data->metric(), boundary);
}

ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::string& base_dir) {
    if (!j.is_object()) throw ConfigError("config error: the configuration must be a JSON object");
    json_check_keys(j, {"problem", "material", "boundary", "solver", "sampling", "output"}, "");

    ExperimentConfig cfg;
    cfg.raw = j;
    cfg.mesh = parse_problem(j, base_dir);
    cfg.data = parse_material(j, cfg.mesh->dim(), base_dir);
    cfg.boundary = parse_boundary(j, *cfg.mesh);
    cfg.solver = parse_solver(j);

    if (j.contains("sampling")) {
        const auto& sampling = j["sampling"];
        json_check_keys(sampling, {"box", "schedule"}, "sampling");
        const auto& box = json_require(sampling, "box", "sampling");
        const int s = packed_size(cfg.mesh->dim());
        if (!box.is_array() || static_cast<int>(box.size()) != s)
            throw ConfigError("config error: \"sampling.box\" must have one [lo, hi] range per "
                              "packed strain component (" +
                              std::to_string(s) + ")");
        for (int k = 0; k < s; ++k) {
            const auto& range = box[k];
            if (!range.is_array() || range.size() != 2)
                throw ConfigError("config error: \"sampling.box\" entries must be [lo, hi]");
            const double lo = json_number(range[0], "sampling.box");
            const double hi = json_number(range[1], "sampling.box");
            if (!(lo < hi))
                throw ConfigError("config error: \"sampling.box\" ranges must have lo < hi");
            cfg.sampling_box.push_back({lo, hi});
        }
        const auto& schedule = json_require(sampling, "schedule", "sampling");
        if (!schedule.is_array())
            throw ConfigError("config error: \"sampling.schedule\" must be an array");
        for (std::size_t i = 0; i < schedule.size(); ++i) {
            const std::string path = "sampling.schedule[" + std::to_string(i) + "]";
            const auto& row = schedule[i];
            json_check_keys(row, {"rho", "t"}, path);
            const double rho = json_number(json_require(row, "rho", path), joined(path, "rho"));
            const double t = json_number(json_require(row, "t", path), joined(path, "t"));
            if (!(rho > 0.0))
                throw ConfigError("config error: \"" + joined(path, "rho") +
                                  "\" must be positive");
            if (!(t >= 0.0))
                throw ConfigError("config error: \"" + joined(path, "t") +
                                  "\" must be nonnegative");
            cfg.sampling_schedule.push_back({rho, t});
        }
    }

    if (j.contains("output")) cfg.output_dir = json_string(j["output"], "output");
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config error: " + path + " is not valid JSON: " + e.what());
    }
    const std::string base = std::filesystem::path(path).parent_path().string();
    return parse_experiment_config(j, base);
}

}  // namespace ddel
