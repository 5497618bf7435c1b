// Command-line front end: experiment configs in, solver/relaxation artifacts out.
// Artifact formats and exit codes (0 converged, 2 not converged, 1 input error)
// are documented in the top-level README.

#include "ddel/acceptance.hpp"
#include "ddel/config.hpp"
#include "ddel/io_util.hpp"
#include "ddel/relaxation.hpp"
#include "ddel/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ddel;

namespace {

constexpr const char* kToolName = "ddel";
constexpr const char* kToolVersion = "0.1.0";

/// Options shared by every verb; everything problem-specific lives in the config.
struct CliOptions {
    std::string config_path;
    std::string out_dir;                // --out, overrides the config's output dir
    std::optional<std::uint64_t> seed;  // --seed, overrides the config's solver seed
    std::optional<int> threads;         // --threads, overrides the config's thread count
};

json tool_block() { return json{{"name", kToolName}, {"version", kToolVersion}}; }

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

/// Output directory: --out beats the config's `output`, default is the CWD.
std::string resolve_out_dir(const CliOptions& opt, const std::string& config_out) {
    std::string dir = !opt.out_dir.empty() ? opt.out_dir : config_out;
    if (dir.empty()) dir = ".";
    fs::create_directories(dir);
    return dir;
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

json packed_json(const SymMatrix& m) {
    json a = json::array();
    for (int k = 0; k < m.packed_count(); ++k) a.push_back(m[k]);
    return a;
}

json vector_json(const Vector& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json state_json(const LocalState& z) {
    return json{{"eps", packed_json(z.eps)}, {"sig", packed_json(z.sig)}};
}

/// Index pair of packed entry k as a label suffix: "11", "22", "12", ...
std::string packed_label(int dim, int k) {
    const auto [i, j] = detail::packed_indices(dim, k);
    return std::to_string(i + 1) + std::to_string(j + 1);
}

void append_state_header(std::ostringstream& out, int dim) {
    for (int k = 0; k < packed_size(dim); ++k) out << ",eps_" << packed_label(dim, k);
    for (int k = 0; k < packed_size(dim); ++k) out << ",sig_" << packed_label(dim, k);
}

void append_state_row(std::ostringstream& out, const LocalState& z) {
    for (int k = 0; k < z.eps.packed_count(); ++k) out << ',' << fmt17(z.eps[k]);
    for (int k = 0; k < z.sig.packed_count(); ++k) out << ',' << fmt17(z.sig[k]);
}

/// Per-element dump of a phase-space field: index, centroid, packed ε and σ.
void write_field_csv(const std::string& path, const Mesh& mesh, const StateField& field) {
    std::ostringstream out;
    out << "element";
    for (int d = 0; d < mesh.dim(); ++d) out << ",x" << (d + 1);
    append_state_header(out, field.dim());
    out << '\n';
    for (int e = 0; e < mesh.n_elements(); ++e) {
        out << e;
        const Eigen::VectorXd c = mesh.element_centroid(e);
        for (Eigen::Index d = 0; d < c.size(); ++d) out << ',' << fmt17(c[d]);
        append_state_row(out, field[e]);
        out << '\n';
    }
    atomic_write_text(path, out.str());
}

/// Least-squares slope of log(error) against log(rho) over rows with positive error.
double fitted_decay_exponent(const std::vector<ConvergenceRow>& rows) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (const ConvergenceRow& r : rows) {
        if (r.error <= 0.0) continue;
        const double x = std::log(r.rho), y = std::log(r.error);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n < 2) return 0.0;
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// solve / convergence
// ---------------------------------------------------------------------------

ExperimentConfig load_with_overrides(const CliOptions& opt) {
    ExperimentConfig cfg = load_experiment_config(opt.config_path);
    if (opt.seed) cfg.solver.seed = *opt.seed;
    if (opt.threads) cfg.solver.threads = *opt.threads;
    return cfg;
}

int cmd_solve(const CliOptions& opt) {
    const auto start = std::chrono::steady_clock::now();
    const ExperimentConfig cfg = load_with_overrides(opt);
    const std::string out_dir = resolve_out_dir(opt, cfg.output_dir);

    const ConstraintSpace space = cfg.make_space();
    const SolverResult result = solve_data_driven(space, *cfg.data, cfg.solver);
    const Residuals res = space.residuals(result.z);

    json report;
    report["tool"] = tool_block();
    report["config"] = cfg.raw;
    report["seed"] = cfg.solver.seed;
    report["result"] = {{"converged", result.converged},
                        {"iterations", result.iterations},
                        {"d2", result.d2},
                        {"seed_used", result.seed_used},
                        {"trace", result.trace}};
    report["residuals"] = {{"compatibility", res.compatibility},
                           {"equilibrium", res.equilibrium}};
    report["timing"] = {{"wall_seconds", seconds_since(start)}};
    atomic_write_text(join_path(out_dir, "report.json"), report.dump(2) + "\n");
    write_field_csv(join_path(out_dir, "z.csv"), space.mesh(), result.z);
    write_field_csv(join_path(out_dir, "y.csv"), space.mesh(), result.y);

    std::cout << (result.converged ? "converged" : "NOT converged") << " after "
              << result.iterations << " iterations, d2 = " << fmt17(result.d2) << "\n"
              << "artifacts in " << out_dir << "\n";
    return result.converged ? 0 : 2;
}

int cmd_convergence(const CliOptions& opt) {
    const auto start = std::chrono::steady_clock::now();
    const ExperimentConfig cfg = load_with_overrides(opt);
    if (cfg.sampling_box.empty())
        throw ConfigError("config error: sampling.box is required for convergence runs");
    if (cfg.sampling_schedule.size() < 2)
        throw ConfigError(
            "config error: sampling.schedule needs at least 2 rows for a convergence run");
    for (std::size_t i = 0; i + 1 < cfg.sampling_schedule.size(); ++i)
        if (cfg.sampling_schedule[i + 1][0] > cfg.sampling_schedule[i][0] ||
            cfg.sampling_schedule[i + 1][1] > cfg.sampling_schedule[i][1])
            throw ConfigError(
                "config error: sampling.schedule must be ordered coarse to fine "
                "(nonincreasing rho and t)");
    const std::string out_dir = resolve_out_dir(opt, cfg.output_dir);

    const ConstraintSpace space = cfg.make_space();
    // Reference: the solution against the analytic data set itself.
    const SolverResult reference = distance_to_dataset(space, *cfg.data, cfg.solver);
    const std::vector<ConvergenceRow> rows = convergence_study(
        space, *cfg.data, cfg.sampling_box, cfg.sampling_schedule, reference.z, cfg.solver);
    const double exponent = fitted_decay_exponent(rows);

    std::ostringstream csv;
    csv << "rho,t,d2,error\n";
    for (const ConvergenceRow& r : rows)
        csv << fmt17(r.rho) << ',' << fmt17(r.t) << ',' << fmt17(r.d2) << ','
            << fmt17(r.error) << '\n';
    atomic_write_text(join_path(out_dir, "convergence.csv"), csv.str());

    json report;
    report["tool"] = tool_block();
    report["config"] = cfg.raw;
    report["seed"] = cfg.solver.seed;
    json jrows = json::array();
    for (const ConvergenceRow& r : rows)
        jrows.push_back(
            json{{"rho", r.rho}, {"t", r.t}, {"d2", r.d2}, {"error", r.error}});
    report["rows"] = jrows;
    report["fitted_exponent"] = exponent;
    report["reference_d2"] = reference.d2;
    report["timing"] = {{"wall_seconds", seconds_since(start)}};
    atomic_write_text(join_path(out_dir, "convergence.json"), report.dump(2) + "\n");

    std::cout << "convergence study: " << rows.size() << " rows, fitted exponent "
              << fmt17(exponent) << "\nartifacts in " << out_dir << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// relax subcommands
// ---------------------------------------------------------------------------

/// Well pair for the relax verbs: either already-centered wells at ±b
///   "wells": {"C": .., "b": [..]}
/// or a full two-well material block
///   "material": {"C": .., "a": [..], "b": [..], "w": ..}
/// which is centered internally.
TwoWellRelaxation parse_relaxation(const json& cfg) {
    const bool has_wells = cfg.contains("wells");
    const bool has_material = cfg.contains("material");
    if (has_wells == has_material)
        throw ConfigError("config error: provide exactly one of 'wells' or 'material'");
    if (has_wells) {
        const json& w = cfg.at("wells");
        json_check_keys(w, {"C", "b"}, "wells");
        const json& jb = json_require(w, "b", "wells");
        if (!jb.is_array() || jb.empty())
            throw ConfigError("config error: wells.b must be a nonempty array");
        int dim = 0;
        for (int d = 1; d <= 3; ++d)
            if (static_cast<int>(jb.size()) == packed_size(d)) dim = d;
        if (dim == 0)
            throw ConfigError("config error: wells.b has no valid packed length (1, 3, or 6)");
        const SymMatrix b = parse_packed(jb, dim, "wells.b");
        const ElasticityTensor C = parse_elasticity(json_require(w, "C", "wells"), dim, "wells.C");
        return TwoWellRelaxation::from_parameters(C, b);
    }
    const json& m = cfg.at("material");
    json_check_keys(m, {"C", "a", "b", "w"}, "material");
    const json& ja = json_require(m, "a", "material");
    if (!ja.is_array() || ja.empty())
        throw ConfigError("config error: material.a must be a nonempty array");
    int dim = 0;
    for (int d = 1; d <= 3; ++d)
        if (static_cast<int>(ja.size()) == packed_size(d)) dim = d;
    if (dim == 0)
        throw ConfigError("config error: material.a has no valid packed length (1, 3, or 6)");
    const TwoWellDataSet set(parse_elasticity(json_require(m, "C", "material"), dim, "material.C"),
                             parse_packed(ja, dim, "material.a"),
                             parse_packed(json_require(m, "b", "material"), dim, "material.b"),
                             json_number(json_require(m, "w", "material"), "material.w"));
    return TwoWellRelaxation::from_two_well(set);
}

json load_json_config(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config error: top level must be an object");
    return j;
}

std::string config_output_dir(const json& cfg) {
    return cfg.contains("output") ? json_string(cfg.at("output"), "output") : std::string();
}

/// Boundary polyline of the relaxed set in the (σ·b, μ) plane for 2D problems:
/// the band parallelogram plus the two original branch rays.
void write_band_csv(const std::string& path, const TwoWellRelaxation& rx) {
    const double cbb = rx.cbb();
    const double am = rx.alpha_minus();
    std::ostringstream out;
    out << "part,sigma_dot_b,mu\n";
    const auto row = [&](const char* part, double s, double mu) {
        out << part << ',' << fmt17(s) << ',' << fmt17(mu) << '\n';
    };
    row("band", -cbb, 1.0);
    row("band", cbb - 2.0 * am, 1.0);
    row("band", cbb, -1.0);
    row("band", -cbb + 2.0 * am, -1.0);
    row("band", -cbb, 1.0);
    row("branch_plus", -cbb, 1.0);
    row("branch_plus", 3.0 * cbb, 1.0);
    row("branch_minus", cbb, -1.0);
    row("branch_minus", -3.0 * cbb, -1.0);
    atomic_write_text(path, out.str());
}

int cmd_relax_analyze(const CliOptions& opt) {
    const auto start = std::chrono::steady_clock::now();
    const json cfg = load_json_config(opt.config_path);
    json_check_keys(cfg, {"wells", "material", "output"}, "(top level)");
    const TwoWellRelaxation rx = parse_relaxation(cfg);
    const std::string out_dir = resolve_out_dir(opt, config_output_dir(cfg));

    json report;
    report["tool"] = tool_block();
    report["config"] = cfg;
    report["dim"] = rx.b().dim();
    report["b"] = packed_json(rx.b());
    report["C_mandel"] = matrix_json(rx.metric().voigt());
    report["alpha_minus"] = rx.alpha_minus();
    report["alpha_plus"] = rx.alpha_plus();
    report["nu_minus"] = vector_json(rx.nu_minus());
    report["nu_plus"] = vector_json(rx.nu_plus());
    report["c_hat_minus"] = vector_json(rx.c_hat_minus());
    report["cbb"] = rx.cbb();
    report["compatible"] = rx.alpha_minus() < 1e-10;
    report["shift"] = state_json(rx.shift());
    report["timing"] = {{"wall_seconds", seconds_since(start)}};
    atomic_write_text(join_path(out_dir, "analyze.json"), report.dump(2) + "\n");
    if (rx.b().dim() == 2) write_band_csv(join_path(out_dir, "boundary.csv"), rx);

    std::cout << "alpha_minus = " << fmt17(rx.alpha_minus()) << ", alpha_plus = "
              << fmt17(rx.alpha_plus()) << (rx.alpha_minus() < 1e-10 ? " (compatible wells)" : "")
              << "\nartifacts in " << out_dir << "\n";
    return 0;
}

/// Rows of 2s numbers (packed ε then packed σ); a non-numeric first line is
/// treated as a header and echoed through.
std::vector<std::vector<double>> read_states_csv(const std::string& path, int s,
                                                 std::string* header_out) {
    const std::string text = read_text(path);
    std::vector<std::vector<double>> rows;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream cells(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(cells, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (used != cell.size() && cell.find_first_not_of(" \t", used) != std::string::npos)
                    numeric = false;
            } catch (const std::exception&) {
                numeric = false;
            }
            if (!numeric) break;
        }
        if (!numeric && line_no == 1) {
            *header_out = line;
            continue;
        }
        if (!numeric)
            throw ConfigError("config error: " + path + ":" + std::to_string(line_no) +
                              ": non-numeric cell");
        if (static_cast<int>(row.size()) != 2 * s)
            throw ConfigError("config error: " + path + ":" + std::to_string(line_no) +
                              ": expected " + std::to_string(2 * s) + " columns, got " +
                              std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ConfigError("config error: " + path + ": no data rows");
    return rows;
}

LocalState state_from_row(int dim, const std::vector<double>& row) {
    const int s = packed_size(dim);
    std::vector<double> e(row.begin(), row.begin() + s);
    std::vector<double> g(row.begin() + s, row.begin() + 2 * s);
    return LocalState(SymMatrix::from_packed(dim, e), SymMatrix::from_packed(dim, g));
}

const char* region_name(RelaxedMembership r) {
    switch (r) {
        case RelaxedMembership::InDlocPlus: return "D_plus";
        case RelaxedMembership::InDlocMinus: return "D_minus";
        case RelaxedMembership::InRelaxedInterior: return "relaxed_interior";
        default: return "outside";
    }
}

const char* flag_region_name(FlagMembership r) {
    switch (r) {
        case FlagMembership::OnOriginalSet: return "on_original_set";
        case FlagMembership::InRelaxedSet: return "in_relaxed_set";
        default: return "outside";
    }
}

int cmd_relax_membership(const CliOptions& opt) {
    const json cfg = load_json_config(opt.config_path);
    json_check_keys(cfg, {"wells", "material", "flag", "states_csv", "tol", "output"},
                    "(top level)");
    const double tol =
        cfg.contains("tol") ? json_number(cfg.at("tol"), "tol") : 1e-9;
    const std::string states_rel =
        json_string(json_require(cfg, "states_csv", "(top level)"), "states_csv");
    // Relative CSV paths are anchored at the config file, like mesh/cloud paths.
    const fs::path base = fs::path(opt.config_path).parent_path();
    const std::string states_path = (fs::path(states_rel).is_absolute())
                                        ? states_rel
                                        : (base / states_rel).string();
    const std::string out_dir = resolve_out_dir(opt, config_output_dir(cfg));

    std::ostringstream out;
    std::string header;
    if (cfg.contains("flag")) {
        if (cfg.contains("wells") || cfg.contains("material"))
            throw ConfigError("config error: provide exactly one of 'flag', 'wells', 'material'");
        const json& f = cfg.at("flag");
        json_check_keys(f, {"C", "sigma0"}, "flag");
        const double C = json_number(json_require(f, "C", "flag"), "flag.C");
        const double sigma0 = json_number(json_require(f, "sigma0", "flag"), "flag.sigma0");
        if (C <= 0.0 || sigma0 <= 0.0)
            throw ConfigError("config error: flag.C and flag.sigma0 must be positive");
        const FlagDataSet1D flag(C, sigma0);
        const std::vector<std::vector<double>> rows = read_states_csv(states_path, 1, &header);
        out << (header.empty() ? "eps_11,sig_11" : header) << ",region\n";
        for (const std::vector<double>& r : rows) {
            out << fmt17(r[0]) << ',' << fmt17(r[1]) << ','
                << flag_region_name(membership_flag_1d(flag, r[0], r[1], tol)) << '\n';
        }
    } else {
        const TwoWellRelaxation rx = parse_relaxation(cfg);
        const int dim = rx.b().dim();
        const std::vector<std::vector<double>> rows =
            read_states_csv(states_path, packed_size(dim), &header);
        if (header.empty()) {
            std::ostringstream h;
            h << "eps_" << packed_label(dim, 0);
            for (int k = 1; k < packed_size(dim); ++k) h << ",eps_" << packed_label(dim, k);
            for (int k = 0; k < packed_size(dim); ++k) h << ",sig_" << packed_label(dim, k);
            header = h.str();
        }
        out << header << ",region,mu,l_residual\n";
        for (const std::vector<double>& r : rows) {
            const MembershipResult m = membership_relaxed_nd(rx, state_from_row(dim, r), tol);
            for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << fmt17(r[i]);
            out << ',' << region_name(m.region) << ',' << fmt17(m.mu) << ','
                << fmt17(m.l_residual) << '\n';
        }
    }
    atomic_write_text(join_path(out_dir, "membership.csv"), out.str());
    std::cout << "classified states written to " << join_path(out_dir, "membership.csv") << "\n";
    return 0;
}

int cmd_relax_laminate(const CliOptions& opt) {
    const auto start = std::chrono::steady_clock::now();
    const json cfg = load_json_config(opt.config_path);
    json_check_keys(cfg, {"wells", "material", "z", "h", "elements", "output"}, "(top level)");
    const TwoWellRelaxation rx = parse_relaxation(cfg);
    const int dim = rx.b().dim();

    const json& jz = json_require(cfg, "z", "(top level)");
    json_check_keys(jz, {"eps", "sig"}, "z");
    const LocalState z(parse_packed(json_require(jz, "eps", "z"), dim, "z.eps"),
                       parse_packed(json_require(jz, "sig", "z"), dim, "z.sig"));

    const json& jh = json_require(cfg, "h", "(top level)");
    if (!jh.is_array() || jh.empty())
        throw ConfigError("config error: h must be a nonempty array of layer counts");
    std::vector<int> hs;
    for (std::size_t i = 0; i < jh.size(); ++i) {
        const int h = json_int(jh[i], "h[" + std::to_string(i) + "]");
        if (h < 1) throw ConfigError("config error: h[" + std::to_string(i) + "] must be >= 1");
        hs.push_back(h);
    }
    int elements = 64;
    if (cfg.contains("elements")) {
        elements = json_int(cfg.at("elements"), "elements");
        if (elements < 1) throw ConfigError("config error: elements must be >= 1");
    }
    if (dim > 2)
        throw ConfigError("config error: laminate fields are emitted for dim 1 or 2 only");
    const Mesh mesh = (dim == 1) ? Mesh::bar(1.0, elements)
                                 : Mesh::rectangle(1.0, 1.0, elements, elements, "crossed");
    const std::string out_dir = resolve_out_dir(opt, config_output_dir(cfg));

    LaminateDecomposition decomp;
    try {
        decomp = rank_one_decompose(rx, z);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config error: z: ") + e.what());
    }

    json report;
    report["tool"] = tool_block();
    report["config"] = cfg;
    report["mu"] = decomp.mu;
    report["lambda"] = decomp.lambda;
    report["nu"] = vector_json(decomp.nu);
    report["z_minus"] = state_json(decomp.z_minus);
    report["z_plus"] = state_json(decomp.z_plus);
    json jrows = json::array();
    for (const int h : hs) {
        const std::vector<LocalState> field = generate_laminate_field(mesh, decomp, h);
        LocalState mean = LocalState::zero(dim);
        double volume = 0.0;
        for (int e = 0; e < mesh.n_elements(); ++e) {
            mean += mesh.element_measure(e) * field[e];
            volume += mesh.element_measure(e);
        }
        mean = (1.0 / volume) * mean;
        const double err = std::sqrt(local_sq_distance(mean, z, rx.metric()));

        std::ostringstream out;
        out << "element";
        for (int d = 0; d < mesh.dim(); ++d) out << ",x" << (d + 1);
        out << ",phase";
        append_state_header(out, dim);
        out << '\n';
        for (int e = 0; e < mesh.n_elements(); ++e) {
            out << e;
            const Eigen::VectorXd c = mesh.element_centroid(e);
            for (Eigen::Index d = 0; d < c.size(); ++d) out << ',' << fmt17(c[d]);
            const bool is_minus =
                local_sq_distance(field[e], decomp.z_minus, rx.metric()) <
                local_sq_distance(field[e], decomp.z_plus, rx.metric());
            out << ',' << (is_minus ? "minus" : "plus");
            append_state_row(out, field[e]);
            out << '\n';
        }
        const std::string name = "laminate_h" + std::to_string(h) + ".csv";
        atomic_write_text(join_path(out_dir, name), out.str());
        jrows.push_back(json{{"h", h}, {"mean_error", err}, {"csv", name}});
    }
    report["fields"] = jrows;
    report["timing"] = {{"wall_seconds", seconds_since(start)}};
    atomic_write_text(join_path(out_dir, "laminate.json"), report.dump(2) + "\n");

    std::cout << "laminate fields for " << hs.size() << " layer counts, lambda = "
              << fmt17(decomp.lambda) << "\nartifacts in " << out_dir << "\n";
    return 0;
}

int cmd_relax_envelope(const CliOptions& opt) {
    const auto start = std::chrono::steady_clock::now();
    const json cfg = load_json_config(opt.config_path);
    json_check_keys(cfg, {"C", "sigma0", "range", "samples", "output"}, "(top level)");
    const double C = json_number(json_require(cfg, "C", "(top level)"), "C");
    const double sigma0 = json_number(json_require(cfg, "sigma0", "(top level)"), "sigma0");
    if (C <= 0.0 || sigma0 <= 0.0)
        throw ConfigError("config error: C and sigma0 must be positive");
    double lo = -3.0 * sigma0 / C, hi = 3.0 * sigma0 / C;
    if (cfg.contains("range")) {
        const json& r = cfg.at("range");
        if (!r.is_array() || r.size() != 2)
            throw ConfigError("config error: range must be [lo, hi]");
        lo = json_number(r[0], "range[0]");
        hi = json_number(r[1], "range[1]");
        if (!(lo < hi)) throw ConfigError("config error: range must have lo < hi");
    }
    int samples = 201;
    if (cfg.contains("samples")) {
        samples = json_int(cfg.at("samples"), "samples");
        if (samples < 2) throw ConfigError("config error: samples must be >= 2");
    }
    const std::string out_dir = resolve_out_dir(opt, config_output_dir(cfg));

    const ConvexEnvelope1D env(C, sigma0);
    const FlagDataSet1D flag(C, sigma0);
    std::ostringstream out;
    out << "eps,energy,stress\n";
    for (int i = 0; i < samples; ++i) {
        const double eps = lo + (hi - lo) * i / (samples - 1);
        out << fmt17(eps) << ',' << fmt17(env.energy(eps)) << ',' << fmt17(env.stress(eps))
            << '\n';
    }
    atomic_write_text(join_path(out_dir, "envelope.csv"), out.str());

    const LocalState w = env.witness();
    json report;
    report["tool"] = tool_block();
    report["config"] = cfg;
    report["energy_at_zero"] = env.energy(0.0);
    report["flat_interval"] = json::array({-sigma0 / C, sigma0 / C});
    report["witness"] = {
        {"eps", w.eps[0]},
        {"sig", w.sig[0]},
        {"in_flag_relaxation",
         membership_flag_1d(flag, w.eps[0], w.sig[0]) != FlagMembership::Outside},
        {"on_envelope_graph", env.contains(w.eps[0], w.sig[0])}};
    report["timing"] = {{"wall_seconds", seconds_since(start)}};
    atomic_write_text(join_path(out_dir, "envelope.json"), report.dump(2) + "\n");

    std::cout << "envelope table (" << samples << " samples) written; energy at 0 = "
              << fmt17(env.energy(0.0)) << "\nartifacts in " << out_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"data-driven elasticity solver and two-well relaxation toolkit"};
    app.require_subcommand(1);

    CliOptions opt;
    std::uint64_t seed_value = 0;
    int threads_value = 0;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opt.config_path, "configuration file (JSON)")->required();
        cmd->add_option("--out", opt.out_dir, "output directory (overrides config)");
        cmd->add_option("--seed", seed_value, "seed override");
        cmd->add_option("--threads", threads_value, "thread count override");
    };

    CLI::App* solve = app.add_subcommand("solve", "solve one boundary-value problem");
    add_common(solve);
    CLI::App* conv = app.add_subcommand("convergence", "sampling convergence study");
    add_common(conv);
    CLI::App* relax = app.add_subcommand("relax", "two-well relaxation tools");
    relax->require_subcommand(1);
    CLI::App* analyze = relax->add_subcommand("analyze", "wells -> alpha range and band report");
    add_common(analyze);
    CLI::App* membership = relax->add_subcommand("membership", "classify states from a CSV");
    add_common(membership);
    CLI::App* laminate = relax->add_subcommand("laminate", "emit laminate fields for a state");
    add_common(laminate);
    CLI::App* envelope = relax->add_subcommand("envelope", "1D convex envelope table");
    add_common(envelope);
    CLI::App* selftest = app.add_subcommand("selftest", "run the built-in acceptance suite");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);  // CLI11 prints the message; nonzero on error
    }

    // Flag overrides only count on the command they were given to.
    const auto finalize = [&](CLI::App* cmd) {
        if (cmd->count("--seed") > 0) opt.seed = seed_value;
        if (cmd->count("--threads") > 0) opt.threads = threads_value;
    };

    try {
        if (solve->parsed()) {
            finalize(solve);
            return cmd_solve(opt);
        }
        if (conv->parsed()) {
            finalize(conv);
            return cmd_convergence(opt);
        }
        if (analyze->parsed()) {
            finalize(analyze);
            return cmd_relax_analyze(opt);
        }
        if (membership->parsed()) {
            finalize(membership);
            return cmd_relax_membership(opt);
        }
        if (laminate->parsed()) {
            finalize(laminate);
            return cmd_relax_laminate(opt);
        }
        if (envelope->parsed()) {
            finalize(envelope);
            return cmd_relax_envelope(opt);
        }
        if (selftest->parsed()) return run_acceptance(std::cout) ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
