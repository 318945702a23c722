// fosctl: batch front end for the fractional-order systems toolkit.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fos/analysis.hpp"
#include "fos/estimate.hpp"
#include "fos/io.hpp"
#include "fos/mpc.hpp"
#include "fos/sysid.hpp"

#ifndef FOS_VERSION
#define FOS_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using fos::Index;
using fos::Matrix;
using fos::Vector;
using fos::io::json;

namespace {

// ---------------------------------------------------------------------------
// Run bookkeeping
// ---------------------------------------------------------------------------

struct Run {
    std::string subcommand;
    json config = json::object();           // resolved options, canonical order
    std::vector<std::string> inputs;
    std::vector<std::pair<std::string, std::string>> outputs;  // path, content
    std::optional<std::uint64_t> seed;

    void read_input(const std::string& path) { inputs.push_back(path); }
    void emit(const std::string& path, std::string content) { outputs.emplace_back(path, std::move(content)); }

    // All outputs go through temp-file renames; the manifest is written last.
    void commit(const std::string& primary) const {
        json manifest;
        manifest["subcommand"] = subcommand;
        manifest["tool_version"] = FOS_VERSION;
        manifest["seed"] = seed ? json(*seed) : json(nullptr);
        manifest["config_digest"] = fos::io::hex_digest(config.dump());
        manifest["config"] = config;
        json ins = json::array();
        for (const auto& p : inputs) {
            json e;
            e["path"] = p;
            e["digest"] = fos::io::hex_digest(fos::io::read_file(p));
            ins.push_back(std::move(e));
        }
        manifest["inputs"] = std::move(ins);
        json outs = json::array();
        for (const auto& [path, content] : outputs) {
            fos::io::write_file_atomic(path, content);
            json e;
            e["path"] = path;
            e["digest"] = fos::io::hex_digest(content);
            outs.push_back(std::move(e));
        }
        manifest["outputs"] = std::move(outs);
        fos::io::write_file_atomic(primary + ".manifest.json", fos::io::dump(manifest));
    }
};

json load_json_file(Run& run, const std::string& path) {
    run.read_input(path);
    return fos::io::parse_json(fos::io::read_file(path), path);
}

// Fill an option from the config object unless it was given on the command line.
template <class T>
void from_config(const json& cfg, const CLI::Option* opt, const char* key, T& target) {
    if (opt->count() > 0 || !cfg.contains(key)) return;
    try {
        target = cfg.at(key).get<T>();
    } catch (const json::exception& e) {
        throw fos::ParseError(std::string("config field '") + key + "': " + e.what());
    }
}

Vector parse_list(const std::string& text, const std::string& field) {
    std::vector<double> values;
    if (!text.empty())
        for (auto cell : fos::io::detail::split(text, ',')) values.push_back(fos::io::parse_double(cell));
    Vector v(static_cast<Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Index>(i)] = values[i];
    if (!v.allFinite()) throw fos::ParseError("field '" + field + "' contains non-finite values");
    return v;
}

std::pair<double, double> parse_pair(const std::string& text, const std::string& field) {
    const Vector v = parse_list(text, field);
    if (v.size() != 2) throw fos::ParseError("field '" + field + "' expects lo,hi");
    return {v[0], v[1]};
}

/// Plain numeric CSV with a header row.
Matrix read_numeric_csv(const std::string& text, const std::string& source) {
    std::vector<std::vector<double>> rows;
    std::size_t width = 0;
    bool header = true;
    for (auto line : fos::io::detail::split(text, '\n')) {
        line = fos::io::detail::trim(line);
        if (line.empty()) continue;
        if (header) {
            width = fos::io::detail::split(line, ',').size();
            header = false;
            continue;
        }
        std::vector<double> row;
        for (auto cell : fos::io::detail::split(line, ',')) row.push_back(fos::io::parse_double(cell));
        if (row.size() != width) throw fos::ParseError(source + ": ragged row");
        rows.push_back(std::move(row));
    }
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(width));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < width; ++c) m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    return m;
}

struct LoadedModel {
    std::optional<fos::FosModel> single;
    std::optional<fos::MultiTermNetwork> network;
};

LoadedModel load_model(Run& run, const std::string& path) {
    const json j = load_json_file(run, path);
    LoadedModel out;
    if (j.contains("state_terms")) out.network = fos::io::network_from_json(j);
    else out.single = fos::io::fos_model_from_json(j);
    return out;
}

std::string csv_row(const std::vector<double>& values) {
    std::string s;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) s += ',';
        s += fos::io::format_double(values[i]);
    }
    return s + '\n';
}

fs::path relative_to(const std::string& base_file, const std::string& path) {
    const fs::path p(path);
    if (p.is_absolute()) return p;
    return fs::path(base_file).parent_path() / p;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string model, inputs, config, out, x0;
    Index steps = 0;
    std::uint64_t seed = 0;
    double sigma = 0.0;
    double meas_sigma = 0.0;
    double dt = 1.0;
    std::optional<Index> memory_cap;
};

int cmd_simulate(const SimulateArgs& a) {
    Run run;
    run.subcommand = "simulate";
    run.seed = a.seed;
    const auto model = load_model(run, a.model);
    const Index n = model.single ? model.single->n() : model.network->n();
    const Index m = model.single ? model.single->m() : model.network->m();
    const Index p = model.single ? model.single->p() : model.network->p();
    Vector x0 = a.x0.empty() ? Vector(Vector::Zero(n)) : parse_list(a.x0, "x0");
    if (x0.size() != n) throw fos::DimensionError("x0 must have " + std::to_string(n) + " entries");
    if (a.steps < 0) throw fos::DomainError("steps must be >= 0");

    Matrix u = Matrix::Zero(a.steps, m);
    if (!a.inputs.empty()) {
        run.read_input(a.inputs);
        const Matrix raw = read_numeric_csv(fos::io::read_file(a.inputs), a.inputs);
        if (raw.rows() < a.steps || raw.cols() != m)
            throw fos::DimensionError("inputs must have at least " + std::to_string(a.steps) + " rows of " + std::to_string(m) +
                                      " columns");
        u = raw.topRows(a.steps);
    }
    const Matrix w = fos::gaussian_noise(a.seed, a.steps, p, a.sigma);

    fos::Trajectory traj;
    if (model.single) {
        fos::SimulationOptions opts;
        opts.memory_cap = a.memory_cap;
        opts.dt = a.dt;
        traj = fos::simulate_fos(*model.single, x0, u, w, a.steps, opts);
    } else {
        const Matrix v = fos::gaussian_noise(a.seed ^ 0x9e3779b97f4a7c15ULL, a.steps + 1, model.network->q(), a.meas_sigma);
        traj = fos::simulate_network(*model.network, x0, u, w, v, a.steps);
        traj.dt = a.dt;
    }

    run.config["model"] = a.model;
    run.config["steps"] = a.steps;
    run.config["x0"] = fos::io::vector_to_json(x0);
    run.config["seed"] = a.seed;
    run.config["sigma"] = a.sigma;
    run.config["meas_sigma"] = a.meas_sigma;
    run.config["dt"] = a.dt;
    run.config["memory_cap"] = a.memory_cap ? json(*a.memory_cap) : json(nullptr);
    run.emit(a.out, fos::io::trajectory_csv(traj));
    run.commit(a.out);
    return 0;
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct AnalyzeArgs {
    std::string what, model, config, out, c_matrix, fopid;
    Index horizon = 8;
    Index depth = 20;
    double omega_min = 1e-2, omega_max = 1e2;
    Index points = 50;
    Index input = 0, output = 0;
};

json complex_list(const std::vector<fos::Complex>& values) {
    json arr = json::array();
    for (const auto& c : values) arr.push_back(json::array({c.real(), c.imag()}));
    return arr;
}

json gramian_json(const fos::GramianReport& r) {
    json j;
    j["K"] = r.K;
    j["rank"] = r.rank;
    j["full_rank"] = r.full_rank();
    j["smallest_retained"] = r.smallest_retained;
    j["singular_values"] = fos::io::vector_to_json(r.singular_values);
    j["matrix"] = fos::io::matrix_to_json(r.matrix);
    return j;
}

int cmd_analyze(const AnalyzeArgs& a) {
    Run run;
    run.subcommand = "analyze " + a.what;
    run.config["analysis"] = a.what;

    if (a.what == "bode") {
        if (a.points < 2 || !(a.omega_min > 0.0) || !(a.omega_max > a.omega_min))
            throw fos::DomainError("bode: need 0 < omega_min < omega_max and points >= 2");
        const auto omegas = fos::logspace(a.omega_min, a.omega_max, static_cast<std::size_t>(a.points));
        std::vector<fos::BodePoint> pts;
        if (!a.fopid.empty()) {
            const Vector k = parse_list(a.fopid, "fopid");
            if (k.size() != 5) throw fos::ParseError("fopid expects kp,ki,kd,lambda,mu");
            pts = fos::fopid_response(k[0], k[1], k[2], k[3], k[4], omegas);
            run.config["fopid"] = fos::io::vector_to_json(k);
        } else {
            if (a.model.empty()) throw fos::ParseError("bode: --model or --fopid required");
            const auto model = load_model(run, a.model);
            if (!model.single) throw fos::ParseError("bode: a single-term model is required");
            const auto& fm = *model.single;
            if (fm.n() > 0 && (fm.alpha.array() != fm.alpha[0]).any())
                throw fos::DomainError("bode: orders must be commensurate (all equal)");
            if (a.input < 0 || a.input >= fm.m() || a.output < 0 || a.output >= fm.n())
                throw fos::IndexError("bode: input/output channel out of range");
            // H(s) = e_out' (s^alpha I - A)^{-1} B e_in with state-space alpha.
            fos::CommensurateStateSpace ss;
            ss.A = fm.A;
            ss.B = fm.B.col(a.input);
            ss.C = Matrix::Zero(1, fm.n());
            ss.C(0, a.output) = 1.0;
            ss.D = Matrix::Zero(1, 1);
            ss.alpha = fm.n() > 0 ? fm.alpha[0] : 1.0;
            pts = fos::bode(ss, omegas);
            run.config["model"] = a.model;
            run.config["input"] = a.input;
            run.config["output"] = a.output;
        }
        run.config["omega_min"] = a.omega_min;
        run.config["omega_max"] = a.omega_max;
        run.config["points"] = a.points;
        run.config["branch"] = "principal";
        std::string csv = "omega,re,im,mag_db,phase_deg\n";
        for (const auto& p : pts) csv += csv_row({p.omega, p.value.real(), p.value.imag(), p.mag_db, p.phase_deg});
        run.emit(a.out, std::move(csv));
        run.commit(a.out);
        return 0;
    }

    const auto model = load_model(run, a.model);
    if (!model.single) throw fos::ParseError(a.what + ": a single-term model is required");
    const auto& fm = *model.single;
    run.config["model"] = a.model;
    json report;
    report["analysis"] = a.what;

    if (a.what == "stability") {
        const bool commensurate = fm.n() == 0 || (fm.alpha.array() == fm.alpha[0]).all();
        if (commensurate && fm.n() > 0 && fm.alpha[0] > 0.0) {
            const auto s = fos::commensurate_stability(fm.A, fm.alpha[0]);
            report["test"] = "commensurate";
            report["alpha"] = fm.alpha[0];
            report["eigenvalues"] = complex_list(s.eigenvalues);
            json margins = json::array();
            for (double mg : s.margins) margins.push_back(mg);
            report["margins"] = std::move(margins);
            report["verdict"] = fos::to_string(s.verdict);
        } else {
            report["test"] = "none";
            report["verdict"] = "unknown";
        }
        run.config["depth"] = a.depth;
        json h;
        h["label"] = "heuristic";
        h["depth"] = a.depth;
        h["lift_spectral_radius"] = fos::lift_spectral_radius_heuristic(fm, a.depth);
        report["heuristic"] = std::move(h);
    } else if (a.what == "gramians") {
        Matrix C = Matrix::Identity(fm.n(), fm.n());
        if (!a.c_matrix.empty()) C = fos::io::matrix_from_json(fos::io::parse_json(a.c_matrix, "--c"), "C", fm.n());
        if (C.cols() != fm.n()) throw fos::DimensionError("C must have n columns");
        run.config["horizon"] = a.horizon;
        run.config["C"] = fos::io::matrix_to_json(C);
        report["controllability"] = gramian_json(fos::controllability_gramian(fm, fm.B, a.horizon));
        const auto obs = fos::observability_matrices(fm, C, a.horizon);
        json o;
        o["K"] = a.horizon;
        o["rank"] = obs.rank;
        o["observable"] = obs.observable(fm.n());
        o["singular_values"] = fos::io::vector_to_json(obs.singular_values);
        o["matrix"] = fos::io::matrix_to_json(obs.Wo);
        report["observability"] = std::move(o);
    } else {
        throw fos::ParseError("unknown analysis '" + a.what + "'");
    }
    run.emit(a.out, fos::io::dump(report));
    run.commit(a.out);
    return 0;
}

// ---------------------------------------------------------------------------
// identify
// ---------------------------------------------------------------------------

struct IdentifyArgs {
    std::string trajectory, config, out, diag, window;
    std::optional<Index> depth;
    double epsilon = 1e-3;
};

int cmd_identify(const IdentifyArgs& a) {
    Run run;
    run.subcommand = "identify";
    run.read_input(a.trajectory);
    const auto traj = fos::io::parse_trajectory_csv(fos::io::read_file(a.trajectory));
    fos::IdentifyOptions opts;
    opts.epsilon = a.epsilon;
    if (a.depth) opts.depth = *a.depth;
    if (!a.window.empty()) {
        const auto [off, len] = parse_pair(a.window, "window");
        opts.window = {static_cast<Index>(off), static_cast<Index>(len)};
    } else {
        opts.window.length = std::min<Index>(opts.window.length, traj.steps());
    }
    const auto res = fos::identify(traj, opts);
    const auto model = res.model();
    const double mse = fos::one_step_mse(model, traj, opts.window);

    run.config["trajectory"] = a.trajectory;
    run.config["epsilon"] = a.epsilon;
    run.config["depth"] = a.depth ? json(*a.depth) : json("full");
    run.config["window"] = json::array({opts.window.offset, opts.window.length});

    std::string csv = "channel,alpha_hat,iterations,mse,flag\n";
    for (std::size_t i = 0; i < res.channels.size(); ++i) {
        const auto& c = res.channels[i];
        csv += std::to_string(i + 1) + ',' + fos::io::format_double(c.alpha) + ',' + std::to_string(c.iterations) + ',' +
               fos::io::format_double(c.mse) + ',' + fos::flag_string(c.flags) + '\n';
    }
    const std::string diag = a.diag.empty() ? a.out + ".diag.csv" : a.diag;
    run.emit(a.out, fos::io::dump(fos::io::to_json(model)));
    run.emit(diag, std::move(csv));
    run.commit(a.out);
    std::cout << "one_step_mse " << fos::io::format_double(mse) << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

struct EstimateArgs {
    std::string network, config, trajectory, out;
    Index depth = 5;
};

Matrix weight_field(const json& cfg, const char* key, Index dim, double fallback) {
    if (!cfg.contains(key)) return fallback * Matrix::Identity(dim, dim);
    return fos::io::weight_from_json(cfg.at(key), key, dim);
}

int cmd_estimate(const EstimateArgs& a) {
    Run run;
    run.subcommand = "estimate";
    const auto model = load_model(run, a.network);
    fos::MultiTermNetwork net =
        model.network ? *model.network : fos::to_network(*model.single, Matrix::Identity(model.single->n(), model.single->n()));
    const json cfg = a.config.empty() ? json::object() : load_json_file(run, a.config);
    run.read_input(a.trajectory);
    const auto traj = fos::io::parse_trajectory_csv(fos::io::read_file(a.trajectory));
    if (!traj.outputs) throw fos::ParseError("estimate: trajectory has no y columns");

    const Index v = a.depth;
    if (v < 1) throw fos::DomainError("estimate: depth must be >= 1");
    const Index dim = (net.n() + net.m()) * v;
    fos::EstimatorConfig ec;
    ec.Q = {weight_field(cfg, "Q", net.n(), 1.0)};
    ec.R = {weight_field(cfg, "R", net.q(), 1.0)};
    ec.P0 = weight_field(cfg, "P0", dim, 1.0);
    ec.xhat0 = cfg.contains("xhat0") ? fos::io::vector_from_json(cfg.at("xhat0"), "xhat0") : Vector(Vector::Zero(dim));
    if (ec.xhat0.size() == net.n()) {
        Vector full = Vector::Zero(dim);
        full.head(net.n()) = ec.xhat0;
        ec.xhat0 = full;
    }
    const bool have_truth = traj.states.cols() == net.n();
    const auto est = fos::run_estimator(net, v, ec, traj, have_truth);

    run.config["network"] = a.network;
    run.config["trajectory"] = a.trajectory;
    run.config["depth"] = v;
    run.config["estimator"] = cfg;

    std::string csv = "t";
    for (Index i = 0; i < net.n(); ++i) csv += ",xhat" + std::to_string(i + 1);
    csv += ",err_norm\n";
    for (Index k = 0; k < est.estimates.rows(); ++k) {
        std::vector<double> row{static_cast<double>(k) * traj.dt};
        for (Index i = 0; i < net.n(); ++i) row.push_back(est.estimates(k, i));
        csv += csv_row(row);
        csv.pop_back();
        csv += ',' + (est.errors ? fos::io::format_double((*est.errors)[k]) : std::string()) + '\n';
    }
    json summary;
    summary["steps"] = traj.steps();
    summary["depth"] = v;
    summary["terminal_error"] = est.errors ? json(est.terminal_error) : json(nullptr);
    summary["sup_error"] = est.errors ? json(est.sup_error) : json(nullptr);
    run.emit(a.out, std::move(csv));
    run.emit(a.out + ".summary.json", fos::io::dump(summary));
    run.commit(a.out);
    return 0;
}

// ---------------------------------------------------------------------------
// mpc
// ---------------------------------------------------------------------------

struct MpcArgs {
    std::string scenario, out, bounds;
    Index depth = 0, horizon = 0, control_horizon = 0;
    std::uint64_t seed = 0;
    CLI::Option* depth_opt = nullptr;
    CLI::Option* horizon_opt = nullptr;
    CLI::Option* control_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
};

int cmd_mpc(const MpcArgs& a) {
    Run run;
    run.subcommand = "mpc";
    const json sc = load_json_file(run, a.scenario);
    const std::string model_path = relative_to(a.scenario, fos::io::require(sc, "model").get<std::string>()).string();
    const auto model = load_model(run, model_path);
    if (!model.single) throw fos::ParseError("mpc: a single-term model is required");
    const auto& plant = *model.single;
    const Index n = plant.n(), m = plant.m();

    fos::MpcProblem pb;
    pb.depth = sc.value("depth", Index{1});
    pb.horizon = sc.value("horizon", Index{1});
    pb.control_horizon = sc.value("control_horizon", pb.horizon);
    if (a.depth_opt->count()) pb.depth = a.depth;
    if (a.horizon_opt->count()) pb.horizon = a.horizon;
    if (a.control_opt->count()) pb.control_horizon = a.control_horizon;
    pb.Q = {sc.contains("Q") ? fos::io::weight_from_json(sc.at("Q"), "Q", n) : Matrix(Matrix::Identity(n, n))};
    pb.R = {sc.contains("R") ? fos::io::weight_from_json(sc.at("R"), "R", m) : Matrix(Matrix::Identity(m, m))};
    if (sc.contains("c")) pb.c = {fos::io::vector_from_json(sc.at("c"), "c")};

    double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
    if (sc.contains("u_lo")) pb.u_lo = fos::io::vector_from_json(sc.at("u_lo"), "u_lo");
    if (sc.contains("u_hi")) pb.u_hi = fos::io::vector_from_json(sc.at("u_hi"), "u_hi");
    if (sc.contains("bounds")) {
        const Vector b = fos::io::vector_from_json(sc.at("bounds"), "bounds");
        if (b.size() != 2) throw fos::ParseError("field 'bounds' expects [lo, hi]");
        lo = b[0];
        hi = b[1];
    }
    if (!a.bounds.empty()) std::tie(lo, hi) = parse_pair(a.bounds, "bounds");
    if (sc.contains("bounds") || !a.bounds.empty()) {
        if (lo > hi)
            throw fos::DomainError("bounds: u_lo = " + fos::io::format_double(lo) + " > u_hi = " + fos::io::format_double(hi));
        pb.u_lo = Vector::Constant(m, lo);
        pb.u_hi = Vector::Constant(m, hi);
    }
    if (pb.u_lo.size() == 0) pb.u_lo = Vector::Constant(m, lo);
    if (pb.u_hi.size() == 0) pb.u_hi = Vector::Constant(m, hi);
    for (Index i = 0; i < std::min(pb.u_lo.size(), pb.u_hi.size()); ++i)
        if (pb.u_lo[i] > pb.u_hi[i])
            throw fos::DomainError("u_lo[" + std::to_string(i) + "] = " + fos::io::format_double(pb.u_lo[i]) + " > u_hi[" +
                                   std::to_string(i) + "] = " + fos::io::format_double(pb.u_hi[i]));
    if (sc.contains("state_constraints")) {
        const auto& s = sc.at("state_constraints");
        fos::StateConstraints cons;
        cons.G = fos::io::matrix_from_json(fos::io::require(s, "G"), "state_constraints.G", n);
        cons.h = fos::io::vector_from_json(fos::io::require(s, "h"), "state_constraints.h");
        cons.hard = s.value("hard", false);
        cons.penalty = s.value("penalty", 1e6);
        pb.state_constraints = cons;
    }
    pb.validate(n, m);

    const Index K = fos::io::require(sc, "steps").get<Index>();
    std::uint64_t seed = sc.value("seed", std::uint64_t{0});
    if (a.seed_opt->count()) seed = a.seed;
    const double sigma = sc.value("sigma", 0.0);
    const Vector x0 = sc.contains("x0") ? fos::io::vector_from_json(sc.at("x0"), "x0") : Vector(Vector::Zero(n));
    if (x0.size() != n) throw fos::DimensionError("x0 must have n entries");
    run.seed = seed;

    const Matrix w = fos::gaussian_noise(seed, K, plant.p(), sigma);
    const auto cl = fos::run_closed_loop(plant, pb, x0, K, w);
    const auto base = fos::uncontrolled_baseline(plant, x0, K, w);

    run.config["model"] = model_path;
    run.config["depth"] = pb.depth;
    run.config["horizon"] = pb.horizon;
    run.config["control_horizon"] = pb.control_horizon;
    run.config["u_lo"] = fos::io::vector_to_json(pb.u_lo);
    run.config["u_hi"] = fos::io::vector_to_json(pb.u_hi);
    run.config["steps"] = K;
    run.config["seed"] = seed;
    run.config["sigma"] = sigma;

    std::string csv = "t";
    for (Index i = 0; i < n; ++i) csv += ",x" + std::to_string(i + 1);
    for (Index i = 0; i < m; ++i) csv += ",u" + std::to_string(i + 1);
    csv += ",cost_cycle\n";
    std::size_t cycle = 0;
    for (Index k = 0; k <= K; ++k) {
        while (cycle + 1 < cl.solve_steps.size() && cl.solve_steps[cycle + 1] <= k) ++cycle;
        std::vector<double> row{static_cast<double>(k)};
        for (Index i = 0; i < n; ++i) row.push_back(cl.trajectory.states(k, i));
        for (Index i = 0; i < m; ++i) row.push_back(k < K ? cl.trajectory.inputs(k, i) : 0.0);
        row.push_back(k < K ? cl.cycle_costs[cycle] : 0.0);
        csv += csv_row(row);
    }
    const double e_ctrl = fos::energy(cl.trajectory.states);
    const double e_base = fos::energy(base.states);
    json summary;
    summary["steps"] = K;
    summary["solves"] = cl.solve_steps.size();
    summary["controlled_energy"] = e_ctrl;
    summary["baseline_energy"] = e_base;
    summary["suppression_ratio"] = e_base > 0.0 ? json(e_ctrl / e_base) : json(nullptr);
    summary["max_abs_input"] = m > 0 && K > 0 ? cl.trajectory.inputs.cwiseAbs().maxCoeff() : 0.0;
    summary["noise_digest"] = fos::io::hex_digest(
        std::string_view(reinterpret_cast<const char*>(w.data()), static_cast<std::size_t>(w.size()) * sizeof(double)));
    run.emit(a.out, std::move(csv));
    run.emit(a.out + ".summary.json", fos::io::dump(summary));
    run.commit(a.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fractional-order systems toolkit"};
    app.set_version_flag("--version", FOS_VERSION);
    app.require_subcommand(1);

    // simulate
    SimulateArgs sim;
    Index sim_cap = 0;
    auto* s = app.add_subcommand("simulate", "Forward-simulate a model file");
    s->add_option("--model", sim.model, "Model or network JSON")->required();
    auto* s_x0 = s->add_option("--x0", sim.x0, "Initial state, comma separated");
    auto* s_steps = s->add_option("--steps,-K", sim.steps, "Number of steps K");
    s->add_option("--inputs", sim.inputs, "CSV of inputs (header row, K rows of m columns)");
    auto* s_seed = s->add_option("--seed", sim.seed, "Noise seed");
    auto* s_sigma = s->add_option("--sigma", sim.sigma, "Process noise standard deviation");
    auto* s_msig = s->add_option("--meas-sigma", sim.meas_sigma, "Measurement noise standard deviation (networks)");
    auto* s_dt = s->add_option("--dt", sim.dt, "Sample period written to the time column");
    auto* s_cap = s->add_option("--memory-cap", sim_cap, "Truncate history to this many lags");
    s->add_option("--config", sim.config, "JSON file with default option values");
    s->add_option("--out", sim.out, "Output trajectory CSV")->required();

    // analyze
    AnalyzeArgs an;
    auto* an_cmd = app.add_subcommand("analyze", "Stability, Gramians or frequency response");
    an_cmd->add_option("what", an.what, "stability | gramians | bode")
        ->required()
        ->check(CLI::IsMember({"stability", "gramians", "bode"}));
    an_cmd->add_option("--model", an.model, "Model JSON");
    auto* an_h = an_cmd->add_option("--horizon", an.horizon, "Gramian horizon K");
    auto* an_d = an_cmd->add_option("--depth", an.depth, "Lift depth for the spectral-radius heuristic");
    an_cmd->add_option("--c", an.c_matrix, "Output map as a JSON nested array");
    an_cmd->add_option("--fopid", an.fopid, "kp,ki,kd,lambda,mu");
    auto* an_wmin = an_cmd->add_option("--omega-min", an.omega_min);
    auto* an_wmax = an_cmd->add_option("--omega-max", an.omega_max);
    auto* an_pts = an_cmd->add_option("--points", an.points);
    an_cmd->add_option("--input", an.input, "Input channel (0-based)");
    an_cmd->add_option("--output", an.output, "Output channel (0-based)");
    an_cmd->add_option("--config", an.config, "JSON file with default option values");
    an_cmd->add_option("--out", an.out, "Output file")->required();

    // identify
    IdentifyArgs id;
    Index id_depth = 0;
    auto* id_cmd = app.add_subcommand("identify", "Estimate orders and spatial matrix from a trajectory");
    id_cmd->add_option("--trajectory", id.trajectory, "Trajectory CSV")->required();
    auto* id_eps = id_cmd->add_option("--epsilon", id.epsilon, "Bisection tolerance");
    auto* id_win = id_cmd->add_option("--window", id.window, "offset,length");
    auto* id_dep = id_cmd->add_option("--depth", id_depth, "Memory depth p (default: full)");
    id_cmd->add_option("--diag", id.diag, "Diagnostics CSV (default <out>.diag.csv)");
    id_cmd->add_option("--config", id.config, "JSON file with default option values");
    id_cmd->add_option("--out", id.out, "Output model JSON")->required();

    // estimate
    EstimateArgs es;
    auto* es_cmd = app.add_subcommand("estimate", "Minimum-energy state estimation");
    es_cmd->add_option("--network", es.network, "Network (or single-term model) JSON")->required();
    es_cmd->add_option("--trajectory", es.trajectory, "Trajectory CSV with y columns")->required();
    es_cmd->add_option("--config", es.config, "Estimator JSON: Q, R, P0, xhat0, depth");
    auto* es_dep = es_cmd->add_option("--depth", es.depth, "Approximation depth v");
    es_cmd->add_option("--out", es.out, "Output estimates CSV")->required();

    // mpc
    MpcArgs mp;
    auto* mp_cmd = app.add_subcommand("mpc", "Closed-loop model predictive control");
    mp_cmd->add_option("--scenario", mp.scenario, "Scenario JSON")->required();
    mp.depth_opt = mp_cmd->add_option("--depth", mp.depth, "Predictive model depth p");
    mp.horizon_opt = mp_cmd->add_option("--horizon", mp.horizon, "Prediction horizon P");
    mp.control_opt = mp_cmd->add_option("--control-horizon", mp.control_horizon, "Control horizon M");
    mp.seed_opt = mp_cmd->add_option("--seed", mp.seed, "Noise seed");
    mp_cmd->add_option("--bounds", mp.bounds, "lo,hi input bounds");
    mp_cmd->add_option("--out", mp.out, "Output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (s->parsed()) {
            if (!sim.config.empty()) {
                Run tmp;
                const json cfg = load_json_file(tmp, sim.config);
                from_config(cfg, s_x0, "x0", sim.x0);
                if (s_x0->count() == 0 && cfg.contains("x0") && cfg.at("x0").is_array()) {
                    std::string joined;
                    for (const auto& e : cfg.at("x0")) joined += (joined.empty() ? "" : ",") + fos::io::format_double(e.get<double>());
                    sim.x0 = joined;
                }
                from_config(cfg, s_steps, "steps", sim.steps);
                from_config(cfg, s_seed, "seed", sim.seed);
                from_config(cfg, s_sigma, "sigma", sim.sigma);
                from_config(cfg, s_msig, "meas_sigma", sim.meas_sigma);
                from_config(cfg, s_dt, "dt", sim.dt);
                from_config(cfg, s_cap, "memory_cap", sim_cap);
            }
            if (s_cap->count() > 0 || sim_cap > 0) sim.memory_cap = sim_cap;
            return cmd_simulate(sim);
        }
        if (an_cmd->parsed()) {
            if (!an.config.empty()) {
                Run tmp;
                const json cfg = load_json_file(tmp, an.config);
                from_config(cfg, an_h, "horizon", an.horizon);
                from_config(cfg, an_d, "depth", an.depth);
                from_config(cfg, an_wmin, "omega_min", an.omega_min);
                from_config(cfg, an_wmax, "omega_max", an.omega_max);
                from_config(cfg, an_pts, "points", an.points);
            }
            return cmd_analyze(an);
        }
        if (id_cmd->parsed()) {
            if (!id.config.empty()) {
                Run tmp;
                const json cfg = load_json_file(tmp, id.config);
                from_config(cfg, id_eps, "epsilon", id.epsilon);
                if (id_win->count() == 0 && cfg.contains("window") && cfg.at("window").is_array()) {
                    const Vector wv = fos::io::vector_from_json(cfg.at("window"), "window");
                    if (wv.size() != 2) throw fos::ParseError("config field 'window' expects [offset, length]");
                    id.window = fos::io::format_double(wv[0]) + "," + fos::io::format_double(wv[1]);
                } else {
                    from_config(cfg, id_win, "window", id.window);
                }
                from_config(cfg, id_dep, "depth", id_depth);
            }
            if (id_dep->count() > 0 || id_depth > 0) id.depth = id_depth;
            return cmd_identify(id);
        }
        if (es_cmd->parsed()) {
            if (!es.config.empty()) {
                Run tmp;
                const json cfg = load_json_file(tmp, es.config);
                from_config(cfg, es_dep, "depth", es.depth);
            }
            return cmd_estimate(es);
        }
        if (mp_cmd->parsed()) return cmd_mpc(mp);
    } catch (const fos::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const fos::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
