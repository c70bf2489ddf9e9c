#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "uwind/config.hpp"
#include "uwind/io.hpp"

namespace uwind {
namespace stage {

namespace fs = std::filesystem;
using nlohmann::json;

template <class F>
void run(const char* name, F&& body) {
    try {
        body();
    } catch (const config_error& e) {
        throw config_error("stage '" + std::string(name) + "': " + e.what());
    } catch (const data_error& e) {
        throw data_error("stage '" + std::string(name) + "': " + e.what());
    } catch (const numeric_error& e) {
        throw numeric_error("stage '" + std::string(name) + "': " + e.what());
    } catch (const std::exception& e) {
        throw data_error("stage '" + std::string(name) + "': " + e.what());
    }
}

inline std::string matrix_filename(int source_sub, int target_sub) {
    return "matrix_s" + std::to_string(source_sub) + "_t" + std::to_string(target_sub) +
           ".csv";
}

inline void save_matrices(const fs::path& dir, const InferenceSet& matrices) {
    fs::create_directories(dir);
    for (const InferenceMatrix& P : matrices.matrices) {
        io::save_matrix_csv(dir / matrix_filename(P.source_sub, P.target_sub), P);
        io::save_uncertainty_csv(dir / ("uncertainty_s" + std::to_string(P.source_sub) +
                                        "_t" + std::to_string(P.target_sub) + ".csv"),
                                 P);
    }
}

inline json trajectory_to_json(const TrajectorySpec& t) {
    return json{{"start_L", {t.start.x, t.start.y, t.start.z}},
                {"end_L", {t.end.x, t.end.y, t.end.z}},
                {"samples", t.samples}};
}

inline OptimizationReport optimize(const PipelineConfig& cfg, const ClusterModel& model,
                                   const InferenceSet& matrices, const Dataset& train,
                                   const fs::path& out) {
    const std::vector<Subdomain> subs = default_subdomains(cfg.length_scale);
    const CandidateSet candidates =
        build_candidate_grid(default_buildings(cfg.length_scale), subs, cfg.length_scale);
    const Trajectory traj = cfg.make_trajectory(subs);
    OptimizationReport report =
        optimize_sensor(model, matrices, train, candidates, traj, cfg.estimator,
                        cfg.components, cfg.threads);
    fs::create_directories(out / "optimize");
    io::save_candidates_csv(out / "optimize" / "candidates.csv", report);

    const SensorSpec& best = candidates.by_id(report.best_id);
    json summary;
    summary["best_id"] = report.best_id;
    summary["best_E_train_percent"] = report.best_e;
    summary["location"] = {best.location.x, best.location.y, best.location.z};
    summary["subdomain"] = best.sub_index;
    summary["settings"] = {{"K", cfg.K},
                           {"affiliation_k", cfg.estimator.affiliation_k},
                           {"u_inf_k", cfg.estimator.u_inf_k},
                           {"component",
                            cfg.components == ErrorComponents::all ? "all" : "x"},
                           {"trajectory", trajectory_to_json(cfg.trajectory)}};
    io::write_text(out / "optimize" / "summary.json", summary.dump(2) + "\n");
    return report;
}

/// Evaluate the chosen candidate on the test set; writes the per-snapshot
/// table and a summary, returns the mean test error (percent).
inline double evaluate(const PipelineConfig& cfg, const ClusterModel& model,
                       const InferenceSet& matrices, const Dataset& train,
                       const Dataset& test, int candidate_id, const fs::path& out) {
    const std::vector<Subdomain> subs = default_subdomains(cfg.length_scale);
    const CandidateSet candidates =
        build_candidate_grid(default_buildings(cfg.length_scale), subs, cfg.length_scale);
    const SensorSpec& sensor = candidates.by_id(candidate_id);
    const SignalLibrary lib = build_signal_library(model, train, sensor);
    const Trajectory traj = cfg.make_trajectory(subs);
    const ErrorTable table =
        average_error(model, matrices, lib, test, traj, cfg.estimator, cfg.components);

    std::string csv = "id,alpha_deg,u_inf_mps,E_percent\n";
    for (std::size_t n = 0; n < table.snapshot_ids.size(); ++n) {
        const Snapshot& snap = test.snapshots[n];
        csv += std::to_string(table.snapshot_ids[n]) + "," + io::fmt(snap.mu.alpha_deg) +
               "," + io::fmt(snap.mu.u_inf) + "," + io::fmt(table.percent[n]) + "\n";
    }
    fs::create_directories(out / "evaluate");
    io::write_text(out / "evaluate" / "test_errors.csv", csv);

    json summary;
    summary["candidate_id"] = candidate_id;
    summary["location"] = {sensor.location.x, sensor.location.y, sensor.location.z};
    summary["subdomain"] = sensor.sub_index;
    summary["E_test_mean_percent"] = table.average;
    summary["n_snapshots"] = table.snapshot_ids.size();
    summary["n_failed"] = table.n_failed;
    io::write_text(out / "evaluate" / "summary.json", summary.dump(2) + "\n");
    return table.average;
}

struct EvaluationRow {
    int id = 0;
    double alpha_deg = 0.0;
    double u_inf = 0.0;
    double e_percent = 0.0;
};

inline std::vector<EvaluationRow> read_evaluation_csv(const fs::path& path) {
    std::istringstream in(io::read_text(path));
    std::string line;
    std::getline(in, line);  // header
    std::vector<EvaluationRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        EvaluationRow r;
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');
        r.id = std::stoi(cell);
        std::getline(ss, cell, ',');
        r.alpha_deg = std::stod(cell);
        std::getline(ss, cell, ',');
        r.u_inf = std::stod(cell);
        std::getline(ss, cell, ',');
        r.e_percent = std::stod(cell);
        rows.push_back(r);
    }
    return rows;
}

} // namespace stage

/// Re-derive every report from the on-disk artifacts of a run directory.
/// Emission is deterministic: deleting reports/ and re-emitting reproduces
/// the same bytes.
inline void emit_reports(const std::filesystem::path& run) {
    namespace fs = std::filesystem;
    using stage::json;

    const fs::path cfg_path = run / "config_resolved.json";
    if (!fs::exists(cfg_path))
        throw data_error("report: missing '" + cfg_path.string() +
                         "' (run the pipeline or gen stage first)");
    const PipelineConfig cfg = config_from_json(io::read_json(cfg_path));

    const fs::path reports = run / "reports";
    fs::create_directories(reports);

    if (!fs::exists(run / "model" / "model.json"))
        throw data_error("report: missing model artifact (run the train stage first)");
    const ClusterModel model = io::load_model(run / "model");
    const io::LoadedDataset train = io::load_dataset(run / "dataset" / "train");

    // inference matrices
    const InferenceSet matrices = build_all_matrices(model);
    for (const InferenceMatrix& P : matrices.matrices)
        io::save_matrix_csv(reports / stage::matrix_filename(P.source_sub, P.target_sub),
                            P);

    const bool have_test = fs::exists(run / "dataset" / "test" / "manifest.json");
    std::optional<io::LoadedDataset> test;
    if (have_test) test = io::load_dataset(run / "dataset" / "test");

    // representation-error tables per subdomain
    auto write_repr = [&](const Dataset& data, const std::string& tag) {
        for (const SubdomainModel& sm : model.subdomains) {
            const RepresentationErrors re =
                representation_error(model, data, sm.sub.index);
            std::string csv = "snapshot_id,representation_error_percent\n";
            for (std::size_t n = 0; n < re.percent.size(); ++n)
                csv += std::to_string(re.snapshot_ids[n]) + "," + io::fmt(re.percent[n]) +
                       "\n";
            csv += "average," + io::fmt(re.average) + "\n";
            io::write_text(reports / ("representation_" + tag + "_sub" +
                                      std::to_string(sm.sub.index) + ".csv"),
                           csv);
        }
    };
    write_repr(train.data, "train");
    if (test) write_repr(test->data, "test");

    // sensor-dependent reports need the optimizer choice and the evaluation
    const fs::path opt_summary_path = run / "optimize" / "summary.json";
    if (!fs::exists(opt_summary_path)) {
        if (cfg.optimize_enabled)
            throw data_error("report: missing optimizer artifacts "
                             "(run the optimize stage first)");
        std::cout << "[report] optimizer disabled: skipping sensor-dependent reports\n";
        return;
    }
    const json opt_summary = io::read_json(opt_summary_path);
    const int best_id = opt_summary.at("best_id").get<int>();

    if (!test) {
        std::cout << "[report] no test dataset: skipping evaluation reports\n";
        return;
    }
    const fs::path eval_path = run / "evaluate" / "test_errors.csv";
    if (!fs::exists(eval_path))
        throw data_error("report: missing evaluation table (run the evaluate stage "
                         "first)");
    const std::vector<stage::EvaluationRow> rows = stage::read_evaluation_csv(eval_path);

    // error vs wind direction
    {
        std::string csv = "alpha_deg,E_percent\n";
        for (const stage::EvaluationRow& r : rows)
            csv += io::fmt(r.alpha_deg) + "," + io::fmt(r.e_percent) + "\n";
        io::write_text(reports / "error_vs_alpha.csv", csv);
    }

    // quantile summary
    double mean = 0.0;
    int n_ok = 0;
    int below20 = 0, below30 = 0, above40 = 0;
    for (const stage::EvaluationRow& r : rows) {
        if (std::isnan(r.e_percent)) continue;
        ++n_ok;
        mean += r.e_percent;
        if (r.e_percent < 20.0) ++below20;
        if (r.e_percent < 30.0) ++below30;
        if (r.e_percent > 40.0) ++above40;
    }
    if (n_ok == 0) throw numeric_error("report: evaluation table has no usable rows");
    mean /= n_ok;
    {
        json q;
        q["n_cases"] = n_ok;
        q["mean_E_percent"] = mean;
        q["fraction_below_20"] = static_cast<double>(below20) / n_ok;
        q["fraction_below_30"] = static_cast<double>(below30) / n_ok;
        q["fraction_above_40"] = static_cast<double>(above40) / n_ok;
        io::write_text(reports / "quantile_summary.json", q.dump(2) + "\n");
    }

    // representative case: test snapshot whose error is closest to the mean,
    // ties to the lowest id
    int case_id = -1;
    double case_e = 0.0;
    double best_gap = std::numeric_limits<double>::infinity();
    for (const stage::EvaluationRow& r : rows) {
        if (std::isnan(r.e_percent)) continue;
        const double gap = std::abs(r.e_percent - mean);
        if (gap < best_gap || (gap == best_gap && r.id < case_id)) {
            best_gap = gap;
            case_id = r.id;
            case_e = r.e_percent;
        }
    }
    const Snapshot* chosen = nullptr;
    for (const Snapshot& s : test->data.snapshots)
        if (s.id == case_id) chosen = &s;
    if (!chosen) throw data_error("report: representative case " +
                                  std::to_string(case_id) + " not in test dataset");

    const std::vector<Subdomain> subs = default_subdomains(cfg.length_scale);
    const CandidateSet candidates = build_candidate_grid(
        default_buildings(cfg.length_scale), subs, cfg.length_scale);
    const SensorSpec& sensor = candidates.by_id(best_id);
    const SignalLibrary lib = build_signal_library(model, train.data, sensor);
    const Vec3 signal = sample_velocity(chosen->field, sensor.location);

    // slice of the truth and of the estimated field at the configured plane
    const double slice_value = cfg.slice_value_L * cfg.length_scale;
    io::save_slice_csv(reports / "slice_true.csv", chosen->field, cfg.slice_axis,
                       slice_value);
    {
        const double u_inf_hat = estimate_u_inf(signal, lib, cfg.estimator.u_inf_k);
        const std::vector<ClusterWeight> weights = affiliate_sensor(
            signal / u_inf_hat, lib, model, cfg.estimator.affiliation_k);
        VelocityField est = VelocityField::zeros(chosen->field.grid);
        const double nan = std::numeric_limits<double>::quiet_NaN();
        for (double& v : est.values) v = nan;
        const GridSpec& g = est.grid;
        int plane = static_cast<int>(std::lround(
            (slice_value - g.origin[cfg.slice_axis]) / g.spacing[cfg.slice_axis]));
        plane = std::clamp(plane, 0, g.dims[cfg.slice_axis] - 1);
        const int nb = g.dims[(cfg.slice_axis + 1) % 3];
        const int nc = g.dims[(cfg.slice_axis + 2) % 3];
        for (int c = 0; c < nc; ++c)
            for (int b = 0; b < nb; ++b) {
                int idx[3];
                idx[cfg.slice_axis] = plane;
                idx[(cfg.slice_axis + 1) % 3] = b;
                idx[(cfg.slice_axis + 2) % 3] = c;
                const Vec3 p = g.node_pos(idx[0], idx[1], idx[2]);
                if (!locate(p, subs)) continue;  // estimable inside subdomains only
                const PointEstimate pe = detail::expectation_at_point(
                    model, matrices, weights, sensor.sub_index, u_inf_hat, p, subs);
                est.set(idx[0], idx[1], idx[2], pe.velocity);
            }
        io::save_slice_csv(reports / "slice_estimate.csv", est, cfg.slice_axis,
                           slice_value);
    }

    // streamwise profile along the trajectory for the representative case
    {
        const Trajectory traj = cfg.make_trajectory(subs);
        const TrajectoryEstimate est =
            estimate_trajectory(model, matrices, lib, signal, traj, cfg.estimator);
        std::string csv = "beta,x,U_plus_true,U_plus_hat\n";
        for (int n = 0; n < traj.n_samples(); ++n) {
            const Vec3& p = traj.points[static_cast<std::size_t>(n)];
            const Vec3 u_true = sample_velocity(chosen->field, p);
            const double u_plus_true = u_true.x / chosen->mu.u_inf;
            const double u_plus_hat =
                est.points[static_cast<std::size_t>(n)].velocity.x / est.u_inf_hat;
            csv += io::fmt(traj.beta(n)) + "," + io::fmt(p.x) + "," +
                   io::fmt(u_plus_true) + "," + io::fmt(u_plus_hat) + "\n";
        }
        io::write_text(reports / "trajectory_profile.csv", csv);
    }

    std::cout << "[report] representative case " << case_id << " (E=" << case_e
              << "%, mean " << mean << "%)\n";
}

} // namespace uwind
