// uwind: cluster-based probabilistic wind estimation around a building
// complex. Subcommands cover the full offline/online pipeline; see README.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uwind/config.hpp"
#include "uwind/io.hpp"
#include "uwind/pipeline.hpp"

namespace fs = std::filesystem;
using namespace uwind;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> K;
    std::optional<int> knn_affiliation;
    std::optional<int> threads;
    std::optional<std::string> component;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_out = true) {
    cmd->add_option("--config", flags.config_path, "TOML config file");
    if (with_out) cmd->add_option("--out", flags.out_dir, "output directory")->required();
    cmd->add_option("--seed", flags.seed, "root seed override");
    cmd->add_option("--K", flags.K, "clusters per subdomain");
    cmd->add_option("--knn-affiliation", flags.knn_affiliation,
                    "sensor affiliation neighbors (1 or 2)");
    cmd->add_option("--threads", flags.threads, "worker cap");
    cmd->add_option("--component", flags.component, "error components: all or x");
}

PipelineConfig resolve_config(const CommonFlags& flags) {
    PipelineConfig cfg = flags.config_path.empty()
                             ? PipelineConfig{}
                             : load_pipeline_config(flags.config_path);
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.K) cfg.K = *flags.K;
    if (flags.knn_affiliation) cfg.estimator.affiliation_k = *flags.knn_affiliation;
    if (flags.threads) cfg.threads = *flags.threads;
    if (flags.component) cfg.components = parse_components(*flags.component);
    cfg.validate();
    return cfg;
}

int run_gen(const CommonFlags& flags) {
    const PipelineConfig cfg = resolve_config(flags);
    auto [train, test] = generate_dataset(cfg.gen_config(), cfg.threads);
    io::save_dataset(fs::path(flags.out_dir) / "train", train, cfg.length_scale);
    if (cfg.n_test > 0)
        io::save_dataset(fs::path(flags.out_dir) / "test", test, cfg.length_scale);
    std::cout << "wrote " << train.size() << " train + " << test.size()
              << " test snapshots to " << flags.out_dir << "\n";
    return 0;
}

int run_train(const CommonFlags& flags, const std::string& data_dir) {
    const PipelineConfig cfg = resolve_config(flags);
    const io::LoadedDataset loaded = io::load_dataset(data_dir);
    const std::vector<Subdomain> subs = default_subdomains(loaded.length_scale);
    const ClusterModel model = fit_clusters(loaded.data, subs, cfg.K, cfg.cluster_seed(),
                                            loaded.length_scale, cfg.threads);
    io::save_model(flags.out_dir, model);
    std::cout << "wrote model (K=" << cfg.K << ") to " << flags.out_dir << "\n";
    return 0;
}

int run_matrices(const CommonFlags& flags, const std::string& model_dir) {
    const ClusterModel model = io::load_model(model_dir);
    const InferenceSet matrices = build_all_matrices(model);
    stage::save_matrices(flags.out_dir, matrices);
    std::cout << "wrote " << matrices.matrices.size() << " matrices to "
              << flags.out_dir << "\n";
    return 0;
}

int run_optimize(const CommonFlags& flags, const std::string& model_dir,
                 const std::string& data_dir) {
    PipelineConfig cfg = resolve_config(flags);
    const ClusterModel model = io::load_model(model_dir);
    const io::LoadedDataset train = io::load_dataset(data_dir);
    cfg.length_scale = train.length_scale;
    const InferenceSet matrices = build_all_matrices(model);
    const OptimizationReport report =
        stage::optimize(cfg, model, matrices, train.data, flags.out_dir);
    std::cout << "best candidate " << report.best_id << " E(train)=" << report.best_e
              << "%\n";
    return 0;
}

int run_evaluate(const CommonFlags& flags, const std::string& model_dir,
                 const std::string& train_dir, const std::string& test_dir,
                 int candidate_id) {
    PipelineConfig cfg = resolve_config(flags);
    const ClusterModel model = io::load_model(model_dir);
    const io::LoadedDataset train = io::load_dataset(train_dir);
    const io::LoadedDataset test = io::load_dataset(test_dir);
    cfg.length_scale = train.length_scale;
    const InferenceSet matrices = build_all_matrices(model);
    const double mean = stage::evaluate(cfg, model, matrices, train.data, test.data,
                                        candidate_id, flags.out_dir);
    std::cout << "E(test)=" << mean << "% at candidate " << candidate_id << "\n";
    return 0;
}

int run_estimate(const CommonFlags& flags, const std::string& model_dir,
                 const std::string& train_dir, const std::string& signal_file,
                 const std::vector<double>& sensor_xyz, int candidate_id,
                 const std::vector<double>& traj_start,
                 const std::vector<double>& traj_end, int traj_samples,
                 const std::string& out_csv) {
    PipelineConfig cfg = resolve_config(flags);
    const ClusterModel model = io::load_model(model_dir);
    const io::LoadedDataset train = io::load_dataset(train_dir);
    cfg.length_scale = train.length_scale;
    const std::vector<Subdomain> subs = default_subdomains(cfg.length_scale);

    SensorSpec sensor;
    if (!sensor_xyz.empty()) {
        if (sensor_xyz.size() != 3)
            throw config_error("--sensor needs 3 coordinates (meters)");
        sensor = make_sensor({sensor_xyz[0], sensor_xyz[1], sensor_xyz[2]}, subs);
    } else if (candidate_id > 0) {
        const CandidateSet candidates = build_candidate_grid(
            default_buildings(cfg.length_scale), subs, cfg.length_scale);
        sensor = candidates.by_id(candidate_id);
    } else {
        throw config_error("estimate: give --sensor x,y,z or --candidate ID");
    }

    if (traj_start.size() != 3 || traj_end.size() != 3)
        throw config_error("--traj-start/--traj-end need 3 coordinates (in L units)");
    cfg.trajectory.start = {traj_start[0], traj_start[1], traj_start[2]};
    cfg.trajectory.end = {traj_end[0], traj_end[1], traj_end[2]};
    cfg.trajectory.samples = traj_samples;

    const Vec3 signal = io::read_signal_csv(signal_file);
    const InferenceSet matrices = build_all_matrices(model);
    const SignalLibrary lib = build_signal_library(model, train.data, sensor);
    const Trajectory traj = cfg.make_trajectory(subs);
    const TrajectoryEstimate est =
        estimate_trajectory(model, matrices, lib, signal, traj, cfg.estimator);

    std::string csv = "beta,x,y,z,u_hat,v_hat,w_hat,entropy_of_q\n";
    for (int n = 0; n < traj.n_samples(); ++n) {
        const Vec3& p = traj.points[static_cast<std::size_t>(n)];
        const PointEstimate& pe = est.points[static_cast<std::size_t>(n)];
        csv += io::fmt(traj.beta(n)) + "," + io::fmt(p.x) + "," + io::fmt(p.y) + "," +
               io::fmt(p.z) + "," + io::fmt(pe.velocity.x) + "," +
               io::fmt(pe.velocity.y) + "," + io::fmt(pe.velocity.z) + "," +
               io::fmt(shannon_entropy(pe.q)) + "\n";
    }
    io::write_text(out_csv, csv);
    std::cout << "wrote " << traj.n_samples() << " trajectory estimates to " << out_csv
              << " (U_inf_hat=" << est.u_inf_hat << " m/s)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cluster-based probabilistic wind estimation toolkit"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string data_dir, model_dir, train_dir, test_dir, run_dir, signal_file, out_csv;
    std::vector<double> sensor_xyz;
    std::vector<double> traj_start = {-2.0, 0.0, 1.0};
    std::vector<double> traj_end = {2.0, 0.0, 1.0};
    int traj_samples = 101;
    int candidate_id = 0;

    CLI::App* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    add_common(gen, flags);

    CLI::App* train = app.add_subcommand("train", "fit the cluster model");
    add_common(train, flags);
    train->add_option("--data", data_dir, "dataset directory")->required();

    CLI::App* matrices = app.add_subcommand("matrices", "export inference matrices");
    add_common(matrices, flags);
    matrices->add_option("--model", model_dir, "model directory")->required();

    CLI::App* optimize = app.add_subcommand("optimize", "exhaustive sensor placement");
    add_common(optimize, flags);
    optimize->add_option("--model", model_dir, "model directory")->required();
    optimize->add_option("--data", data_dir, "training dataset directory")->required();

    CLI::App* evaluate = app.add_subcommand("evaluate", "test-set error at a sensor");
    add_common(evaluate, flags);
    evaluate->add_option("--model", model_dir, "model directory")->required();
    evaluate->add_option("--train", train_dir, "training dataset directory")->required();
    evaluate->add_option("--test", test_dir, "test dataset directory")->required();
    evaluate->add_option("--candidate", candidate_id, "candidate sensor id")->required();

    CLI::App* estimate = app.add_subcommand(
        "estimate", "velocity along a trajectory from one sensor signal");
    add_common(estimate, flags, false);
    estimate->add_option("--model", model_dir, "model directory")->required();
    estimate->add_option("--train", train_dir, "training dataset directory")->required();
    estimate->add_option("--signal", signal_file, "CSV with one u,v,w row (m/s)")
        ->required();
    estimate->add_option("--sensor", sensor_xyz, "sensor location x,y,z in meters")
        ->delimiter(',');
    estimate->add_option("--candidate", candidate_id, "candidate sensor id");
    estimate->add_option("--traj-start", traj_start, "trajectory start (L units)")
        ->delimiter(',');
    estimate->add_option("--traj-end", traj_end, "trajectory end (L units)")
        ->delimiter(',');
    estimate->add_option("--traj-samples", traj_samples, "trajectory samples");
    estimate->add_option("--out", out_csv, "output CSV path")->required();

    CLI::App* report = app.add_subcommand("report", "emit reports from run artifacts");
    report->add_option("--run", run_dir, "pipeline run directory")->required();

    CLI::App* pipeline =
        app.add_subcommand("pipeline", "run gen/train/matrices/optimize/evaluate/report");
    add_common(pipeline, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) return run_gen(flags);
        if (train->parsed()) return run_train(flags, data_dir);
        if (matrices->parsed()) return run_matrices(flags, model_dir);
        if (optimize->parsed()) return run_optimize(flags, model_dir, data_dir);
        if (evaluate->parsed())
            return run_evaluate(flags, model_dir, train_dir, test_dir, candidate_id);
        if (estimate->parsed())
            return run_estimate(flags, model_dir, train_dir, signal_file, sensor_xyz,
                                candidate_id, traj_start, traj_end, traj_samples,
                                out_csv);
        if (report->parsed()) {
            emit_reports(run_dir);
            return 0;
        }
        if (pipeline->parsed()) {
            const PipelineConfig cfg = resolve_config(flags);
            run_pipeline(cfg, flags.out_dir);
            return 0;
        }
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
