#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "uwind/config.hpp"
#include "uwind/io.hpp"
#include "uwind/pipeline_stages.hpp"

namespace uwind {

namespace fs = std::filesystem;

/// Run every stage into `out`: gen -> train -> matrices -> optimize ->
/// evaluate -> report. Stage failures abort with the stage name and cause.
/// Reruns with the same config overwrite byte-identically.
inline void run_pipeline(const PipelineConfig& cfg, const fs::path& out) {
    cfg.validate();
    fs::create_directories(out);
    io::write_text(out / "config_resolved.json", config_to_json(cfg).dump(2) + "\n");

    Dataset train, test;
    stage::run("gen", [&] {
        auto [tr, te] = generate_dataset(cfg.gen_config(), cfg.threads);
        train = std::move(tr);
        test = std::move(te);
        io::save_dataset(out / "dataset" / "train", train, cfg.length_scale);
        if (cfg.n_test > 0)
            io::save_dataset(out / "dataset" / "test", test, cfg.length_scale);
        std::cout << "[gen] " << train.size() << " train + " << test.size()
                  << " test snapshots\n";
    });

    ClusterModel model;
    stage::run("train", [&] {
        const std::vector<Subdomain> subs = default_subdomains(cfg.length_scale);
        model = fit_clusters(train, subs, cfg.K, cfg.cluster_seed(), cfg.length_scale,
                             cfg.threads);
        io::save_model(out / "model", model);
        std::cout << "[train] K=" << cfg.K << " clusters per subdomain\n";
    });

    InferenceSet matrices;
    stage::run("matrices", [&] {
        matrices = build_all_matrices(model);
        stage::save_matrices(out / "matrices", matrices);
        std::cout << "[matrices] " << matrices.matrices.size() << " subdomain pairs\n";
    });

    std::optional<OptimizationReport> opt;
    if (cfg.optimize_enabled) {
        stage::run("optimize", [&] {
            opt = stage::optimize(cfg, model, matrices, train, out);
            std::cout << "[optimize] best candidate " << opt->best_id << " at E(train)="
                      << opt->best_e << "%\n";
        });
    } else {
        std::cout << "[optimize] disabled in config: skipping\n";
    }

    if (cfg.n_test > 0 && opt) {
        stage::run("evaluate", [&] {
            const double mean = stage::evaluate(cfg, model, matrices, train, test,
                                                opt->best_id, out);
            std::cout << "[evaluate] E(test)=" << mean << "% at candidate "
                      << opt->best_id << "\n";
        });
    } else if (cfg.n_test == 0) {
        std::cout << "[evaluate] n_test = 0: skipping\n";
    } else {
        std::cout << "[evaluate] no optimized sensor: skipping\n";
    }

    // the report stage re-derives everything from disk artifacts
    train = Dataset{};
    test = Dataset{};
    stage::run("report", [&] { emit_reports(out); });
}

} // namespace uwind
