#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwind/estimator.hpp"
#include "uwind/toml.hpp"
#include "uwind/wake.hpp"

namespace uwind {

/// Trajectory endpoints in multiples of L.
struct TrajectorySpec {
    Vec3 start{-2.0, 0.0, 1.0};
    Vec3 end{2.0, 0.0, 1.0};
    int samples = 101;
};

/// Resolved settings for the whole pipeline. Defaults reproduce the reference
/// setup: K = 20 clusters, affiliation k = 2 with a k = 4 incoming-wind kNN,
/// 800/200 snapshots at wind speeds 7.9-20.7 m/s over all directions.
struct PipelineConfig {
    double length_scale = 0.5;  ///< L, m
    std::uint64_t seed = 7;     ///< root seed; stage seeds derive from it

    // generator (grid and ranges in GenConfig units; geometry in L via defaults)
    int m_train = 800;
    int n_test = 200;
    double u_min = 7.9;
    double u_max = 20.7;
    double alpha_min = 0.0;
    double alpha_max = 360.0;
    double reynolds_eps = 0.02;
    double noise_sigma = 0.01;
    Vec3 grid_origin_L{-4.0, -4.0, 0.0};
    Vec3 grid_spacing_L{0.25, 0.25, 0.25};
    std::array<int, 3> grid_dims{33, 33, 25};

    int K = 20;
    EstimatorOptions estimator;  ///< affiliation_k = 2, u_inf_k = 4
    ErrorComponents components = ErrorComponents::all;
    TrajectorySpec trajectory;
    bool optimize_enabled = true;

    int slice_axis = 0;          ///< reports: 0 = x, 1 = y, 2 = z
    double slice_value_L = 0.0;  ///< in multiples of L

    int threads = 1;

    std::uint64_t gen_seed() const { return derive_stream(seed, 0, 10); }
    std::uint64_t cluster_seed() const { return derive_stream(seed, 0, 11); }

    GenConfig gen_config() const {
        GenConfig cfg = GenConfig::defaults(length_scale);
        cfg.m_train = m_train;
        cfg.n_test = n_test;
        cfg.u_min = u_min;
        cfg.u_max = u_max;
        cfg.alpha_min = alpha_min;
        cfg.alpha_max = alpha_max;
        cfg.reynolds_eps = reynolds_eps;
        cfg.noise_sigma = noise_sigma;
        cfg.seed = gen_seed();
        cfg.grid.origin = grid_origin_L * length_scale;
        cfg.grid.spacing = grid_spacing_L * length_scale;
        cfg.grid.dims = grid_dims;
        cfg.validate();
        return cfg;
    }

    Trajectory make_trajectory(std::span<const Subdomain> subs) const {
        return line_trajectory(trajectory.start * length_scale,
                               trajectory.end * length_scale, trajectory.samples, subs);
    }

    void validate() const {
        gen_config();
        if (K < 1) throw config_error("config: K must be >= 1");
        if (estimator.affiliation_k != 1 && estimator.affiliation_k != 2)
            throw config_error("config: affiliation k must be 1 or 2");
        if (estimator.affiliation_k == 2 && K < 4)
            throw config_error("config: affiliation k=2 needs K >= 4 so the "
                               "centroid neighborhood has 3 members");
        if (estimator.u_inf_k < 1) throw config_error("config: u_inf k must be >= 1");
        if (trajectory.samples < 2)
            throw config_error("config: trajectory needs at least 2 samples");
        if (threads < 1) throw config_error("config: threads must be >= 1");
        if (slice_axis < 0 || slice_axis > 2)
            throw config_error("config: slice axis must be 0, 1, or 2");
    }
};

inline ErrorComponents parse_components(const std::string& name) {
    if (name == "all") return ErrorComponents::all;
    if (name == "x") return ErrorComponents::x_only;
    throw config_error("config: component must be 'all' or 'x', got '" + name + "'");
}

inline int parse_axis(const std::string& name) {
    if (name == "x") return 0;
    if (name == "y") return 1;
    if (name == "z") return 2;
    throw config_error("config: slice axis must be x, y, or z, got '" + name + "'");
}

/// Build a PipelineConfig from a parsed TOML table; unknown keys are errors
/// so typos do not silently fall back to defaults.
inline PipelineConfig config_from_toml(const TomlTable& t) {
    static const std::vector<std::string> known = {
        "pipeline.seed",          "pipeline.threads",
        "pipeline.length_scale",  "generator.m_train",
        "generator.n_test",       "generator.u_min",
        "generator.u_max",        "generator.alpha_min",
        "generator.alpha_max",    "generator.reynolds_eps",
        "generator.noise_sigma",  "generator.grid_origin",
        "generator.grid_spacing", "generator.grid_dims",
        "clustering.K",           "estimator.affiliation_k",
        "estimator.u_inf_k",      "estimator.component",
        "trajectory.start",       "trajectory.end",
        "trajectory.samples",     "optimizer.enabled",
        "report.slice_axis",      "report.slice_value"};
    for (const auto& [key, value] : t.all()) {
        bool ok = false;
        for (const std::string& k : known)
            if (k == key) {
                ok = true;
                break;
            }
        if (!ok) throw config_error("config: unknown key '" + key + "'");
    }

    PipelineConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(t.number("pipeline.seed", 7));
    cfg.threads = t.integer("pipeline.threads", 1);
    cfg.length_scale = t.number("pipeline.length_scale", 0.5);

    cfg.m_train = t.integer("generator.m_train", cfg.m_train);
    cfg.n_test = t.integer("generator.n_test", cfg.n_test);
    cfg.u_min = t.number("generator.u_min", cfg.u_min);
    cfg.u_max = t.number("generator.u_max", cfg.u_max);
    cfg.alpha_min = t.number("generator.alpha_min", cfg.alpha_min);
    cfg.alpha_max = t.number("generator.alpha_max", cfg.alpha_max);
    cfg.reynolds_eps = t.number("generator.reynolds_eps", cfg.reynolds_eps);
    cfg.noise_sigma = t.number("generator.noise_sigma", cfg.noise_sigma);

    auto vec3 = [&](const std::string& key, const Vec3& fallback) {
        const std::vector<double> v =
            t.numbers(key, {fallback.x, fallback.y, fallback.z});
        if (v.size() != 3)
            throw config_error("config: '" + key + "' must have 3 entries");
        return Vec3{v[0], v[1], v[2]};
    };
    cfg.grid_origin_L = vec3("generator.grid_origin", cfg.grid_origin_L);
    cfg.grid_spacing_L = vec3("generator.grid_spacing", cfg.grid_spacing_L);
    {
        const std::vector<double> d = t.numbers(
            "generator.grid_dims",
            {double(cfg.grid_dims[0]), double(cfg.grid_dims[1]), double(cfg.grid_dims[2])});
        if (d.size() != 3) throw config_error("config: grid_dims must have 3 entries");
        for (int a = 0; a < 3; ++a) cfg.grid_dims[static_cast<std::size_t>(a)] = static_cast<int>(d[static_cast<std::size_t>(a)]);
    }

    cfg.K = t.integer("clustering.K", cfg.K);
    cfg.estimator.affiliation_k = t.integer("estimator.affiliation_k", 2);
    cfg.estimator.u_inf_k = t.integer("estimator.u_inf_k", 4);
    cfg.components = parse_components(t.text("estimator.component", "all"));

    cfg.trajectory.start = vec3("trajectory.start", cfg.trajectory.start);
    cfg.trajectory.end = vec3("trajectory.end", cfg.trajectory.end);
    cfg.trajectory.samples = t.integer("trajectory.samples", cfg.trajectory.samples);

    cfg.optimize_enabled = t.boolean("optimizer.enabled", true);

    cfg.slice_axis = parse_axis(t.text("report.slice_axis", "x"));
    cfg.slice_value_L = t.number("report.slice_value", 0.0);

    cfg.validate();
    return cfg;
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
    return config_from_toml(parse_toml_file(path));
}

/// Full resolved-settings echo recorded in each run directory; the report
/// stage rebuilds everything it needs from this file plus the artifacts.
inline nlohmann::json config_to_json(const PipelineConfig& cfg) {
    nlohmann::json j;
    j["length_scale_m"] = cfg.length_scale;
    j["seed"] = cfg.seed;
    j["gen_seed"] = cfg.gen_seed();
    j["cluster_seed"] = cfg.cluster_seed();
    j["generator"] = {{"m_train", cfg.m_train},
                      {"n_test", cfg.n_test},
                      {"u_min", cfg.u_min},
                      {"u_max", cfg.u_max},
                      {"alpha_min", cfg.alpha_min},
                      {"alpha_max", cfg.alpha_max},
                      {"reynolds_eps", cfg.reynolds_eps},
                      {"noise_sigma", cfg.noise_sigma},
                      {"grid_origin_L", {cfg.grid_origin_L.x, cfg.grid_origin_L.y, cfg.grid_origin_L.z}},
                      {"grid_spacing_L", {cfg.grid_spacing_L.x, cfg.grid_spacing_L.y, cfg.grid_spacing_L.z}},
                      {"grid_dims", {cfg.grid_dims[0], cfg.grid_dims[1], cfg.grid_dims[2]}}};
    j["clustering"] = {{"K", cfg.K}};
    j["estimator"] = {{"affiliation_k", cfg.estimator.affiliation_k},
                      {"u_inf_k", cfg.estimator.u_inf_k},
                      {"component", cfg.components == ErrorComponents::all ? "all" : "x"}};
    j["trajectory"] = {{"start_L", {cfg.trajectory.start.x, cfg.trajectory.start.y, cfg.trajectory.start.z}},
                       {"end_L", {cfg.trajectory.end.x, cfg.trajectory.end.y, cfg.trajectory.end.z}},
                       {"samples", cfg.trajectory.samples}};
    j["optimizer"] = {{"enabled", cfg.optimize_enabled}};
    j["report"] = {{"slice_axis", cfg.slice_axis}, {"slice_value_L", cfg.slice_value_L}};
    j["threads"] = cfg.threads;
    return j;
}

inline PipelineConfig config_from_json(const nlohmann::json& j) {
    PipelineConfig cfg;
    cfg.length_scale = j.at("length_scale_m").get<double>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    const auto& g = j.at("generator");
    cfg.m_train = g.at("m_train").get<int>();
    cfg.n_test = g.at("n_test").get<int>();
    cfg.u_min = g.at("u_min").get<double>();
    cfg.u_max = g.at("u_max").get<double>();
    cfg.alpha_min = g.at("alpha_min").get<double>();
    cfg.alpha_max = g.at("alpha_max").get<double>();
    cfg.reynolds_eps = g.at("reynolds_eps").get<double>();
    cfg.noise_sigma = g.at("noise_sigma").get<double>();
    for (int a = 0; a < 3; ++a) {
        cfg.grid_origin_L[a] = g.at("grid_origin_L").at(a).get<double>();
        cfg.grid_spacing_L[a] = g.at("grid_spacing_L").at(a).get<double>();
        cfg.grid_dims[static_cast<std::size_t>(a)] = g.at("grid_dims").at(a).get<int>();
    }
    cfg.K = j.at("clustering").at("K").get<int>();
    cfg.estimator.affiliation_k = j.at("estimator").at("affiliation_k").get<int>();
    cfg.estimator.u_inf_k = j.at("estimator").at("u_inf_k").get<int>();
    cfg.components = parse_components(j.at("estimator").at("component").get<std::string>());
    for (int a = 0; a < 3; ++a) {
        cfg.trajectory.start[a] = j.at("trajectory").at("start_L").at(a).get<double>();
        cfg.trajectory.end[a] = j.at("trajectory").at("end_L").at(a).get<double>();
    }
    cfg.trajectory.samples = j.at("trajectory").at("samples").get<int>();
    cfg.optimize_enabled = j.at("optimizer").at("enabled").get<bool>();
    cfg.slice_axis = j.at("report").at("slice_axis").get<int>();
    cfg.slice_value_L = j.at("report").at("slice_value_L").get<double>();
    cfg.threads = j.at("threads").get<int>();
    cfg.validate();
    return cfg;
}

} // namespace uwind
