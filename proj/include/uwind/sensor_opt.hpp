#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "uwind/estimator.hpp"
#include "uwind/parallel.hpp"
#include "uwind/wake.hpp"

namespace uwind {

/// 75 candidate probe locations: per building, 5 xy-projections -- the four
/// corner offsets (-,-), (+,-), center, (-,+), (+,+) at +-0.5 L from the
/// building center -- times 5 height levels {base, base+0.1L, ..., base+0.4L}
/// with base = building height + 0.2 L. Ids are 1-based, grouped by subdomain.
struct CandidateSet {
    std::vector<SensorSpec> candidates;  ///< id = position + 1

    int size() const { return static_cast<int>(candidates.size()); }
    const SensorSpec& by_id(int id) const {
        if (id < 1 || id > size())
            throw config_error("candidate id out of range: " + std::to_string(id));
        return candidates[static_cast<std::size_t>(id - 1)];
    }
};

inline CandidateSet build_candidate_grid(std::span<const BuildingSpec> buildings,
                                         std::span<const Subdomain> subs, double L) {
    if (buildings.size() != subs.size())
        throw config_error("candidate grid: need one subdomain per building");
    CandidateSet set;
    const double off[5][2] = {
        {-0.5, -0.5}, {0.5, -0.5}, {0.0, 0.0}, {-0.5, 0.5}, {0.5, 0.5}};
    for (std::size_t b = 0; b < buildings.size(); ++b) {
        const BuildingSpec& bld = buildings[b];
        const double base = bld.height + 0.2 * L;
        for (int level = 0; level < 5; ++level)
            for (int pos = 0; pos < 5; ++pos) {
                const Vec3 loc{bld.center_x + off[pos][0] * L,
                               bld.center_y + off[pos][1] * L,
                               base + 0.1 * L * level};
                const Subdomain& sub = subs[b];
                if (!sub.box.contains(loc))
                    throw data_error("candidate grid: candidate at (" +
                                     std::to_string(loc.x) + ", " +
                                     std::to_string(loc.y) + ", " +
                                     std::to_string(loc.z) +
                                     ") lies outside subdomain " +
                                     std::to_string(sub.index));
                set.candidates.push_back({loc, sub.index});
            }
    }
    return set;
}

struct CandidateResult {
    int id = 0;
    Vec3 location;
    int sub_index = 0;
    double e_train = 0.0;  ///< percent
};

struct OptimizationReport {
    std::vector<CandidateResult> table;  ///< ordered by candidate id
    int best_id = 0;
    double best_e = 0.0;
    int K = 0;
    EstimatorOptions opts;
};

/// Exhaustive sweep: average training-set estimation error for every
/// candidate, argmin with ties to the lowest id. Candidate evaluations are
/// independent, so threaded sweeps reproduce the serial table exactly.
inline OptimizationReport optimize_sensor(const ClusterModel& model,
                                          const InferenceSet& matrices,
                                          const Dataset& train,
                                          const CandidateSet& candidates,
                                          const Trajectory& traj,
                                          const EstimatorOptions& opts = {},
                                          ErrorComponents comps = ErrorComponents::all,
                                          int threads = 1) {
    if (candidates.size() == 0) throw config_error("optimize: no candidates");
    OptimizationReport report;
    report.K = model.K;
    report.opts = opts;
    report.table.resize(static_cast<std::size_t>(candidates.size()));
    parallel_for(candidates.size(), threads, [&](int c) {
        const SensorSpec& sensor = candidates.candidates[static_cast<std::size_t>(c)];
        const SignalLibrary lib = build_signal_library(model, train, sensor);
        const ErrorTable et = average_error(model, matrices, lib, train, traj, opts, comps);
        report.table[static_cast<std::size_t>(c)] =
            CandidateResult{c + 1, sensor.location, sensor.sub_index, et.average};
    });
    report.best_id = report.table.front().id;
    report.best_e = report.table.front().e_train;
    for (const CandidateResult& r : report.table)
        if (r.e_train < report.best_e) {
            report.best_e = r.e_train;
            report.best_id = r.id;
        }
    return report;
}

} // namespace uwind
