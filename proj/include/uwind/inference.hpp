#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "uwind/cluster.hpp"
#include "uwind/errors.hpp"

namespace uwind {

/// Column-stochastic K x K matrix of conditional probabilities:
/// at(j, i) = P(target cluster j | source cluster i).
struct InferenceMatrix {
    int source_sub = 0;
    int target_sub = 0;
    int K = 0;
    std::vector<double> p;  ///< row-major, row = target cluster j

    double at(int j, int i) const { return p[static_cast<std::size_t>(j) * K + i]; }
    double& at(int j, int i) { return p[static_cast<std::size_t>(j) * K + i]; }
};

/// Count-based build from raw affiliation sequences. A source cluster with no
/// members leaves its column all-zero; callers that require the full
/// column-stochastic invariant must guarantee non-empty source clusters.
inline InferenceMatrix inference_from_affiliations(std::span<const int> k_src,
                                                   std::span<const int> k_tgt, int K,
                                                   int source_sub = 0,
                                                   int target_sub = 0) {
    if (k_src.size() != k_tgt.size())
        throw data_error("inference: affiliation sequences differ in length");
    if (k_src.empty()) throw data_error("inference: no training affiliations");
    InferenceMatrix P;
    P.source_sub = source_sub;
    P.target_sub = target_sub;
    P.K = K;
    P.p.assign(static_cast<std::size_t>(K) * K, 0.0);
    std::vector<double> col_count(static_cast<std::size_t>(K), 0.0);
    for (std::size_t m = 0; m < k_src.size(); ++m) {
        const int i = k_src[m];
        const int j = k_tgt[m];
        if (i < 0 || i >= K || j < 0 || j >= K)
            throw data_error("inference: affiliation out of range for K=" +
                             std::to_string(K));
        P.at(j, i) += 1.0;
        col_count[static_cast<std::size_t>(i)] += 1.0;
    }
    for (int i = 0; i < K; ++i) {
        const double denom = col_count[static_cast<std::size_t>(i)];
        if (denom == 0.0) continue;
        for (int j = 0; j < K; ++j) P.at(j, i) /= denom;
    }
    return P;
}

/// Conditional-probability matrix between two subdomains of a fitted model.
/// Every source cluster is non-empty by the model invariant, so all columns
/// sum to one.
inline InferenceMatrix build_inference_matrix(const ClusterModel& model,
                                              int source_sub, int target_sub) {
    const SubdomainModel& src = model.subdomain(source_sub);
    const SubdomainModel& tgt = model.subdomain(target_sub);
    std::vector<int> members(static_cast<std::size_t>(model.K), 0);
    for (int a : src.affiliations) ++members[static_cast<std::size_t>(a)];
    for (int i = 0; i < model.K; ++i)
        if (members[static_cast<std::size_t>(i)] == 0)
            throw data_error("inference: model invariant violated, source cluster " +
                             std::to_string(i) + " of subdomain " +
                             std::to_string(source_sub) + " is empty");
    return inference_from_affiliations(src.affiliations, tgt.affiliations, model.K,
                                       source_sub, target_sub);
}

/// All ordered source->target pairs of a model (identity pairs excluded).
struct InferenceSet {
    std::vector<InferenceMatrix> matrices;

    const InferenceMatrix* find(int source_sub, int target_sub) const {
        for (const InferenceMatrix& m : matrices)
            if (m.source_sub == source_sub && m.target_sub == target_sub) return &m;
        return nullptr;
    }
};

inline InferenceSet build_all_matrices(const ClusterModel& model) {
    InferenceSet set;
    for (const SubdomainModel& a : model.subdomains)
        for (const SubdomainModel& b : model.subdomains)
            if (a.sub.index != b.sub.index)
                set.matrices.push_back(
                    build_inference_matrix(model, a.sub.index, b.sub.index));
    return set;
}

/// q_j = sum_i weights_i * P(j|i). Weights must be a distribution.
inline std::vector<double> propagate(std::span<const double> weights,
                                     const InferenceMatrix& P) {
    if (static_cast<int>(weights.size()) != P.K)
        throw data_error("propagate: weight length != K");
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw data_error("propagate: negative weight");
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9)
        throw data_error("propagate: weights must sum to 1, got " +
                         std::to_string(total));
    std::vector<double> q(static_cast<std::size_t>(P.K), 0.0);
    for (int j = 0; j < P.K; ++j) {
        double acc = 0.0;
        for (int i = 0; i < P.K; ++i) acc += weights[static_cast<std::size_t>(i)] * P.at(j, i);
        q[static_cast<std::size_t>(j)] = acc;
    }
    return q;
}

/// Shannon entropy of a distribution, with 0 * ln 0 = 0.
inline double shannon_entropy(std::span<const double> q) {
    double h = 0.0;
    for (double v : q)
        if (v > 0.0) h -= v * std::log(v);
    return h;
}

struct ColumnUncertainty {
    std::vector<double> shannon;  ///< per source cluster
    std::vector<double> kl_from_uniform;
    double mean_shannon = 0.0;
    double mean_kl = 0.0;
};

/// Per-source-cluster entropy H_i = -sum_j p_ji ln p_ji and KL divergence
/// from uniform KL_i = ln K - H_i, plus matrix-level means.
inline ColumnUncertainty column_uncertainty(const InferenceMatrix& P) {
    ColumnUncertainty out;
    const double lnK = std::log(static_cast<double>(P.K));
    out.shannon.reserve(static_cast<std::size_t>(P.K));
    out.kl_from_uniform.reserve(static_cast<std::size_t>(P.K));
    for (int i = 0; i < P.K; ++i) {
        double h = 0.0;
        for (int j = 0; j < P.K; ++j) {
            const double v = P.at(j, i);
            if (v > 0.0) h -= v * std::log(v);
        }
        out.shannon.push_back(h);
        out.kl_from_uniform.push_back(lnK - h);
        out.mean_shannon += h;
        out.mean_kl += lnK - h;
    }
    out.mean_shannon /= static_cast<double>(P.K);
    out.mean_kl /= static_cast<double>(P.K);
    return out;
}

} // namespace uwind
