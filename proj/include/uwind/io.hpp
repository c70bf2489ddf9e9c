#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "uwind/cluster.hpp"
#include "uwind/field.hpp"
#include "uwind/inference.hpp"
#include "uwind/sensor_opt.hpp"
#include "uwind/toml.hpp"

namespace uwind {

static_assert(std::endian::native == std::endian::little,
              "on-disk field format is little-endian");

namespace io {

using nlohmann::json;
namespace fs = std::filesystem;

/// Round-trip-exact float formatting used by every CSV writer, so re-emitted
/// reports are byte-identical.
inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("io: cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw data_error("io: write failed for '" + path.string() + "'");
}

inline std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("io: cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline json read_json(const fs::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw data_error("io: bad JSON in '" + path.string() + "': " + e.what());
    }
}

// raw field blobs: 64-bit floats, node-major x-fastest, 3 components per node

inline void write_field_blob(const fs::path& path, const std::vector<double>& values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw data_error("io: cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!out) throw data_error("io: write failed for '" + path.string() + "'");
}

inline std::vector<double> read_field_blob(const fs::path& path, std::size_t count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw data_error("io: cannot open '" + path.string() + "'");
    std::vector<double> values(count);
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (static_cast<std::size_t>(in.gcount()) != count * sizeof(double))
        throw data_error("io: '" + path.string() + "' is shorter than expected");
    char extra;
    if (in.read(&extra, 1))
        throw data_error("io: '" + path.string() + "' is longer than expected");
    return values;
}

inline json grid_to_json(const GridSpec& g) {
    return json{{"origin", {g.origin.x, g.origin.y, g.origin.z}},
                {"spacing", {g.spacing.x, g.spacing.y, g.spacing.z}},
                {"dims", {g.dims[0], g.dims[1], g.dims[2]}}};
}

inline GridSpec grid_from_json(const json& j) {
    GridSpec g;
    for (int a = 0; a < 3; ++a) {
        g.origin[a] = j.at("origin").at(a).get<double>();
        g.spacing[a] = j.at("spacing").at(a).get<double>();
        g.dims[a] = j.at("dims").at(a).get<int>();
    }
    g.validate();
    return g;
}

inline std::string snapshot_filename(int id) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "snap_%05d.bin", id);
    return buf;
}

/// Dataset directory layout: manifest.json + one raw field file per snapshot.
inline void save_dataset(const fs::path& dir, const Dataset& data, double length_scale) {
    data.validate();
    fs::create_directories(dir);
    json manifest;
    manifest["length_scale_m"] = length_scale;
    manifest["grid"] = grid_to_json(data.grid());
    manifest["role"] = data.role == DatasetRole::train ? "train" : "test";
    json list = json::array();
    for (const Snapshot& s : data.snapshots) {
        const std::string file = snapshot_filename(s.id);
        list.push_back({{"id", s.id},
                        {"u_inf_mps", s.mu.u_inf},
                        {"alpha_deg", s.mu.alpha_deg},
                        {"field_file", file}});
        write_field_blob(dir / file, s.field.values);
    }
    manifest["snapshots"] = std::move(list);
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

struct LoadedDataset {
    Dataset data;
    double length_scale = 0.0;
};

inline LoadedDataset load_dataset(const fs::path& dir) {
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path))
        throw data_error("io: no dataset manifest at '" + manifest_path.string() + "'");
    const json manifest = read_json(manifest_path);
    LoadedDataset out;
    out.length_scale = manifest.at("length_scale_m").get<double>();
    const GridSpec grid = grid_from_json(manifest.at("grid"));
    out.data.role = manifest.at("role").get<std::string>() == "test" ? DatasetRole::test
                                                                     : DatasetRole::train;
    for (const json& entry : manifest.at("snapshots")) {
        Snapshot s;
        s.id = entry.at("id").get<int>();
        s.mu.u_inf = entry.at("u_inf_mps").get<double>();
        s.mu.alpha_deg = entry.at("alpha_deg").get<double>();
        s.field.grid = grid;
        s.field.values =
            read_field_blob(dir / entry.at("field_file").get<std::string>(),
                            3 * grid.n_nodes());
        s.field.validate();
        out.data.snapshots.push_back(std::move(s));
    }
    out.data.validate();
    return out;
}

/// Model directory layout: model.json + one centroid blob per subdomain
/// (K centroid fields concatenated, dataset float format).
inline void save_model(const fs::path& dir, const ClusterModel& model) {
    fs::create_directories(dir);
    json header;
    header["K"] = model.K;
    header["seed"] = model.seed;
    header["length_scale_m"] = model.length_scale;
    header["grid"] = grid_to_json(model.grid);
    header["training_digest"] = model.training_digest;
    header["training_ids"] = model.training_ids;
    json subs = json::array();
    for (const SubdomainModel& sm : model.subdomains) {
        const std::string file = "centroids_sub" + std::to_string(sm.sub.index) + ".bin";
        json sj;
        sj["index"] = sm.sub.index;
        sj["box"] = {{"lo", {sm.sub.box.lo.x, sm.sub.box.lo.y, sm.sub.box.lo.z}},
                     {"hi", {sm.sub.box.hi.x, sm.sub.box.hi.y, sm.sub.box.hi.z}}};
        sj["centroid_grid"] = grid_to_json(sm.centroids.front().grid);
        sj["centroid_file"] = file;
        sj["affiliations"] = sm.affiliations;
        subs.push_back(std::move(sj));

        std::vector<double> blob;
        blob.reserve(model.K * sm.centroids.front().values.size());
        for (const VelocityField& c : sm.centroids)
            blob.insert(blob.end(), c.values.begin(), c.values.end());
        write_field_blob(dir / file, blob);
    }
    header["subdomains"] = std::move(subs);
    write_text(dir / "model.json", header.dump(2) + "\n");
}

inline ClusterModel load_model(const fs::path& dir) {
    const fs::path header_path = dir / "model.json";
    if (!fs::exists(header_path))
        throw data_error("io: no model at '" + header_path.string() + "'");
    const json header = read_json(header_path);
    ClusterModel model;
    model.K = header.at("K").get<int>();
    model.seed = header.at("seed").get<std::uint64_t>();
    model.length_scale = header.at("length_scale_m").get<double>();
    model.grid = grid_from_json(header.at("grid"));
    model.training_digest = header.at("training_digest").get<std::string>();
    model.training_ids = header.at("training_ids").get<std::vector<int>>();
    for (const json& sj : header.at("subdomains")) {
        SubdomainModel sm;
        sm.sub.index = sj.at("index").get<int>();
        for (int a = 0; a < 3; ++a) {
            sm.sub.box.lo[a] = sj.at("box").at("lo").at(a).get<double>();
            sm.sub.box.hi[a] = sj.at("box").at("hi").at(a).get<double>();
        }
        const GridSpec cgrid = grid_from_json(sj.at("centroid_grid"));
        sm.affiliations = sj.at("affiliations").get<std::vector<int>>();
        const std::size_t per = 3 * cgrid.n_nodes();
        std::vector<double> blob = read_field_blob(
            dir / sj.at("centroid_file").get<std::string>(),
            per * static_cast<std::size_t>(model.K));
        for (int c = 0; c < model.K; ++c) {
            VelocityField f;
            f.grid = cgrid;
            f.dimensionless = true;
            f.values.assign(blob.begin() + static_cast<std::ptrdiff_t>(c * per),
                            blob.begin() + static_cast<std::ptrdiff_t>((c + 1) * per));
            sm.centroids.push_back(std::move(f));
        }
        model.subdomains.push_back(std::move(sm));
    }
    return model;
}

/// K x K matrix CSV: one header line naming the subdomain pair, then row j
/// holds P(target j | source i) for i = 1..K.
inline void save_matrix_csv(const fs::path& path, const InferenceMatrix& P) {
    std::string text = "# inference matrix, source=Omega_" +
                       std::to_string(P.source_sub) + " target=Omega_" +
                       std::to_string(P.target_sub) + " K=" + std::to_string(P.K) +
                       ", entry(row j, col i) = P(target j | source i)\n";
    for (int j = 0; j < P.K; ++j) {
        for (int i = 0; i < P.K; ++i) {
            if (i) text += ",";
            text += fmt(P.at(j, i));
        }
        text += "\n";
    }
    write_text(path, text);
}

inline void save_uncertainty_csv(const fs::path& path, const InferenceMatrix& P) {
    const ColumnUncertainty u = column_uncertainty(P);
    std::string text = "source_cluster,shannon_entropy,kl_from_uniform\n";
    for (int i = 0; i < P.K; ++i)
        text += std::to_string(i + 1) + "," + fmt(u.shannon[static_cast<std::size_t>(i)]) + "," +
                fmt(u.kl_from_uniform[static_cast<std::size_t>(i)]) + "\n";
    text += "mean," + fmt(u.mean_shannon) + "," + fmt(u.mean_kl) + "\n";
    write_text(path, text);
}

/// Slice CSV: x,y,z,u,v,w rows for the node plane nearest to `value` along
/// `axis` (0 = x, 1 = y, 2 = z).
inline void save_slice_csv(const fs::path& path, const VelocityField& field, int axis,
                           double value) {
    if (axis < 0 || axis > 2) throw config_error("slice: axis must be 0, 1, or 2");
    const GridSpec& g = field.grid;
    int plane = static_cast<int>(
        std::lround((value - g.origin[axis]) / g.spacing[axis]));
    plane = std::clamp(plane, 0, g.dims[axis] - 1);
    std::string text = "x,y,z,u,v,w\n";
    const int nb = g.dims[(axis + 1) % 3];
    const int nc = g.dims[(axis + 2) % 3];
    for (int c = 0; c < nc; ++c)
        for (int b = 0; b < nb; ++b) {
            int idx[3];
            idx[axis] = plane;
            idx[(axis + 1) % 3] = b;
            idx[(axis + 2) % 3] = c;
            const Vec3 p = g.node_pos(idx[0], idx[1], idx[2]);
            const Vec3 u = field.at(idx[0], idx[1], idx[2]);
            text += fmt(p.x) + "," + fmt(p.y) + "," + fmt(p.z) + "," + fmt(u.x) + "," +
                    fmt(u.y) + "," + fmt(u.z) + "\n";
        }
    write_text(path, text);
}

/// Candidate table CSV for the optimizer sweep.
inline void save_candidates_csv(const fs::path& path, const OptimizationReport& report) {
    std::string text = "id,x,y,z,subdomain,E_train_percent\n";
    for (const CandidateResult& r : report.table)
        text += std::to_string(r.id) + "," + fmt(r.location.x) + "," +
                fmt(r.location.y) + "," + fmt(r.location.z) + "," +
                std::to_string(r.sub_index) + "," + fmt(r.e_train) + "\n";
    write_text(path, text);
}

/// One-row sensor signal CSV (u,v,w in m/s), header optional.
inline Vec3 read_signal_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw data_error("io: cannot open signal file '" + path.string() + "'");
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = detail::toml_trim(line);
        if (t.empty()) continue;
        std::stringstream ss(t);
        std::string cell;
        std::vector<double> vals;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                const double v = std::stod(detail::toml_trim(cell), &used);
                vals.push_back(v);
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) continue;  // header row
        if (vals.size() != 3)
            throw data_error("io: signal file must have 3 columns u,v,w");
        return {vals[0], vals[1], vals[2]};
    }
    throw data_error("io: no signal row in '" + path.string() + "'");
}

} // namespace io
} // namespace uwind
