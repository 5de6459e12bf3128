#include "lipdyn/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>

namespace lipdyn {

std::string format_double(double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(const std::string& data) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(data)));
    return std::string(buf);
}

Json to_json(const Vec& v) {
    Json a = Json::array();
    for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Json to_json(const Mat& m) {
    Json rows = Json::array();
    for (int i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

Vec vec_from_json(const Json& j) {
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<int>(i)] = j[i].get<double>();
    return v;
}

Mat mat_from_json(const Json& j) {
    if (j.empty()) return Mat(0, 0);
    Mat m(j.size(), j[0].size());
    for (std::size_t i = 0; i < j.size(); ++i)
        for (std::size_t k = 0; k < j[i].size(); ++k)
            m(static_cast<int>(i), static_cast<int>(k)) = j[i][k].get<double>();
    return m;
}

Json graph_to_json(const LipschitzGraph& g) {
    Json j;
    j["base_point"] = to_json(g.base_point);
    j["direction"] = to_string(g.direction);
    j["rho"] = g.rho;
    j["radius"] = g.grid.radius;
    j["nodes_per_axis"] = g.grid.nodes_per_axis;
    j["codomain_dim"] = g.codomain_dim;
    j["lip_cert"] = g.lip_cert;
    Json vals = Json::array();
    for (const auto& v : g.values) vals.push_back(to_json(v));
    j["values"] = vals;
    return j;
}

LipschitzGraph graph_from_json(const Json& j) {
    LipschitzGraph g;
    g.base_point = vec_from_json(j.at("base_point"));
    g.direction = direction_from_string(j.at("direction").get<std::string>());
    g.rho = j.at("rho").get<double>();
    g.grid.radius = j.at("radius").get<double>();
    g.grid.nodes_per_axis = j.at("nodes_per_axis").get<std::vector<int>>();
    g.codomain_dim = j.at("codomain_dim").get<int>();
    g.lip_cert = j.at("lip_cert").get<double>();
    for (const auto& v : j.at("values")) g.values.push_back(vec_from_json(v));
    g.validate();
    return g;
}

Json split_to_json(const SplitLinearMap& s) {
    Json j;
    j["matrix"] = to_json(s.matrix);
    j["rho"] = s.rho;
    j["a"] = s.a;
    j["b"] = s.b;
    j["dim_u"] = s.dim_u();
    j["dim_s"] = s.dim_s();
    j["basis_u"] = to_json(s.basis_u);
    j["basis_s"] = to_json(s.basis_s);
    return j;
}

Json norm_to_json(const AdaptedNorm& n) {
    Json j;
    j["rate_u"] = n.rate_u;
    j["rate_s"] = n.rate_s;
    j["depth_u"] = n.depth_u;
    j["depth_s"] = n.depth_s;
    j["equiv_lo"] = n.equiv_lo;
    j["equiv_hi"] = n.equiv_hi;
    return j;
}

Json cert_to_json(const HyperbolicCertificate& c) {
    Json j;
    j["x_star"] = to_json(c.x_star);
    j["rho"] = c.rho;
    j["a"] = c.a;
    j["b"] = c.b;
    j["dim_u"] = c.dim_u;
    j["dim_s"] = c.dim_s;
    j["gamma"] = c.gamma;
    j["gamma_analytic"] = c.gamma_analytic;
    j["delta"] = c.delta;
    j["resolvent"] = c.resolvent;
    j["weak"] = c.weak_flag;
    j["strong"] = c.strong_flag;
    j["gamma1_threshold"] = c.gamma1_threshold;
    j["isolation_radius"] = c.isolation_radius;
    j["epsilon0"] = c.epsilon0;
    j["failed_condition"] = c.failed_condition;
    return j;
}

Json continuation_to_json(const ContinuationResult& r) {
    Json j;
    j["x_star"] = to_json(r.x_star);
    j["iterations"] = r.iterations;
    j["residual"] = r.residual;
    j["displacement"] = r.displacement;
    j["epsilon_used"] = r.epsilon_used;
    j["delta1_used"] = r.delta1_used;
    j["bound_delta1"] = r.bound_delta1;
    j["gamma_pert"] = r.gamma_pert;
    return j;
}

Json witness_to_json(const TransversalWitness& w) {
    Json j;
    j["y1"] = to_json(w.y1);
    j["y2"] = to_json(w.y2);
    j["radius0"] = w.radius0;
    j["lip_theta"] = w.lip_theta;
    j["lip_sigma"] = w.lip_sigma;
    j["residual"] = w.residual;
    return j;
}

Json connection_graph_to_json(const ConnectionGraph& g) {
    Json j;
    Json nodes = Json::array();
    for (const auto& n : g.nodes) {
        Json jn;
        jn["id"] = n.id;
        jn["x_star"] = to_json(n.x_star);
        jn["dim_u"] = n.dim_u;
        jn["dim_s"] = n.dim_s;
        jn["a"] = n.a;
        jn["b"] = n.b;
        jn["gamma"] = n.gamma;
        jn["isolation_radius"] = n.isolation_radius;
        jn["strong"] = n.strong;
        nodes.push_back(jn);
    }
    j["nodes"] = nodes;
    Json edges = Json::array();
    for (const auto& e : g.edges) {
        Json je;
        je["source"] = e.source_id;
        je["target"] = e.target_id;
        je["mesh_index"] = e.mesh_index;
        je["entry_index"] = e.entry_index;
        je["orbit_length"] = e.orbit.size();
        je["backward_factor"] = e.backward_factor;
        je["backward_ok"] = e.backward_ok;
        edges.push_back(je);
    }
    j["edges"] = edges;
    j["inconclusive"] = g.inconclusive;
    j["dg_flag"] = g.dg_flag;
    j["cycle"] = g.cycle;
    j["transitive_ok"] = g.transitive_ok;
    Json dg1;
    dg1["n_samples"] = g.dg1.n_samples;
    dg1["n_settled"] = g.dg1.n_settled;
    dg1["n_escaped"] = g.dg1.n_escaped;
    dg1["n_wandering"] = g.dg1.n_wandering;
    dg1["ok"] = g.dg1.ok;
    j["dg1"] = dg1;
    return j;
}

std::string connection_graph_to_dot(const ConnectionGraph& g) {
    std::string out = "digraph connections {\n";
    for (const auto& n : g.nodes)
        out += "  n" + std::to_string(n.id) + " [label=\"" + std::to_string(n.id) + " (u" +
               std::to_string(n.dim_u) + ")\"];\n";
    for (const auto& e : g.edges)
        out += "  n" + std::to_string(e.source_id) + " -> n" + std::to_string(e.target_id) +
               ";\n";
    out += "}\n";
    return out;
}

std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ",";
        out += header[i];
    }
    out += "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ",";
            out += row[i];
        }
        out += "\n";
    }
    return out;
}

std::string graph_section_dat(const LipschitzGraph& g, int axis, int n_samples) {
    if (g.domain_dim() == 0) return "# empty domain\n";
    std::string out = "# xi theta(xi) columns\n";
    for (int i = 0; i < n_samples; ++i) {
        double t = g.grid.radius * (-1.0 + 2.0 * i / (n_samples - 1.0));
        Vec xi = Vec::Zero(g.domain_dim());
        xi[axis] = t;
        Vec v = g.eval(xi);
        out += format_double(t);
        for (int k = 0; k < v.size(); ++k) out += " " + format_double(v[k]);
        out += "\n";
    }
    return out;
}

ArtifactWriter::ArtifactWriter(std::string dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

void ArtifactWriter::write_text(const std::string& name, const std::string& content) {
    std::ofstream f(dir_ + "/" + name, std::ios::binary);
    if (!f) fail("IoFailure", "cannot open " + dir_ + "/" + name);
    f << content;
    entries_.emplace_back(name, hash_hex(content));
}

void ArtifactWriter::write_json(const std::string& name, const Json& j) {
    write_text(name, j.dump(2) + "\n");
}

void ArtifactWriter::finalize(const std::string& config_hash) {
    Json manifest;
    manifest["config_hash"] = config_hash;
    Json files = Json::array();
    for (const auto& [name, hash] : entries_) {
        Json f;
        f["name"] = name;
        f["hash"] = hash;
        files.push_back(f);
    }
    manifest["files"] = files;
    std::string text = manifest.dump(2) + "\n";
    std::ofstream f(dir_ + "/manifest.json", std::ios::binary);
    if (!f) fail("IoFailure", "cannot open manifest");
    f << text;
}

}  // namespace lipdyn
