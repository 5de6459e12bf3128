#pragma once

// Artifact serialization: JSON with sorted keys and round-trip doubles, CSV
// tables, DOT graphs, gnuplot .dat files, and the hashed manifest.

#include <string>
#include <vector>

#include "json.hpp"
#include "lipdyn/chafee_infante.hpp"
#include "lipdyn/morse_smale.hpp"

namespace lipdyn {

using Json = nlohmann::json;

// Shortest representation that parses back to the same bits.
std::string format_double(double v);

std::uint64_t fnv1a64(const std::string& data);
std::string hash_hex(const std::string& data);

Json to_json(const Vec& v);
Json to_json(const Mat& m);
Vec vec_from_json(const Json& j);
Mat mat_from_json(const Json& j);

Json graph_to_json(const LipschitzGraph& g);
LipschitzGraph graph_from_json(const Json& j);

Json split_to_json(const SplitLinearMap& s);
Json norm_to_json(const AdaptedNorm& n);
Json cert_to_json(const HyperbolicCertificate& c);
Json continuation_to_json(const ContinuationResult& r);
Json witness_to_json(const TransversalWitness& w);
Json connection_graph_to_json(const ConnectionGraph& g);
std::string connection_graph_to_dot(const ConnectionGraph& g);

// Tabular artifact: one header row, cells preformatted.
std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows);

// (xi, theta_1(xi), ..., theta_c(xi)) sampled along a single domain axis with
// the other axes pinned at zero.
std::string graph_section_dat(const LipschitzGraph& g, int axis, int n_samples);

// Collects files under one directory and finishes with manifest.json listing
// every file with its content hash plus the config hash.
class ArtifactWriter {
  public:
    explicit ArtifactWriter(std::string dir);
    const std::string& dir() const { return dir_; }
    void write_text(const std::string& name, const std::string& content);
    void write_json(const std::string& name, const Json& j);
    void finalize(const std::string& config_hash);

  private:
    std::string dir_;
    std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace lipdyn
