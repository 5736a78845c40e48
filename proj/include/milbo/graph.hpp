#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace milbo {

using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

// Thrown on malformed input files or inconsistent graph data.
class DataFormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Splits {
    std::vector<int> train;
    std::vector<int> val;
    std::vector<int> test;

    bool empty() const { return train.empty() && val.empty() && test.empty(); }
};

// Undirected attributed graph. Adjacency is stored symmetric, 0/1, with no
// self-loops; self-loops enter only at normalization time.
struct Graph {
    int n = 0;
    int f = 0;
    Matrix features;                       // n x f
    std::vector<std::pair<int, int>> edges;  // undirected, u < v, sorted, unique
    std::vector<int> labels;               // empty when unlabeled
    Splits splits;

    bool has_labels() const { return !labels.empty(); }

    // Number of classes, assuming labels are 0-based class ids.
    int num_classes() const;

    // Sparse symmetric 0/1 adjacency (both (u,v) and (v,u) populated).
    SparseMatrix adjacency() const;

    // Throws DataFormatError if any invariant is violated.
    void validate() const;
};

// D^{-1/2} (A + I) D^{-1/2} with D the degree matrix of A + I.
struct NormalizedAdjacency {
    SparseMatrix mat;  // n x n, symmetric, entries in (0, 1]

    int n() const { return static_cast<int>(mat.rows()); }
};

struct SbmSpec {
    std::vector<int> blocks;
    double p_in = 0.3;
    double p_out = 0.02;
    double feature_noise = 0.5;
    std::uint64_t seed = 0;

    void validate() const;
};

// Reads graph.edges / features.csv and, when present, labels.txt and
// split.json from `dir`. Duplicate and reversed edge lines collapse to one
// undirected edge; self-loop lines are rejected.
Graph load_graph(const std::filesystem::path& dir);

// Writes the same directory format load_graph reads.
void save_graph(const Graph& g, const std::filesystem::path& dir);

NormalizedAdjacency normalize_adjacency(const Graph& g);

// Builds the normalized propagation matrix directly from an edge list over n
// nodes (used for dropped-edge views).
NormalizedAdjacency normalize_edges(int n, const std::vector<std::pair<int, int>>& edges);

// Planted-partition graph: labels are block ids, features are one-hot block
// indicators plus Gaussian noise, and an 80/20 train/test split is attached.
Graph generate_sbm(const SbmSpec& spec);

}  // namespace milbo
