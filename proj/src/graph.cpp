#include "milbo/graph.hpp"

#include "milbo/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace milbo {

namespace fs = std::filesystem;
using nlohmann::json;

int Graph::num_classes() const {
    if (labels.empty()) return 0;
    return *std::max_element(labels.begin(), labels.end()) + 1;
}

SparseMatrix Graph::adjacency() const {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(edges.size() * 2);
    for (auto [u, v] : edges) {
        trip.emplace_back(u, v, 1.0);
        trip.emplace_back(v, u, 1.0);
    }
    SparseMatrix a(n, n);
    a.setFromTriplets(trip.begin(), trip.end());
    return a;
}

void Graph::validate() const {
    if (n < 0 || f < 0) throw DataFormatError("negative dimensions");
    if (features.rows() != n || features.cols() != f)
        throw DataFormatError("feature matrix shape mismatch");
    if (!features.allFinite()) throw DataFormatError("non-finite feature value");
    for (auto [u, v] : edges) {
        if (u < 0 || v < 0 || u >= n || v >= n)
            throw DataFormatError("edge endpoint out of range");
        if (u == v) throw DataFormatError("self-loop stored in edge list");
    }
    if (!labels.empty()) {
        if (static_cast<int>(labels.size()) != n)
            throw DataFormatError("label count != node count");
        for (int y : labels)
            if (y < 0) throw DataFormatError("negative class id");
    }
    auto check_split = [this](const std::vector<int>& idx, const char* name) {
        for (int i : idx)
            if (i < 0 || i >= n)
                throw DataFormatError(std::string("split index out of range in ") + name);
    };
    check_split(splits.train, "train");
    check_split(splits.val, "val");
    check_split(splits.test, "test");
    std::set<int> seen;
    for (const auto* s : {&splits.train, &splits.val, &splits.test})
        for (int i : *s)
            if (!seen.insert(i).second)
                throw DataFormatError("split index appears in more than one split");
}

void SbmSpec::validate() const {
    if (blocks.empty()) throw std::invalid_argument("SbmSpec: no blocks");
    for (int b : blocks)
        if (b <= 0) throw std::invalid_argument("SbmSpec: block size must be positive");
    if (!(p_out >= 0.0 && p_out <= p_in && p_in <= 1.0))
        throw std::invalid_argument("SbmSpec: need 0 <= p_out <= p_in <= 1");
    if (feature_noise < 0.0) throw std::invalid_argument("SbmSpec: negative feature_noise");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

}  // namespace

Graph load_graph(const fs::path& dir) {
    const fs::path edges_path = dir / "graph.edges";
    const fs::path feat_path = dir / "features.csv";
    if (!fs::exists(edges_path)) throw DataFormatError("missing " + edges_path.string());
    if (!fs::exists(feat_path)) throw DataFormatError("missing " + feat_path.string());

    // Features first: they fix n and f.
    std::vector<std::vector<double>> rows;
    {
        std::ifstream in(feat_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto cells = split_csv_line(line);
            std::vector<double> row;
            row.reserve(cells.size());
            for (const auto& c : cells) {
                try {
                    size_t pos = 0;
                    double v = std::stod(c, &pos);
                    row.push_back(v);
                } catch (const std::exception&) {
                    throw DataFormatError("features.csv: bad value '" + c + "'");
                }
            }
            if (!rows.empty() && row.size() != rows.front().size())
                throw DataFormatError("features.csv: ragged row " + std::to_string(rows.size()));
            rows.push_back(std::move(row));
        }
    }
    Graph g;
    g.n = static_cast<int>(rows.size());
    g.f = rows.empty() ? 0 : static_cast<int>(rows.front().size());
    g.features.resize(g.n, g.f);
    for (int i = 0; i < g.n; ++i)
        for (int j = 0; j < g.f; ++j) g.features(i, j) = rows[i][j];

    {
        std::ifstream in(edges_path);
        std::string line;
        std::set<std::pair<int, int>> uniq;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            std::istringstream ss(line);
            long u, v;
            if (!(ss >> u)) continue;  // blank or comment-only line
            if (!(ss >> v))
                throw DataFormatError("graph.edges:" + std::to_string(lineno) +
                                      ": expected two node ids");
            if (u == v)
                throw DataFormatError("graph.edges:" + std::to_string(lineno) + ": self-loop");
            if (u < 0 || v < 0 || u >= g.n || v >= g.n)
                throw DataFormatError("graph.edges:" + std::to_string(lineno) +
                                      ": node index out of range");
            uniq.emplace(std::min(u, v), std::max(u, v));
        }
        g.edges.assign(uniq.begin(), uniq.end());
    }

    const fs::path labels_path = dir / "labels.txt";
    if (fs::exists(labels_path)) {
        std::ifstream in(labels_path);
        long y;
        while (in >> y) {
            if (y < 0) throw DataFormatError("labels.txt: negative class id");
            g.labels.push_back(static_cast<int>(y));
        }
        if (static_cast<int>(g.labels.size()) != g.n)
            throw DataFormatError("labels.txt: expected " + std::to_string(g.n) + " lines, got " +
                                  std::to_string(g.labels.size()));
    }

    const fs::path split_path = dir / "split.json";
    if (fs::exists(split_path)) {
        std::ifstream in(split_path);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw DataFormatError(std::string("split.json: ") + e.what());
        }
        auto read = [&](const char* key) {
            std::vector<int> out;
            if (j.contains(key)) out = j.at(key).get<std::vector<int>>();
            return out;
        };
        g.splits.train = read("train");
        g.splits.val = read("val");
        g.splits.test = read("test");
    }

    g.validate();
    return g;
}

void save_graph(const Graph& g, const fs::path& dir) {
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "graph.edges");
        for (auto [u, v] : g.edges) out << u << ' ' << v << '\n';
    }
    {
        std::ofstream out(dir / "features.csv");
        out.precision(17);
        for (int i = 0; i < g.n; ++i) {
            for (int j = 0; j < g.f; ++j) {
                if (j) out << ',';
                out << g.features(i, j);
            }
            out << '\n';
        }
    }
    if (!g.labels.empty()) {
        std::ofstream out(dir / "labels.txt");
        for (int y : g.labels) out << y << '\n';
    }
    if (!g.splits.empty()) {
        json j;
        j["train"] = g.splits.train;
        j["val"] = g.splits.val;
        j["test"] = g.splits.test;
        std::ofstream out(dir / "split.json");
        out << j.dump(2) << '\n';
    }
}

NormalizedAdjacency normalize_edges(int n, const std::vector<std::pair<int, int>>& edges) {
    Eigen::VectorXd deg = Eigen::VectorXd::Ones(n);  // self-loop contributes 1
    for (auto [u, v] : edges) {
        deg[u] += 1.0;
        deg[v] += 1.0;
    }
    Eigen::VectorXd inv_sqrt = deg.array().rsqrt();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(edges.size() * 2 + n);
    for (int i = 0; i < n; ++i) trip.emplace_back(i, i, inv_sqrt[i] * inv_sqrt[i]);
    for (auto [u, v] : edges) {
        const double w = inv_sqrt[u] * inv_sqrt[v];
        trip.emplace_back(u, v, w);
        trip.emplace_back(v, u, w);
    }
    NormalizedAdjacency out;
    out.mat.resize(n, n);
    out.mat.setFromTriplets(trip.begin(), trip.end());
    return out;
}

NormalizedAdjacency normalize_adjacency(const Graph& g) {
    return normalize_edges(g.n, g.edges);
}

Graph generate_sbm(const SbmSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    const int num_blocks = static_cast<int>(spec.blocks.size());
    const int n = std::accumulate(spec.blocks.begin(), spec.blocks.end(), 0);

    Graph g;
    g.n = n;
    g.f = num_blocks;
    g.labels.resize(n);
    int node = 0;
    for (int b = 0; b < num_blocks; ++b)
        for (int i = 0; i < spec.blocks[b]; ++i) g.labels[node++] = b;

    g.features = Matrix::Zero(n, num_blocks);
    for (int i = 0; i < n; ++i) {
        g.features(i, g.labels[i]) = 1.0;
        for (int j = 0; j < num_blocks; ++j)
            g.features(i, j) += spec.feature_noise * rng.normal();
    }

    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double p = (g.labels[i] == g.labels[j]) ? spec.p_in : spec.p_out;
            if (p > 0.0 && rng.uniform() < p) g.edges.emplace_back(i, j);
        }
    }

    // 80/20 train/test on shuffled node ids.
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng.engine());
    const int n_train = (n * 8) / 10;
    g.splits.train.assign(order.begin(), order.begin() + n_train);
    g.splits.test.assign(order.begin() + n_train, order.end());
    std::sort(g.splits.train.begin(), g.splits.train.end());
    std::sort(g.splits.test.begin(), g.splits.test.end());

    g.validate();
    return g;
}

}  // namespace milbo
