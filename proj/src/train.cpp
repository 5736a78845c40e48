#include "milbo/train.hpp"

#include "milbo/view.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstring>
#include <fstream>
#include <sstream>

namespace milbo {

namespace fs = std::filesystem;
using nlohmann::json;

Strategy strategy_from_string(const std::string& s) {
    if (s == "milbo") return Strategy::milbo;
    if (s == "shuffling") return Strategy::shuffling;
    if (s == "consistency-only") return Strategy::consistency_only;
    throw std::invalid_argument("unknown strategy '" + s + "'");
}

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::milbo: return "milbo";
        case Strategy::shuffling: return "shuffling";
        case Strategy::consistency_only: return "consistency-only";
    }
    return "?";
}

void TrainConfig::validate() const {
    SampleConfig{p_h, p_a}.validate();
    if (p_h2) SampleConfig{*p_h2, p_a2.value_or(p_a)}.validate();
    if (p_a2) SampleConfig{p_h2.value_or(p_h), *p_a2}.validate();
    if (lambda < 0.0) throw std::invalid_argument("TrainConfig: lambda must be >= 0");
    if (k < 0 || l < 0) throw std::invalid_argument("TrainConfig: k, l must be >= 0");
    if (d_hidden <= 0 || d_out <= 0)
        throw std::invalid_argument("TrainConfig: dimensions must be positive");
    if (lr <= 0.0) throw std::invalid_argument("TrainConfig: lr must be positive");
    if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    if (checkpoint_every <= 0)
        throw std::invalid_argument("TrainConfig: checkpoint_every must be positive");
    if (negative_slope < 0.0 || negative_slope >= 1.0)
        throw std::invalid_argument("TrainConfig: negative_slope must be in [0, 1)");
    if (strategy == Strategy::consistency_only && lambda <= 0.0)
        throw std::invalid_argument("TrainConfig: consistency-only needs lambda > 0");
}

// ---------------------------------------------------------------------------
// Checkpoint I/O. Little-endian binary, layout:
//   magic "MILBOCK\n", u32 version,
//   u64 seed, i64 epoch, u32 rng-name length, rng-name bytes,
//   i64 f, i64 d_hidden, i64 d_out, u8 has_bias, f64 negative_slope,
//   W1, W2 as raw f64 column-major blocks, then b1, b2 when has_bias,
//   adam: lr, beta1, beta2, eps (f64), i64 t, then m_W1, v_W1, m_W2, v_W2,
//   and m_b1, v_b1, m_b2, v_b2 when has_bias.

namespace {

constexpr char kMagic[8] = {'M', 'I', 'L', 'B', 'O', 'C', 'K', '\n'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataFormatError("checkpoint: truncated file");
    return v;
}

void write_matrix(std::ostream& out, const Matrix& m) {
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
}

Matrix read_matrix(std::istream& in, long rows, long cols) {
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!in) throw DataFormatError("checkpoint: truncated matrix block");
    return m;
}

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(sizeof(double) * v.size()));
}

Eigen::VectorXd read_vector(std::istream& in, long size) {
    Eigen::VectorXd v(size);
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(sizeof(double) * v.size()));
    if (!in) throw DataFormatError("checkpoint: truncated vector block");
    return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ck, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataFormatError("checkpoint: cannot open " + path.string());
    out.write(kMagic, sizeof(kMagic));
    write_pod(out, kVersion);
    write_pod(out, ck.seed);
    write_pod(out, static_cast<std::int64_t>(ck.epoch));
    const std::string rng = ck.rng_algorithm.empty() ? kRngAlgorithm : ck.rng_algorithm;
    write_pod(out, static_cast<std::uint32_t>(rng.size()));
    out.write(rng.data(), static_cast<std::streamsize>(rng.size()));
    write_pod(out, static_cast<std::int64_t>(ck.params.w1.rows()));
    write_pod(out, static_cast<std::int64_t>(ck.params.w1.cols()));
    write_pod(out, static_cast<std::int64_t>(ck.params.w2.cols()));
    write_pod(out, static_cast<std::uint8_t>(ck.params.has_bias() ? 1 : 0));
    write_pod(out, ck.params.negative_slope);
    write_matrix(out, ck.params.w1);
    write_matrix(out, ck.params.w2);
    if (ck.params.has_bias()) {
        write_vector(out, ck.params.b1);
        write_vector(out, ck.params.b2);
    }
    write_pod(out, ck.adam.cfg.lr);
    write_pod(out, ck.adam.cfg.beta1);
    write_pod(out, ck.adam.cfg.beta2);
    write_pod(out, ck.adam.cfg.eps);
    write_pod(out, static_cast<std::int64_t>(ck.adam.t));
    write_matrix(out, ck.adam.m_w1);
    write_matrix(out, ck.adam.v_w1);
    write_matrix(out, ck.adam.m_w2);
    write_matrix(out, ck.adam.v_w2);
    if (ck.params.has_bias()) {
        write_vector(out, ck.adam.m_b1);
        write_vector(out, ck.adam.v_b1);
        write_vector(out, ck.adam.m_b2);
        write_vector(out, ck.adam.v_b2);
    }
}

Checkpoint load_checkpoint(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataFormatError("checkpoint: cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataFormatError("checkpoint: bad magic");
    if (read_pod<std::uint32_t>(in) != kVersion)
        throw DataFormatError("checkpoint: unsupported version");

    Checkpoint ck;
    ck.seed = read_pod<std::uint64_t>(in);
    ck.epoch = static_cast<int>(read_pod<std::int64_t>(in));
    const auto rng_len = read_pod<std::uint32_t>(in);
    ck.rng_algorithm.resize(rng_len);
    in.read(ck.rng_algorithm.data(), rng_len);
    const long f = static_cast<long>(read_pod<std::int64_t>(in));
    const long dh = static_cast<long>(read_pod<std::int64_t>(in));
    const long dout = static_cast<long>(read_pod<std::int64_t>(in));
    const bool has_bias = read_pod<std::uint8_t>(in) != 0;
    ck.params.negative_slope = read_pod<double>(in);
    ck.params.w1 = read_matrix(in, f, dh);
    ck.params.w2 = read_matrix(in, dh, dout);
    if (has_bias) {
        ck.params.b1 = read_vector(in, dh);
        ck.params.b2 = read_vector(in, dout);
    }
    ck.adam.cfg.lr = read_pod<double>(in);
    ck.adam.cfg.beta1 = read_pod<double>(in);
    ck.adam.cfg.beta2 = read_pod<double>(in);
    ck.adam.cfg.eps = read_pod<double>(in);
    ck.adam.t = static_cast<long>(read_pod<std::int64_t>(in));
    ck.adam.m_w1 = read_matrix(in, f, dh);
    ck.adam.v_w1 = read_matrix(in, f, dh);
    ck.adam.m_w2 = read_matrix(in, dh, dout);
    ck.adam.v_w2 = read_matrix(in, dh, dout);
    if (has_bias) {
        ck.adam.m_b1 = read_vector(in, dh);
        ck.adam.v_b1 = read_vector(in, dh);
        ck.adam.m_b2 = read_vector(in, dout);
        ck.adam.v_b2 = read_vector(in, dout);
    }
    return ck;
}

// ---------------------------------------------------------------------------
// Row L2-normalization with its backward chain, used when the config asks for
// normalized embeddings ahead of the similarity product.

namespace {

struct RowNorm {
    Matrix normalized;
    Eigen::VectorXd inv_norm;
};

RowNorm normalize_rows(const Matrix& z) {
    RowNorm out;
    out.inv_norm = z.rowwise().norm();
    for (long i = 0; i < out.inv_norm.size(); ++i)
        out.inv_norm[i] = out.inv_norm[i] > 0.0 ? 1.0 / out.inv_norm[i] : 0.0;
    out.normalized = out.inv_norm.asDiagonal() * z;
    return out;
}

Matrix normalize_rows_backward(const RowNorm& fwd, const Matrix& grad_normalized) {
    // d/dz (z / ||z||) applied row-wise: (g - (g . zhat) zhat) / ||z||.
    Matrix grad(fwd.normalized.rows(), fwd.normalized.cols());
    for (long i = 0; i < grad.rows(); ++i) {
        const auto zh = fwd.normalized.row(i);
        const auto g = grad_normalized.row(i);
        grad.row(i) = (g - g.dot(zh) * zh) * fwd.inv_norm[i];
    }
    return grad;
}

CombinedResult epoch_loss(const Embeddings& z1, const Embeddings& z2, const TrainConfig& cfg,
                          std::uint64_t pair_seed) {
    const int n = static_cast<int>(z1.z.rows());
    switch (cfg.strategy) {
        case Strategy::milbo:
            return combined_loss(z1, z2, cfg.k, cfg.l, cfg.lambda);
        case Strategy::shuffling:
            return combined_loss_with_pairs(z1, z2, select_pairs_shuffling(n, pair_seed),
                                            cfg.lambda);
        case Strategy::consistency_only: {
            auto [cvc, g1, g2] = consistency_loss(z1, z2);
            CombinedResult out;
            out.loss.contrastive = 0.0;
            out.loss.consistency = cvc;
            out.loss.lambda = cfg.lambda;
            out.loss.total = cfg.lambda * cvc;
            out.grad_z1 = cfg.lambda * g1;
            out.grad_z2 = cfg.lambda * g2;
            return out;
        }
    }
    throw std::logic_error("unreachable strategy");
}

}  // namespace

TrainResult train(const Graph& g, const TrainConfig& cfg,
                  const std::optional<Checkpoint>& resume_from,
                  const fs::path& checkpoint_dir, std::ostream* log_stream) {
    cfg.validate();
    g.validate();

    TrainResult result;
    int start_epoch = 0;
    if (resume_from) {
        result.params = resume_from->params;
        result.adam = resume_from->adam;
        start_epoch = resume_from->epoch;
        if (result.params.f_dim() != g.f)
            throw std::invalid_argument("train: checkpoint feature dim does not match graph");
    } else {
        result.params = init_params(g.f, cfg.d_hidden, cfg.d_out, cfg.seed, cfg.use_bias,
                                    cfg.negative_slope);
        result.adam = adam_init(result.params, AdamConfig{.lr = cfg.lr});
    }

    const SampleConfig view1_cfg{cfg.p_h, cfg.p_a};
    const SampleConfig view2_cfg{cfg.p_h2.value_or(cfg.p_h), cfg.p_a2.value_or(cfg.p_a)};

    auto write_checkpoint = [&](int epoch_done) {
        if (checkpoint_dir.empty()) return;
        Checkpoint ck{result.params, result.adam, cfg.seed, epoch_done, kRngAlgorithm};
        save_checkpoint(ck, checkpoint_dir / "checkpoint.bin");
    };

    for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();

        // One rng stream per epoch; resume replays the identical draws.
        Rng rng(cfg.seed, static_cast<std::uint64_t>(epoch));
        ViewSample v1 = sample_view(g, view1_cfg, rng);
        ViewSample v2 = sample_view(g, view2_cfg, rng);
        const std::uint64_t pair_seed = rng.next_u64();

        // Same theta snapshot for both views.
        auto [z1, tape1] = forward(result.params, v1);
        auto [z2, tape2] = forward(result.params, v2);
        z1.view_tag = 1;
        z2.view_tag = 2;

        CombinedResult step;
        if (cfg.normalize_embeddings) {
            RowNorm n1 = normalize_rows(z1.z);
            RowNorm n2 = normalize_rows(z2.z);
            Embeddings zn1{n1.normalized, 1}, zn2{n2.normalized, 2};
            step = epoch_loss(zn1, zn2, cfg, pair_seed);
            step.grad_z1 = normalize_rows_backward(n1, step.grad_z1);
            step.grad_z2 = normalize_rows_backward(n2, step.grad_z2);
        } else {
            step = epoch_loss(z1, z2, cfg, pair_seed);
        }

        if (!std::isfinite(step.loss.total)) {
            std::ostringstream msg;
            msg << "non-finite loss at epoch " << epoch << ": contrastive=" << step.loss.contrastive
                << " consistency=" << step.loss.consistency;
            throw NonFiniteLoss(msg.str());
        }

        EncoderGrads g1 = backward(result.params, tape1, step.grad_z1);
        EncoderGrads g2 = backward(result.params, tape2, step.grad_z2);
        EncoderGrads total{g1.w1 + g2.w1, g1.w2 + g2.w2};
        if (result.params.has_bias()) {
            total.b1 = g1.b1 + g2.b1;
            total.b2 = g1.b2 + g2.b2;
        }
        adam_step(result.params, total, result.adam);

        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = step.loss;
        rec.num_positives = static_cast<int>(step.pairs.positives.size());
        rec.num_negatives = static_cast<int>(step.pairs.negatives.size());
        rec.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (log_stream) {
            json j{{"epoch", rec.epoch},
                   {"l_cl", rec.loss.contrastive},
                   {"l_cvc", rec.loss.consistency},
                   {"lambda", rec.loss.lambda},
                   {"total", rec.loss.total},
                   {"num_positives", rec.num_positives},
                   {"num_negatives", rec.num_negatives},
                   {"wall_time_s", rec.wall_time_s}};
            *log_stream << j.dump() << '\n';
        }
        result.log.push_back(std::move(rec));

        if ((epoch + 1) % cfg.checkpoint_every == 0) write_checkpoint(epoch + 1);
    }
    write_checkpoint(cfg.epochs);
    return result;
}

Embeddings embed(const Graph& g, const EncoderParams& params) {
    ViewSample full;
    full.masked_features = g.features;
    full.node_mask.assign(g.n, 1);
    full.edge_keep_set = g.edges;
    full.dropped_adjacency = normalize_adjacency(g);
    auto [z, tape] = forward(params, full);
    z.view_tag = 0;
    return z;
}

void save_embeddings_csv(const Embeddings& z, const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    out.precision(17);
    for (long i = 0; i < z.z.rows(); ++i) {
        for (long j = 0; j < z.z.cols(); ++j) {
            if (j) out << ',';
            out << z.z(i, j);
        }
        out << '\n';
    }
}

Matrix load_embeddings_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataFormatError("embeddings: cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (!rows.empty() && row.size() != rows.front().size())
            throw DataFormatError("embeddings: ragged row");
        rows.push_back(std::move(row));
    }
    Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
    for (long i = 0; i < m.rows(); ++i)
        for (long j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j];
    return m;
}

}  // namespace milbo
