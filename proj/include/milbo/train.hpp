#pragma once

#include "milbo/adam.hpp"
#include "milbo/graph.hpp"
#include "milbo/objective.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace milbo {

enum class Strategy { milbo, shuffling, consistency_only };

Strategy strategy_from_string(const std::string& s);
std::string to_string(Strategy s);

struct TrainConfig {
    double p_h = 0.2;
    double p_a = 0.2;
    // Per-view overrides; when unset both views share (p_h, p_a).
    std::optional<double> p_h2;
    std::optional<double> p_a2;
    double lambda = 0.3;
    int k = 5;
    int l = 5;
    int d_hidden = 256;
    int d_out = 256;
    double lr = 1e-3;
    int epochs = 500;
    int checkpoint_every = 50;
    std::uint64_t seed = 0;
    Strategy strategy = Strategy::milbo;
    bool normalize_embeddings = false;
    bool use_bias = false;
    // 0 gives plain relu; a positive value switches to the leaky rectifier.
    double negative_slope = 0.0;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    LossBreakdown loss;
    int num_positives = 0;
    int num_negatives = 0;
    double wall_time_s = 0.0;
};

struct Checkpoint {
    EncoderParams params;
    AdamState adam;
    std::uint64_t seed = 0;
    int epoch = 0;  // epochs completed
    std::string rng_algorithm;
};

// Versioned binary layout, bit-exact round trip. Documented in README.
void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

class NonFiniteLoss : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainResult {
    EncoderParams params;
    AdamState adam;
    std::vector<EpochRecord> log;
};

// Runs the training loop: per epoch, sample two views, encode both with the
// same parameter snapshot, select pairs per strategy, combined loss, backprop,
// one Adam step. Deterministic per (graph, config, seed). When `resume_from`
// is given, continues from its epoch counter; the per-epoch rng streams make
// the result identical to an uninterrupted run.
TrainResult train(const Graph& g, const TrainConfig& cfg,
                  const std::optional<Checkpoint>& resume_from = std::nullopt,
                  const std::filesystem::path& checkpoint_dir = {},
                  std::ostream* log_stream = nullptr);

// Encodes the raw, unsampled graph (p_h = p_a = 0 path).
Embeddings embed(const Graph& g, const EncoderParams& params);

void save_embeddings_csv(const Embeddings& z, const std::filesystem::path& path);
Matrix load_embeddings_csv(const std::filesystem::path& path);

}  // namespace milbo
