#pragma once

#include "milbo/graph.hpp"

#include <cstdint>
#include <vector>

namespace milbo {

struct ProbeConfig {
    double lr = 0.01;
    int epochs = 300;
    double weight_decay = 1e-4;
    int repeats = 5;
    std::uint64_t seed = 0;
    bool standardize = false;

    void validate() const;
};

struct EvalReport {
    std::vector<double> accuracies;  // one per repeat
    double mean = 0.0;
    double std_dev = 0.0;  // population std over repeats
    int train_size = 0;
    int test_size = 0;
    ProbeConfig config;
};

// Exact-match fraction over the given index set.
double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels,
                const std::vector<int>& index_set);

// Multinomial logistic regression on frozen embeddings: softmax cross-entropy
// plus L2, full-batch Adam, trained on the train split, scored on the test
// split. Repeats differ only in the classifier init seed.
EvalReport linear_probe(const Matrix& z, const std::vector<int>& labels, const Splits& splits,
                        const ProbeConfig& cfg);

}  // namespace milbo
