#include "milbo/probe.hpp"

#include "milbo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace milbo {

void ProbeConfig::validate() const {
    if (repeats < 1) throw std::invalid_argument("ProbeConfig: repeats must be >= 1");
    if (weight_decay < 0.0) throw std::invalid_argument("ProbeConfig: negative weight decay");
    if (lr <= 0.0) throw std::invalid_argument("ProbeConfig: lr must be positive");
    if (epochs < 0) throw std::invalid_argument("ProbeConfig: negative epochs");
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels,
                const std::vector<int>& index_set) {
    if (index_set.empty()) throw std::invalid_argument("accuracy: empty index set");
    int correct = 0;
    for (int i : index_set) {
        if (i < 0 || i >= static_cast<int>(predictions.size()) ||
            i >= static_cast<int>(labels.size()))
            throw std::invalid_argument("accuracy: index out of range");
        if (predictions[i] == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(index_set.size());
}

namespace {

struct ProbeModel {
    Matrix w;            // d x c
    Eigen::VectorXd b;   // c
};

// Softmax cross-entropy over the rows of `logits` against `y`; returns the
// mean loss and fills grad_logits.
double softmax_ce(const Matrix& logits, const std::vector<int>& y, Matrix& grad_logits) {
    const long m = logits.rows();
    const long c = logits.cols();
    grad_logits.resize(m, c);
    double loss = 0.0;
    for (long i = 0; i < m; ++i) {
        const double mx = logits.row(i).maxCoeff();
        Eigen::VectorXd e = (logits.row(i).array() - mx).exp();
        const double sum = e.sum();
        loss += -(logits(i, y[i]) - mx - std::log(sum));
        grad_logits.row(i) = (e / sum).transpose();
        grad_logits(i, y[i]) -= 1.0;
    }
    grad_logits /= static_cast<double>(m);
    return loss / static_cast<double>(m);
}

std::vector<int> predict(const ProbeModel& model, const Matrix& x) {
    Matrix logits = (x * model.w).rowwise() + model.b.transpose();
    std::vector<int> out(logits.rows());
    for (long i = 0; i < logits.rows(); ++i) {
        long arg = 0;
        logits.row(i).maxCoeff(&arg);
        out[i] = static_cast<int>(arg);
    }
    return out;
}

}  // namespace

EvalReport linear_probe(const Matrix& z, const std::vector<int>& labels, const Splits& splits,
                        const ProbeConfig& cfg) {
    cfg.validate();
    if (labels.empty()) throw std::invalid_argument("linear_probe: labels required");
    if (splits.train.empty() || splits.test.empty())
        throw std::invalid_argument("linear_probe: train and test splits required");

    const int num_classes = *std::max_element(labels.begin(), labels.end()) + 1;
    {
        std::set<int> train_classes;
        for (int i : splits.train) train_classes.insert(labels[i]);
        for (int i : splits.test)
            if (!train_classes.count(labels[i]))
                throw std::invalid_argument("linear_probe: class " + std::to_string(labels[i]) +
                                            " absent from training split");
    }

    Matrix features = z;
    if (cfg.standardize) {
        Eigen::RowVectorXd mean = features.colwise().mean();
        features.rowwise() -= mean;
        Eigen::RowVectorXd sd =
            (features.array().square().colwise().mean()).sqrt().matrix();
        for (long j = 0; j < sd.size(); ++j)
            if (sd[j] > 0.0) features.col(j) /= sd[j];
    }

    const long m = static_cast<long>(splits.train.size());
    const long d = features.cols();
    Matrix x_train(m, d);
    std::vector<int> y_train(m);
    for (long r = 0; r < m; ++r) {
        x_train.row(r) = features.row(splits.train[r]);
        y_train[r] = labels[splits.train[r]];
    }

    EvalReport report;
    report.config = cfg;
    report.train_size = static_cast<int>(splits.train.size());
    report.test_size = static_cast<int>(splits.test.size());

    for (int rep = 0; rep < cfg.repeats; ++rep) {
        Rng rng(cfg.seed, static_cast<std::uint64_t>(rep));
        ProbeModel model;
        const double bound = std::sqrt(6.0 / static_cast<double>(d + num_classes));
        model.w.resize(d, num_classes);
        for (long i = 0; i < d; ++i)
            for (int j = 0; j < num_classes; ++j) model.w(i, j) = rng.uniform(-bound, bound);
        model.b = Eigen::VectorXd::Zero(num_classes);

        // Full-batch Adam on W and b; L2 applies to W only.
        Matrix m_w = Matrix::Zero(d, num_classes), v_w = m_w;
        Eigen::VectorXd m_b = Eigen::VectorXd::Zero(num_classes), v_b = m_b;
        const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

        Matrix grad_logits;
        for (int t = 1; t <= cfg.epochs; ++t) {
            Matrix logits = (x_train * model.w).rowwise() + model.b.transpose();
            softmax_ce(logits, y_train, grad_logits);
            Matrix gw = x_train.transpose() * grad_logits + cfg.weight_decay * model.w;
            Eigen::VectorXd gb = grad_logits.colwise().sum().transpose();

            const double bc1 = 1.0 - std::pow(beta1, t);
            const double bc2 = 1.0 - std::pow(beta2, t);
            m_w = beta1 * m_w + (1.0 - beta1) * gw;
            v_w = beta2 * v_w + (1.0 - beta2) * gw.cwiseProduct(gw);
            model.w.array() -=
                cfg.lr * (m_w / bc1).array() / ((v_w / bc2).array().sqrt() + eps);
            m_b = beta1 * m_b + (1.0 - beta1) * gb;
            v_b = beta2 * v_b + (1.0 - beta2) * gb.cwiseProduct(gb);
            model.b.array() -=
                cfg.lr * (m_b / bc1).array() / ((v_b / bc2).array().sqrt() + eps);
        }

        auto preds = predict(model, features);
        report.accuracies.push_back(accuracy(preds, labels, splits.test));
    }

    const double n_rep = static_cast<double>(report.accuracies.size());
    report.mean =
        std::accumulate(report.accuracies.begin(), report.accuracies.end(), 0.0) / n_rep;
    double var = 0.0;
    for (double a : report.accuracies) var += (a - report.mean) * (a - report.mean);
    report.std_dev = std::sqrt(var / n_rep);  // population std
    return report;
}

}  // namespace milbo
