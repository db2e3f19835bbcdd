#ifndef TIV_LOSSES_HPP
#define TIV_LOSSES_HPP

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "tiv/errors.hpp"
#include "tiv/nn.hpp"

namespace tiv {

struct ClassificationLoss {
    double loss = 0.0;
    double accuracy = 0.0;
    nn::Mat grad_logits;  // d(mean loss)/d(logits)
};

// Mean softmax cross-entropy over the batch. Ties in argmax resolve to the
// lowest class index.
inline ClassificationLoss softmax_cross_entropy(const nn::Mat& logits,
                                                const std::vector<int>& class_ids) {
    const long n = logits.rows();
    const long c = logits.cols();
    if (n == 0) throw ContractError("softmax_cross_entropy: empty batch");
    if (static_cast<long>(class_ids.size()) != n)
        throw ContractError("softmax_cross_entropy: batch size mismatch");
    for (int y : class_ids)
        if (y < 0 || y >= c)
            throw ContractError("softmax_cross_entropy: class id " + std::to_string(y) +
                                " outside [0," + std::to_string(c) + ")");

    ClassificationLoss out;
    out.grad_logits = nn::Mat(n, c);
    long correct = 0;
    double total = 0.0;
    for (long i = 0; i < n; ++i) {
        const double mx = logits.row(i).maxCoeff();
        Eigen::RowVectorXd p = (logits.row(i).array() - mx).exp();
        const double z = p.sum();
        p /= z;
        total += -std::log(p[class_ids[static_cast<std::size_t>(i)]]);
        out.grad_logits.row(i) = p;
        out.grad_logits(i, class_ids[static_cast<std::size_t>(i)]) -= 1.0;

        long argmax = 0;
        logits.row(i).maxCoeff(&argmax);
        if (argmax == class_ids[static_cast<std::size_t>(i)]) ++correct;
    }
    out.loss = total / static_cast<double>(n);
    out.accuracy = static_cast<double>(correct) / static_cast<double>(n);
    out.grad_logits /= static_cast<double>(n);
    return out;
}

struct InfoNceLoss {
    double loss = 0.0;
    nn::Mat grad_query;     // d(mean loss)/d(query rows)
    nn::Mat grad_positive;  // d(mean loss)/d(positive key rows)
};

namespace loss_detail {
inline void check_unit_rows(const nn::Mat& m, const char* what, double tol = 1e-4) {
    for (long i = 0; i < m.rows(); ++i)
        if (std::fabs(m.row(i).norm() - 1.0) > tol)
            throw ContractError(std::string("info_nce: ") + what + " row " + std::to_string(i) +
                                " is not unit-norm");
}
}  // namespace loss_detail

// Mean over the batch of -log( exp(q.k+ / tau) / (exp(q.k+ / tau) +
// sum_j exp(q.k-_j / tau)) ). Queue entries act as negatives and receive no
// gradient (they come from the momentum encoder).
inline InfoNceLoss info_nce_loss(const nn::Mat& query, const nn::Mat& positive_key,
                                 const nn::Mat& queue, double tau) {
    const long n = query.rows();
    const long d = query.cols();
    const long k = queue.rows();
    if (n == 0) throw ContractError("info_nce: empty batch");
    if (positive_key.rows() != n || positive_key.cols() != d)
        throw ContractError("info_nce: positive key shape mismatch");
    if (queue.cols() != d) throw ContractError("info_nce: queue dimension mismatch");
    if (tau <= 0.0) throw ConfigError("info_nce: temperature must be > 0");
    loss_detail::check_unit_rows(query, "query");
    loss_detail::check_unit_rows(positive_key, "positive key");
    loss_detail::check_unit_rows(queue, "queue");

    InfoNceLoss out;
    out.grad_query = nn::Mat::Zero(n, d);
    out.grad_positive = nn::Mat::Zero(n, d);

    double total = 0.0;
    for (long i = 0; i < n; ++i) {
        Eigen::VectorXd logits(k + 1);
        logits[0] = query.row(i).dot(positive_key.row(i)) / tau;
        logits.tail(k) = queue * query.row(i).transpose() / tau;

        const double mx = logits.maxCoeff();
        Eigen::VectorXd p = (logits.array() - mx).exp();
        p /= p.sum();
        total += -std::log(p[0]);

        // d loss_i / d q = (1/tau) [ (p0 - 1) k+ + sum_j pj k-_j ]
        Eigen::RowVectorXd gq = (p[0] - 1.0) * positive_key.row(i);
        gq += p.tail(k).transpose() * queue;
        out.grad_query.row(i) = gq / tau;
        out.grad_positive.row(i) = (p[0] - 1.0) * query.row(i) / tau;
    }
    out.loss = total / static_cast<double>(n);
    out.grad_query /= static_cast<double>(n);
    out.grad_positive /= static_cast<double>(n);
    return out;
}

}  // namespace tiv

#endif
