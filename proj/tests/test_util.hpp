#pragma once

#include <random>

#include <Eigen/Dense>

#include "fedadmm/data.hpp"
#include "fedadmm/linalg.hpp"

namespace testutil {

inline fedadmm::Matrix random_matrix(std::mt19937_64& rng, std::size_t r, std::size_t c, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    fedadmm::Matrix m(r, c);
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) m(i, j) = nd(rng);
    return m;
}

inline fedadmm::Vector random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
    std::normal_distribution<double> nd(0.0, scale);
    fedadmm::Vector v(n);
    for (auto& x : v) x = nd(rng);
    return v;
}

inline Eigen::MatrixXd to_eigen(const fedadmm::Matrix& m) {
    Eigen::MatrixXd e(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
    return e;
}

inline Eigen::VectorXd to_eigen(const fedadmm::Vector& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline fedadmm::ClientDataset random_client(std::mt19937_64& rng, std::size_t rows, std::size_t n, bool binary,
                                            int id = 0) {
    fedadmm::ClientDataset c;
    c.client_id = id;
    c.features = random_matrix(rng, rows, n);
    c.targets = random_vector(rng, rows);
    if (binary)
        for (auto& b : c.targets) b = b > 0.0 ? 1.0 : 0.0;
    c.weight = 1.0;
    return c;
}

}  // namespace testutil
