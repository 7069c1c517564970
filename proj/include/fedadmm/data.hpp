#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fedadmm/linalg.hpp"

namespace fedadmm {

struct ClientDataset {
    int client_id = 0;
    Matrix features;  // d_i x n
    Vector targets;   // d_i
    double weight = 0.0;

    std::size_t rows() const { return features.rows(); }
};

struct Federation {
    std::vector<ClientDataset> clients;  // ascending client_id
    std::size_t n = 0;
    std::size_t d = 0;

    std::size_t m() const { return clients.size(); }
};

enum class DataFormat { Libsvm, Csv };

// Sets w_i = d_i / d and validates shapes.
Federation make_federation(std::vector<ClientDataset> clients);

Federation generate_regression(int m, int n, std::pair<int, int> d_range, std::uint64_t seed);

// Pooled logistic-model data: A ~ N(0,1), x_true ~ N(0, 1/4), b ~ Bernoulli(sigmoid(a.x_true)).
std::pair<Matrix, Vector> generate_classification(int d, int n, std::uint64_t seed);

// n_features = 0 infers the column count (libsvm: largest index seen).
std::pair<Matrix, Vector> load_classification(const std::string& path, DataFormat format,
                                              std::size_t n_features = 0);
void write_classification(const std::string& path, const Matrix& a, const Vector& b, DataFormat format);

// Row indices per client after a seeded shuffle.
std::vector<std::vector<std::size_t>> partition_indices(std::size_t d, int m, std::uint64_t seed);
Federation partition(const Matrix& a, const Vector& b, int m, std::uint64_t seed);

// Stacks all client rows back into one (A, b), clients in order.
std::pair<Matrix, Vector> pooled(const Federation& fed);

}  // namespace fedadmm
