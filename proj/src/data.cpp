#include "fedadmm/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include "fedadmm/errors.hpp"
#include "fedadmm/rng.hpp"

namespace fedadmm {

namespace {

// stream ids that are not client ids
constexpr std::uint64_t kPooledStream = 1ULL << 63;
constexpr std::uint64_t kShuffleStream = (1ULL << 63) + 1;

enum Purpose : std::uint64_t { kSizes = 0, kEntries = 1, kLabels = 2, kTruth = 3 };

bool parse_double(std::string_view s, double& out) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return false;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

[[noreturn]] void parse_error(const std::string& path, std::size_t line, const std::string& msg) {
    throw Error(ErrorCode::ParseError, path + ":" + std::to_string(line) + ": " + msg);
}

// {0,1} as is, -1 mapped to 0
Vector coerce_labels(const std::vector<double>& raw) {
    std::set<double> bad;
    Vector b(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == 0.0 || raw[i] == 1.0)
            b[i] = raw[i];
        else if (raw[i] == -1.0)
            b[i] = 0.0;
        else
            bad.insert(raw[i]);
    }
    if (!bad.empty()) {
        std::ostringstream os;
        os << "labels outside {0,1}:";
        for (double v : bad) os << ' ' << v;
        throw Error(ErrorCode::LabelDomain, os.str());
    }
    return b;
}

}  // namespace

Federation make_federation(std::vector<ClientDataset> clients) {
    if (clients.empty()) throw Error(ErrorCode::InvalidRange, "federation needs at least one client");
    std::sort(clients.begin(), clients.end(),
              [](const ClientDataset& a, const ClientDataset& b) { return a.client_id < b.client_id; });
    Federation fed;
    fed.n = clients.front().features.cols();
    for (const auto& c : clients) {
        if (c.features.cols() != fed.n)
            throw Error(ErrorCode::DimensionMismatch, "client " + std::to_string(c.client_id) + " feature count");
        if (c.targets.size() != c.features.rows())
            throw Error(ErrorCode::DimensionMismatch, "client " + std::to_string(c.client_id) + " target count");
        if (c.rows() == 0) throw Error(ErrorCode::InvalidRange, "client " + std::to_string(c.client_id) + " is empty");
        fed.d += c.rows();
    }
    for (auto& c : clients) c.weight = static_cast<double>(c.rows()) / static_cast<double>(fed.d);
    fed.clients = std::move(clients);
    return fed;
}

Federation generate_regression(int m, int n, std::pair<int, int> d_range, std::uint64_t seed) {
    if (m <= 0 || m % 3 != 0) throw Error(ErrorCode::InvalidGroups, "m=" + std::to_string(m) + " is not a positive multiple of 3");
    auto [lo, hi] = d_range;
    if (lo < 1 || lo > hi) throw Error(ErrorCode::InvalidRange, "d_range [" + std::to_string(lo) + "," + std::to_string(hi) + "]");
    if (n < 1) throw Error(ErrorCode::InvalidRange, "n must be >= 1");

    const int group_size = m / 3;
    std::vector<ClientDataset> clients;
    clients.reserve(m);
    for (int i = 0; i < m; ++i) {
        const auto id = static_cast<std::uint64_t>(i);
        Philox sizes(seed, id, kSizes);
        const auto di = static_cast<std::size_t>(sizes.uniform_int(lo, hi));
        Philox gen(seed, id, kEntries);
        const int group = i / group_size;
        auto draw = [&]() {
            switch (group) {
                case 0: return gen.normal();
                case 1: return gen.student_t(5);
                default: return gen.uniform(-5.0, 5.0);
            }
        };
        ClientDataset c;
        c.client_id = i;
        c.features = Matrix(di, static_cast<std::size_t>(n));
        c.targets.resize(di);
        for (std::size_t r = 0; r < di; ++r)
            for (int j = 0; j < n; ++j) c.features(r, j) = draw();
        for (std::size_t r = 0; r < di; ++r) c.targets[r] = draw();
        clients.push_back(std::move(c));
    }
    return make_federation(std::move(clients));
}

std::pair<Matrix, Vector> generate_classification(int d, int n, std::uint64_t seed) {
    if (d < 1 || n < 1) throw Error(ErrorCode::InvalidRange, "classification needs d, n >= 1");
    Philox truth_gen(seed, kPooledStream, kTruth);
    Vector truth(n);
    for (auto& t : truth) t = 0.5 * truth_gen.normal();
    Philox gen(seed, kPooledStream, kEntries);
    Philox coin(seed, kPooledStream, kLabels);
    Matrix a(d, n);
    Vector b(d);
    for (int r = 0; r < d; ++r) {
        double t = 0.0;
        for (int j = 0; j < n; ++j) {
            a(r, j) = gen.normal();
            t += a(r, j) * truth[j];
        }
        double p = 1.0 / (1.0 + std::exp(-t));
        b[r] = coin.uniform() < p ? 1.0 : 0.0;
    }
    return {std::move(a), std::move(b)};
}

std::pair<Matrix, Vector> load_classification(const std::string& path, DataFormat format, std::size_t n_features) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path);

    std::vector<double> labels;
    std::vector<std::vector<std::pair<std::size_t, double>>> rows;
    std::size_t n = n_features;
    std::string line;
    std::size_t lineno = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;

        std::vector<std::pair<std::size_t, double>> row;
        double label = 0.0;
        if (format == DataFormat::Csv) {
            std::vector<std::string_view> fields;
            std::string_view rest(line);
            for (;;) {
                auto pos = rest.find(',');
                fields.push_back(rest.substr(0, pos));
                if (pos == std::string_view::npos) break;
                rest.remove_prefix(pos + 1);
            }
            if (first_content) {
                first_content = false;
                double probe;
                if (!parse_double(fields[0], probe)) continue;  // header row
            }
            if (!parse_double(fields[0], label)) parse_error(path, lineno, "bad label");
            for (std::size_t j = 1; j < fields.size(); ++j) {
                double v;
                if (!parse_double(fields[j], v)) parse_error(path, lineno, "bad value in column " + std::to_string(j));
                row.emplace_back(j - 1, v);
            }
            if (n_features == 0 && n == 0) n = fields.size() - 1;
            if (fields.size() - 1 != n) parse_error(path, lineno, "expected " + std::to_string(n) + " features");
        } else {
            std::istringstream ss(line);
            std::string tok;
            ss >> tok;
            if (!parse_double(tok, label)) parse_error(path, lineno, "bad label '" + tok + "'");
            std::size_t prev = 0;
            while (ss >> tok) {
                if (tok[0] == '#') break;
                auto colon = tok.find(':');
                if (colon == std::string::npos) parse_error(path, lineno, "token '" + tok + "' lacks ':'");
                std::size_t idx = 0;
                auto [p, ec] = std::from_chars(tok.data(), tok.data() + colon, idx);
                if (ec != std::errc() || p != tok.data() + colon || idx == 0)
                    parse_error(path, lineno, "bad index in '" + tok + "'");
                if (idx <= prev) parse_error(path, lineno, "indices must be increasing");
                prev = idx;
                double v;
                if (!parse_double(std::string_view(tok).substr(colon + 1), v))
                    parse_error(path, lineno, "bad value in '" + tok + "'");
                if (n_features != 0 && idx > n_features)
                    parse_error(path, lineno, "index " + std::to_string(idx) + " exceeds n=" + std::to_string(n_features));
                row.emplace_back(idx - 1, v);
                if (n_features == 0) n = std::max(n, idx);
            }
        }
        labels.push_back(label);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error(ErrorCode::ParseError, path + ": no data rows");

    Matrix a(rows.size(), n);
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (auto [j, v] : rows[r]) a(r, j) = v;
    return {std::move(a), coerce_labels(labels)};
}

void write_classification(const std::string& path, const Matrix& a, const Vector& b, DataFormat format) {
    if (a.rows() != b.size()) throw Error(ErrorCode::DimensionMismatch, "labels vs rows");
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::ParseError, "cannot write " + path);
    out << std::setprecision(17);
    for (std::size_t r = 0; r < a.rows(); ++r) {
        out << b[r];
        for (std::size_t j = 0; j < a.cols(); ++j) {
            if (format == DataFormat::Csv)
                out << ',' << a(r, j);
            else if (a(r, j) != 0.0)
                out << ' ' << (j + 1) << ':' << a(r, j);
        }
        out << '\n';
    }
}

std::vector<std::vector<std::size_t>> partition_indices(std::size_t d, int m, std::uint64_t seed) {
    if (m < 1) throw Error(ErrorCode::InvalidRange, "m must be >= 1");
    if (static_cast<std::size_t>(m) > d)
        throw Error(ErrorCode::TooManyClients, std::to_string(m) + " clients for " + std::to_string(d) + " rows");
    std::vector<std::size_t> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    Philox gen(seed, kShuffleStream);
    for (std::size_t i = d; i > 1; --i) {
        auto j = static_cast<std::size_t>(gen.uniform_int(0, static_cast<std::int64_t>(i - 1)));
        std::swap(perm[i - 1], perm[j]);
    }
    const std::size_t base = d / static_cast<std::size_t>(m);
    std::vector<std::vector<std::size_t>> parts(m);
    std::size_t at = 0;
    for (int i = 0; i < m; ++i) {
        std::size_t take = (i + 1 < m) ? base : d - at;
        parts[i].assign(perm.begin() + at, perm.begin() + at + take);
        at += take;
    }
    return parts;
}

Federation partition(const Matrix& a, const Vector& b, int m, std::uint64_t seed) {
    if (a.rows() != b.size()) throw Error(ErrorCode::DimensionMismatch, "labels vs rows");
    auto parts = partition_indices(a.rows(), m, seed);
    std::vector<ClientDataset> clients;
    for (int i = 0; i < m; ++i) {
        ClientDataset c;
        c.client_id = i;
        c.features = Matrix(parts[i].size(), a.cols());
        c.targets.resize(parts[i].size());
        for (std::size_t r = 0; r < parts[i].size(); ++r) {
            std::copy(a.row(parts[i][r]), a.row(parts[i][r]) + a.cols(), c.features.row(r));
            c.targets[r] = b[parts[i][r]];
        }
        clients.push_back(std::move(c));
    }
    return make_federation(std::move(clients));
}

std::pair<Matrix, Vector> pooled(const Federation& fed) {
    Matrix a(fed.d, fed.n);
    Vector b(fed.d);
    std::size_t at = 0;
    for (const auto& c : fed.clients) {
        for (std::size_t r = 0; r < c.rows(); ++r, ++at) {
            std::copy(c.features.row(r), c.features.row(r) + fed.n, a.row(at));
            b[at] = c.targets[r];
        }
    }
    return {std::move(a), std::move(b)};
}

}  // namespace fedadmm
