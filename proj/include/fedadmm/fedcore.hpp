#pragma once

#include <condition_variable>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "fedadmm/linalg.hpp"

namespace fedadmm {

struct ClientState {
    Vector x;
    Vector pi;
    Vector g;  // w_i * grad f_i(x)
    double sigma = 1.0;
};

struct CommLedger {
    std::int64_t rounds = 0;
    std::int64_t uplink_vectors = 0;
    std::int64_t downlink_vectors = 0;

    // one round: every client uploads `uploads_per_client` vectors, server broadcasts one each
    void record_round(std::size_t m, int uploads_per_client = 2);
    std::int64_t bytes(std::size_t n) const { return (uplink_vectors + downlink_vectors) * static_cast<std::int64_t>(n) * 8; }
};

struct ServerState {
    Vector y;
    std::int64_t k = 0;
    CommLedger ledger;
    double sigma_total = 0.0;

    std::int64_t rounds() const { return ledger.rounds; }
};

std::int64_t tau(std::int64_t k, std::int64_t k0);
inline bool in_schedule(std::int64_t k, std::int64_t k0) { return tau(k, k0) == k; }

double sigma_total(const std::vector<ClientState>& clients);

// (sum sigma_i x_i + sum pi_i) / sigma, folded in client order
Vector aggregate(const std::vector<ClientState>& clients);
Vector dual_update(const ClientState& state, const Vector& y);

// Runs fn(i) for i in [0, n) on a fixed set of worker threads. Each index is
// handled by exactly one call, so results do not depend on the thread count.
class WorkerPool {
public:
    explicit WorkerPool(std::size_t threads = 1);
    ~WorkerPool();
    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);
    std::size_t threads() const { return workers_.size() + 1; }

private:
    void worker_loop();
    void drain();

    std::vector<std::thread> workers_;
    std::mutex mu_;
    std::condition_variable wake_, done_;
    const std::function<void(std::size_t)>* job_ = nullptr;
    std::size_t job_size_ = 0;
    std::size_t next_ = 0;
    std::size_t finished_ = 0;
    std::uint64_t generation_ = 0;
    std::exception_ptr error_;
    bool stop_ = false;
};

using LocalKernel = std::function<ClientState(std::size_t i, const ClientState& state, const Vector& y)>;

struct ScheduleOptions {
    std::int64_t k0 = 1;
    int uploads_per_client = 2;
    // aggregation rule; defaults to aggregate()
    std::function<Vector(const std::vector<ClientState>&)> aggregator;
};

// One iteration of the k0-periodic schedule: aggregate if k is in K, run the
// local kernels against y, then advance k.
ServerState step_schedule(const ServerState& server, const ScheduleOptions& opts, std::vector<ClientState>& clients,
                          const LocalKernel& kernel, WorkerPool* pool = nullptr);

}  // namespace fedadmm
