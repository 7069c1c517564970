#include "fedadmm/fedcore.hpp"

#include <string>

#include "fedadmm/errors.hpp"

namespace fedadmm {

void CommLedger::record_round(std::size_t m, int uploads_per_client) {
    ++rounds;
    uplink_vectors += static_cast<std::int64_t>(uploads_per_client) * static_cast<std::int64_t>(m);
    downlink_vectors += static_cast<std::int64_t>(m);
}

std::int64_t tau(std::int64_t k, std::int64_t k0) {
    return (k / k0) * k0;
}

double sigma_total(const std::vector<ClientState>& clients) {
    double s = 0.0;
    for (const auto& c : clients) s += c.sigma;
    return s;
}

Vector aggregate(const std::vector<ClientState>& clients) {
    if (clients.empty()) throw Error(ErrorCode::DimensionMismatch, "aggregate over zero clients");
    const std::size_t n = clients.front().x.size();
    Vector acc(n, 0.0);
    double sigma = 0.0;
    for (const auto& c : clients) {
        if (c.x.size() != n || c.pi.size() != n)
            throw Error(ErrorCode::DimensionMismatch, "client vectors differ in length");
        for (std::size_t j = 0; j < n; ++j) acc[j] += c.sigma * c.x[j] + c.pi[j];
        sigma += c.sigma;
    }
    for (double& v : acc) v /= sigma;
    return acc;
}

Vector dual_update(const ClientState& state, const Vector& y) {
    if (state.x.size() != y.size() || state.pi.size() != y.size())
        throw Error(ErrorCode::DimensionMismatch, "dual update");
    Vector pi(state.pi);
    for (std::size_t j = 0; j < y.size(); ++j) pi[j] += state.sigma * (state.x[j] - y[j]);
    return pi;
}

WorkerPool::WorkerPool(std::size_t threads) {
    for (std::size_t t = 1; t < threads; ++t) workers_.emplace_back([this] { worker_loop(); });
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lk(mu_);
        stop_ = true;
    }
    wake_.notify_all();
    for (auto& w : workers_) w.join();
}

void WorkerPool::drain() {
    for (;;) {
        std::size_t i;
        const std::function<void(std::size_t)>* job;
        {
            std::lock_guard lk(mu_);
            if (next_ >= job_size_) return;
            i = next_++;
            job = job_;
        }
        try {
            (*job)(i);
        } catch (...) {
            std::lock_guard lk(mu_);
            if (!error_) error_ = std::current_exception();
        }
        std::lock_guard lk(mu_);
        if (++finished_ == job_size_) done_.notify_all();
    }
}

void WorkerPool::worker_loop() {
    std::uint64_t seen = 0;
    for (;;) {
        {
            std::unique_lock lk(mu_);
            wake_.wait(lk, [&] { return stop_ || generation_ != seen; });
            if (stop_) return;
            seen = generation_;
        }
        drain();
    }
}

void WorkerPool::parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (workers_.empty() || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    {
        std::lock_guard lk(mu_);
        job_ = &fn;
        job_size_ = n;
        next_ = 0;
        finished_ = 0;
        error_ = nullptr;
        ++generation_;
    }
    wake_.notify_all();
    drain();
    std::unique_lock lk(mu_);
    done_.wait(lk, [&] { return finished_ == job_size_; });
    job_ = nullptr;
    job_size_ = 0;
    if (error_) std::rethrow_exception(error_);
}

ServerState step_schedule(const ServerState& server, const ScheduleOptions& opts, std::vector<ClientState>& clients,
                          const LocalKernel& kernel, WorkerPool* pool) {
    ServerState next = server;
    if (in_schedule(server.k, opts.k0)) {
        next.y = opts.aggregator ? opts.aggregator(clients) : aggregate(clients);
        next.ledger.record_round(clients.size(), opts.uploads_per_client);
    }
    std::vector<ClientState> updated(clients.size());
    auto body = [&](std::size_t i) { updated[i] = kernel(i, clients[i], next.y); };
    if (pool)
        pool->parallel_for(clients.size(), body);
    else
        for (std::size_t i = 0; i < clients.size(); ++i) body(i);
    clients = std::move(updated);
    next.sigma_total = sigma_total(clients);
    ++next.k;
    return next;
}

}  // namespace fedadmm
