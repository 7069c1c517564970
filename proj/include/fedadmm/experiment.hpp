#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fedadmm/data.hpp"
#include "fedadmm/solvers.hpp"

namespace fedadmm {

enum class ProblemKind { SyntheticRegression, SyntheticClassification, File };

struct ProblemSpec {
    ProblemKind kind = ProblemKind::SyntheticRegression;
    int m = 9;
    int n = 20;
    std::pair<int, int> d_range{30, 60};
    int d = 600;  // synthetic classification sample count
    std::uint64_t seed = 7;
    std::string path;
    DataFormat format = DataFormat::Libsvm;
    std::size_t n_features = 0;
};

struct ExperimentConfig {
    Algorithm algorithm = Algorithm::CEADMM;
    ProblemSpec problem;
    LossModel loss;
    HyperParams hp;
    std::string output_dir = "out";
    bool emit_csv = true;
    bool emit_json = true;
    bool theory_check = false;
};

// Throws Error(ConfigError) naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

Federation build_federation(const ProblemSpec& problem);

struct TheoryReport {
    bool hypotheses_hold = false;
    std::string note;
    double f_star = 0.0;
    std::size_t descent_violations = 0;
    std::size_t lyapunov_violations = 0;
    std::size_t sandwich_violations = 0;
    std::size_t rate_violations = 0;
    bool limit_agreement = true;
    RateReport rate;

    bool passed() const {
        return hypotheses_hold && descent_violations == 0 && lyapunov_violations == 0 && sandwich_violations == 0 &&
               rate_violations == 0 && limit_agreement;
    }
};

TheoryReport theory_check(Algorithm algorithm, const SolveResult& result, const Federation& fed, const LossModel& model,
                          const HyperParams& hp);

std::string trace_csv(const std::vector<TraceRecord>& trace);
nlohmann::json summary_json(const ExperimentConfig& cfg, const SolveResult& result, const Federation& fed,
                            const std::optional<TheoryReport>& theory);
void write_atomic(const std::string& path, const std::string& content);

enum ExitCode : int { kConverged = 0, kFailed = 1, kMaxIters = 2, kConfigError = 3 };

// Solves, writes trace.csv / summary.json, returns the process exit code.
// require_theory makes a failed theory check an error (the `check` command).
int run_experiment(const ExperimentConfig& cfg, std::ostream& log, bool require_theory = false);

struct SweepCell {
    std::int64_t k0 = 1;
    int repeat = 0;
    std::uint64_t seed = 0;
    std::int64_t iterations = 0;
    std::int64_t rounds = 0;
    double time_s = 0.0;
    bool converged = false;
    std::string error;
};

struct SweepRow {
    std::int64_t k0 = 1;
    double mean_iterations = 0.0;
    double mean_rounds = 0.0;
    double mean_time_s = 0.0;
    int ok = 0;
};

// Repeat r uses problem seed + r.
std::vector<SweepCell> sweep_cells(const ExperimentConfig& cfg, const std::vector<std::int64_t>& k0_values, int repeats,
                                   std::ostream& log);
std::vector<SweepRow> sweep_means(const std::vector<SweepCell>& cells, const std::vector<std::int64_t>& k0_values);
std::string sweep_csv(const std::vector<SweepRow>& rows);
int run_sweep(const ExperimentConfig& cfg, const std::vector<std::int64_t>& k0_values, int repeats, std::ostream& log);

}  // namespace fedadmm
