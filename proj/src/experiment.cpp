#include "fedadmm/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "fedadmm/errors.hpp"

namespace fedadmm {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& msg) {
    throw Error(ErrorCode::ConfigError, path + ": " + msg);
}

// Object view that remembers which keys were read so leftovers can be rejected.
class Section {
public:
    Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) config_error(path_.empty() ? "<root>" : path_, "expected an object");
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return j_.contains(key); }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        if (!j_.contains(key)) config_error(at(key), "missing");
        return j_.at(key);
    }

    Section child(const std::string& key) { return Section(raw(key), at(key)); }

    std::string str(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_string()) config_error(at(key), "expected a string");
        return v.get<std::string>();
    }
    std::string str(const std::string& key, const std::string& fallback) { return has(key) ? str(key) : fallback; }

    double num(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number()) config_error(at(key), "expected a number");
        return v.get<double>();
    }
    double num(const std::string& key, double fallback) { return has(key) ? num(key) : fallback; }

    std::int64_t integer(const std::string& key) {
        const json& v = raw(key);
        if (!v.is_number_integer()) config_error(at(key), "expected an integer");
        return v.get<std::int64_t>();
    }
    std::int64_t integer(const std::string& key, std::int64_t fallback) { return has(key) ? integer(key) : fallback; }

    bool boolean(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        const json& v = raw(key);
        if (!v.is_boolean()) config_error(at(key), "expected true or false");
        return v.get<bool>();
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) config_error(at(it.key()), "unknown field");
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

ProblemSpec parse_problem(Section s) {
    ProblemSpec p;
    const std::string type = s.str("type");
    if (type == "synthetic_regression") {
        p.kind = ProblemKind::SyntheticRegression;
        p.m = static_cast<int>(s.integer("m"));
        p.n = static_cast<int>(s.integer("n"));
        const json& range = s.raw("d_range");
        if (!range.is_array() || range.size() != 2 || !range[0].is_number_integer() || !range[1].is_number_integer())
            config_error(s.at("d_range"), "expected [lo, hi] integers");
        p.d_range = {range[0].get<int>(), range[1].get<int>()};
        if (p.m < 1 || p.m % 3 != 0) config_error(s.at("m"), "must be a positive multiple of 3");
        if (p.n < 1) config_error(s.at("n"), "must be >= 1");
        if (p.d_range.first < 1 || p.d_range.first > p.d_range.second) config_error(s.at("d_range"), "need 1 <= lo <= hi");
    } else if (type == "synthetic_classification") {
        p.kind = ProblemKind::SyntheticClassification;
        p.d = static_cast<int>(s.integer("d"));
        p.n = static_cast<int>(s.integer("n"));
        p.m = static_cast<int>(s.integer("m"));
        if (p.d < 1 || p.n < 1) config_error(s.at("d"), "d and n must be >= 1");
        if (p.m < 1 || p.m > p.d) config_error(s.at("m"), "need 1 <= m <= d");
    } else if (type == "file") {
        p.kind = ProblemKind::File;
        p.path = s.str("path");
        const std::string fmt = s.str("format", "libsvm");
        if (fmt == "libsvm")
            p.format = DataFormat::Libsvm;
        else if (fmt == "csv")
            p.format = DataFormat::Csv;
        else
            config_error(s.at("format"), "expected libsvm or csv");
        p.m = static_cast<int>(s.integer("m"));
        if (p.m < 1) config_error(s.at("m"), "must be >= 1");
        std::int64_t nf = s.integer("n_features", 0);
        if (nf < 0) config_error(s.at("n_features"), "must be >= 0");
        p.n_features = static_cast<std::size_t>(nf);
    } else {
        config_error(s.at("type"), "expected synthetic_regression, synthetic_classification or file");
    }
    std::int64_t seed = s.integer("seed", 0);
    if (seed < 0) config_error(s.at("seed"), "must be >= 0");
    p.seed = static_cast<std::uint64_t>(seed);
    s.finish();
    return p;
}

LossModel parse_loss(Section s) {
    const std::string family = s.str("family");
    LossModel m;
    if (family == "least_squares") {
        m = LossModel::least_squares();
    } else if (family == "logistic") {
        m = LossModel::logistic(s.num("mu", 0.01));
        if (!(m.mu > 0.0)) config_error(s.at("mu"), "must be > 0");
    } else {
        config_error(s.at("family"), "expected least_squares or logistic");
    }
    s.finish();
    return m;
}

HyperParams parse_hyperparams(Section s) {
    HyperParams hp;
    hp.k0 = s.integer("k0", 1);
    if (hp.k0 < 1) config_error(s.at("k0"), "must be >= 1");
    if (s.has("sigma")) {
        Section sig = s.child("sigma");
        const std::string rule = sig.str("rule");
        if (rule == "log_scale") {
            hp.sigma_rule = LogScaleRule{sig.num("a", 1.0)};
        } else if (rule == "theory") {
            hp.sigma_rule = TheoryMultiplier{sig.num("c", 2.1)};
        } else if (rule == "explicit") {
            const json& v = sig.raw("values");
            if (!v.is_array()) config_error(sig.at("values"), "expected an array of numbers");
            ExplicitSigma e;
            for (const auto& x : v) {
                if (!x.is_number()) config_error(sig.at("values"), "expected numbers");
                e.values.push_back(x.get<double>());
            }
            hp.sigma_rule = e;
        } else {
            config_error(sig.at("rule"), "expected log_scale, theory or explicit");
        }
        sig.finish();
    }
    if (s.has("curvature")) {
        Section cur = s.child("curvature");
        const std::string mode = cur.str("mode");
        if (mode == "scalar")
            hp.curvature = CurvatureMode::scalar();
        else if (mode == "scaled_gram")
            hp.curvature = CurvatureMode::scaled_gram(cur.num("r", 6.0));
        else if (mode == "full_gram")
            hp.curvature = CurvatureMode::full_gram();
        else
            config_error(cur.at("mode"), "expected scalar, scaled_gram or full_gram");
        cur.finish();
    }
    if (s.has("gamma")) {
        hp.gamma = s.num("gamma");
        if (!(*hp.gamma > 0.0)) config_error(s.at("gamma"), "must be > 0");
    }
    hp.max_iters = s.integer("max_iters", hp.max_iters);
    if (hp.max_iters < 0) config_error(s.at("max_iters"), "must be >= 0");
    hp.tol_scale = s.num("tol_scale", hp.tol_scale);
    if (!(hp.tol_scale >= 0.0)) config_error(s.at("tol_scale"), "must be >= 0");
    hp.inner_tol = s.num("inner_tol", hp.inner_tol);
    if (!(hp.inner_tol > 0.0)) config_error(s.at("inner_tol"), "must be > 0");
    const std::string init = s.str("dual_init", "zero");
    if (init == "zero")
        hp.dual_init = DualInit::Zero;
    else if (init == "gradient")
        hp.dual_init = DualInit::Gradient;
    else
        config_error(s.at("dual_init"), "expected zero or gradient");
    std::int64_t threads = s.integer("threads", 1);
    if (threads < 1) config_error(s.at("threads"), "must be >= 1");
    hp.threads = static_cast<std::size_t>(threads);
    s.finish();
    return hp;
}

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

bool is_exact(Algorithm a) { return a == Algorithm::CEADMM || a == Algorithm::ADMM; }
bool is_inexact(Algorithm a) { return a == Algorithm::ICEADMM || a == Algorithm::IADMM; }

}  // namespace

ExperimentConfig parse_config(const json& doc) {
    Section root(doc, "");
    ExperimentConfig cfg;
    const std::string alg = root.str("algorithm");
    auto parsed = parse_algorithm(alg);
    if (!parsed) config_error("algorithm", "unknown algorithm '" + alg + "'");
    cfg.algorithm = *parsed;
    cfg.problem = parse_problem(root.child("problem"));
    if (root.has("loss"))
        cfg.loss = parse_loss(root.child("loss"));
    else
        cfg.loss = cfg.problem.kind == ProblemKind::SyntheticRegression ? LossModel::least_squares()
                                                                         : LossModel::logistic(0.01);
    if (root.has("hyperparams")) cfg.hp = parse_hyperparams(root.child("hyperparams"));
    cfg.output_dir = root.str("output_dir", cfg.output_dir);
    if (root.has("emit")) {
        const json& e = root.raw("emit");
        if (!e.is_array()) config_error("emit", "expected an array");
        cfg.emit_csv = cfg.emit_json = false;
        for (const auto& v : e) {
            if (v == "csv")
                cfg.emit_csv = true;
            else if (v == "json")
                cfg.emit_json = true;
            else
                config_error("emit", "entries must be csv or json");
        }
    }
    cfg.theory_check = root.boolean("theory_check", false);
    cfg.hp.record_timing = root.boolean("record_timing", false);
    root.finish();

    if (cfg.loss.family == LossFamily::Logistic && cfg.hp.curvature.kind == CurvatureKind::FullGram && is_inexact(cfg.algorithm))
        config_error("hyperparams.curvature.mode", "full_gram is only defined for least squares");
    if (cfg.loss.family == LossFamily::Logistic && cfg.hp.curvature.kind == CurvatureKind::ScaledGram &&
        !(cfg.hp.curvature.r > 4.0 + cfg.loss.mu))
        config_error("hyperparams.curvature.r", "must exceed 4 + mu for logistic loss");
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, path + ": cannot open");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigError, path + ": " + e.what());
    }
    return parse_config(doc);
}

Federation build_federation(const ProblemSpec& p) {
    switch (p.kind) {
        case ProblemKind::SyntheticRegression: return generate_regression(p.m, p.n, p.d_range, p.seed);
        case ProblemKind::SyntheticClassification: {
            auto [a, b] = generate_classification(p.d, p.n, p.seed);
            return partition(a, b, p.m, p.seed);
        }
        case ProblemKind::File: {
            auto [a, b] = load_classification(p.path, p.format, p.n_features);
            return partition(a, b, p.m, p.seed);
        }
    }
    throw Error(ErrorCode::ConfigError, "problem: unknown kind");
}

TheoryReport theory_check(Algorithm algorithm, const SolveResult& result, const Federation& fed, const LossModel& model,
                          const HyperParams& hp) {
    TheoryReport rep;
    if (!is_exact(algorithm) && !is_inexact(algorithm)) {
        rep.note = std::string("no certified inequalities for ") + algorithm_name(algorithm);
        return rep;
    }
    const auto& c = result.constants;
    rep.hypotheses_hold = true;
    for (std::size_t i = 0; i < c.m(); ++i) {
        double q = is_exact(algorithm) ? theta(c.w[i], c.r[i], c.sigma[i]) : vartheta(c.w[i], c.r[i], c.sigma[i]);
        if (!(q > 0.0)) rep.hypotheses_hold = false;
    }
    if (!rep.hypotheses_hold) {
        rep.note = is_exact(algorithm) ? "sigma_i does not exceed 2 w_i r_i for every client"
                                       : "sigma_i does not exceed 3 sqrt(2) w_i r_i for every client";
        return rep;
    }
    rep.f_star = oracle_optimum(fed, model).f;
    const auto& trace = result.trace;
    if (is_exact(algorithm)) {
        // the descent inequality leans on pi^k = -g^k, true from k = 1 on, and at k = 0 only under gradient init
        const std::int64_t from = hp.dual_init == DualInit::Gradient ? 0 : 1;
        rep.descent_violations = check_descent_lemma(trace, c, 1e-8, from).size();
        rep.sandwich_violations = check_sandwich(trace, rep.f_star, 1e-8, from).size();
        rep.rate = check_rate_bound(trace, c, rep.f_star, Variant::CEADMM);
    } else {
        rep.lyapunov_violations = check_lyapunov(trace, 1e-10, 1).size();
        rep.rate = check_rate_bound(trace, c, rep.f_star, Variant::ICEADMM);
    }
    rep.rate_violations = rep.rate.violations.size();
    if (result.converged && !trace.empty()) {
        const auto& last = trace.back();
        const double tol = 1e-6 * (1.0 + std::abs(rep.f_star));
        rep.limit_agreement = std::abs(last.L - last.F_X) <= tol && std::abs(last.L - last.f_y) <= tol;
    }
    return rep;
}

std::string trace_csv(const std::vector<TraceRecord>& trace) {
    std::string out =
        "k,in_K,f_y,F_X,L,phi,grad_f_sq,grad_F_sq,res_dual,res_primal,res_consensus,rounds,elapsed_s\n";
    for (const auto& r : trace) {
        out += std::to_string(r.k);
        out += r.in_K ? ",1," : ",0,";
        for (double v : {r.f_y, r.F_X, r.L, r.phi, r.grad_f_sq, r.grad_F_sq, r.residuals.dual, r.residuals.primal,
                         r.residuals.consensus}) {
            out += fmt17(v);
            out += ',';
        }
        out += std::to_string(r.rounds);
        out += ',';
        out += fmt17(r.elapsed_s);
        out += '\n';
    }
    return out;
}

json summary_json(const ExperimentConfig& cfg, const SolveResult& result, const Federation& fed,
                  const std::optional<TheoryReport>& theory) {
    json s;
    s["algorithm"] = algorithm_name(cfg.algorithm);
    s["m"] = fed.m();
    s["n"] = fed.n;
    s["d"] = fed.d;
    s["k0"] = result.constants.k0;
    s["iterations"] = result.iterations;
    s["rounds"] = result.rounds;
    s["converged"] = result.converged;
    s["uplink_vectors"] = result.ledger.uplink_vectors;
    s["downlink_vectors"] = result.ledger.downlink_vectors;
    s["communication_bytes"] = result.ledger.bytes(fed.n);
    s["solve_time_s"] = result.elapsed_s;
    s["sigma"] = result.constants.sigma;
    if (!result.trace.empty()) {
        const auto& last = result.trace.back();
        s["final"] = {{"f_y", last.f_y},
                      {"F_X", last.F_X},
                      {"L", last.L},
                      {"grad_f_sq", last.grad_f_sq},
                      {"grad_F_sq", last.grad_F_sq},
                      {"res_dual", last.residuals.dual},
                      {"res_primal", last.residuals.primal},
                      {"res_consensus", last.residuals.consensus}};
    }
    s["y_final"] = result.y_final;
    if (theory) {
        json t;
        t["hypotheses_hold"] = theory->hypotheses_hold;
        t["note"] = theory->note;
        t["passed"] = theory->passed();
        t["f_star"] = theory->f_star;
        t["descent_violations"] = theory->descent_violations;
        t["lyapunov_violations"] = theory->lyapunov_violations;
        t["sandwich_violations"] = theory->sandwich_violations;
        t["limit_agreement"] = theory->limit_agreement;
        t["rho"] = theory->rate.rho;
        t["varrho"] = theory->rate.varrho;
        json v = json::array();
        for (const auto& p : theory->rate.violations) v.push_back({{"k", p.k}, {"lhs", p.lhs}, {"rhs", p.rhs}});
        t["rate_violations"] = v;
        s["theory"] = t;
    }
    return s;
}

void write_atomic(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp);
        out << content;
        if (!out.flush()) throw std::runtime_error("short write to " + tmp);
    }
    fs::rename(tmp, path);
}

int run_experiment(const ExperimentConfig& cfg, std::ostream& log, bool require_theory) {
    try {
        Federation fed = build_federation(cfg.problem);
        SolveResult result = run(cfg.algorithm, fed, cfg.loss, cfg.hp);
        std::optional<TheoryReport> theory;
        if (cfg.theory_check || require_theory) theory = theory_check(cfg.algorithm, result, fed, cfg.loss, cfg.hp);

        fs::create_directories(cfg.output_dir);
        const fs::path dir(cfg.output_dir);
        if (cfg.emit_csv) write_atomic((dir / "trace.csv").string(), trace_csv(result.trace));
        if (cfg.emit_json) write_atomic((dir / "summary.json").string(), summary_json(cfg, result, fed, theory).dump(2) + "\n");

        log << algorithm_name(cfg.algorithm) << ": " << (result.converged ? "converged" : "hit max_iters") << " after "
            << result.iterations << " iterations, " << result.rounds << " rounds\n";
        if (theory) {
            log << "theory check: " << (theory->passed() ? "pass" : "FAIL");
            if (!theory->note.empty()) log << " (" << theory->note << ")";
            log << " descent=" << theory->descent_violations << " lyapunov=" << theory->lyapunov_violations
                << " sandwich=" << theory->sandwich_violations << " rate=" << theory->rate_violations
                << " limit=" << (theory->limit_agreement ? "ok" : "off") << "\n";
            if (require_theory && !theory->passed()) return kFailed;
        }
        return result.converged ? kConverged : kMaxIters;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::ConfigError ? kConfigError : kFailed;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kFailed;
    }
}

std::vector<SweepCell> sweep_cells(const ExperimentConfig& cfg, const std::vector<std::int64_t>& k0_values, int repeats,
                                   std::ostream& log) {
    std::vector<SweepCell> cells;
    for (std::int64_t k0 : k0_values) {
        for (int r = 0; r < repeats; ++r) {
            SweepCell cell;
            cell.k0 = k0;
            cell.repeat = r;
            cell.seed = cfg.problem.seed + static_cast<std::uint64_t>(r);
            try {
                ProblemSpec p = cfg.problem;
                p.seed = cell.seed;
                HyperParams hp = cfg.hp;
                hp.k0 = k0;
                Federation fed = build_federation(p);
                SolveResult res = run(cfg.algorithm, fed, cfg.loss, hp);
                cell.iterations = res.iterations;
                cell.rounds = res.rounds;
                cell.time_s = res.elapsed_s;
                cell.converged = res.converged;
            } catch (const std::exception& e) {
                cell.error = e.what();
                log << "sweep cell k0=" << k0 << " repeat=" << r << " failed: " << e.what() << "\n";
            }
            cells.push_back(cell);
        }
    }
    return cells;
}

std::vector<SweepRow> sweep_means(const std::vector<SweepCell>& cells, const std::vector<std::int64_t>& k0_values) {
    std::vector<SweepRow> rows;
    for (std::int64_t k0 : k0_values) {
        SweepRow row;
        row.k0 = k0;
        for (const auto& c : cells) {
            if (c.k0 != k0 || !c.error.empty()) continue;
            row.mean_iterations += static_cast<double>(c.iterations);
            row.mean_rounds += static_cast<double>(c.rounds);
            row.mean_time_s += c.time_s;
            ++row.ok;
        }
        if (row.ok > 0) {
            row.mean_iterations /= row.ok;
            row.mean_rounds /= row.ok;
            row.mean_time_s /= row.ok;
        } else {
            row.mean_iterations = row.mean_rounds = row.mean_time_s = std::nan("");
        }
        rows.push_back(row);
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "k0,mean_iterations,mean_rounds,mean_time_s\n";
    for (const auto& r : rows)
        out += std::to_string(r.k0) + "," + fmt17(r.mean_iterations) + "," + fmt17(r.mean_rounds) + "," +
               fmt17(r.mean_time_s) + "\n";
    return out;
}

int run_sweep(const ExperimentConfig& cfg, const std::vector<std::int64_t>& k0_values, int repeats, std::ostream& log) {
    try {
        if (repeats < 1) throw Error(ErrorCode::ConfigError, "--repeats: must be >= 1");
        if (k0_values.empty()) throw Error(ErrorCode::ConfigError, "--k0: empty list");
        for (auto k0 : k0_values)
            if (k0 < 1) throw Error(ErrorCode::ConfigError, "--k0: values must be >= 1");
        auto cells = sweep_cells(cfg, k0_values, repeats, log);
        auto rows = sweep_means(cells, k0_values);

        json detail = json::array();
        for (const auto& c : cells)
            detail.push_back({{"k0", c.k0},
                              {"repeat", c.repeat},
                              {"seed", c.seed},
                              {"iterations", c.iterations},
                              {"rounds", c.rounds},
                              {"time_s", c.time_s},
                              {"converged", c.converged},
                              {"error", c.error}});
        fs::create_directories(cfg.output_dir);
        const fs::path dir(cfg.output_dir);
        write_atomic((dir / "sweep.csv").string(), sweep_csv(rows));
        write_atomic((dir / "sweep_cells.json").string(), detail.dump(2) + "\n");
        for (const auto& r : rows)
            log << "k0=" << r.k0 << " mean_iterations=" << r.mean_iterations << " mean_rounds=" << r.mean_rounds
                << " (" << r.ok << "/" << repeats << " ok)\n";
        return kConverged;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::ConfigError ? kConfigError : kFailed;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << "\n";
        return kFailed;
    }
}

}  // namespace fedadmm
