#pragma once

// Desk-scale experiment driver: target pmfs, moment-matching fits of the
// relaxations, temperature sweeps and fit metrics.

#include "igr/common.hpp"
#include "igr/recovery.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace igr {

enum class TargetFamily { Poisson, Binomial, NegBinomial, Custom };

/// A target distribution. Text form: "poisson:50", "binomial:12,0.3",
/// "negbinomial:50,0.6", "custom:0.2,0.3,0.5".
struct TargetSpec {
    TargetFamily family = TargetFamily::Poisson;
    double lambda = 0.0;   // poisson
    long trials = 0;       // binomial N, negative binomial r
    double p = 0.0;        // binomial / negative binomial success probability
    std::vector<double> probs; // custom

    static TargetSpec poisson(double lambda) { return {TargetFamily::Poisson, lambda, 0, 0.0, {}}; }
    static TargetSpec binomial(long n, double p) { return {TargetFamily::Binomial, 0.0, n, p, {}}; }
    static TargetSpec negbinomial(long r, double p) { return {TargetFamily::NegBinomial, 0.0, r, p, {}}; }
    static TargetSpec custom(std::vector<double> probs) { return {TargetFamily::Custom, 0.0, 0, 0.0, std::move(probs)}; }

    /// Throws ConfigError on malformed text or invalid parameters.
    static TargetSpec parse(std::string_view text);
    std::string to_string() const;
    void validate() const;
    bool infinite() const { return family == TargetFamily::Poisson || family == TargetFamily::NegBinomial; }
};

bool operator==(const TargetSpec& a, const TargetSpec& b);

/// Exact pmf by log-space recurrences. Infinite families are cut at the
/// smallest T with cdf(T) >= 1 - 1e-10 and renormalized; negative binomial
/// uses P(k) = C(k + r - 1, k) p^r (1 - p)^k.
DiscretePmf build_target(const TargetSpec& spec);

enum class ModelKind { IgrI, IgrSb, IgrPlanar, Gs };

std::string_view to_string(ModelKind kind);
ModelKind model_kind_from_string(std::string_view name);

/// How a trained relaxation is turned into the pmf that is scored:
/// Discrete counts discretized draws (argmax for GS); Mean averages the
/// completed relaxed draws.
enum class RecoveryMode { Discrete, Mean };

std::string_view to_string(RecoveryMode mode);
RecoveryMode recovery_mode_from_string(std::string_view name);

struct RunConfig {
    ModelKind model = ModelKind::IgrSb;
    TargetSpec target = TargetSpec::poisson(50.0);
    std::optional<long> k;     // categories for finite models; defaults to the target's support size
    std::optional<double> rho; // stick-breaking truncation precision (igr-sb)
    double tau = 0.1;
    std::vector<double> tau_grid = default_tau_grid();
    long steps = 1000;
    long batch = 64;
    std::uint64_t seed = 0;
    double lr = 0.01;
    long recovery_samples = 100000;
    RecoveryMode recovery = RecoveryMode::Discrete;
    int flow_layers = 2;
    bool record_wall_time = false;
    std::string out; // output directory; not part of the results

    static std::vector<double> default_tau_grid()
    {
        return {0.01, 0.03, 0.07, 0.1, 0.25, 0.4, 0.5, 0.67, 0.85, 1.0};
    }
    /// Throws ConfigError on inconsistent settings.
    void validate() const;
};

bool operator==(const RunConfig& a, const RunConfig& b);

struct Metrics {
    double tv = 0.0;
    double kl = 0.0;
    double l2 = 0.0;
};

/// Metrics on the zero-padded union of both supports, with the tail mass of
/// either pmf as one extra category. kl = sum p log(p/q) after adding 1e-12
/// to every entry and renormalizing.
Metrics compare_pmfs(const DiscretePmf& target, const DiscretePmf& recovered);

struct FitReport {
    RunConfig config;
    DiscretePmf target;
    DiscretePmf recovered;
    Metrics metrics;
    double final_loss = 0.0;
    std::vector<double> trajectory; // mean batch loss per step
    std::optional<double> wall_seconds;
    bool aborted = false;
    std::string diagnostic;
};

bool operator==(const FitReport& a, const FitReport& b);

/// Moment matching at config.tau followed by MC recovery and metrics. A
/// non-finite loss or gradient stops the run; the report is then marked
/// aborted and carries the trajectory up to that point.
FitReport fit(const RunConfig& config);

struct SweepEntry {
    double tau = 0.0;
    std::optional<FitReport> report;
    std::string error; // set when the run threw
};

struct SweepResult {
    std::vector<SweepEntry> entries;
    std::optional<std::size_t> best;

    const FitReport& best_report() const;
};

/// Index of the completed, non-aborted entry with the smallest tv; ties go to
/// the lower temperature.
std::optional<std::size_t> select_best(const std::vector<SweepEntry>& entries);

/// One fit per temperature in config.tau_grid, all with config.seed, run on up
/// to `threads` workers (0: hardware concurrency).
SweepResult sweep(const RunConfig& config, unsigned threads = 0);

/// Writes results.json and pmf.csv into `dir` (created if missing).
void emit(const FitReport& report, const std::string& dir);
void emit(const SweepResult& result, const std::string& dir);

std::string results_json(const FitReport& report);
std::string pmf_csv(const FitReport& report);

} // namespace igr
