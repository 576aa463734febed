// Copyright 2026 the polya-urn authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace polya {

/// Built-in reinforcement families. sigma_n is the mass added at step n
/// (n >= 1); tau_n = tau_0 + sigma_1 + ... + sigma_n is the total mass.
enum class Family {
    constant,     // sigma_n = c, c > 0
    log_power,    // sigma_n = log(n+2)^a, a > 0  (n+2 keeps sigma_1 positive)
    power_law,    // sigma_n = n^a, a > 0
    geometric,    // sigma_n = r^n, r > 1
    exp_sqrt,     // sigma_n = exp(sqrt(n))
    decay_power,  // sigma_n = n^-a, a > 0
    custom,       // tabulated prefix plus an extrapolation rule
};

/// How a custom table extends beyond its last tabulated index.
enum class TailRule {
    none,       // undefined past the table; tail-dependent queries fail
    constant,   // sigma_n = sigma_last
    power,      // sigma_n = sigma_last * (n / n_last)^p
    geometric,  // sigma_n = sigma_last * rho^(n - n_last)
};

struct CustomTable {
    std::vector<double> sigma;  // sigma[k] is sigma_{k+1}
    TailRule tail = TailRule::none;
    double tail_param = 0.0;  // p for power, rho for geometric
};

/// Immutable description of a reinforcement sequence. Safe to share across
/// threads; all derived quantities are pure functions of (spec, n).
class SequenceSpec {
  public:
    static SequenceSpec constant(double c, double tau0);
    static SequenceSpec log_power(double a, double tau0);
    static SequenceSpec power_law(double a, double tau0);
    static SequenceSpec geometric(double r, double tau0);
    static SequenceSpec exp_sqrt(double tau0);
    static SequenceSpec decay_power(double a, double tau0);
    static SequenceSpec custom(CustomTable table, double tau0);

    /// Parses the two-column text format: one "n sigma_n" row per line
    /// (n = 1,2,... consecutive), '#' comments, and an optional trailing
    /// stanza "extrapolate {none|constant|power P|geometric RHO}".
    static SequenceSpec custom_from_file(const std::filesystem::path& path, double tau0);

    /// Builds a spec from (name, named parameters), the CLI/config surface.
    /// Names: constant, logpower, powerlaw, geometric, expsqrt, decaypower.
    static SequenceSpec from_name(const std::string& family_name,
                                  const std::map<std::string, double>& params, double tau0);

    Family family() const { return family_; }
    double param() const { return param_; }
    double tau0() const { return tau0_; }
    const CustomTable* table() const { return table_ ? &*table_ : nullptr; }

    std::string family_name() const;
    /// Compact parameter label for CSV provenance, e.g. "c=1" or "r=2".
    std::string params_label() const;

  private:
    SequenceSpec(Family family, double param, double tau0);

    Family family_;
    double param_;
    double tau0_;
    std::optional<CustomTable> table_;
};

/// sigma_n for n >= 1. Throws std::invalid_argument for n < 1 and for
/// custom specs queried past their table without a tail rule.
double sigma(const SequenceSpec& spec, std::int64_t n);

/// log sigma_n, stable for fast-growing families.
double log_sigma(const SequenceSpec& spec, std::int64_t n);

struct TauValue {
    double linear;    // saturates at numeric_limits<double>::max()
    double log;       // always finite while representable as a log
    bool saturated;   // true once the linear scale cannot hold tau_n
};

/// tau_n for n >= 0. Closed form for constant/geometric, accumulated
/// otherwise (log-sum-exp once the linear scale saturates).
TauValue tau_value(const SequenceSpec& spec, std::int64_t n);
double tau(const SequenceSpec& spec, std::int64_t n);
double log_tau(const SequenceSpec& spec, std::int64_t n);

struct StepRatios {
    double sigma_over_tau;  // s_n = sigma_n / tau_n, in (0,1)
    double tau_ratio;       // r_n = tau_{n-1} / tau_n, in (0,1); s_n + r_n = 1
};

/// The one-step mixing weights of the proportion recursion
/// theta_n = r_n * theta_{n-1} + s_n * I_n, for n >= 1.
StepRatios step_ratios(const SequenceSpec& spec, std::int64_t n);

/// Incremental walker over n = 0, 1, 2, ...; O(1) per step. Keeps tau on the
/// linear scale while representable and switches to log-sum-exp accumulation
/// once it saturates, so ratios stay accurate for arbitrarily fast growth.
class SequenceCursor {
  public:
    explicit SequenceCursor(const SequenceSpec& spec);

    void advance();  // n -> n+1

    std::int64_t n() const { return n_; }
    double sigma() const { return sigma_; }     // sigma_n, valid for n >= 1
    double log_sigma() const { return log_sigma_; }
    double tau() const;                         // saturates at max double
    double log_tau() const { return log_tau_; }
    double prev_log_tau() const { return prev_log_tau_; }
    bool saturated() const { return saturated_; }
    StepRatios ratios() const;                  // (s_n, r_n), valid for n >= 1

  private:
    const SequenceSpec* spec_;
    std::int64_t n_;
    double sigma_ = 0.0;
    double log_sigma_ = 0.0;
    double tau_linear_;       // running compensated sum while not saturated
    double tau_comp_ = 0.0;   // Neumaier compensation term
    double log_tau_;
    double prev_tau_linear_;
    double prev_log_tau_;
    bool saturated_ = false;
};

/// Precomputes (s_n, r_n) for n = 1..horizon in one cursor pass. Trials of an
/// ensemble share one table instead of re-deriving the sequence per trial.
std::vector<StepRatios> ratio_table(const SequenceSpec& spec, std::int64_t horizon);

/// Tail sum delta_n = sum_{i>n} (sigma_i/tau_i)^2. Returns +infinity when the
/// square-sum diverges (geometric/exp_sqrt growth). Otherwise truncates using
/// the family's documented tail bound so the absolute error is below tol:
///   - constant: closed-form terms 1/(i + tau0/c)^2; remainder evaluated by
///     the asymptotic series of the trigamma tail (error far below any
///     practical tol).
///   - decay_power a > 1/2: sigma_i/tau_i <= i^-a / tau_M past M, so the
///     remainder is at most M^(1-2a) / ((2a-1) tau_M^2) by integral comparison.
///   - decay_power a <= 1/2 and constant-tail customs: sigma decreasing gives
///     sigma_i/tau_i <= 1/i, remainder <= 1/M.
///   - power_law: tau_i >= i^(a+1)/(a+1) gives sigma_i/tau_i <= (a+1)/i,
///     remainder <= (a+1)^2/M.
///   - log_power: tau_i >= (i/2)(log(i+2)/2)^a gives sigma_i/tau_i
///     <= 2^(a+1)/i, remainder <= 4^(a+1)/M.
/// Throws std::invalid_argument when tol is unreachable in a bounded number
/// of terms, and for custom specs without a tail rule.
double delta_tail(const SequenceSpec& spec, std::int64_t n, double tol);

/// Upper bound for the harmonic tail sum_{k>=m} 1/tau_k, +infinity when the
/// series diverges. Used to truncate the never-white product.
double harmonic_tau_tail_bound(const SequenceSpec& spec, std::int64_t m);

enum class ConditionId {
    square_sum_diverges,    // sum (sigma_{n+1}/tau_n)^2 = infinity
    harmonic_tau_diverges,  // sum 1/tau_n = infinity
    liminf_ratio_positive,  // liminf sigma_n/tau_n > 0
    rc1,                    // sigma_n/tau_n comparable to 1/n (both sides)
    rc2,                    // sigma_i/sigma_n pinched in (alpha,beta) on [n, n*g(n)]
    sigma_vanishes,         // sigma_n -> 0
};

enum class TruthValue { holds, fails, inconclusive };

struct ConditionEvidence {
    std::map<std::string, double> stats;  // probe summaries (liminf, envelopes, partial sums)
    std::string note;                     // one-line closed-form rationale
};

struct ConditionVerdict {
    ConditionId id;
    TruthValue value;
    ConditionEvidence evidence;
};

/// Closed-form classification for the built-in families (decision table in
/// the implementation); numeric probing over the tabulated range for custom
/// specs, with `inconclusive` whenever the probes cannot settle the tail.
/// rc2 uses the default witness window [n, n^2].
ConditionVerdict evaluate_condition(const SequenceSpec& spec, ConditionId id);

/// rc2 with a caller-supplied window witness g (window is (n, n*g(n)]).
ConditionVerdict evaluate_rc2(const SequenceSpec& spec,
                              const std::function<std::int64_t(std::int64_t)>& g);

const char* to_string(ConditionId id);
const char* to_string(TruthValue value);

}  // namespace polya
