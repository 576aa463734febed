// Copyright 2026 the polya-urn authors
// SPDX-License-Identifier: Apache-2.0

#include "polya/sequence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "polya/numeric.hpp"

namespace polya {

namespace {

// Linear-scale values beyond this are treated as saturated; keeps headroom
// below DBL_MAX so one more addition cannot overflow to inf.
constexpr double kSaturation = 1e305;
constexpr double kMaxDouble = std::numeric_limits<double>::max();

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void require(bool ok, const char* msg) {
    if (!ok) fail(msg);
}

double rule_sigma(const CustomTable& table, std::int64_t n) {
    const auto size = static_cast<std::int64_t>(table.sigma.size());
    if (n <= size) return table.sigma[static_cast<std::size_t>(n - 1)];
    const double last = table.sigma.back();
    switch (table.tail) {
        case TailRule::none:
            fail("custom sequence queried at n=" + std::to_string(n) +
                 " past its table (size " + std::to_string(size) +
                 ") and has no extrapolation rule");
        case TailRule::constant:
            return last;
        case TailRule::power:
            return last * std::pow(static_cast<double>(n) / static_cast<double>(size),
                                   table.tail_param);
        case TailRule::geometric:
            return last * std::pow(table.tail_param, static_cast<double>(n - size));
    }
    fail("unreachable tail rule");
}

double rule_log_sigma(const CustomTable& table, std::int64_t n) {
    const auto size = static_cast<std::int64_t>(table.sigma.size());
    if (n <= size) return std::log(table.sigma[static_cast<std::size_t>(n - 1)]);
    const double log_last = std::log(table.sigma.back());
    switch (table.tail) {
        case TailRule::none:
            fail("custom sequence has no extrapolation rule");
        case TailRule::constant:
            return log_last;
        case TailRule::power:
            return log_last + table.tail_param *
                                  std::log(static_cast<double>(n) / static_cast<double>(size));
        case TailRule::geometric:
            return log_last + static_cast<double>(n - size) * std::log(table.tail_param);
    }
    fail("unreachable tail rule");
}

double sigma_impl(Family family, double param, const CustomTable* table, std::int64_t n) {
    const double x = static_cast<double>(n);
    switch (family) {
        case Family::constant:
            return param;
        case Family::log_power:
            return std::pow(std::log(x + 2.0), param);
        case Family::power_law:
            if (param == 1.0) return x;
            if (param == 2.0) return x * x;
            if (param == 0.5) return std::sqrt(x);
            return std::pow(x, param);
        case Family::geometric:
            return std::pow(param, x);
        case Family::exp_sqrt:
            return std::exp(std::sqrt(x));
        case Family::decay_power:
            if (param == 1.0) return 1.0 / x;
            if (param == 2.0) return 1.0 / (x * x);
            if (param == 0.5) return 1.0 / std::sqrt(x);
            return std::pow(x, -param);
        case Family::custom:
            return rule_sigma(*table, n);
    }
    fail("unreachable family");
}

double log_sigma_impl(Family family, double param, const CustomTable* table, std::int64_t n) {
    const double x = static_cast<double>(n);
    switch (family) {
        case Family::constant:
            return std::log(param);
        case Family::log_power:
            return param * std::log(std::log(x + 2.0));
        case Family::power_law:
            return param * std::log(x);
        case Family::geometric:
            return x * std::log(param);
        case Family::exp_sqrt:
            return std::sqrt(x);
        case Family::decay_power:
            return -param * std::log(x);
        case Family::custom:
            return rule_log_sigma(*table, n);
    }
    fail("unreachable family");
}

// Geometric total mass in closed form: tau_n = A + B r^{n+1} with
// A = tau0 - r/(r-1) and B = 1/(r-1).
struct GeomForm {
    double a, b, log_r;
};

GeomForm geom_form(double r, double tau0) {
    return {tau0 - r / (r - 1.0), 1.0 / (r - 1.0), std::log(r)};
}

TauValue geom_tau(double r, double tau0, std::int64_t n) {
    const GeomForm g = geom_form(r, tau0);
    const double exponent = static_cast<double>(n + 1) * g.log_r;
    if (exponent < std::log(kSaturation)) {
        const double linear = g.a + g.b * std::exp(exponent);
        if (linear < kSaturation) return {linear, std::log(linear), false};
    }
    // log tau_n = (n+1) log r - log(r-1) + log1p(A (r-1) r^{-(n+1)})
    const double correction = g.a * (r - 1.0) * std::exp(-exponent);
    const double log_value = exponent - std::log(r - 1.0) + std::log1p(correction);
    return {kMaxDouble, log_value, true};
}

}  // namespace

SequenceSpec::SequenceSpec(Family family, double param, double tau0)
    : family_(family), param_(param), tau0_(tau0) {
    require(std::isfinite(tau0) && tau0 > 0.0, "tau0 must be a positive real");
}

SequenceSpec SequenceSpec::constant(double c, double tau0) {
    require(std::isfinite(c) && c > 0.0, "constant family needs c > 0");
    return SequenceSpec(Family::constant, c, tau0);
}

SequenceSpec SequenceSpec::log_power(double a, double tau0) {
    require(std::isfinite(a) && a > 0.0, "log_power family needs a > 0");
    return SequenceSpec(Family::log_power, a, tau0);
}

SequenceSpec SequenceSpec::power_law(double a, double tau0) {
    require(std::isfinite(a) && a > 0.0, "power_law family needs a > 0");
    return SequenceSpec(Family::power_law, a, tau0);
}

SequenceSpec SequenceSpec::geometric(double r, double tau0) {
    require(std::isfinite(r) && r > 1.0, "geometric family needs r > 1");
    return SequenceSpec(Family::geometric, r, tau0);
}

SequenceSpec SequenceSpec::exp_sqrt(double tau0) {
    return SequenceSpec(Family::exp_sqrt, 0.0, tau0);
}

SequenceSpec SequenceSpec::decay_power(double a, double tau0) {
    require(std::isfinite(a) && a > 0.0, "decay_power family needs a > 0");
    return SequenceSpec(Family::decay_power, a, tau0);
}

SequenceSpec SequenceSpec::custom(CustomTable table, double tau0) {
    require(!table.sigma.empty(), "custom table must have at least one entry");
    for (double s : table.sigma)
        require(std::isfinite(s) && s > 0.0, "custom table entries must be positive reals");
    switch (table.tail) {
        case TailRule::none:
        case TailRule::constant:
            break;
        case TailRule::power:
            require(std::isfinite(table.tail_param), "power tail needs a finite exponent");
            break;
        case TailRule::geometric:
            require(std::isfinite(table.tail_param) && table.tail_param > 0.0,
                    "geometric tail needs rho > 0");
            break;
    }
    SequenceSpec spec(Family::custom, 0.0, tau0);
    spec.table_ = std::move(table);
    return spec;
}

SequenceSpec SequenceSpec::custom_from_file(const std::filesystem::path& path, double tau0) {
    std::ifstream in(path);
    if (!in) fail("cannot open custom table file: " + path.string());
    CustomTable table;
    std::string line;
    std::int64_t expected = 1;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        std::string first;
        if (!(row >> first)) continue;  // blank line
        if (first == "extrapolate") {
            std::string kind;
            if (!(row >> kind)) fail("extrapolate stanza needs a rule name");
            if (kind == "none") {
                table.tail = TailRule::none;
            } else if (kind == "constant") {
                table.tail = TailRule::constant;
            } else if (kind == "power" || kind == "geometric") {
                table.tail = kind == "power" ? TailRule::power : TailRule::geometric;
                if (!(row >> table.tail_param))
                    fail("extrapolate " + kind + " needs a numeric parameter");
            } else {
                fail("unknown extrapolation rule: " + kind);
            }
            continue;
        }
        std::int64_t n = 0;
        double value = 0.0;
        try {
            n = std::stoll(first);
        } catch (const std::exception&) {
            fail("bad index in custom table row: " + line);
        }
        if (!(row >> value)) fail("custom table row needs two columns: " + line);
        if (n != expected)
            fail("custom table rows must be consecutive from 1; saw n=" + std::to_string(n) +
                 " where " + std::to_string(expected) + " was expected");
        table.sigma.push_back(value);
        ++expected;
    }
    return custom(std::move(table), tau0);
}

SequenceSpec SequenceSpec::from_name(const std::string& family_name,
                                     const std::map<std::string, double>& params, double tau0) {
    const auto need = [&](const char* key) {
        const auto it = params.find(key);
        if (it == params.end())
            fail("family '" + family_name + "' needs parameter '" + key + "'");
        return it->second;
    };
    if (family_name == "constant") return constant(need("c"), tau0);
    if (family_name == "logpower") return log_power(need("a"), tau0);
    if (family_name == "powerlaw") return power_law(need("a"), tau0);
    if (family_name == "geometric") return geometric(need("r"), tau0);
    if (family_name == "expsqrt") return exp_sqrt(tau0);
    if (family_name == "decaypower") return decay_power(need("a"), tau0);
    fail("unknown family name: " + family_name);
}

std::string SequenceSpec::family_name() const {
    switch (family_) {
        case Family::constant: return "constant";
        case Family::log_power: return "logpower";
        case Family::power_law: return "powerlaw";
        case Family::geometric: return "geometric";
        case Family::exp_sqrt: return "expsqrt";
        case Family::decay_power: return "decaypower";
        case Family::custom: return "custom";
    }
    return "?";
}

namespace {
std::string format_number(double v) {
    std::ostringstream out;
    out << v;
    return out.str();
}
}  // namespace

std::string SequenceSpec::params_label() const {
    switch (family_) {
        case Family::constant: return "c=" + format_number(param_);
        case Family::log_power:
        case Family::power_law:
        case Family::decay_power: return "a=" + format_number(param_);
        case Family::geometric: return "r=" + format_number(param_);
        case Family::exp_sqrt: return "";
        case Family::custom: return "table[" + std::to_string(table_->sigma.size()) + "]";
    }
    return "";
}

double sigma(const SequenceSpec& spec, std::int64_t n) {
    require(n >= 1, "sigma_n is defined from n = 1");
    const double value = sigma_impl(spec.family(), spec.param(), spec.table(), n);
    return std::min(value, kMaxDouble);
}

double log_sigma(const SequenceSpec& spec, std::int64_t n) {
    require(n >= 1, "sigma_n is defined from n = 1");
    return log_sigma_impl(spec.family(), spec.param(), spec.table(), n);
}

TauValue tau_value(const SequenceSpec& spec, std::int64_t n) {
    require(n >= 0, "tau_n is defined from n = 0");
    if (n == 0) return {spec.tau0(), std::log(spec.tau0()), false};
    switch (spec.family()) {
        case Family::constant: {
            const double v = spec.tau0() + spec.param() * static_cast<double>(n);
            return {v, std::log(v), false};
        }
        case Family::geometric:
            return geom_tau(spec.param(), spec.tau0(), n);
        default: {
            SequenceCursor cursor(spec);
            for (std::int64_t i = 0; i < n; ++i) cursor.advance();
            return {cursor.tau(), cursor.log_tau(), cursor.saturated()};
        }
    }
}

double tau(const SequenceSpec& spec, std::int64_t n) { return tau_value(spec, n).linear; }

double log_tau(const SequenceSpec& spec, std::int64_t n) { return tau_value(spec, n).log; }

StepRatios step_ratios(const SequenceSpec& spec, std::int64_t n) {
    require(n >= 1, "step ratios are defined from n = 1");
    switch (spec.family()) {
        case Family::constant: {
            const double t = spec.tau0() + spec.param() * static_cast<double>(n);
            return {spec.param() / t, (spec.tau0() + spec.param() * static_cast<double>(n - 1)) / t};
        }
        case Family::geometric: {
            // s_n = 1 / (A r^{-n} + B r), r_n = (A r^{-n} + B) / (A r^{-n} + B r);
            // the r^{-n} term underflows harmlessly for large n.
            const GeomForm g = geom_form(spec.param(), spec.tau0());
            const double shrink = g.a * std::exp(-static_cast<double>(n) * g.log_r);
            const double denom = shrink + g.b * spec.param();
            return {1.0 / denom, (shrink + g.b) / denom};
        }
        default: {
            SequenceCursor cursor(spec);
            for (std::int64_t i = 0; i < n; ++i) cursor.advance();
            return cursor.ratios();
        }
    }
}

SequenceCursor::SequenceCursor(const SequenceSpec& spec)
    : spec_(&spec),
      n_(0),
      tau_linear_(spec.tau0()),
      log_tau_(std::log(spec.tau0())),
      prev_tau_linear_(spec.tau0()),
      prev_log_tau_(std::log(spec.tau0())) {}

void SequenceCursor::advance() {
    ++n_;
    const Family family = spec_->family();
    if (family == Family::geometric && n_ > 1 && !saturated_) {
        sigma_ *= spec_->param();  // incremental; exact power used at n = 1
    } else {
        sigma_ = sigma_impl(family, spec_->param(), spec_->table(), n_);
    }
    if (!saturated_) {
        prev_tau_linear_ = tau_linear_ + tau_comp_;
        // Neumaier step
        const double t = tau_linear_ + sigma_;
        if (std::abs(tau_linear_) >= std::abs(sigma_)) {
            tau_comp_ += (tau_linear_ - t) + sigma_;
        } else {
            tau_comp_ += (sigma_ - t) + tau_linear_;
        }
        tau_linear_ = t;
        if (tau_linear_ >= kSaturation || sigma_ >= kSaturation) {
            saturated_ = true;
            log_sigma_ = log_sigma_impl(family, spec_->param(), spec_->table(), n_);
            prev_log_tau_ = std::log(prev_tau_linear_);
            log_tau_ = log_add_exp(prev_log_tau_, log_sigma_);
        }
    } else {
        log_sigma_ = log_sigma_impl(family, spec_->param(), spec_->table(), n_);
        prev_log_tau_ = log_tau_;
        log_tau_ = log_add_exp(log_tau_, log_sigma_);
    }
}

double SequenceCursor::tau() const {
    if (saturated_) return kMaxDouble;
    return tau_linear_ + tau_comp_;
}

StepRatios SequenceCursor::ratios() const {
    if (!saturated_) {
        const double t = tau_linear_ + tau_comp_;
        return {sigma_ / t, prev_tau_linear_ / t};
    }
    return {std::exp(log_sigma_ - log_tau_), std::exp(prev_log_tau_ - log_tau_)};
}

std::vector<StepRatios> ratio_table(const SequenceSpec& spec, std::int64_t horizon) {
    require(horizon >= 1, "horizon must be at least 1");
    std::vector<StepRatios> table;
    table.reserve(static_cast<std::size_t>(horizon));
    SequenceCursor cursor(spec);
    for (std::int64_t n = 1; n <= horizon; ++n) {
        cursor.advance();
        table.push_back(cursor.ratios());
    }
    return table;
}

namespace {

// Tail of sum_{i >= 1} 1/(i+q)^2 after the first k terms, i.e. the trigamma
// value at z = k+1+q, by its asymptotic series. For z >= 1000 the truncation
// error is below 1e-16.
double trigamma_tail(double z) {
    const double z2 = z * z;
    return 1.0 / z + 1.0 / (2.0 * z2) + 1.0 / (6.0 * z2 * z) - 1.0 / (30.0 * z2 * z2 * z);
}

struct TailClass {
    bool square_summable;  // delta_n finite
    double exponent;       // power-law exponent of sigma for the analog route
    Family analog;         // which built-in route to use for bounds
};

// Maps a custom tail rule onto the built-in family whose bounds apply.
TailClass classify_custom_tail(const CustomTable& table) {
    switch (table.tail) {
        case TailRule::none:
            fail("custom sequence without an extrapolation rule: tail sums are undecidable");
        case TailRule::constant:
            return {true, 0.0, Family::constant};
        case TailRule::power:
            if (table.tail_param > 0.0) return {true, table.tail_param, Family::power_law};
            if (table.tail_param == 0.0) return {true, 0.0, Family::constant};
            return {true, -table.tail_param, Family::decay_power};
        case TailRule::geometric:
            if (table.tail_param > 1.0) return {false, 0.0, Family::geometric};
            if (table.tail_param == 1.0) return {true, 0.0, Family::constant};
            return {true, 0.0, Family::geometric};  // rho < 1: summable sigma
    }
    fail("unreachable tail rule");
}

constexpr std::int64_t kMaxTailTerms = 400'000'000;

[[noreturn]] void tol_unreachable(double tol) {
    fail("delta_tail: tolerance " + format_number(tol) +
         " needs more than the supported number of terms for this family");
}

}  // namespace

double delta_tail(const SequenceSpec& spec, std::int64_t n, double tol) {
    require(n >= 0, "delta_n is defined from n = 0");
    require(std::isfinite(tol) && tol > 0.0, "delta_tail needs tol > 0");

    Family route = spec.family();
    double exponent = spec.param();
    if (route == Family::geometric || route == Family::exp_sqrt)
        return positive_infinity;  // ratio terms do not vanish / are ~1/(4i)
    if (route == Family::custom) {
        const TailClass tail = classify_custom_tail(*spec.table());
        if (!tail.square_summable) return positive_infinity;
        route = tail.analog;
        exponent = tail.exponent;
        if (spec.table()->tail == TailRule::geometric && spec.table()->tail_param < 1.0) {
            // Summable reinforcement: tau converges, terms decay geometrically.
            SequenceCursor cursor(spec);
            NeumaierSum sum;
            const double rho2 = spec.table()->tail_param * spec.table()->tail_param;
            for (std::int64_t i = 1;; ++i) {
                cursor.advance();
                if (i <= n) continue;
                const double s = cursor.ratios().sigma_over_tau;
                sum.add(s * s);
                const std::int64_t table_end = static_cast<std::int64_t>(spec.table()->sigma.size());
                if (i > table_end) {
                    const double remainder = s * s * rho2 / (1.0 - rho2);
                    if (remainder < tol) return sum.value();
                }
                if (i - n > kMaxTailTerms) tol_unreachable(tol);
            }
        }
    }

    if (route == Family::constant && spec.family() == Family::constant) {
        // Exact terms 1/(i+q)^2 with q = tau0/c; remainder by trigamma series.
        const double q = spec.tau0() / spec.param();
        const auto target = static_cast<std::int64_t>(
            std::max<double>(1000.0, std::pow(1.0 / (30.0 * tol), 0.2)));
        const std::int64_t m = std::max(n, target);
        NeumaierSum sum;
        for (std::int64_t i = n + 1; i <= m; ++i) {
            const double d = static_cast<double>(i) + q;
            sum.add(1.0 / (d * d));
        }
        return sum.value() + trigamma_tail(static_cast<double>(m) + 1.0 + q);
    }

    // Generic cursor sum with a per-family certified remainder bound.
    SequenceCursor cursor(spec);
    NeumaierSum sum;
    const auto remainder_bound = [&](std::int64_t m) -> double {
        const double md = static_cast<double>(m);
        switch (route) {
            case Family::constant:
                // constant-analog custom: sigma bounded, sigma_i/tau_i <= 1/i
                // past the table (sigma nonincreasing there).
                return 1.0 / md;
            case Family::decay_power: {
                if (exponent > 0.5) {
                    const double t = cursor.tau();
                    return std::pow(md, 1.0 - 2.0 * exponent) / ((2.0 * exponent - 1.0) * t * t);
                }
                // sigma decreasing: i sigma_i/tau_i <= 1, sharpened to 1-a once
                // (1-a) tau_m >= (m+1)^{1-a} certifies the envelope.
                const double one_minus_a = 1.0 - exponent;
                const double envelope =
                    (one_minus_a * cursor.tau() >= std::pow(md + 1.0, one_minus_a))
                        ? one_minus_a * one_minus_a
                        : 1.0;
                return envelope / md;
            }
            case Family::power_law: {
                const double b = exponent + 1.0;
                return b * b / md;
            }
            case Family::log_power: {
                const double b = std::pow(2.0, exponent + 1.0);
                return b * b / md;
            }
            default:
                fail("unreachable delta route");
        }
    };

    for (std::int64_t i = 1;; ++i) {
        cursor.advance();
        if (i > n) {
            const double s = cursor.ratios().sigma_over_tau;
            sum.add(s * s);
            if ((i & 63) == 0 || i == n + 1) {
                if (remainder_bound(i) < tol) return sum.value();
            }
        }
        if (i - n > kMaxTailTerms) tol_unreachable(tol);
    }
}

double harmonic_tau_tail_bound(const SequenceSpec& spec, std::int64_t m) {
    require(m >= 1, "tail bound is defined from m = 1");
    const double md = static_cast<double>(m);
    switch (spec.family()) {
        case Family::constant:
        case Family::decay_power:
            return positive_infinity;
        case Family::log_power: {
            const double a = spec.param();
            if (a <= 1.0) return positive_infinity;
            // 1/tau_k <= 2^{a+1} / (k log^a(k+2));  integral comparison after
            // 1/x <= 2/(x+2) gives the closed tail.
            const double scale = std::pow(2.0, a + 1.0);
            const double lead = scale / (md * std::pow(std::log(md + 2.0), a));
            const double integral =
                2.0 * scale * std::pow(std::log(md + 2.0), 1.0 - a) / (a - 1.0);
            return lead + integral;
        }
        case Family::power_law: {
            const double a = spec.param();
            // tau_k >= k^{a+1}/(a+1)
            return (a + 1.0) * (std::pow(md, -(a + 1.0)) + std::pow(md, -a) / a);
        }
        case Family::geometric: {
            const double r = spec.param();
            const GeomForm g = geom_form(r, spec.tau0());
            const double tau_m = geom_tau(r, spec.tau0(), m).linear;
            if (tau_m >= kSaturation) return 0.0;  // tail is below representable
            const double lead = g.b * std::exp(static_cast<double>(m + 1) * g.log_r);
            const double kappa = std::min(1.0, tau_m / lead);
            return (1.0 / (lead * kappa)) * (r / (r - 1.0));
        }
        case Family::exp_sqrt: {
            // 1/tau_k <= e^{-sqrt(k)}
            const double root = std::sqrt(md);
            return std::exp(-root) * (1.0 + 2.0 * (root + 1.0));
        }
        case Family::custom: {
            const TailClass tail = classify_custom_tail(*spec.table());
            const auto table_end = static_cast<std::int64_t>(spec.table()->sigma.size());
            if (tail.analog == Family::constant || tail.analog == Family::decay_power)
                return positive_infinity;
            if (tail.analog == Family::power_law) {
                if (tail.exponent <= 0.0) return positive_infinity;
                // tau_k >= C (k^{p+1} - m0^{p+1})/(p+1) past the table;
                // crude but certified once k doubles the table end.
                const double p = tail.exponent;
                const double last = spec.table()->sigma.back();
                const double c = last / std::pow(static_cast<double>(table_end), p);
                const double start = std::max(md, 2.0 * static_cast<double>(table_end + 1));
                double head = 0.0;
                if (start > md) {
                    // finitely many explicit terms up to the certified region
                    SequenceCursor cursor(spec);
                    for (std::int64_t k = 1; k < m; ++k) cursor.advance();
                    for (std::int64_t k = m; k < static_cast<std::int64_t>(start); ++k) {
                        cursor.advance();
                        head += 1.0 / cursor.tau();
                    }
                }
                const double scale = 2.0 * (p + 1.0) / c;
                return head + scale * (std::pow(start, -(p + 1.0)) + std::pow(start, -p) / p);
            }
            // geometric tail
            const double rho = spec.table()->tail_param;
            if (rho <= 1.0) return positive_infinity;
            SequenceCursor cursor(spec);
            const std::int64_t anchor = std::max(m, table_end + 1);
            for (std::int64_t k = 0; k < anchor; ++k) cursor.advance();
            double head = 0.0;
            if (anchor > m) {
                SequenceCursor walk(spec);
                for (std::int64_t k = 1; k < m; ++k) walk.advance();
                for (std::int64_t k = m; k < anchor; ++k) {
                    walk.advance();
                    head += 1.0 / walk.tau();
                }
            }
            // past the anchor tau grows at least by factor-per-step sigma ratio
            return head + (1.0 / cursor.tau()) * rho / (rho - 1.0);
        }
    }
    fail("unreachable family");
}

namespace {

struct ProbeGrid {
    std::vector<std::int64_t> indices;       // geometric grid 1,2,4,...
    std::vector<double> ratio;               // s_n at those indices
    std::vector<double> scaled_ratio;        // n * s_n
    double partial_square_sum = 0.0;         // sum (sigma_{i+1}/tau_i)^2 over the walk
    double partial_harmonic = 0.0;           // sum 1/tau_i over the walk
};

ProbeGrid probe(const SequenceSpec& spec, std::int64_t max_n) {
    ProbeGrid grid;
    SequenceCursor cursor(spec);
    NeumaierSum squares, harmonic;
    double prev_tau = spec.tau0();
    harmonic.add(1.0 / prev_tau);
    std::int64_t next_index = 1;
    for (std::int64_t n = 1; n <= max_n; ++n) {
        cursor.advance();
        if (!cursor.saturated()) {
            const double term = cursor.sigma() / prev_tau;
            squares.add(term * term);
            harmonic.add(1.0 / cursor.tau());
            prev_tau = cursor.tau();
        }
        if (n == next_index) {
            grid.indices.push_back(n);
            const double s = cursor.ratios().sigma_over_tau;
            grid.ratio.push_back(s);
            grid.scaled_ratio.push_back(static_cast<double>(n) * s);
            next_index *= 2;
        }
    }
    grid.partial_square_sum = squares.value();
    grid.partial_harmonic = harmonic.value();
    return grid;
}

// Closed-form truth table for the built-in families. The custom family maps
// to an analog through its tail rule; `inconclusive` when there is none.
TruthValue builtin_truth(const SequenceSpec& spec, ConditionId id, std::string& note) {
    Family family = spec.family();
    double a = spec.param();
    if (family == Family::custom) {
        if (spec.table()->tail == TailRule::none) {
            note = "no extrapolation rule: tail behaviour undecidable from a finite table";
            return TruthValue::inconclusive;
        }
        const TailClass tail = classify_custom_tail(*spec.table());
        if (spec.table()->tail == TailRule::geometric && spec.table()->tail_param != 1.0) {
            const double rho = spec.table()->tail_param;
            switch (id) {
                case ConditionId::square_sum_diverges:
                    note = rho > 1.0 ? "exponential growth: ratio terms do not vanish"
                                     : "summable reinforcement: terms decay geometrically";
                    return rho > 1.0 ? TruthValue::holds : TruthValue::fails;
                case ConditionId::harmonic_tau_diverges:
                    note = rho > 1.0 ? "tau grows geometrically" : "tau converges to a finite limit";
                    return rho > 1.0 ? TruthValue::fails : TruthValue::holds;
                case ConditionId::liminf_ratio_positive:
                    note = rho > 1.0 ? "sigma_n/tau_n -> (rho-1)/rho" : "sigma_n -> 0";
                    return rho > 1.0 ? TruthValue::holds : TruthValue::fails;
                case ConditionId::rc1:
                    note = "n sigma_n/tau_n is unbounded (rho>1) or vanishes (rho<1)";
                    return TruthValue::fails;
                case ConditionId::rc2:
                    note = "sigma_i/sigma_n = rho^(i-n) escapes every envelope on (n, n g(n)]";
                    return TruthValue::fails;
                case ConditionId::sigma_vanishes:
                    note = rho < 1.0 ? "sigma decays geometrically" : "sigma grows geometrically";
                    return rho < 1.0 ? TruthValue::holds : TruthValue::fails;
            }
        }
        if (tail.analog == Family::constant) {
            family = Family::constant;
            a = spec.table()->sigma.back();
        } else if (tail.analog == Family::power_law) {
            family = Family::power_law;
            a = tail.exponent;
        } else {
            family = Family::decay_power;
            a = tail.exponent;
        }
    }

    switch (id) {
        case ConditionId::square_sum_diverges:
            switch (family) {
                case Family::geometric:
                    note = "sigma_n/tau_n -> (r-1)/r > 0: square terms do not vanish";
                    return TruthValue::holds;
                case Family::exp_sqrt:
                    note = "sigma_n/tau_n ~ 1/(2 sqrt(n)): squares are a harmonic series";
                    return TruthValue::holds;
                default:
                    note = "sigma_n/tau_n = O(1/n): squares are summable";
                    return TruthValue::fails;
            }
        case ConditionId::harmonic_tau_diverges:
            switch (family) {
                case Family::constant:
                    note = "tau_n ~ c n: harmonic series diverges";
                    return TruthValue::holds;
                case Family::log_power:
                    if (a > 1.0) {
                        note = "tau_n ~ n log^a n with a>1: Bertrand series converges";
                        return TruthValue::fails;
                    }
                    note = "tau_n ~ n log^a n with a<=1: Bertrand series diverges";
                    return TruthValue::holds;
                case Family::power_law:
                    note = "tau_n ~ n^(a+1)/(a+1), a+1>1: p-series converges";
                    return TruthValue::fails;
                case Family::geometric:
                case Family::exp_sqrt:
                    note = "tau_n grows superpolynomially: sum 1/tau_n converges";
                    return TruthValue::fails;
                case Family::decay_power:
                    note = a < 1.0 ? "tau_n ~ n^(1-a)/(1-a): p-series with exponent <= 1 diverges"
                                   : "tau_n grows at most logarithmically (or converges)";
                    return TruthValue::holds;
                default:
                    break;
            }
            break;
        case ConditionId::liminf_ratio_positive:
            if (family == Family::geometric) {
                note = "sigma_n/tau_n -> (r-1)/r";
                return TruthValue::holds;
            }
            note = "sigma_n/tau_n -> 0";
            return TruthValue::fails;
        case ConditionId::rc1:
            switch (family) {
                case Family::constant:
                    note = "n sigma_n/tau_n -> 1";
                    return TruthValue::holds;
                case Family::log_power:
                    note = "n sigma_n/tau_n -> 1 (slowly varying factor cancels)";
                    return TruthValue::holds;
                case Family::power_law:
                    note = "n sigma_n/tau_n -> a+1";
                    return TruthValue::holds;
                case Family::decay_power:
                    if (a < 1.0) {
                        note = "n sigma_n/tau_n -> 1-a > 0";
                        return TruthValue::holds;
                    }
                    note = "n sigma_n/tau_n -> 0 (tau flattens while sigma decays)";
                    return TruthValue::fails;
                case Family::geometric:
                case Family::exp_sqrt:
                    note = "n sigma_n/tau_n -> infinity";
                    return TruthValue::fails;
                default:
                    break;
            }
            break;
        case ConditionId::rc2:
            switch (family) {
                case Family::constant:
                    note = "sigma_i/sigma_n = 1 on every window";
                    return TruthValue::holds;
                case Family::log_power:
                    note = "sigma_i/sigma_n <= (log(n^2+2)/log(n+2))^a <= 2^a on (n, n^2]";
                    return TruthValue::holds;
                case Family::power_law:
                    note = "sigma_{n g(n)}/sigma_n = g(n)^a -> infinity for every witness g";
                    return TruthValue::fails;
                case Family::decay_power:
                    note = "sigma_{n g(n)}/sigma_n = g(n)^-a -> 0 for every witness g";
                    return TruthValue::fails;
                case Family::geometric:
                case Family::exp_sqrt:
                    note = "ratio escapes every envelope on (n, n g(n)]";
                    return TruthValue::fails;
                default:
                    break;
            }
            break;
        case ConditionId::sigma_vanishes:
            if (family == Family::decay_power) {
                note = "sigma_n = n^-a -> 0";
                return TruthValue::holds;
            }
            note = "sigma_n is bounded away from zero";
            return TruthValue::fails;
    }
    fail("unreachable condition table entry");
}

// Does the tabulated prefix look like the tail rule's shape? Backcasts the
// rule from the last entry over the trailing window; large relative mismatch
// demotes the verdict to inconclusive.
bool table_consistent_with_rule(const CustomTable& table) {
    const auto size = static_cast<std::int64_t>(table.sigma.size());
    if (size < 4 || table.tail == TailRule::none) return true;
    const std::int64_t window = std::min<std::int64_t>(8, size / 2);
    const double last = table.sigma.back();
    for (std::int64_t j = 1; j <= window; ++j) {
        const std::int64_t n = size - j;
        double predicted = last;
        switch (table.tail) {
            case TailRule::constant:
                predicted = last;
                break;
            case TailRule::power:
                predicted = last * std::pow(static_cast<double>(n) / static_cast<double>(size),
                                            table.tail_param);
                break;
            case TailRule::geometric:
                predicted = last * std::pow(table.tail_param, static_cast<double>(n - size));
                break;
            case TailRule::none:
                return true;
        }
        const double actual = table.sigma[static_cast<std::size_t>(n - 1)];
        if (std::abs(actual - predicted) > 0.25 * std::max(std::abs(actual), std::abs(predicted)))
            return false;
    }
    return true;
}

}  // namespace

ConditionVerdict evaluate_condition(const SequenceSpec& spec, ConditionId id) {
    if (id == ConditionId::rc2)
        return evaluate_rc2(spec, [](std::int64_t n) { return n; });

    ConditionVerdict verdict;
    verdict.id = id;
    verdict.value = builtin_truth(spec, id, verdict.evidence.note);

    if (spec.family() == Family::custom && verdict.value != TruthValue::inconclusive &&
        !table_consistent_with_rule(*spec.table())) {
        verdict.value = TruthValue::inconclusive;
        verdict.evidence.note = "tabulated prefix disagrees with the extrapolation rule";
        return verdict;
    }

    // Numeric probes as evidence; never override the closed-form value for the
    // built-in families.
    const std::int64_t probe_horizon =
        spec.family() == Family::custom
            ? static_cast<std::int64_t>(spec.table()->sigma.size())
            : 1 << 14;
    const ProbeGrid grid = probe(spec, probe_horizon);
    auto& stats = verdict.evidence.stats;
    stats["probe_n_max"] = static_cast<double>(probe_horizon);
    switch (id) {
        case ConditionId::square_sum_diverges:
            stats["partial_square_sum"] = grid.partial_square_sum;
            break;
        case ConditionId::harmonic_tau_diverges:
            stats["partial_harmonic_sum"] = grid.partial_harmonic;
            break;
        case ConditionId::liminf_ratio_positive: {
            double lo = positive_infinity;
            for (double s : grid.ratio) lo = std::min(lo, s);
            stats["probe_min_ratio"] = lo;
            if (spec.family() == Family::geometric)
                stats["liminf"] = (spec.param() - 1.0) / spec.param();
            break;
        }
        case ConditionId::rc1: {
            double lo = positive_infinity, hi = 0.0;
            for (double u : grid.scaled_ratio) {
                lo = std::min(lo, u);
                hi = std::max(hi, u);
            }
            stats["a"] = lo / 2.0;
            stats["b"] = hi * 2.0;
            break;
        }
        case ConditionId::sigma_vanishes:
            if (!grid.indices.empty())
                stats["sigma_at_probe"] =
                    sigma_impl(spec.family(), spec.param(), spec.table(), grid.indices.back());
            break;
        default:
            break;
    }
    return verdict;
}

ConditionVerdict evaluate_rc2(const SequenceSpec& spec,
                              const std::function<std::int64_t(std::int64_t)>& g) {
    ConditionVerdict verdict;
    verdict.id = ConditionId::rc2;
    verdict.value = builtin_truth(spec, ConditionId::rc2, verdict.evidence.note);
    if (spec.family() == Family::custom && verdict.value != TruthValue::inconclusive &&
        !table_consistent_with_rule(*spec.table())) {
        verdict.value = TruthValue::inconclusive;
        verdict.evidence.note = "tabulated prefix disagrees with the extrapolation rule";
        return verdict;
    }

    // Envelope over windows (n, n*g(n)] sampled at geometrically spaced points.
    double alpha = positive_infinity, beta = 0.0;
    const std::int64_t probe_cap =
        spec.family() == Family::custom && spec.table()->tail == TailRule::none
            ? static_cast<std::int64_t>(spec.table()->sigma.size())
            : 1 << 16;
    for (std::int64_t n = 4; n <= 1024 && n <= probe_cap; n *= 4) {
        const std::int64_t end = std::min(n * std::max<std::int64_t>(g(n), 1), probe_cap);
        const double base = sigma_impl(spec.family(), spec.param(), spec.table(), n);
        for (std::int64_t i = n; i <= end; i = std::max(i + 1, i * 2)) {
            const double ratio = sigma_impl(spec.family(), spec.param(), spec.table(), i) / base;
            alpha = std::min(alpha, ratio);
            beta = std::max(beta, ratio);
        }
    }
    if (std::isfinite(alpha)) {
        verdict.evidence.stats["alpha"] = alpha;
        verdict.evidence.stats["beta"] = beta;
    }
    return verdict;
}

const char* to_string(ConditionId id) {
    switch (id) {
        case ConditionId::square_sum_diverges: return "SquareSumDiverges";
        case ConditionId::harmonic_tau_diverges: return "HarmonicTauDiverges";
        case ConditionId::liminf_ratio_positive: return "LiminfRatioPositive";
        case ConditionId::rc1: return "RC1";
        case ConditionId::rc2: return "RC2";
        case ConditionId::sigma_vanishes: return "SigmaVanishes";
    }
    return "?";
}

const char* to_string(TruthValue value) {
    switch (value) {
        case TruthValue::holds: return "Holds";
        case TruthValue::fails: return "Fails";
        case TruthValue::inconclusive: return "Inconclusive";
    }
    return "?";
}

}  // namespace polya
