#pragma once

// Exact embedding-exponent calculus over extended rationals.

#include "formheat/errors.hpp"
#include "formheat/weights.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace formheat {

class Rational {
public:
    Rational(std::int64_t n = 0, std::int64_t d = 1) : n_(n), d_(d) {
        if (d_ == 0) throw InvariantError("rational with zero denominator");
        normalize();
    }

    /// Best rational approximation with denominator at most max_den; exact for
    /// terminating decimals such as 0.5 or 1.25.
    static Rational from_double(double x, std::int64_t max_den = 1000000) {
        if (!std::isfinite(x)) throw InvariantError("cannot convert a non-finite value to a rational");
        std::int64_t p0 = 0, q0 = 1, p1 = 1, q1 = 0;
        double r = x;
        for (int k = 0; k < 64; ++k) {
            const double a = std::floor(r);
            const auto ai = static_cast<std::int64_t>(a);
            const std::int64_t q2 = q0 + ai * q1;
            if (q2 > max_den) break;
            const std::int64_t p2 = p0 + ai * p1;
            p0 = p1, q0 = q1, p1 = p2, q1 = q2;
            if (std::abs(static_cast<double>(p1) / static_cast<double>(q1) - x) <= 1e-15 * std::max(1.0, std::abs(x)))
                break;
            const double frac = r - a;
            if (frac <= 0.0) break;
            r = 1.0 / frac;
        }
        return {p1, q1};
    }

    std::int64_t num() const { return n_; }
    std::int64_t den() const { return d_; }
    double to_double() const { return static_cast<double>(n_) / static_cast<double>(d_); }

    friend Rational operator+(const Rational& a, const Rational& b) { return {a.n_ * b.d_ + b.n_ * a.d_, a.d_ * b.d_}; }
    friend Rational operator-(const Rational& a, const Rational& b) { return {a.n_ * b.d_ - b.n_ * a.d_, a.d_ * b.d_}; }
    friend Rational operator*(const Rational& a, const Rational& b) { return {a.n_ * b.n_, a.d_ * b.d_}; }
    friend Rational operator/(const Rational& a, const Rational& b) {
        if (b.n_ == 0) throw InvariantError("rational division by zero");
        return {a.n_ * b.d_, a.d_ * b.n_};
    }
    friend bool operator==(const Rational& a, const Rational& b) { return a.n_ == b.n_ && a.d_ == b.d_; }
    friend bool operator<(const Rational& a, const Rational& b) { return a.n_ * b.d_ < b.n_ * a.d_; }
    friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
    friend bool operator>(const Rational& a, const Rational& b) { return b < a; }

    std::string str() const { return d_ == 1 ? std::to_string(n_) : std::to_string(n_) + "/" + std::to_string(d_); }

private:
    void normalize() {
        if (d_ < 0) n_ = -n_, d_ = -d_;
        const std::int64_t g = std::gcd(n_, d_);
        if (g > 1) n_ /= g, d_ /= g;
    }
    std::int64_t n_, d_;
};

inline Rational positive_part(const Rational& x) { return x > Rational(0) ? x : Rational(0); }

/// A nonnegative rational or +infinity.
class ExtendedRational {
public:
    ExtendedRational(Rational v = Rational(0)) : value_(v) {}
    static ExtendedRational infinity() {
        ExtendedRational e;
        e.inf_ = true;
        return e;
    }

    bool is_infinite() const { return inf_; }
    const Rational& value() const {
        if (inf_) throw InvariantError("value of an infinite exponent");
        return value_;
    }
    double to_double() const { return inf_ ? INFINITY : value_.to_double(); }

    friend bool operator==(const ExtendedRational& a, const ExtendedRational& b) {
        return a.inf_ == b.inf_ && (a.inf_ || a.value_ == b.value_);
    }
    friend bool operator<(const ExtendedRational& a, const ExtendedRational& b) {
        if (a.inf_) return false;
        if (b.inf_) return true;
        return a.value_ < b.value_;
    }
    friend bool operator<=(const ExtendedRational& a, const ExtendedRational& b) { return !(b < a); }

    std::string str() const { return inf_ ? "+inf" : value_.str(); }

private:
    Rational value_;
    bool inf_ = false;
};

inline ExtendedRational min_exponent(const ExtendedRational& a, const ExtendedRational& b) { return b < a ? b : a; }

/// numerator / (denominator)_+ with x / 0_+ = +inf.
inline ExtendedRational divide_positive_part(const Rational& numerator, const Rational& denominator) {
    const Rational d = positive_part(denominator);
    if (d == Rational(0)) return ExtendedRational::infinity();
    return ExtendedRational(numerator / d);
}

/// Surface diffusion available to the embedding argument.
enum class SurfaceDiffusion {
    none,          ///< no surface diffusion is used
    uniform,       ///< uniformly positive on all of the dynamic boundary and interface
    near_critical  ///< positive near the intersection of S with the surfaces
};

inline std::string to_string(SurfaceDiffusion s) {
    switch (s) {
    case SurfaceDiffusion::none: return "none";
    case SurfaceDiffusion::uniform: return "uniform";
    case SurfaceDiffusion::near_critical: return "near_critical";
    }
    return "";
}

struct EmbeddingScenario {
    WeightCase kind = WeightCase::nondegenerate;
    SurfaceDiffusion diffusion = SurfaceDiffusion::none;
};

struct EmbeddingReport {
    int d = 2;
    Rational gamma;
    EmbeddingScenario scenario;
    ExtendedRational r_omega, r_tr, r_tr_gamma, r_tr_star, r0;

    /// Lower bound on theta: r0 / ((r0 - 2) p), or 1/p when r0 is infinite.
    Rational theta_threshold(const Rational& p) const {
        if (!(p > Rational(0))) throw InvariantError("p must be positive");
        if (r0.is_infinite()) return Rational(1) / p;
        const Rational r = r0.value();
        return r / ((r - Rational(2)) * p);
    }
};

inline EmbeddingReport embedding_exponents(int d, const Rational& gamma, const EmbeddingScenario& scenario) {
    if (d < 2) throw InvariantError("dimension must be at least 2");
    if (gamma < Rational(0)) throw InvariantError("gamma must be nonnegative");
    if (scenario.kind == WeightCase::nondegenerate && !(gamma == Rational(0)))
        throw InvariantError("a nondegenerate scenario requires gamma = 0");
    EmbeddingReport r;
    r.d = d;
    r.gamma = gamma;
    r.scenario = scenario;
    const Rational dd(d);
    r.r_omega = divide_positive_part(Rational(2) * dd, dd + gamma - Rational(2));
    r.r_tr = divide_positive_part(Rational(2) * (dd - Rational(1)), dd - Rational(2));
    r.r_tr_gamma = divide_positive_part(Rational(2) * (dd - Rational(1)), dd + gamma - Rational(2));
    r.r_tr_star = divide_positive_part(Rational(2) * (dd - Rational(1)), dd - Rational(3));

    const bool case_b = scenario.kind == WeightCase::B;
    if (case_b && !(gamma < Rational(1))) throw OutsideTheoryError("outside theory hypothesis: case B requires γ < 1");
    switch (scenario.diffusion) {
    case SurfaceDiffusion::uniform: r.r0 = min_exponent(r.r_omega, r.r_tr_star); break;
    case SurfaceDiffusion::none: r.r0 = min_exponent(r.r_omega, case_b ? r.r_tr_gamma : r.r_tr); break;
    case SurfaceDiffusion::near_critical:
        if (!case_b)
            throw UnsupportedScenarioError("unsupported scenario: surface diffusion near the critical set requires case B");
        r.r0 = min_exponent(r.r_omega, r.r_tr);
        break;
    }
    return r;
}

/// Decimal rendering with at most four decimals, trailing zeros removed and
/// "+inf" for infinity.
inline std::string format_exponent(double x) {
    if (std::isinf(x)) return x > 0 ? "+inf" : "-inf";
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(4);
    s << x;
    std::string out = s.str();
    if (out.find('.') != std::string::npos) {
        while (out.back() == '0') out.pop_back();
        if (out.back() == '.') out.pop_back();
    }
    if (out == "-0") out = "0";
    return out;
}

inline std::string format_exponent(const ExtendedRational& x) { return format_exponent(x.to_double()); }

inline void write_exponent_csv_header(std::ostream& out) { out << "d,gamma,case,r_omega,r_tr,r_tr_gamma,r_tr_star,r0\n"; }

inline void write_exponent_csv_row(std::ostream& out, const EmbeddingReport& r) {
    out << r.d << ',' << format_exponent(r.gamma.to_double()) << ',' << to_string(r.scenario.kind) << ','
        << format_exponent(r.r_omega) << ',' << format_exponent(r.r_tr) << ',' << format_exponent(r.r_tr_gamma) << ','
        << format_exponent(r.r_tr_star) << ',' << format_exponent(r.r0) << '\n';
}

} // namespace formheat
