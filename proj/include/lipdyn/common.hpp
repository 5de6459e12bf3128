#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace lipdyn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

// Error with a stable machine-readable code plus a human message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& what) {
    throw Error(code, what);
}

// A norm on coordinate vectors. Euclidean unless a module installs an adapted one.
using NormFn = std::function<double(const Vec&)>;

inline double euclidean_norm(const Vec& x) { return x.norm(); }

// Deterministic RNG. mt19937_64 bits mapped to [0,1) by hand so streams do not
// depend on the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    double uniform01() {
        return static_cast<double>(state_() >> 11) * 0x1.0p-53;
    }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    Vec uniform_vec(int dim, double lo, double hi) {
        Vec v(dim);
        for (int i = 0; i < dim; ++i) v[i] = uniform(lo, hi);
        return v;
    }

    // Uniform direction on the unit sphere (Gaussian trick via Box-Muller).
    Vec direction(int dim) {
        Vec v(dim);
        for (int i = 0; i < dim; ++i) {
            double u1 = uniform01(), u2 = uniform01();
            if (u1 < 1e-300) u1 = 1e-300;
            v[i] = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
        }
        double n = v.norm();
        return n > 0 ? Vec(v / n) : direction(dim);
    }

    std::uint64_t raw() { return state_(); }

private:
    std::mt19937_64 state_;
};

inline bool all_finite(const Vec& x) { return x.allFinite(); }

}  // namespace lipdyn
