#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "beliefspace/errors.hpp"

namespace beliefspace {

inline void check_same_dim(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw DataError("vector dimension mismatch: " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    check_same_dim(a, b);
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm(std::span<const double> a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return std::sqrt(s);
}

inline double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    check_same_dim(a, b);
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// 1 - cos(a, b), in [0, 2]. Zero-norm inputs are a data error.
inline double cosine_distance(std::span<const double> a, std::span<const double> b) {
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) throw DataError("cosine distance undefined for zero vector");
    return 1.0 - dot(a, b) / (na * nb);
}

inline std::vector<double> mean_vector(const std::vector<std::vector<double>>& vs) {
    if (vs.empty()) throw DataError("mean of empty vector set");
    std::vector<double> m(vs.front().size(), 0.0);
    for (const auto& v : vs) {
        check_same_dim(m, v);
        for (size_t i = 0; i < m.size(); ++i) m[i] += v[i];
    }
    for (double& x : m) x /= static_cast<double>(vs.size());
    return m;
}

} // namespace beliefspace
