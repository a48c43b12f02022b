#pragma once

// Test-side oracles, deliberately written along different routes than the
// library implementations they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracles {

// Pearson via raw moments in long double (library uses two-pass centered
// double sums).
inline double pearson_raw_moments(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    long double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
        sxx += static_cast<long double>(x[i]) * x[i];
        syy += static_cast<long double>(y[i]) * y[i];
        sxy += static_cast<long double>(x[i]) * y[i];
    }
    const long double num = n * sxy - sx * sy;
    const long double den = sqrtl((n * sxx - sx * sx) * (n * syy - sy * sy));
    return static_cast<double>(num / den);
}

// Average ranks by O(n^2) counting (library sorts and walks tie runs).
inline std::vector<double> ranks_by_counting(const std::vector<double>& v) {
    std::vector<double> ranks(v.size());
    for (size_t i = 0; i < v.size(); ++i) {
        size_t less = 0, equal = 0;
        for (size_t j = 0; j < v.size(); ++j) {
            if (v[j] < v[i]) ++less;
            if (v[j] == v[i]) ++equal;
        }
        ranks[i] = static_cast<double>(less) + 1.0 + (static_cast<double>(equal) - 1.0) / 2.0;
    }
    return ranks;
}

inline double spearman_by_counting(const std::vector<double>& x, const std::vector<double>& y) {
    return pearson_raw_moments(ranks_by_counting(x), ranks_by_counting(y));
}

// Triplet loss with long-double accumulation in reverse index order.
inline double triplet_loss_reference(const std::vector<double>& a, const std::vector<double>& p,
                                     const std::vector<double>& n, double margin) {
    long double dap = 0, dan = 0;
    for (size_t i = a.size(); i-- > 0;) {
        const long double dp = static_cast<long double>(a[i]) - p[i];
        const long double dn = static_cast<long double>(a[i]) - n[i];
        dap += dp * dp;
        dan += dn * dn;
    }
    const long double arg = sqrtl(dap) - sqrtl(dan) + static_cast<long double>(margin);
    return static_cast<double>(arg > 0 ? arg : 0);
}

// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major d x d).
// Returns eigenvalues descending with matching eigenvectors as rows.
struct EigenResult {
    std::vector<double> values;          // descending
    std::vector<std::vector<double>> vectors; // vectors[i] pairs with values[i]
};

inline EigenResult jacobi_eigen_symmetric(std::vector<double> a, size_t d) {
    std::vector<double> v(d * d, 0.0);
    for (size_t i = 0; i < d; ++i) v[i * d + i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (size_t i = 0; i < d; ++i)
            for (size_t j = i + 1; j < d; ++j) off += a[i * d + j] * a[i * d + j];
        if (off < 1e-26) break;
        for (size_t p = 0; p < d; ++p) {
            for (size_t q = p + 1; q < d; ++q) {
                const double apq = a[p * d + q];
                if (std::fabs(apq) < 1e-300) continue;
                const double app = a[p * d + p];
                const double aqq = a[q * d + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (size_t k = 0; k < d; ++k) {
                    const double akp = a[k * d + p];
                    const double akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for (size_t k = 0; k < d; ++k) {
                    const double apk = a[p * d + k];
                    const double aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
                for (size_t k = 0; k < d; ++k) {
                    const double vkp = v[k * d + p];
                    const double vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<size_t> order(d);
    for (size_t i = 0; i < d; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t x, size_t y) { return a[x * d + x] > a[y * d + y]; });

    EigenResult res;
    for (size_t idx : order) {
        res.values.push_back(a[idx * d + idx]);
        std::vector<double> vec(d);
        for (size_t k = 0; k < d; ++k) vec[k] = v[k * d + idx];
        res.vectors.push_back(std::move(vec));
    }
    return res;
}

// Sample covariance (n-1) of row vectors, row-major d x d.
inline std::vector<double> sample_covariance(const std::vector<std::vector<double>>& rows) {
    const size_t n = rows.size();
    const size_t d = rows.front().size();
    std::vector<double> mean(d, 0.0);
    for (const auto& r : rows)
        for (size_t j = 0; j < d; ++j) mean[j] += r[j];
    for (auto& m : mean) m /= static_cast<double>(n);
    std::vector<double> cov(d * d, 0.0);
    for (const auto& r : rows)
        for (size_t i = 0; i < d; ++i)
            for (size_t j = 0; j < d; ++j)
                cov[i * d + j] += (r[i] - mean[i]) * (r[j] - mean[j]);
    for (auto& c : cov) c /= static_cast<double>(n - 1);
    return cov;
}

} // namespace oracles
