#include "beliefspace/dissonance.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "beliefspace/stats.hpp"

namespace beliefspace {

double d_star(double d_min, double d_max) {
    if (d_min > d_max) throw DataError("d_min exceeds d_max");
    if (d_min <= 0.0) throw DataError("d_star undefined for d_min <= 0");
    return (d_max - d_min) / d_min;
}

DstarCurve accuracy_vs_dstar(std::span<const PredictionOutcome> outcomes, double bin_width,
                             double range_max) {
    if (bin_width <= 0.0) throw DataError("bin width must be positive");
    if (range_max <= 0.0) throw DataError("range_max must be positive");

    DstarCurve curve;
    curve.width = bin_width;
    curve.range_max = range_max;
    const size_t n_bins = static_cast<size_t>(std::ceil(range_max / bin_width));
    curve.bins.resize(n_bins);
    std::vector<size_t> correct(n_bins, 0);
    for (size_t i = 0; i < n_bins; ++i) {
        curve.bins[i].lo = static_cast<double>(i) * bin_width;
        curve.bins[i].hi = std::min(static_cast<double>(i + 1) * bin_width, range_max);
    }

    size_t overflow_correct = 0;
    for (const auto& o : outcomes) {
        if (!o.d_star) {
            ++curve.excluded_dmin_zero;
            continue;
        }
        const double ds = *o.d_star;
        if (!std::isfinite(ds)) throw DataError("outcome with non-finite d_star");
        if (ds >= range_max) {
            ++curve.overflow_n;
            if (o.correct) ++overflow_correct;
            continue;
        }
        const size_t idx = static_cast<size_t>(std::floor(ds / bin_width));
        ++curve.bins[idx].n;
        if (o.correct) ++correct[idx];
    }
    for (size_t i = 0; i < n_bins; ++i)
        if (curve.bins[i].n > 0)
            curve.bins[i].accuracy =
                static_cast<double>(correct[i]) / static_cast<double>(curve.bins[i].n);
    if (curve.overflow_n > 0)
        curve.overflow_accuracy =
            static_cast<double>(overflow_correct) / static_cast<double>(curve.overflow_n);

    std::vector<double> centers, acc, w;
    for (const auto& b : curve.bins) {
        if (b.n == 0) continue;
        centers.push_back((b.lo + b.hi) / 2.0);
        acc.push_back(*b.accuracy);
        w.push_back(static_cast<double>(b.n));
    }
    if (centers.size() >= 2) {
        try {
            curve.slope = weighted_ls_slope(centers, acc, w);
        } catch (const DataError&) {
            // zero x-variance; slope stays undefined
        }
    }
    return curve;
}

namespace {

std::optional<std::string> group_value(const UserProfile* p, GroupBy grouping) {
    if (!p) return std::nullopt;
    return grouping == GroupBy::Party ? p->party : p->religion;
}

} // namespace

GroupCompareResult group_compare(std::span<const PredictionOutcome> outcomes,
                                 const ProfileSet& profiles, GroupBy grouping, double bin_width,
                                 double range_max,
                                 std::optional<std::pair<std::string, std::string>> groups) {
    if (outcomes.empty()) throw DataError("group comparison needs outcomes");

    std::string ga, gb;
    if (groups) {
        ga = groups->first;
        gb = groups->second;
    } else {
        // Two most frequent group values among outcome rows; ties broken by
        // name for determinism.
        std::map<std::string, size_t> freq;
        for (const auto& o : outcomes) {
            const auto g = group_value(profiles.find(o.user_id), grouping);
            if (g) ++freq[*g];
        }
        if (freq.size() < 2)
            throw DataError("need at least two groups for comparison, found " +
                            std::to_string(freq.size()));
        std::vector<std::pair<std::string, size_t>> ranked(freq.begin(), freq.end());
        std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
            return std::tie(y.second, x.first) < std::tie(x.second, y.first);
        });
        ga = ranked[0].first;
        gb = ranked[1].first;
    }

    std::vector<PredictionOutcome> rows_a, rows_b;
    for (const auto& o : outcomes) {
        const auto g = group_value(profiles.find(o.user_id), grouping);
        if (!g) continue;
        if (*g == ga) rows_a.push_back(o);
        else if (*g == gb) rows_b.push_back(o);
    }
    if (rows_a.empty()) throw DataError("group '" + ga + "' has no outcomes");
    if (rows_b.empty()) throw DataError("group '" + gb + "' has no outcomes");

    GroupCompareResult result;
    result.group_a = ga;
    result.group_b = gb;
    result.curve_a = accuracy_vs_dstar(rows_a, bin_width, range_max);
    result.curve_b = accuracy_vs_dstar(rows_b, bin_width, range_max);

    const size_t n_bins = result.curve_a.bins.size();
    auto bin_samples = [&](const std::vector<PredictionOutcome>& rows, size_t idx) {
        std::vector<double> xs;
        for (const auto& o : rows) {
            if (!o.d_star) continue;
            const double ds = *o.d_star;
            if (ds >= range_max) continue;
            if (static_cast<size_t>(std::floor(ds / bin_width)) == idx)
                xs.push_back(o.correct ? 1.0 : 0.0);
        }
        return xs;
    };
    for (size_t i = 0; i < n_bins; ++i) {
        GroupBinTest t;
        t.lo = result.curve_a.bins[i].lo;
        t.hi = result.curve_a.bins[i].hi;
        const auto xa = bin_samples(rows_a, i);
        const auto xb = bin_samples(rows_b, i);
        t.n_a = xa.size();
        t.n_b = xb.size();
        if (xa.size() >= 2 && xb.size() >= 2) {
            const auto welch = welch_t_test(xa, xb);
            t.tested = true;
            t.t = welch.t;
            t.p_value = welch.p_value;
        }
        result.tests.push_back(t);
    }
    return result;
}

CategoryCorrelation category_dstar_correlation(std::span<const PredictionOutcome> outcomes) {
    std::map<std::string, std::vector<PredictionOutcome>> buckets;
    for (const auto& o : outcomes) buckets[o.category].push_back(o);

    CategoryCorrelation result;
    for (const auto& [cat, rows] : buckets) {
        CategoryDissonance cd;
        cd.category = cat;
        double sum = 0.0;
        for (const auto& o : rows) {
            if (!o.d_star) continue;
            sum += *o.d_star;
            ++cd.n;
        }
        if (cd.n == 0) continue; // no defined d* in this category
        cd.mean_dstar = sum / static_cast<double>(cd.n);
        cd.macro_f1 = compute_metrics(rows).macro_f1;
        result.rows.push_back(std::move(cd));
    }
    if (result.rows.size() < 3)
        throw DataError("category correlation needs at least 3 categories, found " +
                        std::to_string(result.rows.size()));
    std::vector<double> xs, ys;
    for (const auto& r : result.rows) {
        xs.push_back(r.mean_dstar);
        ys.push_back(r.macro_f1);
    }
    result.pearson_r = pearson(xs, ys);
    return result;
}

} // namespace beliefspace
