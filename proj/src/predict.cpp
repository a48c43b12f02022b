#include "beliefspace/predict.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "beliefspace/csv.hpp"
#include "beliefspace/rng.hpp"
#include "beliefspace/vecmath.hpp"

namespace beliefspace {

StancePrediction predict_stance(const EncoderModel& model, std::span<const double> user_vec,
                                std::string_view title, Polarity tie_break) {
    const auto pro_vec = model.encode(render_statement(title, Polarity::Pro));
    const auto con_vec = model.encode(render_statement(title, Polarity::Con));
    StancePrediction p;
    p.d_pro = euclidean_distance(user_vec, pro_vec);
    p.d_con = euclidean_distance(user_vec, con_vec);
    p.d_min = std::min(p.d_pro, p.d_con);
    p.d_max = std::max(p.d_pro, p.d_con);
    p.d_avg = (p.d_min + p.d_max) / 2.0;
    if (p.d_pro == p.d_con) {
        p.tie = true;
        p.predicted = tie_break;
    } else {
        p.predicted = p.d_pro < p.d_con ? Polarity::Pro : Polarity::Con;
    }
    return p;
}

Polarity train_majority(const Corpus& corpus, const FoldSplit& fold) {
    size_t pro = 0, con = 0;
    for (const auto& v : corpus.votes())
        if (!fold.is_test(v.debate)) (v.pol == Polarity::Pro ? pro : con) += 1;
    // Equal counts fall to PRO so the rule stays deterministic.
    return con > pro ? Polarity::Con : Polarity::Pro;
}

FoldRunResult run_fold(const EncoderModel& model, const Corpus& corpus, const FoldSplit& fold) {
    FoldRunResult result;
    result.majority = train_majority(corpus, fold);

    std::vector<uint8_t> train_mask(corpus.debates().size(), 0);
    for (uint32_t d = 0; d < train_mask.size(); ++d) train_mask[d] = fold.is_test(d) ? 0 : 1;

    std::vector<uint8_t> evaluable(corpus.users().size(), 0);
    for (uint32_t u : fold.evaluable_users) evaluable[u] = 1;
    for (uint32_t u = 0; u < corpus.users().size(); ++u)
        if (!evaluable[u] && !corpus.votes_of(u).empty())
            result.skipped_users.push_back(corpus.users()[u]);

    const auto embeddings =
        user_embeddings(model, corpus, fold.evaluable_users, &train_mask, nullptr);

    for (const auto& e : embeddings) {
        const std::string& user_id = corpus.users()[e.user];
        result.history_len[user_id] = e.support;
        for (const auto& v : corpus.votes_of(e.user)) {
            if (!fold.is_test(v.debate)) continue;
            const Debate& debate = corpus.debates()[v.debate];
            const auto stance = predict_stance(model, e.vec, debate.title, result.majority);
            PredictionOutcome o;
            o.user_id = user_id;
            o.debate_id = debate.id;
            o.category = debate.category.value_or("");
            o.d_min = stance.d_min;
            o.d_max = stance.d_max;
            o.d_avg = stance.d_avg;
            if (o.d_min > 0.0) o.d_star = (o.d_max - o.d_min) / o.d_min;
            o.predicted = stance.predicted;
            o.truth = v.pol;
            o.correct = o.predicted == o.truth;
            o.tie = stance.tie;
            result.outcomes.push_back(std::move(o));
        }
    }

    std::sort(result.outcomes.begin(), result.outcomes.end(),
              [](const PredictionOutcome& a, const PredictionOutcome& b) {
                  return std::tie(a.user_id, a.debate_id) < std::tie(b.user_id, b.debate_id);
              });
    return result;
}

namespace {

MetricReport metrics_from_pairs(std::span<const Polarity> predicted,
                                std::span<const Polarity> truth) {
    MetricReport r;
    r.n = truth.size();
    if (r.n == 0) throw DataError("metrics need at least one outcome");
    size_t correct = 0;
    size_t tp_pro = 0, fp_pro = 0, fn_pro = 0;
    size_t tp_con = 0, fp_con = 0, fn_con = 0;
    for (size_t i = 0; i < truth.size(); ++i) {
        if (predicted[i] == truth[i]) ++correct;
        if (truth[i] == Polarity::Pro) {
            ++r.pro.support;
            (predicted[i] == Polarity::Pro ? tp_pro : fn_pro) += 1;
            if (predicted[i] == Polarity::Con) ++fp_con;
        } else {
            ++r.con.support;
            (predicted[i] == Polarity::Con ? tp_con : fn_con) += 1;
            if (predicted[i] == Polarity::Pro) ++fp_pro;
        }
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(r.n);
    auto fill = [](ClassMetrics& c, size_t tp, size_t fp, size_t fn) {
        c.precision = (tp + fp) ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        c.recall = (tp + fn) ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        c.f1 = (c.precision + c.recall) > 0.0
                   ? 2.0 * c.precision * c.recall / (c.precision + c.recall)
                   : 0.0;
    };
    fill(r.pro, tp_pro, fp_pro, fn_pro);
    fill(r.con, tp_con, fp_con, fn_con);
    r.macro_f1 = (r.pro.f1 + r.con.f1) / 2.0;
    return r;
}

std::vector<Polarity> truths_of(std::span<const PredictionOutcome> outcomes) {
    std::vector<Polarity> t;
    t.reserve(outcomes.size());
    for (const auto& o : outcomes) t.push_back(o.truth);
    return t;
}

} // namespace

MetricReport compute_metrics(std::span<const PredictionOutcome> outcomes) {
    std::vector<Polarity> predicted;
    predicted.reserve(outcomes.size());
    for (const auto& o : outcomes) predicted.push_back(o.predicted);
    return metrics_from_pairs(predicted, truths_of(outcomes));
}

MetricReport baseline_random(std::span<const PredictionOutcome> outcomes, uint64_t seed) {
    if (outcomes.empty()) throw DataError("baseline needs at least one outcome");
    Rng rng = substream(seed, "baseline_random");
    std::vector<Polarity> predicted;
    predicted.reserve(outcomes.size());
    for (size_t i = 0; i < outcomes.size(); ++i)
        predicted.push_back(rng.uniform_u64(2) ? Polarity::Con : Polarity::Pro);
    return metrics_from_pairs(predicted, truths_of(outcomes));
}

MetricReport baseline_majority(Polarity majority, std::span<const PredictionOutcome> outcomes) {
    if (outcomes.empty()) throw DataError("baseline needs at least one outcome");
    std::vector<Polarity> predicted(outcomes.size(), majority);
    return metrics_from_pairs(predicted, truths_of(outcomes));
}

std::vector<CategoryMetrics> metrics_by_category(std::span<const PredictionOutcome> outcomes) {
    std::map<std::string, std::vector<PredictionOutcome>> buckets;
    for (const auto& o : outcomes) buckets[o.category].push_back(o);
    std::vector<CategoryMetrics> out;
    for (const auto& [cat, rows] : buckets)
        out.push_back(CategoryMetrics{cat, compute_metrics(rows)});
    return out;
}

std::vector<HistoryPoint> metrics_by_history(std::span<const PredictionOutcome> outcomes,
                                             const std::map<std::string, uint32_t>& history_len) {
    // Distinct observed history lengths, ascending.
    std::vector<uint32_t> lengths;
    for (const auto& [user, h] : history_len) lengths.push_back(h);
    std::sort(lengths.begin(), lengths.end());
    lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());

    std::vector<HistoryPoint> out;
    for (uint32_t h : lengths) {
        const uint32_t l_v = h + 1; // users with history < l_v, i.e. <= h
        std::vector<PredictionOutcome> pool;
        std::map<std::string, std::pair<size_t, size_t>> per_user; // correct, total
        for (const auto& o : outcomes) {
            const auto it = history_len.find(o.user_id);
            if (it == history_len.end() || it->second >= l_v) continue;
            pool.push_back(o);
            auto& [c, t] = per_user[o.user_id];
            if (o.correct) ++c;
            ++t;
        }
        if (pool.empty()) continue; // bucket with no outcomes is omitted
        const auto rep = compute_metrics(pool);
        HistoryPoint point;
        point.l_v = l_v;
        point.n_users = per_user.size();
        point.n_votes = pool.size();
        point.vote_accuracy = rep.accuracy;
        point.vote_macro_f1 = rep.macro_f1;
        double acc_sum = 0.0;
        for (const auto& [user, ct] : per_user)
            acc_sum += static_cast<double>(ct.first) / static_cast<double>(ct.second);
        point.user_mean_accuracy = acc_sum / static_cast<double>(per_user.size());
        out.push_back(point);
    }
    return out;
}

namespace {

std::vector<Bin> bin_curve(std::span<const PredictionOutcome> outcomes, double width,
                           double (*value_of)(const PredictionOutcome&)) {
    size_t max_idx = 0;
    bool any = false;
    for (const auto& o : outcomes) {
        const size_t idx = static_cast<size_t>(std::floor(value_of(o) / width));
        max_idx = std::max(max_idx, idx);
        any = true;
    }
    std::vector<Bin> bins;
    if (!any) return bins;
    bins.resize(max_idx + 1);
    std::vector<size_t> correct(max_idx + 1, 0);
    for (size_t i = 0; i <= max_idx; ++i) {
        bins[i].lo = static_cast<double>(i) * width;
        bins[i].hi = static_cast<double>(i + 1) * width;
    }
    for (const auto& o : outcomes) {
        const size_t idx = static_cast<size_t>(std::floor(value_of(o) / width));
        ++bins[idx].n;
        if (o.correct) ++correct[idx];
    }
    for (size_t i = 0; i <= max_idx; ++i)
        if (bins[i].n > 0)
            bins[i].accuracy = static_cast<double>(correct[i]) / static_cast<double>(bins[i].n);
    return bins;
}

} // namespace

DistanceResponse distance_response(std::span<const PredictionOutcome> outcomes, double bin_width) {
    if (bin_width <= 0.0) throw DataError("bin width must be positive");
    for (const auto& o : outcomes)
        if (!std::isfinite(o.d_min) || !std::isfinite(o.d_max))
            throw DataError("outcome with non-finite distance");

    DistanceResponse r;
    r.width = bin_width;
    r.vs_dmin = bin_curve(outcomes, bin_width, [](const PredictionOutcome& o) { return o.d_min; });
    r.vs_dmax = bin_curve(outcomes, bin_width, [](const PredictionOutcome& o) { return o.d_max; });
    r.vs_davg = bin_curve(outcomes, bin_width, [](const PredictionOutcome& o) { return o.d_avg; });

    if (!outcomes.empty()) {
        size_t max_i = 0, max_j = 0;
        for (const auto& o : outcomes) {
            max_i = std::max(max_i, static_cast<size_t>(std::floor(o.d_min / bin_width)));
            max_j = std::max(max_j, static_cast<size_t>(std::floor(o.d_max / bin_width)));
        }
        const size_t cols = max_j + 1;
        std::vector<size_t> n((max_i + 1) * cols, 0), c((max_i + 1) * cols, 0);
        for (const auto& o : outcomes) {
            const size_t i = static_cast<size_t>(std::floor(o.d_min / bin_width));
            const size_t j = static_cast<size_t>(std::floor(o.d_max / bin_width));
            ++n[i * cols + j];
            if (o.correct) ++c[i * cols + j];
        }
        for (size_t i = 0; i <= max_i; ++i) {
            for (size_t j = 0; j <= max_j; ++j) {
                GridCell cell;
                cell.i = i;
                cell.j = j;
                cell.n = n[i * cols + j];
                if (cell.n > 0)
                    cell.accuracy =
                        static_cast<double>(c[i * cols + j]) / static_cast<double>(cell.n);
                r.grid.push_back(cell);
            }
        }
    }
    return r;
}

void write_outcomes_csv(std::span<const PredictionOutcome> outcomes,
                        const std::filesystem::path& path) {
    CsvWriter out(path);
    out.raw_line("user_id,debate_id,category,d_min,d_max,d_avg,d_star,predicted,truth,correct,tie");
    for (const auto& o : outcomes) {
        out.row({o.user_id, o.debate_id, o.category, format_double(o.d_min),
                 format_double(o.d_max), format_double(o.d_avg),
                 o.d_star ? format_double(*o.d_star) : std::string(),
                 std::string(to_string(o.predicted)), std::string(to_string(o.truth)),
                 o.correct ? "1" : "0", o.tie ? "1" : "0"});
    }
    out.close();
}

std::vector<PredictionOutcome> read_outcomes_csv(const std::filesystem::path& path) {
    CsvReader reader(path);
    std::vector<std::string> fields;
    size_t line_no = 0;
    const std::vector<std::string> header{"user_id", "debate_id", "category", "d_min",
                                          "d_max",   "d_avg",     "d_star",   "predicted",
                                          "truth",   "correct",   "tie"};
    if (!reader.next(fields, line_no) || fields != header)
        throw DataError(reader.filename() + ": bad or missing outcomes CSV header");
    std::vector<PredictionOutcome> out;
    auto num = [&](const std::string& s, const char* field, size_t line) {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw DataError(reader.filename() + ":" + std::to_string(line) + ": field '" +
                            field + "': not a number: '" + s + "'");
        return v;
    };
    while (reader.next(fields, line_no)) {
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() != header.size())
            throw DataError(reader.filename() + ":" + std::to_string(line_no) +
                            ": expected " + std::to_string(header.size()) + " fields");
        PredictionOutcome o;
        o.user_id = fields[0];
        o.debate_id = fields[1];
        o.category = fields[2];
        o.d_min = num(fields[3], "d_min", line_no);
        o.d_max = num(fields[4], "d_max", line_no);
        o.d_avg = num(fields[5], "d_avg", line_no);
        if (!fields[6].empty()) o.d_star = num(fields[6], "d_star", line_no);
        o.predicted = polarity_from_string(fields[7]);
        o.truth = polarity_from_string(fields[8]);
        o.correct = fields[9] == "1";
        o.tie = fields[10] == "1";
        out.push_back(std::move(o));
    }
    return out;
}

} // namespace beliefspace
