#include "beliefspace/evalkit.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "beliefspace/csv.hpp"
#include "beliefspace/manifest.hpp"
#include "beliefspace/stats.hpp"
#include "beliefspace/svg.hpp"
#include "beliefspace/vecmath.hpp"

namespace beliefspace {

TripletEvalReport eval_triplets(const EncoderModel& model, const Corpus& corpus,
                                std::span<const Triplet> triplets, std::string split) {
    if (triplets.empty()) throw DataError("triplet evaluation needs a non-empty list");

    std::unordered_map<uint64_t, std::vector<double>> cache;
    auto vec_of = [&](BeliefKey k) -> const std::vector<double>& {
        auto [it, inserted] = cache.try_emplace(k.packed());
        if (inserted) it->second = model.encode(corpus.statement(k));
        return it->second;
    };

    size_t hits = 0;
    for (const auto& t : triplets) {
        const auto& a = vec_of(t.anchor);
        const double dap = euclidean_distance(a, vec_of(t.positive));
        const double dan = euclidean_distance(a, vec_of(t.negative));
        if (dap < dan) ++hits; // equal distances count as failures
    }

    TripletEvalReport r;
    r.n = triplets.size();
    r.accuracy = static_cast<double>(hits) / static_cast<double>(r.n);
    r.split = std::move(split);
    return r;
}

std::vector<StsPair> load_sts_tsv(const std::filesystem::path& path) {
    CsvReader reader(path, '\t');
    std::vector<StsPair> pairs;
    std::vector<std::string> fields;
    size_t line_no = 0;
    while (reader.next(fields, line_no)) {
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() != 3)
            throw DataError(reader.filename() + ":" + std::to_string(line_no) +
                            ": expected 3 tab-separated fields");
        StsPair p;
        p.sentence_a = fields[0];
        p.sentence_b = fields[1];
        const auto res =
            std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), p.score);
        if (res.ec != std::errc() || res.ptr != fields[2].data() + fields[2].size())
            throw DataError(reader.filename() + ":" + std::to_string(line_no) +
                            ": field 'score': not a number: '" + fields[2] + "'");
        if (p.score < 0.0 || p.score > 5.0)
            throw DataError(reader.filename() + ":" + std::to_string(line_no) +
                            ": score out of [0, 5]: " + fields[2]);
        pairs.push_back(std::move(p));
    }
    return pairs;
}

double eval_sts(const EncoderModel& model, std::span<const StsPair> pairs) {
    if (pairs.size() < 3) throw DataError("STS evaluation needs at least 3 pairs");
    std::vector<double> human, cosine;
    for (const auto& p : pairs) {
        const auto va = model.encode(p.sentence_a);
        const auto vb = model.encode(p.sentence_b);
        human.push_back(p.score);
        cosine.push_back(1.0 - cosine_distance(va, vb));
    }
    return spearman(human, cosine);
}

nlohmann::json metric_report_json(const MetricReport& r) {
    auto cls = [](const ClassMetrics& c) {
        return nlohmann::json{{"precision", c.precision},
                              {"recall", c.recall},
                              {"f1", c.f1},
                              {"support", c.support}};
    };
    return nlohmann::json{{"accuracy", r.accuracy},
                          {"macro_f1", r.macro_f1},
                          {"n", r.n},
                          {"pro", cls(r.pro)},
                          {"con", cls(r.con)}};
}

void write_bins_csv(std::span<const Bin> bins, const std::filesystem::path& path) {
    CsvWriter out(path);
    out.raw_line("bin_lo,bin_hi,n,accuracy");
    for (const auto& b : bins)
        out.row({format_double(b.lo), format_double(b.hi), std::to_string(b.n),
                 b.accuracy ? format_double(*b.accuracy) : std::string()});
    out.close();
}

void write_dstar_curve_csv(const DstarCurve& curve, const std::filesystem::path& path) {
    CsvWriter out(path);
    out.raw_line("bin_lo,bin_hi,n,accuracy");
    for (const auto& b : curve.bins)
        out.row({format_double(b.lo), format_double(b.hi), std::to_string(b.n),
                 b.accuracy ? format_double(*b.accuracy) : std::string()});
    out.row({format_double(curve.range_max), "inf", std::to_string(curve.overflow_n),
             curve.overflow_accuracy ? format_double(*curve.overflow_accuracy) : std::string()});
    out.close();
}

namespace {

nlohmann::json sampler_report_json(const SamplerReport& r, size_t n_triplets) {
    return nlohmann::json{{"n", n_triplets},
                          {"anchors_total", r.anchors_total},
                          {"anchors_emitted", r.anchors_emitted},
                          {"skipped_no_positive", r.skipped_no_positive},
                          {"skipped_no_negative", r.skipped_no_negative}};
}

nlohmann::json dstar_curve_json(const DstarCurve& c) {
    nlohmann::json j{{"width", c.width},
                     {"range_max", c.range_max},
                     {"excluded_dmin_zero", c.excluded_dmin_zero},
                     {"overflow_n", c.overflow_n}};
    if (c.slope) j["slope"] = *c.slope;
    if (c.overflow_accuracy) j["overflow_accuracy"] = *c.overflow_accuracy;
    return j;
}

uint64_t train_config_fnv(const TrainConfig& c, uint64_t triplet_file_hash) {
    std::string s;
    s += std::to_string(c.dim) + "|" + format_double(c.margin) + "|" +
         format_double(c.learning_rate) + "|" + std::to_string(c.epochs) + "|" +
         std::to_string(c.batch_size) + "|" + std::to_string(c.seed) + "|" +
         std::to_string(c.feature_buckets) + "|" + std::to_string(c.hash_seed) + "|" +
         hex64(triplet_file_hash);
    return fnv1a(s);
}

void write_group_curves_csv(const GroupCompareResult& g, const std::filesystem::path& path) {
    CsvWriter out(path);
    out.raw_line("group,bin_lo,bin_hi,n,accuracy");
    auto emit = [&](const std::string& name, const DstarCurve& c) {
        for (const auto& b : c.bins)
            out.row({name, format_double(b.lo), format_double(b.hi), std::to_string(b.n),
                     b.accuracy ? format_double(*b.accuracy) : std::string()});
    };
    emit(g.group_a, g.curve_a);
    emit(g.group_b, g.curve_b);
    out.close();
}

nlohmann::json group_compare_json(const GroupCompareResult& g) {
    nlohmann::json tests = nlohmann::json::array();
    for (const auto& t : g.tests) {
        nlohmann::json tj{{"bin_lo", t.lo}, {"bin_hi", t.hi}, {"n_a", t.n_a},
                          {"n_b", t.n_b},   {"tested", t.tested}};
        if (t.tested) {
            tj["t"] = t.t;
            tj["p_value"] = t.p_value;
        }
        tests.push_back(tj);
    }
    return nlohmann::json{{"group_a", g.group_a},
                          {"group_b", g.group_b},
                          {"test", "welch_t"},
                          {"bins", tests}};
}

struct FoldNumbers {
    bool ok = false;
    double triplet_train_acc = 0.0, triplet_test_acc = 0.0;
    double accuracy = 0.0, macro_f1 = 0.0;
    double random_acc = 0.0, random_f1 = 0.0;
    double majority_acc = 0.0, majority_f1 = 0.0;
    std::optional<double> mean_dstar, dstar_slope, sts, category_r;
};

void aggregate_series(nlohmann::json& metrics, const std::string& name,
                      const std::vector<double>& values) {
    if (values.empty()) return;
    metrics[name] = {{"mean", mean_of(values)},
                     {"stddev", sample_stddev(values)},
                     {"n_folds", values.size()},
                     {"per_fold", values}};
}

nlohmann::json build_aggregate(const std::vector<FoldNumbers>& nums, uint32_t k, uint64_t seed,
                               size_t failed) {
    nlohmann::json agg;
    agg["k"] = k;
    agg["seed"] = seed;
    agg["folds_failed"] = failed;
    agg["folds_succeeded"] = nums.size();
    nlohmann::json metrics = nlohmann::json::object();
    auto collect = [&](auto getter) {
        std::vector<double> v;
        for (const auto& f : nums) {
            const auto x = getter(f);
            if (x) v.push_back(*x);
        }
        return v;
    };
    using F = const FoldNumbers&;
    aggregate_series(metrics, "triplet_train_accuracy",
                     collect([](F f) { return std::optional<double>(f.triplet_train_acc); }));
    aggregate_series(metrics, "triplet_test_accuracy",
                     collect([](F f) { return std::optional<double>(f.triplet_test_acc); }));
    aggregate_series(metrics, "accuracy",
                     collect([](F f) { return std::optional<double>(f.accuracy); }));
    aggregate_series(metrics, "macro_f1",
                     collect([](F f) { return std::optional<double>(f.macro_f1); }));
    aggregate_series(metrics, "baseline_random_accuracy",
                     collect([](F f) { return std::optional<double>(f.random_acc); }));
    aggregate_series(metrics, "baseline_random_macro_f1",
                     collect([](F f) { return std::optional<double>(f.random_f1); }));
    aggregate_series(metrics, "baseline_majority_accuracy",
                     collect([](F f) { return std::optional<double>(f.majority_acc); }));
    aggregate_series(metrics, "baseline_majority_macro_f1",
                     collect([](F f) { return std::optional<double>(f.majority_f1); }));
    aggregate_series(metrics, "mean_dstar", collect([](F f) { return f.mean_dstar; }));
    aggregate_series(metrics, "dstar_slope", collect([](F f) { return f.dstar_slope; }));
    aggregate_series(metrics, "sts_spearman", collect([](F f) { return f.sts; }));
    aggregate_series(metrics, "category_dstar_pearson_r",
                     collect([](F f) { return f.category_r; }));
    agg["metrics"] = metrics;
    return agg;
}

FoldNumbers fold_numbers_from_report(const nlohmann::json& rep) {
    FoldNumbers f;
    if (rep.contains("error")) return f;
    f.ok = true;
    f.triplet_train_acc = rep["triplet_eval"]["train"]["accuracy"].get<double>();
    f.triplet_test_acc = rep["triplet_eval"]["test"]["accuracy"].get<double>();
    f.accuracy = rep["prediction"]["model"]["accuracy"].get<double>();
    f.macro_f1 = rep["prediction"]["model"]["macro_f1"].get<double>();
    f.random_acc = rep["prediction"]["baseline_random"]["accuracy"].get<double>();
    f.random_f1 = rep["prediction"]["baseline_random"]["macro_f1"].get<double>();
    f.majority_acc = rep["prediction"]["baseline_majority"]["accuracy"].get<double>();
    f.majority_f1 = rep["prediction"]["baseline_majority"]["macro_f1"].get<double>();
    if (rep["dstar"].contains("mean_dstar"))
        f.mean_dstar = rep["dstar"]["mean_dstar"].get<double>();
    if (rep["dstar"].contains("slope")) f.dstar_slope = rep["dstar"]["slope"].get<double>();
    if (rep.contains("sts") && rep["sts"].contains("spearman"))
        f.sts = rep["sts"]["spearman"].get<double>();
    if (rep.contains("category_dstar") && rep["category_dstar"].contains("pearson_r"))
        f.category_r = rep["category_dstar"]["pearson_r"].get<double>();
    return f;
}

} // namespace

PipelineReport run_pipeline(const Corpus& corpus, const ProfileSet* profiles,
                            const PipelineConfig& config, const std::filesystem::path& outdir) {
    std::filesystem::create_directories(outdir);
    const auto folds = make_folds(corpus, config.k, config.seed);

    std::optional<EncoderModel> precomputed;
    if (config.precomputed_vectors) {
        auto entries = load_vectors(*config.precomputed_vectors);
        if (entries.empty()) throw DataError("precomputed vector store is empty");
        const uint32_t dim = static_cast<uint32_t>(entries.front().second.size());
        precomputed = EncoderModel::precomputed(dim, std::move(entries));
    }

    std::vector<StsPair> sts_pairs;
    if (config.sts_path) sts_pairs = load_sts_tsv(*config.sts_path);

    PipelineReport result;
    std::vector<FoldNumbers> numbers;
    size_t failed = 0;

    for (const auto& fold : folds) {
        const auto fold_dir = outdir / ("fold_" + std::to_string(fold.fold_index));
        std::filesystem::create_directories(fold_dir);
        nlohmann::json rep;
        rep["fold"] = fold.fold_index;
        try {
            std::vector<uint8_t> train_mask(corpus.debates().size(), 1);
            for (uint32_t d : fold.test_debates) train_mask[d] = 0;

            // Train triplets from the train portion only.
            const auto cooc_train = build_cooc(corpus, &train_mask);
            TripletSamplerConfig sampler;
            sampler.max_pos = config.max_pos;
            sampler.max_neg = config.max_neg;
            sampler.force_opposite = config.force_opposite;
            sampler.seed = derive_seed(config.seed, "triplets", fold.fold_index);
            SamplerReport train_sampler_rep;
            const auto train_triplets =
                sample_triplets(cooc_train, corpus, sampler, &train_sampler_rep);
            if (train_triplets.empty())
                throw DataError("no train triplets could be sampled");
            write_triplets_csv(train_triplets, corpus, fold_dir / "triplets_train.csv");

            // Test triplets mirror the train procedure on test-fold votes.
            const auto cooc_test = build_cooc(corpus, &fold.test_mask);
            TripletSamplerConfig test_sampler = sampler;
            test_sampler.seed = derive_seed(config.seed, "test_triplets", fold.fold_index);
            SamplerReport test_sampler_rep;
            const auto test_triplets =
                sample_triplets(cooc_test, corpus, test_sampler, &test_sampler_rep);
            if (test_triplets.empty()) throw DataError("no test triplets could be sampled");
            write_triplets_csv(test_triplets, corpus, fold_dir / "triplets_test.csv");

            rep["triplets"] = {{"train", sampler_report_json(train_sampler_rep, train_triplets.size())},
                               {"test", sampler_report_json(test_sampler_rep, test_triplets.size())},
                               {"test_sampling", "test_mirrored_train"}};

            // Model: precomputed store, cached file, or fresh training.
            EncoderModel model = [&]() {
                if (precomputed) {
                    rep["training"] = {{"backend", "precomputed"}};
                    return *precomputed;
                }
                TrainConfig tc = config.train;
                tc.seed = derive_seed(config.seed, "train", fold.fold_index);
                const uint64_t triplet_hash = file_fnv64(fold_dir / "triplets_train.csv");
                const std::string meta_hash = hex64(train_config_fnv(tc, triplet_hash));
                const auto model_path = fold_dir / "model.blfm";
                const auto meta_path = fold_dir / "model_meta.json";
                if (config.reuse_models && std::filesystem::exists(model_path) &&
                    std::filesystem::exists(meta_path)) {
                    const auto meta = read_json_file(meta_path);
                    if (meta.value("config_fnv", std::string()) == meta_hash) {
                        rep["training"] = {{"backend", "trained"}, {"cached", true}};
                        return EncoderModel::load(model_path);
                    }
                }
                LossTrace trace;
                EncoderModel m = train_encoder(train_triplets, corpus, tc, &trace);
                m.save(model_path);
                write_json_file(nlohmann::json{{"config_fnv", meta_hash}}, meta_path);
                rep["training"] = {{"backend", "trained"},
                                   {"cached", false},
                                   {"initial_loss", trace.initial},
                                   {"final_loss", trace.final_full},
                                   {"per_epoch", trace.per_epoch}};
                return m;
            }();

            const auto train_eval = eval_triplets(model, corpus, train_triplets, "train");
            const auto test_eval = eval_triplets(model, corpus, test_triplets, "test");
            rep["triplet_eval"] = {
                {"train", {{"n", train_eval.n}, {"accuracy", train_eval.accuracy}}},
                {"test", {{"n", test_eval.n}, {"accuracy", test_eval.accuracy}}}};

            // Prediction on the test fold.
            const auto run = run_fold(model, corpus, fold);
            if (run.outcomes.empty()) throw DataError("no evaluable (user, test vote) pairs");
            write_outcomes_csv(run.outcomes, fold_dir / "outcomes.csv");
            rep["n_evaluable_users"] = fold.evaluable_users.size();
            rep["n_skipped_users"] = run.skipped_users.size();
            rep["n_train_debates"] = fold.train_debates.size();
            rep["n_test_debates"] = fold.test_debates.size();
            rep["train_majority"] = std::string(to_string(run.majority));

            const auto model_metrics = compute_metrics(run.outcomes);
            const auto random_metrics = baseline_random(
                run.outcomes, derive_seed(config.seed, "baseline_random", fold.fold_index));
            const auto majority_metrics = baseline_majority(run.majority, run.outcomes);
            rep["prediction"] = {{"model", metric_report_json(model_metrics)},
                                 {"baseline_random", metric_report_json(random_metrics)},
                                 {"baseline_majority", metric_report_json(majority_metrics)}};

            nlohmann::json cats = nlohmann::json::array();
            for (const auto& cm : metrics_by_category(run.outcomes)) {
                nlohmann::json cj = metric_report_json(cm.report);
                cj["category"] = cm.category;
                cats.push_back(cj);
            }
            rep["per_category"] = cats;

            nlohmann::json hist = nlohmann::json::array();
            for (const auto& hp : metrics_by_history(run.outcomes, run.history_len))
                hist.push_back({{"l_v", hp.l_v},
                                {"n_users", hp.n_users},
                                {"n_votes", hp.n_votes},
                                {"vote_accuracy", hp.vote_accuracy},
                                {"vote_macro_f1", hp.vote_macro_f1},
                                {"user_mean_accuracy", hp.user_mean_accuracy}});
            rep["history_curve"] = hist;

            // Distance responses.
            const auto dist = distance_response(run.outcomes, config.distance_bin_width);
            write_bins_csv(dist.vs_dmin, fold_dir / "dmin_curve.csv");
            write_bins_csv(dist.vs_dmax, fold_dir / "dmax_curve.csv");
            write_bins_csv(dist.vs_davg, fold_dir / "davg_curve.csv");
            {
                CsvWriter grid(fold_dir / "grid.csv");
                grid.raw_line("dmin_lo,dmax_lo,n,accuracy");
                for (const auto& cell : dist.grid)
                    grid.row({format_double(static_cast<double>(cell.i) * dist.width),
                              format_double(static_cast<double>(cell.j) * dist.width),
                              std::to_string(cell.n),
                              cell.accuracy ? format_double(*cell.accuracy) : std::string()});
                grid.close();
            }

            // Relative dissonance.
            const auto dstar_curve =
                accuracy_vs_dstar(run.outcomes, config.dstar_bin_width, config.dstar_range_max);
            write_dstar_curve_csv(dstar_curve, fold_dir / "dstar_curve.csv");
            rep["dstar"] = dstar_curve_json(dstar_curve);
            {
                double sum = 0.0;
                size_t n = 0;
                for (const auto& o : run.outcomes) {
                    if (!o.d_star) continue;
                    sum += *o.d_star;
                    ++n;
                }
                if (n > 0) rep["dstar"]["mean_dstar"] = sum / static_cast<double>(n);
            }

            try {
                const auto catcorr = category_dstar_correlation(run.outcomes);
                nlohmann::json rows = nlohmann::json::array();
                CsvWriter cat_csv(fold_dir / "category_dstar.csv");
                cat_csv.raw_line("category,mean_dstar,macro_f1,n");
                for (const auto& r : catcorr.rows) {
                    rows.push_back({{"category", r.category},
                                    {"mean_dstar", r.mean_dstar},
                                    {"macro_f1", r.macro_f1},
                                    {"n", r.n}});
                    cat_csv.row({r.category, format_double(r.mean_dstar),
                                 format_double(r.macro_f1), std::to_string(r.n)});
                }
                cat_csv.close();
                rep["category_dstar"] = {{"pearson_r", catcorr.pearson_r}, {"rows", rows}};
            } catch (const DataError& e) {
                rep["category_dstar"] = {{"skipped", e.what()}};
            }

            if (profiles) {
                nlohmann::json gc = nlohmann::json::object();
                const std::pair<GroupBy, const char*> groupings[] = {
                    {GroupBy::Party, "party"}, {GroupBy::Religion, "religion"}};
                for (const auto& [grouping, name] : groupings) {
                    try {
                        const auto g = group_compare(run.outcomes, *profiles, grouping,
                                                     config.dstar_bin_width,
                                                     config.dstar_range_max);
                        write_group_curves_csv(
                            g, fold_dir / ("group_" + std::string(name) + ".csv"));
                        gc[name] = group_compare_json(g);
                    } catch (const DataError& e) {
                        gc[name] = {{"skipped", e.what()}};
                    }
                }
                rep["group_compare"] = gc;
            }

            if (!sts_pairs.empty()) {
                try {
                    rep["sts"] = {{"spearman", eval_sts(model, sts_pairs)},
                                  {"n", sts_pairs.size()}};
                } catch (const DataError& e) {
                    rep["sts"] = {{"skipped", e.what()}};
                }
            }

            if (config.write_plots) {
                PlotSpec spec;
                spec.kind = PlotKind::Line;
                spec.title = "accuracy vs d*";
                spec.xlabel = "d* bin center";
                spec.ylabel = "accuracy";
                Series s;
                s.label = "accuracy";
                for (const auto& b : dstar_curve.bins)
                    if (b.accuracy) s.points.emplace_back((b.lo + b.hi) / 2.0, *b.accuracy);
                if (!s.points.empty()) {
                    spec.series.push_back(std::move(s));
                    emit_plot(spec, fold_dir / "dstar_curve.svg");
                }
            }
        } catch (const std::exception& e) {
            rep["error"] = std::string("fold ") + std::to_string(fold.fold_index) +
                           " aborted: " + e.what();
            ++failed;
        }

        write_json_file(rep, fold_dir / "report.json");
        const auto nums = fold_numbers_from_report(rep);
        if (nums.ok) numbers.push_back(nums);
        result.folds.push_back(std::move(rep));
    }

    result.folds_succeeded = numbers.size();
    result.aggregate = build_aggregate(numbers, config.k, config.seed, failed);
    write_json_file(result.aggregate, outdir / "aggregate.json");
    return result;
}

nlohmann::json aggregate_run_dir(const std::filesystem::path& outdir) {
    std::vector<std::filesystem::path> fold_reports;
    for (const auto& entry : std::filesystem::directory_iterator(outdir)) {
        if (!entry.is_directory()) continue;
        const auto name = entry.path().filename().string();
        if (name.rfind("fold_", 0) != 0) continue;
        const auto rep = entry.path() / "report.json";
        if (std::filesystem::exists(rep)) fold_reports.push_back(rep);
    }
    if (fold_reports.empty())
        throw DataError("no fold_*/report.json found under " + outdir.string());
    std::sort(fold_reports.begin(), fold_reports.end());

    std::vector<FoldNumbers> numbers;
    size_t failed = 0;
    uint32_t k = 0;
    uint64_t seed = 0;
    const auto agg_path = outdir / "aggregate.json";
    if (std::filesystem::exists(agg_path)) {
        const auto agg = read_json_file(agg_path);
        k = agg.value("k", 0u);
        seed = agg.value("seed", uint64_t{0});
    }
    for (const auto& path : fold_reports) {
        const auto nums = fold_numbers_from_report(read_json_file(path));
        if (nums.ok) numbers.push_back(nums);
        else ++failed;
    }
    if (k == 0) k = static_cast<uint32_t>(fold_reports.size());
    return build_aggregate(numbers, k, seed, failed);
}

} // namespace beliefspace
