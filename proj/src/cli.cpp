#include "beliefspace/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "beliefspace/corpus.hpp"
#include "beliefspace/csv.hpp"
#include "beliefspace/dissonance.hpp"
#include "beliefspace/encoder.hpp"
#include "beliefspace/evalkit.hpp"
#include "beliefspace/manifest.hpp"
#include "beliefspace/predict.hpp"
#include "beliefspace/space.hpp"
#include "beliefspace/svg.hpp"
#include "beliefspace/triplets.hpp"

namespace beliefspace::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Corpus directories follow the ingest/synth layout.
Corpus load_corpus_dir(const fs::path& dir) {
    const fs::path debates = dir / "debates.jsonl";
    const fs::path votes = dir / "votes.csv";
    if (!fs::exists(debates) || !fs::exists(votes))
        throw DataError("corpus directory " + dir.string() +
                        " must contain debates.jsonl and votes.csv");
    return load_corpus(debates, votes);
}

std::optional<ProfileSet> load_corpus_profiles(const fs::path& dir) {
    const fs::path p = dir / "profiles.jsonl";
    if (!fs::exists(p)) return std::nullopt;
    return load_profiles(p);
}

struct TrainFlags {
    uint32_t dim = 64;
    double margin = 5.0;
    double lr = 0.05;
    uint32_t epochs = 10;
    uint32_t batch = 64;
    uint64_t buckets = 1ull << 18;
    uint64_t hash_seed = kDefaultHashSeed;

    void attach(CLI::App* cmd) {
        cmd->add_option("--dim", dim, "embedding dimension");
        cmd->add_option("--margin", margin, "triplet margin epsilon");
        cmd->add_option("--lr", lr, "SGD learning rate");
        cmd->add_option("--epochs", epochs, "training epochs");
        cmd->add_option("--batch", batch, "mini-batch size");
        cmd->add_option("--buckets", buckets, "feature hash buckets");
        cmd->add_option("--hash-seed", hash_seed, "feature hash seed");
    }

    TrainConfig config(uint64_t seed) const {
        TrainConfig c;
        c.dim = dim;
        c.margin = margin;
        c.learning_rate = lr;
        c.epochs = epochs;
        c.batch_size = batch;
        c.feature_buckets = buckets;
        c.hash_seed = hash_seed;
        c.seed = seed;
        return c;
    }

    void manifest_params(Manifest& m) const {
        m.param("dim", dim);
        m.param("margin", margin);
        m.param("lr", lr);
        m.param("epochs", epochs);
        m.param("batch", batch);
        m.param("buckets", buckets);
        m.param("hash_seed", hash_seed);
    }
};

std::vector<BeliefKey> voted_keys(const Corpus& corpus) {
    std::set<uint64_t> packed;
    for (const auto& v : corpus.votes()) packed.insert(BeliefKey{v.debate, v.pol}.packed());
    std::vector<BeliefKey> keys;
    keys.reserve(packed.size());
    for (uint64_t p : packed) keys.push_back(BeliefKey::unpack(p));
    return keys;
}

std::string belief_id(const Corpus& corpus, BeliefKey k) {
    return corpus.debates()[k.debate].id + "#" + std::string(to_string(k.pol));
}

void write_coords_csv(const fs::path& path, const std::string& kind,
                      const std::vector<std::string>& ids,
                      const std::vector<std::vector<double>>& coords, uint32_t q) {
    CsvWriter out(path);
    std::string header = "id,kind";
    for (uint32_t i = 1; i <= q; ++i) header += ",pc" + std::to_string(i);
    out.raw_line(header);
    for (size_t i = 0; i < ids.size(); ++i) {
        std::vector<std::string> row{ids[i], kind};
        for (double c : coords[i]) row.push_back(format_double(c));
        out.row(row);
    }
    out.close();
}

// ---- subcommand bodies ----

int cmd_synth(uint32_t users, uint32_t debates, uint32_t communities, double p, double eta,
              uint64_t seed, const fs::path& out) {
    const auto synth = generate_synthetic(users, debates, communities, p, eta, seed);
    fs::create_directories(out);
    synth.corpus.save(out);
    save_profiles(synth.profiles, out / "profiles.jsonl");
    save_synthetic_labels(synth.labels, synth.corpus, out / "labels.json");

    Manifest m("synth");
    m.param("users", users);
    m.param("debates", debates);
    m.param("communities", communities);
    m.param("p", p);
    m.param("eta", eta);
    m.param("seed", seed);
    m.output("debates", out / "debates.jsonl");
    m.output("votes", out / "votes.csv");
    m.output("profiles", out / "profiles.jsonl");
    m.output("labels", out / "labels.json");
    m.write(out / "manifest.json");

    std::cout << "synthetic corpus: " << synth.corpus.debates().size() << " debates, "
              << synth.corpus.votes().size() << " votes, " << synth.corpus.users().size()
              << " users -> " << out.string() << "\n";
    return 0;
}

int cmd_ingest(const fs::path& debates, const fs::path& votes,
               const std::optional<fs::path>& exclude, const std::optional<fs::path>& profiles,
               const fs::path& out) {
    const Corpus corpus = load_corpus(debates, votes, exclude);
    fs::create_directories(out);
    corpus.save(out);

    const auto& r = corpus.report();
    json report{{"debates_in_file", r.debates_in_file},
                {"debates_excluded", r.debates_excluded},
                {"debates_kept", r.debates_kept},
                {"vote_rows", r.vote_rows},
                {"ties_dropped", r.ties_dropped},
                {"votes_on_excluded", r.votes_on_excluded},
                {"duplicates_replaced", r.duplicates_replaced},
                {"votes_kept", r.votes_kept},
                {"unique_users", r.unique_users}};
    write_json_file(report, out / "report.json");

    Manifest m("ingest");
    m.input("debates", debates);
    m.input("votes", votes);
    if (exclude) m.input("exclude", *exclude);
    m.output("debates", out / "debates.jsonl");
    m.output("votes", out / "votes.csv");
    m.output("report", out / "report.json");
    if (profiles) {
        const auto prof = load_profiles(*profiles);
        save_profiles(prof, out / "profiles.jsonl");
        m.input("profiles", *profiles);
        m.output("profiles", out / "profiles.jsonl");
    }
    m.write(out / "manifest.json");

    std::cout << "ingested: " << r.debates_kept << " debates kept (" << r.debates_excluded
              << " excluded), " << r.votes_kept << " votes kept (" << r.ties_dropped
              << " TIE dropped, " << r.votes_on_excluded << " on excluded debates), "
              << r.unique_users << " unique users\n";
    return 0;
}

int cmd_triplets(const fs::path& corpus_dir, uint64_t seed, std::optional<uint32_t> k,
                 std::optional<uint32_t> fold_index, uint32_t max_pos, uint32_t max_neg,
                 bool no_force_opposite, const fs::path& out) {
    const Corpus corpus = load_corpus_dir(corpus_dir);
    std::vector<uint8_t> train_mask;
    const std::vector<uint8_t>* mask_ptr = nullptr;
    if (fold_index) {
        if (!k) throw UsageError("--fold requires --k");
        const auto folds = make_folds(corpus, *k, seed);
        if (*fold_index >= folds.size()) throw UsageError("--fold out of range for --k");
        train_mask.assign(corpus.debates().size(), 1);
        for (uint32_t d : folds[*fold_index].test_debates) train_mask[d] = 0;
        mask_ptr = &train_mask;
    }

    const auto cooc = build_cooc(corpus, mask_ptr);
    TripletSamplerConfig config;
    config.max_pos = max_pos;
    config.max_neg = max_neg;
    config.force_opposite = !no_force_opposite;
    config.seed = derive_seed(seed, "triplets", fold_index ? *fold_index : 0);
    SamplerReport rep;
    const auto triplets = sample_triplets(cooc, corpus, config, &rep);

    fs::create_directories(out);
    write_triplets_csv(triplets, corpus, out / "triplets.csv");
    const auto stats = triplet_stats(triplets, corpus);
    json stats_json{{"n_triplets", stats.n_triplets},
                    {"n_anchors", stats.n_anchors},
                    {"max_per_anchor", stats.max_per_anchor},
                    {"mean_per_anchor", stats.mean_per_anchor},
                    {"direct_opposite_fraction", stats.direct_opposite_fraction},
                    {"anchors_total", rep.anchors_total},
                    {"anchors_emitted", rep.anchors_emitted},
                    {"skipped_no_positive", rep.skipped_no_positive},
                    {"skipped_no_negative", rep.skipped_no_negative},
                    {"per_category", stats.per_category}};
    write_json_file(stats_json, out / "stats.json");

    Manifest m("triplets");
    m.param("seed", seed);
    if (k) m.param("k", *k);
    if (fold_index) m.param("fold", *fold_index);
    m.param("max_pos", max_pos);
    m.param("max_neg", max_neg);
    m.param("force_opposite", !no_force_opposite);
    m.input("debates", corpus_dir / "debates.jsonl");
    m.input("votes", corpus_dir / "votes.csv");
    m.output("triplets", out / "triplets.csv");
    m.output("stats", out / "stats.json");
    m.write(out / "manifest.json");

    std::cout << "sampled " << triplets.size() << " triplets from " << rep.anchors_emitted << "/"
              << rep.anchors_total << " anchors -> " << (out / "triplets.csv").string() << "\n";
    return 0;
}

int cmd_train(const fs::path& corpus_dir, const fs::path& triplets_path, uint64_t seed,
              const TrainFlags& flags, const fs::path& out_model,
              const std::optional<fs::path>& trace_path) {
    const Corpus corpus = load_corpus_dir(corpus_dir);
    const auto triplets = read_triplets_csv(corpus, triplets_path);
    const TrainConfig config = flags.config(seed);

    LossTrace trace;
    const EncoderModel model = train_encoder(triplets, corpus, config, &trace);
    if (out_model.has_parent_path()) fs::create_directories(out_model.parent_path());
    model.save(out_model);

    if (trace_path) {
        write_json_file(json{{"initial_loss", trace.initial},
                             {"final_loss", trace.final_full},
                             {"per_epoch", trace.per_epoch}},
                        *trace_path);
    }

    Manifest m("train");
    m.param("seed", seed);
    flags.manifest_params(m);
    m.input("triplets", triplets_path);
    m.input("debates", corpus_dir / "debates.jsonl");
    m.input("votes", corpus_dir / "votes.csv");
    m.output("model", out_model);
    if (trace_path) m.output("trace", *trace_path);
    const fs::path manifest_path = out_model.parent_path() / (out_model.stem().string() +
                                                              ".manifest.json");
    m.write(manifest_path);

    std::cout << "trained on " << triplets.size() << " triplets: mean loss "
              << format_double(trace.initial) << " -> " << format_double(trace.final_full)
              << "; model -> " << out_model.string() << "\n";
    return 0;
}

int cmd_encode(const fs::path& model_path, const std::optional<fs::path>& corpus_dir,
               const std::optional<std::string>& text, const std::optional<fs::path>& out,
               const std::string& format) {
    const EncoderModel model = EncoderModel::load(model_path);
    if (text) {
        const auto vec = model.encode(*text);
        for (size_t i = 0; i < vec.size(); ++i) {
            if (i) std::cout << ',';
            std::cout << format_double(vec[i]);
        }
        std::cout << "\n";
        return 0;
    }
    if (!corpus_dir || !out) throw UsageError("encode needs --text, or --corpus and --out");

    const Corpus corpus = load_corpus_dir(*corpus_dir);
    std::vector<std::pair<std::string, std::vector<double>>> entries;
    for (uint32_t d = 0; d < corpus.debates().size(); ++d) {
        for (const Polarity pol : {Polarity::Pro, Polarity::Con}) {
            const std::string stmt = corpus.statement(BeliefKey{d, pol});
            entries.emplace_back(stmt, model.encode(stmt));
        }
    }
    if (out->has_parent_path()) fs::create_directories(out->parent_path());
    if (format == "blfv") {
        save_vectors_blfv(entries, model.dim(), *out);
    } else if (format == "jsonl") {
        std::ofstream os(*out, std::ios::binary);
        if (!os) throw DataError("cannot write " + out->string());
        for (const auto& [stmt, vec] : entries) {
            json j{{"text", stmt}, {"vector", vec}};
            os << j.dump() << '\n';
        }
    } else {
        throw UsageError("unknown --format '" + format + "' (expected blfv or jsonl)");
    }

    Manifest m("encode");
    m.param("format", format);
    m.input("model", model_path);
    m.input("debates", *corpus_dir / "debates.jsonl");
    m.output("vectors", *out);
    m.write(out->parent_path() / (out->stem().string() + ".manifest.json"));

    std::cout << "encoded " << entries.size() << " statements -> " << out->string() << "\n";
    return 0;
}

int cmd_pca(const fs::path& model_path, const fs::path& corpus_dir, uint32_t q,
            const std::optional<fs::path>& keywords_path, bool include_users,
            const fs::path& out) {
    const EncoderModel model = EncoderModel::load(model_path);
    const Corpus corpus = load_corpus_dir(corpus_dir);

    const auto keys = voted_keys(corpus);
    if (keys.size() < 2) throw DataError("need at least 2 voted beliefs for PCA");
    std::vector<std::vector<double>> vectors;
    vectors.reserve(keys.size());
    std::unordered_map<uint64_t, size_t> key_row;
    for (const auto& k : keys) {
        key_row.emplace(k.packed(), vectors.size());
        vectors.push_back(model.encode(corpus.statement(k)));
    }
    const PcaModel pca = fit_pca(vectors, q);

    fs::create_directories(out);
    {
        std::vector<std::string> ids;
        std::vector<std::vector<double>> coords;
        for (size_t i = 0; i < keys.size(); ++i) {
            ids.push_back(belief_id(corpus, keys[i]));
            coords.push_back(project(pca, vectors[i]));
        }
        write_coords_csv(out / "coords_beliefs.csv", "belief", ids, coords, q);
    }

    Manifest m("pca");
    m.param("q", q);
    m.input("model", model_path);
    m.input("debates", corpus_dir / "debates.jsonl");
    m.input("votes", corpus_dir / "votes.csv");
    m.output("coords_beliefs", out / "coords_beliefs.csv");

    if (keywords_path) {
        const auto sets = read_json_file(*keywords_path);
        if (!sets.is_object())
            throw DataError(keywords_path->string() + ": expected an object of keyword arrays");
        for (const auto& [name, arr] : sets.items()) {
            if (!arr.is_array())
                throw DataError(keywords_path->string() + ": set '" + name +
                                "': expected an array of keywords");
            std::vector<std::string> kws;
            for (const auto& kw : arr) kws.push_back(kw.get<std::string>());
            const auto subset = select_by_keywords(corpus, kws);
            std::vector<std::string> ids;
            std::vector<std::vector<double>> coords;
            for (const auto& k : subset) {
                ids.push_back(belief_id(corpus, k));
                const auto it = key_row.find(k.packed());
                const auto vec = it != key_row.end() ? vectors[it->second]
                                                     : model.encode(corpus.statement(k));
                coords.push_back(project(pca, vec));
            }
            const fs::path p = out / ("coords_" + name + ".csv");
            write_coords_csv(p, "belief", ids, coords, q);
            m.output("coords_" + name, p);
        }
        m.input("keywords", *keywords_path);
    }

    if (include_users) {
        std::vector<uint32_t> users;
        for (uint32_t u = 0; u < corpus.users().size(); ++u)
            if (!corpus.votes_of(u).empty()) users.push_back(u);
        const auto embeddings = user_embeddings(model, corpus, users);
        std::vector<std::string> ids;
        std::vector<std::vector<double>> coords;
        for (const auto& e : embeddings) {
            ids.push_back(corpus.users()[e.user]);
            coords.push_back(project(pca, e.vec));
        }
        write_coords_csv(out / "coords_users.csv", "user", ids, coords, q);
        m.output("coords_users", out / "coords_users.csv");
    }

    // Variance summary; total variance lets readers compute explained ratios.
    double total_var = 0.0;
    {
        std::vector<double> mean(vectors.front().size(), 0.0);
        for (const auto& v : vectors)
            for (size_t j = 0; j < mean.size(); ++j) mean[j] += v[j];
        for (double& x : mean) x /= static_cast<double>(vectors.size());
        for (const auto& v : vectors)
            for (size_t j = 0; j < mean.size(); ++j)
                total_var += (v[j] - mean[j]) * (v[j] - mean[j]);
        total_var /= static_cast<double>(vectors.size() - 1);
    }
    json summary{{"n_beliefs", keys.size()},
                 {"q", q},
                 {"eigenvalues", pca.eigenvalues},
                 {"total_variance", total_var}};
    write_json_file(summary, out / "pca_summary.json");
    m.output("summary", out / "pca_summary.json");
    m.write(out / "manifest.json");

    std::cout << "PCA over " << keys.size() << " beliefs, q=" << q << " -> " << out.string()
              << "\n";
    return 0;
}

int cmd_polarization(const fs::path& model_path, const fs::path& corpus_dir,
                     const fs::path& profiles_path, const std::vector<std::string>& issues_arg,
                     const std::optional<std::string>& party_a,
                     const std::optional<std::string>& party_b, bool svg, const fs::path& out) {
    const EncoderModel model = EncoderModel::load(model_path);
    const Corpus corpus = load_corpus_dir(corpus_dir);
    const ProfileSet profiles = load_profiles(profiles_path);

    std::vector<uint32_t> users;
    for (uint32_t u = 0; u < corpus.users().size(); ++u)
        if (!corpus.votes_of(u).empty()) users.push_back(u);
    const auto embeddings = user_embeddings(model, corpus, users);

    std::vector<std::string> issues = issues_arg;
    if (issues.empty()) issues = profiles.issue_names();
    if (issues.empty()) throw DataError("profiles declare no big issues");

    fs::create_directories(out);
    CsvWriter csv(out / "polarization.csv");
    csv.raw_line("issue,euclid,cosine,n_pro,n_con");
    std::vector<PolarizationRecord> records;
    json skipped = json::array();
    for (const auto& issue : issues) {
        try {
            const auto rec = polarization(embeddings, corpus, profiles, issue);
            csv.row({rec.issue, format_double(rec.euclid_distance),
                     format_double(rec.cosine_distance), std::to_string(rec.n_pro),
                     std::to_string(rec.n_con)});
            records.push_back(rec);
        } catch (const DataError& e) {
            skipped.push_back({{"issue", issue}, {"reason", e.what()}});
        }
    }
    csv.close();
    if (records.empty()) throw DataError("no issue had users on both sides");

    // Partisan pro-ratio gaps and the distance/gap correlation.
    std::string pa, pb;
    if (party_a && party_b) {
        pa = *party_a;
        pb = *party_b;
    } else {
        std::map<std::string, size_t> freq;
        for (const auto& p : profiles.profiles)
            if (p.party) ++freq[*p.party];
        std::vector<std::pair<std::string, size_t>> ranked(freq.begin(), freq.end());
        std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
            return std::tie(y.second, x.first) < std::tie(x.second, y.first);
        });
        if (ranked.size() >= 2) {
            pa = ranked[0].first;
            pb = ranked[1].first;
        }
    }

    json summary;
    summary["n_issues"] = records.size();
    summary["skipped"] = skipped;
    if (!pa.empty() && !pb.empty()) {
        summary["party_a"] = pa;
        summary["party_b"] = pb;
        std::vector<double> euclid, gaps;
        json gap_rows = json::array();
        for (const auto& rec : records) {
            try {
                const double gap = pro_ratio_gap(profiles, rec.issue, pa, pb);
                euclid.push_back(rec.euclid_distance);
                gaps.push_back(gap);
                gap_rows.push_back({{"issue", rec.issue}, {"gap", gap},
                                    {"euclid", rec.euclid_distance}});
            } catch (const DataError&) {
                // issue with no PRO/CON respondents in a party: skip the pair
            }
        }
        summary["gaps"] = gap_rows;
        if (euclid.size() >= 3) {
            try {
                summary["pearson_euclid_vs_gap"] = correlate(euclid, gaps, CorrMethod::Pearson);
            } catch (const DataError& e) {
                summary["pearson_euclid_vs_gap_error"] = e.what();
            }
            if (svg) {
                PlotSpec spec;
                spec.kind = PlotKind::Scatter;
                spec.title = "group distance vs partisan pro-ratio gap";
                spec.xlabel = "pro-ratio gap";
                spec.ylabel = "centroid Euclidean distance";
                Series s;
                s.label = "issues";
                for (size_t i = 0; i < euclid.size(); ++i)
                    s.points.emplace_back(gaps[i], euclid[i]);
                spec.series.push_back(std::move(s));
                emit_plot(spec, out / "polarization.svg");
            }
        }
    }
    write_json_file(summary, out / "summary.json");

    Manifest m("polarization");
    m.input("model", model_path);
    m.input("debates", corpus_dir / "debates.jsonl");
    m.input("votes", corpus_dir / "votes.csv");
    m.input("profiles", profiles_path);
    m.output("polarization", out / "polarization.csv");
    m.output("summary", out / "summary.json");
    m.write(out / "manifest.json");

    std::cout << "polarization over " << records.size() << " issues -> " << out.string() << "\n";
    return 0;
}

int cmd_predict(const fs::path& corpus_dir, uint32_t k, uint64_t seed,
                std::optional<uint32_t> fold_arg, const TrainFlags& flags, uint32_t max_pos,
                uint32_t max_neg, const std::optional<fs::path>& vectors_path,
                const fs::path& out) {
    const Corpus corpus = load_corpus_dir(corpus_dir);
    const auto folds = make_folds(corpus, k, seed);
    if (fold_arg && *fold_arg >= folds.size()) throw UsageError("--fold out of range for --k");

    std::optional<EncoderModel> precomputed;
    if (vectors_path) {
        auto entries = load_vectors(*vectors_path);
        if (entries.empty()) throw DataError("precomputed vector store is empty");
        const uint32_t dim = static_cast<uint32_t>(entries.front().second.size());
        precomputed = EncoderModel::precomputed(dim, std::move(entries));
    }

    fs::create_directories(out);
    for (const auto& fold : folds) {
        if (fold_arg && fold.fold_index != *fold_arg) continue;
        const fs::path fold_dir = out / ("fold_" + std::to_string(fold.fold_index));
        fs::create_directories(fold_dir);

        EncoderModel model = [&]() {
            if (precomputed) return *precomputed;
            std::vector<uint8_t> train_mask(corpus.debates().size(), 1);
            for (uint32_t d : fold.test_debates) train_mask[d] = 0;
            const auto cooc = build_cooc(corpus, &train_mask);
            TripletSamplerConfig sampler;
            sampler.max_pos = max_pos;
            sampler.max_neg = max_neg;
            sampler.seed = derive_seed(seed, "triplets", fold.fold_index);
            const auto triplets = sample_triplets(cooc, corpus, sampler);
            if (triplets.empty()) throw DataError("no triplets sampled for fold " +
                                                  std::to_string(fold.fold_index));
            TrainConfig config = flags.config(derive_seed(seed, "train", fold.fold_index));
            return train_encoder(triplets, corpus, config);
        }();

        const auto run = run_fold(model, corpus, fold);
        write_outcomes_csv(run.outcomes, fold_dir / "outcomes.csv");

        json rep;
        rep["fold"] = fold.fold_index;
        rep["n_outcomes"] = run.outcomes.size();
        rep["n_skipped_users"] = run.skipped_users.size();
        rep["train_majority"] = std::string(to_string(run.majority));
        if (!run.outcomes.empty()) {
            rep["model"] = metric_report_json(compute_metrics(run.outcomes));
            rep["baseline_random"] = metric_report_json(baseline_random(
                run.outcomes, derive_seed(seed, "baseline_random", fold.fold_index)));
            rep["baseline_majority"] =
                metric_report_json(baseline_majority(run.majority, run.outcomes));
        }
        write_json_file(rep, fold_dir / "metrics.json");
    }

    Manifest m("predict");
    m.param("k", k);
    m.param("seed", seed);
    if (fold_arg) m.param("fold", *fold_arg);
    flags.manifest_params(m);
    m.input("debates", corpus_dir / "debates.jsonl");
    m.input("votes", corpus_dir / "votes.csv");
    if (vectors_path) m.input("vectors", *vectors_path);
    m.write(out / "manifest.json");

    std::cout << "prediction artifacts -> " << out.string() << "\n";
    return 0;
}

int cmd_dissonance(const fs::path& outcomes_path, double bin_width, double range_max,
                   double distance_bin, const std::optional<fs::path>& profiles_path,
                   const std::optional<std::string>& group_by, bool svg, const fs::path& out) {
    const auto outcomes = read_outcomes_csv(outcomes_path);
    if (outcomes.empty()) throw DataError("outcomes file is empty");
    fs::create_directories(out);

    const auto curve = accuracy_vs_dstar(outcomes, bin_width, range_max);
    write_dstar_curve_csv(curve, out / "dstar_curve.csv");

    const auto dist = distance_response(outcomes, distance_bin);
    write_bins_csv(dist.vs_dmin, out / "dmin_curve.csv");
    write_bins_csv(dist.vs_dmax, out / "dmax_curve.csv");
    write_bins_csv(dist.vs_davg, out / "davg_curve.csv");

    json summary;
    summary["n_outcomes"] = outcomes.size();
    summary["excluded_dmin_zero"] = curve.excluded_dmin_zero;
    if (curve.slope) summary["slope"] = *curve.slope;

    try {
        const auto catcorr = category_dstar_correlation(outcomes);
        CsvWriter cat(out / "category_dstar.csv");
        cat.raw_line("category,mean_dstar,macro_f1,n");
        for (const auto& r : catcorr.rows)
            cat.row({r.category, format_double(r.mean_dstar), format_double(r.macro_f1),
                     std::to_string(r.n)});
        cat.close();
        summary["category_pearson_r"] = catcorr.pearson_r;
    } catch (const DataError& e) {
        summary["category_skipped"] = e.what();
    }

    if (profiles_path) {
        const ProfileSet profiles = load_profiles(*profiles_path);
        const GroupBy grouping = (group_by && *group_by == "religion") ? GroupBy::Religion
                                                                       : GroupBy::Party;
        try {
            const auto g = group_compare(outcomes, profiles, grouping, bin_width, range_max);
            CsvWriter gout(out / "group_curves.csv");
            gout.raw_line("group,bin_lo,bin_hi,n,accuracy");
            auto emit = [&](const std::string& name, const DstarCurve& c) {
                for (const auto& b : c.bins)
                    gout.row({name, format_double(b.lo), format_double(b.hi),
                              std::to_string(b.n),
                              b.accuracy ? format_double(*b.accuracy) : std::string()});
            };
            emit(g.group_a, g.curve_a);
            emit(g.group_b, g.curve_b);
            gout.close();
            json tests = json::array();
            for (const auto& t : g.tests) {
                json tj{{"bin_lo", t.lo}, {"bin_hi", t.hi}, {"n_a", t.n_a}, {"n_b", t.n_b},
                        {"tested", t.tested}};
                if (t.tested) {
                    tj["t"] = t.t;
                    tj["p_value"] = t.p_value;
                }
                tests.push_back(tj);
            }
            summary["group_compare"] = {{"group_a", g.group_a},
                                        {"group_b", g.group_b},
                                        {"test", "welch_t"},
                                        {"bins", tests}};
        } catch (const DataError& e) {
            summary["group_compare"] = {{"skipped", e.what()}};
        }
    }
    write_json_file(summary, out / "summary.json");

    if (svg) {
        PlotSpec spec;
        spec.kind = PlotKind::Line;
        spec.title = "accuracy vs relative dissonance";
        spec.xlabel = "d*";
        spec.ylabel = "accuracy";
        Series s;
        s.label = "accuracy";
        for (const auto& b : curve.bins)
            if (b.accuracy) s.points.emplace_back((b.lo + b.hi) / 2.0, *b.accuracy);
        if (!s.points.empty()) {
            spec.series.push_back(std::move(s));
            emit_plot(spec, out / "dstar_curve.svg");
        }
    }

    Manifest m("dissonance");
    m.param("bin_width", bin_width);
    m.param("range_max", range_max);
    m.param("distance_bin", distance_bin);
    m.input("outcomes", outcomes_path);
    if (profiles_path) m.input("profiles", *profiles_path);
    m.output("dstar_curve", out / "dstar_curve.csv");
    m.output("summary", out / "summary.json");
    m.write(out / "manifest.json");

    std::cout << "dissonance analysis -> " << out.string() << "\n";
    return 0;
}

int cmd_eval(const fs::path& corpus_dir, uint32_t k, uint64_t seed, const TrainFlags& flags,
             uint32_t max_pos, uint32_t max_neg, bool no_force_opposite, double dstar_bin,
             double dstar_max, double distance_bin, const std::optional<fs::path>& sts_path,
             const std::optional<fs::path>& vectors_path, bool plots, const fs::path& out) {
    const Corpus corpus = load_corpus_dir(corpus_dir);
    const auto profiles = load_corpus_profiles(corpus_dir);

    PipelineConfig config;
    config.k = k;
    config.seed = seed;
    config.train = flags.config(seed);
    config.max_pos = max_pos;
    config.max_neg = max_neg;
    config.force_opposite = !no_force_opposite;
    config.dstar_bin_width = dstar_bin;
    config.dstar_range_max = dstar_max;
    config.distance_bin_width = distance_bin;
    config.sts_path = sts_path;
    config.precomputed_vectors = vectors_path;
    config.write_plots = plots;

    const auto report = run_pipeline(corpus, profiles ? &*profiles : nullptr, config, out);

    Manifest m("eval");
    m.param("k", k);
    m.param("seed", seed);
    flags.manifest_params(m);
    m.param("max_pos", max_pos);
    m.param("max_neg", max_neg);
    m.param("force_opposite", !no_force_opposite);
    m.input("debates", corpus_dir / "debates.jsonl");
    m.input("votes", corpus_dir / "votes.csv");
    if (sts_path) m.input("sts", *sts_path);
    if (vectors_path) m.input("vectors", *vectors_path);
    m.output("aggregate", out / "aggregate.json");
    m.write(out / "manifest.json");

    const auto& metrics = report.aggregate["metrics"];
    std::cout << "pipeline: " << report.folds_succeeded << "/" << k << " folds succeeded\n";
    for (const auto& key : {"triplet_train_accuracy", "triplet_test_accuracy", "accuracy",
                            "macro_f1"}) {
        if (metrics.contains(key))
            std::cout << "  " << key << ": mean " << metrics[key]["mean"].get<double>()
                      << " stddev " << metrics[key]["stddev"].get<double>() << "\n";
    }
    std::cout << "aggregate -> " << (out / "aggregate.json").string() << "\n";
    return 0;
}

int cmd_report(const fs::path& run_dir, const std::optional<fs::path>& out) {
    const auto aggregate = aggregate_run_dir(run_dir);
    const fs::path target = out ? *out : run_dir / "aggregate.json";
    write_json_file(aggregate, target);
    std::cout << aggregate.dump(2) << "\n";
    return 0;
}

} // namespace

int dispatch(int argc, const char* const* argv) {
    CLI::App app{"belief space construction and analytics from debate-vote records"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file; command-line flags override");
    app.allow_config_extras(CLI::config_extras_mode::error);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a planted-community synthetic corpus");
    uint32_t sy_users = 200, sy_debates = 60, sy_comm = 2;
    double sy_p = 0.95, sy_eta = 0.0;
    uint64_t sy_seed = 0;
    fs::path sy_out;
    synth->add_option("--users", sy_users, "number of users")->required();
    synth->add_option("--debates", sy_debates, "number of debates")->required();
    synth->add_option("--communities", sy_comm, "number of communities")->required();
    synth->add_option("--p", sy_p, "alignment probability in [0.5,1]");
    synth->add_option("--eta", sy_eta, "noise-subset flip probability in [0,0.5)");
    synth->add_option("--seed", sy_seed, "random seed")->required();
    synth->add_option("--out", sy_out, "output directory")->required();

    // ingest
    auto* ingest = app.add_subcommand("ingest", "load, filter and normalize a corpus");
    fs::path in_debates, in_votes, in_out;
    std::string in_exclude, in_profiles;
    ingest->add_option("--debates", in_debates, "debates JSONL file")->required();
    ingest->add_option("--votes", in_votes, "votes CSV file")->required();
    ingest->add_option("--exclude", in_exclude, "exclusion list (one debate_id per line)");
    ingest->add_option("--profiles", in_profiles, "profiles JSONL file");
    ingest->add_option("--out", in_out, "output directory")->required();

    // triplets
    auto* triplets = app.add_subcommand("triplets", "build co-occurrence and sample triplets");
    fs::path tr_corpus, tr_out;
    uint64_t tr_seed = 0;
    uint32_t tr_k = 0, tr_fold = 0, tr_max_pos = 5, tr_max_neg = 5;
    bool tr_no_force = false;
    triplets->add_option("--corpus", tr_corpus, "corpus directory")->required();
    triplets->add_option("--seed", tr_seed, "random seed")->required();
    auto* tr_k_opt = triplets->add_option("--k", tr_k, "fold count");
    auto* tr_fold_opt =
        triplets->add_option("--fold", tr_fold, "restrict to this fold's train debates");
    triplets->add_option("--max-pos", tr_max_pos, "max positives per anchor");
    triplets->add_option("--max-neg", tr_max_neg, "max negatives per anchor");
    triplets->add_flag("--no-force-opposite", tr_no_force,
                       "do not force the direct opposite as a negative");
    triplets->add_option("--out", tr_out, "output directory")->required();

    // train
    auto* train = app.add_subcommand("train", "train the linear encoder on triplets");
    fs::path trn_corpus, trn_triplets, trn_out;
    std::string trn_trace;
    uint64_t trn_seed = 0;
    TrainFlags trn_flags;
    train->add_option("--corpus", trn_corpus, "corpus directory")->required();
    train->add_option("--triplets", trn_triplets, "triplet CSV")->required();
    train->add_option("--seed", trn_seed, "random seed")->required();
    train->add_option("--out", trn_out, "output model file (.blfm)")->required();
    train->add_option("--trace", trn_trace, "write loss trace JSON here");
    trn_flags.attach(train);

    // encode
    auto* encode = app.add_subcommand("encode", "encode statements with a model");
    fs::path en_model;
    std::string en_corpus, en_text, en_out, en_format = "blfv";
    encode->add_option("--model", en_model, "model file")->required();
    encode->add_option("--corpus", en_corpus, "corpus directory (encode all statements)");
    encode->add_option("--text", en_text, "encode one statement to stdout");
    encode->add_option("--out", en_out, "output vector file");
    encode->add_option("--format", en_format, "vector file format: blfv | jsonl");

    // pca
    auto* pca = app.add_subcommand("pca", "fit PCA on belief vectors and export coordinates");
    fs::path pc_model, pc_corpus, pc_out;
    std::string pc_keywords;
    uint32_t pc_q = 2;
    bool pc_users = false;
    pca->add_option("--model", pc_model, "model file")->required();
    pca->add_option("--corpus", pc_corpus, "corpus directory")->required();
    pca->add_option("-q,--components", pc_q, "number of principal axes");
    pca->add_option("--keywords", pc_keywords, "JSON file of named keyword sets");
    pca->add_flag("--users", pc_users, "also project user embeddings");
    pca->add_option("--out", pc_out, "output directory")->required();

    // polarization
    auto* polar = app.add_subcommand("polarization", "group centroid distances per big issue");
    fs::path po_model, po_corpus, po_profiles, po_out;
    std::vector<std::string> po_issues;
    std::string po_party_a, po_party_b;
    bool po_svg = false;
    polar->add_option("--model", po_model, "model file")->required();
    polar->add_option("--corpus", po_corpus, "corpus directory")->required();
    polar->add_option("--profiles", po_profiles, "profiles JSONL")->required();
    polar->add_option("--issues", po_issues, "issues to analyze (default: all)");
    polar->add_option("--party-a", po_party_a, "first party for pro-ratio gaps");
    polar->add_option("--party-b", po_party_b, "second party for pro-ratio gaps");
    polar->add_flag("--svg", po_svg, "emit scatter SVG");
    polar->add_option("--out", po_out, "output directory")->required();

    // predict
    auto* predict = app.add_subcommand("predict", "nearest-belief stance prediction per fold");
    fs::path pr_corpus, pr_out;
    std::string pr_vectors;
    uint64_t pr_seed = 0;
    uint32_t pr_k = 5, pr_fold = 0, pr_max_pos = 5, pr_max_neg = 5;
    TrainFlags pr_flags;
    predict->add_option("--corpus", pr_corpus, "corpus directory")->required();
    predict->add_option("--k", pr_k, "fold count");
    predict->add_option("--seed", pr_seed, "random seed")->required();
    auto* pr_fold_opt = predict->add_option("--fold", pr_fold, "run only this fold");
    predict->add_option("--max-pos", pr_max_pos, "max positives per anchor");
    predict->add_option("--max-neg", pr_max_neg, "max negatives per anchor");
    predict->add_option("--vectors", pr_vectors, "precomputed vector store (skip training)");
    pr_flags.attach(predict);
    predict->add_option("--out", pr_out, "output directory")->required();

    // dissonance
    auto* dis = app.add_subcommand("dissonance", "relative dissonance analyses over outcomes");
    fs::path di_outcomes, di_out;
    std::string di_profiles, di_group;
    double di_bin = 0.1, di_max = 1.2, di_dist_bin = 1.0;
    bool di_svg = false;
    dis->add_option("--outcomes", di_outcomes, "outcomes CSV")->required();
    dis->add_option("--bin-width", di_bin, "d* bin width");
    dis->add_option("--range-max", di_max, "d* curve range (overflow beyond)");
    dis->add_option("--distance-bin", di_dist_bin, "bin width for d_min/d_max curves");
    dis->add_option("--profiles", di_profiles, "profiles JSONL for group comparison");
    dis->add_option("--group-by", di_group, "party | religion");
    dis->add_flag("--svg", di_svg, "emit curve SVG");
    dis->add_option("--out", di_out, "output directory")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "full fold-wise pipeline with reports");
    fs::path ev_corpus, ev_out;
    std::string ev_sts, ev_vectors;
    uint64_t ev_seed = 0;
    uint32_t ev_k = 5, ev_max_pos = 5, ev_max_neg = 5;
    bool ev_no_force = false, ev_plots = false;
    double ev_dstar_bin = 0.1, ev_dstar_max = 1.2, ev_dist_bin = 1.0;
    TrainFlags ev_flags;
    eval->add_option("--corpus", ev_corpus, "corpus directory")->required();
    eval->add_option("--k", ev_k, "fold count");
    eval->add_option("--seed", ev_seed, "random seed")->required();
    eval->add_option("--max-pos", ev_max_pos, "max positives per anchor");
    eval->add_option("--max-neg", ev_max_neg, "max negatives per anchor");
    eval->add_flag("--no-force-opposite", ev_no_force,
                   "do not force the direct opposite as a negative");
    eval->add_option("--dstar-bin", ev_dstar_bin, "d* bin width");
    eval->add_option("--dstar-max", ev_dstar_max, "d* curve range");
    eval->add_option("--distance-bin", ev_dist_bin, "distance curve bin width");
    eval->add_option("--sts", ev_sts, "STS TSV benchmark file");
    eval->add_option("--vectors", ev_vectors, "precomputed vector store (skip training)");
    eval->add_flag("--plots", ev_plots, "emit SVG plots per fold");
    ev_flags.attach(eval);
    eval->add_option("--out", ev_out, "output directory")->required();

    // report
    auto* report = app.add_subcommand("report", "aggregate a finished run directory");
    fs::path re_run;
    std::string re_out;
    report->add_option("--run", re_run, "pipeline output directory")->required();
    report->add_option("--out", re_out, "aggregate JSON path (default <run>/aggregate.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    }

    auto opt_path = [](const std::string& s) {
        return s.empty() ? std::optional<fs::path>() : std::optional<fs::path>(s);
    };
    auto opt_str = [](const std::string& s) {
        return s.empty() ? std::optional<std::string>() : std::optional<std::string>(s);
    };

    try {
        if (synth->parsed())
            return cmd_synth(sy_users, sy_debates, sy_comm, sy_p, sy_eta, sy_seed, sy_out);
        if (ingest->parsed())
            return cmd_ingest(in_debates, in_votes, opt_path(in_exclude), opt_path(in_profiles),
                              in_out);
        if (triplets->parsed())
            return cmd_triplets(tr_corpus, tr_seed,
                                tr_k_opt->count() ? std::optional<uint32_t>(tr_k) : std::nullopt,
                                tr_fold_opt->count() ? std::optional<uint32_t>(tr_fold)
                                                     : std::nullopt,
                                tr_max_pos, tr_max_neg, tr_no_force, tr_out);
        if (train->parsed())
            return cmd_train(trn_corpus, trn_triplets, trn_seed, trn_flags, trn_out,
                             opt_path(trn_trace));
        if (encode->parsed())
            return cmd_encode(en_model, opt_path(en_corpus), opt_str(en_text), opt_path(en_out),
                              en_format);
        if (pca->parsed())
            return cmd_pca(pc_model, pc_corpus, pc_q, opt_path(pc_keywords), pc_users, pc_out);
        if (polar->parsed())
            return cmd_polarization(po_model, po_corpus, po_profiles, po_issues,
                                    opt_str(po_party_a), opt_str(po_party_b), po_svg, po_out);
        if (predict->parsed())
            return cmd_predict(pr_corpus, pr_k, pr_seed,
                               pr_fold_opt->count() ? std::optional<uint32_t>(pr_fold)
                                                    : std::nullopt,
                               pr_flags, pr_max_pos, pr_max_neg, opt_path(pr_vectors), pr_out);
        if (dis->parsed())
            return cmd_dissonance(di_outcomes, di_bin, di_max, di_dist_bin,
                                  opt_path(di_profiles), opt_str(di_group), di_svg, di_out);
        if (eval->parsed())
            return cmd_eval(ev_corpus, ev_k, ev_seed, ev_flags, ev_max_pos, ev_max_neg,
                            ev_no_force, ev_dstar_bin, ev_dstar_max, ev_dist_bin,
                            opt_path(ev_sts), opt_path(ev_vectors), ev_plots, ev_out);
        if (report->parsed()) return cmd_report(re_run, opt_path(re_out));
        std::cerr << "usage error: no subcommand given\n";
        return 1;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}

} // namespace beliefspace::cli
