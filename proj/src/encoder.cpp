#include "beliefspace/encoder.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "beliefspace/rng.hpp"
#include "beliefspace/vecmath.hpp"

namespace beliefspace {

namespace {

bool is_token_char(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

char to_lower_ascii(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c; }

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char c : text) {
        if (is_token_char(static_cast<unsigned char>(c))) {
            cur.push_back(to_lower_ascii(c));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

uint32_t bucket_of(std::string_view ngram, const FeatureSpec& spec) {
    const uint64_t h = fnv1a(ngram, fnv1a_u64(spec.hash_seed));
    return static_cast<uint32_t>(h % spec.buckets);
}

} // namespace

SparseVec featurize(std::string_view text, const FeatureSpec& spec) {
    if (spec.buckets == 0) throw DataError("feature bucket count must be positive");
    if (text.empty()) throw DataError("cannot featurize empty text");
    const auto tokens = tokenize(text);
    if (tokens.empty()) throw DataError("text has no alphanumeric tokens: '" + std::string(text) + "'");

    std::map<uint32_t, double> counts;
    for (const auto& t : tokens) counts[bucket_of(t, spec)] += 1.0;
    std::string bigram;
    for (size_t i = 0; i + 1 < tokens.size(); ++i) {
        bigram.assign(tokens[i]);
        bigram.push_back('\x1f'); // unit separator keeps "a b","c" != "a","b c"
        bigram.append(tokens[i + 1]);
        counts[bucket_of(bigram, spec)] += 1.0;
    }

    double sq = 0.0;
    for (const auto& [idx, c] : counts) sq += c * c;
    const double inv = 1.0 / std::sqrt(sq);

    SparseVec out;
    out.entries.reserve(counts.size());
    for (const auto& [idx, c] : counts) out.entries.emplace_back(idx, c * inv);
    return out;
}

void TrainConfig::validate() const {
    if (margin <= 0.0) throw DataError("margin must be positive");
    if (dim < 2) throw DataError("embedding dimension must be at least 2");
    if (feature_buckets < dim) throw DataError("feature_buckets must be >= dim");
    if (learning_rate < 0.0) throw DataError("learning_rate must be non-negative");
    if (epochs == 0 || batch_size == 0) throw DataError("epochs and batch_size must be positive");
}

double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double margin) {
    const double dap = euclidean_distance(anchor, positive);
    const double dan = euclidean_distance(anchor, negative);
    return std::max(dap - dan + margin, 0.0);
}

EncoderModel EncoderModel::trained(FeatureSpec spec, uint32_t dim, std::vector<double> weights) {
    if (weights.size() != spec.buckets * static_cast<size_t>(dim))
        throw DataError("weight matrix shape mismatch");
    EncoderModel m;
    m.backend_ = Backend::Trained;
    m.dim_ = dim;
    m.spec_ = spec;
    m.weights_ = std::move(weights);
    return m;
}

EncoderModel EncoderModel::precomputed(
    uint32_t dim, std::vector<std::pair<std::string, std::vector<double>>> entries) {
    EncoderModel m;
    m.backend_ = Backend::Precomputed;
    m.dim_ = dim;
    for (auto& [text, vec] : entries) {
        if (vec.size() != dim)
            throw DataError("precomputed vector for '" + text + "' has dimension " +
                            std::to_string(vec.size()) + ", expected " + std::to_string(dim));
        if (m.store_index_.count(text))
            throw DataError("duplicate precomputed entry for '" + text + "'");
        m.store_index_.emplace(text, m.store_.size());
        m.store_.emplace_back(std::move(text), std::move(vec));
    }
    return m;
}

std::vector<double> EncoderModel::encode(std::string_view text) const {
    if (backend_ == Backend::Precomputed) {
        const auto it = store_index_.find(std::string(text));
        if (it == store_index_.end())
            throw DataError("no precomputed vector for statement: " + std::string(text));
        return store_[it->second].second;
    }
    return detail::encode_features(weights_, dim_, featurize(text, spec_));
}

namespace detail {

std::vector<double> encode_features(const std::vector<double>& weights, uint32_t dim,
                                    const SparseVec& f) {
    std::vector<double> out(dim, 0.0);
    for (const auto& [row, value] : f.entries) {
        const double* w = weights.data() + static_cast<size_t>(row) * dim;
        for (uint32_t j = 0; j < dim; ++j) out[j] += value * w[j];
    }
    return out;
}

namespace {

struct TripletTerms {
    std::vector<double> sa, sp, sn;
    double dap = 0.0, dan = 0.0, arg = 0.0;
};

TripletTerms eval_terms(const std::vector<double>& weights, uint32_t dim,
                        const std::vector<SparseVec>& feats, const FeatTriplet& t, double margin) {
    TripletTerms terms;
    terms.sa = encode_features(weights, dim, feats[t.a]);
    terms.sp = encode_features(weights, dim, feats[t.p]);
    terms.sn = encode_features(weights, dim, feats[t.n]);
    terms.dap = euclidean_distance(terms.sa, terms.sp);
    terms.dan = euclidean_distance(terms.sa, terms.sn);
    terms.arg = terms.dap - terms.dan + margin;
    return terms;
}

// Accumulates f (x) g into rows of a dense gradient.
void add_outer(std::vector<double>& grad, uint32_t dim, const SparseVec& f,
               const std::vector<double>& g, double scale) {
    for (const auto& [row, value] : f.entries) {
        double* out = grad.data() + static_cast<size_t>(row) * dim;
        const double s = value * scale;
        for (uint32_t j = 0; j < dim; ++j) out[j] += s * g[j];
    }
}

// Per-embedding subgradients for one active-hinge triplet. Zero-distance
// pairs contribute a zero direction.
void embedding_grads(const TripletTerms& t, uint32_t dim, std::vector<double>& ga,
                     std::vector<double>& gp, std::vector<double>& gn) {
    ga.assign(dim, 0.0);
    gp.assign(dim, 0.0);
    gn.assign(dim, 0.0);
    if (t.dap > 0.0) {
        for (uint32_t j = 0; j < dim; ++j) {
            const double u = (t.sa[j] - t.sp[j]) / t.dap;
            ga[j] += u;
            gp[j] -= u;
        }
    }
    if (t.dan > 0.0) {
        for (uint32_t j = 0; j < dim; ++j) {
            const double v = (t.sa[j] - t.sn[j]) / t.dan;
            ga[j] -= v;
            gn[j] += v;
        }
    }
}

} // namespace

double mean_loss(const std::vector<double>& weights, uint32_t dim,
                 const std::vector<SparseVec>& feats, std::span<const FeatTriplet> triplets,
                 double margin) {
    if (triplets.empty()) return 0.0;
    double total = 0.0;
    for (const auto& t : triplets) {
        const auto terms = eval_terms(weights, dim, feats, t, margin);
        total += std::max(terms.arg, 0.0);
    }
    return total / static_cast<double>(triplets.size());
}

void mean_loss_gradient(const std::vector<double>& weights, uint32_t dim,
                        const std::vector<SparseVec>& feats, std::span<const FeatTriplet> triplets,
                        double margin, std::vector<double>& grad_out) {
    grad_out.assign(weights.size(), 0.0);
    if (triplets.empty()) return;
    const double scale = 1.0 / static_cast<double>(triplets.size());
    std::vector<double> ga, gp, gn;
    for (const auto& t : triplets) {
        const auto terms = eval_terms(weights, dim, feats, t, margin);
        if (terms.arg <= 0.0) continue; // hinge inactive (kink takes subgradient 0)
        embedding_grads(terms, dim, ga, gp, gn);
        add_outer(grad_out, dim, feats[t.a], ga, scale);
        add_outer(grad_out, dim, feats[t.p], gp, scale);
        add_outer(grad_out, dim, feats[t.n], gn, scale);
    }
}

double sgd_batch(std::vector<double>& weights, uint32_t dim, const std::vector<SparseVec>& feats,
                 std::span<const FeatTriplet> batch, double margin, double learning_rate) {
    if (batch.empty()) return 0.0;
    const double scale = 1.0 / static_cast<double>(batch.size());
    // Row-sparse gradient: rows touched by the batch only. Accumulation runs
    // in triplet order per row, so the result is bit-deterministic.
    std::unordered_map<uint32_t, std::vector<double>> grad_rows;
    auto row_of = [&](uint32_t row) -> std::vector<double>& {
        auto [it, inserted] = grad_rows.try_emplace(row);
        if (inserted) it->second.assign(dim, 0.0);
        return it->second;
    };

    double total = 0.0;
    std::vector<double> ga, gp, gn;
    for (const auto& t : batch) {
        const auto terms = eval_terms(weights, dim, feats, t, margin);
        total += std::max(terms.arg, 0.0);
        if (terms.arg <= 0.0) continue;
        embedding_grads(terms, dim, ga, gp, gn);
        for (const auto& [row, value] : feats[t.a].entries) {
            auto& g = row_of(row);
            for (uint32_t j = 0; j < dim; ++j) g[j] += value * ga[j];
        }
        for (const auto& [row, value] : feats[t.p].entries) {
            auto& g = row_of(row);
            for (uint32_t j = 0; j < dim; ++j) g[j] += value * gp[j];
        }
        for (const auto& [row, value] : feats[t.n].entries) {
            auto& g = row_of(row);
            for (uint32_t j = 0; j < dim; ++j) g[j] += value * gn[j];
        }
    }

    for (const auto& [row, g] : grad_rows) {
        double* w = weights.data() + static_cast<size_t>(row) * dim;
        for (uint32_t j = 0; j < dim; ++j) w[j] -= learning_rate * scale * g[j];
    }
    return total * scale;
}

} // namespace detail

EncoderModel train_encoder(const std::vector<Triplet>& triplets, const Corpus& corpus,
                           const TrainConfig& config, LossTrace* trace) {
    config.validate();
    if (triplets.empty()) throw DataError("cannot train on an empty triplet list");

    const FeatureSpec spec = config.feature_spec();

    // Featurize each distinct statement once.
    std::vector<SparseVec> feats;
    std::unordered_map<uint64_t, uint32_t> feat_index;
    auto feat_of = [&](BeliefKey k) {
        const auto it = feat_index.find(k.packed());
        if (it != feat_index.end()) return it->second;
        const uint32_t idx = static_cast<uint32_t>(feats.size());
        feats.push_back(featurize(corpus.statement(k), spec));
        feat_index.emplace(k.packed(), idx);
        return idx;
    };
    std::vector<detail::FeatTriplet> ft;
    ft.reserve(triplets.size());
    for (const auto& t : triplets)
        ft.push_back({feat_of(t.anchor), feat_of(t.positive), feat_of(t.negative)});

    // Small gaussian init; zero weights would pin every statement at the
    // origin where the norm subgradient vanishes.
    std::vector<double> weights(spec.buckets * static_cast<size_t>(config.dim));
    Rng init_rng = substream(config.seed, "init");
    for (double& w : weights) w = 0.1 * init_rng.gaussian();

    LossTrace local;
    local.initial = detail::mean_loss(weights, config.dim, feats, ft, config.margin);

    std::vector<uint32_t> order(ft.size());
    for (uint32_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<detail::FeatTriplet> batch;
    for (uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng epoch_rng = substream(config.seed, "epoch", epoch);
        epoch_rng.shuffle(order);
        double epoch_total = 0.0;
        for (size_t start = 0; start < order.size(); start += config.batch_size) {
            const size_t end = std::min(order.size(), start + config.batch_size);
            batch.clear();
            for (size_t i = start; i < end; ++i) batch.push_back(ft[order[i]]);
            const double batch_loss = detail::sgd_batch(weights, config.dim, feats, batch,
                                                        config.margin, config.learning_rate);
            if (!std::isfinite(batch_loss))
                throw DataError("non-finite training loss at epoch " + std::to_string(epoch) +
                                "; learning rate too high?");
            epoch_total += batch_loss * static_cast<double>(batch.size());
        }
        local.per_epoch.push_back(epoch_total / static_cast<double>(ft.size()));
    }

    for (double w : weights)
        if (!std::isfinite(w))
            throw DataError("non-finite weights after training; learning rate too high?");

    local.final_full = detail::mean_loss(weights, config.dim, feats, ft, config.margin);
    if (trace) *trace = local;
    return EncoderModel::trained(spec, config.dim, std::move(weights));
}

// ---- binary IO ----

namespace {

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f64(std::string& out, double v) { put_u64(out, std::bit_cast<uint64_t>(v)); }

class ByteReader {
public:
    ByteReader(std::string data, std::string name) : data_(std::move(data)), name_(std::move(name)) {}

    uint32_t u32() { return static_cast<uint32_t>(bytes(4)); }
    uint64_t u64() { return bytes(8); }
    double f64() { return std::bit_cast<double>(bytes(8)); }
    uint8_t u8() { return static_cast<uint8_t>(bytes(1)); }
    std::string str(size_t n) {
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    void expect_end() const {
        if (pos_ != data_.size()) throw DataError(name_ + ": trailing bytes after model data");
    }
    size_t remaining() const { return data_.size() - pos_; }

private:
    uint64_t bytes(int n) {
        need(static_cast<size_t>(n));
        uint64_t v = 0;
        for (int i = 0; i < n; ++i)
            v |= static_cast<uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += static_cast<size_t>(n);
        return v;
    }
    void need(size_t n) const {
        if (pos_ + n > data_.size()) throw DataError(name_ + ": truncated file");
    }
    std::string data_;
    std::string name_;
    size_t pos_ = 0;
};

std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_file_bytes(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (out.fail()) throw DataError("write failed for " + path.string());
}

constexpr uint32_t kModelVersion = 1;
constexpr uint32_t kVectorsVersion = 1;

} // namespace

void EncoderModel::save(const std::filesystem::path& path) const {
    std::string out;
    out += "BLFM";
    put_u32(out, kModelVersion);
    out.push_back(static_cast<char>(backend_));
    if (backend_ == Backend::Trained) {
        put_u32(out, dim_);
        put_u64(out, spec_.buckets);
        put_u64(out, spec_.hash_seed);
        for (double w : weights_) put_f64(out, w);
    } else {
        put_u32(out, dim_);
        put_u64(out, store_.size());
        for (const auto& [text, vec] : store_) {
            put_u32(out, static_cast<uint32_t>(text.size()));
            out += text;
            for (double v : vec) put_f64(out, v);
        }
    }
    write_file_bytes(path, out);
}

EncoderModel EncoderModel::load(const std::filesystem::path& path) {
    ByteReader r(read_file_bytes(path), path.string());
    if (r.str(4) != "BLFM") throw DataError(path.string() + ": not a model file (bad magic)");
    const uint32_t version = r.u32();
    if (version != kModelVersion)
        throw DataError(path.string() + ": unsupported model version " + std::to_string(version));
    const auto tag = static_cast<Backend>(r.u8());
    if (tag == Backend::Trained) {
        const uint32_t dim = r.u32();
        FeatureSpec spec;
        spec.buckets = r.u64();
        spec.hash_seed = r.u64();
        if (dim == 0 || spec.buckets == 0)
            throw DataError(path.string() + ": invalid model header");
        const size_t n = spec.buckets * static_cast<size_t>(dim);
        if (r.remaining() != n * 8)
            throw DataError(path.string() + ": truncated file");
        std::vector<double> weights(n);
        for (auto& w : weights) w = r.f64();
        r.expect_end();
        return trained(spec, dim, std::move(weights));
    }
    if (tag == Backend::Precomputed) {
        const uint32_t dim = r.u32();
        const uint64_t count = r.u64();
        if (count > r.remaining())
            throw DataError(path.string() + ": truncated file");
        std::vector<std::pair<std::string, std::vector<double>>> entries;
        entries.reserve(count);
        for (uint64_t i = 0; i < count; ++i) {
            const uint32_t len = r.u32();
            std::string text = r.str(len);
            std::vector<double> vec(dim);
            for (auto& v : vec) v = r.f64();
            entries.emplace_back(std::move(text), std::move(vec));
        }
        r.expect_end();
        return precomputed(dim, std::move(entries));
    }
    throw DataError(path.string() + ": unknown backend tag");
}

std::vector<std::pair<std::string, std::vector<double>>> load_vectors(
    const std::filesystem::path& path) {
    std::string bytes = read_file_bytes(path);
    if (bytes.size() >= 4 && bytes.compare(0, 4, "BLFV") == 0) {
        ByteReader r(std::move(bytes), path.string());
        r.str(4);
        const uint32_t version = r.u32();
        if (version != kVectorsVersion)
            throw DataError(path.string() + ": unsupported vector file version " +
                            std::to_string(version));
        const uint32_t dim = r.u32();
        const uint64_t count = r.u64();
        if (count > r.remaining())
            throw DataError(path.string() + ": truncated file");
        std::vector<std::pair<std::string, std::vector<double>>> entries;
        entries.reserve(count);
        for (uint64_t i = 0; i < count; ++i) {
            const uint32_t len = r.u32();
            std::string text = r.str(len);
            std::vector<double> vec(dim);
            for (auto& v : vec) v = r.f64();
            entries.emplace_back(std::move(text), std::move(vec));
        }
        r.expect_end();
        return entries;
    }

    // JSON Lines {"text": ..., "vector": [...]}
    std::vector<std::pair<std::string, std::vector<double>>> entries;
    std::istringstream in(bytes);
    std::string line;
    size_t line_no = 0;
    size_t dim = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.contains("text") || !j["text"].is_string())
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                            ": field 'text': expected string");
        if (!j.contains("vector") || !j["vector"].is_array())
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                            ": field 'vector': expected array");
        std::vector<double> vec;
        for (const auto& v : j["vector"]) {
            if (!v.is_number())
                throw DataError(path.string() + ":" + std::to_string(line_no) +
                                ": field 'vector': expected numbers");
            vec.push_back(v.get<double>());
        }
        if (entries.empty()) {
            dim = vec.size();
            if (dim == 0)
                throw DataError(path.string() + ":" + std::to_string(line_no) + ": empty vector");
        } else if (vec.size() != dim) {
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                            ": vector dimension " + std::to_string(vec.size()) +
                            " differs from first entry's " + std::to_string(dim));
        }
        entries.emplace_back(j["text"].get<std::string>(), std::move(vec));
    }
    return entries;
}

void save_vectors_blfv(const std::vector<std::pair<std::string, std::vector<double>>>& entries,
                       uint32_t dim, const std::filesystem::path& path) {
    std::string out;
    out += "BLFV";
    put_u32(out, kVectorsVersion);
    put_u32(out, dim);
    put_u64(out, entries.size());
    for (const auto& [text, vec] : entries) {
        if (vec.size() != dim) throw DataError("vector dimension mismatch in save_vectors_blfv");
        put_u32(out, static_cast<uint32_t>(text.size()));
        out += text;
        for (double v : vec) put_f64(out, v);
    }
    write_file_bytes(path, out);
}

} // namespace beliefspace
