#include "beliefspace/space.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "beliefspace/vecmath.hpp"

namespace beliefspace {

PcaModel fit_pca(const std::vector<std::vector<double>>& vectors, uint32_t q) {
    const size_t n = vectors.size();
    if (n < 2) throw DataError("PCA needs at least 2 vectors");
    const size_t d = vectors.front().size();
    if (q == 0 || q > d)
        throw DataError("PCA component count q=" + std::to_string(q) +
                        " out of range for dimension " + std::to_string(d));
    for (const auto& v : vectors)
        if (v.size() != d) throw DataError("PCA input vectors have mixed dimensions");

    Eigen::MatrixXd x(n, d);
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < d; ++j) x(i, j) = vectors[i][j];
    const Eigen::RowVectorXd mean = x.colwise().mean();
    x.rowwise() -= mean;

    Eigen::BDCSVD<Eigen::MatrixXd> svd(x, Eigen::ComputeThinV);
    const auto& singular = svd.singularValues();
    const auto& v = svd.matrixV(); // d x min(n,d)

    PcaModel model;
    model.mean.assign(mean.data(), mean.data() + d);
    model.components.assign(static_cast<size_t>(q) * d, 0.0);
    model.eigenvalues.assign(q, 0.0);
    const size_t rank_cols = static_cast<size_t>(v.cols());
    if (q > rank_cols)
        throw DataError("PCA asked for q=" + std::to_string(q) + " axes but only " +
                        std::to_string(rank_cols) + " are available (n too small)");
    for (uint32_t c = 0; c < q; ++c) {
        const double s = singular(c);
        model.eigenvalues[c] = s * s / static_cast<double>(n - 1);
        // Sign convention: largest-magnitude entry positive.
        size_t arg = 0;
        double best = 0.0;
        for (size_t j = 0; j < d; ++j) {
            if (std::fabs(v(j, c)) > best) {
                best = std::fabs(v(j, c));
                arg = j;
            }
        }
        const double sign = v(arg, c) < 0.0 ? -1.0 : 1.0;
        for (size_t j = 0; j < d; ++j)
            model.components[static_cast<size_t>(c) * d + j] = sign * v(j, c);
    }
    return model;
}

std::vector<double> project(const PcaModel& pca, std::span<const double> v) {
    const size_t d = pca.mean.size();
    if (v.size() != d)
        throw DataError("projection dimension mismatch: vector has " + std::to_string(v.size()) +
                        ", PCA expects " + std::to_string(d));
    const uint32_t q = pca.q();
    std::vector<double> out(q, 0.0);
    for (uint32_t c = 0; c < q; ++c) {
        const double* comp = pca.components.data() + static_cast<size_t>(c) * d;
        double s = 0.0;
        for (size_t j = 0; j < d; ++j) s += comp[j] * (v[j] - pca.mean[j]);
        out[c] = s;
    }
    return out;
}

namespace {

std::vector<std::string> lower_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    auto is_word = [](unsigned char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    };
    for (char c : text) {
        if (is_word(static_cast<unsigned char>(c))) {
            cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c + 32) : c);
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

bool contains_run(const std::vector<std::string>& haystack, const std::vector<std::string>& run) {
    if (run.empty() || run.size() > haystack.size()) return false;
    for (size_t i = 0; i + run.size() <= haystack.size(); ++i) {
        bool all = true;
        for (size_t j = 0; j < run.size(); ++j) {
            if (haystack[i + j] != run[j]) {
                all = false;
                break;
            }
        }
        if (all) return true;
    }
    return false;
}

} // namespace

std::vector<BeliefKey> select_by_keywords(const Corpus& corpus,
                                          const std::vector<std::string>& keywords) {
    if (keywords.empty()) throw DataError("keyword set is empty");
    std::vector<std::vector<std::string>> needles;
    for (const auto& kw : keywords) {
        auto toks = lower_tokens(kw);
        if (!toks.empty()) needles.push_back(std::move(toks));
    }
    if (needles.empty()) throw DataError("keyword set has no usable tokens");

    std::vector<BeliefKey> out;
    for (uint32_t d = 0; d < corpus.debates().size(); ++d) {
        const auto title_tokens = lower_tokens(corpus.debates()[d].title);
        for (const auto& needle : needles) {
            if (contains_run(title_tokens, needle)) {
                out.push_back(BeliefKey{d, Polarity::Pro});
                out.push_back(BeliefKey{d, Polarity::Con});
                break;
            }
        }
    }
    return out;
}

std::vector<UserEmbedding> user_embeddings(const EncoderModel& model, const Corpus& corpus,
                                           std::span<const uint32_t> users,
                                           const std::vector<uint8_t>* debate_restriction,
                                           UserEmbeddingReport* report) {
    // Encode each distinct belief key once.
    std::unordered_map<uint64_t, std::vector<double>> cache;
    auto vector_of = [&](BeliefKey k) -> const std::vector<double>& {
        auto [it, inserted] = cache.try_emplace(k.packed());
        if (inserted) it->second = model.encode(corpus.statement(k));
        return it->second;
    };

    std::vector<UserEmbedding> out;
    UserEmbeddingReport local;
    for (uint32_t u : users) {
        UserEmbedding e;
        e.user = u;
        e.vec.assign(model.dim(), 0.0);
        for (const auto& v : corpus.votes_of(u)) {
            if (debate_restriction && !(*debate_restriction)[v.debate]) continue;
            const auto& bv = vector_of(BeliefKey{v.debate, v.pol});
            for (size_t j = 0; j < e.vec.size(); ++j) e.vec[j] += bv[j];
            ++e.support;
        }
        if (e.support == 0) {
            local.excluded_users.push_back(u);
            continue;
        }
        for (double& x : e.vec) x /= static_cast<double>(e.support);
        out.push_back(std::move(e));
    }
    if (report) *report = local;
    return out;
}

PolarizationRecord polarization(const std::vector<UserEmbedding>& embeddings, const Corpus& corpus,
                                const ProfileSet& profiles, const std::string& issue) {
    std::vector<std::vector<double>> pro, con;
    for (const auto& e : embeddings) {
        const UserProfile* p = profiles.find(corpus.users()[e.user]);
        if (!p) continue;
        const auto it = p->big_issues.find(issue);
        if (it == p->big_issues.end()) continue;
        if (it->second == Stance::Pro)
            pro.push_back(e.vec);
        else if (it->second == Stance::Con)
            con.push_back(e.vec);
    }
    if (pro.empty() || con.empty())
        throw DataError("issue '" + issue + "' has an empty " +
                        (pro.empty() ? std::string("PRO") : std::string("CON")) + " side");

    const auto cp = mean_vector(pro);
    const auto cc = mean_vector(con);
    PolarizationRecord rec;
    rec.issue = issue;
    rec.euclid_distance = euclidean_distance(cp, cc);
    rec.cosine_distance = cosine_distance(cp, cc);
    rec.n_pro = pro.size();
    rec.n_con = con.size();
    return rec;
}

double pro_ratio_gap(const ProfileSet& profiles, const std::string& issue,
                     const std::string& party_a, const std::string& party_b) {
    auto ratio = [&](const std::string& party) {
        size_t pro = 0, con = 0;
        for (const auto& p : profiles.profiles) {
            if (!p.party || *p.party != party) continue;
            const auto it = p.big_issues.find(issue);
            if (it == p.big_issues.end()) continue;
            if (it->second == Stance::Pro) ++pro;
            else if (it->second == Stance::Con) ++con;
        }
        if (pro + con == 0)
            throw DataError("party '" + party + "' has no PRO/CON respondents on issue '" +
                            issue + "'");
        return static_cast<double>(pro) / static_cast<double>(pro + con);
    };
    return std::fabs(ratio(party_a) - ratio(party_b));
}

double correlate(std::span<const double> x, std::span<const double> y, CorrMethod method) {
    return method == CorrMethod::Pearson ? pearson(x, y) : spearman(x, y);
}

} // namespace beliefspace
