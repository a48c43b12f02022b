#include "beliefspace/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "beliefspace/csv.hpp"
#include "beliefspace/rng.hpp"

namespace beliefspace {

using nlohmann::json;

std::string_view to_string(Polarity p) { return p == Polarity::Pro ? "PRO" : "CON"; }

Polarity polarity_from_string(std::string_view s) {
    if (s == "PRO") return Polarity::Pro;
    if (s == "CON") return Polarity::Con;
    throw DataError("invalid polarity '" + std::string(s) + "' (expected PRO or CON)");
}

Stance stance_from_string(std::string_view s) {
    if (s == "PRO") return Stance::Pro;
    if (s == "CON") return Stance::Con;
    if (s == "OTHER") return Stance::Other;
    throw DataError("invalid stance '" + std::string(s) + "' (expected PRO, CON or OTHER)");
}

std::string_view to_string(Stance s) {
    switch (s) {
    case Stance::Pro: return "PRO";
    case Stance::Con: return "CON";
    default: return "OTHER";
    }
}

namespace {

bool is_blank(std::string_view s) {
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

} // namespace

std::string render_statement(std::string_view title, Polarity pol) {
    if (title.empty() || is_blank(title))
        throw DataError("cannot render statement for empty title");
    std::string out;
    const std::string_view prefix = pol == Polarity::Pro ? kProTemplate : kConTemplate;
    out.reserve(prefix.size() + title.size());
    out += prefix;
    out += title;
    return out;
}

Corpus::Corpus(std::vector<Debate> debates,
               std::vector<std::pair<std::string, std::pair<std::string, Polarity>>> raw_votes,
               IngestReport partial_report)
    : debates_(std::move(debates)), report_(partial_report) {
    debate_index_.reserve(debates_.size());
    for (uint32_t i = 0; i < debates_.size(); ++i) {
        auto [it, inserted] = debate_index_.emplace(debates_[i].id, i);
        if (!inserted) throw DataError("duplicate debate_id '" + debates_[i].id + "'");
        if (debates_[i].title.empty() || is_blank(debates_[i].title))
            throw DataError("debate '" + debates_[i].id + "' has an empty title");
    }

    // Dense user ids by first appearance; last vote wins per (user, debate).
    std::unordered_map<uint64_t, Polarity> final_vote;
    for (const auto& [user_id, vote] : raw_votes) {
        auto uit = user_index_.find(user_id);
        uint32_t u;
        if (uit == user_index_.end()) {
            u = static_cast<uint32_t>(users_.size());
            user_index_.emplace(user_id, u);
            users_.push_back(user_id);
        } else {
            u = uit->second;
        }
        const auto dit = debate_index_.find(vote.first);
        if (dit == debate_index_.end())
            throw DataError("vote references unknown debate_id '" + vote.first + "'");
        const uint64_t key = (static_cast<uint64_t>(u) << 32) | dit->second;
        auto [it, inserted] = final_vote.insert_or_assign(key, vote.second);
        if (!inserted) ++report_.duplicates_replaced;
    }

    votes_.reserve(final_vote.size());
    for (const auto& [key, pol] : final_vote)
        votes_.push_back(VoteRecord{static_cast<uint32_t>(key >> 32),
                                    static_cast<uint32_t>(key & 0xffffffffu), pol});
    std::sort(votes_.begin(), votes_.end(), [](const VoteRecord& a, const VoteRecord& b) {
        return std::tie(a.user, a.debate) < std::tie(b.user, b.debate);
    });

    user_offsets_.assign(users_.size() + 1, 0);
    for (const auto& v : votes_) ++user_offsets_[v.user + 1];
    for (size_t i = 1; i < user_offsets_.size(); ++i) user_offsets_[i] += user_offsets_[i - 1];

    report_.debates_kept = debates_.size();
    report_.votes_kept = votes_.size();
    report_.unique_users = users_.size();
}

std::span<const VoteRecord> Corpus::votes_of(uint32_t user) const {
    if (user >= users_.size()) throw DataError("unknown user index");
    return {votes_.data() + user_offsets_[user], user_offsets_[user + 1] - user_offsets_[user]};
}

std::optional<uint32_t> Corpus::find_debate(std::string_view id) const {
    const auto it = debate_index_.find(std::string(id));
    if (it == debate_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<uint32_t> Corpus::find_user(std::string_view id) const {
    const auto it = user_index_.find(std::string(id));
    if (it == user_index_.end()) return std::nullopt;
    return it->second;
}

std::string Corpus::statement(BeliefKey k) const {
    return render_statement(debates_.at(k.debate).title, k.pol);
}

void Corpus::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "debates.jsonl", std::ios::binary);
        if (!out) throw DataError("cannot write " + (dir / "debates.jsonl").string());
        for (const auto& d : debates_) {
            json j;
            j["debate_id"] = d.id;
            j["title"] = d.title;
            j["category"] = d.category ? json(*d.category) : json(nullptr);
            out << j.dump() << '\n';
        }
    }
    {
        CsvWriter out(dir / "votes.csv");
        out.raw_line("user_id,debate_id,polarity");
        for (const auto& v : votes_)
            out.row({users_[v.user], debates_[v.debate].id, std::string(to_string(v.pol))});
        out.close();
    }
}

namespace {

[[noreturn]] void field_error(const std::string& file, size_t line, const std::string& field,
                              const std::string& what) {
    throw DataError(file + ":" + std::to_string(line) + ": field '" + field + "': " + what);
}

std::optional<std::string> optional_string_field(const json& j, const std::string& file,
                                                 size_t line, const char* field) {
    if (!j.contains(field) || j[field].is_null()) return std::nullopt;
    if (!j[field].is_string()) field_error(file, line, field, "expected string or null");
    return j[field].get<std::string>();
}

std::string required_string_field(const json& j, const std::string& file, size_t line,
                                  const char* field) {
    if (!j.contains(field)) field_error(file, line, field, "missing");
    if (!j[field].is_string()) field_error(file, line, field, "expected string");
    return j[field].get<std::string>();
}

} // namespace

Corpus load_corpus(const std::filesystem::path& debates_path,
                   const std::filesystem::path& votes_path,
                   const std::optional<std::filesystem::path>& exclusion_path) {
    const std::string debates_file = debates_path.string();
    std::ifstream din(debates_path);
    if (!din) throw DataError("cannot open " + debates_file);

    std::set<std::string> excluded;
    if (exclusion_path) {
        std::ifstream ein(*exclusion_path);
        if (!ein) throw DataError("cannot open " + exclusion_path->string());
        std::string line;
        while (std::getline(ein, line)) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            excluded.insert(line);
        }
    }

    IngestReport report;
    std::vector<Debate> debates;
    std::set<std::string> all_debate_ids; // pre-exclusion, for vote validation
    {
        std::string line;
        size_t line_no = 0;
        while (std::getline(din, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || is_blank(line)) continue;
            ++report.debates_in_file;
            json j;
            try {
                j = json::parse(line);
            } catch (const json::parse_error& e) {
                throw DataError(debates_file + ":" + std::to_string(line_no) + ": " + e.what());
            }
            if (!j.is_object())
                throw DataError(debates_file + ":" + std::to_string(line_no) +
                                ": expected a JSON object");
            Debate d;
            d.id = required_string_field(j, debates_file, line_no, "debate_id");
            d.title = required_string_field(j, debates_file, line_no, "title");
            if (d.title.empty() || is_blank(d.title))
                field_error(debates_file, line_no, "title", "empty after trimming");
            d.category = optional_string_field(j, debates_file, line_no, "category");
            if (!all_debate_ids.insert(d.id).second)
                field_error(debates_file, line_no, "debate_id", "duplicate '" + d.id + "'");
            if (excluded.count(d.id)) {
                ++report.debates_excluded;
                continue;
            }
            debates.push_back(std::move(d));
        }
    }

    std::vector<std::pair<std::string, std::pair<std::string, Polarity>>> raw_votes;
    std::vector<std::string> unknown_refs;
    {
        CsvReader reader(votes_path);
        const std::string votes_file = reader.filename();
        std::vector<std::string> fields;
        size_t line_no = 0;
        if (!reader.next(fields, line_no))
            throw DataError(votes_file + ": empty file (expected header)");
        if (fields != std::vector<std::string>{"user_id", "debate_id", "polarity"})
            throw DataError(votes_file + ":1: expected header user_id,debate_id,polarity");
        while (reader.next(fields, line_no)) {
            if (fields.size() == 1 && fields[0].empty()) continue; // trailing blank line
            if (fields.size() != 3)
                throw DataError(votes_file + ":" + std::to_string(line_no) +
                                ": expected 3 fields, got " + std::to_string(fields.size()));
            ++report.vote_rows;
            const std::string& user_id = fields[0];
            const std::string& debate_id = fields[1];
            const std::string& pol_str = fields[2];
            if (user_id.empty()) field_error(votes_file, line_no, "user_id", "empty");
            if (debate_id.empty()) field_error(votes_file, line_no, "debate_id", "empty");
            if (pol_str == "TIE") {
                ++report.ties_dropped;
                continue;
            }
            Polarity pol;
            try {
                pol = polarity_from_string(pol_str);
            } catch (const DataError&) {
                field_error(votes_file, line_no, "polarity",
                            "invalid value '" + pol_str + "' (expected PRO, CON or TIE)");
            }
            if (!all_debate_ids.count(debate_id)) {
                unknown_refs.push_back(debate_id + " (line " + std::to_string(line_no) + ")");
                continue;
            }
            if (excluded.count(debate_id)) {
                ++report.votes_on_excluded;
                continue;
            }
            raw_votes.emplace_back(user_id, std::make_pair(debate_id, pol));
        }
        if (!unknown_refs.empty()) {
            std::ostringstream msg;
            msg << votes_file << ": " << unknown_refs.size()
                << " vote(s) reference unknown debate_id:";
            const size_t shown = std::min<size_t>(unknown_refs.size(), 10);
            for (size_t i = 0; i < shown; ++i) msg << ' ' << unknown_refs[i];
            if (unknown_refs.size() > shown) msg << " ...";
            throw DataError(msg.str());
        }
    }

    return Corpus(std::move(debates), std::move(raw_votes), report);
}

const UserProfile* ProfileSet::find(std::string_view user_id) const {
    const auto it = index.find(std::string(user_id));
    if (it == index.end()) return nullptr;
    return &profiles[it->second];
}

std::vector<std::string> ProfileSet::issue_names() const {
    std::set<std::string> names;
    for (const auto& p : profiles)
        for (const auto& [issue, stance] : p.big_issues) names.insert(issue);
    return {names.begin(), names.end()};
}

ProfileSet load_profiles(const std::filesystem::path& path) {
    const std::string file = path.string();
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + file);
    ProfileSet set;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || is_blank(line)) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw DataError(file + ":" + std::to_string(line_no) + ": " + e.what());
        }
        UserProfile p;
        p.user_id = required_string_field(j, file, line_no, "user_id");
        p.party = optional_string_field(j, file, line_no, "party");
        p.religion = optional_string_field(j, file, line_no, "religion");
        if (j.contains("big_issues") && !j["big_issues"].is_null()) {
            if (!j["big_issues"].is_object())
                field_error(file, line_no, "big_issues", "expected object");
            for (const auto& [issue, value] : j["big_issues"].items()) {
                if (!value.is_string())
                    field_error(file, line_no, "big_issues." + issue, "expected string");
                try {
                    p.big_issues[issue] = stance_from_string(value.get<std::string>());
                } catch (const DataError&) {
                    field_error(file, line_no, "big_issues." + issue,
                                "invalid stance '" + value.get<std::string>() + "'");
                }
            }
        }
        if (set.index.count(p.user_id))
            field_error(file, line_no, "user_id", "duplicate '" + p.user_id + "'");
        set.index.emplace(p.user_id, set.profiles.size());
        set.profiles.push_back(std::move(p));
    }
    return set;
}

void save_profiles(const ProfileSet& profiles, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& p : profiles.profiles) {
        json j;
        j["user_id"] = p.user_id;
        j["party"] = p.party ? json(*p.party) : json(nullptr);
        j["religion"] = p.religion ? json(*p.religion) : json(nullptr);
        json issues = json::object();
        for (const auto& [issue, stance] : p.big_issues) issues[issue] = std::string(to_string(stance));
        j["big_issues"] = issues;
        out << j.dump() << '\n';
    }
}

std::vector<FoldSplit> make_folds(const Corpus& corpus, uint32_t k, uint64_t seed) {
    const size_t n = corpus.debates().size();
    if (k < 2) throw DataError("fold count must be at least 2");
    if (n == 0) throw DataError("cannot split an empty corpus");
    if (k > n)
        throw DataError("fold count " + std::to_string(k) + " exceeds debate count " +
                        std::to_string(n));

    std::vector<uint32_t> order(n);
    for (uint32_t i = 0; i < n; ++i) order[i] = i;
    Rng rng = substream(seed, "folds");
    rng.shuffle(order);

    std::vector<FoldSplit> folds(k);
    const size_t base = n / k;
    const size_t rem = n % k;
    size_t pos = 0;
    for (uint32_t f = 0; f < k; ++f) {
        const size_t size = base + (f < rem ? 1 : 0);
        FoldSplit& fold = folds[f];
        fold.fold_index = f;
        fold.test_mask.assign(n, 0);
        for (size_t i = 0; i < size; ++i) {
            fold.test_debates.push_back(order[pos + i]);
            fold.test_mask[order[pos + i]] = 1;
        }
        pos += size;
        std::sort(fold.test_debates.begin(), fold.test_debates.end());
        fold.train_debates.reserve(n - size);
        for (uint32_t d = 0; d < n; ++d)
            if (!fold.test_mask[d]) fold.train_debates.push_back(d);

        for (uint32_t u = 0; u < corpus.users().size(); ++u) {
            bool in_train = false;
            bool in_test = false;
            for (const auto& v : corpus.votes_of(u)) {
                (fold.test_mask[v.debate] ? in_test : in_train) = true;
                if (in_train && in_test) break;
            }
            if (in_train && in_test) fold.evaluable_users.push_back(u);
        }
    }
    return folds;
}

SyntheticCorpus generate_synthetic(uint32_t n_users, uint32_t n_debates, uint32_t n_communities,
                                   double alignment, double eta, uint64_t seed) {
    if (!(alignment >= 0.5 && alignment <= 1.0))
        throw DataError("alignment must be in [0.5, 1]");
    if (!(eta >= 0.0 && eta < 0.5)) throw DataError("eta must be in [0, 0.5)");
    if (n_users == 0 || n_debates == 0 || n_communities == 0)
        throw DataError("n_users, n_debates and n_communities must be positive");
    if (n_communities > n_users) throw DataError("more communities than users");

    // Category cycle gives the prediction/dissonance breakdowns something to
    // group by.
    static const char* kCategories[] = {"alpha", "beta", "gamma", "delta", "epsilon"};

    std::vector<Debate> debates;
    debates.reserve(n_debates);
    for (uint32_t d = 0; d < n_debates; ++d) {
        Debate deb;
        deb.id = "synth_d" + std::to_string(d);
        deb.title = "Topic tk" + std::to_string(d) + " deserves public support";
        deb.category = kCategories[d % 5];
        debates.push_back(std::move(deb));
    }

    SyntheticLabels labels;
    labels.n_communities = n_communities;
    labels.user_community.resize(n_users);
    for (uint32_t u = 0; u < n_users; ++u) labels.user_community[u] = u % n_communities;

    Rng planted_rng = substream(seed, "planted");
    labels.planted.assign(n_communities, std::vector<Polarity>(n_debates, Polarity::Pro));
    for (uint32_t c = 0; c < n_communities; ++c)
        for (uint32_t d = 0; d < n_debates; ++d)
            labels.planted[c][d] = planted_rng.uniform_u64(2) ? Polarity::Con : Polarity::Pro;

    Rng noise_rng = substream(seed, "noise_subset");
    labels.noise_debate.resize(n_debates);
    for (uint32_t d = 0; d < n_debates; ++d)
        labels.noise_debate[d] = static_cast<uint8_t>(noise_rng.uniform_u64(2));

    std::vector<std::pair<std::string, std::pair<std::string, Polarity>>> raw_votes;
    raw_votes.reserve(static_cast<size_t>(n_users) * n_debates);
    Rng vote_rng = substream(seed, "votes");
    for (uint32_t u = 0; u < n_users; ++u) {
        const std::string user_id = "synth_u" + std::to_string(u);
        const uint32_t c = labels.user_community[u];
        for (uint32_t d = 0; d < n_debates; ++d) {
            Polarity pol = labels.planted[c][d];
            if (vote_rng.uniform_real() >= alignment) pol = opposite(pol);
            if (labels.noise_debate[d] && vote_rng.uniform_real() < eta) pol = opposite(pol);
            raw_votes.emplace_back(user_id, std::make_pair(debates[d].id, pol));
        }
    }

    IngestReport report;
    report.debates_in_file = n_debates;
    report.vote_rows = raw_votes.size();
    Corpus corpus(std::move(debates), std::move(raw_votes), report);

    ProfileSet profiles;
    const uint32_t n_issues = std::min<uint32_t>(10, n_debates);
    for (uint32_t u = 0; u < n_users; ++u) {
        UserProfile p;
        p.user_id = "synth_u" + std::to_string(u);
        const uint32_t c = labels.user_community[u];
        p.party = "party_" + std::to_string(c);
        p.religion = "religion_" + std::to_string(c);
        for (uint32_t d = 0; d < n_issues; ++d) {
            const Stance s = labels.planted[c][d] == Polarity::Pro ? Stance::Pro : Stance::Con;
            p.big_issues["issue_" + std::to_string(d)] = s;
        }
        profiles.index.emplace(p.user_id, profiles.profiles.size());
        profiles.profiles.push_back(std::move(p));
    }

    return SyntheticCorpus{std::move(corpus), std::move(profiles), std::move(labels)};
}

void save_synthetic_labels(const SyntheticLabels& labels, const Corpus& corpus,
                           const std::filesystem::path& path) {
    json j;
    j["n_communities"] = labels.n_communities;
    json users = json::object();
    for (uint32_t u = 0; u < labels.user_community.size(); ++u)
        users[corpus.users()[u]] = labels.user_community[u];
    j["user_community"] = users;
    json planted = json::array();
    for (uint32_t c = 0; c < labels.planted.size(); ++c) {
        json row = json::object();
        for (uint32_t d = 0; d < labels.planted[c].size(); ++d)
            row[corpus.debates()[d].id] = std::string(to_string(labels.planted[c][d]));
        planted.push_back(row);
    }
    j["planted"] = planted;
    json noise = json::array();
    for (uint32_t d = 0; d < labels.noise_debate.size(); ++d)
        if (labels.noise_debate[d]) noise.push_back(corpus.debates()[d].id);
    j["noise_debates"] = noise;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

} // namespace beliefspace
