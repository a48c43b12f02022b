#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "beliefspace/errors.hpp"

namespace beliefspace {

enum class Polarity : uint8_t { Pro = 0, Con = 1 };

inline Polarity opposite(Polarity p) { return p == Polarity::Pro ? Polarity::Con : Polarity::Pro; }

std::string_view to_string(Polarity p);
Polarity polarity_from_string(std::string_view s); // "PRO" or "CON"

// Identity of one stance on one debate. `debate` is a dense index into the
// owning Corpus. Exactly two keys per debate; opposite() is an involution.
struct BeliefKey {
    uint32_t debate = 0;
    Polarity pol = Polarity::Pro;

    friend bool operator==(const BeliefKey&, const BeliefKey&) = default;
    friend auto operator<=>(const BeliefKey&, const BeliefKey&) = default;

    uint64_t packed() const { return (static_cast<uint64_t>(debate) << 1) | static_cast<uint64_t>(pol); }
    static BeliefKey unpack(uint64_t v) {
        return BeliefKey{static_cast<uint32_t>(v >> 1), static_cast<Polarity>(v & 1)};
    }
};

inline BeliefKey opposite(BeliefKey k) { return BeliefKey{k.debate, opposite(k.pol)}; }

struct Debate {
    std::string id;
    std::string title;
    std::optional<std::string> category;
};

struct VoteRecord {
    uint32_t user = 0;   // dense index into Corpus::users()
    uint32_t debate = 0; // dense index into Corpus::debates()
    Polarity pol = Polarity::Pro;
};

struct IngestReport {
    size_t debates_in_file = 0;
    size_t debates_excluded = 0;
    size_t debates_kept = 0;
    size_t vote_rows = 0;
    size_t ties_dropped = 0;
    size_t votes_on_excluded = 0;
    size_t duplicates_replaced = 0;
    size_t votes_kept = 0;
    size_t unique_users = 0;
};

// Fixed statement templates. PRO/CON prefix plus the title verbatim.
inline constexpr std::string_view kProTemplate = "I agree with the following: ";
inline constexpr std::string_view kConTemplate = "I disagree with the following: ";

// Renders the belief statement for (title, polarity). Empty or
// whitespace-only titles are a data error.
std::string render_statement(std::string_view title, Polarity pol);

// Immutable after construction; all reads are thread-safe.
class Corpus {
public:
    Corpus(std::vector<Debate> debates,
           std::vector<std::pair<std::string, std::pair<std::string, Polarity>>> raw_votes,
           IngestReport partial_report);

    const std::vector<Debate>& debates() const { return debates_; }
    const std::vector<std::string>& users() const { return users_; }
    // Sorted by (user, debate); one record per (user, debate).
    const std::vector<VoteRecord>& votes() const { return votes_; }
    std::span<const VoteRecord> votes_of(uint32_t user) const;

    std::optional<uint32_t> find_debate(std::string_view id) const;
    std::optional<uint32_t> find_user(std::string_view id) const;

    const IngestReport& report() const { return report_; }

    std::string statement(BeliefKey k) const;
    const std::string& title(uint32_t debate) const { return debates_.at(debate).title; }

    // Canonical serialization: debates.jsonl + votes.csv. Loading the result
    // reproduces this corpus byte-for-byte on the next save.
    void save(const std::filesystem::path& dir) const;

private:
    std::vector<Debate> debates_;
    std::vector<std::string> users_;
    std::vector<VoteRecord> votes_;
    std::vector<size_t> user_offsets_; // users_.size()+1 entries into votes_
    std::unordered_map<std::string, uint32_t> debate_index_;
    std::unordered_map<std::string, uint32_t> user_index_;
    IngestReport report_;
};

// Ingest per the file schemas: debates as JSON Lines, votes as CSV with
// header user_id,debate_id,polarity (TIE rows dropped), optional exclusion
// list of debate_ids ('#' comments allowed).
Corpus load_corpus(const std::filesystem::path& debates_path,
                   const std::filesystem::path& votes_path,
                   const std::optional<std::filesystem::path>& exclusion_path = std::nullopt);

enum class Stance : uint8_t { Pro, Con, Other };
Stance stance_from_string(std::string_view s);
std::string_view to_string(Stance s);

struct UserProfile {
    std::string user_id;
    std::optional<std::string> party;
    std::optional<std::string> religion;
    std::map<std::string, Stance> big_issues;
};

struct ProfileSet {
    std::vector<UserProfile> profiles; // file order
    std::unordered_map<std::string, size_t> index;

    const UserProfile* find(std::string_view user_id) const;
    // Issue names observed across the file, sorted.
    std::vector<std::string> issue_names() const;
};

ProfileSet load_profiles(const std::filesystem::path& path);
void save_profiles(const ProfileSet& profiles, const std::filesystem::path& path);

struct FoldSplit {
    uint32_t fold_index = 0;
    std::vector<uint32_t> train_debates; // sorted dense indices
    std::vector<uint32_t> test_debates;  // sorted dense indices
    std::vector<uint32_t> evaluable_users; // >=1 train vote and >=1 test vote
    std::vector<uint8_t> test_mask; // per-debate: 1 if in test

    bool is_test(uint32_t debate) const { return test_mask[debate] != 0; }
};

// Debate-level K-fold split: shuffle debates with the seeded substream, chunk
// into k blocks of size n/k +- 1. Deterministic for a given seed.
std::vector<FoldSplit> make_folds(const Corpus& corpus, uint32_t k, uint64_t seed);

struct SyntheticLabels {
    uint32_t n_communities = 0;
    std::vector<uint32_t> user_community;        // by dense user index
    std::vector<std::vector<Polarity>> planted;  // [community][debate index]
    std::vector<uint8_t> noise_debate;           // [debate index] 1 if in noise subset
};

struct SyntheticCorpus {
    Corpus corpus;
    ProfileSet profiles;
    SyntheticLabels labels;
};

// Planted-community vote generator used as a test fixture. Every user votes
// on every debate; vote = community planted polarity, flipped with
// probability (1 - alignment), and flipped again with probability eta on the
// noise-subset debates. Profiles carry community-derived party/religion and
// big_issues for the first min(10, n_debates) debates.
SyntheticCorpus generate_synthetic(uint32_t n_users, uint32_t n_debates, uint32_t n_communities,
                                   double alignment, double eta, uint64_t seed);

void save_synthetic_labels(const SyntheticLabels& labels, const Corpus& corpus,
                           const std::filesystem::path& path);

} // namespace beliefspace
