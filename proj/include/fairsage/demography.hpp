#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace fairsage {

// One scored message: posterior over the four census dialect categories.
struct PosteriorRow {
    std::uint64_t user = 0;
    std::uint64_t message = 0;
    std::array<double, 4> p{};
};

inline constexpr std::array<const char*, 4> kDialectColumns = {"p_white", "p_black",
                                                               "p_hispanic", "p_asian"};

struct UserPosterior {
    std::uint64_t user = 0;
    std::array<double, 4> mean{};
    std::size_t messages = 0;
};

enum class Provenance { model, override_removed, override_added };

const char* provenance_name(Provenance p);

struct GroupAssignment {
    struct Entry {
        std::uint64_t user = 0;
        bool is_protected = false;
        Provenance provenance = Provenance::model;

        bool operator==(const Entry&) const = default;
    };
    std::vector<Entry> entries;  // ascending user id

    std::size_t protected_count() const;
};

struct Overrides {
    std::vector<std::uint64_t> removals;
    std::vector<std::uint64_t> additions;
};

// Delimited text with header user_id, message_id, p_white, p_black,
// p_hispanic, p_asian. Every probability vector must sum to 1 within 1e-6.
std::vector<PosteriorRow> load_posteriors(const std::string& path);

// Unweighted per-user mean over that user's rows, ascending user id. Users in
// `required` that have no row are reported together in one error.
std::vector<UserPosterior> average_posteriors(const std::vector<PosteriorRow>& rows,
                                              const std::vector<std::uint64_t>& required = {});

// Text with "[removals]" and "[additions]" section headers, one user id per
// line; '#' starts a comment.
Overrides load_overrides(const std::string& path);

// Protected iff mean[category] > threshold, then removals, then additions.
// Every override id must name a user present in `means`.
GroupAssignment label_group(const std::vector<UserPosterior>& means, std::size_t category,
                            double threshold, const Overrides& overrides);

// user_id, group, provenance rows; protected users carry `group_name`, the
// rest an empty tag.
void write_group_file(const std::string& path, const GroupAssignment& assignment,
                      const std::string& group_name);

// user id -> group tag. Accepts files from write_group_file; columns past
// the second are ignored.
std::vector<std::pair<std::uint64_t, std::string>> read_group_file(const std::string& path);

}  // namespace fairsage
