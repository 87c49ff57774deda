#include "fairsage/demography.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fairsage/errors.hpp"
#include "fairsage/text.hpp"

namespace fairsage {

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::model: return "model";
        case Provenance::override_removed: return "override-removed";
        case Provenance::override_added: return "override-added";
    }
    return "model";
}

std::size_t GroupAssignment::protected_count() const {
    std::size_t n = 0;
    for (const Entry& e : entries) n += e.is_protected;
    return n;
}

std::vector<PosteriorRow> load_posteriors(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open posterior file " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("posterior file " + path + " is empty");
    const char delim = text::sniff_delimiter(line);
    const auto header = text::split(line, delim);
    const std::vector<std::string> wanted = {"user_id",        "message_id",
                                             kDialectColumns[0], kDialectColumns[1],
                                             kDialectColumns[2], kDialectColumns[3]};
    if (header != wanted)
        throw DataError("posterior file " + path +
                        " must start with the header user_id, message_id, p_white, p_black, "
                        "p_hispanic, p_asian");

    std::vector<PosteriorRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        const auto fields = text::split(line, delim);
        if (fields.size() != 6)
            throw DataError("posterior file " + path + " line " + std::to_string(lineno) +
                            " has " + std::to_string(fields.size()) + " fields, expected 6");
        PosteriorRow row;
        if (!text::parse_u64(fields[0], row.user) || !text::parse_u64(fields[1], row.message))
            throw DataError("posterior file " + path + " line " + std::to_string(lineno) +
                            " has a malformed id");
        double sum = 0.0;
        for (std::size_t k = 0; k < 4; ++k) {
            double v = 0.0;
            if (!text::parse_f64(fields[2 + k], v))
                throw DataError("posterior file " + path + " line " + std::to_string(lineno) +
                                " has a malformed probability");
            if (!(v >= 0.0) || !(v <= 1.0))
                throw DataError("posterior file " + path + " line " + std::to_string(lineno) +
                                " holds a probability outside [0, 1]");
            row.p[k] = v;
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw DataError("posterior file " + path + " line " + std::to_string(lineno) +
                            " does not sum to 1 (got " + std::to_string(sum) + ")");
        rows.push_back(row);
    }
    if (rows.empty()) throw DataError("posterior file " + path + " has no rows");
    return rows;
}

std::vector<UserPosterior> average_posteriors(const std::vector<PosteriorRow>& rows,
                                              const std::vector<std::uint64_t>& required) {
    if (rows.empty()) throw DataError("no posterior rows to average");

    std::map<std::uint64_t, UserPosterior> acc;
    for (const PosteriorRow& row : rows) {
        UserPosterior& u = acc[row.user];
        u.user = row.user;
        for (std::size_t k = 0; k < 4; ++k) u.mean[k] += row.p[k];
        u.messages += 1;
    }

    std::vector<std::uint64_t> missing;
    for (std::uint64_t id : required)
        if (!acc.count(id)) missing.push_back(id);
    if (!missing.empty()) {
        std::sort(missing.begin(), missing.end());
        missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
        std::string msg = "users without posterior rows:";
        const std::size_t show = std::min<std::size_t>(missing.size(), 16);
        for (std::size_t i = 0; i < show; ++i) msg += " " + std::to_string(missing[i]);
        if (missing.size() > show)
            msg += " (+" + std::to_string(missing.size() - show) + " more)";
        throw DataError(msg);
    }

    std::vector<UserPosterior> out;
    out.reserve(acc.size());
    for (auto& [id, u] : acc) {
        for (std::size_t k = 0; k < 4; ++k) u.mean[k] /= static_cast<double>(u.messages);
        out.push_back(u);
    }
    return out;
}

Overrides load_overrides(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open override file " + path);

    Overrides out;
    std::vector<std::uint64_t>* section = nullptr;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (t.front() == '[') {
            if (t == "[removals]")
                section = &out.removals;
            else if (t == "[additions]")
                section = &out.additions;
            else
                throw DataError("override file " + path + " line " + std::to_string(lineno) +
                                ": unknown section " + std::string(t));
            continue;
        }
        if (section == nullptr)
            throw DataError("override file " + path + " line " + std::to_string(lineno) +
                            ": id appears before any section header");
        std::uint64_t id = 0;
        if (!text::parse_u64(t, id))
            throw DataError("override file " + path + " line " + std::to_string(lineno) +
                            ": malformed user id");
        section->push_back(id);
    }
    return out;
}

GroupAssignment label_group(const std::vector<UserPosterior>& means, std::size_t category,
                            double threshold, const Overrides& overrides) {
    if (category >= 4) throw UsageError("dialect category index must be in [0, 4)");
    if (!(threshold > 0.0) || !(threshold < 1.0))
        throw UsageError("group threshold must lie strictly inside (0, 1)");
    if (means.empty()) throw DataError("no user posteriors to label");

    GroupAssignment out;
    out.entries.reserve(means.size());
    for (const UserPosterior& u : means) {
        GroupAssignment::Entry e;
        e.user = u.user;
        e.is_protected = u.mean[category] > threshold;
        e.provenance = Provenance::model;
        out.entries.push_back(e);
    }
    std::sort(out.entries.begin(), out.entries.end(),
              [](const auto& a, const auto& b) { return a.user < b.user; });
    for (std::size_t i = 1; i < out.entries.size(); ++i)
        if (out.entries[i].user == out.entries[i - 1].user)
            throw DataError("duplicate user " + std::to_string(out.entries[i].user) +
                            " in posterior means");

    auto locate = [&](std::uint64_t id, const char* what) -> GroupAssignment::Entry& {
        auto it = std::lower_bound(out.entries.begin(), out.entries.end(), id,
                                   [](const auto& e, std::uint64_t v) { return e.user < v; });
        if (it == out.entries.end() || it->user != id)
            throw DataError(std::string(what) + " override names unknown user " +
                            std::to_string(id));
        return *it;
    };
    // Removals apply before additions, so a user named in both ends protected.
    for (std::uint64_t id : overrides.removals) {
        GroupAssignment::Entry& e = locate(id, "removal");
        e.is_protected = false;
        e.provenance = Provenance::override_removed;
    }
    for (std::uint64_t id : overrides.additions) {
        GroupAssignment::Entry& e = locate(id, "addition");
        e.is_protected = true;
        e.provenance = Provenance::override_added;
    }
    return out;
}

void write_group_file(const std::string& path, const GroupAssignment& assignment,
                      const std::string& group_name) {
    if (group_name.empty()) throw UsageError("group name must not be empty");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write group file " + path);
    out << "user_id\tgroup\tprovenance\n";
    for (const GroupAssignment::Entry& e : assignment.entries)
        out << e.user << '\t' << (e.is_protected ? group_name : "") << '\t'
            << provenance_name(e.provenance) << '\n';
    if (!out) throw DataError("failed while writing group file " + path);
}

std::vector<std::pair<std::uint64_t, std::string>> read_group_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open group file " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("group file " + path + " is empty");
    const char delim = text::sniff_delimiter(line);
    const auto header = text::split(line, delim);
    if (header.size() < 2 || header[0] != "user_id" || header[1] != "group")
        throw DataError("group file " + path + " must start with user_id and group columns");

    std::vector<std::pair<std::uint64_t, std::string>> out;
    std::set<std::uint64_t> seen;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        const auto fields = text::split(line, delim);
        if (fields.size() < 2)
            throw DataError("group file " + path + " line " + std::to_string(lineno) +
                            " lacks a group column");
        std::uint64_t id = 0;
        if (!text::parse_u64(fields[0], id))
            throw DataError("group file " + path + " line " + std::to_string(lineno) +
                            " has a malformed user id");
        if (!seen.insert(id).second)
            throw DataError("group file " + path + " repeats user " + std::to_string(id));
        out.emplace_back(id, fields[1]);
    }
    return out;
}

}  // namespace fairsage
