#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fairsage/demography.hpp"
#include "fairsage/errors.hpp"
#include "fairsage/rng.hpp"
#include "test_util.hpp"

using namespace fairsage;

namespace {

const std::string kHeader = "user_id\tmessage_id\tp_white\tp_black\tp_hispanic\tp_asian\n";

std::vector<UserPosterior> flat_means(const std::vector<std::pair<std::uint64_t, double>>& black) {
    std::vector<UserPosterior> out;
    for (auto [user, p] : black) {
        UserPosterior u;
        u.user = user;
        u.mean = {1.0 - p, p, 0.0, 0.0};
        u.messages = 1;
        out.push_back(u);
    }
    return out;
}

}  // namespace

TEST_CASE("posterior files parse and validate") {
    const std::string good = testutil::write_file(
        "posteriors",
        kHeader +
            "10\t1\t0.1\t0.8\t0.05\t0.05\n"
            "10\t2\t0.2\t0.6\t0.1\t0.1\n"
            "11\t7\t0.25\t0.25\t0.25\t0.25\n");
    auto rows = load_posteriors(good);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].user == 10);
    CHECK(rows[0].message == 1);
    CHECK(rows[0].p[1] == 0.8);
    CHECK(rows[2].p == std::array<double, 4>{0.25, 0.25, 0.25, 0.25});

    const std::string comma = testutil::write_file(
        "posteriors",
        "user_id,message_id,p_white,p_black,p_hispanic,p_asian\n5,1,0,1,0,0\n");
    auto crows = load_posteriors(comma);
    REQUIRE(crows.size() == 1);
    CHECK(crows[0].p[1] == 1.0);

    // a sum 5e-7 off stays inside the tolerance
    const std::string near = testutil::write_file(
        "posteriors", kHeader + "1\t1\t0.25\t0.25\t0.25\t0.2500005\n");
    CHECK(load_posteriors(near).size() == 1);

    CHECK_THROWS_AS(
        load_posteriors(testutil::write_file(
            "posteriors", "id\tmsg\tp_white\tp_black\tp_hispanic\tp_asian\n1\t1\t0\t1\t0\t0\n")),
        DataError);
    CHECK_THROWS_WITH_AS(
        load_posteriors(testutil::write_file("posteriors",
                                             kHeader + "1\t1\t0.2\t1.2\t-0.2\t-0.2\n")),
        doctest::Contains("outside [0, 1]"), DataError);
    CHECK_THROWS_WITH_AS(
        load_posteriors(testutil::write_file("posteriors", kHeader + "1\t1\t0.2\t0.2\t0.2\t0.2\n")),
        doctest::Contains("sum"), DataError);
    CHECK_THROWS_AS(
        load_posteriors(testutil::write_file("posteriors", kHeader + "1\t1\t0.5\t0.5\n")),
        DataError);
    CHECK_THROWS_AS(
        load_posteriors(testutil::write_file("posteriors", kHeader + "1\t1\tx\t0.5\t0.25\t0.25\n")),
        DataError);
    CHECK_THROWS_WITH_AS(load_posteriors(testutil::write_file("posteriors", kHeader)),
                         doctest::Contains("no rows"), DataError);
    CHECK_THROWS_AS(load_posteriors("/nonexistent/posteriors.tsv"), DataError);
}

TEST_CASE("per-user averages") {
    std::vector<PosteriorRow> rows = {
        {10, 1, {0.05, 0.9, 0.02, 0.03}},
        {11, 4, {0.4, 0.3, 0.2, 0.1}},
        {10, 2, {0.2, 0.7, 0.05, 0.05}},
    };
    auto means = average_posteriors(rows);
    REQUIRE(means.size() == 2);
    CHECK(means[0].user == 10);
    CHECK(means[0].messages == 2);
    CHECK(means[0].mean[1] == 0.8);  // (0.9 + 0.7) / 2 is exact
    CHECK(means[1].user == 11);
    CHECK(means[1].messages == 1);
    CHECK(means[1].mean == rows[1].p);  // single message passes through

    std::vector<PosteriorRow> three = {
        {7, 1, {0.1, 0.9, 0.0, 0.0}},
        {7, 2, {0.1, 0.9, 0.0, 0.0}},
        {7, 3, {0.4, 0.6, 0.0, 0.0}},
    };
    auto m3 = average_posteriors(three);
    REQUIRE(m3.size() == 1);
    CHECK(m3[0].mean[1] == doctest::Approx(0.8).epsilon(1e-15));

    CHECK_THROWS_AS(average_posteriors({}), DataError);
    CHECK_THROWS_WITH_AS(average_posteriors(rows, {10, 9, 11, 42}),
                         doctest::Contains("9 42"), DataError);
    CHECK_NOTHROW(average_posteriors(rows, {10, 11}));
}

TEST_CASE("averaged vectors still sum to one") {
    RngStream rng(701, 0);
    std::vector<PosteriorRow> rows;
    for (int i = 0; i < 500; ++i) {
        PosteriorRow r;
        r.user = rng.uniform_int(40);
        r.message = static_cast<std::uint64_t>(i);
        double used = 0.0;
        for (std::size_t k = 0; k < 3; ++k) {
            r.p[k] = std::floor(rng.uniform() * (1.0 - used) * 1000.0) / 1000.0;
            used += r.p[k];
        }
        r.p[3] = 1.0 - r.p[0] - r.p[1] - r.p[2];
        rows.push_back(r);
    }
    for (const auto& u : average_posteriors(rows)) {
        const double sum = u.mean[0] + u.mean[1] + u.mean[2] + u.mean[3];
        CHECK(std::abs(sum - 1.0) <= 1e-6);
    }
}

TEST_CASE("override files parse sections") {
    const std::string path = testutil::write_file("overrides",
                                                  "# manually verified\n"
                                                  "[removals]\n"
                                                  "31\n"
                                                  "7\n"
                                                  "\n"
                                                  "[additions]\n"
                                                  "99\n");
    Overrides o = load_overrides(path);
    CHECK(o.removals == std::vector<std::uint64_t>{31, 7});
    CHECK(o.additions == std::vector<std::uint64_t>{99});

    Overrides empty = load_overrides(testutil::write_file("overrides", "# nothing\n"));
    CHECK(empty.removals.empty());
    CHECK(empty.additions.empty());

    CHECK_THROWS_WITH_AS(load_overrides(testutil::write_file("overrides", "12\n[removals]\n")),
                         doctest::Contains("before any section"), DataError);
    CHECK_THROWS_WITH_AS(load_overrides(testutil::write_file("overrides", "[banned]\n1\n")),
                         doctest::Contains("unknown section"), DataError);
    CHECK_THROWS_AS(load_overrides(testutil::write_file("overrides", "[removals]\nabc\n")),
                    DataError);
    CHECK_THROWS_AS(load_overrides("/nonexistent/overrides.txt"), DataError);
}

TEST_CASE("threshold rule and override application") {
    auto means = flat_means({{1, 0.85}, {2, 0.8}, {3, 0.1}, {4, 0.95}});
    GroupAssignment a = label_group(means, 1, 0.8, {});
    REQUIRE(a.entries.size() == 4);
    CHECK(a.entries[0].is_protected);       // 0.85 > 0.8
    CHECK_FALSE(a.entries[1].is_protected); // exactly 0.8 stays out
    CHECK_FALSE(a.entries[2].is_protected);
    CHECK(a.entries[3].is_protected);
    CHECK(a.protected_count() == 2);
    for (const auto& e : a.entries) CHECK(e.provenance == Provenance::model);

    Overrides o;
    o.removals = {4};
    o.additions = {3};
    GroupAssignment b = label_group(means, 1, 0.8, o);
    CHECK(b.protected_count() == 2);
    CHECK_FALSE(b.entries[3].is_protected);
    CHECK(b.entries[3].provenance == Provenance::override_removed);
    CHECK(b.entries[2].is_protected);
    CHECK(b.entries[2].provenance == Provenance::override_added);
    CHECK(b.entries[0].provenance == Provenance::model);

    // named in both lists: removal first, addition wins
    Overrides both;
    both.removals = {1};
    both.additions = {1};
    GroupAssignment c = label_group(means, 1, 0.8, both);
    CHECK(c.entries[0].is_protected);
    CHECK(c.entries[0].provenance == Provenance::override_added);

    Overrides unknown;
    unknown.removals = {999};
    CHECK_THROWS_WITH_AS(label_group(means, 1, 0.8, unknown),
                         doctest::Contains("unknown user 999"), DataError);

    CHECK_THROWS_AS(label_group(means, 4, 0.8, {}), UsageError);
    CHECK_THROWS_AS(label_group(means, 1, 0.0, {}), UsageError);
    CHECK_THROWS_AS(label_group(means, 1, 1.0, {}), UsageError);
    CHECK_THROWS_AS(label_group({}, 1, 0.8, {}), DataError);

    auto dup = flat_means({{5, 0.9}, {5, 0.1}});
    CHECK_THROWS_WITH_AS(label_group(dup, 1, 0.8, {}), doctest::Contains("duplicate"), DataError);
}

TEST_CASE("model labels minus removals leave the expected cohort") {
    std::vector<std::pair<std::uint64_t, double>> spec;
    for (std::uint64_t u = 1; u <= 168; ++u) spec.push_back({u, 0.9});
    for (std::uint64_t u = 169; u <= 200; ++u) spec.push_back({u, 0.1});
    Overrides o;
    for (std::uint64_t u = 1; u <= 32; ++u) o.removals.push_back(u);

    GroupAssignment a = label_group(flat_means(spec), 1, 0.8, o);
    CHECK(a.protected_count() == 136);
    CHECK(a.entries[0].provenance == Provenance::override_removed);
    CHECK_FALSE(a.entries[0].is_protected);
    CHECK(a.entries[32].provenance == Provenance::model);
    CHECK(a.entries[32].is_protected);
}

TEST_CASE("raising the threshold never adds a model-protected user") {
    RngStream rng(702, 0);
    std::vector<std::pair<std::uint64_t, double>> spec;
    for (std::uint64_t u = 0; u < 60; ++u) spec.push_back({u, rng.uniform()});
    auto means = flat_means(spec);
    GroupAssignment lo = label_group(means, 1, 0.3, {});
    GroupAssignment hi = label_group(means, 1, 0.6, {});
    for (std::size_t i = 0; i < means.size(); ++i)
        if (hi.entries[i].is_protected) CHECK(lo.entries[i].is_protected);
}

TEST_CASE("overrides are idempotent and order independent") {
    auto means = flat_means({{1, 0.9}, {2, 0.85}, {3, 0.2}, {4, 0.4}, {5, 0.99}});
    Overrides a;
    a.removals = {5, 2, 5};
    a.additions = {3, 4};
    Overrides b;
    b.removals = {2, 5};
    b.additions = {4, 3, 3};
    GroupAssignment ga = label_group(means, 1, 0.8, a);
    GroupAssignment gb = label_group(means, 1, 0.8, b);
    CHECK(ga.entries == gb.entries);
}

TEST_CASE("group files round-trip") {
    auto means = flat_means({{12, 0.9}, {30, 0.1}, {44, 0.95}});
    Overrides o;
    o.removals = {44};
    GroupAssignment a = label_group(means, 1, 0.8, o);
    const std::string path = testutil::write_file("groups", "");
    write_group_file(path, a, "aa");

    auto back = read_group_file(path);
    REQUIRE(back.size() == 3);
    CHECK(back[0] == std::pair<std::uint64_t, std::string>{12, "aa"});
    CHECK(back[1] == std::pair<std::uint64_t, std::string>{30, ""});
    CHECK(back[2] == std::pair<std::uint64_t, std::string>{44, ""});

    CHECK_THROWS_AS(write_group_file(path, a, ""), UsageError);
    CHECK_THROWS_AS(
        read_group_file(testutil::write_file("groups", "id\tgroup\n1\taa\n")), DataError);
    CHECK_THROWS_WITH_AS(
        read_group_file(testutil::write_file("groups", "user_id\tgroup\n1\taa\n1\t\n")),
        doctest::Contains("repeats"), DataError);
    CHECK_THROWS_AS(read_group_file("/nonexistent/groups.tsv"), DataError);
}
