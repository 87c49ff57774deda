#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "fairsage/errors.hpp"
#include "fairsage/report.hpp"
#include "test_util.hpp"

using namespace fairsage;

namespace {

Report sample_report() {
    Report r;
    r.title = "evaluation";
    r.add("accuracy", 0.96199999999999997);
    r.add("precision", 1.0 / 3.0);
    r.add("recall", 0.75);
    r.add("f1", 0.57499999999999996);
    r.add("auc", 0.90800000000000003);
    return r;
}

}  // namespace

TEST_CASE("keyvalue reports round-trip exactly") {
    Report r = sample_report();
    r.add_undefined("fpr_gap");
    r.add("n", 4982.0);

    const std::string kv = emit_report(r, ReportFormat::keyvalue);
    CHECK(parse_report(kv) == r);

    CHECK(kv.find("title=evaluation\n") == 0);
    CHECK(kv.find("fpr_gap=NA\n") != std::string::npos);
    CHECK(kv.find("fpr_gap.defined=0\n") != std::string::npos);
    CHECK(kv.find("precision=0.3333333333333333") != std::string::npos);
}

TEST_CASE("text reports lay metrics out as one row") {
    const std::string text = emit_report(sample_report(), ReportFormat::text);
    // title, names row, values row
    CHECK(text == "# evaluation\n"
                  "accuracy  precision  recall  f1     auc\n"
                  "0.962     0.333333   0.75    0.575  0.908\n");
}

TEST_CASE("undefined entries print as NA in text form") {
    Report r;
    r.title = "fairness";
    r.add_undefined("fpr_protected");
    r.add("fpr_rest", 0.075);
    const std::string text = emit_report(r, ReportFormat::text);
    CHECK(text.find("NA") != std::string::npos);
    CHECK(text.find("0.075") != std::string::npos);
}

TEST_CASE("report validation") {
    Report r;
    r.title = "x";
    CHECK_THROWS_AS(r.add("bad name", 1.0), UsageError);
    CHECK_THROWS_AS(r.add("bad=name", 1.0), UsageError);
    CHECK_THROWS_AS(r.add("x.defined", 1.0), UsageError);
    CHECK_THROWS_AS(r.add("nan", std::nan("")), NumericError);
    CHECK_THROWS_AS(r.add("", 1.0), UsageError);

    Report untitled;
    untitled.add("a", 1.0);
    CHECK_THROWS_AS(emit_report(untitled, ReportFormat::text), UsageError);
}

TEST_CASE("keyvalue parsing rejects malformed input") {
    CHECK_THROWS_WITH_AS(parse_report("accuracy=0.5\n"), doctest::Contains("title"), DataError);
    CHECK_THROWS_WITH_AS(parse_report("title=t\naccuracy 0.5\n"), doctest::Contains("'='"),
                         DataError);
    CHECK_THROWS_AS(parse_report("title=t\naccuracy=zebra\n"), DataError);
    CHECK_THROWS_WITH_AS(parse_report("title=t\na=1\nb.defined=0\n"),
                         doctest::Contains("does not follow"), DataError);
    CHECK_THROWS_WITH_AS(parse_report("title=t\na=1\na.defined=0\n"),
                         doctest::Contains("contradicts"), DataError);
    CHECK_THROWS_AS(parse_report(""), DataError);
    // comments and blank lines are fine
    Report ok = parse_report("\n# note\ntitle=t\na=1\n\n");
    CHECK(ok.title == "t");
    REQUIRE(ok.entries.size() == 1);
    CHECK(ok.entries[0].value == 1.0);
}

TEST_CASE("report files write and read back") {
    Report r = sample_report();
    const std::string path = testutil::write_file("report", "");
    write_report(path, r, ReportFormat::keyvalue);
    CHECK(read_report(path) == r);
    CHECK_THROWS_AS(write_report("/nonexistent/dir/report.kv", r, ReportFormat::keyvalue),
                    DataError);
    CHECK_THROWS_AS(read_report("/nonexistent/report.kv"), DataError);
}

TEST_CASE("report format names parse") {
    CHECK(parse_report_format("text") == ReportFormat::text);
    CHECK(parse_report_format("keyvalue") == ReportFormat::keyvalue);
    CHECK_THROWS_AS(parse_report_format("json"), UsageError);
}
