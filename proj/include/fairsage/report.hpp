#pragma once

#include <string>
#include <vector>

namespace fairsage {

// One named metric. Undefined entries print as NA and round-trip with a
// companion `<name>.defined=0` line in keyvalue form.
struct ReportEntry {
    std::string name;
    double value = 0.0;  // 0 whenever !defined
    bool defined = true;

    bool operator==(const ReportEntry&) const = default;
};

struct Report {
    std::string title;
    std::vector<ReportEntry> entries;

    bool operator==(const Report&) const = default;

    void add(std::string name, double value);
    void add_undefined(std::string name);
};

enum class ReportFormat { text, keyvalue };
ReportFormat parse_report_format(const std::string& s);

// text: the title, a column-name row, and one aligned value row. keyvalue:
// title= plus one name=value line per entry, values at full precision.
std::string emit_report(const Report& r, ReportFormat format);

// Inverse of emit_report for the keyvalue format only.
Report parse_report(const std::string& keyvalue_text);

void write_report(const std::string& path, const Report& r, ReportFormat format);
Report read_report(const std::string& path);

}  // namespace fairsage
