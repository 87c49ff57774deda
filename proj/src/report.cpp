#include "fairsage/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fairsage/errors.hpp"
#include "fairsage/text.hpp"

namespace fairsage {

namespace {

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string g6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void check_name(const std::string& name) {
    if (name.empty()) throw UsageError("report entry needs a name");
    for (char c : name)
        if (c == '=' || c == '\n' || c == '\t' || c == ' ')
            throw UsageError("report entry name '" + name + "' holds a reserved character");
    if (name.size() > 8 && name.substr(name.size() - 8) == ".defined")
        throw UsageError("report entry name must not end with .defined");
}

}  // namespace

void Report::add(std::string name, double value) {
    check_name(name);
    if (!std::isfinite(value)) throw NumericError("report value for " + name + " is not finite");
    entries.push_back({std::move(name), value, true});
}

void Report::add_undefined(std::string name) {
    check_name(name);
    entries.push_back({std::move(name), 0.0, false});
}

ReportFormat parse_report_format(const std::string& s) {
    if (s == "text") return ReportFormat::text;
    if (s == "keyvalue") return ReportFormat::keyvalue;
    throw UsageError("unknown report format '" + s + "' (expected text or keyvalue)");
}

std::string emit_report(const Report& r, ReportFormat format) {
    if (r.title.empty()) throw UsageError("report needs a title");
    for (const ReportEntry& e : r.entries) {
        check_name(e.name);
        if (e.defined && !std::isfinite(e.value))
            throw NumericError("report value for " + e.name + " is not finite");
    }

    std::ostringstream out;
    if (format == ReportFormat::keyvalue) {
        out << "title=" << r.title << '\n';
        for (const ReportEntry& e : r.entries) {
            out << e.name << '=' << (e.defined ? g17(e.value) : std::string("NA")) << '\n';
            if (!e.defined) out << e.name << ".defined=0\n";
        }
        return out.str();
    }

    out << "# " << r.title << '\n';
    std::string names, values;
    for (const ReportEntry& e : r.entries) {
        std::string v = e.defined ? g6(e.value) : std::string("NA");
        std::size_t w = std::max(e.name.size(), v.size());
        names += e.name + std::string(w - e.name.size() + 2, ' ');
        values += v + std::string(w - v.size() + 2, ' ');
    }
    while (!names.empty() && names.back() == ' ') names.pop_back();
    while (!values.empty() && values.back() == ' ') values.pop_back();
    out << names << '\n' << values << '\n';
    return out.str();
}

Report parse_report(const std::string& keyvalue_text) {
    Report r;
    std::istringstream in(keyvalue_text);
    std::string line;
    bool saw_title = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view t = text::trim(line);
        if (t.empty() || t.front() == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string_view::npos)
            throw DataError("report line " + std::to_string(lineno) + " lacks '='");
        std::string key(text::trim(t.substr(0, eq)));
        std::string value(text::trim(t.substr(eq + 1)));
        if (!saw_title) {
            if (key != "title")
                throw DataError("report must open with a title= line, got '" + key + "'");
            r.title = value;
            saw_title = true;
            continue;
        }
        if (key.size() > 8 && key.substr(key.size() - 8) == ".defined") {
            const std::string base = key.substr(0, key.size() - 8);
            if (r.entries.empty() || r.entries.back().name != base)
                throw DataError("flag line '" + key + "' does not follow its entry");
            if (value != "0" && value != "1")
                throw DataError("flag line '" + key + "' must be 0 or 1");
            const bool defined = value == "1";
            if (defined != r.entries.back().defined)
                throw DataError("flag line '" + key + "' contradicts the entry value");
            continue;
        }
        check_name(key);
        if (value == "NA") {
            r.entries.push_back({key, 0.0, false});
            continue;
        }
        double v = 0.0;
        if (!text::parse_f64(value, v) || !std::isfinite(v))
            throw DataError("report entry " + key + " holds a malformed value '" + value + "'");
        r.entries.push_back({key, v, true});
    }
    if (!saw_title) throw DataError("report text holds no title= line");
    return r;
}

void write_report(const std::string& path, const Report& r, ReportFormat format) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write report file " + path);
    out << emit_report(r, format);
    if (!out) throw DataError("failed while writing report file " + path);
}

Report read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open report file " + path);
    std::ostringstream body;
    body << in.rdbuf();
    return parse_report(body.str());
}

}  // namespace fairsage
