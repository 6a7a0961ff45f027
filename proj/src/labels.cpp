#include "supgcl/labels.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "supgcl/error.hpp"

namespace supgcl {

namespace {

struct Rows {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;
};

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find('\t', start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

Rows read_rows(const std::filesystem::path& path, std::size_t min_columns) {
    std::ifstream in(path);
    if (!in) throw MissingInputError("label file not found: " + path.string());
    Rows r;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_tabs(line);
        if (r.header.empty()) {
            if (fields.size() < min_columns) {
                throw ParseError(path.string() + ":" + std::to_string(n) + ": expected at least " +
                                 std::to_string(min_columns) + " columns");
            }
            r.header = std::move(fields);
            continue;
        }
        if (fields.size() != r.header.size()) {
            throw ParseError(path.string() + ":" + std::to_string(n) + ": expected " +
                             std::to_string(r.header.size()) + " fields, found " + std::to_string(fields.size()));
        }
        r.rows.push_back(std::move(fields));
        r.line_numbers.push_back(n);
    }
    if (r.header.empty()) throw ParseError(path.string() + ": empty file");
    return r;
}

template <class T>
T parse_number(const std::string& s, const std::string& where) {
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(where + ": '" + s + "' is not a number");
    return v;
}

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

} // namespace

BitTable read_bit_table(const std::filesystem::path& path) {
    Rows r = read_rows(path, 2);
    BitTable t;
    t.columns.assign(r.header.begin() + 1, r.header.end());
    for (std::size_t k = 0; k < r.rows.size(); ++k) {
        const std::string where = path.string() + ":" + std::to_string(r.line_numbers[k]);
        t.ids.push_back(r.rows[k][0]);
        std::vector<int> bits;
        for (std::size_t c = 1; c < r.rows[k].size(); ++c) {
            const int b = parse_number<int>(r.rows[k][c], where);
            if (b != 0 && b != 1) throw ParseError(where + ": label bits must be 0 or 1");
            bits.push_back(b);
        }
        t.bits.push_back(std::move(bits));
    }
    return t;
}

void write_bit_table(const BitTable& t, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "id";
    for (const auto& c : t.columns) out << '\t' << c;
    out << '\n';
    for (std::size_t i = 0; i < t.ids.size(); ++i) {
        out << t.ids[i];
        for (int b : t.bits[i]) out << '\t' << b;
        out << '\n';
    }
}

ClassTable read_class_table(const std::filesystem::path& path) {
    Rows r = read_rows(path, 2);
    if (r.header.size() != 2) throw ParseError(path.string() + ":1: expected columns id, class");
    ClassTable t;
    for (std::size_t k = 0; k < r.rows.size(); ++k) {
        t.ids.push_back(r.rows[k][0]);
        t.classes.push_back(parse_number<std::size_t>(r.rows[k][1], path.string() + ":" + std::to_string(r.line_numbers[k])));
    }
    return t;
}

void write_class_table(const ClassTable& t, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "id\tclass\n";
    for (std::size_t i = 0; i < t.ids.size(); ++i) out << t.ids[i] << '\t' << t.classes[i] << '\n';
}

SurvivalTable read_survival_table(const std::filesystem::path& path) {
    Rows r = read_rows(path, 3);
    if (r.header.size() != 3) throw ParseError(path.string() + ":1: expected columns id, time, event");
    SurvivalTable t;
    for (std::size_t k = 0; k < r.rows.size(); ++k) {
        const std::string where = path.string() + ":" + std::to_string(r.line_numbers[k]);
        SurvivalRecord rec{parse_number<double>(r.rows[k][1], where), parse_number<int>(r.rows[k][2], where)};
        if (!(rec.time > 0.0) || !std::isfinite(rec.time)) throw ParseError(where + ": survival time must be positive");
        if (rec.event != 0 && rec.event != 1) throw ParseError(where + ": event must be 0 or 1");
        t.ids.push_back(r.rows[k][0]);
        t.records.push_back(rec);
    }
    return t;
}

void write_survival_table(const SurvivalTable& t, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "id\ttime\tevent\n";
    for (std::size_t i = 0; i < t.ids.size(); ++i)
        out << t.ids[i] << '\t' << fmt(t.records[i].time) << '\t' << t.records[i].event << '\n';
}

} // namespace supgcl
