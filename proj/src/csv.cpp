#include "mmdeq/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace mmdeq {

namespace {

// One RFC-4180 record; handles quoted fields and embedded newlines.
bool read_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string cell;
    bool in_quotes = false;
    bool saw_any = false;
    int c;
    while ((c = in.get()) != EOF) {
        saw_any = true;
        char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') {
                    cell.push_back('"');
                    in.get();
                } else {
                    in_quotes = false;
                }
            } else {
                cell.push_back(ch);
            }
        } else if (ch == '"') {
            in_quotes = true;
        } else if (ch == ',') {
            fields.push_back(cell);
            cell.clear();
        } else if (ch == '\r') {
            if (in.peek() == '\n') in.get();
            fields.push_back(cell);
            return true;
        } else if (ch == '\n') {
            fields.push_back(cell);
            return true;
        } else {
            cell.push_back(ch);
        }
    }
    if (!saw_any) return false;
    fields.push_back(cell);
    return true;
}

double parse_finite(const std::string& cell) {
    errno = 0;
    char* end = nullptr;
    double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || (end && *end != '\0') || errno == ERANGE || !std::isfinite(v)) {
        throw validation_error("NonFiniteValue", "cell '" + cell + "' is not a finite number");
    }
    return v;
}

int find_column(const std::vector<std::string>& header, const std::string& name) {
    for (size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return static_cast<int>(i);
    }
    throw validation_error("SchemaMismatch", "column '" + name + "' not found in CSV header");
}

std::string quote_if_needed(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += "\"\"";
        else out.push_back(ch);
    }
    out += "\"";
    return out;
}

}  // namespace

CsvTable read_csv(std::istream& in) {
    CsvTable t;
    if (!read_record(in, t.header)) {
        throw validation_error("SchemaMismatch", "CSV is empty (header row required)");
    }
    std::vector<std::string> row;
    while (read_record(in, row)) {
        if (row.size() == 1 && row[0].empty()) continue;   // trailing blank line
        if (row.size() != t.header.size()) {
            throw validation_error("SchemaMismatch", "row has wrong number of fields");
        }
        t.rows.push_back(row);
    }
    return t;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw validation_error("SchemaMismatch", "cannot open '" + path + "'");
    return read_csv(in);
}

Dataset validate_dataset(const CsvTable& raw, const Schema& schema) {
    if (schema.w_cols.empty() || schema.y_cols.empty()) {
        throw validation_error("SchemaMismatch", "schema needs at least one W and one Y column");
    }
    std::vector<int> w_idx, y_idx;
    for (const auto& c : schema.w_cols) w_idx.push_back(find_column(raw.header, c));
    for (const auto& c : schema.y_cols) y_idx.push_back(find_column(raw.header, c));
    int a_idx = schema.a_col ? find_column(raw.header, *schema.a_col) : -1;

    std::vector<Observation> obs;
    obs.reserve(raw.rows.size());
    for (const auto& row : raw.rows) {
        Observation o;
        o.w.resize(static_cast<Eigen::Index>(w_idx.size()));
        o.y.resize(static_cast<Eigen::Index>(y_idx.size()));
        for (size_t j = 0; j < w_idx.size(); ++j) {
            o.w[static_cast<Eigen::Index>(j)] = parse_finite(row[static_cast<size_t>(w_idx[j])]);
        }
        for (size_t j = 0; j < y_idx.size(); ++j) {
            o.y[static_cast<Eigen::Index>(j)] = parse_finite(row[static_cast<size_t>(y_idx[j])]);
        }
        if (a_idx >= 0) {
            double av = parse_finite(row[static_cast<size_t>(a_idx)]);
            if (av != 0.0 && av != 1.0) {
                throw validation_error("NonBinaryTreatment", "A must be exactly 0 or 1");
            }
            o.a = static_cast<int>(av);
        }
        obs.push_back(std::move(o));
    }
    return Dataset(std::move(obs), schema);
}

void write_csv(std::ostream& out, const Dataset& data) {
    const Schema& sc = data.schema();
    bool first = true;
    auto emit = [&](const std::string& name) {
        if (!first) out << ',';
        out << quote_if_needed(name);
        first = false;
    };
    for (const auto& c : sc.w_cols) emit(c);
    if (sc.a_col) emit(*sc.a_col);
    for (const auto& c : sc.y_cols) emit(c);
    out << '\n';

    out.precision(std::numeric_limits<double>::max_digits10);
    for (const auto& o : data.observations()) {
        bool f = true;
        auto num = [&](double v) {
            if (!f) out << ',';
            out << v;
            f = false;
        };
        for (Eigen::Index j = 0; j < o.w.size(); ++j) num(o.w[j]);
        if (o.a) num(static_cast<double>(*o.a));
        for (Eigen::Index j = 0; j < o.y.size(); ++j) num(o.y[j]);
        out << '\n';
    }
}

}  // namespace mmdeq
