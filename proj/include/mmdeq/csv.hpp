#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mmdeq/types.hpp"

namespace mmdeq {

// Raw CSV contents: header row plus string cells (RFC 4180, quoted fields
// supported).
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

// Builds a Dataset from parsed CSV cells. Throws SchemaMismatch if a named
// column is absent, NonBinaryTreatment if A is not 0/1, NonFiniteValue for
// cells that do not parse to a finite number.
Dataset validate_dataset(const CsvTable& raw, const Schema& schema);

// Writes the dataset back out with enough digits for a bit-exact round trip.
void write_csv(std::ostream& out, const Dataset& data);

}  // namespace mmdeq
