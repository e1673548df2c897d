#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gmsel {

/// Error type for all data/parse failures in the library.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

namespace csv {

/// One parsed CSV record.
using Row = std::vector<std::string>;

/// Splits a single CSV line on commas. No quoting support; fields in our
/// formats never contain commas except hyperparameter JSON, which is
/// written with ';' separators instead.
Row split_line(const std::string& line);

/// Reads all rows of a CSV file. Throws DataError if the file is missing.
std::vector<Row> read_file(const std::string& path);

std::string join(const Row& fields);

/// Serializes a double so that a round-trip through text is bit-exact.
std::string format_double(double v);

}  // namespace csv
}  // namespace gmsel
