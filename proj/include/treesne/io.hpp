#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>

#include "treesne/affinity.hpp"
#include "treesne/common.hpp"

namespace treesne {

class FileNotFound : public DataError {
public:
    explicit FileNotFound(const std::string& path)
        : DataError("file not found: " + path), path(path) {}
    std::string path;
};

/// Bad token; row is the 1-based line number in the file, col the 1-based field.
class ParseError : public DataError {
public:
    ParseError(std::size_t row, std::size_t col, std::string token, const std::string& why = "not a number")
        : DataError("parse error at row " + std::to_string(row) + ", column " + std::to_string(col) +
                    ": '" + token + "' " + why),
          row(row),
          col(col),
          token(std::move(token)) {}
    std::size_t row;
    std::size_t col;
    std::string token;
};

class DimensionMismatch : public DataError {
public:
    DimensionMismatch(std::size_t row, std::size_t expected, std::size_t got)
        : DataError("row " + std::to_string(row) + " has " + std::to_string(got) + " fields, expected " +
                    std::to_string(expected)),
          row(row),
          expected(expected),
          got(got) {}
    std::size_t row;
    std::size_t expected;
    std::size_t got;
};

/// Delimiter-separated numeric text. Fields split on commas when the first
/// data line has one, on whitespace otherwise. '#' starts a comment. The
/// first row is a header when any of its non-label fields is not a number.
/// `label_column` is a header name or a 1-based column index.
Dataset<double> parse_dataset(std::istream& in, const std::optional<std::string>& label_column = {});
Dataset<double> ingest(const std::string& path, const std::optional<std::string>& label_column = {});

/// 17 significant digits.
std::string format_number(double v);

}  // namespace treesne
