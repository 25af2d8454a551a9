#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stefan/solver.hpp"

namespace stefan {

// Bad user input: message names the offending file or field.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest decimal that parses back to the same double.
std::string format_double(double v);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

// t,lambda,alive_fraction with a header row.
void write_frontier_csv(std::ostream& out, const FrontierPath& frontier);
std::string frontier_csv(const FrontierPath& frontier);
// sample_size is not stored in the CSV and must come from the run config.
FrontierPath read_frontier_csv(const std::filesystem::path& path, std::size_t sample_size);

// All numbers in a CSV, row by row; a non-numeric first row is a header.
std::vector<std::vector<double>> read_csv_rows(const std::filesystem::path& path);
// Every number in the file in order, any mix of commas and newlines.
std::vector<double> read_numbers(const std::filesystem::path& path);

std::uint64_t fnv1a(std::string_view data);
std::string hex64(std::uint64_t v);

}  // namespace stefan
