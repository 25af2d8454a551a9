#include "stefan/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace stefan {

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return {buf, ptr};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

void write_frontier_csv(std::ostream& out, const FrontierPath& fr) {
  out << "t,lambda,alive_fraction\n";
  for (std::size_t k = 0; k < fr.t.size(); ++k) {
    out << format_double(fr.t[k]) << ',' << format_double(fr.lambda[k]) << ','
        << format_double(fr.alive_fraction[k]) << '\n';
  }
}

std::string frontier_csv(const FrontierPath& fr) {
  std::ostringstream ss;
  write_frontier_csv(ss, fr);
  return ss.str();
}

namespace {

bool parse_number(std::string_view tok, double& v) {
  while (!tok.empty() && (tok.front() == ' ' || tok.front() == '\t')) tok.remove_prefix(1);
  while (!tok.empty() && (tok.back() == ' ' || tok.back() == '\t' || tok.back() == '\r')) tok.remove_suffix(1);
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  if (tok.empty()) return false;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  return ec == std::errc() && ptr == tok.data() + tok.size();
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::vector<std::vector<double>> read_csv_rows(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    bool numeric = true;
    for (auto tok : split(line, ',')) {
      double v = 0.0;
      if (!parse_number(tok, v)) {
        numeric = false;
        break;
      }
      row.push_back(v);
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header
      throw InputError("'" + path.string() + "' line " + std::to_string(line_no) + ": not a number");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> read_numbers(const std::filesystem::path& path) {
  std::vector<double> out;
  for (const auto& row : read_csv_rows(path)) out.insert(out.end(), row.begin(), row.end());
  return out;
}

FrontierPath read_frontier_csv(const std::filesystem::path& path, std::size_t sample_size) {
  const std::string text = read_file(path);
  if (text.rfind("t,lambda,alive_fraction", 0) != 0) {
    throw InputError("'" + path.string() + "': expected header t,lambda,alive_fraction");
  }
  FrontierPath fr;
  fr.sample_size = sample_size;
  for (const auto& row : read_csv_rows(path)) {
    if (row.size() != 3) throw InputError("'" + path.string() + "': rows need three columns");
    fr.t.push_back(row[0]);
    fr.lambda.push_back(row[1]);
    fr.alive_fraction.push_back(row[2]);
  }
  if (fr.t.empty()) throw InputError("'" + path.string() + "': no rows");
  return fr;
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
  return s;
}

}  // namespace stefan
