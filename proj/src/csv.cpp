#include "escape/csv.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>

namespace escape {

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

std::string fmt(long long x) { return std::to_string(x); }

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : path_(path), out_(path, std::ios::binary | std::ios::trunc), width_(header.size()) {
  if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
  row(header);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw std::logic_error("CsvWriter: row width mismatch in " + path_);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  if (!out_) throw std::runtime_error("write failed: " + path_);
}

void CsvWriter::close() {
  if (out_.is_open()) {
    out_.close();
    if (out_.fail()) throw std::runtime_error("close failed: " + path_);
  }
}

CsvWriter::~CsvWriter() {
  if (out_.is_open()) out_.close();
}

std::size_t CsvTable::col(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::runtime_error("CSV is missing column '" + name + "'");
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable t;
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!l.empty() && l.back() == ',') out.emplace_back();
    return out;
  };
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty CSV");
  t.header = split(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto r = split(line);
    if (r.size() != t.header.size()) throw std::runtime_error(path + ": ragged row");
    t.rows.push_back(std::move(r));
  }
  return t;
}

void write_trajectory_csv(const std::string& path, const std::vector<double>& t, const std::vector<SystemState>& s) {
  CsvWriter w(path, {"t", "v", "vstar", "p"});
  for (std::size_t i = 0; i < t.size(); ++i) w.row({fmt(t[i]), fmt(s[i].v), fmt(s[i].vstar), fmt(s[i].p)});
  w.close();
}

void write_stage_times_csv(const std::string& path, const StageDetection& det) {
  CsvWriter w(path, {"cycle", "T_s", "T_I", "T_II", "T_III", "T_IV"});
  for (const auto& c : det.cycles)
    w.row({fmt((long long)c.cycle), fmt(c.T_s), fmt(c.T_I), fmt(c.T_II), fmt(c.T_III), fmt(c.T_IV)});
  w.close();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw std::runtime_error("cannot create directory " + dir);
}

}  // namespace escape
