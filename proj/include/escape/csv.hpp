#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "escape/core.hpp"
#include "escape/deterministic.hpp"

namespace escape {

// Shortest round-trip decimal form; "inf", "-inf", "nan" for non-finite values.
std::string fmt(double x);
std::string fmt(long long x);

class CsvWriter {
 public:
  // Throws std::runtime_error when the file cannot be opened.
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  void close();
  ~CsvWriter();

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t width_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // Index of a column; throws naming the column when it is missing.
  std::size_t col(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

void write_trajectory_csv(const std::string& path, const std::vector<double>& t, const std::vector<SystemState>& s);
void write_stage_times_csv(const std::string& path, const StageDetection& det);

// Creates the directory (and parents) if needed; throws on failure.
void ensure_dir(const std::string& dir);

}  // namespace escape
