#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sievebias/linalg.hpp"

namespace sievebias {

// full-precision, locale-independent formatting; identical bytes per value
std::string format_double(double v);

// Matrix file layout:
//   rows,cols
//   R,C
//   <R lines of C comma-separated entries>
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

void write_vector_csv(const std::filesystem::path& path, const Vector& v);
Vector read_vector_csv(const std::filesystem::path& path);

// header + rows of preformatted cells
class CsvWriter {
  public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
    ~CsvWriter();
    CsvWriter(const CsvWriter&) = delete;
    CsvWriter& operator=(const CsvWriter&) = delete;

    void write_row(const std::vector<std::string>& cells);

    static std::string cell(double v) { return format_double(v); }
    static std::string cell(Eigen::Index v) { return std::to_string(v); }
    static std::string cell(unsigned long v) { return std::to_string(v); }
    static std::string cell(unsigned long long v) { return std::to_string(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(bool v) { return v ? "1" : "0"; }
    static std::string cell(const std::string& v) { return v; }

  private:
    struct Impl;
    Impl* impl_;
    std::size_t columns_;
};

}  // namespace sievebias
