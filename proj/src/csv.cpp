#include "sievebias/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace sievebias {

std::string format_double(double v) {
    char buffer[40];
    std::snprintf(buffer, sizeof(buffer), "%.17g", v);
    return buffer;
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_matrix_csv: cannot open " + path.string());
    out << "rows,cols\n" << m.rows() << "," << m.cols() << "\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ",";
            out << format_double(m(i, j));
        }
        out << "\n";
    }
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream stream(line);
    while (std::getline(stream, cell, ',')) cells.push_back(cell);
    return cells;
}

}  // namespace

Matrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_matrix_csv: cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("rows,cols", 0) != 0)
        throw std::runtime_error("read_matrix_csv: missing rows,cols header in " +
                                 path.string());
    if (!std::getline(in, line))
        throw std::runtime_error("read_matrix_csv: missing dimension line in " + path.string());
    const auto dims = split_line(line);
    if (dims.size() != 2)
        throw std::runtime_error("read_matrix_csv: malformed dimension line in " +
                                 path.string());
    const Eigen::Index rows = std::stoll(dims[0]);
    const Eigen::Index cols = std::stoll(dims[1]);
    if (rows < 0 || cols < 0)
        throw std::runtime_error("read_matrix_csv: negative dimensions in " + path.string());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (!std::getline(in, line))
            throw std::runtime_error("read_matrix_csv: truncated file " + path.string());
        const auto cells = split_line(line);
        if (static_cast<Eigen::Index>(cells.size()) != cols)
            throw std::runtime_error("read_matrix_csv: wrong column count in " + path.string());
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = std::stod(cells[j]);
    }
    if (!m.allFinite())
        throw std::runtime_error("read_matrix_csv: non-finite entries in " + path.string());
    return m;
}

void write_vector_csv(const std::filesystem::path& path, const Vector& v) {
    write_matrix_csv(path, Matrix(v));
}

Vector read_vector_csv(const std::filesystem::path& path) {
    const Matrix m = read_matrix_csv(path);
    if (m.cols() != 1)
        throw std::runtime_error("read_vector_csv: expected a single column in " +
                                 path.string());
    return Vector(m.col(0));
}

struct CsvWriter::Impl {
    std::ofstream out;
};

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : impl_(new Impl), columns_(header.size()) {
    impl_->out.open(path);
    if (!impl_->out) {
        delete impl_;
        throw std::runtime_error("CsvWriter: cannot open " + path.string());
    }
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) impl_->out << ",";
        impl_->out << header[i];
    }
    impl_->out << "\n";
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::write_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_)
        throw std::runtime_error("CsvWriter: row width does not match header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) impl_->out << ",";
        impl_->out << cells[i];
    }
    impl_->out << "\n";
}

}  // namespace sievebias
