#include "dlab/dataset.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dlab {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::invalid_argument("line " + std::to_string(line_no) + ": cannot parse '" + s + "' as a number");
  }
  return v;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double failed");
  return std::string(buf, ptr);
}

void LabeledDataset::validate() const {
  const bool cls = is_classification();
  if (cls && labels.size() != inputs.size()) throw std::invalid_argument("dataset: labels/inputs length mismatch");
  if (!cls && targets.size() != inputs.size()) throw std::invalid_argument("dataset: targets/inputs length mismatch");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != input_dim()) throw std::invalid_argument("dataset: ragged inputs");
    if (!inputs[i].allFinite()) throw std::invalid_argument("dataset: non-finite input");
    if (!cls) {
      if (targets[i].size() != targets.front().size()) throw std::invalid_argument("dataset: ragged targets");
      if (!targets[i].allFinite()) throw std::invalid_argument("dataset: non-finite target");
    }
  }
}

LabeledDataset LabeledDataset::subset(const std::vector<std::size_t>& rows) const {
  LabeledDataset out;
  out.inputs.reserve(rows.size());
  for (std::size_t r : rows) {
    out.inputs.push_back(inputs.at(r));
    if (is_classification()) {
      out.labels.push_back(labels.at(r));
    } else {
      out.targets.push_back(targets.at(r));
    }
  }
  return out;
}

void write_dataset_csv(const LabeledDataset& data, const std::filesystem::path& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  const Eigen::Index d = data.input_dim();
  for (Eigen::Index j = 0; j < d; ++j) out << (j ? "," : "") << "x_" << j;
  if (data.is_classification()) {
    out << ",label\n";
  } else {
    const Eigen::Index l = data.targets.empty() ? 0 : data.targets.front().size();
    for (Eigen::Index j = 0; j < l; ++j) out << ",y_" << j;
    out << '\n';
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) out << (j ? "," : "") << format_double(data.inputs[i][j]);
    if (data.is_classification()) {
      out << ',' << data.labels[i];
    } else {
      for (Eigen::Index j = 0; j < data.targets[i].size(); ++j) out << ',' << format_double(data.targets[i][j]);
    }
    out << '\n';
  }
}

LabeledDataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument(path.string() + ": empty file");
  const auto header = split_csv_line(line);
  std::size_t nx = 0, ny = 0;
  bool label = false;
  for (const auto& h : header) {
    if (h.rfind("x_", 0) == 0) {
      if (ny || label) throw std::invalid_argument("dataset header: x columns must come first");
      ++nx;
    } else if (h.rfind("y_", 0) == 0) {
      ++ny;
    } else if (h == "label") {
      label = true;
    } else {
      throw std::invalid_argument("dataset header: unexpected column '" + h + "'");
    }
  }
  if (nx == 0 || (label && ny) || (!label && ny == 0)) throw std::invalid_argument("dataset header: bad column set");
  LabeledDataset data;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw std::invalid_argument("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                                  " columns");
    }
    Eigen::VectorXd x(static_cast<Eigen::Index>(nx));
    for (std::size_t j = 0; j < nx; ++j) x[static_cast<Eigen::Index>(j)] = parse_double(cells[j], line_no);
    data.inputs.push_back(std::move(x));
    if (label) {
      const double v = parse_double(cells[nx], line_no);
      if (v != 1.0 && v != -1.0) throw std::invalid_argument("line " + std::to_string(line_no) + ": label must be +-1");
      data.labels.push_back(static_cast<int>(v));
    } else {
      Eigen::VectorXd y(static_cast<Eigen::Index>(ny));
      for (std::size_t j = 0; j < ny; ++j) y[static_cast<Eigen::Index>(j)] = parse_double(cells[nx + j], line_no);
      data.targets.push_back(std::move(y));
    }
  }
  data.validate();
  return data;
}

}  // namespace dlab
