#include "fkan/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

namespace fkan {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw std::invalid_argument("Matrix: data length " + std::to_string(data_.size()) +
                                " does not match shape " + shape_string());
  }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  const std::size_t cols = rows.front().size();
  std::vector<double> data;
  data.reserve(rows.size() * cols);
  for (const auto& r : rows) {
    if (r.size() != cols) throw std::invalid_argument("Matrix::from_rows: ragged rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Matrix(rows.size(), cols, std::move(data));
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) t(c, r) = m(r, c);
  return t;
}

bool all_finite(const Matrix& m) {
  return std::all_of(m.data().begin(), m.data().end(),
                     [](double v) { return std::isfinite(v); });
}

void ParamSet::add(std::string name, Matrix tensor) {
  for (const auto& e : entries_) {
    if (e.name == name) throw std::invalid_argument("ParamSet: duplicate entry '" + name + "'");
  }
  entries_.push_back({std::move(name), std::move(tensor)});
}

const Matrix& ParamSet::at(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.tensor;
  throw std::out_of_range("ParamSet: no entry '" + name + "'");
}

Matrix& ParamSet::at(const std::string& name) {
  return const_cast<Matrix&>(std::as_const(*this).at(name));
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

bool ParamSet::congruent(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].name != other.entries_[i].name) return false;
    if (!entries_[i].tensor.same_shape(other.entries_[i].tensor)) return false;
  }
  return true;
}

void ParamSet::require_congruent(const ParamSet& other, const char* context) const {
  if (entries_.size() != other.entries_.size()) {
    throw std::invalid_argument(std::string(context) + ": entry count " +
                                std::to_string(entries_.size()) + " vs " +
                                std::to_string(other.entries_.size()));
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.name != b.name || !a.tensor.same_shape(b.tensor)) {
      throw std::invalid_argument(std::string(context) + ": entry " + std::to_string(i) + " '" +
                                  a.name + "' " + a.tensor.shape_string() + " vs '" + b.name +
                                  "' " + b.tensor.shape_string());
    }
  }
}

ParamSet ParamSet::zeros_like() const {
  ParamSet z;
  for (const auto& e : entries_) z.entries_.push_back({e.name, Matrix(e.tensor.rows(), e.tensor.cols())});
  return z;
}

std::vector<double> ParamSet::flatten() const {
  std::vector<double> flat;
  flat.reserve(scalar_count());
  for (const auto& e : entries_) flat.insert(flat.end(), e.tensor.data().begin(), e.tensor.data().end());
  return flat;
}

ParamSet ParamSet::unflatten(std::span<const double> flat) const {
  if (flat.size() != scalar_count()) {
    throw std::invalid_argument("ParamSet::unflatten: expected " + std::to_string(scalar_count()) +
                                " scalars, got " + std::to_string(flat.size()));
  }
  ParamSet out;
  std::size_t offset = 0;
  for (const auto& e : entries_) {
    std::vector<double> values(flat.begin() + offset, flat.begin() + offset + e.tensor.size());
    offset += e.tensor.size();
    out.entries_.push_back({e.name, Matrix(e.tensor.rows(), e.tensor.cols(), std::move(values))});
  }
  return out;
}

}  // namespace fkan
