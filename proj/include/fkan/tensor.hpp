#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fkan {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  /// Builds from nested rows; all rows must share one length.
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_string() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix transpose(const Matrix& m);
bool all_finite(const Matrix& m);

/// Ordered collection of named tensors: the unit exchanged between clients
/// and server. Entry order is canonical for a given architecture.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Matrix tensor;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  ParamSet() = default;

  /// Throws std::invalid_argument on duplicate names.
  void add(std::string name, Matrix tensor);

  std::size_t entry_count() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  Entry& entry(std::size_t i) { return entries_[i]; }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  Matrix& tensor(std::size_t i) { return entries_[i].tensor; }
  const Matrix& tensor(std::size_t i) const { return entries_[i].tensor; }

  /// Lookup by name; throws std::out_of_range when absent.
  const Matrix& at(const std::string& name) const;
  Matrix& at(const std::string& name);

  /// Total scalar count across all entries.
  std::size_t scalar_count() const;

  /// Same names, order and shapes.
  bool congruent(const ParamSet& other) const;
  /// Throws std::invalid_argument naming the first mismatch.
  void require_congruent(const ParamSet& other, const char* context) const;

  /// Zero tensors with this set's names and shapes.
  ParamSet zeros_like() const;

  /// Concatenation of all entries in canonical order.
  std::vector<double> flatten() const;
  /// Inverse of flatten using this set as the shape template.
  ParamSet unflatten(std::span<const double> flat) const;

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

 private:
  std::vector<Entry> entries_;
};

}  // namespace fkan
