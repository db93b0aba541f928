#pragma once

#include <cstddef>
#include <iosfwd>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "caged/core/matrix.hpp"

namespace caged::optim {

struct Param {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> value;

  std::size_t size() const { return value.size(); }
  // Rank-2 view; rank-1 params are viewed as a single row.
  MatrixView matrix();
  ConstMatrixView matrix() const;

  friend bool operator==(const Param&, const Param&) = default;
};

/// Named dense parameter arrays. Names are unique and shapes are fixed at registration.
class ParamStore {
 public:
  // Returns the index of the new parameter. Throws on duplicate names or a value/shape mismatch.
  std::size_t add(std::string name, std::vector<std::size_t> shape, std::vector<double> value);
  std::size_t add(std::string name, std::vector<std::size_t> shape);  // zero-filled

  std::size_t size() const { return params_.size(); }
  std::size_t total_size() const;
  Param& operator[](std::size_t i) { return params_[i]; }
  const Param& operator[](std::size_t i) const { return params_[i]; }
  std::size_t index_of(const std::string& name) const;
  Param& get(const std::string& name) { return params_[index_of(name)]; }
  const Param& get(const std::string& name) const { return params_[index_of(name)]; }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  bool all_finite() const;
  double squared_norm() const;

  friend bool operator==(const ParamStore&, const ParamStore&) = default;

 private:
  std::vector<Param> params_;
};

/// Gradient buffers mirroring a ParamStore's layout.
struct Gradients {
  std::vector<std::vector<double>> values;

  static Gradients zeros_like(const ParamStore& store);
  void set_zero();
  MatrixView matrix(std::size_t i, const ParamStore& layout);
};

/// Flat record: u64 count; per param u64 name length, name bytes, u64 rank,
/// u64 dims[rank], f64 values (row-major); all little-endian.
void write_params(const ParamStore& store, std::ostream& os);
void write_params(const ParamStore& store, const std::filesystem::path& file);
ParamStore read_params(std::istream& is);
ParamStore read_params(const std::filesystem::path& file);

/// gamma * ||theta||^2 and its gradient 2 * gamma * theta added into `grad`.
double l2_penalty(std::span<const double> theta, double gamma);
void add_l2_gradient(std::span<const double> theta, double gamma, std::span<double> grad);

}  // namespace caged::optim
