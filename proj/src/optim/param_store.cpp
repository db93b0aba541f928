#include "caged/optim/param_store.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "caged/core/binary_io.hpp"

namespace caged::optim {
namespace {

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::pair<std::size_t, std::size_t> as_2d(const std::vector<std::size_t>& shape) {
  if (shape.size() == 1) return {1, shape[0]};
  if (shape.size() == 2) return {shape[0], shape[1]};
  throw std::logic_error("matrix view requires rank 1 or 2");
}

}  // namespace

MatrixView Param::matrix() {
  const auto [r, c] = as_2d(shape);
  return {value.data(), r, c};
}

ConstMatrixView Param::matrix() const {
  const auto [r, c] = as_2d(shape);
  return {value.data(), r, c};
}

std::size_t ParamStore::add(std::string name, std::vector<std::size_t> shape, std::vector<double> value) {
  for (const auto& p : params_)
    if (p.name == name) throw std::invalid_argument("ParamStore: duplicate parameter name '" + name + "'");
  if (shape.empty() || shape_size(shape) != value.size())
    throw std::invalid_argument("ParamStore: value count does not match shape for '" + name + "'");
  params_.push_back(Param{std::move(name), std::move(shape), std::move(value)});
  return params_.size() - 1;
}

std::size_t ParamStore::add(std::string name, std::vector<std::size_t> shape) {
  const std::size_t n = shape_size(shape);
  return add(std::move(name), std::move(shape), std::vector<double>(n, 0.0));
}

std::size_t ParamStore::total_size() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i)
    if (params_[i].name == name) return i;
  throw std::out_of_range("ParamStore: no parameter named '" + name + "'");
}

bool ParamStore::all_finite() const {
  for (const auto& p : params_)
    for (double x : p.value)
      if (!std::isfinite(x)) return false;
  return true;
}

double ParamStore::squared_norm() const {
  double s = 0.0;
  for (const auto& p : params_)
    for (double x : p.value) s += x * x;
  return s;
}

Gradients Gradients::zeros_like(const ParamStore& store) {
  Gradients g;
  g.values.reserve(store.size());
  for (const auto& p : store) g.values.emplace_back(p.size(), 0.0);
  return g;
}

void Gradients::set_zero() {
  for (auto& v : values) std::fill(v.begin(), v.end(), 0.0);
}

MatrixView Gradients::matrix(std::size_t i, const ParamStore& layout) {
  const auto [r, c] = as_2d(layout[i].shape);
  return {values[i].data(), r, c};
}

void write_params(const ParamStore& store, std::ostream& os) {
  binio::put_u64(os, store.size());
  for (const auto& p : store) {
    binio::put_u64(os, p.name.size());
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    binio::put_u64(os, p.shape.size());
    for (auto d : p.shape) binio::put_u64(os, d);
    for (double x : p.value) binio::put_f64(os, x);
  }
  if (!os) throw std::runtime_error("write_params: write failed");
}

void write_params(const ParamStore& store, const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + file.string());
  write_params(store, os);
}

ParamStore read_params(std::istream& is) {
  ParamStore store;
  const auto count = binio::get_u64(is);
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto len = binio::get_u64(is);
    if (len > 4096) throw std::runtime_error("read_params: implausible name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), static_cast<std::streamsize>(len))) throw std::runtime_error("read_params: truncated name");
    const auto rank = binio::get_u64(is);
    if (rank == 0 || rank > 8) throw std::runtime_error("read_params: bad rank");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = binio::get_u64(is);
    std::vector<double> value(shape_size(shape));
    for (auto& x : value) x = binio::get_f64(is);
    store.add(std::move(name), std::move(shape), std::move(value));
  }
  return store;
}

ParamStore read_params(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + file.string());
  return read_params(is);
}

double l2_penalty(std::span<const double> theta, double gamma) {
  double s = 0.0;
  for (double x : theta) s += x * x;
  return gamma * s;
}

void add_l2_gradient(std::span<const double> theta, double gamma, std::span<double> grad) {
  for (std::size_t i = 0; i < theta.size(); ++i) grad[i] += 2.0 * gamma * theta[i];
}

}  // namespace caged::optim
