#pragma once

#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace shq {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major array of doubles. Immutable once constructed; copies share
// the underlying buffer, so a Tensor may be handed across threads freely.
class Tensor {
 public:
  Tensor();  // scalar zero
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(Shape shape);
  static Tensor full(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t numel() const noexcept { return data_->size(); }

  std::span<const double> data() const noexcept { return *data_; }
  double operator[](std::size_t i) const noexcept { return (*data_)[i]; }
  double item() const;

  bool requires_grad() const noexcept { return requires_grad_; }
  Tensor with_requires_grad(bool flag = true) const;

  // Same buffer viewed with a different shape of equal element count.
  Tensor reshape(Shape shape) const;

  std::vector<double> to_vector() const { return *data_; }

  // Bitwise equality of shape and payload.
  bool identical(const Tensor& other) const;

 private:
  Shape shape_;
  std::shared_ptr<const std::vector<double>> data_;
  bool requires_grad_ = false;
};

}  // namespace shq
