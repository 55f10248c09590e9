#pragma once

#include <stdexcept>
#include <utility>
#include <variant>

namespace skillstate {

/// Minimal value-or-error carrier used across the public API.
/// Accessing the wrong alternative throws std::logic_error.
template <typename T, typename E>
class Result {
 public:
  Result(T value) : data_(std::in_place_index<0>, std::move(value)) {}
  Result(E error) : data_(std::in_place_index<1>, std::move(error)) {}

  bool ok() const { return data_.index() == 0; }
  explicit operator bool() const { return ok(); }

  const T& value() const& {
    require(ok());
    return std::get<0>(data_);
  }
  T& value() & {
    require(ok());
    return std::get<0>(data_);
  }
  T&& take() && {
    require(ok());
    return std::get<0>(std::move(data_));
  }

  const E& error() const& {
    require(!ok());
    return std::get<1>(data_);
  }
  E& error() & {
    require(!ok());
    return std::get<1>(data_);
  }

 private:
  static void require(bool cond) {
    if (!cond) throw std::logic_error("Result: accessed the wrong alternative");
  }

  std::variant<T, E> data_;
};

}  // namespace skillstate
