#pragma once

#include "symflow/types.hpp"

#include <nlohmann/json.hpp>

#include <memory>
#include <span>
#include <string>

namespace symflow::flow {

/// Opaque record of a forward pass, consumed by backward().
struct Tape {
  virtual ~Tape() = default;
};

/// Velocity field v(x_t, t, cond). Implementations are batched: each row of
/// `x` and `cond` is one sample and `t` holds one time per row.
class VelocityModel {
 public:
  virtual ~VelocityModel() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t cond_dim() const = 0;

  virtual Matrix forward(const Matrix& x, const Vector& t, const Matrix& cond,
                         std::unique_ptr<Tape>* tape = nullptr) const = 0;
  /// Accumulates d loss / d params into `grad` given d loss / d output.
  virtual void backward(const Tape& tape, const Matrix& upstream, std::span<double> grad) const = 0;

  virtual ParamVector& params() { return params_; }
  virtual const ParamVector& params() const { return params_; }
  virtual std::unique_ptr<VelocityModel> clone() const = 0;
  /// Architecture description stored next to the parameters in checkpoints.
  virtual nlohmann::json describe() const = 0;

  /// Single-sample convenience wrapper around forward().
  Vector velocity(const Vector& x, double t, const Vector& cond) const;

 protected:
  void check_inputs(const Matrix& x, const Vector& t, const Matrix& cond) const;
  ParamVector params_;
};

inline std::span<const double> as_span(const ParamVector& p) {
  return {p.data(), static_cast<std::size_t>(p.size())};
}
inline std::span<double> as_span(ParamVector& p) {
  return {p.data(), static_cast<std::size_t>(p.size())};
}

}  // namespace symflow::flow
