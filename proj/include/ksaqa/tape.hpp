#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <unordered_map>
#include <vector>

#include "ksaqa/tensor.hpp"

namespace ksaqa {

class Parameter;
class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  bool tracked() const;
  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records operations in creation order (which is a topological order) and
// replays their local gradients in reverse on backward().
//
// Parameter gradients are collected on the tape and moved into the owning
// ParameterStore with ParameterStore::accumulate(tape); the model itself can
// therefore stay const during a forward pass.
class Tape {
 public:
  enum class Mode { training, inference };

  // Receives the forward output and the gradient flowing into it.
  using Backward = std::function<void(Tape&, const Tensor& out_value, const Tensor& out_grad)>;

  explicit Tape(Mode mode = Mode::training) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return mode_ == Mode::training; }

  Var constant(Tensor value);
  // Leaf referencing the parameter's storage; one node per parameter per tape.
  Var param(const Parameter& p);
  // Output of an operation. Throws NumericError on non-finite values. The
  // closure is kept only when some input is tracked.
  Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);
  Var record(Tensor value, const std::vector<Var>& inputs, Backward backward);

  void backward(Var loss);

  const Tensor& value(std::size_t id) const { return *nodes_[id].value; }
  bool tracked(std::size_t id) const { return nodes_[id].tracked; }
  // Gradient buffer of a tracked node, zero-allocated on first use.
  Tensor& grad(std::size_t id);
  void accumulate(Var v, const Tensor& g);

  // Sparse row gradient for embedding tables looked up without a dense leaf.
  void accumulate_rows(const Parameter& table, std::size_t row, std::span<const double> g);

  const std::unordered_map<const Parameter*, Tensor>& parameter_grads() const { return param_grads_; }
  const std::unordered_map<const Parameter*, std::unordered_map<std::size_t, std::vector<double>>>& row_grads()
      const {
    return row_grads_;
  }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* value = nullptr;
    Tensor grad;
    bool tracked = false;
    bool has_grad = false;
    const Parameter* param = nullptr;
    Backward backward;
  };

  Var push(Node node);

  Mode mode_;
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, std::size_t> param_nodes_;
  std::unordered_map<const Parameter*, Tensor> param_grads_;
  std::unordered_map<const Parameter*, std::unordered_map<std::size_t, std::vector<double>>> row_grads_;
  bool backward_done_ = false;
};

}  // namespace ksaqa
