#include "ksaqa/tape.hpp"

#include "ksaqa/error.hpp"
#include "ksaqa/parameters.hpp"

namespace ksaqa {

const Tensor& Var::value() const { return tape_->value(id_); }
bool Var::tracked() const { return tape_->tracked(id_); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  Node& back = nodes_.back();
  if (!back.value) back.value = &back.owned;
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node node;
  node.owned = std::move(value);
  return push(std::move(node));
}

Var Tape::param(const Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var(this, it->second);
  Node node;
  node.value = &p.value;
  node.tracked = recording();
  node.param = &p;
  Var v = push(std::move(node));
  param_nodes_.emplace(&p, v.id());
  return v;
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
  return record(std::move(value), std::vector<Var>(inputs), std::move(backward));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, Backward backward) {
  if (!value.all_finite()) throw NumericError("non-finite value produced by operation");
  Node node;
  node.owned = std::move(value);
  if (recording()) {
    for (const Var& in : inputs) {
      if (in.tracked()) {
        node.tracked = true;
        break;
      }
    }
  }
  if (node.tracked) node.backward = std::move(backward);
  return push(std::move(node));
}

Tensor& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor(n.value->shape());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::accumulate(Var v, const Tensor& g) {
  if (!tracked(v.id())) return;
  grad(v.id()) += g;
}

void Tape::accumulate_rows(const Parameter& table, std::size_t row, std::span<const double> g) {
  if (!recording()) return;
  auto& rows = row_grads_[&table];
  auto& dst = rows[row];
  if (dst.empty()) dst.assign(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

void Tape::backward(Var loss) {
  if (loss.value().size() != 1)
    throw ShapeError("backward() needs a scalar loss, got shape " + shape_string(loss.shape()));
  if (backward_done_) throw Error("backward() called twice on the same tape");
  backward_done_ = true;
  if (!loss.tracked()) return;
  grad(loss.id()).fill(1.0);
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.tracked || !n.has_grad) continue;
    if (n.backward) n.backward(*this, *n.value, n.grad);
    if (n.param) {
      auto [it, inserted] = param_grads_.try_emplace(n.param, n.grad);
      if (!inserted) it->second += n.grad;
    }
  }
}

}  // namespace ksaqa
