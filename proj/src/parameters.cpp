#include "ksaqa/parameters.hpp"

#include <cmath>

#include "ksaqa/error.hpp"
#include "ksaqa/tape.hpp"

namespace ksaqa {

void initialize(Tensor& t, Init init, Rng& rng) {
  switch (init) {
    case Init::zeros:
      t.fill(0.0);
      return;
    case Init::embedding_uniform:
      for (double& v : t.values()) v = rng.uniform(-kEmbeddingInitRange, kEmbeddingInitRange);
      return;
    case Init::xavier_uniform: {
      const double fan_in = static_cast<double>(t.rows());
      const double fan_out = static_cast<double>(t.cols());
      const double a = std::sqrt(6.0 / (fan_in + fan_out));
      for (double& v : t.values()) v = rng.uniform(-a, a);
      return;
    }
  }
}

Parameter& ParameterStore::add(const std::string& name, Shape shape, Init init, Rng& rng) {
  Tensor t(std::move(shape));
  initialize(t, init, rng);
  return add(name, std::move(t));
}

Parameter& ParameterStore::add(const std::string& name, Tensor value) {
  if (index_.count(name)) throw Error("duplicate parameter name: " + name);
  params_.push_back(std::make_unique<Parameter>(name, std::move(value)));
  index_.emplace(name, params_.size() - 1);
  by_address_.emplace(params_.back().get(), params_.size() - 1);
  return *params_.back();
}

Parameter& ParameterStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unknown parameter: " + name);
  return *params_[it->second];
}

const Parameter& ParameterStore::at(const std::string& name) const {
  return const_cast<ParameterStore*>(this)->at(name);
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParameterStore::zero_grad() {
  for (auto& p : params_) p->grad.fill(0.0);
}

void ParameterStore::accumulate(const Tape& tape) {
  for (const auto& [key, g] : tape.parameter_grads()) {
    if (auto it = by_address_.find(key); it != by_address_.end()) params_[it->second]->grad += g;
  }
  for (const auto& [key, rows] : tape.row_grads()) {
    auto it = by_address_.find(key);
    if (it == by_address_.end()) continue;
    Tensor& grad = params_[it->second]->grad;
    const std::size_t width = grad.cols();
    for (const auto& [row, g] : rows) {
      for (std::size_t c = 0; c < width; ++c) grad[row * width + c] += g[c];
    }
  }
}

NamedTensors ParameterStore::snapshot() const {
  NamedTensors out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.emplace_back(p->name, p->value);
  return out;
}

void ParameterStore::restore(const NamedTensors& named) {
  if (named.size() != params_.size())
    throw Error("parameter count mismatch: have " + std::to_string(params_.size()) + ", got " +
                std::to_string(named.size()));
  for (const auto& [name, t] : named) {
    Parameter& p = at(name);
    if (p.value.shape() != t.shape())
      throw ShapeError("parameter " + name + " has shape " + shape_string(p.value.shape()) + ", checkpoint has " +
                       shape_string(t.shape()));
    p.value = t;
  }
}

void Adam::step(ParameterStore& params) {
  ++step_;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  for (const auto& p : params) {
    auto [it, inserted] = moments_.try_emplace(p.get());
    Moments& mom = it->second;
    if (inserted) {
      mom.m = Tensor(p->value.shape());
      mom.v = Tensor(p->value.shape());
    }
    auto w = p->value.values();
    auto g = p->grad.values();
    auto m = mom.m.values();
    auto v = mom.v.values();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] -= config_.lr * m_hat / (std::sqrt(v_hat) + config_.eps);
    }
  }
}

}  // namespace ksaqa
