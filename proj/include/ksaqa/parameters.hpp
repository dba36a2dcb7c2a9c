#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ksaqa/rng.hpp"
#include "ksaqa/tensor.hpp"

namespace ksaqa {

class Tape;

class Parameter {
 public:
  Parameter(std::string name, Tensor value) : name(std::move(name)), value(std::move(value)), grad(this->value.shape()) {}

  std::string name;
  Tensor value;
  Tensor grad;
};

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

enum class Init { zeros, embedding_uniform, xavier_uniform };

// Embedding init range.
inline constexpr double kEmbeddingInitRange = 0.08;

void initialize(Tensor& t, Init init, Rng& rng);

// Owns the learned tensors of a model. Names are unique; insertion order is
// the serialization order.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Shape shape, Init init, Rng& rng);
  Parameter& add(const std::string& name, Tensor value);

  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  void zero_grad();
  // Adds the tape's dense and sparse parameter gradients into the owning
  // parameters. Parameters not in this store are ignored.
  void accumulate(const Tape& tape);

  NamedTensors snapshot() const;
  // Shapes and names must match exactly.
  void restore(const NamedTensors& named);

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<const Parameter*, std::size_t> by_address_;
};

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  // One bias-corrected update of every parameter from its accumulated grad.
  void step(ParameterStore& params);
  std::uint64_t steps() const { return step_; }
  const AdamConfig& config() const { return config_; }

 private:
  struct Moments {
    Tensor m;
    Tensor v;
  };
  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::unordered_map<const Parameter*, Moments> moments_;
};

}  // namespace ksaqa
