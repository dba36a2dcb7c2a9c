#include <algorithm>

#include "ksaqa/checkpoint.hpp"
#include "ksaqa/error.hpp"
#include "ksaqa/ksa_model.hpp"
#include "ksaqa/metrics.hpp"
#include "ksaqa/ops.hpp"

namespace ksaqa {

double macro_f1(const KsaModel& model, std::span<const LabeledExample> examples, const KnowledgeBase& kb) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& ex : examples) {
    if (!ex.formatted) continue;
    const auto predicted = model.predict(ex.formatted->tokens, ex.positives.candidates, kb, model.config().lambda);
    total += prf1(predicted, ex.positives.pairs).f1;
    ++n;
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

Vocabulary build_question_vocabulary(std::span<const LabeledExample> examples, std::size_t min_count) {
  std::vector<Tokens> corpus;
  for (const auto& ex : examples)
    if (ex.formatted) corpus.push_back(ex.formatted->tokens);
  return Vocabulary::build(corpus, min_count);
}

TrainResult train_model(KsaModel& model, std::span<const LabeledExample> train,
                        std::span<const LabeledExample> valid, const KnowledgeBase& kb, const EpochCallback& on_epoch) {
  const ModelConfig& config = model.config();
  std::vector<const LabeledExample*> usable;
  for (const auto& ex : train) {
    if (!ex.formatted) continue;
    bool any = false;
    for (EntityId s : ex.positives.candidates)
      any = any || (!ex.positives.relations_for(s).empty() && !kb.subgraph_relations(s).empty());
    if (any) usable.push_back(&ex);
  }
  if (usable.empty()) throw DataError("no trainable questions (need formatted questions with KB facts)");

  const Rng base(config.seed);
  Rng order_rng = base.fork(10);
  Rng negative_rng = base.fork(11);
  Rng dropout_rng = base.fork(12);
  Adam adam(AdamConfig{.lr = config.lr});
  std::vector<std::size_t> order(usable.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  NamedTensors best;
  double best_f1 = -1.0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle(order, order_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::vector<QuestionTargets> batch;
      for (std::size_t i = start; i < stop; ++i)
        batch.push_back(build_targets(*usable[order[i]], kb, config.negatives, negative_rng));
      Tape tape;
      Var loss = model.loss(tape, batch, kb, true, &dropout_rng);
      epoch_loss += loss.value().item();
      Var step_loss = ops::scale(loss, 1.0 / static_cast<double>(batch.size()));
      tape.backward(step_loss);
      model.params().zero_grad();
      model.params().accumulate(tape);
      adam.step(model.params());
    }
    EpochRecord record{epoch, epoch_loss, macro_f1(model, valid.empty() ? train : valid, kb)};
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);
    if (record.valid_macro_f1 > best_f1) {
      best_f1 = record.valid_macro_f1;
      best = model.params().snapshot();
      result.best_epoch = epoch;
    }
  }
  if (!best.empty()) model.params().restore(best);
  round_to_float(model.params());
  return result;
}

}  // namespace ksaqa
