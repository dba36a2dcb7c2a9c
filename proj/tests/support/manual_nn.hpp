#pragma once

// Straight-loop re-implementation of the relation model's forward pass over
// plain vectors, reading weights by parameter name. Used as an oracle.

#include <cmath>
#include <string>
#include <vector>

#include "ksaqa/kb_store.hpp"
#include "ksaqa/ksa_model.hpp"

namespace manual {

using Vec = std::vector<double>;

inline Vec row(const ksaqa::Tensor& t, std::size_t r) {
  Vec out(t.cols());
  for (std::size_t c = 0; c < t.cols(); ++c) out[c] = t.at(r, c);
  return out;
}

inline Vec flat(const ksaqa::Tensor& t) { return Vec(t.values().begin(), t.values().end()); }

// x W for x of length rows(W).
inline Vec xw(const Vec& x, const ksaqa::Tensor& w) {
  Vec out(w.cols(), 0.0);
  for (std::size_t i = 0; i < w.rows(); ++i)
    for (std::size_t j = 0; j < w.cols(); ++j) out[j] += x[i] * w.at(i, j);
  return out;
}

inline Vec plus(Vec a, const Vec& b) {
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

inline Vec join(Vec a, const Vec& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Weights {
  const ksaqa::ParameterStore& p;
  const ksaqa::Tensor& operator()(const std::string& name) const { return p.at(name).value; }
};

inline Vec gru_cell(const Weights& w, const std::string& prefix, const Vec& x, const Vec& h) {
  const Vec az = plus(plus(xw(x, w(prefix + ".W_z")), xw(h, w(prefix + ".U_z"))), flat(w(prefix + ".b_z")));
  const Vec ar = plus(plus(xw(x, w(prefix + ".W_r")), xw(h, w(prefix + ".U_r"))), flat(w(prefix + ".b_r")));
  Vec rh(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) rh[i] = sig(ar[i]) * h[i];
  const Vec an = plus(plus(xw(x, w(prefix + ".W_n")), xw(rh, w(prefix + ".U_n"))), flat(w(prefix + ".b_n")));
  Vec out(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double z = sig(az[i]);
    const double n = std::tanh(an[i]);
    out[i] = (1 - z) * n + z * h[i];
  }
  return out;
}

inline std::vector<Vec> gru_run(const Weights& w, const std::string& prefix, const std::vector<Vec>& xs,
                                std::size_t hidden, bool reverse) {
  std::vector<Vec> states(xs.size());
  Vec h(hidden, 0.0);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const std::size_t t = reverse ? xs.size() - 1 - k : k;
    h = gru_cell(w, prefix, xs[t], h);
    states[t] = h;
  }
  return states;
}

struct Question {
  std::vector<Vec> states;
  Vec final;
};

inline Question encode_question(const ksaqa::KsaModel& m, const ksaqa::Tokens& tokens) {
  const Weights w{m.params()};
  const std::size_t h = m.config().d_hidden;
  std::vector<Vec> xs;
  for (std::size_t id : m.vocab().indices(tokens)) xs.push_back(row(w("ksa.word_embedding"), id));
  Question q;
  for (std::size_t l = 1; l <= m.config().question_layers; ++l) {
    const std::string prefix = "ksa.question.layer" + std::to_string(l);
    const auto f = gru_run(w, prefix + ".forward", xs, h, false);
    const auto b = gru_run(w, prefix + ".backward", xs, h, true);
    for (std::size_t t = 0; t < xs.size(); ++t) xs[t] = join(f[t], b[t]);
    q.final = join(f.back(), b.front());
  }
  q.states = xs;
  return q;
}

inline Vec encode_subgraph(const ksaqa::KsaModel& m, std::span<const ksaqa::RelationId> relations) {
  const Weights w{m.params()};
  Vec h(m.config().d_hidden, 0.0);
  for (auto r : relations) h = gru_cell(w, "ksa.subgraph", row(w("ksa.relation_embedding"), r.value), h);
  return h;
}

struct Attention {
  Vec alpha;
  Vec summary;
};

inline Attention attend(const ksaqa::KsaModel& m, const std::vector<Vec>& states, const Vec& u_ks) {
  const Weights w{m.params()};
  Vec scores;
  for (const auto& hj : states) {
    Vec a = plus(xw(join(hj, u_ks), w("ksa.attention.W")), flat(w("ksa.attention.b")));
    double s = 0;
    for (std::size_t k = 0; k < a.size(); ++k) s += w("ksa.attention.v")[k] * std::tanh(a[k]);
    scores.push_back(s);
  }
  double mx = scores[0];
  for (double s : scores) mx = std::max(mx, s);
  double z = 0;
  Attention out;
  for (double s : scores) z += std::exp(s - mx);
  for (double s : scores) out.alpha.push_back(std::exp(s - mx) / z);
  out.summary.assign(states[0].size(), 0.0);
  for (std::size_t j = 0; j < states.size(); ++j)
    for (std::size_t k = 0; k < out.summary.size(); ++k) out.summary[k] += out.alpha[j] * states[j][k];
  return out;
}

inline Vec encoder_output(const ksaqa::KsaModel& m, const Question& q, const Vec& u_ks) {
  const Weights w{m.params()};
  Vec in;
  switch (m.variant()) {
    case ksaqa::Variant::bigru:
      in = q.final;
      break;
    case ksaqa::Variant::ks_bigru:
      in = join(q.final, u_ks);
      break;
    case ksaqa::Variant::ksa_bigru:
      in = join(attend(m, q.states, u_ks).summary, u_ks);
      break;
  }
  return plus(xw(in, w("ksa.encoder.W")), flat(w("ksa.encoder.b")));
}

inline Vec decode_logits(const ksaqa::KsaModel& m, const Vec& enc) {
  const Weights w{m.params()};
  const Vec start = row(w("ksa.relation_embedding"), m.relation_count());
  const Vec h = gru_cell(w, "ksa.decoder", start, enc);
  return plus(xw(h, w("ksa.output.W")), flat(w("ksa.output.b")));
}

// Probability of (s, r) composed from the steps above.
inline double probability(const ksaqa::KsaModel& m, const ksaqa::Tokens& q, const ksaqa::KnowledgeBase& kb,
                          ksaqa::EntityId s, ksaqa::RelationId r) {
  const Question enc = encode_question(m, q);
  const Vec u = m.variant() == ksaqa::Variant::bigru ? Vec(m.config().d_hidden, 0.0)
                                                      : encode_subgraph(m, kb.subgraph_relations(s));
  return sig(decode_logits(m, encoder_output(m, enc, u))[r.value]);
}

}  // namespace manual
