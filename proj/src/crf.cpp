#include "ksaqa/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ksaqa/error.hpp"

namespace ksaqa {

namespace {

double log_sum_exp(std::span<const double> xs) {
  const double mx = *std::max_element(xs.begin(), xs.end());
  if (mx == -std::numeric_limits<double>::infinity()) return mx;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

double edge(const Tensor& t, std::size_t k) { return t.size() == 0 ? 0.0 : t[k]; }

void check(const CrfScores& s) {
  const std::size_t k = s.emissions.cols();
  if (s.emissions.rank() != 2 || s.emissions.rows() == 0)
    throw ShapeError("crf: emissions must be [m x K] with m > 0, got " + shape_string(s.emissions.shape()));
  if (s.transitions.rows() != k || s.transitions.cols() != k || s.transitions.size() != k * k)
    throw ShapeError("crf: transitions " + shape_string(s.transitions.shape()) + " do not match emissions " +
                     shape_string(s.emissions.shape()));
  if ((s.start.size() != 0 && s.start.size() != k) || (s.stop.size() != 0 && s.stop.size() != k))
    throw ShapeError("crf: start/stop must have one score per label");
}

void check_tags(const CrfScores& s, std::span<const int> tags) {
  if (tags.size() != s.emissions.rows())
    throw ShapeError("crf: " + std::to_string(tags.size()) + " tags for " + std::to_string(s.emissions.rows()) +
                     " tokens");
  for (int y : tags)
    if (y < 0 || static_cast<std::size_t>(y) >= s.emissions.cols()) throw ShapeError("crf: tag out of range");
}

// alpha[i][y] = log sum over prefixes ending in y at i; beta likewise for suffixes.
struct Lattice {
  std::vector<double> alpha;
  std::vector<double> beta;
  double log_z = 0.0;
};

Lattice forward_backward(const CrfScores& s, bool with_beta) {
  const std::size_t m = s.emissions.rows(), k = s.emissions.cols();
  Lattice l;
  l.alpha.assign(m * k, 0.0);
  std::vector<double> terms(k);
  for (std::size_t y = 0; y < k; ++y) l.alpha[y] = edge(s.start, y) + s.emissions.at(0, y);
  for (std::size_t i = 1; i < m; ++i)
    for (std::size_t y = 0; y < k; ++y) {
      for (std::size_t p = 0; p < k; ++p) terms[p] = l.alpha[(i - 1) * k + p] + s.transitions.at(p, y);
      l.alpha[i * k + y] = log_sum_exp(terms) + s.emissions.at(i, y);
    }
  for (std::size_t y = 0; y < k; ++y) terms[y] = l.alpha[(m - 1) * k + y] + edge(s.stop, y);
  l.log_z = log_sum_exp(terms);
  if (!with_beta) return l;
  l.beta.assign(m * k, 0.0);
  for (std::size_t y = 0; y < k; ++y) l.beta[(m - 1) * k + y] = edge(s.stop, y);
  for (std::size_t i = m - 1; i-- > 0;)
    for (std::size_t y = 0; y < k; ++y) {
      for (std::size_t n = 0; n < k; ++n)
        terms[n] = s.transitions.at(y, n) + s.emissions.at(i + 1, n) + l.beta[(i + 1) * k + n];
      l.beta[i * k + y] = log_sum_exp(terms);
    }
  return l;
}

}  // namespace

double crf_sequence_score(const CrfScores& s, std::span<const int> tags) {
  check(s);
  check_tags(s, tags);
  double score = edge(s.start, tags.front()) + edge(s.stop, tags.back());
  for (std::size_t i = 0; i < tags.size(); ++i) {
    score += s.emissions.at(i, tags[i]);
    if (i > 0) score += s.transitions.at(tags[i - 1], tags[i]);
  }
  return score;
}

double crf_log_partition(const CrfScores& s) {
  check(s);
  return forward_backward(s, false).log_z;
}

double crf_log_likelihood(const CrfScores& s, std::span<const int> tags) {
  return crf_sequence_score(s, tags) - crf_log_partition(s);
}

TagSequence viterbi_decode(const CrfScores& s) {
  check(s);
  const std::size_t m = s.emissions.rows(), k = s.emissions.cols();
  std::vector<double> best(m * k);
  std::vector<int> back(m * k, 0);
  for (std::size_t y = 0; y < k; ++y) best[y] = edge(s.start, y) + s.emissions.at(0, y);
  for (std::size_t i = 1; i < m; ++i)
    for (std::size_t y = 0; y < k; ++y) {
      std::size_t arg = 0;
      double top = best[(i - 1) * k] + s.transitions.at(0, y);
      for (std::size_t p = 1; p < k; ++p) {
        const double v = best[(i - 1) * k + p] + s.transitions.at(p, y);
        if (v > top) {
          top = v;
          arg = p;
        }
      }
      best[i * k + y] = top + s.emissions.at(i, y);
      back[i * k + y] = static_cast<int>(arg);
    }
  std::size_t last = 0;
  double top = best[(m - 1) * k] + edge(s.stop, 0);
  for (std::size_t y = 1; y < k; ++y) {
    const double v = best[(m - 1) * k + y] + edge(s.stop, y);
    if (v > top) {
      top = v;
      last = y;
    }
  }
  TagSequence tags(m);
  tags[m - 1] = static_cast<int>(last);
  for (std::size_t i = m - 1; i > 0; --i) tags[i - 1] = back[i * k + tags[i]];
  return tags;
}

namespace ops {

Var crf_nll(Var emissions, Var transitions, Var start, Var stop, std::span<const int> tags) {
  const CrfScores s{emissions.value(), transitions.value(), start.value(), stop.value()};
  check(s);
  if (s.start.size() != s.emissions.cols() || s.stop.size() != s.emissions.cols())
    throw ShapeError("crf_nll: start/stop must have one score per label");
  const double nll = crf_log_partition(s) - crf_sequence_score(s, tags);
  TagSequence gold(tags.begin(), tags.end());
  return emissions.tape().record(
      Tensor::scalar(nll), {emissions, transitions, start, stop},
      [emissions, transitions, start, stop, gold](Tape& t, const Tensor&, const Tensor& g) {
        const CrfScores s{emissions.value(), transitions.value(), start.value(), stop.value()};
        const std::size_t m = s.emissions.rows(), k = s.emissions.cols();
        const Lattice l = forward_backward(s, true);
        const double w = g[0];
        // d logZ / d score = expected count; d score(gold) / d score = observed count.
        if (emissions.tracked()) {
          Tensor& ge = t.grad(emissions.id());
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t y = 0; y < k; ++y)
              ge[i * k + y] += w * std::exp(l.alpha[i * k + y] + l.beta[i * k + y] - l.log_z);
          for (std::size_t i = 0; i < m; ++i) ge[i * k + gold[i]] -= w;
        }
        if (transitions.tracked()) {
          Tensor& gt = t.grad(transitions.id());
          for (std::size_t i = 1; i < m; ++i)
            for (std::size_t p = 0; p < k; ++p)
              for (std::size_t y = 0; y < k; ++y)
                gt[p * k + y] += w * std::exp(l.alpha[(i - 1) * k + p] + s.transitions.at(p, y) +
                                              s.emissions.at(i, y) + l.beta[i * k + y] - l.log_z);
          for (std::size_t i = 1; i < m; ++i) gt[gold[i - 1] * k + gold[i]] -= w;
        }
        if (start.tracked()) {
          Tensor& gs = t.grad(start.id());
          for (std::size_t y = 0; y < k; ++y) gs[y] += w * std::exp(l.alpha[y] + l.beta[y] - l.log_z);
          gs[gold.front()] -= w;
        }
        if (stop.tracked()) {
          Tensor& gs = t.grad(stop.id());
          for (std::size_t y = 0; y < k; ++y)
            gs[y] += w * std::exp(l.alpha[(m - 1) * k + y] + l.beta[(m - 1) * k + y] - l.log_z);
          gs[gold.back()] -= w;
        }
      });
}

}  // namespace ops

}  // namespace ksaqa
