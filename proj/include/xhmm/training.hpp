#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xhmm/error.hpp"
#include "xhmm/lexicon.hpp"
#include "xhmm/matrix.hpp"
#include "xhmm/model.hpp"
#include "xhmm/tagset.hpp"

namespace xhmm {

struct TrainingConfig {
  std::size_t iterations = 20;
  double smoothing_floor = 1e-6;
  // Stop early when the relative log-likelihood change falls below this; 0
  // runs exactly `iterations` rounds.
  double convergence_tol = 0.0;
  // Skip (and count) sentences with no positive-probability path instead of
  // aborting.
  bool skip_impossible = false;
};

// Expected counts from the E-step.
struct SufficientStats {
  std::vector<double> initial_counts;
  Matrix<double> transition_counts;
  Matrix<double> emission_counts;
  double log_likelihood = 0.0;

  SufficientStats() = default;
  SufficientStats(std::size_t n_tags, std::size_t n_classes)
      : initial_counts(n_tags, 0.0),
        transition_counts(n_tags, n_tags, 0.0),
        emission_counts(n_tags, n_classes, 0.0) {}

  void merge(const SufficientStats& other) {
    for (std::size_t i = 0; i < initial_counts.size(); ++i) initial_counts[i] += other.initial_counts[i];
    auto& t = transition_counts.data();
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += other.transition_counts.data()[i];
    auto& e = emission_counts.data();
    for (std::size_t i = 0; i < e.size(); ++i) e[i] += other.emission_counts.data()[i];
    log_likelihood += other.log_likelihood;
  }
};

// Scaled forward-backward over one sentence of class ids. Adds the sentence's
// expected counts into `acc` and returns its log-likelihood. Only tags inside
// each position's class are visited, since all others have zero emission.
inline double accumulate_forward_backward(const HmmModel& m, std::span<const ClassId> sentence,
                                          SufficientStats& acc) {
  const std::size_t len = sentence.size();
  if (len == 0) throw DataError("empty sentence");
  for (std::size_t t = 0; t < len; ++t) {
    if (sentence[t] >= m.n_classes()) {
      throw DataError("position " + std::to_string(t) + ": class id " +
                      std::to_string(sentence[t]) + " unknown to the model");
    }
  }

  std::vector<std::size_t> offset(len + 1, 0);
  for (std::size_t t = 0; t < len; ++t) offset[t + 1] = offset[t] + m.class_members[sentence[t]].size();
  std::vector<double> alpha(offset[len]), beta(offset[len]), scale(len);
  auto states = [&](std::size_t t) -> const std::vector<TagId>& { return m.class_members[sentence[t]]; };

  {
    const auto& s0 = states(0);
    double total = 0.0;
    for (std::size_t a = 0; a < s0.size(); ++a) {
      const double v = m.initial[s0[a]] * m.emission(s0[a], sentence[0]);
      alpha[a] = v;
      total += v;
    }
    if (!(total > 0.0)) throw ImpossibleSequence(0);
    scale[0] = total;
    for (std::size_t a = 0; a < s0.size(); ++a) alpha[a] /= total;
  }
  for (std::size_t t = 1; t < len; ++t) {
    const auto& prev = states(t - 1);
    const auto& cur = states(t);
    const double* ap = &alpha[offset[t - 1]];
    double* ac = &alpha[offset[t]];
    double total = 0.0;
    for (std::size_t b = 0; b < cur.size(); ++b) {
      const TagId j = cur[b];
      double s = 0.0;
      for (std::size_t a = 0; a < prev.size(); ++a) s += ap[a] * m.transition(prev[a], j);
      ac[b] = s * m.emission(j, sentence[t]);
      total += ac[b];
    }
    if (!(total > 0.0)) throw ImpossibleSequence(t);
    scale[t] = total;
    for (std::size_t b = 0; b < cur.size(); ++b) ac[b] /= total;
  }

  for (std::size_t a = offset[len - 1]; a < offset[len]; ++a) beta[a] = 1.0;
  for (std::size_t t = len - 1; t-- > 0;) {
    const auto& cur = states(t);
    const auto& next = states(t + 1);
    const double* bn = &beta[offset[t + 1]];
    double* bc = &beta[offset[t]];
    const ClassId cn = sentence[t + 1];
    for (std::size_t a = 0; a < cur.size(); ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < next.size(); ++b) {
        s += m.transition(cur[a], next[b]) * m.emission(next[b], cn) * bn[b];
      }
      bc[a] = s / scale[t + 1];
    }
  }

  for (std::size_t t = 0; t < len; ++t) {
    const auto& cur = states(t);
    for (std::size_t a = 0; a < cur.size(); ++a) {
      const double g = alpha[offset[t] + a] * beta[offset[t] + a];
      if (t == 0) acc.initial_counts[cur[a]] += g;
      acc.emission_counts(cur[a], sentence[t]) += g;
    }
    if (t + 1 == len) continue;
    const auto& next = states(t + 1);
    const ClassId cn = sentence[t + 1];
    for (std::size_t a = 0; a < cur.size(); ++a) {
      const double at = alpha[offset[t] + a];
      if (at == 0.0) continue;
      for (std::size_t b = 0; b < next.size(); ++b) {
        acc.transition_counts(cur[a], next[b]) += at * m.transition(cur[a], next[b]) *
                                                   m.emission(next[b], cn) *
                                                   beta[offset[t + 1] + b] / scale[t + 1];
      }
    }
  }

  double ll = 0.0;
  for (double s : scale) ll += std::log(s);
  acc.log_likelihood += ll;
  return ll;
}

inline SufficientStats forward_backward(const HmmModel& m, std::span<const ClassId> sentence) {
  SufficientStats stats(m.n_tags(), m.n_classes());
  accumulate_forward_backward(m, sentence, stats);
  return stats;
}

// A corpus of class-id sentences that can be traversed repeatedly, e.g. a
// file re-read on every Baum-Welch iteration.
template <typename C>
concept ClassCorpus = requires(const C& c, void (*fn)(std::span<const ClassId>)) {
  c.for_each(fn);
};

// In-memory class corpus.
struct ClassSentences {
  std::vector<std::vector<ClassId>> sentences;

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& s : sentences) fn(std::span<const ClassId>(s));
  }
};

namespace detail {

// Non-owning corpus view over in-memory sentences.
template <typename T>
struct SentencesRef {
  const std::vector<std::vector<T>>* sentences;

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& s : *sentences) fn(std::span<const T>(s));
  }
};

}  // namespace detail

// M-step: expected counts plus `floor` on every structurally permitted cell,
// renormalized. Masked transitions and non-member emissions stay exactly 0.
// A row that received no mass at all keeps its previous distribution.
inline HmmModel reestimate(const HmmModel& m, const SufficientStats& stats, double floor) {
  HmmModel out = m;
  const auto n = m.n_tags();
  const auto k = m.n_classes();

  std::vector<double> init(n);
  for (std::size_t i = 0; i < n; ++i) init[i] = stats.initial_counts[i] + floor;
  if (sum(std::span<const double>(init)) > 0.0) {
    detail::normalize(init);
    out.initial = init;
  }

  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      row[j] = m.masked(static_cast<TagId>(i), static_cast<TagId>(j))
                   ? 0.0
                   : stats.transition_counts(i, j) + floor;
    }
    if (sum(std::span<const double>(row)) > 0.0) {
      detail::normalize(row);
      std::copy(row.begin(), row.end(), out.transition.row(i).begin());
    }
  }

  std::vector<double> erow(k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      erow[c] = m.emits(static_cast<TagId>(i), static_cast<ClassId>(c))
                    ? stats.emission_counts(i, c) + floor
                    : 0.0;
    }
    if (sum(std::span<const double>(erow)) > 0.0) {
      detail::normalize(erow);
      std::copy(erow.begin(), erow.end(), out.emission.row(i).begin());
    }
  }
  return out;
}

struct TrainingResult {
  HmmModel model;
  // Corpus log-likelihood of the model entering each iteration.
  std::vector<double> log_likelihood;
  std::size_t skipped_sentences = 0;
};

// One E-step over the corpus.
template <ClassCorpus Corpus>
SufficientStats expected_counts(const HmmModel& m, const Corpus& corpus, bool skip_impossible,
                                std::size_t* skipped = nullptr) {
  SufficientStats stats(m.n_tags(), m.n_classes());
  std::size_t index = 0;
  std::size_t n_skipped = 0;
  corpus.for_each([&](std::span<const ClassId> sentence) {
    SufficientStats local(m.n_tags(), m.n_classes());
    try {
      accumulate_forward_backward(m, sentence, local);
      stats.merge(local);
    } catch (const ImpossibleSequence& e) {
      if (!skip_impossible) throw ImpossibleSequence(e.position(), index);
      ++n_skipped;
    } catch (const DataError& e) {
      throw DataError("sentence " + std::to_string(index) + ": " + e.what());
    }
    ++index;
  });
  if (index == 0) throw DataError("training corpus is empty");
  if (skipped) *skipped = n_skipped;
  return stats;
}

template <ClassCorpus Corpus>
TrainingResult baum_welch(HmmModel m, const Corpus& corpus, const TrainingConfig& cfg) {
  if (cfg.smoothing_floor < 0.0) throw ConfigError("smoothing floor must be non-negative");
  TrainingResult result;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    auto stats = expected_counts(m, corpus, cfg.skip_impossible, &result.skipped_sentences);
    if (cfg.convergence_tol > 0.0 && !result.log_likelihood.empty()) {
      const double prev = result.log_likelihood.back();
      if (std::abs(stats.log_likelihood - prev) <= cfg.convergence_tol * std::abs(prev)) {
        result.log_likelihood.push_back(stats.log_likelihood);
        break;
      }
    }
    result.log_likelihood.push_back(stats.log_likelihood);
    m = reestimate(m, stats, cfg.smoothing_floor);
  }
  result.model = std::move(m);
  return result;
}

inline TrainingResult baum_welch(HmmModel m, const std::vector<std::vector<ClassId>>& corpus,
                                 const TrainingConfig& cfg) {
  return baum_welch(std::move(m), detail::SentencesRef<ClassId>{&corpus}, cfg);
}

// ---------------------------------------------------------------------------
// Counted estimation from a gold-tagged corpus.

struct TaggedObservation {
  TagId tag;
  ClassId cls;
  bool operator==(const TaggedObservation&) const = default;
};

template <typename C>
concept TaggedCorpus = requires(const C& c, void (*fn)(std::span<const TaggedObservation>)) {
  c.for_each(fn);
};

struct TaggedSentences {
  std::vector<std::vector<TaggedObservation>> sentences;

  template <typename Fn>
  void for_each(Fn&& fn) const {
    for (const auto& s : sentences) fn(std::span<const TaggedObservation>(s));
  }
};

// Relative-frequency estimates with `floor` added to every structurally
// allowed cell. Rows with no observations (and floor 0) fall back to uniform
// over the allowed cells.
template <TaggedCorpus Corpus>
HmmModel counted_init(const Corpus& tagged, const TagSet& ts, const ClassStore& classes,
                      double floor) {
  if (floor < 0.0) throw ConfigError("smoothing floor must be non-negative");
  HmmModel m;
  const auto n = ts.size();
  const auto k = classes.size();
  m.tag_labels = ts.labels();
  m.class_members = classes.all();
  m.transition_zero_mask = Matrix<std::uint8_t>(n, n, 0);

  std::vector<double> init(n, 0.0);
  Matrix<double> trans(n, n, 0.0), emit(n, k, 0.0);
  std::size_t s_index = 0;
  tagged.for_each([&](std::span<const TaggedObservation> sentence) {
    for (std::size_t t = 0; t < sentence.size(); ++t) {
      const auto& obs = sentence[t];
      if (obs.tag >= n || obs.cls >= k) {
        throw DataError("sentence " + std::to_string(s_index) + ", token " + std::to_string(t) +
                        ": tag or class id out of range");
      }
      if (!classes.contains(obs.cls, obs.tag)) {
        throw DataError("sentence " + std::to_string(s_index) + ", token " + std::to_string(t) +
                        ": gold tag " + ts.label(obs.tag) + " is not in the token's class " +
                        class_signature(classes.members(obs.cls), ts));
      }
      if (t == 0) init[obs.tag] += 1.0;
      if (t > 0) trans(sentence[t - 1].tag, obs.tag) += 1.0;
      emit(obs.tag, obs.cls) += 1.0;
    }
    ++s_index;
  });

  auto finish = [](std::span<double> row, auto allowed) {
    double total = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) total += row[j];
    if (total <= 0.0) {
      for (std::size_t j = 0; j < row.size(); ++j) row[j] = allowed(j) ? 1.0 : 0.0;
    }
    detail::normalize(row);
  };
  auto all = [](std::size_t) { return true; };

  for (auto& v : init) v += floor;
  finish(init, all);
  m.initial = init;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& v : trans.row(i)) v += floor;
    finish(trans.row(i), all);
    for (std::size_t c = 0; c < k; ++c) {
      if (classes.contains(static_cast<ClassId>(c), static_cast<TagId>(i))) emit(i, c) += floor;
    }
    finish(emit.row(i), [&](std::size_t c) {
      return classes.contains(static_cast<ClassId>(c), static_cast<TagId>(i));
    });
  }
  m.transition = std::move(trans);
  m.emission = std::move(emit);
  return m;
}

inline HmmModel counted_init(const std::vector<std::vector<TaggedObservation>>& tagged,
                             const TagSet& ts, const ClassStore& classes, double floor) {
  return counted_init(detail::SentencesRef<TaggedObservation>{&tagged}, ts, classes, floor);
}

// ---------------------------------------------------------------------------
// Parameter-production regimes.

enum class Regime {
  bias,          // biased uniform start + Baum-Welch
  counted,       // counted initialization + Baum-Welch (1 iteration by default)
  counted_only,  // counted estimation, no re-estimation
};

inline std::size_t default_iterations(Regime r) {
  switch (r) {
    case Regime::bias:
      return 20;
    case Regime::counted:
      return 1;
    case Regime::counted_only:
      return 0;
  }
  return 0;
}

// Regime A: uniform start, biases applied, then `cfg.iterations` rounds.
template <ClassCorpus Corpus>
TrainingResult train_bias_regime(const TagSet& ts, const ClassStore& classes, const BiasSet& biases,
                                 const Corpus& untagged, const TrainingConfig& cfg) {
  return baum_welch(apply_biases(uniform_model(ts, classes), biases), untagged, cfg);
}

// Regime B: counted initialization re-estimated on untagged text.
template <TaggedCorpus Tagged, ClassCorpus Corpus>
TrainingResult train_counted_regime(const TagSet& ts, const ClassStore& classes,
                                    const Tagged& tagged, const Corpus& untagged,
                                    const TrainingConfig& cfg) {
  return baum_welch(counted_init(tagged, ts, classes, cfg.smoothing_floor), untagged, cfg);
}

// Regime C: counted estimation only.
template <TaggedCorpus Tagged>
TrainingResult train_counted_only(const TagSet& ts, const ClassStore& classes,
                                  const Tagged& tagged, double floor) {
  return TrainingResult{counted_init(tagged, ts, classes, floor), {}, 0};
}

}  // namespace xhmm
