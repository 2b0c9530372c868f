#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "xhmm/error.hpp"
#include "xhmm/lexicon.hpp"
#include "xhmm/model.hpp"
#include "xhmm/tagset.hpp"
#include "xhmm/training.hpp"

namespace xhmm::synth {

struct SynthConfig {
  std::size_t n_tags = 10;
  std::size_t n_classes = 30;
  std::size_t max_class_size = 4;
  // Dirichlet concentration of each transition row; small values give a few
  // dominant successors per tag.
  double transition_concentration = 0.3;
  // When set, emissions are tilted so the expected token ambiguity rate hits
  // this value.
  std::optional<double> ambiguity_target;
  std::size_t min_sentence = 5;
  std::size_t max_sentence = 25;
};

// A generator HMM together with its tag set and class inventory. Class c is
// realized in text by the word form "w<c>".
struct SyntheticSetup {
  TagSet tags;
  ClassStore classes;
  HmmModel generator;
};

inline std::string word_for_class(ClassId c) { return "w" + std::to_string(c); }

namespace detail {

inline std::vector<double> dirichlet(std::size_t n, double alpha, std::mt19937_64& rng) {
  std::gamma_distribution<double> gamma(alpha, 1.0);
  std::vector<double> v(n);
  double total = 0.0;
  for (auto& x : v) {
    x = gamma(rng) + 1e-4;
    total += x;
  }
  for (auto& x : v) x /= total;
  return v;
}

// Average tag marginal over sentence positions, weighted by how often a
// position exists under the uniform sentence-length distribution.
inline std::vector<double> tag_occupancy(const HmmModel& m, const SynthConfig& cfg) {
  const auto n = m.n_tags();
  std::vector<double> marginal = m.initial, occ(n, 0.0), next(n);
  const double lengths = static_cast<double>(cfg.max_sentence - cfg.min_sentence + 1);
  for (std::size_t k = 0; k < cfg.max_sentence; ++k) {
    const double exists = k < cfg.min_sentence
                              ? 1.0
                              : static_cast<double>(cfg.max_sentence - k) / lengths;
    for (std::size_t i = 0; i < n; ++i) occ[i] += exists * marginal[i];
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) next[j] += marginal[i] * m.transition(i, j);
    }
    marginal = next;
  }
  xhmm::detail::normalize(occ);
  return occ;
}

}  // namespace detail

// Expected class size of an emitted token under the tag occupancy.
inline double expected_ambiguity(const HmmModel& m, const SynthConfig& cfg) {
  const auto occ = detail::tag_occupancy(m, cfg);
  double e = 0.0;
  for (std::size_t t = 0; t < m.n_tags(); ++t) {
    for (std::size_t c = 0; c < m.n_classes(); ++c) {
      e += occ[t] * m.emission(t, c) * static_cast<double>(m.class_members[c].size());
    }
  }
  return e;
}

inline SyntheticSetup make_synthetic_hmm(const SynthConfig& cfg, std::mt19937_64& rng) {
  const auto n = cfg.n_tags;
  const auto k = cfg.n_classes;
  if (n == 0) throw ConfigError("need at least one tag");
  if (k < n) throw ConfigError("need at least as many classes as tags (each tag needs a class)");
  if (cfg.min_sentence == 0 || cfg.max_sentence < cfg.min_sentence) {
    throw ConfigError("invalid sentence length range");
  }
  const auto max_size = std::min(cfg.max_class_size, n);
  if (k > n && max_size < 2) throw ConfigError("ambiguous classes need max class size >= 2");

  SyntheticSetup s;
  for (std::size_t t = 0; t < n; ++t) s.tags.add("T" + std::to_string(t), "synthetic tag");
  for (std::size_t t = 0; t < n; ++t) s.classes.intern({static_cast<TagId>(t)});

  std::vector<TagId> pool(n);
  std::iota(pool.begin(), pool.end(), TagId{0});
  std::size_t attempts = 0;
  while (s.classes.size() < k) {
    if (++attempts > 1000 * k) {
      throw ConfigError("cannot build " + std::to_string(k) + " distinct classes over " +
                        std::to_string(n) + " tags");
    }
    std::uniform_int_distribution<std::size_t> size_dist(2, max_size);
    const auto size = size_dist(rng);
    std::shuffle(pool.begin(), pool.end(), rng);
    std::vector<TagId> members(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(size));
    if (!s.classes.find(members)) s.classes.intern(std::move(members));
  }

  auto& m = s.generator;
  m.tag_labels = s.tags.labels();
  m.class_members = s.classes.all();
  m.initial = detail::dirichlet(n, 1.0, rng);
  m.transition = Matrix<double>(n, n);
  m.transition_zero_mask = Matrix<std::uint8_t>(n, n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = detail::dirichlet(n, cfg.transition_concentration, rng);
    std::copy(row.begin(), row.end(), m.transition.row(i).begin());
  }

  // Base emission weights; optionally tilted by exp(lambda * |class|).
  Matrix<double> base(n, k, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<std::size_t> support;
    for (std::size_t c = 0; c < k; ++c) {
      if (s.classes.contains(static_cast<ClassId>(c), static_cast<TagId>(t))) support.push_back(c);
    }
    auto w = detail::dirichlet(support.size(), 1.0, rng);
    for (std::size_t a = 0; a < support.size(); ++a) base(t, support[a]) = w[a];
  }
  auto tilt = [&](double lambda) {
    m.emission = Matrix<double>(n, k, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      for (std::size_t c = 0; c < k; ++c) {
        if (base(t, c) > 0.0) {
          m.emission(t, c) = base(t, c) * std::exp(lambda * static_cast<double>(m.class_members[c].size()));
        }
      }
      xhmm::detail::normalize(m.emission.row(t));
    }
  };
  tilt(0.0);
  if (cfg.ambiguity_target) {
    const double target = *cfg.ambiguity_target;
    double lo = -40.0, hi = 40.0;
    tilt(lo);
    const double min_rate = expected_ambiguity(m, cfg);
    tilt(hi);
    const double max_rate = expected_ambiguity(m, cfg);
    if (target < min_rate - 1e-6 || target > max_rate + 1e-6) {
      throw ConfigError("ambiguity target outside the reachable range for these classes");
    }
    for (int iter = 0; iter < 200; ++iter) {
      const double mid = 0.5 * (lo + hi);
      tilt(mid);
      (expected_ambiguity(m, cfg) < target ? lo : hi) = mid;
    }
    tilt(0.5 * (lo + hi));
  }
  return s;
}

// Samples exactly `tokens` tokens split into sentences with uniformly drawn
// lengths (the last sentence may be shorter).
inline std::vector<std::vector<TaggedObservation>> sample_corpus(const HmmModel& m, std::size_t tokens,
                                                                 const SynthConfig& cfg,
                                                                 std::mt19937_64& rng) {
  std::vector<std::vector<TaggedObservation>> out;
  std::uniform_int_distribution<std::size_t> len_dist(cfg.min_sentence, cfg.max_sentence);
  auto draw = [&](std::span<const double> p) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double x = u(rng);
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      acc += p[i];
      if (x < acc) return i;
    }
    // Rounding: fall back to the last positive cell.
    for (std::size_t i = p.size(); i-- > 0;) {
      if (p[i] > 0.0) return i;
    }
    return std::size_t{0};
  };
  std::size_t produced = 0;
  while (produced < tokens) {
    const auto len = std::min(len_dist(rng), tokens - produced);
    std::vector<TaggedObservation> sentence;
    TagId tag = static_cast<TagId>(draw(m.initial));
    for (std::size_t t = 0; t < len; ++t) {
      if (t > 0) tag = static_cast<TagId>(draw(m.transition.row(tag)));
      sentence.push_back(TaggedObservation{tag, static_cast<ClassId>(draw(m.emission.row(tag)))});
    }
    produced += len;
    out.push_back(std::move(sentence));
  }
  return out;
}

inline std::vector<std::vector<ClassId>> project_classes(
    const std::vector<std::vector<TaggedObservation>>& tagged) {
  std::vector<std::vector<ClassId>> out;
  out.reserve(tagged.size());
  for (const auto& s : tagged) {
    std::vector<ClassId> cls;
    cls.reserve(s.size());
    for (const auto& o : s) cls.push_back(o.cls);
    out.push_back(std::move(cls));
  }
  return out;
}

inline std::vector<std::vector<TagId>> project_tags(
    const std::vector<std::vector<TaggedObservation>>& tagged) {
  std::vector<std::vector<TagId>> out;
  out.reserve(tagged.size());
  for (const auto& s : tagged) {
    std::vector<TagId> tags;
    tags.reserve(s.size());
    for (const auto& o : s) tags.push_back(o.tag);
    out.push_back(std::move(tags));
  }
  return out;
}

// Hand-written-style biases read off a generator: the strongest successors
// of every tag and, for the most ambiguous classes, the tag the generator
// most often realizes them as.
inline BiasSet derive_biases(const HmmModel& gen, std::size_t successors_per_tag, double transition_weight,
                             std::size_t symbol_biases, double symbol_weight) {
  BiasSet b;
  const auto n = gen.n_tags();
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<TagId> order(n);
    std::iota(order.begin(), order.end(), TagId{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](TagId a, TagId c) { return gen.transition(i, a) > gen.transition(i, c); });
    for (std::size_t r = 0; r < std::min(successors_per_tag, n); ++r) {
      b.transition_biases.push_back(TransitionBias{static_cast<TagId>(i), order[r], transition_weight});
    }
  }
  // Symbol biases for the ambiguous classes in id order.
  for (std::size_t c = 0; c < gen.n_classes() && b.symbol_biases.size() < symbol_biases; ++c) {
    const auto& members = gen.class_members[c];
    if (members.size() < 2) continue;
    TagId best = members.front();
    for (auto t : members) {
      if (gen.emission(t, c) > gen.emission(best, c)) best = t;
    }
    b.symbol_biases.push_back(SymbolBias{members, best, symbol_weight});
  }
  return b;
}

inline std::string format_biases(const BiasSet& b, const std::vector<std::string>& labels) {
  std::string out;
  char buf[32];
  for (const auto& t : b.transition_biases) {
    std::snprintf(buf, sizeof buf, "%g", t.weight);
    out += "TRANS " + labels[t.from] + " " + labels[t.to] + " " + buf + "\n";
  }
  for (const auto& s : b.symbol_biases) {
    std::string sig;
    for (auto t : s.members) sig += (sig.empty() ? "" : "+") + labels[t];
    std::snprintf(buf, sizeof buf, "%g", s.weight);
    out += "SYM " + sig + " " + labels[s.preferred] + " " + buf + "\n";
  }
  return out;
}

}  // namespace xhmm::synth
