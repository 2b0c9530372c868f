#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xhmm/error.hpp"
#include "xhmm/lexicon.hpp"
#include "xhmm/matrix.hpp"
#include "xhmm/model.hpp"

namespace xhmm {

struct Decoding {
  std::vector<TagId> tags;
  double log_prob = 0.0;
};

// Scores closer than this (relative) count as tied, so rounding noise in the
// accumulated sums cannot override the tie-break.
inline constexpr double kTieTolerance = 1e-12;

inline bool ties_with(double s, double best) {
  return s >= best - kTieTolerance * std::max(1.0, std::abs(best));
}

// Viterbi decoder over a model's log-parameters. Hard zeros become -inf and
// never win a max. Ties go to the lowest tag id at every cell and at the
// final position.
class ViterbiDecoder {
 public:
  explicit ViterbiDecoder(const HmmModel& m)
      : model_(&m),
        log_initial_(m.initial.size()),
        log_transition_(m.n_tags(), m.n_tags()),
        log_emission_(m.n_tags(), m.n_classes()) {
    for (std::size_t i = 0; i < m.initial.size(); ++i) log_initial_[i] = safe_log(m.initial[i]);
    auto& lt = log_transition_.data();
    for (std::size_t i = 0; i < lt.size(); ++i) lt[i] = safe_log(m.transition.data()[i]);
    auto& le = log_emission_.data();
    for (std::size_t i = 0; i < le.size(); ++i) le[i] = safe_log(m.emission.data()[i]);
  }

  Decoding decode(std::span<const ClassId> sentence) const {
    const auto& m = *model_;
    const std::size_t len = sentence.size();
    if (len == 0) throw DataError("cannot decode an empty sentence");
    for (std::size_t t = 0; t < len; ++t) {
      if (sentence[t] >= m.n_classes()) {
        throw DataError("position " + std::to_string(t) + ": class id unknown to the model");
      }
    }
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();

    std::vector<std::size_t> offset(len + 1, 0);
    for (std::size_t t = 0; t < len; ++t) offset[t + 1] = offset[t] + m.class_members[sentence[t]].size();
    std::vector<double> delta(offset[len], kNegInf);
    std::vector<std::uint32_t> back(offset[len], 0);  // index into previous member list

    auto states = [&](std::size_t t) -> const std::vector<TagId>& { return m.class_members[sentence[t]]; };

    bool alive = false;
    const auto& s0 = states(0);
    for (std::size_t a = 0; a < s0.size(); ++a) {
      delta[a] = log_initial_[s0[a]] + log_emission_(s0[a], sentence[0]);
      alive |= delta[a] > kNegInf;
    }
    if (!alive) throw ImpossibleSequence(0);

    for (std::size_t t = 1; t < len; ++t) {
      const auto& prev = states(t - 1);
      const auto& cur = states(t);
      const double* dp = &delta[offset[t - 1]];
      alive = false;
      for (std::size_t b = 0; b < cur.size(); ++b) {
        const TagId j = cur[b];
        double best = kNegInf;
        for (std::size_t a = 0; a < prev.size(); ++a) best = std::max(best, dp[a] + log_transition_(prev[a], j));
        std::uint32_t arg = 0;
        double chosen = kNegInf;
        if (best > kNegInf) {
          while (!ties_with(dp[arg] + log_transition_(prev[arg], j), best)) ++arg;
          chosen = dp[arg] + log_transition_(prev[arg], j);
        }
        delta[offset[t] + b] = chosen + log_emission_(j, sentence[t]);
        back[offset[t] + b] = arg;
        alive |= delta[offset[t] + b] > kNegInf;
      }
      if (!alive) throw ImpossibleSequence(t);
    }

    const auto& last = states(len - 1);
    const double* dl = &delta[offset[len - 1]];
    const double best = *std::max_element(dl, dl + last.size());
    std::size_t arg = 0;
    while (!ties_with(dl[arg], best)) ++arg;
    Decoding d;
    d.log_prob = dl[arg];
    d.tags.resize(len);
    for (std::size_t t = len; t-- > 0;) {
      d.tags[t] = states(t)[arg];
      if (t > 0) arg = back[offset[t] + arg];
    }
    return d;
  }

 private:
  static double safe_log(double p) {
    return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
  }

  const HmmModel* model_;
  std::vector<double> log_initial_;
  Matrix<double> log_transition_;
  Matrix<double> log_emission_;
};

inline Decoding viterbi(const HmmModel& m, std::span<const ClassId> sentence) {
  return ViterbiDecoder(m).decode(sentence);
}

// Tags and the lexicon-side class ids used to produce them.
struct TaggedText {
  std::vector<TagId> tags;
  std::vector<ClassId> classes;
};

// End-to-end tagging: classify each token, then decode. Lexicon class ids are
// translated to model class ids by member signature, so a model only needs to
// share the lexicon's class inventory, not its interning order.
class Tagger {
 public:
  Tagger(const HmmModel& m, const Lexicon& lex, const GuesserRules& rules)
      : decoder_(m), lexicon_(&lex), rules_(&rules) {
    const auto& store = lex.classes();
    to_model_.reserve(store.size());
    for (std::size_t c = 0; c < store.size(); ++c) {
      to_model_.push_back(m.find_class(store.members(static_cast<ClassId>(c))));
    }
  }

  ClassId classify(std::string_view word) const { return xhmm::classify(*lexicon_, *rules_, word); }

  template <typename Tokens>
  TaggedText tag(const Tokens& tokens) const {
    TaggedText out;
    std::vector<ClassId> model_classes;
    for (const auto& tok : tokens) {
      const std::string_view w(tok);
      if (w.empty()) throw DataError("empty token");
      const ClassId c = classify(w);
      if (c >= to_model_.size() || !to_model_[c]) {
        throw DataError("token '" + std::string(w) + "': its equivalence class is unknown to the model");
      }
      out.classes.push_back(c);
      model_classes.push_back(*to_model_[c]);
    }
    if (out.classes.empty()) throw DataError("cannot tag an empty sentence");
    out.tags = decoder_.decode(model_classes).tags;
    return out;
  }

 private:
  ViterbiDecoder decoder_;
  const Lexicon* lexicon_;
  const GuesserRules* rules_;
  std::vector<std::optional<ClassId>> to_model_;
};

template <typename Tokens>
TaggedText tag_text(const HmmModel& m, const Lexicon& lex, const GuesserRules& rules,
                    const Tokens& tokens) {
  return Tagger(m, lex, rules).tag(tokens);
}

}  // namespace xhmm
