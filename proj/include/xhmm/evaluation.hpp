#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "xhmm/error.hpp"
#include "xhmm/lexicon.hpp"
#include "xhmm/tagset.hpp"
#include "xhmm/text.hpp"

namespace xhmm {

using TagSequences = std::vector<std::vector<TagId>>;
using ClassSequences = std::vector<std::vector<ClassId>>;

namespace detail {

inline void check_aligned(const TagSequences& pred, const TagSequences& gold) {
  if (pred.size() != gold.size()) {
    throw AlignmentError(std::min(pred.size(), gold.size()),
                         "sentence counts differ (" + std::to_string(pred.size()) + " vs " +
                             std::to_string(gold.size()) + ")");
  }
  for (std::size_t s = 0; s < pred.size(); ++s) {
    if (pred[s].size() != gold[s].size()) {
      throw AlignmentError(s, "token counts differ (" + std::to_string(pred[s].size()) + " vs " +
                                  std::to_string(gold[s].size()) + ")");
    }
  }
}

}  // namespace detail

// Fraction of tokens whose predicted tag differs from gold.
inline double error_rate(const TagSequences& pred, const TagSequences& gold) {
  detail::check_aligned(pred, gold);
  std::size_t total = 0, wrong = 0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    for (std::size_t t = 0; t < pred[s].size(); ++t) {
      ++total;
      wrong += pred[s][t] != gold[s][t];
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(total);
}

// Possible tag assignments per token.
inline double ambiguity_rate(std::span<const ClassId> tokens, const ClassStore& classes) {
  if (tokens.empty()) throw DataError("ambiguity rate of an empty text is undefined");
  std::size_t assignments = 0;
  for (auto c : tokens) assignments += classes.class_size(c);
  return static_cast<double>(assignments) / static_cast<double>(tokens.size());
}

inline std::vector<ClassId> flatten(const ClassSequences& seqs) {
  std::vector<ClassId> out;
  for (const auto& s : seqs) out.insert(out.end(), s.begin(), s.end());
  return out;
}

struct ClassFrequencyEntry {
  ClassId cls;
  std::vector<TagId> members;
  std::size_t count;
  double f_ec;  // count / all tokens
};

// Relative frequency of each ambiguous class over all tokens (unambiguous
// tokens count in the denominator). Descending frequency, ties by class id.
inline std::vector<ClassFrequencyEntry> class_frequency_table(std::span<const ClassId> tokens,
                                                              const ClassStore& classes,
                                                              std::size_t top_k) {
  if (tokens.empty()) throw DataError("class frequency table of an empty text is undefined");
  std::map<ClassId, std::size_t> counts;
  for (auto c : tokens) {
    if (classes.ambiguous(c)) ++counts[c];
  }
  std::vector<ClassFrequencyEntry> out;
  for (auto [c, n] : counts) {
    out.push_back(ClassFrequencyEntry{c, classes.members(c), n,
                                      static_cast<double>(n) / static_cast<double>(tokens.size())});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.count > b.count; });
  if (out.size() > top_k) out.resize(top_k);
  return out;
}

struct ErrorTypeEntry {
  TagId predicted;
  std::optional<std::size_t> class_size;  // absent when the lexicon offered one choice
  TagId gold;
  std::size_t count;
  double rel_freq;  // count / all mismatches
};

// Mismatches grouped by (predicted, class size, gold). Descending frequency,
// ties by (predicted id, class size, gold id).
inline std::vector<ErrorTypeEntry> error_type_table(const TagSequences& pred, const TagSequences& gold,
                                                    const ClassSequences& token_classes,
                                                    const ClassStore& classes, std::size_t top_k) {
  detail::check_aligned(pred, gold);
  detail::check_aligned(pred, [&] {
    TagSequences shape;
    for (const auto& s : token_classes) shape.emplace_back(s.size());
    return shape;
  }());
  using Key = std::tuple<TagId, std::size_t, TagId>;  // class size 0 = single choice
  std::map<Key, std::size_t> counts;
  std::size_t total = 0;
  for (std::size_t s = 0; s < pred.size(); ++s) {
    for (std::size_t t = 0; t < pred[s].size(); ++t) {
      if (pred[s][t] == gold[s][t]) continue;
      const auto size = classes.class_size(token_classes[s][t]);
      ++counts[Key{pred[s][t], size > 1 ? size : 0, gold[s][t]}];
      ++total;
    }
  }
  std::vector<ErrorTypeEntry> out;
  for (const auto& [key, n] : counts) {
    const auto [p, size, g] = key;
    out.push_back(ErrorTypeEntry{p, size ? std::optional<std::size_t>(size) : std::nullopt, g, n,
                                 static_cast<double>(n) / static_cast<double>(total)});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.count > b.count; });
  if (out.size() > top_k) out.resize(top_k);
  return out;
}

// ".0772 ART PROS PRELS"
inline std::string format_class_frequency_row(const ClassFrequencyEntry& e, const TagSet& ts) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", e.f_ec);
  std::string s = buf;
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  return s + " " + class_signature(e.members, ts, ' ');
}

// "0.0900 VINF/2 VFIN"
inline std::string format_error_type_row(const ErrorTypeEntry& e, const TagSet& ts) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", e.rel_freq);
  std::string s = std::string(buf) + " " + ts.label(e.predicted);
  if (e.class_size) s += "/" + std::to_string(*e.class_size);
  return s + " " + ts.label(e.gold);
}

// ---------------------------------------------------------------------------
// Major word classes and the intra/cross-class ambiguity split.

enum class MajorClass { noun, verb, adjective, adverb, closed };
enum class AmbiguityKind { intra_class, cross_class };

inline const char* to_string(MajorClass m) {
  switch (m) {
    case MajorClass::noun: return "noun";
    case MajorClass::verb: return "verb";
    case MajorClass::adjective: return "adjective";
    case MajorClass::adverb: return "adverb";
    case MajorClass::closed: return "closed";
  }
  return "?";
}

inline const char* to_string(AmbiguityKind k) {
  return k == AmbiguityKind::intra_class ? "intra-class" : "cross-class";
}

class MajorClassMap {
 public:
  void set(TagId tag, MajorClass m) {
    if (tag >= map_.size()) map_.resize(tag + 1);
    map_[tag] = m;
  }

  std::optional<MajorClass> get(TagId tag) const {
    return tag < map_.size() ? map_[tag] : std::nullopt;
  }

  std::size_t mapped() const {
    return static_cast<std::size_t>(std::count_if(map_.begin(), map_.end(), [](auto& m) { return m.has_value(); }));
  }

 private:
  std::vector<std::optional<MajorClass>> map_;
};

// Lines `LABEL<TAB>noun|verb|adjective|adverb|closed`; must cover every tag.
inline MajorClassMap load_major_class_map(std::string_view source, const TagSet& ts) {
  MajorClassMap map;
  text::LineCursor cursor(source);
  std::string_view line;
  while (cursor.next(line)) {
    if (text::trim(line).empty() || line.front() == '#') continue;
    const auto f = text::split_ws(line);
    if (f.size() != 2) throw ConfigError(at_line(cursor.line_no(), "expected 'LABEL<TAB>major'"));
    auto tag = ts.id(f[0]);
    if (!tag) throw ConfigError(at_line(cursor.line_no(), "unknown tag '" + std::string(f[0]) + "'"));
    static const std::pair<std::string_view, MajorClass> names[] = {
        {"noun", MajorClass::noun}, {"verb", MajorClass::verb},
        {"adjective", MajorClass::adjective}, {"adverb", MajorClass::adverb},
        {"closed", MajorClass::closed}};
    auto it = std::find_if(std::begin(names), std::end(names), [&](auto& p) { return p.first == f[1]; });
    if (it == std::end(names)) {
      throw ConfigError(at_line(cursor.line_no(), "unknown major class '" + std::string(f[1]) + "'"));
    }
    map.set(*tag, it->second);
  }
  for (const auto& t : ts.tags()) {
    if (!map.get(t.id)) throw ConfigError("major class map does not cover tag '" + t.label + "'");
  }
  return map;
}

inline AmbiguityKind ambiguity_kind(std::span<const TagId> members, const MajorClassMap& map) {
  if (members.size() < 2) throw DataError("ambiguity kind is only defined for ambiguous classes");
  std::optional<MajorClass> first;
  bool same = true;
  for (auto t : members) {
    auto m = map.get(t);
    if (!m) throw ConfigError("tag id " + std::to_string(t) + " has no major class");
    if (!first) {
      first = m;
    } else if (*m != *first) {
      same = false;
    }
  }
  return same ? AmbiguityKind::intra_class : AmbiguityKind::cross_class;
}

struct IntraCrossSplit {
  std::size_t intra_tokens = 0;
  std::size_t cross_tokens = 0;

  double intra_share() const {
    const auto n = intra_tokens + cross_tokens;
    return n ? static_cast<double>(intra_tokens) / static_cast<double>(n) : 0.0;
  }
  double cross_share() const {
    const auto n = intra_tokens + cross_tokens;
    return n ? static_cast<double>(cross_tokens) / static_cast<double>(n) : 0.0;
  }
};

inline IntraCrossSplit intra_cross_split(std::span<const ClassId> tokens, const ClassStore& classes,
                                         const MajorClassMap& map) {
  IntraCrossSplit split;
  for (auto c : tokens) {
    if (!classes.ambiguous(c)) continue;
    if (ambiguity_kind(classes.members(c), map) == AmbiguityKind::intra_class) {
      ++split.intra_tokens;
    } else {
      ++split.cross_tokens;
    }
  }
  return split;
}

// ---------------------------------------------------------------------------
// Aggregate report.

struct ProfileReport {
  std::size_t tokens = 0;
  std::size_t mismatches = 0;
  double error_rate = 0.0;
  double ambiguity_rate = 0.0;
  std::vector<ClassFrequencyEntry> class_frequencies;
  std::vector<ErrorTypeEntry> error_types;
  IntraCrossSplit split;
};

inline ProfileReport profile_report(const TagSequences& pred, const TagSequences& gold,
                                    const ClassSequences& token_classes, const ClassStore& classes,
                                    const MajorClassMap& map, std::size_t top_k) {
  ProfileReport r;
  r.error_rate = error_rate(pred, gold);
  const auto flat = flatten(token_classes);
  r.tokens = flat.size();
  r.ambiguity_rate = ambiguity_rate(flat, classes);
  r.class_frequencies = class_frequency_table(flat, classes, top_k);
  r.error_types = error_type_table(pred, gold, token_classes, classes, top_k);
  for (std::size_t s = 0; s < pred.size(); ++s) {
    for (std::size_t t = 0; t < pred[s].size(); ++t) r.mismatches += pred[s][t] != gold[s][t];
  }
  r.split = intra_cross_split(flat, classes, map);
  return r;
}

inline std::string render_text(const ProfileReport& r, const TagSet& ts) {
  char buf[128];
  std::string out;
  std::snprintf(buf, sizeof buf, "tokens %zu\nmismatches %zu\n", r.tokens, r.mismatches);
  out += buf;
  std::snprintf(buf, sizeof buf, "error rate %.4f\nambiguity rate %.4f\n", r.error_rate, r.ambiguity_rate);
  out += buf;
  out += "\nf(ec)  elements of equiv. class\n";
  for (const auto& e : r.class_frequencies) out += format_class_frequency_row(e, ts) + "\n";
  out += "\nRel.Freq  HMM  Human\n";
  for (const auto& e : r.error_types) out += format_error_type_row(e, ts) + "\n";
  std::snprintf(buf, sizeof buf, "\nambiguous tokens: intra-class %.4f, cross-class %.4f\n",
                r.split.intra_share(), r.split.cross_share());
  out += buf;
  return out;
}

inline nlohmann::json to_json(const ProfileReport& r, const TagSet& ts) {
  nlohmann::json j;
  j["tokens"] = r.tokens;
  j["mismatches"] = r.mismatches;
  j["error_rate"] = r.error_rate;
  j["ambiguity_rate"] = r.ambiguity_rate;
  j["class_frequencies"] = nlohmann::json::array();
  for (const auto& e : r.class_frequencies) {
    nlohmann::json members = nlohmann::json::array();
    for (auto t : e.members) members.push_back(ts.label(t));
    j["class_frequencies"].push_back({{"members", members}, {"count", e.count}, {"f_ec", e.f_ec}});
  }
  j["error_types"] = nlohmann::json::array();
  for (const auto& e : r.error_types) {
    nlohmann::json row = {{"predicted", ts.label(e.predicted)},
                          {"gold", ts.label(e.gold)},
                          {"count", e.count},
                          {"rel_freq", e.rel_freq}};
    row["class_size"] = e.class_size ? nlohmann::json(*e.class_size) : nlohmann::json(nullptr);
    j["error_types"].push_back(row);
  }
  j["intra_cross_split"] = {{"intra_tokens", r.split.intra_tokens},
                            {"cross_tokens", r.split.cross_tokens},
                            {"intra_share", r.split.intra_share()},
                            {"cross_share", r.split.cross_share()}};
  return j;
}

}  // namespace xhmm
