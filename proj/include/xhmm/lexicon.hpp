#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xhmm/error.hpp"
#include "xhmm/tagset.hpp"
#include "xhmm/text.hpp"

namespace xhmm {

using ClassId = std::uint32_t;

// Interner for equivalence classes: sorted, duplicate-free tag id lists.
// Identical member lists always receive the same id; ids are dense and
// assigned in first-seen order.
class ClassStore {
 public:
  ClassId intern(std::vector<TagId> members) {
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    if (members.empty()) throw ConfigError("equivalence class must not be empty");
    auto it = index_.find(members);
    if (it != index_.end()) return it->second;
    const auto id = static_cast<ClassId>(members_.size());
    index_.emplace(members, id);
    members_.push_back(std::move(members));
    return id;
  }

  std::optional<ClassId> find(std::vector<TagId> members) const {
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());
    auto it = index_.find(members);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const std::vector<TagId>& members(ClassId id) const { return members_.at(id); }
  std::size_t class_size(ClassId id) const { return members_.at(id).size(); }
  bool ambiguous(ClassId id) const { return class_size(id) > 1; }
  std::size_t size() const { return members_.size(); }
  const std::vector<std::vector<TagId>>& all() const { return members_; }

  bool contains(ClassId id, TagId tag) const {
    const auto& m = members(id);
    return std::binary_search(m.begin(), m.end(), tag);
  }

 private:
  std::vector<std::vector<TagId>> members_;
  std::map<std::vector<TagId>, ClassId> index_;
};

// "ART+PROS+PRELS" style signature, members in id order.
inline std::string class_signature(std::span<const TagId> members, const TagSet& ts,
                                   char sep = '+') {
  std::string out;
  for (std::size_t i = 0; i < members.size(); ++i) {
    if (i) out += sep;
    out += ts.label(members[i]);
  }
  return out;
}

inline std::vector<TagId> parse_signature(std::string_view sig, const TagSet& ts) {
  std::vector<TagId> members;
  for (auto part : text::split(sig, '+')) {
    auto id = ts.id(part);
    if (!id) throw ConfigError("unknown tag '" + std::string(part) + "' in class signature '" +
                               std::string(sig) + "'");
    members.push_back(*id);
  }
  return members;
}

class Lexicon {
 public:
  std::optional<ClassId> lookup(std::string_view word) const {
    if (word.empty()) return std::nullopt;
    auto it = entries_.find(std::string(word));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  const ClassStore& classes() const { return classes_; }
  // Guesser rules intern their classes here so that lexicon and guesser
  // share one class inventory.
  ClassStore& classes() { return classes_; }
  std::size_t size() const { return entries_.size(); }

  // Adds tags to a word's class (set union with any existing entry).
  void add(std::string word, std::span<const TagId> tags) {
    std::vector<TagId> members(tags.begin(), tags.end());
    auto it = entries_.find(word);
    if (it != entries_.end()) {
      const auto& old = classes_.members(it->second);
      members.insert(members.end(), old.begin(), old.end());
      it->second = classes_.intern(std::move(members));
    } else {
      const auto id = classes_.intern(std::move(members));
      entries_.emplace(std::move(word), id);
    }
  }

 private:
  std::unordered_map<std::string, ClassId> entries_;
  ClassStore classes_;
};

// Lines: `wordform<TAB>TAG1 TAG2 ...`; `#` comment lines.
inline Lexicon load_lexicon(std::string_view source, const TagSet& ts) {
  Lexicon lex;
  text::LineCursor cursor(source);
  std::string_view line;
  std::vector<TagId> tags;
  while (cursor.next(line)) {
    if (text::trim(line).empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) {
      throw FormatError(at_line(cursor.line_no(), "expected 'wordform<TAB>TAGS'"));
    }
    tags.clear();
    for (auto label : text::split_ws(line.substr(tab + 1))) {
      auto id = ts.id(label);
      if (!id) {
        throw ConfigError(at_line(cursor.line_no(), "unknown tag '" + std::string(label) + "'"));
      }
      tags.push_back(*id);
    }
    if (tags.empty()) throw ConfigError(at_line(cursor.line_no(), "word has no tags"));
    lex.add(std::string(line.substr(0, tab)), tags);
  }
  return lex;
}

enum class CaseCondition { upper, lower, any };
enum class PatternKind { numeric, abbreviation, symbol };

struct SuffixRule {
  std::string suffix;
  CaseCondition when;
  ClassId cls;
};

struct PatternRule {
  PatternKind kind;
  ClassId cls;
};

inline bool initial_is_upper(std::string_view word) {
  return text::is_upper(text::first_code_point(word));
}

inline bool matches_pattern(PatternKind kind, std::string_view w) {
  switch (kind) {
    case PatternKind::numeric:
      // 1997, 3,5, 6., 12:30, 1992/93
      if (w.empty() || !text::is_ascii_digit(w.front())) return false;
      return std::all_of(w.begin(), w.end(), [](char c) {
        return text::is_ascii_digit(c) || c == '.' || c == ',' || c == ':' || c == '-' || c == '/';
      });
    case PatternKind::abbreviation: {
      // z.B., Dr., usw.
      if (w.size() < 2 || w.back() != '.') return false;
      bool letter = false;
      for (char c : w) {
        if (text::is_letter_byte(c)) {
          letter = true;
        } else if (c != '.') {
          return false;
        }
      }
      return letter;
    }
    case PatternKind::symbol:
      return !w.empty() && std::none_of(w.begin(), w.end(), [](char c) {
        return text::is_letter_byte(c) || text::is_ascii_digit(c);
      });
  }
  return false;
}

// Unknown-word class guesser: surface patterns, then the longest suffix whose
// case condition holds, then a default chosen by the case of the first letter.
class GuesserRules {
 public:
  GuesserRules(std::vector<SuffixRule> suffixes, std::vector<PatternRule> patterns,
               ClassId default_upper, ClassId default_lower)
      : suffixes_(std::move(suffixes)),
        patterns_(std::move(patterns)),
        default_upper_(default_upper),
        default_lower_(default_lower) {
    // Longest first; equal lengths keep file order.
    std::stable_sort(suffixes_.begin(), suffixes_.end(), [](const auto& a, const auto& b) {
      return a.suffix.size() > b.suffix.size();
    });
    constexpr PatternKind order[] = {PatternKind::numeric, PatternKind::abbreviation,
                                     PatternKind::symbol};
    std::stable_sort(patterns_.begin(), patterns_.end(), [&](const auto& a, const auto& b) {
      auto rank = [&](PatternKind k) { return std::find(std::begin(order), std::end(order), k) - std::begin(order); };
      return rank(a.kind) < rank(b.kind);
    });
  }

  ClassId guess(std::string_view word) const {
    for (const auto& p : patterns_) {
      if (matches_pattern(p.kind, word)) return p.cls;
    }
    const bool upper = initial_is_upper(word);
    for (const auto& r : suffixes_) {
      if (word.size() <= r.suffix.size()) continue;
      if (r.when == CaseCondition::upper && !upper) continue;
      if (r.when == CaseCondition::lower && upper) continue;
      if (word.substr(word.size() - r.suffix.size()) == r.suffix) return r.cls;
    }
    return upper ? default_upper_ : default_lower_;
  }

  const std::vector<SuffixRule>& suffix_rules() const { return suffixes_; }
  const std::vector<PatternRule>& pattern_rules() const { return patterns_; }
  ClassId default_upper() const { return default_upper_; }
  ClassId default_lower() const { return default_lower_; }

 private:
  std::vector<SuffixRule> suffixes_;
  std::vector<PatternRule> patterns_;
  ClassId default_upper_;
  ClassId default_lower_;
};

// Rule file lines:
//   SUFFIX <suffix> <U|L|A> <TAG...>
//   PATTERN <numeric|abbrev|symbol> <TAG...>
//   DEFAULT <U|L> <TAG...>
// Both defaults are mandatory so that guessing is total.
inline GuesserRules load_guesser_rules(std::string_view source, const TagSet& ts,
                                       ClassStore& classes) {
  std::vector<SuffixRule> suffixes;
  std::vector<PatternRule> patterns;
  std::optional<ClassId> upper, lower;

  text::LineCursor cursor(source);
  std::string_view line;
  while (cursor.next(line)) {
    if (text::trim(line).empty() || line.front() == '#') continue;
    const auto f = text::split_ws(line);
    const auto line_no = cursor.line_no();
    auto fail = [&](const std::string& msg) { throw ConfigError(at_line(line_no, msg)); };
    auto intern_from = [&](std::size_t first) {
      if (f.size() <= first) fail("rule has no tags");
      std::vector<TagId> tags;
      for (std::size_t i = first; i < f.size(); ++i) {
        auto id = ts.id(f[i]);
        if (!id) fail("unknown tag '" + std::string(f[i]) + "'");
        tags.push_back(*id);
      }
      return classes.intern(std::move(tags));
    };

    if (f[0] == "SUFFIX") {
      if (f.size() < 4) fail("expected 'SUFFIX <suffix> <U|L|A> <TAG...>'");
      CaseCondition when;
      if (f[2] == "U") {
        when = CaseCondition::upper;
      } else if (f[2] == "L") {
        when = CaseCondition::lower;
      } else if (f[2] == "A") {
        when = CaseCondition::any;
      } else {
        fail("case condition must be U, L or A");
      }
      suffixes.push_back(SuffixRule{std::string(f[1]), when, intern_from(3)});
    } else if (f[0] == "PATTERN") {
      if (f.size() < 3) fail("expected 'PATTERN <kind> <TAG...>'");
      PatternKind kind;
      if (f[1] == "numeric") {
        kind = PatternKind::numeric;
      } else if (f[1] == "abbrev") {
        kind = PatternKind::abbreviation;
      } else if (f[1] == "symbol") {
        kind = PatternKind::symbol;
      } else {
        fail("pattern kind must be numeric, abbrev or symbol");
      }
      for (const auto& p : patterns) {
        if (p.kind == kind) fail("duplicate pattern rule '" + std::string(f[1]) + "'");
      }
      patterns.push_back(PatternRule{kind, intern_from(2)});
    } else if (f[0] == "DEFAULT") {
      if (f.size() < 3 || (f[1] != "U" && f[1] != "L")) fail("expected 'DEFAULT <U|L> <TAG...>'");
      auto& slot = f[1] == "U" ? upper : lower;
      if (slot) fail("duplicate DEFAULT " + std::string(f[1]));
      slot = intern_from(2);
    } else {
      fail("unknown rule keyword '" + std::string(f[0]) + "'");
    }
  }
  if (!upper || !lower) throw ConfigError("guesser rules need both 'DEFAULT U' and 'DEFAULT L'");
  return GuesserRules(std::move(suffixes), std::move(patterns), *upper, *lower);
}

inline ClassId guess_class(const GuesserRules& rules, std::string_view word) {
  return rules.guess(word);
}

// Lexicon lookup with guesser fallback. Total for non-empty words.
inline ClassId classify(const Lexicon& lex, const GuesserRules& rules, std::string_view word) {
  if (auto found = lex.lookup(word)) return *found;
  return rules.guess(word);
}

}  // namespace xhmm
