#pragma once

#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "xhmm/error.hpp"
#include "xhmm/tagset.hpp"
#include "xhmm/text.hpp"

namespace xhmm {

struct Token {
  std::string surface;
  std::size_t sentence_index = 0;
  std::size_t token_index = 0;

  bool operator==(const Token&) const = default;
};

using Sentence = std::vector<Token>;

struct TaggedToken {
  Token token;
  TagId gold = 0;

  bool operator==(const TaggedToken&) const = default;
};

using TaggedSentence = std::vector<TaggedToken>;

inline std::vector<std::string> surfaces(const Sentence& s) {
  std::vector<std::string> out;
  out.reserve(s.size());
  for (const auto& t : s) out.push_back(t.surface);
  return out;
}

inline std::vector<std::string> surfaces(const TaggedSentence& s) {
  std::vector<std::string> out;
  out.reserve(s.size());
  for (const auto& t : s) out.push_back(t.token.surface);
  return out;
}

namespace detail {

// getline with byte-offset tracking, CR stripping and UTF-8 validation.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(&in) {}

  bool next(std::string& line) {
    if (!std::getline(*in_, line)) return false;
    const auto start = offset_;
    offset_ += line.size() + 1;
    ++line_no_;
    if (auto bad = text::find_invalid_utf8(line)) {
      throw FormatError("invalid UTF-8 at byte offset " + std::to_string(start + *bad));
    }
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  std::size_t line_no() const { return line_no_; }

 private:
  std::istream* in_;
  std::size_t offset_ = 0;
  std::size_t line_no_ = 0;
};

}  // namespace detail

// One token per line; blank lines end sentences (runs of blanks collapse);
// the final sentence is closed at end of input.
class PretokenizedReader {
 public:
  explicit PretokenizedReader(std::istream& in) : lines_(in) {}

  bool next(Sentence& out) {
    out.clear();
    std::string line;
    while (lines_.next(line)) {
      if (line.empty()) {
        if (!out.empty()) break;
        continue;
      }
      out.push_back(Token{line, sentence_, out.size()});
    }
    if (out.empty()) return false;
    ++sentence_;
    return true;
  }

 private:
  detail::LineReader lines_;
  std::size_t sentence_ = 0;
};

inline std::vector<Sentence> read_pretokenized(std::istream& in) {
  std::vector<Sentence> out;
  PretokenizedReader reader(in);
  Sentence s;
  while (reader.next(s)) out.push_back(s);
  return out;
}

template <typename Sentences>
void write_pretokenized(std::ostream& out, const Sentences& sentences) {
  for (const auto& s : sentences) {
    for (const auto& tok : s) out << tok.surface << '\n';
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Minimal raw-text tokenizer: whitespace splitting, detached punctuation, an
// abbreviation list that keeps its periods, and sentence breaks after a
// detached '.', '!' or '?'. Blank lines also end a sentence.

inline const std::vector<std::string_view>& opening_punctuation() {
  static const std::vector<std::string_view> p = {"(", "[", "{", "\"", "'", "\xE2\x80\x9E" /*„*/,
                                                  "\xE2\x80\x9C" /*“*/, "\xC2\xAB" /*«*/,
                                                  "\xC2\xBB" /*»*/, "\xE2\x80\x9A" /*‚*/};
  return p;
}

inline const std::vector<std::string_view>& closing_punctuation() {
  static const std::vector<std::string_view> p = {
      ".", ",", ";", ":", "!", "?", ")", "]", "}", "\"", "'", "\xE2\x80\x9C" /*“*/,
      "\xE2\x80\x9D" /*”*/, "\xC2\xAB" /*«*/, "\xC2\xBB" /*»*/, "\xE2\x80\x98" /*‘*/};
  return p;
}

inline std::unordered_set<std::string> load_abbreviations(std::string_view source) {
  std::unordered_set<std::string> out;
  text::LineCursor cursor(source);
  std::string_view line;
  while (cursor.next(line)) {
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    out.emplace(t);
  }
  return out;
}

class RawTokenizer {
 public:
  RawTokenizer(std::istream& in, std::unordered_set<std::string> abbreviations = {})
      : lines_(in), abbreviations_(std::move(abbreviations)) {}

  bool next(Sentence& out) {
    out.clear();
    for (;;) {
      while (pending_pos_ < pending_.size()) {
        auto [surface, ends] = std::move(pending_[pending_pos_++]);
        out.push_back(Token{std::move(surface), sentence_, out.size()});
        if (ends) return finish(out);
      }
      pending_.clear();
      pending_pos_ = 0;
      std::string line;
      if (!lines_.next(line)) return finish(out);
      if (text::trim(line).empty()) {
        if (!out.empty()) return finish(out);
        continue;
      }
      for (auto chunk : text::split_ws(line)) split_chunk(chunk);
    }
  }

 private:
  struct Piece {
    std::string surface;
    bool ends_sentence;
  };

  bool finish(Sentence& out) {
    if (out.empty()) return false;
    ++sentence_;
    return true;
  }

  static bool is_sentence_final(std::string_view p) { return p == "." || p == "!" || p == "?"; }

  static bool has_alnum(std::string_view w) {
    for (char c : w) {
      if (text::is_letter_byte(c) || text::is_ascii_digit(c)) return true;
    }
    return false;
  }

  void split_chunk(std::string_view w) {
    if (abbreviations_.count(std::string(w)) || !has_alnum(w)) {
      const bool ends = !w.empty() && is_sentence_final(w.substr(w.size() - 1));
      pending_.push_back(Piece{std::string(w), ends && !abbreviations_.count(std::string(w))});
      return;
    }
    std::vector<std::string> lead, trail;
    for (bool again = true; again;) {
      again = false;
      for (auto p : opening_punctuation()) {
        if (w.size() > p.size() && w.substr(0, p.size()) == p) {
          lead.emplace_back(p);
          w.remove_prefix(p.size());
          again = true;
          break;
        }
      }
    }
    for (bool again = true; again;) {
      again = false;
      if (abbreviations_.count(std::string(w))) break;
      for (auto p : closing_punctuation()) {
        if (w.size() > p.size() && w.substr(w.size() - p.size()) == p) {
          trail.emplace_back(p);
          w.remove_suffix(p.size());
          again = true;
          break;
        }
      }
    }
    for (auto& p : lead) pending_.push_back(Piece{std::move(p), false});
    pending_.push_back(Piece{std::string(w), false});
    bool ends = false;
    for (auto it = trail.rbegin(); it != trail.rend(); ++it) {
      ends |= is_sentence_final(*it);
      pending_.push_back(Piece{std::move(*it), false});
    }
    if (ends) pending_.back().ends_sentence = true;
  }

  detail::LineReader lines_;
  std::unordered_set<std::string> abbreviations_;
  std::vector<Piece> pending_;
  std::size_t pending_pos_ = 0;
  std::size_t sentence_ = 0;
};

inline std::vector<Sentence> tokenize_raw(std::istream& in,
                                          std::unordered_set<std::string> abbreviations = {}) {
  std::vector<Sentence> out;
  RawTokenizer tok(in, std::move(abbreviations));
  Sentence s;
  while (tok.next(s)) out.push_back(s);
  return out;
}

// ---------------------------------------------------------------------------
// Tagged corpora: `token<TAB>TAG` per line, blank line = sentence break. A
// third column (the class signature written by `tag --with-class`) is
// accepted and ignored.

class TaggedReader {
 public:
  TaggedReader(std::istream& in, const TagSet& ts) : lines_(in), ts_(&ts) {}

  bool next(TaggedSentence& out) {
    out.clear();
    std::string line;
    while (lines_.next(line)) {
      if (line.empty()) {
        if (!out.empty()) break;
        continue;
      }
      const auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0) {
        throw FormatError(at_line(lines_.line_no(), "expected 'token<TAB>TAG'"));
      }
      std::string_view rest(line);
      rest.remove_prefix(tab + 1);
      const auto tab2 = rest.find('\t');
      const auto label = tab2 == std::string_view::npos ? rest : rest.substr(0, tab2);
      auto id = ts_->id(label);
      if (!id) {
        throw DataError(at_line(lines_.line_no(), "unknown tag '" + std::string(label) + "'"));
      }
      out.push_back(TaggedToken{Token{line.substr(0, tab), sentence_, out.size()}, *id});
    }
    if (out.empty()) return false;
    ++sentence_;
    return true;
  }

  std::size_t line_no() const { return lines_.line_no(); }

 private:
  detail::LineReader lines_;
  const TagSet* ts_;
  std::size_t sentence_ = 0;
};

inline std::vector<TaggedSentence> read_tagged(std::istream& in, const TagSet& ts) {
  std::vector<TaggedSentence> out;
  TaggedReader reader(in, ts);
  TaggedSentence s;
  while (reader.next(s)) out.push_back(s);
  return out;
}

inline void write_tagged(std::ostream& out, const std::vector<TaggedSentence>& sentences,
                         const TagSet& ts) {
  for (const auto& s : sentences) {
    for (const auto& t : s) out << t.token.surface << '\t' << ts.label(t.gold) << '\n';
    out << '\n';
  }
}

}  // namespace xhmm
