#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "xhmm/error.hpp"
#include "xhmm/text.hpp"

namespace xhmm {

using TagId = std::uint32_t;

struct Tag {
  TagId id;
  std::string label;
  std::string description;

  bool operator==(const Tag&) const = default;
};

// Closed tag inventory. Ids are dense and follow file order.
class TagSet {
 public:
  TagSet() = default;

  // Appends a tag; throws ConfigError on duplicates or malformed labels.
  TagId add(std::string label, std::string description = {}) {
    if (label.empty()) throw ConfigError("empty tag label");
    for (char c : label) {
      if (text::is_space(c)) throw ConfigError("tag label contains whitespace: '" + label + "'");
    }
    if (index_.count(label) != 0) throw ConfigError("duplicate tag label '" + label + "'");
    const auto id = static_cast<TagId>(tags_.size());
    index_.emplace(label, id);
    tags_.push_back(Tag{id, std::move(label), std::move(description)});
    return id;
  }

  void mark_sentence_delimiter(TagId id) {
    for (auto d : delimiters_) {
      if (d == id) return;
    }
    delimiters_.push_back(id);
  }

  std::optional<TagId> id(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  // Like id() but throws ConfigError for unknown labels.
  TagId require(std::string_view label) const {
    auto found = id(label);
    if (!found) throw ConfigError("unknown tag '" + std::string(label) + "'");
    return *found;
  }

  const std::string& label(TagId id) const { return tags_.at(id).label; }
  const std::vector<Tag>& tags() const { return tags_; }
  const std::vector<TagId>& sentence_delimiters() const { return delimiters_; }
  std::size_t size() const { return tags_.size(); }
  bool empty() const { return tags_.empty(); }

  bool is_sentence_delimiter(TagId id) const {
    for (auto d : delimiters_) {
      if (d == id) return true;
    }
    return false;
  }

  std::vector<std::string> labels() const {
    std::vector<std::string> out;
    out.reserve(tags_.size());
    for (const auto& t : tags_) out.push_back(t.label);
    return out;
  }

  bool operator==(const TagSet& other) const {
    return tags_ == other.tags_ && delimiters_ == other.delimiters_;
  }

 private:
  std::vector<Tag> tags_;
  std::unordered_map<std::string, TagId> index_;
  std::vector<TagId> delimiters_;
};

// Parses `LABEL<TAB>description` lines. `#` starts a comment line and
// `!sentence_delim LABEL` marks a delimiter. Without a directive, "$." is the
// delimiter when present.
inline TagSet load_tagset(std::string_view source) {
  TagSet ts;
  std::vector<std::pair<std::size_t, std::string>> delim_directives;
  text::LineCursor cursor(source);
  std::string_view line;
  while (cursor.next(line)) {
    if (text::trim(line).empty() || line.front() == '#') continue;
    if (line.front() == '!') {
      auto fields = text::split_ws(line);
      if (fields.size() != 2 || fields[0] != "!sentence_delim") {
        throw ConfigError(at_line(cursor.line_no(), "malformed directive"));
      }
      delim_directives.emplace_back(cursor.line_no(), std::string(fields[1]));
      continue;
    }
    const auto tab = line.find('\t');
    const auto label = tab == std::string_view::npos ? line : line.substr(0, tab);
    const auto desc = tab == std::string_view::npos ? std::string_view{} : line.substr(tab + 1);
    try {
      ts.add(std::string(label), std::string(text::trim(desc)));
    } catch (const ConfigError& e) {
      throw ConfigError(at_line(cursor.line_no(), e.what()));
    }
  }
  if (ts.empty()) throw ConfigError("tag set is empty");
  for (const auto& [line_no, label] : delim_directives) {
    auto id = ts.id(label);
    if (!id) throw ConfigError(at_line(line_no, "sentence delimiter names unknown tag '" + label + "'"));
    ts.mark_sentence_delimiter(*id);
  }
  if (delim_directives.empty()) {
    if (auto period = ts.id("$.")) ts.mark_sentence_delimiter(*period);
  }
  return ts;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline TagSet load_tagset_file(const std::string& path) {
  try {
    return load_tagset(read_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace xhmm
