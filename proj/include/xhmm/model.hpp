#pragma once

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <iterator>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "xhmm/error.hpp"
#include "xhmm/lexicon.hpp"
#include "xhmm/matrix.hpp"
#include "xhmm/tagset.hpp"
#include "xhmm/text.hpp"

namespace xhmm {

// First-order HMM whose hidden states are tags and whose observation symbols
// are equivalence classes. Probabilities are kept in linear space.
struct HmmModel {
  std::vector<std::string> tag_labels;
  std::vector<std::vector<TagId>> class_members;
  std::vector<double> initial;
  Matrix<double> transition;  // tag x tag
  Matrix<double> emission;    // tag x class
  Matrix<std::uint8_t> transition_zero_mask;

  std::size_t n_tags() const { return tag_labels.size(); }
  std::size_t n_classes() const { return class_members.size(); }

  bool masked(TagId from, TagId to) const { return transition_zero_mask(from, to) != 0; }

  bool emits(TagId tag, ClassId cls) const {
    const auto& m = class_members[cls];
    return std::binary_search(m.begin(), m.end(), tag);
  }

  std::optional<ClassId> find_class(std::span<const TagId> members) const {
    for (std::size_t c = 0; c < class_members.size(); ++c) {
      if (std::equal(members.begin(), members.end(), class_members[c].begin(),
                     class_members[c].end())) {
        return static_cast<ClassId>(c);
      }
    }
    return std::nullopt;
  }

  bool operator==(const HmmModel&) const = default;
};

// Lists every violated model invariant (empty when the model is sound).
inline std::vector<std::string> check_invariants(const HmmModel& m, double tol = 1e-9) {
  std::vector<std::string> problems;
  const auto n = m.n_tags();
  auto check_row = [&](std::span<const double> row, const std::string& what) {
    double s = 0.0;
    for (double p : row) {
      if (!(p >= 0.0 && p <= 1.0)) problems.push_back(what + " has a value outside [0,1]");
      s += p;
    }
    if (std::abs(s - 1.0) > tol) problems.push_back(what + " sums to " + std::to_string(s));
  };
  check_row(m.initial, "initial");
  for (std::size_t i = 0; i < n; ++i) {
    check_row(m.transition.row(i), "transition row " + m.tag_labels[i]);
    check_row(m.emission.row(i), "emission row " + m.tag_labels[i]);
    for (std::size_t j = 0; j < n; ++j) {
      if (m.transition_zero_mask(i, j) && m.transition(i, j) != 0.0) {
        problems.push_back("masked transition " + m.tag_labels[i] + "->" + m.tag_labels[j] +
                           " is non-zero");
      }
    }
    for (std::size_t c = 0; c < m.n_classes(); ++c) {
      if (m.emission(i, c) != 0.0 && !m.emits(static_cast<TagId>(i), static_cast<ClassId>(c))) {
        problems.push_back("tag " + m.tag_labels[i] + " emits a class it is not a member of");
      }
    }
  }
  return problems;
}

namespace detail {

inline void normalize(std::span<double> row) {
  double s = 0.0;
  for (double p : row) s += p;
  if (s > 0.0) {
    for (double& p : row) p /= s;
  }
}

}  // namespace detail

// Uniform initial and transition distributions; each tag's emission is
// uniform over the classes that contain it.
inline HmmModel uniform_model(const TagSet& ts, const ClassStore& classes) {
  if (classes.size() == 0) throw ConfigError("class inventory is empty");
  const auto n = ts.size();
  const auto k = classes.size();
  HmmModel m;
  m.tag_labels = ts.labels();
  m.class_members = classes.all();
  m.initial.assign(n, 1.0 / static_cast<double>(n));
  m.transition = Matrix<double>(n, n, 1.0 / static_cast<double>(n));
  m.transition_zero_mask = Matrix<std::uint8_t>(n, n, 0);
  m.emission = Matrix<double>(n, k, 0.0);

  std::vector<std::size_t> support(n, 0);
  for (std::size_t c = 0; c < k; ++c) {
    for (auto t : classes.members(static_cast<ClassId>(c))) {
      if (t >= n) throw ConfigError("class member outside the tag set");
      ++support[t];
    }
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (support[t] == 0) {
      throw ConfigError("tag '" + m.tag_labels[t] + "' belongs to no equivalence class");
    }
  }
  for (std::size_t c = 0; c < k; ++c) {
    for (auto t : classes.members(static_cast<ClassId>(c))) {
      m.emission(t, c) = 1.0 / static_cast<double>(support[t]);
    }
  }
  return m;
}

struct TransitionBias {
  TagId from;
  TagId to;
  double weight;  // 0 = prohibition
};

struct SymbolBias {
  std::vector<TagId> members;  // sorted class signature
  TagId preferred;
  double weight;
};

struct BiasSet {
  std::vector<TransitionBias> transition_biases;
  std::vector<SymbolBias> symbol_biases;

  std::size_t size() const { return transition_biases.size() + symbol_biases.size(); }
};

// Bias file lines:
//   TRANS <FROM> <TO> <weight>          weight 0 = prohibition
//   SYM <TAG1+TAG2+...> <PREFERRED> <weight>
inline BiasSet load_biases(std::string_view source, const TagSet& ts) {
  BiasSet b;
  text::LineCursor cursor(source);
  std::string_view line;
  while (cursor.next(line)) {
    if (text::trim(line).empty() || line.front() == '#') continue;
    const auto f = text::split_ws(line);
    const auto line_no = cursor.line_no();
    auto fail = [&](const std::string& msg) { throw ConfigError(at_line(line_no, msg)); };
    if (f.size() != 4) fail("expected 4 fields");
    auto tag = [&](std::string_view label) {
      auto id = ts.id(label);
      if (!id) fail("unknown tag '" + std::string(label) + "'");
      return *id;
    };
    double w = 0.0;
    {
      const std::string ws(f[3]);
      char* end = nullptr;
      w = std::strtod(ws.c_str(), &end);
      if (end == ws.c_str() || *end != '\0' || !std::isfinite(w) || w < 0.0) {
        fail("weight must be a non-negative number");
      }
    }
    if (f[0] == "TRANS") {
      b.transition_biases.push_back(TransitionBias{tag(f[1]), tag(f[2]), w});
    } else if (f[0] == "SYM") {
      std::vector<TagId> members;
      try {
        members = parse_signature(f[1], ts);
      } catch (const ConfigError& e) {
        fail(e.what());
      }
      std::sort(members.begin(), members.end());
      members.erase(std::unique(members.begin(), members.end()), members.end());
      const auto pref = tag(f[2]);
      if (!std::binary_search(members.begin(), members.end(), pref)) {
        fail("preferred tag is not a member of the class");
      }
      if (w <= 0.0) fail("symbol bias weight must be positive");
      b.symbol_biases.push_back(SymbolBias{std::move(members), pref, w});
    } else {
      fail("unknown bias keyword '" + std::string(f[0]) + "'");
    }
  }
  return b;
}

// Multiplies the biased cells by their weights and renormalizes the touched
// rows. A zero transition weight is a permanent prohibition (zero mask).
inline HmmModel apply_biases(HmmModel m, const BiasSet& b) {
  const auto n = m.n_tags();
  std::vector<std::uint8_t> trans_touched(n, 0), emit_touched(n, 0);
  auto tag_name = [&](TagId t) { return t < n ? m.tag_labels[t] : "#" + std::to_string(t); };

  for (const auto& tb : b.transition_biases) {
    if (tb.from >= n || tb.to >= n) {
      throw ConfigError("transition bias " + tag_name(tb.from) + "->" + tag_name(tb.to) +
                        " references an unknown tag");
    }
    double& cell = m.transition(tb.from, tb.to);
    const double before = cell;
    if (tb.weight == 0.0) {
      cell = 0.0;
      m.transition_zero_mask(tb.from, tb.to) = 1;
    } else {
      cell *= tb.weight;
    }
    if (cell != before) trans_touched[tb.from] = 1;
  }

  for (const auto& sb : b.symbol_biases) {
    std::string sig;
    for (auto t : sb.members) sig += (sig.empty() ? "" : "+") + tag_name(t);
    if (sb.preferred >= n) throw ConfigError("symbol bias " + sig + " references an unknown tag");
    auto cls = m.find_class(sb.members);
    if (!cls) throw ConfigError("symbol bias " + sig + " names a class absent from the inventory");
    if (!m.emits(sb.preferred, *cls)) {
      throw ConfigError("symbol bias " + sig + ": preferred tag not in class");
    }
    double& cell = m.emission(sb.preferred, *cls);
    const double before = cell;
    cell *= sb.weight;
    if (cell != before) emit_touched[sb.preferred] = 1;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (trans_touched[i]) {
      if (sum(std::span<const double>(m.transition.row(i))) <= 0.0) {
        throw ConfigError("biases leave no permitted successor for tag " + m.tag_labels[i]);
      }
      detail::normalize(m.transition.row(i));
    }
    if (emit_touched[i]) detail::normalize(m.emission.row(i));
  }
  return m;
}

// ---------------------------------------------------------------------------
// Persistence. Versioned text format; probabilities are written as hex floats
// so load(save(m)) is bit-exact. The final line carries an FNV-1a checksum of
// everything before it.

inline constexpr std::string_view kModelMagic = "XHMM-MODEL";
inline constexpr int kModelVersion = 1;

namespace detail {

inline std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline void put_hex(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  out += buf;
}

inline void put_row(std::string& out, std::span<const double> row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ' ';
    put_hex(out, row[i]);
  }
  out += '\n';
}

}  // namespace detail

inline std::string serialize_model(const HmmModel& m) {
  std::string body;
  body += std::string(kModelMagic) + " " + std::to_string(kModelVersion) + "\n";
  body += "tags " + std::to_string(m.n_tags()) + "\n";
  for (const auto& l : m.tag_labels) body += l + "\n";
  body += "classes " + std::to_string(m.n_classes()) + "\n";
  for (const auto& members : m.class_members) {
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (i) body += '+';
      body += m.tag_labels.at(members[i]);
    }
    body += '\n';
  }
  body += "initial\n";
  detail::put_row(body, m.initial);
  body += "transition\n";
  for (std::size_t i = 0; i < m.n_tags(); ++i) detail::put_row(body, m.transition.row(i));
  std::vector<std::pair<std::size_t, std::size_t>> masked;
  for (std::size_t i = 0; i < m.n_tags(); ++i) {
    for (std::size_t j = 0; j < m.n_tags(); ++j) {
      if (m.transition_zero_mask(i, j)) masked.emplace_back(i, j);
    }
  }
  body += "mask " + std::to_string(masked.size()) + "\n";
  for (auto [i, j] : masked) body += m.tag_labels[i] + " " + m.tag_labels[j] + "\n";
  body += "emission\n";
  for (std::size_t i = 0; i < m.n_tags(); ++i) detail::put_row(body, m.emission.row(i));
  char sum_line[40];
  std::snprintf(sum_line, sizeof sum_line, "checksum %016" PRIx64 "\n", detail::fnv1a(body));
  return body + sum_line;
}

inline void save_model(const HmmModel& m, std::ostream& sink) {
  const auto bytes = serialize_model(m);
  sink.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

inline HmmModel parse_model(std::string_view bytes, const TagSet& ts) {
  using Kind = ModelLoadError::Kind;
  auto fail = [](Kind k, const std::string& msg) { throw ModelLoadError(k, msg); };

  text::LineCursor header_cursor(bytes);
  std::string_view first;
  if (!header_cursor.next(first)) fail(Kind::format, "empty model file");
  const auto head = text::split_ws(first);
  if (head.size() != 2 || head[0] != kModelMagic) fail(Kind::format, "not an xhmm model file");
  if (head[1] != std::to_string(kModelVersion)) {
    fail(Kind::version_mismatch, "unsupported model version " + std::string(head[1]) +
                                     " (expected " + std::to_string(kModelVersion) + ")");
  }

  // Checksum line must be the last line and cover everything before it.
  std::string_view trimmed = bytes;
  if (!trimmed.empty() && trimmed.back() == '\n') trimmed.remove_suffix(1);
  const auto last_nl = trimmed.rfind('\n');
  const auto last_line = last_nl == std::string_view::npos ? trimmed : trimmed.substr(last_nl + 1);
  if (last_line.substr(0, 9) != "checksum ") fail(Kind::checksum_failure, "missing checksum (truncated file?)");
  const auto body = bytes.substr(0, last_nl + 1);
  char expected[17];
  std::snprintf(expected, sizeof expected, "%016" PRIx64, detail::fnv1a(body));
  if (text::trim(last_line.substr(9)) != expected) fail(Kind::checksum_failure, "checksum mismatch");

  text::LineCursor cur(body);
  std::string_view line;
  cur.next(line);  // header
  auto expect_line = [&]() {
    if (!cur.next(line)) fail(Kind::format, "unexpected end of model data");
    return line;
  };
  auto count_after = [&](std::string_view key) -> std::size_t {
    const auto f = text::split_ws(expect_line());
    if (f.size() != 2 || f[0] != key) fail(Kind::format, "expected '" + std::string(key) + "'");
    return std::stoul(std::string(f[1]));
  };
  auto read_row = [&](std::size_t width) {
    std::vector<double> row;
    row.reserve(width);
    for (auto tok : text::split_ws(expect_line())) {
      const std::string s(tok);
      char* end = nullptr;
      const double v = std::strtod(s.c_str(), &end);
      if (*end != '\0') fail(Kind::format, "bad number '" + s + "'");
      row.push_back(v);
    }
    if (row.size() != width) fail(Kind::format, "row has wrong width");
    return row;
  };

  HmmModel m;
  const auto n = count_after("tags");
  for (std::size_t i = 0; i < n; ++i) m.tag_labels.emplace_back(expect_line());
  if (m.tag_labels != ts.labels()) {
    fail(Kind::tagset_mismatch, "model was trained with a different tag set");
  }
  const auto k = count_after("classes");
  for (std::size_t c = 0; c < k; ++c) {
    auto members = parse_signature(expect_line(), ts);
    m.class_members.push_back(std::move(members));
  }
  if (expect_line() != "initial") fail(Kind::format, "expected 'initial'");
  m.initial = read_row(n);
  if (expect_line() != "transition") fail(Kind::format, "expected 'transition'");
  m.transition = Matrix<double>(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = read_row(n);
    std::copy(row.begin(), row.end(), m.transition.row(i).begin());
  }
  m.transition_zero_mask = Matrix<std::uint8_t>(n, n, 0);
  const auto masked = count_after("mask");
  for (std::size_t e = 0; e < masked; ++e) {
    const auto f = text::split_ws(expect_line());
    if (f.size() != 2) fail(Kind::format, "bad mask entry");
    m.transition_zero_mask(ts.require(f[0]), ts.require(f[1])) = 1;
  }
  if (expect_line() != "emission") fail(Kind::format, "expected 'emission'");
  m.emission = Matrix<double>(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    auto row = read_row(k);
    std::copy(row.begin(), row.end(), m.emission.row(i).begin());
  }
  return m;
}

inline HmmModel load_model(std::istream& source, const TagSet& ts) {
  const std::string bytes((std::istreambuf_iterator<char>(source)), std::istreambuf_iterator<char>());
  return parse_model(bytes, ts);
}

}  // namespace xhmm
