#pragma once

#include <string>
#include <utility>
#include <vector>

#include "xhmm/xhmm.hpp"

namespace fixtures {

inline std::string data_path(const std::string& name) { return std::string(XHMM_DATA_DIR) + "/" + name; }

inline xhmm::TagSet elwis() { return xhmm::load_tagset_file(data_path("elwis.tags")); }

inline xhmm::MajorClassMap elwis_major(const xhmm::TagSet& ts) {
  return xhmm::load_major_class_map(xhmm::read_file(data_path("elwis.major")), ts);
}

inline std::vector<xhmm::TagId> tags(const xhmm::TagSet& ts, std::initializer_list<const char*> labels) {
  std::vector<xhmm::TagId> out;
  for (auto l : labels) out.push_back(ts.require(l));
  return out;
}

// The ten most frequent ambiguous German classes with their reference
// relative frequencies (per 10,000 tokens).
struct ReferenceClass {
  std::vector<const char*> members;
  std::size_t per_10k;
};

inline const std::vector<ReferenceClass>& german_top_classes() {
  static const std::vector<ReferenceClass> c = {
      {{"ART", "PROS", "PRELS"}, 772}, {{"PTKVZS", "APPR"}, 265}, {{"NE", "NN"}, 255},
      {{"VINF", "VFIN"}, 252},         {{"ADV", "KON"}, 119},     {{"ART", "PROS", "PROAT", "CARD"}, 117},
      {{"VPP", "ADJD"}, 116},          {{"VPP", "ADJD", "VFIN"}, 95}, {{"PROS", "PROAT"}, 89},
      {{"PTKVZS", "APPO", "APPR", "APZR"}, 86}};
  return c;
}

inline std::vector<xhmm::TagId> ids(const xhmm::TagSet& ts, const std::vector<const char*>& labels) {
  std::vector<xhmm::TagId> out;
  for (auto l : labels) out.push_back(ts.require(l));
  return out;
}

// 10,000-token class sequence whose ten most frequent ambiguous classes carry
// the reference German counts. A tail of ten 3-member classes (80 tokens
// each) and one 2-member class (61 tokens) lifts the ambiguity rate to 1.51;
// all remaining tokens are unambiguous {NN}.
struct ClassProfileFixture {
  xhmm::ClassStore classes;
  std::vector<xhmm::ClassId> tokens;
};

inline ClassProfileFixture class_profile_fixture(const xhmm::TagSet& ts) {
  ClassProfileFixture f;
  const auto nn = f.classes.intern({ts.require("NN")});
  std::vector<std::pair<xhmm::ClassId, std::size_t>> blocks;
  for (const auto& pc : german_top_classes()) blocks.emplace_back(f.classes.intern(ids(ts, pc.members)), pc.per_10k);
  for (xhmm::TagId first = 9; first < 39; first += 3) {
    blocks.emplace_back(f.classes.intern({first, first + 1, first + 2}), 80);
  }
  blocks.emplace_back(f.classes.intern(ids(ts, {"ITJ", "PTKANT"})), 61);
  std::size_t used = 0;
  for (auto [c, n] : blocks) {
    f.tokens.insert(f.tokens.end(), n, c);
    used += n;
  }
  f.tokens.insert(f.tokens.end(), 10000 - used, nn);
  return f;
}

// Mismatch profile reproducing the reference error-type table: 633
// mismatches of which 378 fall in the twenty listed types, the rest spread
// over 51 other types of 5 each, embedded in 19,000 tokens. Class
// compositions are synthetic; only their sizes follow the table.
struct ErrorRow {
  const char* predicted;
  std::vector<const char*> cls;  // token class; size 1 = no choice
  const char* gold;
  std::size_t count;
};

inline const std::vector<ErrorRow>& error_profile_rows() {
  static const std::vector<ErrorRow> rows = {
      {"VINF", {"VFIN", "VINF"}, "VFIN", 57},
      {"NN", {"NN", "NE"}, "NE", 50},
      {"NE", {"NN", "NE"}, "NN", 41},
      {"NN", {"NN"}, "NE", 33},
      {"NE", {"NN", "NE", "ADJA", "ADJD", "ADV", "VFIN", "VINF"}, "NN", 21},
      {"VPP", {"VPP", "ADJD", "VFIN"}, "VFIN", 20},
      {"VPP", {"VPP", "ADJD", "VFIN"}, "ADJD", 17},
      {"ADV", {"ADV", "KON"}, "KON", 17},
      {"APPO", {"APPR", "APPO", "APZR", "PTKVZS", "ADV", "PROAT"}, "APPR", 15},
      {"PROS", {"ART", "PROS", "PRELS"}, "ART", 13},
      {"PROS", {"PROS", "PWS"}, "PWS", 13},
      {"PWAV", {"PWAV", "KOKOM", "KOUS", "ADV"}, "KOKOM", 10},
      {"PRELS", {"ART", "PROS", "PRELS"}, "PROS", 10},
      {"ART", {"ART", "PROS", "PRELS"}, "PROS", 10},
      {"ART", {"ART", "PROS", "PRELS"}, "PRELS", 10},
      {"VFIN", {"VFIN", "VINF"}, "VINF", 9},
      {"VPP", {"VPP", "ADJD"}, "ADJD", 8},
      {"VINF", {"VFIN", "VINF", "ADJA"}, "VFIN", 8},
      {"KOUS", {"KOUS", "APPR"}, "APPR", 8},
      {"KON", {"KON", "KOKOM", "ADV", "KOUS"}, "KOKOM", 8},
  };
  return rows;
}

// Reference rows in print form, in table order.
inline const std::vector<std::string>& error_profile_printed() {
  static const std::vector<std::string> rows = {
      "0.0900 VINF/2 VFIN", "0.0790 NN/2 NE",     "0.0648 NE/2 NN",      "0.0521 NN NE",
      "0.0332 NE/7 NN",     "0.0316 VPP/3 VFIN",  "0.0269 VPP/3 ADJD",   "0.0269 ADV/2 KON",
      "0.0237 APPO/6 APPR", "0.0205 PROS/3 ART",  "0.0205 PROS/2 PWS",   "0.0158 PWAV/4 KOKOM",
      "0.0158 PRELS/3 PROS", "0.0158 ART/3 PROS", "0.0158 ART/3 PRELS",  "0.0142 VFIN/2 VINF",
      "0.0126 VPP/2 ADJD",  "0.0126 VINF/3 VFIN", "0.0126 KOUS/2 APPR",  "0.0126 KON/4 KOKOM"};
  return rows;
}

struct ErrorProfileFixture {
  xhmm::ClassStore classes;
  xhmm::TagSequences pred, gold;
  xhmm::ClassSequences token_classes;
};

inline ErrorProfileFixture error_profile_fixture(const xhmm::TagSet& ts, std::size_t total_tokens = 19000) {
  ErrorProfileFixture f;
  struct Tok {
    xhmm::TagId p, g;
    xhmm::ClassId c;
  };
  std::vector<Tok> toks;
  for (const auto& r : error_profile_rows()) {
    const auto c = f.classes.intern(ids(ts, r.cls));
    for (std::size_t i = 0; i < r.count; ++i) toks.push_back({ts.require(r.predicted), ts.require(r.gold), c});
  }
  // 51 filler types over pronoun/particle pairs, 5 mismatches each.
  std::size_t filler_types = 0;
  for (xhmm::TagId a = 9; a < 25 && filler_types < 51; ++a) {
    for (xhmm::TagId b = a + 1; b < 25 && filler_types < 51; ++b) {
      if (ts.label(a) == "PROS" || ts.label(b) == "PROS") continue;
      const auto c = f.classes.intern({a, b});
      for (int i = 0; i < 5; ++i) toks.push_back({a, b, c});
      ++filler_types;
    }
  }
  const auto nn = f.classes.intern({ts.require("NN")});
  while (toks.size() < total_tokens) toks.push_back({ts.require("NN"), ts.require("NN"), nn});
  for (std::size_t i = 0; i < toks.size(); i += 19) {
    f.pred.emplace_back();
    f.gold.emplace_back();
    f.token_classes.emplace_back();
    for (std::size_t j = i; j < std::min(i + 19, toks.size()); ++j) {
      f.pred.back().push_back(toks[j].p);
      f.gold.back().push_back(toks[j].g);
      f.token_classes.back().push_back(toks[j].c);
    }
  }
  return f;
}

}  // namespace fixtures
