#pragma once

// Command-line front end: train, tag, eval, synth.
// Exit codes: 0 ok, 1 usage, 2 data.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "xhmm/xhmm.hpp"

namespace xhmm::cli {

inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kData = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Key/value record of a run, echoed so reruns can be reproduced.
class RunManifest {
 public:
  explicit RunManifest(std::string subcommand) { add("subcommand", std::move(subcommand)); }

  void add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }

  std::string render() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += "# " + k + " = " + v + "\n";
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

inline void require_readable(const std::string& path, const std::string& flag) {
  std::ifstream in(path);
  if (!in) throw UsageError(flag + ": cannot read '" + path + "'");
}

// Tag set, lexicon and guesser loaded together; every tag is guaranteed to
// belong to at least one class (uncovered tags get a singleton class).
struct Resources {
  TagSet tags;
  Lexicon lexicon;
  std::optional<GuesserRules> rules;
  std::size_t added_singletons = 0;
};

inline Resources load_resources(const std::string& tagset, const std::string& lexicon,
                                const std::string& rules) {
  Resources r;
  r.tags = load_tagset_file(tagset);
  try {
    r.lexicon = load_lexicon(read_file(lexicon), r.tags);
  } catch (const Error& e) {
    throw ConfigError(lexicon + ": " + e.what());
  }
  try {
    r.rules.emplace(load_guesser_rules(read_file(rules), r.tags, r.lexicon.classes()));
  } catch (const Error& e) {
    throw ConfigError(rules + ": " + e.what());
  }
  std::vector<bool> covered(r.tags.size(), false);
  for (const auto& members : r.lexicon.classes().all()) {
    for (auto t : members) covered[t] = true;
  }
  for (TagId t = 0; t < r.tags.size(); ++t) {
    if (!covered[t]) {
      r.lexicon.classes().intern({t});
      ++r.added_singletons;
    }
  }
  return r;
}

// Untagged corpus file re-read (and classified) on every traversal.
struct FileClassCorpus {
  std::string path;
  const Lexicon* lexicon;
  const GuesserRules* rules;

  template <typename Fn>
  void for_each(Fn&& fn) const {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path + "'");
    PretokenizedReader reader(in);
    Sentence s;
    std::vector<ClassId> classes;
    while (reader.next(s)) {
      classes.clear();
      for (const auto& tok : s) classes.push_back(classify(*lexicon, *rules, tok.surface));
      fn(std::span<const ClassId>(classes));
    }
  }
};

// Gold-tagged corpus file, classified through the lexicon.
struct FileTaggedCorpus {
  std::string path;
  const TagSet* tags;
  const Lexicon* lexicon;
  const GuesserRules* rules;

  template <typename Fn>
  void for_each(Fn&& fn) const {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path + "'");
    TaggedReader reader(in, *tags);
    TaggedSentence s;
    std::vector<TaggedObservation> obs;
    while (reader.next(s)) {
      obs.clear();
      for (const auto& t : s) obs.push_back(TaggedObservation{t.gold, classify(*lexicon, *rules, t.token.surface)});
      fn(std::span<const TaggedObservation>(obs));
    }
  }
};

inline std::string fmt_double(double v, const char* f = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

class Cli {
 public:
  Cli(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(int argc, const char* const* argv) {
    CLI::App app{"xhmm: equivalence-class HMM part-of-speech tagger"};
    app.require_subcommand(1);

    auto* train = app.add_subcommand("train", "Estimate a model (regimes: bias, counted, counted-only)");
    train->add_option("--regime", train_.regime, "bias | counted | counted-only")
        ->required()
        ->check(CLI::IsMember({"bias", "counted", "counted-only"}));
    add_resource_flags(train);
    train->add_option("--biases", train_.biases, "Bias file (regime bias)");
    train->add_option("--tagged", train_.tagged, "Gold-tagged corpus (regimes counted, counted-only)");
    train->add_option("--corpus", train_.corpus, "Untagged one-token-per-line corpus (regimes bias, counted)");
    auto* iters = train->add_option("--iters", train_.iters, "Baum-Welch iterations");
    train->add_option("--smoothing", train_.smoothing, "Probability floor added before renormalization")
        ->capture_default_str();
    train->add_option("--convergence", train_.convergence, "Relative log-likelihood stopping threshold (0 = off)")
        ->capture_default_str();
    train->add_flag("--skip-impossible", train_.skip_impossible, "Skip sentences with no possible path");
    train->add_option("--out", train_.out, "Model output file")->required();
    train->add_option("--log", train_.log, "Training log (default: <out>.log)");

    auto* tag = app.add_subcommand("tag", "Tag text with a trained model");
    tag->add_option("--model", tag_.model, "Model file")->required();
    add_resource_flags(tag);
    tag->add_flag("--pretokenized", tag_.pretokenized, "Input is one token per line");
    tag->add_option("--abbreviations", tag_.abbreviations, "Abbreviation list for the raw tokenizer");
    tag->add_flag("--with-class", tag_.with_class, "Append the class signature column");
    tag->add_flag("--skip-impossible", tag_.skip_impossible,
                  "Tag impossible sentences with each token's first class member instead of failing");
    tag->add_option("input", tag_.input, "Input text")->required();
    tag->add_option("output", tag_.output, "Output file")->required();

    auto* eval = app.add_subcommand("eval", "Compare predicted and gold tags; print the evaluation profile");
    eval->add_option("--pred", eval_.pred, "Predicted tagged file")->required();
    eval->add_option("--gold", eval_.gold, "Gold tagged file")->required();
    add_resource_flags(eval);
    eval->add_option("--major-classes", eval_.major, "Major word class map")->required();
    eval->add_option("--top-k", eval_.top_k, "Rows per table")->capture_default_str();
    eval->add_option("--json", eval_.json, "Also write the structured report here");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic HMM and corpora from a seed");
    synth->add_option("--tags", synth_.cfg.n_tags, "Number of tags")->required();
    synth->add_option("--classes", synth_.cfg.n_classes, "Number of equivalence classes")->required();
    synth->add_option("--tokens", synth_.tokens, "Corpus size in tokens")->required();
    synth->add_option("--seed", synth_.seed, "Random seed")->required();
    synth->add_option("--out-prefix", synth_.prefix, "Output path prefix")->required();
    synth->add_option("--max-class-size", synth_.cfg.max_class_size, "Largest ambiguous class")->capture_default_str();
    synth->add_option("--ambiguity-target", synth_.ambiguity, "Target ambiguity rate (e.g. 1.51)");
    synth->add_option("--concentration", synth_.cfg.transition_concentration,
                      "Dirichlet concentration of transition rows")->capture_default_str();

    try {
      app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out_, err_);
      return code == 0 ? kOk : kUsage;
    }
    train_.iters_given = iters->count() > 0;

    try {
      if (*train) return cmd_train();
      if (*tag) return cmd_tag();
      if (*eval) return cmd_eval();
      if (*synth) return cmd_synth();
    } catch (const UsageError& e) {
      err_ << "usage error: " << e.what() << "\n";
      return kUsage;
    } catch (const Error& e) {
      err_ << "error: " << e.what() << "\n";
      return kData;
    }
    return kUsage;
  }

 private:
  struct ResourceFlags {
    std::string tagset, lexicon, rules;
  };

  void add_resource_flags(CLI::App* sub) {
    auto& r = resources_[sub->get_name()];
    sub->add_option("--tagset", r.tagset, "Tag-set file")->required();
    sub->add_option("--lexicon", r.lexicon, "Lexicon file")->required();
    sub->add_option("--rules", r.rules, "Guesser rules file")->required();
  }

  Resources load(const std::string& sub, RunManifest& manifest) {
    const auto& r = resources_.at(sub);
    require_readable(r.tagset, "--tagset");
    require_readable(r.lexicon, "--lexicon");
    require_readable(r.rules, "--rules");
    manifest.add("tagset", r.tagset);
    manifest.add("lexicon", r.lexicon);
    manifest.add("rules", r.rules);
    return load_resources(r.tagset, r.lexicon, r.rules);
  }

  int cmd_train() {
    const Regime regime = train_.regime == "bias"      ? Regime::bias
                          : train_.regime == "counted" ? Regime::counted
                                                       : Regime::counted_only;
    RunManifest manifest("train");
    manifest.add("regime", train_.regime);
    if (regime == Regime::bias && train_.biases.empty()) throw UsageError("--biases is required for regime bias");
    if (regime != Regime::counted_only && train_.corpus.empty()) {
      throw UsageError("--corpus is required for regime " + train_.regime);
    }
    if (regime != Regime::bias && train_.tagged.empty()) {
      throw UsageError("--tagged is required for regime " + train_.regime);
    }
    if (regime == Regime::counted_only && train_.iters_given && train_.iters != 0) {
      throw UsageError("--iters is meaningless for regime counted-only (no re-estimation)");
    }
    if (train_.smoothing < 0.0) throw UsageError("--smoothing must be non-negative");
    for (const auto& [path, flag] : {std::pair{train_.biases, "--biases"}, std::pair{train_.tagged, "--tagged"},
                                     std::pair{train_.corpus, "--corpus"}}) {
      if (!path.empty()) {
        require_readable(path, flag);
        manifest.add(std::string(flag).substr(2), path);
      }
    }
    auto res = load(std::string("train"), manifest);

    TrainingConfig cfg;
    cfg.iterations = train_.iters_given ? train_.iters : default_iterations(regime);
    cfg.smoothing_floor = train_.smoothing;
    cfg.convergence_tol = train_.convergence;
    cfg.skip_impossible = train_.skip_impossible;
    manifest.add("iterations", std::to_string(cfg.iterations));
    manifest.add("smoothing", fmt_double(cfg.smoothing_floor, "%g"));
    manifest.add("convergence", fmt_double(cfg.convergence_tol, "%g"));
    manifest.add("skip_impossible", cfg.skip_impossible ? "true" : "false");
    manifest.add("out", train_.out);

    const std::string log_path = train_.log.empty() ? train_.out + ".log" : train_.log;
    std::ofstream log(log_path, std::ios::app);
    if (!log) throw UsageError("--log: cannot write '" + log_path + "'");
    log << manifest.render();
    err_ << manifest.render();
    if (res.added_singletons) {
      log << "# tags without a lexicon class given singleton classes: " << res.added_singletons << "\n";
    }

    const auto& classes = res.lexicon.classes();
    FileClassCorpus corpus{train_.corpus, &res.lexicon, &*res.rules};
    FileTaggedCorpus tagged{train_.tagged, &res.tags, &res.lexicon, &*res.rules};
    TrainingResult result;
    switch (regime) {
      case Regime::bias: {
        const auto biases = load_biases(read_file(train_.biases), res.tags);
        log << "# biases: " << biases.transition_biases.size() << " transition, "
            << biases.symbol_biases.size() << " symbol\n";
        result = train_bias_regime(res.tags, classes, biases, corpus, cfg);
        break;
      }
      case Regime::counted:
        result = train_counted_regime(res.tags, classes, tagged, corpus, cfg);
        break;
      case Regime::counted_only:
        result = train_counted_only(res.tags, classes, tagged, cfg.smoothing_floor);
        break;
    }
    for (std::size_t i = 0; i < result.log_likelihood.size(); ++i) {
      log << "iteration " << (i + 1) << " log_likelihood " << fmt_double(result.log_likelihood[i]) << "\n";
    }
    if (result.skipped_sentences) log << "skipped_sentences " << result.skipped_sentences << "\n";

    std::ofstream model_out(train_.out, std::ios::binary);
    if (!model_out) throw UsageError("--out: cannot write '" + train_.out + "'");
    save_model(result.model, model_out);
    log << "wrote " << train_.out << "\n";
    return kOk;
  }

  int cmd_tag() {
    RunManifest manifest("tag");
    require_readable(tag_.model, "--model");
    require_readable(tag_.input, "input");
    if (!tag_.abbreviations.empty()) require_readable(tag_.abbreviations, "--abbreviations");
    manifest.add("model", tag_.model);
    auto res = load(std::string("tag"), manifest);
    manifest.add("pretokenized", tag_.pretokenized ? "true" : "false");
    manifest.add("input", tag_.input);
    manifest.add("output", tag_.output);
    err_ << manifest.render();

    HmmModel model;
    {
      std::ifstream in(tag_.model, std::ios::binary);
      model = load_model(in, res.tags);
    }
    Tagger tagger(model, res.lexicon, *res.rules);

    std::ifstream in(tag_.input, std::ios::binary);
    std::ofstream out(tag_.output, std::ios::binary);
    if (!out) throw UsageError("output: cannot write '" + tag_.output + "'");

    std::optional<PretokenizedReader> pre;
    std::optional<RawTokenizer> raw;
    if (tag_.pretokenized) {
      pre.emplace(in);
    } else {
      raw.emplace(in, tag_.abbreviations.empty() ? std::unordered_set<std::string>{}
                                                 : load_abbreviations(read_file(tag_.abbreviations)));
    }
    Sentence s;
    std::size_t index = 0, impossible = 0;
    while (pre ? pre->next(s) : raw->next(s)) {
      const auto words = surfaces(s);
      TaggedText result;
      try {
        result = tagger.tag(words);
      } catch (const ImpossibleSequence& e) {
        if (!tag_.skip_impossible) throw ImpossibleSequence(e.position(), index);
        ++impossible;
        result.classes.clear();
        result.tags.clear();
        for (const auto& w : words) {
          result.classes.push_back(tagger.classify(w));
          result.tags.push_back(res.lexicon.classes().members(result.classes.back()).front());
        }
      }
      for (std::size_t t = 0; t < words.size(); ++t) {
        out << words[t] << '\t' << res.tags.label(result.tags[t]);
        if (tag_.with_class) {
          out << '\t' << class_signature(res.lexicon.classes().members(result.classes[t]), res.tags);
        }
        out << '\n';
      }
      out << '\n';
      ++index;
    }
    if (impossible) err_ << "warning: " << impossible << " impossible sentence(s) tagged by fallback\n";
    return kOk;
  }

  int cmd_eval() {
    RunManifest manifest("eval");
    require_readable(eval_.pred, "--pred");
    require_readable(eval_.gold, "--gold");
    require_readable(eval_.major, "--major-classes");
    manifest.add("pred", eval_.pred);
    manifest.add("gold", eval_.gold);
    manifest.add("major_classes", eval_.major);
    manifest.add("top_k", std::to_string(eval_.top_k));
    auto res = load(std::string("eval"), manifest);
    err_ << manifest.render();
    const auto major = load_major_class_map(read_file(eval_.major), res.tags);

    std::ifstream pin(eval_.pred, std::ios::binary), gin(eval_.gold, std::ios::binary);
    const auto pred = read_tagged(pin, res.tags);
    const auto gold = read_tagged(gin, res.tags);
    TagSequences p, g;
    ClassSequences c;
    for (const auto& s : pred) {
      p.emplace_back();
      for (const auto& t : s) p.back().push_back(t.gold);
    }
    for (std::size_t si = 0; si < gold.size(); ++si) {
      g.emplace_back();
      c.emplace_back();
      for (std::size_t ti = 0; ti < gold[si].size(); ++ti) {
        const auto& t = gold[si][ti];
        if (si < pred.size() && ti < pred[si].size() && pred[si][ti].token.surface != t.token.surface) {
          throw AlignmentError(si, "token " + std::to_string(ti) + " differs ('" +
                                       pred[si][ti].token.surface + "' vs '" + t.token.surface + "')");
        }
        g.back().push_back(t.gold);
        c.back().push_back(classify(res.lexicon, *res.rules, t.token.surface));
      }
    }
    const auto report = profile_report(p, g, c, res.lexicon.classes(), major, eval_.top_k);
    out_ << render_text(report, res.tags);
    if (!eval_.json.empty()) {
      std::ofstream js(eval_.json);
      if (!js) throw UsageError("--json: cannot write '" + eval_.json + "'");
      js << to_json(report, res.tags).dump(2) << "\n";
    }
    return kOk;
  }

  int cmd_synth() {
    RunManifest manifest("synth");
    auto& cfg = synth_.cfg;
    if (cfg.n_tags == 0) throw UsageError("--tags must be positive");
    if (cfg.n_classes < cfg.n_tags) throw UsageError("--classes must be at least --tags (every tag needs a class)");
    if (synth_.tokens == 0) throw UsageError("--tokens must be positive");
    if (synth_.ambiguity) cfg.ambiguity_target = *synth_.ambiguity;
    manifest.add("tags", std::to_string(cfg.n_tags));
    manifest.add("classes", std::to_string(cfg.n_classes));
    manifest.add("tokens", std::to_string(synth_.tokens));
    manifest.add("seed", std::to_string(synth_.seed));
    manifest.add("max_class_size", std::to_string(cfg.max_class_size));
    manifest.add("concentration", fmt_double(cfg.transition_concentration, "%g"));
    if (synth_.ambiguity) manifest.add("ambiguity_target", fmt_double(*synth_.ambiguity, "%g"));
    manifest.add("out_prefix", synth_.prefix);
    err_ << manifest.render();

    std::mt19937_64 rng(synth_.seed);
    synth::SyntheticSetup setup;
    try {
      setup = synth::make_synthetic_hmm(cfg, rng);
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
    const auto corpus = synth::sample_corpus(setup.generator, synth_.tokens, cfg, rng);
    const auto& ts = setup.tags;

    auto open = [&](const std::string& suffix) {
      std::ofstream f(synth_.prefix + suffix, std::ios::binary);
      if (!f) throw UsageError("cannot write '" + synth_.prefix + suffix + "'");
      return f;
    };
    {
      auto f = open(".manifest");
      f << manifest.render();
    }
    {
      auto f = open(".tags");
      for (const auto& t : ts.tags()) f << t.label << '\t' << t.description << '\n';
    }
    {
      auto f = open(".lexicon");
      for (ClassId cl = 0; cl < setup.classes.size(); ++cl) {
        f << synth::word_for_class(cl) << '\t' << class_signature(setup.classes.members(cl), ts, ' ') << '\n';
      }
    }
    {
      auto f = open(".rules");
      f << "DEFAULT U " << ts.label(0) << "\nDEFAULT L " << ts.label(0) << "\n";
    }
    {
      // Arbitrary round-robin assignment; synthetic tags have no linguistics.
      auto f = open(".major");
      const char* majors[] = {"noun", "verb", "adjective", "adverb", "closed"};
      for (const auto& t : ts.tags()) f << t.label << '\t' << majors[t.id % 5] << '\n';
    }
    {
      auto f = open(".biases");
      f << synth::format_biases(synth::derive_biases(setup.generator, 2, 5.0, 5, 3.0), ts.labels());
    }
    {
      auto f = open(".generator.model");
      save_model(setup.generator, f);
    }
    {
      auto gold = open(".gold.tagged");
      auto untagged = open(".untagged");
      for (const auto& s : corpus) {
        for (const auto& o : s) {
          const auto w = synth::word_for_class(o.cls);
          gold << w << '\t' << ts.label(o.tag) << '\n';
          untagged << w << '\n';
        }
        gold << '\n';
        untagged << '\n';
      }
    }
    out_ << "ambiguity_rate " << fmt_double(ambiguity_rate(evaluation_flat(corpus), setup.classes), "%.4f")
         << "\n";
    return kOk;
  }

  static std::vector<ClassId> evaluation_flat(const std::vector<std::vector<TaggedObservation>>& corpus) {
    return flatten(synth::project_classes(corpus));
  }

  std::ostream& out_;
  std::ostream& err_;
  std::map<std::string, ResourceFlags> resources_;

  struct {
    std::string regime, biases, tagged, corpus, out, log;
    std::size_t iters = 0;
    bool iters_given = false;
    double smoothing = 1e-6;
    double convergence = 0.0;
    bool skip_impossible = false;
  } train_;
  struct {
    std::string model, abbreviations, input, output;
    bool pretokenized = false, with_class = false, skip_impossible = false;
  } tag_;
  struct {
    std::string pred, gold, major, json;
    std::size_t top_k = 20;
  } eval_;
  struct {
    synth::SynthConfig cfg;
    std::size_t tokens = 0;
    std::uint64_t seed = 0;
    std::string prefix;
    std::optional<double> ambiguity;
  } synth_;
};

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  return Cli(out, err).run(argc, argv);
}

}  // namespace xhmm::cli
