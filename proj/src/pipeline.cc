#include "parsel/pipeline.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <utility>

#include "parsel/baselines.h"
#include "parsel/eval.h"
#include "parsel/ilps.h"
#include "parsel/io_util.h"
#include "parsel/labels.h"
#include "parsel/parser.h"
#include "parsel/selection.h"
#include "parsel/treebank.h"

namespace parsel {

const std::vector<std::string>& pipeline_stages() {
  static const std::vector<std::string> stages = {
      "train-parsers", "cross-parse", "make-labels", "pretrain",
      "train-ilps",    "predict",     "baselines",   "select",
      "reparse",       "oracle",      "evaluate"};
  return stages;
}

bool is_pipeline_stage(const std::string& name) {
  const auto& s = pipeline_stages();
  return name == "all" || std::find(s.begin(), s.end(), name) != s.end();
}

const std::vector<std::string>& selection_systems() {
  static const std::vector<std::string> systems = {
      "ilps",    "ens-ilps",    "sbps-ilps", "ens-sbps-ilps",
      "kl-sbps", "ens-kl-sbps", "l2v-sbps",  "ens-l2v-sbps"};
  return systems;
}

std::string ArtifactPaths::resolved_config() const {
  return out + "/config.resolved.conf";
}
std::string ArtifactPaths::parser_model(const std::string& language) const {
  return out + "/parsers/" + language + ".model";
}
std::string ArtifactPaths::cross_parse() const { return out + "/crossparse.tsv"; }
std::string ArtifactPaths::labels_train() const { return out + "/labels.train.tsv"; }
std::string ArtifactPaths::labels_dev() const { return out + "/labels.dev.tsv"; }
std::string ArtifactPaths::ilps_pre_prefix() const { return out + "/ilps.pre"; }
std::string ArtifactPaths::ilps_prefix() const { return out + "/ilps"; }
std::string ArtifactPaths::scores(const std::string& target) const {
  return out + "/scores/" + target + ".tsv";
}
std::string ArtifactPaths::source_parse(const std::string& target,
                                        const std::string& source) const {
  return out + "/parses/" + target + "/" + source + ".conllu";
}
std::string ArtifactPaths::system_parse(const std::string& target,
                                        const std::string& system) const {
  return out + "/parses/" + target + "/sys-" + system + ".conllu";
}
std::string ArtifactPaths::selection(const std::string& target,
                                     const std::string& system) const {
  return out + "/selection/" + target + "." + system + ".tsv";
}
std::string ArtifactPaths::baselines() const { return out + "/baselines.tsv"; }
std::string ArtifactPaths::oracle() const { return out + "/oracle.tsv"; }
std::string ArtifactPaths::report_text() const { return out + "/report.txt"; }
std::string ArtifactPaths::report_table() const { return out + "/report.tsv"; }

namespace {

// Ensemble voters carry their clamped scores; a selection whose scores are
// all non-positive falls back to uniform weights so reparse always gets
// strictly positive votes.
std::vector<double> ensemble_weights(const std::vector<double>& scores,
                                     const std::vector<size_t>& picked) {
  std::vector<double> w;
  w.reserve(picked.size());
  bool positive = true;
  for (size_t i : picked) {
    const double v = std::max(scores[i], 0.0);
    if (v <= 0.0) positive = false;
    w.push_back(v);
  }
  if (!positive) std::fill(w.begin(), w.end(), 1.0);
  return w;
}

class Pipeline {
 public:
  Pipeline(const ExperimentConfig& cfg, std::ostream& log)
      : cfg_(cfg), paths_{cfg.out_dir}, log_(log) {}

  void run(const std::string& stage) {
    ensure_dir(cfg_.out_dir);
    write_text_file(paths_.resolved_config(), cfg_.echo());
    if (stage == "all") {
      for (const auto& s : pipeline_stages()) dispatch(s);
    } else {
      dispatch(stage);
    }
  }

 private:
  void dispatch(const std::string& stage) {
    log_ << "[" << stage << "] start\n";
    if (stage == "train-parsers") train_parsers();
    else if (stage == "cross-parse") cross_parse_stage();
    else if (stage == "make-labels") make_labels_stage();
    else if (stage == "pretrain") pretrain_stage();
    else if (stage == "train-ilps") train_ilps_stage();
    else if (stage == "predict") predict_stage();
    else if (stage == "baselines") baselines_stage();
    else if (stage == "select") select_stage();
    else if (stage == "reparse") reparse_stage();
    else if (stage == "oracle") oracle_stage();
    else if (stage == "evaluate") evaluate_stage();
    else throw io_error("unknown stage '" + stage + "'");
    log_ << "[" << stage << "] done\n";
  }

  std::string need(const std::string& path, const std::string& stage) const {
    if (!file_exists(path))
      throw io_error("missing artifact " + path + "; run the '" + stage +
                     "' stage first");
    return path;
  }

  Treebank load_treebank(const std::string& lang) const {
    return read_conllu(cfg_.treebank_path(lang), lang);
  }

  std::vector<Treebank> load_source_treebanks() const {
    std::vector<Treebank> tbs;
    tbs.reserve(cfg_.source_languages.size());
    for (const auto& lang : cfg_.source_languages)
      tbs.push_back(delexicalize(load_treebank(lang)));
    return tbs;
  }

  std::vector<SourceParserModel> load_parsers() const {
    std::vector<SourceParserModel> parsers;
    parsers.reserve(cfg_.source_languages.size());
    for (const auto& lang : cfg_.source_languages)
      parsers.push_back(load_parser_model(
          need(paths_.parser_model(lang), "train-parsers")));
    return parsers;
  }

  IlpsModel load_model(const std::string& prefix,
                       const std::string& stage) const {
    need(prefix + ".params", stage);
    need(prefix + ".manifest", stage);
    return IlpsModel::load(prefix);
  }

  // Gold sentences with predicted heads swapped in, relations cleared.
  static Treebank with_heads(const Treebank& gold,
                             const std::vector<std::vector<int>>& heads) {
    Treebank out = gold;
    for (size_t i = 0; i < out.sentences.size(); ++i) {
      auto& s = out.sentences[i];
      require(heads[i].size() == s.tokens.size(),
              "with_heads: length mismatch at sentence " + s.id);
      for (size_t d = 0; d < s.tokens.size(); ++d) {
        s.tokens[d].head = heads[i][d];
        s.tokens[d].deprel = "_";
      }
    }
    return out;
  }

  Treebank load_parse(const std::string& target, const std::string& source,
                      const std::string& stage, size_t expected) const {
    Treebank tb =
        read_conllu(need(paths_.source_parse(target, source), stage), target);
    if (tb.size() != expected)
      throw io_error(paths_.source_parse(target, source) + ": expected " +
                     std::to_string(expected) + " sentences, found " +
                     std::to_string(tb.size()));
    return tb;
  }

  void train_parsers() {
    std::vector<Treebank> tbs = load_source_treebanks();
    if (cfg_.resample) tbs = resample_to_mean(tbs, cfg_.seed_for("resample"));
    ensure_dir(cfg_.out_dir + "/parsers");
    const uint64_t base = cfg_.seed_for("parsers");
    parallel_for(tbs.size(), cfg_.jobs, [&](size_t i) {
      SourceParserModel m =
          train_parser(tbs[i], cfg_.parser_epochs, mix_seed(base, tbs[i].language));
      save_parser_model(m, paths_.parser_model(tbs[i].language));
    });
    for (const auto& tb : tbs)
      log_ << "  trained " << tb.language << " on " << tb.size() << " sentences\n";
  }

  void cross_parse_stage() {
    const std::vector<SourceParserModel> parsers = load_parsers();
    const std::vector<Treebank> sources = load_source_treebanks();

    const auto records = cross_parse(parsers, sources, cfg_.jobs);
    save_cross_parse(records, paths_.cross_parse());
    log_ << "  " << records.size() << " cross-parse records\n";

    // Candidate trees for the held-out targets, one file per source parser.
    struct Unit {
      const Treebank* gold;
      const SourceParserModel* parser;
    };
    std::vector<Treebank> targets;
    for (const auto& lang : cfg_.target_languages) {
      targets.push_back(load_treebank(lang));
      ensure_dir(cfg_.out_dir + "/parses/" + lang);
    }
    std::vector<Unit> units;
    for (const auto& tb : targets)
      for (const auto& p : parsers) units.push_back({&tb, &p});
    parallel_for(units.size(), cfg_.jobs, [&](size_t u) {
      const Treebank& gold = *units[u].gold;
      std::vector<std::vector<int>> heads;
      heads.reserve(gold.size());
      for (const auto& s : gold.sentences)
        heads.push_back(parse(*units[u].parser, s));
      write_conllu(with_heads(gold, heads),
                   paths_.source_parse(gold.language, units[u].parser->language));
    });
    for (const auto& tb : targets)
      log_ << "  parsed " << tb.language << " with " << parsers.size()
           << " parsers\n";
  }

  void make_labels_stage() {
    const auto records =
        load_cross_parse(need(paths_.cross_parse(), "cross-parse"));
    auto examples = make_labels(records, load_source_treebanks());
    if (cfg_.resample)
      examples =
          resample_examples_to_mean(examples, cfg_.seed_for("resample-labels"));
    auto [train, dev] =
        split_examples(examples, cfg_.dev_fraction, cfg_.seed_for("split"));
    save_examples(train, paths_.labels_train());
    save_examples(dev, paths_.labels_dev());
    log_ << "  " << train.size() << " train / " << dev.size()
         << " dev examples\n";
  }

  void pretrain_stage() {
    std::vector<std::vector<std::string>> seqs;
    for (const auto& tb : load_source_treebanks())
      for (const auto& s : tb.sentences) seqs.push_back(s.upos());
    IlpsModel model(cfg_.ilps, cfg_.source_languages, cfg_.seed_for("init"));
    model.pretrain_mlm(seqs, cfg_.mlm_steps, cfg_.seed_for("mlm"), &log_);
    model.save(paths_.ilps_pre_prefix());
  }

  void train_ilps_stage() {
    IlpsModel model = load_model(paths_.ilps_pre_prefix(), "pretrain");
    const auto train = load_examples(need(paths_.labels_train(), "make-labels"));
    const auto dev = load_examples(need(paths_.labels_dev(), "make-labels"));
    model.train_regressor(train, dev, cfg_.max_epochs,
                          cfg_.seed_for("regressor"), &log_);
    model.save(paths_.ilps_prefix());
  }

  void predict_stage() {
    const IlpsModel model = load_model(paths_.ilps_prefix(), "train-ilps");
    ensure_dir(cfg_.out_dir + "/scores");
    for (const auto& lang : cfg_.target_languages) {
      const Treebank tb = load_treebank(lang);
      save_score_matrix(model.predict_scores(tb.sentences, &log_),
                        paths_.scores(lang));
      log_ << "  scored " << tb.size() << " " << lang << " sentences\n";
    }
  }

  void baselines_stage() {
    std::vector<Treebank> sources;
    for (const auto& lang : cfg_.source_languages)
      sources.push_back(load_treebank(lang));
    const auto vectors = read_language_vectors(cfg_.lang_vectors_path);
    std::vector<LanguageVector> source_vecs;
    for (const auto& lang : cfg_.source_languages)
      source_vecs.push_back(find_language_vector(vectors, lang));

    std::ostringstream os;
    os << artifact_header("baselines", 1) << "\n";
    os << "target\tsource\tkl\tkl_similarity\tcosine\n";
    for (const auto& target : cfg_.target_languages) {
      const Treebank tb = load_treebank(target);
      const auto target_counts = trigram_counts(tb);
      const auto cosines = cosine_similarities(
          find_language_vector(vectors, target), source_vecs);
      for (size_t i = 0; i < sources.size(); ++i) {
        const double kl = kl_target_source(
            target_counts, trigram_counts(sources[i]), cfg_.kl_alpha);
        os << target << "\t" << sources[i].language << "\t"
           << format_double(kl) << "\t" << format_double(kl_similarity(kl))
           << "\t" << format_double(cosines[i]) << "\n";
      }
    }
    write_text_file(paths_.baselines(), os.str());
    log_ << "  baseline similarities for " << cfg_.target_languages.size()
         << " targets\n";
  }

  // kl_similarity and cosine per source, in source-language order.
  using SimilarityTable =
      std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>;

  SimilarityTable load_baselines() const {
    const std::string path = need(paths_.baselines(), "baselines");
    std::ifstream is(path);
    if (!is) throw io_error("cannot open " + path);
    expect_artifact_header(is, "baselines", 1, path);
    std::string line;
    std::getline(is, line);  // column header
    std::map<std::string, std::map<std::string, std::pair<double, double>>> raw;
    int lineno = 2;
    while (std::getline(is, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto cols = split(line, '\t');
      if (cols.size() != 5)
        throw io_error(path + ": line " + std::to_string(lineno) +
                       ": expected 5 columns");
      raw[cols[0]][cols[1]] = {std::stod(cols[3]), std::stod(cols[4])};
    }
    SimilarityTable table;
    for (const auto& target : cfg_.target_languages) {
      auto t = raw.find(target);
      std::vector<double> kl, cos;
      for (const auto& source : cfg_.source_languages) {
        if (t == raw.end() || !t->second.count(source))
          throw io_error(path + " does not cover " + target + "/" + source +
                         "; rerun the 'baselines' stage");
        kl.push_back(t->second.at(source).first);
        cos.push_back(t->second.at(source).second);
      }
      table[target] = {std::move(kl), std::move(cos)};
    }
    return table;
  }

  void select_stage() {
    const SimilarityTable sims = load_baselines();
    ensure_dir(cfg_.out_dir + "/selection");
    std::vector<int> all_ids;
    for (size_t i = 0; i < cfg_.source_languages.size(); ++i)
      all_ids.push_back(static_cast<int>(i) + 1);

    for (const auto& target : cfg_.target_languages) {
      const ScoreMatrix m =
          load_score_matrix(need(paths_.scores(target), "predict"));

      std::vector<SelectionEntry> pure, ens;
      for (size_t j = 0; j < m.sentences(); ++j) {
        std::vector<double> column;
        column.reserve(m.parsers());
        for (size_t i = 0; i < m.parsers(); ++i) column.push_back(m.scores[i][j]);

        const size_t best = select_pure_ilps(m, j);
        pure.push_back({m.sentence_ids[j], {m.parser_ids[best]}, {1.0}});

        const auto picked = threshold_set(column, m.parser_ids, cfg_.tau);
        SelectionEntry e{m.sentence_ids[j], {}, ensemble_weights(column, picked)};
        for (size_t i : picked) e.parser_ids.push_back(m.parser_ids[i]);
        ens.push_back(std::move(e));
      }
      save_selection(pure, paths_.selection(target, "ilps"));
      save_selection(ens, paths_.selection(target, "ens-ilps"));

      const std::vector<double> means = aggregate_sbps(m);
      save_treebank_level(target, "sbps-ilps", "ens-sbps-ilps", means,
                          m.parser_ids);
      save_treebank_level(target, "kl-sbps", "ens-kl-sbps",
                          sims.at(target).first, all_ids);
      save_treebank_level(target, "l2v-sbps", "ens-l2v-sbps",
                          sims.at(target).second, all_ids);
      log_ << "  selections written for " << target << "\n";
    }
  }

  void save_treebank_level(const std::string& target, const std::string& pure,
                           const std::string& ens,
                           const std::vector<double>& values,
                           const std::vector<int>& ids) const {
    const size_t best = select_sbps(values, ids);
    save_selection({{"*", {ids[best]}, {1.0}}}, paths_.selection(target, pure));

    const auto picked = threshold_set(values, ids, cfg_.tau);
    SelectionEntry e{"*", {}, ensemble_weights(values, picked)};
    for (size_t i : picked) e.parser_ids.push_back(ids[i]);
    save_selection({e}, paths_.selection(target, ens));
  }

  void reparse_stage() {
    for (const auto& target : cfg_.target_languages) {
      const Treebank gold = load_treebank(target);

      // trees[source index][sentence index] -> head vector
      std::vector<std::vector<std::vector<int>>> trees;
      for (const auto& source : cfg_.source_languages) {
        const Treebank tb = load_parse(target, source, "cross-parse", gold.size());
        std::vector<std::vector<int>> heads;
        heads.reserve(tb.size());
        for (const auto& s : tb.sentences) heads.push_back(s.heads());
        trees.push_back(std::move(heads));
      }

      for (const auto& system : selection_systems()) {
        const auto entries =
            load_selection(need(paths_.selection(target, system), "select"));
        std::map<std::string, const SelectionEntry*> by_id;
        const SelectionEntry* global = nullptr;
        for (const auto& e : entries) {
          if (e.sentence_id == "*") global = &e;
          else by_id[e.sentence_id] = &e;
        }

        std::vector<std::vector<int>> heads(gold.size());
        parallel_for(gold.size(), cfg_.jobs, [&](size_t j) {
          const Sentence& s = gold.sentences[j];
          const SelectionEntry* e = global;
          if (!e) {
            auto it = by_id.find(s.id);
            if (it == by_id.end())
              throw io_error(paths_.selection(target, system) +
                             " has no entry for sentence " + s.id +
                             "; rerun the 'select' stage");
            e = it->second;
          }
          std::vector<std::vector<int>> voters;
          for (int pid : e->parser_ids) {
            if (pid < 1 || pid > static_cast<int>(trees.size()))
              throw io_error(paths_.selection(target, system) +
                             ": parser id " + std::to_string(pid) +
                             " out of range");
            voters.push_back(trees[pid - 1][j]);
          }
          heads[j] = reparse(voters, e->weights);
        });
        write_conllu(with_heads(gold, heads),
                     paths_.system_parse(target, system));
      }
      log_ << "  reparsed " << target << " for "
           << selection_systems().size() << " systems\n";
    }
  }

  std::vector<std::vector<SentenceScore>> parser_scores(
      const std::string& target, const Treebank& gold) const {
    std::vector<std::vector<SentenceScore>> by_parser;
    for (const auto& source : cfg_.source_languages) {
      const Treebank tb = load_parse(target, source, "cross-parse", gold.size());
      std::vector<SentenceScore> scores;
      scores.reserve(gold.size());
      for (size_t j = 0; j < gold.size(); ++j)
        scores.push_back(score_sentence(gold.sentences[j],
                                        tb.sentences[j].heads(),
                                        cfg_.include_punct));
      by_parser.push_back(std::move(scores));
    }
    return by_parser;
  }

  void oracle_stage() {
    std::ostringstream os;
    os << artifact_header("oracle", 1) << "\n";
    os << "target\tkind\tparser\tuas\n";
    for (const auto& target : cfg_.target_languages) {
      const Treebank gold = load_treebank(target);
      const auto by_parser = parser_scores(target, gold);
      const double ilps = oracle_ilps(by_parser);
      const OracleResult sbps = oracle_sbps(by_parser);
      os << target << "\toracle-ilps\t-\t" << format_double(ilps) << "\n";
      os << target << "\toracle-sbps\t"
         << cfg_.source_languages[sbps.parser_index] << "\t"
         << format_double(sbps.uas) << "\n";
      for (size_t i = 0; i < by_parser.size(); ++i)
        os << target << "\tparser\t" << cfg_.source_languages[i] << "\t"
           << format_double(micro_uas(by_parser[i])) << "\n";
      log_ << "  " << target << ": oracle ILPS " << format_fixed(100 * ilps, 2)
           << ", oracle SBPS " << format_fixed(100 * sbps.uas, 2) << " ("
           << cfg_.source_languages[sbps.parser_index] << ")\n";
    }
    write_text_file(paths_.oracle(), os.str());
  }

  void evaluate_stage() {
    std::vector<SystemScores> systems;
    for (const auto& source : cfg_.source_languages)
      systems.push_back({"src-" + source, {}});
    for (const auto& system : selection_systems())
      systems.push_back({system, {}});

    for (const auto& target : cfg_.target_languages) {
      const Treebank gold = load_treebank(target);
      size_t row = 0;
      for (const auto& source : cfg_.source_languages) {
        const Treebank tb = load_parse(target, source, "cross-parse", gold.size());
        auto& scores = systems[row++].by_language[target];
        for (size_t j = 0; j < gold.size(); ++j)
          scores.push_back(score_sentence(gold.sentences[j],
                                          tb.sentences[j].heads(),
                                          cfg_.include_punct));
      }
      for (const auto& system : selection_systems()) {
        const Treebank tb = read_conllu(
            need(paths_.system_parse(target, system), "reparse"), target);
        if (tb.size() != gold.size())
          throw io_error(paths_.system_parse(target, system) +
                         ": sentence count mismatch");
        auto& scores = systems[row++].by_language[target];
        for (size_t j = 0; j < gold.size(); ++j)
          scores.push_back(score_sentence(gold.sentences[j],
                                          tb.sentences[j].heads(),
                                          cfg_.include_punct));
      }
    }

    const EvaluationReport report = build_report(
        systems, cfg_.reference_system, cfg_.significance_alpha);
    const std::string rendered = render_report(report);
    write_text_file(paths_.report_text(), rendered);
    write_text_file(paths_.report_table(), report_tsv(report));
    log_ << rendered;
  }

  const ExperimentConfig& cfg_;
  ArtifactPaths paths_;
  std::ostream& log_;
};

}  // namespace

void run_stage(const std::string& stage, const ExperimentConfig& cfg,
               std::ostream& log) {
  require(is_pipeline_stage(stage), "unknown stage '" + stage + "'");
  Pipeline(cfg, log).run(stage);
}

}  // namespace parsel
