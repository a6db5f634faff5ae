// stylemux: factored multilingual style-transfer NMT, end to end.
//
// Subcommands chain into a pipeline over plain-text artifacts:
//   gen-synth -> preprocess -> train -> translate / evaluate / classify
// demo runs the whole chain at toy scale in one invocation. Every run dumps
// its fully resolved configuration next to its outputs, so a run is
// reproducible from the output directory plus the input files.
//
// Exit codes: 0 success, 1 usage or configuration, 2 data or format,
// 3 numerical abort.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "stylemux/classifier.hpp"
#include "stylemux/corpus.hpp"
#include "stylemux/errors.hpp"
#include "stylemux/io.hpp"
#include "stylemux/log.hpp"
#include "stylemux/metrics.hpp"
#include "stylemux/model.hpp"
#include "stylemux/synthlang.hpp"
#include "stylemux/text_pipeline.hpp"
#include "stylemux/trainer.hpp"

namespace {

using namespace stylemux;

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
  return buf;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Re-raises the in-flight library error with an input location prefixed, so
// per-sentence failures name the file and line they came from.
[[noreturn]] void rethrow_located(const std::string& file, size_t line_no) {
  const std::string at = file + ":" + std::to_string(line_no) + ": ";
  try {
    throw;
  } catch (const ConfigError& e) {
    throw ConfigError(at + e.what());
  } catch (const DataError& e) {
    throw DataError(at + e.what());
  } catch (const DimensionError& e) {
    throw DimensionError(at + e.what());
  } catch (const IndexError& e) {
    throw IndexError(at + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(at + e.what());
  } catch (const Error& e) {
    throw DataError(at + e.what());
  }
}

std::map<std::string, std::string> read_kv(const std::string& path) {
  std::map<std::string, std::string> kv;
  for (const auto& raw : io::read_lines(path)) {
    auto line = io::trim(raw);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(path + ": expected key=value, got '" + line + "'");
    }
    kv[io::trim(line.substr(0, eq))] = io::trim(line.substr(eq + 1));
  }
  return kv;
}

const std::string& kv_get(const std::map<std::string, std::string>& kv, const std::string& key,
                          const std::string& path) {
  auto it = kv.find(key);
  if (it == kv.end()) throw DataError(path + ": missing key '" + key + "'");
  return it->second;
}

// ---- shared text codec ----

struct TextCodec {
  text::SubwordVocabulary vocab;
  text::TruecaseModel truecase;
};

TextCodec load_codec(const std::string& prep, const std::string& vocab_path,
                     const std::string& truecase_path) {
  std::string vp = !vocab_path.empty() ? vocab_path : prep.empty() ? "" : prep + "/vocab.bpe";
  std::string tp =
      !truecase_path.empty() ? truecase_path : prep.empty() ? "" : prep + "/truecase.tc";
  if (vp.empty() || tp.empty()) {
    throw ConfigError("give --prep, or both --vocab and --truecase");
  }
  return {text::SubwordVocabulary::load(vp), text::TruecaseModel::load(tp)};
}

void check_direction(const model::ModelConfig& cfg, int tgt_lang, int tgt_style) {
  if (tgt_lang < 0 || tgt_lang >= cfg.num_langs) {
    throw ConfigError("tgt-lang " + std::to_string(tgt_lang) + " out of range; the model covers " +
                      std::to_string(cfg.num_langs) + " languages");
  }
  if (tgt_style < 0 || tgt_style >= cfg.num_styles) {
    throw ConfigError("tgt-style " + std::to_string(tgt_style) +
                      " out of range; the model covers " + std::to_string(cfg.num_styles) +
                      " styles");
  }
}

// Full text pipeline around beam search for a batch of raw lines. Sentences
// are independent, so workers > 1 stripes them across threads with outputs
// landing by index; results are identical at any worker count.
std::vector<std::string> translate_lines(const model::Params& p, const TextCodec& codec,
                                         const std::vector<std::string>& lines, int tgt_lang,
                                         int tgt_style, int beam, int max_len, int workers,
                                         const std::string& src_name) {
  std::vector<std::string> out(lines.size());
  auto one = [&](size_t i) {
    if (io::trim(lines[i]).empty()) return;  // blank in, blank out
    try {
      auto toks = codec.truecase.apply(text::tokenize(lines[i]));
      auto ids = codec.vocab.encode(toks);
      auto hyp = model::beam_search(p, ids, tgt_lang, tgt_style, beam, max_len);
      auto words = text::TruecaseModel::invert(codec.vocab.decode(hyp));
      out[i] = text::detokenize(words);
    } catch (const Error&) {
      rethrow_located(src_name, i + 1);
    }
  };

  size_t nthreads = std::min<size_t>(static_cast<size_t>(std::max(workers, 1)),
                                     std::max<size_t>(lines.size(), 1));
  if (nthreads <= 1) {
    for (size_t i = 0; i < lines.size(); ++i) one(i);
    return out;
  }
  std::mutex mu;
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  auto strip = [&](size_t t0) {
    for (size_t i = t0; i < lines.size(); i += nthreads) {
      if (failed.load(std::memory_order_relaxed)) return;
      try {
        one(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
        failed = true;
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (size_t t = 0; t < nthreads; ++t) pool.emplace_back(strip, t);
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
  return out;
}

// ---- gen-synth ----

struct GenArgs {
  synth::SynthSpec spec;
  int train = 2000;
  std::string out;
};

void run_gen_synth(const GenArgs& a) {
  Stopwatch sw;
  auto data = synth::generate(a.spec, a.train);
  synth::write_corpus(data, a.out);
  std::cout << "gen-synth: " << a.spec.num_langs << " languages x " << a.spec.num_styles
            << " styles, " << a.train << " train / " << a.spec.num_dev << " dev sentences per style, "
            << a.spec.num_test << " test, " << fmt("%.1fs", sw.seconds()) << " -> " << a.out
            << "\n";
}

// ---- preprocess ----

struct PrepArgs {
  std::string data, out;
  int vocab_size = 8000;
  int max_tokens = 100;
  double max_ratio = 9.0;
};

struct DirectionFile {
  std::string src_path, tgt_path;
  int src_lang = -1, tgt_lang = -1, style = -1;
};

// Finds <kind>.s{S}.l{A}-l{B}.src/.tgt pairs under dir.
std::vector<DirectionFile> scan_directions(const std::string& dir, const std::string& kind) {
  std::vector<DirectionFile> found;
  for (const auto& name : io::list_dir(dir)) {
    auto parts = io::split(name, '.');
    if (parts.size() != 4 || parts[0] != kind || parts[3] != "src") continue;
    if (parts[1].size() < 2 || parts[1][0] != 's') continue;
    auto langs = io::split(parts[2], '-');
    if (langs.size() != 2 || langs[0].size() < 2 || langs[0][0] != 'l' || langs[1].size() < 2 ||
        langs[1][0] != 'l') {
      continue;
    }
    DirectionFile d;
    d.style = static_cast<int>(io::parse_int(parts[1].substr(1), "style in " + name));
    d.src_lang = static_cast<int>(io::parse_int(langs[0].substr(1), "source language in " + name));
    d.tgt_lang = static_cast<int>(io::parse_int(langs[1].substr(1), "target language in " + name));
    d.src_path = dir + "/" + name;
    d.tgt_path = dir + "/" + name.substr(0, name.size() - 4) + ".tgt";
    if (!io::exists(d.tgt_path)) throw DataError(d.src_path + " has no matching .tgt file");
    found.push_back(d);
  }
  return found;
}

// Language and style counts from the training file names; ids must be dense.
std::pair<int, int> grid_shape(const std::vector<DirectionFile>& dirs, const std::string& where) {
  std::set<int> langs, styles;
  for (const auto& d : dirs) {
    langs.insert(d.src_lang);
    langs.insert(d.tgt_lang);
    styles.insert(d.style);
  }
  int m = *langs.rbegin() + 1, n = *styles.rbegin() + 1;
  if (static_cast<int>(langs.size()) != m || static_cast<int>(styles.size()) != n) {
    throw DataError("language or style ids under " + where + " are not contiguous from 0");
  }
  return {m, n};
}

void run_preprocess(const PrepArgs& a) {
  Stopwatch sw;
  auto train_dirs = scan_directions(a.data, "train");
  if (train_dirs.empty()) {
    throw DataError("no train.s*.l*-l*.src files under " + a.data);
  }
  auto dev_dirs = scan_directions(a.data, "dev");
  auto [m, n] = grid_shape(train_dirs, a.data);

  // Casing and merge statistics come from the unique training lines; each
  // sentence realization appears in several direction files.
  std::set<std::string> uniq;
  for (const auto& d : train_dirs) {
    for (auto& line : io::read_lines(d.src_path)) uniq.insert(std::move(line));
    for (auto& line : io::read_lines(d.tgt_path)) uniq.insert(std::move(line));
  }
  std::vector<std::vector<std::string>> stat_corpus;
  stat_corpus.reserve(uniq.size());
  for (const auto& line : uniq) stat_corpus.push_back(text::tokenize(line));
  auto truecase = text::TruecaseModel::train(stat_corpus);
  for (auto& toks : stat_corpus) toks = truecase.apply(std::move(toks));
  auto vocab = text::SubwordVocabulary::learn_from_corpus(stat_corpus, a.vocab_size);
  stat_corpus.clear();
  stat_corpus.shrink_to_fit();

  corpus::FilterConfig fcfg{a.max_tokens, a.max_ratio};
  auto encode_set = [&](const std::vector<DirectionFile>& dirs, corpus::FilterStats& stats) {
    std::vector<corpus::FactoredExample> out;
    for (const auto& d : dirs) {
      auto pairs = corpus::read_parallel(d.src_path, d.tgt_path);
      auto kept = corpus::filter_corpus(pairs, stats, fcfg);
      for (const auto& pr : kept) {
        out.push_back(corpus::annotate_factors(truecase.apply(pr.src_toks),
                                               truecase.apply(pr.tgt_toks), d.tgt_lang, d.style,
                                               vocab, m, n));
      }
    }
    return out;
  };
  corpus::FilterStats train_stats, dev_stats;
  auto train_set = encode_set(train_dirs, train_stats);
  if (train_set.empty()) throw DataError("every training pair under " + a.data + " was filtered out");
  auto dev_set = encode_set(dev_dirs, dev_stats);

  io::ensure_dir(a.out);
  vocab.save(a.out + "/vocab.bpe");
  truecase.save(a.out + "/truecase.tc");
  corpus::write_shard(a.out + "/train.shard.tsv", train_set);
  corpus::write_shard(a.out + "/dev.shard.tsv", dev_set);
  io::write_file(a.out + "/meta.cfg", "num_langs=" + std::to_string(m) + "\nnum_styles=" +
                                          std::to_string(n) + "\n");
  io::write_file(a.out + "/filter.txt",
                 "train: " + train_stats.summary() + "\ndev: " + dev_stats.summary() + "\n");
  std::cout << "preprocess: " << train_set.size() << " train / " << dev_set.size()
            << " dev examples, " << vocab.size() << " pieces, " << fmt("%.1fs", sw.seconds())
            << " -> " << a.out << "\n";
  log::info("train filter: " + train_stats.summary());
}

// ---- train ----

struct TrainArgs {
  std::string data, out;
  int layers = 2, dim = 64, heads = 4, ffn = 0, factor_dim = 4, model_max_len = 256;
  double dropout = 0.1;
  double lr = 2e-4, decay = 0.7;
  int patience_decay = 8, patience_stop = 32;
  int ckpt_interval = 4000, max_updates = 0, batch_words = 2048;
  uint64_t seed = 1;
};

train::TrainResult run_train(const TrainArgs& a) {
  auto vocab = text::SubwordVocabulary::load(a.data + "/vocab.bpe");
  auto meta_path = a.data + "/meta.cfg";
  auto meta = read_kv(meta_path);

  model::ModelConfig cfg;
  cfg.layers = a.layers;
  cfg.model_dim = a.dim;
  cfg.heads = a.heads;
  cfg.ffn_dim = a.ffn;
  cfg.factor_embed_dim = a.factor_dim;
  cfg.dropout_p = a.dropout;
  cfg.max_len = a.model_max_len;
  cfg.vocab_size = vocab.size();
  cfg.num_langs =
      static_cast<int>(io::parse_int(kv_get(meta, "num_langs", meta_path), "num_langs"));
  cfg.num_styles =
      static_cast<int>(io::parse_int(kv_get(meta, "num_styles", meta_path), "num_styles"));
  cfg.finalize();
  cfg.validate();

  auto train_set = corpus::read_shard(a.data + "/train.shard.tsv");
  auto dev_set = corpus::read_shard(a.data + "/dev.shard.tsv");
  if (train_set.empty()) throw DataError(a.data + "/train.shard.tsv is empty");
  if (dev_set.empty()) {
    throw DataError(a.data + "/dev.shard.tsv is empty; training needs validation data");
  }

  Rng rng(a.seed);
  auto params = model::init_params<float>(cfg, rng);
  train::TrainConfig tc;
  tc.lr0 = a.lr;
  tc.decay_factor = a.decay;
  tc.patience_decay = a.patience_decay;
  tc.patience_stop = a.patience_stop;
  tc.checkpoint_interval = a.ckpt_interval;
  tc.seed = a.seed;
  tc.max_updates = a.max_updates;
  tc.max_words_per_batch = a.batch_words;
  tc.out_dir = a.out;
  tc.validate();

  Stopwatch sw;
  auto result = train::train_loop(params, train_set, dev_set, tc);
  std::cout << "train: " << result.steps << " updates, best val ppl "
            << fmt("%.4f", result.best_ppl) << (result.early_stopped ? ", early stop" : "") << ", "
            << fmt("%.1fs", sw.seconds()) << " -> " << a.out << "/best.ckpt\n";
  return result;
}

// ---- translate ----

struct TranslateArgs {
  std::string model, prep, vocab, truecase, input, out;
  int tgt_lang = 0, tgt_style = 0;
  int beam = 5, max_len = 0, workers = 1;
};

void run_translate(const TranslateArgs& a) {
  if (a.beam < 1) throw ConfigError("beam must be at least 1");
  if (a.workers < 1) throw ConfigError("workers must be at least 1");
  auto params = model::load_params(a.model);
  check_direction(params.cfg, a.tgt_lang, a.tgt_style);
  auto codec = load_codec(a.prep, a.vocab, a.truecase);
  auto lines = io::read_lines(a.input);
  Stopwatch sw;
  auto outputs = translate_lines(params, codec, lines, a.tgt_lang, a.tgt_style, a.beam, a.max_len,
                                 a.workers, a.input);
  io::write_lines(a.out, outputs);
  std::cout << "translate: " << lines.size() << " lines -> lang " << a.tgt_lang << " style "
            << a.tgt_style << ", beam " << a.beam << ", " << fmt("%.1fs", sw.seconds()) << " -> "
            << a.out << "\n";
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string model, prep, vocab, truecase, data, out, classifiers;
  int src_lang = 0, tgt_lang = 0;
  int beam = 5, max_len = 0, workers = 1;
};

metrics::EvalReport run_evaluate(const EvaluateArgs& a) {
  if (a.beam < 1) throw ConfigError("beam must be at least 1");
  if (a.workers < 1) throw ConfigError("workers must be at least 1");
  auto params = model::load_params(a.model);
  auto codec = load_codec(a.prep, a.vocab, a.truecase);
  auto lex = synth::load_lexicon(a.data + "/lexicon.json");
  const int n = lex.spec.num_styles;
  if (a.src_lang < 0 || a.src_lang >= lex.spec.num_langs) {
    throw ConfigError("src-lang " + std::to_string(a.src_lang) + " out of range; the grid covers " +
                      std::to_string(lex.spec.num_langs) + " languages");
  }
  if (a.tgt_lang < 0 || a.tgt_lang >= lex.spec.num_langs) {
    throw ConfigError("tgt-lang " + std::to_string(a.tgt_lang) + " out of range; the grid covers " +
                      std::to_string(lex.spec.num_langs) + " languages");
  }
  check_direction(params.cfg, a.tgt_lang, n - 1);

  auto sidecar = synth::load_sidecar(a.data + "/test.meta.jsonl");
  auto synonyms = metrics::SynonymTable::load(a.data + "/synonyms.tsv");
  auto grid_file = [&](int lang, int style) {
    return a.data + "/test.l" + std::to_string(lang) + ".s" + std::to_string(style) + ".txt";
  };
  std::vector<std::vector<std::string>> src_lines(n);
  std::vector<std::vector<std::vector<std::string>>> ref_toks(n);
  for (int s = 0; s < n; ++s) {
    src_lines[s] = io::read_lines(grid_file(a.src_lang, s));
    if (src_lines[s].empty()) throw DataError(grid_file(a.src_lang, s) + " is empty");
    for (const auto& line : io::read_lines(grid_file(a.tgt_lang, s))) {
      ref_toks[s].push_back(text::tokenize(line));
    }
  }
  std::vector<cls::TextCnn> cnns;
  if (!a.classifiers.empty()) {
    for (int t = 0; t < n; ++t) {
      cnns.push_back(cls::load_classifier(a.classifiers + "/style" + std::to_string(t) + ".cnn"));
    }
  }

  io::ensure_dir(a.out);
  std::vector<std::string> style_names;
  for (int s = 0; s < n; ++s) style_names.push_back("s" + std::to_string(s));
  metrics::EvalReport report(style_names);
  report.meta["model"] = a.model;
  report.meta["data"] = a.data;
  report.meta["src_lang"] = std::to_string(a.src_lang);
  report.meta["tgt_lang"] = std::to_string(a.tgt_lang);
  report.meta["beam"] = std::to_string(a.beam);

  const std::string pair = "l" + std::to_string(a.src_lang) + "-l" + std::to_string(a.tgt_lang);
  std::string transfer_tsv =
      "src_style\ttgt_style\tmarker_sites\tmarker_conversion\tclitic_sites\tclitic_rate\t"
      "synonym_sites\tsynonym_accuracy\n";
  Stopwatch sw;
  for (int s = 0; s < n; ++s) {
    for (int t = 0; t < n; ++t) {
      auto sys = translate_lines(params, codec, src_lines[s], a.tgt_lang, t, a.beam, a.max_len,
                                 a.workers, grid_file(a.src_lang, s));
      io::write_lines(a.out + "/sys." + pair + ".s" + std::to_string(s) + "-s" + std::to_string(t) +
                          ".txt",
                      sys);
      std::vector<std::vector<std::string>> hyp_toks;
      hyp_toks.reserve(sys.size());
      for (const auto& line : sys) hyp_toks.push_back(text::tokenize(line));

      auto& cell = report.cell(s, t);
      cell.bleu = metrics::bleu(hyp_toks, ref_toks[t]);
      cell.meteor = metrics::meteor_lite(hyp_toks, ref_toks[t], synonyms);
      cell.contractions_ref = metrics::count_contractions(ref_toks[t]);
      cell.contractions_sys = metrics::count_contractions(hyp_toks);
      if (!cnns.empty()) {
        cell.classified_ref_pct = cls::classify_corpus(cnns[t], ref_toks[s]);
        cell.classified_sys_pct = cls::classify_corpus(cnns[t], hyp_toks);
      }

      auto ts = synth::score_style_transfer(lex, sidecar, sys, a.tgt_lang, s, t);
      transfer_tsv += std::to_string(s) + "\t" + std::to_string(t) + "\t" +
                      std::to_string(ts.marker_sites) + "\t" + fmt("%.6f", ts.marker_conversion()) +
                      "\t" + std::to_string(ts.clitic_sites) + "\t" + fmt("%.6f", ts.clitic_rate()) +
                      "\t" + std::to_string(ts.synonym_sites) + "\t" +
                      fmt("%.6f", ts.synonym_accuracy()) + "\n";
      log::info("evaluate " + pair + " s" + std::to_string(s) + "->s" + std::to_string(t) +
                ": bleu " + fmt("%.3f", cell.bleu) + ", meteor " + fmt("%.3f", cell.meteor));
    }
  }
  report.finalize();
  io::write_file(a.out + "/report." + pair + ".tsv", report.to_tsv());
  io::write_file(a.out + "/report." + pair + ".txt", report.render());
  io::write_file(a.out + "/transfer." + pair + ".tsv", transfer_tsv);
  std::cout << report.render();
  std::cout << "evaluate: " << n * n << " style cells, " << fmt("%.1fs", sw.seconds()) << " -> "
            << a.out << "\n";
  return report;
}

// ---- classify ----

struct ClassifyArgs {
  bool train_mode = false;
  // training
  std::string data, out;
  int style = -1;  // -1 trains every style
  int max_per_style = 0;
  cls::CnnConfig cnn;
  cls::ClassifierTrainConfig tc;
  // inference
  std::string model, input, report;
};

// Unique tokenized training sentences per style; every emitted direction file
// of a style holds the same sentence pool in different orders and languages.
std::vector<std::vector<std::vector<std::string>>> style_corpora(const std::string& data, int n,
                                                                 int max_per_style,
                                                                 uint64_t seed) {
  auto dirs = scan_directions(data, "train");
  std::vector<std::set<std::string>> uniq(static_cast<size_t>(n));
  for (const auto& d : dirs) {
    auto& bucket = uniq[static_cast<size_t>(d.style)];
    for (auto& line : io::read_lines(d.src_path)) bucket.insert(std::move(line));
    for (auto& line : io::read_lines(d.tgt_path)) bucket.insert(std::move(line));
  }
  std::vector<std::vector<std::vector<std::string>>> corpora(static_cast<size_t>(n));
  Rng rng(seed);
  for (int s = 0; s < n; ++s) {
    std::vector<std::string> lines(uniq[static_cast<size_t>(s)].begin(),
                                   uniq[static_cast<size_t>(s)].end());
    if (max_per_style > 0 && static_cast<int>(lines.size()) > max_per_style) {
      rng.shuffle(lines);
      lines.resize(static_cast<size_t>(max_per_style));
    }
    for (const auto& line : lines) corpora[static_cast<size_t>(s)].push_back(text::tokenize(line));
  }
  return corpora;
}

void run_classify_train(const ClassifyArgs& a) {
  auto dirs = scan_directions(a.data, "train");
  if (dirs.empty()) throw DataError("no train.s*.l*-l*.src files under " + a.data);
  auto [m, n] = grid_shape(dirs, a.data);
  (void)m;
  if (a.style >= n) {
    throw ConfigError("style " + std::to_string(a.style) + " out of range; the corpus has " +
                      std::to_string(n) + " styles");
  }
  auto corpora = style_corpora(a.data, n, a.max_per_style, a.tc.seed);

  io::ensure_dir(a.out);
  std::string acc_tsv = "style\tval_accuracy\n";
  std::vector<int> todo;
  if (a.style < 0) {
    for (int s = 0; s < n; ++s) todo.push_back(s);
  } else {
    todo.push_back(a.style);
  }
  for (int s : todo) {
    Stopwatch sw;
    auto trained = cls::train_classifier(s, corpora, a.cnn, a.tc);
    auto path = a.out + "/style" + std::to_string(s) + ".cnn";
    cls::save_classifier(trained.cnn, path);
    acc_tsv += std::to_string(s) + "\t" + fmt("%.6f", trained.val_accuracy) + "\n";
    std::cout << "classify: style " << s << " val accuracy " << fmt("%.4f", trained.val_accuracy)
              << ", " << fmt("%.1fs", sw.seconds()) << " -> " << path << "\n";
  }
  io::write_file(a.out + "/accuracy.tsv", acc_tsv);
}

void run_classify_infer(const ClassifyArgs& a) {
  auto cnn = cls::load_classifier(a.model);
  std::vector<std::vector<std::string>> sentences;
  for (const auto& line : io::read_lines(a.input)) sentences.push_back(text::tokenize(line));
  double pct = cls::classify_corpus(cnn, sentences);
  if (!a.report.empty()) {
    io::write_lines(a.report, cls::classification_report(cnn, sentences));
  }
  std::cout << "classify: " << sentences.size() << " sentences, " << fmt("%.2f", pct)
            << "% target style\n";
}

// ---- demo ----

struct DemoArgs {
  std::string out;
  uint64_t seed = 1;
  int langs = 2, styles = 2, concepts = 40;
  int train = 1200, dev = 80, test = 60;
  int vocab_size = 600;
  int dim = 32, layers = 1, heads = 4;
  int updates = 800, ckpt_interval = 200, batch_words = 1500;
  double lr = 1e-3;
  int beam = 2, workers = 1;
};

void run_demo(const DemoArgs& a) {
  if (a.langs < 2) throw ConfigError("demo needs at least two languages");
  if (a.styles < 2) throw ConfigError("demo needs at least two styles");
  io::ensure_dir(a.out);

  std::cout << "[1/5] gen-synth\n";
  GenArgs g;
  g.spec.seed = a.seed;
  g.spec.num_langs = a.langs;
  g.spec.num_styles = a.styles;
  g.spec.vocab_size = a.concepts;
  g.spec.num_dev = a.dev;
  g.spec.num_test = a.test;
  g.train = a.train;
  g.out = a.out + "/synth";
  run_gen_synth(g);

  std::cout << "[2/5] preprocess\n";
  PrepArgs p;
  p.data = g.out;
  p.out = a.out + "/prep";
  p.vocab_size = a.vocab_size;
  run_preprocess(p);

  std::cout << "[3/5] train\n";
  TrainArgs t;
  t.data = p.out;
  t.out = a.out + "/model";
  t.layers = a.layers;
  t.dim = a.dim;
  t.heads = a.heads;
  t.lr = a.lr;
  t.ckpt_interval = a.ckpt_interval;
  t.max_updates = a.updates;
  t.batch_words = a.batch_words;
  t.seed = a.seed;
  run_train(t);

  // The zero-shot path: style-0 source text, style-1 target factor.
  std::cout << "[4/5] translate (zero-shot: l0 s0 -> l1 s1)\n";
  TranslateArgs tr;
  tr.model = t.out + "/best.ckpt";
  tr.prep = p.out;
  tr.input = g.out + "/test.l0.s0.txt";
  tr.out = a.out + "/zero_shot.l0s0-l1s1.txt";
  tr.tgt_lang = 1;
  tr.tgt_style = 1;
  tr.beam = a.beam;
  tr.workers = a.workers;
  run_translate(tr);

  std::cout << "[5/5] evaluate (l0 -> l1, all style cells)\n";
  EvaluateArgs ev;
  ev.model = tr.model;
  ev.prep = p.out;
  ev.data = g.out;
  ev.out = a.out + "/eval";
  ev.src_lang = 0;
  ev.tgt_lang = 1;
  ev.beam = a.beam;
  ev.workers = a.workers;
  run_evaluate(ev);
  std::cout << "demo: artifacts under " << a.out << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"factored multilingual style-transfer NMT, end to end"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default(true);
  app.set_config("--config", "", "key=value file; command line flags override file values");
  app.allow_config_extras(CLI::config_extras_mode::error);

  GenArgs gen;
  auto* cg = app.add_subcommand("gen-synth", "generate a synthetic multilingual style corpus");
  cg->add_option("--out", gen.out, "output directory")->required();
  cg->add_option("--seed", gen.spec.seed, "generation seed");
  cg->add_option("--langs", gen.spec.num_langs, "number of languages");
  cg->add_option("--styles", gen.spec.num_styles, "number of styles");
  cg->add_option("--concepts", gen.spec.vocab_size, "concept vocabulary size");
  cg->add_option("--group-a", gen.spec.num_group_a, "suffix-variant concepts");
  cg->add_option("--group-b", gen.spec.num_group_b, "unrelated-stem variant concepts");
  cg->add_option("--group-c", gen.spec.num_group_c, "per-language-coin variant concepts");
  cg->add_option("--aux", gen.spec.num_aux, "auxiliary clitic concepts");
  cg->add_option("--min-len", gen.spec.min_len, "shortest sentence, in concepts");
  cg->add_option("--max-len", gen.spec.max_len, "longest sentence, in concepts");
  cg->add_option("--contraction-rate", gen.spec.contraction_rate,
                 "chance a sentence carries an auxiliary concept");
  cg->add_option("--train", gen.train, "training sentences per style (one pair per direction each)");
  cg->add_option("--dev", gen.spec.num_dev, "dev sentences per style");
  cg->add_option("--test", gen.spec.num_test, "test sentences (shared across the grid)");

  PrepArgs prep;
  auto* cp = app.add_subcommand("preprocess", "tokenize, truecase, segment, and shard a corpus");
  cp->add_option("--data", prep.data, "gen-synth output directory")->required();
  cp->add_option("--out", prep.out, "output directory")->required();
  cp->add_option("--vocab-size", prep.vocab_size, "subword vocabulary budget");
  cp->add_option("--max-tokens", prep.max_tokens, "filter: longest side kept");
  cp->add_option("--max-ratio", prep.max_ratio, "filter: largest src/tgt length ratio kept");

  TrainArgs tr;
  auto* ct = app.add_subcommand("train", "train a factored transformer on preprocessed shards");
  ct->add_option("--data", tr.data, "preprocess output directory")->required();
  ct->add_option("--out", tr.out, "checkpoint directory")->required();
  ct->add_option("--layers", tr.layers, "encoder and decoder layers");
  ct->add_option("--dim", tr.dim, "model width");
  ct->add_option("--heads", tr.heads, "attention heads");
  ct->add_option("--ffn", tr.ffn, "feed-forward width (0 = 4x dim)");
  ct->add_option("--factor-dim", tr.factor_dim, "language and style embedding width");
  ct->add_option("--dropout", tr.dropout, "dropout probability");
  ct->add_option("--model-max-len", tr.model_max_len, "longest supported sequence");
  ct->add_option("--lr", tr.lr, "initial learning rate");
  ct->add_option("--decay", tr.decay, "plateau decay factor");
  ct->add_option("--patience-decay", tr.patience_decay, "non-improving checkpoints before decay");
  ct->add_option("--patience-stop", tr.patience_stop, "non-improving checkpoints before stopping");
  ct->add_option("--ckpt-interval", tr.ckpt_interval, "updates between validations");
  ct->add_option("--max-updates", tr.max_updates, "update budget (0 = until early stop)");
  ct->add_option("--batch-words", tr.batch_words, "target words per batch");
  ct->add_option("--seed", tr.seed, "initialization and shuffling seed");

  TranslateArgs tl;
  auto* cl = app.add_subcommand("translate", "translate a file into a target language and style");
  cl->add_option("--model", tl.model, "checkpoint path")->required();
  cl->add_option("--prep", tl.prep, "preprocess directory holding vocab.bpe and truecase.tc");
  cl->add_option("--vocab", tl.vocab, "subword vocabulary path");
  cl->add_option("--truecase", tl.truecase, "truecase model path");
  cl->add_option("--input", tl.input, "source text, one sentence per line")->required();
  cl->add_option("--out", tl.out, "output file")->required();
  cl->add_option("--tgt-lang", tl.tgt_lang, "target language id")->required();
  cl->add_option("--tgt-style", tl.tgt_style, "target style id (may differ from the source style)")
      ->required();
  cl->add_option("--beam", tl.beam, "beam width");
  cl->add_option("--max-len", tl.max_len, "generation cap (0 = model limit)");
  cl->add_option("--workers", tl.workers, "sentence-level parallelism");

  EvaluateArgs ev;
  auto* ce = app.add_subcommand("evaluate", "score one language direction over every style cell");
  ce->add_option("--model", ev.model, "checkpoint path")->required();
  ce->add_option("--prep", ev.prep, "preprocess directory holding vocab.bpe and truecase.tc");
  ce->add_option("--vocab", ev.vocab, "subword vocabulary path");
  ce->add_option("--truecase", ev.truecase, "truecase model path");
  ce->add_option("--data", ev.data, "gen-synth output directory with the test grid")->required();
  ce->add_option("--out", ev.out, "report directory")->required();
  ce->add_option("--src-lang", ev.src_lang, "source language id");
  ce->add_option("--tgt-lang", ev.tgt_lang, "target language id")->required();
  ce->add_option("--classifiers", ev.classifiers, "directory of style{K}.cnn classifiers");
  ce->add_option("--beam", ev.beam, "beam width");
  ce->add_option("--max-len", ev.max_len, "generation cap (0 = model limit)");
  ce->add_option("--workers", ev.workers, "sentence-level parallelism");

  ClassifyArgs cf;
  auto* cc = app.add_subcommand("classify", "train style classifiers or score a file with one");
  cc->add_flag("--train", cf.train_mode, "train one-vs-rest classifiers on a gen-synth corpus");
  cc->add_option("--data", cf.data, "gen-synth output directory (training)");
  cc->add_option("--out", cf.out, "classifier directory (training)");
  cc->add_option("--style", cf.style, "train only this style id (-1 = all)");
  cc->add_option("--max-per-style", cf.max_per_style, "cap training sentences per style (0 = all)");
  cc->add_option("--embed-dim", cf.cnn.embed_dim, "word embedding width");
  cc->add_option("--filters", cf.cnn.filters_per_width, "filters per width");
  cc->add_option("--vocab-cap", cf.cnn.vocab_cap, "word vocabulary cap");
  cc->add_option("--dropout", cf.cnn.dropout_p, "dropout probability");
  cc->add_option("--lr", cf.tc.lr, "learning rate");
  cc->add_option("--batch", cf.tc.batch_size, "sentences per update");
  cc->add_option("--updates", cf.tc.updates, "training updates");
  cc->add_option("--val-frac", cf.tc.val_fraction, "held-out fraction per style");
  cc->add_option("--seed", cf.tc.seed, "training seed");
  cc->add_option("--model", cf.model, "classifier path (inference)");
  cc->add_option("--input", cf.input, "text to score, one sentence per line (inference)");
  cc->add_option("--report", cf.report, "per-sentence report file (inference)");

  DemoArgs dm;
  auto* cd = app.add_subcommand("demo", "run the whole pipeline at toy scale");
  cd->add_option("--out", dm.out, "output directory")->required();
  cd->add_option("--seed", dm.seed, "seed for every stage");
  cd->add_option("--langs", dm.langs, "number of languages");
  cd->add_option("--styles", dm.styles, "number of styles");
  cd->add_option("--concepts", dm.concepts, "concept vocabulary size");
  cd->add_option("--train", dm.train, "training sentences per style");
  cd->add_option("--dev", dm.dev, "dev sentences per style");
  cd->add_option("--test", dm.test, "test sentences");
  cd->add_option("--vocab-size", dm.vocab_size, "subword vocabulary budget");
  cd->add_option("--dim", dm.dim, "model width");
  cd->add_option("--layers", dm.layers, "encoder and decoder layers");
  cd->add_option("--heads", dm.heads, "attention heads");
  cd->add_option("--lr", dm.lr, "learning rate");
  cd->add_option("--updates", dm.updates, "update budget");
  cd->add_option("--ckpt-interval", dm.ckpt_interval, "updates between validations");
  cd->add_option("--batch-words", dm.batch_words, "target words per batch");
  cd->add_option("--beam", dm.beam, "beam width");
  cd->add_option("--workers", dm.workers, "sentence-level parallelism");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  const std::string resolved = app.config_to_str(true, false);
  try {
    if (cg->parsed()) {
      run_gen_synth(gen);
      io::write_file(gen.out + "/resolved.cfg", resolved);
    } else if (cp->parsed()) {
      run_preprocess(prep);
      io::write_file(prep.out + "/resolved.cfg", resolved);
    } else if (ct->parsed()) {
      run_train(tr);
      io::write_file(tr.out + "/resolved.cfg", resolved);
    } else if (cl->parsed()) {
      run_translate(tl);
      io::write_file(tl.out + ".cfg", resolved);
    } else if (ce->parsed()) {
      run_evaluate(ev);
      io::write_file(ev.out + "/resolved.cfg", resolved);
    } else if (cc->parsed()) {
      if (cf.train_mode) {
        if (cf.data.empty() || cf.out.empty()) {
          throw ConfigError("classify --train needs --data and --out");
        }
        run_classify_train(cf);
        io::write_file(cf.out + "/resolved.cfg", resolved);
      } else {
        if (cf.model.empty() || cf.input.empty()) {
          throw ConfigError("classify needs --model and --input (or --train)");
        }
        run_classify_infer(cf);
        if (!cf.report.empty()) io::write_file(cf.report + ".cfg", resolved);
      }
    } else if (cd->parsed()) {
      run_demo(dm);
      io::write_file(dm.out + "/resolved.cfg", resolved);
    }
  } catch (const ConfigError& e) {
    std::cerr << "stylemux: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "stylemux: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    // DataError, DimensionError, IndexError: malformed inputs of some shape.
    std::cerr << "stylemux: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "stylemux: unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
