#include "lace/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "lace/ablation.hpp"
#include "lace/checkpoint.hpp"
#include "lace/correlation_graph.hpp"
#include "lace/docred.hpp"
#include "lace/errors.hpp"
#include "lace/evaluation.hpp"
#include "lace/gradcheck_suite.hpp"
#include "lace/synthetic.hpp"
#include "lace/train.hpp"

namespace lace {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

fs::path resolve_input(const std::string& raw) {
  fs::path p(raw);
  if (p.is_relative() && !fs::exists(p)) {
    if (const char* dir = std::getenv("LACE_DATA_DIR"); dir && *dir) {
      const fs::path alt = fs::path(dir) / p;
      if (fs::exists(alt)) return alt;
    }
  }
  if (!fs::exists(p)) throw UsageError("input file not found: " + raw);
  return p;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("failed writing " + path.string());
}

// --- TrainConfig flags --------------------------------------------------
// Every config key doubles as a flag ("lr_head" -> --lr-head). Flags that
// were given form a JSON patch applied on top of --config, so flags win.

const std::map<std::string, std::string>& config_help() {
  static const std::map<std::string, std::string> help = {
      {"seed", "RNG seed"},
      {"epochs", "training epochs"},
      {"batch_size", "documents per update"},
      {"lr_encoder", "learning rate of encoder.* parameters"},
      {"lr_head", "learning rate of every other parameter"},
      {"beta1", "Adam first-moment decay"},
      {"beta2", "Adam second-moment decay"},
      {"adam_eps", "Adam epsilon"},
      {"clip_norm", "global gradient-norm clip (0 disables)"},
      {"negative_rate", "share of NA pairs kept per document"},
      {"alpha", "weight of the positive loss term"},
      {"theta", "decision margin: P(r) >= (1 + theta) P(TH)"},
      {"loss", "mat or at"},
      {"lowercase", "lowercase tokens before lookup"},
      {"tau", "minimum co-occurrence count"},
      {"delta", "minimum conditional probability for an edge"},
      {"p", "neighbour weight of the re-weighted matrix"},
      {"word_dim", "word embedding width"},
      {"type_dim", "entity-type embedding width"},
      {"hidden_dim", "BiLSTM width per direction"},
      {"lstm_layers", "stacked BiLSTM layers"},
      {"relation_dim", "relation feature width"},
      {"gat_layers", "GAT layers (0 = linear projection)"},
      {"gat_heads", "attention heads per GAT layer"},
      {"head_dim", "hidden features per head"},
      {"leaky_slope", "LeakyReLU slope of attention scores"},
      {"gat_mode", "reweighted or mask-only"},
      {"use_correlation", "run relation features through the GAT"},
      {"bilinear_groups", "block-diagonal groups of the bilinear weights"},
      {"layer_norm_eps", "LayerNorm epsilon"},
  };
  return help;
}

struct ConfigFlags {
  std::string config_path;
  bool desk_scale = false;
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  std::map<std::string, json> defaults;
};

void add_config_flags(CLI::App* sub, ConfigFlags& flags) {
  sub->add_option("--config", flags.config_path, "JSON config; flags override it");
  sub->add_flag("--desk-scale", flags.desk_scale,
                "start from small desk-scale dimensions instead of the defaults shown");
  const json defaults = to_json(TrainConfig{});
  for (const auto& [key, value] : defaults.items()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    std::string& slot = flags.values[key];
    slot = value.is_string() ? value.get<std::string>() : value.dump();
    const char* type = value.is_boolean()         ? "BOOL"
                       : value.is_number_integer() ? "INT"
                       : value.is_number()         ? "FLOAT"
                                                   : "TEXT";
    auto it = config_help().find(key);
    flags.options[key] = sub->add_option("--" + name, slot,
                                         it == config_help().end() ? key : it->second)
                             ->type_name(type)
                             ->capture_default_str()
                             ->group("Model and training");
    flags.defaults[key] = value;
  }
}

TrainConfig resolve_config(const ConfigFlags& flags) {
  try {
    TrainConfig c = flags.desk_scale ? desk_scale_config() : TrainConfig{};
    if (!flags.config_path.empty()) c = load_config(resolve_input(flags.config_path), c);
    json patch = json::object();
    for (const auto& [key, opt] : flags.options) {
      if (opt->count() == 0) continue;
      const std::string& raw = flags.values.at(key);
      if (flags.defaults.at(key).is_string()) {
        patch[key] = raw;
        continue;
      }
      try {
        patch[key] = json::parse(raw);
      } catch (const json::parse_error&) {
        throw UsageError("--" + opt->get_name().substr(2) + ": cannot parse '" + raw + "'");
      }
    }
    c = config_from_json(patch, c);
    validate(c);
    return c;
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
}

// --- subcommands ---------------------------------------------------------

struct Context {
  std::ostream& out;
  std::ostream& err;
};

RelationVocab label_vocab(const Corpus& corpus, const std::string& rel_info) {
  return build_label_vocab(corpus, rel_info.empty() ? std::map<std::string, std::string>{}
                                                    : load_rel_info(resolve_input(rel_info)));
}

struct BuildGraphArgs {
  std::string train, rel_info, out, format = "json", dot;
  GraphParams params;
};

int cmd_build_graph(const BuildGraphArgs& a, Context& ctx) {
  const fs::path train_path = resolve_input(a.train);
  GraphFormat format;
  try {
    validate(a.params);
    format = parse_graph_format(a.format);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  const Corpus corpus = parse_corpus(train_path);
  const CorrelationGraph graph = build_graph(corpus, label_vocab(corpus, a.rel_info), a.params);
  export_graph(graph, format, a.out);
  if (!a.dot.empty()) export_graph(graph, GraphFormat::Dot, a.dot);
  ctx.out << "relations: " << graph.size() << "\n"
          << "edges: " << graph.edge_count() << "\n"
          << "density: " << fmt("%.6f", graph.density()) << "\n";
  return kExitOk;
}

struct StatsArgs {
  std::string train, rel_info;
  std::size_t top_k = 10;
};

int cmd_stats(const StatsArgs& a, Context& ctx) {
  const Corpus corpus = parse_corpus(resolve_input(a.train));
  const RelationVocab vocab = label_vocab(corpus, a.rel_info);
  const LabelStats s = multi_label_stats(corpus, vocab);
  auto& out = ctx.out;
  out << "documents: " << corpus.documents.size() << "\n"
      << "relations: " << vocab.size() << "\n"
      << "labeled pairs: " << s.labeled_pairs << "\n"
      << "label-set size histogram:\n";
  for (const auto& [size, count] : s.histogram) out << "  " << size << "\t" << count << "\n";
  out << "multi-label fraction: " << fmt("%.4f", s.multi_label_fraction) << "\n"
      << "max label-set size: " << s.max_set_size << "\n"
      << "no pairs: " << (s.no_pairs ? "true" : "false") << "\n";

  // Asymmetry of the unfiltered conditional matrix, largest gap first.
  const CountMatrix counts = count_cooccurrence(corpus, vocab);
  const ProbMatrix cond = conditional_matrix(counts, 0);
  struct Row {
    std::size_t given, then;
    double forward, backward;
  };
  std::vector<Row> rows;
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    for (std::size_t j = i + 1; j < vocab.size(); ++j) {
      if (counts(i, j) == 0) continue;
      if (cond(i, j) >= cond(j, i)) rows.push_back({i, j, cond(i, j), cond(j, i)});
      else rows.push_back({j, i, cond(j, i), cond(i, j)});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) {
    return x.forward - x.backward > y.forward - y.backward;
  });
  if (rows.size() > a.top_k) rows.resize(a.top_k);
  out << "most asymmetric conditional pairs (tau = 0):\n";
  for (const Row& r : rows) {
    out << "  P(" << vocab.name(r.then) << " | " << vocab.name(r.given)
        << ") = " << fmt("%.3f", r.forward) << "\tP(" << vocab.name(r.given) << " | "
        << vocab.name(r.then) << ") = " << fmt("%.3f", r.backward) << "\n";
  }
  return kExitOk;
}

int cmd_synth(const SyntheticConfig& config, const std::string& out_path, Context& ctx) {
  Corpus corpus;
  try {
    corpus = generate_synthetic(config);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  write_corpus(corpus, out_path);
  ctx.out << "documents: " << corpus.documents.size() << "\n"
          << "facts: " << corpus.num_facts() << "\n";
  return kExitOk;
}

struct TrainArgs {
  std::string train, graph, dev, out, trace, embeddings;
  bool quiet = false;
  ConfigFlags flags;
};

int cmd_train(const TrainArgs& a, Context& ctx) {
  const fs::path train_path = resolve_input(a.train);
  const fs::path graph_path = resolve_input(a.graph);
  std::optional<fs::path> dev_path, emb_path;
  if (!a.dev.empty()) dev_path = resolve_input(a.dev);
  if (!a.embeddings.empty()) emb_path = resolve_input(a.embeddings);
  TrainConfig config = resolve_config(a.flags);

  const Corpus corpus = parse_corpus(train_path);
  const CorrelationGraph graph = load_graph(graph_path);
  const bool graph_flags = a.flags.options.at("tau")->count() + a.flags.options.at("delta")->count() +
                               a.flags.options.at("p")->count() > 0;
  if (graph_flags && !(config.graph == graph.params)) {
    throw UsageError("--tau/--delta/--p disagree with the graph file; rebuild it with build-graph");
  }
  config.graph = graph.params;
  std::optional<Corpus> dev;
  if (dev_path) dev = parse_corpus(*dev_path);

  TrainOptions options;
  options.dev = dev ? &*dev : nullptr;
  options.embeddings = emb_path;
  options.on_epoch = [&](const EpochStats& s) {
    if (a.quiet) return;
    ctx.out << "epoch " << s.epoch << "/" << config.epochs << "  loss " << fmt("%.6f", s.mean_loss)
            << "  pairs " << s.pairs;
    if (s.dev_f1) ctx.out << "  dev_f1 " << fmt("%.4f", *s.dev_f1);
    ctx.out << "\n";
  };
  const TrainResult result = train(corpus, graph, config, options);
  save_checkpoint(result.model, config, a.out);
  if (!a.trace.empty()) write_text(a.trace, loss_trace_csv(result.trace));
  ctx.out << "checkpoint: " << a.out << "\n";
  return kExitOk;
}

struct ThetaRange {
  double start, stop, step;
};

ThetaRange parse_theta_range(const std::string& text) {
  const auto a = text.find(':');
  const auto b = text.find(':', a == std::string::npos ? a : a + 1);
  if (a == std::string::npos || b == std::string::npos) {
    throw UsageError("--theta-sweep expects start:stop:step, got '" + text + "'");
  }
  try {
    std::size_t used = 0;
    ThetaRange r{};
    const std::string parts[] = {text.substr(0, a), text.substr(a + 1, b - a - 1), text.substr(b + 1)};
    double* slots[] = {&r.start, &r.stop, &r.step};
    for (int i = 0; i < 3; ++i) {
      *slots[i] = std::stod(parts[i], &used);
      if (used != parts[i].size()) throw std::invalid_argument(parts[i]);
    }
    if (!(r.step > 0.0) || r.start < 0.0 || r.stop < r.start) throw std::invalid_argument(text);
    return r;
  } catch (const std::logic_error&) {
    throw UsageError("--theta-sweep expects 0 <= start <= stop and step > 0, got '" + text + "'");
  }
}

struct PredictArgs {
  std::string checkpoint, graph, input, out, train, theta_sweep;
  std::optional<double> theta;
  bool submission = false;
};

int cmd_predict(const PredictArgs& a, Context& ctx) {
  const fs::path ckpt_path = resolve_input(a.checkpoint);
  const fs::path graph_path = resolve_input(a.graph);
  const fs::path input_path = resolve_input(a.input);
  std::optional<fs::path> train_path;
  if (!a.train.empty()) train_path = resolve_input(a.train);
  std::optional<ThetaRange> sweep;
  if (!a.theta_sweep.empty()) sweep = parse_theta_range(a.theta_sweep);
  if (!sweep && a.out.empty()) throw UsageError("predict needs --out unless --theta-sweep is given");
  if (a.theta && *a.theta < 0.0) throw UsageError("--theta must be >= 0");

  const LoadedCheckpoint loaded = load_checkpoint(ckpt_path, load_graph(graph_path));
  const Corpus corpus = parse_corpus(input_path);
  std::optional<Corpus> train_corpus;
  if (train_path) train_corpus = parse_corpus(*train_path);
  const Corpus* train_ptr = train_corpus ? &*train_corpus : nullptr;

  if (sweep) {
    ctx.out << "theta\tprecision\trecall\tf1\tign_f1\n";
    for (const ThetaPoint& pt :
         theta_sweep(loaded.model, corpus, sweep->start, sweep->stop, sweep->step, train_ptr)) {
      ctx.out << fmt("%.4f", pt.theta) << "\t" << fmt("%.4f", pt.metrics.precision) << "\t"
              << fmt("%.4f", pt.metrics.recall) << "\t" << fmt("%.4f", pt.metrics.f1) << "\t"
              << fmt("%.4f", pt.metrics.ign_f1) << "\n";
    }
  }
  if (!a.out.empty()) {
    const double theta = a.theta.value_or(loaded.config.theta);
    const auto facts = predict_corpus(loaded.model, corpus, theta, loaded.config.loss);
    write_predictions(facts, a.out, a.submission);
    ctx.out << "documents: " << corpus.documents.size() << "\n"
            << "predicted facts: " << facts.size() << "\n"
            << "theta: " << fmt("%.4f", theta) << "\n";
  }
  return kExitOk;
}

void print_split(std::ostream& out, const char* label, const std::optional<SplitScore>& s) {
  out << label << ": ";
  if (!s) {
    out << "absent\n";
    return;
  }
  out << "p " << fmt("%.4f", s->precision) << "  r " << fmt("%.4f", s->recall) << "  f1 "
      << fmt("%.4f", s->f1) << "  (" << s->pairs << " pairs)\n";
}

struct EvalArgs {
  std::string pred, gold, train;
};

int cmd_eval(const EvalArgs& a, Context& ctx) {
  const fs::path pred_path = resolve_input(a.pred);
  const fs::path gold_path = resolve_input(a.gold);
  std::optional<fs::path> train_path;
  if (!a.train.empty()) train_path = resolve_input(a.train);
  const auto preds = read_predictions(pred_path);
  const Corpus gold = parse_corpus(gold_path);
  std::optional<Corpus> train_corpus;
  if (train_path) train_corpus = parse_corpus(*train_path);
  const Metrics m = evaluate(preds, gold, train_corpus ? &*train_corpus : nullptr);
  auto& out = ctx.out;
  out << "predicted: " << m.predicted << "\n"
      << "gold: " << m.gold << "\n"
      << "correct: " << m.correct << "\n"
      << "precision: " << fmt("%.4f", m.precision) << "\n"
      << "recall: " << fmt("%.4f", m.recall) << "\n"
      << "f1: " << fmt("%.4f", m.f1) << "\n";
  if (train_corpus) out << "ign_f1: " << fmt("%.4f", m.ign_f1) << "\n";
  print_split(out, "2-rel", multi_label_f1(preds, gold, 2));
  print_split(out, "3-rel", multi_label_f1(preds, gold, 3));
  print_split(out, "overall multi-label", overall_multi_label_f1(preds, gold));
  return kExitOk;
}

struct AblateArgs {
  std::string train, eval, rel_info;
  std::vector<std::string> switches;
  ConfigFlags flags;
};

int cmd_ablate(const AblateArgs& a, Context& ctx) {
  const fs::path train_path = resolve_input(a.train);
  const fs::path eval_path = resolve_input(a.eval);
  const TrainConfig config = resolve_config(a.flags);
  std::vector<AblationSwitch> switches;
  try {
    for (const auto& s : a.switches) switches.push_back(parse_ablation_switch(s));
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
  const Corpus train_corpus = parse_corpus(train_path);
  const Corpus eval_corpus = parse_corpus(eval_path);
  const CorrelationGraph graph =
      build_graph(train_corpus, label_vocab(train_corpus, a.rel_info), config.graph);
  ctx.out << ablation_table(run_ablation(train_corpus, eval_corpus, graph, config, switches));
  return kExitOk;
}

int cmd_gradcheck(std::uint64_t seed, Context& ctx) {
  const auto start = std::chrono::steady_clock::now();
  const auto reports = run_gradcheck_suite(seed);
  const std::chrono::duration<double> total = std::chrono::steady_clock::now() - start;
  bool ok = true;
  char line[160];
  std::snprintf(line, sizeof line, "%-18s %14s %8s %9s  %s\n", "component", "max_rel_error",
                "coords", "seconds", "status");
  ctx.out << line;
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-18s %14.3e %8zu %9.3f  %s\n", r.component.c_str(),
                  r.result.max_rel_error, r.result.coordinates, r.seconds,
                  r.passed() ? "ok" : "FAIL");
    ctx.out << line;
    ok = ok && r.passed();
  }
  ctx.out << "tolerance: " << fmt("%.0e", kGradCheckTolerance) << "\n"
          << "total seconds: " << fmt("%.3f", total.count()) << "\n";
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Document-level relation extraction with a relation-correlation graph", "lace"};
  app.require_subcommand(1);
  app.footer("Exit codes: 0 success, 1 runtime error, 2 usage error.\n"
             "Relative input paths missing from the working directory are looked up under "
             "$LACE_DATA_DIR.");

  BuildGraphArgs bg;
  auto* build = app.add_subcommand("build-graph", "build the relation correlation graph");
  build->add_option("--train", bg.train, "training corpus (DocRED JSON)")->required();
  build->add_option("--rel-info", bg.rel_info, "rel_info.json with relation names");
  build->add_option("--tau", bg.params.tau, "minimum co-occurrence count")->capture_default_str();
  build->add_option("--delta", bg.params.delta, "minimum conditional probability")
      ->capture_default_str();
  build->add_option("--p", bg.params.p, "neighbour weight of the re-weighted matrix")
      ->capture_default_str();
  build->add_option("--out", bg.out, "graph output file")->required();
  build->add_option("--format", bg.format, "json, tsv or dot")->capture_default_str();
  build->add_option("--dot", bg.dot, "also write a Graphviz DOT file");

  StatsArgs st;
  auto* stats = app.add_subcommand("stats", "multi-label statistics of a corpus");
  stats->add_option("--train", st.train, "corpus (DocRED JSON)")->required();
  stats->add_option("--rel-info", st.rel_info, "rel_info.json with relation names");
  stats->add_option("--top-k", st.top_k, "asymmetric pairs to list")->capture_default_str();

  SyntheticConfig sc;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "generate a planted-correlation synthetic corpus");
  synth->add_option("--out", synth_out, "output corpus file")->required();
  synth->add_option("--documents", sc.documents, "documents")->capture_default_str();
  synth->add_option("--relations", sc.relations, "relation types")->capture_default_str();
  synth->add_option("--vocab-size", sc.vocab_size, "token vocabulary")->capture_default_str();
  synth->add_option("--seed", sc.seed, "RNG seed")->capture_default_str();
  synth->add_option("--distractors", sc.distractors, "unrelated entities per document")
      ->capture_default_str();
  synth->add_option("--multi-label-rate", sc.multi_label_rate,
                    "share of documents with a multi-relation pair")
      ->capture_default_str();
  synth->add_option("--trigger-dropout", sc.trigger_dropout,
                    "chance of omitting each trigger of a multi-relation pair")
      ->capture_default_str();
  synth->add_option("--second-mention-rate", sc.second_mention_rate,
                    "chance of a second head mention")
      ->capture_default_str();
  synth->add_option("--fillers", sc.fillers, "filler tokens per sentence")->capture_default_str();

  TrainArgs tr;
  auto* trn = app.add_subcommand("train", "train a model and write a checkpoint");
  trn->add_option("--train", tr.train, "training corpus")->required();
  trn->add_option("--graph", tr.graph, "graph JSON from build-graph (its tau/delta/p are used)")
      ->required();
  trn->add_option("--out", tr.out, "checkpoint output file")->required();
  trn->add_option("--dev", tr.dev, "dev corpus scored after every epoch");
  trn->add_option("--trace", tr.trace, "loss trace CSV (epoch,mean_loss,dev_f1)");
  trn->add_option("--embeddings", tr.embeddings, "text word-embedding file");
  trn->add_flag("--quiet", tr.quiet, "no per-epoch lines");
  add_config_flags(trn, tr.flags);

  PredictArgs pr;
  double theta_flag = 0.85;
  auto* pred = app.add_subcommand("predict", "decode relation facts with a trained checkpoint");
  pred->add_option("--checkpoint", pr.checkpoint, "checkpoint from train")->required();
  pred->add_option("--graph", pr.graph, "graph the checkpoint was trained with")->required();
  pred->add_option("--input", pr.input, "corpus to predict")->required();
  pred->add_option("--out", pr.out, "predictions JSON");
  auto* theta_opt = pred->add_option("--theta", theta_flag,
                                     "decision margin (default: the checkpoint's theta)")
                        ->capture_default_str();
  pred->add_flag("--submission", pr.submission, "omit the score field");
  pred->add_option("--theta-sweep", pr.theta_sweep,
                   "start:stop:step; prints metrics per theta on a labeled --input");
  pred->add_option("--train", pr.train, "training corpus for Ign F1 in the sweep");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "score predictions against a gold corpus");
  eval->add_option("--pred", ev.pred, "predictions JSON")->required();
  eval->add_option("--gold", ev.gold, "gold corpus")->required();
  eval->add_option("--train", ev.train, "training corpus (enables Ign F1)");

  AblateArgs ab;
  auto* abl = app.add_subcommand("ablate", "train the baseline and ablated variants");
  abl->add_option("--train", ab.train, "training corpus")->required();
  abl->add_option("--eval", ab.eval, "evaluation corpus")->required();
  abl->add_option("--rel-info", ab.rel_info, "rel_info.json with relation names");
  abl->add_option("--switch", ab.switches,
                  "no-correlation-module, at-loss-instead-of-mat or mask-only-gat (repeatable)");
  add_config_flags(abl, ab.flags);

  std::uint64_t gc_seed = 7;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  gc->add_option("--seed", gc_seed, "fixture seed")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  Context ctx{out, err};
  try {
    if (*build) return cmd_build_graph(bg, ctx);
    if (*stats) return cmd_stats(st, ctx);
    if (*synth) return cmd_synth(sc, synth_out, ctx);
    if (*trn) return cmd_train(tr, ctx);
    if (*pred) {
      if (theta_opt->count() > 0) pr.theta = theta_flag;
      return cmd_predict(pr, ctx);
    }
    if (*eval) return cmd_eval(ev, ctx);
    if (*abl) return cmd_ablate(ab, ctx);
    if (*gc) return cmd_gradcheck(gc_seed, ctx);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace lace
