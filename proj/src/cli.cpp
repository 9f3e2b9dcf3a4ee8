#include "diplo/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "diplo/corpus.hpp"
#include "diplo/csv.hpp"
#include "diplo/encoding.hpp"
#include "diplo/eval.hpp"
#include "diplo/graph.hpp"
#include "diplo/labeler.hpp"
#include "diplo/sbirl.hpp"
#include "diplo/synth.hpp"
#include "json.hpp"

namespace diplo::cli {

namespace {

namespace fs = std::filesystem;

// Options that name files; left out of the provenance echo so that outputs do
// not depend on where they were written.
const std::vector<std::string> kPathOptions = {"input", "output", "ledger", "config", "model", "centrality-csv"};

struct RunConfig {
  std::string subcommand;
  std::string input;
  std::string output;
  std::string ledger;
  std::string model;
  std::string centrality_csv;
  std::string variant = "both";
  std::string train_variant = "graph";
  double gamma = 0.9;
  double lambda = 1e-6;
  std::string eval_mode = "cv";
  std::size_t folds = 5;
  std::string average = "uniform";
  std::string time_index = "player";
  bool include_action = true;
  std::string ns = "1,2,4,6,8,10";
  std::uint64_t seed = 0;
  // label
  std::size_t min_freq = 1;
  std::size_t max_vocab = 0;
  double holdout = 0.2;
  std::string vote = "any";
  SynthConfig synth;
  std::string synth_mode = "behavioral";
  std::string planted_variant = "graph";
};

std::string stem_path(const std::string& output, const std::string& suffix) {
  fs::path p(output);
  return (p.parent_path() / (p.stem().string() + suffix)).string();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  return out;
}

std::vector<std::pair<std::string, std::string>> effective_config(const CLI::App& sub) {
  std::vector<std::pair<std::string, std::string>> kv;
  for (const CLI::Option* opt : sub.get_options()) {
    std::string name = opt->get_single_name();
    if (name.empty() || name == "help") continue;
    if (std::find(kPathOptions.begin(), kPathOptions.end(), name) != kPathOptions.end()) continue;
    std::string value;
    if (opt->count() > 0) {
      for (const auto& r : opt->results()) value += (value.empty() ? "" : ",") + r;
    } else {
      value = opt->get_default_str();
    }
    kv.emplace_back(name, value);
  }
  std::sort(kv.begin(), kv.end());
  return kv;
}

void echo_config(std::ostream& out, const std::string& subcommand,
                 const std::vector<std::pair<std::string, std::string>>& kv) {
  out << "# diplo " << subcommand << '\n';
  for (const auto& [k, v] : kv) out << "# " << k << '=' << v << '\n';
}

Corpus load_valid_corpus(const std::string& path, std::ostream& err) {
  Corpus corpus = parse_corpus_file(path);
  const auto violations = validate_corpus(corpus);
  if (!violations.empty()) {
    for (const auto& v : violations) {
      err << "violation: " << to_string(v.kind) << " game=" << v.game_id << " thread=" << v.thread_id;
      if (v.seq) err << " seq=" << *v.seq;
      err << ": " << v.detail << '\n';
    }
    throw DataError(std::to_string(violations.size()) + " corpus violation(s) in '" + path + "'");
  }
  return corpus;
}

std::vector<Variant> variants_of(const std::string& s) {
  if (s == "both") return {Variant::kContextAgnostic, Variant::kGraphAware};
  if (auto v = variant_from_string(s)) return {*v};
  throw UsageError("--variant must be context, graph, or both");
}

FeatureSchema schema_for(const RunConfig& rc, Variant v) {
  const auto ti = time_index_from_string(rc.time_index);
  if (!ti) throw UsageError("--time-index must be player or global");
  return FeatureSchema::make(v, rc.gamma, *ti, rc.include_action);
}

std::vector<EncodedThread> encode(const Corpus& corpus, const FeatureSchema& schema,
                                  std::optional<CentralityCache>& cache) {
  if (schema.variant == Variant::kGraphAware && !cache) cache = CentralityCache::build(corpus);
  return encode_corpus(corpus, schema, schema.variant == Variant::kGraphAware ? &*cache : nullptr);
}

EvalConfig eval_config(const RunConfig& rc) {
  EvalConfig cfg;
  const auto mode = eval_mode_from_string(rc.eval_mode);
  if (!mode) throw UsageError("--eval-mode must be cv or in-sample");
  cfg.mode = *mode;
  cfg.folds = rc.folds;
  cfg.seed = rc.seed;
  cfg.lambda = rc.lambda;
  if (rc.average == "uniform") {
    cfg.average = AverageMode::kUniform;
  } else if (rc.average == "discounted") {
    cfg.average = AverageMode::kDiscounted;
  } else {
    throw UsageError("--average must be uniform or discounted");
  }
  return cfg;
}

std::vector<std::size_t> parse_ns(const std::string& s) {
  std::vector<std::size_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      const long long v = std::stoll(item, &pos);
      if (pos != item.size() || v <= 0) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw UsageError("--ns expects positive integers separated by commas, got '" + item + "'");
    }
  }
  return out;
}

void require_distinct(const std::string& a, const std::string& b) {
  if (!a.empty() && !b.empty() && fs::weakly_canonical(a) == fs::weakly_canonical(b)) {
    throw UsageError("input and output paths must differ");
  }
}

int cmd_synth(const RunConfig& rc, const CLI::App& sub, std::ostream& out) {
  SynthConfig cfg = rc.synth;
  cfg.seed = rc.seed;
  cfg.gamma = rc.gamma;
  const auto mode = score_mode_from_string(rc.synth_mode);
  const auto pv = variant_from_string(rc.planted_variant);
  if (!mode) throw UsageError("--mode must be planted or behavioral");
  if (!pv) throw UsageError("--planted-variant must be context or graph");
  cfg.mode = *mode;
  cfg.planted_variant = *pv;
  const auto result = generate(cfg);

  auto corpus_out = open_out(rc.output);
  serialize_corpus(corpus_out, result.corpus);
  const std::string ledger_path = rc.ledger.empty() ? stem_path(rc.output, ".ledger.jsonl") : rc.ledger;
  auto ledger_out = open_out(ledger_path);
  nlohmann::ordered_json cfg_rec;
  cfg_rec["type"] = "config";
  for (const auto& [k, v] : effective_config(sub)) cfg_rec[k] = v;
  ledger_out << cfg_rec.dump() << '\n';
  write_ledger(ledger_out, result.ledger);
  out << "wrote " << result.corpus.num_messages() << " messages in " << result.corpus.num_threads()
      << " threads to " << rc.output << " (ledger: " << ledger_path << ")\n";
  return kSuccess;
}

int cmd_label(const RunConfig& rc, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  require_distinct(rc.input, rc.output);
  const Corpus corpus = load_valid_corpus(rc.input, err);
  LabelConfig cfg;
  cfg.min_freq = rc.min_freq;
  cfg.max_vocab = rc.max_vocab;
  cfg.holdout_fraction = rc.holdout;
  cfg.seed = rc.seed;
  if (rc.vote == "any") {
    cfg.vote = VoteRule::kAnyVote;
  } else if (rc.vote == "unanimous") {
    cfg.vote = VoteRule::kUnanimous;
  } else {
    throw UsageError("--vote must be any or unanimous");
  }
  const auto result = label_corpus(corpus, cfg);
  const auto kv = effective_config(sub);

  auto corpus_out = open_out(rc.output);
  serialize_corpus(corpus_out, result.corpus);

  auto f1_out = open_out(stem_path(rc.output, "_macro_f1.csv"));
  echo_config(f1_out, "label", kv);
  f1_out << "classifier,strategy,macro_f1,selected,protocol\n";
  for (const auto& row : result.f1_table) {
    f1_out << to_string(row.kind) << ',' << kStrategyKeys[static_cast<std::size_t>(row.strategy)] << ','
           << format_double(row.macro_f1) << ',' << (row.selected ? 1 : 0) << ','
           << (row.holdout ? "holdout" : "in-sample") << '\n';
  }

  auto corr_out = open_out(stem_path(rc.output, "_correlation.csv"));
  echo_config(corr_out, "label", kv);
  corr_out << "strategy";
  for (const char* k : kStrategyKeys) corr_out << ',' << k;
  corr_out << '\n';
  for (std::size_t a = 0; a < kNumStrategies; ++a) {
    corr_out << kStrategyKeys[a];
    for (std::size_t b = 0; b < kNumStrategies; ++b) corr_out << ',' << format_double(result.correlation.r[a][b]);
    corr_out << '\n';
  }
  out << "labeled " << result.corpus.num_messages() << " messages; vocabulary " << result.suite.vocab.size()
      << " tokens; " << result.correlation.n_players << " player units in correlation report\n";
  return kSuccess;
}

int cmd_train(const RunConfig& rc, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  require_distinct(rc.input, rc.output);
  const Corpus corpus = load_valid_corpus(rc.input, err);
  const auto v = variant_from_string(rc.train_variant);
  if (!v) throw UsageError("--variant must be context or graph");
  const FeatureSchema schema = schema_for(rc, *v);
  std::optional<CentralityCache> cache;
  const auto threads = encode(corpus, schema, cache);
  const auto pairs = training_pairs(threads, schema);
  const auto model = fit(pairs, schema, rc.lambda);

  auto model_out = open_out(rc.output);
  save_model(model_out, model);
  echo_config(model_out, "train", effective_config(sub));
  if (!rc.centrality_csv.empty() && cache) {
    auto c = open_out(rc.centrality_csv);
    write_centrality_csv(c, *cache);
  }
  out << "fitted " << to_string(schema.variant) << " reward model on " << pairs.size()
      << " subthreads (rank " << model.diagnostics.rank << ", condition " << format_double(model.diagnostics.condition)
      << ")\n";
  return kSuccess;
}

int cmd_eval(const RunConfig& rc, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  require_distinct(rc.input, rc.output);
  const Corpus corpus = load_valid_corpus(rc.input, err);
  const EvalConfig cfg = eval_config(rc);
  const auto kv = effective_config(sub);
  std::optional<CentralityCache> cache;
  std::vector<EvalReport> reports;
  std::vector<FeatureSchema> schemas;

  if (!rc.model.empty()) {
    const RewardModel model = load_model_file(rc.model);
    const bool variant_given = sub.get_option("--variant")->count() > 0;
    if (variant_given && (rc.variant == "both" || variant_from_string(rc.variant) != model.schema.variant)) {
      throw DataError("model was trained with the " + std::string(to_string(model.schema.variant)) +
                      " encoding; refusing to evaluate it as '" + rc.variant + "'");
    }
    const bool gamma_given = sub.get_option("--gamma")->count() > 0;
    if (gamma_given && rc.gamma != model.schema.gamma) {
      throw DataError("model discount differs from --gamma; refusing to mix encodings");
    }
    const auto threads = encode(corpus, model.schema, cache);
    reports.push_back(accuracy(model, threads, cfg.average));
    schemas.push_back(model.schema);
  } else {
    for (Variant v : variants_of(rc.variant)) {
      const FeatureSchema schema = schema_for(rc, v);
      const auto threads = encode(corpus, schema, cache);
      reports.push_back(evaluate(threads, schema, cfg));
      schemas.push_back(schema);
    }
  }

  auto summary = open_out(rc.output);
  echo_config(summary, "eval", kv);
  write_summary_csv_header(summary);
  EvalConfig row_cfg = cfg;
  if (!rc.model.empty()) row_cfg.mode = EvalMode::kInSample;
  for (std::size_t i = 0; i < reports.size(); ++i) write_summary_csv_row(summary, reports[i], row_cfg, schemas[i]);

  auto detail = open_out(stem_path(rc.output, "_threads.csv"));
  echo_config(detail, "eval", kv);
  write_thread_csv(detail, reports);
  for (const auto& r : reports) {
    out << to_string(r.variant) << ": accuracy " << format_double(r.accuracy) << " over " << r.n_threads_used
        << " threads (" << r.n_ties << " ties, " << r.n_degenerate << " degenerate excluded)\n";
  }
  return kSuccess;
}

int cmd_ablate(const RunConfig& rc, const CLI::App& sub, std::ostream& out, std::ostream& err) {
  require_distinct(rc.input, rc.output);
  const Corpus corpus = load_valid_corpus(rc.input, err);
  const EvalConfig cfg = eval_config(rc);
  const auto ns = parse_ns(rc.ns);
  std::optional<CentralityCache> cache;
  std::vector<AblationRow> rows;
  for (Variant v : variants_of(rc.variant)) {
    const FeatureSchema schema = schema_for(rc, v);
    const auto threads = encode(corpus, schema, cache);
    const auto curve = ablation(threads, schema, cfg, ns);
    rows.insert(rows.end(), curve.begin(), curve.end());
  }
  auto csv = open_out(rc.output);
  echo_config(csv, "ablate", effective_config(sub));
  write_ablation_csv(csv, rows);
  out << "wrote " << rows.size() << " ablation rows to " << rc.output << '\n';
  return kSuccess;
}

// Appends `--key value` for config entries the user did not pass explicitly.
std::vector<std::string> merge_config(const std::vector<std::string>& args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
  }
  if (config_path.empty()) return args;
  std::vector<std::string> merged = args;
  for (const auto& [key, value] : read_config_file(config_path)) {
    const std::string flag = "--" + key;
    const bool given = std::any_of(args.begin(), args.end(), [&](const std::string& a) {
      return a == flag || a.rfind(flag + "=", 0) == 0;
    });
    if (!given) {
      merged.push_back(flag);
      merged.push_back(value);
    }
  }
  return merged;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    }
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return kv;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  CLI::App app{"Reward estimation from negotiation-game chat: synthetic data, strategy labeling, SBIRL fitting, evaluation", "diplo"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", "key=value file; explicit flags take precedence");
    sub->add_option("--seed", rc.seed, "seed for every random choice")->capture_default_str();
  };
  auto add_model_opts = [&](CLI::App* sub, std::string& variant, bool allow_both) {
    sub->add_option("--variant", variant, allow_both ? "context, graph, or both" : "context or graph")
        ->capture_default_str();
    sub->add_option("--gamma", rc.gamma, "discount factor in [0,1)")->capture_default_str();
    sub->add_option("--lambda", rc.lambda, "ridge penalty >= 0")->capture_default_str();
    sub->add_option("--time-index", rc.time_index, "player or global")->capture_default_str();
    sub->add_option("--include-action", rc.include_action, "put the action one-hot in the state")
        ->capture_default_str();
  };
  auto add_eval_opts = [&](CLI::App* sub) {
    sub->add_option("--eval-mode", rc.eval_mode, "cv or in-sample")->capture_default_str();
    sub->add_option("--folds", rc.folds, "cross-validation folds")->capture_default_str();
    sub->add_option("--average", rc.average, "uniform or discounted average reward")->capture_default_str();
  };

  auto* synth = app.add_subcommand("synth", "generate a synthetic corpus and its ground-truth ledger");
  synth->add_option("--output", rc.output, "corpus JSONL")->required();
  synth->add_option("--ledger", rc.ledger, "ledger JSONL (default: <output stem>.ledger.jsonl)");
  synth->add_option("--mode", rc.synth_mode, "planted or behavioral")->capture_default_str();
  synth->add_option("--planted-variant", rc.planted_variant, "encoding the planted scores use")->capture_default_str();
  synth->add_option("--gamma", rc.gamma, "discount of the planted encoding")->capture_default_str();
  synth->add_option("--sigma", rc.synth.sigma, "noise on planted final scores")->capture_default_str();
  synth->add_option("--games", rc.synth.n_games)->capture_default_str();
  synth->add_option("--players", rc.synth.n_players)->capture_default_str();
  synth->add_option("--threads", rc.synth.threads_per_game, "threads per game")->capture_default_str();
  synth->add_option("--min-messages", rc.synth.min_messages)->capture_default_str();
  synth->add_option("--max-messages", rc.synth.max_messages)->capture_default_str();
  synth->add_option("--turns", rc.synth.n_turns)->capture_default_str();
  synth->add_option("--labeled-fraction", rc.synth.labeled_fraction)->capture_default_str();
  synth->add_option("--overlap", rc.synth.overlap)->capture_default_str();
  synth->add_option("--hubs", rc.synth.n_hubs)->capture_default_str();
  synth->add_option("--gain", rc.synth.gain)->capture_default_str();
  synth->add_option("--drift", rc.synth.drift)->capture_default_str();
  synth->add_option("--resolution-gap", rc.synth.resolution_gap, "turns before the closing exchange")->capture_default_str();
  add_common(synth);

  auto* label = app.add_subcommand("label", "train strategy classifiers on gold labels and label every message");
  label->add_option("--input", rc.input, "corpus JSONL")->required();
  label->add_option("--output", rc.output, "labeled corpus JSONL")->required();
  label->add_option("--min-freq", rc.min_freq, "minimum token frequency")->capture_default_str();
  label->add_option("--max-vocab", rc.max_vocab, "vocabulary cap (0 = none)")->capture_default_str();
  label->add_option("--holdout", rc.holdout, "gold fraction held out for macro-F1")->capture_default_str();
  label->add_option("--vote", rc.vote, "any or unanimous")->capture_default_str();
  add_common(label);

  auto* train = app.add_subcommand("train", "fit a reward model");
  train->add_option("--input", rc.input, "corpus JSONL")->required();
  train->add_option("--output", rc.output, "model file")->required();
  train->add_option("--centrality-csv", rc.centrality_csv, "dump centrality tables");
  add_model_opts(train, rc.train_variant, false);
  add_common(train);

  auto* eval = app.add_subcommand("eval", "reward accuracy per encoding variant");
  eval->add_option("--input", rc.input, "corpus JSONL")->required();
  eval->add_option("--output", rc.output, "summary CSV (per-thread detail goes to <stem>_threads.csv)")->required();
  eval->add_option("--model", rc.model, "score this model instead of fitting");
  add_model_opts(eval, rc.variant, true);
  add_eval_opts(eval);
  add_common(eval);

  auto* ablate = app.add_subcommand("ablate", "accuracy with each player restricted to the first n utterances");
  ablate->add_option("--input", rc.input, "corpus JSONL")->required();
  ablate->add_option("--output", rc.output, "curve CSV")->required();
  ablate->add_option("--ns", rc.ns, "comma-separated ascending n values")->capture_default_str();
  add_model_opts(ablate, rc.variant, true);
  add_eval_opts(ablate);
  add_common(ablate);

  try {
    auto args = merge_config(raw_args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    // With a subcommand selected, app.help() already describes that subcommand.
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return e.get_exit_code() == 0 ? kSuccess : kUsageError;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  }

  CLI::App* sub = app.get_subcommands().front();
  rc.subcommand = sub->get_name();
  try {
    if (sub == synth) return cmd_synth(rc, *sub, out);
    if (sub == label) return cmd_label(rc, *sub, out, err);
    if (sub == train) return cmd_train(rc, *sub, out, err);
    if (sub == eval) return cmd_eval(rc, *sub, out, err);
    return cmd_ablate(rc, *sub, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataError;
  }
}

}  // namespace diplo::cli
