#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>

#include "rltg/cli.hpp"
#include "rltg/decoder.hpp"
#include "rltg/text_env.hpp"

namespace rltg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Flag overrides applied on top of preset and config file.
using Override = std::function<void(RunConfig&)>;

template <typename T, typename Field>
void add_override(CLI::App* app, std::vector<Override>& overrides, const std::string& flag, const std::string& desc,
                  Field field, const std::string& group = "Overrides") {
  auto holder = std::make_shared<std::optional<T>>();
  app->add_option(flag, *holder, desc)->group(group);
  overrides.push_back([holder, field](RunConfig& c) {
    if (*holder) field(c) = **holder;
  });
}

struct Invocation {
  std::string name;
  std::string out_dir = "out";
  std::string corpus;
  std::string eval_corpus;
  std::string config_path;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::vector<Override> overrides;

  // generate / evaluate / sweep
  std::vector<std::string> topics;
  std::string method = "rltg";
  std::optional<std::size_t> horizon;
  std::string sweep_param;
  std::vector<double> sweep_values;
};

void add_common(CLI::App* app, Invocation& inv, bool uses_corpus) {
  app->add_option("--out-dir", inv.out_dir, "artifact directory")->capture_default_str();
  if (uses_corpus) app->add_option("--corpus", inv.corpus, "training corpus (JSON Lines)")->required();
  app->add_option("--config", inv.config_path, "JSON config file; flags override its values")
      ->check(CLI::ExistingFile);
  app->add_option("--preset", inv.preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
  app->add_option("--seed", inv.seed, "seed (fallback: RLTG_SEED, then 0)");

  auto& o = inv.overrides;
  add_override<Index>(app, o, "--embed-dim", "LM embedding / hidden width e", [](RunConfig& c) -> auto& { return c.embed_dim; });
  add_override<std::size_t>(app, o, "--min-freq", "vocabulary frequency cutoff", [](RunConfig& c) -> auto& { return c.min_freq; });
  add_override<std::size_t>(app, o, "--lm-epochs", "LM training epochs", [](RunConfig& c) -> auto& { return c.lm_epochs; });
  add_override<Index>(app, o, "--ae1-dim", "AE1 code size d_g", [](RunConfig& c) -> auto& { return c.ae1_dim; });
  add_override<Index>(app, o, "--ae2-dim", "AE2 code size d_w", [](RunConfig& c) -> auto& { return c.ae2_dim; });
  add_override<Index>(app, o, "--ae2-channels", "AE2 convolution channels", [](RunConfig& c) -> auto& { return c.ae2_channels; });
  add_override<std::size_t>(app, o, "--n-states", "states collected for AE training", [](RunConfig& c) -> auto& { return c.n_states; });
  add_override<std::size_t>(app, o, "--ae-epochs", "autoencoder epochs", [](RunConfig& c) -> auto& { return c.ae_epochs; });
  add_override<Index>(app, o, "--adv-hidden", "adversary GRU width h_c", [](RunConfig& c) -> auto& { return c.adv_hidden; });
  add_override<std::size_t>(app, o, "--adv-epochs", "adversary epochs", [](RunConfig& c) -> auto& { return c.adv_epochs; });
  add_override<std::size_t>(app, o, "--topk", "K, candidate tokens per step", [](RunConfig& c) -> auto& { return c.agent.topk; });
  add_override<std::size_t>(app, o, "--steps", "T, environment steps per episode", [](RunConfig& c) -> auto& { return c.agent.horizon; });
  add_override<double>(app, o, "--gamma", "discount factor", [](RunConfig& c) -> auto& { return c.agent.gamma; });
  add_override<std::size_t>(app, o, "--memory-cap", "replay memory size", [](RunConfig& c) -> auto& { return c.agent.memory_cap; });
  add_override<std::size_t>(app, o, "--batch", "replay batch size", [](RunConfig& c) -> auto& { return c.agent.batch; });
  add_override<double>(app, o, "--eps-max", "initial epsilon", [](RunConfig& c) -> auto& { return c.agent.eps_max; });
  add_override<double>(app, o, "--eps-min", "final epsilon", [](RunConfig& c) -> auto& { return c.agent.eps_min; });
  add_override<double>(app, o, "--decay-rate", "epsilon decay constant in steps", [](RunConfig& c) -> auto& { return c.agent.decay_rate; });
  add_override<std::size_t>(app, o, "--sync-every", "steps between target syncs", [](RunConfig& c) -> auto& { return c.agent.sync_every; });
  add_override<std::size_t>(app, o, "--episodes", "training episodes", [](RunConfig& c) -> auto& { return c.agent.episodes; });
  add_override<std::vector<Index>>(app, o, "--dqn-hidden", "DQN hidden layer sizes", [](RunConfig& c) -> auto& { return c.agent.hidden; });
  add_override<double>(app, o, "--alpha", "cosine reward weight", [](RunConfig& c) -> auto& { return c.weights.alpha; });
  add_override<double>(app, o, "--beta", "BLEU reward weight", [](RunConfig& c) -> auto& { return c.weights.beta; });
  add_override<double>(app, o, "--lambda", "adversary reward weight", [](RunConfig& c) -> auto& { return c.weights.lambda; });
  add_override<std::size_t>(app, o, "--topic-len", "topic prefix length in tokens", [](RunConfig& c) -> auto& { return c.topic_len; });
  add_override<std::size_t>(app, o, "--n-references", "BLEU references per episode", [](RunConfig& c) -> auto& { return c.n_references; });
  add_override<std::size_t>(app, o, "--restarts", "independent agent runs; best mean reward kept", [](RunConfig& c) -> auto& { return c.restarts; });
  add_override<std::size_t>(app, o, "--eval-horizon", "evaluation continuation length", [](RunConfig& c) -> auto& { return c.eval_horizon; });
  add_override<std::size_t>(app, o, "--eval-topics", "number of evaluation topics", [](RunConfig& c) -> auto& { return c.eval_topics; });
  auto source = std::make_shared<std::optional<std::string>>();
  app->add_option("--topic-source", *source, "prefix or title")->check(CLI::IsMember({"prefix", "title"}))->group("Overrides");
  o.push_back([source](RunConfig& c) {
    if (*source) c.topic_source = topic_source_from_string(**source);
  });
}

RunConfig resolve(const Invocation& inv) {
  RunConfig cfg = preset_config(inv.preset.value_or("desk"));
  bool seed_set = false;
  if (!inv.config_path.empty()) {
    std::ifstream in(inv.config_path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError("config file '" + inv.config_path + "': " + e.what());
    }
    cfg.apply_json(j);
    seed_set = j.contains("seed");
  }
  if (inv.preset) {
    cfg.preset = *inv.preset;
  }
  for (const auto& apply : inv.overrides) apply(cfg);
  if (inv.seed) {
    cfg.seed = *inv.seed;
  } else if (!seed_set) {
    if (const char* env = std::getenv("RLTG_SEED")) {
      try {
        cfg.seed = std::stoull(env);
      } catch (const std::exception&) {
        throw ConfigError(std::string("RLTG_SEED is not an unsigned integer: '") + env + "'");
      }
    }
  }
  cfg.validate();
  return cfg;
}

/// Independent, stable stream per pipeline stage.
std::uint64_t stage_seed(std::uint64_t seed, const std::string& stage) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char ch : stage) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ULL;
  }
  return seed ^ h;
}

class Run {
 public:
  Run(const Invocation& inv, RunConfig cfg, std::ostream& out, std::ostream& err)
      : inv_(inv), cfg_(std::move(cfg)), out_(out), err_(err) {
    fs::create_directories(inv.out_dir);
    entry_.config = cfg_.to_json();
    entry_.seed = cfg_.seed;
  }

  const RunConfig& cfg() const { return cfg_; }
  std::ostream& out() { return out_; }
  json& notes() { return entry_.notes; }
  std::uint64_t seed(const std::string& stage) const { return stage_seed(cfg_.seed, stage); }

  fs::path path(const std::string& name) const { return fs::path(inv_.out_dir) / name; }

  /// Path of a prerequisite artifact, or an error naming the missing piece and its producer.
  std::string need(const std::string& name, const std::string& piece, const std::string& producer) {
    const fs::path p = path(name);
    if (!fs::exists(p)) {
      throw ConfigError("missing prerequisite " + piece + " (" + p.string() + " not found; run " + producer + " first)");
    }
    entry_.inputs[name] = sha256_file(p.string());
    return p.string();
  }

  std::vector<NewsItem> corpus(const std::string& file, const std::string& role) {
    CorpusLoad load = load_corpus(file);
    for (const auto& e : load.errors) err_ << role << " line " << e.line << ": " << e.message << '\n';
    if (load.items.empty()) throw DataError(role + " '" + file + "' has no usable items");
    entry_.inputs[role] = sha256_file(file);
    return std::move(load.items);
  }

  Vocabulary vocab() { return read_vocab(need(artifact::vocab, "vocab", "train-lm")); }
  LmParams lm() { return get_lm(nn::read_tensor_file(need(artifact::lm, "lm", "train-lm"))); }
  Ae1Params ae1() { return get_ae1(nn::read_tensor_file(need(artifact::ae1, "ae1", "train-ae"))); }
  Ae2Params ae2() { return get_ae2(nn::read_tensor_file(need(artifact::ae2, "ae2", "train-ae"))); }
  ClassifierParams adversary() {
    return get_classifier(nn::read_tensor_file(need(artifact::adversary, "adv", "train-adversary")));
  }
  DqnParams dqn() { return get_dqn(nn::read_tensor_file(need(artifact::dqn, "dqn.policy", "train-agent"))); }

  void emit(const std::string& name) { entry_.outputs[name] = sha256_file(path(name).string()); }
  void write(const std::string& name, const nn::TensorFile& file) {
    nn::write_tensor_file(path(name).string(), file);
    emit(name);
  }

  void finish() { record_manifest(inv_.out_dir, inv_.name, entry_); }

 private:
  const Invocation& inv_;
  RunConfig cfg_;
  std::ostream& out_;
  std::ostream& err_;
  ManifestEntry entry_;
};

std::vector<TokenSeq> tokenize_all(const std::vector<NewsItem>& items, const Vocabulary& vocab) {
  std::vector<TokenSeq> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(tokenize(it.text, vocab));
  return out;
}

std::vector<EpisodeItem> episode_items(const std::vector<NewsItem>& items, const Vocabulary& vocab,
                                       const RunConfig& cfg) {
  std::vector<EpisodeItem> out;
  for (const auto& it : items) {
    TokenSeq article = tokenize(it.text, vocab);
    if (article.size() <= cfg.topic_len) continue;
    out.push_back({make_topic(it, vocab, cfg.topic_source, cfg.topic_len), std::move(article)});
  }
  if (out.empty()) throw DataError("no item is longer than the topic length");
  return out;
}

struct EvalSet {
  std::vector<std::string> ids;
  std::vector<TokenSeq> topics;
  std::vector<TokenSeq> sources;
};

EvalSet eval_set(const std::vector<NewsItem>& items, const Vocabulary& vocab, const RunConfig& cfg) {
  EvalSet s;
  for (const auto& it : items) {
    if (s.topics.size() == cfg.eval_topics) break;
    TokenSeq article = tokenize(it.text, vocab);
    if (article.size() <= cfg.topic_len) continue;
    s.ids.push_back(it.id);
    s.topics.push_back(make_topic(it, vocab, cfg.topic_source, cfg.topic_len));
    s.sources.push_back(std::move(article));
  }
  if (s.topics.empty()) throw DataError("evaluation corpus has no item longer than the topic length");
  return s;
}

json run_notes(const RunConfig& cfg) {
  return {{"episode_steps", "T environment steps per episode (t = 0..T-1)"},
          {"bleu_references", "source article plus " + std::to_string(cfg.n_references - 1) +
                                  " articles sampled per episode"},
          {"topic_source", to_string(cfg.topic_source)},
          {"ae2_candidates", "top-K list of the current step"}};
}

double decile_mean(const std::vector<double>& v, bool last) {
  const std::size_t n = std::max<std::size_t>(1, v.size() / 10);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += last ? v[v.size() - 1 - i] : v[i];
  return s / static_cast<double>(n);
}

// ---------------------------------------------------------------------------

void cmd_train_lm(Run& run, const Invocation& inv) {
  const auto& cfg = run.cfg();
  const auto items = run.corpus(inv.corpus, "corpus");
  const Vocabulary vocab = build_vocab(items, cfg.min_freq);
  const auto seqs = tokenize_all(items, vocab);
  std::mt19937_64 rng(run.seed("train-lm"));
  LmParams lm = init_lm(static_cast<Index>(vocab.size()), cfg.embed_dim, rng);
  LmTrainOptions opt;
  opt.epochs = cfg.lm_epochs;
  opt.seed = run.seed("train-lm/order");
  LmTrainResult result = lm_train(seqs, std::move(lm), opt);
  const double ppl = perplexity(result.params, seqs);

  write_vocab(run.path(artifact::vocab).string(), vocab);
  run.emit(artifact::vocab);
  nn::TensorFile f;
  put_lm(f, result.params);
  run.write(artifact::lm, f);
  run.notes() = {{"vocab_size", vocab.size()}, {"loss_trace", result.loss_trace}, {"train_perplexity", ppl}};
  run.out() << "vocab " << vocab.size() << " tokens, final loss "
            << (result.loss_trace.empty() ? 0.0 : result.loss_trace.back()) << ", train perplexity " << ppl << '\n';
}

void cmd_collect_states(Run& run, const Invocation& inv) {
  const auto& cfg = run.cfg();
  const auto items = run.corpus(inv.corpus, "corpus");
  const Vocabulary vocab = run.vocab();
  const LmParams lm = run.lm();
  std::mt19937_64 rng(run.seed("collect-states"));
  const StateDataset states = collect_states(lm, tokenize_all(items, vocab), cfg.agent.topk, cfg.n_states, rng);
  nn::TensorFile f;
  put_states(f, states);
  run.write(artifact::states, f);
  run.notes() = {{"n_states", states.hidden.rows()}, {"K", cfg.agent.topk}};
  run.out() << "collected " << states.hidden.rows() << " states\n";
}

void cmd_train_ae(Run& run, const Invocation&) {
  const auto& cfg = run.cfg();
  const LmParams lm = run.lm();
  const StateDataset states = get_states(nn::read_tensor_file(run.need(artifact::states, "states", "collect-states")));
  if (!states.topk.empty() && states.topk.front().size() != cfg.agent.topk) {
    throw ConfigError("states were collected with K=" + std::to_string(states.topk.front().size()) +
                      " but the configuration uses K=" + std::to_string(cfg.agent.topk));
  }
  if (states.hidden.cols() != lm.embed_dim()) throw ConfigError("states do not match the LM width");
  std::mt19937_64 rng(run.seed("train-ae"));
  Ae1Params ae1 = init_ae1(lm.embed_dim(), cfg.ae1_dim, rng);
  Ae2Params ae2 = init_ae2(lm.embed_dim(), static_cast<Index>(cfg.agent.topk), cfg.ae2_dim, rng, cfg.ae2_channels);
  AeTrainOptions opt;
  opt.epochs = cfg.ae_epochs;
  opt.seed = run.seed("train-ae/ae1");
  auto r1 = train_ae1(states.hidden, std::move(ae1), opt);
  opt.seed = run.seed("train-ae/ae2");
  auto r2 = train_ae2(states.topk, lm.embedding, std::move(ae2), opt);

  nn::TensorFile f1;
  put_ae1(f1, r1.params);
  run.write(artifact::ae1, f1);
  nn::TensorFile f2;
  put_ae2(f2, r2.params);
  run.write(artifact::ae2, f2);
  run.notes() = {{"ae1_loss_trace", r1.loss_trace}, {"ae2_loss_trace", r2.loss_trace}};
  run.out() << "ae1 mse " << r1.loss_trace.back() << ", ae2 mse " << r2.loss_trace.back() << '\n';
}

void cmd_train_adversary(Run& run, const Invocation& inv) {
  const auto& cfg = run.cfg();
  const auto items = run.corpus(inv.corpus, "corpus");
  const Vocabulary vocab = run.vocab();
  const LmParams lm = run.lm();
  const auto labeled = label_sequences(items, vocab);
  std::mt19937_64 rng(run.seed("train-adversary"));
  ClassifierParams params = init_classifier(lm.embedding, cfg.adv_hidden, rng);
  ClassifierTrainOptions opt;
  opt.epochs = cfg.adv_epochs;
  opt.seed = run.seed("train-adversary/order");
  auto result = train_classifier(labeled, std::move(params), opt);
  const ClassifierMetrics m = evaluate_classifier(result.params, labeled);
  json notes = {{"loss_trace", result.loss_trace},
                {"train_metrics", {{"accuracy", m.accuracy}, {"auc", m.auc}, {"f1", m.f1}}}};
  run.out() << "train accuracy " << m.accuracy << ", auc " << m.auc << ", f1 " << m.f1 << '\n';
  if (!inv.eval_corpus.empty()) {
    const auto held = label_sequences(run.corpus(inv.eval_corpus, "eval_corpus"), vocab);
    const ClassifierMetrics h = evaluate_classifier(result.params, held);
    notes["eval_metrics"] = {{"accuracy", h.accuracy}, {"auc", h.auc}, {"f1", h.f1}};
    run.out() << "eval accuracy " << h.accuracy << ", auc " << h.auc << ", f1 " << h.f1 << '\n';
  }
  nn::TensorFile f;
  put_classifier(f, result.params);
  run.write(artifact::adversary, f);
  run.notes() = notes;
}

struct Components {
  Vocabulary vocab;
  LmParams lm;
  Ae1Params ae1;
  Ae2Params ae2;
};

Components load_policy_inputs(Run& run) {
  Components c{run.vocab(), run.lm(), run.ae1(), run.ae2()};
  if (c.ae2.topk != static_cast<Index>(run.cfg().agent.topk)) {
    throw ConfigError("ae2 was trained for K=" + std::to_string(c.ae2.topk) + " but the configuration uses K=" +
                      std::to_string(run.cfg().agent.topk));
  }
  return c;
}

void cmd_train_agent(Run& run, const Invocation& inv) {
  const auto& cfg = run.cfg();
  const auto items = run.corpus(inv.corpus, "corpus");
  Components c = load_policy_inputs(run);
  const ClassifierParams adv = run.adversary();
  const auto episodes = episode_items(items, c.vocab, cfg);
  AgentRun trained = train_agent(cfg.agent, c.lm, c.ae1, c.ae2, adv, episodes, cfg.weights, run.seed("train-agent"),
                                 cfg.restarts, cfg.n_references);
  const TrainTrace& tr = trained.result.trace;

  nn::TensorFile f;
  put_dqn(f, trained.result.dqn);
  run.write(artifact::dqn, f);
  export_curves(run.path(artifact::curves).string(), tr);
  run.emit(artifact::curves);

  json notes = run_notes(cfg);
  notes["experiences"] = tr.experiences;
  notes["updates"] = tr.updates;
  notes["restart_scores"] = trained.restart_scores;
  notes["kept_restart"] = trained.restart;
  notes["first_decile_reward"] = decile_mean(tr.mean_reward, false);
  notes["last_decile_reward"] = decile_mean(tr.mean_reward, true);
  notes["first_decile_inv_confidence"] = decile_mean(tr.mean_inv_confidence, false);
  notes["last_decile_inv_confidence"] = decile_mean(tr.mean_inv_confidence, true);
  run.notes() = notes;
  run.out() << "episodes " << tr.mean_reward.size() << ", reward first/last decile "
            << notes["first_decile_reward"].get<double>() << " / " << notes["last_decile_reward"].get<double>()
            << ", 1-C_f first/last decile " << notes["first_decile_inv_confidence"].get<double>() << " / "
            << notes["last_decile_inv_confidence"].get<double>() << '\n';
}

void cmd_generate(Run& run, const Invocation& inv) {
  const auto& cfg = run.cfg();
  Components c = load_policy_inputs(run);
  std::optional<DqnParams> dqn;
  if (inv.method == "rltg") dqn = run.dqn();
  std::vector<std::string> ids;
  std::vector<TokenSeq> topics;
  if (!inv.topics.empty()) {
    for (std::size_t i = 0; i < inv.topics.size(); ++i) {
      ids.push_back("topic-" + std::to_string(i));
      topics.push_back(tokenize(inv.topics[i], c.vocab));
      if (topics.back().empty()) throw DataError("topic " + std::to_string(i) + " has no tokens");
    }
  } else {
    const std::string& file = inv.eval_corpus.empty() ? inv.corpus : inv.eval_corpus;
    if (file.empty()) throw ConfigError("generate needs --topic or --eval-corpus");
    EvalSet s = eval_set(run.corpus(file, "eval_corpus"), c.vocab, cfg);
    ids = std::move(s.ids);
    topics = std::move(s.topics);
  }
  const std::size_t horizon = inv.horizon.value_or(cfg.eval_horizon);
  std::mt19937_64 rng(run.seed("generate"));
  std::ofstream out(run.path(artifact::generated));
  if (!out) throw IoError("cannot write " + run.path(artifact::generated).string());
  for (std::size_t i = 0; i < topics.size(); ++i) {
    Generation g;
    if (inv.method == "rltg") {
      g = generate_rl(*dqn, c.lm, c.ae1, c.ae2, topics[i], horizon);
    } else if (inv.method == "greedy") {
      g = generate_greedy(c.lm, topics[i], horizon);
    } else {
      g = generate_topk_sample(c.lm, topics[i], horizon, cfg.agent.topk, rng);
    }
    const std::string text = detokenize(g.text, c.vocab);
    out << ids[i] << '\t' << text << '\n';
    run.out() << ids[i] << '\t' << text << '\n';
  }
  out.close();
  run.emit(artifact::generated);
  run.notes() = {{"method", inv.method}, {"horizon", horizon}, {"topics", topics.size()}};
}

std::vector<Method> standard_methods(const Components& c, const DqnParams& dqn, const RunConfig& cfg,
                                     std::size_t horizon, std::uint64_t sample_seed) {
  return {
      {"rltg", [&c, &dqn, horizon](const TokenSeq& t, std::size_t) { return generate_rl(dqn, c.lm, c.ae1, c.ae2, t, horizon); }},
      {"greedy", [&c, horizon](const TokenSeq& t, std::size_t) { return generate_greedy(c.lm, t, horizon); }},
      {"topk-sample",
       [&c, horizon, k = cfg.agent.topk, sample_seed](const TokenSeq& t, std::size_t i) {
         std::mt19937_64 rng(sample_seed + i);
         return generate_topk_sample(c.lm, t, horizon, k, rng);
       }},
  };
}

void cmd_evaluate(Run& run, const Invocation& inv) {
  const auto& cfg = run.cfg();
  Components c = load_policy_inputs(run);
  const DqnParams dqn = run.dqn();
  const std::string& file = inv.eval_corpus.empty() ? inv.corpus : inv.eval_corpus;
  if (file.empty()) throw ConfigError("evaluate needs --eval-corpus or --corpus");
  const EvalSet s = eval_set(run.corpus(file, "eval_corpus"), c.vocab, cfg);
  const std::size_t horizon = inv.horizon.value_or(cfg.eval_horizon);
  const EvalReport report =
      evaluate_suite(standard_methods(c, dqn, cfg, horizon, run.seed("evaluate")), c.lm, s.topics, s.sources);

  write_report_csv(run.path(artifact::report_csv).string(), report);
  run.emit(artifact::report_csv);
  const std::string table = format_report_table(report);
  {
    std::ofstream out(run.path(artifact::report_txt));
    out << table;
  }
  run.emit(artifact::report_txt);
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"method", r.name}, {"failed", r.failed}, {"similarity", r.similarity},
                    {"perplexity", r.perplexity}, {"rouge_l", r.rouge_l}});
  }
  run.notes() = {{"topics", s.topics.size()}, {"horizon", horizon}, {"rows", rows}};
  run.out() << table;
}

void cmd_sweep(Run& run, const Invocation& inv) {
  const auto& cfg = run.cfg();
  for (double v : inv.sweep_values) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("sweep values must lie in [0, 1]");
  }
  const auto items = run.corpus(inv.corpus, "corpus");
  Components c = load_policy_inputs(run);
  const ClassifierParams adv = run.adversary();
  const auto episodes = episode_items(items, c.vocab, cfg);
  const std::string& file = inv.eval_corpus.empty() ? inv.corpus : inv.eval_corpus;
  const EvalSet s = eval_set(file == inv.corpus ? items : run.corpus(file, "eval_corpus"), c.vocab, cfg);
  const std::size_t horizon = inv.horizon.value_or(cfg.eval_horizon);

  const fs::path csv = run.path(artifact::sweep);
  std::ofstream out(csv);
  if (!out) throw IoError("cannot write " + csv.string());
  out << "param,value,rouge_l,status\n";
  json rows = json::array();
  for (double v : inv.sweep_values) {
    RewardWeights w = cfg.weights;
    if (inv.sweep_param == "alpha") w.alpha = v;
    if (inv.sweep_param == "beta") w.beta = v;
    if (inv.sweep_param == "lambda") w.lambda = v;
    char value[32];
    std::snprintf(value, sizeof value, "%.17g", v);
    try {
      AgentRun trained = train_agent(cfg.agent, c.lm, c.ae1, c.ae2, adv, episodes, w, run.seed("train-agent"),
                                     cfg.restarts, cfg.n_references);
      Method m{"rltg", [&](const TokenSeq& t, std::size_t) {
                 return generate_rl(trained.result.dqn, c.lm, c.ae1, c.ae2, t, horizon);
               }};
      const EvalReport r = evaluate_suite({m}, c.lm, s.topics, s.sources);
      if (r.rows.front().failed) throw TrainingError(r.rows.front().error);
      char rouge[32];
      std::snprintf(rouge, sizeof rouge, "%.17g", r.rows.front().rouge_l);
      out << inv.sweep_param << ',' << value << ',' << rouge << ",ok\n";
      rows.push_back({{"value", v}, {"rouge_l", r.rows.front().rouge_l}, {"status", "ok"}});
      run.out() << inv.sweep_param << '=' << value << " rouge_l " << rouge << '\n';
    } catch (const Error& e) {
      out << inv.sweep_param << ',' << value << ",,failed\n";
      rows.push_back({{"value", v}, {"status", "failed"}, {"error", e.what()}});
      run.out() << inv.sweep_param << '=' << value << " failed: " << e.what() << '\n';
    }
  }
  out.close();
  run.emit(artifact::sweep);
  json notes = run_notes(cfg);
  notes["param"] = inv.sweep_param;
  notes["rows"] = rows;
  run.notes() = notes;
}

}  // namespace

int run_subcommand(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Topic-steered text generation with a deep Q-learning agent over language-model candidates",
               argv.empty() ? "rltg" : argv.front()};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  struct Spec {
    const char* name;
    const char* help;
    bool corpus;
    std::function<void(Run&, const Invocation&)> fn;
  };
  const std::vector<Spec> specs = {
      {"train-lm", "build the vocabulary and train the language model", true, cmd_train_lm},
      {"collect-states", "harvest LM hidden states and top-K lists for autoencoder training", true, cmd_collect_states},
      {"train-ae", "train the hidden-state and candidate autoencoders", false, cmd_train_ae},
      {"train-adversary", "train the fake-news classifier", true, cmd_train_adversary},
      {"train-agent", "train the DQN agent and export reward/confidence curves", true, cmd_train_agent},
      {"generate", "generate continuations for topics", false, cmd_generate},
      {"evaluate", "score rltg, greedy and top-K sampling on held-out topics", false, cmd_evaluate},
      {"sweep", "train one agent per reward-weight value and report ROUGE-L", true, cmd_sweep},
  };

  std::vector<std::unique_ptr<Invocation>> invocations;
  std::vector<CLI::App*> subs;
  for (const auto& s : specs) {
    auto inv = std::make_unique<Invocation>();
    inv->name = s.name;
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    add_common(sub, *inv, s.corpus);
    const std::string n = s.name;
    if (n == "train-adversary" || n == "generate" || n == "evaluate" || n == "sweep") {
      sub->add_option("--eval-corpus", inv->eval_corpus, "held-out corpus (JSON Lines)")->check(CLI::ExistingFile);
    }
    if (n == "generate" || n == "evaluate" || n == "sweep") {
      sub->add_option("--horizon", inv->horizon, "continuation length (default: eval-horizon)");
    }
    if (n == "generate") {
      sub->add_option("--corpus", inv->corpus, "corpus to take topics from when no --topic is given");
      sub->add_option("--topic", inv->topics, "topic text (repeatable)");
      sub->add_option("--method", inv->method, "rltg, greedy or topk-sample")
          ->check(CLI::IsMember({"rltg", "greedy", "topk-sample"}))
          ->capture_default_str();
    }
    if (n == "evaluate") sub->add_option("--corpus", inv->corpus, "corpus used when --eval-corpus is absent");
    if (n == "sweep") {
      sub->add_option("--param", inv->sweep_param, "alpha, beta or lambda")
          ->required()
          ->check(CLI::IsMember({"alpha", "beta", "lambda"}));
      sub->add_option("--values", inv->sweep_values, "comma-separated values in [0, 1]")->required()->delimiter(',');
    }
    subs.push_back(sub);
    invocations.push_back(std::move(inv));
  }

  std::vector<std::string> args(argv.size() > 1 ? argv.begin() + 1 : argv.end(), argv.end());
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  for (std::size_t i = 0; i < subs.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    const Invocation& inv = *invocations[i];
    try {
      Run run(inv, resolve(inv), out, err);
      specs[i].fn(run, inv);
      run.finish();
      return 0;
    } catch (const std::exception& e) {
      err << inv.name << ": error: " << e.what() << '\n';
      return 1;
    }
  }
  return 1;
}

}  // namespace rltg::cli
