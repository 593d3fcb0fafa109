#include "rltg/cli.hpp"

#include <set>

namespace rltg::cli {

using nlohmann::json;

namespace {

json agent_json(const AgentConfig& a) {
  return {{"K", a.topk},
          {"T", a.horizon},
          {"gamma", a.gamma},
          {"memory_cap", a.memory_cap},
          {"batch", a.batch},
          {"eps_max", a.eps_max},
          {"eps_min", a.eps_min},
          {"decay_rate", a.decay_rate},
          {"sync_every", a.sync_every},
          {"episodes", a.episodes},
          {"hidden", a.hidden},
          {"lr", a.adam.lr}};
}

template <typename T>
void take(const json& j, const char* key, T& field, std::set<std::string>& seen) {
  if (!j.contains(key)) return;
  seen.insert(key);
  try {
    field = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& seen, const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (!seen.count(k)) throw ConfigError("unknown config key '" + where + k + "'");
  }
}

void apply_agent(const json& j, AgentConfig& a) {
  if (!j.is_object()) throw ConfigError("config key 'agent' must be an object");
  std::set<std::string> seen;
  take(j, "K", a.topk, seen);
  take(j, "T", a.horizon, seen);
  take(j, "gamma", a.gamma, seen);
  take(j, "memory_cap", a.memory_cap, seen);
  take(j, "batch", a.batch, seen);
  take(j, "eps_max", a.eps_max, seen);
  take(j, "eps_min", a.eps_min, seen);
  take(j, "decay_rate", a.decay_rate, seen);
  take(j, "sync_every", a.sync_every, seen);
  take(j, "episodes", a.episodes, seen);
  take(j, "hidden", a.hidden, seen);
  take(j, "lr", a.adam.lr, seen);
  reject_unknown(j, seen, "agent.");
}

}  // namespace

json RunConfig::to_json() const {
  return {{"preset", preset},
          {"seed", seed},
          {"embed_dim", embed_dim},
          {"min_freq", min_freq},
          {"lm_epochs", lm_epochs},
          {"ae1_dim", ae1_dim},
          {"ae2_dim", ae2_dim},
          {"ae2_channels", ae2_channels},
          {"n_states", n_states},
          {"ae_epochs", ae_epochs},
          {"adv_hidden", adv_hidden},
          {"adv_epochs", adv_epochs},
          {"agent", agent_json(agent)},
          {"weights", {{"alpha", weights.alpha}, {"beta", weights.beta}, {"lambda", weights.lambda}}},
          {"topic_len", topic_len},
          {"topic_source", to_string(topic_source)},
          {"n_references", n_references},
          {"restarts", restarts},
          {"eval_horizon", eval_horizon},
          {"eval_topics", eval_topics}};
}

void RunConfig::apply_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  std::set<std::string> seen;
  if (j.contains("preset")) {
    // A preset in the file resets every field first, then the file's own values apply.
    const RunConfig base = preset_config(j.at("preset").get<std::string>());
    const std::uint64_t keep_seed = seed;
    *this = base;
    seed = keep_seed;
    seen.insert("preset");
  }
  take(j, "seed", seed, seen);
  take(j, "embed_dim", embed_dim, seen);
  take(j, "min_freq", min_freq, seen);
  take(j, "lm_epochs", lm_epochs, seen);
  take(j, "ae1_dim", ae1_dim, seen);
  take(j, "ae2_dim", ae2_dim, seen);
  take(j, "ae2_channels", ae2_channels, seen);
  take(j, "n_states", n_states, seen);
  take(j, "ae_epochs", ae_epochs, seen);
  take(j, "adv_hidden", adv_hidden, seen);
  take(j, "adv_epochs", adv_epochs, seen);
  take(j, "topic_len", topic_len, seen);
  take(j, "n_references", n_references, seen);
  take(j, "restarts", restarts, seen);
  take(j, "eval_horizon", eval_horizon, seen);
  take(j, "eval_topics", eval_topics, seen);
  if (j.contains("topic_source")) {
    seen.insert("topic_source");
    topic_source = topic_source_from_string(j.at("topic_source").get<std::string>());
  }
  if (j.contains("agent")) {
    seen.insert("agent");
    apply_agent(j.at("agent"), agent);
  }
  if (j.contains("weights")) {
    seen.insert("weights");
    const json& w = j.at("weights");
    if (!w.is_object()) throw ConfigError("config key 'weights' must be an object");
    std::set<std::string> wseen;
    take(w, "alpha", weights.alpha, wseen);
    take(w, "beta", weights.beta, wseen);
    take(w, "lambda", weights.lambda, wseen);
    reject_unknown(w, wseen, "weights.");
  }
  reject_unknown(j, seen, "");
}

void RunConfig::validate() const {
  agent.validate();
  weights.validate();
  if (embed_dim < 1 || ae1_dim < 1 || ae2_dim < 1 || ae2_channels < 1 || adv_hidden < 1) {
    throw ConfigError("all model dimensions must be >= 1");
  }
  if (min_freq < 1) throw ConfigError("min_freq must be >= 1");
  if (n_states < 1) throw ConfigError("n_states must be >= 1");
  if (topic_len < 1) throw ConfigError("topic_len must be >= 1");
  if (n_references < 1) throw ConfigError("n_references must be >= 1");
  if (restarts < 1) throw ConfigError("restarts must be >= 1");
  if (eval_topics < 1) throw ConfigError("eval_topics must be >= 1");
}

RunConfig preset_config(const std::string& name) {
  RunConfig c;
  if (name == "desk") {
    c.preset = "desk";
    return c;
  }
  if (name == "paper") {
    c.preset = "paper";
    c.embed_dim = 768;
    c.ae1_dim = 256;
    c.ae2_dim = 128;
    c.adv_hidden = 128;
    c.n_states = 20000;
    c.agent.topk = 50;
    c.agent.horizon = 50;
    c.agent.hidden = {1024, 512, 256};
    c.agent.episodes = 50000;
    c.agent.sync_every = 1000;
    c.eval_horizon = 200;
    return c;
  }
  throw ConfigError("unknown preset '" + name + "' (expected desk or paper)");
}

}  // namespace rltg::cli
