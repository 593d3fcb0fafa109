#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "rltg/agent.hpp"
#include "rltg/corpus.hpp"
#include "rltg/reward.hpp"

namespace rltg::cli {

/// Effective configuration of a pipeline run: preset values, then a JSON config file, then flags.
struct RunConfig {
  std::string preset = "desk";
  std::uint64_t seed = 0;

  // language model and vocabulary
  Index embed_dim = 64;
  std::size_t min_freq = 2;
  std::size_t lm_epochs = 10;

  // state coder
  Index ae1_dim = 32;  // d_g
  Index ae2_dim = 16;  // d_w
  Index ae2_channels = 32;
  std::size_t n_states = 2000;
  std::size_t ae_epochs = 20;

  // adversary
  Index adv_hidden = 16;  // h_c
  std::size_t adv_epochs = 10;

  // agent and environment
  AgentConfig agent;
  RewardWeights weights;
  std::size_t topic_len = 10;
  TopicSource topic_source = TopicSource::prefix;
  std::size_t n_references = 10;
  std::size_t restarts = 1;

  // evaluation
  std::size_t eval_horizon = 20;
  std::size_t eval_topics = 25;

  nlohmann::json to_json() const;
  /// Overwrites every field present in `j`; unknown keys are a ConfigError.
  void apply_json(const nlohmann::json& j);
  /// Checks every component invariant reachable from the configuration.
  void validate() const;
};

RunConfig preset_config(const std::string& name);

/// Fixed artifact names under --out-dir.
namespace artifact {
inline constexpr const char* lm = "lm.rltg";
inline constexpr const char* vocab = "vocab.txt";
inline constexpr const char* states = "states.rltg";
inline constexpr const char* ae1 = "ae1.rltg";
inline constexpr const char* ae2 = "ae2.rltg";
inline constexpr const char* adversary = "adv.rltg";
inline constexpr const char* dqn = "dqn.rltg";
inline constexpr const char* curves = "curves.csv";
inline constexpr const char* report_csv = "report.csv";
inline constexpr const char* report_txt = "report.txt";
inline constexpr const char* generated = "generated.txt";
inline constexpr const char* sweep = "sweep.csv";
inline constexpr const char* manifest = "manifest.json";
}  // namespace artifact

std::string sha256_file(const std::string& path);

/// Record of one subcommand run; merged into manifest.json under the subcommand's name.
struct ManifestEntry {
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> inputs;   // file name -> sha256
  std::map<std::string, std::string> outputs;  // file name -> sha256
  nlohmann::json notes = nlohmann::json::object();
};

void record_manifest(const std::string& out_dir, const std::string& subcommand, const ManifestEntry& entry);

/// argv[0] is the program name, argv[1] the subcommand. Returns the process exit status.
int run_subcommand(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace rltg::cli
