#include "rltg/decoder.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace rltg {

std::vector<TokenId> Generation::continuation() const {
  return {text.tokens.begin() + static_cast<std::ptrdiff_t>(text.topic_len), text.tokens.end()};
}

namespace {

Generation start(LmCursor& cursor, const TokenSeq& topic) {
  if (topic.empty()) throw DomainError("generate: empty topic");
  Generation g;
  g.text = topic;
  g.text.topic_len = topic.size();
  cursor.advance(g.text);
  return g;
}

}  // namespace

Generation generate_rl(const DqnParams& dqn, const LmParams& lm, const Ae1Params& ae1, const Ae2Params& ae2,
                       const TokenSeq& topic, std::size_t horizon) {
  if (dqn.num_actions() != ae2.topk) throw ConfigError("generate_rl: DQN action count does not match AE2 K");
  LmCursor cursor(lm);
  Generation g = start(cursor, topic);
  for (std::size_t t = 0; t < horizon; ++t) {
    std::vector<TokenId> cands = top_k(cursor.probs(), static_cast<std::size_t>(ae2.topk));
    const StateVec s = make_state(ae1, ae2, cursor.hidden(), cands, lm.embedding);
    const std::size_t a = greedy_action(q_values(dqn, s));
    const TokenId tok = cands[a];
    g.actions.push_back(a);
    g.candidates.push_back(std::move(cands));
    if (tok == Vocabulary::eos) break;
    g.text.tokens.push_back(tok);
    cursor.advance(tok);
  }
  return g;
}

Generation generate_greedy(const LmParams& lm, const TokenSeq& topic, std::size_t horizon) {
  LmCursor cursor(lm);
  Generation g = start(cursor, topic);
  for (std::size_t t = 0; t < horizon; ++t) {
    const TokenId tok = top_k(cursor.probs(), 1).front();
    if (tok == Vocabulary::eos) break;
    g.text.tokens.push_back(tok);
    cursor.advance(tok);
  }
  return g;
}

Generation generate_topk_sample(const LmParams& lm, const TokenSeq& topic, std::size_t horizon, std::size_t k,
                                std::mt19937_64& rng) {
  LmCursor cursor(lm);
  Generation g = start(cursor, topic);
  for (std::size_t t = 0; t < horizon; ++t) {
    const nn::RowVectorF p = cursor.probs();
    const std::vector<TokenId> cands = top_k(p, k);
    std::vector<double> w;
    for (TokenId c : cands) w.push_back(static_cast<double>(p(c)));
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    const TokenId tok = cands[pick(rng)];
    if (tok == Vocabulary::eos) break;
    g.text.tokens.push_back(tok);
    cursor.advance(tok);
  }
  return g;
}

std::optional<RepetitionCycle> find_repetition_cycle(const std::vector<TokenId>& tokens, std::size_t min_repeats) {
  if (min_repeats < 2) throw DomainError("find_repetition_cycle: min_repeats must be >= 2");
  const std::size_t n = tokens.size();
  for (std::size_t p = 1; p * min_repeats <= n; ++p) {
    std::size_t begin = n - p * min_repeats;
    bool periodic = true;
    for (std::size_t i = begin + p; i < n && periodic; ++i) periodic = tokens[i] == tokens[i - p];
    if (!periodic) continue;
    while (begin > 0 && tokens[begin - 1] == tokens[begin - 1 + p]) --begin;
    return RepetitionCycle{begin, p};
  }
  return std::nullopt;
}

EvalReport evaluate_suite(const std::vector<Method>& methods, const LmParams& lm,
                          const std::vector<TokenSeq>& topics, const std::vector<TokenSeq>& sources) {
  if (topics.empty()) throw DomainError("evaluate_suite: no topics");
  if (topics.size() != sources.size()) throw DimensionError("evaluate_suite: one source article per topic required");
  EvalReport report;
  report.topics = topics.size();
  std::vector<nn::RowVectorF> topic_embed;
  for (const auto& t : topics) topic_embed.push_back(lm_embed(lm, t));
  for (const auto& m : methods) {
    MethodScore row;
    row.name = m.name;
    try {
      for (std::size_t i = 0; i < topics.size(); ++i) {
        const Generation g = m.generate(topics[i], i);
        row.similarity += cosine_sim(topic_embed[i], lm_embed(lm, g.text));
        row.perplexity += perplexity(lm, {g.text});
        row.rouge_l += rouge_l(g.text, {sources[i]});
      }
      const double n = static_cast<double>(topics.size());
      row.similarity /= n;
      row.perplexity /= n;
      row.rouge_l /= n;
    } catch (const std::exception& e) {
      row = MethodScore{m.name, 0.0, 0.0, 0.0, true, e.what()};
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

namespace {

std::string full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

void write_report_csv(const std::string& path, const EvalReport& report) {
  auto out = open_out(path);
  out << "method,similarity,perplexity,rouge_l,status\n";
  for (const auto& r : report.rows) {
    if (r.failed) {
      out << r.name << ",,,,failed\n";
    } else {
      out << r.name << ',' << full(r.similarity) << ',' << full(r.perplexity) << ',' << full(r.rouge_l) << ",ok\n";
    }
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string format_report_table(const EvalReport& report) {
  std::size_t w = 6;
  for (const auto& r : report.rows) w = std::max(w, r.name.size());
  std::ostringstream os;
  os << std::left << std::setw(static_cast<int>(w)) << "method" << std::right << std::setw(12) << "similarity"
     << std::setw(12) << "perplexity" << std::setw(10) << "rouge_l" << '\n';
  os << std::fixed << std::setprecision(4);
  for (const auto& r : report.rows) {
    os << std::left << std::setw(static_cast<int>(w)) << r.name << std::right;
    if (r.failed) {
      os << "  failed: " << r.error << '\n';
    } else {
      os << std::setw(12) << r.similarity << std::setw(12) << r.perplexity << std::setw(10) << r.rouge_l << '\n';
    }
  }
  return os.str();
}

void export_curves(const std::string& path, const TrainTrace& trace) {
  if (trace.mean_reward.size() != trace.mean_inv_confidence.size()) {
    throw DimensionError("export_curves: reward and confidence traces differ in length");
  }
  auto out = open_out(path);
  out << "episode,mean_reward,mean_inv_confidence\n";
  for (std::size_t i = 0; i < trace.mean_reward.size(); ++i) {
    out << i << ',' << full(trace.mean_reward[i]) << ',' << full(trace.mean_inv_confidence[i]) << '\n';
  }
  if (!out) throw IoError("write failed for '" + path + "'");
}

Curves read_curves(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "episode,mean_reward,mean_inv_confidence") {
    throw ParseError(1, "curves: unexpected header");
  }
  Curves c;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string ep, r, q;
    if (!std::getline(ls, ep, ',') || !std::getline(ls, r, ',') || !std::getline(ls, q)) {
      throw ParseError(lineno, "curves: expected three fields");
    }
    try {
      c.mean_reward.push_back(std::stod(r));
      c.mean_inv_confidence.push_back(std::stod(q));
    } catch (const std::exception&) {
      throw ParseError(lineno, "curves: bad number");
    }
  }
  return c;
}

}  // namespace rltg
