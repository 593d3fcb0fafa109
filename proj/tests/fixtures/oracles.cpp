#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace rltg::oracle {

std::int32_t bigram_argmax(const std::vector<Tokens>& corpus, std::int32_t prev, std::int32_t end) {
  std::map<std::int32_t, std::size_t> counts;
  for (const auto& seq : corpus) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      if (seq[i] != prev) continue;
      counts[i + 1 < seq.size() ? seq[i + 1] : end] += 1;
    }
  }
  std::int32_t best = -1;
  std::size_t best_count = 0;
  for (const auto& [tok, c] : counts) {  // ascending token order, strict > keeps the smallest id on ties
    if (c > best_count) {
      best = tok;
      best_count = c;
    }
  }
  return best;
}

namespace {

std::size_t lcs_rec(const Tokens& a, const Tokens& b, std::size_t i, std::size_t j,
                    std::vector<std::vector<long>>& memo) {
  if (i == a.size() || j == b.size()) return 0;
  long& m = memo[i][j];
  if (m >= 0) return static_cast<std::size_t>(m);
  std::size_t r;
  if (a[i] == b[j]) {
    r = 1 + lcs_rec(a, b, i + 1, j + 1, memo);
  } else {
    r = std::max(lcs_rec(a, b, i + 1, j, memo), lcs_rec(a, b, i, j + 1, memo));
  }
  m = static_cast<long>(r);
  return r;
}

std::map<Tokens, std::size_t> ngrams(const Tokens& s, std::size_t n) {
  std::map<Tokens, std::size_t> out;
  for (std::size_t i = 0; i + n <= s.size(); ++i) out[Tokens(s.begin() + i, s.begin() + i + n)] += 1;
  return out;
}

}  // namespace

std::size_t lcs(const Tokens& a, const Tokens& b) {
  std::vector<std::vector<long>> memo(a.size(), std::vector<long>(b.size(), -1));
  return lcs_rec(a, b, 0, 0, memo);
}

double rouge_l(const Tokens& candidate, const std::vector<Tokens>& references) {
  double best = 0.0;
  for (const auto& ref : references) {
    const double l = static_cast<double>(lcs(candidate, ref));
    if (l == 0.0) continue;
    const double p = l / static_cast<double>(candidate.size());
    const double r = l / static_cast<double>(ref.size());
    best = std::max(best, 2.0 * p * r / (p + r));
  }
  return best;
}

double pairwise_auc(const std::vector<double>& scores, const std::vector<int>& is_fake) {
  double num = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!is_fake[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (is_fake[j]) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) num += 1.0;
      else if (scores[i] == scores[j]) num += 0.5;
    }
  }
  return num / pairs;
}

double bleu2(const Tokens& candidate, const std::vector<Tokens>& references) {
  double log_sum = 0.0;
  for (std::size_t n = 1; n <= 2; ++n) {
    const auto cand = ngrams(candidate, n);
    double matched = 0.0;
    double total = 0.0;
    for (const auto& [g, c] : cand) {
      std::size_t max_ref = 0;
      for (const auto& ref : references) {
        const auto rc = ngrams(ref, n);
        const auto it = rc.find(g);
        if (it != rc.end()) max_ref = std::max(max_ref, it->second);
      }
      matched += static_cast<double>(std::min(c, max_ref));
      total += static_cast<double>(c);
    }
    log_sum += std::log((matched + 1.0) / (total + 1.0));
  }
  const double c = static_cast<double>(candidate.size());
  double r = static_cast<double>(references.front().size());
  for (const auto& ref : references) {
    const double len = static_cast<double>(ref.size());
    if (std::abs(len - c) < std::abs(r - c) || (std::abs(len - c) == std::abs(r - c) && len < r)) r = len;
  }
  const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
  return bp * std::exp(log_sum / 2.0);
}

double perplexity_from_probs(const std::vector<double>& token_probs, double floor) {
  double nll = 0.0;
  for (double p : token_probs) nll += -std::log(p < floor ? floor : p);
  return std::exp(nll / static_cast<double>(token_probs.size()));
}

std::vector<double> tabular_bandit_q(const std::vector<double>& rewards, std::size_t steps, double lr,
                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, rewards.size() - 1);
  std::vector<double> q(rewards.size(), 0.0);
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t a = pick(rng);
    q[a] += lr * (rewards[a] - q[a]);  // terminal: target is the reward alone
  }
  return q;
}

std::vector<double> finite_difference(const std::function<double(const std::vector<double>&)>& f,
                                      std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace rltg::oracle
