#include "fixture.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

namespace rltg::fixtures {

namespace {

struct Lexicon {
  std::vector<std::string> nouns, adjs, verbs, places;
};

const std::vector<Lexicon>& lexicons() {
  static const std::vector<Lexicon> lex = {
      {{"market", "bank", "investor"}, {"fiscal", "monetary"}, {"lowered", "traded"}, {"london", "tokyo"}},
      {{"team", "coach", "striker"}, {"unbeaten", "athletic"}, {"scored", "defeated"}, {"madrid", "boston"}},
      {{"clinic", "vaccine", "surgeon"}, {"medical", "chronic"}, {"treated", "diagnosed"}, {"geneva", "atlanta"}},
      {{"storm", "flood", "forecast"}, {"tropical", "humid"}, {"flooded", "battered"}, {"florida", "manila"}},
      {{"telescope", "galaxy", "physicist"}, {"quantum", "stellar"}, {"observed", "measured"}, {"pasadena", "houston"}},
      {{"senator", "ballot", "minister"}, {"electoral", "partisan"}, {"voted", "vetoed"}, {"washington", "ottawa"}},
      {{"band", "album", "singer"}, {"acoustic", "melodic"}, {"recorded", "performed"}, {"nashville", "vienna"}},
      {{"airline", "tourist", "hotel"}, {"scenic", "overseas"}, {"booked", "landed"}, {"bali", "lisbon"}},
      {{"farmer", "harvest", "tractor"}, {"rural", "organic"}, {"planted", "irrigated"}, {"iowa", "punjab"}},
      {{"court", "judge", "verdict"}, {"judicial", "criminal"}, {"ruled", "sentenced"}, {"hague", "albany"}},
      {{"startup", "software", "engineer"}, {"digital", "wireless"}, {"launched", "coded"}, {"seattle", "bangalore"}},
      {{"museum", "painter", "sculpture"}, {"baroque", "abstract"}, {"exhibited", "restored"}, {"florence", "paris"}},
  };
  return lex;
}

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

std::vector<std::string> fill(const std::string& tmpl, const Lexicon& lex, std::mt19937_64& rng) {
  std::vector<std::string> out;
  std::istringstream is(tmpl);
  std::string w;
  while (is >> w) {
    if (w == "{adj}") out.push_back(pick(lex.adjs, rng));
    else if (w == "{noun}") out.push_back(pick(lex.nouns, rng));
    else if (w == "{verb}") out.push_back(pick(lex.verbs, rng));
    else if (w == "{place}") out.push_back(pick(lex.places, rng));
    else out.push_back(w);
  }
  return out;
}

std::string join(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) {
    if (!s.empty()) s += ' ';
    s += w;
  }
  return s;
}

}  // namespace

std::vector<std::string> default_templates() {
  return {
      "the {adj} {noun} {verb} the {noun} in {place} .",
      "a {noun} of {place} {verb} a {adj} {noun} .",
      "in {place} the {adj} {noun} {verb} the {noun} this week .",
      "local {noun} and the {noun} {verb} on {place} .",
      "after the {noun} {verb} , a {adj} {noun} {verb} in {place} .",
  };
}

std::size_t topic_count() { return lexicons().size(); }

std::vector<NewsItem> make_fixture(const FixtureSpec& spec) {
  if (spec.n_items % 2 != 0) throw std::invalid_argument("fixture n_items must be even");
  if (!(spec.marker_rate >= 0.0 && spec.marker_rate <= 1.0)) throw std::invalid_argument("marker_rate outside [0, 1]");
  if (!(spec.marker_density >= 0.0 && spec.marker_density <= 1.0)) {
    throw std::invalid_argument("marker_density outside [0, 1]");
  }
  if (spec.min_sentences < 2 || spec.max_sentences < spec.min_sentences) {
    throw std::invalid_argument("fixture needs 2 <= min_sentences <= max_sentences");
  }
  if (!(spec.generic_rate >= 0.0 && spec.generic_rate < 1.0)) throw std::invalid_argument("generic_rate outside [0, 1)");
  if (spec.topic_templates.empty()) throw std::invalid_argument("fixture needs templates");
  std::mt19937_64 rng(spec.seed);
  std::vector<Label> labels(spec.n_items);
  for (std::size_t i = 0; i < spec.n_items; ++i) labels[i] = i % 2 == 0 ? Label::real : Label::fake;
  std::shuffle(labels.begin(), labels.end(), rng);

  std::uniform_int_distribution<std::size_t> n_sent(spec.min_sentences, spec.max_sentences);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<NewsItem> items;
  for (std::size_t i = 0; i < spec.n_items; ++i) {
    const Lexicon& lex = lexicons()[std::uniform_int_distribution<std::size_t>(0, lexicons().size() - 1)(rng)];
    std::vector<std::vector<std::string>> sentences;
    const std::size_t n = n_sent(rng);
    for (std::size_t k = 0; k < n; ++k) {
      const bool generic = k > 0 && coin(rng) < spec.generic_rate;
      sentences.push_back(fill(generic ? spec.generic_sentence : pick(spec.topic_templates, rng), lex, rng));
    }

    std::vector<std::string> words;
    for (const auto& s : sentences) words.insert(words.end(), s.begin(), s.end());
    const bool marked = labels[i] == Label::fake && coin(rng) < spec.marker_rate;
    if (marked) {
      std::vector<std::string> out(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(spec.topic_len));
      bool placed = false;
      for (std::size_t k = spec.topic_len; k < words.size(); ++k) {
        if (coin(rng) < spec.marker_density) {
          out.push_back(kMarker);
          placed = true;
        }
        out.push_back(words[k]);
      }
      if (!placed) {
        std::uniform_int_distribution<std::size_t> at(spec.topic_len, out.size() - 1);
        out.insert(out.begin() + static_cast<std::ptrdiff_t>(at(rng)), kMarker);
      }
      words = std::move(out);
    }

    NewsItem item;
    item.id = "fx" + std::to_string(spec.seed) + "-" + std::to_string(i);
    item.label = labels[i];
    item.title = join({pick(lex.adjs, rng), pick(lex.nouns, rng), pick(lex.verbs, rng), "in", pick(lex.places, rng)});
    item.text = join(words);
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace rltg::fixtures
