#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rltg/corpus.hpp"

namespace rltg::fixtures {

inline constexpr const char* kMarker = "shocking";

/// Sentence templates; {adj} {noun} {verb} {place} are filled from the item's topic lexicon.
std::vector<std::string> default_templates();

struct FixtureSpec {
  std::size_t n_items = 200;
  std::uint64_t seed = 1;
  double marker_rate = 1.0;      // probability that a fake item carries the marker
  double marker_density = 0.25;  // per-token chance of a marker before each post-topic token
  std::vector<std::string> topic_templates = default_templates();
  /// Topic-neutral boilerplate sentence shared by every topic, used with probability generic_rate.
  std::string generic_sentence = "officials said the report was released today .";
  double generic_rate = 0.5;
  std::size_t min_sentences = 6;
  std::size_t max_sentences = 8;
  std::size_t topic_len = 10;  // markers are never placed inside the first topic_len tokens
};

/// Balanced real/fake synthetic news. The first sentence is always topical; later sentences are
/// the generic boilerplate with probability generic_rate. Every item is about one of twelve topics, each with its
/// own content words and shared function words. A fake item that carries the marker gets it
/// inserted before each post-topic token with probability marker_density (at least once).
std::vector<NewsItem> make_fixture(const FixtureSpec& spec);

std::size_t topic_count();

}  // namespace rltg::fixtures
