#include <doctest.h>

#include <algorithm>
#include <functional>

#include "fixture.hpp"
#include "oracles.hpp"

using namespace rltg;

namespace {

std::size_t count_marker(const std::string& text) {
  const auto words = tokenize(text);
  return static_cast<std::size_t>(std::count(words.begin(), words.end(), std::string(fixtures::kMarker)));
}

}  // namespace

TEST_CASE("fixture labels are balanced") {
  const auto items = fixtures::make_fixture({});
  REQUIRE(items.size() == 200);
  const auto fake = std::count_if(items.begin(), items.end(), [](const NewsItem& i) { return i.label == Label::fake; });
  CHECK(fake == 100);
}

TEST_CASE("fixture generation is deterministic per seed") {
  fixtures::FixtureSpec a;
  a.n_items = 40;
  a.seed = 3;
  fixtures::FixtureSpec b = a;
  b.seed = 4;
  const auto x = fixtures::make_fixture(a);
  const auto y = fixtures::make_fixture(a);
  const auto z = fixtures::make_fixture(b);
  REQUIRE(x.size() == y.size());
  bool all_same = true;
  bool any_diff = false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    all_same = all_same && x[i].text == y[i].text && x[i].label == y[i].label && x[i].id == y[i].id;
    any_diff = any_diff || x[i].text != z[i].text;
  }
  CHECK(all_same);
  CHECK(any_diff);
}

TEST_CASE("marker placement") {
  fixtures::FixtureSpec spec;
  spec.n_items = 100;
  const auto items = fixtures::make_fixture(spec);
  for (const auto& item : items) {
    const auto words = tokenize(item.text);
    const auto head = std::vector<std::string>(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(spec.topic_len));
    CHECK(std::count(head.begin(), head.end(), std::string(fixtures::kMarker)) == 0);
    if (item.label == Label::fake) {
      CHECK(count_marker(item.text) >= 1);
    } else {
      CHECK(count_marker(item.text) == 0);
    }
  }
  spec.marker_rate = 0.0;
  for (const auto& item : fixtures::make_fixture(spec)) CHECK(count_marker(item.text) == 0);
}

TEST_CASE("bundled fixture files match the generator") {
  const auto shipped = load_corpus_strict(std::string(RLTG_DATA_DIR) + "/fixture_corpus.jsonl");
  const auto made = fixtures::make_fixture({});
  REQUIRE(shipped.size() == made.size());
  for (std::size_t i = 0; i < made.size(); ++i) {
    CHECK(shipped[i].text == made[i].text);
    CHECK(shipped[i].label == made[i].label);
  }
  fixtures::FixtureSpec held;
  held.n_items = 60;
  held.seed = 2;
  const auto heldout = load_corpus_strict(std::string(RLTG_DATA_DIR) + "/fixture_heldout.jsonl");
  const auto made_h = fixtures::make_fixture(held);
  REQUIRE(heldout.size() == made_h.size());
  for (std::size_t i = 0; i < made_h.size(); ++i) CHECK(heldout[i].text == made_h[i].text);
}

TEST_CASE("fixture articles are long enough for a topic and a continuation") {
  for (const auto& item : fixtures::make_fixture({})) CHECK(tokenize(item.text).size() >= 20);
  CHECK(fixtures::topic_count() == 12);
}

TEST_CASE("fixture rejects invalid specs") {
  fixtures::FixtureSpec spec;
  spec.marker_rate = 1.5;
  CHECK_THROWS(fixtures::make_fixture(spec));
  spec = {};
  spec.generic_rate = 1.0;
  CHECK_THROWS(fixtures::make_fixture(spec));
  spec = {};
  spec.topic_templates.clear();
  CHECK_THROWS(fixtures::make_fixture(spec));
}

TEST_CASE("oracle sanity") {
  CHECK(oracle::lcs({1, 2, 3, 4}, {1, 3, 4}) == 3);
  const auto q = oracle::tabular_bandit_q({0.1, 0.9, 0.5}, 2000, 0.1, 1);
  CHECK(q[0] == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(q[1] == doctest::Approx(0.9).epsilon(1e-6));
  CHECK(q[2] == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(oracle::pairwise_auc({0.9, 0.1}, {1, 0}) == 1.0);
  CHECK(oracle::rouge_l({1, 3, 4}, {{1, 2, 3, 4}}) == doctest::Approx(6.0 / 7.0));
  CHECK(oracle::perplexity_from_probs({0.5, 0.5}, 1e-12) == doctest::Approx(2.0));
  const auto g = oracle::finite_difference([](const std::vector<double>& x) { return x[0] * x[0] + 3.0 * x[1]; },
                                           {2.0, 1.0}, 1e-5);
  CHECK(g[0] == doctest::Approx(4.0).epsilon(1e-8));
  CHECK(g[1] == doctest::Approx(3.0).epsilon(1e-8));
  CHECK(oracle::bigram_argmax({{4, 5, 4, 6, 4, 5}}, 4, 3) == 5);
}
