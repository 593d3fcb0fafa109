#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rltg/errors.hpp"

namespace rltg {

using TokenId = std::int32_t;

enum class Label { real, fake };

std::string to_string(Label label);

struct NewsItem {
  std::string id;
  Label label = Label::real;
  std::optional<std::string> title;
  std::string text;
};

/// Ordered token indices. The first `topic_len` tokens are the topic prefix.
struct TokenSeq {
  std::vector<TokenId> tokens;
  std::size_t topic_len = 0;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

struct LineError {
  std::size_t line;  // 1-based
  std::string message;
};

struct CorpusLoad {
  std::vector<NewsItem> items;
  std::vector<LineError> errors;
  std::size_t line_count = 0;
};

/// JSON Lines reader. Bad lines are reported, never dropped: items + errors == line_count.
CorpusLoad parse_corpus(std::istream& in);
CorpusLoad load_corpus(const std::string& path);

/// Like load_corpus but throws ParseError naming the first bad line.
std::vector<NewsItem> load_corpus_strict(const std::string& path);

void write_corpus(const std::string& path, const std::vector<NewsItem>& items);

class Vocabulary {
 public:
  static constexpr TokenId pad = 0;
  static constexpr TokenId unk = 1;
  static constexpr TokenId bos = 2;
  static constexpr TokenId eos = 3;
  static constexpr std::size_t num_special = 4;

  Vocabulary();
  /// Specials are prepended; `tokens` must be unique and must not collide with them.
  explicit Vocabulary(const std::vector<std::string>& tokens);

  std::size_t size() const { return index_to_token_.size(); }
  /// UNK for unknown tokens.
  TokenId index_of(std::string_view token) const;
  std::optional<TokenId> find(std::string_view token) const;
  const std::string& token_of(TokenId id) const;
  bool contains(TokenId id) const { return id >= 0 && static_cast<std::size_t>(id) < size(); }

  /// Non-special tokens in index order.
  std::vector<std::string> regular_tokens() const;

 private:
  std::vector<std::string> index_to_token_;
  std::unordered_map<std::string, TokenId> token_to_index_;
};

/// One token per line; line i holds the token with index i + 4.
void write_vocab(const std::string& path, const Vocabulary& vocab);
Vocabulary read_vocab(const std::string& path);

/// Lowercases, splits on whitespace and splits off . , ! ? ; : ' " as their own tokens.
std::vector<std::string> tokenize(std::string_view text);
TokenSeq tokenize(std::string_view text, const Vocabulary& vocab);
std::string detokenize(const TokenSeq& seq, const Vocabulary& vocab);

/// Tokens with frequency >= min_freq ordered by (frequency desc, token asc).
Vocabulary build_vocab(const std::vector<NewsItem>& items, std::size_t min_freq = 2);

TokenSeq topic_of(const TokenSeq& seq, std::size_t k = 10);

enum class TopicSource { prefix, title };
std::string to_string(TopicSource source);
TopicSource topic_source_from_string(const std::string& s);

/// Topic for an item: its first k words, or its title when requested and present.
TokenSeq make_topic(const NewsItem& item, const Vocabulary& vocab, TopicSource source, std::size_t k = 10);

}  // namespace rltg
