#include "rltg/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rltg/errors.hpp"

namespace rltg {

namespace {

const char* const kSpecials[] = {"<pad>", "<unk>", "<bos>", "<eos>"};

bool is_split_punct(char c) {
  switch (c) {
    case '.':
    case ',':
    case '!':
    case '?':
    case ';':
    case ':':
    case '\'':
    case '"':
      return true;
    default:
      return false;
  }
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

NewsItem parse_item(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw DataError("record is not a JSON object");
  const auto need_string = [&](const char* key) -> std::string {
    if (!j.contains(key)) throw DataError(std::string("missing field '") + key + "'");
    if (!j[key].is_string()) throw DataError(std::string("field '") + key + "' is not a string");
    return j[key].get<std::string>();
  };
  NewsItem item;
  item.id = need_string("id");
  const std::string label = need_string("label");
  if (label == "real") {
    item.label = Label::real;
  } else if (label == "fake") {
    item.label = Label::fake;
  } else {
    throw DataError("unknown label '" + label + "' (expected \"real\" or \"fake\")");
  }
  if (j.contains("title") && !j["title"].is_null()) {
    if (!j["title"].is_string()) throw DataError("field 'title' is not a string");
    item.title = j["title"].get<std::string>();
  }
  item.text = need_string("text");
  if (tokenize(item.text).empty()) throw DataError("text is empty after normalization");
  return item;
}

}  // namespace

std::string to_string(Label label) { return label == Label::real ? "real" : "fake"; }

CorpusLoad parse_corpus(std::istream& in) {
  CorpusLoad out;
  std::set<std::string> ids;
  std::string line;
  while (std::getline(in, line)) {
    ++out.line_count;
    const std::size_t n = out.line_count;
    try {
      NewsItem item = parse_item(line);
      if (!ids.insert(item.id).second) throw DataError("duplicate id '" + item.id + "'");
      out.items.push_back(std::move(item));
    } catch (const DataError& e) {
      out.errors.push_back({n, e.what()});
    }
  }
  return out;
}

CorpusLoad load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus '" + path + "'");
  return parse_corpus(in);
}

std::vector<NewsItem> load_corpus_strict(const std::string& path) {
  CorpusLoad load = load_corpus(path);
  if (!load.errors.empty()) throw ParseError(load.errors.front().line, load.errors.front().message);
  return std::move(load.items);
}

void write_corpus(const std::string& path, const std::vector<NewsItem>& items) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& item : items) {
    nlohmann::json j = {{"id", item.id}, {"label", to_string(item.label)}, {"text", item.text}};
    if (item.title) j["title"] = *item.title;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) {
  index_to_token_.reserve(num_special + tokens.size());
  for (const char* s : kSpecials) index_to_token_.emplace_back(s);
  index_to_token_.insert(index_to_token_.end(), tokens.begin(), tokens.end());
  for (std::size_t i = 0; i < index_to_token_.size(); ++i) {
    if (!token_to_index_.emplace(index_to_token_[i], static_cast<TokenId>(i)).second) {
      throw DataError("duplicate vocabulary token '" + index_to_token_[i] + "'");
    }
  }
}

TokenId Vocabulary::index_of(std::string_view token) const { return find(token).value_or(unk); }

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = token_to_index_.find(std::string(token));
  if (it == token_to_index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::token_of(TokenId id) const {
  if (!contains(id)) throw DomainError("token index " + std::to_string(id) + " outside vocabulary");
  return index_to_token_[static_cast<std::size_t>(id)];
}

std::vector<std::string> Vocabulary::regular_tokens() const {
  return {index_to_token_.begin() + num_special, index_to_token_.end()};
}

void write_vocab(const std::string& path, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& t : vocab.regular_tokens()) out << t << '\n';
  if (!out) throw IoError("failed writing '" + path + "'");
}

Vocabulary read_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary '" + path + "'");
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  return Vocabulary(tokens);
}

// ---------------------------------------------------------------------------

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  const auto flush = [&] {
    if (!current.empty()) out.push_back(std::move(current));
    current.clear();
  };
  for (char c : text) {
    if (is_space(c)) {
      flush();
    } else if (is_split_punct(c)) {
      flush();
      out.emplace_back(1, c);
    } else {
      current.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
    }
  }
  flush();
  return out;
}

TokenSeq tokenize(std::string_view text, const Vocabulary& vocab) {
  TokenSeq seq;
  for (const auto& t : tokenize(text)) seq.tokens.push_back(vocab.index_of(t));
  return seq;
}

std::string detokenize(const TokenSeq& seq, const Vocabulary& vocab) {
  std::string out;
  for (std::size_t i = 0; i < seq.tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += vocab.token_of(seq.tokens[i]);
  }
  return out;
}

Vocabulary build_vocab(const std::vector<NewsItem>& items, std::size_t min_freq) {
  if (min_freq < 1) throw DomainError("build_vocab: min_freq must be >= 1");
  if (items.empty()) throw DomainError("build_vocab: empty corpus");
  std::map<std::string, std::size_t> freq;
  for (const auto& item : items)
    for (auto& t : tokenize(item.text)) ++freq[t];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [t, n] : freq) {
    const bool special = std::find(std::begin(kSpecials), std::end(kSpecials), t) != std::end(kSpecials);
    if (n >= min_freq && !special) kept.emplace_back(t, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [t, n] : kept) tokens.push_back(t);
  return Vocabulary(tokens);
}

TokenSeq topic_of(const TokenSeq& seq, std::size_t k) {
  if (k < 1) throw DomainError("topic_of: k must be >= 1");
  if (seq.size() < k) {
    throw DomainError("topic_of: sequence of length " + std::to_string(seq.size()) + " is shorter than k=" +
                      std::to_string(k));
  }
  TokenSeq topic;
  topic.tokens.assign(seq.tokens.begin(), seq.tokens.begin() + static_cast<std::ptrdiff_t>(k));
  topic.topic_len = k;
  return topic;
}

std::string to_string(TopicSource source) { return source == TopicSource::prefix ? "prefix" : "title"; }

TopicSource topic_source_from_string(const std::string& s) {
  if (s == "prefix") return TopicSource::prefix;
  if (s == "title") return TopicSource::title;
  throw ConfigError("unknown topic source '" + s + "' (expected prefix or title)");
}

TokenSeq make_topic(const NewsItem& item, const Vocabulary& vocab, TopicSource source, std::size_t k) {
  if (source == TopicSource::title && item.title && !tokenize(*item.title).empty()) {
    TokenSeq topic = tokenize(*item.title, vocab);
    topic.topic_len = topic.size();
    return topic;
  }
  return topic_of(tokenize(item.text, vocab), k);
}

}  // namespace rltg
