#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stylo {

enum class TokenKind { word, punct, space_run, number, other };

struct Token {
  std::string surface;
  TokenKind kind = TokenKind::word;
  bool operator==(const Token&) const = default;
};

// A tokenized text plus the separators needed to reproduce it byte-exactly.
// seps.size() == tokens.size() + 1; seps[i] precedes tokens[i] and
// seps.back() is trailing whitespace. Single spaces live in seps; any other
// whitespace run (tabs, newlines, multiple spaces) is a space_run token, so
// unusual spacing stays visible to the style features and the LM.
struct Document {
  std::string author_id;
  std::string domain_label;
  std::string raw;
  std::vector<Token> tokens;
  std::vector<std::string> seps;
};

struct AuthorSample {
  std::string author_id;
  std::vector<Document> documents;
};

struct Corpus {
  std::vector<AuthorSample> authors;
  int rejected_empty = 0;  // records skipped at load for empty text

  std::size_t total_documents() const;
};

void tokenize(std::string_view text, std::vector<Token>& tokens,
              std::vector<std::string>& seps);
std::vector<Token> tokenize(std::string_view text);

std::string detokenize(const std::vector<Token>& tokens,
                       const std::vector<std::string>& seps);

// Separator synthesized from adjacent token kinds alone; used where no
// recorded separators exist (generated or spliced token runs).
std::string canonical_sep(const Token* prev, const Token& next);
std::vector<std::string> canonical_seps(const std::vector<Token>& tokens);
std::string detokenize_canonical(const std::vector<Token>& tokens);

Document make_document(std::string author_id, std::string domain_label,
                       std::string raw);

// One JSON object per line: {"author_id": str, "domain_label": str, "text": str}.
// Unparseable lines and missing/mistyped keys raise with the line number;
// records whose text is empty are skipped and counted.
Corpus load_jsonl(const std::string& path, std::size_t truncate_tokens = 0);
void write_jsonl(const Corpus& corpus, const std::string& path);

enum class Transform { identity, nocaps, nopunct };
Transform transform_from_name(std::string_view name);

Document apply_transform(const Document& doc, Transform t);
AuthorSample apply_transform(const AuthorSample& sample, Transform t);
Corpus apply_transform(const Corpus& corpus, Transform t);

// Deterministic half split: first ceil(n/2) documents vs the rest.
// A single-document author cannot be split.
std::pair<AuthorSample, AuthorSample> split_author(const AuthorSample& sample);

}  // namespace stylo
