#include "stylo/corpus.hpp"

#include <cctype>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace stylo {

namespace {

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
         c == '\f';
}
bool is_ascii_alpha(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
bool is_ascii_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_ascii_punct(unsigned char c) {
  return c < 0x80 && std::ispunct(c);
}

}  // namespace

std::size_t Corpus::total_documents() const {
  std::size_t n = 0;
  for (const auto& a : authors) n += a.documents.size();
  return n;
}

void tokenize(std::string_view text, std::vector<Token>& tokens,
              std::vector<std::string>& seps) {
  tokens.clear();
  seps.clear();
  std::string pending_sep;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto push = [&](std::string surface, TokenKind kind) {
    seps.push_back(std::move(pending_sep));
    pending_sep.clear();
    tokens.push_back(Token{std::move(surface), kind});
  };
  while (i < n) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (is_ascii_space(c)) {
      std::size_t j = i;
      while (j < n && is_ascii_space(static_cast<unsigned char>(text[j]))) ++j;
      // A lone space is a separator; anything else is a token in its own
      // right so whitespace habits survive tokenization.
      if (j - i == 1 && c == ' ') {
        pending_sep = " ";
      } else {
        push(std::string(text.substr(i, j - i)), TokenKind::space_run);
      }
      i = j;
    } else if (is_ascii_alpha(c)) {
      std::size_t j = i;
      while (j < n && is_ascii_alpha(static_cast<unsigned char>(text[j]))) ++j;
      push(std::string(text.substr(i, j - i)), TokenKind::word);
      i = j;
    } else if (is_ascii_digit(c)) {
      std::size_t j = i;
      while (j < n && is_ascii_digit(static_cast<unsigned char>(text[j]))) ++j;
      push(std::string(text.substr(i, j - i)), TokenKind::number);
      i = j;
    } else if (is_ascii_punct(c)) {
      push(std::string(1, text[i]), TokenKind::punct);
      ++i;
    } else {
      // Non-ASCII bytes (UTF-8 continuation runs included) group together.
      std::size_t j = i;
      while (j < n) {
        const unsigned char d = static_cast<unsigned char>(text[j]);
        if (is_ascii_space(d) || is_ascii_alpha(d) || is_ascii_digit(d) ||
            is_ascii_punct(d)) {
          break;
        }
        ++j;
      }
      push(std::string(text.substr(i, j - i)), TokenKind::other);
      i = j;
    }
  }
  seps.push_back(std::move(pending_sep));
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::vector<std::string> seps;
  tokenize(text, tokens, seps);
  return tokens;
}

std::string detokenize(const std::vector<Token>& tokens,
                       const std::vector<std::string>& seps) {
  if (seps.size() != tokens.size() + 1) {
    throw std::invalid_argument("detokenize: seps must have tokens+1 entries");
  }
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    out += seps[i];
    out += tokens[i].surface;
  }
  out += seps.back();
  return out;
}

std::string canonical_sep(const Token* prev, const Token& next) {
  if (prev == nullptr) return "";
  if (prev->kind == TokenKind::space_run || next.kind == TokenKind::space_run) {
    return "";
  }
  if (next.kind == TokenKind::punct) {
    const char c = next.surface[0];
    // Opening brackets start a group; everything else attaches leftward.
    if (c != '(' && c != '[' && c != '{') return "";
  }
  if (prev->kind == TokenKind::punct) {
    const char c = prev->surface[0];
    if (c == '\'' || c == '(' || c == '[' || c == '{') return "";
  }
  return " ";
}

std::vector<std::string> canonical_seps(const std::vector<Token>& tokens) {
  std::vector<std::string> seps;
  seps.reserve(tokens.size() + 1);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    seps.push_back(canonical_sep(i == 0 ? nullptr : &tokens[i - 1], tokens[i]));
  }
  seps.emplace_back();
  return seps;
}

std::string detokenize_canonical(const std::vector<Token>& tokens) {
  return detokenize(tokens, canonical_seps(tokens));
}

Document make_document(std::string author_id, std::string domain_label,
                       std::string raw) {
  Document doc;
  doc.author_id = std::move(author_id);
  doc.domain_label = std::move(domain_label);
  doc.raw = std::move(raw);
  tokenize(doc.raw, doc.tokens, doc.seps);
  return doc;
}

Corpus load_jsonl(const std::string& path, std::size_t truncate_tokens) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus file: " + path);
  Corpus corpus;
  // Authors keep first-seen order; docs keep file order within an author.
  std::vector<std::string> order;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error("corpus line " + std::to_string(line_no) +
                               ": invalid JSON: " + e.what());
    }
    for (const char* key : {"author_id", "domain_label", "text"}) {
      if (!rec.contains(key) || !rec[key].is_string()) {
        throw std::runtime_error("corpus line " + std::to_string(line_no) +
                                 ": missing string field '" + key + "'");
      }
    }
    std::string text = rec["text"].get<std::string>();
    Document doc = make_document(rec["author_id"].get<std::string>(),
                                 rec["domain_label"].get<std::string>(),
                                 std::move(text));
    if (doc.tokens.empty()) {
      ++corpus.rejected_empty;
      continue;
    }
    if (truncate_tokens > 0 && doc.tokens.size() > truncate_tokens) {
      doc.tokens.resize(truncate_tokens);
      doc.seps.resize(truncate_tokens);
      doc.seps.emplace_back();
      doc.raw = detokenize(doc.tokens, doc.seps);
    }
    AuthorSample* sample = nullptr;
    for (auto& a : corpus.authors) {
      if (a.author_id == doc.author_id) {
        sample = &a;
        break;
      }
    }
    if (sample == nullptr) {
      corpus.authors.push_back(AuthorSample{doc.author_id, {}});
      sample = &corpus.authors.back();
    }
    sample->documents.push_back(std::move(doc));
  }
  return corpus;
}

void write_jsonl(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write corpus file: " + path);
  for (const auto& a : corpus.authors) {
    for (const auto& d : a.documents) {
      nlohmann::json rec;
      rec["author_id"] = d.author_id;
      rec["domain_label"] = d.domain_label;
      rec["text"] = d.raw;
      out << rec.dump() << "\n";
    }
  }
}

Transform transform_from_name(std::string_view name) {
  if (name == "identity") return Transform::identity;
  if (name == "nocaps") return Transform::nocaps;
  if (name == "nopunct") return Transform::nopunct;
  throw std::invalid_argument("unknown transform: " + std::string(name));
}

Document apply_transform(const Document& doc, Transform t) {
  if (t == Transform::identity) return doc;
  std::string out;
  out.reserve(doc.raw.size());
  if (t == Transform::nocaps) {
    for (char ch : doc.raw) {
      out.push_back(static_cast<char>(
          std::tolower(static_cast<unsigned char>(ch))));
    }
  } else {  // nopunct: drop punct chars, collapse the spacing they leave
    for (char ch : doc.raw) {
      if (is_ascii_punct(static_cast<unsigned char>(ch))) continue;
      out.push_back(ch);
    }
    // Collapse double spaces introduced by removals like "a , b".
    std::string collapsed;
    collapsed.reserve(out.size());
    for (char ch : out) {
      if (ch == ' ' && !collapsed.empty() && collapsed.back() == ' ') continue;
      collapsed.push_back(ch);
    }
    out = std::move(collapsed);
    // Trim spaces at the ends left by boundary punctuation.
    std::size_t b = 0, e = out.size();
    while (b < e && out[b] == ' ') ++b;
    while (e > b && out[e - 1] == ' ') --e;
    out = out.substr(b, e - b);
  }
  return make_document(doc.author_id, doc.domain_label, std::move(out));
}

AuthorSample apply_transform(const AuthorSample& sample, Transform t) {
  AuthorSample out{sample.author_id, {}};
  out.documents.reserve(sample.documents.size());
  for (const auto& d : sample.documents) {
    Document td = apply_transform(d, t);
    if (!td.tokens.empty()) out.documents.push_back(std::move(td));
  }
  return out;
}

Corpus apply_transform(const Corpus& corpus, Transform t) {
  Corpus out;
  out.rejected_empty = corpus.rejected_empty;
  out.authors.reserve(corpus.authors.size());
  for (const auto& a : corpus.authors) {
    out.authors.push_back(apply_transform(a, t));
  }
  return out;
}

std::pair<AuthorSample, AuthorSample> split_author(const AuthorSample& sample) {
  const std::size_t n = sample.documents.size();
  if (n < 2) {
    throw std::invalid_argument("split_author: need at least 2 documents");
  }
  const std::size_t half = (n + 1) / 2;
  AuthorSample a{sample.author_id, {}}, b{sample.author_id, {}};
  a.documents.assign(sample.documents.begin(),
                     sample.documents.begin() + static_cast<long>(half));
  b.documents.assign(sample.documents.begin() + static_cast<long>(half),
                     sample.documents.end());
  return {std::move(a), std::move(b)};
}

}  // namespace stylo
