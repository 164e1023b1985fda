#include <array>
#include <cctype>
#include <unordered_set>

#include "safe/frontend.hpp"

namespace safe::frontend {

namespace {

const std::unordered_set<std::string>& keyword_set() {
  static const std::unordered_set<std::string> kw = {
      "auto",     "break",  "case",    "char",   "const",    "continue",
      "default",  "do",     "double",  "else",   "enum",     "extern",
      "float",    "for",    "goto",    "if",     "inline",   "int",
      "long",     "register", "restrict", "return", "short",  "signed",
      "sizeof",   "static", "struct",  "switch", "typedef",  "union",
      "unsigned", "void",   "volatile", "while"};
  return kw;
}

// Longest-match operator table, longest first.
const std::array<const char*, 33>& operator_table() {
  static const std::array<const char*, 33> ops = {
      "<<=", ">>=", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
      "&&",  "||",  "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "+",
      "-",   "*",   "/",  "%",  "<",  ">",  "=",  "!",  "&",  "|",  "^"};
  return ops;
}

bool is_punct_char(char c) {
  switch (c) {
    case '(': case ')': case '{': case '}': case '[': case ']':
    case ';': case ',': case '.':
      return true;
    default:
      return false;
  }
}

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

}  // namespace

bool is_keyword(const std::string& word) { return keyword_set().count(word) > 0; }

std::vector<LexToken> lex(const std::string& source) {
  std::vector<LexToken> out;
  const std::size_t n = source.size();
  std::size_t i = 0;
  int line = 1, col = 1;

  auto advance = [&](std::size_t count) {
    for (std::size_t k = 0; k < count && i < n; ++k, ++i) {
      if (source[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto emit = [&](std::size_t len, TokenKind kind, int tline, int tcol) {
    out.push_back({source.substr(i, len), kind, tline, tcol});
    advance(len);
  };

  while (i < n) {
    const char c = source[i];
    const int tline = line, tcol = col;

    if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < n && source[i + 1] == '/') {
      while (i < n && source[i] != '\n') advance(1);
      continue;
    }
    if (c == '/' && i + 1 < n && source[i + 1] == '*') {
      advance(2);
      while (i < n && !(source[i] == '*' && i + 1 < n && source[i + 1] == '/')) advance(1);
      advance(2);  // clamps at end of input when unterminated
      continue;
    }
    if (is_ident_start(c)) {
      std::size_t len = 1;
      while (i + len < n && is_ident_char(source[i + len])) ++len;
      const std::string word = source.substr(i, len);
      emit(len, is_keyword(word) ? TokenKind::Keyword : TokenKind::Identifier, tline, tcol);
      continue;
    }
    if (is_digit(c) || (c == '.' && i + 1 < n && is_digit(source[i + 1]))) {
      // pp-number style: digits, dots, letters, with sign after an exponent.
      std::size_t len = 1;
      while (i + len < n) {
        const char d = source[i + len];
        if (is_ident_char(d) || d == '.') {
          ++len;
        } else if ((d == '+' || d == '-') &&
                   (source[i + len - 1] == 'e' || source[i + len - 1] == 'E' ||
                    source[i + len - 1] == 'p' || source[i + len - 1] == 'P')) {
          ++len;
        } else {
          break;
        }
      }
      emit(len, TokenKind::Number, tline, tcol);
      continue;
    }
    if (c == '"' || c == '\'') {
      // Unterminated literals run to end of line (total lexing).
      std::size_t len = 1;
      bool closed = false;
      while (i + len < n) {
        const char d = source[i + len];
        if (d == '\\' && i + len + 1 < n) {
          len += 2;
          continue;
        }
        if (d == c) {
          ++len;
          closed = true;
          break;
        }
        if (d == '\n') break;
        ++len;
      }
      (void)closed;
      emit(len, c == '"' ? TokenKind::StringLiteral : TokenKind::CharLiteral, tline, tcol);
      continue;
    }
    if (is_punct_char(c)) {
      emit(1, TokenKind::Punctuation, tline, tcol);
      continue;
    }
    bool matched = false;
    for (const char* op : operator_table()) {
      const std::size_t len = std::char_traits<char>::length(op);
      if (source.compare(i, len, op) == 0) {
        emit(len, TokenKind::Operator, tline, tcol);
        matched = true;
        break;
      }
    }
    if (matched) continue;
    // Unknown byte: single-character operator token.
    emit(1, TokenKind::Operator, tline, tcol);
  }
  return out;
}

}  // namespace safe::frontend
