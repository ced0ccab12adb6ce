#pragma once

/// @file metrics.hpp
/// @brief Static metrics for Java sources: a lightweight tokenizer, keyword
/// counts, Halstead measures, structural approximations, and feature CSV
/// ingestion/merging for externally computed metric sets.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tunegain/error.hpp"
#include "tunegain/text.hpp"

namespace tunegain {

enum class TokenKind { keyword, identifier, literal, op, separator };

struct Token {
  TokenKind kind;
  std::string text;  // literal tokens of string/char type hold a placeholder, not the body
  int line;
};

struct TokenizedSource {
  std::vector<Token> tokens;
};

/// 50 reserved words plus the boolean literals.
inline const std::vector<std::string>& default_java_keywords() {
  static const std::vector<std::string> kw = {
      "abstract", "assert",     "boolean",   "break",     "byte",      "case",      "catch",        "char",
      "class",    "const",      "continue",  "default",   "do",        "double",    "else",         "enum",
      "extends",  "final",      "finally",   "float",     "for",       "goto",      "if",           "implements",
      "import",   "instanceof", "int",       "interface", "long",      "native",    "new",          "package",
      "private",  "protected",  "public",    "return",    "short",     "static",    "strictfp",     "super",
      "switch",   "synchronized", "this",    "throw",     "throws",    "transient", "try",          "void",
      "volatile", "while",      "true",      "false"};
  return kw;
}

/// Reads a keyword list: one word per line, '#' starts a comment.
inline std::vector<std::string> parse_keyword_list(std::string_view content) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& raw : text::lines(content)) {
    std::string_view l = raw;
    if (auto h = l.find('#'); h != std::string_view::npos) l = l.substr(0, h);
    l = text::trim(l);
    if (l.empty()) continue;
    if (!seen.insert(std::string(l)).second) throw Error("duplicate keyword '" + std::string(l) + "'");
    out.emplace_back(l);
  }
  if (out.empty()) throw Error("keyword list is empty");
  return out;
}

namespace detail {

inline bool ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' ||
         static_cast<unsigned char>(c) >= 0x80;
}
inline bool ident_part(char c) { return ident_start(c) || (c >= '0' && c <= '9'); }
inline bool digit(char c) { return c >= '0' && c <= '9'; }

// Longest first.
inline constexpr std::array<std::string_view, 38> kOperators = {
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=",
    "<=",   ">=",  "+=",  "-=",  "*=",  "/=", "&=", "|=", "^=", "%=", "<<", ">>", "=",
    ">",    "<",   "!",   "~",   "?",   ":",  "+",  "-",  "*",  "/",  "&",  "|"};
inline constexpr std::array<std::string_view, 3> kMoreOperators = {"^", "%", "@"};
inline constexpr std::string_view kSeparators = "(){}[];,.";

}  // namespace detail

/// Splits Java-like source into labeled tokens. Comments vanish; string,
/// text-block and char literals collapse to one literal token each.
inline TokenizedSource tokenize_java(std::string_view src,
                                     const std::vector<std::string>& keywords = default_java_keywords()) {
  std::set<std::string_view> kw(keywords.begin(), keywords.end());
  TokenizedSource out;
  std::size_t i = 0;
  int line = 1;
  const std::size_t n = src.size();
  auto at = [&](std::size_t k) { return k < n ? src[k] : '\0'; };

  while (i < n) {
    char c = src[i];
    if (c == '\n') {
      ++line;
      ++i;
      continue;
    }
    if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
      ++i;
      continue;
    }
    if (c == '/' && at(i + 1) == '/') {
      while (i < n && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && at(i + 1) == '*') {
      int start = line;
      i += 2;
      while (i < n && !(src[i] == '*' && at(i + 1) == '/')) {
        if (src[i] == '\n') ++line;
        ++i;
      }
      if (i >= n) throw Error("unterminated block comment starting at line " + std::to_string(start));
      i += 2;
      continue;
    }
    if (c == '"' && at(i + 1) == '"' && at(i + 2) == '"') {
      int start = line;
      i += 3;
      while (i < n && !(src[i] == '"' && at(i + 1) == '"' && at(i + 2) == '"')) {
        if (src[i] == '\\') ++i;
        else if (src[i] == '\n') ++line;
        ++i;
      }
      if (i >= n) throw Error("unterminated text block starting at line " + std::to_string(start));
      i += 3;
      out.tokens.push_back({TokenKind::literal, "\"\"\"", start});
      continue;
    }
    if (c == '"' || c == '\'') {
      char q = c;
      int start = line;
      ++i;
      while (i < n && src[i] != q) {
        if (src[i] == '\n') throw Error("unterminated literal at line " + std::to_string(start));
        if (src[i] == '\\') ++i;
        ++i;
      }
      if (i >= n) throw Error("unterminated literal at line " + std::to_string(start));
      ++i;
      out.tokens.push_back({TokenKind::literal, q == '"' ? "\"\"" : "''", start});
      continue;
    }
    if (detail::digit(c) || (c == '.' && detail::digit(at(i + 1)))) {
      std::size_t s = i;
      if (c == '0' && (at(i + 1) == 'x' || at(i + 1) == 'X' || at(i + 1) == 'b' || at(i + 1) == 'B')) {
        i += 2;
        while (i < n && (std::isxdigit(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
      } else {
        while (i < n && (detail::digit(src[i]) || src[i] == '_' || src[i] == '.')) ++i;
        if (i < n && (src[i] == 'e' || src[i] == 'E')) {
          ++i;
          if (i < n && (src[i] == '+' || src[i] == '-')) ++i;
          while (i < n && detail::digit(src[i])) ++i;
        }
      }
      while (i < n && std::string_view("lLfFdD").find(src[i]) != std::string_view::npos) ++i;
      out.tokens.push_back({TokenKind::literal, std::string(src.substr(s, i - s)), line});
      continue;
    }
    if (detail::ident_start(c)) {
      std::size_t s = i;
      while (i < n && detail::ident_part(src[i])) ++i;
      std::string word(src.substr(s, i - s));
      TokenKind kind = kw.count(word) ? TokenKind::keyword
                       : word == "null" ? TokenKind::literal
                                        : TokenKind::identifier;
      out.tokens.push_back({kind, std::move(word), line});
      continue;
    }
    bool matched = false;
    for (auto op : detail::kOperators) {
      if (src.substr(i, op.size()) == op) {
        // "..." is the varargs separator.
        out.tokens.push_back({op == "..." ? TokenKind::separator : TokenKind::op, std::string(op), line});
        i += op.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;
    for (auto op : detail::kMoreOperators) {
      if (src.substr(i, 1) == op) {
        out.tokens.push_back({TokenKind::op, std::string(op), line});
        ++i;
        matched = true;
        break;
      }
    }
    if (matched) continue;
    if (detail::kSeparators.find(c) != std::string_view::npos) {
      out.tokens.push_back({TokenKind::separator, std::string(1, c), line});
      ++i;
      continue;
    }
    // Anything else (stray backslash, control characters) is skipped.
    ++i;
  }
  return out;
}

/// Occurrences of each keyword, in keyword-list order.
inline std::vector<std::pair<std::string, double>> keyword_counts(
    const TokenizedSource& src, const std::vector<std::string>& keywords = default_java_keywords()) {
  std::map<std::string_view, double> counts;
  for (const auto& t : src.tokens)
    if (t.kind == TokenKind::keyword) counts[t.text] += 1.0;
  std::vector<std::pair<std::string, double>> out;
  out.reserve(keywords.size());
  for (const auto& k : keywords) {
    auto it = counts.find(k);
    out.emplace_back(k, it == counts.end() ? 0.0 : it->second);
  }
  return out;
}

struct HalsteadMetrics {
  std::size_t distinct_operators = 0;  // n1
  std::size_t distinct_operands = 0;   // n2
  std::size_t total_operators = 0;     // N1
  std::size_t total_operands = 0;      // N2
  double vocabulary = 0, length = 0, volume = 0, difficulty = 0, effort = 0, time = 0;
  bool degenerate = false;
};

/// Operators are keywords, operator and separator tokens; operands are
/// identifiers and literals.
inline HalsteadMetrics halstead(const TokenizedSource& src) {
  std::set<std::string> ops, opnds;
  HalsteadMetrics h;
  for (const auto& t : src.tokens) {
    if (t.kind == TokenKind::identifier || t.kind == TokenKind::literal) {
      opnds.insert(t.text);
      ++h.total_operands;
    } else {
      ops.insert(t.text);
      ++h.total_operators;
    }
  }
  h.distinct_operators = ops.size();
  h.distinct_operands = opnds.size();
  const double n1 = static_cast<double>(h.distinct_operators);
  const double n2 = static_cast<double>(h.distinct_operands);
  const double N2 = static_cast<double>(h.total_operands);
  h.vocabulary = n1 + n2;
  h.length = static_cast<double>(h.total_operators + h.total_operands);
  if (h.vocabulary == 0) {
    h.length = 0;
    h.degenerate = true;
    return h;
  }
  h.volume = h.length * std::log2(h.vocabulary);
  if (h.distinct_operands == 0) {
    h.degenerate = true;
    return h;
  }
  h.difficulty = (n1 / 2.0) * (N2 / n2);
  h.effort = h.difficulty * h.volume;
  h.time = h.effort / 18.0;
  return h;
}

struct StructuralMetrics {
  double loc = 0;
  double wmc_approx = 0;
  double method_count = 0;
  double max_nesting = 0;
  bool unbalanced = false;
};

inline StructuralMetrics structural_metrics(std::string_view /*source_text*/, const TokenizedSource& src) {
  StructuralMetrics m;
  std::set<int> lines;
  for (const auto& t : src.tokens) lines.insert(t.line);
  m.loc = static_cast<double>(lines.size());

  const auto& tk = src.tokens;
  static const std::set<std::string> branch_tokens = {"if", "for", "while", "case", "catch", "&&", "||", "?"};
  double branches = 0;
  for (const auto& t : tk)
    if ((t.kind == TokenKind::keyword || t.kind == TokenKind::op) && branch_tokens.count(t.text)) branches += 1;

  int depth = 0, max_depth = 0;
  std::vector<std::size_t> paren_stack;
  std::size_t last_close_open = std::string::npos;  // index of '(' matching the latest ')'
  std::size_t last_close = std::string::npos;
  double methods = 0;
  for (std::size_t i = 0; i < tk.size(); ++i) {
    const auto& t = tk[i];
    if (t.kind != TokenKind::separator) continue;
    if (t.text == "(") {
      paren_stack.push_back(i);
    } else if (t.text == ")") {
      if (!paren_stack.empty()) {
        last_close_open = paren_stack.back();
        paren_stack.pop_back();
        last_close = i;
      } else {
        m.unbalanced = true;
      }
    } else if (t.text == "{") {
      // `name(...) {` or `name(...) throws A, B {` at class-body depth or above.
      if (depth <= 1 && last_close != std::string::npos && last_close_open > 0) {
        bool header = true;
        std::size_t k = last_close + 1;
        if (k < i && tk[k].kind == TokenKind::keyword && tk[k].text == "throws") {
          for (++k; k < i; ++k)
            if (tk[k].kind != TokenKind::identifier && tk[k].text != "," && tk[k].text != ".") header = false;
        } else if (k != i) {
          header = false;
        }
        const auto& name = tk[last_close_open - 1];
        bool after_new = last_close_open >= 2 && tk[last_close_open - 2].text == "new";
        if (header && name.kind == TokenKind::identifier && !after_new) methods += 1;
      }
      ++depth;
      max_depth = std::max(max_depth, depth);
    } else if (t.text == "}") {
      if (depth == 0) m.unbalanced = true;
      else --depth;
    }
  }
  if (depth != 0 || !paren_stack.empty()) m.unbalanced = true;
  m.method_count = methods;
  m.wmc_approx = branches + methods;
  m.max_nesting = max_depth;
  return m;
}

struct FeatureVector {
  std::string class_id;
  std::vector<std::pair<std::string, double>> features;  // ordered, names unique
};

/// A set of vectors sharing one feature schema.
struct FeatureTable {
  std::vector<std::string> names;
  std::vector<FeatureVector> rows;

  const FeatureVector* find(const std::string& class_id) const {
    for (const auto& r : rows)
      if (r.class_id == class_id) return &r;
    return nullptr;
  }
};

/// The native feature vector for one source file: keyword counts,
/// Halstead measures and structural approximations.
inline FeatureVector native_features(std::string class_id, std::string_view source,
                                     const std::vector<std::string>& keywords = default_java_keywords()) {
  auto tokens = tokenize_java(source, keywords);
  FeatureVector v;
  v.class_id = std::move(class_id);
  for (auto& [k, c] : keyword_counts(tokens, keywords)) v.features.emplace_back("kw_" + k, c);
  auto h = halstead(tokens);
  v.features.emplace_back("halstead_vocabulary", h.vocabulary);
  v.features.emplace_back("halstead_length", h.length);
  v.features.emplace_back("halstead_volume", h.volume);
  v.features.emplace_back("halstead_difficulty", h.difficulty);
  v.features.emplace_back("halstead_effort", h.effort);
  v.features.emplace_back("halstead_time", h.time);
  auto s = structural_metrics(source, tokens);
  v.features.emplace_back("loc", s.loc);
  v.features.emplace_back("wmc_approx", s.wmc_approx);
  v.features.emplace_back("method_count", s.method_count);
  v.features.emplace_back("max_nesting", s.max_nesting);
  return v;
}

/// Dotted class id from a path relative to the source root.
inline std::string class_id_from_path(const std::filesystem::path& root, const std::filesystem::path& file) {
  auto rel = std::filesystem::relative(file, root);
  rel.replace_extension();
  std::string out;
  for (const auto& part : rel) {
    if (!out.empty()) out += '.';
    out += part.string();
  }
  return out;
}

/// Extracts native features from every `.java` file under root, sorted by class id.
inline FeatureTable extract_directory(const std::filesystem::path& root,
                                      const std::vector<std::string>& keywords = default_java_keywords()) {
  if (!std::filesystem::is_directory(root)) throw Error("not a directory: '" + root.string() + "'");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file() && e.path().extension() == ".java") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  FeatureTable t;
  for (const auto& f : files) {
    try {
      t.rows.push_back(native_features(class_id_from_path(root, f), text::read_file(f.string()), keywords));
    } catch (const Error& e) {
      throw Error(f.string() + ": " + e.what());
    }
  }
  std::sort(t.rows.begin(), t.rows.end(), [](const auto& a, const auto& b) { return a.class_id < b.class_id; });
  if (!t.rows.empty())
    for (const auto& [name, v] : t.rows.front().features) t.names.push_back(name);
  return t;
}

inline FeatureTable parse_features_csv(std::string_view content) {
  auto rows = text::lines(content);
  if (rows.empty()) throw Error("features: empty file");
  auto header = text::split(rows[0]);
  if (header.empty() || header[0] != "class_id") throw Error("features: header must start with class_id");
  FeatureTable t;
  t.names.assign(header.begin() + 1, header.end());
  std::set<std::string> names(t.names.begin(), t.names.end());
  if (names.size() != t.names.size()) throw Error("features: duplicate feature name in header");
  std::set<std::string> ids;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].empty()) continue;
    auto cells = text::split(rows[i]);
    if (cells.size() != header.size())
      throw Error("features: line " + std::to_string(i + 1) + ": expected " + std::to_string(header.size()) +
                  " fields, got " + std::to_string(cells.size()));
    FeatureVector v;
    v.class_id = cells[0];
    if (!ids.insert(v.class_id).second) throw Error("features: duplicate class_id '" + v.class_id + "'");
    for (std::size_t k = 1; k < cells.size(); ++k) {
      double x;
      if (!text::parse_double(cells[k], x) || !std::isfinite(x))
        throw Error("features: line " + std::to_string(i + 1) + ": non-numeric value '" + cells[k] + "' for " +
                    t.names[k - 1]);
      v.features.emplace_back(t.names[k - 1], x);
    }
    t.rows.push_back(std::move(v));
  }
  return t;
}

inline FeatureTable load_features_csv(const std::string& path) { return parse_features_csv(text::read_file(path)); }

inline std::string features_to_csv(const FeatureTable& t) {
  std::string out = "class_id";
  for (const auto& n : t.names) out += ',' + n;
  out += '\n';
  for (const auto& r : t.rows) {
    out += r.class_id;
    for (const auto& [n, v] : r.features) out += ',' + text::num(v);
    out += '\n';
  }
  return out;
}

/// Joins two tables on class_id (inner join, rows sorted by class id).
/// On a feature-name collision the external value replaces the native one.
inline FeatureTable merge_features(const FeatureTable& native, const FeatureTable& external) {
  FeatureTable out;
  std::set<std::string> ext_names(external.names.begin(), external.names.end());
  for (const auto& n : native.names)
    if (!ext_names.count(n)) out.names.push_back(n);
  for (const auto& n : external.names) out.names.push_back(n);
  std::map<std::string, const FeatureVector*> ext;
  for (const auto& r : external.rows) ext[r.class_id] = &r;
  for (const auto& r : native.rows) {
    auto it = ext.find(r.class_id);
    if (it == ext.end()) continue;
    FeatureVector v;
    v.class_id = r.class_id;
    for (const auto& f : r.features)
      if (!ext_names.count(f.first)) v.features.push_back(f);
    for (const auto& f : it->second->features) v.features.push_back(f);
    out.rows.push_back(std::move(v));
  }
  std::sort(out.rows.begin(), out.rows.end(), [](const auto& a, const auto& b) { return a.class_id < b.class_id; });
  return out;
}

}  // namespace tunegain
