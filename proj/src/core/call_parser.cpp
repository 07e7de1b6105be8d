// Copyright 2026 The augloop Authors
// SPDX-License-Identifier: Apache-2.0

// Call grammar (see docs/call-grammar.md):
//
//   call     = [ ident "=" ] ident "(" [ arg { "," arg } [ "," ] ] ")" [ ";" ]
//   arg      = [ ident "=" ] value
//   value    = ident | string | number
//   number   = [ "+" | "-" ] digits [ "." digits | "/" digits ]
//   string   = '"' { char } '"' | "'" { char } "'"

#include "call_parser.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>

namespace augloop {

std::vector<std::string> default_stop_set() {
  return {std::string(kCodeClose), std::string(kAnswerClose)};
}

std::optional<StopMatch> find_stop(std::string_view generated,
                                   const std::vector<std::string>& stop_set) {
  std::optional<StopMatch> best;
  for (std::size_t i = 0; i < stop_set.size(); ++i) {
    if (stop_set[i].empty()) continue;
    const std::size_t pos = generated.find(stop_set[i]);
    if (pos == std::string_view::npos) continue;
    if (!best || pos < best->position) best = StopMatch{i, pos, stop_set[i]};
  }
  return best;
}

OpVocabulary full_vocabulary() { return {std::begin(kAllOpKinds), std::end(kAllOpKinds)}; }

namespace {

enum class Tok { kIdent, kNumber, kString, kLParen, kRParen, kComma, kEquals, kSemicolon, kEnd };

struct Token {
  Tok kind = Tok::kEnd;
  std::string text;  // identifier, string contents, or number spelling
};

struct Number {
  bool negative = false;
  std::string whole;
  std::string frac;   // digits after '.', may be empty
  std::string denom;  // digits after '/', may be empty
  bool is_integer() const { return frac.empty() && denom.empty(); }
};

CallError syntax(std::string detail) {
  return {ErrorCode::kSyntaxMalformed, "error[SyntaxMalformed]: " + std::move(detail)};
}
CallError param(std::string detail) {
  return {ErrorCode::kParamInvalid, "error[ParamInvalid]: " + std::move(detail)};
}

bool is_ident_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}
bool is_ident_char(char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::variant<std::vector<Token>, CallError> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (is_space(c)) { ++i; continue; }
    if (is_ident_start(c)) {
      std::size_t j = i + 1;
      while (j < s.size() && is_ident_char(s[j])) ++j;
      out.push_back({Tok::kIdent, std::string(s.substr(i, j - i))});
      i = j;
      continue;
    }
    if (is_digit(c) || ((c == '-' || c == '+') && i + 1 < s.size() && is_digit(s[i + 1]))) {
      std::size_t j = i + 1;
      while (j < s.size() && is_digit(s[j])) ++j;
      if (j + 1 < s.size() && s[j] == '.' && is_digit(s[j + 1])) {
        ++j;
        while (j < s.size() && is_digit(s[j])) ++j;
      } else {
        // fraction, optionally spaced: 3 / 2
        std::size_t k = j;
        while (k < s.size() && is_space(s[k])) ++k;
        if (k < s.size() && s[k] == '/') {
          ++k;
          while (k < s.size() && is_space(s[k])) ++k;
          if (k >= s.size() || !is_digit(s[k])) return syntax("malformed fraction literal");
          while (k < s.size() && is_digit(s[k])) ++k;
          j = k;
        }
      }
      if (j < s.size() && (is_ident_start(s[j]) || s[j] == '.')) {
        return syntax("malformed number literal");
      }
      out.push_back({Tok::kNumber, std::string(s.substr(i, j - i))});
      i = j;
      continue;
    }
    if (c == '"' || c == '\'') {
      std::size_t j = i + 1;
      std::string text;
      bool closed = false;
      while (j < s.size()) {
        if (s[j] == '\\' && j + 1 < s.size()) {
          text.push_back(s[j + 1]);
          j += 2;
          continue;
        }
        if (s[j] == c) { closed = true; break; }
        if (s[j] == '\n') break;
        text.push_back(s[j]);
        ++j;
      }
      if (!closed) return syntax("unterminated string literal");
      out.push_back({Tok::kString, std::move(text)});
      i = j + 1;
      continue;
    }
    switch (c) {
      case '(': out.push_back({Tok::kLParen, "("}); break;
      case ')': out.push_back({Tok::kRParen, ")"}); break;
      case ',': out.push_back({Tok::kComma, ","}); break;
      case '=': out.push_back({Tok::kEquals, "="}); break;
      case ';': out.push_back({Tok::kSemicolon, ";"}); break;
      default: {
        const auto byte = static_cast<unsigned char>(c);
        std::string shown = (byte >= 0x20 && byte < 0x7f) ? std::string(1, c) : "\\x" + std::string(1, "0123456789abcdef"[byte >> 4]) + std::string(1, "0123456789abcdef"[byte & 15]);
        return syntax("unexpected character '" + shown + "'");
      }
    }
    ++i;
  }
  out.push_back({Tok::kEnd, {}});
  return out;
}

Number split_number(const std::string& spelling) {
  Number n;
  std::size_t i = 0;
  if (spelling[0] == '-' || spelling[0] == '+') {
    n.negative = spelling[0] == '-';
    i = 1;
  }
  std::string cur;
  std::string* dst = &n.whole;
  for (; i < spelling.size(); ++i) {
    const char c = spelling[i];
    if (c == '.') { dst = &n.frac; continue; }
    if (c == '/') { dst = &n.denom; continue; }
    if (is_space(c)) continue;
    dst->push_back(c);
  }
  return n;
}

struct Arg {
  std::optional<std::string> keyword;
  Token value;
};

struct RawCall {
  std::optional<std::string> target;
  std::string name;
  std::vector<Arg> args;
};

std::variant<RawCall, CallError> parse_structure(const std::vector<Token>& t) {
  RawCall call;
  std::size_t i = 0;
  if (t[i].kind != Tok::kIdent) return syntax("expected a function call");
  if (t[i + 1].kind == Tok::kEquals) {
    call.target = t[i].text;
    i += 2;
    if (t[i].kind != Tok::kIdent) return syntax("expected a function name after '='");
  }
  call.name = t[i].text;
  ++i;
  if (t[i].kind != Tok::kLParen) return syntax("expected '(' after '" + call.name + "'");
  ++i;
  while (t[i].kind != Tok::kRParen) {
    if (t[i].kind == Tok::kEnd) return syntax("unbalanced parentheses");
    Arg arg;
    if (t[i].kind == Tok::kIdent && t[i + 1].kind == Tok::kEquals) {
      arg.keyword = t[i].text;
      i += 2;
    }
    const Tok k = t[i].kind;
    if (k == Tok::kLParen) return syntax("nested expressions are not supported");
    if (k != Tok::kIdent && k != Tok::kNumber && k != Tok::kString) {
      if (k == Tok::kEnd) return syntax("unbalanced parentheses");
      return syntax("expected an argument value");
    }
    arg.value = t[i];
    call.args.push_back(std::move(arg));
    ++i;
    if (t[i].kind == Tok::kComma) {
      ++i;
      continue;
    }
    if (t[i].kind == Tok::kLParen) return syntax("nested expressions are not supported");
    if (t[i].kind != Tok::kRParen) {
      if (t[i].kind == Tok::kEnd) return syntax("unbalanced parentheses");
      return syntax("expected ',' or ')' between arguments");
    }
  }
  ++i;
  if (t[i].kind == Tok::kSemicolon) ++i;
  if (t[i].kind != Tok::kEnd) return syntax("exactly one call per code block is allowed");
  return call;
}

std::string vocabulary_list(const OpVocabulary& vocabulary) {
  std::string out;
  auto add = [&](std::string_view name) {
    if (!out.empty()) out += ", ";
    out += name;
  };
  for (OpKind k : kAllOpKinds) {
    if (!vocabulary.count(k)) continue;
    if (k == OpKind::kResizeUp && vocabulary.count(OpKind::kResizeDown)) add("resize");
    add(op_kind_name(k));
  }
  return out;
}

struct Signature {
  std::vector<std::string> names;  // parameter order
  std::vector<std::optional<Token>> defaults;
};

Signature signature_for(const std::string& name) {
  auto req = std::optional<Token>{};
  if (name == "crop") return {{"x0", "y0", "x1", "y1"}, {req, req, req, req}};
  if (name == "resize" || name == "resize_up" || name == "resize_down") return {{"factor"}, {req}};
  if (name == "rotate") return {{"degrees"}, {req}};
  if (name == "flip") return {{"axis"}, {Token{Tok::kString, "horizontal"}}};
  if (name == "denoise") {
    return {{"method", "kernel_size"}, {Token{Tok::kString, "median"}, Token{Tok::kNumber, "3"}}};
  }
  return {{}, {}};
}

std::string canonical_keyword(const std::string& op, const std::string& kw) {
  if (op == "rotate" && kw == "angle") return "degrees";
  if ((op == "resize" || op == "resize_up" || op == "resize_down") && kw == "scale") return "factor";
  return kw;
}

std::optional<std::int64_t> parse_digits(const std::string& digits) {
  if (digits.empty() || digits.size() > 18) return std::nullopt;
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (ec != std::errc() || p != digits.data() + digits.size()) return std::nullopt;
  return v;
}

std::variant<std::int64_t, CallError> as_int(const std::string& op, const std::string& pname,
                                             const Token& tok) {
  if (tok.kind != Tok::kNumber) return param(op + ": parameter '" + pname + "' must be an integer");
  const Number n = split_number(tok.text);
  if (!n.is_integer()) return param(op + ": parameter '" + pname + "' must be an integer");
  const auto v = parse_digits(n.whole);
  if (!v) return param(op + ": parameter '" + pname + "' is out of range");
  return n.negative ? -*v : *v;
}

std::variant<Rational, CallError> as_factor(const std::string& op, const Token& tok) {
  if (tok.kind != Tok::kNumber) return param(op + ": parameter 'factor' must be a number");
  const Number n = split_number(tok.text);
  auto out_of_range = [&] { return param(op + ": parameter 'factor' is out of range"); };
  std::int64_t num = 0, den = 1;
  if (!n.denom.empty()) {
    auto a = parse_digits(n.whole), b = parse_digits(n.denom);
    if (!a || !b) return out_of_range();
    num = *a;
    den = *b;
  } else if (!n.frac.empty()) {
    std::string frac = n.frac;
    while (frac.size() > 1 && frac.back() == '0') frac.pop_back();
    if (n.whole.size() + frac.size() > 18) return out_of_range();
    auto a = parse_digits(n.whole + frac);
    if (!a) return out_of_range();
    num = *a;
    den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) den *= 10;
  } else {
    auto a = parse_digits(n.whole);
    if (!a) return out_of_range();
    num = *a;
  }
  if (n.negative || num <= 0 || den <= 0) return param(op + ": parameter 'factor' must be positive");
  return Rational(num, den);
}

std::variant<AugmentationOp, CallError> bind(const RawCall& call, const OpVocabulary& vocabulary) {
  static const std::set<std::string> kKnown = {"crop", "resize", "resize_up", "resize_down",
                                               "rotate", "flip", "denoise", "edge"};
  const std::string& name = call.name;
  auto unknown = [&](const std::string& shown) {
    return CallError{ErrorCode::kUnknownOperation,
                     "error[UnknownOperation]: unknown operation '" + shown +
                         "'; available operations: " + vocabulary_list(vocabulary)};
  };
  if (!kKnown.count(name)) return unknown(name);

  const Signature sig = signature_for(name);
  std::vector<std::optional<Token>> slots(sig.names.size());
  std::size_t positional = 0;
  bool seen_keyword = false;
  for (std::size_t ai = 0; ai < call.args.size(); ++ai) {
    const Arg& arg = call.args[ai];
    if (!arg.keyword) {
      if (seen_keyword) return param(name + ": positional argument after keyword argument");
      if (ai == 0 && arg.value.kind == Tok::kIdent) continue;  // image reference
      if (arg.value.kind == Tok::kIdent) {
        return param(name + ": unexpected identifier '" + arg.value.text + "'");
      }
      if (positional >= slots.size()) return param(name + ": too many arguments");
      slots[positional++] = arg.value;
      continue;
    }
    seen_keyword = true;
    const std::string kw = canonical_keyword(name, *arg.keyword);
    if (kw == "image" || kw == "image_path") {
      if (ai != 0) return param(name + ": image must be the first argument");
      continue;
    }
    auto it = std::find(sig.names.begin(), sig.names.end(), kw);
    if (it == sig.names.end()) return param(name + ": unknown keyword '" + *arg.keyword + "'");
    auto& slot = slots[static_cast<std::size_t>(it - sig.names.begin())];
    if (slot) return param(name + ": duplicate argument '" + kw + "'");
    if (arg.value.kind == Tok::kIdent) {
      return param(name + ": parameter '" + kw + "' must be a literal");
    }
    slot = arg.value;
  }
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (!slots[i]) {
      if (!sig.defaults[i]) return param(name + ": missing required argument '" + sig.names[i] + "'");
      slots[i] = sig.defaults[i];
    }
  }

  std::optional<AugmentationOp> op;
  if (name == "crop") {
    std::int64_t c[4];
    for (int i = 0; i < 4; ++i) {
      auto v = as_int(name, sig.names[static_cast<std::size_t>(i)], *slots[static_cast<std::size_t>(i)]);
      if (auto* e = std::get_if<CallError>(&v)) return *e;
      c[i] = std::get<std::int64_t>(v);
    }
    op = AugmentationOp::crop(c[0], c[1], c[2], c[3]);
  } else if (name == "resize" || name == "resize_up" || name == "resize_down") {
    auto f = as_factor(name, *slots[0]);
    if (auto* e = std::get_if<CallError>(&f)) return *e;
    const Rational factor = std::get<Rational>(f);
    const Rational one(1, 1);
    if (name == "resize_up" && factor < one) return param("resize_up: factor must be >= 1");
    if (name == "resize_down" && one < factor) return param("resize_down: factor must be <= 1");
    const bool down = name == "resize_down" || (name == "resize" && factor < one);
    op = down ? AugmentationOp::resize_down(factor) : AugmentationOp::resize_up(factor);
  } else if (name == "rotate") {
    auto v = as_int(name, "degrees", *slots[0]);
    if (auto* e = std::get_if<CallError>(&v)) return *e;
    const std::int64_t deg = std::get<std::int64_t>(v);
    if (deg != 90 && deg != 180 && deg != 270) {
      return param("rotate: degrees must be one of 90, 180, 270");
    }
    op = AugmentationOp::rotate(static_cast<int>(deg));
  } else if (name == "flip") {
    const Token& t = *slots[0];
    if (t.kind != Tok::kString || (t.text != "horizontal" && t.text != "vertical")) {
      return param("flip: axis must be \"horizontal\" or \"vertical\"");
    }
    op = AugmentationOp::flip(t.text == "horizontal" ? FlipAxis::kHorizontal : FlipAxis::kVertical);
  } else if (name == "denoise") {
    const Token& m = *slots[0];
    DenoiseMethod method;
    if (m.kind == Tok::kString && m.text == "gaussian") method = DenoiseMethod::kGaussian;
    else if (m.kind == Tok::kString && m.text == "median") method = DenoiseMethod::kMedian;
    else if (m.kind == Tok::kString && m.text == "bilateral") method = DenoiseMethod::kBilateral;
    else return param("denoise: method must be \"gaussian\", \"median\" or \"bilateral\"");
    auto v = as_int(name, "kernel_size", *slots[1]);
    if (auto* e = std::get_if<CallError>(&v)) return *e;
    const std::int64_t k = std::get<std::int64_t>(v);
    if (k < 3 || k % 2 == 0) return param("denoise: kernel_size must be an odd integer >= 3");
    if (k > 999) return param("denoise: kernel_size is out of range");
    op = AugmentationOp::denoise(method, static_cast<int>(k));
  } else {
    op = AugmentationOp::edge();
  }
  if (!vocabulary.count(op->kind)) return unknown(std::string(op_kind_name(op->kind)));
  return *op;
}

}  // namespace

CallResult extract_call(std::string_view span, const OpVocabulary& vocabulary) {
  auto tokens = tokenize(span);
  if (auto* e = std::get_if<CallError>(&tokens)) return *e;
  auto raw = parse_structure(std::get<std::vector<Token>>(tokens));
  if (auto* e = std::get_if<CallError>(&raw)) return *e;
  const RawCall& call = std::get<RawCall>(raw);
  auto bound = bind(call, vocabulary);
  if (auto* e = std::get_if<CallError>(&bound)) return *e;

  ParsedCall parsed;
  parsed.op = std::get<AugmentationOp>(bound);
  parsed.raw_text = std::string(span);
  parsed.assignment_target = call.target;
  if (!call.args.empty() && !call.args[0].keyword && call.args[0].value.kind == Tok::kIdent) {
    parsed.image_ref = call.args[0].value.text;
  } else if (!call.args.empty() && call.args[0].keyword) {
    const auto& kw = *call.args[0].keyword;
    if (kw == "image" || kw == "image_path") parsed.image_ref = call.args[0].value.text;
  }
  return parsed;
}

TagScan scan_tags(std::string_view text) {
  TagScan scan;
  if (const auto open = text.find(kThinkOpen); open != std::string_view::npos) {
    scan.has_think = text.find(kThinkClose, open + kThinkOpen.size()) != std::string_view::npos;
  }
  if (const auto open = text.find(kAnswerOpen); open != std::string_view::npos) {
    const auto body = open + kAnswerOpen.size();
    const auto close = text.find(kAnswerClose, body);
    if (close != std::string_view::npos) {
      scan.has_answer = true;
      scan.answer_text = std::string(text.substr(body, close - body));
    }
  }
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto code = text.find(kCodeOpen, pos);
    const auto output = text.find(kOutputOpen, pos);
    if (code == std::string_view::npos && output == std::string_view::npos) break;
    const bool is_code = code < output;
    const std::size_t open = is_code ? code : output;
    const std::string_view open_tag = is_code ? kCodeOpen : kOutputOpen;
    const std::string_view close_tag = is_code ? kCodeClose : kOutputClose;
    const auto close = text.find(close_tag, open + open_tag.size());
    if (close == std::string_view::npos) break;
    const Span span{open, close + close_tag.size()};
    (is_code ? scan.code_spans : scan.output_spans).push_back(span);
    pos = span.second;
  }
  return scan;
}

std::string_view block_inner(std::string_view text, Span span, std::string_view open,
                             std::string_view close) {
  const std::size_t b = span.first + open.size();
  const std::size_t e = span.second - close.size();
  if (e < b || span.second > text.size()) return {};
  return text.substr(b, e - b);
}

}  // namespace augloop
