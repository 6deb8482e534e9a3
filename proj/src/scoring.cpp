#include "sicl/scoring.hpp"

#include <algorithm>

#include "sicl/error.hpp"

namespace sicl {
namespace {

bool is_space(char32_t c) { return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\f' || c == U'\v'; }
bool is_ascii_alnum(char32_t c) {
  return (c >= U'0' && c <= U'9') || (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
}

std::u32string drop_punctuation(std::u32string_view s) {
  std::u32string out;
  out.reserve(s.size());
  for (char32_t c : s)
    if (!is_punctuation(c)) out.push_back(c);
  return out;
}

// A whitespace run survives as one space only between two ASCII letters/digits.
std::u32string normalize_spaces(std::u32string_view s) {
  std::u32string out;
  out.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    if (!is_space(s[i])) {
      out.push_back(s[i++]);
      continue;
    }
    size_t j = i;
    while (j < s.size() && is_space(s[j])) ++j;
    if (!out.empty() && j < s.size() && is_ascii_alnum(out.back()) && is_ascii_alnum(s[j])) out.push_back(U' ');
    i = j;
  }
  return out;
}

std::u32string collapse_repeats(std::u32string s, const NormalizeOptions& opts) {
  for (int n = opts.max_ngram; n >= 1; --n) {
    const auto un = static_cast<size_t>(n);
    size_t i = 0;
    while (i + un <= s.size()) {
      size_t reps = 1;
      while (i + (reps + 1) * un <= s.size() &&
             std::equal(s.begin() + static_cast<std::ptrdiff_t>(i), s.begin() + static_cast<std::ptrdiff_t>(i + un),
                        s.begin() + static_cast<std::ptrdiff_t>(i + reps * un))) {
        ++reps;
      }
      if (reps >= static_cast<size_t>(opts.min_repeats)) {
        s.erase(i + un, (reps - 1) * un);
        i += un;
      } else {
        ++i;
      }
    }
  }
  return s;
}

}  // namespace

std::u32string utf8_decode(std::string_view text) {
  std::u32string out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    const auto b0 = static_cast<unsigned char>(text[i]);
    int len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + static_cast<size_t>(len) > text.size()) {
      out.push_back(0xFFFD);
      break;
    }
    bool ok = true;
    for (int k = 1; k < len; ++k) {
      const auto b = static_cast<unsigned char>(text[i + static_cast<size_t>(k)]);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    if (!ok) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += static_cast<size_t>(len);
  }
  return out;
}

std::string utf8_encode(std::u32string_view text) {
  std::string out;
  out.reserve(text.size() * 3);
  for (char32_t c : text) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

bool is_punctuation(char32_t c) {
  if ((c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E))
    return true;
  if (c >= 0x3000 && c <= 0x303F) return true;  // CJK symbols and punctuation
  return (c >= 0xFF01 && c <= 0xFF0F) || (c >= 0xFF1A && c <= 0xFF20) || (c >= 0xFF3B && c <= 0xFF40) ||
         (c >= 0xFF5B && c <= 0xFF65);
}

std::string strip_punctuation(std::string_view text) { return utf8_encode(drop_punctuation(utf8_decode(text))); }

std::string normalize_hyp(std::string_view text, const NormalizeOptions& opts) {
  std::u32string current = utf8_decode(text);
  while (true) {
    std::u32string next = collapse_repeats(normalize_spaces(drop_punctuation(current)), opts);
    if (next == current) break;
    current = std::move(next);
  }
  return utf8_encode(current);
}

std::vector<std::string> tokenize_cjk(std::string_view text) {
  std::vector<std::string> tokens;
  std::u32string word;
  const auto flush = [&] {
    if (!word.empty()) tokens.push_back(utf8_encode(word));
    word.clear();
  };
  for (char32_t c : utf8_decode(text)) {
    if (is_space(c)) {
      flush();
    } else if (is_ascii_alnum(c)) {
      word.push_back(c);
    } else {
      flush();
      tokens.push_back(utf8_encode(std::u32string(1, c)));
    }
  }
  flush();
  return tokens;
}

AlignmentCounts align(std::span<const std::string> ref, std::span<const std::string> hyp) {
  struct Cell {
    int cost;
    int subs;
    bool operator==(const Cell&) const = default;
  };
  const auto better = [](const Cell& a, const Cell& b) {
    return a.cost < b.cost || (a.cost == b.cost && a.subs > b.subs);
  };
  const size_t n = ref.size();
  const size_t m = hyp.size();
  std::vector<Cell> table((n + 1) * (m + 1));
  const auto at = [&](size_t i, size_t j) -> Cell& { return table[i * (m + 1) + j]; };

  for (size_t i = 0; i <= n; ++i) at(i, 0) = {static_cast<int>(i), 0};
  for (size_t j = 0; j <= m; ++j) at(0, j) = {static_cast<int>(j), 0};
  for (size_t i = 1; i <= n; ++i) {
    for (size_t j = 1; j <= m; ++j) {
      const bool same = ref[i - 1] == hyp[j - 1];
      Cell best{at(i - 1, j - 1).cost + (same ? 0 : 1), at(i - 1, j - 1).subs + (same ? 0 : 1)};
      const Cell del{at(i - 1, j).cost + 1, at(i - 1, j).subs};
      const Cell ins{at(i, j - 1).cost + 1, at(i, j - 1).subs};
      if (better(del, best)) best = del;
      if (better(ins, best)) best = ins;
      at(i, j) = best;
    }
  }

  AlignmentCounts counts;
  size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const Cell target = at(i, j);
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      const Cell diag = at(i - 1, j - 1);
      if (Cell{diag.cost + (same ? 0 : 1), diag.subs + (same ? 0 : 1)} == target) {
        ++(same ? counts.hits : counts.substitutions);
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && Cell{at(i - 1, j).cost + 1, at(i - 1, j).subs} == target) {
      ++counts.deletions;
      --i;
      continue;
    }
    ++counts.insertions;
    --j;
  }
  return counts;
}

double UtteranceScore::wer() const {
  return 100.0 * counts.errors() / std::max(ref_len, 1);
}

UtteranceScore score_utterance(std::string id, std::string_view reference, std::string_view hypothesis,
                               const NormalizeOptions& opts) {
  UtteranceScore s;
  s.id = std::move(id);
  s.ref_tokens = tokenize_cjk(strip_punctuation(reference));
  s.hyp_tokens = tokenize_cjk(normalize_hyp(hypothesis, opts));
  s.ref_len = static_cast<int>(s.ref_tokens.size());
  s.counts = align(s.ref_tokens, s.hyp_tokens);
  return s;
}

WERReport corpus_wer(std::vector<UtteranceScore> utterances) {
  if (utterances.empty()) throw Error(ErrorCode::EmptyCorpus, "no utterances to score");
  WERReport r;
  for (const auto& u : utterances) {
    r.ref_len += u.ref_len;
    r.counts.substitutions += u.counts.substitutions;
    r.counts.deletions += u.counts.deletions;
    r.counts.insertions += u.counts.insertions;
    r.counts.hits += u.counts.hits;
  }
  r.wer = 100.0 * r.counts.errors() / std::max(r.ref_len, 1);
  r.utterances = std::move(utterances);
  return r;
}

void write_trn(std::ostream& out, std::span<const UtteranceScore> utterances, bool hypothesis) {
  for (const auto& u : utterances) {
    const auto& tokens = hypothesis ? u.hyp_tokens : u.ref_tokens;
    for (const auto& t : tokens) out << t << ' ';
    out << '(' << u.id << ")\n";
  }
}

}  // namespace sicl
