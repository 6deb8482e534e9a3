#pragma once

#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sicl {

/// UTF-8 helpers. Invalid bytes decode to U+FFFD.
std::u32string utf8_decode(std::string_view text);
std::string utf8_encode(std::u32string_view text);

bool is_punctuation(char32_t c);

struct NormalizeOptions {
  int max_ngram = 4;    // longest repeated unit that is collapsed
  int min_repeats = 3;  // a unit must occur this many times in a row to collapse
};

std::string strip_punctuation(std::string_view text);

/// Strips punctuation, collapses looping repeats and normalizes whitespace.
/// Applied until the text stops changing, so the result is a fixed point.
std::string normalize_hyp(std::string_view text, const NormalizeOptions& opts = {});

/// One token per CJK (non-ASCII) codepoint; runs of ASCII letters/digits are single tokens.
std::vector<std::string> tokenize_cjk(std::string_view text);

struct AlignmentCounts {
  int substitutions = 0;
  int deletions = 0;
  int insertions = 0;
  int hits = 0;

  int errors() const { return substitutions + deletions + insertions; }
  bool operator==(const AlignmentCounts&) const = default;
};

/// Unit-cost Levenshtein alignment. Among minimum-cost alignments the one with the most
/// substitutions wins; the backtrace prefers match > substitution > deletion > insertion.
AlignmentCounts align(std::span<const std::string> ref, std::span<const std::string> hyp);

struct UtteranceScore {
  std::string id;
  int ref_len = 0;
  AlignmentCounts counts;
  std::vector<std::string> ref_tokens;
  std::vector<std::string> hyp_tokens;

  double wer() const;
};

/// Micro-averaged WER: 100 * (S + D + I) / N. Can exceed 100.
struct WERReport {
  std::vector<UtteranceScore> utterances;
  int ref_len = 0;
  AlignmentCounts counts;
  double wer = 0.0;
};

/// Normalizes the hypothesis, strips reference punctuation, tokenizes both and aligns.
UtteranceScore score_utterance(std::string id, std::string_view reference, std::string_view hypothesis,
                               const NormalizeOptions& opts = {});

/// Throws EmptyCorpus for an empty list.
WERReport corpus_wer(std::vector<UtteranceScore> utterances);

/// "tok tok tok (utt-id)" per line, for external scorers.
void write_trn(std::ostream& out, std::span<const UtteranceScore> utterances, bool hypothesis);

}  // namespace sicl
