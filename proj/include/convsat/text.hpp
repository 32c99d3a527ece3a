#pragma once
// Tokenization shared by feature extraction and the neural text pipeline.

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace convsat {

// Lowercases and splits on any non-alphanumeric boundary; punctuation is
// dropped. ASR transcripts are mostly unpunctuated, so "don't" becomes the
// two tokens {don, t}. Deterministic, locale-independent (ASCII folding).
std::vector<std::string> tokenize(std::string_view text);

// Number of tokens produced by tokenize().
std::size_t word_count(std::string_view text);

// Lowercased unique-token set of a text.
std::unordered_set<std::string> unique_tokens(std::string_view text);

}  // namespace convsat
