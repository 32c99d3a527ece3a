#include "convsat/text.hpp"

#include <cctype>

namespace convsat {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::size_t word_count(std::string_view text) { return tokenize(text).size(); }

std::unordered_set<std::string> unique_tokens(std::string_view text) {
  auto toks = tokenize(text);
  return {toks.begin(), toks.end()};
}

}  // namespace convsat
