#include <algorithm>
#include <array>
#include <cctype>

#include "sdm/textproc.hpp"

namespace sdm {

namespace {

constexpr std::array<std::string_view, 40> kGuards = {
    "dr.",   "mr.",   "mrs.",  "ms.",   "prof.", "sr.",   "jr.",   "st.",    "mt.",  "vs.",
    "etc.",  "e.g.",  "i.e.",  "cf.",   "al.",   "fig.",  "figs.", "eq.",    "no.",  "vol.",
    "pp.",   "ch.",   "sec.",  "u.s.",  "u.k.", "u.n.",  "e.u.",  "inc.",   "ltd.", "co.",
    "corp.", "dept.", "gen.",  "gov.",  "approx.", "est.", "jan.", "feb.",  "aug.", "sept.",
};

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }
bool is_opener(char c) { return c == '"' || c == '\'' || c == '(' || c == '['; }

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && is_space(s[b])) ++b;
    while (e > b && is_space(s[e - 1])) --e;
    return std::string(s.substr(b, e - b));
}

// Token ending at position `dot` (inclusive), lower-cased.
std::string token_ending_at(const std::string& text, std::size_t dot) {
    std::size_t start = dot;
    while (start > 0 && !is_space(text[start - 1]) && !is_opener(text[start - 1])) --start;
    std::string tok = text.substr(start, dot - start + 1);
    std::transform(tok.begin(), tok.end(), tok.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return tok;
}

bool guarded(const std::string& text, std::size_t dot) {
    const std::string tok = token_ending_at(text, dot);
    if (tok.size() == 2 && std::isalpha(static_cast<unsigned char>(tok[0]))) return true;  // initial
    return std::find(kGuards.begin(), kGuards.end(), tok) != kGuards.end();
}

}  // namespace

std::span<const std::string_view> abbreviation_guards() { return kGuards; }

std::vector<std::string> segment(const std::string& text) {
    std::vector<std::string> out;
    auto emit = [&](std::size_t from, std::size_t to) {
        std::string s = trim(std::string_view(text).substr(from, to - from));
        if (s.size() >= 2) out.push_back(std::move(s));
    };

    std::size_t start = 0;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c != '.' && c != '!' && c != '?') continue;

        std::size_t end = i + 1;
        while (end < text.size() && (text[end] == '.' || text[end] == '!' || text[end] == '?')) ++end;
        while (end < text.size() && is_closer(text[end])) ++end;

        std::size_t j = end;
        while (j < text.size() && is_space(text[j])) ++j;
        const bool at_end = j == text.size();
        bool boundary = at_end;
        if (!at_end && j > end) {
            std::size_t k = j;
            while (k < text.size() && is_opener(text[k])) ++k;
            boundary = k < text.size() && is_upper(text[k]);
        }
        if (boundary && c == '.' && end == i + 1 && guarded(text, i)) boundary = false;

        if (boundary) {
            emit(start, end);
            start = end;
        }
        i = end - 1;
    }
    if (start < text.size()) emit(start, text.size());
    return out;
}

}  // namespace sdm
