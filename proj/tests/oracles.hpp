#pragma once

// Independent reference computations used to derive expected values. Nothing
// here calls into the library code it checks.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dft::oracle {

/// Textbook Luhn: from the right, double every second digit and subtract 9
/// from products above 9.
inline bool luhn(const std::string& digits)
{
    std::string rev(digits.rbegin(), digits.rend());
    int total = 0;
    for (std::size_t i = 0; i < rev.size(); ++i) {
        int d = rev[i] - '0';
        if (i % 2 == 1) {
            d *= 2;
            if (d > 9)
                d -= 9;
        }
        total += d;
    }
    return total % 10 == 0;
}

inline bool digit(char c) { return c >= '0' && c <= '9'; }
inline bool sep(char c) { return c == ' ' || c == '-'; }

/// Every substring [i, j) of `buf` that is a maximal digit run with single
/// separators, 13..19 digits, and Luhn-valid. Quadratic; for small buffers.
inline std::vector<std::pair<std::uint64_t, std::string>> card_substrings(std::string_view buf)
{
    std::vector<std::pair<std::uint64_t, std::string>> out;
    const std::size_t n = buf.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!digit(buf[i]))
            continue;
        const bool extends_left = (i >= 1 && digit(buf[i - 1])) || (i >= 2 && sep(buf[i - 1]) && digit(buf[i - 2]));
        if (extends_left)
            continue;
        for (std::size_t j = i + 1; j <= n && j - i <= 40; ++j) {
            const std::string_view s = buf.substr(i, j - i);
            if (!digit(s.back()))
                continue;
            bool grammar = true;
            std::string stripped;
            for (std::size_t k = 0; k < s.size(); ++k) {
                if (digit(s[k])) {
                    stripped.push_back(s[k]);
                } else if (sep(s[k]) && k > 0 && digit(s[k - 1]) && k + 1 < s.size() && digit(s[k + 1])) {
                    // single separator between digits
                } else {
                    grammar = false;
                    break;
                }
            }
            if (!grammar)
                break;
            const bool extends_right = (j < n && digit(buf[j])) || (j + 1 < n && sep(buf[j]) && digit(buf[j + 1]));
            if (extends_right)
                continue;
            if (stripped.size() >= 13 && stripped.size() <= 19 && luhn(stripped))
                out.emplace_back(i, stripped);
        }
    }
    return out;
}

/// Leftmost-longest, non-overlapping selection computed from full-match tests
/// of every substring with std::regex (a different engine from the scanner).
inline std::vector<std::pair<std::uint64_t, std::string>> leftmost_longest(std::string_view buf,
                                                                           const std::string& ecma_pattern,
                                                                           std::size_t max_len = 64)
{
    const std::regex re(ecma_pattern);
    std::vector<std::pair<std::uint64_t, std::string>> out;
    std::size_t pos = 0;
    while (pos < buf.size()) {
        std::optional<std::pair<std::size_t, std::size_t>> best;
        for (std::size_t i = pos; i < buf.size() && !best; ++i) {
            for (std::size_t j = std::min(buf.size(), i + max_len); j > i; --j) {
                const std::string s(buf.substr(i, j - i));
                if (std::regex_match(s, re)) {
                    best = {i, j};
                    break;
                }
            }
        }
        if (!best)
            break;
        out.emplace_back(best->first, std::string(buf.substr(best->first, best->second - best->first)));
        pos = best->second;
    }
    return out;
}

} // namespace dft::oracle
