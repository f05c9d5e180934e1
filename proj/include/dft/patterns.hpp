#pragma once

#include "dft/hits.hpp"
#include "dft/integrity.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace dft {

struct NamedPattern {
    std::string name;
    std::string pattern; // POSIX extended regular expression
};

/// Parses "name<TAB>pattern" lines; blank lines and '#' comments are skipped.
std::vector<NamedPattern> parse_pattern_set(std::string_view text);
std::string format_pattern_set(const std::vector<NamedPattern>& patterns);

/// Built-in sets: "email" and "identity" (identity-document shapes).
std::vector<NamedPattern> builtin_pattern_set(std::string_view name);

/// Compiled, immutable pattern set. Matching is leftmost-longest per pattern,
/// and matches never overlap within one pattern.
class PatternMatcher {
public:
    /// Throws scanners.MalformedPattern naming the first bad pattern, or
    /// scanners.EmptyPatternSet.
    PatternMatcher(std::vector<NamedPattern> patterns, ArtifactKind kind = ArtifactKind::id_pattern);
    ~PatternMatcher();
    PatternMatcher(PatternMatcher&&) noexcept;
    PatternMatcher& operator=(PatternMatcher&&) noexcept;

    const std::vector<NamedPattern>& patterns() const;
    ArtifactKind kind() const;

    /// Hits in `data`, which is all of the file `path`.
    std::vector<ArtifactHit> scan_buffer(std::string_view data, const std::string& path = {}) const;

    /// Streams every file of the source through a bounded window; a match may
    /// be at most window/2 bytes long.
    std::vector<ArtifactHit> scan(const EvidenceHandle& handle, std::size_t window = 1u << 20) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

std::vector<ArtifactHit> scan_pattern(const EvidenceHandle& handle, const std::vector<NamedPattern>& pattern_set,
                                      ArtifactKind kind = ArtifactKind::id_pattern);

} // namespace dft
