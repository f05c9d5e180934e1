#include "dft/patterns.hpp"

#include "dft/error.hpp"
#include "dft/text.hpp"

#include <boost/regex.hpp>

#include <algorithm>
#include <sstream>

namespace dft {

std::vector<NamedPattern> parse_pattern_set(std::string_view content)
{
    std::vector<NamedPattern> out;
    std::size_t lineno = 0;
    for (auto line : text::lines(content)) {
        ++lineno;
        if (text::trim(line).empty() || text::trim(line).front() == '#')
            continue;
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos || text::trim(line.substr(0, tab)).empty() || tab + 1 >= line.size())
            throw Error("scanners.MalformedPattern", "pattern line " + std::to_string(lineno) +
                                                         " is not name<TAB>pattern");
        out.push_back({std::string(text::trim(line.substr(0, tab))), std::string(line.substr(tab + 1))});
    }
    return out;
}

std::string format_pattern_set(const std::vector<NamedPattern>& patterns)
{
    std::ostringstream out;
    for (const auto& p : patterns)
        out << p.name << '\t' << p.pattern << '\n';
    return out.str();
}

std::vector<NamedPattern> builtin_pattern_set(std::string_view name)
{
    if (name == "email")
        return {{"email", "[A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(\\.[A-Za-z0-9-]+)*\\.[A-Za-z]{2,}"}};
    if (name == "identity")
        return {{"sin", "[0-9]{3}[ -][0-9]{3}[ -][0-9]{3}"},
                {"passport", "[A-Z]{2}[0-9]{6}"},
                {"drivers_licence", "[A-Z][0-9]{4}-[0-9]{5}-[0-9]{5}"}};
    throw Error("scanners.UnknownPatternSet", "unknown built-in pattern set: " + std::string(name));
}

struct PatternMatcher::Impl {
    std::vector<NamedPattern> patterns;
    std::vector<boost::regex> compiled;
    ArtifactKind kind;
};

PatternMatcher::PatternMatcher(std::vector<NamedPattern> patterns, ArtifactKind kind)
    : impl_(std::make_unique<Impl>())
{
    if (patterns.empty())
        throw Error("scanners.EmptyPatternSet", "pattern set is empty");
    for (const auto& p : patterns) {
        if (p.pattern.empty())
            throw Error("scanners.MalformedPattern", "MalformedPattern(" + p.name + "): empty pattern");
        try {
            impl_->compiled.emplace_back(p.pattern, boost::regex::extended);
        } catch (const boost::regex_error& e) {
            throw Error("scanners.MalformedPattern", "MalformedPattern(" + p.name + "): " + e.what());
        }
    }
    impl_->patterns = std::move(patterns);
    impl_->kind = kind;
}

PatternMatcher::~PatternMatcher() = default;
PatternMatcher::PatternMatcher(PatternMatcher&&) noexcept = default;
PatternMatcher& PatternMatcher::operator=(PatternMatcher&&) noexcept = default;

const std::vector<NamedPattern>& PatternMatcher::patterns() const { return impl_->patterns; }
ArtifactKind PatternMatcher::kind() const { return impl_->kind; }

namespace {

struct RawMatch {
    std::uint64_t offset;
    std::string bytes;
};

// Leftmost-longest, non-overlapping matches of one pattern, reading the file
// through windows of `window` bytes. `read` fills [offset, offset+len).
template <typename Reader>
std::vector<RawMatch> windowed_matches(const boost::regex& re, std::uint64_t size, std::size_t window, Reader read)
{
    std::vector<RawMatch> out;
    const std::size_t half = std::max<std::size_t>(window / 2, 1);
    std::string buf;
    std::uint64_t c = 0;
    while (c < size) {
        const std::uint64_t wstart = c > 0 ? c - 1 : 0;
        const std::uint64_t wend = std::min<std::uint64_t>(size, c + window);
        read(wstart, static_cast<std::size_t>(wend - wstart), buf);
        const bool at_eof = wend == size;
        const char* base = buf.data();
        const char* last = base + buf.size();

        std::uint64_t cursor = c;
        std::uint64_t next = at_eof ? size : std::max<std::uint64_t>(c + half, c + 1);
        while (cursor < wend) {
            auto flags = boost::match_default;
            if (cursor > 0)
                flags |= boost::match_prev_avail;
            if (!at_eof)
                flags |= boost::match_not_eol;
            boost::cmatch m;
            const char* first = base + (cursor - wstart);
            if (!boost::regex_search(first, last, m, re, flags)) {
                next = at_eof ? size : std::max(next, cursor);
                break;
            }
            const std::uint64_t s = cursor + static_cast<std::uint64_t>(m.position(std::size_t{0}));
            const auto len = static_cast<std::uint64_t>(m.length(std::size_t{0}));
            if (!at_eof && s >= c + half) {
                next = s;
                break;
            }
            if (len == 0) {
                cursor = s + 1;
                next = at_eof ? size : std::max(next, cursor);
                continue;
            }
            out.push_back({s, std::string(first + m.position(std::size_t{0}), static_cast<std::size_t>(len))});
            cursor = s + len;
            next = at_eof ? size : std::max(next, cursor);
        }
        c = next;
    }
    return out;
}

} // namespace

std::vector<ArtifactHit> PatternMatcher::scan_buffer(std::string_view data, const std::string& path) const
{
    std::vector<ArtifactHit> hits;
    for (std::size_t i = 0; i < impl_->compiled.size(); ++i) {
        const auto matches = windowed_matches(
            impl_->compiled[i], data.size(), std::max<std::size_t>(data.size(), 2),
            [&](std::uint64_t off, std::size_t len, std::string& buf) { buf.assign(data.substr(off, len)); });
        for (const auto& m : matches) {
            ArtifactHit h;
            h.kind = impl_->kind;
            h.value = printable(m.bytes);
            h.location = {path, m.offset, Location::Unit::byte};
            h.scanner_id = impl_->patterns[i].name;
            hits.push_back(std::move(h));
        }
    }
    sort_hits(hits);
    return hits;
}

std::vector<ArtifactHit> PatternMatcher::scan(const EvidenceHandle& handle, std::size_t window) const
{
    std::vector<ArtifactHit> hits;
    for (const auto& f : handle.files()) {
        for (std::size_t i = 0; i < impl_->compiled.size(); ++i) {
            const auto matches = windowed_matches(
                impl_->compiled[i], f.size, std::max<std::size_t>(window, 2),
                [&](std::uint64_t off, std::size_t len, std::string& buf) {
                    buf.resize(len);
                    const auto got = handle.read_at(f, off, std::as_writable_bytes(std::span(buf.data(), len)));
                    if (got != len)
                        throw Error("scanners.ReadFailure",
                                    "short read at " + f.abs_path.string() + "@" + std::to_string(off + got));
                });
            for (const auto& m : matches) {
                ArtifactHit h;
                h.kind = impl_->kind;
                h.value = printable(m.bytes);
                h.location = {f.rel_path, m.offset, Location::Unit::byte};
                h.scanner_id = impl_->patterns[i].name;
                hits.push_back(std::move(h));
            }
        }
    }
    handle.check_unchanged();
    sort_hits(hits);
    return hits;
}

std::vector<ArtifactHit> scan_pattern(const EvidenceHandle& handle, const std::vector<NamedPattern>& pattern_set,
                                      ArtifactKind kind)
{
    return PatternMatcher(pattern_set, kind).scan(handle);
}

} // namespace dft
