#include "dft/cards.hpp"

#include "dft/error.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dft {

namespace {

inline bool is_digit(std::byte b) noexcept
{
    return b >= std::byte{'0'} && b <= std::byte{'9'};
}

inline bool is_sep(std::byte b) noexcept
{
    return b == std::byte{' '} || b == std::byte{'-'};
}

// Parses the maximal run that starts at p. Returns false when the run is not
// a PAN candidate or cannot be decided inside the window.
bool parse_run(std::span<const std::byte> w, std::size_t p, bool at_eof, std::uint64_t base, CardRun& out)
{
    char digits[max_pan_digits];
    std::size_t n = 0;
    std::size_t q = p;
    std::size_t last = p;
    const std::size_t size = w.size();
    for (;;) {
        if (q < size && is_digit(w[q])) {
            if (n == max_pan_digits)
                return false;
            digits[n++] = static_cast<char>(w[q]);
            last = q;
            ++q;
        } else if (q + 1 < size && is_sep(w[q]) && is_digit(w[q + 1])) {
            ++q;
        } else {
            break;
        }
    }
    // Hitting the window edge leaves the run undecided; the lookahead is long
    // enough that such a run already exceeds the PAN length limit.
    const bool cut = q == size || (q + 1 == size && is_sep(w[q]));
    if (cut && !at_eof)
        return false;
    if (n < min_pan_digits || !luhn_valid(digits, n))
        return false;
    out.offset = base + p;
    out.length = static_cast<std::uint32_t>(last - p + 1);
    out.pan.assign(digits, n);
    return true;
}

void scan_range(std::span<const std::byte> w, std::size_t begin, std::size_t end, bool at_eof, std::uint64_t base,
                std::vector<CardRun>& out)
{
    for (std::size_t p = begin; p < end; ++p) {
        if (!is_digit(w[p]))
            continue;
        if (p > 0 && is_digit(w[p - 1]))
            continue;
        if (p > 1 && is_sep(w[p - 1]) && is_digit(w[p - 2]))
            continue;
        CardRun run;
        if (parse_run(w, p, at_eof, base, run))
            out.push_back(std::move(run));
    }
}

} // namespace

bool luhn_valid(const char* digits, std::size_t n) noexcept
{
    static constexpr unsigned doubled[10] = {0, 2, 4, 6, 8, 1, 3, 5, 7, 9};
    unsigned sum = 0;
    bool dbl = false;
    for (std::size_t i = n; i > 0; --i) {
        const auto d = static_cast<unsigned>(digits[i - 1] - '0');
        sum += dbl ? doubled[d] : d;
        dbl = !dbl;
    }
    return sum % 10 == 0;
}

bool luhn_check(std::string_view digits)
{
    if (digits.empty())
        throw Error("scanners.NonDigitInput", "empty digit string");
    for (char c : digits)
        if (c < '0' || c > '9')
            throw Error("scanners.NonDigitInput", "non-digit character in Luhn input");
    if (digits.size() > max_pan_digits)
        throw Error("scanners.InvalidLength", "Luhn input longer than 19 digits");
    return luhn_valid(digits.data(), digits.size());
}

void CardRunStream::close_run()
{
    if (!overflow_ && digits_.size() >= min_pan_digits && luhn_valid(digits_.data(), digits_.size()))
        runs_.push_back({run_start_, static_cast<std::uint32_t>(run_end_ - run_start_), digits_});
    in_run_ = false;
    pending_sep_ = false;
    overflow_ = false;
    digits_.clear();
}

void CardRunStream::feed(std::span<const std::byte> data)
{
    for (const auto b : data) {
        if (is_digit(b)) {
            if (!in_run_) {
                in_run_ = true;
                run_start_ = pos_;
            }
            pending_sep_ = false;
            if (digits_.size() < max_pan_digits)
                digits_.push_back(static_cast<char>(b));
            else
                overflow_ = true;
            run_end_ = pos_ + 1;
        } else if (is_sep(b) && in_run_ && !pending_sep_) {
            pending_sep_ = true;
        } else if (in_run_) {
            close_run();
        }
        ++pos_;
    }
}

std::vector<CardRun> CardRunStream::finish()
{
    if (in_run_)
        close_run();
    return std::move(runs_);
}

std::vector<CardRun> find_card_runs_serial(std::span<const std::byte> data, std::uint64_t base)
{
    CardRunStream s;
    s.feed(data);
    auto runs = s.finish();
    for (auto& r : runs)
        r.offset += base;
    return runs;
}

std::vector<CardRun> find_card_runs_window(std::span<const std::byte> window, std::size_t begin, std::size_t end,
                                           bool window_at_eof, std::uint64_t window_base, Execution execution)
{
    std::vector<CardRun> out;
    if (begin >= end)
        return out;
    if (execution == Execution::serial) {
        scan_range(window, begin, end, window_at_eof, window_base, out);
        return out;
    }

    int threads = 1;
#ifdef _OPENMP
    threads = omp_get_max_threads();
#endif
    const std::size_t span_len = end - begin;
    const std::size_t pieces = std::max<std::size_t>(1, std::min<std::size_t>(span_len / 4096 + 1, threads * 4));
    const std::size_t step = (span_len + pieces - 1) / pieces;
    std::vector<std::vector<CardRun>> partial(pieces);
    const auto n = static_cast<long>(pieces);
#pragma omp parallel for schedule(dynamic, 1)
    for (long i = 0; i < n; ++i) {
        const std::size_t a = begin + static_cast<std::size_t>(i) * step;
        const std::size_t b = std::min(end, a + step);
        if (a < b)
            scan_range(window, a, b, window_at_eof, window_base, partial[i]);
    }
    for (auto& p : partial)
        out.insert(out.end(), std::make_move_iterator(p.begin()), std::make_move_iterator(p.end()));
    return out;
}

namespace {

void collect(std::vector<CardHit>& hits, std::unordered_map<std::string, std::size_t>& index,
             const std::vector<CardRun>& runs, const std::string& path)
{
    for (const auto& r : runs) {
        const Location loc{path, r.offset, Location::Unit::byte};
        const auto [it, inserted] = index.emplace(r.pan, hits.size());
        if (inserted)
            hits.push_back({r.pan, r.pan.substr(0, 6), {loc}});
        else
            hits[it->second].locations.push_back(loc);
    }
}

std::vector<CardRun> scan_file(const EvidenceHandle& handle, const SourceFile& f, const CardScanOptions& opt)
{
    if (opt.execution == Execution::serial) {
        CardRunStream stream;
        std::vector<std::byte> buf(std::min<std::uint64_t>(opt.block_size, std::max<std::uint64_t>(f.size, 1)));
        for (std::uint64_t off = 0; off < f.size;) {
            const auto got = handle.read_at(f, off, buf);
            if (got == 0)
                throw Error("scanners.ReadFailure", "short read at " + f.abs_path.string() + "@" + std::to_string(off));
            stream.feed(std::span<const std::byte>(buf.data(), got));
            off += got;
        }
        return stream.finish();
    }

    std::vector<CardRun> out;
    std::vector<std::byte> buf;
    const std::size_t block = std::max<std::size_t>(opt.block_size, 1);
    for (std::uint64_t blk = 0; blk < f.size; blk += block) {
        const std::uint64_t win_start = blk >= 2 ? blk - 2 : 0;
        const std::uint64_t win_end = std::min<std::uint64_t>(f.size, blk + block + card_lookahead);
        buf.resize(static_cast<std::size_t>(win_end - win_start));
        const auto got = handle.read_at(f, win_start, buf);
        if (got != buf.size())
            throw Error("scanners.ReadFailure",
                        "short read at " + f.abs_path.string() + "@" + std::to_string(win_start + got));
        const auto begin = static_cast<std::size_t>(blk - win_start);
        const auto end = static_cast<std::size_t>(std::min<std::uint64_t>(f.size, blk + block) - win_start);
        auto runs = find_card_runs_window(buf, begin, end, win_end == f.size, win_start, Execution::parallel);
        out.insert(out.end(), std::make_move_iterator(runs.begin()), std::make_move_iterator(runs.end()));
    }
    return out;
}

} // namespace

std::vector<CardHit> extract_card_numbers(const EvidenceHandle& handle, const CardScanOptions& options)
{
    std::vector<CardHit> hits;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& f : handle.files())
        collect(hits, index, scan_file(handle, f, options), f.rel_path);
    handle.check_unchanged();
    return hits;
}

std::vector<CardHit> extract_card_numbers(std::span<const std::byte> data, const std::string& path,
                                          Execution execution)
{
    std::vector<CardHit> hits;
    std::unordered_map<std::string, std::size_t> index;
    const auto runs = execution == Execution::serial
                          ? find_card_runs_serial(data)
                          : find_card_runs_window(data, 0, data.size(), true, 0, Execution::parallel);
    collect(hits, index, runs, path);
    return hits;
}

std::vector<BankCodeGroup> sort_by_bank_code(const std::vector<CardHit>& hits)
{
    std::vector<BankCodeGroup> groups;
    std::vector<const CardHit*> sorted;
    sorted.reserve(hits.size());
    for (const auto& h : hits)
        sorted.push_back(&h);
    std::stable_sort(sorted.begin(), sorted.end(), [](const CardHit* a, const CardHit* b) {
        if (a->bank_code != b->bank_code)
            return a->bank_code < b->bank_code;
        return a->locations.front() < b->locations.front();
    });
    for (const auto* h : sorted) {
        if (groups.empty() || groups.back().bank_code != h->bank_code)
            groups.push_back({h->bank_code, {}});
        groups.back().hits.push_back(*h);
    }
    return groups;
}

ArtifactHit to_artifact_hit(const CardHit& hit, const std::string& scanner_id)
{
    ArtifactHit a;
    a.kind = ArtifactKind::card_number;
    a.value = hit.pan;
    a.location = hit.locations.front();
    a.also_at.assign(hit.locations.begin() + 1, hit.locations.end());
    a.scanner_id = scanner_id;
    a.note = "bank_code=" + hit.bank_code;
    return a;
}

std::string format_bank_code_groups(const std::vector<BankCodeGroup>& groups)
{
    std::ostringstream out;
    out << "bank_code\tpan\tpath\toffset\n";
    for (const auto& g : groups)
        for (const auto& h : g.hits)
            for (const auto& loc : h.locations)
                out << g.bank_code << '\t' << h.pan << '\t' << loc.path << '\t' << loc.offset << '\n';
    return out.str();
}

} // namespace dft
