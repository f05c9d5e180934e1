#pragma once

#include "dft/execution.hpp"
#include "dft/hits.hpp"
#include "dft/integrity.hpp"

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dft {

/// Mod-10 check over a string of 1..19 decimal digits.
/// Throws scanners.NonDigitInput for empty or non-digit input and
/// scanners.InvalidLength for more than 19 digits.
bool luhn_check(std::string_view digits);

/// Unchecked variant for the scanning kernels; digits must be '0'..'9'.
bool luhn_valid(const char* digits, std::size_t n) noexcept;

inline constexpr std::size_t min_pan_digits = 13;
inline constexpr std::size_t max_pan_digits = 19;
/// A candidate holds at most 19 digits and 18 single separators.
inline constexpr std::size_t max_pan_bytes = 2 * max_pan_digits - 1;

/// A maximal digit run with 13..19 digits (single ' ' or '-' allowed between
/// digits) whose stripped digits pass the Luhn check.
struct CardRun {
    std::uint64_t offset = 0; // absolute offset of the first digit
    std::uint32_t length = 0; // bytes spanned, separators included
    std::string pan;          // separators stripped

    bool operator==(const CardRun&) const = default;
};

/// Serial reference: a byte-at-a-time state machine that can be fed a source
/// in arbitrary pieces.
class CardRunStream {
public:
    void feed(std::span<const std::byte> data);
    /// Flushes the run in progress at end of input and returns all runs.
    std::vector<CardRun> finish();

private:
    void close_run();

    std::vector<CardRun> runs_;
    std::uint64_t pos_ = 0;
    std::uint64_t run_start_ = 0;
    std::uint64_t run_end_ = 0; // one past the last digit
    std::string digits_;
    bool in_run_ = false;
    bool pending_sep_ = false;
    bool overflow_ = false;
};

std::vector<CardRun> find_card_runs_serial(std::span<const std::byte> data, std::uint64_t base = 0);

/// Windowed kernel: reports runs whose first digit lies in [begin, end) of
/// `window`. The caller supplies at least two bytes before `begin` (unless
/// `begin` is the start of the source) and at least `card_lookahead` bytes
/// after `end` (unless the window ends at end of source). With
/// Execution::parallel the range is split across OpenMP threads.
inline constexpr std::size_t card_lookahead = 64;
std::vector<CardRun> find_card_runs_window(std::span<const std::byte> window, std::size_t begin, std::size_t end,
                                           bool window_at_eof, std::uint64_t window_base,
                                           Execution execution = Execution::parallel);

struct CardHit {
    std::string pan;
    std::string bank_code; // first six digits
    std::vector<Location> locations; // in order of appearance
};

struct CardScanOptions {
    std::size_t block_size = 16u << 20;
    Execution execution = Execution::parallel;
};

/// One hit per distinct PAN, keeping every location, ordered by first location.
std::vector<CardHit> extract_card_numbers(const EvidenceHandle& handle, const CardScanOptions& options = {});
/// Same, over an in-memory buffer attributed to `path`.
std::vector<CardHit> extract_card_numbers(std::span<const std::byte> data, const std::string& path = {},
                                          Execution execution = Execution::parallel);

struct BankCodeGroup {
    std::string bank_code;
    std::vector<CardHit> hits; // ordered by first location
};

/// Groups keyed by bank code, ascending.
std::vector<BankCodeGroup> sort_by_bank_code(const std::vector<CardHit>& hits);

ArtifactHit to_artifact_hit(const CardHit& hit, const std::string& scanner_id = "cards");

/// "bank_code\tpan\tpath\toffset" rows, one per location, grouped as given.
std::string format_bank_code_groups(const std::vector<BankCodeGroup>& groups);

} // namespace dft
