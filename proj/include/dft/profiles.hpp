#pragma once

#include "dft/hits.hpp"

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dft {

enum class CrimeType { fraud, identity_theft, child_exploitation, stolen_property, generic };

std::string_view to_string(CrimeType t);
CrimeType parse_crime_type(std::string_view text);

/// Scanner ids understood by the assessment runner:
///   cards       card numbers, Luhn-checked        -> card_number
///   email       built-in e-mail pattern           -> email
///   identity    built-in identity-document shapes -> id_pattern
///   patterns    pattern file named by config      -> id_pattern
///   media       media inventory of a tree         -> media_file
///   encryption  volume signatures, program list   -> encryption_indicator
///   devices     attached-device history           -> attached_device
struct ScannerSpec {
    std::string id;
    std::string config; // optional argument, e.g. a pattern or program-list file

    bool operator==(const ScannerSpec&) const = default;
};

const std::vector<std::string>& known_scanner_ids();
std::vector<ArtifactKind> kinds_produced_by(std::string_view scanner_id);

/// Marks hits of `kind` as salient; with a predicate "value~RE" or "note~RE"
/// only hits whose field matches the POSIX extended expression RE.
struct SalienceRule {
    ArtifactKind kind;
    std::string predicate;

    bool operator==(const SalienceRule&) const = default;
};

struct SearchProfile {
    CrimeType crime_type = CrimeType::generic;
    std::vector<ScannerSpec> scanners;
    std::vector<SalienceRule> salience_rules;
    std::vector<ArtifactKind> threshold_targets;
    /// Optional triage weight overrides, e.g. "owner_relation.suspect" -> 0.6.
    std::map<std::string, double> weights;

    bool operator==(const SearchProfile&) const = default;
};

/// Built-in profile for a crime type, or a profile file when `name_or_path`
/// is not a crime type name. Throws profiles.UnknownCrimeType or
/// profiles.InvalidProfile.
SearchProfile load_profile(std::string_view name_or_path);
SearchProfile builtin_profile(CrimeType t);
std::string builtin_profile_text(CrimeType t);

/// Sectioned text: "crime_type = X", then [scanners], [salience], [threshold]
/// and optionally [weights].
SearchProfile parse_profile(std::string_view text);
std::string format_profile(const SearchProfile& p);

/// Every violated invariant, as a readable message; empty means valid.
std::vector<std::string> validate_profile(const SearchProfile& p);

void apply_salience(std::vector<ArtifactHit>& hits, const SearchProfile& p);

} // namespace dft
