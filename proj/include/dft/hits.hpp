#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace dft {

enum class ArtifactKind { card_number, email, id_pattern, media_file, encryption_indicator, attached_device };

std::string_view to_string(ArtifactKind kind);
ArtifactKind parse_artifact_kind(std::string_view text);
const std::vector<ArtifactKind>& all_artifact_kinds();

/// Where a hit was observed: a byte offset within a file of the source, or a
/// record index for normalized record sources.
struct Location {
    enum class Unit { byte, record };

    std::string path; // relative path; empty for a raw image
    std::uint64_t offset = 0;
    Unit unit = Unit::byte;

    auto operator<=>(const Location&) const = default;
};

struct ArtifactHit {
    ArtifactKind kind = ArtifactKind::id_pattern;
    std::string value;
    Location location;
    std::vector<Location> also_at; // further locations of a collapsed duplicate
    std::string scanner_id;
    std::string note;
    bool salient = false;
    bool flagged = false;

    bool operator==(const ArtifactHit&) const = default;
};

/// Orders hits by (scanner_id, location); the merge order used everywhere.
void sort_hits(std::vector<ArtifactHit>& hits);

nlohmann::json to_json(const Location& loc);
Location location_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ArtifactHit& hit);
ArtifactHit hit_from_json(const nlohmann::json& j);

/// Tab-delimited export, one hit per line after a header row. Tabs and
/// newlines inside values are escaped as \t and \n.
std::string format_hits_tsv(const std::vector<ArtifactHit>& hits);

/// Escapes bytes outside printable ASCII as \xNN so hit values stay valid UTF-8.
std::string printable(std::string_view raw);

} // namespace dft
