#include "dft/hits.hpp"

#include "dft/error.hpp"

#include <algorithm>
#include <sstream>
#include <tuple>

namespace dft {

using nlohmann::json;

std::string_view to_string(ArtifactKind kind)
{
    switch (kind) {
    case ArtifactKind::card_number: return "card_number";
    case ArtifactKind::email: return "email";
    case ArtifactKind::id_pattern: return "id_pattern";
    case ArtifactKind::media_file: return "media_file";
    case ArtifactKind::encryption_indicator: return "encryption_indicator";
    case ArtifactKind::attached_device: return "attached_device";
    }
    return "unknown";
}

ArtifactKind parse_artifact_kind(std::string_view text)
{
    for (auto k : all_artifact_kinds())
        if (to_string(k) == text)
            return k;
    throw Error("scanners.UnknownArtifactKind", "unknown artifact kind: " + std::string(text));
}

const std::vector<ArtifactKind>& all_artifact_kinds()
{
    static const std::vector<ArtifactKind> kinds = {
        ArtifactKind::card_number, ArtifactKind::email, ArtifactKind::id_pattern,
        ArtifactKind::media_file, ArtifactKind::encryption_indicator, ArtifactKind::attached_device};
    return kinds;
}

void sort_hits(std::vector<ArtifactHit>& hits)
{
    std::stable_sort(hits.begin(), hits.end(), [](const ArtifactHit& a, const ArtifactHit& b) {
        return std::tie(a.scanner_id, a.location) < std::tie(b.scanner_id, b.location);
    });
}

json to_json(const Location& loc)
{
    return {{"path", loc.path}, {"offset", loc.offset},
            {"unit", loc.unit == Location::Unit::byte ? "byte" : "record"}};
}

Location location_from_json(const json& j)
{
    Location loc;
    loc.path = j.at("path").get<std::string>();
    loc.offset = j.at("offset").get<std::uint64_t>();
    const auto unit = j.at("unit").get<std::string>();
    if (unit == "byte")
        loc.unit = Location::Unit::byte;
    else if (unit == "record")
        loc.unit = Location::Unit::record;
    else
        throw Error("report.MalformedReport", "unknown location unit: " + unit);
    return loc;
}

json to_json(const ArtifactHit& hit)
{
    json also = json::array();
    for (const auto& l : hit.also_at)
        also.push_back(to_json(l));
    return {{"kind", to_string(hit.kind)},
            {"value", hit.value},
            {"location", to_json(hit.location)},
            {"also_at", std::move(also)},
            {"scanner_id", hit.scanner_id},
            {"note", hit.note},
            {"salient", hit.salient},
            {"flagged", hit.flagged}};
}

ArtifactHit hit_from_json(const json& j)
{
    ArtifactHit h;
    h.kind = parse_artifact_kind(j.at("kind").get<std::string>());
    h.value = j.at("value").get<std::string>();
    h.location = location_from_json(j.at("location"));
    for (const auto& l : j.at("also_at"))
        h.also_at.push_back(location_from_json(l));
    h.scanner_id = j.at("scanner_id").get<std::string>();
    h.note = j.at("note").get<std::string>();
    h.salient = j.at("salient").get<bool>();
    h.flagged = j.at("flagged").get<bool>();
    return h;
}

namespace {

std::string escape_field(std::string_view s)
{
    std::string out;
    for (char c : s) {
        if (c == '\t')
            out += "\\t";
        else if (c == '\n')
            out += "\\n";
        else if (c == '\\')
            out += "\\\\";
        else
            out.push_back(c);
    }
    return out;
}

} // namespace

std::string format_hits_tsv(const std::vector<ArtifactHit>& hits)
{
    std::ostringstream out;
    out << "kind\tscanner_id\tpath\tunit\toffset\tvalue\tflagged\tsalient\tnote\n";
    for (const auto& h : hits) {
        out << to_string(h.kind) << '\t' << escape_field(h.scanner_id) << '\t' << escape_field(h.location.path)
            << '\t' << (h.location.unit == Location::Unit::byte ? "byte" : "record") << '\t' << h.location.offset
            << '\t' << escape_field(h.value) << '\t' << (h.flagged ? "yes" : "no") << '\t'
            << (h.salient ? "yes" : "no") << '\t' << escape_field(h.note) << '\n';
    }
    return out.str();
}

std::string printable(std::string_view raw)
{
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        const auto u = static_cast<unsigned char>(c);
        if (u >= 0x20 && u < 0x7f && c != '\\') {
            out.push_back(c);
        } else if (c == '\\') {
            out += "\\\\";
        } else {
            out += "\\x";
            out.push_back(hex[u >> 4]);
            out.push_back(hex[u & 0x0f]);
        }
    }
    return out;
}

} // namespace dft
