#include "dft/assessment.hpp"

#include "dft/devices.hpp"
#include "dft/error.hpp"
#include "dft/media.hpp"
#include "dft/patterns.hpp"
#include "dft/sha256.hpp"
#include "dft/text.hpp"

#include <algorithm>

namespace dft {

using nlohmann::json;

namespace {

// Bumped whenever scanner behaviour changes in a way that alters output.
constexpr const char* cards_config = "cards v1: runs of 13-19 digits, single ' ' or '-' separators, Luhn mod 10";
constexpr const char* media_config = "media v1: jpeg png gif isobmff avi webp wav mp3 magic + extension";
constexpr const char* devices_config = "devices v1: idVendor/idProduct kernel log lines; normalized records";

std::filesystem::path resolve(const ScanSettings& s, const std::string& config)
{
    const std::filesystem::path p(config);
    return p.is_absolute() ? p : s.config_dir / p;
}

std::string digest_of(const std::string& scanner_id, const std::string& effective)
{
    return sha256_hex(scanner_id + "\n" + effective);
}

} // namespace

std::string hit_ref(const std::string& item_id, const ArtifactHit& hit)
{
    return item_id + "#" + hit.scanner_id + "#" + hit.location.path + "@" +
           (hit.location.unit == Location::Unit::record ? "r" : "") + std::to_string(hit.location.offset);
}

Assessment run_profile(const std::string& item_id, const EvidenceHandle& handle, const SearchProfile& profile,
                       const AuditContext& audit, const ScanSettings& settings)
{
    Assessment a;
    a.item_id = item_id;

    for (const auto& spec : profile.scanners) {
        SearchRun run{spec.id, spec.config, {}, "completed", 0};
        std::vector<ArtifactHit> found;
        std::map<std::string, std::string> params{{"item", item_id}, {"scanner", spec.id}};

        if (spec.id == "cards") {
            run.config_digest = digest_of(spec.id, cards_config);
            a.cards = extract_card_numbers(handle, settings.cards);
            for (const auto& c : a.cards)
                found.push_back(to_artifact_hit(c));
            params["hits"] = std::to_string(found.size());
            audit.emit("extract_card_numbers", params);
            const auto groups = sort_by_bank_code(a.cards);
            audit.emit("sort_by_bank_code", {{"item", item_id}, {"scanner", spec.id},
                                             {"groups", std::to_string(groups.size())}});
        } else if (spec.id == "email" || spec.id == "identity" || spec.id == "patterns") {
            std::vector<NamedPattern> set;
            ArtifactKind kind = ArtifactKind::id_pattern;
            if (spec.id == "email") {
                set = builtin_pattern_set("email");
                kind = ArtifactKind::email;
            } else if (spec.id == "identity") {
                set = builtin_pattern_set("identity");
            } else {
                set = parse_pattern_set(text::read_file(resolve(settings, spec.config).string()));
            }
            run.config_digest = digest_of(spec.id, format_pattern_set(set));
            found = PatternMatcher(set, kind).scan(handle, settings.pattern_window);
            params["hits"] = std::to_string(found.size());
            audit.emit("scan_pattern", params);
        } else if (spec.id == "media") {
            run.config_digest = digest_of(spec.id, media_config);
            if (handle.kind() == SourceKind::directory_tree)
                found = inventory_media_files(handle);
            else
                run.status = "not_applicable";
            params["hits"] = std::to_string(found.size());
            params["status"] = run.status;
            audit.emit("inventory_media_files", params);
        } else if (spec.id == "encryption") {
            const auto programs = spec.config.empty()
                                      ? default_encryption_programs()
                                      : parse_pattern_set(text::read_file(resolve(settings, spec.config).string()));
            run.config_digest = digest_of(spec.id, format_pattern_set(programs));
            a.encryption = detect_encryption_indicators(handle, programs);
            found = to_artifact_hits(*a.encryption);
            params["summary"] = std::string(to_string(a.encryption->summary));
            params["hits"] = std::to_string(found.size());
            audit.emit("detect_encryption_indicators", params);
        } else if (spec.id == "devices") {
            run.config_digest = digest_of(spec.id, devices_config);
            found = to_artifact_hits(extract_attached_devices(handle));
            params["hits"] = std::to_string(found.size());
            audit.emit("extract_attached_devices", params);
        } else {
            throw Error("profiles.InvalidProfile", "InvalidProfile(unknown scanner: " + spec.id + ")");
        }

        run.hit_count = found.size();
        a.searches_run.push_back(std::move(run));
        a.hits.insert(a.hits.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
    }
    sort_hits(a.hits);
    apply_salience(a.hits, profile);
    return a;
}

json to_json(const SearchRun& r)
{
    return {{"scanner_id", r.scanner_id},
            {"config", r.config},
            {"config_digest", r.config_digest},
            {"status", r.status},
            {"hit_count", r.hit_count}};
}

SearchRun search_run_from_json(const json& j)
{
    SearchRun r;
    r.scanner_id = j.at("scanner_id").get<std::string>();
    r.config = j.at("config").get<std::string>();
    r.config_digest = j.at("config_digest").get<std::string>();
    r.status = j.at("status").get<std::string>();
    r.hit_count = j.at("hit_count").get<std::size_t>();
    return r;
}

json to_json(const Assessment& a)
{
    json runs = json::array();
    for (const auto& r : a.searches_run)
        runs.push_back(to_json(r));
    json hits = json::array();
    for (const auto& h : a.hits)
        hits.push_back(to_json(h));
    json cards = json::array();
    for (const auto& c : a.cards) {
        json locs = json::array();
        for (const auto& l : c.locations)
            locs.push_back(to_json(l));
        cards.push_back({{"pan", c.pan}, {"bank_code", c.bank_code}, {"locations", std::move(locs)}});
    }
    return {{"item_id", a.item_id},
            {"searches_run", std::move(runs)},
            {"hits", std::move(hits)},
            {"cards", std::move(cards)},
            {"encryption", a.encryption ? to_json(*a.encryption) : json(nullptr)}};
}

Assessment assessment_from_json(const json& j)
{
    Assessment a;
    a.item_id = j.at("item_id").get<std::string>();
    for (const auto& r : j.at("searches_run"))
        a.searches_run.push_back(search_run_from_json(r));
    for (const auto& h : j.at("hits"))
        a.hits.push_back(hit_from_json(h));
    for (const auto& c : j.at("cards")) {
        CardHit ch{c.at("pan").get<std::string>(), c.at("bank_code").get<std::string>(), {}};
        for (const auto& l : c.at("locations"))
            ch.locations.push_back(location_from_json(l));
        a.cards.push_back(std::move(ch));
    }
    if (!j.at("encryption").is_null())
        a.encryption = encryption_findings_from_json(j.at("encryption"));
    return a;
}

} // namespace dft
