#include "dft/encryption.hpp"

#include "dft/error.hpp"

#include <boost/regex.hpp>

#include <algorithm>
#include <array>
#include <cstring>

namespace dft {

namespace {

constexpr std::size_t sector = 512;
constexpr std::string_view luks_magic{"LUKS\xba\xbe", 6};
constexpr std::string_view bitlocker_oem{"-FVE-FS-", 8};
constexpr std::size_t bitlocker_offset = 3;

void check_sector(const std::byte* p, std::size_t avail, const Location& loc, std::vector<FdeSignature>& out)
{
    if (avail >= luks_magic.size() && std::memcmp(p, luks_magic.data(), luks_magic.size()) == 0)
        out.push_back({"LUKS", loc});
    if (avail >= bitlocker_offset + bitlocker_oem.size() &&
        std::memcmp(p + bitlocker_offset, bitlocker_oem.data(), bitlocker_oem.size()) == 0)
        out.push_back({"BitLocker", loc});
}

} // namespace

std::string_view to_string(EncryptionSummary s)
{
    switch (s) {
    case EncryptionSummary::none: return "none";
    case EncryptionSummary::possible: return "possible";
    case EncryptionSummary::strong: return "strong";
    }
    return "none";
}

EncryptionSummary parse_encryption_summary(std::string_view text)
{
    if (text == "none")
        return EncryptionSummary::none;
    if (text == "possible")
        return EncryptionSummary::possible;
    if (text == "strong")
        return EncryptionSummary::strong;
    throw Error("scanners.MalformedFindings", "unknown encryption summary: " + std::string(text));
}

std::vector<NamedPattern> default_encryption_programs()
{
    return {
        {"VeraCrypt", "veracrypt"},
        {"TrueCrypt", "truecrypt"},
        {"BitLocker To Go", "bitlockertogo\\.exe$"},
        {"PGP Desktop", "(^|/)pgp ?(desktop|wde|tray)"},
        {"GnuPG", "(^|/)gnupg(/|$)|(^|/)gpg[24]?(\\.exe)?$"},
        {"AxCrypt", "axcrypt"},
        {"DiskCryptor", "diskcryptor|(^|/)dcrypt\\.exe$"},
    };
}

EncryptionFindings detect_encryption_indicators(const EvidenceHandle& handle, const std::vector<NamedPattern>& programs)
{
    EncryptionFindings f;

    std::vector<boost::regex> compiled;
    for (const auto& p : programs) {
        try {
            compiled.emplace_back(p.pattern, boost::regex::extended | boost::regex::icase);
        } catch (const boost::regex_error& e) {
            throw Error("scanners.MalformedPattern", "MalformedPattern(" + p.name + "): " + e.what());
        }
    }

    if (handle.kind() == SourceKind::raw_image) {
        const auto& file = handle.files().front();
        std::vector<std::byte> buf(std::size_t{8} << 20);
        for (std::uint64_t off = 0; off < file.size; off += buf.size()) {
            const auto got = handle.read_at(file, off, buf);
            if (got == 0)
                throw Error("scanners.ReadFailure", "short read at " + file.abs_path.string() + "@" + std::to_string(off));
            for (std::size_t s = 0; s < got; s += sector)
                check_sector(buf.data() + s, got - s, {file.rel_path, off + s, Location::Unit::byte}, f.fde_signatures);
        }
    } else if (handle.kind() == SourceKind::directory_tree) {
        std::array<std::byte, sector> head{};
        for (const auto& file : handle.files()) {
            const auto got = handle.read_at(file, 0, head);
            check_sector(head.data(), got, {file.rel_path, 0, Location::Unit::byte}, f.fde_signatures);
        }
        f.program_list_checked = true;
        for (std::size_t i = 0; i < programs.size(); ++i) {
            const bool seen = std::any_of(handle.files().begin(), handle.files().end(), [&](const SourceFile& file) {
                return boost::regex_search(file.rel_path, compiled[i]);
            });
            if (seen)
                f.suspect_programs.push_back(programs[i].name);
        }
    }

    if (!f.fde_signatures.empty())
        f.summary = EncryptionSummary::strong;
    else if (!f.suspect_programs.empty())
        f.summary = EncryptionSummary::possible;
    handle.check_unchanged();
    return f;
}

std::vector<ArtifactHit> to_artifact_hits(const EncryptionFindings& findings)
{
    std::vector<ArtifactHit> out;
    for (const auto& s : findings.fde_signatures) {
        ArtifactHit h;
        h.kind = ArtifactKind::encryption_indicator;
        h.value = s.name;
        h.location = s.location;
        h.scanner_id = "encryption";
        h.note = "volume signature";
        out.push_back(std::move(h));
    }
    for (std::size_t i = 0; i < findings.suspect_programs.size(); ++i) {
        ArtifactHit h;
        h.kind = ArtifactKind::encryption_indicator;
        h.value = findings.suspect_programs[i];
        h.location = {"", i, Location::Unit::record};
        h.scanner_id = "encryption";
        h.note = "installed program";
        out.push_back(std::move(h));
    }
    return out;
}

nlohmann::json to_json(const EncryptionFindings& f)
{
    nlohmann::json sigs = nlohmann::json::array();
    for (const auto& s : f.fde_signatures)
        sigs.push_back({{"name", s.name}, {"location", to_json(s.location)}});
    return {{"fde_signatures", std::move(sigs)},
            {"suspect_programs", f.suspect_programs},
            {"summary", to_string(f.summary)},
            {"program_list_checked", f.program_list_checked}};
}

EncryptionFindings encryption_findings_from_json(const nlohmann::json& j)
{
    EncryptionFindings f;
    for (const auto& s : j.at("fde_signatures"))
        f.fde_signatures.push_back({s.at("name").get<std::string>(), location_from_json(s.at("location"))});
    f.suspect_programs = j.at("suspect_programs").get<std::vector<std::string>>();
    f.summary = parse_encryption_summary(j.at("summary").get<std::string>());
    f.program_list_checked = j.at("program_list_checked").get<bool>();
    const bool empty = f.fde_signatures.empty() && f.suspect_programs.empty();
    if (empty != (f.summary == EncryptionSummary::none))
        throw Error("scanners.MalformedFindings", "encryption summary disagrees with findings");
    return f;
}

} // namespace dft
