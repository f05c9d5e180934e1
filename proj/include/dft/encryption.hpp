#pragma once

#include "dft/hits.hpp"
#include "dft/integrity.hpp"
#include "dft/patterns.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace dft {

enum class EncryptionSummary { none, possible, strong };

std::string_view to_string(EncryptionSummary s);
EncryptionSummary parse_encryption_summary(std::string_view text);

struct FdeSignature {
    std::string name; // "LUKS" or "BitLocker"
    Location location;

    bool operator==(const FdeSignature&) const = default;
};

/// summary is none iff both lists are empty, strong if any volume signature
/// was seen, possible if only program names matched.
struct EncryptionFindings {
    std::vector<FdeSignature> fde_signatures;
    std::vector<std::string> suspect_programs;
    EncryptionSummary summary = EncryptionSummary::none;
    bool program_list_checked = false; // only tree sources expose program paths

    bool operator==(const EncryptionFindings&) const = default;
};

/// Program list: "name<TAB>pattern" lines where pattern is a case-insensitive
/// POSIX extended expression matched against relative paths.
std::vector<NamedPattern> default_encryption_programs();

EncryptionFindings detect_encryption_indicators(const EvidenceHandle& handle,
                                                const std::vector<NamedPattern>& programs = default_encryption_programs());

std::vector<ArtifactHit> to_artifact_hits(const EncryptionFindings& findings);

nlohmann::json to_json(const EncryptionFindings& f);
EncryptionFindings encryption_findings_from_json(const nlohmann::json& j);

} // namespace dft
