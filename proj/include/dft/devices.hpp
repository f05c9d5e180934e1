#pragma once

#include "dft/hits.hpp"
#include "dft/integrity.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dft {

struct AttachedDeviceRecord {
    std::string vendor_id;  // four hex digits, lowercase
    std::string product_id; // four hex digits, lowercase
    std::optional<std::string> serial;
    std::optional<std::string> first_seen;
    std::string source_line; // "path:line" for log text, "path#index" for records
    Location location;

    bool operator==(const AttachedDeviceRecord&) const = default;
};

/// Kernel-log lines carrying "idVendor=XXXX, idProduct=XXXX" yield one record
/// each. A later "SerialNumber: ..." line from the same USB port fills the
/// serial; a leading ISO-8601 or syslog timestamp fills first_seen.
std::vector<AttachedDeviceRecord> parse_device_log(std::string_view text, const std::string& path);

/// Normalized records: "vendor_id<TAB>product_id<TAB>serial<TAB>first_seen",
/// with "-" for an absent field. Throws scanners.MalformedRecord(index).
std::vector<AttachedDeviceRecord> parse_device_records(std::string_view text, const std::string& path);
std::string format_device_records(const std::vector<AttachedDeviceRecord>& records);

/// Log text in every file of a tree or image, or normalized records.
std::vector<AttachedDeviceRecord> extract_attached_devices(const EvidenceHandle& handle);

std::vector<ArtifactHit> to_artifact_hits(const std::vector<AttachedDeviceRecord>& records);

} // namespace dft
