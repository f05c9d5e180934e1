#include "dft/devices.hpp"

#include "dft/error.hpp"
#include "dft/text.hpp"

#include <map>
#include <regex>
#include <sstream>

namespace dft {

namespace {

const std::regex& device_line()
{
    static const std::regex re(R"(idVendor=([0-9A-Fa-f]{4}), idProduct=([0-9A-Fa-f]{4}))");
    return re;
}

const std::regex& serial_line()
{
    static const std::regex re(R"(SerialNumber: *(\S+))");
    return re;
}

// "usb 2-1:" style port token naming the device in kernel messages.
const std::regex& port_token()
{
    static const std::regex re(R"((usb \d+-[\d.]+):)");
    return re;
}

const std::regex& timestamp_prefix()
{
    static const std::regex re(
        R"(^(\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(?:\.\d+)?(?:Z|[+-]\d{2}:?\d{2})?|[A-Z][a-z]{2} +\d{1,2} \d{2}:\d{2}:\d{2}))");
    return re;
}

std::optional<std::string> field_or_absent(std::string_view f)
{
    f = text::trim(f);
    if (f.empty() || f == "-")
        return std::nullopt;
    return std::string(f);
}

bool hex4(std::string_view s)
{
    return s.size() == 4 && text::is_hex(s);
}

} // namespace

namespace {

class DeviceLogParser {
public:
    explicit DeviceLogParser(std::string path) : path_(std::move(path)) {}

    void line(std::string_view line_view, std::uint64_t line_offset)
    {
        ++lineno_;
        if (line_view.find("idVendor=") == std::string_view::npos &&
            line_view.find("SerialNumber") == std::string_view::npos)
            return;
        const std::string line(line_view);
        std::smatch port;
        const bool has_port = std::regex_search(line, port, port_token());

        std::smatch m;
        if (std::regex_search(line, m, device_line())) {
            AttachedDeviceRecord r;
            r.vendor_id = text::to_lower(m[1].str());
            r.product_id = text::to_lower(m[2].str());
            std::smatch ts;
            if (std::regex_search(line, ts, timestamp_prefix()))
                r.first_seen = ts[1].str();
            r.source_line = path_ + ":" + std::to_string(lineno_);
            r.location = {path_, line_offset, Location::Unit::byte};
            if (has_port)
                by_port_[port[1].str()] = out_.size();
            out_.push_back(std::move(r));
        } else if (has_port && std::regex_search(line, m, serial_line())) {
            const auto it = by_port_.find(port[1].str());
            if (it != by_port_.end() && !out_[it->second].serial)
                out_[it->second].serial = m[1].str();
        }
    }

    std::vector<AttachedDeviceRecord> take() { return std::move(out_); }

private:
    std::string path_;
    std::vector<AttachedDeviceRecord> out_;
    std::map<std::string, std::size_t> by_port_;
    std::size_t lineno_ = 0;
};

// Lines longer than this are not log lines; their tail is skipped.
constexpr std::size_t max_line = 64 * 1024;

} // namespace

std::vector<AttachedDeviceRecord> parse_device_log(std::string_view content, const std::string& path)
{
    DeviceLogParser parser(path);
    std::uint64_t offset = 0;
    for (auto line : text::split(content, '\n')) {
        parser.line(line, offset);
        offset += line.size() + 1;
    }
    return parser.take();
}

std::vector<AttachedDeviceRecord> parse_device_records(std::string_view content, const std::string& path)
{
    std::vector<AttachedDeviceRecord> out;
    std::uint64_t index = 0;
    for (auto line : text::lines(content)) {
        if (text::trim(line).empty() || text::trim(line).front() == '#')
            continue;
        const auto fields = text::split(line, '\t');
        if (fields.size() < 2 || fields.size() > 4 || !hex4(text::trim(fields[0])) || !hex4(text::trim(fields[1])))
            throw Error("scanners.MalformedRecord", "MalformedRecord(" + std::to_string(index) + ")");
        AttachedDeviceRecord r;
        r.vendor_id = text::to_lower(text::trim(fields[0]));
        r.product_id = text::to_lower(text::trim(fields[1]));
        if (fields.size() > 2)
            r.serial = field_or_absent(fields[2]);
        if (fields.size() > 3)
            r.first_seen = field_or_absent(fields[3]);
        r.source_line = path + "#" + std::to_string(index);
        r.location = {path, index, Location::Unit::record};
        out.push_back(std::move(r));
        ++index;
    }
    return out;
}

std::string format_device_records(const std::vector<AttachedDeviceRecord>& records)
{
    std::ostringstream out;
    for (const auto& r : records)
        out << r.vendor_id << '\t' << r.product_id << '\t' << r.serial.value_or("-") << '\t'
            << r.first_seen.value_or("-") << '\n';
    return out.str();
}

namespace {

std::vector<AttachedDeviceRecord> stream_device_log(const EvidenceHandle& handle, const SourceFile& f)
{
    DeviceLogParser parser(f.rel_path);
    std::vector<std::byte> buf(std::size_t{4} << 20);
    std::string pending;
    std::uint64_t pending_offset = 0;
    bool skipping = false;
    for (std::uint64_t off = 0; off < f.size;) {
        const auto got = handle.read_at(f, off, buf);
        if (got == 0)
            throw Error("scanners.ReadFailure", "short read at " + f.abs_path.string() + "@" + std::to_string(off));
        const std::string_view chunk(reinterpret_cast<const char*>(buf.data()), got);
        std::size_t pos = 0;
        while (pos < chunk.size()) {
            const auto nl = chunk.find('\n', pos);
            const auto piece = chunk.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
            if (!skipping) {
                pending.append(piece);
                if (pending.size() > max_line) {
                    pending.resize(max_line);
                    skipping = true;
                }
            }
            if (nl == std::string_view::npos)
                break;
            parser.line(pending, pending_offset);
            pending.clear();
            skipping = false;
            pending_offset = off + nl + 1;
            pos = nl + 1;
        }
        off += got;
    }
    if (!pending.empty())
        parser.line(pending, pending_offset);
    return parser.take();
}

} // namespace

std::vector<AttachedDeviceRecord> extract_attached_devices(const EvidenceHandle& handle)
{
    std::vector<AttachedDeviceRecord> out;
    for (const auto& f : handle.files()) {
        auto recs = handle.kind() == SourceKind::artifact_records ? parse_device_records(handle.read_all(f), f.rel_path)
                                                                   : stream_device_log(handle, f);
        out.insert(out.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
    }
    handle.check_unchanged();
    return out;
}

std::vector<ArtifactHit> to_artifact_hits(const std::vector<AttachedDeviceRecord>& records)
{
    std::vector<ArtifactHit> out;
    for (const auto& r : records) {
        ArtifactHit h;
        h.kind = ArtifactKind::attached_device;
        h.value = r.vendor_id + ":" + r.product_id;
        h.location = r.location;
        h.scanner_id = "devices";
        h.note = "serial=" + r.serial.value_or("-") + "; first_seen=" + r.first_seen.value_or("-") +
                 "; source=" + r.source_line;
        out.push_back(std::move(h));
    }
    return out;
}

} // namespace dft
