#include "dft/report.hpp"

#include "dft/error.hpp"

#include <algorithm>
#include <sstream>

namespace dft {

using nlohmann::json;

namespace {

constexpr std::string_view embed_open = "<!-- obsreport\n";
constexpr std::string_view embed_close = "-->\n";

void expect_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where)
{
    if (!j.is_object())
        throw Error("report.InvalidReport", where + ": expected an object");
    std::set<std::string> want(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items())
        if (!want.count(k))
            throw Error("report.InvalidReport", where + ": unexpected field " + k);
    for (const auto& k : want)
        if (!j.contains(k))
            throw Error("report.InvalidReport", where + ": missing field " + k);
}

json section_json(const ItemSection& s)
{
    json runs = json::array();
    for (const auto& r : s.searches_run)
        runs.push_back(to_json(r));
    json hits = json::array();
    for (const auto& h : s.hits)
        hits.push_back(to_json(h));
    return {{"item_id", s.item_id},
            {"description", s.description},
            {"manifest", s.manifest},
            {"manifest_digest", s.manifest_digest},
            {"searches_run", std::move(runs)},
            {"hits", std::move(hits)},
            {"encryption", s.encryption ? to_json(*s.encryption) : json(nullptr)},
            {"checklist", to_json(s.checklist)}};
}

ItemSection section_from_json(const json& j)
{
    expect_keys(j, {"item_id", "description", "manifest", "manifest_digest", "searches_run", "hits", "encryption",
                    "checklist"},
                "item");
    ItemSection s;
    s.item_id = j.at("item_id").get<std::string>();
    s.description = j.at("description").get<std::string>();
    s.manifest = j.at("manifest").get<std::string>();
    s.manifest_digest = j.at("manifest_digest").get<std::string>();
    for (const auto& r : j.at("searches_run"))
        s.searches_run.push_back(search_run_from_json(r));
    for (const auto& h : j.at("hits"))
        s.hits.push_back(hit_from_json(h));
    if (!j.at("encryption").is_null())
        s.encryption = encryption_findings_from_json(j.at("encryption"));
    s.checklist = checklist_from_json(j.at("checklist"));
    return s;
}

std::string md_escape(std::string_view s)
{
    std::string out;
    for (char c : s) {
        if (c == '|' || c == '\\')
            out += '\\';
        out += (c == '\n' || c == '\t') ? ' ' : c;
    }
    return out;
}

std::string render_readable(const ObservationReport& r)
{
    std::ostringstream o;
    o << "# Observation Report " << r.dft_file_number << "\n\n"
      << "- Case: " << r.case_id << "\n"
      << "- Member: " << r.member_id << "\n"
      << "- Crime type: " << r.crime_type << "\n"
      << "- Created: " << r.created_at << "\n\n"
      << "This report lists the searches run and the artifacts observed. It is not an analysis.\n\n";

    for (const auto& s : r.items) {
        o << "## Item " << s.item_id;
        if (!s.description.empty())
            o << ": " << md_escape(s.description);
        o << "\n\n"
          << "Manifest: `" << s.manifest << "` (SHA-256 " << s.manifest_digest << ")\n\n"
          << "### Searches run\n\n"
          << "| scanner | config | status | hits | config SHA-256 |\n"
          << "|---|---|---|---|---|\n";
        for (const auto& run : s.searches_run)
            o << "| " << run.scanner_id << " | " << md_escape(run.config.empty() ? "-" : run.config) << " | "
              << run.status << " | " << run.hit_count << " | " << run.config_digest << " |\n";

        const auto flagged = std::count_if(s.hits.begin(), s.hits.end(), [](const ArtifactHit& h) { return h.flagged; });
        o << "\n### Observed artifacts (" << s.hits.size() << ", " << flagged << " flagged)\n\n";
        if (s.hits.empty()) {
            o << "None observed.\n";
        } else {
            o << "| flag | kind | value | location | note |\n|---|---|---|---|---|\n";
            for (const auto& h : s.hits)
                o << "| " << (h.flagged ? "FLAGGED" : (h.salient ? "salient" : "")) << " | " << to_string(h.kind)
                  << " | " << md_escape(h.value) << " | " << md_escape(hit_ref(s.item_id, h)) << " | "
                  << md_escape(h.note) << " |\n";
        }

        o << "\n### Encryption findings\n\n";
        if (!s.encryption) {
            o << "Not checked.\n";
        } else {
            o << "Summary: " << to_string(s.encryption->summary) << "\n";
            for (const auto& f : s.encryption->fde_signatures)
                o << "- volume signature " << f.name << " at offset " << f.location.offset
                  << (f.location.path.empty() ? "" : " in " + f.location.path) << "\n";
            for (const auto& p : s.encryption->suspect_programs)
                o << "- program " << md_escape(p) << "\n";
        }

        o << "\n### Absence-of-evidence checklist\n\n";
        for (const auto& row : s.checklist.rows)
            o << "- " << row.question << ": " << to_string(row.answer)
              << (row.detail.empty() ? "" : " (" + md_escape(row.detail) + ")") << "\n";
        o << "\n";
    }

    o << "## Notes\n\n" << (r.notes.empty() ? "None." : r.notes) << "\n\n";
    o << "## Threshold decisions\n\n";
    if (r.threshold_decisions.empty())
        o << "None recorded.\n";
    for (const auto& d : r.threshold_decisions) {
        o << "- " << d.item_id << ": " << to_string(d.decision) << " by " << d.decided_by << " at " << d.decided_at
          << "\n";
        for (const auto& b : d.basis)
            o << "  - " << md_escape(b) << "\n";
    }
    o << "\n" << embed_open << to_json(r).dump(2) << "\n" << embed_close;
    return o.str();
}

} // namespace

ObservationReport build_report(const ReportInputs& in, const Clock& clock)
{
    ObservationReport r;
    r.dft_file_number = in.dft_file_number;
    r.case_id = in.case_description.case_id;
    r.member_id = in.member_id;
    r.crime_type = std::string(to_string(in.profile.crime_type));
    r.notes = in.notes;
    r.created_at = format_utc(clock());

    std::map<std::string, const EvidenceItem*> items;
    for (const auto& i : in.case_description.items)
        items[i.item_id] = &i;

    std::set<std::string> unused_flags = in.flags;
    for (const auto& a : in.assessments) {
        const auto m = in.manifests.find(a.item_id);
        if (m == in.manifests.end())
            throw Error("report.MissingManifest", "MissingManifest(" + a.item_id + ")");
        ItemSection s;
        s.item_id = a.item_id;
        s.manifest = m->second.file;
        s.manifest_digest = m->second.digest;
        s.searches_run = a.searches_run;
        s.hits = a.hits;
        sort_hits(s.hits);
        s.encryption = a.encryption;
        EvidenceItem fallback;
        fallback.item_id = a.item_id;
        const auto it = items.find(a.item_id);
        const auto& item = it != items.end() ? *it->second : fallback;
        s.description = item.description;
        s.checklist = absence_checklist(item, a.encryption, in.profile);
        for (auto& h : s.hits) {
            const auto ref = hit_ref(a.item_id, h);
            h.flagged = in.flags.count(ref) > 0;
            unused_flags.erase(ref);
        }
        r.items.push_back(std::move(s));
    }
    if (!unused_flags.empty())
        throw Error("report.UnknownFlagReference", "UnknownFlagReference(" + *unused_flags.begin() + ")");

    std::sort(r.items.begin(), r.items.end(),
              [](const ItemSection& a, const ItemSection& b) { return a.item_id < b.item_id; });
    r.threshold_decisions = in.threshold_decisions;
    std::sort(r.threshold_decisions.begin(), r.threshold_decisions.end(),
              [](const ThresholdDecision& a, const ThresholdDecision& b) { return a.item_id < b.item_id; });
    return r;
}

std::vector<std::string> validate_report(const ObservationReport& r)
{
    std::vector<std::string> errors;
    if (r.schema_version != report_schema_version)
        errors.push_back("unsupported schema_version " + std::to_string(r.schema_version));
    if (r.dft_file_number.empty())
        errors.push_back("missing dft_file_number");

    std::set<std::string> item_ids;
    std::set<std::string> refs;
    for (const auto& s : r.items) {
        if (!item_ids.insert(s.item_id).second)
            errors.push_back("item " + s.item_id + ": appears more than once");
        if (s.searches_run.empty())
            errors.push_back("item " + s.item_id + ": missing searches_run");
        if (s.manifest_digest.empty())
            errors.push_back("item " + s.item_id + ": missing manifest");
        if (s.checklist.item_id != s.item_id)
            errors.push_back("item " + s.item_id + ": checklist belongs to " + s.checklist.item_id);
        for (const auto& h : s.hits)
            if (!refs.insert(hit_ref(s.item_id, h)).second && h.flagged)
                errors.push_back("item " + s.item_id + ": flagged hit listed twice: " + hit_ref(s.item_id, h));
    }
    for (const auto& d : r.threshold_decisions) {
        if (!item_ids.count(d.item_id))
            errors.push_back("threshold decision for unknown item " + d.item_id);
        for (const auto& b : d.basis) {
            if (b.rfind("checklist:", 0) == 0)
                continue;
            const auto item = b.substr(0, b.find('#'));
            if (!item_ids.count(item))
                errors.push_back("hit reference to unknown item " + item + ": " + b);
            else if (!refs.count(b))
                errors.push_back("hit reference not in report: " + b);
        }
        if (d.decision == Decision::meets &&
            std::none_of(d.basis.begin(), d.basis.end(), [](const std::string& b) { return b.rfind("checklist:", 0) != 0; }))
            errors.push_back("item " + d.item_id + ": meets decision without a basis hit");
        if (d.decision == Decision::forward_despite_no_findings &&
            std::none_of(d.basis.begin(), d.basis.end(), [](const std::string& b) { return b.rfind("checklist:", 0) == 0; }))
            errors.push_back("item " + d.item_id + ": forward decision without a checklist basis");
    }
    return errors;
}

ReportFormat parse_report_format(std::string_view text)
{
    if (text == "structured")
        return ReportFormat::structured;
    if (text == "readable")
        return ReportFormat::readable;
    throw Error("cli.InvalidArgument", "format must be structured or readable: " + std::string(text));
}

std::string render_report(const ObservationReport& r, ReportFormat format)
{
    const auto errors = validate_report(r);
    if (!errors.empty())
        throw Error("report.InvalidReport", "InvalidReport(" + errors.front() + ")");
    if (format == ReportFormat::structured)
        return to_json(r).dump(2) + "\n";
    return render_readable(r);
}

ObservationReport parse_report(std::string_view text)
{
    std::string_view body = text;
    if (const auto start = text.find(embed_open); start != std::string_view::npos) {
        body = text.substr(start + embed_open.size());
        const auto end = body.rfind(embed_close);
        if (end == std::string_view::npos)
            throw Error("report.InvalidReport", "unterminated embedded report");
        body = body.substr(0, end);
    }
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        throw Error("report.InvalidReport", std::string("not a report: ") + e.what());
    }
    try {
        return report_from_json(j);
    } catch (const json::exception& e) {
        throw Error("report.InvalidReport", e.what());
    }
}

std::string report_core(const ObservationReport& r)
{
    auto j = to_json(r);
    j.erase("created_at");
    for (auto& d : j.at("threshold_decisions"))
        d.erase("decided_at");
    return j.dump();
}

json to_json(const ObservationReport& r)
{
    json items = json::array();
    for (const auto& s : r.items)
        items.push_back(section_json(s));
    json decisions = json::array();
    for (const auto& d : r.threshold_decisions)
        decisions.push_back(to_json(d));
    return {{"schema_version", r.schema_version},
            {"dft_file_number", r.dft_file_number},
            {"case_id", r.case_id},
            {"member_id", r.member_id},
            {"crime_type", r.crime_type},
            {"items", std::move(items)},
            {"notes", r.notes},
            {"threshold_decisions", std::move(decisions)},
            {"created_at", r.created_at}};
}

ObservationReport report_from_json(const json& j)
{
    expect_keys(j, {"schema_version", "dft_file_number", "case_id", "member_id", "crime_type", "items", "notes",
                    "threshold_decisions", "created_at"},
                "report");
    ObservationReport r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != report_schema_version)
        throw Error("report.InvalidReport", "unsupported schema_version " + std::to_string(r.schema_version));
    r.dft_file_number = j.at("dft_file_number").get<std::string>();
    r.case_id = j.at("case_id").get<std::string>();
    r.member_id = j.at("member_id").get<std::string>();
    r.crime_type = j.at("crime_type").get<std::string>();
    for (const auto& s : j.at("items"))
        r.items.push_back(section_from_json(s));
    r.notes = j.at("notes").get<std::string>();
    for (const auto& d : j.at("threshold_decisions")) {
        expect_keys(d, {"item_id", "decision", "basis", "decided_by", "decided_at"}, "threshold decision");
        r.threshold_decisions.push_back(threshold_decision_from_json(d));
    }
    r.created_at = j.at("created_at").get<std::string>();
    return r;
}

} // namespace dft
