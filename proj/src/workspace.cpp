#include "dft/workspace.hpp"

#include "dft/cards.hpp"
#include "dft/error.hpp"
#include "dft/sha256.hpp"
#include "dft/text.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <sstream>

namespace dft {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* settings_file = "workspace.json";

std::string actor_of(const Workspace::Settings& s)
{
    return s.member_id.empty() ? "unassigned" : s.member_id;
}

void check_item_id(const std::string& id)
{
    const bool ok = !id.empty() && std::all_of(id.begin(), id.end(), [](unsigned char c) {
        return std::isalnum(c) || c == '-' || c == '_' || c == '.';
    }) && id != "." && id != "..";
    if (!ok)
        throw Error("cli.InvalidArgument", "item ids use letters, digits, '-', '_' and '.': " + id);
}

} // namespace

EvidenceSpec parse_evidence_spec(std::string_view text, std::size_t position)
{
    EvidenceSpec e;
    std::string rest(text);
    if (const auto eq = rest.find('='); eq != std::string::npos) {
        e.item_id = rest.substr(0, eq);
        rest = rest.substr(eq + 1);
    } else {
        e.item_id = "E" + std::to_string(position + 1);
    }
    std::optional<SourceKind> kind;
    if (const auto hash = rest.rfind('#'); hash != std::string::npos) {
        kind = parse_source_kind(rest.substr(hash + 1));
        rest = rest.substr(0, hash);
    }
    check_item_id(e.item_id);
    if (rest.empty())
        throw Error("cli.InvalidArgument", "evidence path is empty");
    e.path = fs::absolute(rest).lexically_normal();
    if (kind)
        e.kind = *kind;
    else if (fs::is_directory(e.path))
        e.kind = SourceKind::directory_tree;
    else if (e.path.extension() == ".tsv")
        e.kind = SourceKind::artifact_records;
    else
        e.kind = SourceKind::raw_image;
    return e;
}

WorkspaceLock::WorkspaceLock(const fs::path& dir) : path_(dir / ".lock")
{
    const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0)
        throw Error("cli.WorkspaceLocked", "another process holds " + path_.string());
    const auto pid = std::to_string(::getpid()) + "\n";
    [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
    ::close(fd);
}

WorkspaceLock::~WorkspaceLock()
{
    std::error_code ec;
    fs::remove(path_, ec);
}

json to_json(const Workspace::Settings& s)
{
    json evidence = json::array();
    for (const auto& e : s.evidence)
        evidence.push_back({{"item_id", e.item_id}, {"path", e.path.string()}, {"kind", to_string(e.kind)}});
    return {{"case_id", s.case_id},
            {"dft_file_number", s.dft_file_number},
            {"member_id", s.member_id},
            {"profile", s.profile},
            {"evidence", std::move(evidence)}};
}

Workspace::Settings workspace_settings_from_json(const json& j)
{
    Workspace::Settings s;
    s.case_id = j.at("case_id").get<std::string>();
    s.dft_file_number = j.at("dft_file_number").get<std::string>();
    s.member_id = j.at("member_id").get<std::string>();
    s.profile = j.at("profile").get<std::string>();
    for (const auto& e : j.at("evidence"))
        s.evidence.push_back({e.at("item_id").get<std::string>(), e.at("path").get<std::string>(),
                              parse_source_kind(e.at("kind").get<std::string>())});
    return s;
}

std::string format_rank(const std::vector<EvidenceItem>& ranked)
{
    std::ostringstream o;
    o << "rank\titem_id\tpriority\towner_relation\towner_prior\tdevice_class\tattached_to\tassessed\n";
    char score[32];
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        const auto& e = ranked[i];
        std::snprintf(score, sizeof score, "%.4f", e.priority);
        o << i + 1 << '\t' << e.item_id << '\t' << score << '\t' << to_string(e.owner_relation) << '\t'
          << to_string(e.owner_prior) << '\t' << to_string(e.device_class) << '\t'
          << (e.attached_to ? *e.attached_to : "-") << '\t' << (e.assessed ? "yes" : "no") << '\n';
    }
    return o.str();
}

Workspace::Workspace(fs::path dir, Settings settings) : dir_(std::move(dir)), settings_(std::move(settings))
{
    profile_ = parse_profile(text::read_file(path("profile.txt").string()));
    case_ = parse_case(text::read_file(path("case.txt").string()));
    audit_ = std::make_shared<AuditLog>(path("audit.log"));
}

bool Workspace::exists(const fs::path& dir)
{
    return fs::is_regular_file(dir / settings_file);
}

Workspace Workspace::open(const fs::path& dir)
{
    if (!exists(dir))
        throw Error("cli.NoWorkspace", "no workspace at " + dir.string() + "; run open first");
    const auto j = json::parse(text::read_file((dir / settings_file).string()));
    return Workspace(dir, workspace_settings_from_json(j));
}

Workspace Workspace::create(const fs::path& dir, Settings s, const ManifestOptions& manifest_options)
{
    if (s.evidence.empty())
        throw Error("cli.InvalidArgument", "at least one --evidence is required");
    std::set<std::string> ids;
    for (const auto& e : s.evidence)
        if (!ids.insert(e.item_id).second)
            throw Error("cli.InvalidArgument", "evidence item listed twice: " + e.item_id);

    CaseDescription description;
    if (s.case_description) {
        description = *s.case_description;
        if (!s.case_id.empty() && s.case_id != description.case_id)
            throw Error("cli.InvalidArgument", "case id " + s.case_id + " differs from the case file's " +
                                                   description.case_id);
        s.case_id = description.case_id;
        for (const auto& e : s.evidence)
            if (std::none_of(description.items.begin(), description.items.end(),
                             [&](const EvidenceItem& i) { return i.item_id == e.item_id; }))
                throw Error("cli.InvalidArgument", "evidence " + e.item_id + " is not an item of case " + s.case_id);
    } else {
        description.case_id = s.case_id.empty() ? "case" : s.case_id;
        s.case_id = description.case_id;
        for (const auto& e : s.evidence) {
            EvidenceItem item;
            item.item_id = e.item_id;
            item.description = e.path.filename().string();
            description.items.push_back(item);
        }
    }

    if (fs::is_regular_file(s.profile))
        s.profile = fs::absolute(s.profile).lexically_normal().string();
    const auto profile = load_profile(s.profile);
    if (const auto errors = validate_profile(profile); !errors.empty())
        throw Error("profiles.InvalidProfile", "InvalidProfile(" + errors.front() + ")");

    if (exists(dir)) {
        auto existing = open(dir);
        const auto same = to_json(existing.settings_) == to_json(Settings{s.case_id, s.dft_file_number, s.member_id,
                                                                         s.profile, s.evidence, std::nullopt}) &&
                          format_case(existing.case_) == format_case(description);
        if (!same)
            throw Error("cli.WorkspaceExists", "workspace " + dir.string() + " was opened with other settings");
        return existing;
    }

    fs::create_directories(dir);
    WorkspaceLock lock(dir);
    text::write_file_atomic((dir / "profile.txt").string(), format_profile(profile));
    text::write_file_atomic((dir / "case.txt").string(), format_case(description));
    text::write_file_atomic((dir / settings_file).string(), to_json(Settings{s.case_id, s.dft_file_number, s.member_id,
                                                                             s.profile, s.evidence, std::nullopt})
                                                                    .dump(2) + "\n");
    Workspace ws(dir, s);
    ws.settings_.case_description.reset();
    const auto audit = ws.audit_context();
    audit.emit("open_case", {{"case_id", s.case_id}, {"dft_file_number", s.dft_file_number}, {"profile", s.profile}});
    for (const auto& e : s.evidence) {
        const auto handle = open_evidence(e.path, e.kind);
        audit.emit("open_evidence", {{"item", e.item_id},
                                     {"path", e.path.string()},
                                     {"kind", std::string(to_string(e.kind))},
                                     {"length", std::to_string(handle.length())}});
        const auto m = compute_manifest(handle, manifest_options);
        const auto text = format_manifest(m);
        ws.write("manifests/" + e.item_id + ".manifest", text);
        audit.emit("compute_manifest", {{"item", e.item_id}, {"entries", std::to_string(m.entries.size())},
                                        {"manifest_sha256", sha256_hex(text)}});
    }
    return ws;
}

AuditContext Workspace::audit_context() const
{
    return AuditContext(*audit_, actor_of(settings_));
}

void Workspace::write(const std::string& rel, const std::string& content) const
{
    const auto p = path(rel);
    fs::create_directories(p.parent_path());
    text::write_file_atomic(p.string(), content);
}

std::vector<std::string> Workspace::assessed_ids() const
{
    std::vector<std::string> out;
    for (const auto& e : settings_.evidence)
        if (fs::exists(path("hits/" + e.item_id + ".json")))
            out.push_back(e.item_id);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<Assessment> Workspace::scan(const std::vector<std::string>& items, ScanSettings settings)
{
    if (settings.config_dir == "." && fs::is_regular_file(settings_.profile))
        settings.config_dir = fs::path(settings_.profile).parent_path();
    WorkspaceLock lock(dir_);
    const auto audit = audit_context();
    std::vector<Assessment> out;
    for (const auto& e : settings_.evidence) {
        if (!items.empty() && std::find(items.begin(), items.end(), e.item_id) == items.end())
            continue;
        const auto manifest = parse_manifest(text::read_file(path("manifests/" + e.item_id + ".manifest").string()));
        const auto handle = open_evidence(e.path, e.kind);
        const auto before = verify_manifest(handle, manifest);
        audit.emit("verify_manifest", {{"item", e.item_id}, {"mismatches", std::to_string(before.mismatches.size())}});
        if (!before.ok())
            throw Error("integrity.IntegrityViolation", "item " + e.item_id + " no longer matches its manifest (" +
                                                            before.mismatches.front().label + ")");

        auto a = run_profile(e.item_id, handle, profile_, audit, settings);
        handle.check_unchanged();

        write("hits/" + e.item_id + ".json", to_json(a).dump(2) + "\n");
        write("hits/" + e.item_id + ".tsv", format_hits_tsv(a.hits));
        if (std::any_of(profile_.scanners.begin(), profile_.scanners.end(),
                        [](const ScannerSpec& s) { return s.id == "cards"; }))
            write("hits/" + e.item_id + ".cards.tsv", format_bank_code_groups(sort_by_bank_code(a.cards)));

        const auto after = verify_manifest(handle, manifest);
        audit.emit("verify_manifest", {{"item", e.item_id}, {"mismatches", std::to_string(after.mismatches.size())}});
        if (!after.ok())
            throw Error("integrity.IntegrityViolation", "item " + e.item_id + " changed during the scan");
        out.push_back(std::move(a));
    }
    if (!items.empty() && out.size() != items.size())
        throw Error("cli.InvalidArgument", "unknown item among the requested ones");
    return out;
}

std::optional<Assessment> Workspace::assessment(const std::string& item_id) const
{
    const auto p = path("hits/" + item_id + ".json");
    if (!fs::exists(p))
        return std::nullopt;
    return assessment_from_json(json::parse(text::read_file(p.string())));
}

std::vector<Assessment> Workspace::assessments() const
{
    std::vector<Assessment> out;
    for (const auto& id : assessed_ids())
        out.push_back(*assessment(id));
    return out;
}

namespace {

std::vector<EvidenceItem> ranked_items(const CaseDescription& c, const SearchProfile& p,
                                       const std::vector<std::string>& assessed)
{
    auto items = c.items;
    for (auto& i : items)
        i.assessed = std::find(assessed.begin(), assessed.end(), i.item_id) != assessed.end();
    return propagate_attachment_priority(rank_evidence(items, p), p);
}

} // namespace

std::vector<EvidenceItem> Workspace::rank()
{
    WorkspaceLock lock(dir_);
    const auto ranked = ranked_items(case_, profile_, assessed_ids());
    write("rank.tsv", format_rank(ranked));
    const auto audit = audit_context();
    audit.emit("rank_evidence", {{"items", std::to_string(ranked.size())}});
    audit.emit("propagate_attachment_priority", {{"top", ranked.empty() ? "" : ranked.front().item_id}});
    return ranked;
}

EvidenceItem Workspace::item(const std::string& item_id) const
{
    for (const auto& i : ranked_items(case_, profile_, assessed_ids()))
        if (i.item_id == item_id)
            return i;
    throw Error("cli.InvalidArgument", "no item " + item_id + " in case " + case_.case_id);
}

std::set<std::string> Workspace::flags() const
{
    const auto p = path("flags.json");
    if (!fs::exists(p))
        return {};
    return json::parse(text::read_file(p.string())).get<std::set<std::string>>();
}

std::set<std::string> Workspace::set_flag(const std::string& ref, bool flagged)
{
    WorkspaceLock lock(dir_);
    bool known = false;
    for (const auto& a : assessments())
        for (const auto& h : a.hits)
            known = known || hit_ref(a.item_id, h) == ref;
    if (!known)
        throw Error("console.StaleHitReference", "StaleHitReference(" + ref + ")");
    auto f = flags();
    if (flagged)
        f.insert(ref);
    else
        f.erase(ref);
    write("flags.json", json(f).dump(2) + "\n");
    audit_context().emit(flagged ? "flag_hit" : "unflag_hit", {{"hit", ref}});
    return f;
}

std::string Workspace::notes() const
{
    const auto p = path("notes.txt");
    return fs::exists(p) ? text::read_file(p.string()) : std::string();
}

void Workspace::set_notes(const std::string& notes)
{
    WorkspaceLock lock(dir_);
    write("notes.txt", notes);
    audit_context().emit("record_notes", {{"sha256", sha256_hex(notes)}, {"bytes", std::to_string(notes.size())}});
}

std::vector<ThresholdDecision> Workspace::threshold(const std::vector<std::string>& items, const Clock& clock)
{
    WorkspaceLock lock(dir_);
    std::vector<ThresholdDecision> out;
    for (const auto& id : items.empty() ? assessed_ids() : items) {
        const auto a = assessment(id);
        if (!a)
            throw Error("triage.AssessmentIncomplete", "item " + id + " has not been scanned");
        auto d = evaluate_threshold(*a, item(id), profile_, actor_of(settings_), clock);
        write("threshold/" + id + ".json", to_json(d).dump(2) + "\n");
        audit_context().emit("evaluate_threshold", {{"item", id}, {"decision", std::string(to_string(d.decision))}});
        out.push_back(std::move(d));
    }
    return out;
}

ThresholdDecision Workspace::decide(const std::string& item_id, Decision requested, const Clock& clock)
{
    WorkspaceLock lock(dir_);
    const auto a = assessment(item_id);
    if (!a)
        throw Error("triage.AssessmentIncomplete", "item " + item_id + " has not been scanned");
    auto d = confirm_threshold(*a, item(item_id), profile_, actor_of(settings_), requested, clock);
    write("threshold/" + item_id + ".json", to_json(d).dump(2) + "\n");
    audit_context().emit("record_threshold_decision",
                         {{"item", item_id}, {"decision", std::string(to_string(d.decision))}});
    return d;
}

std::vector<ThresholdDecision> Workspace::decisions() const
{
    std::vector<ThresholdDecision> out;
    for (const auto& e : settings_.evidence) {
        const auto p = path("threshold/" + e.item_id + ".json");
        if (fs::exists(p))
            out.push_back(threshold_decision_from_json(json::parse(text::read_file(p.string()))));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.item_id < b.item_id; });
    return out;
}

std::vector<ChecklistResult> Workspace::checklists() const
{
    std::vector<ChecklistResult> out;
    for (const auto& a : assessments())
        out.push_back(absence_checklist(item(a.item_id), a.encryption, profile_));
    return out;
}

ObservationReport Workspace::report(const Clock& clock)
{
    if (settings_.dft_file_number.empty())
        throw Error("report.MissingFileNumber", "the workspace has no DFT file number; open it with --member and a coordinator");
    WorkspaceLock lock(dir_);
    ReportInputs in;
    in.dft_file_number = settings_.dft_file_number;
    in.member_id = settings_.member_id;
    in.case_description = case_;
    in.profile = profile_;
    in.assessments = assessments();
    for (const auto& a : in.assessments) {
        const auto rel = "manifests/" + a.item_id + ".manifest";
        if (!fs::exists(path(rel)))
            throw Error("report.MissingManifest", "MissingManifest(" + a.item_id + ")");
        in.manifests[a.item_id] = {rel, sha256_hex(text::read_file(path(rel).string()))};
    }
    in.flags = flags();
    in.notes = notes();
    in.threshold_decisions = decisions();

    const auto r = build_report(in, clock);
    write("report.obsreport", render_report(r, ReportFormat::structured));
    write("report.md", render_report(r, ReportFormat::readable));
    audit_context().emit("build_report", {{"items", std::to_string(r.items.size())},
                                          {"core_sha256", sha256_hex(report_core(r))}});
    return r;
}

std::optional<ObservationReport> Workspace::stored_report() const
{
    const auto p = path("report.obsreport");
    if (!fs::exists(p))
        return std::nullopt;
    return parse_report(text::read_file(p.string()));
}

std::vector<VerifyOutcome> Workspace::verify()
{
    WorkspaceLock lock(dir_);
    std::vector<VerifyOutcome> out;
    for (const auto& e : settings_.evidence) {
        const auto manifest = parse_manifest(text::read_file(path("manifests/" + e.item_id + ".manifest").string()));
        const auto r = verify_manifest(open_evidence(e.path, e.kind), manifest);
        audit_context().emit("verify_manifest", {{"item", e.item_id}, {"mismatches", std::to_string(r.mismatches.size())}});
        out.push_back({e.item_id, r});
    }
    return out;
}

json Workspace::view() const
{
    const auto f = flags();
    const auto ds = decisions();
    json items = json::array();
    for (const auto& i : ranked_items(case_, profile_, assessed_ids())) {
        auto j = to_json(i);
        const auto a = assessment(i.item_id);
        if (a) {
            json hits = json::array();
            for (auto h : a->hits) {
                h.flagged = f.count(hit_ref(i.item_id, h)) > 0;
                auto hj = to_json(h);
                hj["ref"] = hit_ref(i.item_id, h);
                hits.push_back(std::move(hj));
            }
            json runs = json::array();
            for (const auto& r : a->searches_run)
                runs.push_back(to_json(r));
            j["searches_run"] = std::move(runs);
            j["hits"] = std::move(hits);
            j["encryption"] = a->encryption ? to_json(*a->encryption) : json(nullptr);
            j["checklist"] = to_json(absence_checklist(i, a->encryption, profile_));
        } else {
            j["searches_run"] = json::array();
            j["hits"] = json::array();
            j["encryption"] = nullptr;
            j["checklist"] = to_json(absence_checklist(i, std::nullopt, profile_));
        }
        j["decision"] = nullptr;
        for (const auto& d : ds)
            if (d.item_id == i.item_id)
                j["decision"] = to_json(d);
        items.push_back(std::move(j));
    }
    const auto r = stored_report();
    return {{"case_id", case_.case_id},
            {"dft_file_number", settings_.dft_file_number},
            {"member_id", settings_.member_id},
            {"crime_type", to_string(profile_.crime_type)},
            {"items", std::move(items)},
            {"flags", f},
            {"notes", notes()},
            {"report", r ? to_json(*r) : json(nullptr)}};
}

} // namespace dft
