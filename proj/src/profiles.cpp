#include "dft/profiles.hpp"

#include "dft/error.hpp"
#include "dft/text.hpp"

#include <boost/regex.hpp>

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

namespace dft {

namespace detail {
std::string builtin_profile_source(const std::string& name);
}

std::string_view to_string(CrimeType t)
{
    switch (t) {
    case CrimeType::fraud: return "fraud";
    case CrimeType::identity_theft: return "identity_theft";
    case CrimeType::child_exploitation: return "child_exploitation";
    case CrimeType::stolen_property: return "stolen_property";
    case CrimeType::generic: return "generic";
    }
    return "generic";
}

CrimeType parse_crime_type(std::string_view text)
{
    for (auto t : {CrimeType::fraud, CrimeType::identity_theft, CrimeType::child_exploitation,
                   CrimeType::stolen_property, CrimeType::generic})
        if (to_string(t) == text)
            return t;
    throw Error("profiles.UnknownCrimeType", "unknown crime type: " + std::string(text));
}

const std::vector<std::string>& known_scanner_ids()
{
    static const std::vector<std::string> ids = {"cards", "email", "identity", "patterns",
                                                 "media", "encryption", "devices"};
    return ids;
}

std::vector<ArtifactKind> kinds_produced_by(std::string_view id)
{
    if (id == "cards")
        return {ArtifactKind::card_number};
    if (id == "email")
        return {ArtifactKind::email};
    if (id == "identity" || id == "patterns")
        return {ArtifactKind::id_pattern};
    if (id == "media")
        return {ArtifactKind::media_file};
    if (id == "encryption")
        return {ArtifactKind::encryption_indicator};
    if (id == "devices")
        return {ArtifactKind::attached_device};
    return {};
}

SearchProfile parse_profile(std::string_view content)
{
    SearchProfile p;
    std::vector<std::string> problems;
    std::string section;
    bool saw_type = false;
    std::size_t lineno = 0;
    for (auto raw : text::lines(content)) {
        ++lineno;
        const auto line = text::trim(raw);
        if (line.empty() || line.front() == '#')
            continue;
        const auto where = "line " + std::to_string(lineno) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']') {
                problems.push_back(where + "unterminated section header");
                continue;
            }
            section = std::string(line.substr(1, line.size() - 2));
            if (section != "scanners" && section != "salience" && section != "threshold" && section != "weights")
                problems.push_back(where + "unknown section [" + section + "]");
            continue;
        }
        if (section.empty()) {
            const auto eq = line.find('=');
            if (eq == std::string_view::npos || text::trim(line.substr(0, eq)) != "crime_type") {
                problems.push_back(where + "expected crime_type = <type>");
                continue;
            }
            try {
                p.crime_type = parse_crime_type(text::trim(line.substr(eq + 1)));
                saw_type = true;
            } catch (const Error& e) {
                problems.push_back(where + e.what());
            }
            continue;
        }
        // Entries are "<word>" or "<word><TAB><argument>".
        const auto tab = line.find('\t');
        const auto head = std::string(text::trim(line.substr(0, tab)));
        const auto arg = tab == std::string_view::npos ? std::string{} : std::string(text::trim(line.substr(tab + 1)));
        try {
            if (section == "scanners") {
                p.scanners.push_back({head, arg});
            } else if (section == "salience") {
                p.salience_rules.push_back({parse_artifact_kind(head), arg});
            } else if (section == "threshold") {
                p.threshold_targets.push_back(parse_artifact_kind(head));
            } else if (section == "weights") {
                const auto eq = line.find('=');
                const auto value = eq == std::string_view::npos ? std::nullopt
                                                                : text::parse_double(text::trim(line.substr(eq + 1)));
                if (!value) {
                    problems.push_back(where + "expected <name> = <number>");
                    continue;
                }
                p.weights[std::string(text::trim(line.substr(0, eq)))] = *value;
            }
        } catch (const Error& e) {
            problems.push_back(where + e.what());
        }
    }
    if (!saw_type)
        problems.push_back("missing crime_type");
    auto violations = validate_profile(p);
    problems.insert(problems.end(), violations.begin(), violations.end());
    if (!problems.empty()) {
        std::string msg = "InvalidProfile(";
        for (std::size_t i = 0; i < problems.size(); ++i)
            msg += (i ? "; " : "") + problems[i];
        throw Error("profiles.InvalidProfile", msg + ")");
    }
    return p;
}

std::string format_profile(const SearchProfile& p)
{
    std::ostringstream out;
    out << "crime_type = " << to_string(p.crime_type) << "\n\n[scanners]\n";
    for (const auto& s : p.scanners)
        out << s.id << (s.config.empty() ? "" : "\t" + s.config) << '\n';
    out << "\n[salience]\n";
    for (const auto& r : p.salience_rules)
        out << to_string(r.kind) << (r.predicate.empty() ? "" : "\t" + r.predicate) << '\n';
    out << "\n[threshold]\n";
    for (auto k : p.threshold_targets)
        out << to_string(k) << '\n';
    if (!p.weights.empty()) {
        out << "\n[weights]\n";
        for (const auto& [k, v] : p.weights)
            out << k << " = " << v << '\n';
    }
    return out.str();
}

std::vector<std::string> validate_profile(const SearchProfile& p)
{
    std::vector<std::string> errors;
    if (p.scanners.empty())
        errors.push_back("no scanners");

    std::set<ArtifactKind> producible;
    std::set<std::string> seen;
    for (const auto& s : p.scanners) {
        const auto& ids = known_scanner_ids();
        if (std::find(ids.begin(), ids.end(), s.id) == ids.end()) {
            errors.push_back("unknown scanner: " + s.id);
            continue;
        }
        if (s.id == "patterns" && s.config.empty())
            errors.push_back("scanner patterns needs a pattern file");
        if (!seen.insert(s.id + "\t" + s.config).second)
            errors.push_back("duplicate scanner: " + s.id);
        for (auto k : kinds_produced_by(s.id))
            producible.insert(k);
    }
    for (auto k : p.threshold_targets)
        if (!producible.count(k))
            errors.push_back("threshold target not producible by any scanner: " + std::string(to_string(k)));
    for (const auto& r : p.salience_rules) {
        if (r.predicate.empty())
            continue;
        const bool shaped = r.predicate.rfind("value~", 0) == 0 || r.predicate.rfind("note~", 0) == 0;
        if (!shaped) {
            errors.push_back("salience predicate must be value~RE or note~RE: " + r.predicate);
            continue;
        }
        try {
            boost::regex(r.predicate.substr(r.predicate.find('~') + 1), boost::regex::extended);
        } catch (const boost::regex_error&) {
            errors.push_back("salience predicate is not a valid expression: " + r.predicate);
        }
    }
    for (const auto& [k, v] : p.weights)
        if (v < 0.0 || v > 1.0)
            errors.push_back("weight out of [0,1]: " + k);
    return errors;
}

std::string builtin_profile_text(CrimeType t)
{
    return detail::builtin_profile_source(std::string(to_string(t)));
}

SearchProfile builtin_profile(CrimeType t)
{
    return parse_profile(builtin_profile_text(t));
}

SearchProfile load_profile(std::string_view name_or_path)
{
    for (auto t : {CrimeType::fraud, CrimeType::identity_theft, CrimeType::child_exploitation,
                   CrimeType::stolen_property, CrimeType::generic})
        if (to_string(t) == name_or_path)
            return builtin_profile(t);
    const std::string path(name_or_path);
    if (!std::filesystem::is_regular_file(path))
        throw Error("profiles.UnknownCrimeType", "unknown crime type or profile file: " + path);
    return parse_profile(text::read_file(path));
}

void apply_salience(std::vector<ArtifactHit>& hits, const SearchProfile& p)
{
    struct Compiled {
        ArtifactKind kind;
        bool on_note = false;
        std::optional<boost::regex> re;
    };
    std::vector<Compiled> rules;
    for (const auto& r : p.salience_rules) {
        Compiled c{r.kind, false, std::nullopt};
        if (!r.predicate.empty()) {
            c.on_note = r.predicate.rfind("note~", 0) == 0;
            c.re.emplace(r.predicate.substr(r.predicate.find('~') + 1), boost::regex::extended);
        }
        rules.push_back(std::move(c));
    }
    for (auto& h : hits) {
        h.salient = std::any_of(rules.begin(), rules.end(), [&](const Compiled& c) {
            if (c.kind != h.kind)
                return false;
            if (!c.re)
                return true;
            return boost::regex_search(c.on_note ? h.note : h.value, *c.re);
        });
    }
}

} // namespace dft
