#include "cotrain/section_parser.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <unordered_set>

#include "json.hpp"

namespace cotrain {

SectionLayout SectionLayout::standard() {
    SectionLayout layout;
    layout.headings = {"HISTORY", "TECHNIQUE", std::string(kFindings), std::string(kImpression)};
    layout.aliases = {
        {"CONCLUSION", std::string(kImpression)},
        {"OBSERVATIONS", std::string(kFindings)},
        {"CLINICAL HISTORY", "HISTORY"},
        {"CLINICAL INDICATION", "HISTORY"},
        {"COMPARISON", "TECHNIQUE"},
    };
    return layout;
}

SectionLayout SectionLayout::with_alias_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open alias file '" + path.string() + "'");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("alias file '" + path.string() + "': " + e.what());
    }
    if (!doc.is_object()) throw DataError("alias file must be a JSON object {variant: canonical}");
    SectionLayout layout = standard();
    for (const auto& [variant, canonical] : doc.items()) {
        if (!canonical.is_string())
            throw DataError("alias '" + variant + "' must map to a canonical name string");
        layout.aliases.emplace_back(normalize_heading(variant),
                                    normalize_heading(canonical.get<std::string>()));
    }
    layout.validate();
    return layout;
}

void SectionLayout::validate() const {
    auto has = [&](std::string_view name) {
        return std::find(headings.begin(), headings.end(), name) != headings.end();
    };
    if (!has(kFindings) || !has(kImpression))
        throw ConfigError("SectionLayout must include FINDINGS and IMPRESSION");
    for (const auto& [variant, canonical] : aliases) {
        if (!has(canonical))
            throw ConfigError("alias '" + variant + "' maps to unknown heading '" + canonical + "'");
    }
}

namespace {

struct NameEntry {
    std::string name; // normalized (upper, single spaces)
    std::string canonical;
};

// All recognizable heading names, longest first so multi-word aliases win.
std::vector<NameEntry> name_table(const SectionLayout& layout) {
    std::vector<NameEntry> names;
    for (const auto& h : layout.headings) names.push_back({normalize_heading(h), h});
    for (const auto& [variant, canonical] : layout.aliases)
        names.push_back({normalize_heading(variant), canonical});
    std::sort(names.begin(), names.end(),
              [](const NameEntry& a, const NameEntry& b) { return a.name.size() > b.name.size(); });
    return names;
}

// Case-insensitive match of `name` (single internal spaces) against raw text
// starting at `pos`. Returns the number of bytes consumed, or 0 on mismatch.
std::size_t match_name(std::string_view raw, std::size_t pos, const std::string& name) {
    std::size_t i = pos;
    for (char expected : name) {
        if (i >= raw.size()) return 0;
        char got = raw[i];
        if (expected == ' ') {
            if (got != ' ' && got != '\t') return 0;
        } else if (std::toupper(static_cast<unsigned char>(got)) != expected) {
            return 0;
        }
        ++i;
    }
    return i - pos;
}

bool at_line_start(std::string_view raw, std::size_t pos) {
    return pos == 0 || raw[pos - 1] == '\n';
}

struct Hit {
    std::string canonical;
    std::size_t offset;
    std::size_t heading_len; // name plus optional ':'
};

std::vector<Hit> scan(std::string_view raw, const SectionLayout& layout) {
    const auto names = name_table(layout);
    std::vector<Hit> hits;
    std::size_t pos = 0;
    while (pos < raw.size()) {
        if (at_line_start(raw, pos)) {
            for (const auto& entry : names) {
                std::size_t n = match_name(raw, pos, entry.name);
                if (n == 0) continue;
                std::size_t end = pos + n;
                // heading only when followed by ':' or a line break (or EOF)
                if (end < raw.size() && raw[end] != ':' && raw[end] != '\n' && raw[end] != '\r')
                    continue;
                if (end < raw.size() && raw[end] == ':') ++end;
                hits.push_back({entry.canonical, pos, end - pos});
                pos = end;
                break;
            }
        }
        // advance to next line start
        std::size_t nl = raw.find('\n', pos);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return hits;
}

} // namespace

std::vector<HeadingHit> detect_headings(std::string_view raw, const SectionLayout& layout) {
    std::vector<HeadingHit> out;
    for (const auto& hit : scan(raw, layout)) out.push_back({hit.canonical, hit.offset});
    return out;
}

std::vector<RawSegment> segment_report(std::string_view raw, const SectionLayout& layout) {
    const auto hits = scan(raw, layout);
    std::vector<RawSegment> segments;
    segments.reserve(hits.size());
    for (std::size_t i = 0; i < hits.size(); ++i) {
        const std::size_t body_begin = hits[i].offset + hits[i].heading_len;
        const std::size_t body_end = (i + 1 < hits.size()) ? hits[i + 1].offset : raw.size();
        RawSegment seg;
        seg.canonical = hits[i].canonical;
        seg.offset = hits[i].offset;
        seg.heading = std::string(raw.substr(hits[i].offset, hits[i].heading_len));
        seg.body_raw = std::string(raw.substr(body_begin, body_end - body_begin));
        seg.body = trim(seg.body_raw);
        segments.push_back(std::move(seg));
    }
    return segments;
}

Report parse_report(std::string_view raw, const SectionLayout& layout, std::string id) {
    if (trim(raw).empty()) throw ParseError("report '" + id + "': empty input");
    const auto segments = segment_report(raw, layout);

    std::unordered_set<std::string> seen;
    std::vector<std::pair<std::string, std::string>> sections;
    for (const auto& seg : segments) {
        if (!seen.insert(seg.canonical).second)
            throw ParseError("report '" + id + "': duplicate section " + seg.canonical);
        sections.emplace_back(seg.canonical, seg.body);
    }
    for (std::string_view required : {kFindings, kImpression}) {
        if (!seen.count(std::string(required)))
            throw ParseError("report '" + id + "': missing section " + std::string(required));
    }
    for (const auto& [name, body] : sections) {
        if ((name == kFindings || name == kImpression) && body.empty())
            throw ParseError("report '" + id + "': section " + name + " is empty");
    }
    return Report(std::move(id), std::move(sections));
}

std::string to_raw_text(const Report& r) {
    std::string out;
    for (const auto& [name, body] : r.sections()) {
        out += name;
        out += ":\n";
        out += body;
        out += "\n\n";
    }
    return out;
}

} // namespace cotrain
