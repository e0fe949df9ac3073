#ifndef COTRAIN_SECTION_PARSER_HPP
#define COTRAIN_SECTION_PARSER_HPP

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "cotrain/corpus.hpp"

namespace cotrain {

/// Expected section structure of a raw report. Headings match at line start,
/// case-insensitively, when followed by ':' or a line break; aliases map
/// variant spellings onto canonical names.
struct SectionLayout {
    std::vector<std::string> headings; // canonical names, expected order
    std::vector<std::pair<std::string, std::string>> aliases; // variant -> canonical

    // HISTORY, TECHNIQUE, FINDINGS, IMPRESSION plus common clinical variants.
    static SectionLayout standard();
    // Extends standard() with extra aliases from a JSON object {variant: canonical}.
    static SectionLayout with_alias_file(const std::filesystem::path& path);

    void validate() const;
};

struct HeadingHit {
    std::string canonical;
    std::size_t offset; // byte offset of the heading's first character
};

std::vector<HeadingHit> detect_headings(std::string_view raw, const SectionLayout& layout);

/// One detected section as raw slices: `heading` covers the heading token and
/// its colon, `body_raw` everything up to the next heading. Concatenating
/// heading + body_raw over all segments (after any preamble) reproduces the
/// input byte for byte; `body` is body_raw with surrounding whitespace dropped.
struct RawSegment {
    std::string canonical;
    std::size_t offset = 0;
    std::string heading;
    std::string body_raw;
    std::string body;
};

std::vector<RawSegment> segment_report(std::string_view raw, const SectionLayout& layout);

Report parse_report(std::string_view raw, const SectionLayout& layout, std::string id);

// Canonical plain-text rendering ("NAME:\n<body>\n\n" per section); feeding the
// result back through parse_report recovers the same section map.
std::string to_raw_text(const Report& r);

} // namespace cotrain

#endif
