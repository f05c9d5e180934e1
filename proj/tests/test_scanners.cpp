#include "doctest.h"

#include "dft/cards.hpp"
#include "dft/devices.hpp"
#include "dft/encryption.hpp"
#include "dft/error.hpp"
#include "dft/media.hpp"
#include "dft/patterns.hpp"

#include "oracles.hpp"
#include "support.hpp"

#include <random>
#include <set>

using namespace dft;
using dft::test::bytes_of;
using dft::test::TempDir;
using dft::test::write_file;

namespace {

std::string random_text(std::mt19937_64& rng, std::size_t n, std::string_view alphabet)
{
    std::string s(n, ' ');
    for (auto& c : s)
        c = alphabet[rng() % alphabet.size()];
    return s;
}

std::vector<std::pair<std::uint64_t, std::string>> as_pairs(const std::vector<CardRun>& runs)
{
    std::vector<std::pair<std::uint64_t, std::string>> out;
    for (const auto& r : runs)
        out.emplace_back(r.offset, r.pan);
    return out;
}

std::string_view code_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        static thread_local std::string code;
        code = e.code();
        return code;
    }
    return "";
}

} // namespace

TEST_CASE("luhn_check")
{
    CHECK(luhn_check("0000000000000000"));
    CHECK(luhn_check("4111111111111111"));
    CHECK_FALSE(luhn_check("4111111111111112"));
    CHECK(luhn_check("0"));
    CHECK(code_of([] { luhn_check("4111x11111111111"); }) == "scanners.NonDigitInput");
    CHECK(code_of([] { luhn_check(""); }) == "scanners.NonDigitInput");
    CHECK(code_of([] { luhn_check("12345678901234567890"); }) == "scanners.InvalidLength");
}

TEST_CASE("luhn agrees with the doubling oracle on every four-digit string")
{
    char buf[5] = {};
    for (int v = 0; v < 10000; ++v) {
        std::snprintf(buf, sizeof buf, "%04d", v);
        REQUIRE(luhn_check(buf) == oracle::luhn(buf));
    }
}

TEST_CASE("card extraction examples")
{
    SUBCASE("single PAN in text")
    {
        const auto hits = extract_card_numbers(bytes_of("call 4111111111111111 now"));
        REQUIRE(hits.size() == 1);
        CHECK(hits[0].pan == "4111111111111111");
        CHECK(hits[0].bank_code == "411111");
        CHECK(hits[0].locations.front().offset == 5);
    }
    SUBCASE("Luhn failure")
    {
        CHECK(extract_card_numbers(bytes_of("1234567812345678")).empty());
    }
    SUBCASE("empty buffer")
    {
        CHECK(extract_card_numbers(bytes_of("")).empty());
    }
    SUBCASE("separators are stripped")
    {
        const auto hits = extract_card_numbers(bytes_of("pay 4111-1111 1111-1111."));
        REQUIRE(hits.size() == 1);
        CHECK(hits[0].pan == "4111111111111111");
        CHECK(hits[0].locations.front().offset == 4);
    }
    SUBCASE("double separator splits runs")
    {
        // "4111 1111  1111 1111": two 8-digit runs, neither a candidate.
        CHECK(extract_card_numbers(bytes_of("4111 1111  1111 1111")).empty());
    }
    SUBCASE("a longer run is not a PAN even if a substring is")
    {
        const auto hits = extract_card_numbers(bytes_of("94111111111111112"));
        REQUIRE(hits.size() == 1);
        CHECK(hits[0].pan == "94111111111111112");
        CHECK(extract_card_numbers(bytes_of("41111111111111110000000")).empty());
    }
    SUBCASE("duplicates collapse keeping every location")
    {
        const auto hits = extract_card_numbers(bytes_of("4111111111111111 x 5500000000000004 x 4111111111111111"));
        REQUIRE(hits.size() == 2);
        CHECK(hits[0].pan == "4111111111111111");
        REQUIRE(hits[0].locations.size() == 2);
        CHECK(hits[0].locations[0].offset == 0);
        CHECK(hits[0].locations[1].offset == 38);
        CHECK(hits[1].pan == "5500000000000004");
        CHECK(hits[1].locations[0].offset == 19);
    }
}

TEST_CASE("card runs match the substring oracle on random buffers")
{
    std::mt19937_64 rng(2024);
    for (int round = 0; round < 200; ++round) {
        const auto buf = random_text(rng, 512, "0123456789012345678901234567890123456789 -x");
        const auto expected = oracle::card_substrings(buf);
        CHECK(as_pairs(find_card_runs_serial(bytes_of(buf))) == expected);
        CHECK(as_pairs(find_card_runs_window(bytes_of(buf), 0, buf.size(), true, 0, Execution::parallel)) == expected);
        CHECK(as_pairs(find_card_runs_window(bytes_of(buf), 0, buf.size(), true, 0, Execution::serial)) == expected);
    }
}

TEST_CASE("streaming scan equals in-memory scan across block boundaries")
{
    TempDir dir;
    std::mt19937_64 rng(99);
    auto buf = random_text(rng, 20000, "0123456789 -ab");
    // Plant PANs straddling every 1000-byte boundary.
    for (std::size_t b = 1000; b + 30 < buf.size(); b += 1000) {
        const std::string pan = "|4111 1111 1111 1111|";
        buf.replace(b - 8, pan.size(), pan);
    }
    write_file(dir / "img.raw", buf);
    const auto h = open_evidence(dir / "img.raw", SourceKind::raw_image);
    const auto expected = oracle::card_substrings(buf);

    for (std::size_t block : {std::size_t{1000}, std::size_t{4096}, std::size_t{7}, std::size_t{1} << 20}) {
        for (auto ex : {Execution::serial, Execution::parallel}) {
            CardScanOptions opt;
            opt.block_size = block;
            opt.execution = ex;
            const auto hits = extract_card_numbers(h, opt);
            std::vector<std::pair<std::uint64_t, std::string>> flat;
            for (const auto& hit : hits)
                for (const auto& loc : hit.locations)
                    flat.emplace_back(loc.offset, hit.pan);
            std::sort(flat.begin(), flat.end());
            CHECK(flat == expected);
        }
    }
}

TEST_CASE("extraction soundness: offsets re-read to the matched digits")
{
    std::mt19937_64 rng(5);
    const auto buf = random_text(rng, 4096, "01234567890123456789 -.");
    for (const auto& hit : extract_card_numbers(bytes_of(buf))) {
        CHECK(luhn_check(hit.pan));
        for (const auto& loc : hit.locations) {
            std::string stripped;
            for (std::size_t i = loc.offset; stripped.size() < hit.pan.size() && i < buf.size(); ++i)
                if (oracle::digit(buf[i]))
                    stripped.push_back(buf[i]);
            CHECK(stripped == hit.pan);
        }
    }
}

TEST_CASE("sort_by_bank_code")
{
    const auto hits = extract_card_numbers(bytes_of("5500000000000004 | 4111111111111111 | 4111110000000005"));
    REQUIRE(hits.size() == 3);
    const auto groups = sort_by_bank_code(hits);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].bank_code == "411111");
    CHECK(groups[0].hits.size() == 2);
    CHECK(groups[0].hits[0].locations[0].offset < groups[0].hits[1].locations[0].offset);
    CHECK(groups[1].bank_code == "550000");
    CHECK(groups[1].hits.size() == 1);

    CHECK(sort_by_bank_code({}).empty());
    const auto single = sort_by_bank_code({hits[0]});
    REQUIRE(single.size() == 1);
    CHECK(single[0].hits.size() == 1);

    SUBCASE("conservation over random inputs")
    {
        std::mt19937_64 rng(11);
        const auto buf = random_text(rng, 8192, "0123456789 ");
        const auto all = extract_card_numbers(bytes_of(buf));
        std::multiset<std::string> before, after;
        for (const auto& h : all)
            before.insert(h.pan);
        std::string prev;
        for (const auto& g : sort_by_bank_code(all)) {
            CHECK(g.bank_code > prev);
            prev = g.bank_code;
            for (const auto& h : g.hits) {
                CHECK(h.bank_code == g.bank_code);
                after.insert(h.pan);
            }
        }
        CHECK(before == after);
    }
}

TEST_CASE("scan_pattern")
{
    SUBCASE("email offset")
    {
        const PatternMatcher m(builtin_pattern_set("email"), ArtifactKind::email);
        const auto hits = m.scan_buffer("contact john@example.com");
        REQUIRE(hits.size() == 1);
        CHECK(hits[0].value == "john@example.com");
        CHECK(hits[0].location.offset == 8);
        CHECK(hits[0].scanner_id == "email");
        CHECK(hits[0].kind == ArtifactKind::email);
    }
    SUBCASE("no matches")
    {
        const PatternMatcher m(builtin_pattern_set("email"));
        CHECK(m.scan_buffer("nothing to see here").empty());
    }
    SUBCASE("malformed pattern is named")
    {
        try {
            PatternMatcher m({{"ok", "abc"}, {"broken", "a(b"}});
            FAIL("expected MalformedPattern");
        } catch (const Error& e) {
            CHECK(e.code() == "scanners.MalformedPattern");
            CHECK(std::string(e.what()).find("broken") != std::string::npos);
        }
    }
    SUBCASE("empty set")
    {
        CHECK(code_of([] { PatternMatcher m({}); }) == "scanners.EmptyPatternSet");
    }
    SUBCASE("pattern file format")
    {
        const auto set = parse_pattern_set("# comment\nfoo\tab+\n\nbar\t[0-9]{3}\n");
        REQUIRE(set.size() == 2);
        CHECK(set[1].name == "bar");
        CHECK(set[1].pattern == "[0-9]{3}");
        CHECK(code_of([] { parse_pattern_set("no tab here\n"); }) == "scanners.MalformedPattern");
    }
}

TEST_CASE("leftmost-longest matches agree with the all-substring oracle")
{
    std::mt19937_64 rng(31337);
    const std::vector<std::string> patterns = {"(ab|abcd)(e|cde)*", "[a-e]+@[a-e]+(\\.[a-e]+)*", "a|ab|abc"};
    for (int round = 0; round < 3; ++round) {
        const auto buf = random_text(rng, 1024, "abcde@.abcde x");
        for (const auto& p : patterns) {
            const PatternMatcher m({{"p", p}});
            std::vector<std::pair<std::uint64_t, std::string>> got;
            for (const auto& h : m.scan_buffer(buf))
                got.emplace_back(h.location.offset, h.value);
            CHECK(got == oracle::leftmost_longest(buf, p));
        }
    }
}

TEST_CASE("windowed pattern scan equals whole-buffer scan")
{
    TempDir dir;
    std::mt19937_64 rng(8);
    const auto buf = random_text(rng, 50000, "abcde@.abcde x");
    write_file(dir / "img.raw", buf);
    const auto h = open_evidence(dir / "img.raw", SourceKind::raw_image);
    const PatternMatcher m({{"mail", "[a-e]+@[a-e]+(\\.[a-e]+)*"}, {"run", "(ab|abcd)(e|cde)*"}});
    const auto whole = m.scan_buffer(buf);
    CHECK(m.scan(h, 256) == whole);
    CHECK(m.scan(h, 4096) == whole);
}

TEST_CASE("inventory_media_files")
{
    TempDir dir;
    SUBCASE("jpeg detected, text ignored")
    {
        write_file(dir / "t/a.jpg", std::string("\xFF\xD8\xFF\xE0") + "JFIF");
        write_file(dir / "t/b.txt", "hello");
        const auto hits = inventory_media_files(open_evidence(dir / "t", SourceKind::directory_tree));
        REQUIRE(hits.size() == 1);
        CHECK(hits[0].value == "a.jpg");
        CHECK(hits[0].kind == ArtifactKind::media_file);
        CHECK(hits[0].note == "type=jpeg");
    }
    SUBCASE("extension claims media, content is zip")
    {
        write_file(dir / "t/c.jpg", std::string("PK\x03\x04", 4) + "zipdata");
        const auto hits = inventory_media_files(open_evidence(dir / "t", SourceKind::directory_tree));
        REQUIRE(hits.size() == 1);
        CHECK(hits[0].note.find("mismatch") != std::string::npos);
        CHECK(hits[0].note.find("zip") != std::string::npos);
    }
    SUBCASE("media content under a non-media name")
    {
        write_file(dir / "t/holiday.dat", std::string("\x89PNG\r\n\x1a\n", 8) + "....");
        write_file(dir / "t/clip.bin", std::string("\0\0\0\x18" "ftypmp42", 12));
        const auto hits = inventory_media_files(open_evidence(dir / "t", SourceKind::directory_tree));
        REQUIRE(hits.size() == 2);
        CHECK(hits[0].value == "clip.bin");
        CHECK(hits[0].note.rfind("type=isobmff; mismatch", 0) == 0);
        CHECK(hits[1].note.rfind("type=png; mismatch", 0) == 0);
    }
    SUBCASE("empty tree")
    {
        std::filesystem::create_directories(dir / "t");
        CHECK(inventory_media_files(open_evidence(dir / "t", SourceKind::directory_tree)).empty());
    }
}

TEST_CASE("detect_encryption_indicators")
{
    TempDir dir;
    SUBCASE("LUKS header")
    {
        std::string img(4096, '\0');
        img.replace(0, 6, std::string("LUKS\xba\xbe", 6));
        write_file(dir / "luks.raw", img);
        const auto f = detect_encryption_indicators(open_evidence(dir / "luks.raw", SourceKind::raw_image));
        CHECK(f.summary == EncryptionSummary::strong);
        REQUIRE(f.fde_signatures.size() == 1);
        CHECK(f.fde_signatures[0].name == "LUKS");
        CHECK(f.fde_signatures[0].location.offset == 0);
    }
    SUBCASE("BitLocker volume in a partition")
    {
        std::string img(8192, '\0');
        img.replace(2048 + 3, 8, "-FVE-FS-");
        write_file(dir / "bl.raw", img);
        const auto f = detect_encryption_indicators(open_evidence(dir / "bl.raw", SourceKind::raw_image));
        CHECK(f.summary == EncryptionSummary::strong);
        REQUIRE(f.fde_signatures.size() == 1);
        CHECK(f.fde_signatures[0].name == "BitLocker");
        CHECK(f.fde_signatures[0].location.offset == 2048);
    }
    SUBCASE("installed program")
    {
        write_file(dir / "t/Program Files/VeraCrypt/VeraCrypt.exe", "MZ");
        write_file(dir / "t/Users/x/notes.txt", "hi");
        const auto f = detect_encryption_indicators(open_evidence(dir / "t", SourceKind::directory_tree));
        CHECK(f.summary == EncryptionSummary::possible);
        CHECK(f.suspect_programs == std::vector<std::string>{"VeraCrypt"});
        CHECK(f.fde_signatures.empty());
    }
    SUBCASE("nothing")
    {
        write_file(dir / "zero.raw", std::string(4096, '\0'));
        CHECK(detect_encryption_indicators(open_evidence(dir / "zero.raw", SourceKind::raw_image)).summary ==
              EncryptionSummary::none);
        std::filesystem::create_directories(dir / "empty");
        CHECK(detect_encryption_indicators(open_evidence(dir / "empty", SourceKind::directory_tree)).summary ==
              EncryptionSummary::none);
    }
}

TEST_CASE("extract_attached_devices")
{
    TempDir dir;
    SUBCASE("kernel log line")
    {
        write_file(dir / "t/var/log/kern.log",
                   "2015-06-30T10:00:00Z host kernel: usb 2-1: new high-speed USB device number 3\n"
                   "2015-06-30T10:00:01Z host kernel: usb 2-1: New USB device found, idVendor=0781, idProduct=5567\n"
                   "2015-06-30T10:00:01Z host kernel: usb 2-1: SerialNumber: 4C530001230520116101\n"
                   "Jun 30 11:00:00 host kernel: usb 1-1.2: New USB device found, idVendor=046D, idProduct=C52B\n");
        const auto recs = extract_attached_devices(open_evidence(dir / "t", SourceKind::directory_tree));
        REQUIRE(recs.size() == 2);
        CHECK(recs[0].vendor_id == "0781");
        CHECK(recs[0].product_id == "5567");
        CHECK(recs[0].serial == "4C530001230520116101");
        CHECK(recs[0].first_seen == "2015-06-30T10:00:01Z");
        CHECK(recs[0].source_line == "var/log/kern.log:2");
        CHECK(recs[1].vendor_id == "046d");
        CHECK(recs[1].first_seen == "Jun 30 11:00:00");
        CHECK_FALSE(recs[1].serial.has_value());
    }
    SUBCASE("bare log line from the kernel format")
    {
        const auto recs = parse_device_log("New USB device found, idVendor=0781, idProduct=5567", "log");
        REQUIRE(recs.size() == 1);
        CHECK(recs[0].vendor_id == "0781");
        CHECK(recs[0].product_id == "5567");
    }
    SUBCASE("normalized records pass through")
    {
        write_file(dir / "dev.tsv", "0781\t5567\tABC123\t2015-06-01T00:00:00Z\n046d\tc52b\t-\t-\n");
        const auto recs = extract_attached_devices(open_evidence(dir / "dev.tsv", SourceKind::artifact_records));
        REQUIRE(recs.size() == 2);
        CHECK(recs[0].serial == "ABC123");
        CHECK(recs[0].first_seen == "2015-06-01T00:00:00Z");
        CHECK(recs[0].source_line == "dev.tsv#0");
        CHECK_FALSE(recs[1].serial.has_value());
        CHECK(format_device_records(recs) == "0781\t5567\tABC123\t2015-06-01T00:00:00Z\n046d\tc52b\t-\t-\n");
    }
    SUBCASE("malformed record names its index")
    {
        try {
            parse_device_records("0781\t5567\n07z1\t5567\n", "dev.tsv");
            FAIL("expected MalformedRecord");
        } catch (const Error& e) {
            CHECK(e.code() == "scanners.MalformedRecord");
            CHECK(std::string(e.what()) == "MalformedRecord(1)");
        }
    }
    SUBCASE("empty source")
    {
        write_file(dir / "empty.tsv", "");
        CHECK(extract_attached_devices(open_evidence(dir / "empty.tsv", SourceKind::artifact_records)).empty());
    }
    SUBCASE("streaming over a raw image with lines across read blocks")
    {
        std::string img(5u << 20, 'x');
        const std::string line = "\nusb 3-1: New USB device found, idVendor=1234, idProduct=abcd\n";
        img.replace((4u << 20) - 20, line.size(), line);
        write_file(dir / "img.raw", img);
        const auto recs = extract_attached_devices(open_evidence(dir / "img.raw", SourceKind::raw_image));
        REQUIRE(recs.size() == 1);
        CHECK(recs[0].vendor_id == "1234");
        CHECK(recs[0].location.offset == (4u << 20) - 19);
    }
}
