#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "sgdp/trace.hpp"

using namespace sgdp;

TEST_CASE("msrc rows parse field by field") {
    std::istringstream in(
        "128166372003061629,srv0,0,Read,123456789504,8192,100\n"
        "128166372004000000,srv1,2,write,0,16384,55\n");
    auto result = parse_msrc_csv(in);
    REQUIRE(result.records.size() == 2);
    REQUIRE(result.timestamp_unit == "100ns");
    const auto& r = result.records[0];
    CHECK(r.timestamp == 128166372003061629LL);
    CHECK(r.host == "srv0");
    CHECK(r.disk_id == 0);
    CHECK(r.op == Op::Read);
    CHECK(r.offset_bytes == 123456789504ULL);
    CHECK(r.size_bytes == 8192);
    CHECK(r.latency == 100);
    CHECK(result.records[1].op == Op::Write);  // op parsing is case-insensitive
}

TEST_CASE("strict mode reports the offending line number") {
    std::istringstream in(
        "1,h,0,Read,0,8192,1\n"
        "2,h,0,Read,not_a_number,8192,1\n");
    try {
        parse_msrc_csv(in, ParseMode::Strict);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("lenient mode skips and counts malformed lines") {
    std::istringstream in(
        "1,h,0,Read,0,8192,1\n"
        "garbage\n"
        "\n"
        "3,h,0,Read,8192,8192,1\n"
        "4,h,0,Read,0,0,1\n");  // zero size is malformed too
    auto result = parse_msrc_csv(in, ParseMode::Lenient);
    CHECK(result.records.size() == 2);
    CHECK(result.skipped_lines == 2);  // blank lines are not counted
}

TEST_CASE("msrc rejects zero size and offset overflow in strict mode") {
    std::istringstream zero("1,h,0,Read,0,0,1\n");
    CHECK_THROWS_AS(parse_msrc_csv(zero), ParseError);
    std::istringstream over("1,h,0,Read,18446744073709551615,2,1\n");
    CHECK_THROWS_AS(parse_msrc_csv(over), ParseError);
}

TEST_CASE("generic format needs its unit header") {
    std::istringstream missing("10,5,Read\n");
    CHECK_THROWS_AS(parse_generic_csv(missing), ParseError);
    std::istringstream wrong("#unit=ms\n10,5,Read\n");
    CHECK_THROWS_AS(parse_generic_csv(wrong), ParseError);

    std::istringstream ok("#unit=ns\n# comment\n10,5,r\n20,6,W\n");
    auto result = parse_generic_csv(ok);
    REQUIRE(result.records.size() == 2);
    CHECK(result.timestamp_unit == "ns");
    CHECK(result.records[0].offset_bytes == 5 * kBlockSize);  // lba rows scale to bytes
    CHECK(result.records[0].size_bytes == kBlockSize);
    CHECK(result.records[1].op == Op::Write);
}

TEST_CASE("normalization expands requests to every touched 8KB block") {
    // derived by hand: floor(offset/bs) .. floor((offset+size-1)/bs)
    auto blocks = [](std::uint64_t offset, std::uint64_t size) {
        TraceRecord rec;
        rec.timestamp = 7;
        rec.offset_bytes = offset;
        rec.size_bytes = size;
        std::vector<TraceRecord> recs{rec};
        return normalize_to_blocks(recs);
    };
    CHECK(blocks(0, 1).size() == 1);
    CHECK(blocks(0, 8192).size() == 1);
    CHECK(blocks(0, 8193).size() == 2);
    CHECK(blocks(0, 16384).size() == 2);

    auto spanning = blocks(8191, 2);  // straddles the first block boundary
    REQUIRE(spanning.size() == 2);
    CHECK(spanning[0].lba == 0);
    CHECK(spanning[1].lba == 1);
    CHECK(spanning[0].timestamp == 7);
    CHECK(spanning[1].timestamp == 7);

    auto unaligned = blocks(123456789504ULL, 8192);  // 8192*15070408 + 7168
    REQUIRE(unaligned.size() == 2);
    CHECK(unaligned[0].lba == 15070408);
    CHECK(unaligned[1].lba == 15070409);
}

TEST_CASE("normalization preserves record order") {
    std::vector<TraceRecord> recs(2);
    recs[0].offset_bytes = 81920;
    recs[0].size_bytes = 8192;
    recs[0].timestamp = 1;
    recs[1].offset_bytes = 0;
    recs[1].size_bytes = 8192;
    recs[1].timestamp = 2;
    auto out = normalize_to_blocks(recs);
    REQUIRE(out.size() == 2);
    CHECK(out[0].lba == 10);
    CHECK(out[1].lba == 0);
}

TEST_CASE("op filter keeps only the requested side") {
    std::istringstream in(
        "1,h,0,Read,0,8192,1\n"
        "2,h,0,Write,8192,8192,1\n"
        "3,h,0,Read,16384,8192,1\n");
    auto result = parse_msrc_csv(in);
    CHECK(filter_ops(result.records, OpFilter::All).size() == 3);
    CHECK(filter_ops(result.records, OpFilter::Read).size() == 2);
    CHECK(filter_ops(result.records, OpFilter::Write).size() == 1);
}

TEST_CASE("blocks file round-trips exactly") {
    std::vector<BlockAccess> accesses{
        {128166372003061629LL, 0, Op::Read},
        {5, 18446744073709551615ULL / 8192, Op::Write},
        {6, 42, Op::Read},
    };
    std::stringstream buf;
    write_blocks_file(buf, accesses);
    auto back = read_blocks_file(buf);
    REQUIRE(back.size() == accesses.size());
    for (std::size_t i = 0; i < accesses.size(); ++i) CHECK(back[i] == accesses[i]);
}

TEST_CASE("blocks file rejects truncation and bad op bytes") {
    std::vector<BlockAccess> accesses{{1, 2, Op::Read}};
    std::stringstream buf;
    write_blocks_file(buf, accesses);
    std::string bytes = buf.str();

    std::stringstream cut(bytes.substr(0, bytes.size() - 2));
    CHECK_THROWS(read_blocks_file(cut));

    bytes.back() = 9;  // neither Read nor Write
    std::stringstream bad(bytes);
    CHECK_THROWS(read_blocks_file(bad));
}
