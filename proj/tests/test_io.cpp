#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <random>

#include "tricomi/io.hpp"

using namespace tricomi;

TEST(Numbers, ShortestRoundTrip) {
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(1.0), "1");
    EXPECT_EQ(format_number(-2.5e-300), "-2.5e-300");
    EXPECT_EQ(format_number(NAN), "nan");
    EXPECT_EQ(format_number(-INFINITY), "-inf");
    std::mt19937_64 rng(7);
    for (int i = 0; i < 20000; ++i) {
        std::uint64_t bits = rng();
        double v;
        std::memcpy(&v, &bits, sizeof v);
        if (!std::isfinite(v)) continue;
        double back = parse_number(format_number(v));
        EXPECT_EQ(std::memcmp(&back, &v, sizeof v), 0) << format_number(v);
    }
    EXPECT_THROW(parse_number("1.5x"), DomainError);
    EXPECT_THROW(parse_number(""), DomainError);
    EXPECT_EQ(parse_number("+3"), 3);
}

TEST(Csv, EscapingAndParseBack) {
    CsvTable t;
    t.header = {"name", "value", "count"};
    t.add({std::string("plain"), 0.25, 3LL});
    t.add({std::string("has,comma"), -1e-9, -7LL});
    t.add({std::string("quote\"inside"), 1.0 / 3, 0LL});
    t.add({std::string("line\nbreak"), 2.0, 1LL});
    std::string s = t.str();
    EXPECT_EQ(s.substr(0, 18), "name,value,count\r\n");
    auto rows = parse_csv(s);
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[2][0], "has,comma");
    EXPECT_EQ(rows[3][0], "quote\"inside");
    EXPECT_EQ(rows[4][0], "line\nbreak");
    EXPECT_EQ(parse_number(rows[3][1]), 1.0 / 3);
    EXPECT_THROW(t.add({std::string("short")}), ShapeError);
    EXPECT_THROW(parse_csv("\"open"), DomainError);
    CsvTable empty;
    empty.header = {"x", "y"};
    EXPECT_EQ(empty.str(), "x,y\r\n");
}

TEST(ConfigFile, SectionsCommentsAndTypes) {
    auto c = Config::parse(
        "# comment\n"
        "seed = 42\n"
        "[model]\n"
        "m = 2\n"
        "alpha=2\n"
        "  p = 3.0  \n"
        "; another comment\n"
        "[grid]\n"
        "N = 256\n"
        "horizons = 10, 20\n"
        "snapshots = true\n");
    EXPECT_EQ(c.get_int("seed", 0), 42);
    EXPECT_EQ(c.get_double("model.m", 0), 2);
    EXPECT_EQ(c.get_double("model.p", 0), 3);
    EXPECT_EQ(c.get_int("grid.N", 0), 256);
    EXPECT_EQ(c.get_list("grid.horizons", {}), (std::vector<double>{10, 20}));
    EXPECT_TRUE(c.get_bool("grid.snapshots", false));
    EXPECT_EQ(c.get_double("missing", 1.5), 1.5);
    EXPECT_EQ(c.unused(), std::vector<std::string>{"model.alpha"});
    auto j = c.to_json();
    EXPECT_EQ(j.begin().key(), "seed");
    EXPECT_THROW(Config::parse("a = 1\na = 2\n"), DomainError);
    EXPECT_THROW(Config::parse("[broken\n"), DomainError);
    EXPECT_THROW(Config::parse("novalue\n"), DomainError);
    EXPECT_THROW(Config::parse("x = abc\n").get_double("x", 0), DomainError);
    EXPECT_THROW(Config::parse("x = 1.5\n").get_int("x", 0), DomainError);
    try {
        Config::parse("ok = 1\n\nbad line\n", "run.cfg");
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("run.cfg:3"), std::string::npos);
    }
}

TEST(Hashing, KnownDigests) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Manifest, OutputsAreHashedAndVerified) {
    auto dir = std::filesystem::temp_directory_path() / "tricomi_io_test";
    std::filesystem::remove_all(dir);
    RunManifest m;
    m.command_line = {"tricomi", "simulate"};
    m.seed = 9;
    m.write_output((dir / "a.csv").string(), "x\r\n1\r\n");
    m.write_output((dir / "b.json").string(), "{}");
    auto j = m.to_json();
    EXPECT_EQ(j["outputs"].size(), 2u);
    EXPECT_EQ(j["outputs"][0]["sha256"], sha256_hex("x\r\n1\r\n"));
    // stable key order
    std::vector<std::string> keys;
    for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
    EXPECT_EQ(keys.front(), "tool_version");
    EXPECT_EQ(keys.back(), "outputs");
    EXPECT_TRUE(verify_manifest(j).empty());
    {
        std::ofstream f(dir / "b.json");
        f << "{\"changed\":1}";
    }
    EXPECT_EQ(verify_manifest(j), std::vector<std::string>{(dir / "b.json").string()});
    std::filesystem::remove_all(dir);
}
