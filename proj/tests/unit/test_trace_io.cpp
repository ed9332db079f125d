#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "todsec/trace_io.hpp"

using namespace todsec;
namespace fs = std::filesystem;

namespace {

fs::path test_dir() {
    const fs::path dir = fs::temp_directory_path() / "todsec_trace_io_tests";
    fs::create_directories(dir);
    return dir;
}

ToDInputTrace sample_trace() {
    ToDInputTrace t;
    t.sample_period_s = 0.1;
    t.trace_id = "rt_007";
    t.label = ManeuverClass::RightTurn;
    // Deliberately awkward doubles: they must survive a text round-trip.
    t.samples = {
        {0.1, 1.0 / 3.0, 0},
        {-449.99999999999994, 99.999999999999986, 1},
        {123.45600000000002, 0.0, 0},
    };
    return t;
}

}  // namespace

TEST_CASE("write then parse returns the identical trace") {
    const fs::path csv = test_dir() / "roundtrip.csv";
    const ToDInputTrace t = sample_trace();
    write_trace(t, csv);
    const ToDInputTrace back = parse_trace(csv);
    CHECK(back.trace_id == t.trace_id);
    CHECK(back.label == t.label);
    CHECK(back.sample_period_s == t.sample_period_s);
    REQUIRE(back.size() == t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        CHECK(back.samples[i].swa_deg == t.samples[i].swa_deg);
        CHECK(back.samples[i].app_pct == t.samples[i].app_pct);
        CHECK(back.samples[i].bp == t.samples[i].bp);
    }
}

TEST_CASE("unlabeled traces round-trip with a null label") {
    const fs::path csv = test_dir() / "unlabeled.csv";
    ToDInputTrace t = sample_trace();
    t.label.reset();
    write_trace(t, csv);
    CHECK(!parse_trace(csv).label.has_value());
}

TEST_CASE("a wrong header is rejected") {
    std::istringstream in("time,angle,pedal,brake\n0,0,0,0\n");
    CHECK_THROWS_WITH_AS(parse_trace_stream(in, 0.1, "x", std::nullopt),
                         doctest::Contains("bad trace header"), std::runtime_error);
}

TEST_CASE("malformed numeric fields name the row") {
    std::istringstream in("t_s,swa_deg,app_pct,bp\n0,oops,20,0\n");
    CHECK_THROWS_WITH_AS(parse_trace_stream(in, 0.1, "x", std::nullopt),
                         doctest::Contains("row 2"), std::runtime_error);
}

TEST_CASE("fractional brake values are rejected") {
    std::istringstream in("t_s,swa_deg,app_pct,bp\n0,0,20,0.5\n");
    CHECK_THROWS_WITH_AS(parse_trace_stream(in, 0.1, "x", std::nullopt),
                         doctest::Contains("bp"), std::runtime_error);
}

TEST_CASE("non-uniform sampling is rejected with the row number") {
    std::istringstream in("t_s,swa_deg,app_pct,bp\n0,0,20,0\n0.1,0,20,0\n0.35,0,20,0\n");
    CHECK_THROWS_WITH_AS(parse_trace_stream(in, 0.1, "x", std::nullopt),
                         doctest::Contains("non-uniform sampling"), std::runtime_error);
}

TEST_CASE("out-of-range samples are rejected at parse time") {
    std::istringstream in("t_s,swa_deg,app_pct,bp\n0,500,20,0\n");
    CHECK_THROWS_WITH_AS(parse_trace_stream(in, 0.1, "bad_trace", std::nullopt),
                         doctest::Contains("swa_deg"), std::runtime_error);
}

TEST_CASE("a missing sidecar is an error") {
    const fs::path csv = test_dir() / "orphan.csv";
    std::ofstream(csv) << "t_s,swa_deg,app_pct,bp\n0,0,0,0\n";
    fs::remove(trace_sidecar_path(csv));
    CHECK_THROWS_WITH_AS(parse_trace(csv), doctest::Contains("sidecar"), std::runtime_error);
}

TEST_CASE("sidecar path swaps the extension") {
    CHECK(trace_sidecar_path("data/lt_000.csv") == fs::path("data/lt_000.meta.json"));
}
