#include <doctest.h>

#include "organoquant/pipeline.hpp"

using namespace organoquant;
using namespace organoquant::pipeline;

namespace {

const char* kMinimal = R"({
  "groups": [{"name": "WT", "inputs": ["a.czi"]}],
  "marker_mapping": {"N-cad": 1, "PAX6": 0}
})";

}  // namespace

TEST_CASE("minimal config takes the documented defaults") {
    PipelineConfig c = parse_config(kMinimal);
    CHECK(c.theta == 200);
    CHECK(c.threshold == img::Threshold::otsu());
    CHECK(c.morph_radius == 1);
    CHECK(c.min_area == 20);
    CHECK(c.n_rays == 32);
    CHECK(c.prob_thresh == 0.5);
    CHECK(c.nms_thresh == 0.4);
    CHECK(c.ap_tau == 0.5);
    CHECK(c.normalization_scope == NormalizationScope::Run);
    CHECK(c.maps_source == MapsSource::synthesize());
    CHECK(c.groups.size() == 1);
    CHECK(c.marker_mapping.at("N-cad") == 1);
}

TEST_CASE("typo keys, bad values, bad JSON") {
    CHECK_THROWS_AS(parse_config(R"({"groups": [{"name":"a","inputs":[]}], "thetta": 5})"),
                    UnknownKey);
    CHECK_THROWS_AS(parse_config(R"({"groups": [{"name":"a","inputs":[]}], "prob_thresh": 1.7})"),
                    InvalidValue);
    CHECK_THROWS_AS(parse_config("{ not json"), MalformedJson);
    CHECK_THROWS_AS(parse_config(R"({"groups": []})"), InvalidValue);
    CHECK_THROWS_AS(parse_config(R"({"groups": [{"name":"a","inputs":[], "extra": 1}]})"),
                    UnknownKey);
    CHECK_THROWS_AS(
        parse_config(R"({"groups": [{"name":"a","inputs":[]},{"name":"a","inputs":[]}]})"),
        InvalidValue);
    CHECK_THROWS_AS(parse_config(R"({"groups": [{"name":"a","inputs":[]}], "theta": 0})"),
                    InvalidValue);
    CHECK_THROWS_AS(parse_config(R"({"groups": [{"name":"a","inputs":[]}], "theta": 1.5})"),
                    InvalidValue);
    CHECK_THROWS_AS(parse_config(R"({"groups": [{"name":"a","inputs":[]}], "ap_tau": 0.0})"),
                    InvalidValue);
}

TEST_CASE("threshold and maps_source forms") {
    PipelineConfig fixed = parse_config(
        R"({"groups": [{"name":"a","inputs":[]}], "threshold": {"fixed": 128}})");
    CHECK(fixed.threshold == img::Threshold::fixed(128));

    PipelineConfig ext = parse_config(
        R"({"groups": [{"name":"a","inputs":[]}], "maps_source": {"external": "maps/"}})");
    CHECK(ext.maps_source == MapsSource::external("maps/"));

    CHECK_THROWS_AS(
        parse_config(R"({"groups": [{"name":"a","inputs":[]}], "threshold": {"fixed": 300}})"),
        InvalidValue);
    CHECK_THROWS_AS(
        parse_config(R"({"groups": [{"name":"a","inputs":[]}], "threshold": "auto"})"),
        InvalidValue);
    CHECK_THROWS_AS(
        parse_config(R"({"groups": [{"name":"a","inputs":[]}], "maps_source": "guess"})"),
        InvalidValue);
    CHECK_THROWS_AS(
        parse_config(
            R"({"groups": [{"name":"a","inputs":[]}], "maps_source": {"external": "x", "y": 1}})"),
        UnknownKey);
}

TEST_CASE("serialize then parse is the identity") {
    PipelineConfig c = parse_config(kMinimal);
    c.threshold = img::Threshold::fixed(42);
    c.maps_source = MapsSource::external("preds");
    c.normalization_scope = NormalizationScope::Group;
    c.theta = 321;
    CHECK(parse_config(serialize_config(c)) == c);

    // the manifest flavor omits the output directory
    PipelineConfig without = parse_config(serialize_config(c, false));
    CHECK(without.output_dir == "out");
    without.output_dir = c.output_dir;
    CHECK(without == c);
}

TEST_CASE("unwrap_manifest passes plain configs through and unwraps manifests") {
    CHECK(parse_config(unwrap_manifest(kMinimal)).theta == 200);

    std::string manifest = R"({
      "tool": {"name": "organoquant", "format": 1},
      "images": [],
      "config": {"groups": [{"name": "WT", "inputs": []}], "theta": 77}
    })";
    CHECK(parse_config(unwrap_manifest(manifest)).theta == 77);
}
