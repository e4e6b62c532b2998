#include <doctest.h>

#include "support.hpp"
#include "symfocus/error.hpp"
#include "symfocus/serialization.hpp"

using namespace symfocus;

namespace {

std::vector<std::string> keys_of(const Json& j) {
    std::vector<std::string> out;
    for (const auto& [k, v] : j.items()) out.push_back(k);
    return out;
}

}  // namespace

TEST_SUITE("serialization") {

TEST_CASE("cluster model fields and round trip") {
    testing::Gen g(61);
    const auto pts = g.features(40, 0, 1);
    const auto model = cluster::sym_kmeans(pts, 3, cluster::ClusteringConfig{});
    const Json j = to_json(model);
    CHECK(keys_of(j) == std::vector<std::string>{"k", "centers", "assignments", "epsilon_k", "d_k", "sym_index"});
    CHECK(j["centers"].size() == 3);
    CHECK(j["centers"][0].size() == 3);
    const auto back = cluster_model_from_json(Json::parse(j.dump()));
    CHECK(back == model);
}

TEST_CASE("focus report fields and round trip") {
    asym::FocusReport r;
    r.side = asym::Side::Right;
    r.cluster_id = 2;
    r.centroid = std::array<double, 2>{101.25, 160.5};
    r.mean_asym = 33.125;
    r.axis_col = 129;
    r.per_cluster = {{0, 1.5}, {1, 0.0}, {2, 33.125}};
    const Json j = to_json(r);
    CHECK(keys_of(j) ==
          std::vector<std::string>{"side", "cluster_id", "centroid", "mean_asym", "axis_col", "per_cluster"});
    CHECK(j["side"] == "Right");
    CHECK(keys_of(j["per_cluster"][0]) == std::vector<std::string>{"id", "score"});
    const auto back = focus_report_from_json(Json::parse(j.dump()));
    CHECK(back.side == r.side);
    CHECK(back.cluster_id == r.cluster_id);
    CHECK(back.centroid == r.centroid);
    CHECK(back.mean_asym == r.mean_asym);
    CHECK(back.axis_col == r.axis_col);
    REQUIRE(back.per_cluster.size() == 3);
    CHECK(back.per_cluster[2].mean_asym == 33.125);

    const asym::FocusReport none;
    const Json jn = to_json(none);
    CHECK(jn["side"] == "None");
    CHECK(jn["cluster_id"].is_null());
    CHECK(jn["centroid"].is_null());
    const auto none_back = focus_report_from_json(jn);
    CHECK_FALSE(none_back.cluster_id.has_value());
    CHECK_FALSE(none_back.centroid.has_value());
}

TEST_CASE("phantom spec batches round trip") {
    const auto specs = phantom::make_trial_specs(12, 2, 0.25, 8, 3);
    const Json j = to_json(specs);
    REQUIRE(j.is_array());
    CHECK(phantom_specs_from_json(Json::parse(j.dump())) == specs);
}

TEST_CASE("malformed documents") {
    auto code = [](const std::function<void()>& f) {
        try {
            f();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Io;
    };
    CHECK(code([] { cluster_model_from_json(Json::parse(R"({"k": 2})")); }) == ErrorCode::MalformedHeader);
    CHECK(code([] { focus_report_from_json(Json::parse(R"({"side": "Up"})")); }) == ErrorCode::MalformedHeader);
    CHECK(code([] { phantom_specs_from_json(Json::parse(R"({"seed": 1})")); }) == ErrorCode::MalformedHeader);
    CHECK(side_from_string("Left") == asym::Side::Left);
}

TEST_CASE("accuracy report fields") {
    phantom::AccuracyReport r;
    r.n = 3;
    r.accuracy = 1.0;
    const Json j = to_json(r);
    CHECK(j["n"] == 3);
    CHECK(j.contains("mean_localization_error"));
    CHECK(j.contains("sensitivity"));
    CHECK(j.contains("specificity"));
}

}  // TEST_SUITE
