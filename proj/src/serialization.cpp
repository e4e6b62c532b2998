#include "symfocus/serialization.hpp"

#include "symfocus/error.hpp"

namespace symfocus {
namespace {

template <typename F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedHeader, std::string(what) + ": " + e.what());
    }
}

}  // namespace

std::string_view to_string(asym::Side side) {
    switch (side) {
        case asym::Side::Left: return "Left";
        case asym::Side::Right: return "Right";
        case asym::Side::None: return "None";
    }
    return "None";
}

asym::Side side_from_string(std::string_view s) {
    if (s == "Left") return asym::Side::Left;
    if (s == "Right") return asym::Side::Right;
    if (s == "None") return asym::Side::None;
    throw Error(ErrorCode::MalformedHeader, "unknown side '" + std::string(s) + "'");
}

Json to_json(const cluster::ClusterModel& model) {
    Json j;
    j["k"] = model.k;
    j["centers"] = Json::array();
    for (const auto& c : model.centers) j["centers"].push_back({c[0], c[1], c[2]});
    j["assignments"] = model.assignments;
    j["epsilon_k"] = model.epsilon_k;
    j["d_k"] = model.d_k;
    j["sym_index"] = model.sym_index;
    return j;
}

cluster::ClusterModel cluster_model_from_json(const Json& j) {
    return guarded("cluster model", [&] {
        cluster::ClusterModel m;
        m.k = j.at("k").get<int>();
        for (const auto& c : j.at("centers")) {
            m.centers.push_back({c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()});
        }
        m.assignments = j.at("assignments").get<std::vector<int>>();
        m.epsilon_k = j.at("epsilon_k").get<double>();
        m.d_k = j.at("d_k").get<double>();
        m.sym_index = j.at("sym_index").get<double>();
        m.perfectly_symmetric = m.epsilon_k < cluster::kEpsilonFloor;
        return m;
    });
}

Json to_json(const asym::FocusReport& report) {
    Json j;
    j["side"] = to_string(report.side);
    j["cluster_id"] = report.cluster_id ? Json(*report.cluster_id) : Json(nullptr);
    j["centroid"] = report.centroid ? Json::array({(*report.centroid)[0], (*report.centroid)[1]})
                                    : Json(nullptr);
    j["mean_asym"] = report.mean_asym;
    j["axis_col"] = report.axis_col;
    j["per_cluster"] = Json::array();
    for (const auto& s : report.per_cluster) {
        j["per_cluster"].push_back(Json{{"id", s.cluster_id}, {"score", s.mean_asym}});
    }
    return j;
}

asym::FocusReport focus_report_from_json(const Json& j) {
    return guarded("focus report", [&] {
        asym::FocusReport r;
        r.side = side_from_string(j.at("side").get<std::string>());
        if (!j.at("cluster_id").is_null()) r.cluster_id = j.at("cluster_id").get<int>();
        if (!j.at("centroid").is_null()) {
            r.centroid = std::array<double, 2>{j.at("centroid").at(0).get<double>(),
                                               j.at("centroid").at(1).get<double>()};
        }
        r.mean_asym = j.at("mean_asym").get<double>();
        r.axis_col = j.at("axis_col").get<int>();
        for (const auto& s : j.at("per_cluster")) {
            r.per_cluster.push_back({s.at("id").get<int>(), s.at("score").get<double>()});
        }
        return r;
    });
}

Json to_json(const phantom::PhantomSpec& spec) {
    Json j;
    j["seed"] = spec.seed;
    j["lesion_present"] = spec.lesion_present;
    j["lesion_side"] = to_string(spec.lesion_side);
    j["lesion_center"] = {spec.lesion_center[0], spec.lesion_center[1]};
    j["lesion_radius"] = spec.lesion_radius;
    j["lesion_contrast"] = spec.lesion_contrast;
    j["noise_sigma"] = spec.noise_sigma;
    j["mode"] = spec.mode == phantom::LesionMode::Deficit ? "Deficit" : "Additive";
    return j;
}

phantom::PhantomSpec phantom_spec_from_json(const Json& j) {
    return guarded("phantom spec", [&] {
        phantom::PhantomSpec s;
        s.seed = j.at("seed").get<std::uint64_t>();
        s.lesion_present = j.at("lesion_present").get<bool>();
        s.lesion_side = side_from_string(j.at("lesion_side").get<std::string>());
        s.lesion_center = {j.at("lesion_center").at(0).get<double>(),
                           j.at("lesion_center").at(1).get<double>()};
        s.lesion_radius = j.at("lesion_radius").get<double>();
        s.lesion_contrast = j.at("lesion_contrast").get<double>();
        s.noise_sigma = j.at("noise_sigma").get<double>();
        const std::string mode = j.value("mode", std::string("Deficit"));
        if (mode == "Deficit") {
            s.mode = phantom::LesionMode::Deficit;
        } else if (mode == "Additive") {
            s.mode = phantom::LesionMode::Additive;
        } else {
            throw Error(ErrorCode::MalformedHeader, "unknown lesion mode '" + mode + "'");
        }
        return s;
    });
}

Json to_json(const std::vector<phantom::PhantomSpec>& specs) {
    Json j = Json::array();
    for (const auto& s : specs) j.push_back(to_json(s));
    return j;
}

std::vector<phantom::PhantomSpec> phantom_specs_from_json(const Json& j) {
    if (!j.is_array()) throw Error(ErrorCode::MalformedHeader, "phantom batch must be a JSON array");
    std::vector<phantom::PhantomSpec> out;
    for (const auto& e : j) out.push_back(phantom_spec_from_json(e));
    return out;
}

Json to_json(const phantom::AccuracyReport& r) {
    Json j;
    j["n"] = r.n;
    j["accuracy"] = r.accuracy;
    j["sensitivity"] = r.sensitivity;
    j["specificity"] = r.specificity;
    j["mean_localization_error"] = r.mean_localization_error;
    j["true_positive"] = r.true_positive;
    j["false_negative"] = r.false_negative;
    j["true_negative"] = r.true_negative;
    j["false_positive"] = r.false_positive;
    j["wrong_side"] = r.wrong_side;
    return j;
}

}  // namespace symfocus
