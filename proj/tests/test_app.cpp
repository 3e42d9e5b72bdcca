#include <doctest.h>

#include <fstream>
#include <numbers>

#include "photorig/app.hpp"
#include "photorig/export.hpp"

#include <httplib.h>

using namespace photorig;
using namespace photorig::app;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("photorig_app_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int cli(std::vector<std::string> args) {
    args.insert(args.begin(), "photorig");
    args.push_back("-q");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    return cli_main(int(argv.size()), argv.data());
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in);
    return json::parse(in);
}

void write_json(const json& j, const fs::path& p) { std::ofstream(p) << j.dump(); }

std::vector<Vec3> frame_vertices(const fs::path& p) {
    std::vector<Vec3> out;
    const json doc = read_json(p);
    for (const auto& v : doc.at("vertices"))
        out.emplace_back(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
    return out;
}

json quat(const Quat& q) { return json::array({q.x(), q.y(), q.z(), q.w()}); }

// Fixture written and reconstructed once through the command line.
const fs::path& plain_export() {
    static const fs::path dir = [] {
        const fs::path root = scratch("plain");
        REQUIRE(cli({"fixture", "make", "plain_tpose", "--out", (root / "fixture").string()}) == 0);
        REQUIRE(cli({"reconstruct", "--config", (root / "fixture" / "config.json").string(), "--out",
                     (root / "export").string(), "--keep-intermediates"}) == 0);
        return root / "export";
    }();
    return dir;
}

} // namespace

TEST_CASE("config paths resolve against the config file") {
    const json j = {{"input", {{"mask", "s.png"}, {"image", "/abs/photo.png"}}},
                    {"template", {{"body", "b.json"}}},
                    {"parameters", {{"kappa", 8}}},
                    {"output", "out"}};
    const ReconstructConfig c = ReconstructConfig::from_json(j, "/base");
    CHECK(c.mask == fs::path("/base/s.png"));
    CHECK(*c.image == fs::path("/abs/photo.png"));
    CHECK(*c.body == fs::path("/base/b.json"));
    CHECK_FALSE(c.renders);
    CHECK(c.params.kappa == 8);
    CHECK(c.output == fs::path("/base/out"));

    json bad = j;
    bad["extra"] = 1;
    CHECK_THROWS_AS(ReconstructConfig::from_json(bad, "/"), InputError);
    bad = j;
    bad["template"]["renders"] = "r";
    CHECK_THROWS_AS(ReconstructConfig::from_json(bad, "/"), InputError);
    bad = j;
    bad["input"].erase("mask");
    CHECK_THROWS_AS(ReconstructConfig::from_json(bad, "/"), InputError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.json"), InputError);
}

TEST_CASE("reconstruct writes a complete export") {
    const fs::path& dir = plain_export();
    const json manifest = read_json(dir / kManifest);
    for (const char* key : {"gltf", "bin", "mesh_json", "skeleton", "report", "texture"}) {
        REQUIRE_MESSAGE(manifest["artifacts"].contains(key), key);
        CHECK(fs::exists(dir / manifest["artifacts"][key].get<std::string>()));
    }
    const json report = read_json(dir / kReportJson);
    CHECK(report["iou"].get<double>() >= 0.98);
    CHECK(report["occlusion_pixels"] == 0);
    CHECK(report["config"]["parameters"]["kappa"] == 32);
    CHECK(fs::exists(dir / "intermediates" / "rendered_silhouette.png"));
    CHECK(fs::exists(dir / "surfaces" / "surfaces.json"));
    const RiggedMesh mesh = read_mesh_json(dir / kMeshJson);
    CHECK(mesh.vertices.size() == report["vertices"].get<std::size_t>());
    CHECK(Skeleton::from_json(read_json(dir / kSkeletonJson)).size() == mesh.joint_count());
}

TEST_CASE("template render and fixture sizes") {
    const fs::path dir = scratch("template");
    CHECK(cli({"template", "render", "--size", "48", "--out", (dir / "t").string()}) == 0);
    const TemplateRenderSet set = read_render_set(dir / "t");
    CHECK(set.front.silhouette.width() == 48);
    CHECK(set.groups.size() == 3);
    CHECK(cli({"fixture", "make", "concave_sleeves", "--size", "64", "--out", (dir / "f").string()}) == 0);
    CHECK(read_png(dir / "f" / "silhouette.png", Semantic::mask).width() == 64);
    CHECK(read_json(dir / "f" / "config.json")["template"]["renders"] == "renders");
}

TEST_CASE("exit codes") {
    const fs::path dir = scratch("exit");
    write_png(RasterMap(40, 40, 1, Semantic::mask), dir / "empty.png");
    CHECK(cli({"reconstruct", "--mask", (dir / "empty.png").string(), "--out", (dir / "o").string()}) == 3);
    CHECK(cli({"reconstruct", "--config", (dir / "missing.json").string()}) == 2);
    CHECK(cli({"reconstruct"}) == 2);
    CHECK(cli({"frobnicate"}) == 2);
    CHECK(cli({"fixture", "make", "no_such_fixture"}) == 2);
    CHECK(cli({"reconstruct", "--mask", (dir / "empty.png").string(), "--set", "kappa=0"}) == 2);
    CHECK(cli({"reconstruct", "--mask", (dir / "empty.png").string(), "--set", "nonsense"}) == 2);
    CHECK(cli({"serve", (dir / "nowhere").string()}) == 2);
}

TEST_CASE("animate: rest clip, rigid root turn, arm raise") {
    const fs::path& dir = plain_export();
    const RiggedMesh mesh = read_mesh_json(dir / kMeshJson);
    const Skeleton& sk = mesh.skeleton;
    const fs::path work = scratch("animate");

    SUBCASE("rest clip of 10 frames reproduces the rest mesh") {
        json frames = json::array();
        for (int i = 0; i < 10; ++i)
            frames.push_back({{"rotations", json::object()}});
        write_json({{"fps", 24}, {"frames", frames}}, work / "rest.json");
        REQUIRE(cli({"animate", "--mesh", (dir / kMeshJson).string(), "--clip", (work / "rest.json").string(),
                     "--format", "frames", "--out", (work / "rest").string()}) == 0);
        for (int i = 0; i < 10; ++i) {
            const auto v = frame_vertices(work / "rest" / ("frame_0000" + std::to_string(i) + ".json"));
            REQUIRE(v.size() == mesh.vertices.size());
            double worst = 0.0;
            for (std::size_t k = 0; k < v.size(); ++k)
                worst = std::max(worst, (v[k] - mesh.vertices[k]).norm());
            CHECK(worst < 1e-6);
        }
    }

    SUBCASE("a 90 degree root turn is rigid") {
        const Quat r(Eigen::AngleAxisd(std::numbers::pi / 2, Vec3::UnitY()));
        write_json({{"rotations", {{sk[0].name, quat(r)}}}}, work / "turn.json");
        REQUIRE(cli({"animate", "--mesh", (dir / kMeshJson).string(), "--pose", (work / "turn.json").string(),
                     "--format", "frames", "--out", (work / "turn").string()}) == 0);
        const auto v = frame_vertices(work / "turn" / "frame_00000.json");
        Pose pose = Pose::rest(sk.size());
        pose.rotations[0] = r;
        const Eigen::Isometry3d rigid = posed_world(sk, pose)[0] * sk.rest_world()[0].inverse();
        double worst = 0.0;
        for (std::size_t k = 0; k < v.size(); ++k)
            worst = std::max(worst, (v[k] - rigid * mesh.vertices[k]).norm());
        CHECK(worst < 1e-6);
    }

    SUBCASE("raising an arm leaves torso-weighted vertices in place") {
        const int shoulder = sk.index_of("left_shoulder");
        std::vector<bool> in_arm(sk.size(), false);
        for (std::size_t j = 0; j < sk.size(); ++j)
            in_arm[j] = int(j) == shoulder || (sk[j].parent >= 0 && in_arm[std::size_t(sk[j].parent)]);
        const Quat raise(Eigen::AngleAxisd(-std::numbers::pi / 3, Vec3::UnitZ()));
        write_json({{"fps", 30}, {"frames", {{{"rotations", {{"left_shoulder", quat(raise)}}}}}}},
                   work / "raise.json");
        REQUIRE(cli({"animate", "--mesh", (dir / kMeshJson).string(), "--clip", (work / "raise.json").string(),
                     "--format", "frames", "--out", (work / "raise").string()}) == 0);
        const auto v = frame_vertices(work / "raise" / "frame_00000.json");
        const std::size_t b = sk.size();
        double torso_move = 0.0, arm_move = 0.0;
        std::size_t torso = 0, arm = 0;
        for (std::size_t k = 0; k < v.size(); ++k) {
            double arm_weight = 0.0;
            for (std::size_t j = 0; j < b; ++j)
                if (in_arm[j])
                    arm_weight += mesh.weights[k * b + j];
            const double d = (v[k] - mesh.vertices[k]).norm();
            if (arm_weight == 0.0) {
                torso_move = std::max(torso_move, d);
                ++torso;
            } else if (arm_weight > 0.99) {
                arm_move = std::max(arm_move, d);
                ++arm;
            }
        }
        REQUIRE(torso > 0);
        REQUIRE(arm > 0);
        CHECK(torso_move < 1e-3);
        CHECK(arm_move > 0.05);
    }

    SUBCASE("baked glTF animation and unknown joints") {
        write_json({{"fps", 30}, {"frames", {{{"rotations", {{"left_elbow", quat(Quat::Identity())}}}}}}},
                   work / "one.json");
        CHECK(cli({"animate", "--mesh", (dir / kMeshJson).string(), "--clip", (work / "one.json").string(),
                   "--texture", (dir / "mesh_texture.png").string(), "--out", (work / "gltf").string()}) == 0);
        const json doc = read_json(work / "gltf" / "animated.gltf");
        CHECK(doc["animations"][0]["channels"].size() == mesh.joint_count());
        CHECK(doc.contains("materials"));
        write_json({{"rotations", {{"left_wing", quat(Quat::Identity())}, {"tail", quat(Quat::Identity())}}}},
                   work / "bad.json");
        CHECK(cli({"animate", "--mesh", (dir / kMeshJson).string(), "--pose", (work / "bad.json").string(), "--out",
                   (work / "bad").string()}) == 2);
        CHECK(cli({"animate", "--mesh", (dir / kMeshJson).string(), "--out", (work / "none").string()}) == 2);
    }
}

TEST_CASE("texture re-synthesis keeps the mesh") {
    const fs::path& dir = plain_export();
    const fs::path out = scratch("texture");
    REQUIRE(cli({"texture", dir.string(), "--back-mode", "inpaint", "--out", out.string()}) == 0);
    const RasterMap before = read_png(dir / "mesh_texture.png", Semantic::color);
    const RasterMap after = read_png(out / "mesh_texture.png", Semantic::color);
    CHECK(after.width() == before.width());
    CHECK(after.height() == before.height());
    CHECK_FALSE(after == before);
    CHECK(read_json(out / kMeshJson) == read_json(dir / kMeshJson));

    RasterMap labels = read_fmap(dir / "surfaces" / "0_body_labels.fmap");
    labels.at(0, 0) = 3.0;
    write_fmap(labels.with_semantic(Semantic::label), out / "edited.fmap");
    CHECK(cli({"texture", dir.string(), "--labels", (out / "edited.fmap").string(), "--out",
               (out / "edited").string()}) == 0);
    CHECK(cli({"texture", dir.string(), "--labels", (dir / "mesh_texture.png").string(), "--out",
               (out / "bad").string()}) == 2);
}

TEST_CASE("serve: manifest, files, 404 and posted poses") {
    const fs::path dir = scratch("serve");
    fs::copy(plain_export(), dir, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
    fs::remove(dir / kPostedPose);
    Server server(dir);
    const int port = server.bind("127.0.0.1", 0);
    server.start();
    httplib::Client client("127.0.0.1", port);

    auto manifest = client.Get("/manifest.json");
    REQUIRE(manifest);
    CHECK(manifest->status == 200);
    CHECK(json::parse(manifest->body) == read_json(dir / kManifest));
    auto gltf = client.Get("/mesh.gltf");
    REQUIRE(gltf);
    CHECK(gltf->status == 200);
    CHECK(gltf->get_header_value("Content-Type") == "model/gltf+json");
    auto missing = client.Get("/nothing.json");
    REQUIRE(missing);
    CHECK(missing->status == 404);

    const json pose = {{"rotations", {{"left_elbow", {0.0, 0.0, 0.25881904510252074, 0.9659258262890683}}}}};
    auto ok = client.Post("/pose", pose.dump(), "application/json");
    REQUIRE(ok);
    CHECK(ok->status == 200);
    REQUIRE(fs::exists(dir / kPostedPose));
    const Skeleton sk = Skeleton::from_json(read_json(dir / kSkeletonJson));
    const Pose stored = pose_from_json(read_json(dir / kPostedPose), sk);
    CHECK(stored.rotations[std::size_t(sk.index_of("left_elbow"))].z() == doctest::Approx(0.25881904510252074));

    auto bad_joint = client.Post("/pose", json{{"rotations", {{"wing", {0, 0, 0, 1}}}}}.dump(), "application/json");
    REQUIRE(bad_joint);
    CHECK(bad_joint->status == 400);
    auto not_json = client.Post("/pose", "{", "application/json");
    REQUIRE(not_json);
    CHECK(not_json->status == 400);
    auto not_unit = client.Post("/pose", json{{"rotations", {{"left_elbow", {0, 0, 0, 2}}}}}.dump(), "application/json");
    REQUIRE(not_unit);
    CHECK(not_unit->status == 400);
    // A rejected pose leaves the stored one alone.
    CHECK(pose_from_json(read_json(dir / kPostedPose), sk).rotations == stored.rotations);

    Server second(dir);
    CHECK_THROWS_AS(second.bind("127.0.0.1", port), InputError);
    server.stop();

    // The posted pose feeds animate.
    CHECK(cli({"animate", "--mesh", (dir / kMeshJson).string(), "--pose", (dir / kPostedPose).string(), "--format",
               "frames", "--out", (dir / "posed").string()}) == 0);
    CHECK(fs::exists(dir / "posed" / "frame_00000.json"));
}

TEST_CASE("serve needs a manifest") {
    CHECK_THROWS_AS(Server(scratch("bare")), InputError);
}
