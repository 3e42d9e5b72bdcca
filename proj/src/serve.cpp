#include <fstream>
#include <mutex>
#include <thread>

#include "photorig/app.hpp"

#include <spdlog/spdlog.h>

// After Eigen: <resolv.h>, pulled in here, defines a `_res` macro.
#include <httplib.h>

namespace photorig::app {

using nlohmann::json;

struct Server::Impl {
    fs::path dir;
    Skeleton skeleton;
    httplib::Server http;
    std::thread worker;
    std::mutex write_lock;
    bool bound = false;
};

namespace {

json error_body(const std::string& message) { return {{"status", "error"}, {"error", message}}; }

} // namespace

Server::Server(fs::path dir) : impl_(std::make_unique<Impl>()) {
    impl_->dir = fs::absolute(dir);
    const fs::path manifest = impl_->dir / kManifest;
    if (!fs::is_regular_file(manifest))
        throw InputError("no " + std::string(kManifest) + " in " + impl_->dir.string());
    std::ifstream in(manifest);
    try {
        const json m = json::parse(in);
        const std::string skeleton_file = m.at("artifacts").at("skeleton").get<std::string>();
        std::ifstream sk(impl_->dir / skeleton_file);
        if (!sk)
            throw InputError("manifest names a missing skeleton file " + skeleton_file);
        impl_->skeleton = Skeleton::from_json(json::parse(sk));
    } catch (const json::exception& e) {
        throw InputError(std::string("malformed export manifest: ") + e.what());
    }

    auto& http = impl_->http;
    // httplib defaults to SO_REUSEPORT, which lets a second server share a busy port.
    http.set_socket_options([](auto sock) {
        int yes = 1;
        setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    if (!http.set_mount_point("/", impl_->dir.string()))
        throw InputError("cannot serve " + impl_->dir.string());
    http.set_file_extension_and_mimetype_mapping("gltf", "model/gltf+json");
    http.set_file_extension_and_mimetype_mapping("bin", "application/octet-stream");
    http.set_file_extension_and_mimetype_mapping("fmap", "application/octet-stream");

    http.Post("/pose", [this](const httplib::Request& req, httplib::Response& res) {
        json body;
        std::string canonical;
        try {
            body = json::parse(req.body);
            canonical = pose_to_json(pose_from_json(body, impl_->skeleton), impl_->skeleton).dump(2);
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(error_body(e.what()).dump(), "application/json");
            return;
        }
        std::lock_guard lock(impl_->write_lock);
        const fs::path target = impl_->dir / kPostedPose;
        const fs::path tmp = impl_->dir / (std::string(kPostedPose) + ".tmp");
        {
            std::ofstream out(tmp, std::ios::binary);
            out << canonical << '\n';
            if (!out) {
                res.status = 500;
                res.set_content(error_body("cannot write " + target.string()).dump(), "application/json");
                return;
            }
        }
        fs::rename(tmp, target);
        spdlog::info("stored posted pose in {}", target.string());
        res.set_content(json{{"status", "ok"}, {"path", kPostedPose}}.dump(), "application/json");
    });
    http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty())
            res.set_content(error_body(httplib::status_message(res.status)).dump(), "application/json");
    });
}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
    if (port < 0 || port > 65535)
        throw InputError("port out of range: " + std::to_string(port));
    int bound = port;
    if (port == 0)
        bound = impl_->http.bind_to_any_port(host);
    else if (!impl_->http.bind_to_port(host, port))
        bound = -1;
    if (bound <= 0)
        throw InputError("cannot bind " + host + ":" + std::to_string(port) + " (port busy?)");
    impl_->bound = true;
    return bound;
}

void Server::start() {
    if (!impl_->bound)
        throw InputError("server is not bound");
    impl_->worker = std::thread([this] { impl_->http.listen_after_bind(); });
    impl_->http.wait_until_ready();
}

void Server::run() {
    if (!impl_->bound)
        throw InputError("server is not bound");
    impl_->http.listen_after_bind();
}

void Server::stop() {
    if (!impl_)
        return;
    impl_->http.stop();
    if (impl_->worker.joinable())
        impl_->worker.join();
}

} // namespace photorig::app
