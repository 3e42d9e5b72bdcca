#include <csignal>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "photorig/app.hpp"

namespace photorig::app {

using nlohmann::json;

namespace {

Server* g_server = nullptr;

void on_signal(int) {
    if (g_server)
        g_server->stop();
}

// "key=value" with a JSON value; bare words are taken as strings.
json parse_override(const std::string& item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
        throw InputError("--set expects key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq), text = item.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded())
        value = text;
    return {{key, value}};
}

} // namespace

int cli_main(int argc, const char* const* argv) {
    CLI::App cli{"Rigged, textured 3D characters from a single silhouette and photo", "photorig"};
    cli.require_subcommand(1);
    cli.fallthrough();

    std::optional<std::string> config_path, out_path;
    std::optional<std::uint64_t> seed;
    bool keep_intermediates = false, verbose = false, quiet = false;
    cli.add_option("--config", config_path, "JSON config file");
    cli.add_option("--out", out_path, "Output directory");
    cli.add_option("--seed", seed, "Random seed (overrides the config)");
    cli.add_flag("--keep-intermediates", keep_intermediates, "Write intermediate maps");
    cli.add_flag("-v,--verbose", verbose, "Debug logging");
    cli.add_flag("-q,--quiet", quiet, "Warnings and errors only");

    // template render
    auto* tmpl = cli.add_subcommand("template", "Template body tools");
    tmpl->require_subcommand(1);
    auto* render = tmpl->add_subcommand("render", "Render front/back template map sets");
    std::optional<std::string> body_path, pose_path;
    int render_size = 256;
    render->add_option("--body", body_path, "Template body JSON (default: built-in body)");
    render->add_option("--pose", pose_path, "Pose JSON (default: rest pose)");
    render->add_option("--size", render_size, "Image size in pixels")->capture_default_str();

    // fixture make
    auto* fixture = cli.add_subcommand("fixture", "Synthetic test inputs");
    fixture->require_subcommand(1);
    auto* make = fixture->add_subcommand("make", "Write a named fixture");
    std::string fixture_name;
    std::optional<int> fixture_size;
    std::vector<std::string> names;
    for (auto n : kFixtureNames)
        names.emplace_back(n);
    make->add_option("name", fixture_name, "Fixture name")->required()->check(CLI::IsMember(names));
    make->add_option("--size", fixture_size, "Image size (default depends on the fixture)");

    // reconstruct
    auto* recon = cli.add_subcommand("reconstruct", "Silhouette and photo to rigged, textured mesh");
    std::optional<std::string> mask_path, image_path, renders_path, depth_mode, back_mode;
    std::vector<std::string> overrides;
    recon->add_option("--mask", mask_path, "Silhouette mask (overrides the config)");
    recon->add_option("--image", image_path, "Colour photo (overrides the config)");
    recon->add_option("--renders", renders_path, "Template render set directory (overrides the config)");
    recon->add_option("--depth-mode", depth_mode, "integrate or warp")->check(CLI::IsMember({"integrate", "warp"}));
    recon->add_option("--back-mode", back_mode, "mirror or inpaint")->check(CLI::IsMember({"mirror", "inpaint"}));
    recon->add_option("--set", overrides, "Parameter override key=value (repeatable)");

    // animate
    auto* animate = cli.add_subcommand("animate", "Pose a reconstructed mesh");
    std::string mesh_path;
    std::optional<std::string> clip_path, anim_pose, texture_path;
    std::string format = "gltf";
    animate->add_option("--mesh", mesh_path, "JSON mesh dump")->required();
    auto* clip_opt = animate->add_option("--clip", clip_path, "Clip JSON");
    auto* pose_opt = animate->add_option("--pose", anim_pose, "Pose JSON");
    clip_opt->excludes(pose_opt);
    animate->add_option("--texture", texture_path, "Texture PNG for the glTF output");
    animate->add_option("--format", format, "gltf or frames")
        ->check(CLI::IsMember({"gltf", "frames"}))
        ->capture_default_str();

    // texture
    auto* texture = cli.add_subcommand("texture", "Redo the texture atlas of a reconstruction");
    std::string export_dir;
    std::optional<std::string> tex_image, tex_labels, tex_back;
    texture->add_option("export", export_dir, "Reconstruction output directory")->required();
    texture->add_option("--image", tex_image, "Colour photo (default: the one used for reconstruction)");
    texture->add_option("--labels", tex_labels, "Edited front label map (.fmap)");
    texture->add_option("--back-mode", tex_back, "mirror or inpaint")->check(CLI::IsMember({"mirror", "inpaint"}));

    // serve
    auto* serve = cli.add_subcommand("serve", "Serve an export directory over HTTP");
    std::string serve_dir, host = "127.0.0.1";
    int port = 8080;
    serve->add_option("dir", serve_dir, "Export directory")->required();
    serve->add_option("--host", host, "Address to bind")->capture_default_str();
    serve->add_option("--port", port, "Port (0 picks a free one)")->capture_default_str();

    try {
        cli.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return cli.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return cli.exit(e);
    } catch (const CLI::ParseError& e) {
        cli.exit(e);
        return 2;
    }

    spdlog::set_level(verbose ? spdlog::level::debug : quiet ? spdlog::level::warn : spdlog::level::info);

    auto out_or = [&](const char* fallback) { return fs::path(out_path.value_or(fallback)); };

    try {
        if (*render) {
            run_template_render(body_path ? std::optional<fs::path>(*body_path) : std::nullopt,
                                pose_path ? std::optional<fs::path>(*pose_path) : std::nullopt, render_size,
                                out_or("template"));
        } else if (*make) {
            run_fixture_make(fixture_name, fixture_size, out_or(fixture_name.c_str()));
        } else if (*recon) {
            ReconstructConfig config;
            if (config_path)
                config = load_config(*config_path);
            else if (!mask_path)
                throw InputError("reconstruct needs --config or --mask");
            if (mask_path)
                config.mask = *mask_path;
            if (image_path)
                config.image = fs::path(*image_path);
            if (renders_path) {
                config.renders = fs::path(*renders_path);
                config.body.reset();
                config.pose.reset();
            }
            json params = config.params.to_json();
            for (const auto& item : overrides)
                params.update(parse_override(item));
            if (depth_mode)
                params["depth_mode"] = *depth_mode;
            if (back_mode)
                params["back_mode"] = *back_mode;
            if (seed)
                params["seed"] = *seed;
            config.params = ReconstructParams::from_json(params);
            if (out_path)
                config.output = *out_path;
            const json report = run_reconstruct(config, keep_intermediates);
            std::cout << "IoU " << report.at("iou").get<double>() << ", " << report.at("vertices") << " vertices, "
                      << report.at("occlusion_pixels") << " occlusion pixels -> " << config.output.string() << '\n';
        } else if (*animate) {
            AnimateRequest req;
            req.mesh = mesh_path;
            if (clip_path)
                req.clip = fs::path(*clip_path);
            if (anim_pose)
                req.pose = fs::path(*anim_pose);
            if (texture_path)
                req.texture = fs::path(*texture_path);
            req.format = format == "frames" ? AnimateFormat::frames : AnimateFormat::gltf;
            req.out = out_or("animation");
            const std::size_t frames = run_animate(req);
            std::cout << frames << " frame(s) -> " << req.out.string() << '\n';
        } else if (*texture) {
            TextureRequest req;
            req.export_dir = export_dir;
            if (tex_image)
                req.image = fs::path(*tex_image);
            if (tex_labels)
                req.labels = fs::path(*tex_labels);
            if (tex_back)
                req.back_mode = back_mode_from_string(*tex_back);
            req.out = out_path ? fs::path(*out_path) : fs::path(export_dir);
            run_texture(req);
        } else if (*serve) {
            Server server(serve_dir);
            const int bound = server.bind(host, port);
            std::cout << "serving " << serve_dir << " on http://" << host << ":" << bound << '\n' << std::flush;
            g_server = &server;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            server.run();
            g_server = nullptr;
        }
    } catch (const InputError& e) {
        spdlog::error("{}", e.what());
        return 2;
    } catch (const StageError& e) {
        spdlog::error("stage failed: {}", e.what());
        return 3;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 3;
    }
    return 0;
}

} // namespace photorig::app
