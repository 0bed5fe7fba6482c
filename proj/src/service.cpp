#include "voxelcast/service.hpp"

#include "voxelcast/blockgrid.hpp"
#include "voxelcast/image.hpp"
#include "voxelcast/ingest.hpp"
#include "voxelcast/phantom.hpp"
#include "voxelcast/raw.hpp"
#include "voxelcast/render_request.hpp"

#include <httplib.h>

#include <atomic>
#include <charconv>
#include <cstdlib>

namespace voxelcast {

int http_status(ErrorCode code)
{
    switch (code) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::IoError: return 500;
    case ErrorCode::InvalidSettings:
    case ErrorCode::InvalidCamera:
    case ErrorCode::InvalidTransferFunction:
    case ErrorCode::IsovalueOutOfRange:
    case ErrorCode::InvalidRequest:
    case ErrorCode::InvalidBlockSpec: return 422;
    default: return 400;
    }
}

namespace {

constexpr const char* kJson = "application/json";

void send_json(httplib::Response& res, int status, const nlohmann::json& body)
{
    res.status = status;
    res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, int status, const Error& e)
{
    send_json(res, status, to_json(e));
}

nlohmann::json parse_json(const std::string& text, const char* field)
{
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) {
        throw Error(ErrorCode::InvalidRequest, std::string("malformed JSON in ") + field, field);
    }
    return j;
}

Dims dims_from_json(const nlohmann::json& j)
{
    if (j.is_number_integer()) {
        const int n = j.get<int>();
        return {n, n, n};
    }
    if (j.is_array() && j.size() == 3 && j[0].is_number_integer() && j[1].is_number_integer() && j[2].is_number_integer()) {
        return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
    }
    throw Error(ErrorCode::InvalidRequest, "dims must be an integer or [nx, ny, nz]", "dims");
}

ScalarVolume phantom_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("kind")) {
        throw Error(ErrorCode::InvalidRequest, "phantom needs a kind", "phantom");
    }
    if (!j.at("kind").is_string()) {
        throw Error(ErrorCode::InvalidRequest, "kind must be a string", "kind");
    }
    const Dims dims = j.contains("dims") ? dims_from_json(j.at("dims")) : Dims{128, 128, 128};
    if (dims.nx > 1024 || dims.ny > 1024 || dims.nz > 1024) {
        throw Error(ErrorCode::InvalidRequest, "phantom dims are limited to 1024 per axis", "dims");
    }
    return generate_phantom(phantom_kind_from_string(j.at("kind").get<std::string>()), dims);
}

std::span<const std::uint8_t> bytes_of(const std::string& s)
{
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace

struct RenderService::Impl {
    explicit Impl(ServiceConfig c)
        : config(std::move(c))
        , store(config.data_dir, config.cache_size)
    {
    }

    ServiceConfig config;
    VolumeStore store;
    httplib::Server server;
    std::atomic<int> in_flight{0};
    int port = 0;

    void routes();
    void upload(const httplib::Request& req, httplib::Response& res);
    void describe(const httplib::Request& req, httplib::Response& res);
    void render(const httplib::Request& req, httplib::Response& res);
    void slice(const httplib::Request& req, httplib::Response& res);
};

void RenderService::Impl::routes()
{
    server.set_payload_max_length(config.upload_cap);
    server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Expose-Headers", "X-Render-Stats");
    });
    server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.status = 204;
    });
    server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (!res.body.empty()) return;
        const char* code = res.status == 413 ? "PayloadTooLarge" : (res.status == 404 ? "NotFound" : "HttpError");
        send_json(res, res.status, {{"error", code}, {"message", httplib::status_message(res.status)}});
    });
    server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const Error& e) {
            send_error(res, http_status(e.code()), e);
        } catch (const std::exception& e) {
            send_json(res, 500, {{"error", "InternalError"}, {"message", e.what()}});
        }
    });

    server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });
    server.Post("/volumes", [this](const httplib::Request& req, httplib::Response& res) { upload(req, res); });
    server.Get("/volumes", [this](const httplib::Request&, httplib::Response& res) {
        nlohmann::json list = nlohmann::json::array();
        for (const auto& m : store.list()) list.push_back(to_json(m));
        send_json(res, 200, list);
    });
    server.Get("/volumes/:id", [this](const httplib::Request& req, httplib::Response& res) { describe(req, res); });
    server.Post("/volumes/:id/render", [this](const httplib::Request& req, httplib::Response& res) { render(req, res); });
    server.Get("/volumes/:id/slices/:axis/:index", [this](const httplib::Request& req, httplib::Response& res) { slice(req, res); });
    if (config.static_dir) {
        server.set_mount_point("/viewer", config.static_dir->string());
    }
}

void RenderService::Impl::upload(const httplib::Request& req, httplib::Response& res)
{
    try {
        std::optional<ScalarVolume> volume;
        VolumeSource source = VolumeSource::raw;
        if (req.is_multipart_form_data()) {
            if (req.has_file("dicom_zip")) {
                volume = volume_from_dicom_zip(bytes_of(req.get_file_value("dicom_zip").content));
                source = VolumeSource::dicom;
            } else if (req.has_file("raw")) {
                if (!req.has_file("manifest")) {
                    throw Error(ErrorCode::InvalidRequest, "raw upload needs a manifest part", "manifest");
                }
                const raw::RawManifest m = raw::raw_manifest_from_json(parse_json(req.get_file_value("manifest").content, "manifest"));
                volume = raw::load_raw(bytes_of(req.get_file_value("raw").content), m.dims, m.spacing, m.format);
            } else if (req.has_file("phantom")) {
                volume = phantom_from_json(parse_json(req.get_file_value("phantom").content, "phantom"));
                source = VolumeSource::phantom;
            }
        } else {
            const auto j = parse_json(req.body, "body");
            if (j.is_object() && j.contains("phantom")) {
                volume = phantom_from_json(j.at("phantom"));
                source = VolumeSource::phantom;
            }
        }
        if (!volume) {
            throw Error(ErrorCode::InvalidRequest, "expected a dicom_zip, raw + manifest or phantom part");
        }
        const VolumeManifest m = store.add(*volume, source);
        send_json(res, 201, {{"id", m.id}, {"manifest", to_json(m)}});
    } catch (const Error& e) {
        send_error(res, e.code() == ErrorCode::IoError ? 500 : 400, e);
    }
}

void RenderService::Impl::describe(const httplib::Request& req, httplib::Response& res)
{
    const std::string& id = req.path_params.at("id");
    const auto volume = store.load(id);
    nlohmann::json body = to_json(*store.manifest(id));
    nlohmann::json stats = nlohmann::json::object();
    const BlockGrid grid = decompose(*volume);
    for (const std::string& preset : TransferFunction::preset_names()) {
        stats[preset] = block_stats_json(cull_empty(grid, build_lut(TransferFunction::preset(preset))), false);
    }
    body["block_stats"] = stats;
    send_json(res, 200, body);
}

void RenderService::Impl::render(const httplib::Request& req, httplib::Response& res)
{
    const std::string& id = req.path_params.at("id");
    if (!store.manifest(id)) {
        throw Error(ErrorCode::NotFound, "no volume with id '" + id + "'", "id");
    }
    const RenderRequest request = render_request_from_json(parse_json(req.body, "body"));
    struct Slot {
        std::atomic<int>& n;
        ~Slot() { --n; }
    };
    if (++in_flight > config.queue_bound) {
        --in_flight;
        send_error(res, 503, Error(ErrorCode::InvalidRequest, "render queue is full"));
        return;
    }
    Slot slot{in_flight};
    const auto volume = store.load(id);
    RenderOptions options;
    options.threads = config.render_threads;
    RenderStats stats;
    const std::vector<std::uint8_t> png = render_png(*volume, request, options, &stats);
    res.set_header("X-Render-Stats", to_json(stats).dump());
    res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
}

void RenderService::Impl::slice(const httplib::Request& req, httplib::Response& res)
{
    const std::string& id = req.path_params.at("id");
    const auto volume = store.load(id);
    const SliceAxis axis = slice_axis_from_string(req.path_params.at("axis"));
    const std::string& index_text = req.path_params.at("index");
    int index = 0;
    const auto [ptr, ec] = std::from_chars(index_text.data(), index_text.data() + index_text.size(), index);
    if (ec != std::errc() || ptr != index_text.data() + index_text.size()) {
        throw Error(ErrorCode::InvalidRequest, "slice index must be an integer", "index");
    }
    WindowLevel wl = default_window(*volume);
    const auto number = [&](const char* name, double& out) {
        if (!req.has_param(name)) return;
        const std::string v = req.get_param_value(name);
        char* end = nullptr;
        out = std::strtod(v.c_str(), &end);
        if (v.empty() || *end != '\0') throw Error(ErrorCode::InvalidRequest, std::string(name) + " must be a number", name);
    };
    number("window", wl.window);
    number("level", wl.level);
    int width = 0;
    int height = 0;
    const auto gray = slice_gray(*volume, axis, index, wl, width, height);
    const auto png = encode_png_gray(width, height, gray);
    res.set_content(reinterpret_cast<const char*>(png.data()), png.size(), "image/png");
}

RenderService::RenderService(ServiceConfig config)
    : impl_(std::make_unique<Impl>(std::move(config)))
{
    impl_->routes();
}

RenderService::~RenderService() = default;

int RenderService::bind()
{
    if (impl_->config.port == 0) {
        impl_->port = impl_->server.bind_to_any_port(impl_->config.host);
    } else if (impl_->server.bind_to_port(impl_->config.host, impl_->config.port)) {
        impl_->port = impl_->config.port;
    } else {
        impl_->port = -1;
    }
    if (impl_->port < 0) {
        throw Error(ErrorCode::IoError, "cannot bind " + impl_->config.host + ":" + std::to_string(impl_->config.port));
    }
    return impl_->port;
}

void RenderService::serve()
{
    impl_->server.listen_after_bind();
}

void RenderService::stop()
{
    impl_->server.stop();
}

VolumeStore& RenderService::store()
{
    return impl_->store;
}

}  // namespace voxelcast
