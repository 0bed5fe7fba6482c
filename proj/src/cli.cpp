#include "voxelcast/cli.hpp"

#include "voxelcast/blockgrid.hpp"
#include "voxelcast/error.hpp"
#include "voxelcast/ingest.hpp"
#include "voxelcast/morphology.hpp"
#include "voxelcast/phantom.hpp"
#include "voxelcast/quality.hpp"
#include "voxelcast/raw.hpp"
#include "voxelcast/render_request.hpp"
#include "voxelcast/service.hpp"
#include "voxelcast/store.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <csignal>
#include <filesystem>
#include <fstream>

namespace voxelcast {

namespace {

namespace fs = std::filesystem;

nlohmann::json read_json_file(const std::string& path, const char* field)
{
    const auto bytes = read_file(path);
    auto j = nlohmann::json::parse(bytes.begin(), bytes.end(), nullptr, false);
    if (j.is_discarded()) {
        throw Error(ErrorCode::InvalidRequest, "malformed JSON in " + path, field);
    }
    return j;
}

/// A path to a JSON document, or else a preset name.
nlohmann::json transfer_function_arg(const std::string& arg)
{
    if (fs::is_regular_file(arg)) {
        return read_json_file(arg, "transfer_function");
    }
    return arg;
}

Dims dims_arg(const std::vector<int>& v)
{
    if (v.size() == 1) return {v[0], v[0], v[0]};
    return {v[0], v[1], v[2]};
}

Camera default_camera(const ScalarVolume& volume)
{
    const Vec3 extent = volume.physical_extent();
    return orbit_camera(extent * 0.5, 2.0 * length(extent), 30.0, 20.0, 256, 256, 40.0);
}

void write_output(const std::string& path, std::span<const std::uint8_t> bytes)
{
    write_file_atomic(path, bytes);
}

void write_output(const std::string& path, std::string_view text)
{
    write_file_atomic(path, text);
}

struct IngestArgs {
    std::string out;
    std::string dicom_dir;
    std::string raw;
    std::string manifest;
    std::vector<int> dims;
    std::vector<double> spacing{1.0, 1.0, 1.0};
    std::string format = "i16";
    std::string phantom;
};

int run_ingest(const IngestArgs& a, std::ostream& out)
{
    VolumeSource source = VolumeSource::raw;
    std::optional<ScalarVolume> volume;
    if (!a.dicom_dir.empty()) {
        volume = volume_from_dicom_dir(a.dicom_dir);
        source = VolumeSource::dicom;
    } else if (!a.raw.empty()) {
        raw::RawManifest m;
        if (!a.manifest.empty()) {
            m = raw::raw_manifest_from_json(read_json_file(a.manifest, "manifest"));
        } else {
            if (a.dims.empty()) throw Error(ErrorCode::InvalidRequest, "--raw needs --dims or --manifest", "dims");
            m.dims = dims_arg(a.dims);
            m.spacing = {a.spacing[0], a.spacing[1], a.spacing[2]};
            m.format = raw::sample_format_from_string(a.format);
        }
        volume = raw::load_raw(read_file(a.raw), m.dims, m.spacing, m.format);
    } else {
        const Dims dims = a.dims.empty() ? Dims{128, 128, 128} : dims_arg(a.dims);
        volume = generate_phantom(phantom_kind_from_string(a.phantom), dims);
        source = VolumeSource::phantom;
    }
    VolumeStore store(a.out);
    const VolumeManifest m = store.add(*volume, source);
    out << to_json(m).dump(2) << '\n';
    return 0;
}

struct RenderArgs {
    std::string store;
    std::string volume;
    std::string request;
    std::string camera;
    std::string tf;
    std::string settings;
    std::string out;
    std::string stats;
};

int run_render(const RenderArgs& a, unsigned threads)
{
    nlohmann::json body = nlohmann::json::object();
    if (!a.request.empty()) {
        body = read_json_file(a.request, "request");
    }
    if (!a.camera.empty()) body["camera"] = read_json_file(a.camera, "camera");
    if (!a.tf.empty()) body["transfer_function"] = transfer_function_arg(a.tf);
    if (!a.settings.empty()) body["settings"] = read_json_file(a.settings, "settings");

    VolumeStore store(a.store);
    const auto volume = store.load(a.volume);
    const RenderRequest request = render_request_from_json(body);
    RenderOptions options;
    options.threads = threads;
    const std::string ext = fs::path(a.out).extension().string();
    RenderStats stats;
    if (ext == ".ppm") {
        const ImageRGBA image = render(*volume, request.camera, request.transfer_function, request.settings, options);
        stats = image.stats;
        write_output(a.out, encode_ppm(image));
    } else {
        write_output(a.out, render_png(*volume, request, options, &stats));
    }
    if (!a.stats.empty()) {
        write_output(a.stats, to_json(stats).dump(2) + "\n");
    }
    return 0;
}

int run_quality(const std::string& ref, const std::string& test, std::ostream& out)
{
    const ImageRGBA a = decode_png(read_file(ref));
    const ImageRGBA b = decode_png(read_file(test));
    out << to_json(compare(a, b)).dump(2) << '\n';
    return 0;
}

struct BenchArgs {
    std::string store;
    std::string volume;
    std::string tf = "bone";
    std::string camera;
    std::string settings;
    bool study = false;
    std::vector<double> steps;
    std::string format = "csv";
    std::string out;
};

int run_bench(const BenchArgs& a, unsigned threads, std::ostream& out)
{
    VolumeStore store(a.store);
    const auto volume = store.load(a.volume);
    nlohmann::json body = {{"transfer_function", transfer_function_arg(a.tf)}};
    body["camera"] = a.camera.empty() ? to_json(default_camera(*volume)) : read_json_file(a.camera, "camera");
    if (!a.settings.empty()) body["settings"] = read_json_file(a.settings, "settings");
    const RenderRequest request = render_request_from_json(body);
    RenderOptions options;
    options.threads = threads;

    std::string text;
    if (a.study) {
        std::vector<double> steps = a.steps;
        if (steps.empty()) {
            const Vec3 s = volume->spacing();
            const double spacing = std::min({s.x, s.y, s.z});
            steps = {2.0 * spacing, 1.0 * spacing, 0.5 * spacing, 0.25 * spacing};
        }
        const ConvergenceStudy study =
            convergence_study(*volume, request.camera, request.transfer_function, request.settings, steps, options);
        text = a.format == "json" ? to_json(study).dump(2) + "\n" : to_csv(study);
    } else {
        RenderSettings settings = request.settings;
        settings.use_blocks = true;
        const Renderer renderer(*volume, request.transfer_function, settings);
        const ImageRGBA image = renderer.render(request.camera, options);
        const BlockGrid& grid = *renderer.grid();
        nlohmann::json j = {
            {"volume", a.volume},
            {"dims", {volume->dims().nx, volume->dims().ny, volume->dims().nz}},
            {"blocks",
             {{"block_size", grid.block_size()},
              {"overlap", grid.overlap()},
              {"total", grid.total()},
              {"empty", grid.empty_count()},
              {"empty_percent", 100.0 * grid.empty_fraction()}}},
            {"render", to_json(image.stats)},
        };
        text = j.dump(2) + "\n";
    }
    if (a.out.empty()) {
        out << text;
    } else {
        write_output(a.out, text);
    }
    return 0;
}

struct SvrArgs {
    std::string mesh;
    double radius = 0.0;
    std::string out;
    std::string ply;
    int samples_per_triangle = 256;
    int volume_samples = 100000;
    std::uint64_t seed = 0;
    bool centroids = false;
};

int run_svr(const SvrArgs& a, unsigned threads, std::ostream& out)
{
    const MeshIndex index(read_mesh(a.mesh));
    SvrParams params;
    params.radius = a.radius;
    params.samples_per_triangle = a.samples_per_triangle;
    params.volume_samples = a.volume_samples;
    params.seed = a.seed;
    params.centroids = a.centroids;
    params.threads = threads;
    const auto field = svr_field(index, params);
    const std::string csv = svr_csv(field);
    if (a.out.empty()) {
        out << csv;
    } else {
        write_output(a.out, csv);
    }
    if (!a.ply.empty()) {
        if (a.centroids) {
            throw Error(ErrorCode::InvalidRequest, "--ply needs per-vertex values; drop --centroids", "ply");
        }
        std::vector<double> values;
        for (const SvrPoint& p : field) values.push_back(p.result.svr.value_or(std::nan("")));
        write_output(a.ply, write_ply(index.mesh(), values));
    }
    return 0;
}

struct MeshArgs {
    std::string shape = "sphere";
    double radius = 1.0;
    int subdivisions = 3;
    std::vector<double> size{1.0, 1.0, 1.0};
    double cell = 0.1;
    std::string out;
};

int run_make_mesh(const MeshArgs& a)
{
    TriangleMesh mesh;
    if (a.shape == "sphere") {
        mesh = make_icosphere(a.radius, a.subdivisions);
    } else if (a.shape == "box") {
        const Vec3 half{a.size[0] / 2, a.size[1] / 2, a.size[2] / 2};
        mesh = make_box(half * -1.0, half, a.cell);
    } else {
        throw Error(ErrorCode::InvalidRequest, "shape must be sphere or box", "shape");
    }
    const auto format = mesh_format_from_path(a.out);
    if (format == MeshFormat::stl) {
        write_output(a.out, write_stl_binary(mesh));
    } else if (format == MeshFormat::off) {
        write_output(a.out, write_off(mesh));
    } else {
        throw Error(ErrorCode::InvalidRequest, "output must end in .stl or .off", "out");
    }
    return 0;
}

RenderService* g_service = nullptr;

extern "C" void stop_service(int)
{
    if (g_service) g_service->stop();
}

int run_serve(ServiceConfig config, std::ostream& out)
{
    RenderService service(std::move(config));
    const int port = service.bind();
    out << "listening on port " << port << std::endl;
    g_service = &service;
    std::signal(SIGINT, stop_service);
    std::signal(SIGTERM, stop_service);
    service.serve();
    g_service = nullptr;
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Volume rendering, quality and surface morphology tools", "voxelcast"};
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = all cores)");

    IngestArgs ingest;
    auto* ingest_cmd = app.add_subcommand("ingest", "Load a volume into a store and print its manifest");
    ingest_cmd->add_option("--out", ingest.out, "Store directory")->required();
    auto* dicom_opt = ingest_cmd->add_option("--dicom-dir", ingest.dicom_dir, "Directory of single-frame DICOM slices")
                          ->check(CLI::ExistingDirectory);
    auto* raw_opt = ingest_cmd->add_option("--raw", ingest.raw, "Raw little-endian voxel file")->check(CLI::ExistingFile);
    auto* phantom_opt = ingest_cmd->add_option("--phantom", ingest.phantom, "Synthetic phantom: sphere, shell or torso");
    ingest_cmd->add_option("--manifest", ingest.manifest, "Raw manifest JSON (instead of --dims/--spacing/--format)")
        ->needs(raw_opt)
        ->check(CLI::ExistingFile);
    ingest_cmd->add_option("--dims", ingest.dims, "nx ny nz, or one value for a cube")->expected(1, 3)->delimiter(',');
    ingest_cmd->add_option("--spacing", ingest.spacing, "Voxel spacing in mm")->expected(3)->delimiter(',');
    ingest_cmd->add_option("--format", ingest.format, "Raw sample format: u8, i16 or u16");
    dicom_opt->excludes(raw_opt)->excludes(phantom_opt);
    raw_opt->excludes(phantom_opt);
    ingest_cmd->require_option(2, 5);

    RenderArgs render_args;
    auto* render_cmd = app.add_subcommand("render", "Render a stored volume to PNG or PPM");
    render_cmd->add_option("--store", render_args.store, "Store directory")->required();
    render_cmd->add_option("--volume", render_args.volume, "Volume id")->required();
    render_cmd->add_option("--request", render_args.request, "Render request JSON (camera, transfer_function, settings)")
        ->check(CLI::ExistingFile);
    render_cmd->add_option("--camera", render_args.camera, "Camera JSON")->check(CLI::ExistingFile);
    render_cmd->add_option("--tf", render_args.tf, "Transfer function JSON file or preset name");
    render_cmd->add_option("--settings", render_args.settings, "Render settings JSON")->check(CLI::ExistingFile);
    render_cmd->add_option("--out", render_args.out, "Output image (.png or .ppm)")->required();
    render_cmd->add_option("--stats", render_args.stats, "Write render statistics JSON here");

    std::string ref_path;
    std::string test_path;
    auto* quality_cmd = app.add_subcommand("quality", "Compare two PNG images (PSNR, SSIM)");
    quality_cmd->add_option("--ref", ref_path, "Reference image")->required()->check(CLI::ExistingFile);
    quality_cmd->add_option("--test", test_path, "Test image")->required()->check(CLI::ExistingFile);

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Block statistics and render timing, or a step convergence study");
    bench_cmd->add_option("--store", bench.store, "Store directory")->required();
    bench_cmd->add_option("--volume", bench.volume, "Volume id")->required();
    bench_cmd->add_option("--tf", bench.tf, "Transfer function JSON file or preset name");
    bench_cmd->add_option("--camera", bench.camera, "Camera JSON")->check(CLI::ExistingFile);
    bench_cmd->add_option("--settings", bench.settings, "Render settings JSON")->check(CLI::ExistingFile);
    bench_cmd->add_flag("--study", bench.study, "Run a step-size convergence study");
    bench_cmd->add_option("--steps", bench.steps, "Study steps in mm, descending")->delimiter(',');
    bench_cmd->add_option("--format", bench.format, "Study output: csv or json")->check(CLI::IsMember({"csv", "json"}));
    bench_cmd->add_option("--out", bench.out, "Output file (default stdout)");

    SvrArgs svr;
    auto* svr_cmd = app.add_subcommand("svr", "Surface-to-volume ratio field on a closed mesh");
    svr_cmd->add_option("--mesh", svr.mesh, "Closed triangle mesh (.stl or .off)")->required()->check(CLI::ExistingFile);
    svr_cmd->add_option("--radius", svr.radius, "Sphere radius in mm")->required()->check(CLI::PositiveNumber);
    svr_cmd->add_option("--out", svr.out, "CSV output (default stdout)");
    svr_cmd->add_option("--ply", svr.ply, "Also write the mesh with per-vertex SVR as PLY");
    svr_cmd->add_option("--samples-per-triangle", svr.samples_per_triangle, "Area samples per cut triangle")
        ->check(CLI::PositiveNumber);
    svr_cmd->add_option("--volume-samples", svr.volume_samples, "Volume samples per point")->check(CLI::PositiveNumber);
    svr_cmd->add_option("--seed", svr.seed, "Random seed");
    svr_cmd->add_flag("--centroids", svr.centroids, "Evaluate at triangle centroids instead of vertices");

    MeshArgs mesh;
    auto* mesh_cmd = app.add_subcommand("make-mesh", "Write a test mesh (icosphere or tessellated box)");
    mesh_cmd->add_option("--shape", mesh.shape, "sphere or box")->check(CLI::IsMember({"sphere", "box"}));
    mesh_cmd->add_option("--radius", mesh.radius, "Sphere radius in mm")->check(CLI::PositiveNumber);
    mesh_cmd->add_option("--subdivisions", mesh.subdivisions, "Icosphere subdivisions")->check(CLI::Range(0, 7));
    mesh_cmd->add_option("--size", mesh.size, "Box size in mm")->expected(3)->delimiter(',');
    mesh_cmd->add_option("--cell", mesh.cell, "Box face cell size in mm")->check(CLI::PositiveNumber);
    mesh_cmd->add_option("--out", mesh.out, "Output mesh (.stl or .off)")->required();

    ServiceConfig service;
    std::string data_dir = service.data_dir.string();
    std::string static_dir;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP render service");
    serve_cmd->add_option("--host", service.host, "Bind address")->envname("VOXELCAST_HOST");
    serve_cmd->add_option("--port", service.port, "Port (0 = any free port)")->envname("VOXELCAST_PORT");
    serve_cmd->add_option("--data", data_dir, "Store directory")->envname("VOXELCAST_DATA");
    serve_cmd->add_option("--cache", service.cache_size, "Decoded volumes kept in memory")->envname("VOXELCAST_CACHE");
    serve_cmd->add_option("--upload-cap", service.upload_cap, "Largest accepted request body in bytes")
        ->envname("VOXELCAST_UPLOAD_CAP");
    serve_cmd->add_option("--queue", service.queue_bound, "Concurrent renders before 503")->envname("VOXELCAST_QUEUE");
    serve_cmd->add_option("--static", static_dir, "Directory served under /viewer")->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (ingest_cmd->parsed()) return run_ingest(ingest, out);
        if (render_cmd->parsed()) return run_render(render_args, threads);
        if (quality_cmd->parsed()) return run_quality(ref_path, test_path, out);
        if (bench_cmd->parsed()) return run_bench(bench, threads, out);
        if (svr_cmd->parsed()) return run_svr(svr, threads, out);
        if (mesh_cmd->parsed()) return run_make_mesh(mesh);
        if (serve_cmd->parsed()) {
            service.data_dir = data_dir;
            service.render_threads = threads;
            if (!static_dir.empty()) service.static_dir = static_dir;
            return run_serve(std::move(service), out);
        }
    } catch (const Error& e) {
        err << to_json(e).dump() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << nlohmann::json{{"error", "IoError"}, {"message", e.what()}}.dump() << '\n';
        return 1;
    }
    return 2;
}

}  // namespace voxelcast
