// mumar: generate synthetic turntable datasets, register them, evaluate results.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mumar/dataset.hpp"
#include "mumar/error.hpp"
#include "mumar/evaluation.hpp"
#include "mumar/pipeline.hpp"
#include "mumar/ply.hpp"

namespace fs = std::filesystem;
using namespace mumar;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotConverged = 2;
constexpr int kExitInput = 3;

fs::path output_dir(const fs::path& requested) {
  if (const char* env = std::getenv("MUMAR_OUTPUT_DIR"); env && *env) return fs::path(env);
  return requested;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create '" + dir.string() + "': " + ec.message());
}

struct GenerateArgs {
  std::string config;
  std::string object = "cube";
  std::size_t views = 60;
  double step = 6.0;
  double sigma = 0.0;
  double density = 2000.0;
  std::uint64_t seed = 1;
  std::string out = "mumar_data";
};

int cmd_generate(const GenerateArgs& a, const CLI::App& sub) {
  RunConfig cfg;
  if (!a.config.empty()) cfg = run_config_from_json(read_text(a.config));
  if (!cfg.scene) cfg.scene = default_benchmark_scene(shape_from_string(a.object));
  SceneSpec& spec = *cfg.scene;
  if (sub.count("--object")) spec.object.shape = shape_from_string(a.object);
  if (sub.count("--views") || a.config.empty()) spec.n_views = a.views;
  if (sub.count("--step") || a.config.empty()) spec.step_deg = a.step;
  if (sub.count("--sigma") || a.config.empty()) spec.noise_sigma = a.sigma;
  if (sub.count("--density") || a.config.empty()) spec.density = a.density;
  if (sub.count("--seed") || a.config.empty()) cfg.seed = a.seed;
  spec.seed = cfg.seed;
  cfg.input_dir.reset();
  if (sub.count("--out") || a.config.empty()) cfg.output_dir = a.out;
  cfg.output_dir = output_dir(cfg.output_dir);
  cfg.validate();

  const auto views = synthesize(spec);
  write_dataset(cfg.output_dir, views, object_mesh(spec));
  write_text(cfg.output_dir / "run_config.json", to_json(cfg));
  std::cout << "wrote " << views.size() << " views to " << cfg.output_dir.string() << "\n";
  return kExitOk;
}

struct RegisterArgs {
  std::string config;
  std::string input;
  std::string backend = "mumar";
  std::size_t window = 4;
  bool pairwise_init = false;
  bool icp_fallback = false;
  bool no_scene_adjust = false;
  std::string constraints;
  std::uint64_t seed = 1;
  std::string out = "mumar_result";
};

int cmd_register(const RegisterArgs& a, const CLI::App& sub) {
  RunConfig cfg;
  if (!a.config.empty()) cfg = run_config_from_json(read_text(a.config));
  cfg.scene.reset();
  if (sub.count("--input")) cfg.input_dir = a.input;
  if (!cfg.input_dir) throw Error(ErrorCode::kInvalidArgument, "--input is required");
  if (sub.count("--backend") || a.config.empty()) cfg.backend = backend_from_string(a.backend);
  if (sub.count("--window") || a.config.empty()) cfg.registration.window = a.window;
  if (sub.count("--pairwise-init")) cfg.registration.pairwise_init = true;
  if (sub.count("--icp-fallback")) cfg.registration.icp_fallback = true;
  if (sub.count("--no-scene-adjust")) cfg.registration.scene_adjust = false;
  if (!a.constraints.empty()) cfg.constraints = constraints_from_json(read_text(a.constraints));
  if (sub.count("--seed") || a.config.empty()) cfg.seed = a.seed;
  if (sub.count("--out") || a.config.empty()) cfg.output_dir = a.out;
  cfg.output_dir = output_dir(cfg.output_dir);
  cfg.validate();

  const auto views = load_dataset(*cfg.input_dir);
  const PipelineResult result = run_backend(views, cfg);
  make_dir(cfg.output_dir);
  write_registration_outputs(cfg.output_dir, result);
  write_text(cfg.output_dir / "run_config.json", to_json(cfg));
  std::cout << "registered " << views.size() << " views with " << to_string(cfg.backend)
            << (result.converged ? "" : " (not converged)") << "\n";
  return result.converged ? kExitOk : kExitNotConverged;
}

struct EvaluateArgs {
  std::string result;
  std::string reference;
  bool fine_align = false;
  std::string out = "mumar_eval";
};

int cmd_evaluate(const EvaluateArgs& a) {
  const fs::path out = output_dir(a.out);
  PointCloud result = read_ply(a.result);
  if (result.empty()) throw Error(ErrorCode::kEmptyInput, "'" + a.result + "' has no points");
  const TriangleMesh mesh = read_ply_mesh(a.reference);
  std::vector<double> d;
  if (mesh.triangles.empty()) {
    const PointCloud ref = read_ply(a.reference);
    if (a.fine_align) {
      if (!ref.has_normals()) throw Error(ErrorCode::kInvalidArgument, "fine alignment onto a cloud needs normals");
      result = fine_align(result, ref).aligned;
    }
    d = point_distances(result, ref);
  } else {
    if (a.fine_align) result = fine_align(result, mesh).aligned;
    d = point_distances(result, mesh);
  }
  std::vector<double> sq(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) sq[i] = d[i] * d[i];
  const DistanceStats s = stats_from_squared(sq);

  make_dir(out);
  std::ostringstream csv;
  csv.precision(17);
  csv << "min,max,mean,rms,n_samples\n" << s.min << ',' << s.max << ',' << s.mean << ',' << s.rms << ',' << s.n_samples << '\n';
  write_text(out / "stats.csv", csv.str());
  write_ply(result, out / "distances.ply", PlyFormat::kBinaryLittleEndian, d, "distance");
  std::cout << csv.str();
  return kExitOk;
}

struct ExportArgs {
  std::string input;
  std::string transforms;
  bool with_markers = false;
  std::string out = "merged.ply";
};

int cmd_export(const ExportArgs& a) {
  ViewManifest manifest;
  const auto views = load_dataset(a.input, &manifest);
  PointCloud merged;
  for (std::size_t v = 0; v < views.size(); ++v) {
    char name[32];
    std::snprintf(name, sizeof name, "view_%03zu.txt", v);
    const RigidTransform t = read_transform(fs::path(a.transforms) / name);
    merged.append(apply_transform(t, views[v].object_cloud));
    if (a.with_markers) {
      for (const auto& m : views[v].marker_clouds) merged.append(apply_transform(t, m));
    }
  }
  fs::path out = a.out;
  if (const char* env = std::getenv("MUMAR_OUTPUT_DIR"); env && *env) out = fs::path(env) / out.filename();
  if (out.has_parent_path()) make_dir(out.parent_path());
  write_ply(merged, out);
  std::cout << "wrote " << merged.size() << " points to " << out.string() << "\n";
  return kExitOk;
}

struct BenchmarkArgs {
  std::vector<std::string> objects{"cube", "pyramid", "double_pyramid"};
  std::vector<double> sigmas{0.0, 0.002, 0.005};
  std::size_t views = 60;
  std::uint64_t seed = 1;
  std::string out = "mumar_benchmark";
};

int cmd_benchmark(const BenchmarkArgs& a) {
  BenchmarkSettings s;
  s.objects.clear();
  for (const auto& o : a.objects) s.objects.push_back(shape_from_string(o));
  s.sigmas = a.sigmas;
  s.seed = a.seed;
  SceneSpec spec = default_benchmark_scene();
  spec.n_views = a.views;
  s.base.scene = spec;
  const fs::path out = output_dir(a.out);
  const BenchmarkReport report = run_benchmark(s);
  make_dir(out);
  write_text(out / "benchmark.csv", report.csv());
  write_text(out / "benchmark.txt", report.text());
  std::cout << report.text();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiplane 3D marker based multi-view registration"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Render a synthetic turntable dataset");
  g->add_option("--config", gen.config, "RunConfig JSON to start from");
  g->add_option("--object", gen.object, "cube | pyramid | double_pyramid");
  g->add_option("--views", gen.views, "Number of views");
  g->add_option("--step", gen.step, "Turntable step in degrees");
  g->add_option("--sigma", gen.sigma, "Noise standard deviation (length units)");
  g->add_option("--density", gen.density, "Samples per unit area");
  g->add_option("--seed", gen.seed, "RNG seed");
  g->add_option("--out", gen.out, "Output directory");

  RegisterArgs reg;
  auto* r = app.add_subcommand("register", "Register a dataset and merge the object views");
  r->add_option("--config", reg.config, "RunConfig JSON to start from");
  r->add_option("--input", reg.input, "Dataset directory holding manifest.json");
  r->add_option("--backend", reg.backend, "mumar | icp");
  r->add_option("--window", reg.window, "Views per multi-view window");
  r->add_flag("--pairwise-init", reg.pairwise_init, "Pairwise pre-registration inside each window");
  r->add_flag("--icp-fallback", reg.icp_fallback, "Refine rank-deficient views with ICP");
  r->add_flag("--no-scene-adjust", reg.no_scene_adjust, "Skip the global scene adjustment");
  r->add_option("--constraints", reg.constraints, "Marker constraints JSON");
  r->add_option("--seed", reg.seed, "RNG seed for plane detection");
  r->add_option("--out", reg.out, "Output directory");

  EvaluateArgs ev;
  auto* e = app.add_subcommand("evaluate", "Distance statistics of a result against a reference");
  e->add_option("--result", ev.result, "Result cloud (PLY)")->required();
  e->add_option("--reference", ev.reference, "Reference mesh or cloud (PLY)")->required();
  e->add_flag("--fine-align", ev.fine_align, "ICP-align the result onto the reference first");
  e->add_option("--out", ev.out, "Output directory");

  ExportArgs ex;
  auto* x = app.add_subcommand("export", "Merge dataset views with a set of transforms");
  x->add_option("--input", ex.input, "Dataset directory")->required();
  x->add_option("--transforms", ex.transforms, "Directory of view_NNN.txt transforms")->required();
  x->add_flag("--with-markers", ex.with_markers, "Include the marker clouds");
  x->add_option("--out", ex.out, "Output PLY file");

  BenchmarkArgs bm;
  auto* b = app.add_subcommand("benchmark", "Compare both backends over objects and noise levels");
  b->add_option("--objects", bm.objects, "Object shapes");
  b->add_option("--sigmas", bm.sigmas, "Noise levels as fractions of the marker edge");
  b->add_option("--views", bm.views, "Number of views");
  b->add_option("--seed", bm.seed, "RNG seed");
  b->add_option("--out", bm.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& err) {
    return app.exit(err);
  } catch (const CLI::ParseError& err) {
    app.exit(err);
    return kExitInput;
  }

  try {
    if (g->parsed()) return cmd_generate(gen, *g);
    if (r->parsed()) return cmd_register(reg, *r);
    if (e->parsed()) return cmd_evaluate(ev);
    if (x->parsed()) return cmd_export(ex);
    if (b->parsed()) return cmd_benchmark(bm);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return err.code() == ErrorCode::kNotConverged ? kExitNotConverged : kExitInput;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitInput;
  }
  return kExitInput;
}
