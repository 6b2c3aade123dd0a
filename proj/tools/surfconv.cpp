#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "surfconv/config.h"
#include "surfconv/convnet.h"
#include "surfconv/d4.h"
#include "surfconv/densify.h"
#include "surfconv/encode.h"
#include "surfconv/error.h"
#include "surfconv/eval.h"
#include "surfconv/io.h"
#include "surfconv/pyramid.h"
#include "surfconv/synth.h"

namespace fs = std::filesystem;
using namespace surfconv;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::string> gamma, levels, delta, seed, threads, loss;
  bool keep_context = false;
  std::vector<std::string> set;  // raw key=value pairs
};

Config ResolveConfig(const Overrides& o) {
  Config cfg = o.config_path.empty() ? Config{} : LoadConfig(o.config_path);
  for (const std::string& kv : o.set) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParse, "--set expects key=value, got '" + kv + "'");
    }
    cfg.Set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.gamma) cfg.Set("gamma", *o.gamma);
  if (o.levels) cfg.Set("levels", *o.levels);
  if (o.delta) cfg.Set("delta", *o.delta);
  if (o.seed) cfg.Set("seed", *o.seed);
  if (o.threads) cfg.Set("threads", *o.threads);
  if (o.loss) cfg.Set("loss", *o.loss);
  if (o.keep_context) cfg.keep_context = true;
  return cfg;
}

void EnsureParent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::string Stem(const std::string& path) {
  const fs::path p(path);
  return (p.parent_path() / p.stem()).string();
}

std::vector<float> AllDepths(const std::vector<std::string>& files, const Config& cfg) {
  std::vector<float> depths;
  for (const std::string& f : files) {
    const auto d = ReadDepth(f, cfg.depth_scale).ValidDepths();
    depths.insert(depths.end(), d.begin(), d.end());
  }
  return depths;
}

void PrintPartition(const LevelPartition& part) {
  std::printf("gamma %.6g, %zu levels\n", part.gamma, part.n_levels());
  for (std::size_t n = 0; n < part.n_levels(); ++n) {
    std::printf("  level %zu: [%.6g, %.6g) rep %.6g\n", n, part.boundaries[n],
                part.boundaries[n + 1], part.rep_depths[n]);
  }
}

int FitD4(const Config& cfg, const std::vector<std::string>& depth_files,
          const std::string& out) {
  const LevelPartition part =
      FitPartition(AllDepths(depth_files, cfg), cfg.gamma, cfg.levels);
  PrintPartition(part);
  if (!out.empty()) {
    EnsureParent(out);
    SavePartition(out, part);
  }
  return 0;
}

int Sweep(const Config& cfg, const std::vector<std::string>& depth_files,
          const std::vector<double>& gammas) {
  const std::vector<float> depths = AllDepths(depth_files, cfg);
  double total_area = 0.0;
  for (float z : depths) total_area += static_cast<double>(z) * z;
  std::printf("gamma,level,lo,hi,rep,pixel_share,area_share\n");
  for (double gamma : gammas) {
    const LevelPartition part = FitPartition(depths, gamma, cfg.levels);
    std::vector<double> pixels(part.n_levels(), 0.0), area(part.n_levels(), 0.0);
    for (float z : depths) {
      const std::size_t n = AssignLevel(part, z);
      pixels[n] += 1.0;
      area[n] += static_cast<double>(z) * z;
    }
    for (std::size_t n = 0; n < part.n_levels(); ++n) {
      std::printf("%.6g,%zu,%.6g,%.6g,%.6g,%.6f,%.6f\n", gamma, n, part.boundaries[n],
                  part.boundaries[n + 1], part.rep_depths[n],
                  pixels[n] / depths.size(), area[n] / total_area);
    }
  }
  return 0;
}

int MakePyramid(const Config& cfg, const std::string& image_path,
                const std::string& depth_path, const std::string& labels_path,
                const std::string& partition_path, const std::string& out) {
  const ColorImage image = ReadColor(image_path);
  const DepthImage depth = ReadDepth(depth_path, cfg.depth_scale);
  std::optional<LabelMap> labels;
  if (!labels_path.empty()) labels = ReadLabels(labels_path);
  const LevelPartition part =
      partition_path.empty() ? FitPartition(depth.ValidDepths(), cfg.gamma, cfg.levels)
                             : LoadPartition(partition_path);
  PyramidOptions opts;
  opts.keep_context = cfg.keep_context;
  opts.threads = cfg.ResolvedThreads();
  const Pyramid pyr =
      BuildPyramid(image, depth, labels ? &*labels : nullptr, part, opts);
  DumpPyramid(out, pyr);
  for (const PyramidLevel& level : pyr.levels) {
    std::size_t valid = 0;
    for (auto v : level.valid.data()) valid += v != 0;
    const double z = part.rep_depths[level.level_index];
    // Surface receptive field of radius delta, measured in level pixels.
    const double rf = level.scale * cfg.camera.fx * cfg.delta / z;
    std::printf("level %zu: scale %.6g, %dx%d, %zu valid cells, rf half-width %.3f px\n",
                level.level_index, level.scale, level.image.width(),
                level.image.height(), valid, rf);
  }
  return 0;
}

int Densify(const Config& cfg, const std::string& sparse_path,
            const std::string& cloud_path, const std::string& out,
            std::string mask_out) {
  const CameraModel& cam = cfg.camera;
  const SparseDepth sparse = !cloud_path.empty()
                                 ? SparseFromCloud(ReadPly(cloud_path), cam)
                                 : ReadSparseText(sparse_path, cam.width, cam.height);
  DensifyOptions opts;
  opts.max_edge = cfg.densify_max_edge;
  opts.max_depth_gap = cfg.densify_max_depth_gap;
  opts.threads = cfg.ResolvedThreads();
  const TriangleMesh mesh = Triangulate(sparse, opts);
  const DepthImage dense = Rasterize(mesh, cam.width, cam.height, opts.threads);
  if (mask_out.empty()) mask_out = Stem(out) + "_valid.pgm";
  EnsureParent(out);
  EnsureParent(mask_out);
  WriteDepth(out, mask_out, dense);
  std::printf("%zu samples, %zu triangles, %zu of %d pixels filled\n",
              sparse.samples().size(), mesh.triangles.size(), dense.CountValid(),
              cam.width * cam.height);
  return 0;
}

int Hha(const Config& cfg, const std::string& depth_path, const std::string& out) {
  HhaOptions opts;
  opts.gravity = cfg.gravity;
  opts.ground_height = cfg.ground_height;
  const HhaImage hha = ComputeHha(ReadDepth(depth_path, cfg.depth_scale), cfg.camera, opts);
  EnsureParent(out);
  WritePfm(out, hha.channels);
  WritePgm8(Stem(out) + "_valid.pgm", hha.valid);
  return 0;
}

int Train(const Config& cfg, const std::vector<std::string>& pyramid_dirs,
          const std::string& out, const std::string& trace_path) {
  std::vector<TrainSample> dataset;
  int channels = 0;
  for (const std::string& dir : pyramid_dirs) {
    const Pyramid pyr = LoadPyramid(dir);
    channels = pyr.levels.front().image.channels();
    dataset.push_back(SampleFromPyramid(pyr));
  }
  SegNet net(channels, cfg.hidden, cfg.num_classes, cfg.kernel);
  net.InitRandom(cfg.seed);
  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.learning_rate = cfg.learning_rate;
  tc.seed = cfg.seed;
  tc.batch_size = cfg.batch_size;
  tc.threads = cfg.ResolvedThreads();
  tc.loss.mode = cfg.loss;
  const auto trace = TrainSurfConv(net, dataset, tc);
  EnsureParent(out);
  net.Save(out);
  if (!trace_path.empty()) {
    EnsureParent(trace_path);
    WriteLossTrace(trace_path, trace);
  }
  std::printf("%zu parameters, %zu images, final loss %.6g, train acc %.4f\n",
              net.ParameterCount(), dataset.size(), trace.back().loss,
              trace.back().pixel_acc);
  return 0;
}

int InferCmd(const std::string& pyramid_dir, const std::string& net_path,
             const std::string& out) {
  const LabelMap labels = Infer(SegNet::Load(net_path), LoadPyramid(pyramid_dir));
  EnsureParent(out);
  WriteLabels(out, labels);
  return 0;
}

int Eval(const Config& cfg, const std::vector<std::string>& preds,
         const std::vector<std::string>& gts, const std::vector<std::string>& depths,
         const std::string& mode, const std::string& out) {
  if (preds.size() != gts.size()) {
    throw Error(ErrorCode::kInvalidArgument, "need one ground-truth map per prediction");
  }
  const bool surf = mode == "surf";
  if (surf && depths.size() != preds.size()) {
    throw Error(ErrorCode::kInvalidArgument, "surface metrics need one depth map per prediction");
  }
  ConfusionMatrix cm(cfg.num_classes);
  for (std::size_t k = 0; k < preds.size(); ++k) {
    const LabelMap pred = ReadLabels(preds[k]);
    const LabelMap gt = ReadLabels(gts[k]);
    if (surf) {
      const Image<double> w = SurfaceWeights(ReadDepth(depths[k], cfg.depth_scale), cfg.camera);
      Accumulate(cm, pred, gt, &w);
    } else {
      Accumulate(cm, pred, gt);
    }
  }
  const SegmentationMetrics m = ComputeMetrics(cm);
  std::fputs(MetricsTable(m, surf ? "surf" : "img").c_str(), stdout);
  if (!out.empty()) {
    EnsureParent(out);
    std::ofstream(out) << MetricsCsv(m);
  }
  return 0;
}

Box3 ParseBounds(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      v.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, "bad bounds value '" + item + "'");
    }
  }
  if (v.size() != 6) throw Error(ErrorCode::kParse, "bounds need 6 comma-separated values");
  return {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}};
}

int OccupancyCmd(const Config& cfg, const std::string& cloud_path,
                 const std::string& depth_path, const std::vector<double>& resolutions,
                 const std::string& bounds_text, const std::string& out) {
  const PointCloud cloud = !cloud_path.empty()
                               ? ReadPly(cloud_path)
                               : CloudFromDepth(cfg.camera, ReadDepth(depth_path, cfg.depth_scale));
  const Box3 bounds = bounds_text.empty() ? CloudBounds(cloud) : ParseBounds(bounds_text);
  std::ostringstream csv;
  csv << "resolution,nx,ny,nz,occupied,total,fraction\n";
  for (double res : resolutions) {
    const OccupancyReport rep = Occupancy(cloud, res, bounds);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.6g,%lld,%lld,%lld,%lld,%lld,%.8g\n", res,
                  rep.dims[0], rep.dims[1], rep.dims[2], rep.occupied, rep.total,
                  rep.fraction);
    csv << buf;
  }
  std::fputs(csv.str().c_str(), stdout);
  if (!out.empty()) {
    EnsureParent(out);
    std::ofstream(out) << csv.str();
  }
  return 0;
}

int Synth(const Config& cfg, const std::string& scene_path, const std::string& out) {
  SyntheticScene scene;
  if (!scene_path.empty()) {
    std::ifstream in(scene_path);
    if (!in) throw Error(ErrorCode::kIo, "cannot read " + scene_path);
    std::stringstream ss;
    ss << in.rdbuf();
    scene = ParseScene(ss.str());
  } else {
    scene = RandomScene(RandomSceneOptions{}, cfg.seed);
  }
  const RenderedScene r = Render(scene);
  EnsureParent(out + "_rgb.ppm");
  WritePpm(out + "_rgb.ppm", r.rgb);
  WriteDepth(out + "_depth.pfm", out + "_valid.pgm", r.depth);
  WriteLabels(out + "_labels.pgm", r.labels);
  std::ofstream(out + "_scene.txt") << SceneToText(scene);
  std::printf("%dx%d, %zu objects, %zu pixels with depth\n", r.rgb.width(),
              r.rgb.height(), scene.objects.size(), r.depth.CountValid());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth-aware multi-scale segmentation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  Overrides ov;
  app.add_option("--config", ov.config_path, "key = value config file");
  app.add_option("--set", ov.set, "extra key=value config overrides");
  app.add_option("--gamma", ov.gamma, "importance exponent");
  app.add_option("--levels", ov.levels, "number of depth levels");
  app.add_option("--delta", ov.delta, "surface receptive-field radius (m)");
  app.add_option("--seed", ov.seed, "random seed");
  app.add_option("--threads", ov.threads, "worker cap (default: SURFCONV_THREADS)");
  app.add_option("--loss", ov.loss, "uniform or r")->check(CLI::IsMember({"uniform", "r"}));
  app.add_flag("--keep-context", ov.keep_context, "keep out-of-level color as context");

  std::string out;
  std::vector<std::string> depth_files;

  auto* fit = app.add_subcommand("fit-d4", "fit a depth partition");
  fit->add_option("depth", depth_files, "depth maps (.pfm or .pgm)")->required();
  fit->add_option("--out", out, "partition JSON");

  std::vector<double> gammas{0.0, 0.5, 1.0, 1.5, 2.0};
  auto* sweep = app.add_subcommand("sweep", "partition shares across gamma values");
  sweep->add_option("depth", depth_files, "depth maps")->required();
  sweep->add_option("--gammas", gammas, "gamma values")->delimiter(',');

  std::string image, depth, labels, partition;
  auto* pyr = app.add_subcommand("pyramid", "build and dump a pyramid");
  pyr->add_option("--image", image)->required();
  pyr->add_option("--depth", depth)->required();
  pyr->add_option("--labels", labels);
  pyr->add_option("--partition", partition, "fitted on this frame when omitted");
  pyr->add_option("--out", out, "output directory")->required();

  std::string sparse, cloud, mask;
  auto* dens = app.add_subcommand("densify", "triangulate sparse depth");
  auto* sparse_opt = dens->add_option("--sparse", sparse, "row col depth text file");
  auto* cloud_opt = dens->add_option("--cloud", cloud, "PLY cloud to project");
  sparse_opt->excludes(cloud_opt);
  dens->add_option("--out", out, "dense depth PFM")->required();
  dens->add_option("--mask", mask, "validity PGM");

  auto* hha = app.add_subcommand("hha", "HHA encoding of a depth map");
  hha->add_option("--depth", depth)->required();
  hha->add_option("--out", out, "3-channel PFM")->required();

  std::vector<std::string> pyramids;
  std::string trace;
  auto* train = app.add_subcommand("train", "train a SegNet on pyramid dumps");
  train->add_option("pyramids", pyramids, "labeled pyramid directories")->required();
  train->add_option("--out", out, "checkpoint")->required();
  train->add_option("--trace", trace, "loss trace CSV");

  std::string net;
  auto* infer = app.add_subcommand("infer", "predict a full-resolution label map");
  infer->add_option("--pyramid", partition, "pyramid directory")->required();
  infer->add_option("--net", net, "checkpoint")->required();
  infer->add_option("--out", out, "label PGM")->required();

  std::vector<std::string> preds, gts;
  std::string mode = "img";
  auto* eval = app.add_subcommand("eval", "segmentation metrics");
  eval->add_option("--pred", preds)->required();
  eval->add_option("--gt", gts)->required();
  eval->add_option("--depth", depth_files, "depth maps for surface weights");
  eval->add_option("--mode", mode)->check(CLI::IsMember({"img", "surf"}));
  eval->add_option("--out", out, "metrics CSV");

  std::vector<double> resolutions{0.02};
  std::string bounds;
  auto* occ = app.add_subcommand("occupancy", "voxel occupancy of a cloud");
  auto* occ_cloud = occ->add_option("--cloud", cloud, "PLY cloud");
  auto* occ_depth = occ->add_option("--depth", depth, "depth map to backproject");
  occ_cloud->excludes(occ_depth);
  occ->add_option("--res", resolutions, "voxel edges (m)")->delimiter(',');
  occ->add_option("--bounds", bounds, "minx,miny,minz,maxx,maxy,maxz");
  occ->add_option("--out", out, "CSV");

  std::string scene;
  auto* synth = app.add_subcommand("synth", "render a synthetic RGBD frame");
  synth->add_option("--scene", scene, "scene description; random from --seed when omitted");
  synth->add_option("--out", out, "output prefix")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: Usage: %s\n", e.what());
    return 2;
  }

  try {
    const Config cfg = ResolveConfig(ov);
    if (*fit) return FitD4(cfg, depth_files, out);
    if (*sweep) return Sweep(cfg, depth_files, gammas);
    if (*pyr) return MakePyramid(cfg, image, depth, labels, partition, out);
    if (*dens) {
      if (sparse.empty() && cloud.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "densify needs --sparse or --cloud");
      }
      return Densify(cfg, sparse, cloud, out, mask);
    }
    if (*hha) return Hha(cfg, depth, out);
    if (*train) return Train(cfg, pyramids, out, trace);
    if (*infer) return InferCmd(partition, net, out);
    if (*eval) return Eval(cfg, preds, gts, depth_files, mode, out);
    if (*occ) {
      if (cloud.empty() && depth.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "occupancy needs --cloud or --depth");
      }
      return OccupancyCmd(cfg, cloud, depth, resolutions, bounds, out);
    }
    if (*synth) return Synth(cfg, scene, out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", std::string(ErrorCodeName(e.code())).c_str(),
                 e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: Internal: %s\n", e.what());
    return 1;
  }
  return 1;
}
