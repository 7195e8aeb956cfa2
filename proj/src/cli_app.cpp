#include "lodom/cli_app.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "lodom/kernels.hpp"

namespace lodom::cli {

namespace fs = std::filesystem;

namespace {

/// Groups packets into pipeline blocks of `width` columns, zero-filling
/// dropped packets so the stream stays contiguous.
class BlockAccumulator {
 public:
  BlockAccumulator(int rows, int cols, int width, double dt)
      : rows_(rows), cols_(cols), width_(width), dt_(dt) {
    buf_.assign(static_cast<std::size_t>(rows_) * width_, 0.0f);
  }

  template <typename Fn>
  void add(const ColumnBlock& pkt, const Fn& emit) {
    if (!started_) {
      next_col_ = pkt.start_col;
      next_t_ = pkt.t_start;
      started_ = true;
    }
    int gap = (pkt.start_col - next_col_ + cols_) % cols_;
    while (gap > 0) {
      const int fill = std::min(gap, width_ - filled_);
      push_zeros(fill, emit);
      gap -= fill;
    }
    next_t_ = pkt.t_start;  // resync the clock to the packet stamp
    int done = 0;
    while (done < pkt.width) {
      if (filled_ == 0) block_t_start_ = next_t_;
      const int take = std::min(pkt.width - done, width_ - filled_);
      for (int r = 0; r < rows_; ++r) {
        std::copy_n(&pkt.ranges[static_cast<std::size_t>(r) * pkt.width + done],
                    take,
                    &buf_[static_cast<std::size_t>(r) * width_ + filled_]);
      }
      filled_ += take;
      done += take;
      next_col_ = (next_col_ + take) % cols_;
      next_t_ += take * dt_;
      maybe_emit(emit);
    }
  }

  bool dropped_packets() const { return dropped_; }

 private:
  template <typename Fn>
  void push_zeros(int n, const Fn& emit) {
    dropped_ = true;
    if (filled_ == 0) block_t_start_ = next_t_;
    for (int r = 0; r < rows_; ++r) {
      std::fill_n(&buf_[static_cast<std::size_t>(r) * width_ + filled_], n, 0.0f);
    }
    filled_ += n;
    next_col_ = (next_col_ + n) % cols_;
    next_t_ += n * dt_;
    maybe_emit(emit);
  }

  template <typename Fn>
  void maybe_emit(const Fn& emit) {
    if (filled_ < width_) return;
    ColumnBlock block;
    block.rows = rows_;
    block.width = width_;
    block.start_col = (next_col_ - width_ + cols_) % cols_;
    block.t_start = block_t_start_;
    block.ranges = buf_;
    filled_ = 0;
    emit(block);
  }

  int rows_, cols_, width_;
  double dt_;
  std::vector<float> buf_;
  int filled_ = 0;
  int next_col_ = 0;
  double next_t_ = 0.0;
  double block_t_start_ = 0.0;
  bool started_ = false;
  bool dropped_ = false;
};

void flush_outputs(const RunOptions& opts, const Pipeline* pipeline,
                   const std::vector<sim::TimedPose>& traj,
                   const MetricsCollector& collector, std::uint64_t seed,
                   int divisor, int workers) {
  if (opts.out_dir.empty()) return;
  fs::create_directories(opts.out_dir);
  sim::write_tum(opts.out_dir + "/trajectory.tum", traj);
  write_metrics(opts.out_dir + "/metrics.txt", collector.finalize(), seed,
                divisor, workers);
  if (opts.save_pano && pipeline != nullptr && pipeline->pano_initialized()) {
    save_snapshot(pipeline->pano(), opts.out_dir + "/pano_final.lpan");
  }
}

}  // namespace

RunResult run_odometry(const RunOptions& opts) {
  RunResult result;
  FullConfig cfg;
  try {
    cfg = load_config(opts.config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    result.exit_code = kExitBadConfig;
    return result;
  }
  if (opts.workers > 0) cfg.odom.workers = opts.workers;
  if (opts.divisor > 0) cfg.odom.divisor = opts.divisor;
  {
    const auto errors = cfg.odom.validate();
    if (!errors.empty()) {
      std::cerr << "config error: " << errors.front() << "\n";
      result.exit_code = kExitBadConfig;
      return result;
    }
  }

  Pipeline pipeline(cfg.odom);
  MetricsCollector collector;
  std::vector<sim::TimedPose>& traj = result.trajectory;
  const int width = cfg.odom.block_width();
  const LidarModel model = cfg.odom.lidar_model();
  BlockAccumulator acc(cfg.odom.lidar.rows, cfg.odom.lidar.cols, width,
                       model.firing_interval());

  auto on_block = [&](const ColumnBlock& block) {
    const OdomOutput out = pipeline.process_block(block);
    collector.add(out);
    traj.push_back(sim::TimedPose{out.time, out.pose});
  };

  if (!opts.scene.empty()) {
    sim::Dataset dataset;
    try {
      dataset = sim::make_dataset(opts.scene);
    } catch (const std::invalid_argument& e) {
      std::cerr << e.what() << "\n";
      result.exit_code = kExitBadInput;
      return result;
    }
    sim::StreamConfig stream;
    stream.duration = opts.duration;
    stream.noise_sigma = cfg.sim.noise_sigma;
    stream.imu_rate_hz = cfg.sim.imu_rate;
    stream.imu_enabled = cfg.sim.imu_enabled;
    stream.packet_cols = cfg.sim.packet_cols;
    stream.seed = opts.seed;
    sim::stream_dataset(
        dataset, model, stream,
        [&](const ColumnBlock& pkt) { acc.add(pkt, on_block); },
        cfg.sim.imu_enabled
            ? std::function<void(const ImuSample&)>(
                  [&](const ImuSample& s) { pipeline.add_imu(s); })
            : nullptr,
        nullptr);
  } else {
    std::ifstream is(opts.input_path, std::ios::binary);
    if (!is) {
      std::cerr << "cannot open input: " << opts.input_path << "\n";
      result.exit_code = kExitBadInput;
      return result;
    }
    std::vector<ImuSample> imu;
    if (!opts.imu_path.empty()) {
      try {
        imu = sim::read_imu_file(opts.imu_path);
      } catch (const std::runtime_error& e) {
        std::cerr << e.what() << "\n";
        result.exit_code = kExitBadInput;
        return result;
      }
    }
    std::size_t imu_idx = 0;
    sim::PacketReader reader(is);
    try {
      for (;;) {
        auto pkt = reader.read();
        if (!pkt) break;
        const double t_end = pkt->t_start + pkt->width * model.firing_interval();
        while (imu_idx < imu.size() && imu[imu_idx].time < t_end) {
          pipeline.add_imu(imu[imu_idx++]);
        }
        acc.add(*pkt, on_block);
      }
    } catch (const sim::FramingError& e) {
      std::cerr << "framing error at byte " << e.byte_offset << ": " << e.what
                << "\n";
      flush_outputs(opts, &pipeline, traj, collector, opts.seed,
                    cfg.odom.divisor, cfg.odom.workers);
      result.metrics = collector.finalize();
      result.exit_code = kExitFraming;
      return result;
    }
  }

  result.metrics = collector.finalize();
  flush_outputs(opts, &pipeline, traj, collector, opts.seed, cfg.odom.divisor,
                cfg.odom.workers);
  return result;
}

EvalResult evaluate_trajectories(const std::vector<sim::TimedPose>& estimate,
                                 const std::vector<sim::TimedPose>& truth,
                                 double max_dt) {
  if (max_dt <= 0.0) {
    std::vector<double> gaps;
    for (std::size_t i = 1; i < estimate.size(); ++i) {
      gaps.push_back(estimate[i].time - estimate[i - 1].time);
    }
    max_dt = gaps.empty() ? 0.05 : 0.5 * percentile(gaps, 50.0);
  }

  // Nearest-neighbor association on timestamps (both sequences sorted).
  std::vector<std::pair<int, int>> pairs;
  std::size_t j = 0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double t = estimate[i].time;
    while (j + 1 < truth.size() &&
           std::abs(truth[j + 1].time - t) <= std::abs(truth[j].time - t)) {
      ++j;
    }
    if (!truth.empty() && std::abs(truth[j].time - t) <= max_dt) {
      pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    }
  }
  if (pairs.size() < 3) {
    throw std::runtime_error(
        "alignment impossible: fewer than 3 associated pose pairs");
  }

  Eigen::MatrixXd src(3, pairs.size()), dst(3, pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    src.col(k) = estimate[pairs[k].first].pose.translation;
    dst.col(k) = truth[pairs[k].second].pose.translation;
  }
  const Eigen::Matrix4d t = Eigen::umeyama(src, dst, false);
  const Eigen::Matrix3d r = t.topLeftCorner<3, 3>();
  const Eigen::Vector3d p = t.topRightCorner<3, 1>();

  EvalResult out;
  out.pairs = static_cast<int>(pairs.size());
  double sq = 0.0;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    sq += (r * src.col(k) + p - dst.col(k)).squaredNorm();
  }
  out.rms_ape = std::sqrt(sq / static_cast<double>(pairs.size()));
  out.endpoint_error =
      (src.col(pairs.size() - 1) - dst.col(pairs.size() - 1)).norm();
  return out;
}

namespace {

int cmd_sim(const std::string& scene, const std::string& out_dir,
            double duration, std::uint64_t seed,
            const std::string& config_path) {
  FullConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitBadConfig;
  }
  sim::Dataset dataset;
  try {
    dataset = sim::make_dataset(scene);
  } catch (const std::invalid_argument& e) {
    std::cerr << e.what() << "\n";
    return kExitBadInput;
  }
  fs::create_directories(out_dir);
  const LidarModel model = cfg.odom.lidar_model();

  std::ofstream packets(out_dir + "/packets.lpkt", std::ios::binary);
  if (!packets) {
    std::cerr << "cannot open output dir: " << out_dir << "\n";
    return kExitBadInput;
  }
  sim::PacketWriter writer(packets);
  std::vector<ImuSample> imu;
  std::vector<sim::TimedPose> gt;

  sim::StreamConfig stream;
  stream.duration = duration;
  stream.noise_sigma = cfg.sim.noise_sigma;
  stream.imu_rate_hz = cfg.sim.imu_rate;
  stream.imu_enabled = cfg.sim.imu_enabled;
  stream.packet_cols = cfg.sim.packet_cols;
  stream.seed = seed;
  sim::stream_dataset(
      dataset, model, stream,
      [&](const ColumnBlock& b) { writer.write(b); },
      [&](const ImuSample& s) { imu.push_back(s); },
      [&](const sim::TimedPose& p) { gt.push_back(p); });

  sim::write_imu_file(out_dir + "/imu.limu", imu);
  sim::write_tum(out_dir + "/groundtruth.tum", gt);
  std::cout << "wrote " << out_dir << "/packets.lpkt, imu.limu, groundtruth.tum ("
            << gt.size() << " gt poses)\n";
  return kExitOk;
}

int cmd_eval(const std::string& traj_path, const std::string& gt_path,
             double max_dt) {
  std::vector<sim::TimedPose> est, gt;
  try {
    est = sim::read_tum(traj_path);
    gt = sim::read_tum(gt_path);
  } catch (const std::runtime_error& e) {
    std::cerr << e.what() << "\n";
    return kExitBadInput;
  }
  try {
    const EvalResult r = evaluate_trajectories(est, gt, max_dt);
    std::cout << "pairs = " << r.pairs << "\n";
    std::cout << "rms_ape_m = " << r.rms_ape << "\n";
    std::cout << "endpoint_error_m = " << r.endpoint_error << "\n";
    return kExitOk;
  } catch (const std::runtime_error& e) {
    std::cerr << e.what() << "\n";
    return kExitEvalImpossible;
  }
}

int cmd_bench(const RunOptions& base) {
  const int divisors[4] = {1, 2, 4, 8};
  std::ostringstream report;
  report << "# lodom bench v1\n";
  report << "divisors = 1 2 4 8\n";
  std::ostringstream acq, mean_ms, p90_ms, rate, latency, feat, solve, fuse;
  for (int d : divisors) {
    RunOptions opts = base;
    opts.divisor = d;
    opts.out_dir.clear();  // no per-divisor files
    const RunResult r = run_odometry(opts);
    if (r.exit_code != kExitOk) return r.exit_code;
    const RunMetrics& m = r.metrics;
    const double block_acq_ms =
        m.blocks > 1 ? 1000.0 * m.duration_s / static_cast<double>(m.blocks - 1)
                     : 0.0;
    acq << ' ' << block_acq_ms;
    mean_ms << ' ' << m.total.mean;
    p90_ms << ' ' << m.total.p90;
    rate << ' ' << m.output_rate_hz;
    latency << ' ' << block_acq_ms + m.total.p90;
    feat << ' ' << m.feature.mean;
    solve << ' ' << m.solve.mean;
    fuse << ' ' << m.fuse.mean;
  }
  report << "block_acq_ms =" << acq.str() << "\n";
  report << "runtime_mean_ms =" << mean_ms.str() << "\n";
  report << "runtime_p90_ms =" << p90_ms.str() << "\n";
  report << "output_rate_hz =" << rate.str() << "\n";
  report << "effective_latency_ms =" << latency.str() << "\n";
  report << "feature_mean_ms =" << feat.str() << "\n";
  report << "solve_mean_ms =" << solve.str() << "\n";
  report << "fuse_mean_ms =" << fuse.str() << "\n";
  std::cout << report.str();
  if (!base.out_dir.empty()) {
    fs::create_directories(base.out_dir);
    std::ofstream os(base.out_dir + "/bench.txt");
    os << report.str();
  }
  return kExitOk;
}

int cmd_pano_dump(const std::string& lpan_path, const std::string& pgm_path) {
  PanoSnapshot snap;
  try {
    snap = load_snapshot(lpan_path);
  } catch (const std::runtime_error& e) {
    std::cerr << e.what() << "\n";
    return kExitBadInput;
  }
  std::uint16_t max_tick = 1;
  for (std::uint16_t t : snap.depth_ticks) max_tick = std::max(max_tick, t);
  std::ofstream os(pgm_path, std::ios::binary);
  if (!os) {
    std::cerr << "cannot open for writing: " << pgm_path << "\n";
    return kExitBadInput;
  }
  os << "P5\n" << snap.cols << " " << snap.rows << "\n255\n";
  for (std::uint16_t t : snap.depth_ticks) {
    const int v = t == 0 ? 0 : 1 + (254 * t) / max_tick;
    os.put(static_cast<char>(std::min(v, 255)));
  }
  std::cout << "wrote " << pgm_path << " (" << snap.cols << "x" << snap.rows
            << ", max depth " << max_tick * snap.meters_per_tick << " m)\n";
  return kExitOk;
}

}  // namespace

int run_main(const std::vector<std::string>& args) {
  CLI::App app{"lodom: streaming lidar odometry against a depth panorama"};
  app.require_subcommand(1);

  // sim
  auto* sim_cmd = app.add_subcommand("sim", "generate a synthetic dataset");
  std::string sim_scene = "loop-small", sim_out = "out", sim_config;
  double sim_duration = 0.0;
  std::uint64_t sim_seed = 0;
  sim_cmd->add_option("--scene", sim_scene, "built-in scene name");
  sim_cmd->add_option("--out", sim_out, "output directory");
  sim_cmd->add_option("--duration", sim_duration, "seconds (0 = natural)");
  sim_cmd->add_option("--seed", sim_seed, "noise seed");
  sim_cmd->add_option("--config", sim_config, "config file");

  // run
  auto* run_cmd = app.add_subcommand("run", "run odometry");
  RunOptions run_opts;
  run_cmd->add_option("--config", run_opts.config_path, "config file");
  run_cmd->add_option("--input", run_opts.input_path, "packet file");
  run_cmd->add_option("--imu", run_opts.imu_path, "IMU stream file");
  run_cmd->add_option("--scene", run_opts.scene, "generate this scene instead");
  run_cmd->add_option("--out", run_opts.out_dir, "output directory");
  run_cmd->add_option("--duration", run_opts.duration, "sim duration");
  run_cmd->add_option("--seed", run_opts.seed, "sim noise seed");
  run_cmd->add_option("--workers", run_opts.workers, "worker threads");
  run_cmd->add_option("--divisor", run_opts.divisor,
                      "partial sweeps per revolution {1,2,4,8}");
  run_cmd->add_flag("--save-pano", run_opts.save_pano, "save final pano");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "compare against ground truth");
  std::string eval_traj, eval_gt;
  double eval_max_dt = 0.0;
  eval_cmd->add_option("trajectory", eval_traj, "estimated TUM file")->required();
  eval_cmd->add_option("groundtruth", eval_gt, "ground-truth TUM file")->required();
  eval_cmd->add_option("--max-dt", eval_max_dt, "association tolerance (s)");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "contrast divisors 1/2/4/8");
  RunOptions bench_opts;
  bench_cmd->add_option("--config", bench_opts.config_path, "config file");
  bench_cmd->add_option("--input", bench_opts.input_path, "packet file");
  bench_cmd->add_option("--imu", bench_opts.imu_path, "IMU stream file");
  bench_cmd->add_option("--scene", bench_opts.scene, "built-in scene name");
  bench_cmd->add_option("--out", bench_opts.out_dir, "output directory");
  bench_cmd->add_option("--duration", bench_opts.duration, "sim duration");
  bench_cmd->add_option("--seed", bench_opts.seed, "sim noise seed");
  bench_cmd->add_option("--workers", bench_opts.workers, "worker threads");

  // pano-dump
  auto* dump_cmd = app.add_subcommand("pano-dump", "pano snapshot to PGM");
  std::string dump_in, dump_out;
  dump_cmd->add_option("snapshot", dump_in, "pano .lpan file")->required();
  dump_cmd->add_option("output", dump_out, "output .pgm file")->required();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (sim_cmd->parsed()) {
    return cmd_sim(sim_scene, sim_out, sim_duration, sim_seed, sim_config);
  }
  if (run_cmd->parsed()) {
    if (run_opts.input_path.empty() == run_opts.scene.empty()) {
      std::cerr << "run: exactly one of --input or --scene is required\n";
      return kExitBadInput;
    }
    return run_odometry(run_opts).exit_code;
  }
  if (eval_cmd->parsed()) {
    return cmd_eval(eval_traj, eval_gt, eval_max_dt);
  }
  if (bench_cmd->parsed()) {
    if (bench_opts.input_path.empty() == bench_opts.scene.empty()) {
      std::cerr << "bench: exactly one of --input or --scene is required\n";
      return kExitBadInput;
    }
    return cmd_bench(bench_opts);
  }
  if (dump_cmd->parsed()) {
    return cmd_pano_dump(dump_in, dump_out);
  }
  return kExitOk;
}

}  // namespace lodom::cli
