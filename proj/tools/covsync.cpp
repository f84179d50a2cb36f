// covsync command-line front end: covariance estimation campaigns,
// synchronized embedding runs, payload calibration sweeps, asset checks.

#include <atomic>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "covsync/containers.hpp"
#include "covsync/costmap.hpp"
#include "covsync/covmodel.hpp"
#include "covsync/devpipe.hpp"
#include "covsync/error.hpp"
#include "covsync/lattice.hpp"
#include "covsync/rng.hpp"
#include "covsync/syncembed.hpp"

namespace {

using namespace covsync;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitUsage = 3;

std::array<int, 64> mode_groups() {
  std::array<int, 64> g{};
  for (int m = 0; m < 64; ++m) g[m] = mode_group(m);
  return g;
}

void write_text_atomic(const std::string& path, const std::string& text) {
  atomic_write_file(path, text);
}

struct PipelineOptions {
  int raw_width = 128;
  int raw_height = 128;
  double factor = 2.0;
  double antialias = 1.5;
  NoiseParams noise;
};

void add_pipeline_flags(CLI::App* cmd, PipelineOptions& p) {
  cmd->add_option("--raw-width", p.raw_width, "RAW width in photosites (even)");
  cmd->add_option("--raw-height", p.raw_height, "RAW height in photosites (even)");
  cmd->add_option("--factor", p.factor, "bilinear downscale factor (>= 1)");
  cmd->add_option("--antialias", p.antialias, "downscale kernel half-width, in units of factor");
  cmd->add_option("--mu", p.noise.mu, "constant photosite luminosity");
  cmd->add_option("--noise-a", p.noise.a, "multiplicative noise slope");
  cmd->add_option("--noise-b", p.noise.b, "additive noise floor");
}

// ---------------------------------------------------------------- estimate-cov

int run_estimate_cov(const PipelineOptions& pipe, int images, double threshold,
                     std::uint64_t seed, int threads, const std::string& out_path,
                     const std::string& report_path) {
  if (images < 2) throw ValidationError("estimate-cov: need >= 2 images");

  CovAccumulator acc;
  const int batch = std::max(1, threads) * 4;
  std::vector<CovAccumulator> slot(static_cast<std::size_t>(batch));
  for (int base = 0; base < images; base += batch) {
    const int count = std::min(batch, images - base);
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int k = next.fetch_add(1); k < count; k = next.fetch_add(1)) {
        const std::uint64_t img_seed = derive_stream(seed, 0x636f76u, base + k);
        RawImage raw = synth_raw(pipe.raw_width, pipe.raw_height, pipe.noise, img_seed);
        DctPlane dct = block_dct(develop(raw, pipe.factor, pipe.antialias));
        slot[k] = CovAccumulator{};
        slot[k].accumulate(dct);
      }
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < std::max(1, threads); ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    for (int k = 0; k < count; ++k) acc.merge(slot[k]);  // fixed image order
  }

  const CorrelationMatrix corr = finalize_correlation(acc);
  const CorrelationModel model = sparsify(corr, threshold);
  const auto groups = mode_groups();
  const StructureReport rep = validate_structure(model, &corr, &groups);

  save_model_file(out_path, model);

  nlohmann::json j;
  j["images"] = images;
  j["samples"] = acc.n_samples;
  j["threshold"] = threshold;
  j["entries"] = model.entries().size();
  j["max_diag_rho"] = rep.max_diag_rho;
  j["lattice_residual"] = rep.lattice_residual;
  j["canonical_intra_modes"] = rep.canonical_intra_modes;
  j["canonical_inter_modes"] = rep.canonical_inter_modes;
  j["per_mode_intra"] = rep.intra_count;
  j["per_mode_up"] = rep.up_count;
  j["per_mode_down"] = rep.down_count;
  j["per_mode_left"] = rep.left_count;
  j["per_mode_right"] = rep.right_count;
  j["deviations"] = rep.deviations;
  if (!report_path.empty()) write_text_atomic(report_path, j.dump(1) + "\n");

  std::cout << "model: " << model.entries().size() << " entries at threshold " << threshold
            << ", lattice residual " << rep.lattice_residual << ", max diagonal |rho| "
            << rep.max_diag_rho << "\n";
  return kExitOk;
}

// ----------------------------------------------------------------------- embed

nlohmann::json report_to_json(const EmbedReport& r, std::uint64_t seed, int threads) {
  nlohmann::json j;
  j["h_in_bits_per_nzac"] = r.h_in;
  j["h_out_bits_per_nzac"] = r.h_out;
  j["entropy_drop"] = r.h_in - r.h_out;
  j["lambda"] = r.lambda;
  j["nzac"] = r.nzac;
  j["lattice_entropy_bits_per_coeff"] = r.lattice_entropy;
  j["lattice_size"] = r.lattice_size;
  j["changes"] = {{"minus", r.n_minus}, {"zero", r.n_zero}, {"plus", r.n_plus}};
  j["runtime_seconds"] = r.runtime_seconds;
  j["seed"] = seed;
  j["threads"] = threads;
  return j;
}

std::string pdiff_csv(const EmbedResult& res, const PmfMap& input, int width, int bw) {
  // p(+1) difference, coefficients laid out at their pixel positions
  std::ostringstream os;
  const int height = static_cast<int>(res.realized.size()) / width;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int block = (y / 8) * bw + (x / 8);
      const int mode = (y % 8) * 8 + (x % 8);
      const int linear = block * 64 + mode;
      if (x) os << ",";
      os << (res.realized[linear].plus - input.pmf[linear].plus);
    }
    os << "\n";
  }
  return os.str();
}

std::string lattice_entropy_csv(const EmbedReport& r) {
  std::ostringstream os;
  os << "lattice,coefficients,mean_entropy_bits\n";
  for (int id = 0; id < 8; ++id)
    os << id << "," << r.lattice_size[id] << "," << r.lattice_entropy[id] << "\n";
  return os.str();
}

int run_embed(const std::string& cover_path, const std::string& costs_path,
              const std::string& model_path, const std::string& tables_path, double payload,
              std::uint64_t seed, int threads, bool force_q1, const std::string& out_path,
              const std::string& changes_path, const std::string& report_path,
              const std::string& pdiff_path, const std::string& lattice_csv_path) {
  const QuantizedDctImage cover = load_qdct_file(cover_path);
  std::ifstream cf(costs_path, std::ios::binary);
  if (!cf) throw FormatError("cannot open: " + costs_path);
  CostMap costs;
  try {
    costs = load_costs(cf, cover.width, cover.height);
  } catch (const FormatError& e) {
    throw FormatError(costs_path + " vs " + cover_path + ": " + e.what());
  }
  const CorrelationModel model =
      model_path == "none" ? CorrelationModel{} : load_model_file(model_path);
  const NeighborTable tables = NeighborTable::load_file(tables_path);
  const auto qsteps = force_q1 ? flat_qtable(1) : cover.qtable;

  const int nzac = cover.nzac();
  if (nzac <= 0) throw NumericError("cover has no nonzero AC coefficients");
  const PmfMap pmfs = probabilities_from_costs(costs, payload * nzac);
  const Eigen::ArrayXd vars = variance_map(pmfs, qsteps);
  const EmbedResult res =
      embed_image(cover, pmfs, vars, model, tables, qsteps, seed, threads);

  if (!out_path.empty()) save_qdct_file(out_path, apply_changes(cover, res.changes));
  if (!changes_path.empty()) save_changes_file(changes_path, res.changes);
  if (!report_path.empty())
    write_text_atomic(report_path, report_to_json(res.report, seed, threads).dump(1) + "\n");
  if (!pdiff_path.empty())
    write_text_atomic(pdiff_path, pdiff_csv(res, pmfs, cover.width, cover.blocks_w()));
  if (!lattice_csv_path.empty())
    write_text_atomic(lattice_csv_path, lattice_entropy_csv(res.report));

  std::cout << "H_in " << res.report.h_in << " H_out " << res.report.h_out << " drop "
            << (res.report.h_in - res.report.h_out) << " bits/nzAC, lambda "
            << res.report.lambda << ", changes -" << res.report.n_minus << "/0:"
            << res.report.n_zero << "/+" << res.report.n_plus << "\n";
  return kExitOk;
}

// ------------------------------------------------------------------- calibrate

int run_calibrate(const std::string& cover_path, const std::string& costs_path,
                  const std::string& model_path, const std::string& tables_path,
                  const std::vector<double>& grid, std::uint64_t seed, int threads,
                  bool force_q1, const std::string& out_path,
                  const std::string& export_prefix) {
  if (grid.empty()) throw ValidationError("calibrate: empty payload grid");
  const QuantizedDctImage cover = load_qdct_file(cover_path);
  std::ifstream cf(costs_path, std::ios::binary);
  if (!cf) throw FormatError("cannot open: " + costs_path);
  const CostMap costs = load_costs(cf, cover.width, cover.height);
  const CorrelationModel model =
      model_path == "none" ? CorrelationModel{} : load_model_file(model_path);
  const NeighborTable tables = NeighborTable::load_file(tables_path);
  const auto qsteps = force_q1 ? flat_qtable(1) : cover.qtable;

  std::ostringstream csv;
  csv << "h_in,h_out,drop";
  for (int id = 0; id < 8; ++id) csv << ",lattice" << id << "_entropy";
  csv << "\n";
  for (double h_in : grid) {
    const CalibrationResult cal =
        calibrate_payload(costs, cover, model, tables, qsteps, h_in, seed, threads);
    csv << cal.h_in << "," << cal.h_out << "," << (cal.h_in - cal.h_out);
    for (int id = 0; id < 8; ++id) csv << "," << cal.synchronized_run.report.lattice_entropy[id];
    csv << "\n";
    if (!export_prefix.empty()) {
      // baseline (unsynchronized) costs carrying the same payload
      CostMap base = costs;
      for (Eigen::Index i = 0; i < base.size(); ++i) {
        const auto& pmf = cal.baseline.pmf[static_cast<std::size_t>(i)];
        base.cost[i] = base.wet[i] ? kWetCost : costs_from_probabilities(pmf).plus;
      }
      std::ostringstream name;
      name << export_prefix << "_hin" << h_in << ".cost1";
      save_costs_file(name.str(), base);
    }
    std::cout << "h_in " << cal.h_in << " -> h_out " << cal.h_out << "\n";
  }
  write_text_atomic(out_path, csv.str());
  return kExitOk;
}

// -------------------------------------------------------------- validate-tables

int run_validate_tables(const std::string& tables_path, bool dump) {
  const NeighborTable tables = NeighborTable::load_file(tables_path);  // throws if invalid
  if (dump) {
    std::cout << "checksum " << tables.checksum() << "\n";
    for (int id = 0; id < 8; ++id) {
      int count = -1;
      for (int m = 0; m < 64; ++m)
        if (mode_group(m) == id % 4) {
          count = static_cast<int>(tables.neighbors(id, m).size());
          break;
        }
      std::cout << "lattice " << id << ": " << count << " correlated coefficients per mode\n";
    }
  }
  std::cout << "tables OK\n";
  return kExitOk;
}

// ----------------------------------------------------------------------- report

int run_report(const std::string& path) {
  const std::string magic = sniff_magic(path);
  if (magic == "QDCT") {
    const auto img = load_qdct_file(path);
    std::cout << "QDCT1 " << img.width << "x" << img.height << ", " << img.n_blocks()
              << " blocks, nzAC " << img.nzac() << ", q[0..3] " << img.qtable[0] << " "
              << img.qtable[1] << " " << img.qtable[2] << " " << img.qtable[3] << "\n";
  } else if (magic == "COST") {
    std::ifstream f(path, std::ios::binary);
    const CostMap m = load_costs(f);
    std::cout << "COST1 " << m.width << "x" << m.height << ", wet " << m.wet_count() << "/"
              << m.size() << ", mean cost "
              << (m.size() ? m.cost.sum() / static_cast<double>(m.size()) : 0.0) << "\n";
  } else if (magic == "CHG_") {
    const ChangeMap m = load_changes_file(path);
    std::int64_t minus = 0, plus = 0;
    for (Eigen::Index i = 0; i < m.change.size(); ++i) {
      minus += m.change[i] == -1;
      plus += m.change[i] == +1;
    }
    std::cout << "CHG1 " << m.width << "x" << m.height << ", -1:" << minus << " +1:" << plus
              << " total " << m.change.size() << "\n";
  } else {
    // structured text (model / report JSON)
    std::ifstream f(path);
    if (!f) throw FormatError("cannot open: " + path);
    nlohmann::json j;
    try {
      f >> j;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("not a covsync container or JSON document: " + std::string(e.what()));
    }
    std::cout << j.dump(1) << "\n";
  }
  return kExitOk;
}

// ------------------------------------------------------------------ synth-cover

int run_synth_cover(const PipelineOptions& pipe, int quality, bool q1, std::uint64_t seed,
                    const std::string& out_path, const std::string& costs_kind,
                    const std::string& costs_path) {
  const auto qtable = q1 ? flat_qtable(1) : quality_qtable(quality);
  const QuantizedDctImage cover =
      synth_cover(pipe.raw_width, pipe.raw_height, pipe.noise, pipe.factor, qtable, seed,
                  pipe.antialias);
  save_qdct_file(out_path, cover);
  std::cout << "cover " << cover.width << "x" << cover.height << ", nzAC " << cover.nzac()
            << "\n";
  if (!costs_path.empty()) {
    CostMap costs;
    if (costs_kind == "unit")
      costs = make_unit_costs(cover.width, cover.height);
    else if (costs_kind == "qprop")
      costs = make_qprop_costs(cover);
    else
      throw ValidationError("synth-cover: unknown cost model '" + costs_kind + "'");
    save_costs_file(costs_path, costs);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"correlation-synchronized JPEG-domain embedding toolkit"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  int threads = 1;
  std::string tables_path = "assets/dct_neighbor_tables.json";

  // estimate-cov
  auto* est = app.add_subcommand("estimate-cov",
                                 "estimate the DCT correlation model from synthetic images");
  PipelineOptions est_pipe;
  int est_images = 200;
  double est_threshold = 0.05;
  std::string est_out = "model.json", est_report;
  add_pipeline_flags(est, est_pipe);
  est->add_option("--images", est_images, "number of images (>= 2)");
  est->add_option("--threshold", est_threshold, "|rho| sparsification cutoff");
  est->add_option("--seed", seed, "master seed");
  est->add_option("--threads", threads, "worker threads");
  est->add_option("--out", est_out, "output model file")->required();
  est->add_option("--report", est_report, "structure report JSON");

  // embed
  auto* emb = app.add_subcommand("embed", "synchronized simulated embedding");
  std::string emb_cover, emb_costs, emb_model = "none", emb_out, emb_changes, emb_report;
  std::string emb_pdiff, emb_lattice_csv;
  double emb_payload = 0.3;
  bool force_q1 = false;
  emb->add_option("--cover", emb_cover, "QDCT1 cover")->required();
  emb->add_option("--costs", emb_costs, "COST1 additive cost map")->required();
  emb->add_option("--model", emb_model, "CORR model file, or 'none'");
  emb->add_option("--tables", tables_path, "neighbor tables asset");
  emb->add_option("--payload", emb_payload, "target payload, bits/nzAC");
  emb->add_option("--seed", seed, "embedding seed");
  emb->add_option("--threads", threads, "worker threads");
  emb->add_flag("--force-q1", force_q1, "use q=1 in the Gaussian mapping");
  emb->add_option("--out", emb_out, "stego QDCT1 output");
  emb->add_option("--changes", emb_changes, "CHG1 output");
  emb->add_option("--report", emb_report, "report JSON output");
  emb->add_option("--pdiff", emb_pdiff, "p(+1) difference map CSV");
  emb->add_option("--lattice-entropy", emb_lattice_csv, "per-lattice entropy CSV");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "H_in -> H_out calibration sweep");
  std::string cal_cover, cal_costs, cal_model = "none", cal_out = "sweep.csv", cal_export;
  std::vector<double> cal_grid;
  cal->add_option("--cover", cal_cover, "QDCT1 cover")->required();
  cal->add_option("--costs", cal_costs, "COST1 additive cost map")->required();
  cal->add_option("--model", cal_model, "CORR model file, or 'none'");
  cal->add_option("--tables", tables_path, "neighbor tables asset");
  cal->add_option("--grid", cal_grid, "payload grid, bits/nzAC")->delimiter(',');
  cal->add_option("--seed", seed, "embedding seed");
  cal->add_option("--threads", threads, "worker threads");
  cal->add_flag("--force-q1", force_q1, "use q=1 in the Gaussian mapping");
  cal->add_option("--out", cal_out, "sweep CSV output");
  cal->add_option("--export-baseline", cal_export, "prefix for baseline COST1 exports");

  // validate-tables
  auto* val = app.add_subcommand("validate-tables", "check the neighbor tables asset");
  bool val_dump = false;
  val->add_option("--tables", tables_path, "neighbor tables asset");
  val->add_flag("--dump", val_dump, "print per-lattice counts");

  // report
  auto* repc = app.add_subcommand("report", "summarize a container or JSON file");
  std::string rep_in;
  repc->add_option("--in", rep_in, "file to inspect")->required();

  // synth-cover
  auto* syn = app.add_subcommand("synth-cover", "generate a synthetic quantized cover");
  PipelineOptions syn_pipe;
  int syn_quality = 95;
  bool syn_q1 = false;
  std::string syn_out = "cover.qdct", syn_costs_kind = "qprop", syn_costs_path;
  add_pipeline_flags(syn, syn_pipe);
  syn->add_option("--quality", syn_quality, "JPEG quality factor for the qtable");
  syn->add_flag("--q1", syn_q1, "flat qtable of ones");
  syn->add_option("--seed", seed, "pipeline seed");
  syn->add_option("--out", syn_out, "QDCT1 output")->required();
  syn->add_option("--cost-model", syn_costs_kind, "built-in cost model: unit | qprop");
  syn->add_option("--costs-out", syn_costs_path, "optional COST1 output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (est->parsed())
      return run_estimate_cov(est_pipe, est_images, est_threshold, seed, threads, est_out,
                              est_report);
    if (emb->parsed())
      return run_embed(emb_cover, emb_costs, emb_model, tables_path, emb_payload, seed, threads,
                       force_q1, emb_out, emb_changes, emb_report, emb_pdiff, emb_lattice_csv);
    if (cal->parsed())
      return run_calibrate(cal_cover, cal_costs, cal_model, tables_path, cal_grid, seed, threads,
                           force_q1, cal_out, cal_export);
    if (val->parsed()) return run_validate_tables(tables_path, val_dump);
    if (repc->parsed()) return run_report(rep_in);
    if (syn->parsed())
      return run_synth_cover(syn_pipe, syn_quality, syn_q1, seed, syn_out, syn_costs_kind,
                             syn_costs_path);
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const RangeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}
