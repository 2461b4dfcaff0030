#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "cli.hpp"
#include "poslab/autoenc.hpp"
#include "poslab/complexity.hpp"
#include "poslab/dba.hpp"
#include "poslab/dictionary.hpp"
#include "poslab/error.hpp"
#include "poslab/folding.hpp"
#include "poslab/intersect.hpp"

namespace poslab::cli {

namespace {

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string dataset_csv(const Dataset& d) {
  std::ostringstream os;
  write_csv(os, d);
  return os.str();
}

std::vector<Series> by_label(const Dataset& d) {
  std::vector<Series> out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    while (out.size() <= d.labels[i]) out.push_back({kColors[out.size() % 6], {}});
    out[d.labels[i]].points.push_back(d.samples[i]);
  }
  return out;
}

std::string history_csv(const std::vector<double>& loss) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < loss.size(); ++i) rows.push_back({static_cast<double>(i), loss[i]});
  return csv_table({"step", "loss"}, rows);
}

Activation parse_activation(const Section& s) {
  const std::string a = s.get<std::string>("activation", "linear");
  if (a == "linear") return Activation::Linear;
  if (a == "relu") return Activation::Relu;
  s.fail("activation must be 'linear' or 'relu'");
}

Skip parse_skip(const Section& s) {
  const std::string k = s.get<std::string>("skip", "none");
  if (k == "none") return Skip::None;
  if (k == "subtract") return Skip::Subtract;
  s.fail("skip must be 'none' or 'subtract'");
}

Objective parse_objective(const Section& train) {
  if (!train.has("objective")) return PlainObjective{};
  const Section o = train.sub("objective", {"type", "wmin", "wmax", "lambda1", "lambda2", "lambda3", "blur_sigma"});
  const std::string type = o.require<std::string>("type");
  if (type == "plain") return PlainObjective{};
  if (type == "masked") return MaskedObjective{o.require<std::size_t>("wmin"), o.require<std::size_t>("wmax")};
  if (type == "pushpull")
    return PushPullObjective{o.get<double>("lambda1", 1.0), o.get<double>("lambda2", 1.0),
                             o.get<double>("lambda3", 0.0), o.get<double>("blur_sigma", 1.0)};
  o.fail("type must be 'plain', 'masked' or 'pushpull'");
}

TrainConfig parse_train(const Section& parent, std::uint64_t seed) {
  TrainConfig cfg;
  if (!parent.has("train")) {
    cfg.seed = seed;
    return cfg;
  }
  const Section t = parent.sub("train", {"step_size", "steps", "batch", "momentum", "objective"});
  cfg.step_size = t.get<double>("step_size", cfg.step_size);
  cfg.steps = t.get<std::size_t>("steps", cfg.steps);
  cfg.batch = t.get<std::size_t>("batch", 0);
  cfg.momentum = t.get<double>("momentum", 0.0);
  cfg.objective = parse_objective(t);
  cfg.seed = seed;
  return cfg;
}

AEParams parse_model(const Section& m, const Dataset& data, std::uint64_t seed) {
  const std::size_t latent = m.require<std::size_t>("latent");
  const bool tied = m.get<bool>("tied", false);
  const Activation act = parse_activation(m);
  const Skip skip = parse_skip(m);
  const std::string init = m.get<std::string>("init", "random");
  if (init == "data") return AEParams::init_from_data(latent, tied, act, skip, data);
  if (init != "random") m.fail("init must be 'random' or 'data'");
  Rng rng = Rng(seed).split(1);
  return AEParams::init(data.dim(), latent, tied, act, skip, rng);
}

json compactness_json(const CompactnessReport& r) {
  json j{{"mean_recon_error", r.mean_recon_error},
         {"mean_off_union", r.mean_off_union},
         {"assignment_accuracy", r.assignment_accuracy}};
  if (r.anomaly_auroc) j["anomaly_auroc"] = *r.anomaly_auroc;
  if (r.calibrated) j["calibrated"] = {{"threshold", r.calibrated->threshold}, {"f1", r.calibrated->f1}};
  if (r.test_f1) j["test_f1"] = *r.test_f1;
  return j;
}

}  // namespace

void cmd_gen(const json& config, const RunContext& ctx) {
  const Section root(config, "config", {"seed", "data", "plot"});
  const std::uint64_t seed = effective_seed(config, ctx);
  if (root.raw("data").is_string()) root.fail("gen needs an inline data spec");
  const Dataset d = load_dataset(root.raw("data"), "config.data", seed, ctx);
  spdlog::info("gen: {} samples in R^{}", d.size(), d.dim());
  Outputs out(ctx.out_dir);
  out.write("data.csv", dataset_csv(d));
  if (root.get<bool>("plot", true)) out.write("plot.svg", svg_scatter(by_label(d), "samples"));
  out.finish("gen", seed, config);
}

void cmd_diagnose(const json& config, const RunContext& ctx) {
  const Section root(config, "config", {"seed", "dictionary", "ks"});
  json dict_json = root.raw("dictionary");
  if (dict_json.is_string()) {
    const std::filesystem::path p(dict_json.get<std::string>());
    dict_json = json::parse(read_file(p.is_absolute() ? p : ctx.config_dir / p), nullptr, false);
    if (dict_json.is_discarded()) throw Error(Errc::InvalidConfig, "config.dictionary: file is not valid JSON");
  }
  const Section ds(dict_json, "config.dictionary", {"atoms", "groups"});
  const Dictionary dict(matrix_from_json(ds.raw("atoms")),
                        ds.get<std::vector<SupportSet>>("groups", {}));
  const auto ks = root.get<std::vector<std::size_t>>("ks", {1});
  spdlog::info("diagnose: {} atoms in R^{}, k in {} values", dict.size(), dict.ambient_dim(), ks.size());
  Outputs out(ctx.out_dir);
  out.write_json("report.json", diagnostics_report(dict, ks));
  out.finish("diagnose", effective_seed(config, ctx), config);
}

void cmd_project(const json& config, const RunContext& ctx) {
  const Section root(config, "config", {"seed", "projector", "data", "plot"});
  const std::uint64_t seed = effective_seed(config, ctx);
  const UnionProjector p = load_projector(root.raw("projector"), "config.projector", ctx);
  const Dataset d = load_dataset(root.raw("data"), "config.data", seed, ctx);
  const auto res = project_batch(p, d.samples);

  std::vector<std::string> header{"index", "label", "component", "distance", "is_tie"};
  for (std::size_t i = 0; i < p.ambient_dim(); ++i) header.push_back("p" + std::to_string(i));
  std::vector<std::vector<double>> rows;
  std::size_t ties = 0;
  double mean_dist = 0.0;
  Dataset projected;
  for (std::size_t i = 0; i < res.size(); ++i) {
    std::vector<double> row{static_cast<double>(i), static_cast<double>(d.labels[i]),
                            static_cast<double>(res[i].component_index), res[i].distance, res[i].is_tie ? 1.0 : 0.0};
    row.insert(row.end(), res[i].point.begin(), res[i].point.end());
    rows.push_back(std::move(row));
    ties += res[i].is_tie;
    mean_dist += res[i].distance / static_cast<double>(res.size());
    projected.samples.push_back(res[i].point);
    projected.labels.push_back(res[i].component_index);
  }
  Outputs out(ctx.out_dir);
  out.write("projections.csv", csv_table(header, rows));
  out.write_json("metrics.json", {{"samples", d.size()}, {"ties", ties}, {"mean_distance", mean_dist}});
  if (root.get<bool>("plot", true))
    out.write("plot.svg", svg_scatter({{"#999999", d.samples}, {kColors[1], projected.samples}}, "samples (grey), projections (red)"));
  out.finish("project", seed, config);
}

void cmd_train_ae(const json& config, const RunContext& ctx) {
  const Section root(config, "config",
                     {"seed", "data", "eval_data", "anomalies", "truth", "model", "train", "stage2", "plot"});
  const std::uint64_t seed = effective_seed(config, ctx);
  const Dataset data = load_dataset(root.raw("data"), "config.data", seed, ctx);
  const Section model = root.sub("model", {"latent", "tied", "activation", "skip", "init"});
  const AEParams init = parse_model(model, data, seed);
  const TrainConfig cfg = parse_train(root, seed);
  spdlog::info("train-ae: {} samples, latent {}, {} steps", data.size(), init.latent_dim(), cfg.steps);
  const TrainReport rep = train(init, cfg, data);

  Outputs out(ctx.out_dir);
  out.write_json("init.json", ae_to_json(init));
  out.write_json("checkpoint.json", ae_to_json(rep.final_params));
  out.write("history.csv", history_csv(rep.loss_history));

  json metrics{{"final_loss", rep.loss_history.empty() ? ae_loss(init, cfg.objective, data, Rng(seed)) : rep.loss_history.back()},
               {"grad_check_max_rel_err", rep.grad_check_max_rel_err}};
  const Dataset eval = root.has("eval_data") ? load_dataset(root.raw("eval_data"), "config.eval_data", seed + 1, ctx) : data;
  if (root.has("truth")) {
    const UnionProjector truth = load_projector(root.raw("truth"), "config.truth", ctx);
    std::optional<Dataset> anomalies;
    if (root.has("anomalies")) anomalies = load_dataset(root.raw("anomalies"), "config.anomalies", seed + 2, ctx);
    metrics["eval"] = compactness_json(compactness_metrics(rep.final_params, eval, truth, anomalies ? &*anomalies : nullptr));
  }

  Dataset recon = eval;
  for (auto& s : recon.samples) s = forward(rep.final_params, s).recon;

  if (root.has("stage2")) {
    // second module fitted to what the first one leaves over
    const Section st(root.raw("stage2"), "config.stage2", {"model", "train"});
    Dataset residual = data;
    for (auto& s : residual.samples) s = sub(s, forward(rep.final_params, s).recon);
    const AEParams init2 = parse_model(st.sub("model", {"latent", "tied", "activation", "skip", "init"}), residual, seed + 7);
    const TrainReport rep2 = train(init2, parse_train(st, seed + 7), residual);
    out.write_json("checkpoint_stage2.json", ae_to_json(rep2.final_params));
    out.write("history_stage2.csv", history_csv(rep2.loss_history));
    double err1 = 0.0, err2 = 0.0;
    for (std::size_t i = 0; i < eval.size(); ++i) {
      const Vector& s = eval.samples[i];
      const Vector r1 = forward(rep.final_params, s).recon;
      const Vector r = add(r1, forward(rep2.final_params, sub(s, r1)).recon);
      err1 += distance(s, r1) / static_cast<double>(eval.size());
      err2 += distance(s, r) / static_cast<double>(eval.size());
      recon.samples[i] = r;
    }
    metrics["stage2"] = {{"final_loss", rep2.loss_history.empty() ? 0.0 : rep2.loss_history.back()},
                         {"mean_recon_error_stage1", err1},
                         {"mean_recon_error_combined", err2}};
  }
  out.write_json("metrics.json", metrics);
  if (root.get<bool>("plot", true))
    out.write("plot.svg", svg_scatter({{"#999999", eval.samples}, {kColors[1], recon.samples}},
                                      "samples (grey), reconstructions (red)"));
  out.finish("train-ae", seed, config);
}

void cmd_fold(const json& config, const RunContext& ctx) {
  const Section root(config, "config", {"seed", "projector", "data", "eval_data", "learn_offset", "train", "plot"});
  const std::uint64_t seed = effective_seed(config, ctx);
  const UnionProjector p = load_projector(root.raw("projector"), "config.projector", ctx);
  const Dataset data = load_dataset(root.raw("data"), "config.data", seed, ctx);
  TransformParams init = TransformParams::identity(p.ambient_dim());
  init.learn_offset = root.get<bool>("learn_offset", false);
  const TrainConfig cfg = parse_train(root, seed);
  spdlog::info("fold: {} samples, {} steps", data.size(), cfg.steps);
  const FoldReport rep = train_fold(init, p, data, cfg);

  Outputs out(ctx.out_dir);
  out.write_json("transform.json", transform_to_json(rep.params));
  out.write("history.csv", history_csv(rep.loss_history));
  const Dataset folded = translate(rep.params, data);
  out.write("folded.csv", dataset_csv(folded));

  json metrics{{"final_loss", rep.final_loss}, {"ties", fold_batch(rep.params, p, data).ties}};
  if (p.ambient_dim() == 2) metrics["rotation_angle"] = rotation_angle_2d(to_isometry(rep.params).rotation);
  if (root.has("eval_data")) {
    const Dataset eval = load_dataset(root.raw("eval_data"), "config.eval_data", seed + 1, ctx);
    metrics["eval_mean_fold_loss"] = fold_batch(rep.params, p, eval).loss;
  }
  out.write_json("metrics.json", metrics);
  if (root.get<bool>("plot", true))
    out.write("plot.svg", svg_scatter({{"#999999", data.samples}, {kColors[0], folded.samples}},
                                      "samples (grey), folded (blue)"));
  out.finish("fold", seed, config);
}

void cmd_intersect(const json& config, const RunContext& ctx) {
  const Section root(config, "config", {"seed", "pi", "pj", "data", "refine"});
  const std::uint64_t seed = effective_seed(config, ctx);
  const UnionProjector pi = load_projector(root.raw("pi"), "config.pi", ctx);
  const UnionProjector pj = load_projector(root.raw("pj"), "config.pj", ctx);
  std::vector<Vector> inputs;
  if (root.raw("data").is_array()) {
    inputs = root.require<std::vector<Vector>>("data");
  } else {
    inputs = load_dataset(root.raw("data"), "config.data", seed, ctx).samples;
  }
  RefineConfig rc;
  if (root.has("refine")) {
    const Section r = root.sub("refine", {"eps", "max_iter", "gap_tol"});
    rc.eps = r.get<double>("eps", rc.eps);
    rc.max_iter = r.get<std::size_t>("max_iter", rc.max_iter);
    rc.gap_tol = r.get<double>("gap_tol", rc.gap_tol);
  }
  rc.validate();

  std::vector<RefineResult> results(inputs.size());
  std::vector<Decomposition> decomp(inputs.size());
  for_each_trial(inputs.size(), ctx.jobs, [&](std::size_t i) {
    results[i] = coupled_refine(pi, pj, inputs[i], rc);
    decomp[i] = residual_decompose(inputs[i], results[i].z_star, pi, pj);
  });

  const std::size_t n = pi.ambient_dim();
  std::vector<std::string> header{"index", "converged", "iterations", "gap", "recon_residual"};
  for (std::size_t i = 0; i < n; ++i) header.push_back("z" + std::to_string(i));
  std::vector<std::vector<double>> rows, gaps;
  std::size_t converged = 0;
  double max_gap = 0.0;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    std::vector<double> row{static_cast<double>(i), r.converged ? 1.0 : 0.0,
                            static_cast<double>(r.gap_history.size() - 1), r.gap_history.back(), decomp[i].recon_residual};
    row.insert(row.end(), r.z_star.begin(), r.z_star.end());
    rows.push_back(std::move(row));
    for (std::size_t t = 0; t < r.gap_history.size(); ++t)
      gaps.push_back({static_cast<double>(i), static_cast<double>(t), r.gap_history[t]});
    converged += r.converged;
    max_gap = std::max(max_gap, r.gap_history.back());
  }
  Outputs out(ctx.out_dir);
  out.write("refine.csv", csv_table(header, rows));
  out.write("gaps.csv", csv_table({"index", "iteration", "gap"}, gaps));
  out.write_json("metrics.json", {{"inputs", inputs.size()}, {"converged", converged}, {"max_final_gap", max_gap}});
  out.finish("intersect", seed, config);
}

void cmd_dba(const json& config, const RunContext& ctx) {
  const Section root(config, "config",
                     {"seed", "data", "tokens", "channels", "hidden", "lambda_orth", "steps", "step_size", "trials"});
  const std::uint64_t seed = effective_seed(config, ctx);
  const Dataset data = load_dataset(root.raw("data"), "config.data", seed, ctx);
  DBAConfig base;
  base.tokens = root.get<std::size_t>("tokens", base.tokens);
  base.channels = root.get<std::size_t>("channels", data.dim());
  base.hidden = root.get<std::size_t>("hidden", base.hidden);
  base.lambda_orth = root.get<double>("lambda_orth", 0.0);
  base.validate();
  const std::size_t steps = root.get<std::size_t>("steps", 200);
  const double step_size = root.get<double>("step_size", 0.05);
  const std::size_t trials = root.get<std::size_t>("trials", 1);
  spdlog::info("dba: {} trials of {} steps, lambda_orth {}", trials, steps, base.lambda_orth);

  std::vector<DBAHistory> hist(trials);
  for_each_trial(trials, ctx.jobs, [&](std::size_t t) {
    DBAConfig cfg = base;
    cfg.seed = seed + t;
    hist[t] = train_toy(cfg, data, steps, step_size);
  });

  std::vector<std::vector<double>> rows;
  json per_trial = json::array(), params = json::array();
  for (std::size_t t = 0; t < trials; ++t) {
    const auto& h = hist[t];
    for (std::size_t s = 0; s < h.j_orth.size(); ++s)
      rows.push_back({static_cast<double>(t), static_cast<double>(s), s < h.loss.size() ? h.loss[s] : std::nan(""), h.j_orth[s]});
    per_trial.push_back({{"seed", seed + t}, {"initial_j_orth", h.j_orth.front()}, {"final_j_orth", h.j_orth.back()},
                         {"final_loss", h.loss.empty() ? std::nan("") : h.loss.back()}});
    params.push_back(dba_to_json(h.final_params));
  }
  Outputs out(ctx.out_dir);
  out.write("history.csv", csv_table({"trial", "step", "loss", "j_orth"}, rows));
  out.write_json("params.json", params);
  out.write_json("metrics.json", {{"trials", per_trial}});
  out.finish("dba", seed, config);
}

void cmd_complexity(const json& config, const RunContext& ctx) {
  const Section root(config, "config", {"seed", "spec", "epsilons", "points", "reach"});
  const std::uint64_t seed = effective_seed(config, ctx);
  const Section s = root.sub("spec", {"cover_M", "cover_Mi", "group_sizes", "num_components"});
  ComplexitySpec spec;
  spec.cover_M = s.require<std::uint64_t>("cover_M");
  spec.cover_Mi = s.require<std::uint64_t>("cover_Mi");
  spec.group_sizes = s.get<std::vector<std::uint64_t>>("group_sizes", {});
  spec.num_components = s.get<std::uint64_t>("num_components", 1);
  spec.validate();
  const auto eps = root.get<std::vector<double>>("epsilons", {0.1});
  std::optional<Dataset> points;
  if (root.has("points")) points = load_dataset(root.raw("points"), "config.points", seed, ctx);
  std::optional<ReachSpec> reach;
  if (root.has("reach")) {
    const Section r = root.sub("reach", {"volume", "intrinsic_dim", "reach"});
    reach = ReachSpec{r.require<double>("volume"), r.require<std::size_t>("intrinsic_dim"), r.require<double>("reach"), 0.1};
  }

  std::vector<json> reports(eps.size());
  for_each_trial(eps.size(), ctx.jobs, [&](std::size_t i) {
    const std::size_t cover = points ? covering_number(*points, eps[i]) : 0;
    std::optional<double> bound;
    if (reach) {
      ReachSpec r = *reach;
      r.epsilon = eps[i];
      bound = niyogi_bound(r);
    }
    reports[i] = complexity_report(spec, eps[i], cover, bound);
  });
  Outputs out(ctx.out_dir);
  out.write_json("report.json", reports);
  out.finish("complexity", seed, config);
}

}  // namespace poslab::cli
