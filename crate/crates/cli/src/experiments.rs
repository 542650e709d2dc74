//! One pipeline per experiment kind. Every random stream is addressed below
//! the master seed by grid point and realization index, and every reduction
//! runs over index-ordered results, so outputs do not depend on the number
//! of workers.

use mblq::generative::BoltzmannModel;
use mblq::propagator::{quasi_energies, single_layer_spectrum, UnitaryMatrix};
use mblq::quench::{anticoncentration_fraction, extend_composite, porter_thomas_kld_curve, run_quench_sequence, temporal_memory, QuenchSchedule};
use mblq::seed::SeedTree;
use mblq::spectral::{
    eigenstate_component_histogram, histogram_kld, porter_thomas_reference, reference_masses, spacing_ratios, uniform_edges,
    BinnedDistribution, Histogram, ReferenceEnsemble, RATIO_BINS, SCALED_BINS, SCALED_MAX,
};
use mblq::spin_model::{sample_disorder, ChainParams};
use mblq::trainer::{boltzmann_dataset, dataset_target, sweep_disorder, SweepConfig, Trainer};
use rayon::prelude::*;
use serde::Serialize;

use crate::checkpoint::{fingerprint, Checkpoint};
use crate::config::{inf_float, ExperimentConfig, ExperimentKind};
use crate::output::{grid_tag, CsvTable, DerivedSeed, OutputSet};
use crate::{plot, RunError};

pub struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub root: SeedTree,
    pub out: &'a mut OutputSet,
    pub seeds: Vec<DerivedSeed>,
}

impl Context<'_> {
    /// Stream below the master seed, recorded in the manifest.
    fn seed(&mut self, label: String, path: &[u64]) -> SeedTree {
        let node = self.root.descend(path);
        self.seeds.push(DerivedSeed {
            label,
            path: path.to_vec(),
            stream: node.stream_id(),
        });
        node
    }

    fn realization_seeds(&mut self, g: usize, tag: &str) -> Vec<SeedTree> {
        (0..self.config.realizations)
            .map(|r| self.seed(format!("{tag}/realization-{r}"), &[g as u64, r as u64]))
            .collect()
    }

    fn svg(&mut self, name: &str, svg: String) -> Result<(), RunError> {
        if self.config.emit_plots {
            self.out.write(name, svg.as_bytes())?;
        }
        Ok(())
    }

    /// Identifies checkpoint files with the job that wrote them.
    fn job_fingerprint(&self, job: &str) -> Result<String, RunError> {
        let mut snapshot = self.config.clone();
        snapshot.output_dir = Default::default();
        snapshot.emit_plots = false;
        let text = serde_json::to_string(&snapshot).map_err(std::io::Error::other)?;
        Ok(fingerprint(&[env!("CARGO_PKG_VERSION"), &text, job]))
    }
}

pub fn dispatch(ctx: &mut Context<'_>) -> Result<(), RunError> {
    match ctx.config.kind {
        ExperimentKind::LevelStats => level_stats(ctx),
        ExperimentKind::CueCheck => cue_check(ctx),
        ExperimentKind::SupremacyCurve => supremacy_curve(ctx),
        ExperimentKind::Memory => memory(ctx),
        ExperimentKind::MakeDataset => make_dataset(ctx),
        ExperimentKind::Train => train(ctx),
        ExperimentKind::WSweep => w_sweep(ctx),
    }
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn merged(parts: impl IntoIterator<Item = Histogram>, lo: f64, hi: f64, bins: usize) -> Histogram {
    let mut total = Histogram::uniform(lo, hi, bins);
    for h in parts {
        total.merge(&h);
    }
    total
}

fn density_table(schema: &str, x: &str, data: &BinnedDistribution, refs: &[(&str, &BinnedDistribution)]) -> CsvTable {
    let mut header = vec![x, "density"];
    header.extend(refs.iter().map(|r| r.0));
    let mut table = CsvTable::new(schema, &header);
    let centers = data.centers();
    let columns: Vec<Vec<f64>> = std::iter::once(data.densities()).chain(refs.iter().map(|r| r.1.densities())).collect();
    for (i, c) in centers.iter().enumerate() {
        let mut row = vec![*c];
        row.extend(columns.iter().map(|col| col[i]));
        table.numeric_row(&row);
    }
    table
}

type Series = (String, Vec<(f64, f64)>);

fn named(series: &[Series]) -> Vec<(&str, Vec<(f64, f64)>)> {
    series.iter().map(|(n, s)| (n.as_str(), s.clone())).collect()
}

fn grid_label(p: &ChainParams) -> String {
    format!("F = {}J, W = {}J", p.drive_amplitude, p.disorder)
}

fn level_stats(ctx: &mut Context<'_>) -> Result<(), RunError> {
    let config = ctx.config;
    let prop = config.propagator_config();
    let edges = uniform_edges(0.0, 1.0, RATIO_BINS);
    let poi = reference_masses(ReferenceEnsemble::Poisson, &edges);
    let goe = reference_masses(ReferenceEnsemble::Goe, &edges);
    let mut summary = CsvTable::new(
        "mblq/level-stats-summary/v1",
        &["F_J", "W_J", "realizations", "mean_r", "stderr_r"],
    );
    for (g, params) in config.grid().iter().enumerate() {
        let tag = grid_tag(params.drive_amplitude, params.disorder);
        let seeds = ctx.realization_seeds(g, &tag);
        let per: Vec<(f64, Histogram)> = seeds
            .par_iter()
            .map(|node| {
                let theta = sample_disorder(params, &mut node.rng());
                let spectrum = single_layer_spectrum(params, &theta, &prop)?;
                let ratios = spacing_ratios(&spectrum.energies)?;
                let mut h = Histogram::uniform(0.0, 1.0, RATIO_BINS);
                h.extend(&ratios);
                Ok((ratios.iter().sum::<f64>() / ratios.len() as f64, h))
            })
            .collect::<mblq::Result<_>>()?;
        let (mean, stderr) = mean_and_stderr(&per.iter().map(|p| p.0).collect::<Vec<_>>());
        let hist = merged(per.into_iter().map(|p| p.1), 0.0, 1.0, RATIO_BINS).distribution();
        summary.numeric_row(&[params.drive_amplitude, params.disorder, config.realizations as f64, mean, stderr]);
        let table = density_table("mblq/level-stats/v1", "r", &hist, &[("poi_density", &poi), ("goe_coe_density", &goe)]);
        ctx.out.write_csv(&format!("level_stats_{tag}.csv"), &table)?;
        ctx.svg(
            &format!("level_stats_{tag}.svg"),
            plot::histogram(
                &format!("Pr(r), {}", grid_label(params)),
                "r",
                &hist.edges,
                &hist.densities(),
                &[("POI", poi.densities()), ("GOE/COE", goe.densities())],
            ),
        )?;
    }
    ctx.out.write_csv("level_stats_summary.csv", &summary)?;
    Ok(())
}

fn cue_check(ctx: &mut Context<'_>) -> Result<(), RunError> {
    let config = ctx.config;
    let prop = config.propagator_config();
    let layers = config.quench.layers;
    let every = config.quench.checkpoint_every;
    let ratio_edges = uniform_edges(0.0, 1.0, RATIO_BINS);
    let cue = reference_masses(ReferenceEnsemble::Cue, &ratio_edges);
    let pt = porter_thomas_reference();
    let mut summary = CsvTable::new(
        "mblq/cue-check-summary/v1",
        &["F_J", "W_J", "realizations", "M", "mean_r", "stderr_r", "cue_mean_r", "nc_kld_nats"],
    );
    for (g, params) in config.grid().iter().enumerate() {
        let tag = grid_tag(params.drive_amplitude, params.disorder);
        let seeds = ctx.realization_seeds(g, &tag);
        let checkpoints: Vec<Checkpoint> = (0..seeds.len())
            .map(|r| {
                let path = ctx.out.dir().join(format!("checkpoints/cue_{tag}_r{r}.bin"));
                Ok(Checkpoint::new(path, ctx.job_fingerprint(&format!("cue/{tag}/{r}"))?))
            })
            .collect::<Result<_, RunError>>()?;
        let per: Vec<(f64, Histogram, Histogram)> = seeds
            .par_iter()
            .zip(&checkpoints)
            .map(|(node, ck)| {
                let schedule = QuenchSchedule::random(params, layers, &mut node.rng());
                let (mut u, mut done) = ck
                    .load_composite(params.dim())?
                    .filter(|(_, d)| *d <= layers)
                    .unwrap_or_else(|| (UnitaryMatrix::identity(params.dim()), 0));
                while done < layers {
                    let next = (done + every).min(layers);
                    extend_composite(&mut u, params, &schedule.layers[done..next], &prop)?;
                    done = next;
                    if done < layers {
                        ck.save_composite(&u, done)?;
                    }
                }
                let ratios = spacing_ratios(&quasi_energies(&u, params.period())?.energies)?;
                let mut h = Histogram::uniform(0.0, 1.0, RATIO_BINS);
                h.extend(&ratios);
                let nc = eigenstate_component_histogram(&u)?;
                ck.remove()?;
                Ok((ratios.iter().sum::<f64>() / ratios.len() as f64, h, nc))
            })
            .collect::<Result<_, RunError>>()?;
        let (mean, stderr) = mean_and_stderr(&per.iter().map(|p| p.0).collect::<Vec<_>>());
        let (ratio_parts, nc_parts): (Vec<Histogram>, Vec<Histogram>) = per.into_iter().map(|p| (p.1, p.2)).unzip();
        let ratio_hist = merged(ratio_parts, 0.0, 1.0, RATIO_BINS).distribution();
        let nc_hist = merged(nc_parts, 0.0, SCALED_MAX, SCALED_BINS).distribution();
        let kld = histogram_kld(&nc_hist, &pt)?;
        let cue_mean = ReferenceEnsemble::Cue.mean_ratio().expect("closed form");
        summary.numeric_row(&[
            params.drive_amplitude,
            params.disorder,
            config.realizations as f64,
            layers as f64,
            mean,
            stderr,
            cue_mean,
            kld,
        ]);
        ctx.out.write_csv(
            &format!("cue_check_{tag}_ratio.csv"),
            &density_table("mblq/cue-check-ratio/v1", "r", &ratio_hist, &[("cue_density", &cue)]),
        )?;
        ctx.out.write_csv(
            &format!("cue_check_{tag}_nc.csv"),
            &density_table("mblq/cue-check-nc/v1", "Nc", &nc_hist, &[("porter_thomas_density", &pt)]),
        )?;
        ctx.svg(
            &format!("cue_check_{tag}_ratio.svg"),
            plot::histogram(&format!("Pr(r) of U(M={layers}), {}", grid_label(params)), "r", &ratio_hist.edges, &ratio_hist.densities(), &[("CUE", cue.densities())]),
        )?;
        ctx.svg(
            &format!("cue_check_{tag}_nc.svg"),
            plot::histogram(&format!("Pr(Nc), {}", grid_label(params)), "Nc", &nc_hist.edges, &nc_hist.densities(), &[("exp(-Nc)", pt.densities())]),
        )?;
    }
    ctx.out.write_csv("cue_check_summary.csv", &summary)?;
    Ok(())
}

/// First layer after which the curve stays within twice its floor (mean of
/// the last 50 recorded layers).
pub fn saturation_onset(curve: &[f64]) -> usize {
    let tail = curve.len().min(50);
    let floor = curve[curve.len() - tail..].iter().sum::<f64>() / tail as f64;
    (0..curve.len())
        .find(|&m| curve[m..].iter().all(|&x| x <= 2.0 * floor))
        .unwrap_or(curve.len() - 1)
}

fn supremacy_curve(ctx: &mut Context<'_>) -> Result<(), RunError> {
    let config = ctx.config;
    let prop = config.propagator_config();
    let layers = config.quench.layers;
    let mut summary = CsvTable::new(
        "mblq/supremacy-summary/v1",
        &["F_J", "W_J", "realizations", "M", "final_kld_nats", "saturation_onset_m", "anticoncentration_fraction", "anticoncentration_stderr"],
    );
    let mut series = Vec::new();
    for (g, params) in config.grid().iter().enumerate() {
        let tag = grid_tag(params.drive_amplitude, params.disorder);
        let seeds = ctx.realization_seeds(g, &tag);
        let per: Vec<(Vec<f64>, f64)> = seeds
            .par_iter()
            .map(|node| {
                let schedule = QuenchSchedule::random(params, layers, &mut node.rng());
                let trace = run_quench_sequence(params, &schedule, &prop)?;
                let curve = porter_thomas_kld_curve(&trace).into_iter().map(|(_, k)| k).collect();
                Ok((curve, anticoncentration_fraction(trace.last(), config.quench.delta)))
            })
            .collect::<mblq::Result<_>>()?;
        let mut table = CsvTable::new("mblq/supremacy-curve/v1", &["m", "kld_mean_nats", "kld_stderr_nats"]);
        let mut means = Vec::with_capacity(layers + 1);
        for m in 0..=layers {
            let (mean, stderr) = mean_and_stderr(&per.iter().map(|p| p.0[m]).collect::<Vec<_>>());
            table.numeric_row(&[m as f64, mean, stderr]);
            means.push(mean);
        }
        let (ac, ac_err) = mean_and_stderr(&per.iter().map(|p| p.1).collect::<Vec<_>>());
        summary.numeric_row(&[
            params.drive_amplitude,
            params.disorder,
            config.realizations as f64,
            layers as f64,
            means[layers],
            saturation_onset(&means) as f64,
            ac,
            ac_err,
        ]);
        ctx.out.write_csv(&format!("supremacy_{tag}.csv"), &table)?;
        series.push((grid_label(params), means.iter().enumerate().map(|(m, k)| (m as f64, *k)).collect::<Vec<_>>()));
    }
    ctx.out.write_csv("supremacy_summary.csv", &summary)?;
    ctx.svg("supremacy.svg", plot::lines("KLD from Porter-Thomas", "M", "KLD (nats)", &named(&series)))
}

fn memory(ctx: &mut Context<'_>) -> Result<(), RunError> {
    let config = ctx.config;
    let prop = config.propagator_config();
    let q = &config.quench;
    let mut series = Vec::new();
    for (g, params) in config.grid().iter().enumerate() {
        let tag = grid_tag(params.drive_amplitude, params.disorder);
        let seeds = ctx.realization_seeds(g, &tag);
        let per: Vec<Vec<(usize, f64)>> = seeds
            .par_iter()
            .map(|node| temporal_memory(params, &prop, q.window_start, q.window_len, q.dm_max, &mut node.rng()))
            .collect::<mblq::Result<_>>()?;
        let mut table = CsvTable::new("mblq/memory/v1", &["dm", "kld_mean_nats", "kld_stderr_nats"]);
        let mut points = Vec::new();
        for dm in 0..=q.dm_max {
            let (mean, stderr) = mean_and_stderr(&per.iter().map(|c| c[dm].1).collect::<Vec<_>>());
            table.numeric_row(&[dm as f64, mean, stderr]);
            points.push((dm as f64, mean));
        }
        ctx.out.write_csv(&format!("memory_{tag}.csv"), &table)?;
        series.push((grid_label(params), points));
    }
    ctx.svg("memory.svg", plot::lines("Temporal memory", "dm", "KLD (nats)", &named(&series)))
}

#[derive(Serialize)]
struct DatasetSidecar<'a> {
    schema: &'static str,
    model_id: &'a str,
    master_seed: u64,
    seed_path: Vec<u64>,
    stream: u64,
    length: usize,
    samples: usize,
    #[serde(with = "inf_float")]
    kt0: f64,
    biases: &'a [f64],
    couplings: &'a [Vec<f64>],
}

fn make_dataset(ctx: &mut Context<'_>) -> Result<(), RunError> {
    let config = ctx.config;
    let t = &config.training;
    let params = config.grid()[0];
    for k in 0..t.datasets {
        let node = ctx.seed(format!("dataset-{k}"), &[0, k as u64]);
        let (model, data): (BoltzmannModel, _) = boltzmann_dataset(&params, t.kt0, t.dataset_size, &ctx.root, k)?;
        let mut text = Vec::new();
        data.write_text(&mut text)?;
        ctx.out.write(&format!("datasets/dataset_{k}.txt"), &text)?;
        let sidecar = DatasetSidecar {
            schema: "mblq/dataset/v1",
            model_id: &data.provenance.model_id,
            master_seed: config.master_seed,
            seed_path: vec![0, k as u64],
            stream: node.stream_id(),
            length: params.length,
            samples: data.len(),
            kt0: model.kt0,
            biases: &model.biases,
            couplings: &model.couplings,
        };
        let json = serde_json::to_string_pretty(&sidecar).map_err(std::io::Error::other)? + "\n";
        ctx.out.write(&format!("datasets/dataset_{k}.json"), json.as_bytes())?;
    }
    Ok(())
}

fn train(ctx: &mut Context<'_>) -> Result<(), RunError> {
    let config = ctx.config;
    let t = &config.training;
    let prop = config.propagator_config();
    let tcfg = config.training_config();
    let mut summary = CsvTable::new("mblq/train-summary/v1", &["F_J", "W_J", "dataset", "M", "D", "final_cost_nats"]);
    let mut series = Vec::new();
    for (g, params) in config.grid().iter().enumerate() {
        let tag = grid_tag(params.drive_amplitude, params.disorder);
        let mut mean_curve = vec![0.0; t.layers];
        for k in 0..t.datasets {
            let target = dataset_target(params, t.kt0, t.dataset_size, &ctx.root, k)?;
            let run_seed = ctx.seed(format!("{tag}/dataset-{k}"), &[1, g as u64, k as u64]);
            let ck = Checkpoint::new(
                ctx.out.dir().join(format!("checkpoints/train_{tag}_d{k}.json")),
                ctx.job_fingerprint(&format!("train/{tag}/{k}"))?,
            );
            let mut trainer = match ck.load_trace()?.filter(|tr| tr.steps() <= t.layers) {
                Some(trace) => Trainer::resume(params, &target, &tcfg, &prop, run_seed, trace)?,
                None => Trainer::new(params, &target, &tcfg, &prop, run_seed)?,
            };
            while !trainer.is_done() {
                trainer.step()?;
                if trainer.completed_steps() % t.checkpoint_every == 0 && !trainer.is_done() {
                    ck.save_trace(trainer.trace())?;
                }
            }
            let trace = trainer.into_trace();
            ck.remove()?;

            let mut table = CsvTable::new(
                "mblq/train-trace/v1",
                &["step", "cost_nats", "candidate_min_nats", "candidate_median_nats"],
            );
            for (m, (&c, &median)) in trace.costs.iter().zip(&trace.candidate_medians).enumerate() {
                table.numeric_row(&[(m + 1) as f64, c, c, median]);
                mean_curve[m] += c / t.datasets as f64;
            }
            ctx.out.write_csv(&format!("train_{tag}_d{k}.csv"), &table)?;
            let mut schedule = String::new();
            for theta in &trace.chosen_thetas {
                let cells: Vec<String> = theta.as_slice().iter().map(|x| x.to_string()).collect();
                schedule.push_str(&cells.join(" "));
                schedule.push('\n');
            }
            ctx.out.write(&format!("schedule_{tag}_d{k}.txt"), schedule.as_bytes())?;
            summary.numeric_row(&[
                params.drive_amplitude,
                params.disorder,
                k as f64,
                t.layers as f64,
                t.candidates as f64,
                trace.final_cost().expect("at least one step"),
            ]);
        }
        series.push((grid_label(params), mean_curve.iter().enumerate().map(|(m, c)| ((m + 1) as f64, *c)).collect::<Vec<_>>()));
    }
    ctx.out.write_csv("train_summary.csv", &summary)?;
    ctx.svg("train.svg", plot::lines("Training cost", "M", "cost (nats)", &named(&series)))
}

fn w_sweep(ctx: &mut Context<'_>) -> Result<(), RunError> {
    let config = ctx.config;
    let t = &config.training;
    let prop = config.propagator_config();
    let tcfg = config.training_config();
    let sweep = SweepConfig {
        w_values: config.chain.disorder.values(),
        model_count: t.datasets,
        dataset_size: t.dataset_size,
        kt0: t.kt0,
        ratio_realizations: t.ratio_realizations,
    };
    let mut cost_series = Vec::new();
    let mut ratio_series = Vec::new();
    for (fi, f) in config.chain.drive.values().into_iter().enumerate() {
        let base = config.chain_params(f, sweep.w_values[0]);
        let node = ctx.seed(format!("F{f}"), &[fi as u64]);
        let rows = sweep_disorder(&base, &sweep, &tcfg, &prop, node)?;
        let mut table = CsvTable::new(
            "mblq/w-sweep/v1",
            &["W_J", "mean_final_cost_nats", "std_final_cost_nats", "mean_r"],
        );
        for row in &rows {
            table.numeric_row(&[row.disorder, row.mean_final_cost, row.std_final_cost, row.mean_ratio]);
        }
        ctx.out.write_csv(&format!("w_sweep_F{f}.csv"), &table)?;
        cost_series.push((format!("F = {f}J"), rows.iter().map(|r| (r.disorder, r.mean_final_cost)).collect::<Vec<_>>()));
        ratio_series.push((format!("F = {f}J"), rows.iter().map(|r| (r.disorder, r.mean_ratio)).collect::<Vec<_>>()));
    }
    ctx.svg("w_sweep_cost.svg", plot::lines("Final cost vs disorder", "W (J)", "cost (nats)", &named(&cost_series)))?;
    ctx.svg("w_sweep_ratio.svg", plot::lines("Single-layer <r> vs disorder", "W (J)", "<r>", &named(&ratio_series)))
}
