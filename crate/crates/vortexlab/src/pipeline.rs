//! Stage orchestration behind the command-line tool: runs the configured
//! stages, writes CSV artifacts and a JSON manifest.

use crate::config::{EvolveMethod, RunConfig, Stage};
use crate::error::{Error, Result};
use crate::evolution::{decay_report, evolve, rel_l2_c, timestep_oracle, ThetaField};
use crate::greens::{free_green, longrange_green, verify_green_bound};
use crate::grid::{rel_l2, Grid};
use crate::oracle::K1Oracle;
use crate::profile::{ProfileKind, VortexProfile};
use crate::sdf::{depletion_fit, depletion_window, jump_check, pv_residual, DataSource, EpsSchedule, InitialData, SdfSolver};
use crate::spectrum::{assemble_lk, lap_coercivity, spectrum_report};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct StageRecord {
    pub stage: String,
    pub seconds: f64,
    pub results: Value,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub package: String,
    pub version: String,
    pub config: RunConfig,
    pub stages: Vec<StageRecord>,
    pub total_seconds: f64,
    /// message of the first failing stage, if any
    pub error: Option<String>,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(&path, text + "\n")?;
        Ok(path)
    }
}

/// Runs every configured stage in order, stopping at the first failure. The
/// manifest is returned either way; the error names the failing stage.
pub fn run(config: &RunConfig) -> (Manifest, Option<Error>) {
    let start = Instant::now();
    let mut manifest = Manifest {
        package: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: config.clone(),
        stages: Vec::new(),
        total_seconds: 0.0,
        error: None,
    };
    let mut failure = None;
    if let Err(e) = config.validate() {
        failure = Some(Error::Stage { stage: "config".into(), source: Box::new(e) });
    } else if let Err(e) = std::fs::create_dir_all(&config.out) {
        failure = Some(Error::Stage { stage: "output".into(), source: Box::new(e.into()) });
    } else {
        let ctx = Context::new(config);
        for &stage in &config.stages {
            let t0 = Instant::now();
            let mut files = Vec::new();
            let out = match stage {
                Stage::Profile => ctx.profile_stage(&mut files),
                Stage::Green => ctx.green_stage(&mut files),
                Stage::Sdf => ctx.sdf_stage(&mut files),
                Stage::Evolve => ctx.evolve_stage(&mut files),
                Stage::Spectrum => ctx.spectrum_stage(&mut files),
                Stage::Verify => ctx.verify_stage(),
            };
            let seconds = t0.elapsed().as_secs_f64();
            match out {
                Ok(results) => {
                    let failed = results.get("failed").and_then(Value::as_array).filter(|f| !f.is_empty()).cloned();
                    manifest.stages.push(StageRecord { stage: stage.name().into(), seconds, results, files });
                    if let Some(failed) = failed {
                        let names: Vec<&str> = failed.iter().filter_map(Value::as_str).collect();
                        let msg = format!("{} check(s) failed: {}", names.len(), names.join("; "));
                        failure = Some(Error::Stage { stage: stage.name().into(), source: Box::new(Error::Domain(msg)) });
                        break;
                    }
                }
                Err(e) => {
                    failure = Some(Error::Stage { stage: stage.name().into(), source: Box::new(e) });
                    break;
                }
            }
        }
    }
    manifest.total_seconds = start.elapsed().as_secs_f64();
    manifest.error = failure.as_ref().map(|e| e.to_string());
    (manifest, failure)
}

struct Context<'a> {
    cfg: &'a RunConfig,
    profile: VortexProfile,
}

fn fmt_w(w: f64) -> String {
    format!("{w}")
}

struct CsvOut {
    writer: csv::Writer<std::fs::File>,
}

impl CsvOut {
    fn create(dir: &Path, name: &str, header: &[&str], files: &mut Vec<String>) -> Result<Self> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(dir.join(name))
            .map_err(csv_err)?;
        writer.write_record(header).map_err(csv_err)?;
        files.push(name.to_string());
        Ok(CsvOut { writer })
    }

    fn row(&mut self, values: &[f64]) -> Result<()> {
        self.writer.write_record(values.iter().map(|x| format!("{x:e}"))).map_err(csv_err)
    }

    fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

impl<'a> Context<'a> {
    fn new(cfg: &'a RunConfig) -> Self {
        Context { cfg, profile: VortexProfile::new(cfg.profile) }
    }

    fn dir(&self) -> &Path {
        &self.cfg.out
    }

    fn initial_data(&self, k: i64, source: DataSource) -> Result<InitialData> {
        let sigma = if k.abs() <= 5 { self.cfg.data.sigma } else { 0.0 };
        InitialData::build(&self.profile, k, source, sigma)
    }

    fn profile_stage(&self, files: &mut Vec<String>) -> Result<Value> {
        let g = self.cfg.grid.build()?;
        let p = &self.profile;
        let mut csv = CsvOut::create(self.dir(), "profile.csv", &["v", "r", "omega", "B", "dB", "d2B", "D"], files)?;
        for v in g.nodes() {
            let r = v.exp();
            let c = p.coefficients(v);
            csv.row(&[v, r, p.omega(r), c.b, c.bp, c.bpp, c.d])?;
        }
        csv.finish()?;
        let report = p.verify_assumption(g.v_min, g.v_max(), 2001);
        Ok(json!({
            "kind": p.kind(),
            "b0": p.b0(),
            "c_star": p.c_star,
            "c_bound": p.c_bound,
            "assumption": report,
        }))
    }

    fn green_stage(&self, files: &mut Vec<String>) -> Result<Value> {
        let w = self.cfg.green.w;
        let grid = Grid::new((w - 12.0).floor(), 12.0, self.cfg.green.h)?;
        let mut out = Vec::new();
        for &k in &self.cfg.modes {
            let kernel = longrange_green(&self.profile, k, w, grid)?;
            let bound = verify_green_bound(&kernel);
            let jw = grid.nearest(w);
            let j0 = grid.nearest(0.0);
            let name = format!("green_k{k}_w{}.csv", fmt_w(w));
            let mut csv = CsvOut::create(self.dir(), &name, &["v", "G_at_w", "G_at_0", "free_at_w", "free_at_0"], files)?;
            for i in 0..grid.n {
                let v = grid.v(i);
                csv.row(&[v, kernel.get(i, jw), kernel.get(i, j0), free_green(k, v, grid.v(jw))?, free_green(k, v, 0.0)?])?;
            }
            csv.finish()?;
            out.push(json!({ "k": k, "w": w, "bound": bound }));
        }
        Ok(Value::Array(out))
    }

    fn sdf_stage(&self, files: &mut Vec<String>) -> Result<Value> {
        let grid = self.cfg.grid.build()?;
        let source = self.cfg.data.source()?;
        let mut out = Vec::new();
        for &k in &self.cfg.modes {
            let data = Arc::new(self.initial_data(k, source.clone())?);
            let solver = SdfSolver::new(&self.profile, data.clone(), grid)?;
            for &w in &self.cfg.w_list {
                let slice = solver.limit(w, &self.cfg.eps)?;
                let jump = jump_check(&slice, &data);
                let pv = pv_residual(&slice, &self.profile, self.cfg.tolerances.pv_exclusion);
                let depletion = match depletion_window(slice.w) {
                    Ok(win) if slice.theta_grid.contains(win.0, win.1) => Some(depletion_fit(&slice, win)?),
                    _ => None,
                };
                let name = format!("sdf_k{k}_w{}.csv", fmt_w(w));
                let mut csv = CsvOut::create(self.dir(), &name, &["v", "gamma", "theta_v", "theta"], files)?;
                for i in 0..grid.n {
                    csv.row(&[grid.v(i), slice.gamma_limit[i], slice.theta_grid.v(i), slice.theta[i]])?;
                }
                csv.finish()?;
                out.push(json!({
                    "k": k,
                    "w": slice.w,
                    "slice": slice,
                    "jump": jump,
                    "pv_residual": pv,
                    "depletion_exponent": depletion,
                    "m_dagger": data.m_dagger,
                }));
            }
        }
        Ok(Value::Array(out))
    }

    fn evolve_stage(&self, files: &mut Vec<String>) -> Result<Value> {
        let ec = &self.cfg.evolve;
        let grid = self.cfg.grid.build()?;
        let source = self.cfg.data.source()?;
        let test_fn = DataSource::gaussian(self.cfg.data.center, self.cfg.data.width.max(0.5), 1.0);
        let (a, b) = ec.report_window;
        let in_window = |i: usize| {
            let v = grid.v(i);
            v >= a && v <= b
        };
        let windows: Vec<f64> = ec.windows.iter().copied().filter(|&vs| grid.contains(vs - 4.0, vs + 4.0)).collect();
        let mut out = Vec::new();
        for &k in &self.cfg.modes {
            let data = Arc::new(self.initial_data(k, source.clone())?);
            let mut entry = json!({ "k": k, "times": ec.times, "windows": windows });
            let repr = if ec.method != EvolveMethod::Timestep {
                let field = ThetaField::compute(&self.profile, data.clone(), grid, ec.w_range, 1, &self.cfg.eps)?;
                let evo = evolve(&field, &ec.times)?;
                let name = format!("evolve_repr_k{k}.csv");
                let header = ["t", "v", "re_phi", "im_phi", "re_f", "im_f", "re_f1", "im_f1", "re_f2", "im_f2"];
                let mut csv = CsvOut::create(self.dir(), &name, &header, files)?;
                for (ti, &t) in evo.times.iter().enumerate() {
                    for i in (0..grid.n).filter(|&i| in_window(i)) {
                        let (p, f, f1, f2) = (evo.phi[ti][i], evo.f[ti][i], evo.f1[ti][i], evo.f2[ti][i]);
                        csv.row(&[t, grid.v(i), p.re, p.im, f.re, f.im, f1.re, f1.im, f2.re, f2.im])?;
                    }
                }
                csv.finish()?;
                if evo.times.len() >= 4 && !windows.is_empty() {
                    entry["decay"] = serde_json::to_value(decay_report(&evo, &self.profile, &windows, &test_fn)?)
                        .map_err(|e| Error::Config(e.to_string()))?;
                }
                let f0: Vec<Complex64> = grid.nodes().iter().map(|&v| Complex64::new(data.f0_at(v), 0.0)).collect();
                if let Some(t0) = evo.times.iter().position(|&t| t == 0.0) {
                    entry["f_at_0_vs_data"] = json!(rel_l2_c(&evo.f[t0], &f0, in_window));
                }
                Some(evo)
            } else {
                None
            };
            if ec.method != EvolveMethod::Repr {
                let f0: Vec<Complex64> = grid.nodes().iter().map(|&v| Complex64::new(data.f0_at(v), 0.0)).collect();
                let run = timestep_oracle(&self.profile, k, &f0, grid, &ec.times, ec.dt, true)?;
                let name = format!("evolve_timestep_k{k}.csv");
                let mut csv = CsvOut::create(self.dir(), &name, &["t", "v", "re_phi", "im_phi", "re_f", "im_f"], files)?;
                for (ti, &t) in run.times.iter().enumerate() {
                    for i in (0..grid.n).filter(|&i| in_window(i)) {
                        let (p, f) = (run.phi[ti][i], run.f[ti][i]);
                        csv.row(&[t, grid.v(i), p.re, p.im, f.re, f.im])?;
                    }
                }
                csv.finish()?;
                entry["timestep_steps"] = json!(run.steps);
                if let Some(evo) = &repr {
                    // the oracle returns its times sorted
                    let cmp: Vec<Value> = evo
                        .times
                        .iter()
                        .enumerate()
                        .filter_map(|(ti, &t)| {
                            let tj = run.times.iter().position(|&s| s == t)?;
                            Some(json!({
                                "t": t,
                                "f_rel_l2": rel_l2_c(&evo.f[ti], &run.f[tj], in_window),
                                "phi_rel_l2": rel_l2_c(&evo.phi[ti], &run.phi[tj], in_window),
                            }))
                        })
                        .collect();
                    entry["repr_vs_timestep"] = Value::Array(cmp);
                }
            }
            out.push(entry);
        }
        Ok(Value::Array(out))
    }

    fn spectrum_stage(&self, files: &mut Vec<String>) -> Result<Value> {
        let sc = &self.cfg.spectrum;
        let grid = sc.grid.build()?;
        let mut out = Vec::new();
        for &k in &self.cfg.modes {
            let op = assemble_lk(&self.profile, k, grid)?;
            let rep = spectrum_report(&op, &self.profile)?;
            let name = format!("spectrum_k{k}.csv");
            let mut csv = CsvOut::create(self.dir(), &name, &["index", "eigenvalue"], files)?;
            for (i, &l) in rep.eigenvalues.iter().enumerate() {
                csv.row(&[i as f64, l])?;
            }
            csv.finish()?;
            let mut lap = Vec::new();
            for pt in &sc.lap {
                let g = Grid::new((pt.w - 12.0).min(-12.0), 12.0, sc.lap_h)?;
                let eps = pt.eps * (-2.0 * pt.w.abs()).exp();
                lap.push(lap_coercivity(&self.profile, k, sc.k_star, pt.w, eps, g, true)?);
            }
            out.push(json!({ "k": k, "report": rep, "lap": lap }));
        }
        Ok(Value::Array(out))
    }

    fn verify_stage(&self) -> Result<Value> {
        let tol = &self.cfg.tolerances;
        let p = &self.profile;
        let grid = self.cfg.grid.build()?;
        let mut checks = Vec::new();
        let mut failed = Vec::new();
        let mut check = |name: String, value: f64, limit: f64| {
            let pass = value < limit;
            if !pass {
                failed.push(name.clone());
            }
            checks.push(json!({ "check": name, "value": value, "limit": limit, "pass": pass }));
        };

        let rep = p.verify_assumption(-10.0, 10.0, 1001);
        check("identity 2B'+B''=e^{2v}D".into(), rep.identity_residual, 1e-10);
        if p.kind() == ProfileKind::Algebraic {
            check("b(0) = 1/16".into(), (p.b0() - 0.0625).abs(), 1e-12);
        }

        let oracle = K1Oracle::new(p);
        for &w in &self.cfg.w_list {
            let raw = DataSource::gaussian(w, 0.5, 1.0);
            let data = Arc::new(InitialData::build(p, 1, raw, 0.0)?);
            let slice = SdfSolver::new(p, data.clone(), grid)?.limit(w, &self.cfg.eps)?;
            let exact = oracle.gamma_column(&grid.nodes(), slice.w, &data.source);
            let mask = |i: usize| {
                let v = grid.v(i);
                (-8.0..=8.0).contains(&v) && (v - slice.w).abs() >= 0.1
            };
            check(format!("k=1 limit vs closed form, w={}", slice.w), rel_l2(&slice.gamma_limit, &exact, mask), tol.oracle_rel_l2);
        }

        let schedule = EpsSchedule { eps0: tol.verify_eps0, ..self.cfg.eps };
        let source = self.cfg.data.source()?;
        for &k in self.cfg.modes.iter().filter(|k| k.abs() >= 2) {
            let data = Arc::new(self.initial_data(k, source.clone())?);
            let solver = SdfSolver::new(p, data.clone(), grid)?;
            for &w in &self.cfg.w_list {
                let slice = solver.limit(w, &schedule)?;
                let jump = jump_check(&slice, &data);
                check(format!("derivative jump k={k} w={}", slice.w), jump.residual, tol.jump_rel);
                check(format!("PV residual k={k} w={}", slice.w), pv_residual(&slice, p, tol.pv_exclusion), tol.pv_rel);
            }
        }
        Ok(json!({ "checks": checks, "failed": failed }))
    }
}
