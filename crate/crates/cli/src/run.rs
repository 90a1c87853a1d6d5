//! Subcommand orchestration. Every artifact is a pure function of the
//! configuration and seed; wall-clock time is reported on stderr only.

use std::path::{Path, PathBuf};

use asymgame::blowup::blown_hamiltonian_check;
use asymgame::discrete::{
    best_response_p1, best_response_p2, exact_partition_value, payoff_mc, profile_payoff, simulate, BestResponse,
    McConfig, McEstimate, StrategyProfile,
};
use asymgame::fenchel::{biconjugate_p, conjugate_on_box, SimplexFunction};
use asymgame::hamiltonian::{eval_h, eval_h_star, eval_inf_sup_dual};
use asymgame::hji::{
    certified_mask, check_value_agreement, recover_primal, solve_dual_v, solve_dual_w, viscosity, DualField, PdeGrids,
    Recovery, ValueField,
};
use asymgame::model::{SimplexGrid, StateGrid};
use asymgame::Error;
use serde::{Deserialize, Serialize};

use crate::config::{ConfigError, RunConfig};
use crate::export::{dual_csv, dual_json, table_csv, value_csv, value_json, write_json, write_text};
use crate::expr::Env;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Core { context: String, source: Error },
    #[error("i/o error: {0}")]
    Io(String),
}

impl RunError {
    /// 1 configuration or input error, 2 numerical failure, 3 budget exceeded.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 1,
            RunError::Io(_) => 2,
            RunError::Core { source, .. } => match source {
                Error::TooLarge { .. } | Error::DimensionBudget { .. } | Error::IntegrationBudget { .. } => 3,
                Error::InvalidSpec(_)
                | Error::InvalidMix(_)
                | Error::StrategyMismatch(_)
                | Error::DelayViolation { .. }
                | Error::DimensionMismatch { .. } => 1,
                _ => 2,
            },
        }
    }
}

trait Context<T> {
    fn ctx(self, what: &str) -> Result<T, RunError>;
}

impl<T> Context<T> for asymgame::Result<T> {
    fn ctx(self, what: &str) -> Result<T, RunError> {
        self.map_err(|source| RunError::Core { context: what.to_string(), source })
    }
}

fn check_pde_budget(cfg: &RunConfig) -> Result<(), RunError> {
    let d = cfg.game.dim();
    if d > cfg.numerics.pde_dim_cap {
        let (i, j) = (cfg.game.types_p(), cfg.game.types_q());
        let base = cfg.scenario.as_ref().map_or(d, |(s, _)| s.dim());
        let (bi, bj) = if cfg.scenario.is_some() { (i, j) } else { (1, 1) };
        return Err(RunError::Core {
            context: "PDE route".into(),
            source: Error::DimensionBudget { dim: d, d: base, i: bi, j: bj, cap: cfg.numerics.pde_dim_cap },
        });
    }
    Ok(())
}

/// Both dual fields, both recoveries and the grids of one level.
pub struct Solution {
    pub grids: PdeGrids<f64>,
    pub dual_v: DualField<f64>,
    pub dual_w: DualField<f64>,
    pub v: Recovery<f64>,
    pub w: Recovery<f64>,
}

pub fn solve_level(cfg: &RunConfig, level: usize) -> Result<Solution, RunError> {
    check_pde_budget(cfg)?;
    let grids = cfg.grids(level).ctx("building grids")?;
    let dual_v = solve_dual_v(&cfg.game, &grids, &cfg.numerics).ctx("V route sweep")?;
    let dual_w = solve_dual_w(&cfg.game, &grids, &cfg.numerics).ctx("W route sweep")?;
    let v = recover_primal(&dual_v, &grids, &cfg.numerics).ctx("V route recovery")?;
    let w = recover_primal(&dual_w, &grids, &cfg.numerics).ctx("W route recovery")?;
    Ok(Solution { grids, dual_v, dual_w, v, w })
}

fn certified(cfg: &RunConfig, grids: &PdeGrids<f64>) -> Vec<Vec<bool>> {
    (0..grids.time.knots().len()).map(|k| certified_mask(grids, cfg.f_max, k)).collect()
}

fn reference_error(cfg: &RunConfig, grids: &PdeGrids<f64>, field: &ValueField<f64>, mask: &[Vec<bool>]) -> Option<f64> {
    let r = cfg.reference.as_ref()?;
    let (nt, nx, np, nq) = field.shape();
    let mut worst: f64 = 0.0;
    for k in 0..nt {
        let t = grids.time.knots()[k];
        for x in (0..nx).filter(|&x| mask[k][x]) {
            let xs = grids.state.point(x);
            let exact = r.eval(&Env { t, x: &xs, u: &[], v: &[] });
            for p in 0..np {
                for q in 0..nq {
                    worst = worst.max((field.at(k, x, p, q) - exact).abs());
                }
            }
        }
    }
    Some(worst)
}

/// Largest pure Isaacs gap over the state nodes and unit directions `+-e_a`.
fn isaacs_probe(cfg: &RunConfig, state: &StateGrid<f64>) -> Result<f64, RunError> {
    let d = state.dim();
    let nodes: Vec<usize> = if state.len() <= 64 { (0..state.len()).collect() } else { (0..64).map(|k| k * (state.len() - 1) / 63).collect() };
    let mut worst: f64 = 0.0;
    for node in nodes {
        let x = state.point(node);
        for a in 0..d {
            for s in [-1.0, 1.0] {
                let mut xi = vec![0.0; d];
                xi[a] = s;
                worst = worst.max(eval_h(&cfg.game, &x, &xi, cfg.numerics.tol_game).ctx("Isaacs probe")?.isaacs_gap);
            }
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub dim: usize,
    pub types: [usize; 2],
    pub state_nodes: usize,
    pub time_steps: usize,
    pub dx: f64,
    pub dt: f64,
    pub k: usize,
    pub f_max: f64,
    pub sigma: f64,
    pub max_gap_vw: f64,
    pub max_gap_vw_certified: f64,
    pub certified_nodes_t0: usize,
    pub convexity_violation_p_v: f64,
    pub convexity_violation_p_w: f64,
    pub concavity_violation_q_v: f64,
    pub concavity_violation_q_w: f64,
    pub boundary_fraction_v: f64,
    pub boundary_fraction_w: f64,
    pub warnings: Vec<String>,
    pub isaacs_gap_max: f64,
    pub reference_error_v: Option<f64>,
}

pub fn summarize(cfg: &RunConfig, sol: &Solution) -> Result<SolveSummary, RunError> {
    let g = &sol.grids;
    let mask = certified(cfg, g);
    let all = check_value_agreement(&sol.v.field, &sol.w.field, 0.0, None).ctx("agreement")?;
    let in_mask = |k: usize, x: usize| mask[k][x];
    let cert = check_value_agreement(&sol.v.field, &sol.w.field, 0.0, Some(&in_mask)).ctx("agreement")?;
    let warnings = [&sol.v.warning, &sol.w.warning].into_iter().flatten().cloned().collect();
    Ok(SolveSummary {
        dim: cfg.game.dim(),
        types: [cfg.game.types_p(), cfg.game.types_q()],
        state_nodes: g.state.len(),
        time_steps: g.time.steps(),
        dx: g.state.min_spacing(),
        dt: g.time.mesh(),
        k: g.p_grid.resolution(),
        f_max: cfg.f_max,
        sigma: viscosity(cfg.f_max, &cfg.numerics),
        max_gap_vw: all.max_gap,
        max_gap_vw_certified: cert.max_gap,
        certified_nodes_t0: mask[0].iter().filter(|&&m| m).count(),
        convexity_violation_p_v: sol.v.field.convexity_violation_p(&g.p_grid),
        convexity_violation_p_w: sol.w.field.convexity_violation_p(&g.p_grid),
        concavity_violation_q_v: sol.v.field.concavity_violation_q(&g.q_grid),
        concavity_violation_q_w: sol.w.field.concavity_violation_q(&g.q_grid),
        boundary_fraction_v: sol.v.boundary_fraction,
        boundary_fraction_w: sol.w.boundary_fraction,
        warnings,
        isaacs_gap_max: isaacs_probe(cfg, &g.state)?,
        reference_error_v: reference_error(cfg, g, &sol.v.field, &mask),
    })
}

pub fn run_solve(cfg: &RunConfig, out: &Path) -> Result<SolveSummary, RunError> {
    let sol = solve_level(cfg, 0)?;
    let summary = summarize(cfg, &sol)?;
    let g = &sol.grids;
    if cfg.output.csv() {
        write_text(out, "value_v.csv", &value_csv(&sol.v.field, g))?;
        write_text(out, "value_w.csv", &value_csv(&sol.w.field, g))?;
        write_text(out, "dual_v.csv", &dual_csv(&sol.dual_v, g))?;
        write_text(out, "dual_w.csv", &dual_csv(&sol.dual_w, g))?;
    }
    if cfg.output.json() {
        write_json(out, "value_v.json", &value_json(&sol.v.field, g))?;
        write_json(out, "value_w.json", &value_json(&sol.w.field, g))?;
        write_json(out, "dual_v.json", &dual_json(&sol.dual_v, g))?;
        write_json(out, "dual_w.json", &dual_json(&sol.dual_w, g))?;
    }
    write_json(out, "summary.json", &summary)?;
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeRow {
    pub level: usize,
    pub dx: f64,
    pub dt: f64,
    pub k: usize,
    /// `max |V - W|` over the certified region.
    pub gap_vw: f64,
    /// `sup |V_l - V_{l-1}|` on the certified coarse grid.
    pub diff_prev: Option<f64>,
    pub reference_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeTable {
    pub rows: Vec<ConvergeRow>,
    /// Mean `log2` ratio of successive differences.
    pub order_diff: Option<f64>,
    /// Mean `log2` ratio of successive reference errors.
    pub order_reference: Option<f64>,
    pub diffs_decreasing: bool,
    pub gaps_decreasing: bool,
    pub passed: bool,
    /// Set when a level failed; `rows` then holds the completed levels.
    pub truncated: Option<String>,
}

/// Index of coarse node `(k, x, p, q)` in the field of a level `l` finer.
fn embed(coarse: &PdeGrids<f64>, fine: &PdeGrids<f64>, l: usize, k: usize, x: usize, p: usize, q: usize) -> (usize, usize, usize, usize) {
    let f = 1usize << l;
    let idx: Vec<usize> = coarse.state.multi_index(x).into_iter().map(|i| i * f).collect();
    (
        k * f,
        fine.state.flat_index(&idx),
        coarse.p_grid.embed_in(&fine.p_grid, p).expect("nested simplex grids"),
        coarse.q_grid.embed_in(&fine.q_grid, q).expect("nested simplex grids"),
    )
}

fn mean_order(seq: &[f64]) -> Option<f64> {
    let ratios: Vec<f64> = seq.windows(2).filter(|w| w[0] > 0.0 && w[1] > 0.0).map(|w| (w[0] / w[1]).log2()).collect();
    (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64)
}

pub fn run_converge(cfg: &RunConfig, levels: usize, out: &Path) -> Result<ConvergeTable, RunError> {
    if levels < 2 {
        return Err(ConfigError { line: None, message: "converge needs at least 2 levels".into() }.into());
    }
    let base = cfg.grids(0).ctx("building grids")?;
    let mask = certified(cfg, &base);
    let mut rows = Vec::new();
    let mut prev: Option<(usize, Solution)> = None;
    let mut truncated = None;
    for level in 0..levels {
        let sol = match solve_level(cfg, level) {
            Ok(s) => s,
            Err(e) => {
                truncated = Some(format!("level {level}: {e}"));
                break;
            }
        };
        let g = &sol.grids;
        let fine_mask = certified(cfg, g);
        let in_mask = |k: usize, x: usize| fine_mask[k][x];
        let gap = check_value_agreement(&sol.v.field, &sol.w.field, 0.0, Some(&in_mask)).ctx("agreement")?.max_gap;
        let diff_prev = prev.as_ref().map(|(pl, ps)| {
            let (nt, nx, np, nq) = (base.time.knots().len(), base.state.len(), base.p_grid.len(), base.q_grid.len());
            let mut worst: f64 = 0.0;
            for k in 0..nt {
                for x in (0..nx).filter(|&x| mask[k][x]) {
                    for p in 0..np {
                        for q in 0..nq {
                            let a = embed(&base, g, level, k, x, p, q);
                            let b = embed(&base, &ps.grids, *pl, k, x, p, q);
                            worst = worst.max((sol.v.field.at(a.0, a.1, a.2, a.3) - ps.v.field.at(b.0, b.1, b.2, b.3)).abs());
                        }
                    }
                }
            }
            worst
        });
        rows.push(ConvergeRow {
            level,
            dx: g.state.min_spacing(),
            dt: g.time.mesh(),
            k: g.p_grid.resolution(),
            gap_vw: gap,
            diff_prev,
            reference_error: reference_error(cfg, g, &sol.v.field, &fine_mask),
        });
        prev = Some((level, sol));
    }
    let diffs: Vec<f64> = rows.iter().filter_map(|r| r.diff_prev).collect();
    let errs: Vec<f64> = rows.iter().filter_map(|r| r.reference_error).collect();
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap_vw).collect();
    let decreasing = |s: &[f64]| s.windows(2).all(|w| w[1] < w[0]);
    let diffs_decreasing = decreasing(&diffs);
    let table = ConvergeTable {
        order_diff: mean_order(&diffs),
        order_reference: mean_order(&errs),
        diffs_decreasing,
        gaps_decreasing: decreasing(&gaps),
        passed: truncated.is_none() && diffs_decreasing,
        truncated,
        rows,
    };
    let csv_rows: Vec<Vec<f64>> = table
        .rows
        .iter()
        .map(|r| {
            vec![r.level as f64, r.dx, r.dt, r.k as f64, r.gap_vw, r.diff_prev.unwrap_or(f64::NAN), r.reference_error.unwrap_or(f64::NAN)]
        })
        .collect();
    if cfg.output.csv() {
        write_text(out, "converge.csv", &table_csv(&["level", "dx", "dt", "k", "gap_vw", "diff_prev", "reference_error"], &csv_rows))?;
    }
    write_json(out, "converge.json", &table)?;
    Ok(table)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameReport {
    pub estimate: McEstimate,
    /// Exact expectation of the played profile over the control tree.
    pub profile_value: f64,
    /// Brute-force value of the partition game, when within the cap.
    pub partition_value: Option<f64>,
    /// Player 1's best pure-table reply to the played `beta`: what `beta` guarantees.
    pub best_reply_p1: Option<BestResponse>,
    /// Player 2's best pure-table reply to the played `alpha`.
    pub best_reply_p2: Option<BestResponse>,
    /// `V - guarantee(beta)`; at most the tolerance for a guaranteed maximizer strategy.
    pub maximizer_shortfall: Option<f64>,
    /// `guarantee(alpha) - V`; at most the tolerance for a guaranteed minimizer strategy.
    pub minimizer_excess: Option<f64>,
    pub pde_value: Option<f64>,
    pub notes: Vec<String>,
}

pub fn run_game(cfg: &RunConfig, strategy: Option<&Path>, n_samples: Option<usize>, out: &Path) -> Result<GameReport, RunError> {
    let play = cfg
        .play
        .as_ref()
        .ok_or_else(|| ConfigError { line: None, message: "the game subcommand needs a [play] section".into() })?;
    let nm = &cfg.numerics;
    let (part, start) = (&play.partition, play.start);
    let mut notes = Vec::new();
    let exact = match exact_partition_value(&cfg.game, part, start, &play.x, &play.p, &play.q, nm) {
        Ok(e) => Some(e),
        Err(e @ Error::TooLarge { .. }) => {
            notes.push(format!("no brute-force value: {e}"));
            None
        }
        Err(e) => return Err(e).ctx("brute-force value"),
    };
    let profile: StrategyProfile = match (strategy, &exact) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError { line: None, message: format!("cannot read {}: {e}", path.display()) })?;
            serde_json::from_str(&text).map_err(|e| ConfigError {
                line: Some(e.line()),
                message: format!("strategy file {}: {e}", path.display()),
            })?
        }
        (None, Some(e)) => e.behavior_profile().ctx("behavior conversion")?,
        (None, None) => {
            return Err(ConfigError { line: None, message: "no strategy file and no brute-force optimum to play".into() }.into())
        }
    };
    let mc = McConfig { n_samples: n_samples.unwrap_or(play.n_samples), seed: cfg.seed, types: play.types };
    let episodes = simulate(&cfg.game, &profile, part, start, &play.x, &play.p, &play.q, &mc, nm).ctx("Monte Carlo")?;
    let estimate = McEstimate::from_episodes(&episodes);
    debug_assert_eq!(estimate, payoff_mc(&cfg.game, &profile, part, start, &play.x, &play.p, &play.q, &mc, nm).unwrap());
    let profile_value = profile_payoff(&cfg.game, &profile, part, start, &play.x, &play.p, &play.q, nm).ctx("profile expectation")?;
    let reply = |r: asymgame::Result<BestResponse>, notes: &mut Vec<String>| match r {
        Ok(b) => Ok(Some(b)),
        Err(e @ Error::TooLarge { .. }) => {
            notes.push(format!("no best-reply search: {e}"));
            Ok(None)
        }
        Err(e) => Err(e).ctx("best reply"),
    };
    let br1 = reply(best_response_p1(&cfg.game, part, start, &play.x, &play.p, &play.q, &profile.beta, nm), &mut notes)?;
    let br2 = reply(best_response_p2(&cfg.game, part, start, &play.x, &play.p, &play.q, &profile.alpha, nm), &mut notes)?;
    let value = exact.as_ref().map(|e| e.value);
    let pde_value = if play.compare_pde {
        let sol = solve_level(cfg, 0)?;
        Some(pde_value_at(&sol, part.knots()[start], &play.x, &play.p, &play.q)?)
    } else {
        None
    };
    let report = GameReport {
        estimate,
        profile_value,
        partition_value: value,
        maximizer_shortfall: value.zip(br1.as_ref()).map(|(v, b)| v - b.value),
        minimizer_excess: value.zip(br2.as_ref()).map(|(v, b)| b.value - v),
        best_reply_p1: br1,
        best_reply_p2: br2,
        pde_value,
        notes,
    };
    write_json(out, "strategy.json", &profile)?;
    if cfg.output.csv() {
        let rows: Vec<Vec<f64>> = episodes
            .iter()
            .map(|e| {
                let idx = |v: Option<usize>| v.map_or(f64::NAN, |k| (k + 1) as f64);
                vec![e.episode as f64, idx(e.i), idx(e.j), e.payoff]
            })
            .collect();
        write_text(out, "episodes.csv", &table_csv(&["episode", "i", "j", "payoff"], &rows))?;
    }
    write_json(out, "game.json", &report)?;
    Ok(report)
}

/// `V(t, x, p, q)` from the V route: nearest knot, multilinear in `x`,
/// beliefs on the simplex grid.
fn pde_value_at(sol: &Solution, t: f64, x: &[f64], p: &[f64], q: &[f64]) -> Result<f64, RunError> {
    let g = &sol.grids;
    let k = (0..g.time.knots().len())
        .min_by(|&a, &b| (g.time.knots()[a] - t).abs().total_cmp(&(g.time.knots()[b] - t).abs()))
        .expect("non-empty partition");
    let node = |grid: &SimplexGrid, b: &[f64]| -> Result<usize, RunError> {
        let counts: Vec<usize> = b.iter().map(|&w| (w * grid.resolution() as f64).round() as usize).collect();
        grid.index_of(&counts)
            .filter(|&n| grid.point::<f64>(n).iter().zip(b).all(|(a, c)| (a - c).abs() < 1e-9))
            .ok_or_else(|| ConfigError { line: None, message: format!("PDE comparison needs beliefs on the K = {} grid, got {b:?}", grid.resolution()) }.into())
    };
    let (pn, qn) = (node(&g.p_grid, p)?, node(&g.q_grid, q)?);
    Ok(g.state.interpolate(&sol.v.field.state_slice(k, pn, qn), x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianRow {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub h: f64,
    pub h_star: f64,
    /// `min_nu max_mu f.xi` solved on the transposed game; equals `h_star`.
    pub h_star_transposed: f64,
    pub isaacs_gap: f64,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
    pub blown_gap: Option<f64>,
}

pub fn run_hamiltonian(cfg: &RunConfig, out: &Path) -> Result<Vec<HamiltonianRow>, RunError> {
    let probe = cfg
        .probe
        .as_ref()
        .ok_or_else(|| ConfigError { line: None, message: "the hamiltonian subcommand needs a [probe] section".into() })?;
    let tol = cfg.numerics.tol_game;
    let mut rows = Vec::new();
    for x in &probe.x {
        for xi in &probe.xi {
            let h = eval_h(&cfg.game, x, xi, tol).ctx("H")?;
            let hs = eval_h_star(&cfg.game, x, xi, tol).ctx("H*")?;
            let ht = eval_inf_sup_dual(&cfg.game, x, xi, tol).ctx("H* transposed")?;
            let blown_gap = match &cfg.scenario {
                Some((sc, _)) => Some(blown_hamiltonian_check(sc, x, xi, tol).ctx("blown Hamiltonian")?.gap),
                None => None,
            };
            rows.push(HamiltonianRow {
                x: x.clone(),
                xi: xi.clone(),
                h: h.value,
                h_star: hs.value,
                h_star_transposed: ht,
                isaacs_gap: h.isaacs_gap,
                mu: h.mu.weights().to_vec(),
                nu: h.nu.weights().to_vec(),
                blown_gap,
            });
        }
    }
    if cfg.output.csv() {
        let d = cfg.game.dim();
        let mut cols: Vec<String> = (1..=d).map(|a| format!("x{a}")).chain((1..=d).map(|a| format!("xi{a}"))).collect();
        cols.extend(["h", "h_star", "h_star_transposed", "isaacs_gap"].map(String::from));
        let csv_rows: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| r.x.iter().chain(&r.xi).copied().chain([r.h, r.h_star, r.h_star_transposed, r.isaacs_gap]).collect())
            .collect();
        let refs: Vec<&str> = cols.iter().map(String::as_str).collect();
        write_text(out, "hamiltonian.csv", &table_csv(&refs, &csv_rows))?;
    }
    write_json(out, "hamiltonian.json", &rows)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugateReport {
    /// Largest deviation of the grid conjugate of the terminal data from
    /// `max_i (p_hat_i - sum_j q_j g_ij(x))` over all dual nodes.
    pub closed_form_error: f64,
    /// Largest `|w** - w|` on the p-grid; bounded by the dual-box resolution.
    pub biconjugate_gap: f64,
    /// Largest `|(w**)** - w**|`; zero up to rounding.
    pub biconjugate_idempotence: f64,
    /// Smallest `w*(p_hat) - (<p, p_hat> - w(p))` over grid pairs; never negative.
    pub fenchel_young_min: f64,
    pub points: usize,
}

pub fn run_conjugate(cfg: &RunConfig, out: &Path) -> Result<ConjugateReport, RunError> {
    let probe = cfg
        .probe
        .as_ref()
        .ok_or_else(|| ConfigError { line: None, message: "the conjugate subcommand needs a [probe] section".into() })?;
    let grids = cfg.grids(0).ctx("building grids")?;
    let (ni, nj) = (cfg.game.types_p(), cfg.game.types_q());
    let qs: Vec<Vec<f64>> = if probe.q.is_empty() { vec![vec![1.0 / nj as f64; nj]] } else { probe.q.clone() };
    let mut report = ConjugateReport {
        closed_form_error: 0.0,
        biconjugate_gap: 0.0,
        biconjugate_idempotence: 0.0,
        fenchel_young_min: f64::INFINITY,
        points: 0,
    };
    let mut csv_rows = Vec::new();
    for x in &probe.x {
        for q in &qs {
            let w = SimplexFunction::from_fn(grids.p_grid.clone(), |p: &[f64]| cfg.game.bilinear_payoff(x, p, q)).ctx("terminal data")?;
            let conj = conjugate_on_box(&w, &grids.dual_p).ctx("conjugate")?;
            let bi = biconjugate_p(&w, &grids.dual_p).ctx("biconjugate")?;
            let bi2 = biconjugate_p(&bi, &grids.dual_p).ctx("biconjugate")?;
            for (k, &c) in conj.iter().enumerate() {
                let y = grids.dual_p.point(k);
                let closed = (0..ni)
                    .map(|i| y[i] - (0..nj).map(|j| q[j] * cfg.game.payoff(i, j, x)).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max);
                report.closed_form_error = report.closed_form_error.max((c - closed).abs());
                for pk in 0..grids.p_grid.len() {
                    let p = grids.p_grid.point::<f64>(pk);
                    // Computed form: the conjugate maximizes exactly this difference.
                    let fy = c - (p.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() - w.at(pk));
                    report.fenchel_young_min = report.fenchel_young_min.min(fy);
                }
                csv_rows.push(x.iter().chain(q).chain(&y).copied().chain([c, closed]).collect::<Vec<f64>>());
            }
            for pk in 0..grids.p_grid.len() {
                report.biconjugate_gap = report.biconjugate_gap.max((bi.at(pk) - w.at(pk)).abs());
                report.biconjugate_idempotence = report.biconjugate_idempotence.max((bi2.at(pk) - bi.at(pk)).abs());
            }
            report.points += 1;
        }
    }
    if cfg.output.csv() {
        let mut cols: Vec<String> = (1..=cfg.game.dim()).map(|a| format!("x{a}")).collect();
        cols.extend((1..=nj).map(|j| format!("q{j}")));
        cols.extend((1..=ni).map(|i| format!("phat{i}")));
        cols.extend(["conjugate", "closed_form"].map(String::from));
        let refs: Vec<&str> = cols.iter().map(String::as_str).collect();
        write_text(out, "conjugate.csv", &table_csv(&refs, &csv_rows))?;
    }
    write_json(out, "conjugate.json", &report)?;
    Ok(report)
}

/// Output directory: the flag wins over the config.
pub fn out_dir(cfg: &RunConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.unwrap_or_else(|| cfg.output.dir.clone())
}
