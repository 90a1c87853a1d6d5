//! TOML run configuration.
//!
//! ```toml
//! [game]
//! dim = 1
//! horizon = 1.0
//! u_controls = [[-1.0], [1.0]]
//! v_controls = [[-1.0], [1.0]]
//! dynamics = ["u1 * v1"]          # one expression per state coordinate
//! payoffs = [["x1"], ["-x1"]]     # I x J expressions in x1..xd
//!
//! [numerics]
//! box = [[-2.0, 2.0]]             # [lo, hi] per axis
//! dx = 0.05                       # or nodes = [81]
//! k = 8                           # belief simplex resolution
//! ```
//!
//! A `[game.scenario]` table replaces `dynamics` and `payoffs` by per-type
//! tables and initial states; the game is then blown up to `d I J`
//! coordinates. Optional sections: `[output]`, `[play]`, `[probe]`,
//! `[reference]`. Every error carries the line of the offending key.

use std::fmt;
use std::ops::Range;
use std::path::PathBuf;
use std::sync::Arc;

use asymgame::blowup::{blow_up, BlownUp, ScenarioSpec};
use asymgame::discrete::TypeAveraging;
use asymgame::fenchel::DualBox;
use asymgame::hji::{cfl_bound, PdeGrids};
use asymgame::model::{payoff, ControlSet, GameSpec, Payoff, StateGrid, TimePartition, VectorField};
use asymgame::numerics::NumericsConfig;
use serde::Deserialize;
use toml::Spanned;

use crate::expr::{Env, Expr};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    game: RawGame,
    numerics: Spanned<RawNumerics>,
    #[serde(default)]
    output: RawOutput,
    play: Option<Spanned<RawPlay>>,
    probe: Option<Spanned<RawProbe>>,
    reference: Option<RawReference>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGame {
    dim: Spanned<usize>,
    horizon: Spanned<f64>,
    u_controls: Spanned<Vec<Vec<f64>>>,
    v_controls: Spanned<Vec<Vec<f64>>>,
    dynamics: Option<Spanned<Vec<Spanned<String>>>>,
    payoffs: Option<Spanned<Vec<Vec<Spanned<String>>>>>,
    scenario: Option<Spanned<RawScenario>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    /// `I x J` tables of `d` expressions.
    dynamics: Spanned<Vec<Vec<Vec<Spanned<String>>>>>,
    initial: Spanned<Vec<Vec<Vec<f64>>>>,
    payoffs: Spanned<Vec<Vec<Spanned<String>>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNumerics {
    #[serde(rename = "box")]
    bbox: Spanned<Vec<[f64; 2]>>,
    dx: Option<Spanned<f64>>,
    nodes: Option<Spanned<Vec<usize>>>,
    steps: Option<Spanned<usize>>,
    knots: Option<Spanned<Vec<f64>>>,
    #[serde(default = "default_k")]
    k: Spanned<usize>,
    dual_radius: Option<f64>,
    dual_nodes: Option<usize>,
    sigma_margin: Option<f64>,
    tol_game: Option<f64>,
    tol_cvx: Option<f64>,
    h_ode: Option<f64>,
    brute_force_cap: Option<usize>,
    pde_dim_cap: Option<usize>,
    #[serde(default)]
    seed: u64,
}

fn default_k() -> Spanned<usize> {
    Spanned::new(0..0, 8)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(default = "default_dir")]
    dir: PathBuf,
    #[serde(default = "default_formats")]
    formats: Vec<Spanned<String>>,
}

impl Default for RawOutput {
    fn default() -> Self {
        Self { dir: default_dir(), formats: default_formats() }
    }
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Spanned<String>> {
    vec![Spanned::new(0..0, "csv".into()), Spanned::new(0..0, "json".into())]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlay {
    steps: Option<usize>,
    knots: Option<Vec<f64>>,
    #[serde(default)]
    start: usize,
    x: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    #[serde(default = "default_samples")]
    n_samples: usize,
    #[serde(default)]
    types: TypeAveraging,
    #[serde(default)]
    compare_pde: bool,
}

fn default_samples() -> usize {
    10_000
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProbe {
    x: Vec<Vec<f64>>,
    xi: Vec<Vec<f64>>,
    #[serde(default)]
    q: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReference {
    value: Spanned<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
}

impl OutputConfig {
    pub fn csv(&self) -> bool {
        self.formats.contains(&Format::Csv)
    }

    pub fn json(&self) -> bool {
        self.formats.contains(&Format::Json)
    }
}

#[derive(Debug, Clone)]
pub struct PlayConfig {
    pub partition: TimePartition<f64>,
    pub start: usize,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub n_samples: usize,
    pub types: TypeAveraging,
    pub compare_pde: bool,
}

#[derive(Debug, Clone)]
pub struct ProbeConfig {
    pub x: Vec<Vec<f64>>,
    pub xi: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// The game the pipeline runs on (the blown-up game for scenario configs).
    pub game: GameSpec<f64>,
    pub scenario: Option<(ScenarioSpec<f64>, BlownUp<f64>)>,
    pub state: StateGrid<f64>,
    pub time: TimePartition<f64>,
    pub k: usize,
    pub dual_radius: Option<f64>,
    pub dual_nodes: Option<usize>,
    pub numerics: NumericsConfig<f64>,
    pub seed: u64,
    pub output: OutputConfig,
    pub play: Option<PlayConfig>,
    pub probe: Option<ProbeConfig>,
    pub reference: Option<Expr>,
    pub f_max: f64,
}

struct Src<'a>(&'a str);

impl Src<'_> {
    fn line(&self, span: Range<usize>) -> Option<usize> {
        if span.start == 0 && span.end == 0 {
            return None;
        }
        Some(self.0[..span.start.min(self.0.len())].bytes().filter(|&b| b == b'\n').count() + 1)
    }

    fn err<T>(&self, span: Range<usize>, message: impl Into<String>) -> Result<T, ConfigError> {
        Err(ConfigError { line: self.line(span), message: message.into() })
    }
}

/// Expression checked against the variable counts it may use.
fn compile(src: &Src, s: &Spanned<String>, what: &str, dims: (usize, usize, usize)) -> Result<Expr, ConfigError> {
    let e = Expr::parse(s.get_ref()).map_err(|e| ConfigError {
        line: src.line(s.span()),
        message: format!("{what}: {e} in '{}'", s.get_ref()),
    })?;
    let (x, u, v) = e.max_indices();
    if x > dims.0 || u > dims.1 || v > dims.2 {
        return src.err(
            s.span(),
            format!("{what}: '{}' uses x{x}/u{u}/v{v}, available x1..x{}, u1..u{}, v1..v{}", s.get_ref(), dims.0, dims.1, dims.2),
        );
    }
    if e.uses_time() {
        return src.err(s.span(), format!("{what}: the game is autonomous, 't' is not allowed"));
    }
    Ok(e)
}

fn dynamics_field(exprs: Vec<Expr>) -> VectorField<f64> {
    Arc::new(move |x: &[f64], u: &[f64], v: &[f64], out: &mut [f64]| {
        let env = Env { t: 0.0, x, u, v };
        for (o, e) in out.iter_mut().zip(&exprs) {
            *o = e.eval(&env);
        }
    })
}

fn payoff_fn(e: Expr) -> Payoff<f64> {
    payoff(move |x: &[f64]| e.eval(&Env { t: 0.0, x, u: &[], v: &[] }))
}

fn payoff_table(src: &Src, table: &Spanned<Vec<Vec<Spanned<String>>>>, d: usize) -> Result<Vec<Vec<Payoff<f64>>>, ConfigError> {
    let rows = table.get_ref();
    if rows.is_empty() || rows[0].is_empty() || rows.iter().any(|r| r.len() != rows[0].len()) {
        return src.err(table.span(), "payoffs must be a non-empty I x J table");
    }
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, s)| compile(src, s, &format!("payoff g{}{}", i + 1, j + 1), (d, 0, 0)).map(payoff_fn))
                .collect()
        })
        .collect()
}

fn controls(src: &Src, pts: &Spanned<Vec<Vec<f64>>>, name: &str) -> Result<ControlSet<f64>, ConfigError> {
    ControlSet::from_points(pts.get_ref().clone()).or_else(|e| src.err(pts.span(), format!("{name}: {e}")))
}

fn state_grid(src: &Src, n: &RawNumerics, d: usize) -> Result<StateGrid<f64>, ConfigError> {
    let bbox = n.bbox.get_ref();
    if bbox.len() != d {
        return src.err(n.bbox.span(), format!("box needs {d} [lo, hi] pairs, got {}", bbox.len()));
    }
    let nodes = match (&n.dx, &n.nodes) {
        (Some(dx), None) => {
            let h = *dx.get_ref();
            if !(h > 0.0) {
                return src.err(dx.span(), "dx must be positive");
            }
            let mut out = Vec::with_capacity(d);
            for &[lo, hi] in bbox {
                let cells = ((hi - lo) / h).round();
                if cells < 1.0 || ((hi - lo) - cells * h).abs() > 1e-9 * (hi - lo) {
                    return src.err(dx.span(), format!("dx = {h} does not divide the box side [{lo}, {hi}]"));
                }
                out.push(cells as usize + 1);
            }
            out
        }
        (None, Some(nodes)) => {
            if nodes.get_ref().len() != d {
                return src.err(nodes.span(), format!("nodes needs {d} entries"));
            }
            nodes.get_ref().clone()
        }
        _ => return src.err(n.bbox.span(), "give exactly one of dx or nodes"),
    };
    let lo = bbox.iter().map(|b| b[0]).collect();
    let hi = bbox.iter().map(|b| b[1]).collect();
    StateGrid::new(lo, hi, nodes).or_else(|e| src.err(n.bbox.span(), e.to_string()))
}

fn partition(steps: Option<usize>, knots: Option<Vec<f64>>, horizon: f64, default_steps: usize) -> asymgame::Result<TimePartition<f64>> {
    match (steps, knots) {
        (_, Some(k)) => TimePartition::new(k),
        (Some(s), None) => TimePartition::uniform(horizon, s),
        (None, None) => TimePartition::uniform(horizon, default_steps),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let src = Src(text);
        let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError {
            line: e.span().and_then(|s| src.line(s.start..s.start + 1)),
            message: e.message().to_string(),
        })?;
        let g = &raw.game;
        let d = *g.dim.get_ref();
        let horizon = *g.horizon.get_ref();
        let u = controls(&src, &g.u_controls, "u_controls")?;
        let v = controls(&src, &g.v_controls, "v_controls")?;
        let cdims = (u.coords(), v.coords());

        let (game, scenario) = match (&g.scenario, &g.dynamics, &g.payoffs) {
            (None, Some(dyn_exprs), Some(pay)) => {
                if dyn_exprs.get_ref().len() != d {
                    return src.err(dyn_exprs.span(), format!("dynamics needs {d} expressions"));
                }
                let exprs = dyn_exprs
                    .get_ref()
                    .iter()
                    .enumerate()
                    .map(|(a, s)| compile(&src, s, &format!("dynamics f{}", a + 1), (d, cdims.0, cdims.1)))
                    .collect::<Result<Vec<_>, _>>()?;
                let payoffs = payoff_table(&src, pay, d)?;
                let spec = GameSpec::new(d, horizon, u, v, dynamics_field(exprs), payoffs)
                    .or_else(|e| src.err(g.horizon.span(), e.to_string()))?;
                (spec, None)
            }
            (Some(sc), None, None) => {
                let sc_raw = sc.get_ref();
                let payoffs = payoff_table(&src, &sc_raw.payoffs, d)?;
                let (ni, nj) = (payoffs.len(), payoffs[0].len());
                let table = sc_raw.dynamics.get_ref();
                if table.len() != ni || table.iter().any(|r| r.len() != nj) {
                    return src.err(sc_raw.dynamics.span(), format!("scenario dynamics must be {ni} x {nj}"));
                }
                let mut fields = Vec::with_capacity(ni);
                for (i, row) in table.iter().enumerate() {
                    let mut out = Vec::with_capacity(nj);
                    for (j, exprs) in row.iter().enumerate() {
                        if exprs.len() != d {
                            return src.err(sc_raw.dynamics.span(), format!("scenario ({}, {}) needs {d} expressions", i + 1, j + 1));
                        }
                        let compiled = exprs
                            .iter()
                            .enumerate()
                            .map(|(a, s)| compile(&src, s, &format!("scenario f{}{} component {}", i + 1, j + 1, a + 1), (d, cdims.0, cdims.1)))
                            .collect::<Result<Vec<_>, _>>()?;
                        out.push(dynamics_field(compiled));
                    }
                    fields.push(out);
                }
                let spec = ScenarioSpec::new(d, horizon, u, v, fields, sc_raw.initial.get_ref().clone(), payoffs)
                    .or_else(|e| src.err(sc.span(), e.to_string()))?;
                let blown = blow_up(&spec, usize::MAX).or_else(|e| src.err(sc.span(), e.to_string()))?;
                (blown.spec.clone(), Some((spec, blown)))
            }
            _ => return src.err(g.dim.span(), "give either dynamics and payoffs, or a [game.scenario] table"),
        };

        let nraw = raw.numerics.get_ref();
        let defaults = NumericsConfig::<f64>::default();
        let numerics = NumericsConfig {
            h_ode: nraw.h_ode,
            tol_game: nraw.tol_game.unwrap_or(defaults.tol_game),
            sigma_margin: nraw.sigma_margin.unwrap_or(defaults.sigma_margin),
            tol_cvx: nraw.tol_cvx.unwrap_or(defaults.tol_cvx),
            brute_force_cap: nraw.brute_force_cap.unwrap_or(defaults.brute_force_cap),
            pde_dim_cap: nraw.pde_dim_cap.unwrap_or(defaults.pde_dim_cap),
            ..defaults
        };
        let state = state_grid(&src, nraw, game.dim())?;
        let f_max = game.f_max(&state).or_else(|e| src.err(raw.numerics.span(), e.to_string()))?;
        let sigma = numerics.sigma_margin * f_max;
        let bound = cfl_bound(&state, sigma);
        let default_steps = if bound.is_finite() { (horizon / bound).ceil().max(1.0) as usize } else { 1 };
        let time_span = nraw.steps.as_ref().map(|s| s.span()).or(nraw.knots.as_ref().map(|k| k.span())).unwrap_or(0..0);
        let time = partition(nraw.steps.as_ref().map(|s| *s.get_ref()), nraw.knots.as_ref().map(|k| k.get_ref().clone()), horizon, default_steps)
            .or_else(|e| src.err(time_span.clone(), e.to_string()))?;
        if (time.horizon() - horizon).abs() > 1e-12 * horizon.max(1.0) {
            return src.err(time_span, format!("partition ends at {}, horizon is {horizon}", time.horizon()));
        }
        let worst = time.mesh();
        if worst > bound * (1.0 + 1e-9) {
            return src.err(
                time_span,
                format!("CFL precheck failed: time step {worst:.6e} exceeds dx / (2 sigma d) = {bound:.6e}"),
            );
        }
        // The certified region must be non-empty at t = 0.
        let margin = f_max * horizon;
        if !(0..state.len()).any(|n| state.inside_deflated(&state.point(n), margin)) {
            return src.err(
                nraw.bbox.span(),
                format!("box too small: deflating by F_max T = {margin:.4} leaves no certified node"),
            );
        }
        let k = *nraw.k.get_ref();
        if k == 0 {
            return src.err(nraw.k.span(), "k must be at least 1");
        }

        let mut formats = Vec::new();
        for f in &raw.output.formats {
            match f.get_ref().as_str() {
                "csv" => formats.push(Format::Csv),
                "json" => formats.push(Format::Json),
                other => return src.err(f.span(), format!("unknown output format '{other}' (csv, json)")),
            }
        }
        let output = OutputConfig { dir: raw.output.dir.clone(), formats };

        let play = match &raw.play {
            None => None,
            Some(sp) => {
                let p = sp.get_ref();
                let part = partition(p.steps, p.knots.clone(), horizon, 1).or_else(|e| src.err(sp.span(), e.to_string()))?;
                if (part.horizon() - horizon).abs() > 1e-12 * horizon.max(1.0) {
                    return src.err(sp.span(), "play partition must end at the horizon");
                }
                let x = match &scenario {
                    Some((_, b)) if p.x.is_empty() => b.x0.clone(),
                    _ => p.x.clone(),
                };
                for (name, len, want) in [("x", x.len(), game.dim()), ("p", p.p.len(), game.types_p()), ("q", p.q.len(), game.types_q())] {
                    if len != want {
                        return src.err(sp.span(), format!("play.{name} needs {want} entries, got {len}"));
                    }
                }
                for (name, b) in [("p", &p.p), ("q", &p.q)] {
                    if b.iter().any(|&w| w < 0.0) || (b.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                        return src.err(sp.span(), format!("play.{name} must be a probability vector"));
                    }
                }
                if p.start >= part.steps() {
                    return src.err(sp.span(), format!("play.start must be below {}", part.steps()));
                }
                Some(PlayConfig {
                    partition: part,
                    start: p.start,
                    x,
                    p: p.p.clone(),
                    q: p.q.clone(),
                    n_samples: p.n_samples.max(1),
                    types: p.types,
                    compare_pde: p.compare_pde,
                })
            }
        };

        let probe = match &raw.probe {
            None => None,
            Some(sp) => {
                let p = sp.get_ref();
                if p.x.iter().chain(&p.xi).any(|v| v.len() != game.dim()) {
                    return src.err(sp.span(), format!("probe points need {} coordinates", game.dim()));
                }
                if p.q.iter().any(|v| v.len() != game.types_q()) {
                    return src.err(sp.span(), format!("probe beliefs q need {} entries", game.types_q()));
                }
                Some(ProbeConfig { x: p.x.clone(), xi: p.xi.clone(), q: p.q.clone() })
            }
        };

        let reference = match &raw.reference {
            None => None,
            Some(r) => {
                let e = Expr::parse(r.value.get_ref()).map_err(|e| ConfigError {
                    line: src.line(r.value.span()),
                    message: format!("reference: {e}"),
                })?;
                if e.max_indices().0 > game.dim() || e.uses_controls() {
                    return src.err(r.value.span(), "reference may use t and x1..xd only");
                }
                Some(e)
            }
        };

        Ok(Self {
            game,
            scenario,
            state,
            time,
            k,
            dual_radius: nraw.dual_radius,
            dual_nodes: nraw.dual_nodes,
            numerics,
            seed: nraw.seed,
            output,
            play,
            probe,
            reference,
            f_max,
        })
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError { line: None, message: format!("cannot read {}: {e}", path.display()) })?;
        Self::parse(&text)
    }

    /// Grids at refinement `level`: `dx`, `dt` and `1/K` halved per level.
    pub fn grids(&self, level: usize) -> asymgame::Result<PdeGrids<f64>> {
        let mut state = self.state.clone();
        let mut time = self.time.clone();
        for _ in 0..level {
            state = state.refined();
            time = time.refined();
        }
        let k = self.k << level;
        let g_max = self.game.g_max(&state)?;
        let (ni, nj) = (self.game.types_p(), self.game.types_q());
        let make = |dim: usize| match (self.dual_radius, self.dual_nodes) {
            (None, None) => DualBox::default_for(dim, g_max, k),
            (r, n) => {
                let nodes = n.map_or(2 * k.div_ceil(2) + 1, |n| ((n - 1) << level) + 1);
                DualBox::new(dim, r.unwrap_or(g_max + 1.0), nodes)
            }
        };
        PdeGrids::new(
            state,
            time,
            asymgame::model::SimplexGrid::new(ni, k)?,
            asymgame::model::SimplexGrid::new(nj, k)?,
            make(ni)?,
            make(nj)?,
        )
    }
}
