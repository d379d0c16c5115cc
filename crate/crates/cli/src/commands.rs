//! One function per subcommand, each returning report sections.

use std::path::{Path, PathBuf};

use cpdual_core::crossed::{
    build_graded_truncation, build_nsharpd, ext_index_pairing, nsharpd_boundedness, rotation_delta_components, CrossedError, Word,
};
use cpdual_core::duality::{
    build_ladder, check_ladder_commutes, check_ladder_exact, dual_k_data, pd_report, random_ladder_batch, solve_theta, DualChoice,
};
use cpdual_core::exact::FgAbGroup;
use cpdual_core::exec;
use cpdual_core::fock::{
    build_fock_rep, build_kp_projection, build_w_ew, commutator_decay, conjugate_gram_equality, fredholm_index_compressed,
    homotopy_pt_check, FockError, KpConfig, DEFAULT_BASIS_CAP,
};
use cpdual_core::graph::{Graph, GraphError};
use cpdual_core::pimsner::{cp_k_homology, cp_k_theory, k_theory_by_minors, PimsnerError};
use cpdual_core::watatani::{assumption_one_check, super_strong_check, PathWeights, WatataniError};
use num_bigint::BigInt;
use serde::Serialize;
use serde_json::json;

use crate::config::{ConfigError, RunConfig};
use crate::report::{CheckLine, FixtureInfo, Report, Section};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read `{path}`: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("graph `{path}`: {source}")]
    Graph { path: String, source: GraphError },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Pimsner(#[from] PimsnerError),
    #[error(transparent)]
    Watatani(#[from] WatataniError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error(transparent)]
    Crossed(#[from] CrossedError),
}

/// A parsed graph with the name and hash of its file.
pub struct GraphInput {
    pub info: FixtureInfo,
    pub graph: Graph,
}

pub fn load_graph(path: &Path) -> Result<GraphInput, CliError> {
    let shown = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| CliError::Io { path: shown.clone(), source })?;
    let text = String::from_utf8_lossy(&bytes);
    let graph = Graph::from_json_str(&text).map_err(|source| CliError::Graph { path: shown.clone(), source })?;
    let name = path.file_stem().map_or(shown.clone(), |s| s.to_string_lossy().into_owned());
    Ok(GraphInput { info: FixtureInfo::new(&name, &shown, &bytes), graph })
}

/// Graph files in a directory, sorted by name.
pub fn corpus(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let err = |source| CliError::Io { path: dir.display().to_string(), source };
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(err)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    out.sort();
    Ok(out)
}

#[derive(Serialize)]
struct GroupRow {
    algebra: String,
    #[serde(rename = "K0")]
    k0: String,
    #[serde(rename = "K1")]
    k1: String,
}

fn row(algebra: &str, k0: &FgAbGroup, k1: &FgAbGroup) -> GroupRow {
    GroupRow { algebra: algebra.into(), k0: k0.to_string(), k1: k1.to_string() }
}

pub fn kgroups(input: &GraphInput) -> Result<Vec<Section>, CliError> {
    let g = &input.graph;
    let name = input.info.name.as_str();
    let mut s = Section::new("K-groups", Some(name));
    let k = cp_k_theory(g)?;
    let h = cp_k_homology(g)?;
    let mut groups = vec![row("O_E", &k.k0, &k.k1)];
    let mut notes = Vec::new();
    match cp_k_theory(&g.opposite()) {
        Ok(op) => groups.push(row("O_{E^op}", &op.k0, &op.k1)),
        Err(e) => notes.push(format!("O_{{E^op}}: {e}")),
    }
    match dual_k_data(g, DualChoice::EbarOp) {
        Ok(d) => groups.push(row("(O_E)^op", &d.data.k0, &d.data.k1)),
        Err(e) => notes.push(format!("(O_E)^op: {e}")),
    }
    let (free, torsion, k1_rank) = k_theory_by_minors(g);
    s.checks.push(CheckLine::new("six-term sequence exact", k.exactness().iter().all(|(_, ok)| *ok)));
    s.checks.push(CheckLine::new(
        "Smith form agrees with determinantal divisors",
        k.k0.free_rank() == free && k.k0.torsion() == torsion && k.k1.free_rank() == k1_rank,
    ));
    s.checks.push(CheckLine::new("K^0 torsion-free", h.k_even.is_torsion_free()));
    s.checks.push(CheckLine::new("rank K^0 = rank K_1", h.k_even.free_rank() == k.k1.free_rank()));
    s.put("k_theory", groups);
    s.put("k_homology", vec![json!({"algebra": "O_E", "K^0": h.k_even.to_string(), "K^1": h.k_odd.to_string()})]);
    s.put("presentation", json!({"I - A^T": k.presentation.to_string(), "I - A": h.presentation.to_string()}));
    if !notes.is_empty() {
        s.put("notes", notes);
    }
    Ok(vec![s])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum DualFilter {
    Eop,
    Ebarop,
    Both,
}

impl DualFilter {
    fn admits(self, c: DualChoice) -> bool {
        matches!((self, c), (DualFilter::Both, _) | (DualFilter::Eop, DualChoice::Eop) | (DualFilter::Ebarop, DualChoice::EbarOp))
    }
}

pub fn duality(input: &GraphInput, cfg: &RunConfig, filter: DualFilter, perturb_rung: bool) -> Result<Vec<Section>, CliError> {
    let g = &input.graph;
    let name = input.info.name.as_str();
    let a = &cfg.asymptotics;
    let pd = pd_report(g, a.k_max, a.n_max, cfg.tolerances.float, cfg.execution)?;
    let mut s = Section::new("Duality", Some(name));
    for c in pd.checks() {
        let wanted = [DualChoice::Eop, DualChoice::EbarOp].iter().all(|&d| filter.admits(d) || !c.name.starts_with(&format!("{d:?} ")));
        if wanted {
            s.checks.push(CheckLine::new(c.name, c.ok));
        }
    }
    let duals: Vec<_> = pd.duals.iter().filter(|d| filter.admits(d.choice)).collect();
    s.put("duals", &duals);
    s.put("k_theory", &pd.k_theory);
    s.put("k_homology", &pd.k_homology);
    s.put("cap_products", &pd.cap_products);
    s.put("delta_ev", &pd.delta_ev);
    s.put("super_strong", &pd.super_strong);
    let mut out = vec![s];
    if perturb_rung {
        let mut p = Section::new("Duality with a perturbed rung", Some(name));
        for c in [DualChoice::Eop, DualChoice::EbarOp].into_iter().filter(|&c| filter.admits(c)) {
            let mut l = build_ladder(g, c)?;
            let v = l.khom.presentation.get(0, 0) + BigInt::from(1);
            l.khom.presentation.set(0, 0, v);
            for chk in check_ladder_commutes(&l).into_iter().chain(check_ladder_exact(&l)) {
                p.checks.push(CheckLine::new(format!("{c:?} {}", chk.name), chk.ok));
            }
            let certified = solve_theta(&l).map(|t| t.certified).unwrap_or(false);
            p.checks.push(CheckLine::new(format!("{c:?} theta certified"), certified));
        }
        out.push(p);
    }
    Ok(out)
}

pub fn assumptions(input: &GraphInput, cfg: &RunConfig) -> Result<Vec<Section>, CliError> {
    let g = &input.graph;
    let a = &cfg.asymptotics;
    let mut s = Section::new("Assumptions", Some(&input.info.name));
    let one = assumption_one_check(g, a.k_max, a.n_max, cfg.execution)?;
    let ss = super_strong_check(g, a.k_max, a.n_max, cfg.tolerances.float, cfg.execution)?;
    let weights = PathWeights::new(g, 1, a.n_max, cfg.execution)?;
    let level_one = (0..g.vertex_count())
        .map(|v| {
            let sum: f64 = (0..g.edge_count()).filter(|&e| g.edge(e).range == v).map(|e| weights.omega(&g.edge_path(e))).sum();
            (sum - 1.0).abs()
        })
        .fold(0.0, f64::max);
    s.checks.push(CheckLine::new("Assumption 1 holds", one.holds));
    s.checks.push(CheckLine::below("level-one weights sum to 1", level_one, cfg.tolerances.float));
    let perron_gap = weights.all().filter_map(|q| q.perron.map(|p| (p - q.coefficient).abs())).reduce(f64::max);
    if let Some(gap) = perron_gap {
        s.checks.push(CheckLine::below("Perron closed form matches exact limits", gap, cfg.tolerances.float));
    }
    let rows: Vec<_> = one
        .levels
        .iter()
        .flat_map(|l| l.elements.iter().map(move |e| json!({"k": l.k, "path": e.path, "coefficient": e.coefficient, "convergence": e.convergence})))
        .collect();
    let verdicts: Vec<_> = one
        .levels
        .iter()
        .map(|l| {
            let c = ss.constants.as_ref().map(|c| c[l.k - 1].clone());
            json!({"k": l.k, "assumption_one": l.holds, "min_poly_exponent": l.min_poly_exponent, "super_strong_constants": c})
        })
        .collect();
    s.put("per_level", verdicts);
    s.put("frame_elements", rows);
    s.put(
        "verdicts",
        json!({
            "assumption_one": one.holds,
            "min_poly_exponent": one.min_poly_exponent,
            "super_strong": ss.holds,
            "witness": ss.witness,
        }),
    );
    Ok(vec![s])
}

const T_SAMPLES: [f64; 5] = [0.0, 0.5, 1.0, 2.0, 10.0];

fn l_values(level: usize) -> Vec<usize> {
    let top = level - 2;
    let mut out: Vec<usize> = std::iter::successors(Some(1usize), |x| Some(x * 2)).take_while(|&x| x <= top).collect();
    if out.last() != Some(&top) {
        out.push(top);
    }
    out
}

pub fn fock_verify(input: &GraphInput, cfg: &RunConfig) -> Result<Vec<Section>, CliError> {
    let g = &input.graph;
    let name = input.info.name.as_str();
    let tol = cfg.tolerances.float;
    let level = cfg.truncation.fock_level;
    let kcfg = KpConfig { n_max: cfg.asymptotics.n_max.max(16), exec: cfg.execution, ..KpConfig::default() };

    let mut rep_s = Section::new("Fock representation", Some(name));
    let rep = build_fock_rep(g, level, DEFAULT_BASIS_CAP)?;
    let ck = rep.ck_residuals();
    rep_s.checks.push(CheckLine::below("Cuntz-Krieger relations on interior", ck.max(), cfg.tolerances.exact));
    let frame = build_w_ew(&rep, &T_SAMPLES);
    rep_s.checks.push(CheckLine::below("frame column isometry", frame.isometry_residual, tol));
    rep_s.checks.push(CheckLine::below("frame column range", frame.range_residual, tol));
    let ew = frame.projection.iter().map(|r| r.residual).fold(0.0, f64::max);
    rep_s.checks.push(CheckLine::below("e_w(t) projection residual", ew, tol));
    rep_s.checks.push(CheckLine::new("e_w(t) symbolic identity", frame.symbolic_identity));
    let fred = fredholm_index_compressed(g, level, DEFAULT_BASIS_CAP)?;
    rep_s.checks.push(CheckLine::new("index stable at L and L+2", fred.stable));
    rep_s.checks.push(CheckLine::new("index is 1 in absolute value at every vertex", fred.counts.iter().all(|c| c.per_vertex.iter().all(|i| i.abs() == 1))));
    rep_s.put("dimensions", json!({"level": level, "dim": rep.dim()}));
    rep_s.put("ck_residuals", ck);
    rep_s.put("frame", &frame);
    rep_s.put("fredholm", &fred);

    let mut kp_s = Section::new("Kasparov module", Some(name));
    let mut kp_level = cfg.truncation.kp_level.min(level);
    let kp = loop {
        match build_kp_projection(g, kp_level, DualChoice::Eop, kcfg) {
            Err(FockError::BasisTooLarge { .. }) if kp_level > 2 => kp_level -= 1,
            other => break other?,
        }
    };
    let r = kp.report();
    kp_s.checks.push(CheckLine::below("V*V - 1", r.isometry_defect, tol));
    kp_s.checks.push(CheckLine::below("P^2 - P", r.projection_residual, tol));
    kp_s.checks.push(CheckLine::below("(2P-1)^2 - 1", r.symmetry_residual, tol));
    if let Some(d) = r.adjoint_formula_deviation {
        kp_s.checks.push(CheckLine::below("adjoint formula against Gram matrix", d, tol));
    }
    let pt = homotopy_pt_check(g, kp_level, &T_SAMPLES, kcfg)?;
    let worst = pt.iter().map(|x| x.residual).fold(0.0, f64::max);
    kp_s.checks.push(CheckLine::below("P_t^2 - P_t", worst, tol));
    let gram = conjugate_gram_equality(g, 3, cfg.asymptotics.n_max.max(16), cfg.execution)?;
    kp_s.checks.push(CheckLine::below("conjugate Gram deviation", gram.max_deviation, tol));
    kp_s.put("eop", &r);
    kp_s.put("homotopy", &pt);
    kp_s.put("conjugate_gram", &gram);
    match build_kp_projection(g, kp_level, DualChoice::EbarOp, kcfg) {
        Ok(p) => {
            let rb = p.report();
            kp_s.checks.push(CheckLine::below("conjugate variant V*V - 1", rb.isometry_defect, tol));
            kp_s.checks.push(CheckLine::below("conjugate variant P^2 - P", rb.projection_residual, tol));
            kp_s.put("ebarop", &rb);
        }
        Err(FockError::SuperStrongFails(w)) => kp_s.put("ebarop", json!({"rejected": "super-strong condition fails", "witness": w})),
        Err(e) => return Err(e.into()),
    }

    let mut dec_s = Section::new("Commutator decay", Some(name));
    let decay = commutator_decay(g, 0, &l_values(level), level, cfg.asymptotics.n_max.max(16), cfg.execution)?;
    let decreasing = decay.rows.windows(2).all(|w| w[1].norm < w[0].norm);
    dec_s.checks.push(CheckLine::new("tail norms decrease", decreasing));
    dec_s.put("edge", &decay.edge);
    dec_s.put("rows", &decay.rows);
    dec_s.put("kp_level", kp_level);
    Ok(vec![rep_s, kp_s, dec_s])
}

pub fn index(cfg: &RunConfig, word: &str) -> Result<Vec<Section>, CliError> {
    let tol = cfg.tolerances.float;
    let theta = cfg.theta()?;
    let w = Word::parse(word)?;
    let tr = &cfg.truncation;
    let t = build_graded_truncation(tr.window, tr.modes, theta)?;
    let mut s = Section::new(format!("Index pairing of {w}"), None);
    let checks = t.checks();
    s.checks.push(CheckLine::below("graded truncation invariants", checks.max(), tol));
    let pairing = ext_index_pairing(&t, &w);
    s.checks.push(CheckLine::new("index stable at N and N+4", pairing.stable));
    let nd = build_nsharpd(&t);
    s.checks.push(CheckLine::new("N#D self-adjoint", nd.self_adjoint));
    s.checks.push(CheckLine::new("N#D anticommutes with grading", nd.anticommutes_with_grading));
    s.put("theta", theta.to_string());
    s.put("pairing", &pairing);
    s.put("truncation_checks", &checks);
    s.put("commutators", &nd.commutators);

    let mut b = Section::new("N#D boundedness", None);
    let bound = nsharpd_boundedness(&[16, 32, 64, 128], tr.modes, theta, cfg.execution)?;
    for row in &bound.rows {
        b.checks.push(CheckLine::with(format!("{} commutator bounded", row.generator), row.variation < 0.05, format!("variation {:.3e}", row.variation)));
    }
    b.put("windows", &bound.windows);
    b.put("rows", &bound.rows);

    let mut r = Section::new("Rotation algebra class", None);
    let rot = rotation_delta_components(theta, tr.window, tr.modes)?;
    r.checks.push(CheckLine::new("e_w(t) symbolic identity", rot.ew_symbolic));
    let worst = rot.ew_numeric.iter().map(|x| x.1).fold(0.0, f64::max);
    r.checks.push(CheckLine::below("e_w(t) numeric residual", worst, tol));
    let rows: Vec<_> = rot
        .summands
        .iter()
        .map(|s| {
            let f: Vec<String> = s.factors.iter().map(|f| f.pairing.map_or(f.name.clone(), |p| format!("{} ({p})", f.name))).collect();
            json!({"sign": s.sign, "factors": f.join(" x "), "nontrivial": s.nontrivial})
        })
        .collect();
    r.put("summands", rows);
    Ok(vec![s, b, r])
}

/// Every subcommand over every graph in `dir`, plus the random ladder suite
/// and the crossed-product checks.
pub fn report(dir: &Path, cfg: &RunConfig) -> Result<Report, CliError> {
    let files = corpus(dir)?;
    let inputs: Vec<GraphInput> = files.iter().map(|p| load_graph(p)).collect::<Result<_, _>>()?;
    let per_graph = exec::map(cfg.execution, &inputs, |input| {
        let mut out = Vec::new();
        let mut push = |name: &str, r: Result<Vec<Section>, CliError>| match r {
            Ok(v) => out.extend(v),
            Err(e) => {
                let mut s = Section::new(name, Some(&input.info.name));
                s.checks.push(CheckLine::with("runs", false, e.to_string()));
                out.push(s);
            }
        };
        push("K-groups", kgroups(input));
        push("Duality", duality(input, cfg, DualFilter::Both, false));
        push("Assumptions", assumptions(input, cfg));
        push("Fock", fock_verify(input, cfg));
        out
    });
    let mut sections: Vec<Section> = per_graph.into_iter().flatten().collect();

    let mut rnd = Section::new("Random ladders", None);
    for c in [DualChoice::Eop, DualChoice::EbarOp] {
        let batch = random_ladder_batch(cfg.random_graphs, 6, cfg.seed, c, cfg.execution);
        let bad: Vec<usize> = batch.iter().enumerate().filter(|(_, (_, o))| !(o.commutes && o.exact && o.theta_certified)).map(|(i, _)| i).collect();
        rnd.checks.push(CheckLine::with(format!("{c:?} ladders certified"), bad.is_empty(), format!("{} of {} graphs", batch.len() - bad.len(), batch.len())));
    }
    rnd.put("seed", cfg.seed);
    rnd.put("count", cfg.random_graphs);
    sections.push(rnd);

    for w in ["U", "U^2", "W", "z"] {
        let mut v = index(cfg, w)?;
        if w != "U" {
            v.truncate(1);
        }
        sections.extend(v);
    }
    Ok(Report::new("report", cfg, inputs.into_iter().map(|i| i.info).collect(), sections))
}
