use crate::config::{trig, vector_field, Config, MeasureSource, VariationKind, Velocities};
use crate::output::{header, num, nums, point_header, point_row, Artifacts};
use holonomic::analysis::{component_constants, hj_residual, weak_kam_fit, FitMode};
use holonomic::distributions::{
    check_hol, check_prob, continuity_field, stencil, BaseFunction, LocalCoordinate, MildDistribution, TestFunction,
};
use holonomic::fixtures::{corner_distribution, corner_measure, line_measure, open_arc};
use holonomic::lagrangians::{action, energy_defect, Lagrangian, LagrangianSpec};
use holonomic::measures::{holonomy_residual, AtomicMeasure};
use holonomic::optimize::{assemble, criticality_scan, GridSpec, ScanGenerator, TangencyChecks};
use holonomic::variations::{
    derivative_check_battery, horizontal, project_vertical, random_generators, test_battery, transpositional,
    vertical, VariationFamily,
};
use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or input files; exit status 2.
    Input(String),
    /// The computation ran but a check did not hold; exit status 1.
    Verification(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Verification(_) => 1,
            Failure::Input(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Verification(_) => "verification",
            Failure::Input(_) => "input",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Verification(m) | Failure::Input(m) => m,
        }
    }
}

impl From<holonomic::Error> for Failure {
    fn from(e: holonomic::Error) -> Self {
        use holonomic::Error as E;
        match e {
            E::Inconsistent { .. } | E::Infeasible { .. } | E::Unbounded { .. } => {
                Failure::Verification(e.to_string())
            }
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Failure::Input(s)
    }
}

type Outcome = Result<(), Failure>;

pub struct Context {
    pub config: Config,
    /// Directory of the config file; relative paths inside it resolve here.
    pub base_dir: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub tol_flag: Option<f64>,
}

impl Context {
    /// `--tol`, then the section's own value, then the top-level `tol`.
    fn tol(&self, section: Option<f64>, default: f64) -> Result<f64, Failure> {
        let t = self.tol_flag.or(section).or(self.config.tol).unwrap_or(default);
        if !(t >= 0.0) {
            return Err(Failure::Input(format!("tolerance {t} must be nonnegative")));
        }
        Ok(t)
    }

    fn artifacts(&self, command: &'static str) -> Result<Artifacts, Failure> {
        Ok(Artifacts::new(&self.out, command, self.seed)?)
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn lagrangian(&self, d: usize) -> Result<Lagrangian, Failure> {
        let spec = self
            .config
            .lagrangian
            .clone()
            .unwrap_or(LagrangianSpec::Mechanical { potential: Vec::new() });
        Ok(spec.build(d)?)
    }

    fn measure(&self) -> Result<(AtomicMeasure, String), Failure> {
        let source = self
            .config
            .measure
            .as_ref()
            .ok_or_else(|| Failure::Input("this command needs a [measure] section in the config".into()))?;
        Ok(match source {
            MeasureSource::File { path, tol } => {
                let path = self.resolve(path);
                (load_measure(&path, *tol)?, path.display().to_string())
            }
            MeasureSource::Corner { samples } => (corner_measure(*samples)?, format!("corner({samples})")),
            MeasureSource::Line { samples, height, speed } => (
                line_measure(*samples, *height, *speed)?,
                format!("line({samples}, height {height}, speed {speed})"),
            ),
            MeasureSource::Arc { samples } => (open_arc(*samples)?, format!("arc({samples})")),
            MeasureSource::Grid { samples, velocity } => {
                let spec = GridSpec {
                    d: velocity.len(),
                    samples: *samples,
                    velocities: vec![vec![velocity.clone()]],
                };
                let points = spec.points()?;
                let w = 1.0 / points.len() as f64;
                let atoms = points.into_iter().map(|p| holonomic::measures::Atom::new(p, w)).collect();
                (AtomicMeasure::new(spec.d, 1, atoms)?, format!("grid({samples})"))
            }
        })
    }
}

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Parse a measure file. Files that declare the `cutoff` they were solved
/// at must still be probability measures annihilating the exact forms of
/// that cutoff.
pub fn load_measure(path: &Path, tol: f64) -> Result<AtomicMeasure, Failure> {
    let value = read_json(path)?;
    let mu = AtomicMeasure::from_json(&value)?;
    if let Some(k) = value.get("cutoff").and_then(Value::as_u64) {
        let prob = (mu.total_weight() - 1.0).abs();
        let hol = max_abs(&holonomy_residual(&mu, k as u32));
        if prob > tol || hol > tol {
            return Err(Failure::Input(format!(
                "{} fails re-validation: probability residual {prob:e}, holonomy residual {hol:e} at cutoff {k} (tol {tol:e})",
                path.display()
            )));
        }
    }
    Ok(mu)
}

pub fn minimize(ctx: &Context) -> Outcome {
    let m = &ctx.config.minimize;
    let spec = match &m.velocities {
        Velocities::Preset(p) => GridSpec::preset(m.d, m.samples, *p)?,
        Velocities::Explicit(v) => GridSpec {
            d: m.d,
            samples: m.samples,
            velocities: v.clone(),
        },
    };
    let l = ctx.lagrangian(m.d)?;
    let tol = ctx.tol(m.tol, 1e-8)?;
    let lp = assemble(&spec, &l, m.cutoff, m.homology.as_deref())?;
    let sol = lp.solve()?;

    let mut art = ctx.artifacts("minimize")?;
    if m.tableau {
        art.text("tableau.txt", &lp.tableau())?;
    }
    let mut body = sol.measure.to_json();
    body["cutoff"] = json!(m.cutoff);
    body["lagrangian"] = json!(l.name());
    body["objective"] = json!(sol.objective);
    let path = art.json("measure.json", body)?;
    let reloaded = load_measure(&path, tol)?;
    if reloaded != sol.measure {
        return Err(Failure::Verification("measure.json does not round-trip".into()));
    }

    let hom = sol.homology_residual;
    art.csv(
        "summary.csv",
        &header(&[
            "objective",
            "action",
            "atoms",
            "variables",
            "rows",
            "iterations",
            "holonomy_residual",
            "probability_residual",
            "homology_residual",
            "redundant_rows",
        ]),
        &[vec![
            num(sol.objective),
            num(action(&l, &sol.measure)?),
            sol.measure.len().to_string(),
            lp.variables().to_string(),
            lp.rows.len().to_string(),
            sol.iterations.to_string(),
            num(sol.holonomy_residual),
            num(sol.probability_residual),
            hom.map(num).unwrap_or_default(),
            sol.redundant_rows.join(";"),
        ]],
    )?;
    println!("objective {} ({} atoms, {} pivots)", num(sol.objective), sol.measure.len(), sol.iterations);
    println!(
        "holonomy residual {}, probability residual {}{}",
        num(sol.holonomy_residual),
        num(sol.probability_residual),
        hom.map(|h| format!(", homology residual {}", num(h))).unwrap_or_default()
    );
    let worst = sol.holonomy_residual.max(sol.probability_residual).max(hom.unwrap_or(0.0));
    if worst > tol {
        return Err(Failure::Verification(format!("LP output residual {worst:e} exceeds {tol:e}")));
    }
    Ok(())
}

pub fn check_critical(ctx: &Context) -> Outcome {
    let (mu, label) = ctx.measure()?;
    let l = ctx.lagrangian(mu.dim())?;
    let c = &ctx.config.criticality;
    let tau = ctx.tol(c.tol, 1e-5)?;
    let mut gens: Vec<ScanGenerator> = Vec::new();
    if c.corner_generator {
        gens.push(ScanGenerator {
            label: "rounding the corner".into(),
            eta: corner_distribution(),
            two_sided: false,
        });
    }
    gens.extend(random_generators(&mu, &c.battery, ctx.seed)?.iter().map(ScanGenerator::from));
    let checks = TangencyChecks {
        cutoff: c.battery.check_cutoff,
        tol: c.tangency_tol,
        homological: c.battery.homological,
    };
    let report = criticality_scan(&mu, &l, &gens, tau, &checks)?;

    let mut art = ctx.artifacts("check-critical")?;
    art.json(
        "criticality.json",
        json!({ "measure": label, "lagrangian": l.name(), "report": report }),
    )?;
    println!(
        "{} generators scanned, {} excluded, tau {}",
        report.values.len(),
        report.excluded.len(),
        num(tau)
    );
    match report.witness() {
        None => {
            println!("verdict: critical");
            Ok(())
        }
        Some(w) => {
            println!("verdict: not critical (witness {}, value {})", w.label, num(w.value));
            Err(Failure::Verification(format!("not critical: {} pairs to {}", w.label, num(w.value))))
        }
    }
}

pub fn variation(ctx: &Context) -> Outcome {
    let v = &ctx.config.variation;
    let (mu, _) = ctx.measure()?;
    let (d, n) = (mu.dim(), mu.n());
    let tol = ctx.tol(v.tol, 1e-9)?;
    let cutoff = if v.kind == VariationKind::Battery { v.battery.check_cutoff } else { v.cutoff };
    let families: Vec<(String, VariationFamily)> = match v.kind {
        VariationKind::Battery => random_generators(&mu, &v.battery, ctx.seed)?
            .into_iter()
            .map(|g| (g.label, g.family))
            .collect(),
        VariationKind::Horizontal => vec![("horizontal".into(), horizontal(&mu, &vector_field(d, &v.field)?)?)],
        VariationKind::Vertical => {
            let mut parts = vec![vec![holonomic::geometry::TrigPolynomial::zero(d); d]; n];
            for s in &v.shift {
                if s.slot >= n || s.axis >= d {
                    return Err(Failure::Input(format!("shift slot {} axis {} out of range", s.slot, s.axis)));
                }
                parts[s.slot][s.axis].add_scaled(&trig(d, &s.terms)?, 1.0);
            }
            let mut shifts: Vec<Vec<Vec<f64>>> = mu
                .atoms()
                .iter()
                .map(|a| parts.iter().map(|slot| slot.iter().map(|p| p.value(a.point.x())).collect()).collect())
                .collect();
            if v.project {
                shifts = project_vertical(&mu, &shifts, cutoff, v.homological)?;
            }
            vec![("vertical".into(), vertical(&mu, shifts)?)]
        }
        VariationKind::Transpositional => {
            let sigma = BaseFunction(trig(d, &v.sigma)?);
            vec![("transpositional".into(), transpositional(&mu, &sigma, v.slot)?)]
        }
    };
    let battery = test_battery(d, n, v.tests, ctx.seed.wrapping_add(1));
    let refs: Vec<&dyn TestFunction> = battery.iter().map(|b| b.as_ref()).collect();

    let mut rows = Vec::new();
    let mut orders = Vec::new();
    let mut failures = 0;
    for (label, fam) in &families {
        let eta = fam.distribution();
        let prob = check_prob(eta, tol);
        let hol = check_hol(eta, cutoff, tol)?;
        if !prob.pass || !hol.pass {
            failures += 1;
        }
        for r in derivative_check_battery(fam, &refs, &v.steps)? {
            for row in &r.rows {
                rows.push(vec![
                    label.clone(),
                    r.label.clone(),
                    num(row.t),
                    num(row.estimate),
                    num(r.pairing),
                    num(row.error),
                    row.one_sided.to_string(),
                ]);
            }
            let pass = r.passes();
            if !pass {
                failures += 1;
            }
            orders.push(vec![
                label.clone(),
                fam.kind_name().to_string(),
                r.label.clone(),
                num(r.pairing),
                r.order.map(num).unwrap_or_default(),
                num(r.floor),
                r.exact.to_string(),
                r.one_sided.to_string(),
                num(prob.max_abs),
                num(hol.max_abs),
                pass.to_string(),
            ]);
        }
    }

    let mut art = ctx.artifacts("variation")?;
    art.csv(
        "convergence.csv",
        &header(&["generator", "function", "t", "estimate", "pairing", "error", "one_sided"]),
        &rows,
    )?;
    art.csv(
        "orders.csv",
        &header(&[
            "generator",
            "kind",
            "function",
            "pairing",
            "order",
            "floor",
            "exact",
            "one_sided",
            "prob_residual",
            "hol_residual",
            "pass",
        ]),
        &orders,
    )?;
    println!("{} generators, {} derivative checks, {failures} failures", families.len(), orders.len());
    if failures > 0 {
        return Err(Failure::Verification(format!("{failures} tangency or convergence checks failed")));
    }
    Ok(())
}

pub fn stencil_weights(ctx: &Context, index: Option<Vec<u32>>, nodes: Option<Vec<Vec<f64>>>, h: Option<f64>) -> Outcome {
    let s = &ctx.config.stencil;
    let index = index.unwrap_or_else(|| s.index.clone());
    let nodes = nodes.unwrap_or_else(|| s.nodes.clone());
    let h = h.unwrap_or(s.h);
    if index.is_empty() || nodes.is_empty() {
        return Err(Failure::Input("stencil needs an index and nodes (flags or [stencil])".into()));
    }
    let weights = stencil(&index, &nodes, h)?;
    let mut head: Vec<String> = (1..=index.len()).map(|j| format!("node_{j}")).collect();
    head.push("weight".into());
    let rows: Vec<Vec<String>> = nodes
        .iter()
        .zip(&weights)
        .map(|(x, w)| {
            let mut r = nums(x);
            r.push(num(*w));
            r
        })
        .collect();
    let mut art = ctx.artifacts("stencil")?;
    art.csv("stencil.csv", &head, &rows)?;
    // Display only: 12 significant digits, rounding noise at zero dropped.
    let big = weights.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
    let shown: Vec<String> = weights
        .iter()
        .map(|&w| {
            if w.abs() <= 1e-12 * big {
                "0".to_string()
            } else {
                num(format!("{w:.11e}").parse().expect("formatted float parses"))
            }
        })
        .collect();
    println!("{}", shown.join(","));
    Ok(())
}

pub fn energy(ctx: &Context) -> Outcome {
    let e = &ctx.config.energy;
    let (mu, _) = ctx.measure()?;
    let l = ctx.lagrangian(mu.dim())?;
    let tol = ctx.tol(e.tol, 1e-8)?;
    let defects: Vec<Vec<f64>> = (0..mu.n()).map(|i| energy_defect(&l, &mu, i)).collect::<Result<_, _>>()?;
    let report = component_constants(&mu, &l, e.radius)?;

    let mut head = point_header(mu.dim(), mu.n());
    head.push("w".into());
    head.extend((1..=mu.n()).map(|i| format!("defect_{i}")));
    let rows: Vec<Vec<String>> = mu
        .atoms()
        .iter()
        .enumerate()
        .map(|(a, atom)| {
            let mut r = point_row(&atom.point);
            r.push(num(atom.weight));
            r.extend(defects.iter().map(|d| num(d[a])));
            r
        })
        .collect();
    let mut comp_rows = Vec::new();
    for (c, comp) in report.components.iter().enumerate() {
        for s in &comp.constants {
            comp_rows.push(vec![
                c.to_string(),
                comp.atoms.len().to_string(),
                num(comp.weight),
                (s.slot + 1).to_string(),
                num(s.mean),
                num(s.variance),
            ]);
        }
    }
    let mut art = ctx.artifacts("energy")?;
    art.csv("energy.csv", &head, &rows)?;
    art.csv(
        "components.csv",
        &header(&["component", "atoms", "weight", "slot", "mean", "variance"]),
        &comp_rows,
    )?;
    for (c, comp) in report.components.iter().enumerate() {
        let consts: Vec<String> = comp
            .constants
            .iter()
            .map(|s| format!("c_{} = {} (variance {})", s.slot + 1, num(s.mean), num(s.variance)))
            .collect();
        println!("component {c}: {} atoms, weight {}, {}", comp.atoms.len(), num(comp.weight), consts.join(", "));
    }
    if !report.passes(tol) {
        return Err(Failure::Verification(format!(
            "component variance {:e} exceeds {tol:e}",
            report.max_variance()
        )));
    }
    Ok(())
}

pub fn weak_kam(ctx: &Context) -> Outcome {
    let w = &ctx.config.weak_kam;
    let (mu, _) = ctx.measure()?;
    if w.slot >= mu.n() {
        return Err(Failure::Input(format!("slot {} on a measure with {} fibers", w.slot, mu.n())));
    }
    let l = ctx.lagrangian(mu.dim())?;
    let tol = ctx.tol(w.tol, 1e-8)?;
    let fit = weak_kam_fit(&mu, &l, w.cutoff, w.mode)?;
    let hj = hj_residual(&mu, &l, &fit.form(), w.slot)?;

    let mut art = ctx.artifacts("weak-kam")?;
    let coeffs: Vec<Vec<String>> = fit
        .labels
        .iter()
        .zip(&fit.coefficients)
        .map(|(label, c)| vec![label.clone(), num(*c)])
        .collect();
    art.csv("fit.csv", &header(&["form", "coefficient"]), &coeffs)?;
    let mut head = point_header(mu.dim(), mu.n());
    head.extend(header(&["w", "hj_residual"]));
    let rows: Vec<Vec<String>> = mu
        .atoms()
        .iter()
        .zip(&hj.values)
        .map(|(a, v)| {
            let mut r = point_row(&a.point);
            r.push(num(a.weight));
            r.push(num(*v));
            r
        })
        .collect();
    art.csv("hj.csv", &head, &rows)?;
    let mode = match w.mode {
        FitMode::Exact => "exact",
        FitMode::Closed => "closed",
    };
    art.csv(
        "weak_kam_summary.csv",
        &header(&["mode", "cutoff", "rank", "residual", "hj_mean", "hj_variance"]),
        &[vec![
            mode.into(),
            w.cutoff.to_string(),
            fit.rank.to_string(),
            num(fit.residual),
            num(hj.mean),
            num(hj.variance),
        ]],
    )?;
    let big: Vec<String> = fit
        .labels
        .iter()
        .zip(&fit.coefficients)
        .filter(|(_, c)| c.abs() > 1e-9)
        .map(|(l, c)| format!("{l} = {}", num(*c)))
        .collect();
    println!("fit ({mode}, cutoff {}): residual {}, rank {}", w.cutoff, num(fit.residual), fit.rank);
    println!("nonzero coefficients: {}", if big.is_empty() { "none".into() } else { big.join(", ") });
    println!("HJ residual mean {}, variance {}", num(hj.mean), num(hj.variance));
    if hj.variance > tol {
        return Err(Failure::Verification(format!("HJ residual variance {:e} exceeds {tol:e}", hj.variance)));
    }
    Ok(())
}

pub fn transport(ctx: &Context) -> Outcome {
    let t = &ctx.config.transport;
    let (mu, _) = ctx.measure()?;
    let (d, n) = (mu.dim(), mu.n());
    let eta = match &t.distribution {
        Some(p) => MildDistribution::from_json(&read_json(&ctx.resolve(p))?)?,
        None if t.field.is_empty() => {
            return Err(Failure::Input("transport needs [transport] field or distribution".into()));
        }
        None => horizontal(&mu, &vector_field(d, &t.field)?)?.distribution().clone(),
    };
    let tol = ctx.tol(t.tol, 1e-8)?;
    let coords = (n + 1) * d;
    let tests: Vec<LocalCoordinate> = mu
        .atoms()
        .iter()
        .flat_map(|a| {
            (0..coords).map(move |axis| LocalCoordinate {
                center: a.point.clone(),
                axis,
                radius: t.radius,
            })
        })
        .collect();
    let refs: Vec<&dyn TestFunction> = tests.iter().map(|f| f as &dyn TestFunction).collect();
    let field = continuity_field(&mu, &eta, &refs, tol)?;

    let mut head = point_header(d, n);
    head.push("w".into());
    head.extend((1..=d).map(|j| format!("u_x_{j}")));
    for i in 1..=n {
        head.extend((1..=d).map(|j| format!("u_v_{i}{j}")));
    }
    let rows: Vec<Vec<String>> = mu
        .atoms()
        .iter()
        .zip(&field.field)
        .map(|(a, u)| {
            let mut r = point_row(&a.point);
            r.push(num(a.weight));
            r.extend(nums(u));
            r
        })
        .collect();
    let mut art = ctx.artifacts("transport")?;
    art.csv("transport.csv", &head, &rows)?;
    art.csv(
        "transport_summary.csv",
        &header(&["residual", "norm", "rank", "tests"]),
        &[vec![num(field.residual), num(field.norm), field.rank.to_string(), tests.len().to_string()]],
    )?;
    println!(
        "transport field on {} atoms: residual {}, norm {}, rank {}",
        mu.len(),
        num(field.residual),
        num(field.norm),
        field.rank
    );
    Ok(())
}

pub fn corner_demo(ctx: &Context) -> Outcome {
    let c = &ctx.config.corner;
    let tol = ctx.tol(c.tol, 1e-12)?;
    let eta = corner_distribution();
    let value = eta.pair(&Lagrangian::Length)?;
    let prob = check_prob(&eta, tol);
    let hol = check_hol(&eta, c.cutoff, tol)?;
    let mu = corner_measure(c.samples)?;
    let gens = [ScanGenerator {
        label: "rounding the corner".into(),
        eta,
        two_sided: false,
    }];
    let checks = TangencyChecks {
        cutoff: c.cutoff,
        ..TangencyChecks::default()
    };
    let report = criticality_scan(&mu, &Lagrangian::Length, &gens, c.tau, &checks)?;
    let verdict = if report.critical { "critical" } else { "not critical" };

    let mut art = ctx.artifacts("corner-demo")?;
    art.json(
        "corner_demo.json",
        json!({
            "pairing": value,
            "prob_residual": prob.max_abs,
            "hol_residual": hol.max_abs,
            "hol_cutoff": c.cutoff,
            "verdict": verdict,
            "report": report,
        }),
    )?;
    println!("pairing <eta, |v|> = {}", num(value));
    println!("prob residual {}, hol residual (K={}) {}", num(prob.max_abs), c.cutoff, num(hol.max_abs));
    match report.witness() {
        Some(w) => println!("verdict: {verdict} (witness {}, value {})", w.label, num(w.value)),
        None => println!("verdict: {verdict}"),
    }
    if (value + 2.0).abs() > tol || !prob.pass || !hol.pass || report.critical {
        return Err(Failure::Verification("corner example not reproduced".into()));
    }
    Ok(())
}
