use std::f64::consts::TAU;
use std::path::Path;

use finsler_core::distance::{calibrate_flat, DistanceOracle};
use finsler_core::domain::Domain;
use finsler_core::elastic::{qp_finsler, verify_cofinsler, StiffnessField};
use finsler_core::geodesic::{
    boundary_cut_distance, boundary_cut_distance_refined, cut_distance, focal_distance, unit_normal, Flow,
    Orientation, PhasePoint,
};
use finsler_core::numeric::sphere_seeds;
use finsler_core::reconstruction::{
    build_chart, embedding_check, make_nonuniqueness_pair, match_datasets, recover_norm_at, verify_nonuniqueness,
    BoundaryDistanceData, Engine,
};
use finsler_core::{Error, FiberNorm};
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::output::{fmt, fmt_opt};
use crate::{Ctx, Failure, Outcome};

const CALIBRATION_SOURCES: usize = 8;
/// Documented flat-metric error bound of the oracle.
const ORACLE_ERROR_BOUND: f64 = 1e-2;

fn check_metric(norm: &FiberNorm, domain: &Domain, seed: u64) -> Result<(), Failure> {
    let mut pts: Vec<Vec<f64>> = domain.interior_samples(32, 0.0, seed).iter().map(|p| p.to_vec()).collect();
    pts.extend(domain.boundary_mesh().iter().map(|b| b.point.to_vec()));
    norm.check_admissible(&pts).map_err(|e| Failure::Config(format!("metric: {e}")))
}

fn oracle(ctx: &Ctx) -> Result<DistanceOracle, Failure> {
    let s = &ctx.scenario;
    let (norm, domain) = (s.metric()?, s.domain()?);
    check_metric(norm, domain, s.seed)?;
    Ok(DistanceOracle::new(norm, domain, s.oracle()?.clone())?)
}

pub fn forward(ctx: &Ctx) -> Result<Outcome, Failure> {
    let s = &ctx.scenario;
    let o = oracle(ctx)?;
    let domain = o.domain();
    let cal = calibrate_flat(domain, o.options(), CALIBRATION_SOURCES, s.seed)?;
    let sources = s.source_points(domain)?;
    let mut data = BoundaryDistanceData::generate(&o, &sources)?;
    let rows: Vec<Vec<String>> = data
        .r_vectors
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let (k, lo) = r
                .iter()
                .enumerate()
                .fold((0, f64::INFINITY), |b, (k, &v)| if v < b.1 { (k, v) } else { b });
            let hi = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mean = r.iter().sum::<f64>() / r.len() as f64;
            let (x1, x2) = if ctx.blind {
                (String::new(), String::new())
            } else {
                (fmt(sources[i][0]), fmt(sources[i][1]))
            };
            vec![i.to_string(), x1, x2, fmt(lo), fmt(hi), fmt(mean), fmt(data.mesh[k].theta)]
        })
        .collect();
    if ctx.blind {
        data = data.blinded();
    }
    ctx.out.text("data.json", &(data.to_json()? + "\n"))?;
    ctx.out.json("calibration.json", &cal)?;
    ctx.out.csv(
        "r_stats.csv",
        &["source", "x1", "x2", "min", "max", "mean", "argmin_theta"],
        &rows,
    )?;
    Ok(Outcome {
        pass: cal.flat_max_rel_error <= ORACLE_ERROR_BOUND,
        detail: format!(
            "{} sources x {} nodes, {} oracle nodes; flat calibration error {:.2e} (bound {ORACLE_ERROR_BOUND:.0e}), eps {:.1e}",
            data.len(),
            data.mesh_len(),
            o.node_count(),
            cal.flat_max_rel_error,
            cal.eps
        ),
    })
}

fn load_data(ctx: &Ctx, o: &DistanceOracle, path: Option<&Path>) -> Result<BoundaryDistanceData, Failure> {
    let s = &ctx.scenario;
    let path = path.map(Path::to_path_buf).or_else(|| s.recover.data.as_ref().map(|p| s.resolve(p)));
    let data = match path {
        Some(p) => {
            let text = std::fs::read_to_string(&p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            BoundaryDistanceData::from_json(&text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?
        }
        None => BoundaryDistanceData::generate(o, &s.source_points(o.domain())?)?,
    };
    data.validate().map_err(|e| Failure::Config(e.to_string()))?;
    if data.domain != *o.domain() {
        return Err(Failure::Config("data domain differs from the scenario domain".into()));
    }
    Ok(if ctx.blind { data.blinded() } else { data })
}

pub fn recover(ctx: &Ctx, data_path: Option<&Path>) -> Result<Outcome, Failure> {
    let s = &ctx.scenario;
    let o = oracle(ctx)?;
    let domain = o.domain();
    let eps = o.tolerance();
    let data = load_data(ctx, &o, data_path)?;

    let emb = embedding_check(&data, eps, Some(&o))?;
    let ratio_rows: Vec<Vec<String>> = emb
        .ratios
        .iter()
        .map(|r| vec![r.a.to_string(), r.b.to_string(), fmt(r.sup_gap), fmt(r.distance), fmt(r.ratio)])
        .collect();
    ctx.out.csv("embedding.csv", &["a", "b", "sup_gap", "distance", "ratio"], &ratio_rows)?;
    ctx.out.json(
        "embedding.json",
        &serde_json::json!({
            "min_sup_gap": emb.min_sup_gap,
            "collisions": emb.collisions,
            "min_ratio": emb.min_ratio,
            "max_ratio": emb.max_ratio,
        }),
    )?;

    // relabeled copy of the data matched back against itself
    let mut perm: Vec<usize> = (0..data.len()).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(s.seed));
    let mut shuffled = data.clone().blinded();
    shuffled.r_vectors = perm.iter().map(|&p| data.r_vectors[p].clone()).collect();
    let mt = match_datasets(&data, &shuffled, None, eps)?;
    let match_rows: Vec<Vec<String>> = mt
        .assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| vec![i.to_string(), j.to_string(), perm[j].to_string(), fmt(mt.mismatch[i])])
        .collect();
    ctx.out.csv("matching.csv", &["row", "matched", "matched_source", "mismatch"], &match_rows)?;
    let match_ok = mt.max_mismatch == 0.0;

    let engine = Engine::new(&o);
    let rc = &s.recover;
    let points = domain.interior_samples(rc.points, rc.margin * domain.diameter(), s.seed.wrapping_add(1));
    let mut norm_rows = Vec::new();
    let mut point_rows = Vec::new();
    let mut chart_rows = Vec::new();
    let (mut worst, mut min_cov, mut charts): (f64, f64, usize) = (0.0, 1.0, 0);
    for (i, x) in points.iter().enumerate() {
        let r = recover_norm_at(&engine, x, &rc.options)?;
        for smp in &r.samples {
            let truth = if ctx.blind { None } else { smp.truth };
            norm_rows.push(vec![
                i.to_string(),
                fmt(smp.direction[0]),
                fmt(smp.direction[1]),
                fmt(smp.recovered),
                fmt_opt(truth),
                fmt_opt(truth.and(smp.relative_error())),
            ]);
        }
        let err = r.max_relative_error();
        if let Some(e) = err {
            worst = worst.max(e);
        }
        min_cov = min_cov.min(r.coverage);
        point_rows.push(vec![
            i.to_string(),
            fmt(x[0]),
            fmt(x[1]),
            fmt(r.coverage),
            r.certified.to_string(),
            if ctx.blind { String::new() } else { fmt(r.dual_residual) },
            if ctx.blind { String::new() } else { fmt_opt(err) },
        ]);
        if rc.charts {
            match build_chart(&engine, x, s.seed.wrapping_add(i as u64)) {
                Ok(c) => {
                    charts += 1;
                    chart_rows.push(vec![
                        i.to_string(),
                        c.nodes[0].to_string(),
                        c.nodes[1].to_string(),
                        fmt(c.det),
                        fmt(c.condition),
                        c.tuples_tried.to_string(),
                    ]);
                }
                Err(Error::ChartFailure { best_det }) => {
                    chart_rows.push(vec![i.to_string(), String::new(), String::new(), fmt(best_det), String::new(), String::new()]);
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    ctx.out.csv(
        "norm_recovery.csv",
        &["point", "y1", "y2", "recovered", "truth", "rel_error"],
        &norm_rows,
    )?;
    ctx.out.csv(
        "recovery_points.csv",
        &["point", "x1", "x2", "coverage", "certified", "dual_residual", "max_rel_error"],
        &point_rows,
    )?;
    if rc.charts {
        ctx.out.csv("charts.csv", &["point", "node1", "node2", "det", "condition", "tuples_tried"], &chart_rows)?;
    }

    let emb_ok = emb.collisions.is_empty();
    let charts_ok = !rc.charts || charts == points.len();
    let recovery_ok = ctx.blind || worst <= rc.tolerance;
    let error = if ctx.blind {
        "hidden".to_string()
    } else {
        format!("{worst:.2e} (tol {:.0e})", rc.tolerance)
    };
    Ok(Outcome {
        pass: emb_ok && match_ok && charts_ok && recovery_ok,
        detail: format!(
            "{} rows: {} collisions, self-match exact {match_ok}; {} points: max rel error {error}, min coverage {min_cov:.2}, charts {charts}/{}",
            data.len(),
            emb.collisions.len(),
            points.len(),
            if rc.charts { points.len() } else { 0 }
        ),
    })
}

pub fn nonunique(ctx: &Ctx) -> Result<Outcome, Failure> {
    let s = &ctx.scenario;
    let o = oracle(ctx)?;
    let (norm, domain) = (o.norm(), o.domain());
    let eps = o.tolerance();
    let (perturbed, label) = match &s.nonunique.control {
        Some(c) => (FiberNorm::perturbed(norm.clone(), c.amplitude, c.bump.clone()), "control"),
        None => match make_nonuniqueness_pair(&o, &s.nonunique.options) {
            Ok(pair) => {
                ctx.out.json("pair.json", &pair)?;
                (pair.perturbed, "constructed")
            }
            Err(Error::ConstructionImpossible(m)) => {
                ctx.out.json(
                    "report.json",
                    &serde_json::json!({ "construction": "impossible", "reason": m }),
                )?;
                return Err(Failure::Impossible(format!("construction impossible: {m}")));
            }
            Err(e) => return Err(e.into()),
        },
    };
    if !ctx.blind {
        ctx.out.json("base_norm.json", norm)?;
    }
    ctx.out.json("perturbed_norm.json", &perturbed)?;
    let sources = s.source_points(domain)?;
    let rep = verify_nonuniqueness(norm, &perturbed, domain, o.options(), &sources, eps)?;
    ctx.out.json("report.json", &rep)?;
    Ok(Outcome {
        pass: rep.pass,
        detail: format!(
            "{label} bump: data diff {:.2e} (bound {:.2e}), norm gap {:.3e} over {} sources",
            rep.matrix_diff, rep.bound, rep.norm_gap, rep.sources
        ),
    })
}

pub fn elastic(ctx: &Ctx, stiffness: Option<&Path>) -> Result<Outcome, Failure> {
    let s = &ctx.scenario;
    let path = stiffness
        .map(Path::to_path_buf)
        .or_else(|| s.elastic.stiffness.as_ref().map(|p| s.resolve(p)))
        .ok_or_else(|| Failure::Config("no stiffness file (elastic.stiffness or --stiffness)".into()))?;
    let text = std::fs::read_to_string(&path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let field: StiffnessField =
        serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let reports: Vec<_> = field
        .nodes()
        .iter()
        .map(|n| verify_cofinsler(&field, &n.position, s.elastic.directions))
        .collect();
    ctx.out.json("admissibility.json", &reports)?;
    let norm = qp_finsler(&field)?;
    ctx.out.json("qp_norm.json", &norm)?;

    let x = field.nodes()[0].position.clone();
    let mut rows = Vec::new();
    for d in sphere_seeds(3, s.elastic.table) {
        let v = field.christoffel(&x, &d).eigenvalues();
        let t = norm.eval(&x, &d)?;
        let mut row: Vec<String> = d.iter().map(|&c| fmt(c)).collect();
        row.extend(v.iter().map(|&l| fmt(l.max(0.0).sqrt())));
        row.push(fmt(t));
        row.push(fmt(1.0 / t));
        rows.push(row);
    }
    ctx.out.csv(
        "travel_times.csv",
        &["d1", "d2", "d3", "qp_speed", "qs1_speed", "qs2_speed", "travel_time", "ray_speed"],
        &rows,
    )?;
    let pass = reports.iter().all(|r| r.pass);
    let min_h = reports.iter().map(|r| r.min_hessian_eigenvalue).fold(f64::INFINITY, f64::min);
    let min_m = reports.iter().map(|r| r.min_relative_margin).fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        pass,
        detail: format!(
            "{} nodes: min Hessian eigenvalue {min_h:.3e}, min relative qP margin {min_m:.3e}",
            reports.len()
        ),
    })
}

pub fn geodesy(ctx: &Ctx) -> Result<Outcome, Failure> {
    let g = &ctx.scenario.geodesy;
    let o = oracle(ctx)?;
    let (norm, domain) = (o.norm(), o.domain());
    let rev = norm.reverse();
    let to_b = o.to_boundary();
    let hi = domain
        .boundary_mesh()
        .iter()
        .map(|b| norm.speed_bounds(&b.point).1)
        .fold(1.0, f64::max);
    let s_max = 2.0 * domain.diameter() * hi;
    let flow = Flow::for_domain(&rev, domain);
    let stride = if g.trajectories == 0 { 0 } else { (g.nodes / g.trajectories).max(1) };
    let mut rows = Vec::new();
    let mut exits = Vec::new();
    let (mut focal_bad, mut cut_bad, mut focal_found) = (0, 0, 0);
    for k in 0..g.nodes {
        let theta = TAU * k as f64 / g.nodes as f64;
        let z = domain.point(theta);
        let nu = unit_normal(&rev, domain, theta, Orientation::Inward, false)?;
        let tr = flow.integrate(Some(domain), &PhasePoint::new(&z, &nu), s_max)?;
        let tau = cut_distance(&o, true, &z, &nu, s_max)?;
        let tau_bd = if g.refined {
            boundary_cut_distance_refined(&o, &to_b, theta, s_max)?
        } else {
            boundary_cut_distance(&o, &to_b, theta, s_max)?
        };
        let tau_f = focal_distance(norm, domain, theta, s_max)?;
        let focal_ok = tau_f.map_or(true, |f| tau_bd.tau <= f + g.focal_slack);
        let cut_ok = tau_bd.tau <= tau.tau;
        focal_found += tau_f.is_some() as usize;
        focal_bad += !focal_ok as usize;
        cut_bad += !cut_ok as usize;
        rows.push(vec![
            k.to_string(),
            fmt(theta),
            fmt(z[0]),
            fmt(z[1]),
            fmt_opt(tr.exit.as_ref().map(|e| e.time)),
            fmt(tau.tau),
            tau.censored.to_string(),
            fmt(tau_bd.tau),
            tau_bd.censored.to_string(),
            fmt_opt(tau_f),
            focal_ok.to_string(),
            cut_ok.to_string(),
        ]);
        if stride > 0 && k % stride == 0 && k / stride < g.trajectories {
            ctx.out.text(&format!("trajectory_{k:04}.csv"), &tr.to_csv(&rev))?;
            exits.push(serde_json::json!({ "node": k, "theta": theta, "termination": tr.termination, "exit": tr.exit }));
        }
    }
    ctx.out.csv(
        "cut_focal.csv",
        &[
            "node",
            "theta",
            "z1",
            "z2",
            "tau_exit",
            "tau",
            "tau_censored",
            "tau_bd",
            "tau_bd_censored",
            "tau_f",
            "bd_before_focal",
            "bd_before_cut",
        ],
        &rows,
    )?;
    ctx.out.json("exits.json", &exits)?;
    Ok(Outcome {
        pass: focal_bad == 0 && cut_bad == 0,
        detail: format!(
            "{} nodes, focal points at {focal_found}; tau_bd > tau_f + {:.0e} at {focal_bad}, tau_bd > tau at {cut_bad}",
            g.nodes, g.focal_slack
        ),
    })
}
