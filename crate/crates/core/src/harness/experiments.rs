//! One runner per experiment kind; each returns its tables without provenance.

use std::sync::Arc;

use crate::dynamics::{light_cone_scan, projector_leak, Propagator};
use crate::error::{LabError, Result};
use crate::gns::{weyl_pair_eigenspaces_exact, weyl_pair_projectors, GnsVector};
use crate::hamiltonians::{assemble, MatrixSpec, ModelSpec};
use crate::lattice::{embed_at, ChainGeometry};
use crate::linalg::{CMat, C64};
use crate::obstruction::{calibrate_block_constant, covariance_defect, obstruction, random_sweep, RandomFamily, TwistSpec};
use crate::spectra::{generator_spectrum, return_to_equilibrium, Perturbation};
use crate::weyl::WeylIndex;

use super::config::{site_operator, ExperimentConfig, ExperimentKind, PerturbationKind, Precision};
use super::table::{complex_cells, ResultTable, Value};

/// Built-in models that exist at site dimension `d`.
pub fn model_zoo(d: usize) -> Vec<ModelSpec> {
    let top = d - 1;
    let mut onsite = CMat::zeros(d, d);
    for j in 0..d {
        onsite[(j, j)] = C64::from(j as f64 * 0.7 - 0.3);
    }
    onsite[(0, top)] = C64::new(0.2, 0.1);
    onsite[(top, 0)] = C64::new(0.2, -0.1);
    let mut zoo = Vec::new();
    if d == 2 {
        zoo.extend([ModelSpec::Heisenberg {}, ModelSpec::Xy {}, ModelSpec::EmchRadin {}]);
    }
    zoo.extend([
        ModelSpec::Exchange { j: 0, k: top },
        ModelSpec::Pair { j: 0, k: top },
        ModelSpec::PairDiagonal { j: 0, k: top },
        ModelSpec::Onsite {
            matrix: MatrixSpec::from_matrix(&onsite),
        },
    ]);
    zoo
}

/// Default model set for twist covariance: one covariant isotropic model,
/// the exchange model, and the pair model.
fn twist_models(d: usize) -> Vec<ModelSpec> {
    let top = d - 1;
    let mut models = Vec::new();
    if d == 2 {
        models.push(ModelSpec::Heisenberg {});
    }
    models.push(ModelSpec::Exchange { j: 0, k: top });
    models.push(ModelSpec::Pair { j: 0, k: top });
    models
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultTable>> {
    let geom = cfg.geometry()?;
    match cfg.kind {
        ExperimentKind::LightCone => light_cone(cfg, geom),
        ExperimentKind::ObstructionSweep => obstruction_sweep(cfg, geom),
        ExperimentKind::TwistCovariance => twist_covariance(cfg, geom),
        ExperimentKind::Spectrum => spectrum(cfg, geom),
        ExperimentKind::ReturnToEquilibrium => return_experiment(cfg, geom),
        ExperimentKind::ProjectorDynamics => projector_dynamics(cfg, geom),
    }
}

fn light_cone(cfg: &ExperimentConfig, geom: ChainGeometry) -> Result<Vec<ResultTable>> {
    let spec = cfg.model.build(geom)?;
    let h = assemble(&spec)?;
    let p = Propagator::new(&h, cfg.effective_method())?;
    let d = geom.site_dim();
    let a = embed_at(&site_operator(&cfg.observable, d)?, 0, &geom)?;
    let b = embed_at(&site_operator(&cfg.probe, d)?, 0, &geom)?;
    let scan = light_cone_scan(&p, &a, &b, &cfg.grid.x, &cfg.grid.t)?;
    let mut table = ResultTable::new(
        "light_cone",
        &[
            ("model", ""),
            ("sites", ""),
            ("method", ""),
            ("x", "sites"),
            ("t", "1/J"),
            ("commutator_norm", ""),
        ],
    );
    let method = format!("{:?}", p.method()).to_lowercase();
    for (i, &x) in scan.separations.iter().enumerate() {
        for (j, &t) in scan.times.iter().enumerate() {
            table.push(vec![
                spec.name().into(),
                geom.sites().into(),
                method.clone().into(),
                x.into(),
                t.into(),
                scan.values[i][j].into(),
            ])?;
        }
    }
    Ok(vec![table])
}

fn obstruction_sweep(cfg: &ExperimentConfig, geom: ChainGeometry) -> Result<Vec<ResultTable>> {
    let d = geom.site_dim();
    let models = if cfg.models.is_empty() { model_zoo(d) } else { cfg.models.clone() };
    let constant = calibrate_block_constant(d)?;
    let mut reports = Vec::new();
    for m in &models {
        let mut r = obstruction(&m.build(geom)?, cfg.site)?;
        r.model = m.label();
        reports.push(("zoo", r));
    }
    for family in [RandomFamily::Onsite, RandomFamily::Coupled] {
        for r in random_sweep(geom, family, cfg.random_count, cfg.seed, cfg.site)? {
            reports.push(("random", r));
        }
    }
    let mut table = ResultTable::new(
        "obstruction",
        &[
            ("model", ""),
            ("family", ""),
            ("d", ""),
            ("sites", ""),
            ("site", ""),
            ("obs_norm", "J"),
            ("obs_hs", "J"),
            ("block_sum", "J^2"),
            ("calibrated_block_sum", "J^2"),
            ("min_eigenvalue", "J^2"),
            ("classification", ""),
        ],
    );
    for (family, r) in reports {
        table.push(vec![
            r.model.clone().into(),
            family.into(),
            d.into(),
            geom.sites().into(),
            r.site.into(),
            r.obs_norm.into(),
            r.obs_hs.into(),
            r.block_sum.into(),
            (constant * r.block_sum).into(),
            r.min_eigenvalue.into(),
            r.classification.as_str().into(),
        ])?;
    }
    Ok(vec![table])
}

fn twist_covariance(cfg: &ExperimentConfig, geom: ChainGeometry) -> Result<Vec<ResultTable>> {
    let d = geom.site_dim();
    let models = if cfg.models.is_empty() { twist_models(d) } else { cfg.models.clone() };
    let mut table = ResultTable::new(
        "twist_covariance",
        &[("model", ""), ("d", ""), ("sites", ""), ("g", ""), ("defect", "J")],
    );
    for m in &models {
        let spec = m.build(geom)?;
        let generator = match &cfg.twist_generator {
            Some(ms) => ms.to_matrix()?,
            None => m.default_twist_generator(d)?,
        };
        let twist = TwistSpec::new(generator, None, 0.0)?;
        for &g in &cfg.grid.g {
            let defect = covariance_defect(&spec, &twist.with_strength(g))?;
            table.push(vec![m.label().into(), d.into(), geom.sites().into(), g.into(), defect.into()])?;
        }
    }
    Ok(vec![table])
}

fn spectrum(cfg: &ExperimentConfig, geom: ChainGeometry) -> Result<Vec<ResultTable>> {
    let d = geom.site_dim();
    let spec = cfg.model.build(geom)?;
    let mut probes = vec![(
        format!("{}_{}", cfg.observable, cfg.site),
        embed_at(&site_operator(&cfg.observable, d)?, cfg.site, &geom)?,
    )];
    if cfg.probe != cfg.observable {
        probes.push((
            format!("{}_{}", cfg.probe, cfg.site),
            embed_at(&site_operator(&cfg.probe, d)?, cfg.site, &geom)?,
        ));
    }
    let report = generator_spectrum(&spec, &probes)?;

    let mut eigen = ResultTable::new("spectrum", &[("model", ""), ("index", ""), ("eigenvalue", "J")]);
    for (i, e) in report.eigenvalues.iter().enumerate() {
        eigen.push(vec![spec.name().into(), i.into(), (*e).into()])?;
    }
    let mut summary = ResultTable::new(
        "spectrum_summary",
        &[
            ("model", ""),
            ("d", ""),
            ("sites", ""),
            ("zero_multiplicity", ""),
            ("diagonal_pairs", ""),
            ("difference_set_error", "J"),
            ("symmetry_error", "J"),
            ("levels", ""),
            ("mean_spacing_ratio", ""),
        ],
    );
    summary.push(vec![
        spec.name().into(),
        d.into(),
        geom.sites().into(),
        report.zero_multiplicity.into(),
        geom.dim().into(),
        report.difference_set_error.into(),
        report.symmetry_error.into(),
        report.level_spacing.levels.into(),
        report.level_spacing.mean_ratio.into(),
    ])?;
    let mut overlaps = ResultTable::new(
        "spectrum_overlaps",
        &[("model", ""), ("probe", ""), ("eigenvalue", "J"), ("weight", "")],
    );
    for o in &report.overlaps {
        for (e, w) in &o.profile {
            if *w > 0.0 {
                overlaps.push(vec![spec.name().into(), o.label.clone().into(), (*e).into(), (*w).into()])?;
            }
        }
    }
    Ok(vec![eigen, summary, overlaps])
}

fn return_experiment(cfg: &ExperimentConfig, geom: ChainGeometry) -> Result<Vec<ResultTable>> {
    let d = geom.site_dim();
    let spec = cfg.model.build(geom)?;
    let local = cfg.perturbation.local_matrix(d)?;
    let op = embed_at(&local, cfg.perturbation.site, &geom)?;
    let perturbation = match cfg.perturbation.kind {
        PerturbationKind::Density => Perturbation::Density(op),
        PerturbationKind::Unitary => Perturbation::Unitary(op),
    };
    let a = embed_at(&site_operator(&cfg.observable, d)?, cfg.site, &geom)?;
    let report = return_to_equilibrium(&spec, &perturbation, &a, &cfg.grid.t, cfg.averaging_time)?;

    let mut series = ResultTable::with_complex(
        "series",
        &[("model", ""), ("t", "1/J")],
        &[("value", "")],
    );
    series.columns.push(super::table::Column {
        name: "running_mean".into(),
        unit: "".into(),
    });
    for ((t, z), m) in report.times.iter().zip(&report.series).zip(&report.running_mean) {
        let [re, im] = complex_cells(*z);
        series.push(vec![spec.name().into(), (*t).into(), re, im, (*m).into()])?;
    }
    let mut summary = ResultTable::with_complex(
        "summary",
        &[("model", ""), ("sites", ""), ("averaging_time", "1/J")],
        &[("tracial", ""), ("cesaro_mean", ""), ("limit", "")],
    );
    for (name, unit) in [
        ("offset", ""),
        ("memory_level", ""),
        ("band", ""),
        ("floor", ""),
        ("offset_ratio", ""),
        ("returns", ""),
        ("horizon", "1/J"),
    ] {
        summary.columns.push(super::table::Column {
            name: name.into(),
            unit: unit.into(),
        });
    }
    let mut row: Vec<Value> = vec![spec.name().into(), geom.sites().into(), report.averaging_time.into()];
    for z in [report.tracial, report.cesaro_mean, report.limit] {
        row.extend(complex_cells(z));
    }
    row.extend([
        report.offset.into(),
        report.memory_level.into(),
        report.band.into(),
        report.floor.into(),
        report.offset_ratio().into(),
        report.returns.into(),
        report.horizon.unwrap_or(f64::INFINITY).into(),
    ]);
    summary.push(row)?;
    Ok(vec![series, summary])
}

fn projector_dynamics(cfg: &ExperimentConfig, geom: ChainGeometry) -> Result<Vec<ResultTable>> {
    let d = geom.site_dim();
    let spec = cfg.model.build(geom)?;
    let h = assemble(&spec)?;
    let p = Arc::new(Propagator::new(&h, cfg.effective_method())?);
    let psi = GnsVector::from_operator(&embed_at(&site_operator(&cfg.observable, d)?, cfg.site, &geom)?).normalized();
    let mut leak = ResultTable::new(
        "projector_leak",
        &[("model", ""), ("sites", ""), ("x", "sites"), ("t", "1/J"), ("leak", "")],
    );
    for &x in &cfg.grid.x {
        let site = usize::try_from(x)
            .ok()
            .filter(|&s| s < geom.sites())
            .ok_or(LabError::SiteOutOfRange {
                site: x.max(0) as usize,
                sites: geom.sites(),
            })?;
        for &t in &cfg.grid.t {
            let value = projector_leak(&p, site, &psi, t)?;
            leak.push(vec![spec.name().into(), geom.sites().into(), x.into(), t.into(), value.into()])?;
        }
    }

    let mut pairs = ResultTable::new(
        "weyl_pairs",
        &[("r1", ""), ("r2", ""), ("exponent", ""), ("local_multiplicity", ""), ("multiplicity", "")],
    );
    let rest = geom.dim() / d;
    for r in WeylIndex::all(d)? {
        let rows: Vec<(usize, usize)> = match cfg.precision {
            Precision::Exact => weyl_pair_eigenspaces_exact(&r)?
                .into_iter()
                .map(|(k, labels)| (k, labels.len()))
                .collect(),
            Precision::Double => weyl_pair_projectors(&r, cfg.site, &geom)?
                .into_iter()
                .map(|s| (s.exponent, s.local_multiplicity))
                .collect(),
        };
        for (k, m) in rows {
            pairs.push(vec![r.r1().into(), r.r2().into(), k.into(), m.into(), (m * rest * rest).into()])?;
        }
    }
    Ok(vec![leak, pairs])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_toml(text).unwrap()
    }

    #[test]
    fn obstruction_sweep_zoo_rows() {
        let c = cfg("kind = \"obstruction_sweep\"\n[geometry]\nsites = 2\n");
        let t = &run_experiment(&c).unwrap()[0];
        let models = t.column_values("model").unwrap();
        let norms = t.real_column("obs_norm").unwrap();
        for (m, n) in models.iter().zip(&norms) {
            match m {
                Value::Text(s) if s.starts_with("onsite") => assert!(*n <= 1e-12),
                _ => assert!(*n > 1e-3, "{m:?}"),
            }
        }
        assert_eq!(norms.len(), 7);
    }

    #[test]
    fn twist_covariance_defaults() {
        let c = cfg("kind = \"twist_covariance\"\n[geometry]\nsites = 4\n[grid]\ng = [0.3]\n");
        let t = &run_experiment(&c).unwrap()[0];
        let defects = t.real_column("defect").unwrap();
        assert!(defects[0] <= 1e-10 && defects[1] <= 1e-10);
        assert!(defects[2] > 0.1);
    }

    #[test]
    fn projector_dynamics_tables() {
        let c = cfg("kind = \"projector_dynamics\"\nprecision = \"exact\"\n[geometry]\nsites = 3\n");
        let tables = run_experiment(&c).unwrap();
        let leak = tables[0].real_column("leak").unwrap();
        assert!(leak.iter().all(|v| v.is_finite()));
        let mult = tables[1].real_column("local_multiplicity").unwrap();
        assert_eq!(mult.iter().sum::<f64>(), 4.0 * 4.0);
    }
}
