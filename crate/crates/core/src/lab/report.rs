//! Bifurcation report: ground, excited and defocusing branches, the energy
//! curves 𝓔₀, 𝓔₁ and the reference value M(Q)E⁰(Q).

use std::fmt::Write as _;
use std::path::Path;

use super::{seed_line, write_file, RunConfig, Setup};
use crate::error::{LabError, Result};
use crate::functionals::Sigma;
use crate::grid::make_grid;
use crate::par;
use crate::solitons::{
    continue_defocusing, continue_ground, energy_curves, solve_excited, solve_q, DefocusingBranch, EnergyCurves,
    GroundBranch, SolitonBranchPoint, BRANCH_CSV_HEADER,
};

#[derive(Debug, Clone)]
pub struct BifurcationReport {
    pub sigma: Sigma,
    pub e0: f64,
    pub ground: GroundBranch,
    /// Focusing only.
    pub excited: Vec<SolitonBranchPoint>,
    /// ω values whose excited solve failed, with the reason.
    pub excited_failures: Vec<(f64, String)>,
    /// Defocusing only.
    pub defocusing: Option<DefocusingBranch>,
    pub curves: EnergyCurves,
    /// M(Q)E⁰(Q) on the soliton grid and on the refined grid.
    pub reference: Option<(f64, f64)>,
}

impl BifurcationReport {
    /// μ𝓔₁(μ) at the smallest tabulated μ against the reference.
    pub fn smallest_mass_ratio(&self) -> Option<f64> {
        let (r, _) = self.reference?;
        let i = (0..self.curves.mu.len()).min_by(|&a, &b| self.curves.mu[a].total_cmp(&self.curves.mu[b]))?;
        Some(self.curves.mu[i] * self.curves.e1[i] / r)
    }

    pub fn write(&self, cfg: &RunConfig, dir: &Path) -> Result<()> {
        let head = seed_line(cfg);
        let mut g = format!("{head}z,{BRANCH_CSV_HEADER}\n");
        for (z, p) in self.ground.z_values.iter().zip(&self.ground.points) {
            let _ = writeln!(g, "{}", p.csv_row(*z));
        }
        write_file(dir, "ground.csv", &g)?;
        if self.sigma == Sigma::Focusing {
            let mut x = format!("{head}omega,{BRANCH_CSV_HEADER}\n");
            for p in &self.excited {
                let _ = writeln!(x, "{}", p.csv_row(p.omega));
            }
            write_file(dir, "excited.csv", &x)?;
        }
        if let Some(d) = &self.defocusing {
            let mut x = format!("{head}omega,{BRANCH_CSV_HEADER}\n");
            for p in &d.points {
                let _ = writeln!(x, "{}", p.csv_row(p.omega));
            }
            write_file(dir, "defocusing.csv", &x)?;
        }
        let mut c = format!("{head}mu,E0,E1,mu_E1,reference\n");
        let reference = self.reference.map_or(f64::NAN, |r| r.0);
        for i in 0..self.curves.mu.len() {
            let (m, e0, e1) = (self.curves.mu[i], self.curves.e0[i], self.curves.e1[i]);
            let _ = writeln!(c, "{m:.12e},{e0:.12e},{e1:.12e},{:.12e},{reference:.12e}", m * e1);
        }
        write_file(dir, "energy_curves.csv", &c)
    }
}

/// Solve every branch of the configuration.
pub fn bifurcation_report(cfg: &RunConfig) -> Result<BifurcationReport> {
    let gsetup = Setup::new(cfg, cfg.ground_grid)?;
    let ground = continue_ground(gsetup.spectral()?, &gsetup.pot, cfg.sigma, &cfg.z_list())?;
    match cfg.sigma {
        Sigma::Focusing => {
            let xs = Setup::new(cfg, cfg.soliton_grid)?;
            let spectral = xs.spectral()?;
            let solved = par::map(cfg.execution(), &cfg.branch.excited_omegas, |&w| solve_excited(spectral, &xs.pot, w));
            let mut excited = Vec::new();
            let mut excited_failures = Vec::new();
            for (w, r) in cfg.branch.excited_omegas.iter().zip(solved) {
                match r {
                    Ok(p) => excited.push(p),
                    Err(e) => excited_failures.push((*w, e.to_string())),
                }
            }
            if excited.len() < 2 {
                return Err(LabError::BranchAnomaly("fewer than two excited points solved".into()));
            }
            let (lo, hi) = mass_range(&ground.points);
            let mut mu: Vec<f64> = excited.iter().map(|p| p.report.m).filter(|m| *m >= lo && *m <= hi).collect();
            mu.sort_by(f64::total_cmp);
            let curves = energy_curves(&ground.points, Some(&excited), &mu)?;
            let reference = Some((q_reference(cfg, 1.0)?, q_reference(cfg, 1.5)?));
            Ok(BifurcationReport {
                sigma: cfg.sigma,
                e0: ground.e0,
                ground,
                excited,
                excited_failures,
                defocusing: None,
                curves,
                reference,
            })
        }
        Sigma::Defocusing => {
            let ds = Setup::new(cfg, cfg.defocusing_grid)?;
            let spectral = ds.spectral()?;
            let omegas = defocusing_omegas(spectral.e0, cfg.branch.defocusing_points);
            let branch = continue_defocusing(spectral, &ds.pot, &omegas)?;
            let mut mu = branch.masses();
            mu.sort_by(f64::total_cmp);
            let curves = energy_curves(&branch.points, None, &mu)?;
            Ok(BifurcationReport {
                sigma: cfg.sigma,
                e0: spectral.e0,
                ground,
                excited: Vec::new(),
                excited_failures: Vec::new(),
                defocusing: Some(branch),
                curves,
                reference: None,
            })
        }
    }
}

/// Geometric ω grid on [0.05, 0.95]·|e₀|.
pub fn defocusing_omegas(e0: f64, count: usize) -> Vec<f64> {
    let (lo, hi) = (0.05 * e0.abs(), 0.95 * e0.abs());
    let k = count.max(2);
    (0..k).map(|i| lo * (hi / lo).powf(i as f64 / (k - 1) as f64)).collect()
}

fn mass_range(points: &[SolitonBranchPoint]) -> (f64, f64) {
    points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.report.m), hi.max(p.report.m)))
}

/// M(Q)E⁰(Q) on the soliton grid with n scaled by `refine`.
pub fn q_reference(cfg: &RunConfig, refine: f64) -> Result<f64> {
    let g = cfg.soliton_grid;
    let grid = make_grid(g.r_max, (g.n as f64 * refine).round() as usize, g.stretch)?;
    let q = solve_q(&grid)?;
    Ok(q.report.m * q.report.e0)
}

/// Which branch the `branch` command continues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchKind {
    Ground,
    Excited,
    Defocusing,
    Q,
}

impl std::str::FromStr for BranchKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ground" => Ok(Self::Ground),
            "excited" => Ok(Self::Excited),
            "defocusing" => Ok(Self::Defocusing),
            "q" | "Q" => Ok(Self::Q),
            other => Err(LabError::Config(format!("unknown branch kind {other:?}"))),
        }
    }
}

/// Solve one branch and write it as `<kind>.csv`. Returns the file name and
/// the number of points written.
pub fn write_branch(cfg: &RunConfig, kind: BranchKind, dir: &Path) -> Result<(String, usize)> {
    let head = seed_line(cfg);
    let (name, body, count) = match kind {
        BranchKind::Ground => {
            let s = Setup::new(cfg, cfg.ground_grid)?;
            let b = continue_ground(s.spectral()?, &s.pot, cfg.sigma, &cfg.z_list())?;
            let mut t = format!("{head}z,{BRANCH_CSV_HEADER}\n");
            for (z, p) in b.z_values.iter().zip(&b.points) {
                let _ = writeln!(t, "{}", p.csv_row(*z));
            }
            ("ground.csv", t, b.points.len())
        }
        BranchKind::Excited => {
            let s = Setup::new(cfg, cfg.soliton_grid)?;
            let spectral = s.spectral()?;
            let solved = par::map(cfg.execution(), &cfg.branch.excited_omegas, |&w| solve_excited(spectral, &s.pot, w));
            let mut t = format!("{head}omega,{BRANCH_CSV_HEADER}\n");
            let mut n = 0;
            for (w, r) in cfg.branch.excited_omegas.iter().zip(solved) {
                match r {
                    Ok(p) => {
                        let _ = writeln!(t, "{}", p.csv_row(*w));
                        n += 1;
                    }
                    Err(e) => {
                        let _ = writeln!(t, "# omega = {w}: {e}");
                    }
                }
            }
            ("excited.csv", t, n)
        }
        BranchKind::Defocusing => {
            let s = Setup::new(cfg, cfg.defocusing_grid)?;
            let spectral = s.spectral()?;
            let b = continue_defocusing(spectral, &s.pot, &defocusing_omegas(spectral.e0, cfg.branch.defocusing_points))?;
            let mut t = format!("{head}omega,{BRANCH_CSV_HEADER}\n");
            for p in &b.points {
                let _ = writeln!(t, "{}", p.csv_row(p.omega));
            }
            ("defocusing.csv", t, b.points.len())
        }
        BranchKind::Q => {
            let g = cfg.soliton_grid;
            let q = solve_q(&make_grid(g.r_max, g.n, g.stretch)?)?;
            write_file(dir, "q_profile.txt", &q.phi.to_text())?;
            ("q.csv", format!("{head}omega,{BRANCH_CSV_HEADER}\n{}\n", q.csv_row(q.omega)), 1)
        }
    };
    write_file(dir, name, &body)?;
    Ok((name.to_string(), count))
}
