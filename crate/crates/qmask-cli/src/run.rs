//! Subcommand implementations. Each one resolves a scenario config, runs the
//! relevant engine, and writes CSV tables whose header comments echo the full
//! resolved config. Sweep points are dispatched to a worker pool; rows are
//! assembled in sweep order by a single writer.

use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;

use qmask::dilation::{dilate, verify_unitary, ModeLabel, TransferMatrix};
use qmask::fock::{self, FockVector};
use qmask::gaussian::{self, GaussianState, SqueezeSpec};
use qmask::mask::{self, CouplingMatrix, MaskSpec};
use qmask::modes::{BeamGeometry, ClassicalCoefficients, ModeIndex};
use qmask::numerics::{minimize_scalar, QuadratureSpec};
use qmask::Complex64;

use crate::config::{ScenarioConfig, StateConfig};
use crate::errors::{numerical, CliError};
use crate::table::{self, Cell, Table};

pub struct RunArgsResolved<'a> {
    pub command: &'static str,
    pub config_path: &'a std::path::Path,
    pub out: Option<&'a std::path::Path>,
    pub verify: bool,
}

struct Scenario {
    command: &'static str,
    cfg: ScenarioConfig,
    g: BeamGeometry,
    quad: QuadratureSpec,
    out_dir: PathBuf,
    verify: bool,
}

pub fn run(args: &RunArgsResolved) -> Result<(), CliError> {
    let text = fs::read_to_string(args.config_path).map_err(|e| {
        CliError::Config(format!("cannot read config {}: {e}", args.config_path.display()))
    })?;
    let mut cfg = ScenarioConfig::parse(&text)?;

    // The three fixed panel positions are part of the wigner-panels contract,
    // so an explicit axial spec would be silently dead weight: reject it.
    if args.command == "wigner-panels" {
        if let Some(m) = &cfg.mask {
            if m.z0_over_zr.is_some() || m.sweep.is_some() {
                return Err(CliError::config(
                    "wigner-panels fixes the iris positions to -z_R, 0, +z_R; remove the axial spec",
                ));
            }
        }
    }

    let g = cfg.resolve()?;
    resolve_grid(&mut cfg, args.command)?;

    let out_dir = args
        .out
        .map(PathBuf::from)
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Numerical(format!("cannot create {}: {e}", out_dir.display())))?;

    let quad = cfg.engine.quadrature();
    let s = Scenario { command: args.command, cfg, g, quad, out_dir, verify: args.verify };

    let result = match args.command {
        "render-modes" => render_modes(&s),
        "coeffs" => coeffs(&s),
        "dilate" => dilate_cmd(&s),
        "classical" => classical(&s),
        "noise-scan" => noise_scan(&s),
        "wigner-panels" => wigner_panels(&s),
        "squeeze-scan" => squeeze_scan(&s),
        "joint-prob" => joint_prob(&s),
        "prob-vs-radius" => prob_vs_radius(&s),
        "cov-vs-radius" => cov_vs_radius(&s),
        "ch-scan" => ch_scan(&s),
        "hom-scan" => hom_scan(&s),
        other => unreachable!("unrouted subcommand {other}"),
    };

    if let Err(CliError::Numerical(msg)) = &result {
        let diag = s.out_dir.join("diagnostic.txt");
        let body = format!(
            "qmask {} failed\nconfig: {}\n\n{msg}\n",
            args.command,
            args.config_path.display()
        );
        if fs::write(&diag, body).is_ok() {
            eprintln!("diagnostic written to {}", diag.display());
        }
    }
    result
}

/// Grid defaults are per-command: mode profiles sample a few waists, Wigner
/// panels a few vacuum widths. Commands that render nothing reject the section.
fn resolve_grid(cfg: &mut ScenarioConfig, command: &str) -> Result<(), CliError> {
    let defaults = match command {
        "render-modes" => Some((3.0, 121)),
        "wigner-panels" => Some((5.0, 101)),
        _ => None,
    };
    match defaults {
        Some((hw, n)) => {
            let mut grid = cfg.grid.unwrap_or_default();
            grid.half_width = Some(grid.half_width.unwrap_or(hw));
            grid.samples = Some(grid.samples.unwrap_or(n));
            cfg.grid = Some(grid);
            Ok(())
        }
        None if cfg.grid.is_some() => {
            Err(CliError::config(format!("{command} does not use a grid section")))
        }
        None => Ok(()),
    }
}

fn sig(m: ModeIndex) -> ModeLabel {
    ModeLabel::Signal(m)
}

impl Scenario {
    fn table(&self, columns: &[&str]) -> Table {
        let mut t = Table::new(columns);
        t.comment(format!("qmask {}", self.command));
        t.comment(format!(
            "config: {}",
            serde_json::to_string(&self.cfg).expect("resolved config serializes")
        ));
        t
    }

    fn emit(&self, file: &str, t: &Table) -> Result<(), CliError> {
        let path = self.out_dir.join(file);
        t.write(&path)
            .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", path.display())))?;
        println!("wrote {} ({} rows, checksum {:016x})", path.display(), t.rows.len(), t.checksum());
        if self.verify {
            table::verify_file(&path, t.checksum())?;
            println!("verified {}", path.display());
        }
        Ok(())
    }

    fn basis(&self) -> Vec<ModeIndex> {
        self.cfg.engine.basis()
    }

    fn coupling(&self, radius_m: f64, z0_m: f64, basis: &[ModeIndex]) -> Result<CouplingMatrix, CliError> {
        mask::build_coupling_matrix(&self.g, &MaskSpec::iris(radius_m, z0_m), basis, &self.quad)
            .map_err(numerical)
    }

    fn transfer(&self, radius_m: f64, z0_m: f64, basis: &[ModeIndex]) -> Result<TransferMatrix, CliError> {
        dilate(&self.coupling(radius_m, z0_m, basis)?).map_err(numerical)
    }

    fn forbid(&self, condition: bool, msg: &str) -> Result<(), CliError> {
        if condition {
            Err(CliError::config(format!("{} {msg}", self.command)))
        } else {
            Ok(())
        }
    }

    fn forbid_unused(&self, inputs: bool, modes: bool, amplitudes: bool) -> Result<(), CliError> {
        if inputs {
            self.forbid(!self.cfg.inputs.is_empty(), "does not take an inputs section")?;
        }
        if modes {
            self.forbid(!self.cfg.modes.is_empty(), "does not take a modes section")?;
        }
        if amplitudes {
            self.forbid(!self.cfg.amplitudes.is_empty(), "does not take an amplitudes section")?;
        }
        Ok(())
    }

    /// Check every config input targets a basis mode; returns (mode, input) pairs.
    fn inputs_in_basis(&self, basis: &[ModeIndex]) -> Result<Vec<(ModeIndex, &crate::config::InputConfig)>, CliError> {
        let mut out = Vec::with_capacity(self.cfg.inputs.len());
        for input in &self.cfg.inputs {
            let m = input.mode();
            if !basis.contains(&m) {
                return Err(CliError::config(format!(
                    "input mode {m} is outside the signal basis; raise basis_l_max/basis_p_max"
                )));
            }
            out.push((m, input));
        }
        Ok(out)
    }

    /// Product state over the whole signal basis: configured inputs on their
    /// modes, vacuum everywhere else.
    fn gaussian_inputs(&self, basis: &[ModeIndex]) -> Result<GaussianState, CliError> {
        let placed = self.inputs_in_basis(basis)?;
        let mut factors = Vec::new();
        let mut rest = Vec::new();
        for &m in basis {
            match placed.iter().find(|(pm, _)| *pm == m) {
                Some((_, input)) => {
                    factors.push(gaussian::displaced_squeezed(sig(m), &input.squeeze_spec()?))
                }
                None => rest.push(sig(m)),
            }
        }
        if !rest.is_empty() {
            factors.push(gaussian::vacuum(&rest));
        }
        gaussian::product(&factors).map_err(numerical)
    }

    /// Fock-engine counterpart of [`gaussian_inputs`], truncated to the
    /// engine's total-photon cutoff.
    fn fock_inputs(&self, basis: &[ModeIndex]) -> Result<FockVector, CliError> {
        let n_sig = basis.len();
        if 2 * n_sig > 16 {
            return Err(CliError::config(format!(
                "the Fock engine supports at most 8 signal modes, basis has {n_sig}"
            )));
        }
        let cutoff = self.cfg.engine.cutoff;
        let n_max = self.cfg.engine.n_max.expect("resolved");
        let placed = self.inputs_in_basis(basis)?;

        let mut fock_total = 0u32;
        let mut factors = Vec::new();
        let mut rest = Vec::new();
        for &m in basis {
            match placed.iter().find(|(pm, _)| *pm == m) {
                Some((_, input)) => match input.state {
                    StateConfig::Vacuum => rest.push(sig(m)),
                    StateConfig::Squeezed { r, theta, alpha_re, alpha_im } => {
                        if alpha_re != 0.0 || alpha_im != 0.0 {
                            return Err(CliError::config(
                                "the Fock engine does not support displaced inputs",
                            ));
                        }
                        factors.push(fock::squeezed_vacuum_fock(sig(m), r, theta, n_max));
                    }
                    StateConfig::Fock { n } => {
                        fock_total += u32::from(n);
                        factors.push(FockVector::single(&[sig(m)], &[n], u32::from(n)));
                    }
                },
                None => rest.push(sig(m)),
            }
        }
        if fock_total > cutoff {
            return Err(CliError::config(format!(
                "inputs carry {fock_total} photons, above the engine cutoff {cutoff}"
            )));
        }
        if !rest.is_empty() {
            factors.push(FockVector::vacuum(&rest, 0));
        }
        let state = fock::product(&factors).map_err(numerical)?;
        Ok(fock::truncate_total(&state, cutoff))
    }

    /// The two modes a pair statistic refers to: the first two config inputs.
    fn input_pair(&self) -> Result<(ModeIndex, ModeIndex), CliError> {
        if self.cfg.inputs.len() != 2 {
            return Err(CliError::config(format!(
                "{} needs exactly two inputs, got {}",
                self.command,
                self.cfg.inputs.len()
            )));
        }
        Ok((self.cfg.inputs[0].mode(), self.cfg.inputs[1].mode()))
    }

    fn grid_spec(&self) -> (f64, usize) {
        let grid = self.cfg.grid.expect("grid resolved for rendering commands");
        (grid.half_width.expect("resolved"), grid.samples.expect("resolved"))
    }

    fn mask_comments(&self, t: &mut Table, radius_m: f64, z0_m: f64) {
        t.comment(format!("radius_over_w0: {}", radius_m / self.g.w0));
        t.comment(format!("z0_over_zR: {}", z0_m / self.g.rayleigh_range));
    }
}

fn cell_center(half_width: f64, n: usize, i: usize) -> f64 {
    -half_width + 2.0 * half_width * (i as f64 + 0.5) / n as f64
}

fn render_modes(s: &Scenario) -> Result<(), CliError> {
    s.forbid_unused(true, false, true)?;
    s.forbid(s.cfg.mask.is_some(), "does not use a mask")?;
    if s.cfg.modes.is_empty() {
        return Err(CliError::config("render-modes needs a modes list, e.g. [{\"l\": 0, \"p\": 0}]"));
    }
    for (i, m) in s.cfg.modes.iter().enumerate() {
        if s.cfg.modes[..i].iter().any(|o| (o.l, o.p) == (m.l, m.p)) {
            return Err(CliError::config(format!("mode (l = {}, p = {}) is listed twice", m.l, m.p)));
        }
    }

    let (hw, n) = s.grid_spec();
    for m in &s.cfg.modes {
        let mode = ModeIndex::new(m.l, m.p);
        let mut t = s.table(&["x_over_w0", "y_over_w0", "re_u", "im_u", "intensity", "phase"]);
        t.comment(format!("mode l = {}, p = {}", mode.l, mode.p));
        t.comment("waist-plane samples; lengths in w0, field in 1/w0 so the intensity integrates to 1");
        for iy in 0..n {
            for ix in 0..n {
                let x = cell_center(hw, n, ix);
                let y = cell_center(hw, n, iy);
                let (xm, ym) = (x * s.g.w0, y * s.g.w0);
                let u = s.g.lg_amplitude(mode, xm.hypot(ym), ym.atan2(xm), 0.0) * s.g.w0;
                t.push(vec![
                    Cell::Float(x),
                    Cell::Float(y),
                    Cell::Float(u.re),
                    Cell::Float(u.im),
                    Cell::Float(u.norm_sqr()),
                    Cell::Float(u.arg()),
                ]);
            }
        }
        s.emit(&format!("mode_l{}_p{}.csv", mode.l, mode.p), &t)?;
    }
    Ok(())
}

fn coeffs(s: &Scenario) -> Result<(), CliError> {
    s.forbid_unused(true, true, true)?;
    let basis = s.basis();
    let radius = s.cfg.fixed_radius(&s.g)?;
    let z0 = s.cfg.fixed_z0(&s.g)?;
    let b = s.coupling(radius, z0, &basis)?;

    let mut t = s.table(&["l", "p", "l_prime", "p_prime", "re_b", "im_b", "abs_b", "arg_b"]);
    s.mask_comments(&mut t, radius, z0);
    let w = s.g.beam_width(z0);
    t.comment(format!("t_parameter: {}", 2.0 * radius * radius / (w * w)));
    for (i, mi) in basis.iter().enumerate() {
        for (j, mj) in basis.iter().enumerate() {
            let v = b.entries[(i, j)];
            t.push(vec![
                Cell::Int(i64::from(mi.l)),
                Cell::Int(i64::from(mi.p)),
                Cell::Int(i64::from(mj.l)),
                Cell::Int(i64::from(mj.p)),
                Cell::Float(v.re),
                Cell::Float(v.im),
                Cell::Float(v.norm()),
                Cell::Float(v.arg()),
            ]);
        }
    }
    s.emit("coeffs.csv", &t)
}

fn dilate_cmd(s: &Scenario) -> Result<(), CliError> {
    s.forbid_unused(true, true, true)?;
    let basis = s.basis();
    let radius = s.cfg.fixed_radius(&s.g)?;
    let z0 = s.cfg.fixed_z0(&s.g)?;
    let tm = s.transfer(radius, z0, &basis)?;

    let mut t = s.table(&["i", "j", "label_i", "label_j", "re_u", "im_u"]);
    s.mask_comments(&mut t, radius, z0);
    t.comment(format!("unitarity_defect: {}", verify_unitary(&tm)));
    for i in 0..tm.dim() {
        for j in 0..tm.dim() {
            let v = tm.matrix[(i, j)];
            t.push(vec![
                Cell::Int(i as i64),
                Cell::Int(j as i64),
                Cell::Text(tm.labels[i].to_string()),
                Cell::Text(tm.labels[j].to_string()),
                Cell::Float(v.re),
                Cell::Float(v.im),
            ]);
        }
    }
    s.emit("dilate.csv", &t)
}

fn classical(s: &Scenario) -> Result<(), CliError> {
    s.forbid_unused(true, true, false)?;
    if s.cfg.amplitudes.is_empty() {
        return Err(CliError::config("classical needs an amplitudes list"));
    }
    let basis = s.basis();
    let mut coeffs = ClassicalCoefficients::new();
    let mut seen = Vec::new();
    for a in &s.cfg.amplitudes {
        let m = ModeIndex::new(a.l, a.p);
        if !basis.contains(&m) {
            return Err(CliError::config(format!(
                "amplitude mode {m} is outside the signal basis; raise basis_l_max/basis_p_max"
            )));
        }
        if seen.contains(&m) {
            return Err(CliError::config(format!("amplitude for mode {m} is given twice")));
        }
        seen.push(m);
        coeffs.set(m, Complex64::new(a.re, a.im));
    }

    let radius = s.cfg.fixed_radius(&s.g)?;
    let z0 = s.cfg.fixed_z0(&s.g)?;
    let b = s.coupling(radius, z0, &basis)?;
    let out = mask::propagate_classical(&coeffs, &b).map_err(numerical)?;

    let mut t = s.table(&["l", "p", "re_a_in", "im_a_in", "re_a_out", "im_a_out"]);
    s.mask_comments(&mut t, radius, z0);
    t.comment(format!("power_in: {}", coeffs.total_power()));
    t.comment(format!("power_out: {}", out.total_power()));
    for &m in &basis {
        let ain = coeffs.get(m);
        let aout = out.get(m);
        t.push(vec![
            Cell::Int(i64::from(m.l)),
            Cell::Int(i64::from(m.p)),
            Cell::Float(ain.re),
            Cell::Float(ain.im),
            Cell::Float(aout.re),
            Cell::Float(aout.im),
        ]);
    }
    s.emit("classical.csv", &t)
}

/// The two Gaussian inputs of the homodyne scenarios, keyed to the default
/// two-mode basis the library scan is defined on.
fn paired_inputs(s: &Scenario) -> Result<(SqueezeSpec, SqueezeSpec), CliError> {
    if s.cfg.engine.basis_l_max != 0 || s.cfg.engine.basis_p_max != 1 {
        return Err(CliError::config(format!(
            "{} is defined on the default two-mode basis (basis_l_max = 0, basis_p_max = 1)",
            s.command
        )));
    }
    if s.cfg.inputs.len() != 2 {
        return Err(CliError::config(format!(
            "{} needs exactly two inputs on modes (0, 0) and (0, 1)",
            s.command
        )));
    }
    let find = |p: u32| -> Result<SqueezeSpec, CliError> {
        s.cfg
            .inputs
            .iter()
            .find(|i| i.mode() == ModeIndex::new(0, p))
            .ok_or_else(|| {
                CliError::config(format!("{} needs an input on mode (0, {p})", s.command))
            })?
            .squeeze_spec()
    };
    Ok((find(0)?, find(1)?))
}

fn noise_scan(s: &Scenario) -> Result<(), CliError> {
    s.forbid_unused(false, true, true)?;
    let inputs = paired_inputs(s)?;
    let radius = s.cfg.fixed_radius(&s.g)?;
    let z0s = s.cfg.axial_sweep()?;

    let noise: Vec<f64> = z0s
        .par_iter()
        .map(|&z0| {
            gaussian::noise_scan(&s.g, &inputs, radius, &[z0 * s.g.rayleigh_range], &s.quad)
                .map(|v| v[0])
        })
        .collect::<Result<_, _>>()
        .map_err(numerical)?;

    let mut t = s.table(&["z0_over_zR", "noise_db"]);
    t.comment(format!("radius_over_w0: {}", radius / s.g.w0));
    for (&z0, &db) in z0s.iter().zip(&noise) {
        t.push(vec![Cell::Float(z0), Cell::Float(db)]);
    }
    s.emit("noise_scan.csv", &t)
}

fn wigner_panels(s: &Scenario) -> Result<(), CliError> {
    s.forbid_unused(false, true, true)?;
    if s.cfg.inputs.len() != 1 {
        return Err(CliError::config("wigner-panels needs exactly one input"));
    }
    let basis = s.basis();
    let mode = s.cfg.inputs[0].mode();
    let label = sig(mode);
    let input = s.gaussian_inputs(&basis)?;
    let radius = s.cfg.fixed_radius(&s.g)?;
    let (hw, n) = s.grid_spec();

    let emit_grid = |file: &str, panel: &str, state: &GaussianState| -> Result<(), CliError> {
        let grid = gaussian::wigner_grid(state, label, hw, n).map_err(numerical)?;
        let mut t = s.table(&["q", "p", "w"]);
        t.comment(format!("panel: {panel}"));
        t.comment(format!("mode l = {}, p = {}", mode.l, mode.p));
        for iy in 0..n {
            for ix in 0..n {
                let (q, p) = grid.point(ix, iy);
                t.push(vec![Cell::Float(q), Cell::Float(p), Cell::Float(grid.at(ix, iy))]);
            }
        }
        s.emit(file, &t)
    };

    emit_grid("wigner_input.csv", "input", &input)?;
    for (zf, file, panel) in [
        (-1.0, "wigner_iris_minus_zr.csv", "iris at z0_over_zR = -1"),
        (0.0, "wigner_iris_waist.csv", "iris at z0_over_zR = 0"),
        (1.0, "wigner_iris_plus_zr.csv", "iris at z0_over_zR = 1"),
    ] {
        let tm = s.transfer(radius, zf * s.g.rayleigh_range, &basis)?;
        let out = gaussian::apply_transfer(&input, &tm).map_err(numerical)?;
        emit_grid(file, panel, &out)?;
    }
    Ok(())
}

fn squeeze_scan(s: &Scenario) -> Result<(), CliError> {
    s.forbid_unused(false, true, true)?;
    if s.cfg.inputs.is_empty() {
        return Err(CliError::config("squeeze-scan needs at least one input"));
    }
    let basis = s.basis();
    let input = s.gaussian_inputs(&basis)?;
    let radius = s.cfg.fixed_radius(&s.g)?;
    let z0s = s.cfg.axial_sweep()?;

    let levels: Vec<Vec<(f64, f64)>> = z0s
        .par_iter()
        .map(|&z0| -> Result<Vec<(f64, f64)>, CliError> {
            let tm = s.transfer(radius, z0 * s.g.rayleigh_range, &basis)?;
            let out = gaussian::apply_transfer(&input, &tm).map_err(numerical)?;
            basis
                .iter()
                .map(|&m| gaussian::squeeze_antisqueeze(&out, sig(m)).map_err(numerical))
                .collect()
        })
        .collect::<Result<_, _>>()?;

    let mut t = s.table(&["z0_over_zR", "l", "p", "squeeze_db", "antisqueeze_db"]);
    t.comment(format!("radius_over_w0: {}", radius / s.g.w0));
    for (&z0, row) in z0s.iter().zip(&levels) {
        for (m, &(lo, hi)) in basis.iter().zip(row) {
            t.push(vec![
                Cell::Float(z0),
                Cell::Int(i64::from(m.l)),
                Cell::Int(i64::from(m.p)),
                Cell::Float(lo),
                Cell::Float(hi),
            ]);
        }
    }
    s.emit("squeeze_scan.csv", &t)
}

fn joint_prob(s: &Scenario) -> Result<(), CliError> {
    s.forbid_unused(false, true, true)?;
    let (ma, mb) = s.input_pair()?;
    let basis = s.basis();
    let state = s.fock_inputs(&basis)?;
    let radius = s.cfg.fixed_radius(&s.g)?;
    let z0 = s.cfg.fixed_z0(&s.g)?;
    let tm = s.transfer(radius, z0, &basis)?;

    let out = fock::apply_transfer_fock(&state, &tm).map_err(numerical)?;
    let dist = fock::joint_distribution_pure(&out, sig(ma), sig(mb)).map_err(numerical)?;

    let mut t = s.table(&["n_i", "n_j", "probability"]);
    s.mask_comments(&mut t, radius, z0);
    t.comment(format!("mode_i: l = {}, p = {}; mode_j: l = {}, p = {}", ma.l, ma.p, mb.l, mb.p));
    t.comment(format!("mass: {}", dist.mass()));
    t.comment(format!("covariance: {}", dist.covariance()));
    let top = s.cfg.engine.cutoff.min(254) as u8;
    for ni in 0..=top {
        for nj in 0..=top {
            t.push(vec![
                Cell::Int(i64::from(ni)),
                Cell::Int(i64::from(nj)),
                Cell::Float(dist.probability(ni, nj)),
            ]);
        }
    }
    s.emit("joint_prob.csv", &t)
}

fn prob_vs_radius(s: &Scenario) -> Result<(), CliError> {
    s.forbid_unused(false, true, true)?;
    let (ma, mb) = s.input_pair()?;
    let basis = s.basis();
    let state = s.fock_inputs(&basis)?;
    let radii = s.cfg.radius_sweep()?;
    let z0 = s.cfg.fixed_z0(&s.g)?;

    let probs: Vec<(f64, f64)> = radii
        .par_iter()
        .map(|&r| -> Result<(f64, f64), CliError> {
            let tm = s.transfer(r * s.g.w0, z0, &basis)?;
            let out = fock::apply_transfer_fock(&state, &tm).map_err(numerical)?;
            let dist = fock::joint_distribution_pure(&out, sig(ma), sig(mb)).map_err(numerical)?;
            Ok((dist.probability(1, 1), dist.probability(3, 3)))
        })
        .collect::<Result<_, _>>()?;

    let mut t = s.table(&["radius_over_w0", "p11", "p33"]);
    t.comment(format!("z0_over_zR: {}", z0 / s.g.rayleigh_range));
    for (&r, &(p11, p33)) in radii.iter().zip(&probs) {
        t.push(vec![Cell::Float(r), Cell::Float(p11), Cell::Float(p33)]);
    }
    s.emit("prob_vs_radius.csv", &t)
}

fn cov_vs_radius(s: &Scenario) -> Result<(), CliError> {
    s.forbid_unused(false, true, true)?;
    let (ma, mb) = s.input_pair()?;
    for input in &s.cfg.inputs {
        let spec = input.squeeze_spec()?;
        if spec.alpha != Complex64::new(0.0, 0.0) {
            return Err(CliError::config(
                "cov-vs-radius needs zero-mean inputs (photon-number covariance)",
            ));
        }
    }
    let basis = s.basis();
    let input = s.gaussian_inputs(&basis)?;
    let radii = s.cfg.radius_sweep()?;
    let z0 = s.cfg.fixed_z0(&s.g)?;

    let cov_at = |r_w0: f64| -> Result<f64, CliError> {
        let tm = s.transfer(r_w0 * s.g.w0, z0, &basis)?;
        let out = gaussian::apply_transfer(&input, &tm).map_err(numerical)?;
        gaussian::photon_cov(&out, sig(ma), sig(mb)).map_err(numerical)
    };

    let covs: Vec<f64> = radii.par_iter().map(|&r| cov_at(r)).collect::<Result<_, _>>()?;

    // Refine the grid maximum inside the swept bracket; failures inside the
    // closure surface as a poisoned value rather than an early return.
    let (peak_r, neg) = minimize_scalar(
        |r| cov_at(r).map(|c| -c).unwrap_or(f64::INFINITY),
        radii[0],
        radii[radii.len() - 1],
    );
    if !neg.is_finite() {
        return Err(CliError::numerical("covariance evaluation failed while refining the peak"));
    }

    let mut t = s.table(&["radius_over_w0", "covariance"]);
    t.comment(format!("z0_over_zR: {}", z0 / s.g.rayleigh_range));
    t.comment(format!("peak_radius_over_w0: {peak_r}"));
    t.comment(format!("peak_covariance: {}", -neg));
    for (&r, &c) in radii.iter().zip(&covs) {
        t.push(vec![Cell::Float(r), Cell::Float(c)]);
    }
    s.emit("cov_vs_radius.csv", &t)
}

fn ch_scan(s: &Scenario) -> Result<(), CliError> {
    s.forbid_unused(true, true, true)?;
    let basis = s.basis();
    let (m0, m1) = (ModeIndex::new(0, 0), ModeIndex::new(0, 1));
    if !basis.contains(&m0) || !basis.contains(&m1) {
        return Err(CliError::config("ch-scan needs modes (0, 0) and (0, 1) in the signal basis"));
    }
    let radius = s.cfg.fixed_radius(&s.g)?;
    let z0s = s.cfg.axial_sweep()?;
    let settings = s.cfg.engine.ch_settings();

    let results: Vec<fock::ChResult> = z0s
        .par_iter()
        .map(|&z0| -> Result<fock::ChResult, CliError> {
            let tm = s.transfer(radius, z0 * s.g.rayleigh_range, &basis)?;
            let (_, phi) = fock::single_photon_output(&tm, sig(m0)).map_err(numerical)?;
            let rho = fock::reduced_density(&phi, &[sig(m0), sig(m1)]).map_err(numerical)?;
            fock::ch_min(&rho, &settings).map_err(numerical)
        })
        .collect::<Result<_, _>>()?;

    let mut t = s.table(&[
        "z0_over_zR",
        "ch_min",
        "alpha1_re",
        "alpha1_im",
        "alpha2_re",
        "alpha2_im",
        "beta1_re",
        "beta1_im",
        "beta2_re",
        "beta2_im",
    ]);
    t.comment(format!("radius_over_w0: {}", radius / s.g.w0));
    t.comment("state: normalized one-photon superposition left by a photon sent into (0, 0)");
    for (&z0, r) in z0s.iter().zip(&results) {
        t.push(vec![
            Cell::Float(z0),
            Cell::Float(r.value),
            Cell::Float(r.alpha[0].re),
            Cell::Float(r.alpha[0].im),
            Cell::Float(r.alpha[1].re),
            Cell::Float(r.alpha[1].im),
            Cell::Float(r.beta[0].re),
            Cell::Float(r.beta[0].im),
            Cell::Float(r.beta[1].re),
            Cell::Float(r.beta[1].im),
        ]);
    }
    s.emit("ch_scan.csv", &t)
}

fn hom_scan(s: &Scenario) -> Result<(), CliError> {
    s.forbid_unused(true, true, true)?;
    if s.cfg.engine.basis_l_max != 0 {
        return Err(CliError::config(
            "hom-scan sends the photons into (0, 0) and (0, 1): use a basis with basis_l_max = 0",
        ));
    }
    let basis = s.basis();
    let radii = s.cfg.radius_sweep()?;
    let z0 = s.cfg.fixed_z0(&s.g)?;

    let rows: Vec<(fock::Coincidence, fock::Coincidence)> = radii
        .par_iter()
        .map(|&r| -> Result<_, CliError> {
            let tm = s.transfer(r * s.g.w0, z0, &basis)?;
            let dist = fock::hom_coincidence(&tm, true).map_err(numerical)?;
            let indist = fock::hom_coincidence(&tm, false).map_err(numerical)?;
            Ok((dist, indist))
        })
        .collect::<Result<_, _>>()?;

    let mut t = s.table(&[
        "radius_over_w0",
        "distinguishable",
        "indistinguishable",
        "closed_form_distinguishable",
        "closed_form_indistinguishable",
    ]);
    t.comment(format!("z0_over_zR: {}", z0 / s.g.rayleigh_range));
    for (&r, (d, i)) in radii.iter().zip(&rows) {
        t.push(vec![
            Cell::Float(r),
            Cell::Float(d.engine),
            Cell::Float(i.engine),
            Cell::Float(d.closed_form),
            Cell::Float(i.closed_form),
        ]);
    }
    s.emit("hom_scan.csv", &t)
}
